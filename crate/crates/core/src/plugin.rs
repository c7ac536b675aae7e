//! Shared plug-in arithmetic.

/// `a·g₁ / (a·g₁ + b·g₀)` with the 0/0 case mapped to ½.
#[inline]
pub fn plugin_eta(prior1: f64, g1: f64, prior0: f64, g0: f64) -> f64 {
    let num = prior1 * g1;
    let den = num + prior0 * g0;
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

/// Plug-in decision: 1 iff `eta > 1/2`; a tie goes to 0.
#[inline]
pub fn threshold(eta: f64) -> u8 {
    u8::from(eta > 0.5)
}
