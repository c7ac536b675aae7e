//! Unsupervised label shift: labeled source, unlabeled target.
//!
//! With ratios `ŵ` from distributional matching, the target regression
//! function is estimated by reweighting the source kernel regression. That
//! estimate is the plug-in `π̃ g̃₁ / (π̃ g̃₁ + (1−π)~ g̃₀)` where
//! `π̃ = π̂_P ŵ₁`, `(1−π)~ = (n_{P,0}/n_P) ŵ₀` and `g̃ᵢ` are source-only
//! class density estimates; the plug-in form is the production path.

use rayon::prelude::*;

use crate::datagen::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::kernel_density::{bandwidth_rule, fit_class_kde, Bandwidth, KdeModel, KernelSpec};
use crate::numeric::KahanSum;
use crate::plugin::{plugin_eta, threshold};
use crate::shift_weights::{distributional_matching, PilotClassifier, ShiftWeights};
use crate::supervised::PluginSettings;

#[derive(Debug, Clone, PartialEq)]
pub struct UnsupervisedModel {
    pub weights: ShiftWeights,
    /// `n_{P,1} / n_P`.
    pub pi_p_hat: f64,
    pub g0_tilde: KdeModel,
    pub g1_tilde: KdeModel,
    pub bandwidth_used: Bandwidth,
}

/// Runs distributional matching with `pilot`, then fits the reweighted
/// plug-in on the source. Only the target features are read.
pub fn fit_unsupervised(
    source: &Dataset,
    target_features: &Dataset,
    pilot: &PilotClassifier,
    settings: &PluginSettings,
    det_floor: f64,
) -> Result<UnsupervisedModel> {
    check_dim(source.dim(), target_features.dim())?;
    check_both_labels(source)?;
    let weights = distributional_matching(source, target_features, pilot, det_floor)?;
    fit_with_weights(source, weights, settings)
}

/// The reweighted plug-in with the ratios supplied by the caller.
pub fn fit_with_weights(
    source: &Dataset,
    weights: ShiftWeights,
    settings: &PluginSettings,
) -> Result<UnsupervisedModel> {
    check_both_labels(source)?;
    let dim = source.dim();
    let bandwidth = bandwidth_rule(source.len(), settings.alpha, dim, settings.c1)?;
    let kernel = KernelSpec::new(settings.kernel, dim)?;
    Ok(UnsupervisedModel {
        weights,
        pi_p_hat: source.count_label(1) as f64 / source.len() as f64,
        g0_tilde: fit_class_kde(source, 0, kernel, bandwidth)?,
        g1_tilde: fit_class_kde(source, 1, kernel, bandwidth)?,
        bandwidth_used: bandwidth,
    })
}

fn check_both_labels(source: &Dataset) -> Result<()> {
    if source.is_empty() {
        return Err(Error::EmptyDataset);
    }
    match source.count_label(1) {
        0 => Err(Error::DegenerateClass(0)),
        n if n == source.len() => Err(Error::DegenerateClass(1)),
        _ => Ok(()),
    }
}

impl UnsupervisedModel {
    pub fn dim(&self) -> usize {
        self.g0_tilde.dim()
    }

    /// `π̃_Q`, the implied target class-1 prior.
    pub fn pi_q_tilde(&self) -> f64 {
        self.pi_p_hat * self.weights.w1
    }

    /// `(1 − π_Q)~`, the implied target class-0 prior.
    pub fn one_minus_pi_q_tilde(&self) -> f64 {
        (1.0 - self.pi_p_hat) * self.weights.w0
    }

    pub fn eta_hat(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eta_unchecked(x))
    }

    fn eta_unchecked(&self, x: &[f64]) -> f64 {
        let g1 = self.g1_tilde.raw_kernel_sum(x) / self.g1_tilde.len() as f64;
        let g0 = self.g0_tilde.raw_kernel_sum(x) / self.g0_tilde.len() as f64;
        plugin_eta(self.pi_q_tilde(), g1, self.one_minus_pi_q_tilde(), g0)
    }

    pub fn classify(&self, x: &[f64]) -> Result<u8> {
        self.eta_hat(x).map(threshold)
    }

    pub fn classify_many(&self, queries: &[f64]) -> Result<Vec<u8>> {
        let dim = self.dim();
        check_dim(0, queries.len() % dim)?;
        Ok(queries
            .par_chunks_exact(dim)
            .map(|q| threshold(self.eta_unchecked(q)))
            .collect())
    }
}

/// Reference evaluation of the reweighted kernel regression straight from
/// the source sample: `Σ_l ω_l Y_l K_h(x − X_l) / Σ_l ω_l K_h(x − X_l)` with
/// `ω_l = ŵ₁ Y_l + ŵ₀ (1 − Y_l)`. Returns ½ when the denominator vanishes.
///
/// Equal to [`UnsupervisedModel::eta_hat`] up to rounding; kept for checking.
pub fn weighted_regression_eta(
    source: &Dataset,
    weights: &ShiftWeights,
    kernel: &KernelSpec,
    bandwidth: Bandwidth,
    x: &[f64],
) -> Result<f64> {
    check_dim(source.dim(), x.len())?;
    check_dim(kernel.dim(), x.len())?;
    let n = source.len() as f64;
    let mut num = KahanSum::default();
    let mut den = KahanSum::default();
    for s in source.samples() {
        let diff: Vec<f64> = x.iter().zip(&s.x).map(|(a, b)| a - b).collect();
        let k = kernel.scaled_value(bandwidth, &diff)?;
        let y = f64::from(s.y);
        let omega = weights.w1 * y + weights.w0 * (1.0 - y);
        num.add(omega * y * k / n);
        den.add(omega * k / n);
    }
    let (num, den) = (num.total(), den.total());
    Ok(if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { 0.5 })
}
