//! Distributional matching: class-probability ratios from a pilot classifier.
//!
//! For any pilot `g` with an invertible source confusion matrix
//! `C_{i,j} = P(g(X) = i, Y = j)`, label shift gives the identity
//! `C w = [1 − ξ, ξ]ᵀ` where `ξ = Q(g(X) = 1)` and `w_k = Q(Y = k) / P(Y = k)`.
//! The estimators below replace `C` and `ξ` by sample frequencies and solve
//! the 2×2 system.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::datagen::Dataset;
use crate::error::{check_dim, Error, Result};

pub const DEFAULT_DET_FLOOR: f64 = 1e-6;

type DecisionFn = dyn Fn(&[f64]) -> u8 + Send + Sync;

/// A fixed classifier used only to produce matchable statistics.
#[derive(Clone)]
pub enum PilotClassifier {
    /// `1{b₀ + b₁ᵀx > 0}` with `coefficients = [b₀, b₁…]`.
    Linear { coefficients: Vec<f64> },
    /// Any deterministic decision function.
    Opaque(Arc<DecisionFn>),
}

impl fmt::Debug for PilotClassifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PilotClassifier::Linear { coefficients } => {
                f.debug_struct("Linear").field("coefficients", coefficients).finish()
            }
            PilotClassifier::Opaque(_) => f.write_str("Opaque(..)"),
        }
    }
}

impl PilotClassifier {
    pub fn linear(coefficients: Vec<f64>) -> Self {
        PilotClassifier::Linear { coefficients }
    }

    pub fn opaque<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> u8 + Send + Sync + 'static,
    {
        PilotClassifier::Opaque(Arc::new(f))
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        match self {
            PilotClassifier::Linear { coefficients } => {
                check_dim(coefficients.len(), x.len() + 1)?;
                Ok(u8::from(linear_score(coefficients, x) > 0.0))
            }
            PilotClassifier::Opaque(f) => match f(x) {
                y @ (0 | 1) => Ok(y),
                other => Err(Error::InvalidLabel(other)),
            },
        }
    }
}

fn linear_score(b: &[f64], x: &[f64]) -> f64 {
    b[0] + b[1..].iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub max_iters: usize,
    /// Convergence threshold on the ∞-norm of the gradient.
    pub tol: f64,
    /// Iterates are kept inside the L2 ball of this radius around 0.
    pub radius: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-8,
            radius: 50.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub pilot: PilotClassifier,
    pub coefficients: Vec<f64>,
    pub converged: bool,
    /// The iterate reached the trust-ball boundary (e.g. separable data).
    pub capped: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

struct Design<'a> {
    data: &'a Dataset,
    p: usize,
}

impl Design<'_> {
    fn nll(&self, b: &[f64]) -> f64 {
        let n = self.data.len() as f64;
        self.data
            .samples()
            .iter()
            .map(|s| softplus(linear_score(b, &s.x)) - f64::from(s.y) * linear_score(b, &s.x))
            .sum::<f64>()
            / n
    }

    fn grad_hess(&self, b: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let p = self.p;
        let n = self.data.len() as f64;
        let mut g = DVector::zeros(p);
        let mut h = DMatrix::zeros(p, p);
        let mut z = vec![1.0; p];
        for s in self.data.samples() {
            z[1..].copy_from_slice(&s.x);
            let mu = sigmoid(linear_score(b, &s.x));
            let r = mu - f64::from(s.y);
            let w = mu * (1.0 - mu);
            for i in 0..p {
                g[i] += r * z[i];
                for j in 0..=i {
                    h[(i, j)] += w * z[i] * z[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                h[(j, i)] = h[(i, j)];
            }
        }
        (g / n, h / n)
    }
}

fn project(b: &mut [f64], radius: f64) -> bool {
    let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > radius {
        let s = radius / norm;
        b.iter_mut().for_each(|v| *v *= s);
        true
    } else {
        false
    }
}

/// Logistic regression with intercept by full-batch Newton with
/// step-halving, constrained to an L2 ball. Returns the last accepted
/// iterate, which has the lowest objective seen.
pub fn fit_logistic_pilot(source: &Dataset, opts: &LogisticOptions) -> Result<LogisticFit> {
    if source.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n1 = source.count_label(1);
    if n1 == 0 {
        return Err(Error::DegenerateClass(0));
    }
    if n1 == source.len() {
        return Err(Error::DegenerateClass(1));
    }
    if source.features().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("source", "features must be finite"));
    }
    let design = Design {
        data: source,
        p: source.dim() + 1,
    };
    let mut b = vec![0.0; design.p];
    let mut obj = design.nll(&b);
    let mut converged = false;
    let mut capped = false;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        let (g, h) = design.grad_hess(&b);
        grad_norm = g.amax();
        if grad_norm < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            // Flat curvature (saturated fit): fall back to a ridge-damped step.
            None => {
                let ridged = h + DMatrix::identity(design.p, design.p) * 1e-8;
                match ridged.cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => -g.clone(),
                }
            }
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand: Vec<f64> = b.iter().zip(step.iter()).map(|(bi, si)| bi + t * si).collect();
            let hit = project(&mut cand, opts.radius);
            let cand_obj = design.nll(&cand);
            // Near the optimum the decrease drops below objective rounding.
            let flat = (cand_obj - obj).abs() <= 1e-14 * obj.abs().max(1.0);
            if cand_obj < obj || (flat && !hit) {
                capped |= hit;
                b = cand;
                obj = cand_obj;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !converged {
        let (g, _) = design.grad_hess(&b);
        grad_norm = g.amax();
        converged = grad_norm < opts.tol;
    }
    Ok(LogisticFit {
        pilot: PilotClassifier::linear(b.clone()),
        coefficients: b,
        converged,
        capped,
        iterations,
        grad_norm,
    })
}

/// Empirical joint frequencies indexed `[predicted][true]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    c: [[f64; 2]; 2],
}

impl ConfusionMatrix {
    /// Entries must be finite and nonnegative; they are not required to sum
    /// to one, so population matrices from numerical integration fit too.
    pub fn new(c: [[f64; 2]; 2]) -> Result<Self> {
        if c.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param("confusion", "entries must be finite and nonnegative"));
        }
        Ok(Self { c })
    }

    pub fn get(&self, predicted: u8, truth: u8) -> f64 {
        self.c[usize::from(predicted)][usize::from(truth)]
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.c
    }

    pub fn det(&self) -> f64 {
        self.c[0][0] * self.c[1][1] - self.c[0][1] * self.c[1][0]
    }
}

/// `Ĉ_{i,j} = (1/n_P) #{l : g(X_l) = i, Y_l = j}`.
pub fn confusion_estimate(source: &Dataset, pilot: &PilotClassifier) -> Result<ConfusionMatrix> {
    if source.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts = [[0usize; 2]; 2];
    for s in source.samples() {
        let pred = pilot.predict(&s.x)?;
        counts[usize::from(pred)][usize::from(s.y)] += 1;
    }
    let n = source.len() as f64;
    Ok(ConfusionMatrix {
        c: counts.map(|row| row.map(|k| k as f64 / n)),
    })
}

/// Fraction of target points the pilot assigns to class 1. Labels, if
/// present, are ignored.
pub fn xi_estimate(target: &Dataset, pilot: &PilotClassifier) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut ones = 0usize;
    for x in target.features() {
        ones += usize::from(pilot.predict(x)?);
    }
    Ok(ones as f64 / target.len() as f64)
}

/// Class-probability ratios `(w₀, w₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftWeights {
    pub w0: f64,
    pub w1: f64,
    /// Determinant of the inverted confusion matrix; `None` for supplied weights.
    pub det_used: Option<f64>,
    pub xi_hat: Option<f64>,
    /// A negative solution component was clipped to 0.
    pub clipped: bool,
}

impl ShiftWeights {
    /// Weights supplied directly (e.g. known population ratios).
    pub fn known(w0: f64, w1: f64) -> Result<Self> {
        if !(w0 >= 0.0 && w1 >= 0.0 && w0.is_finite() && w1.is_finite()) {
            return Err(Error::param(
                "weights",
                format!("need finite w0, w1 >= 0, got ({w0}, {w1})"),
            ));
        }
        Ok(Self {
            w0,
            w1,
            det_used: None,
            xi_hat: None,
            clipped: false,
        })
    }
}

/// Solves `c · w = [1 − ξ, ξ]ᵀ` in closed form. Negative components are
/// clipped to 0 and flagged.
pub fn solve_weights(c: &ConfusionMatrix, xi: f64, det_floor: f64) -> Result<ShiftWeights> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::param("xi", format!("must lie in [0, 1], got {xi}")));
    }
    if !(det_floor > 0.0) {
        return Err(Error::param("det_floor", "must be positive"));
    }
    let det = c.det();
    if !(det.abs() >= det_floor) {
        return Err(Error::SingularConfusion { det, floor: det_floor });
    }
    let [[a, b], [cc, d]] = c.c;
    let (r0, r1) = (1.0 - xi, xi);
    let w0 = (d * r0 - b * r1) / det;
    let w1 = (a * r1 - cc * r0) / det;
    let clipped = w0 < 0.0 || w1 < 0.0;
    Ok(ShiftWeights {
        w0: w0.max(0.0),
        w1: w1.max(0.0),
        det_used: Some(det),
        xi_hat: Some(xi),
        clipped,
    })
}

/// Confusion matrix on the source, positive rate on the target, then the
/// 2×2 solve.
pub fn distributional_matching(
    source: &Dataset,
    target: &Dataset,
    pilot: &PilotClassifier,
    det_floor: f64,
) -> Result<ShiftWeights> {
    let c = confusion_estimate(source, pilot)?;
    let xi = xi_estimate(target, pilot)?;
    solve_weights(&c, xi, det_floor)
}
