use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::datagen::{generate, true_eta, DomainTag, GeneratorConfig};
use crate::error::{Error, Result};
use crate::numeric::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskEstimate {
    /// `max(raw_excess_risk, 0)`.
    pub excess_risk: f64,
    pub raw_excess_risk: f64,
    pub test_n: usize,
    /// Mean of `min(η, 1 − η)`: the Bayes risk given the test features.
    pub bayes_risk: f64,
    /// Mean conditional misclassification probability of the method.
    pub method_risk: f64,
}

/// Test features from the target marginal with their analytic `η_Q` and
/// Bayes decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    dim: usize,
    features: Vec<f64>,
    eta: Vec<f64>,
    bayes: Vec<u8>,
}

impl TestSet {
    pub fn draw<R: Rng + ?Sized>(config: &GeneratorConfig, n: usize, rng: &mut R) -> Result<Self> {
        let data = generate(config, n, DomainTag::Target, rng)?;
        let features: Vec<f64> = data.features().flatten().copied().collect();
        let dim = config.dim;
        let eta = features
            .par_chunks_exact(dim)
            .map(|x| true_eta(config, x))
            .collect::<Result<Vec<_>>>()?;
        let bayes = eta.iter().map(|&e| u8::from(e > 0.5)).collect();
        Ok(Self {
            dim,
            features,
            eta,
            bayes,
        })
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major test features.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn bayes(&self) -> &[u8] {
        &self.bayes
    }

    /// Excess risk of `predictions`, one per test point in order.
    pub fn evaluate(&self, predictions: &[u8]) -> Result<RiskEstimate> {
        if predictions.len() != self.len() {
            return Err(Error::param(
                "predictions",
                format!("expected {} predictions, got {}", self.len(), predictions.len()),
            ));
        }
        let mut excess = KahanSum::default();
        let mut method = KahanSum::default();
        let mut bayes = KahanSum::default();
        for ((&eta, &fstar), &f) in self.eta.iter().zip(&self.bayes).zip(predictions) {
            if f != fstar {
                excess.add(2.0 * (eta - 0.5).abs());
            }
            method.add(if f == 1 { 1.0 - eta } else { eta });
            bayes.add(eta.min(1.0 - eta));
        }
        let n = self.len() as f64;
        let raw = excess.total() / n;
        Ok(RiskEstimate {
            excess_risk: raw.max(0.0),
            raw_excess_risk: raw,
            test_n: self.len(),
            bayes_risk: bayes.total() / n,
            method_risk: method.total() / n,
        })
    }
}

/// Draws `test_n` target features and evaluates `classify_fn` on them.
pub fn estimate_excess_risk<F, R>(
    classify_fn: F,
    config: &GeneratorConfig,
    test_n: usize,
    rng: &mut R,
) -> Result<RiskEstimate>
where
    F: Fn(&[f64]) -> u8 + Sync,
    R: Rng + ?Sized,
{
    if test_n == 0 {
        return Err(Error::param("test_n", "must be at least 1"));
    }
    let test = TestSet::draw(config, test_n, rng)?;
    let predictions: Vec<u8> = test.features.par_chunks_exact(test.dim).map(&classify_fn).collect();
    test.evaluate(&predictions)
}
