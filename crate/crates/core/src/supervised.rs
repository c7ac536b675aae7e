//! Supervised label shift: labeled data from both domains.
//!
//! The class-conditional densities are shared between domains, so `ĝ₀` and
//! `ĝ₁` are fit on the pooled source and target features of each class. The
//! target prior `π̂_Q` comes from the target labels alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::kernel_density::{bandwidth_rule, fit_class_kde, Bandwidth, KdeModel, KernelFamily, KernelSpec};
use crate::plugin::{plugin_eta, threshold};

/// Kernel choice and bandwidth-rule constants shared by the plug-in fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PluginSettings {
    pub kernel: KernelFamily,
    /// Assumed Hölder smoothness of the class densities.
    pub alpha: f64,
    /// Bandwidth scale constant.
    pub c1: f64,
}

impl Default for PluginSettings {
    fn default() -> Self {
        Self {
            kernel: KernelFamily::Gaussian,
            alpha: 1.0,
            c1: 0.5,
        }
    }
}

/// Sample size fed to the bandwidth rule of the supervised classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthPolicy {
    /// `m = n₀ ∧ n₁`, the smaller pooled class size.
    #[default]
    MinClassSize,
    /// `n_P + n_Q`, the total pooled size.
    PooledTotal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedModel {
    pub pi_q_hat: f64,
    pub g0_hat: KdeModel,
    pub g1_hat: KdeModel,
    pub bandwidth_used: Bandwidth,
    /// `n₀ ∧ n₁` over the pooled data.
    pub m: usize,
}

/// Fraction of target labels equal to 1.
pub fn estimate_pi(target: &Dataset) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(target.count_label(1) as f64 / target.len() as f64)
}

/// Fits with the `n₀ ∧ n₁` bandwidth rule.
pub fn fit_supervised(source: &Dataset, target: &Dataset, settings: &PluginSettings) -> Result<SupervisedModel> {
    fit_supervised_with(source, target, settings, BandwidthPolicy::MinClassSize)
}

/// Fits on `source ∪ target`. A target with a single label is allowed and
/// yields `π̂_Q ∈ {0, 1}`, making `η̂` constant wherever the densities are
/// positive.
pub fn fit_supervised_with(
    source: &Dataset,
    target: &Dataset,
    settings: &PluginSettings,
    policy: BandwidthPolicy,
) -> Result<SupervisedModel> {
    let pi_q_hat = estimate_pi(target)?;
    let pooled = if source.is_empty() {
        target.clone()
    } else {
        source.pooled(target)?
    };
    let n1 = pooled.count_label(1);
    let n0 = pooled.len() - n1;
    if n0 == 0 {
        return Err(Error::DegenerateClass(1));
    }
    if n1 == 0 {
        return Err(Error::DegenerateClass(0));
    }
    let m = n0.min(n1);
    let dim = pooled.dim();
    let n_eff = match policy {
        BandwidthPolicy::MinClassSize => m,
        BandwidthPolicy::PooledTotal => pooled.len(),
    };
    let bandwidth = bandwidth_rule(n_eff, settings.alpha, dim, settings.c1)?;
    let kernel = KernelSpec::new(settings.kernel, dim)?;
    Ok(SupervisedModel {
        pi_q_hat,
        g0_hat: fit_class_kde(&pooled, 0, kernel, bandwidth)?,
        g1_hat: fit_class_kde(&pooled, 1, kernel, bandwidth)?,
        bandwidth_used: bandwidth,
        m,
    })
}

impl SupervisedModel {
    pub fn dim(&self) -> usize {
        self.g0_hat.dim()
    }

    /// `π̂ ĝ₁ / (π̂ ĝ₁ + (1 − π̂) ĝ₀)`, or ½ where both estimates vanish.
    pub fn eta_hat(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eta_unchecked(x))
    }

    fn eta_unchecked(&self, x: &[f64]) -> f64 {
        let g1 = self.g1_hat.raw_kernel_sum(x) / self.g1_hat.len() as f64;
        let g0 = self.g0_hat.raw_kernel_sum(x) / self.g0_hat.len() as f64;
        // common h^{-d} factor cancels in the ratio
        plugin_eta(self.pi_q_hat, g1, 1.0 - self.pi_q_hat, g0)
    }

    pub fn classify(&self, x: &[f64]) -> Result<u8> {
        self.eta_hat(x).map(threshold)
    }

    /// Decisions for row-major `queries`, evaluated in parallel.
    pub fn classify_many(&self, queries: &[f64]) -> Result<Vec<u8>> {
        let dim = self.dim();
        check_dim(0, queries.len() % dim)?;
        Ok(queries
            .par_chunks_exact(dim)
            .map(|q| threshold(self.eta_unchecked(q)))
            .collect())
    }
}
