use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datagen::GeneratorConfig;
use crate::error::{Error, Result};
use crate::kernel_density::KernelFamily;
use crate::shift_weights::DEFAULT_DET_FLOOR;
use crate::supervised::{BandwidthPolicy, PluginSettings};

/// Sample sizes along the growing axis of every preset.
pub const GROWING_GRID: [usize; 7] = [100, 200, 400, 800, 1600, 3200, 6400];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `n_P = 100` fixed, `n_Q` growing; supervised methods.
    Fig1Left,
    /// `n_Q = 100` fixed, `n_P` growing; supervised methods.
    Fig1Right,
    /// `n_Q = 100` fixed, `n_P` growing; unsupervised methods.
    Fig2Left,
    /// `n_P = 800` fixed, `n_Q` growing; unsupervised methods.
    Fig2Right,
    #[default]
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig1Left,
        Preset::Fig1Right,
        Preset::Fig2Left,
        Preset::Fig2Right,
        Preset::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Fig1Left => "fig1_left",
            Preset::Fig1Right => "fig1_right",
            Preset::Fig2Left => "fig2_left",
            Preset::Fig2Right => "fig2_right",
            Preset::Custom => "custom",
        }
    }

    fn grids(self) -> Option<(Vec<usize>, Vec<usize>)> {
        let growing = GROWING_GRID.to_vec();
        match self {
            Preset::Fig1Left => Some((vec![100], growing)),
            Preset::Fig1Right => Some((growing, vec![100])),
            Preset::Fig2Left => Some((growing, vec![100])),
            Preset::Fig2Right => Some((vec![800], growing)),
            Preset::Custom => None,
        }
    }

    /// Methods run when the config does not list any.
    pub fn methods(self) -> Vec<Method> {
        match self {
            Preset::Fig1Left | Preset::Fig1Right => {
                vec![
                    Method::Bayes,
                    Method::Supervised,
                    Method::Classical,
                    Method::Interpolation,
                ]
            }
            Preset::Fig2Left | Preset::Fig2Right => vec![Method::Bayes, Method::Unsupervised, Method::Oracle],
            Preset::Custom => Method::ALL.to_vec(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::param("preset", format!("unknown preset `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The analytic Bayes rule; its excess risk is zero by construction.
    Bayes,
    Supervised,
    Classical,
    Interpolation,
    Unsupervised,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Bayes,
        Method::Supervised,
        Method::Classical,
        Method::Interpolation,
        Method::Unsupervised,
        Method::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bayes => "bayes",
            Method::Supervised => "supervised",
            Method::Classical => "classical",
            Method::Interpolation => "interpolation",
            Method::Unsupervised => "unsupervised",
            Method::Oracle => "oracle",
        }
    }

    /// Whether the method reads target labels.
    pub fn uses_target_labels(self) -> bool {
        matches!(self, Method::Supervised | Method::Classical | Method::Interpolation)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::param("method", format!("unknown method `{s}`")))
    }
}

/// Source and target data distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorPair {
    #[serde(default = "GeneratorConfig::simulation_source")]
    pub source: GeneratorConfig,
    #[serde(default = "GeneratorConfig::simulation_target")]
    pub target: GeneratorConfig,
}

impl Default for GeneratorPair {
    fn default() -> Self {
        Self {
            source: GeneratorConfig::simulation_source(),
            target: GeneratorConfig::simulation_target(),
        }
    }
}

/// A full experiment grid. Empty grids and method lists are filled from the
/// preset by [`ExperimentConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub preset: Preset,
    #[serde(default)]
    pub n_p_grid: Vec<usize>,
    #[serde(default)]
    pub n_q_grid: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_test_n")]
    pub test_n: usize,
    #[serde(default)]
    pub generator: GeneratorPair,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_kernel")]
    pub kernel: KernelFamily,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    /// Sample size behind the supervised bandwidth; presets use the pooled total.
    #[serde(default)]
    pub supervised_bandwidth: Option<BandwidthPolicy>,
    #[serde(default = "default_det_floor")]
    pub det_floor: f64,
    #[serde(default = "default_epsilon_grid")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// When false, `wallclock_ms` is written as 0 so output is reproducible.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

fn default_seeds() -> usize {
    20
}
fn default_test_n() -> usize {
    20_000
}
fn default_kernel() -> KernelFamily {
    KernelFamily::Gaussian
}
fn default_alpha() -> f64 {
    1.0
}
fn default_c1() -> f64 {
    0.5
}
fn default_det_floor() -> f64 {
    DEFAULT_DET_FLOOR
}
fn default_epsilon_grid() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}
fn default_folds() -> usize {
    5
}
fn default_true() -> bool {
    true
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Custom,
            n_p_grid: Vec::new(),
            n_q_grid: Vec::new(),
            seeds: default_seeds(),
            test_n: default_test_n(),
            generator: GeneratorPair::default(),
            methods: Vec::new(),
            master_seed: 0,
            kernel: default_kernel(),
            alpha: default_alpha(),
            c1: default_c1(),
            supervised_bandwidth: None,
            det_floor: default_det_floor(),
            epsilon_grid: default_epsilon_grid(),
            folds: default_folds(),
            record_timing: true,
        }
    }
}

impl ExperimentConfig {
    /// A resolved preset configuration with default seeds and test size.
    pub fn preset(preset: Preset) -> Self {
        let mut cfg = Self {
            preset,
            ..Self::default()
        };
        cfg.fill_from_preset();
        cfg
    }

    fn fill_from_preset(&mut self) {
        if let Some((np, nq)) = self.preset.grids() {
            if self.n_p_grid.is_empty() {
                self.n_p_grid = np;
            }
            if self.n_q_grid.is_empty() {
                self.n_q_grid = nq;
            }
        }
        if self.methods.is_empty() {
            self.methods = self.preset.methods();
        }
        if self.supervised_bandwidth.is_none() {
            self.supervised_bandwidth = Some(match self.preset {
                Preset::Custom => BandwidthPolicy::MinClassSize,
                _ => BandwidthPolicy::PooledTotal,
            });
        }
    }

    /// Fills unset fields from the preset and validates.
    pub fn resolve(mut self) -> Result<Self> {
        self.fill_from_preset();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_p_grid.is_empty() || self.n_q_grid.is_empty() {
            return Err(Error::param("n_p_grid", "sample-size grids must be nonempty"));
        }
        if self.n_p_grid.iter().chain(&self.n_q_grid).any(|&n| n == 0) {
            return Err(Error::param("n_p_grid", "sample sizes must be at least 1"));
        }
        if self.seeds == 0 {
            return Err(Error::param("seeds", "must be at least 1"));
        }
        if self.test_n == 0 {
            return Err(Error::param("test_n", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::param("methods", "must be nonempty"));
        }
        self.generator.source.validate()?;
        self.generator.target.validate()?;
        if self.generator.source.dim != self.generator.target.dim {
            return Err(Error::param("target", "source and target dimensions differ"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param("alpha", "must lie in (0, 1]"));
        }
        if !(self.c1 > 0.0) {
            return Err(Error::param("c1", "must be positive"));
        }
        if !(self.det_floor > 0.0) {
            return Err(Error::param("det_floor", "must be positive"));
        }
        if self.epsilon_grid.is_empty() || self.epsilon_grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::param("epsilon_grid", "must be a nonempty subset of [0, 1]"));
        }
        if self.folds == 0 {
            return Err(Error::param("folds", "must be at least 1"));
        }
        Ok(())
    }

    pub fn plugin_settings(&self) -> PluginSettings {
        PluginSettings {
            kernel: self.kernel,
            alpha: self.alpha,
            c1: self.c1,
        }
    }

    /// `(n_P, n_Q)` cells in row-major order of the grids.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.n_p_grid
            .iter()
            .flat_map(|&np| self.n_q_grid.iter().map(move |&nq| (np, nq)))
            .collect()
    }

    /// Population ratios `w_k = Q(Y = k) / P(Y = k)` of the two generators.
    pub fn true_weights(&self) -> (f64, f64) {
        let (p, q) = (self.generator.source.class1_prior, self.generator.target.class1_prior);
        ((1.0 - q) / (1.0 - p), q / p)
    }
}
