//! Synthetic label-shift data.
//!
//! Class-conditional features are products of truncated normals that share a
//! standard deviation and a box support; only the class mean differs. Source
//! and target domains differ only through the class-1 prior, which is the
//! label shift assumption. The analytic regression function and Bayes rule
//! of a configuration serve as ground truth for excess-risk evaluation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{check_dim, Error, Result};

fn std_normal() -> &'static Normal {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(Normal::standard)
}

fn std_cdf(z: f64) -> f64 {
    std_normal().cdf(z)
}

fn std_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Normal distribution `N(mean, sd²)` conditioned on `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncNormSpec {
    mean: f64,
    sd: f64,
    lower: f64,
    upper: f64,
    // standardized bounds and log of the normalizing mass
    alpha: f64,
    beta: f64,
    log_norm: f64,
}

impl TruncNormSpec {
    pub fn new(mean: f64, sd: f64, lower: f64, upper: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::param("mean", "must be finite"));
        }
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::param("sd", format!("must be positive, got {sd}")));
        }
        if !(lower < upper) {
            return Err(Error::param(
                "lower",
                format!("need lower < upper, got [{lower}, {upper}]"),
            ));
        }
        let alpha = (lower - mean) / sd;
        let beta = (upper - mean) / sd;
        let mass = standardized_mass(alpha, beta);
        if !(mass > 0.0) {
            return Err(Error::param("lower", "truncation interval has zero normal mass"));
        }
        let log_norm = (sd * mass * (2.0 * PI).sqrt()).ln();
        Ok(Self {
            mean,
            sd,
            lower,
            upper,
            alpha,
            beta,
            log_norm,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Normal probability mass of the truncation interval, `Z`.
    pub fn mass(&self) -> f64 {
        standardized_mass(self.alpha, self.beta)
    }

    /// Log-density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < self.lower || x > self.upper {
            return f64::NEG_INFINITY;
        }
        let z = (x - self.mean) / self.sd;
        -0.5 * z * z - self.log_norm
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if x >= self.upper {
            return 1.0;
        }
        let z = (x - self.mean) / self.sd;
        (standardized_mass(self.alpha, z) / self.mass()).clamp(0.0, 1.0)
    }
}

/// `Φ(b) − Φ(a)` evaluated on the side of zero that avoids cancellation.
///
/// The straddling case is written `1 − (Φ(a) + Φ(−b))` so that intervals
/// mirrored about the mean get bit-identical masses.
fn standardized_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        std_cdf(-a) - std_cdf(-b)
    } else if b <= 0.0 {
        std_cdf(b) - std_cdf(a)
    } else {
        1.0 - (std_cdf(a) + std_cdf(-b))
    }
}

/// Draws one value from the truncated normal by inverting the normal CDF on
/// the truncation mass. Consumes exactly one uniform from `rng`.
pub fn sample_truncnorm<R: Rng + ?Sized>(spec: &TruncNormSpec, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    // Work in the lower tail so quantiles stay accurate for intervals far
    // right of the mean.
    let (a, b, sign) = if spec.alpha > 0.0 {
        (-spec.beta, -spec.alpha, -1.0)
    } else {
        (spec.alpha, spec.beta, 1.0)
    };
    let pa = std_cdf(a);
    let pb = std_cdf(b);
    let p = (pa + u * (pb - pa)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    let z = std_quantile(p).clamp(a, b);
    (spec.mean + sign * spec.sd * z).clamp(spec.lower, spec.upper)
}

/// Parameters of one domain of the simulation family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub dim: usize,
    pub class1_prior: f64,
    #[serde(default)]
    pub class0_mean: f64,
    #[serde(default = "default_class1_mean")]
    pub class1_mean: f64,
    #[serde(default = "default_sd")]
    pub sd: f64,
    #[serde(rename = "box", default = "default_box")]
    pub bounds: [f64; 2],
}

fn default_class1_mean() -> f64 {
    0.4
}

fn default_sd() -> f64 {
    1.0
}

fn default_box() -> [f64; 2] {
    [-6.0, 6.0]
}

impl GeneratorConfig {
    /// Four-dimensional `TN(0.4·y, 1)` family on `[-6, 6]^4` with class-1
    /// prior `prior`.
    pub fn simulation(prior: f64) -> Self {
        Self {
            dim: 4,
            class1_prior: prior,
            class0_mean: 0.0,
            class1_mean: default_class1_mean(),
            sd: default_sd(),
            bounds: default_box(),
        }
    }

    /// Balanced source domain of the simulation study.
    pub fn simulation_source() -> Self {
        Self::simulation(0.5)
    }

    /// Imbalanced target domain of the simulation study.
    pub fn simulation_target() -> Self {
        Self::simulation(0.9)
    }

    pub fn with_prior(mut self, prior: f64) -> Self {
        self.class1_prior = prior;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if !(self.class1_prior > 0.0 && self.class1_prior < 1.0) {
            return Err(Error::param(
                "class1_prior",
                format!("must lie in (0, 1), got {}", self.class1_prior),
            ));
        }
        self.class_spec(0)?;
        self.class_spec(1)?;
        Ok(())
    }

    pub fn lower(&self) -> f64 {
        self.bounds[0]
    }

    pub fn upper(&self) -> f64 {
        self.bounds[1]
    }

    /// Per-coordinate truncated normal of class `label`.
    pub fn class_spec(&self, label: u8) -> Result<TruncNormSpec> {
        let mean = match label {
            0 => self.class0_mean,
            1 => self.class1_mean,
            other => return Err(Error::InvalidLabel(other)),
        };
        TruncNormSpec::new(mean, self.sd, self.lower(), self.upper())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v >= self.lower() && v <= self.upper())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                lower: self.lower(),
                upper: self.upper(),
            })
        }
    }

    /// Class-conditional density `g_label(x)`, a product over coordinates.
    pub fn class_density(&self, label: u8, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let spec = self.class_spec(label)?;
        Ok(x.iter().map(|&v| spec.ln_pdf(v)).sum::<f64>().exp())
    }

    /// `ln(g₁(x) / g₀(x))`.
    pub fn log_likelihood_ratio(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let s0 = self.class_spec(0)?;
        let s1 = self.class_spec(1)?;
        Ok(x.iter().map(|&v| s1.ln_pdf(v) - s0.ln_pdf(v)).sum())
    }
}

/// Which domain a dataset was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: u8,
}

/// Ordered samples from one domain. Target data used in the unsupervised
/// setting still carries labels here; consumers that must not see them only
/// read [`Dataset::features`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<LabeledSample>,
    dim: usize,
    domain: DomainTag,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>, domain: DomainTag) -> Result<Self> {
        let dim = samples.first().map(|s| s.x.len()).ok_or(Error::EmptyDataset)?;
        for s in &samples {
            check_dim(dim, s.x.len())?;
            if s.y > 1 {
                return Err(Error::InvalidLabel(s.y));
            }
        }
        Ok(Self { samples, dim, domain })
    }

    /// A dataset with no samples, e.g. a missing source in the supervised
    /// setting. Fitting operations reject it.
    pub fn empty(dim: usize, domain: DomainTag) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        Ok(Self {
            samples: Vec::new(),
            dim,
            domain,
        })
    }

    /// Builds a dataset from parallel feature/label vectors.
    pub fn from_parts(features: Vec<Vec<f64>>, labels: Vec<u8>, domain: DomainTag) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::param(
                "labels",
                format!("{} features but {} labels", features.len(), labels.len()),
            ));
        }
        let samples = features
            .into_iter()
            .zip(labels)
            .map(|(x, y)| LabeledSample { x, y })
            .collect();
        Self::new(samples, domain)
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn features(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.samples.iter().map(|s| s.x.as_slice())
    }

    pub fn labels(&self) -> impl Iterator<Item = u8> + '_ {
        self.samples.iter().map(|s| s.y)
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.labels().filter(|&y| y == label).count()
    }

    /// Features of all samples with the given label, flattened row-major.
    pub fn class_points(&self, label: u8) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.y == label)
            .flat_map(|s| s.x.iter().copied())
            .collect()
    }

    /// Concatenation of two datasets; the domain tag of `self` is kept.
    pub fn pooled(&self, other: &Dataset) -> Result<Dataset> {
        check_dim(self.dim, other.dim)?;
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().cloned());
        Ok(Dataset {
            samples,
            dim: self.dim,
            domain: self.domain,
        })
    }

    /// Dataset with labels mapped `y ↦ 1 − y`.
    pub fn relabeled(&self) -> Dataset {
        Dataset {
            samples: self
                .samples
                .iter()
                .map(|s| LabeledSample {
                    x: s.x.clone(),
                    y: 1 - s.y,
                })
                .collect(),
            dim: self.dim,
            domain: self.domain,
        }
    }

    /// Subset by row indices, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Dataset> {
        let samples: Vec<_> = rows.iter().map(|&i| self.samples[i].clone()).collect();
        Dataset::new(samples, self.domain)
    }
}

/// Draws `n` labeled samples. Per sample the stream is consumed as one
/// uniform for the Bernoulli label followed by `dim` truncated-normal draws.
pub fn generate<R: Rng + ?Sized>(
    config: &GeneratorConfig,
    n: usize,
    domain: DomainTag,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    config.validate()?;
    let specs = [config.class_spec(0)?, config.class_spec(1)?];
    let samples = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let y = u8::from(u < config.class1_prior);
            let spec = &specs[usize::from(y)];
            let x = (0..config.dim).map(|_| sample_truncnorm(spec, rng)).collect();
            LabeledSample { x, y }
        })
        .collect();
    Dataset::new(samples, domain)
}

/// Regression function `Q(Y = 1 | X = x)` of the configured domain.
pub fn true_eta(config: &GeneratorConfig, x: &[f64]) -> Result<f64> {
    config.validate()?;
    let llr = config.log_likelihood_ratio(x)?;
    let pi = config.class1_prior;
    // π g₁ / (π g₁ + (1 − π) g₀) = 1 / (1 + exp(ln((1 − π)/π) − llr))
    let t = ((1.0 - pi) / pi).ln() - llr;
    Ok(if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    })
}

/// Bayes classifier: 1 iff `true_eta(x) > 1/2`.
pub fn bayes_classify(config: &GeneratorConfig, x: &[f64]) -> Result<u8> {
    Ok(u8::from(true_eta(config, x)? > 0.5))
}
