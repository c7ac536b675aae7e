//! Radial kernels and per-class kernel density estimates.
//!
//! A kernel is `K(x) = C · f(‖x‖₂)` with `C` chosen so that `K` integrates to
//! one over `ℝ^d`; the scaled kernel is `K_h(x) = h^{-d} K(x / h)`. Density
//! estimates are exact `O(n)` sums evaluated in index order with compensated
//! accumulation, so a given query returns the same bits however the caller
//! parallelizes over queries.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::datagen::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::numeric::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `C₂ e^{-‖x‖²/2}`
    Gaussian,
    /// `C₁ e^{-‖x‖}`
    Exponential,
}

const EXP_UNDERFLOW: f64 = -746.0;

/// A normalized radial kernel on `ℝ^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    dim: usize,
    norm: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "kernel dimension must be at least 1"));
        }
        let norm = match family {
            KernelFamily::Gaussian => (2.0 * PI).powf(-(dim as f64) / 2.0),
            KernelFamily::Exponential => 1.0 / exponential_mass(dim),
        };
        Ok(Self { family, dim, norm })
    }

    pub fn gaussian(dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, dim)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalizing constant `C`.
    pub fn normalizer(&self) -> f64 {
        self.norm
    }

    /// `K` as a function of the squared Euclidean norm of its argument.
    #[inline]
    pub fn profile_sq(&self, sq_norm: f64) -> f64 {
        let arg = match self.family {
            KernelFamily::Gaussian => -0.5 * sq_norm,
            KernelFamily::Exponential => -sq_norm.sqrt(),
        };
        // exp underflows to exactly 0 below about -745.13; skip the slow path.
        if arg < EXP_UNDERFLOW {
            0.0
        } else {
            self.norm * arg.exp()
        }
    }

    pub fn kernel_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.profile_sq(x.iter().map(|v| v * v).sum()))
    }

    /// Scaled kernel `K_h(x)`.
    pub fn scaled_value(&self, bandwidth: Bandwidth, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let h = bandwidth.get();
        let sq: f64 = x.iter().map(|v| (v / h) * (v / h)).sum();
        Ok(self.profile_sq(sq) / h.powi(self.dim as i32))
    }
}

/// `∫_{ℝ^d} e^{-‖x‖} dx`, as surface area of the unit sphere times a
/// numerically integrated radial profile `∫₀^∞ r^{d-1} e^{-r} dr`.
fn exponential_mass(dim: usize) -> f64 {
    let d = dim as f64;
    let sphere = 2.0 * PI.powf(d / 2.0) / gamma(d / 2.0);
    let upper = 80.0 + 4.0 * d;
    sphere * crate::numeric::simpson(|r| r.powf(d - 1.0) * (-r).exp(), 0.0, upper, 40_000)
}

/// Positive, finite smoothing scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h.is_finite() {
            Ok(Self(h))
        } else {
            Err(Error::param(
                "bandwidth",
                format!("must be positive and finite, got {h}"),
            ))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Bandwidth {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        Self::new(h)
    }
}

impl From<Bandwidth> for f64 {
    fn from(b: Bandwidth) -> f64 {
        b.0
    }
}

/// `h = c1 · n^{-1/(2α + d)}`.
pub fn bandwidth_rule(n_effective: usize, alpha: f64, dim: usize, c1: f64) -> Result<Bandwidth> {
    if n_effective == 0 {
        return Err(Error::param("n_effective", "must be at least 1"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(Error::param("c1", format!("must be positive, got {c1}")));
    }
    let exponent = -1.0 / (2.0 * alpha + dim as f64);
    Bandwidth::new(c1 * (n_effective as f64).powf(exponent))
}

/// Kernel density estimate `ĝ(x) = (1/n) Σ K_h(x − x′)` over a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    kernel: KernelSpec,
    bandwidth: Bandwidth,
    points: Vec<f64>,
    n: usize,
}

impl KdeModel {
    /// `points` is row-major with `kernel.dim()` columns.
    pub fn from_flat(kernel: KernelSpec, bandwidth: Bandwidth, points: Vec<f64>) -> Result<Self> {
        let dim = kernel.dim();
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !points.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: points.len() % dim,
            });
        }
        let n = points.len() / dim;
        Ok(Self {
            kernel,
            bandwidth,
            points,
            n,
        })
    }

    pub fn from_rows(kernel: KernelSpec, bandwidth: Bandwidth, rows: &[Vec<f64>]) -> Result<Self> {
        for r in rows {
            check_dim(kernel.dim(), r.len())?;
        }
        Self::from_flat(kernel, bandwidth, rows.concat())
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim())
    }

    /// `Σ_{x′} K((x − x′)/h)` without the `h^{-d}/n` factor.
    pub(crate) fn raw_kernel_sum(&self, x: &[f64]) -> f64 {
        let inv_h = 1.0 / self.bandwidth.get();
        let mut acc = KahanSum::default();
        for p in self.points.chunks_exact(self.dim()) {
            let sq: f64 = x
                .iter()
                .zip(p)
                .map(|(a, b)| {
                    let t = (a - b) * inv_h;
                    t * t
                })
                .sum();
            acc.add(self.kernel.profile_sq(sq));
        }
        acc.total()
    }

    /// `Σ_{x′} K_h(x − x′)`, the unnormalized kernel sum.
    pub fn kernel_sum(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.raw_kernel_sum(x) * self.scale())
    }

    fn scale(&self) -> f64 {
        self.bandwidth.get().powi(-(self.dim() as i32))
    }

    pub fn density_at(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.raw_kernel_sum(x) * self.scale() / self.n as f64)
    }

    /// Densities at row-major `queries`, evaluated in parallel.
    pub fn densities(&self, queries: &[f64]) -> Result<Vec<f64>> {
        let dim = self.dim();
        if !queries.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: queries.len() % dim,
            });
        }
        let factor = self.scale() / self.n as f64;
        Ok(queries
            .par_chunks_exact(dim)
            .map(|q| self.raw_kernel_sum(q) * factor)
            .collect())
    }
}

/// Fits the density estimate of class `label` on the features of `data`.
pub fn fit_class_kde(data: &Dataset, label: u8, kernel: KernelSpec, bandwidth: Bandwidth) -> Result<KdeModel> {
    if label > 1 {
        return Err(Error::InvalidLabel(label));
    }
    check_dim(kernel.dim(), data.dim())?;
    let points = data.class_points(label);
    if points.is_empty() {
        return Err(Error::EmptyClass(label));
    }
    KdeModel::from_flat(kernel, bandwidth, points)
}
