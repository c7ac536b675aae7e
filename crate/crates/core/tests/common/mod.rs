//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the crate's density, kernel or regression code;
//! only plain loops over `f64::exp` and Simpson quadrature.

#![allow(dead_code)]

use labelshift::datagen::{generate, Dataset, DomainTag, GeneratorConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const LOWER: f64 = -6.0;
pub const UPPER: f64 = 6.0;
pub const MU1: f64 = 0.4;
pub const DIM: usize = 4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_pdf(x: f64, mu: f64) -> f64 {
    (-(x - mu) * (x - mu) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Mass of `N(mu, 1)` on the box, by quadrature.
pub fn box_mass(mu: f64) -> f64 {
    simpson(|t| normal_pdf(t, mu), LOWER, UPPER, 20_000)
}

/// Truncated-normal class densities of the simulation family.
pub struct Family {
    pub z0: f64,
    pub z1: f64,
}

impl Family {
    pub fn new() -> Self {
        Self {
            z0: box_mass(0.0),
            z1: box_mass(MU1),
        }
    }

    pub fn g(&self, label: u8, x: &[f64]) -> f64 {
        let (mu, z) = if label == 1 { (MU1, self.z1) } else { (0.0, self.z0) };
        x.iter().map(|&v| normal_pdf(v, mu) / z).product()
    }

    pub fn eta(&self, pi: f64, x: &[f64]) -> f64 {
        let a = pi * self.g(1, x);
        let b = (1.0 - pi) * self.g(0, x);
        a / (a + b)
    }
}

/// Radical inverse of `i` in `base`.
pub fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `∫_{[-6,6]^4} f` from `n` Halton points (bases 2, 3, 5, 7).
pub fn qmc_box(f: impl Fn(&[f64]) -> f64, n: u64) -> f64 {
    let width = UPPER - LOWER;
    let mut total = 0.0;
    let mut x = [0.0; DIM];
    for i in 1..=n {
        for (k, base) in [2, 3, 5, 7].into_iter().enumerate() {
            x[k] = LOWER + width * halton(i, base);
        }
        total += f(&x);
    }
    total / n as f64 * width.powi(DIM as i32)
}

/// Plain Gaussian KDE, `(1/n) Σ h^{-d} (2π)^{-d/2} exp(-‖x-p‖²/2h²)`.
pub fn gaussian_kde(points: &[Vec<f64>], x: &[f64], h: f64) -> f64 {
    let d = x.len() as i32;
    let c = (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0) / h.powi(d);
    let mut s = 0.0;
    for p in points {
        let mut sq = 0.0;
        for j in 0..x.len() {
            sq += (x[j] - p[j]) * (x[j] - p[j]);
        }
        s += c * (-sq / (2.0 * h * h)).exp();
    }
    s / points.len() as f64
}

/// Plain Gaussian Nadaraya–Watson estimate, ½ on a zero denominator.
pub fn gaussian_nw(points: &[Vec<f64>], labels: &[u8], x: &[f64], h: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, &y) in points.iter().zip(labels) {
        let mut sq = 0.0;
        for j in 0..x.len() {
            sq += (x[j] - p[j]) * (x[j] - p[j]);
        }
        let k = (-sq / (2.0 * h * h)).exp();
        num += f64::from(y) * k;
        den += k;
    }
    if den > 0.0 {
        num / den
    } else {
        0.5
    }
}

pub fn rows(data: &Dataset, label: Option<u8>) -> Vec<Vec<f64>> {
    data.samples()
        .iter()
        .filter(|s| label.map_or(true, |l| s.y == l))
        .map(|s| s.x.clone())
        .collect()
}

pub fn labels(data: &Dataset) -> Vec<u8> {
    data.labels().collect()
}

pub fn source(n: usize, seed: u64) -> Dataset {
    generate(
        &GeneratorConfig::simulation_source(),
        n,
        DomainTag::Source,
        &mut rng(seed),
    )
    .unwrap()
}

pub fn target(n: usize, seed: u64) -> Dataset {
    generate(
        &GeneratorConfig::simulation_target(),
        n,
        DomainTag::Target,
        &mut rng(seed),
    )
    .unwrap()
}

/// Probe points on a coarse diagonal-plus-offset grid around the data.
pub fn probes() -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..5 {
        for j in 0..4 {
            let t = -1.5 + 0.75 * i as f64;
            let s = -0.6 + 0.4 * j as f64;
            out.push(vec![t, t + s, t - s, 0.5 * t + s]);
        }
    }
    out
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
