use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Method};
use super::risk::{RiskEstimate, TestSet};
use crate::baselines::{classical_fit, interpolation_fit, oracle_fit, InterpolationOptions};
use crate::datagen::{generate, Dataset, DomainTag};
use crate::error::{Error, Result};
use crate::kernel_density::{bandwidth_rule, KernelSpec};
use crate::shift_weights::{fit_logistic_pilot, LogisticOptions};
use crate::supervised::{fit_supervised_with, BandwidthPolicy};
use crate::unsupervised::fit_unsupervised;

/// Targets smaller than this are redrawn when all labels agree.
const REDRAW_BELOW: usize = 20;
const MAX_REDRAWS: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Flag {
    /// Distributional matching produced a negative ratio that was set to 0.
    WeightClipped,
    /// The logistic pilot stopped before the gradient tolerance was met.
    PilotNotConverged,
    /// Cross-validation used fewer folds than requested.
    CvDegenerate,
    /// The target sample was redrawn this many times.
    Redraw(u32),
    /// Fitting failed; the excess risk is NaN.
    Failed(&'static str),
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flag::WeightClipped => f.write_str("weight_clipped"),
            Flag::PilotNotConverged => f.write_str("pilot_not_converged"),
            Flag::CvDegenerate => f.write_str("cv_degenerate"),
            Flag::Redraw(n) => write!(f, "redraw={n}"),
            Flag::Failed(kind) => write!(f, "failed={kind}"),
        }
    }
}

/// One `(method, n_P, n_Q, seed)` result.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub method: Method,
    pub n_p: usize,
    pub n_q: usize,
    pub seed: usize,
    /// NaN when the method failed to fit.
    pub excess_risk: f64,
    pub wallclock_ms: f64,
    pub flags: Vec<Flag>,
    pub risk: Option<RiskEstimate>,
}

impl ExperimentRecord {
    pub fn failed(&self) -> bool {
        self.flags.iter().any(|f| matches!(f, Flag::Failed(_)))
    }
}

// Stream roles. Source data depend on (seed, n_P), target data on
// (seed, n_Q) and test data on the seed alone, so cells sharing a sample
// size reuse the same draw.
const ROLE_SOURCE: u64 = 1;
const ROLE_TARGET: u64 = 2;
const ROLE_TEST: u64 = 3;
const ROLE_CV: u64 = 4;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(master: u64, parts: &[u64]) -> ChaCha8Rng {
    let seed = parts
        .iter()
        .fold(splitmix(master), |acc, &p| splitmix(acc ^ splitmix(p)));
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs every `(cell, seed)` of the grid. Work items run in parallel on the
/// current rayon pool; records come back in grid order (cells, then seeds,
/// then methods) regardless of scheduling.
pub fn run_grid(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let config = config.clone().resolve()?;
    let items: Vec<(usize, usize, usize)> = config
        .cells()
        .into_iter()
        .flat_map(|(np, nq)| (0..config.seeds).map(move |s| (np, nq, s)))
        .collect();
    let nested = items
        .par_iter()
        .map(|&(np, nq, seed)| run_cell(&config, np, nq, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Runs all configured methods on one `(n_P, n_Q, seed)` cell. Errors are
/// returned only for data generation problems (an invalid configuration);
/// method failures become flagged NaN records.
pub fn run_cell(config: &ExperimentConfig, n_p: usize, n_q: usize, seed: usize) -> Result<Vec<ExperimentRecord>> {
    let config = config.clone().resolve()?;
    let master = config.master_seed;
    let s = seed as u64;
    let source = generate(
        &config.generator.source,
        n_p,
        DomainTag::Source,
        &mut stream(master, &[ROLE_SOURCE, s, n_p as u64]),
    )?;
    let mut target_rng = stream(master, &[ROLE_TARGET, s, n_q as u64]);
    let mut target = generate(&config.generator.target, n_q, DomainTag::Target, &mut target_rng)?;
    let mut redraws = 0u32;
    if n_q < REDRAW_BELOW && config.methods.iter().any(|m| m.uses_target_labels()) {
        while single_label(&target) && redraws < MAX_REDRAWS {
            target = generate(&config.generator.target, n_q, DomainTag::Target, &mut target_rng)?;
            redraws += 1;
        }
        if redraws > 0 {
            log::info!("n_p={n_p} n_q={n_q} seed={seed}: redrew single-label target {redraws} time(s)");
        }
    }
    let test = TestSet::draw(
        &config.generator.target,
        config.test_n,
        &mut stream(master, &[ROLE_TEST, s]),
    )?;

    let mut records = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let start = Instant::now();
        let outcome = predict(&config, method, &source, &target, &test, (n_p, n_q, seed));
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let mut flags = Vec::new();
        if redraws > 0 {
            flags.push(Flag::Redraw(redraws));
        }
        let (excess_risk, risk) = match outcome.and_then(|(preds, extra)| {
            flags.extend(extra);
            test.evaluate(&preds)
        }) {
            Ok(r) => (r.excess_risk, Some(r)),
            Err(e) => {
                log::warn!("{method} failed at n_p={n_p} n_q={n_q} seed={seed}: {e}");
                flags.push(Flag::Failed(e.kind()));
                (f64::NAN, None)
            }
        };
        records.push(ExperimentRecord {
            method,
            n_p,
            n_q,
            seed,
            excess_risk,
            wallclock_ms: if config.record_timing { elapsed } else { 0.0 },
            flags,
            risk,
        });
    }
    Ok(records)
}

fn single_label(data: &Dataset) -> bool {
    let ones = data.count_label(1);
    ones == 0 || ones == data.len()
}

fn predict(
    config: &ExperimentConfig,
    method: Method,
    source: &Dataset,
    target: &Dataset,
    test: &TestSet,
    (n_p, n_q, seed): (usize, usize, usize),
) -> Result<(Vec<u8>, Vec<Flag>)> {
    let settings = config.plugin_settings();
    let queries = test.features();
    let dim = config.generator.target.dim;
    let mut flags = Vec::new();
    let preds = match method {
        Method::Bayes => test.bayes().to_vec(),
        Method::Supervised => {
            let policy = config.supervised_bandwidth.unwrap_or(BandwidthPolicy::MinClassSize);
            fit_supervised_with(source, target, &settings, policy)?.classify_many(queries)?
        }
        Method::Classical => {
            let h = bandwidth_rule(target.len(), settings.alpha, dim, settings.c1)?;
            classical_fit(target, KernelSpec::new(settings.kernel, dim)?, h)?.classify_many(queries)?
        }
        Method::Interpolation => {
            let opts = InterpolationOptions {
                epsilon_grid: config.epsilon_grid.clone(),
                folds: config.folds,
                settings,
            };
            let mut rng = stream(config.master_seed, &[ROLE_CV, seed as u64, n_p as u64, n_q as u64]);
            let model = interpolation_fit(source, target, &opts, &mut rng)?;
            if model.folds_reduced {
                flags.push(Flag::CvDegenerate);
            }
            model.classify_many(queries)?
        }
        Method::Unsupervised => {
            let fit = fit_logistic_pilot(source, &LogisticOptions::default())?;
            if !fit.converged {
                flags.push(Flag::PilotNotConverged);
            }
            let model = fit_unsupervised(source, target, &fit.pilot, &settings, config.det_floor)?;
            if model.weights.clipped {
                flags.push(Flag::WeightClipped);
            }
            model.classify_many(queries)?
        }
        Method::Oracle => {
            let (w0, w1) = config.true_weights();
            oracle_fit(source, w0, w1, &settings)?.classify_many(queries)?
        }
    };
    if preds.len() != test.len() {
        return Err(Error::param("predictions", "length mismatch"));
    }
    Ok((preds, flags))
}
