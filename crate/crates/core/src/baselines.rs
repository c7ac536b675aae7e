//! Comparison classifiers: target-only kernel regression, source/target
//! model interpolation with a cross-validated mixing weight, and the
//! reweighted plug-in with known class-probability ratios.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::datagen::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::kernel_density::{bandwidth_rule, Bandwidth, KernelSpec};
use crate::numeric::KahanSum;
use crate::plugin::threshold;
use crate::shift_weights::ShiftWeights;
use crate::supervised::PluginSettings;
use crate::unsupervised::{fit_with_weights, UnsupervisedModel};

/// Nadaraya–Watson regression of the labels on the features.
#[derive(Debug, Clone, PartialEq)]
pub struct NadarayaWatson {
    kernel: KernelSpec,
    bandwidth: Bandwidth,
    points: Vec<f64>,
    labels: Vec<f64>,
}

impl NadarayaWatson {
    pub fn fit(data: &Dataset, kernel: KernelSpec, bandwidth: Bandwidth) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        check_dim(kernel.dim(), data.dim())?;
        Ok(Self {
            kernel,
            bandwidth,
            points: data.features().flatten().copied().collect(),
            labels: data.labels().map(f64::from).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `Σ Yᵢ K_h(x − Xᵢ) / Σ K_h(x − Xᵢ)`; ½ when every kernel weight is 0.
    pub fn estimate(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.estimate_unchecked(x))
    }

    fn estimate_unchecked(&self, x: &[f64]) -> f64 {
        let inv_h = 1.0 / self.bandwidth.get();
        let mut num = KahanSum::default();
        let mut den = KahanSum::default();
        for (p, &y) in self.points.chunks_exact(self.dim()).zip(&self.labels) {
            let sq: f64 = x
                .iter()
                .zip(p)
                .map(|(a, b)| {
                    let t = (a - b) * inv_h;
                    t * t
                })
                .sum();
            let k = self.kernel.profile_sq(sq);
            num.add(y * k);
            den.add(k);
        }
        let den = den.total();
        if den > 0.0 {
            (num.total() / den).clamp(0.0, 1.0)
        } else {
            0.5
        }
    }

    pub fn classify(&self, x: &[f64]) -> Result<u8> {
        self.estimate(x).map(threshold)
    }

    pub fn classify_many(&self, queries: &[f64]) -> Result<Vec<u8>> {
        let dim = self.dim();
        check_dim(0, queries.len() % dim)?;
        Ok(queries
            .par_chunks_exact(dim)
            .map(|q| threshold(self.estimate_unchecked(q)))
            .collect())
    }
}

/// The target-only classical classifier is a thresholded Nadaraya–Watson fit.
pub type ClassicalModel = NadarayaWatson;

pub fn classical_fit(target: &Dataset, kernel: KernelSpec, bandwidth: Bandwidth) -> Result<ClassicalModel> {
    NadarayaWatson::fit(target, kernel, bandwidth)
}

pub fn classical_classify(model: &ClassicalModel, x: &[f64]) -> Result<u8> {
    model.classify(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationOptions {
    pub epsilon_grid: Vec<f64>,
    pub folds: usize,
    pub settings: PluginSettings,
}

impl Default for InterpolationOptions {
    fn default() -> Self {
        Self {
            epsilon_grid: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
            folds: 5,
            settings: PluginSettings::default(),
        }
    }
}

/// `1{ε·NW_P(x) + (1 − ε)·NW_Q(x) > ½}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationModel {
    pub epsilon: f64,
    pub source_nw: NadarayaWatson,
    pub target_nw: NadarayaWatson,
    /// `(ε, mean held-out misclassification)` for each grid value.
    pub cv_scores: Vec<(f64, f64)>,
    pub folds_used: usize,
    /// Fewer than the requested folds were possible (`n_Q < folds`).
    pub folds_reduced: bool,
}

impl InterpolationModel {
    pub fn mixture(&self, x: &[f64]) -> Result<f64> {
        let p = self.source_nw.estimate(x)?;
        let q = self.target_nw.estimate(x)?;
        Ok(mix(self.epsilon, p, q))
    }

    pub fn classify(&self, x: &[f64]) -> Result<u8> {
        self.mixture(x).map(threshold)
    }

    pub fn classify_many(&self, queries: &[f64]) -> Result<Vec<u8>> {
        let dim = self.source_nw.dim();
        check_dim(0, queries.len() % dim)?;
        Ok(queries
            .par_chunks_exact(dim)
            .map(|q| {
                let p = self.source_nw.estimate_unchecked(q);
                let t = self.target_nw.estimate_unchecked(q);
                threshold(mix(self.epsilon, p, t))
            })
            .collect())
    }
}

#[inline]
fn mix(epsilon: f64, p: f64, q: f64) -> f64 {
    epsilon * p + (1.0 - epsilon) * q
}

/// Fold index for every target row: labels are shuffled within class and
/// dealt round-robin (class 0 first), so each fold sees both labels when
/// possible.
pub fn stratified_folds<R: Rng + ?Sized>(target: &Dataset, folds: usize, rng: &mut R) -> Vec<usize> {
    let mut fold_of = vec![0; target.len()];
    let mut next = 0usize;
    for label in [0u8, 1] {
        let mut rows: Vec<usize> = target
            .labels()
            .enumerate()
            .filter(|&(_, y)| y == label)
            .map(|(i, _)| i)
            .collect();
        rows.shuffle(rng);
        for r in rows {
            fold_of[r] = next % folds;
            next += 1;
        }
    }
    fold_of
}

/// Mean held-out misclassification rate of every `ε` in `grid`. The source
/// regressor is fit once on all of `source`; the target regressor is refit
/// on each training split with the bandwidth rule at the split size.
pub fn cv_scores(
    source: &Dataset,
    target: &Dataset,
    fold_of: &[usize],
    folds: usize,
    grid: &[f64],
    settings: &PluginSettings,
) -> Result<Vec<f64>> {
    check_dim(source.dim(), target.dim())?;
    let dim = source.dim();
    let kernel = KernelSpec::new(settings.kernel, dim)?;
    let h_p = bandwidth_rule(source.len(), settings.alpha, dim, settings.c1)?;
    let source_nw = NadarayaWatson::fit(source, kernel, h_p)?;

    let per_fold: Vec<Result<Vec<f64>>> = (0..folds)
        .into_par_iter()
        .map(|k| {
            let (held, train): (Vec<usize>, Vec<usize>) = (0..target.len()).partition(|&i| fold_of[i] == k);
            if held.is_empty() || train.is_empty() {
                return Ok(vec![0.0; grid.len()]);
            }
            let train = target.select(&train)?;
            let h_q = bandwidth_rule(train.len(), settings.alpha, dim, settings.c1)?;
            let target_nw = NadarayaWatson::fit(&train, kernel, h_q)?;
            let mut errors = vec![0usize; grid.len()];
            for &i in &held {
                let s = &target.samples()[i];
                let p = source_nw.estimate_unchecked(&s.x);
                let q = target_nw.estimate_unchecked(&s.x);
                for (e, &eps) in errors.iter_mut().zip(grid) {
                    *e += usize::from(threshold(mix(eps, p, q)) != s.y);
                }
            }
            Ok(errors.into_iter().map(|e| e as f64 / held.len() as f64).collect())
        })
        .collect();

    let mut totals = vec![KahanSum::default(); grid.len()];
    for fold in per_fold {
        for (t, v) in totals.iter_mut().zip(fold?) {
            t.add(v);
        }
    }
    Ok(totals.into_iter().map(|t| t.total() / folds as f64).collect())
}

/// Chooses `ε` by stratified k-fold CV on the target (ties toward smaller
/// `ε`), then refits the target regressor on all target data.
pub fn interpolation_fit<R: Rng + ?Sized>(
    source: &Dataset,
    target: &Dataset,
    opts: &InterpolationOptions,
    rng: &mut R,
) -> Result<InterpolationModel> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(source.dim(), target.dim())?;
    if opts.epsilon_grid.is_empty() {
        return Err(Error::param("epsilon_grid", "must be nonempty"));
    }
    if opts.epsilon_grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::param("epsilon_grid", "values must lie in [0, 1]"));
    }
    if opts.folds == 0 {
        return Err(Error::param("folds", "must be at least 1"));
    }
    let mut grid = opts.epsilon_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let folds_used = opts.folds.min(target.len());
    let folds_reduced = folds_used < opts.folds;
    if folds_reduced {
        log::warn!("n_Q = {} < {} folds; using {folds_used}", target.len(), opts.folds);
    }
    let fold_of = stratified_folds(target, folds_used, rng);
    let scores = if folds_used >= 2 {
        cv_scores(source, target, &fold_of, folds_used, &grid, &opts.settings)?
    } else {
        vec![0.0; grid.len()]
    };
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }

    let dim = source.dim();
    let s = &opts.settings;
    let kernel = KernelSpec::new(s.kernel, dim)?;
    let h_p = bandwidth_rule(source.len(), s.alpha, dim, s.c1)?;
    let h_q = bandwidth_rule(target.len(), s.alpha, dim, s.c1)?;
    Ok(InterpolationModel {
        epsilon: grid[best],
        source_nw: NadarayaWatson::fit(source, kernel, h_p)?,
        target_nw: NadarayaWatson::fit(target, kernel, h_q)?,
        cv_scores: grid.into_iter().zip(scores).collect(),
        folds_used,
        folds_reduced,
    })
}

pub fn interpolation_classify(model: &InterpolationModel, x: &[f64]) -> Result<u8> {
    model.classify(x)
}

/// Reweighted plug-in on the source with the true ratios `(w₀, w₁)`.
pub fn oracle_fit(source: &Dataset, w0: f64, w1: f64, settings: &PluginSettings) -> Result<UnsupervisedModel> {
    fit_with_weights(source, ShiftWeights::known(w0, w1)?, settings)
}

pub fn oracle_classify(model: &UnsupervisedModel, x: &[f64]) -> Result<u8> {
    model.classify(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::DomainTag;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ds(xs: &[f64], ys: &[u8], tag: DomainTag) -> Dataset {
        Dataset::from_parts(xs.iter().map(|&v| vec![v]).collect(), ys.to_vec(), tag).unwrap()
    }

    #[test]
    fn all_ones_target_classifies_one() {
        let t = ds(&[0.0, 1.0, 2.0], &[1, 1, 1], DomainTag::Target);
        let m = classical_fit(&t, KernelSpec::gaussian(1).unwrap(), Bandwidth::new(0.5).unwrap()).unwrap();
        for x in [-1.0, 0.5, 3.0] {
            assert_eq!(classical_classify(&m, &[x]).unwrap(), 1);
        }
    }

    #[test]
    fn one_point_regressor_returns_its_label() {
        for y in [0u8, 1] {
            let t = ds(&[0.3], &[y], DomainTag::Target);
            let m = classical_fit(&t, KernelSpec::gaussian(1).unwrap(), Bandwidth::new(0.2).unwrap()).unwrap();
            for x in [-2.0, 0.3, 4.0] {
                assert_eq!(m.classify(&[x]).unwrap(), y);
            }
        }
    }

    #[test]
    fn zero_kernel_mass_defaults_to_label_zero() {
        let t = ds(&[0.0], &[1], DomainTag::Target);
        let m = classical_fit(&t, KernelSpec::gaussian(1).unwrap(), Bandwidth::new(0.01).unwrap()).unwrap();
        assert_eq!(m.estimate(&[1e3]).unwrap(), 0.5);
        assert_eq!(m.classify(&[1e3]).unwrap(), 0);
    }

    #[test]
    fn folds_are_reduced_for_tiny_targets() {
        let s = ds(&[-1.0, -0.5, 0.5, 1.0], &[0, 0, 1, 1], DomainTag::Source);
        let t = ds(&[0.1, 0.9, -0.4], &[1, 1, 0], DomainTag::Target);
        let m = interpolation_fit(
            &s,
            &t,
            &InterpolationOptions::default(),
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert_eq!(m.folds_used, 3);
        assert!(m.folds_reduced);
    }

    #[test]
    fn stratified_folds_balance_labels() {
        let xs: Vec<f64> = (0..23).map(f64::from).collect();
        let ys: Vec<u8> = (0..23).map(|i| u8::from(i % 4 != 0)).collect();
        let t = ds(&xs, &ys, DomainTag::Target);
        let f = stratified_folds(&t, 5, &mut ChaCha8Rng::seed_from_u64(4));
        for k in 0..5 {
            let members: Vec<usize> = (0..23).filter(|&i| f[i] == k).collect();
            assert!(members.len() == 4 || members.len() == 5);
            assert!(members.iter().any(|&i| ys[i] == 0));
            assert!(members.iter().any(|&i| ys[i] == 1));
        }
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let s = ds(&[-1.0, 1.0], &[0, 1], DomainTag::Source);
        let t = ds(&[0.0, 0.5], &[0, 1], DomainTag::Target);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let empty = InterpolationOptions {
            epsilon_grid: vec![],
            ..Default::default()
        };
        assert!(interpolation_fit(&s, &t, &empty, &mut rng).is_err());
        let out_of_range = InterpolationOptions {
            epsilon_grid: vec![0.5, 1.5],
            ..Default::default()
        };
        assert!(interpolation_fit(&s, &t, &out_of_range, &mut rng).is_err());
    }
}
