mod common;

use common::{gaussian_kde, gaussian_nw, probes, rng, rows, source, target};
use labelshift::baselines::NadarayaWatson;
use labelshift::datagen::{generate, Dataset, DomainTag, GeneratorConfig};
use labelshift::kernel_density::{bandwidth_rule, KernelSpec};
use labelshift::supervised::{estimate_pi, fit_supervised, fit_supervised_with, BandwidthPolicy, PluginSettings};
use labelshift::{threshold, Error};
use proptest::prelude::*;
use rand::Rng;

fn labeled(xs: Vec<Vec<f64>>, ys: Vec<u8>) -> Dataset {
    Dataset::from_parts(xs, ys, DomainTag::Target).unwrap()
}

#[test]
fn eta_matches_double_loop_oracle() {
    let src = source(100, 1);
    let tgt = target(100, 2);
    let pooled = src.pooled(&tgt).unwrap();
    let x0 = rows(&pooled, Some(0));
    let x1 = rows(&pooled, Some(1));
    let pi = tgt.count_label(1) as f64 / 100.0;
    for policy in [BandwidthPolicy::MinClassSize, BandwidthPolicy::PooledTotal] {
        let model = fit_supervised_with(&src, &tgt, &PluginSettings::default(), policy).unwrap();
        let h = model.bandwidth_used.get();
        let n_eff = match policy {
            BandwidthPolicy::MinClassSize => x0.len().min(x1.len()),
            BandwidthPolicy::PooledTotal => 200,
        };
        assert!((h - 0.5 * (n_eff as f64).powf(-1.0 / 6.0)).abs() < 1e-15);
        for p in probes() {
            let g1 = gaussian_kde(&x1, &p, h);
            let g0 = gaussian_kde(&x0, &p, h);
            let want = pi * g1 / (pi * g1 + (1.0 - pi) * g0);
            let got = model.eta_hat(&p).unwrap();
            assert!((got - want).abs() < 1e-12, "{p:?}: {got} vs {want}");
        }
    }
}

#[test]
fn label_swap_equivariance() {
    let src = source(150, 3);
    let tgt = target(60, 4);
    let s = PluginSettings::default();
    let a = fit_supervised(&src, &tgt, &s).unwrap();
    let b = fit_supervised(&src.relabeled(), &tgt.relabeled(), &s).unwrap();
    assert!((a.pi_q_hat + b.pi_q_hat - 1.0).abs() < 1e-15);
    let mut r = rng(5);
    for _ in 0..500 {
        let x: Vec<f64> = (0..4).map(|_| r.random_range(-3.0..3.0)).collect();
        let ea = a.eta_hat(&x).unwrap();
        let eb = b.eta_hat(&x).unwrap();
        assert!((0.0..=1.0).contains(&ea));
        assert!((ea - (1.0 - eb)).abs() < 1e-12, "{ea} vs {eb}");
    }
}

#[test]
fn target_only_model_is_kernel_regression() {
    // 1-D, η(x) = 0.2 left of 0 and 0.8 right of 0
    let mut r = rng(6);
    let n = 400;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..n {
        let x: f64 = r.random_range(-1.0..1.0);
        let p = if x < 0.0 { 0.2 } else { 0.8 };
        xs.push(vec![x]);
        ys.push(u8::from(r.random::<f64>() < p));
    }
    let tgt = labeled(xs.clone(), ys.clone());
    let empty = Dataset::empty(1, DomainTag::Source).unwrap();
    let s = PluginSettings::default();
    let model = fit_supervised_with(&empty, &tgt, &s, BandwidthPolicy::PooledTotal).unwrap();
    let h = bandwidth_rule(n, 1.0, 1, 0.5).unwrap();
    assert_eq!(model.bandwidth_used, h);
    let nw = NadarayaWatson::fit(&tgt, KernelSpec::gaussian(1).unwrap(), h).unwrap();
    for i in 0..=80 {
        let x = [-1.0 + 0.025 * f64::from(i)];
        let e = model.eta_hat(&x).unwrap();
        assert!((e - nw.estimate(&x).unwrap()).abs() < 1e-12);
        assert!((e - gaussian_nw(&xs, &ys, &x, h.get())).abs() < 1e-12);
        assert_eq!(model.classify(&x).unwrap(), nw.classify(&x).unwrap());
    }
}

#[test]
fn estimate_pi_examples() {
    let t = labeled(vec![vec![0.0]; 4], vec![1, 1, 0, 1]);
    assert_eq!(estimate_pi(&t).unwrap(), 0.75);
    let t = labeled(vec![vec![0.0]; 3], vec![0, 0, 0]);
    assert_eq!(estimate_pi(&t).unwrap(), 0.0);
    let big = generate(
        &GeneratorConfig::simulation_target(),
        100_000,
        DomainTag::Target,
        &mut rng(7),
    )
    .unwrap();
    assert!((estimate_pi(&big).unwrap() - 0.9).abs() < 0.004);
    let empty = Dataset::empty(2, DomainTag::Target).unwrap();
    assert!(matches!(estimate_pi(&empty), Err(Error::EmptyDataset)));
}

#[test]
fn classify_agrees_with_threshold() {
    let model = fit_supervised(&source(200, 8), &target(50, 9), &PluginSettings::default()).unwrap();
    let mut r = rng(10);
    let queries: Vec<f64> = (0..40_000).map(|_| r.random_range(-3.0..3.0)).collect();
    let batch = model.classify_many(&queries).unwrap();
    for (q, &c) in queries.chunks(4).zip(&batch) {
        let e = model.eta_hat(q).unwrap();
        assert_eq!(c, u8::from(e > 0.5));
        assert_eq!(model.classify(q).unwrap(), c);
    }
    assert_eq!(threshold(0.7), 1);
    assert_eq!(threshold(0.5), 0);
}

#[test]
fn all_ones_target_gives_constant_one() {
    let src = source(100, 11);
    let tgt = labeled(vec![vec![0.1; 4], vec![0.2; 4], vec![-0.3; 4]], vec![1, 1, 1]);
    let model = fit_supervised(&src, &tgt, &PluginSettings::default()).unwrap();
    assert_eq!(model.pi_q_hat, 1.0);
    for p in probes() {
        assert_eq!(model.eta_hat(&p).unwrap(), 1.0);
    }
}

#[test]
fn missing_class_is_an_error() {
    let a = labeled(vec![vec![0.0], vec![1.0]], vec![1, 1]);
    let b = labeled(vec![vec![0.5]], vec![1]);
    assert!(matches!(
        fit_supervised(&a, &b, &PluginSettings::default()),
        Err(Error::DegenerateClass(_))
    ));
    let c = labeled(vec![vec![0.5, 0.5]], vec![0]);
    assert!(matches!(
        fit_supervised(&a, &c, &PluginSettings::default()),
        Err(Error::DimensionMismatch { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn eta_in_unit_interval(seed: u64, x in prop::collection::vec(-6.0f64..6.0, 4)) {
        let model = fit_supervised(&source(40, seed), &target(20, seed ^ 0xABCD), &PluginSettings::default());
        if let Ok(m) = model {
            let e = m.eta_hat(&x).unwrap();
            prop_assert!((0.0..=1.0).contains(&e));
        }
    }
}

#[test]
fn source_sample_changes_the_estimate() {
    let tgt = target(80, 12);
    let s = PluginSettings::default();
    let a = fit_supervised(&source(80, 13), &tgt, &s).unwrap();
    let b = fit_supervised(&source(80, 14), &tgt, &s).unwrap();
    let differs = probes()
        .iter()
        .any(|p| (a.eta_hat(p).unwrap() - b.eta_hat(p).unwrap()).abs() > 1e-6);
    assert!(differs);
}
