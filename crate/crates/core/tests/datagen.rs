mod common;

use common::{box_mass, normal_pdf, rng, simpson, Family, LOWER, MU1, UPPER};
use labelshift::datagen::{
    bayes_classify, generate, sample_truncnorm, true_eta, DomainTag, GeneratorConfig, TruncNormSpec,
};
use labelshift::Error;
use proptest::prelude::*;
use rand::Rng;

fn tn_mean_by_quadrature(mu: f64) -> f64 {
    simpson(|t| t * normal_pdf(t, mu), LOWER, UPPER, 20_000) / box_mass(mu)
}

fn sample_mean(mu: f64, n: usize, seed: u64) -> f64 {
    let spec = TruncNormSpec::new(mu, 1.0, LOWER, UPPER).unwrap();
    let mut r = rng(seed);
    (0..n).map(|_| sample_truncnorm(&spec, &mut r)).sum::<f64>() / n as f64
}

#[test]
fn truncnorm_sample_means() {
    let m0 = sample_mean(0.0, 1_000_000, 11);
    assert!(m0.abs() < 0.01, "{m0}");
    let exact = tn_mean_by_quadrature(MU1);
    assert!((exact - 0.4).abs() < 1e-6);
    let m1 = sample_mean(MU1, 1_000_000, 12);
    assert!((m1 - exact).abs() < 0.01, "{m1} vs {exact}");
}

#[test]
fn truncnorm_density_integrates_to_one() {
    for (mu, lo, hi) in [(0.0, -6.0, 6.0), (0.4, -6.0, 6.0), (1.0, -0.5, 2.0), (-3.0, 0.0, 1.0)] {
        let spec = TruncNormSpec::new(mu, 1.3, lo, hi).unwrap();
        let total = simpson(|t| spec.pdf(t), lo, hi, 20_000);
        assert!((total - 1.0).abs() < 1e-9, "mu={mu}: {total}");
    }
}

/// One-sample KS against a CDF obtained by integrating the density between
/// consecutive sorted draws.
fn ks_statistic(mut xs: Vec<f64>, mu: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let z = box_mass(mu);
    let n = xs.len() as f64;
    let mut cdf = simpson(|t| normal_pdf(t, mu), LOWER, xs[0], 2_000) / z;
    let mut d: f64 = 0.0;
    for i in 0..xs.len() {
        if i > 0 {
            cdf += simpson(|t| normal_pdf(t, mu), xs[i - 1], xs[i], 4) / z;
        }
        d = d.max((i as f64 + 1.0) / n - cdf).max(cdf - i as f64 / n);
    }
    d
}

#[test]
fn kolmogorov_smirnov_per_coordinate() {
    let n = 100_000;
    // asymptotic critical value at level 1e-3
    let critical = 1.949 / (n as f64).sqrt();
    for (label, mu) in [(0u8, 0.0), (1, MU1)] {
        let cfg = GeneratorConfig::simulation(if label == 1 { 0.999_999 } else { 1e-6 });
        let data = generate(&cfg, n, DomainTag::Source, &mut rng(20 + u64::from(label))).unwrap();
        for j in 0..4 {
            let col: Vec<f64> = data.samples().iter().filter(|s| s.y == label).map(|s| s.x[j]).collect();
            assert!(col.len() > n - 10);
            let d = ks_statistic(col, mu);
            assert!(d < critical, "label {label} coord {j}: D = {d}");
        }
    }
}

#[test]
fn label_frequencies_within_four_sigma() {
    let n = 100_000;
    for (pi, seed) in [(0.5, 1), (0.9, 2)] {
        let data = generate(&GeneratorConfig::simulation(pi), n, DomainTag::Target, &mut rng(seed)).unwrap();
        let freq = data.count_label(1) as f64 / n as f64;
        let sigma = (pi * (1.0 - pi) / n as f64).sqrt();
        assert!((freq - pi).abs() < 4.0 * sigma, "pi={pi}: {freq}");
    }
    let data = generate(&GeneratorConfig::simulation(0.5), n, DomainTag::Source, &mut rng(3)).unwrap();
    let freq = data.count_label(1) as f64 / n as f64;
    assert!((0.495..=0.505).contains(&freq));
}

#[test]
fn generation_is_deterministic_and_in_box() {
    let cfg = GeneratorConfig::simulation_target();
    let a = generate(&cfg, 500, DomainTag::Target, &mut rng(5)).unwrap();
    let b = generate(&cfg, 500, DomainTag::Target, &mut rng(5)).unwrap();
    assert_eq!(a, b);
    assert!(a.features().flatten().all(|&v| (LOWER..=UPPER).contains(&v)));
    assert!(matches!(
        generate(&cfg, 0, DomainTag::Target, &mut rng(5)),
        Err(Error::EmptyDataset)
    ));
}

#[test]
fn true_eta_matches_density_formula() {
    let fam = Family::new();
    let cfg = GeneratorConfig::simulation_target();
    let x = [0.4; 4];
    // mpmath, 40 digits
    let expected = 0.925_340_542_223_416_1;
    assert!((true_eta(&cfg, &x).unwrap() - expected).abs() < 1e-12);
    assert!((fam.eta(0.9, &x) - expected).abs() < 1e-12);

    let mut r = rng(9);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..4).map(|_| r.random_range(-4.0..4.0)).collect();
        for pi in [0.1, 0.5, 0.9] {
            let got = true_eta(&cfg.with_prior(pi), &x).unwrap();
            let want = fam.eta(pi, &x);
            assert!((got - want).abs() < 1e-12, "{x:?}: {got} vs {want}");
        }
    }
}

#[test]
fn bayes_label_at_minus_one() {
    // g1/g0 = e^{-1.92} (Z0/Z1)^4 > 1/9, so η ≈ 0.5689
    let cfg = GeneratorConfig::simulation_target();
    let x = [-1.0; 4];
    assert!((true_eta(&cfg, &x).unwrap() - 0.568_865_669_826_253_6).abs() < 1e-12);
    assert_eq!(bayes_classify(&cfg, &x).unwrap(), 1);
    assert_eq!(bayes_classify(&cfg, &[-1.6; 4]).unwrap(), 0);
}

#[test]
fn bayes_rule_is_likelihood_ratio_test() {
    let fam = Family::new();
    let mut r = rng(31);
    for pi in [0.5, 0.9] {
        let cfg = GeneratorConfig::simulation(pi);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..4).map(|_| r.random_range(-6.0..6.0)).collect();
            let ratio = fam.g(1, &x) / fam.g(0, &x);
            let want = u8::from(ratio > (1.0 - pi) / pi);
            assert_eq!(bayes_classify(&cfg, &x).unwrap(), want, "{x:?}");
        }
    }
}

#[test]
fn strongly_class_one_point() {
    let cfg = GeneratorConfig::simulation(0.5);
    assert_eq!(bayes_classify(&cfg, &[3.0; 4]).unwrap(), 1);
}

proptest! {
    #[test]
    fn eta_monotone_in_each_coordinate(
        x in prop::collection::vec(-5.5f64..5.5, 4),
        j in 0usize..4,
        step in 0.0f64..0.5,
        pi in 0.05f64..0.95,
    ) {
        let cfg = GeneratorConfig::simulation(pi);
        let mut y = x.clone();
        y[j] += step;
        let a = true_eta(&cfg, &x).unwrap();
        let b = true_eta(&cfg, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-15);
    }

    #[test]
    fn samples_stay_in_interval(mu in -3.0f64..3.0, sd in 0.3f64..3.0, lo in -5.0f64..0.0, width in 0.01f64..5.0, seed: u64) {
        let spec = TruncNormSpec::new(mu, sd, lo, lo + width).unwrap();
        let mut r = rng(seed);
        for _ in 0..50 {
            let v = sample_truncnorm(&spec, &mut r);
            prop_assert!(v >= lo && v <= lo + width);
        }
    }
}
