mod common;

use common::{ks_critical, ks_statistic};
use proxyskill::data::{ProxyNetwork, ProxySeries, YearAxis};
use proxyskill::noise::*;
use proxyskill::nullbench::*;
use proxyskill::reconstruct::{LambdaChoice, MethodSpec};
use proxyskill::stats::{mean, sample_sd};
use proxyskill::synthetic::white_null_setup;

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    sab / (saa * sbb).sqrt()
}

#[test]
fn ar1_with_zero_phi_looks_white() {
    let zero = NullModelSpec::ar1_fixed(0.0).unwrap();
    let mut white = Vec::new();
    let mut ar = Vec::new();
    // pool single draws across seeds so the samples are independent
    for t in 0..10_000u64 {
        white.push(gen_pseudoproxy(&NullModelSpec::White, None, 2, RngSeed::new(1, t)).unwrap()[0]);
        ar.push(gen_pseudoproxy(&zero, None, 2, RngSeed::new(2, t)).unwrap()[0]);
    }
    assert!(ks_statistic(&white, &ar) < ks_critical(white.len(), ar.len(), 0.01));
}

#[test]
fn pseudoproxies_are_standardized() {
    for spec in [NullModelSpec::White, NullModelSpec::ar1_fixed(0.7).unwrap()] {
        for seed in 0..5 {
            let x = gen_pseudoproxy(&spec, None, 500, RngSeed::new(seed, 3)).unwrap();
            assert!(mean(&x).abs() < 1e-10);
            assert!((sample_sd(&x) - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn raw_ar1_variance_is_stationary() {
    for phi in [0.0, 0.5, 0.9] {
        let params = Ar1Params::new(phi, 0.7).unwrap();
        let x = ar1_raw(params, 100_000, &mut RngSeed::new(9, 0).stream(0));
        let var = sample_sd(&x).powi(2);
        let expect = params.stationary_variance();
        assert!((var / expect - 1.0).abs() < 0.05, "phi {phi}: {var} vs {expect}");
    }
}

#[test]
fn generator_round_trip_at_point_nine() {
    let spec = NullModelSpec::ar1_fixed(0.9).unwrap();
    let x = gen_pseudoproxy(&spec, None, 5000, RngSeed::new(4, 0)).unwrap();
    assert!((fit_ar1(&x).unwrap().phi() - 0.9).abs() < 0.03);
}

#[test]
fn white_noise_lag_one_is_within_two_standard_errors() {
    let n = 10_000;
    let inside = (0..200u64)
        .filter(|&s| {
            let x = gen_pseudoproxy(&NullModelSpec::White, None, n, RngSeed::new(s, 0)).unwrap();
            fit_ar1(&x).unwrap().phi().abs() < 2.0 / (n as f64).sqrt()
        })
        .count();
    // about 95% expected; binomial sd over 200 seeds is 1.5%
    assert!(inside >= 180, "{inside} of 200");
}

fn ragged_network(n: usize, phis: &[f64]) -> ProxyNetwork {
    let series = phis
        .iter()
        .enumerate()
        .map(|(j, &phi)| {
            let params = Ar1Params::new(phi, 1.0).unwrap();
            let values = ar1_raw(params, n, &mut RngSeed::new(77, j as u64).stream(5));
            let mut available = vec![true; n];
            for a in available.iter_mut().take(j * 10) {
                *a = false;
            }
            let values = values.iter().zip(&available).map(|(v, a)| if *a { *v } else { 0.0 }).collect();
            ProxySeries {
                id: format!("r{j}"),
                values,
                available,
            }
        })
        .collect();
    ProxyNetwork::new(YearAxis::new(1000, n).unwrap(), series).unwrap()
}

#[test]
fn empirical_network_keeps_shape_and_phis() {
    let net = ragged_network(5000, &[0.1, 0.5, 0.9]);
    let generator = PseudoNetworkGenerator::new(&net, NullModelSpec::Ar1Empirical).unwrap();
    let pseudo = generator.generate(RngSeed::new(3, 1)).unwrap();
    assert_eq!(pseudo.axis(), net.axis());
    for ((a, b), phi) in pseudo.series().iter().zip(net.series()).zip([0.1, 0.5, 0.9]) {
        assert_eq!(a.available, b.available);
        let fitted = fit_ar1_masked(&a.values, &a.available).unwrap().phi();
        assert!((fitted - phi).abs() < 0.05, "{fitted} vs {phi}");
    }
    assert_eq!(pseudo, generator.generate(RngSeed::new(3, 1)).unwrap());
    assert_ne!(pseudo, generator.generate(RngSeed::new(3, 2)).unwrap());
}

#[test]
fn pseudo_columns_are_uncorrelated() {
    let columns: Vec<Vec<f64>> = (0..8).map(|_| vec![0.0; 5000]).collect();
    let net = common::network(1, columns);
    let pseudo = gen_pseudo_network(&net, NullModelSpec::ar1_fixed(0.5).unwrap(), RngSeed::new(5, 0)).unwrap();
    let s = pseudo.series();
    let mut total = 0.0;
    let mut pairs = 0;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            total += corr(&s[i].values, &s[j].values).abs();
            pairs += 1;
        }
    }
    assert!(total / (pairs as f64) < 0.05);
}

#[test]
fn wide_network_keeps_its_width() {
    let columns: Vec<Vec<f64>> = (0..93).map(|j| (0..50).map(|i| ((i * (j + 1)) % 7) as f64).collect()).collect();
    let net = common::network(1000, columns);
    let pseudo = gen_pseudo_network(&net, NullModelSpec::White, RngSeed::new(0, 0)).unwrap();
    assert_eq!(pseudo.n_columns(), 93);
}

fn lasso(lambda: f64) -> MethodSpec {
    MethodSpec::Lasso {
        lambda: LambdaChoice::Fixed(lambda),
    }
}

#[test]
fn single_trial_ensemble() {
    let (target, net) = white_null_setup(4, 40, 1).unwrap();
    let e = run_null_ensemble(&net, &target, lasso(0.05), NullModelSpec::White, 1, 10, 3, Aggregation::MeanOverSplits).unwrap();
    assert_eq!(e.re_values.len(), 1);
    let v = e.re_values[0];
    assert_eq!((e.percentiles.p50, e.percentiles.p95, e.percentiles.p99), (v, v, v));
}

#[test]
fn ensembles_are_deterministic() {
    let (target, net) = white_null_setup(4, 40, 2).unwrap();
    let run = |seed| {
        run_null_ensemble(&net, &target, lasso(0.05), NullModelSpec::ar1_fixed(0.3).unwrap(), 30, 10, seed, Aggregation::PerSplit).unwrap()
    };
    assert_eq!(run(8), run(8));
    assert_ne!(run(8), run(9));
}

#[test]
fn intercept_method_gives_zero_everywhere() {
    let (target, net) = white_null_setup(3, 40, 3).unwrap();
    let e = run_null_ensemble(&net, &target, MethodSpec::Intercept, NullModelSpec::White, 20, 10, 0, Aggregation::PerSplit).unwrap();
    assert!(e.re_values.iter().all(|v| *v == 0.0));
    assert_eq!((e.percentiles.p50, e.percentiles.p95, e.percentiles.p99), (0.0, 0.0, 0.0));
}

#[test]
fn aggregation_modes_have_expected_sizes() {
    let (target, net) = white_null_setup(3, 40, 4).unwrap();
    let per = run_null_ensemble(&net, &target, lasso(0.1), NullModelSpec::White, 5, 10, 0, Aggregation::PerSplit).unwrap();
    assert_eq!(per.re_values.len(), 5 * 31);
    let end = run_null_ensemble(&net, &target, lasso(0.1), NullModelSpec::White, 5, 10, 0, Aggregation::EndpointOnly).unwrap();
    assert_eq!(end.re_values.len(), 5);
    for (t, v) in end.re_values.iter().enumerate() {
        let window = &per.re_values[t * 31..(t + 1) * 31];
        assert!((v - 0.5 * (window[0] + window[30])).abs() < 1e-15);
    }
}

#[test]
fn white_and_zero_phi_families_agree() {
    let (target, net) = white_null_setup(5, 60, 5).unwrap();
    let cmp = compare_null_families(
        &net,
        &target,
        lasso(0.1),
        &[NullModelSpec::White, NullModelSpec::ar1_fixed(0.0).unwrap()],
        600,
        20,
        11,
        Aggregation::MeanOverSplits,
    )
    .unwrap();
    let a = &cmp.families[0].ensemble.re_values;
    let b = &cmp.families[1].ensemble.re_values;
    assert!(ks_statistic(a, b) < ks_critical(a.len(), b.len(), 0.01));
    let reports = cmp.reports();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0].per_family_boxplots.len(), 2);
    for r in &reports {
        assert_eq!(r.verdict.significant95, r.re_proxy > r.percentiles.p95);
        assert_eq!(r.verdict.significant99, r.re_proxy > r.percentiles.p99);
    }
}

#[test]
fn comparison_needs_two_families() {
    let (target, net) = white_null_setup(3, 40, 6).unwrap();
    let err = compare_null_families(&net, &target, lasso(0.1), &[NullModelSpec::White], 5, 10, 0, Aggregation::PerSplit);
    assert!(err.is_err());
}

#[test]
fn percentile_examples() {
    let v: Vec<f64> = (1..=100).map(f64::from).collect();
    assert_eq!(percentile(&v, 0.95).unwrap(), 95.0);
    assert_eq!(percentile(&v, 0.99).unwrap(), 99.0);
    assert_eq!(percentile(&[7.0], 0.3).unwrap(), 7.0);
}
