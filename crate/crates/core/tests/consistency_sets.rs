mod common;

use proxyskill::consistency::*;
use proxyskill::synthetic::calibration_sim;
use rand::Rng;

fn opts() -> ConsistencyOptions {
    ConsistencyOptions::default()
}

#[test]
fn vertex_minimum_matches_dense_grid() {
    let sim = calibration_sim(4, 60, 200, false, 1).unwrap();
    let fit = fit_calibration(&sim.network, &sim.target, &sim.calib_years, CovarianceMode::Diagonal).unwrap();
    for &year in sim.backcast_years.iter().take(50) {
        let row: Vec<f64> = (0..4).map(|c| sim.network.get(c, year).unwrap()).collect();
        let q = misfit(&fit, &row).unwrap();
        let set = consistency_set(&fit, year, &row, &opts()).unwrap();
        // grid over [-50, 50], refined around the best node
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=100_000 {
            let xi = -50.0 + i as f64 * 1e-3;
            let v = q.eval(xi);
            if v < best.0 {
                best = (v, xi);
            }
        }
        for i in 0..=2000 {
            let xi = best.1 - 1e-3 + i as f64 * 1e-6;
            best.0 = best.0.min(q.eval(xi));
        }
        assert!((set.statistic_min - best.0).abs() < 1e-9, "{} vs {}", set.statistic_min, best.0);
        assert!(set.statistic_min >= 0.0);
    }
}

#[test]
fn interval_endpoints_sit_on_the_critical_level() {
    let sim = calibration_sim(5, 100, 300, false, 2).unwrap();
    for mode in [CovarianceMode::Diagonal, CovarianceMode::Full] {
        let fit = fit_calibration(&sim.network, &sim.target, &sim.calib_years, mode).unwrap();
        let c = critical_value(5, fit.calib_size, &opts()).unwrap();
        for &year in &sim.backcast_years {
            let row: Vec<f64> = (0..5).map(|j| sim.network.get(j, year).unwrap()).collect();
            let set = consistency_set(&fit, year, &row, &opts()).unwrap();
            let q = misfit(&fit, &row).unwrap();
            if set.set_kind == SetKind::Interval {
                let (lo, hi) = (set.lo.unwrap(), set.hi.unwrap());
                assert!(lo <= hi);
                assert!((q.eval(lo) - c).abs() < 1e-6);
                assert!((q.eval(hi) - c).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn shifting_the_target_shifts_the_sets() {
    let sim = calibration_sim(3, 80, 100, false, 3).unwrap();
    let shift = 2.5;
    let moved = sim.target.map_values(|v| v + shift).unwrap();
    let a = fit_calibration(&sim.network, &sim.target, &sim.calib_years, CovarianceMode::Diagonal).unwrap();
    let b = fit_calibration(&sim.network, &moved, &sim.calib_years, CovarianceMode::Diagonal).unwrap();
    let pa = backcast_consistency_profile(&a, &sim.network, &sim.backcast_years, &opts()).unwrap();
    let pb = backcast_consistency_profile(&b, &sim.network, &sim.backcast_years, &opts()).unwrap();
    for (x, y) in pa.sets.iter().zip(&pb.sets) {
        assert_eq!(x.set_kind, y.set_kind);
        assert!((x.statistic_min - y.statistic_min).abs() < 1e-9);
        if let (Some(l1), Some(l2)) = (x.lo, y.lo) {
            assert!((l1 + shift - l2).abs() < 1e-9);
            assert!((x.hi.unwrap() + shift - y.hi.unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn identical_rows_give_identical_sets() {
    let sim = calibration_sim(3, 50, 10, false, 4).unwrap();
    let fit = fit_calibration(&sim.network, &sim.target, &sim.calib_years, CovarianceMode::Diagonal).unwrap();
    let row = [0.3, -0.2, 1.1];
    let a = consistency_set(&fit, 1, &row, &opts()).unwrap();
    let b = consistency_set(&fit, 2, &row, &opts()).unwrap();
    assert_eq!((a.statistic_min, a.lo, a.hi, a.set_kind), (b.statistic_min, b.lo, b.hi, b.set_kind));
}

#[test]
fn row_on_the_calibration_line_has_zero_misfit() {
    let sim = calibration_sim(3, 50, 10, false, 5).unwrap();
    let fit = fit_calibration(&sim.network, &sim.target, &sim.calib_years, CovarianceMode::Diagonal).unwrap();
    let xi = 0.7;
    let row: Vec<f64> = (0..3).map(|j| fit.intercepts[j] + fit.slopes[j] * xi).collect();
    let set = consistency_set(&fit, 1, &row, &opts()).unwrap();
    assert!(set.statistic_min.abs() < 1e-12);
    assert!((set.estimate.unwrap() - xi).abs() < 1e-12);
    assert!(set.lo.unwrap() <= xi && xi <= set.hi.unwrap());
}

#[test]
fn exact_multiple_of_target_is_degenerate() {
    let mut r = common::rng(6);
    let t = common::normals(&mut r, 30);
    let noisy: Vec<f64> = t.iter().map(|v| v + r.gen_range(-1.0..1.0)).collect();
    let net = common::network(1, vec![t.iter().map(|v| 2.0 * v).collect(), noisy]);
    let target = common::target(1, t);
    let years: Vec<i32> = (1..=30).collect();
    let fit = fit_calibration(&net, &target, &years, CovarianceMode::Diagonal).unwrap();
    assert!((fit.slopes[0] - 2.0).abs() < 1e-12);
    assert!(fit.intercepts[0].abs() < 1e-12);
    assert_eq!(fit.degenerate, vec!["x0".to_string()]);
}

#[test]
fn independent_proxy_has_small_slope() {
    let mut within = 0;
    for seed in 0..100 {
        let mut r = common::rng(1000 + seed);
        let n = 400;
        let t = common::normals(&mut r, n);
        let x = common::normals(&mut r, n);
        let fit = fit_calibration(
            &common::network(1, vec![x]),
            &common::target(1, t.clone()),
            &(1..=n as i32).collect::<Vec<_>>(),
            CovarianceMode::Diagonal,
        )
        .unwrap();
        let var_t = proxyskill::stats::sample_sd(&t).powi(2) * (n - 1) as f64;
        let se = (fit.covariance[(0, 0)] / var_t).sqrt();
        if fit.slopes[0].abs() < 2.0 * se {
            within += 1;
        }
    }
    assert!(within >= 88, "{within} of 100");
}

#[test]
fn unit_noise_variances_are_recovered() {
    let mut r = common::rng(8);
    let n = 500;
    let t = common::normals(&mut r, n);
    let cols = (0..2)
        .map(|_| t.iter().zip(common::normals(&mut r, n)).map(|(a, e)| a + e).collect())
        .collect();
    let fit = fit_calibration(
        &common::network(1, cols),
        &common::target(1, t),
        &(1..=n as i32).collect::<Vec<_>>(),
        CovarianceMode::Diagonal,
    )
    .unwrap();
    for j in 0..2 {
        assert!((fit.covariance[(j, j)] - 1.0).abs() < 0.1);
    }
}

/// Coverage pooled over independent calibration draws; a single draw's
/// coverage is conditional on its estimated slopes and scatters by ~1.5 pp.
#[test]
fn correctly_specified_sets_cover_the_truth() {
    let (mut covered, mut total, mut intervals) = (0, 0, 0);
    for seed in 0..10 {
        let sim = calibration_sim(5, 100, 5000, false, 900 + seed).unwrap();
        let fit = fit_calibration(&sim.network, &sim.target, &sim.calib_years, CovarianceMode::Diagonal).unwrap();
        let profile = backcast_consistency_profile(&fit, &sim.network, &sim.backcast_years, &opts()).unwrap();
        covered += profile
            .sets
            .iter()
            .filter(|s| {
                let truth = sim.truth[(s.year - 1) as usize];
                s.set_kind == SetKind::Interval && s.lo.unwrap() <= truth && truth <= s.hi.unwrap()
            })
            .count();
        total += profile.sets.len();
        intervals += profile.totals.interval;
    }
    let rate = covered as f64 / total as f64;
    assert!((rate - 0.95).abs() <= 0.02, "coverage {rate}");
    assert!(intervals as f64 >= 0.9 * total as f64);
}

#[test]
fn opposite_sign_network_is_mostly_inconsistent() {
    let sim = calibration_sim(6, 100, 2000, true, 10).unwrap();
    let fit = fit_calibration(&sim.network, &sim.target, &sim.calib_years, CovarianceMode::Diagonal).unwrap();
    let profile = backcast_consistency_profile(&fit, &sim.network, &sim.backcast_years, &opts()).unwrap();
    let bad = profile.totals.empty + profile.totals.unbounded;
    assert!(bad * 2 > profile.totals.total());
}

#[test]
fn century_counts_add_up() {
    let sim = calibration_sim(3, 60, 450, false, 11).unwrap();
    let fit = fit_calibration(&sim.network, &sim.target, &sim.calib_years, CovarianceMode::Diagonal).unwrap();
    let profile = backcast_consistency_profile(&fit, &sim.network, &sim.backcast_years, &opts()).unwrap();
    let sum: usize = profile.by_century.values().map(|k| k.total()).sum();
    assert_eq!(sum, 450);
    assert_eq!(profile.totals.total(), 450);
    assert_eq!(profile.by_century.keys().copied().collect::<Vec<_>>(), vec![0, 100, 200, 300, 400]);
}
