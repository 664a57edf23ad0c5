#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proxyskill::data::{ProxyNetwork, ProxySeries, TargetSeries, YearAxis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

/// Complete network from column vectors on an axis starting at `start`.
pub fn network(start: i32, columns: Vec<Vec<f64>>) -> ProxyNetwork {
    let n = columns[0].len();
    let series = columns
        .into_iter()
        .enumerate()
        .map(|(j, v)| ProxySeries::complete(format!("x{j}"), v))
        .collect();
    ProxyNetwork::new(YearAxis::new(start, n).unwrap(), series).unwrap()
}

pub fn target(start: i32, values: Vec<f64>) -> TargetSeries {
    TargetSeries::new(YearAxis::new(start, values.len()).unwrap(), values).unwrap()
}

/// Random regression instance: `p` correlated columns and a noisy linear
/// target, on years `1..=n`.
pub struct Instance {
    pub net: ProxyNetwork,
    pub target: TargetSeries,
    pub years: Vec<i32>,
}

pub fn instance(n: usize, p: usize, seed: u64) -> Instance {
    let mut r = rng(seed);
    let common = normals(&mut r, n);
    let columns: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            let loading: f64 = r.gen_range(-1.0..1.0);
            let scale: f64 = r.gen_range(0.5..3.0);
            let shift: f64 = r.gen_range(-5.0..5.0);
            normals(&mut r, n)
                .iter()
                .zip(&common)
                .map(|(e, c)| shift + scale * (e + loading * c))
                .collect()
        })
        .collect();
    let beta: Vec<f64> = (0..p).map(|_| r.gen_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 0.3 + (0..p).map(|j| beta[j] * columns[j][i]).sum::<f64>() + 0.5 * r.sample::<f64, _>(StandardNormal))
        .collect();
    Instance {
        net: network(1, columns),
        target: target(1, y),
        years: (1..=n as i32).collect(),
    }
}

/// Ordinary least squares with intercept by the normal equations. Returns
/// `(intercept, slopes)` in raw units.
pub fn ols(net: &ProxyNetwork, target: &TargetSeries, years: &[i32]) -> (f64, Vec<f64>) {
    let p = net.n_columns();
    let n = years.len();
    let x = DMatrix::from_fn(n, p + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            net.get(j - 1, years[i]).unwrap()
        }
    });
    let y = DVector::from_vec(target.values_for(years).unwrap());
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;
    let b = xtx.cholesky().expect("full rank").solve(&xty);
    (b[0], b.iter().skip(1).copied().collect())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value.
pub fn ks_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n * m) as f64).sqrt()
}
