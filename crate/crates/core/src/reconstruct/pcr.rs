//! Principal components of a standardized calibration matrix and the
//! least-squares regression of the target on the leading scores.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Components of a standardized `n x p` matrix, ordered by singular value.
#[derive(Debug, Clone)]
pub struct Components {
    /// `p x r` loadings, one orthonormal column per component.
    pub loadings: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

/// Numerical rank threshold relative to the largest singular value.
fn rank_tolerance(n: usize, p: usize, s_max: f64) -> f64 {
    n.max(p) as f64 * f64::EPSILON * s_max
}

/// Index of the first entry with the largest absolute value.
fn dominant_index(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

pub fn components(x: &DMatrix<f64>) -> Components {
    let (n, p) = x.shape();
    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let r = svd.singular_values.len();
    let mut order: Vec<(f64, usize, Vec<f64>)> = (0..r)
        .map(|i| {
            let mut v: Vec<f64> = v_t.row(i).iter().copied().collect();
            // sign convention: the dominant loading is positive
            let d = dominant_index(&v);
            if v[d] < 0.0 {
                v.iter_mut().for_each(|e| *e = -*e);
            }
            (svd.singular_values[i], d, v)
        })
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let s_max = order.first().map_or(0.0, |o| o.0);
    let tol = rank_tolerance(n, p, s_max);
    let rank = order.iter().filter(|o| o.0 > tol).count();
    let mut loadings = DMatrix::zeros(p, r);
    for (i, (_, _, v)) in order.iter().enumerate() {
        for (j, &e) in v.iter().enumerate() {
            loadings[(j, i)] = e;
        }
    }
    Components {
        loadings,
        singular_values: order.iter().map(|o| o.0).collect(),
        rank,
    }
}

/// Loadings of the first `k` components and the regression coefficient of
/// the centered target on each component score.
#[derive(Debug, Clone)]
pub struct PcrFit {
    pub loadings: DMatrix<f64>,
    pub gamma: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

pub fn fit(x: &DMatrix<f64>, y_centered: &[f64], k: usize) -> Result<PcrFit> {
    if k == 0 {
        return Err(Error::Config("number of components must be positive".into()));
    }
    let comps = components(x);
    if k > comps.rank {
        return Err(Error::RankExceeded { k, rank: comps.rank });
    }
    let loadings = comps.loadings.columns(0, k).into_owned();
    let scores = x * &loadings;
    let gamma = (0..k)
        .map(|i| {
            let t = scores.column(i);
            let ty: f64 = t.iter().zip(y_centered).map(|(a, b)| a * b).sum();
            ty / t.norm_squared()
        })
        .collect();
    Ok(PcrFit {
        loadings,
        gamma,
        singular_values: comps.singular_values,
        rank: comps.rank,
    })
}
