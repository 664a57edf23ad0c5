//! Cyclic coordinate descent for the lasso in covariance form.
//!
//! The solver minimizes
//!
//! ```text
//! (1 / 2n) * ||y - X b||^2 + lambda * ||b||_1
//! ```
//!
//! given only the Gram matrix `G = X'X / n` and `c = X'y / n`. Any intercept
//! is handled by the caller through centering.
//!
//! Starting from the warm start's support, and again once a sweep leaves the
//! support and signs unchanged, the solver tries the closed-form solution on
//! that support. If it satisfies the KKT conditions it is the solution and
//! the run stops there; otherwise descent continues until a sweep's largest
//! change is below the tolerance.

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 10_000;
pub const TOLERANCE: f64 = 1e-9;

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Quadratic part of a lasso problem: `G = X'X / n` (row-major, `p x p`) and
/// `c = X'y / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramProblem {
    pub p: usize,
    pub gram: Vec<f64>,
    pub xty: Vec<f64>,
}

impl GramProblem {
    /// Builds `G` and `c` from a row-major `n x p` design.
    pub fn from_design(rows: &[Vec<f64>], y: &[f64]) -> Self {
        let n = rows.len() as f64;
        let p = rows.first().map_or(0, Vec::len);
        let mut gram = vec![0.0; p * p];
        let mut xty = vec![0.0; p];
        for (row, &yi) in rows.iter().zip(y) {
            for j in 0..p {
                xty[j] += row[j] * yi;
                for k in j..p {
                    gram[j * p + k] += row[j] * row[k];
                }
            }
        }
        for j in 0..p {
            xty[j] /= n;
            for k in j..p {
                gram[j * p + k] /= n;
                gram[k * p + j] = gram[j * p + k];
            }
        }
        GramProblem { p, gram, xty }
    }

    /// Smallest lambda at which every coefficient is zero.
    pub fn lambda_max(&self) -> f64 {
        self.xty.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Objective up to the constant `y'y / 2n`.
    pub fn objective(&self, coef: &[f64], lambda: f64) -> f64 {
        let p = self.p;
        let mut quad = 0.0;
        for j in 0..p {
            let gb: f64 = (0..p).map(|k| self.gram[j * p + k] * coef[k]).sum();
            quad += coef[j] * gb;
        }
        let lin: f64 = coef.iter().zip(&self.xty).map(|(b, c)| b * c).sum();
        let l1: f64 = coef.iter().map(|b| b.abs()).sum();
        0.5 * quad - lin + lambda * l1
    }

    /// `(1/n) x_j' r` for every coordinate, with `r = y - X b`.
    pub fn correlations(&self, coef: &[f64]) -> Vec<f64> {
        let p = self.p;
        (0..p)
            .map(|j| self.xty[j] - (0..p).map(|k| self.gram[j * p + k] * coef[k]).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub coef: Vec<f64>,
    pub sweeps: usize,
    /// Objective after each sweep, when requested.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_sweeps: usize,
    pub tolerance: f64,
    pub track_objective: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_sweeps: MAX_SWEEPS,
            tolerance: TOLERANCE,
            track_objective: false,
        }
    }
}

/// Scratch buffers for repeated solves; reuse one across calls to avoid
/// allocating per solve.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    gb: Vec<f64>,
    signs: Vec<i8>,
    active: Vec<usize>,
    chol: Vec<f64>,
    rhs: Vec<f64>,
    candidate: Vec<f64>,
    trace: Vec<f64>,
}

/// Coordinate descent from `warm` (or zero). Converged when the largest
/// coefficient change in a sweep is below the tolerance.
pub fn solve(
    problem: &GramProblem,
    lambda: f64,
    warm: Option<&[f64]>,
    opts: SolverOptions,
) -> Result<LassoSolution> {
    let mut coef = warm.map_or_else(|| vec![0.0; problem.p], <[f64]>::to_vec);
    let mut ws = Workspace::default();
    let sweeps = solve_in_place(problem, lambda, &mut coef, &mut ws, opts)?;
    Ok(LassoSolution {
        coef,
        sweeps,
        objective_trace: ws.trace,
    })
}

/// [`solve`] warm-started from `coef` and overwriting it. Returns the number
/// of sweeps.
pub fn solve_in_place(
    problem: &GramProblem,
    lambda: f64,
    coef: &mut [f64],
    ws: &mut Workspace,
    opts: SolverOptions,
) -> Result<usize> {
    let p = problem.p;
    let g = &problem.gram;
    // gb = G b, kept current as coordinates move
    ws.gb.resize(p, 0.0);
    refresh(g, p, coef, &mut ws.gb);
    ws.trace.clear();
    ws.signs.clear();
    ws.signs.resize(p, 0);
    let mut max_change = f64::INFINITY;
    let mut tried = false;
    if set_support(coef, &mut ws.signs) {
        tried = true;
        if try_support(problem, lambda, coef, ws) {
            return Ok(0);
        }
    }
    for sweep in 1..=opts.max_sweeps {
        max_change = 0.0;
        for (j, row) in g.chunks_exact(p.max(1)).enumerate() {
            let gjj = row[j];
            if gjj <= 0.0 {
                continue;
            }
            let old = coef[j];
            let rho = problem.xty[j] - ws.gb[j] + gjj * old;
            let new = soft_threshold(rho, lambda) / gjj;
            let delta = new - old;
            if delta != 0.0 {
                coef[j] = new;
                // G is symmetric, so row j doubles as column j
                for (v, gjk) in ws.gb.iter_mut().zip(row) {
                    *v += gjk * delta;
                }
                if delta.abs() > max_change {
                    max_change = delta.abs();
                }
            }
        }
        if opts.track_objective {
            ws.trace.push(problem.objective(coef, lambda));
        }
        if max_change < opts.tolerance {
            return Ok(sweep);
        }
        if set_support(coef, &mut ws.signs) {
            tried = false;
        } else if !tried {
            tried = true;
            if try_support(problem, lambda, coef, ws) {
                return Ok(sweep);
            }
        }
    }
    Err(Error::NonConvergence {
        sweeps: opts.max_sweeps,
        max_change,
    })
}

fn refresh(g: &[f64], p: usize, coef: &[f64], gb: &mut [f64]) {
    for (v, row) in gb.iter_mut().zip(g.chunks_exact(p.max(1))) {
        *v = row.iter().zip(coef).map(|(a, b)| a * b).sum();
    }
}

/// Writes the sign pattern of `coef` into `signs`; true if it changed.
fn set_support(coef: &[f64], signs: &mut [i8]) -> bool {
    let mut changed = false;
    for (s, &b) in signs.iter_mut().zip(coef) {
        let now = if b > 0.0 { 1 } else if b < 0.0 { -1 } else { 0 };
        if *s != now {
            *s = now;
            changed = true;
        }
    }
    changed
}

/// Replaces `coef` by the support solution when it passes the KKT check.
fn try_support(problem: &GramProblem, lambda: f64, coef: &mut [f64], ws: &mut Workspace) -> bool {
    let ok = support_solution(problem, lambda, ws);
    if ok {
        coef.copy_from_slice(&ws.candidate);
    }
    ok
}

/// Minimizer restricted to the support and signs in `ws.signs`,
/// `b_A = G_AA^{-1} (c_A - lambda s_A)`, left in `ws.candidate` when it
/// satisfies the full KKT conditions (and so is the lasso solution).
fn support_solution(problem: &GramProblem, lambda: f64, ws: &mut Workspace) -> bool {
    let p = problem.p;
    let g = &problem.gram;
    let signs = &ws.signs;
    ws.active.clear();
    ws.active.extend((0..p).filter(|&j| signs[j] != 0));
    let active = &ws.active;
    let m = active.len();
    if m == 0 || active.iter().any(|&j| g[j * p + j] <= 0.0) {
        return false;
    }
    // Cholesky of G_AA, lower triangle
    let l = &mut ws.chol;
    l.clear();
    l.resize(m * m, 0.0);
    for a in 0..m {
        for b in 0..=a {
            let mut s = g[active[a] * p + active[b]];
            for k in 0..b {
                s -= l[a * m + k] * l[b * m + k];
            }
            if a == b {
                if !(s > 1e-12) {
                    return false;
                }
                l[a * m + a] = s.sqrt();
            } else {
                l[a * m + b] = s / l[b * m + b];
            }
        }
    }
    let x = &mut ws.rhs;
    x.clear();
    x.extend(active.iter().map(|&j| problem.xty[j] - lambda * f64::from(signs[j])));
    for a in 0..m {
        let s: f64 = (0..a).map(|k| l[a * m + k] * x[k]).sum();
        x[a] = (x[a] - s) / l[a * m + a];
    }
    for a in (0..m).rev() {
        let s: f64 = (a + 1..m).map(|k| l[k * m + a] * x[k]).sum();
        x[a] = (x[a] - s) / l[a * m + a];
    }
    let coef = &mut ws.candidate;
    coef.clear();
    coef.resize(p, 0.0);
    for (&j, &v) in active.iter().zip(x.iter()) {
        if v == 0.0 || v.signum() != f64::from(signs[j]) {
            return false;
        }
        coef[j] = v;
    }
    let slack = 1e-12 * (1.0 + lambda);
    for (j, row) in g.chunks_exact(p).enumerate() {
        if signs[j] != 0 || row[j] <= 0.0 {
            continue;
        }
        let gb: f64 = active.iter().map(|&k| row[k] * coef[k]).sum();
        if (problem.xty[j] - gb).abs() > lambda + slack {
            return false;
        }
    }
    true
}
