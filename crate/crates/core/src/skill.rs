//! Holdout RMSE and RE (reduction of error) over every contiguous holdout
//! window of the instrumental overlap.
//!
//! For each window the reconstruction method and the calibration-mean
//! predictor are both refit on the complementary years, and
//!
//! ```text
//! RE = 1 - rmse_model / rmse_intercept
//! ```
//!
//! is recorded. Windows whose intercept RMSE is zero have no RE; they are
//! kept in the result list but left out of summaries.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{enumerate_splits, Position, ProxyNetwork, SplitSpec, TargetSeries, YearAxis};
use crate::error::{Error, Result};
use crate::reconstruct::lasso::{self, GramProblem, SolverOptions};
use crate::reconstruct::{fit_intercept, fit_method, predict, LambdaChoice, MethodSpec};
use crate::stats::BoxplotSummary;

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ss: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}

pub fn re_statistic(rmse_model: f64, rmse_intercept: f64) -> Result<f64> {
    if rmse_intercept <= 0.0 {
        return Err(Error::DegenerateIntercept);
    }
    Ok(1.0 - rmse_model / rmse_intercept)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutResult {
    pub split: SplitSpec,
    pub rmse_model: f64,
    pub rmse_intercept: f64,
    /// `None` when `rmse_intercept` is zero.
    pub re: Option<f64>,
    pub method: String,
}

impl HoldoutResult {
    fn new(split: SplitSpec, rmse_model: f64, rmse_intercept: f64, method: String) -> Self {
        HoldoutResult {
            split,
            rmse_model,
            rmse_intercept,
            re: re_statistic(rmse_model, rmse_intercept).ok(),
            method,
        }
    }

    pub fn position(&self) -> Position {
        self.split.position
    }
}

pub fn write_results_csv<W: Write>(results: &[HoldoutResult], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::InvalidData(e.to_string());
    wtr.write_record([
        "holdout_start",
        "holdout_length",
        "position",
        "rmse_model",
        "rmse_intercept",
        "re",
        "method",
    ])
    .map_err(io)?;
    for r in results {
        wtr.write_record([
            r.split.holdout_start.to_string(),
            r.split.holdout_length.to_string(),
            r.split.position.as_str().to_owned(),
            r.rmse_model.to_string(),
            r.rmse_intercept.to_string(),
            r.re.map(|v| v.to_string()).unwrap_or_default(),
            r.method.clone(),
        ])
        .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::InvalidData(e.to_string()))
}

/// Years, splits and usable columns for sweeping one target; reusable
/// across networks that share the template's shape and mask (pseudoproxy
/// networks).
#[derive(Debug, Clone)]
pub struct SweepPlan {
    method: MethodSpec,
    overlap: YearAxis,
    splits: Vec<SplitSpec>,
    target: TargetSeries,
    /// Columns of the template complete on the overlap.
    columns: Vec<usize>,
}

impl SweepPlan {
    pub fn new(net: &ProxyNetwork, target: &TargetSeries, method: MethodSpec, holdout_length: usize) -> Result<Self> {
        let overlap = net.axis().intersect(&target.axis()).ok_or_else(|| {
            Error::InvalidData("proxy network and target share fewer than two years".into())
        })?;
        let splits = enumerate_splits(&overlap, holdout_length)?;
        let columns = net.complete_columns(&overlap.years());
        if columns.is_empty() && !matches!(method, MethodSpec::Intercept) {
            return Err(Error::NoUsableProxies);
        }
        Ok(SweepPlan {
            method,
            overlap,
            splits,
            target: target.clone(),
            columns,
        })
    }

    pub fn overlap(&self) -> YearAxis {
        self.overlap
    }

    pub fn splits(&self) -> &[SplitSpec] {
        &self.splits
    }

    pub fn method(&self) -> MethodSpec {
        self.method
    }

    pub fn target(&self) -> &TargetSeries {
        &self.target
    }

    /// Sweeps `net`. A fixed-penalty lasso uses running calibration moments;
    /// every other method refits from the data on each split.
    pub fn run(&self, net: &ProxyNetwork) -> Result<Vec<HoldoutResult>> {
        match self.method {
            MethodSpec::Lasso {
                lambda: LambdaChoice::Fixed(lambda),
            } => {
                let label = self.method.to_string();
                Ok(self
                    .run_lasso_moments(net, lambda)?
                    .into_iter()
                    .map(|o| HoldoutResult::new(o.split, o.rmse_model, o.rmse_intercept, label.clone()))
                    .collect())
            }
            _ => self.run_refit(net),
        }
    }

    /// Same sweep as [`SweepPlan::run`] without the per-window method label.
    pub fn outcomes(&self, net: &ProxyNetwork) -> Result<Vec<SplitOutcome>> {
        match self.method {
            MethodSpec::Lasso {
                lambda: LambdaChoice::Fixed(lambda),
            } => self.run_lasso_moments(net, lambda),
            _ => Ok(self.run_refit(net)?.iter().map(SplitOutcome::from).collect()),
        }
    }

    /// Refits the method and the intercept model from the data on every split.
    pub fn run_refit(&self, net: &ProxyNetwork) -> Result<Vec<HoldoutResult>> {
        let sub = net.select(&self.columns)?;
        let label = self.method.to_string();
        self.splits
            .par_iter()
            .map(|split| {
                let calib = split.calibration_years(&self.overlap);
                let holdout = split.holdout_years();
                let truth = self.target.values_for(&holdout)?;
                let model = fit_method(&self.method, &sub, &self.target, &calib)?;
                let null = fit_intercept(&self.target, &calib)?;
                let rm = rmse(&predict(&model, &sub, &holdout)?.values, &truth)?;
                let ri = rmse(&predict(&null, &sub, &holdout)?.values, &truth)?;
                Ok(HoldoutResult::new(*split, rm, ri, label.clone()))
            })
            .collect::<Vec<Result<_>>>()
            .into_iter()
            .zip(&self.splits)
            .map(|(r, s)| r.map_err(|e| e.at_split(s.holdout_start)))
            .collect()
    }

    fn run_lasso_moments(&self, net: &ProxyNetwork, lambda: f64) -> Result<Vec<SplitOutcome>> {
        if !(lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be non-negative, got {lambda}")));
        }
        let mut moments = Moments::new(net, &self.columns, &self.target, &self.overlap)?;
        let mut out = Vec::with_capacity(self.splits.len());
        // each split warm-starts from the previous one's coefficients
        for split in &self.splits {
            let start = (split.holdout_start - self.overlap.start()) as usize;
            moments.set_window(start, split.holdout_length);
            moments.fit(lambda).map_err(|e| e.at_split(split.holdout_start))?;
            let (rm, ri) = moments.holdout_rmse();
            out.push(SplitOutcome {
                split: *split,
                rmse_model: rm,
                rmse_intercept: ri,
                re: re_statistic(rm, ri).ok(),
            });
        }
        Ok(out)
    }
}

/// One window's RMSEs and RE, without the method label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOutcome {
    pub split: SplitSpec,
    pub rmse_model: f64,
    pub rmse_intercept: f64,
    pub re: Option<f64>,
}

impl From<&HoldoutResult> for SplitOutcome {
    fn from(r: &HoldoutResult) -> Self {
        SplitOutcome {
            split: r.split,
            rmse_model: r.rmse_model,
            rmse_intercept: r.rmse_intercept,
            re: r.re,
        }
    }
}

/// Sweeps every holdout window of `holdout_length` years over the overlap of
/// `net` and `target`. Results are ordered by holdout start.
pub fn holdout_sweep(
    net: &ProxyNetwork,
    target: &TargetSeries,
    method: MethodSpec,
    holdout_length: usize,
) -> Result<Vec<HoldoutResult>> {
    SweepPlan::new(net, target, method, holdout_length)?.run(net)
}

/// Calibration-complement moments of the proxies and target, maintained
/// for a sliding holdout window.
///
/// Inputs are pre-scaled by their full-overlap mean and sd so the sums stay
/// well conditioned; per-split standardization undoes that scaling.
struct Moments {
    p: usize,
    ids: Vec<String>,
    n_total: usize,
    /// Pre-scaled proxies, row-major `n_total x p`.
    x: Vec<f64>,
    /// Pre-centered target.
    y: Vec<f64>,
    totals: Sums,
    /// Sums over the calibration rows, i.e. everything outside the window.
    calib: Sums,
    window_start: usize,
    window_len: usize,
    /// Reused between splits.
    problem: GramProblem,
    solver: lasso::Workspace,
    /// Current fit: standardized coefficients and calibration moments.
    coef: Vec<f64>,
    x_mean: Vec<f64>,
    x_sd: Vec<f64>,
    y_mean: f64,
    y_sd: f64,
    scale: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Clone)]
struct Sums {
    x: Vec<f64>,
    /// Row-major cross products; only the upper triangle is filled.
    xx: Vec<f64>,
    y: f64,
    yy: f64,
    xy: Vec<f64>,
}

impl Sums {
    fn zero(p: usize) -> Self {
        Sums {
            x: vec![0.0; p],
            xx: vec![0.0; p * p],
            y: 0.0,
            yy: 0.0,
            xy: vec![0.0; p],
        }
    }

    fn add(&mut self, row: &[f64], y: f64, sign: f64) {
        let p = row.len();
        let rows = self.xx.chunks_exact_mut(p.max(1));
        for (j, (((sx, sxy), xx), &r)) in self.x.iter_mut().zip(&mut self.xy).zip(rows).zip(row).enumerate() {
            let v = sign * r;
            *sx += v;
            *sxy += v * y;
            // upper triangle only
            for (s, r) in xx[j..].iter_mut().zip(&row[j..]) {
                *s += v * r;
            }
        }
        self.y += sign * y;
        self.yy += sign * y * y;
    }

    /// Adds row `a` and removes row `b` in one pass.
    fn exchange(&mut self, a: &[f64], ya: f64, b: &[f64], yb: f64) {
        let p = self.x.len();
        let (a, b) = (&a[..p], &b[..p]);
        for j in 0..p {
            let (u, v) = (a[j], b[j]);
            self.x[j] += u - v;
            self.xy[j] += u * ya - v * yb;
            let xx = &mut self.xx[j * p..(j + 1) * p];
            for k in j..p {
                xx[k] += u * a[k] - v * b[k];
            }
        }
        self.y += ya - yb;
        self.yy += ya * ya - yb * yb;
    }
}

impl Moments {
    fn new(net: &ProxyNetwork, columns: &[usize], target: &TargetSeries, overlap: &YearAxis) -> Result<Self> {
        let p = columns.len();
        let n = overlap.len();
        let first = net
            .axis()
            .index_of(overlap.start())
            .ok_or(Error::YearOutOfRange(overlap.start()))?;
        if first + n > net.axis().len() {
            return Err(Error::YearOutOfRange(overlap.end()));
        }
        let yv = target.values_for(&overlap.years())?;
        let mut x = vec![0.0; n * p];
        // column-major copy for the totals
        let mut cols = vec![0.0; n * p];
        for (j, &c) in columns.iter().enumerate() {
            let s = &net.series()[c];
            if let Some(i) = s.available[first..first + n].iter().position(|a| !a) {
                return Err(Error::MissingPredictor {
                    id: s.id.clone(),
                    year: overlap.year_at(i),
                });
            }
            let col = &s.values[first..first + n];
            let m = crate::stats::mean(col);
            let sd = crate::stats::sample_sd(col);
            let scale = if sd > 0.0 { sd } else { 1.0 };
            let dest = &mut cols[j * n..(j + 1) * n];
            for (i, (d, v)) in dest.iter_mut().zip(col).enumerate() {
                *d = (v - m) / scale;
                x[i * p + j] = *d;
            }
        }
        let y_shift = crate::stats::mean(&yv);
        let y: Vec<f64> = yv.iter().map(|v| v - y_shift).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        let mut totals = Sums::zero(p);
        for (j, a) in cols.chunks_exact(n.max(1)).enumerate() {
            totals.x[j] = a.iter().sum();
            totals.xy[j] = dot(a, &y);
            for (k, b) in cols.chunks_exact(n.max(1)).enumerate().skip(j) {
                totals.xx[j * p + k] = dot(a, b);
            }
        }
        totals.y = y.iter().sum();
        totals.yy = dot(&y, &y);
        Ok(Moments {
            p,
            ids: columns.iter().map(|&c| net.series()[c].id.clone()).collect(),
            n_total: n,
            x,
            y,
            calib: totals.clone(),
            totals,
            window_start: 0,
            window_len: 0,
            problem: GramProblem {
                p,
                gram: vec![0.0; p * p],
                xty: vec![0.0; p],
            },
            solver: lasso::Workspace::default(),
            coef: vec![0.0; p],
            x_mean: vec![0.0; p],
            x_sd: vec![0.0; p],
            y_mean: 0.0,
            y_sd: 0.0,
            scale: vec![0.0; p],
            weights: vec![0.0; p],
        })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    /// Moves the holdout window, sliding by one row when possible.
    fn set_window(&mut self, start: usize, len: usize) {
        if len == self.window_len && start == self.window_start + 1 && self.window_len > 0 {
            let (old, new) = (self.window_start, start + len - 1);
            let p = self.p;
            let (a, b) = (&self.x[old * p..(old + 1) * p], &self.x[new * p..(new + 1) * p]);
            self.calib.exchange(a, self.y[old], b, self.y[new]);
        } else {
            let mut c = std::mem::replace(&mut self.calib, Sums::zero(0));
            c.clone_from(&self.totals);
            for i in start..start + len {
                c.add(self.row(i), self.y[i], -1.0);
            }
            self.calib = c;
        }
        self.window_start = start;
        self.window_len = len;
    }

    /// Fits the lasso on the calibration complement of the window,
    /// warm-started from the previous fit.
    fn fit(&mut self, lambda: f64) -> Result<()> {
        let p = self.p;
        let n = (self.n_total - self.window_len) as f64;
        if n < 2.0 {
            return Err(Error::TooFewObservations {
                id: "calibration".into(),
                available: n as usize,
            });
        }
        let c = &self.calib;
        for j in 0..p {
            let m = c.x[j] / n;
            let var = (c.xx[j * p + j] - n * m * m) / (n - 1.0);
            if !(var > 0.0) {
                return Err(Error::ZeroVariance {
                    id: self.ids[j].clone(),
                });
            }
            self.x_mean[j] = m;
            self.x_sd[j] = var.sqrt();
        }
        let y_mean = c.y / n;
        let y_var = (c.yy - n * y_mean * y_mean) / (n - 1.0);
        self.y_mean = y_mean;
        self.y_sd = if y_var > 0.0 { y_var.sqrt() } else { 0.0 };
        if self.y_sd == 0.0 {
            self.coef.fill(0.0);
            return Ok(());
        }
        // rescaled moments: x_j / (sqrt(n) sd_j), so G is built without divisions
        for (s, sd) in self.scale.iter_mut().zip(&self.x_sd) {
            *s = 1.0 / (n.sqrt() * sd);
        }
        let (x_mean, scale) = (&self.x_mean, &self.scale);
        let gram = &mut self.problem.gram;
        let (gram, cxx) = (&mut gram[..p * p], &c.xx[..p * p]);
        let (x_mean, scale) = (&x_mean[..p], &scale[..p]);
        for j in 0..p {
            let (a, sj) = (n * x_mean[j], scale[j]);
            for k in j..p {
                let g = (cxx[j * p + k] - a * x_mean[k]) * sj * scale[k];
                gram[j * p + k] = g;
                gram[k * p + j] = g;
            }
        }
        let ys = 1.0 / (n.sqrt() * self.y_sd);
        for (((v, &cxy), &m), &sj) in self.problem.xty.iter_mut().zip(&c.xy).zip(x_mean).zip(scale) {
            *v = (cxy - n * m * y_mean) * sj * ys;
        }
        lasso::solve_in_place(&self.problem, lambda, &mut self.coef, &mut self.solver, SolverOptions::default())?;
        Ok(())
    }

    /// RMSE of the current fit and of the calibration mean on the window.
    ///
    /// With `e = y - y_mean` and `s = w . x - offset` the model residual is
    /// `e - s`, so its sum of squares only needs the window's moments, which
    /// are the totals minus the calibration sums.
    fn holdout_rmse(&mut self) -> (f64, f64) {
        let p = self.p;
        for ((w, b), sd) in self.weights.iter_mut().zip(&self.coef).zip(&self.x_sd) {
            *w = self.y_sd * b / sd;
        }
        let w = &self.weights;
        let offset: f64 = w.iter().zip(&self.x_mean).map(|(a, b)| a * b).sum();
        let null = self.y_mean;
        let window = &self.y[self.window_start..self.window_start + self.window_len];
        let ss_null: f64 = window.iter().map(|y| (y - null) * (y - null)).sum();
        let (t, c) = (&self.totals, &self.calib);
        let l = self.window_len as f64;
        let (mut wx, mut wxy, mut quad) = (0.0, 0.0, 0.0);
        for j in 0..p {
            let wj = w[j];
            wx += wj * (t.x[j] - c.x[j]);
            wxy += wj * (t.xy[j] - c.xy[j]);
            let (tr, cr) = (&t.xx[j * p + j..(j + 1) * p], &c.xx[j * p + j..(j + 1) * p]);
            let off: f64 = tr[1..].iter().zip(&cr[1..]).zip(&w[j + 1..]).map(|((a, b), wk)| (a - b) * wk).sum();
            quad += wj * ((tr[0] - cr[0]) * wj + 2.0 * off);
        }
        let wy = t.y - c.y;
        let cross = wxy - offset * wy - null * wx + l * null * offset;
        let signal = quad - 2.0 * offset * wx + l * offset * offset;
        let ss_model = (ss_null - 2.0 * cross + signal).max(0.0);
        ((ss_model / l).sqrt(), (ss_null / l).sqrt())
    }
}

/// Boxplot summaries of RE and model RMSE for one position class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub re: BoxplotSummary,
    pub rmse: BoxplotSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionSummary {
    pub endpoint: Option<ClassSummary>,
    pub interior: Option<ClassSummary>,
    /// Start years of windows with zero intercept RMSE, excluded above.
    pub degenerate: Vec<i32>,
}

pub fn summarize_by_position(results: &[HoldoutResult]) -> Result<PositionSummary> {
    if results.is_empty() {
        return Err(Error::EmptyInput);
    }
    let class = |pos: Position| -> Result<Option<ClassSummary>> {
        let members: Vec<&HoldoutResult> = results
            .iter()
            .filter(|r| r.position() == pos && r.re.is_some())
            .collect();
        if members.is_empty() {
            return Ok(None);
        }
        let re: Vec<f64> = members.iter().filter_map(|r| r.re).collect();
        let rmse: Vec<f64> = members.iter().map(|r| r.rmse_model).collect();
        Ok(Some(ClassSummary {
            re: BoxplotSummary::from_values(&re)?,
            rmse: BoxplotSummary::from_values(&rmse)?,
        }))
    };
    Ok(PositionSummary {
        endpoint: class(Position::Endpoint)?,
        interior: class(Position::Interior)?,
        degenerate: results
            .iter()
            .filter(|r| r.re.is_none())
            .map(|r| r.split.holdout_start)
            .collect(),
    })
}

/// Writes one row per position class and statistic.
pub fn write_position_summary_csv<W: Write>(summary: &PositionSummary, method: &str, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::InvalidData(e.to_string());
    wtr.write_record(["method", "position", "statistic", "n", "min", "q1", "median", "q3", "max", "mean"])
        .map_err(io)?;
    for (pos, class) in [("endpoint", &summary.endpoint), ("interior", &summary.interior)] {
        let Some(c) = class else { continue };
        for (stat, b) in [("re", &c.re), ("rmse", &c.rmse)] {
            wtr.write_record([
                method.to_owned(),
                pos.to_owned(),
                stat.to_owned(),
                b.n.to_string(),
                b.min.to_string(),
                b.q1.to_string(),
                b.median.to_string(),
                b.q3.to_string(),
                b.max.to_string(),
                b.mean.to_string(),
            ])
            .map_err(io)?;
        }
    }
    wtr.flush().map_err(|e| Error::InvalidData(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ProxySeries;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - (12.5f64).sqrt()).abs() < 1e-15);
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
        assert!(matches!(rmse(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn re_examples() {
        assert_eq!(re_statistic(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(re_statistic(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(re_statistic(2.0, 1.0).unwrap(), -1.0);
        assert!(matches!(re_statistic(0.3, 0.0), Err(Error::DegenerateIntercept)));
    }

    fn split(start: i32, pos: Position) -> SplitSpec {
        SplitSpec {
            holdout_start: start,
            holdout_length: 3,
            position: pos,
        }
    }

    #[test]
    fn summary_of_two_endpoints() {
        let results = vec![
            HoldoutResult::new(split(0, Position::Endpoint), 0.9, 1.0, "m".into()),
            HoldoutResult::new(split(5, Position::Endpoint), 0.7, 1.0, "m".into()),
        ];
        let s = summarize_by_position(&results).unwrap();
        let e = s.endpoint.unwrap();
        assert!((e.re.median - 0.2).abs() < 1e-12);
        assert!(s.interior.is_none());
        assert!(matches!(summarize_by_position(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn degenerate_windows_excluded() {
        let results = vec![
            HoldoutResult::new(split(0, Position::Endpoint), 0.5, 1.0, "m".into()),
            HoldoutResult::new(split(1, Position::Interior), 0.5, 0.0, "m".into()),
            HoldoutResult::new(split(2, Position::Endpoint), 0.5, 1.0, "m".into()),
        ];
        let s = summarize_by_position(&results).unwrap();
        assert_eq!(s.degenerate, vec![1]);
        assert!(s.interior.is_none());
        assert_eq!(s.endpoint.unwrap().re.n, 2);
    }

    #[test]
    fn intercept_against_itself_is_zero() {
        let n = 40;
        let axis = YearAxis::new(1900, n).unwrap();
        let t = TargetSeries::new(axis, (0..n).map(|i| ((i * 37) % 11) as f64 * 0.1).collect()).unwrap();
        let net = ProxyNetwork::new(axis, vec![ProxySeries::complete("a", (0..n).map(|i| i as f64).collect())]).unwrap();
        let res = holdout_sweep(&net, &t, MethodSpec::Intercept, 10).unwrap();
        assert_eq!(res.len(), 31);
        assert!(res.iter().all(|r| r.re == Some(0.0)));
    }
}
