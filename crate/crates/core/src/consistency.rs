//! Multivariate calibration consistency.
//!
//! Each proxy is regressed on the target over the calibration years,
//! `y_j = a_j + b_j * xi + e_j`, with residual covariance `S` (diagonal by
//! default). For an observed proxy vector `y` the generalized least-squares
//! misfit
//!
//! ```text
//! Q(xi) = (y - a - b xi)' S^-1 (y - a - b xi)
//! ```
//!
//! is a quadratic in the unknown target value. The confidence set is
//! `{xi : Q(xi) <= c}` with `c` the chi-square quantile on `q` degrees of
//! freedom (or `q` times an F quantile on `(q, n - 2)`). The set is an
//! interval when the minimum of `Q` is below `c`, empty when the proxy vector
//! is inconsistent with every target value, and unbounded only when no proxy
//! responds to the target (`b' S^-1 b` numerically zero).

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::data::{ProxyNetwork, TargetSeries};
use crate::error::{Error, Result};

/// `b' S^-1 b` below this is treated as "no proxy responds".
pub const RESPONSE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    #[default]
    Diagonal,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileRule {
    #[default]
    ChiSquare,
    /// `q * F(q, n - 2)`, a small-sample correction.
    F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFit {
    pub ids: Vec<String>,
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub mode: CovarianceMode,
    /// Full covariance was requested but the calibration was too short.
    pub forced_diagonal: bool,
    /// Proxies whose calibration residual variance is (numerically) zero.
    pub degenerate: Vec<String>,
    pub calib_size: usize,
    pub excluded: Vec<String>,
}

/// Per-proxy regression on the target over `calib`. Proxies incomplete on
/// the calibration years are left out.
pub fn fit_calibration(
    net: &ProxyNetwork,
    target: &TargetSeries,
    calib: &[i32],
    mode: CovarianceMode,
) -> Result<CalibrationFit> {
    let n = calib.len();
    if n < 3 {
        return Err(Error::SeriesTooShort {
            length: n,
            required: 3,
        });
    }
    let xi = target.values_for(calib)?;
    let columns = net.complete_columns(calib);
    if columns.is_empty() {
        return Err(Error::NoUsableProxies);
    }
    let q = columns.len();
    let excluded = (0..net.n_columns())
        .filter(|c| !columns.contains(c))
        .map(|c| net.series()[c].id.clone())
        .collect();
    let xi_mean = crate::stats::mean(&xi);
    let sxx: f64 = xi.iter().map(|v| (v - xi_mean) * (v - xi_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::RankDeficient(
            "target is constant over the calibration years".into(),
        ));
    }
    let raw = net.matrix(&columns, calib)?;
    let mut slopes = Vec::with_capacity(q);
    let mut intercepts = Vec::with_capacity(q);
    let mut resid = DMatrix::zeros(n, q);
    let mut degenerate = Vec::new();
    for j in 0..q {
        let y: Vec<f64> = raw.iter().map(|r| r[j]).collect();
        let y_mean = crate::stats::mean(&y);
        let sxy: f64 = xi.iter().zip(&y).map(|(x, v)| (x - xi_mean) * (v - y_mean)).sum();
        let b = sxy / sxx;
        let a = y_mean - b * xi_mean;
        let mut ss = 0.0;
        let mut syy = 0.0;
        for i in 0..n {
            let e = y[i] - a - b * xi[i];
            resid[(i, j)] = e;
            ss += e * e;
            syy += (y[i] - y_mean) * (y[i] - y_mean);
        }
        if ss <= 1e-20 * syy || ss == 0.0 {
            degenerate.push(net.series()[columns[j]].id.clone());
        }
        slopes.push(b);
        intercepts.push(a);
    }
    let dof = (n - 2) as f64;
    let forced_diagonal = mode == CovarianceMode::Full && n <= q + 2;
    let effective = if forced_diagonal {
        CovarianceMode::Diagonal
    } else {
        mode
    };
    let covariance = match effective {
        CovarianceMode::Diagonal => DMatrix::from_fn(q, q, |r, c| {
            if r == c {
                resid.column(r).norm_squared() / dof
            } else {
                0.0
            }
        }),
        CovarianceMode::Full => resid.transpose() * &resid / dof,
    };
    Ok(CalibrationFit {
        ids: columns.iter().map(|&c| net.series()[c].id.clone()).collect(),
        slopes,
        intercepts,
        covariance,
        mode: effective,
        forced_diagonal,
        degenerate,
        calib_size: n,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Interval,
    Empty,
    Unbounded,
}

impl SetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SetKind::Interval => "interval",
            SetKind::Empty => "empty",
            SetKind::Unbounded => "unbounded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySet {
    pub year: i32,
    pub statistic_min: f64,
    pub set_kind: SetKind,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// Minimizer of `Q` (the inverse estimate), when the response is nonzero.
    pub estimate: Option<f64>,
    /// Response is numerically zero and the set is empty.
    pub degenerate_response: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyOptions {
    pub confidence: f64,
    pub rule: QuantileRule,
}

impl Default for ConsistencyOptions {
    fn default() -> Self {
        ConsistencyOptions {
            confidence: 0.95,
            rule: QuantileRule::ChiSquare,
        }
    }
}

/// Inverts a continuous CDF on `[0, inf)` by bracketing and bisection to
/// full double precision.
fn invert_cdf(cdf: impl Fn(f64) -> f64, p: f64) -> f64 {
    let mut hi = 1.0;
    while cdf(hi) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Critical value `c` for `q` proxies.
pub fn critical_value(q: usize, calib_size: usize, opts: &ConsistencyOptions) -> Result<f64> {
    if !(opts.confidence > 0.0 && opts.confidence < 1.0) {
        return Err(Error::Config(format!(
            "confidence {} outside (0, 1)",
            opts.confidence
        )));
    }
    let numeric = |e: statrs::StatsError| Error::Numeric(e.to_string());
    match opts.rule {
        QuantileRule::ChiSquare => {
            let d = ChiSquared::new(q as f64).map_err(numeric)?;
            Ok(invert_cdf(|x| d.cdf(x), opts.confidence))
        }
        QuantileRule::F => {
            if calib_size <= 2 {
                return Err(Error::SeriesTooShort {
                    length: calib_size,
                    required: 3,
                });
            }
            let d = FisherSnedecor::new(q as f64, (calib_size - 2) as f64).map_err(numeric)?;
            Ok(q as f64 * invert_cdf(|x| d.cdf(x), opts.confidence))
        }
    }
}

/// `S^-1` applied through a factorization of the residual covariance.
struct Whitener {
    inv_diag: Option<Vec<f64>>,
    chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

impl Whitener {
    fn new(fit: &CalibrationFit) -> Result<Self> {
        match fit.mode {
            CovarianceMode::Diagonal => {
                let d: Vec<f64> = fit.covariance.diagonal().iter().copied().collect();
                if d.iter().any(|&v| !(v > 0.0)) || !fit.degenerate.is_empty() {
                    return Err(Error::SingularCovariance);
                }
                Ok(Whitener {
                    inv_diag: Some(d.iter().map(|v| 1.0 / v).collect()),
                    chol: None,
                })
            }
            CovarianceMode::Full => {
                if !fit.degenerate.is_empty() {
                    return Err(Error::SingularCovariance);
                }
                let chol = fit
                    .covariance
                    .clone()
                    .cholesky()
                    .ok_or(Error::SingularCovariance)?;
                Ok(Whitener {
                    inv_diag: None,
                    chol: Some(chol),
                })
            }
        }
    }

    /// `u' S^-1 v`.
    fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        if let Some(w) = &self.inv_diag {
            return u.iter().zip(v).zip(w).map(|((a, b), w)| a * b * w).sum();
        }
        let chol = self.chol.as_ref().expect("full mode has a factor");
        let sv = chol.solve(&DVector::from_column_slice(v));
        u.iter().zip(sv.iter()).map(|(a, b)| a * b).sum()
    }
}

/// The misfit quadratic `Q(xi) = A xi^2 - 2 B xi + C` for one proxy vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Misfit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Misfit {
    pub fn eval(&self, xi: f64) -> f64 {
        self.a * xi * xi - 2.0 * self.b * xi + self.c
    }
}

struct Prepared {
    whitener: Whitener,
    response: f64,
    critical: f64,
}

impl Prepared {
    fn new(fit: &CalibrationFit, opts: &ConsistencyOptions) -> Result<Self> {
        let whitener = Whitener::new(fit)?;
        let response = whitener.inner(&fit.slopes, &fit.slopes);
        let critical = critical_value(fit.ids.len(), fit.calib_size, opts)?;
        Ok(Prepared {
            whitener,
            response,
            critical,
        })
    }

    fn misfit(&self, fit: &CalibrationFit, row: &[f64]) -> Misfit {
        let d: Vec<f64> = row.iter().zip(&fit.intercepts).map(|(y, a)| y - a).collect();
        Misfit {
            a: self.response,
            b: self.whitener.inner(&fit.slopes, &d),
            c: self.whitener.inner(&d, &d),
        }
    }

    fn set(&self, fit: &CalibrationFit, year: i32, row: &[f64]) -> ConsistencySet {
        let m = self.misfit(fit, row);
        let c = self.critical;
        if m.a < RESPONSE_THRESHOLD {
            let unbounded = m.c <= c;
            return ConsistencySet {
                year,
                statistic_min: m.c.max(0.0),
                set_kind: if unbounded { SetKind::Unbounded } else { SetKind::Empty },
                lo: None,
                hi: None,
                estimate: None,
                degenerate_response: !unbounded,
            };
        }
        let estimate = m.b / m.a;
        // misfit at the vertex, from the residual vector for accuracy
        let r: Vec<f64> = row
            .iter()
            .zip(&fit.intercepts)
            .zip(&fit.slopes)
            .map(|((y, a), b)| y - a - b * estimate)
            .collect();
        let q_min = self.whitener.inner(&r, &r).max(0.0);
        if q_min > c {
            return ConsistencySet {
                year,
                statistic_min: q_min,
                set_kind: SetKind::Empty,
                lo: None,
                hi: None,
                estimate: Some(estimate),
                degenerate_response: false,
            };
        }
        let half = ((c - q_min) / m.a).sqrt();
        ConsistencySet {
            year,
            statistic_min: q_min,
            set_kind: SetKind::Interval,
            lo: Some(estimate - half),
            hi: Some(estimate + half),
            estimate: Some(estimate),
            degenerate_response: false,
        }
    }
}

/// Misfit quadratic of one proxy vector (ordered as `fit.ids`).
pub fn misfit(fit: &CalibrationFit, row: &[f64]) -> Result<Misfit> {
    check_row(fit, row)?;
    let whitener = Whitener::new(fit)?;
    let d: Vec<f64> = row.iter().zip(&fit.intercepts).map(|(y, a)| y - a).collect();
    Ok(Misfit {
        a: whitener.inner(&fit.slopes, &fit.slopes),
        b: whitener.inner(&fit.slopes, &d),
        c: whitener.inner(&d, &d),
    })
}

fn check_row(fit: &CalibrationFit, row: &[f64]) -> Result<()> {
    if row.len() != fit.ids.len() {
        return Err(Error::LengthMismatch(row.len(), fit.ids.len()));
    }
    if let Some(i) = row.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!("proxy `{}` value is not finite", fit.ids[i])));
    }
    Ok(())
}

/// Confidence set for the target value behind one proxy vector.
pub fn consistency_set(
    fit: &CalibrationFit,
    year: i32,
    row: &[f64],
    opts: &ConsistencyOptions,
) -> Result<ConsistencySet> {
    check_row(fit, row)?;
    Ok(Prepared::new(fit, opts)?.set(fit, year, row))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub interval: usize,
    pub empty: usize,
    pub unbounded: usize,
}

impl KindCounts {
    fn add(&mut self, kind: SetKind) {
        match kind {
            SetKind::Interval => self.interval += 1,
            SetKind::Empty => self.empty += 1,
            SetKind::Unbounded => self.unbounded += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.interval + self.empty + self.unbounded
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyProfile {
    pub sets: Vec<ConsistencySet>,
    /// Requested years lacking a complete proxy row.
    pub skipped: Vec<i32>,
    /// Counts per century, keyed by the century's first year.
    pub by_century: BTreeMap<i32, KindCounts>,
    pub totals: KindCounts,
}

impl ConsistencyProfile {
    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::InvalidData(e.to_string());
        wtr.write_record(["year", "statistic_min", "set_kind", "lo", "hi"])
            .map_err(io)?;
        for s in &self.sets {
            wtr.write_record([
                s.year.to_string(),
                s.statistic_min.to_string(),
                s.set_kind.as_str().to_owned(),
                s.lo.map(|v| v.to_string()).unwrap_or_default(),
                s.hi.map(|v| v.to_string()).unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::InvalidData(e.to_string()))
    }

    /// Century summary as JSON.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "totals": self.totals,
            "by_century": self.by_century.iter().map(|(c, k)| {
                serde_json::json!({"century_start": c, "interval": k.interval, "empty": k.empty, "unbounded": k.unbounded})
            }).collect::<Vec<_>>(),
            "skipped_years": self.skipped,
        })
    }
}

/// Confidence sets for every requested year with a complete proxy row.
pub fn backcast_consistency_profile(
    fit: &CalibrationFit,
    net: &ProxyNetwork,
    years: &[i32],
    opts: &ConsistencyOptions,
) -> Result<ConsistencyProfile> {
    let columns: Vec<Option<usize>> = fit
        .ids
        .iter()
        .map(|id| net.series().iter().position(|s| &s.id == id))
        .collect();
    let prepared = Prepared::new(fit, opts)?;
    let mut sets = Vec::new();
    let mut skipped = Vec::new();
    let mut by_century: BTreeMap<i32, KindCounts> = BTreeMap::new();
    let mut totals = KindCounts::default();
    for &year in years {
        let row: Option<Vec<f64>> = columns
            .iter()
            .map(|c| c.and_then(|c| net.get(c, year)))
            .collect();
        let Some(row) = row else {
            skipped.push(year);
            continue;
        };
        let set = prepared.set(fit, year, &row);
        by_century
            .entry(year.div_euclid(100) * 100)
            .or_default()
            .add(set.set_kind);
        totals.add(set.set_kind);
        sets.push(set);
    }
    Ok(ConsistencyProfile {
        sets,
        skipped,
        by_century,
        totals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit_with(slopes: Vec<f64>, intercepts: Vec<f64>, vars: Vec<f64>) -> CalibrationFit {
        let q = slopes.len();
        CalibrationFit {
            ids: (0..q).map(|i| format!("p{i}")).collect(),
            slopes,
            intercepts,
            covariance: DMatrix::from_diagonal(&DVector::from_vec(vars)),
            mode: CovarianceMode::Diagonal,
            forced_diagonal: false,
            degenerate: Vec::new(),
            calib_size: 100,
            excluded: Vec::new(),
        }
    }

    #[test]
    fn chi_square_quantiles() {
        let opts = ConsistencyOptions::default();
        assert!((critical_value(1, 100, &opts).unwrap() - 3.841458820694124).abs() < 1e-9);
        assert!((critical_value(5, 100, &opts).unwrap() - 11.070497693516351).abs() < 1e-9);
    }

    #[test]
    fn single_proxy_interval() {
        let fit = fit_with(vec![1.0], vec![0.0], vec![1.0]);
        let s = consistency_set(&fit, 1500, &[0.5], &ConsistencyOptions::default()).unwrap();
        assert_eq!(s.set_kind, SetKind::Interval);
        let half = 3.841458820694124f64.sqrt();
        assert!((s.lo.unwrap() - (0.5 - half)).abs() < 1e-9);
        assert!((s.hi.unwrap() - (0.5 + half)).abs() < 1e-9);
        assert!((half - 1.959964).abs() < 1e-6);
        assert_eq!(s.statistic_min, 0.0);
    }

    #[test]
    fn opposite_implied_temperatures_are_inconsistent() {
        let fit = fit_with(vec![1.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0]);
        let s = consistency_set(&fit, 1500, &[5.0, -5.0], &ConsistencyOptions::default()).unwrap();
        assert_eq!(s.set_kind, SetKind::Empty);
        assert!((s.statistic_min - 50.0).abs() < 1e-12);
        assert_eq!(s.lo, None);
    }

    #[test]
    fn zero_response_is_unbounded_or_empty() {
        let fit = fit_with(vec![0.0, 0.0], vec![1.0, 2.0], vec![1.0, 1.0]);
        let opts = ConsistencyOptions::default();
        let s = consistency_set(&fit, 1500, &[1.5, 2.5], &opts).unwrap();
        assert_eq!(s.set_kind, SetKind::Unbounded);
        assert!(s.lo.is_none() && s.hi.is_none());
        let far = consistency_set(&fit, 1500, &[10.0, -10.0], &opts).unwrap();
        assert_eq!(far.set_kind, SetKind::Empty);
        assert!(far.degenerate_response);
    }

    #[test]
    fn zero_variance_is_singular() {
        let fit = fit_with(vec![1.0], vec![0.0], vec![0.0]);
        let e = consistency_set(&fit, 1500, &[0.5], &ConsistencyOptions::default()).unwrap_err();
        assert!(matches!(e, Error::SingularCovariance));
    }

    #[test]
    fn f_rule_is_wider() {
        let chi = critical_value(5, 30, &ConsistencyOptions::default()).unwrap();
        let f = critical_value(
            5,
            30,
            &ConsistencyOptions {
                confidence: 0.95,
                rule: QuantileRule::F,
            },
        )
        .unwrap();
        assert!(f > chi);
    }
}
