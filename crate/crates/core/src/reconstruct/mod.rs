//! Reconstruction models fitted on calibration years: the calibration-mean
//! (intercept) predictor, the lasso and principal components regression.
//!
//! Proxies with any missing calibration year are dropped from a fit rather
//! than imputed; the dropped ids are kept on the model. Proxies are
//! standardized over the calibration years before fitting. Principal
//! components are computed from calibration years only.

pub mod lasso;
pub mod pcr;

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{ProxyNetwork, Standardization, TargetSeries};
use crate::error::{Error, Result};
use crate::stats::{mean, sample_sd};

pub use lasso::{GramProblem, LassoSolution, SolverOptions};

/// How the lasso penalty is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaChoice {
    Fixed(f64),
    /// Block cross-validation over the calibration years.
    CrossValidated,
}

/// Reconstruction method requested by a caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodSpec {
    Intercept,
    Lasso { lambda: LambdaChoice },
    Pcr { k: usize },
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Intercept => f.write_str("intercept"),
            MethodSpec::Lasso {
                lambda: LambdaChoice::Fixed(l),
            } => write!(f, "lasso(lambda={l})"),
            MethodSpec::Lasso {
                lambda: LambdaChoice::CrossValidated,
            } => f.write_str("lasso(cv)"),
            MethodSpec::Pcr { k } => write!(f, "pcr(k={k})"),
        }
    }
}

/// Method of a fitted model, with the penalty actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Intercept,
    Lasso { lambda: f64 },
    Pcr { k: usize },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Intercept => f.write_str("intercept"),
            Method::Lasso { lambda } => write!(f, "lasso(lambda={lambda})"),
            Method::Pcr { k } => write!(f, "pcr(k={k})"),
        }
    }
}

/// A fitted linear reconstruction.
///
/// Predictions are `intercept + sum_j w_j * z_j` where `z_j` is proxy `j`
/// standardized with the stored calibration parameters. For the lasso `w`
/// is `coefficients`; for PCR the prediction is formed through the component
/// scores `loadings' z` weighted by `coefficients`.
#[derive(Debug, Clone)]
pub struct ReconstructionModel {
    method: Method,
    intercept: f64,
    ids: Vec<String>,
    coefficients: Vec<f64>,
    pc_loadings: Option<DMatrix<f64>>,
    singular_values: Vec<f64>,
    standardization: Option<Standardization>,
    excluded: Vec<String>,
}

impl ReconstructionModel {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Predictor ids, in the order of the coefficients (lasso) or loadings rows (PCR).
    pub fn predictor_ids(&self) -> &[String] {
        &self.ids
    }

    /// Lasso: one coefficient per predictor on the standardized scale.
    /// PCR: one regression coefficient per component.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn pc_loadings(&self) -> Option<&DMatrix<f64>> {
        self.pc_loadings.as_ref()
    }

    /// Singular values of the calibration matrix (PCR only).
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Proxies dropped because they were incomplete on the calibration years.
    pub fn excluded(&self) -> &[String] {
        &self.excluded
    }

    /// Per-predictor weights on the standardized scale.
    pub fn standardized_weights(&self) -> Vec<f64> {
        match &self.pc_loadings {
            Some(v) => (0..v.nrows())
                .map(|j| (0..v.ncols()).map(|i| v[(j, i)] * self.coefficients[i]).sum())
                .collect(),
            None => self.coefficients.clone(),
        }
    }

    /// Weights and intercept in the proxies' original units.
    pub fn raw_coefficients(&self) -> (f64, Vec<f64>) {
        let Some(st) = &self.standardization else {
            return (self.intercept, Vec::new());
        };
        let w = self.standardized_weights();
        let raw: Vec<f64> = w.iter().zip(&st.sds).map(|(w, s)| w / s).collect();
        let shift: f64 = raw.iter().zip(&st.means).map(|(r, m)| r * m).sum();
        (self.intercept - shift, raw)
    }

    /// Reverses the sign of PCR component `i` together with its coefficient.
    /// Predictions are unchanged; the sign of a singular vector is arbitrary.
    pub fn flip_component_sign(&mut self, i: usize) -> Result<()> {
        let v = self.pc_loadings.as_mut().ok_or(Error::NotPcr)?;
        v.column_mut(i).neg_mut();
        self.coefficients[i] = -self.coefficients[i];
        Ok(())
    }

    /// Predictors that must be available to predict a year.
    fn required(&self) -> Vec<usize> {
        match self.method {
            Method::Intercept => Vec::new(),
            Method::Lasso { .. } => (0..self.ids.len())
                .filter(|&j| self.coefficients[j] != 0.0)
                .collect(),
            Method::Pcr { .. } => (0..self.ids.len()).collect(),
        }
    }

    /// Prediction from an already standardized predictor row (entries of
    /// non-required predictors are ignored).
    fn predict_standardized(&self, z: &[f64]) -> f64 {
        match &self.pc_loadings {
            Some(v) => {
                let mut y = self.intercept;
                for i in 0..v.ncols() {
                    let score: f64 = (0..v.nrows()).map(|j| v[(j, i)] * z[j]).sum();
                    y += self.coefficients[i] * score;
                }
                y
            }
            None => {
                self.intercept
                    + self
                        .coefficients
                        .iter()
                        .zip(z)
                        .filter(|(b, _)| **b != 0.0)
                        .map(|(b, z)| b * z)
                        .sum::<f64>()
            }
        }
    }
}

/// Model predictions for a set of years.
#[derive(Debug, Clone, PartialEq)]
pub struct Backcast {
    pub years: Vec<i32>,
    pub values: Vec<f64>,
    pub method: String,
}

impl Backcast {
    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::InvalidData(e.to_string());
        wtr.write_record(["year", "value", "method"]).map_err(io)?;
        for (y, v) in self.years.iter().zip(&self.values) {
            wtr.write_record([y.to_string(), v.to_string(), self.method.clone()])
                .map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::InvalidData(e.to_string()))
    }
}

/// Calibration-period mean of the target, used for every year.
pub fn fit_intercept(target: &TargetSeries, calib: &[i32]) -> Result<ReconstructionModel> {
    if calib.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let y = target.values_for(calib)?;
    Ok(ReconstructionModel {
        method: Method::Intercept,
        intercept: mean(&y),
        ids: Vec::new(),
        coefficients: Vec::new(),
        pc_loadings: None,
        singular_values: Vec::new(),
        standardization: None,
        excluded: Vec::new(),
    })
}

/// Standardized calibration design shared by the lasso and PCR fits.
struct Design {
    ids: Vec<String>,
    excluded: Vec<String>,
    standardization: Standardization,
    /// `n x p` standardized proxies.
    z: Vec<Vec<f64>>,
    y_mean: f64,
    /// Sample sd of the target over calibration (0 when constant).
    y_sd: f64,
    y_centered: Vec<f64>,
}

impl Design {
    fn build(net: &ProxyNetwork, target: &TargetSeries, calib: &[i32]) -> Result<Self> {
        if calib.is_empty() {
            return Err(Error::EmptyCalibration);
        }
        let y = target.values_for(calib)?;
        let columns = net.complete_columns(calib);
        if columns.is_empty() {
            return Err(Error::NoUsableProxies);
        }
        let excluded = (0..net.n_columns())
            .filter(|c| !columns.contains(c))
            .map(|c| net.series()[c].id.clone())
            .collect();
        let standardization = Standardization::fit(net, &columns, calib)?;
        let raw = net.matrix(&columns, calib)?;
        let z = raw
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &x)| standardization.apply(j, x))
                    .collect()
            })
            .collect();
        let y_mean = mean(&y);
        let y_sd = if y.len() > 1 { sample_sd(&y) } else { 0.0 };
        Ok(Design {
            ids: standardization.ids.clone(),
            excluded,
            standardization,
            z,
            y_mean,
            y_sd,
            y_centered: y.iter().map(|v| v - y_mean).collect(),
        })
    }
}

/// Lasso with a fixed penalty. Proxies are standardized and the target is
/// centered and scaled to unit sd over the calibration years, so `lambda` is
/// dimensionless; coefficients are reported on the target's scale.
pub fn fit_lasso(
    net: &ProxyNetwork,
    target: &TargetSeries,
    calib: &[i32],
    lambda: f64,
) -> Result<ReconstructionModel> {
    let design = Design::build(net, target, calib)?;
    fit_lasso_design(design, lambda, None, SolverOptions::default()).map(|(m, _)| m)
}

/// Same as [`fit_lasso`], also returning the solver output (sweep count,
/// objective trace when requested).
pub fn fit_lasso_traced(
    net: &ProxyNetwork,
    target: &TargetSeries,
    calib: &[i32],
    lambda: f64,
    opts: SolverOptions,
) -> Result<(ReconstructionModel, LassoSolution)> {
    let design = Design::build(net, target, calib)?;
    fit_lasso_design(design, lambda, None, opts)
}

fn fit_lasso_design(
    design: Design,
    lambda: f64,
    warm: Option<&[f64]>,
    opts: SolverOptions,
) -> Result<(ReconstructionModel, LassoSolution)> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be non-negative, got {lambda}")));
    }
    let p = design.ids.len();
    let solution = if design.y_sd > 0.0 {
        let y: Vec<f64> = design.y_centered.iter().map(|v| v / design.y_sd).collect();
        let problem = GramProblem::from_design(&design.z, &y);
        lasso::solve(&problem, lambda, warm, opts)?
    } else {
        LassoSolution {
            coef: vec![0.0; p],
            sweeps: 0,
            objective_trace: Vec::new(),
        }
    };
    let model = ReconstructionModel {
        method: Method::Lasso { lambda },
        intercept: design.y_mean,
        ids: design.ids,
        coefficients: solution.coef.iter().map(|b| b * design.y_sd).collect(),
        pc_loadings: None,
        singular_values: Vec::new(),
        standardization: Some(design.standardization),
        excluded: design.excluded,
    };
    Ok((model, solution))
}

/// Number of contiguous validation blocks used to choose lambda.
pub const CV_BLOCKS: usize = 10;
/// Number of penalties on the cross-validation grid.
pub const CV_GRID_SIZE: usize = 30;
/// Smallest grid penalty as a fraction of the largest.
pub const CV_GRID_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSelection {
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub cv_rmse: Vec<f64>,
}

/// Chooses lambda by leave-one-block-out cross-validation on the
/// calibration years (10 contiguous blocks, geometric grid of 30 penalties
/// from the all-zero penalty down by a factor 1000). Ties go to the larger
/// penalty.
pub fn select_lambda_cv(net: &ProxyNetwork, target: &TargetSeries, calib: &[i32]) -> Result<LambdaSelection> {
    let complete = net.complete_columns(calib);
    if complete.is_empty() {
        return Err(Error::NoUsableProxies);
    }
    let net = &net.select(&complete)?;
    let full = Design::build(net, target, calib)?;
    let n = calib.len();
    if full.y_sd == 0.0 {
        return Ok(LambdaSelection {
            lambda: 0.0,
            grid: vec![0.0],
            cv_rmse: vec![0.0],
        });
    }
    let y: Vec<f64> = full.y_centered.iter().map(|v| v / full.y_sd).collect();
    let lambda_max = GramProblem::from_design(&full.z, &y).lambda_max();
    let grid: Vec<f64> = (0..CV_GRID_SIZE)
        .map(|i| lambda_max * CV_GRID_RATIO.powf(i as f64 / (CV_GRID_SIZE - 1) as f64))
        .collect();
    let blocks = CV_BLOCKS.min(n);
    if blocks < 2 || n - n.div_ceil(blocks) < 2 {
        return Err(Error::SeriesTooShort {
            length: n,
            required: 4,
        });
    }
    let mut sse = vec![0.0; grid.len()];
    for b in 0..blocks {
        let lo = b * n / blocks;
        let hi = (b + 1) * n / blocks;
        let train: Vec<i32> = calib[..lo].iter().chain(&calib[hi..]).copied().collect();
        let valid = &calib[lo..hi];
        let design = Design::build(net, target, &train)?;
        let st = design.standardization.clone();
        let cols: Vec<usize> = (0..net.n_columns()).collect();
        let raw_valid = net.matrix(&cols, valid)?;
        let y_valid = target.values_for(valid)?;
        let (y_mean, y_sd) = (design.y_mean, design.y_sd);
        let problem = if y_sd > 0.0 {
            let yt: Vec<f64> = design.y_centered.iter().map(|v| v / y_sd).collect();
            Some(GramProblem::from_design(&design.z, &yt))
        } else {
            None
        };
        let mut warm = vec![0.0; cols.len()];
        for (g, &lambda) in grid.iter().enumerate() {
            if let Some(problem) = &problem {
                warm = lasso::solve(problem, lambda, Some(&warm), SolverOptions::default())?.coef;
            }
            for (row, yv) in raw_valid.iter().zip(&y_valid) {
                let pred = y_mean
                    + y_sd
                        * row
                            .iter()
                            .enumerate()
                            .map(|(j, &x)| warm[j] * st.apply(j, x))
                            .sum::<f64>();
                sse[g] += (pred - yv) * (pred - yv);
            }
        }
    }
    let cv_rmse: Vec<f64> = sse.iter().map(|s| (s / n as f64).sqrt()).collect();
    let mut best = 0;
    for (i, r) in cv_rmse.iter().enumerate() {
        if *r < cv_rmse[best] {
            best = i;
        }
    }
    Ok(LambdaSelection {
        lambda: grid[best],
        grid,
        cv_rmse,
    })
}

/// Principal components regression on the first `k` components of the
/// standardized calibration proxies.
pub fn fit_pcr(net: &ProxyNetwork, target: &TargetSeries, calib: &[i32], k: usize) -> Result<ReconstructionModel> {
    let design = Design::build(net, target, calib)?;
    let n = design.z.len();
    let p = design.ids.len();
    let x = DMatrix::from_fn(n, p, |i, j| design.z[i][j]);
    let fit = pcr::fit(&x, &design.y_centered, k)?;
    Ok(ReconstructionModel {
        method: Method::Pcr { k },
        intercept: design.y_mean,
        ids: design.ids,
        coefficients: fit.gamma,
        pc_loadings: Some(fit.loadings),
        singular_values: fit.singular_values,
        standardization: Some(design.standardization),
        excluded: design.excluded,
    })
}

/// Fits the requested method, resolving a cross-validated lambda first.
pub fn fit_method(
    spec: &MethodSpec,
    net: &ProxyNetwork,
    target: &TargetSeries,
    calib: &[i32],
) -> Result<ReconstructionModel> {
    match *spec {
        MethodSpec::Intercept => fit_intercept(target, calib),
        MethodSpec::Lasso {
            lambda: LambdaChoice::Fixed(l),
        } => fit_lasso(net, target, calib, l),
        MethodSpec::Lasso {
            lambda: LambdaChoice::CrossValidated,
        } => {
            let sel = select_lambda_cv(net, target, calib)?;
            fit_lasso(net, target, calib, sel.lambda)
        }
        MethodSpec::Pcr { k } => fit_pcr(net, target, calib, k),
    }
}

/// Applies the model to the given years of `net`. Columns are matched by id.
pub fn predict(model: &ReconstructionModel, net: &ProxyNetwork, years: &[i32]) -> Result<Backcast> {
    let index: HashMap<&str, usize> = net
        .series()
        .iter()
        .enumerate()
        .map(|(c, s)| (s.id.as_str(), c))
        .collect();
    let required = model.required();
    let columns: Vec<Option<usize>> = model
        .ids
        .iter()
        .map(|id| index.get(id.as_str()).copied())
        .collect();
    let mut values = Vec::with_capacity(years.len());
    let mut z = vec![0.0; model.ids.len()];
    for &year in years {
        if !net.axis().contains(year) {
            return Err(Error::YearOutOfRange(year));
        }
        for &j in &required {
            let x = columns[j]
                .and_then(|c| net.get(c, year))
                .ok_or_else(|| Error::MissingPredictor {
                    id: model.ids[j].clone(),
                    year,
                })?;
            z[j] = model
                .standardization
                .as_ref()
                .expect("models with predictors are standardized")
                .apply(j, x);
        }
        values.push(model.predict_standardized(&z));
    }
    Ok(Backcast {
        years: years.to_vec(),
        values,
        method: model.method.to_string(),
    })
}

/// Years of the network on which every predictor the model needs is available.
pub fn predictable_years(model: &ReconstructionModel, net: &ProxyNetwork) -> Vec<i32> {
    let required: Vec<usize> = model
        .required()
        .into_iter()
        .filter_map(|j| net.series().iter().position(|s| s.id == model.ids[j]))
        .collect();
    if required.len() != model.required().len() {
        return Vec::new();
    }
    net.axis()
        .years()
        .into_iter()
        .filter(|&y| required.iter().all(|&c| net.get(c, y).is_some()))
        .collect()
}

/// Effective per-proxy weights implied by a PCR model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub ids: Vec<String>,
    /// Weight per original proxy unit.
    pub weights: Vec<f64>,
    /// `weights / sum |weights|`.
    pub l1_share: Vec<f64>,
}

impl WeightProfile {
    /// Sum of `|l1_share|` over the given ids.
    pub fn share_of(&self, ids: &[&str]) -> f64 {
        self.ids
            .iter()
            .zip(&self.l1_share)
            .filter(|(id, _)| ids.contains(&id.as_str()))
            .map(|(_, s)| s.abs())
            .sum()
    }

    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::InvalidData(e.to_string());
        wtr.write_record(["proxy_id", "weight", "weight_l1_share"]).map_err(io)?;
        for ((id, w), s) in self.ids.iter().zip(&self.weights).zip(&self.l1_share) {
            wtr.write_record([id.clone(), w.to_string(), s.to_string()]).map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::InvalidData(e.to_string()))
    }
}

pub fn pc_weight_profile(model: &ReconstructionModel) -> Result<WeightProfile> {
    if !matches!(model.method, Method::Pcr { .. }) {
        return Err(Error::NotPcr);
    }
    Ok(weight_profile(model))
}

/// Per-proxy weights of any fitted model (empty for the intercept model).
pub fn weight_profile(model: &ReconstructionModel) -> WeightProfile {
    let (_, weights) = model.raw_coefficients();
    let total: f64 = weights.iter().map(|w| w.abs()).sum();
    let l1_share = weights
        .iter()
        .map(|w| if total > 0.0 { w / total } else { 0.0 })
        .collect();
    WeightProfile {
        ids: model.ids.clone(),
        weights,
        l1_share,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ProxySeries, YearAxis};

    fn target(values: &[f64]) -> TargetSeries {
        TargetSeries::new(YearAxis::new(1900, values.len()).unwrap(), values.to_vec()).unwrap()
    }

    fn network(cols: Vec<Vec<f64>>) -> ProxyNetwork {
        let axis = YearAxis::new(1900, cols[0].len()).unwrap();
        ProxyNetwork::new(
            axis,
            cols.into_iter()
                .enumerate()
                .map(|(i, v)| ProxySeries::complete(format!("p{i}"), v))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn intercept_predictions() {
        let t = target(&[0.0, 1.0, 5.0]);
        let m = fit_intercept(&t, &[1900, 1901]).unwrap();
        assert_eq!(m.intercept(), 0.5);
        let net = network(vec![vec![1.0, 2.0, 3.0]]);
        let b = predict(&m, &net, &[1900, 1901, 1902]).unwrap();
        assert_eq!(b.values, vec![0.5; 3]);

        let single = fit_intercept(&target(&[0.3, 9.0]), &[1900]).unwrap();
        assert_eq!(single.intercept(), 0.3);
        assert!(matches!(fit_intercept(&t, &[]), Err(Error::EmptyCalibration)));
    }

    #[test]
    fn lasso_large_lambda_is_constant() {
        let t = target(&[0.1, 0.4, -0.3, 0.8, 0.0, 0.5]);
        let net = network(vec![
            vec![1.0, 2.0, 0.5, 3.0, 1.0, 2.2],
            vec![0.3, -0.1, 0.2, 0.0, 0.9, -0.4],
        ]);
        let years = t.axis().years();
        let m = fit_lasso(&net, &t, &years, 10.0).unwrap();
        assert!(m.coefficients().iter().all(|&b| b == 0.0));
        let b = predict(&m, &net, &years).unwrap();
        assert!(b.values.iter().all(|&v| v == m.intercept()));
    }

    #[test]
    fn incomplete_columns_are_excluded() {
        let t = target(&[0.1, 0.4, -0.3, 0.8]);
        let axis = YearAxis::new(1900, 4).unwrap();
        let net = ProxyNetwork::new(
            axis,
            vec![
                ProxySeries::complete("a", vec![1.0, 2.0, 0.5, 3.0]),
                ProxySeries {
                    id: "b".into(),
                    values: vec![0.0, 1.0, 2.0, 3.0],
                    available: vec![true, false, true, true],
                },
            ],
        )
        .unwrap();
        let m = fit_lasso(&net, &t, &axis.years(), 0.0).unwrap();
        assert_eq!(m.predictor_ids(), &["a".to_owned()]);
        assert_eq!(m.excluded(), &["b".to_owned()]);
    }

    #[test]
    fn missing_predictor_reported() {
        let t = target(&[0.1, 0.4, -0.3, 0.8, 0.2]);
        let axis = YearAxis::new(1900, 5).unwrap();
        let net = ProxyNetwork::new(
            axis,
            vec![ProxySeries {
                id: "a".into(),
                values: vec![1.0, 2.0, 0.5, 3.0, 0.0],
                available: vec![true, true, true, true, false],
            }],
        )
        .unwrap();
        let m = fit_pcr(&net, &t, &[1900, 1901, 1902, 1903], 1).unwrap();
        let e = predict(&m, &net, &[1904]).unwrap_err();
        assert!(matches!(e, Error::MissingPredictor { year: 1904, .. }), "{e}");
        assert_eq!(predictable_years(&m, &net), vec![1900, 1901, 1902, 1903]);
    }

    #[test]
    fn weight_profile_requires_pcr() {
        let t = target(&[0.1, 0.4, -0.3]);
        let m = fit_intercept(&t, &[1900, 1901]).unwrap();
        assert!(matches!(pc_weight_profile(&m), Err(Error::NotPcr)));
    }

    #[test]
    fn method_labels() {
        assert_eq!(MethodSpec::Pcr { k: 5 }.to_string(), "pcr(k=5)");
        assert_eq!(
            MethodSpec::Lasso {
                lambda: LambdaChoice::CrossValidated
            }
            .to_string(),
            "lasso(cv)"
        );
    }
}
