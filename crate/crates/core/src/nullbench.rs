//! Monte-Carlo null distributions of RE from pseudoproxy networks, percentile
//! benchmarks and significance verdicts.
//!
//! Each trial replaces the real proxies with a pseudoproxy network of the
//! same shape and mask, runs the same holdout sweep as the real network, and
//! reduces the per-window REs to one or more values according to the
//! [`Aggregation`] rule. Benchmarks are upper empirical quantiles (order
//! statistic `ceil(p * n)`), and significance is strict exceedance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Position, ProxyNetwork, TargetSeries};
use crate::error::{Error, Result};
use crate::noise::{NullModelSpec, PseudoNetworkGenerator, RngSeed};
use crate::reconstruct::MethodSpec;
use crate::skill::{HoldoutResult, SweepPlan};
use crate::stats::BoxplotSummary;

pub const DEFAULT_TRIALS: usize = 999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Every window's RE enters the null distribution; the real-proxy
    /// statistic is the mean over windows.
    PerSplit,
    /// One value per trial: the mean RE over all windows.
    #[default]
    MeanOverSplits,
    /// One value per trial: the mean RE over the two endpoint windows.
    EndpointOnly,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::PerSplit => "per_split",
            Aggregation::MeanOverSplits => "mean_over_splits",
            Aggregation::EndpointOnly => "endpoint_only",
        }
    }
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "per_split" => Ok(Aggregation::PerSplit),
            "mean_over_splits" | "mean" => Ok(Aggregation::MeanOverSplits),
            "endpoint_only" | "endpoint" => Ok(Aggregation::EndpointOnly),
            other => Err(Error::Config(format!("unknown aggregation `{other}`"))),
        }
    }
}

fn mean_re<'a>(results: impl Iterator<Item = &'a HoldoutResult>) -> Option<f64> {
    let re: Vec<f64> = results.filter_map(|r| r.re).collect();
    (!re.is_empty()).then(|| crate::stats::mean(&re))
}

fn aggregate_pairs(pairs: impl Iterator<Item = (Position, Option<f64>)>, aggregation: Aggregation) -> Vec<f64> {
    let mean = |v: Vec<f64>| -> Vec<f64> {
        if v.is_empty() {
            Vec::new()
        } else {
            vec![crate::stats::mean(&v)]
        }
    };
    match aggregation {
        Aggregation::PerSplit => pairs.filter_map(|(_, re)| re).collect(),
        Aggregation::MeanOverSplits => mean(pairs.filter_map(|(_, re)| re).collect()),
        Aggregation::EndpointOnly => mean(
            pairs
                .filter(|(pos, _)| *pos == Position::Endpoint)
                .filter_map(|(_, re)| re)
                .collect(),
        ),
    }
}

/// Values a single sweep contributes to a null distribution. Degenerate
/// windows are skipped.
pub fn aggregate(results: &[HoldoutResult], aggregation: Aggregation) -> Vec<f64> {
    aggregate_pairs(results.iter().map(|r| (r.position(), r.re)), aggregation)
}

/// The scalar compared against the benchmarks for a real-proxy sweep.
pub fn aggregate_statistic(results: &[HoldoutResult], aggregation: Aggregation) -> Result<f64> {
    let value = match aggregation {
        Aggregation::PerSplit | Aggregation::MeanOverSplits => mean_re(results.iter()),
        Aggregation::EndpointOnly => {
            mean_re(results.iter().filter(|r| r.position() == Position::Endpoint))
        }
    };
    value.ok_or(Error::DegenerateIntercept)
}

/// Order statistic `ceil(p * n)` (1-indexed) of the sample.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("percentile level {p} outside (0, 1)")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (p * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p50: f64,
    pub p95: f64,
    pub p99: f64,
}

impl Percentiles {
    pub fn of(values: &[f64]) -> Result<Self> {
        Ok(Percentiles {
            p50: percentile(values, 0.50)?,
            p95: percentile(values, 0.95)?,
            p99: percentile(values, 0.99)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullEnsemble {
    pub spec: NullModelSpec,
    pub trials: usize,
    pub aggregation: Aggregation,
    /// Aggregated values in trial order (and window order for `per_split`).
    pub re_values: Vec<f64>,
    pub percentiles: Percentiles,
}

impl NullEnsemble {
    pub fn summary(&self) -> Result<BoxplotSummary> {
        BoxplotSummary::from_values(&self.re_values)
    }
}

/// Runs `trials` pseudoproxy sweeps through an existing plan. Trial `t`
/// draws from streams `(seed, t, column)`.
pub fn run_null_ensemble_with(
    plan: &SweepPlan,
    generator: &PseudoNetworkGenerator,
    trials: usize,
    seed: u64,
    aggregation: Aggregation,
) -> Result<NullEnsemble> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let per_trial: Vec<Result<Vec<f64>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let pseudo = generator.generate(RngSeed::new(seed, t))?;
            let outcomes = plan.outcomes(&pseudo)?;
            Ok(aggregate_pairs(outcomes.iter().map(|o| (o.split.position, o.re)), aggregation))
        })
        .collect();
    let mut re_values = Vec::with_capacity(trials);
    for (t, r) in per_trial.into_iter().enumerate() {
        re_values.extend(r.map_err(|e| e.at_trial(t as u64))?);
    }
    let percentiles = Percentiles::of(&re_values)?;
    Ok(NullEnsemble {
        spec: generator.spec(),
        trials,
        aggregation,
        re_values,
        percentiles,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn run_null_ensemble(
    net: &ProxyNetwork,
    target: &TargetSeries,
    method: MethodSpec,
    spec: NullModelSpec,
    trials: usize,
    holdout_length: usize,
    seed: u64,
    aggregation: Aggregation,
) -> Result<NullEnsemble> {
    let plan = SweepPlan::new(net, target, method, holdout_length)?;
    let generator = PseudoNetworkGenerator::new(net, spec)?;
    run_null_ensemble_with(&plan, &generator, trials, seed, aggregation)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub re_proxy: f64,
    pub benchmark95: f64,
    pub benchmark99: f64,
    pub significant95: bool,
    pub significant99: bool,
    pub spec: NullModelSpec,
}

pub fn verdict(re_proxy: f64, ensemble: &NullEnsemble) -> Verdict {
    let b95 = ensemble.percentiles.p95;
    let b99 = ensemble.percentiles.p99;
    Verdict {
        re_proxy,
        benchmark95: b95,
        benchmark99: b99,
        significant95: re_proxy > b95,
        significant99: re_proxy > b99,
        spec: ensemble.spec,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub ensemble: NullEnsemble,
    pub boxplot: BoxplotSummary,
    pub verdict: Verdict,
}

/// Real-proxy sweep alongside null distributions for several families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyComparison {
    pub method: String,
    pub re_proxy: f64,
    pub real_results: Vec<HoldoutResult>,
    pub families: Vec<FamilyResult>,
    pub seed: u64,
}

#[allow(clippy::too_many_arguments)]
pub fn compare_null_families(
    net: &ProxyNetwork,
    target: &TargetSeries,
    method: MethodSpec,
    specs: &[NullModelSpec],
    trials: usize,
    holdout_length: usize,
    seed: u64,
    aggregation: Aggregation,
) -> Result<FamilyComparison> {
    if specs.len() < 2 {
        return Err(Error::Config("compare at least two null families".into()));
    }
    let plan = SweepPlan::new(net, target, method, holdout_length)?;
    benchmark_families(&plan, net, specs, trials, seed, aggregation)
}

/// Real-proxy sweep through `plan` plus one null ensemble per family (one
/// family is allowed).
pub fn benchmark_families(
    plan: &SweepPlan,
    net: &ProxyNetwork,
    specs: &[NullModelSpec],
    trials: usize,
    seed: u64,
    aggregation: Aggregation,
) -> Result<FamilyComparison> {
    if specs.is_empty() {
        return Err(Error::Config("no null family given".into()));
    }
    let real_results = plan.run(net)?;
    let re_proxy = aggregate_statistic(&real_results, aggregation)?;
    let families = specs
        .iter()
        .map(|&spec| {
            let generator = PseudoNetworkGenerator::new(net, spec)?;
            let ensemble = run_null_ensemble_with(plan, &generator, trials, seed, aggregation)?;
            Ok(FamilyResult {
                boxplot: ensemble.summary()?,
                verdict: verdict(re_proxy, &ensemble),
                ensemble,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyComparison {
        method: plan.method().to_string(),
        re_proxy,
        real_results,
        families,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyBoxplot {
    pub null_family: String,
    pub boxplot: BoxplotSummary,
}

/// Machine-readable benchmark report for one null family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub method: String,
    pub null_family: String,
    pub trials: usize,
    pub aggregation: Aggregation,
    pub percentiles: Percentiles,
    pub re_proxy: f64,
    pub verdict: Verdict,
    pub per_family_boxplots: Vec<FamilyBoxplot>,
    pub seed: u64,
}

impl FamilyComparison {
    pub fn boxplots(&self) -> Vec<FamilyBoxplot> {
        self.families
            .iter()
            .map(|f| FamilyBoxplot {
                null_family: f.ensemble.spec.to_string(),
                boxplot: f.boxplot,
            })
            .collect()
    }

    /// One report per family, each carrying every family's boxplot.
    pub fn reports(&self) -> Vec<BenchmarkReport> {
        let boxplots = self.boxplots();
        self.families
            .iter()
            .map(|f| BenchmarkReport {
                method: self.method.clone(),
                null_family: f.ensemble.spec.to_string(),
                trials: f.ensemble.trials,
                aggregation: f.ensemble.aggregation,
                percentiles: f.ensemble.percentiles,
                re_proxy: self.re_proxy,
                verdict: f.verdict,
                per_family_boxplots: boxplots.clone(),
                seed: self.seed,
            })
            .collect()
    }
}
