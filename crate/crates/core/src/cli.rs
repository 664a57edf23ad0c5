//! Command-line driver: `benchmark`, `reconstruct` and `consistency`.
//!
//! Options come from flags and, optionally, a TOML file passed with
//! `--config` whose keys are the flag names (`holdout-length = 30`); flags
//! override the file. Every output is computed in memory first and written
//! only once the whole run has succeeded, so a failing run leaves no partial
//! reports. Exit codes: 0 success, 2 configuration, 3 data, 4 numeric.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::consistency::{
    backcast_consistency_profile, fit_calibration, ConsistencyOptions, CovarianceMode, QuantileRule,
};
use crate::data::{dedup_columns, ProxyNetwork, TargetSeries};
use crate::error::{Error, Result};
use crate::noise::NullModelSpec;
use crate::nullbench::{benchmark_families, Aggregation, FamilyComparison, DEFAULT_TRIALS};
use crate::reconstruct::{
    fit_method, predict, predictable_years, select_lambda_cv, weight_profile, Backcast, LambdaChoice, MethodSpec,
};
use crate::skill::{summarize_by_position, write_position_summary_csv, write_results_csv, SweepPlan};

pub const DEFAULT_PCS: [usize; 4] = [1, 5, 10, 20];
pub const DEFAULT_HOLDOUT: usize = 30;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Parser)]
#[command(name = "proxyskill", version, about = "Proxy reconstruction skill benchmarking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Holdout RE sweep of the real proxies against pseudoproxy null families.
    Benchmark(Flags),
    /// Backcasts, weight profiles and a divergence table.
    Reconstruct(Flags),
    /// Per-year calibration consistency sets.
    Consistency(Flags),
}

impl Command {
    fn parts(&self) -> (&'static str, &Flags) {
        match self {
            Command::Benchmark(f) => ("benchmark", f),
            Command::Reconstruct(f) => ("reconstruct", f),
            Command::Consistency(f) => ("consistency", f),
        }
    }
}

/// `--lambda` value: a number or `cv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaValue {
    Number(f64),
    Text(String),
}

fn parse_lambda(s: &str) -> std::result::Result<LambdaValue, String> {
    Ok(s.parse::<f64>()
        .map(LambdaValue::Number)
        .unwrap_or_else(|_| LambdaValue::Text(s.to_owned())))
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Flags {
    /// TOML file with flag-name keys.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub proxies: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// intercept | lasso | pcr
    #[arg(long)]
    pub method: Option<String>,
    /// Lasso penalty, or `cv` to choose it by blocked cross-validation.
    #[arg(long, value_parser = parse_lambda)]
    pub lambda: Option<LambdaValue>,
    /// Principal-component counts for PCR.
    #[arg(long, value_delimiter = ',')]
    pub pcs: Option<Vec<usize>>,
    #[arg(long)]
    pub holdout_length: Option<usize>,
    /// Null families: white, ar1_fixed, ar1_fixed(PHI), ar1_empirical.
    #[arg(long, value_delimiter = ',')]
    pub null: Option<Vec<String>>,
    #[arg(long, allow_hyphen_values = true)]
    pub fixed_phi: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// per_split | mean_over_splits | endpoint_only
    #[arg(long)]
    pub aggregation: Option<String>,
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Proxy ids to drop before anything else.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// diagonal | full residual covariance for consistency sets.
    #[arg(long)]
    pub covariance: Option<String>,
    /// chi_square | f critical value for consistency sets.
    #[arg(long)]
    pub quantile_rule: Option<String>,
}

impl Flags {
    /// Field-wise merge; `self` wins.
    fn over(self, file: Flags) -> Flags {
        Flags {
            config: self.config,
            proxies: self.proxies.or(file.proxies),
            target: self.target.or(file.target),
            method: self.method.or(file.method),
            lambda: self.lambda.or(file.lambda),
            pcs: self.pcs.or(file.pcs),
            holdout_length: self.holdout_length.or(file.holdout_length),
            null: self.null.or(file.null),
            fixed_phi: self.fixed_phi.or(file.fixed_phi),
            trials: self.trials.or(file.trials),
            seed: self.seed.or(file.seed),
            aggregation: self.aggregation.or(file.aggregation),
            confidence: self.confidence.or(file.confidence),
            exclude: self.exclude.or(file.exclude),
            out: self.out.or(file.out),
            covariance: self.covariance.or(file.covariance),
            quantile_rule: self.quantile_rule.or(file.quantile_rule),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Intercept,
    Lasso,
    Pcr,
}

/// Fully resolved run configuration; serialized into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub proxies_path: PathBuf,
    pub target_path: PathBuf,
    pub method: MethodKind,
    pub lambda: Option<LambdaChoice>,
    pub pcs: Vec<usize>,
    pub holdout_length: usize,
    pub null_families: Vec<NullModelSpec>,
    pub fixed_phi: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub aggregation: Aggregation,
    pub confidence: f64,
    pub exclude_ids: Vec<String>,
    pub output_dir: PathBuf,
    pub covariance: CovarianceMode,
    pub quantile_rule: QuantileRule,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_family(s: &str, fixed_phi: Option<f64>) -> Result<NullModelSpec> {
    match s.trim() {
        "ar1_fixed" => match fixed_phi {
            Some(phi) => NullModelSpec::ar1_fixed(phi),
            None => Err(config_err("null family ar1_fixed needs --fixed-phi")),
        },
        other => other.parse(),
    }
}

impl RunConfig {
    pub fn resolve(command: &str, flags: Flags) -> Result<RunConfig> {
        let flags = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                let file: Flags =
                    toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                flags.over(file)
            }
            None => flags,
        };
        let proxies_path = flags.proxies.ok_or_else(|| config_err("--proxies is required"))?;
        let target_path = flags.target.ok_or_else(|| config_err("--target is required"))?;
        let output_dir = flags.out.ok_or_else(|| config_err("--out is required"))?;
        let method = match flags.method.as_deref() {
            None => match command {
                "reconstruct" => MethodKind::Pcr,
                _ => MethodKind::Lasso,
            },
            Some("intercept") => MethodKind::Intercept,
            Some("lasso") => MethodKind::Lasso,
            Some("pcr") => MethodKind::Pcr,
            Some(other) => return Err(config_err(format!("unknown method `{other}`"))),
        };
        if command == "reconstruct" && method == MethodKind::Intercept {
            return Err(config_err("reconstruct needs method lasso or pcr"));
        }
        let lambda = match (method, flags.lambda) {
            (MethodKind::Lasso, None) => Some(LambdaChoice::CrossValidated),
            (MethodKind::Lasso, Some(LambdaValue::Number(l))) if l >= 0.0 && l.is_finite() => {
                Some(LambdaChoice::Fixed(l))
            }
            (MethodKind::Lasso, Some(LambdaValue::Text(t))) if t == "cv" => Some(LambdaChoice::CrossValidated),
            (MethodKind::Lasso, Some(v)) => return Err(config_err(format!("invalid lambda {v:?}"))),
            (_, Some(_)) => return Err(config_err("--lambda applies only to lasso")),
            (_, None) => None,
        };
        let pcs = flags.pcs.unwrap_or_else(|| DEFAULT_PCS.to_vec());
        if pcs.is_empty() || pcs.contains(&0) {
            return Err(config_err("--pcs needs positive component counts"));
        }
        if let Some(phi) = flags.fixed_phi {
            if !(phi.abs() < 1.0) {
                return Err(config_err(format!("fixed phi {phi} outside (-1, 1)")));
            }
        }
        let null_families = match flags.null {
            Some(list) => list
                .iter()
                .map(|s| parse_family(s, flags.fixed_phi))
                .collect::<Result<Vec<_>>>()?,
            None => {
                let mut v = vec![NullModelSpec::White];
                if let Some(phi) = flags.fixed_phi {
                    v.push(NullModelSpec::ar1_fixed(phi)?);
                }
                v.push(NullModelSpec::Ar1Empirical);
                v
            }
        };
        if null_families.is_empty() {
            return Err(config_err("--null lists no family"));
        }
        let trials = flags.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(config_err("--trials must be at least 1"));
        }
        let holdout_length = flags.holdout_length.unwrap_or(DEFAULT_HOLDOUT);
        if holdout_length == 0 {
            return Err(config_err("--holdout-length must be positive"));
        }
        let confidence = flags.confidence.unwrap_or(DEFAULT_CONFIDENCE);
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(config_err(format!("confidence {confidence} outside (0, 1)")));
        }
        let aggregation = flags
            .aggregation
            .as_deref()
            .map(str::parse)
            .transpose()?
            .unwrap_or_default();
        let covariance = match flags.covariance.as_deref() {
            None | Some("diagonal") => CovarianceMode::Diagonal,
            Some("full") => CovarianceMode::Full,
            Some(other) => return Err(config_err(format!("unknown covariance `{other}`"))),
        };
        let quantile_rule = match flags.quantile_rule.as_deref() {
            None | Some("chi_square") => QuantileRule::ChiSquare,
            Some("f") => QuantileRule::F,
            Some(other) => return Err(config_err(format!("unknown quantile rule `{other}`"))),
        };
        Ok(RunConfig {
            command: command.to_owned(),
            proxies_path,
            target_path,
            method,
            lambda,
            pcs,
            holdout_length,
            null_families,
            fixed_phi: flags.fixed_phi,
            trials,
            seed: flags.seed.unwrap_or(0),
            aggregation,
            confidence,
            exclude_ids: flags.exclude.unwrap_or_default(),
            output_dir,
            covariance,
            quantile_rule,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

fn read_input(path: &Path) -> Result<(Vec<u8>, InputRecord)> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let sha256 = Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok((
        bytes,
        InputRecord {
            path: path.to_owned(),
            sha256,
        },
    ))
}

/// Inputs after exclusion and duplicate removal.
struct Inputs {
    target: TargetSeries,
    network: ProxyNetwork,
    records: Vec<InputRecord>,
    removed_duplicates: Vec<String>,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let (pbytes, prec) = read_input(&cfg.proxies_path)?;
    let (tbytes, trec) = read_input(&cfg.target_path)?;
    let network = ProxyNetwork::from_csv_reader(&pbytes[..])
        .map_err(|e| Error::InvalidData(format!("{}: {e}", cfg.proxies_path.display())))?;
    let target = TargetSeries::from_csv_reader(&tbytes[..])
        .map_err(|e| Error::InvalidData(format!("{}: {e}", cfg.target_path.display())))?;
    for id in &cfg.exclude_ids {
        if !network.series().iter().any(|s| &s.id == id) {
            return Err(config_err(format!("excluded id `{id}` is not in the network")));
        }
    }
    let network = network.without_ids(&cfg.exclude_ids)?;
    let overlap = network.axis().intersect(&target.axis()).ok_or_else(|| {
        Error::InvalidData("proxy network and target share fewer than two years".into())
    })?;
    let (network, removed_duplicates) = dedup_columns(&network, &overlap)?;
    Ok(Inputs {
        target,
        network,
        records: vec![prec, trec],
        removed_duplicates,
    })
}

/// Files produced by a run, in write order.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn csv(&mut self, name: impl Into<String>, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.files.push((name.into(), buf));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
        buf.push(b'\n');
        self.files.push((name.into(), buf));
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    fn write_all(&self, dir: &Path) -> Result<()> {
        let io = |path: PathBuf| move |source| Error::Io { path, source };
        fs::create_dir_all(dir).map_err(io(dir.to_owned()))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io(path.clone()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    seed: u64,
    inputs: &'a [InputRecord],
    removed_duplicates: &'a [String],
    resolved_lambda: Option<f64>,
    outputs: Vec<String>,
    created_unix_seconds: u64,
}

fn finish(cfg: &RunConfig, inputs: &Inputs, mut outputs: Outputs, resolved_lambda: Option<f64>) -> Result<Outputs> {
    let created_unix_seconds = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        seed: cfg.seed,
        inputs: &inputs.records,
        removed_duplicates: &inputs.removed_duplicates,
        resolved_lambda,
        outputs: outputs.names(),
        created_unix_seconds,
    };
    outputs.json("manifest.json", &manifest)?;
    outputs.write_all(&cfg.output_dir)?;
    Ok(outputs)
}

fn slug(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '.' | '-' => out.push(c),
            ')' => {}
            _ => out.push('_'),
        }
    }
    out.trim_matches('_').replace("__", "_")
}

/// One lambda for all sweeps: fixed, or chosen once by cross-validation on
/// the full overlap of the real network.
fn resolve_lambda(cfg: &RunConfig, inputs: &Inputs) -> Result<Option<f64>> {
    match cfg.lambda {
        None => Ok(None),
        Some(LambdaChoice::Fixed(l)) => Ok(Some(l)),
        Some(LambdaChoice::CrossValidated) => {
            let overlap = inputs
                .network
                .axis()
                .intersect(&inputs.target.axis())
                .expect("overlap checked on load")
                .years();
            let sel = select_lambda_cv(&inputs.network, &inputs.target, &overlap).map_err(|e| e.in_module("reconstruct"))?;
            Ok(Some(sel.lambda))
        }
    }
}

fn method_specs(cfg: &RunConfig, lambda: Option<f64>) -> Vec<(String, MethodSpec)> {
    match cfg.method {
        MethodKind::Intercept => vec![("intercept".into(), MethodSpec::Intercept)],
        MethodKind::Lasso => vec![(
            "lasso".into(),
            MethodSpec::Lasso {
                lambda: LambdaChoice::Fixed(lambda.expect("lasso lambda resolved")),
            },
        )],
        MethodKind::Pcr => cfg
            .pcs
            .iter()
            .map(|&k| (format!("pcr_k{k}"), MethodSpec::Pcr { k }))
            .collect(),
    }
}

fn write_family_boxplots(cmp: &FamilyComparison, w: &mut Vec<u8>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::InvalidData(e.to_string());
    wtr.write_record([
        "method", "null_family", "n", "min", "q1", "median", "q3", "max", "mean", "re_proxy", "benchmark95",
        "benchmark99", "significant95", "significant99",
    ])
    .map_err(io)?;
    for f in &cmp.families {
        let b = &f.boxplot;
        let v = &f.verdict;
        wtr.write_record([
            cmp.method.clone(),
            f.ensemble.spec.to_string(),
            b.n.to_string(),
            b.min.to_string(),
            b.q1.to_string(),
            b.median.to_string(),
            b.q3.to_string(),
            b.max.to_string(),
            b.mean.to_string(),
            v.re_proxy.to_string(),
            v.benchmark95.to_string(),
            v.benchmark99.to_string(),
            v.significant95.to_string(),
            v.significant99.to_string(),
        ])
        .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::InvalidData(e.to_string()))
}

pub fn run_benchmark(cfg: &RunConfig) -> Result<Outputs> {
    let inputs = load_inputs(cfg).map_err(|e| e.in_module("data-core"))?;
    let lambda = resolve_lambda(cfg, &inputs)?;
    let mut out = Outputs::default();
    for (tag, spec) in method_specs(cfg, lambda) {
        let plan = SweepPlan::new(&inputs.network, &inputs.target, spec, cfg.holdout_length)
            .map_err(|e| e.in_module("skill"))?;
        let cmp = benchmark_families(
            &plan,
            &inputs.network,
            &cfg.null_families,
            cfg.trials,
            cfg.seed,
            cfg.aggregation,
        )
        .map_err(|e| e.in_module("nullbench"))?;
        let positions = summarize_by_position(&cmp.real_results).map_err(|e| e.in_module("skill"))?;
        out.csv(format!("holdout_{tag}.csv"), |w| write_results_csv(&cmp.real_results, w))?;
        out.csv(format!("position_summary_{tag}.csv"), |w| {
            write_position_summary_csv(&positions, &cmp.method, w)
        })?;
        out.csv(format!("family_boxplots_{tag}.csv"), |w| write_family_boxplots(&cmp, w))?;
        for (family, report) in cmp.families.iter().zip(cmp.reports()) {
            let fam = slug(&report.null_family);
            out.json(format!("null_ensemble_{tag}_{fam}.json"), &family.ensemble)?;
            out.json(format!("report_{tag}_{fam}.json"), &report)?;
        }
        let verdicts: Vec<_> = cmp.families.iter().map(|f| f.verdict).collect();
        out.json(
            format!("verdict_{tag}.json"),
            &serde_json::json!({
                "method": cmp.method,
                "aggregation": cfg.aggregation,
                "re_proxy": cmp.re_proxy,
                "verdicts": verdicts,
            }),
        )?;
    }
    finish(cfg, &inputs, out, lambda)
}

/// Root-mean-square difference of two backcasts on shared years before `before`.
fn rms_difference(a: &Backcast, b: &Backcast, before: i32) -> (f64, usize) {
    let mut ss = 0.0;
    let mut n = 0;
    for (y, va) in a.years.iter().zip(&a.values) {
        if *y >= before {
            continue;
        }
        if let Ok(i) = b.years.binary_search(y) {
            ss += (va - b.values[i]).powi(2);
            n += 1;
        }
    }
    (if n > 0 { (ss / n as f64).sqrt() } else { f64::NAN }, n)
}

pub fn run_reconstruct(cfg: &RunConfig) -> Result<Outputs> {
    let inputs = load_inputs(cfg).map_err(|e| e.in_module("data-core"))?;
    let lambda = resolve_lambda(cfg, &inputs)?;
    let net = &inputs.network;
    let overlap = net.axis().intersect(&inputs.target.axis()).expect("overlap checked on load");
    let calib = overlap.years();
    let mut out = Outputs::default();
    let mut fitted = Vec::new();
    for (tag, spec) in method_specs(cfg, lambda) {
        let model = fit_method(&spec, net, &inputs.target, &calib).map_err(|e| e.in_module("reconstruct"))?;
        let years = predictable_years(&model, net);
        let backcast = predict(&model, net, &years).map_err(|e| e.in_module("reconstruct"))?;
        let sweep = SweepPlan::new(net, &inputs.target, spec, cfg.holdout_length)
            .and_then(|p| p.run(net))
            .map_err(|e| e.in_module("skill"))?;
        let cv_rmse = crate::stats::mean(&sweep.iter().map(|r| r.rmse_model).collect::<Vec<_>>());
        out.csv(format!("backcast_{tag}.csv"), |w| backcast.to_csv_writer(w))?;
        out.csv(format!("weights_{tag}.csv"), |w| weight_profile(&model).to_csv_writer(w))?;
        fitted.push((backcast, cv_rmse));
    }
    out.csv("divergence.csv", |w| {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidData(e.to_string());
        wtr.write_record([
            "method_a",
            "method_b",
            "rms_difference",
            "n_years",
            "cv_rmse_a",
            "cv_rmse_b",
        ])
        .map_err(io)?;
        for i in 0..fitted.len() {
            for j in i..fitted.len() {
                let (a, ca) = &fitted[i];
                let (b, cb) = &fitted[j];
                if i == j && fitted.len() > 1 {
                    continue;
                }
                let (d, n) = rms_difference(a, b, overlap.start());
                wtr.write_record([
                    a.method.clone(),
                    b.method.clone(),
                    d.to_string(),
                    n.to_string(),
                    ca.to_string(),
                    cb.to_string(),
                ])
                .map_err(io)?;
            }
        }
        wtr.flush().map_err(|e| Error::InvalidData(e.to_string()))
    })?;
    finish(cfg, &inputs, out, lambda)
}

pub fn run_consistency(cfg: &RunConfig) -> Result<Outputs> {
    let inputs = load_inputs(cfg).map_err(|e| e.in_module("data-core"))?;
    let net = &inputs.network;
    let overlap = net.axis().intersect(&inputs.target.axis()).expect("overlap checked on load");
    let fit = fit_calibration(net, &inputs.target, &overlap.years(), cfg.covariance)
        .map_err(|e| e.in_module("consistency"))?;
    let years: Vec<i32> = net.axis().years().into_iter().filter(|y| !overlap.contains(*y)).collect();
    let opts = ConsistencyOptions {
        confidence: cfg.confidence,
        rule: cfg.quantile_rule,
    };
    let profile = backcast_consistency_profile(&fit, net, &years, &opts).map_err(|e| e.in_module("consistency"))?;
    let mut out = Outputs::default();
    out.csv("consistency.csv", |w| profile.to_csv_writer(w))?;
    let mut summary = profile.summary_json();
    summary["covariance"] = serde_json::json!(fit.mode);
    summary["forced_diagonal"] = serde_json::json!(fit.forced_diagonal);
    summary["proxies_used"] = serde_json::json!(fit.ids);
    summary["proxies_excluded"] = serde_json::json!(fit.excluded);
    summary["calib_size"] = serde_json::json!(fit.calib_size);
    out.json("consistency_summary.json", &summary)?;
    finish(cfg, &inputs, out, None)
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, flags) = cli.command.parts();
    let result = RunConfig::resolve(name, flags.clone()).and_then(|cfg| match name {
        "benchmark" => run_benchmark(&cfg),
        "reconstruct" => run_reconstruct(&cfg),
        _ => run_consistency(&cfg),
    });
    match result {
        Ok(outputs) => {
            for name in outputs.names() {
                println!("{name}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.class().exit_code()
        }
    }
}
