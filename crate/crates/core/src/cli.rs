//! Command-line front end: `fit`, `predict`, `tune`, `simulate` and `bench`.
//!
//! Every option can also come from a TOML file passed with `--config`. Keys may sit at
//! the top level or inside any one-level table (`[data]`, `[hyper]`, ...) and use the
//! flag name with `-` or `_`. A flag given on the command line wins over the file.
//!
//! Artifacts carry the seed, a SHA-256 hash of the resolved configuration and the
//! crate version: CSVs in a leading `#` line, JSON documents in a `provenance` object.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bench::{run_bench, BenchConfig, BenchResult, Design};
use crate::data::{build_dataset, read_csv, BuildOptions, Dataset, SchemaHints};
use crate::error::{Error, Result};
use crate::loss::LossFamily;
use crate::metrics::MetricName;
use crate::model::{FittedModel, Fitter, Hyperparams, PredictType};
use crate::report;
use crate::search::{
    default_metric, search_with, Method, SearchResult, SearchSpace, ValidationSet,
};
use crate::simulate::{
    simulate_extrapolation, simulate_two_group, ExtrapSpec, Scenario, SimBundle, TwoGroupSpec,
};
use crate::solver::FistaConfig;
use crate::transform::ProjectionMode;

#[derive(Debug, Parser)]
#[command(
    name = "s2net",
    version,
    about = "Semi-supervised elastic-net for linear and logistic models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model at fixed hyperparameters.
    Fit(FitArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Random search over hyperparameters, then refit at the best point.
    Tune(TuneArgs),
    /// Write a simulated data bundle as CSV files.
    Simulate(SimulateArgs),
    /// Run the Monte-Carlo benchmark.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// TOML file with default values for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub labeled: Option<PathBuf>,
    /// Name of the response column in the labeled (and validation) CSV [default: y].
    #[arg(long)]
    pub label_col: Option<String>,
    #[arg(long)]
    pub unlabeled: Option<PathBuf>,
    /// linear or logistic [default: linear].
    #[arg(long)]
    pub response: Option<String>,
    /// Columns to treat as categorical even if they parse as numbers.
    #[arg(long, value_delimiter = ',')]
    pub categorical: Vec<String>,
    /// auto, always or never [default: auto].
    #[arg(long)]
    pub projection: Option<String>,
    /// Center columns without scaling them to unit variance.
    #[arg(long)]
    pub no_scale: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// FISTA iteration cap.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// FISTA stopping tolerance on the sup-norm of successive iterates.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    #[arg(long)]
    pub gamma3: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Output directory for model.json and coefficients.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// link, probability or class; defaults to the response scale of the model.
    #[arg(long = "type")]
    pub kind: Option<String>,
    /// Predictions CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Labeled validation CSV.
    #[arg(long)]
    pub valid: Option<PathBuf>,
    /// Number of random-search draws [default: 1000].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// s2net or baseline [default: s2net].
    #[arg(long)]
    pub method: Option<String>,
    /// mse, auc, accuracy or deviance; defaults to mse / auc by response.
    #[arg(long)]
    pub metric: Option<String>,
    /// Output directory for best.json, trials.csv, model.json and coefficients.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// two-group or extrapolation [default: two-group].
    #[arg(long)]
    pub design: Option<String>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n_source: Option<usize>,
    #[arg(long)]
    pub n_target: Option<usize>,
    /// Target mean shift for the extrapolation design.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// same, lucky or unlucky [default: same].
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Comma-separated scenarios for the extrapolation design [default: same].
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Random-search draws per method and repetition.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Comma-separated methods [default: s2net,baseline].
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub projection: Option<String>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory for results.txt and repetitions CSVs.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flattened key/value view of a TOML config file.
#[derive(Debug, Default)]
pub struct Settings(BTreeMap<String, toml::Value>);

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)?;
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            Error::InvalidParameter(format!("config {}: {e}", path.display()))
        })?;
        let mut map = BTreeMap::new();
        for (k, v) in table {
            match v {
                toml::Value::Table(inner) => {
                    for (k2, v2) in inner {
                        map.insert(k2.replace('-', "_"), v2);
                    }
                }
                other => {
                    map.insert(k.replace('-', "_"), other);
                }
            }
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.0.get(key).map(|v| match v {
            toml::Value::String(s) => s.clone(),
            toml::Value::Array(a) => a
                .iter()
                .map(|x| {
                    x.as_str()
                        .map(String::from)
                        .unwrap_or_else(|| x.to_string())
                })
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        })
    }

    /// Command-line value if present, otherwise the config value parsed with `FromStr`.
    pub fn pick<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| Error::InvalidParameter(format!("config key `{key}`: {e}"))),
        }
    }

    fn flag(&self, cli: bool, key: &str) -> Result<bool> {
        Ok(cli || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

fn hash_json(v: &Value) -> String {
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}

fn provenance(seed: u64, hash: &str) -> Value {
    json!({ "seed": seed, "config_hash": hash, "software_version": crate::VERSION })
}

fn with_provenance(doc: &str, prov: &Value) -> Result<String> {
    let mut v: Value = serde_json::from_str(doc)?;
    if let Some(obj) = v.as_object_mut() {
        obj.insert("provenance".into(), prov.clone());
    }
    Ok(serde_json::to_string_pretty(&v)?)
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("missing required option --{flag}")))
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// Training inputs resolved from flags and config.
struct TrainingSetup {
    dataset: Dataset,
    label_col: String,
    hints: SchemaHints,
    projection: ProjectionMode,
    solver: FistaConfig,
    seed: u64,
    resolved: Value,
}

fn load_training(args: &DataArgs, settings: &Settings) -> Result<TrainingSetup> {
    let labeled: PathBuf = required(settings.pick(args.labeled.clone(), "labeled")?, "labeled")?;
    let unlabeled: Option<PathBuf> = settings.pick(args.unlabeled.clone(), "unlabeled")?;
    let label_col: String = settings
        .pick(args.label_col.clone(), "label_col")?
        .unwrap_or_else(|| "y".into());
    let response: LossFamily = match settings.pick::<String>(args.response.clone(), "response")? {
        None => LossFamily::Linear,
        Some(s) => parse_family(&s)?,
    };
    let projection: ProjectionMode = settings
        .pick(args.projection.clone(), "projection")?
        .map_or(Ok(ProjectionMode::Auto), |s: String| s.parse())?;
    let no_scale = settings.flag(args.no_scale, "no_scale")?;
    let seed: u64 = settings.pick(args.seed, "seed")?.unwrap_or(0);
    let categorical: Vec<String> = if args.categorical.is_empty() {
        settings
            .raw("categorical")
            .map(|s| split_list(&s).map(String::from).collect())
            .unwrap_or_default()
    } else {
        args.categorical.clone()
    };
    let mut solver = FistaConfig::default();
    if let Some(m) = settings.pick(args.max_iter, "max_iter")? {
        solver.max_iter = m;
    }
    if let Some(t) = settings.pick(args.tol, "tol")? {
        solver.tol = t;
    }

    let hints = SchemaHints {
        categorical: categorical.iter().cloned().collect(),
    };
    let (xl, yl) = read_csv(&labeled, &hints)?.split_numeric(&label_col)?;
    let xu = match &unlabeled {
        Some(path) => Some(read_csv(path, &hints)?.without(&label_col)),
        None => None,
    };
    let opts = BuildOptions {
        scale: !no_scale,
        ..BuildOptions::default()
    };
    let dataset = build_dataset(&xl, &yl, xu.as_ref(), response, opts)?;
    let resolved = json!({
        "labeled": labeled,
        "unlabeled": unlabeled,
        "label_col": label_col,
        "response": response,
        "categorical": categorical,
        "projection": projection,
        "scale": !no_scale,
        "seed": seed,
        "solver": solver,
    });
    Ok(TrainingSetup {
        dataset,
        label_col,
        hints,
        projection,
        solver,
        seed,
        resolved,
    })
}

fn parse_family(s: &str) -> Result<LossFamily> {
    match s {
        "linear" | "gaussian" => Ok(LossFamily::Linear),
        "logistic" | "binomial" => Ok(LossFamily::Logistic),
        other => Err(Error::InvalidParameter(format!("response `{other}`"))),
    }
}

fn coefficients_csv(model: &FittedModel, prov_line: &str) -> String {
    let mut out = String::from(prov_line);
    out.push_str("feature,coefficient\n");
    out.push_str(&format!("(intercept),{}\n", report::full(model.intercept)));
    for (name, b) in model.preprocess.feature_names.iter().zip(model.beta.iter()) {
        out.push_str(&format!("{name},{}\n", report::full(*b)));
    }
    out
}

fn write_model(dir: &Path, model: &FittedModel, seed: u64, hash: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let prov = provenance(seed, hash);
    std::fs::write(
        dir.join("model.json"),
        with_provenance(&model.to_json()?, &prov)?,
    )?;
    std::fs::write(
        dir.join("coefficients.csv"),
        coefficients_csv(model, &report::provenance_line(seed, hash)),
    )?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct FitSummary {
    pub model: FittedModel,
    pub config_hash: String,
    pub seed: u64,
}

impl FitSummary {
    pub fn describe(&self) -> String {
        let r = &self.model.report;
        format!(
            "nonzero coefficients: {} of {}\nobjective: {}\niterations: {}\nconverged: {}\n",
            self.model.nonzero_count(),
            self.model.beta.len(),
            report::full(r.final_objective),
            r.iterations,
            r.converged
        )
    }
}

fn resolve_hyper(h: &HyperArgs, settings: &Settings) -> Result<Hyperparams> {
    Ok(Hyperparams {
        lambda1: settings.pick(h.lambda1, "lambda1")?.unwrap_or(0.0),
        lambda2: settings.pick(h.lambda2, "lambda2")?.unwrap_or(0.0),
        gamma1: settings.pick(h.gamma1, "gamma1")?.unwrap_or(0.0),
        gamma2: settings.pick(h.gamma2, "gamma2")?.unwrap_or(1.0),
        gamma3: settings.pick(h.gamma3, "gamma3")?.unwrap_or(0.0),
    })
}

pub fn cmd_fit(args: &FitArgs) -> Result<FitSummary> {
    let settings = Settings::load(args.data.config.as_deref())?;
    let setup = load_training(&args.data, &settings)?;
    let hyper = resolve_hyper(&args.hyper, &settings)?;
    let out: Option<PathBuf> = settings.pick(args.out.clone(), "out")?;
    let mut resolved = setup.resolved.clone();
    resolved["command"] = json!("fit");
    resolved["hyper"] = json!(hyper);
    let hash = hash_json(&resolved);

    let model = Fitter::new(&setup.dataset, setup.projection).fit(&hyper, &setup.solver)?;
    if let Some(dir) = out {
        write_model(&dir, &model, setup.seed, &hash)?;
    }
    Ok(FitSummary {
        model,
        config_hash: hash,
        seed: setup.seed,
    })
}

/// Reads a model written by `fit` or `tune`.
pub fn load_model(path: &Path) -> Result<FittedModel> {
    FittedModel::from_json(&std::fs::read_to_string(path)?)
}

pub fn cmd_predict(args: &PredictArgs) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(&args.model)?;
    let model = FittedModel::from_json(&text)?;
    let seed = serde_json::from_str::<Value>(&text)?["provenance"]["seed"]
        .as_u64()
        .unwrap_or(0);
    let kind: PredictType = args
        .kind
        .as_deref()
        .map_or(Ok(PredictType::Default), str::parse)?;
    let table = read_csv(&args.data, &model.preprocess.categorical_columns())?;
    let pred = model.predict(&table, kind)?;

    let hash = hash_json(&json!({
        "command": "predict",
        "model": args.model,
        "data": args.data,
        "type": args.kind,
    }));
    let mut csv = report::provenance_line(seed, &hash);
    csv.push_str("prediction\n");
    for v in &pred {
        csv.push_str(&report::full(*v));
        csv.push('\n');
    }
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(pred)
}

#[derive(Debug, Clone)]
pub struct TuneSummary {
    pub search: SearchResult,
    pub model: FittedModel,
    pub config_hash: String,
}

pub fn cmd_tune(args: &TuneArgs) -> Result<TuneSummary> {
    let settings = Settings::load(args.data.config.as_deref())?;
    let setup = load_training(&args.data, &settings)?;
    let valid_path: PathBuf = required(settings.pick(args.valid.clone(), "valid")?, "valid")?;
    let iterations: usize = settings
        .pick(args.iterations, "iterations")?
        .unwrap_or(1000);
    let method: Method = settings
        .pick::<String>(args.method.clone(), "method")?
        .map_or(Ok(Method::S2net), |s| s.parse())?;
    let metric: MetricName = settings
        .pick::<String>(args.metric.clone(), "metric")?
        .map_or(Ok(default_metric(setup.dataset.response)), |s| s.parse())?;
    let out: Option<PathBuf> = settings.pick(args.out.clone(), "out")?;

    let mut hints = setup.dataset.preprocess.categorical_columns();
    hints
        .categorical
        .extend(setup.hints.categorical.iter().cloned());
    let (xv, yv) = read_csv(&valid_path, &hints)?.split_numeric(&setup.label_col)?;
    let valid = ValidationSet {
        x: setup.dataset.preprocess.replay(&xv)?,
        y: yv,
    };

    let space = SearchSpace::with_budget(iterations, setup.seed);
    let mut resolved = setup.resolved.clone();
    resolved["command"] = json!("tune");
    resolved["valid"] = json!(valid_path);
    resolved["method"] = json!(method);
    resolved["metric"] = json!(metric);
    resolved["space"] = json!(space);
    let hash = hash_json(&resolved);

    let fitter = Fitter::new(&setup.dataset, setup.projection);
    let search = search_with(&fitter, &valid, &space, &setup.solver, method, metric)?;
    let model = fitter.fit(&search.best, &setup.solver)?;

    if let Some(dir) = out {
        write_model(&dir, &model, setup.seed, &hash)?;
        let prov = provenance(setup.seed, &hash);
        std::fs::write(
            dir.join("best.json"),
            with_provenance(&search.summary_json()?, &prov)?,
        )?;
        let mut trials = report::provenance_line(setup.seed, &hash);
        trials.push_str(&search.trials_csv());
        std::fs::write(dir.join("trials.csv"), trials)?;
    }
    Ok(TuneSummary {
        search,
        model,
        config_hash: hash,
    })
}

#[derive(Debug, Clone, Serialize)]
struct DesignSettings {
    design: Design,
    p: Option<usize>,
    n_source: usize,
    n_target: usize,
    delta: Option<f64>,
    response: LossFamily,
    seed: u64,
}

fn resolve_design(d: &DesignArgs, settings: &Settings) -> Result<DesignSettings> {
    Ok(DesignSettings {
        design: settings
            .pick::<String>(d.design.clone(), "design")?
            .map_or(Ok(Design::TwoGroup), |s| s.parse())?,
        p: settings.pick(d.p, "p")?,
        n_source: settings.pick(d.n_source, "n_source")?.unwrap_or(50),
        n_target: settings.pick(d.n_target, "n_target")?.unwrap_or(50),
        delta: settings.pick(d.delta, "delta")?,
        response: settings
            .pick::<String>(d.response.clone(), "response")?
            .map_or(Ok(LossFamily::Linear), |s| parse_family(&s))?,
        seed: settings.pick(d.seed, "seed")?.unwrap_or(0),
    })
}

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub bundle: SimBundle,
    pub config_hash: String,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateSummary> {
    let settings = Settings::load(args.design.config.as_deref())?;
    let d = resolve_design(&args.design, &settings)?;
    let scenario: Scenario = settings
        .pick::<String>(args.scenario.clone(), "scenario")?
        .map_or(Ok(Scenario::Same), |s| s.parse())?;
    let out: Option<PathBuf> = settings.pick(args.out.clone(), "out")?;

    let bundle = match d.design {
        Design::TwoGroup => {
            let mut spec = TwoGroupSpec::new(d.p.unwrap_or(50), d.n_target, d.response, d.seed);
            spec.n_source = d.n_source;
            simulate_two_group(&spec)?
        }
        Design::Extrapolation => {
            let mut spec = ExtrapSpec::new(scenario, d.n_target, d.response, d.seed);
            spec.n_source = d.n_source;
            if let Some(p) = d.p {
                spec.p = p;
            }
            if let Some(delta) = d.delta {
                spec.delta = delta;
            }
            simulate_extrapolation(&spec)?
        }
    };
    let resolved = json!({ "command": "simulate", "design": d, "scenario": scenario });
    let hash = hash_json(&resolved);
    if let Some(dir) = out {
        let mut manifest = resolved.clone();
        manifest["provenance"] = provenance(d.seed, &hash);
        bundle.write_csv_dir(&dir, &manifest)?;
    }
    Ok(SimulateSummary {
        bundle,
        config_hash: hash,
    })
}

pub fn cmd_bench(args: &BenchArgs) -> Result<Vec<BenchResult>> {
    let settings = Settings::load(args.design.config.as_deref())?;
    let d = resolve_design(&args.design, &settings)?;
    let scenarios: Vec<Scenario> =
        match settings.pick::<String>(args.scenario.clone(), "scenario")? {
            None => vec![Scenario::Same],
            Some(s) => split_list(&s).map(str::parse).collect::<Result<_>>()?,
        };
    let methods: Vec<Method> = match settings.pick::<String>(args.methods.clone(), "methods")? {
        None => vec![Method::S2net, Method::Baseline],
        Some(s) => split_list(&s).map(str::parse).collect::<Result<_>>()?,
    };
    let out: Option<PathBuf> = settings.pick(args.out.clone(), "out")?;

    let mut base = BenchConfig::new(d.design, d.response);
    base.p = d.p;
    base.n_source = d.n_source;
    base.n_target = d.n_target;
    base.delta = d.delta;
    base.seed = d.seed;
    base.methods = methods;
    if let Some(r) = settings.pick(args.repetitions, "repetitions")? {
        base.repetitions = r;
    }
    if let Some(i) = settings.pick(args.iterations, "iterations")? {
        base.search_iterations = i;
    }
    if let Some(p) = settings.pick::<String>(args.projection.clone(), "projection")? {
        base.projection = p.parse()?;
    }
    if let Some(m) = settings.pick(args.max_iter, "max_iter")? {
        base.solver.max_iter = m;
    }
    if let Some(t) = settings.pick(args.tol, "tol")? {
        base.solver.tol = t;
    }

    // the scenario only matters for the extrapolation design
    let grid = if d.design == Design::TwoGroup {
        vec![Scenario::Same]
    } else {
        scenarios
    };
    let mut results = Vec::with_capacity(grid.len());
    for scenario in grid {
        let mut cfg = base.clone();
        cfg.scenario = scenario;
        results.push(run_bench(&cfg)?);
    }

    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        let mut table = String::new();
        for r in &results {
            table.push_str(&r.table());
            table.push('\n');
            let name = match r.config.design {
                Design::TwoGroup => "repetitions.csv".to_string(),
                Design::Extrapolation => format!("repetitions_{}.csv", r.config.scenario.name()),
            };
            std::fs::write(dir.join(name), r.repetitions_csv())?;
        }
        std::fs::write(dir.join("results.txt"), table)?;
        let configs: Vec<Value> = results
            .iter()
            .map(|r| json!({ "config": r.config, "provenance": provenance(r.config.seed, &r.config_hash) }))
            .collect();
        std::fs::write(
            dir.join("config.json"),
            serde_json::to_string_pretty(&configs)?,
        )?;
    }
    Ok(results)
}

/// Runs a parsed command and returns the text to print on success.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Fit(a) => Ok(cmd_fit(&a)?.describe()),
        Command::Predict(a) => {
            let n = cmd_predict(&a)?.len();
            Ok(match a.out {
                Some(p) => format!("wrote {n} predictions to {}\n", p.display()),
                None => String::new(),
            })
        }
        Command::Tune(a) => {
            let s = cmd_tune(&a)?;
            let h = &s.search.best;
            Ok(format!(
                "best trial {} score {}\nlambda1={} lambda2={} gamma1={} gamma2={} gamma3={}\nfailed trials: {}\nnonzero coefficients: {}\n",
                s.search.best_index,
                report::full(s.search.best_score),
                report::full(h.lambda1),
                report::full(h.lambda2),
                report::full(h.gamma1),
                report::full(h.gamma2),
                report::full(h.gamma3),
                s.search.failed(),
                s.model.nonzero_count()
            ))
        }
        Command::Simulate(a) => {
            let s = cmd_simulate(&a)?;
            Ok(format!(
                "simulated {} labeled, {} unlabeled, p = {}\n",
                s.bundle.x_source.nrows(),
                s.bundle.x_target.nrows(),
                s.bundle.p()
            ))
        }
        Command::Bench(a) => Ok(cmd_bench(&a)?.iter().map(|r| r.table() + "\n").collect()),
    }
}

/// Process exit code for an error: 2 for numeric failures, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        2
    } else {
        1
    }
}
