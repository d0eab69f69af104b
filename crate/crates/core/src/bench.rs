//! Monte-Carlo benchmark: simulate, tune each method on the validation rows, score on
//! the test rows, and aggregate over repetitions.
//!
//! Repetition `r` draws its simulation and search seeds from a ChaCha20 stream keyed
//! by `(seed, r)`, so results do not depend on how repetitions are scheduled. All
//! methods in a repetition share the same data and the same search seed.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::BuildOptions;
use crate::error::{Error, Result};
use crate::loss::LossFamily;
use crate::metrics::{self, MetricName};
use crate::model::{Fitter, Hyperparams, PredictType};
use crate::report;
use crate::search::{default_metric, search_with, Method, SearchSpace};
use crate::simulate::{
    simulate_extrapolation, simulate_two_group, ExtrapSpec, Scenario, SimBundle, TwoGroupSpec,
};
use crate::solver::FistaConfig;
use crate::transform::ProjectionMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    TwoGroup,
    Extrapolation,
}

impl std::str::FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-group" | "groups" => Ok(Self::TwoGroup),
            "extrapolation" | "extra" => Ok(Self::Extrapolation),
            other => Err(Error::InvalidParameter(format!("design `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub design: Design,
    /// Only used by the extrapolation design.
    pub scenario: Scenario,
    /// `None` picks the design default (50 for two-group, 100/20 for extrapolation).
    pub p: Option<usize>,
    pub n_source: usize,
    pub n_target: usize,
    /// `None` picks the extrapolation default shift.
    pub delta: Option<f64>,
    pub response: LossFamily,
    pub repetitions: usize,
    pub search_iterations: usize,
    /// Sampling ranges; its `iterations` and `seed` are replaced by `search_iterations`
    /// and the per-repetition search seed.
    pub space: SearchSpace,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub projection: ProjectionMode,
    pub solver: FistaConfig,
}

impl BenchConfig {
    pub fn new(design: Design, response: LossFamily) -> Self {
        Self {
            design,
            scenario: Scenario::Same,
            p: None,
            n_source: 50,
            n_target: 50,
            delta: None,
            response,
            repetitions: 100,
            search_iterations: 1000,
            space: SearchSpace::default(),
            seed: 0,
            methods: vec![Method::S2net, Method::Baseline],
            projection: ProjectionMode::Auto,
            solver: FistaConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods selected".into()));
        }
        self.solver.validate()
    }

    /// Hex SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_string(self)?;
        Ok(hex::encode(Sha256::digest(json.as_bytes())))
    }

    fn simulate(&self, seed: u64) -> Result<SimBundle> {
        match self.design {
            Design::TwoGroup => {
                let mut spec =
                    TwoGroupSpec::new(self.p.unwrap_or(50), self.n_target, self.response, seed);
                spec.n_source = self.n_source;
                simulate_two_group(&spec)
            }
            Design::Extrapolation => {
                let mut spec = ExtrapSpec::new(self.scenario, self.n_target, self.response, seed);
                spec.n_source = self.n_source;
                if let Some(p) = self.p {
                    spec.p = p;
                }
                if let Some(d) = self.delta {
                    spec.delta = d;
                }
                simulate_extrapolation(&spec)
            }
        }
    }

    /// Test metric: MSE for linear responses, AUC in percent for logistic ones.
    pub fn test_metric_name(&self) -> &'static str {
        match self.response {
            LossFamily::Linear => "mse",
            LossFamily::Logistic => "auc_percent",
        }
    }
}

/// Simulation and search seeds for repetition `rep`.
pub fn repetition_seeds(seed: u64, rep: usize) -> (u64, u64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    (rng.next_u64(), rng.next_u64())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub repetition: usize,
    pub method: Method,
    pub sim_seed: u64,
    pub search_seed: u64,
    pub test_metric: Option<f64>,
    pub validation_score: Option<f64>,
    pub hyper: Option<Hyperparams>,
    pub failed_trials: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean: f64,
    pub sd: f64,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub config: BenchConfig,
    pub config_hash: String,
    /// Ordered by repetition, then by the order of `config.methods`.
    pub outcomes: Vec<RepOutcome>,
}

fn run_repetition(cfg: &BenchConfig, rep: usize) -> Vec<RepOutcome> {
    let (sim_seed, search_seed) = repetition_seeds(cfg.seed, rep);
    let failed = |method: Method, e: String| RepOutcome {
        repetition: rep,
        method,
        sim_seed,
        search_seed,
        test_metric: None,
        validation_score: None,
        hyper: None,
        failed_trials: 0,
        error: Some(e),
    };
    let prepared = match cfg
        .simulate(sim_seed)
        .and_then(|b| b.prepare(BuildOptions::default()))
    {
        Ok(p) => p,
        Err(e) => {
            return cfg
                .methods
                .iter()
                .map(|&m| failed(m, e.to_string()))
                .collect()
        }
    };
    let fitter = Fitter::new(&prepared.train, cfg.projection);
    let mut metric = default_metric(cfg.response);
    if metric == MetricName::Auc && single_class(&prepared.valid.y) {
        // AUC is undefined on a one-class validation set
        metric = MetricName::Deviance;
    }
    let space = SearchSpace {
        iterations: cfg.search_iterations,
        seed: search_seed,
        ..cfg.space.clone()
    };

    cfg.methods
        .iter()
        .map(|&method| {
            let run = || -> Result<RepOutcome> {
                let res = search_with(
                    &fitter,
                    &prepared.valid,
                    &space,
                    &cfg.solver,
                    method,
                    metric,
                )?;
                let model = fitter.fit(&res.best, &cfg.solver)?;
                let test = match cfg.response {
                    LossFamily::Linear => {
                        let pred = model.predict_matrix(&prepared.x_test, PredictType::Default)?;
                        metrics::mse(&pred, &prepared.y_test)?
                    }
                    LossFamily::Logistic => {
                        let eta = model.predict_matrix(&prepared.x_test, PredictType::Link)?;
                        100.0 * metrics::auc(&eta, &prepared.y_test)?
                    }
                };
                Ok(RepOutcome {
                    repetition: rep,
                    method,
                    sim_seed,
                    search_seed,
                    test_metric: Some(test),
                    validation_score: Some(res.best_score),
                    hyper: Some(res.best),
                    failed_trials: res.failed(),
                    error: None,
                })
            };
            run().unwrap_or_else(|e| failed(method, e.to_string()))
        })
        .collect()
}

fn single_class(y: &[f64]) -> bool {
    y.iter().all(|&v| v == y[0])
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let outcomes: Vec<RepOutcome> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(cfg, rep))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(BenchResult {
        config: cfg.clone(),
        config_hash: cfg.hash()?,
        outcomes,
    })
}

impl BenchResult {
    pub fn summary(&self) -> Vec<MethodSummary> {
        self.config
            .methods
            .iter()
            .map(|&method| {
                let rows: Vec<&RepOutcome> = self
                    .outcomes
                    .iter()
                    .filter(|o| o.method == method)
                    .collect();
                let vals: Vec<f64> = rows.iter().filter_map(|o| o.test_metric).collect();
                let n = vals.len();
                let mean = if n == 0 {
                    f64::NAN
                } else {
                    vals.iter().sum::<f64>() / n as f64
                };
                let sd = if n < 2 {
                    f64::NAN
                } else {
                    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
                };
                MethodSummary {
                    method,
                    mean,
                    sd,
                    completed: n,
                    failed: rows.len() - n,
                }
            })
            .collect()
    }

    pub fn mean(&self, method: Method) -> Option<f64> {
        self.summary()
            .into_iter()
            .find(|s| s.method == method)
            .map(|s| s.mean)
    }

    /// Human-readable table, one row per method, numbers to 3 significant digits.
    pub fn table(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "design={} scenario={} response={} reps={} search_iterations={}",
            serde_json::to_value(c.design)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            c.scenario.name(),
            if c.response == LossFamily::Linear {
                "linear"
            } else {
                "logistic"
            },
            c.repetitions,
            c.search_iterations
        );
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>10} {:>6} {:>6}",
            "method",
            c.test_metric_name(),
            "sd",
            "ok",
            "failed"
        );
        for s in self.summary() {
            let _ = writeln!(
                out,
                "{:<10} {:>10} {:>10} {:>6} {:>6}",
                s.method.name(),
                report::sig3(s.mean),
                report::sig3(s.sd),
                s.completed,
                s.failed
            );
        }
        out
    }

    /// Per-repetition CSV at full precision, preceded by a provenance comment line.
    pub fn repetitions_csv(&self) -> String {
        let mut out = report::provenance_line(self.config.seed, &self.config_hash);
        let _ = writeln!(
            out,
            "repetition,method,sim_seed,search_seed,{},validation_score,lambda1,lambda2,gamma1,gamma2,gamma3,failed_trials,error",
            self.config.test_metric_name()
        );
        let opt = |v: Option<f64>| v.map(report::full).unwrap_or_default();
        for o in &self.outcomes {
            let h = o.hyper;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                o.repetition,
                o.method.name(),
                o.sim_seed,
                o.search_seed,
                opt(o.test_metric),
                opt(o.validation_score),
                opt(h.map(|h| h.lambda1)),
                opt(h.map(|h| h.lambda2)),
                opt(h.map(|h| h.gamma1)),
                opt(h.map(|h| h.gamma2)),
                opt(h.map(|h| h.gamma3)),
                o.failed_trials,
                o.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            );
        }
        out
    }
}
