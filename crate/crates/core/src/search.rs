//! Random-search tuning against a labeled validation set.
//!
//! Every parameter is drawn as `2^U[lo, hi]`. Trial `i` draws from its own ChaCha20
//! stream (`seed`, stream `i`), so trials can be evaluated in any order or
//! concurrently and still reproduce bit for bit.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::LossFamily;
use crate::metrics::MetricName;
use crate::model::{FittedModel, Fitter, Hyperparams, PredictType};
use crate::report;
use crate::solver::FistaConfig;
use crate::transform::ProjectionMode;

/// Exponent range for a `2^U[lo, hi]` draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Log2Range {
    pub lo: f64,
    pub hi: f64,
}

impl Log2Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(exponent: f64) -> Self {
        Self::new(exponent, exponent)
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random();
        (self.lo + (self.hi - self.lo) * u).exp2()
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo.exp2() && v <= self.hi.exp2()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub lambda1: Log2Range,
    pub lambda2: Log2Range,
    pub gamma1: Log2Range,
    pub gamma2: Log2Range,
    pub gamma3: Log2Range,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        let small = Log2Range::new(-8.0, 1.0);
        Self {
            lambda1: small,
            lambda2: small,
            gamma1: small,
            gamma2: Log2Range::new(-1.0, 10.0),
            gamma3: small,
            iterations: 1000,
            seed: 0,
        }
    }
}

impl SearchSpace {
    pub fn with_budget(iterations: usize, seed: u64) -> Self {
        Self {
            iterations,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "search needs at least one iteration".into(),
            ));
        }
        for r in [
            self.lambda1,
            self.lambda2,
            self.gamma1,
            self.gamma2,
            self.gamma3,
        ] {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
                return Err(Error::InvalidParameter(format!("bad range {r:?}")));
            }
        }
        Ok(())
    }

    /// Draws trial `index`. Parameters are drawn in the order lambda1, lambda2, gamma1,
    /// gamma2, gamma3.
    pub fn sample(&self, index: usize) -> Hyperparams {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        Hyperparams {
            lambda1: self.lambda1.draw(&mut rng),
            lambda2: self.lambda2.draw(&mut rng),
            gamma1: self.gamma1.draw(&mut rng),
            gamma2: self.gamma2.draw(&mut rng),
            gamma3: self.gamma3.draw(&mut rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    S2net,
    /// Same draws with the unlabeled weights forced to zero.
    Baseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::S2net => "s2net",
            Method::Baseline => "baseline",
        }
    }

    pub fn adjust(self, mut h: Hyperparams) -> Hyperparams {
        if self == Method::Baseline {
            h.gamma1 = 0.0;
            h.gamma2 = 0.0;
            h.gamma3 = 0.0;
        }
        h
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s2net" => Ok(Self::S2net),
            "baseline" => Ok(Self::Baseline),
            other => Err(Error::InvalidParameter(format!("method `{other}`"))),
        }
    }
}

/// Validation rows already mapped through the training preprocessing, with raw labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSet {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
}

pub fn default_metric(family: LossFamily) -> MetricName {
    match family {
        LossFamily::Linear => MetricName::Mse,
        LossFamily::Logistic => MetricName::Auc,
    }
}

/// Validation score to minimize: the metric itself, or its negation for AUC and accuracy.
pub fn score(model: &FittedModel, valid: &ValidationSet, metric: MetricName) -> Result<f64> {
    let kind = match metric {
        MetricName::Mse => PredictType::Default,
        MetricName::Auc | MetricName::Deviance => PredictType::Link,
        MetricName::Accuracy => PredictType::Class,
    };
    let pred = model.predict_matrix(&valid.x, kind)?;
    let v = metric.evaluate(&pred, &valid.y)?.value;
    Ok(if metric.maximize() { -v } else { v })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub hyper: Hyperparams,
    /// `+inf` when the fit or the scoring failed.
    pub score: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Hyperparams,
    pub best_score: f64,
    pub best_index: usize,
    pub metric: MetricName,
    pub method: Method,
    pub seed: u64,
    pub trials: Vec<Trial>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub method: Method,
    pub metric: MetricName,
    pub projection: ProjectionMode,
}

pub fn random_search(
    train: &Dataset,
    valid: &ValidationSet,
    space: &SearchSpace,
    cfg: &FistaConfig,
    opts: SearchOptions,
) -> Result<SearchResult> {
    let fitter = Fitter::new(train, opts.projection);
    search_with(&fitter, valid, space, cfg, opts.method, opts.metric)
}

pub fn search_with(
    fitter: &Fitter<'_>,
    valid: &ValidationSet,
    space: &SearchSpace,
    cfg: &FistaConfig,
    method: Method,
    metric: MetricName,
) -> Result<SearchResult> {
    space.validate()?;
    if valid.y.is_empty() || valid.x.nrows() != valid.y.len() {
        return Err(Error::Dimension(format!(
            "validation set has {} rows and {} labels",
            valid.x.nrows(),
            valid.y.len()
        )));
    }

    let trials: Vec<Trial> = (0..space.iterations)
        .into_par_iter()
        .map(|index| {
            let hyper = method.adjust(space.sample(index));
            let outcome = fitter
                .fit(&hyper, cfg)
                .and_then(|m| score(&m, valid, metric));
            match outcome {
                Ok(s) if !s.is_nan() => Trial {
                    index,
                    hyper,
                    score: s,
                    error: None,
                },
                Ok(_) => Trial {
                    index,
                    hyper,
                    score: f64::INFINITY,
                    error: Some("validation score is NaN".into()),
                },
                Err(e) => Trial {
                    index,
                    hyper,
                    score: f64::INFINITY,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let best = trials
        .iter()
        .filter(|t| t.error.is_none())
        .fold(None::<&Trial>, |acc, t| match acc {
            Some(b) if b.score <= t.score => Some(b),
            _ => Some(t),
        })
        .ok_or(Error::AllTrialsFailed(trials.len()))?;

    Ok(SearchResult {
        best: best.hyper,
        best_score: best.score,
        best_index: best.index,
        metric,
        method,
        seed: space.seed,
        trials,
    })
}

impl SearchResult {
    pub fn failed(&self) -> usize {
        self.trials.iter().filter(|t| t.error.is_some()).count()
    }

    /// One row per trial, numbers at full precision.
    pub fn trials_csv(&self) -> String {
        let mut out = String::from("trial,lambda1,lambda2,gamma1,gamma2,gamma3,score,error\n");
        for t in &self.trials {
            let h = &t.hyper;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                t.index,
                report::full(h.lambda1),
                report::full(h.lambda2),
                report::full(h.gamma1),
                report::full(h.gamma2),
                report::full(h.gamma3),
                report::full(t.score),
                t.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            );
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            method: Method,
            metric: MetricName,
            seed: u64,
            iterations: usize,
            failed: usize,
            best_index: usize,
            best_score: f64,
            best: &'a Hyperparams,
        }
        Ok(serde_json::to_string_pretty(&Summary {
            method: self.method,
            metric: self.metric,
            seed: self.seed,
            iterations: self.trials.len(),
            failed: self.failed(),
            best_index: self.best_index,
            best_score: self.best_score,
            best: &self.best,
        })?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_dataset, BuildOptions, RawTable};
    use crate::model::fit;
    use rand_chacha::ChaCha8Rng;

    fn problem() -> (Dataset, ValidationSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gen = |rng: &mut ChaCha8Rng, n: usize| {
            let x = DMatrix::from_fn(n, 4, |_, _| rng.random_range(-1.0..1.0));
            let y: Vec<f64> = (0..n)
                .map(|i| x[(i, 0)] - x[(i, 3)] + 0.3 * rng.random_range(-1.0..1.0))
                .collect();
            (x, y)
        };
        let (xl, yl) = gen(&mut rng, 30);
        let (xu, _) = gen(&mut rng, 25);
        let (xv, yv) = gen(&mut rng, 20);
        let ds = build_dataset(
            &RawTable::from_matrix(&xl, "x").unwrap(),
            &yl,
            Some(&RawTable::from_matrix(&xu, "x").unwrap()),
            LossFamily::Linear,
            BuildOptions::default(),
        )
        .unwrap();
        let xv = ds
            .preprocess
            .replay(&RawTable::from_matrix(&xv, "x").unwrap())
            .unwrap();
        (ds, ValidationSet { x: xv, y: yv })
    }

    fn opts() -> SearchOptions {
        SearchOptions {
            method: Method::S2net,
            metric: MetricName::Mse,
            projection: ProjectionMode::Auto,
        }
    }

    #[test]
    fn draws_stay_in_range() {
        let space = SearchSpace::with_budget(500, 3);
        for i in 0..500 {
            let h = space.sample(i);
            assert!(space.lambda1.contains(h.lambda1) && space.lambda2.contains(h.lambda2));
            assert!(space.gamma1.contains(h.gamma1) && space.gamma3.contains(h.gamma3));
            assert!((0.5..=1024.0).contains(&h.gamma2));
        }
    }

    #[test]
    fn single_iteration_returns_the_draw() {
        let (ds, valid) = problem();
        let space = SearchSpace::with_budget(1, 42);
        let res = random_search(&ds, &valid, &space, &FistaConfig::default(), opts()).unwrap();
        assert_eq!(res.best, space.sample(0));
        assert_eq!(res.trials.len(), 1);
    }

    #[test]
    fn degenerate_space_matches_direct_fit() {
        let (ds, valid) = problem();
        let pt = Log2Range::point(-2.0);
        let space = SearchSpace {
            lambda1: pt,
            lambda2: pt,
            gamma1: pt,
            gamma2: Log2Range::point(1.0),
            gamma3: pt,
            iterations: 4,
            seed: 0,
        };
        let res = random_search(&ds, &valid, &space, &FistaConfig::default(), opts()).unwrap();
        let h = Hyperparams {
            lambda1: 0.25,
            lambda2: 0.25,
            gamma1: 0.25,
            gamma2: 2.0,
            gamma3: 0.25,
        };
        assert_eq!(res.best, h);
        assert_eq!(res.best_index, 0);
        let m = fit(&ds, &h, &FistaConfig::default(), ProjectionMode::Auto).unwrap();
        assert_eq!(res.best_score, score(&m, &valid, MetricName::Mse).unwrap());
    }

    #[test]
    fn same_seed_same_trials_and_best_is_minimum() {
        let (ds, valid) = problem();
        let space = SearchSpace::with_budget(24, 7);
        let a = random_search(&ds, &valid, &space, &FistaConfig::default(), opts()).unwrap();
        let b = random_search(&ds, &valid, &space, &FistaConfig::default(), opts()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials_csv(), b.trials_csv());
        assert!(a.trials.iter().all(|t| a.best_score <= t.score));
    }

    #[test]
    fn baseline_forces_gamma1_zero() {
        let (ds, valid) = problem();
        let space = SearchSpace::with_budget(5, 1);
        let o = SearchOptions {
            method: Method::Baseline,
            ..opts()
        };
        let res = random_search(&ds, &valid, &space, &FistaConfig::default(), o).unwrap();
        assert!(res.trials.iter().all(|t| t.hyper.gamma1 == 0.0));
        let s = space.sample(res.best_index);
        assert_eq!((res.best.lambda1, res.best.lambda2), (s.lambda1, s.lambda2));
    }

    #[test]
    fn all_failed_is_an_error() {
        let (mut ds, valid) = problem();
        ds.xu = DMatrix::zeros(0, ds.ncols());
        let space = SearchSpace::with_budget(3, 1);
        let err = random_search(&ds, &valid, &space, &FistaConfig::default(), opts()).unwrap_err();
        assert!(matches!(err, Error::AllTrialsFailed(3)));
    }
}
