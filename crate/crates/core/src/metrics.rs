//! Evaluation metrics for validation scoring and benchmarks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::stable_log1pexp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Mse,
    Auc,
    Accuracy,
    Deviance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub name: MetricName,
    pub value: f64,
    pub n: usize,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("{a} predictions for {b} labels")));
    }
    if a == 0 {
        return Err(Error::Empty("no observations to score".into()));
    }
    Ok(())
}

pub fn mse(yhat: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(yhat.len(), y.len())?;
    let ss: f64 = yhat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(ss / y.len() as f64)
}

/// Area under the ROC curve as the Mann-Whitney statistic; tied scores count one half.
pub fn auc(scores: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(scores.len(), y.len())?;
    if let Some(&v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Metric(format!("auc label {v} is not 0 or 1")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("auc score is NaN".into()));
    }
    let n_pos = y.iter().filter(|&&v| v == 1.0).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric("auc needs both classes".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // midranks over runs of exactly equal scores
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        rank_sum_pos += midrank * order[i..j].iter().filter(|&&k| y[k] == 1.0).count() as f64;
        i = j;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

pub fn accuracy(classes: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(classes.len(), y.len())?;
    let hits = classes.iter().zip(y).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y.len() as f64)
}

/// Mean logistic risk `(1/n) sum log(1 + e^eta) - y eta` of linear predictors `eta`.
pub fn deviance(eta: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(eta.len(), y.len())?;
    let s: f64 = eta
        .iter()
        .zip(y)
        .map(|(&e, &yi)| stable_log1pexp(e) - yi * e)
        .sum();
    Ok(s / y.len() as f64)
}

impl MetricName {
    pub fn evaluate(self, prediction: &[f64], y: &[f64]) -> Result<EvalOutcome> {
        let value = match self {
            MetricName::Mse => mse(prediction, y)?,
            MetricName::Auc => auc(prediction, y)?,
            MetricName::Accuracy => accuracy(prediction, y)?,
            MetricName::Deviance => deviance(prediction, y)?,
        };
        Ok(EvalOutcome {
            name: self,
            value,
            n: y.len(),
        })
    }

    /// Whether larger values are better.
    pub fn maximize(self) -> bool {
        matches!(self, MetricName::Auc | MetricName::Accuracy)
    }
}

impl std::str::FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(Self::Mse),
            "auc" => Ok(Self::Auc),
            "accuracy" => Ok(Self::Accuracy),
            "deviance" => Ok(Self::Deviance),
            other => Err(Error::InvalidParameter(format!("metric `{other}`"))),
        }
    }
}
