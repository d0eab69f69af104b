//! Fit and predict.
//!
//! A [`Fitter`] holds one dataset and caches the shift projection and the SVD of the
//! unlabeled block, so repeated fits over different hyper-parameters (as in random
//! search) only rebuild `T` and rerun the solver. Fits with `gamma1 = 0` never touch
//! the unlabeled data and reduce to the supervised elastic-net.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{check_version, Dataset, Preprocess, RawTable, DOCUMENT_VERSION};
use crate::error::{Error, Result};
use crate::loss::{sigmoid, CompositeLoss, LossFamily};
use crate::solver::{self, FistaConfig, SolveReport};
use crate::transform::{self, ProjectionMode, UnlabeledSvd};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hyperparams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

impl Hyperparams {
    pub fn supervised(lambda1: f64, lambda2: f64) -> Self {
        Self {
            lambda1,
            lambda2,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v}")));
            }
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictType {
    /// Link for linear models, probability for logistic ones.
    #[default]
    Default,
    Link,
    Probability,
    Class,
}

impl std::str::FromStr for PredictType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Self::Default),
            "link" => Ok(Self::Link),
            "probability" => Ok(Self::Probability),
            "class" => Ok(Self::Class),
            other => Err(Error::InvalidParameter(format!(
                "prediction type `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub beta: DVector<f64>,
    /// Labeled mean response for linear models, zero for logistic ones.
    pub intercept: f64,
    pub preprocess: Preprocess,
    pub family: LossFamily,
    pub hyper: Hyperparams,
    pub report: SolveReport,
    pub projection_applied: bool,
}

#[derive(Debug)]
struct Prepared {
    svd: UnlabeledSvd,
    projection_applied: bool,
}

pub struct Fitter<'a> {
    ds: &'a Dataset,
    mode: ProjectionMode,
    prepared: OnceLock<std::result::Result<Prepared, String>>,
}

impl<'a> Fitter<'a> {
    pub fn new(ds: &'a Dataset, mode: ProjectionMode) -> Self {
        Self {
            ds,
            mode,
            prepared: OnceLock::new(),
        }
    }

    pub fn dataset(&self) -> &Dataset {
        self.ds
    }

    /// Whether the unlabeled projection and SVD have been computed.
    pub fn transform_computed(&self) -> bool {
        self.prepared.get().is_some()
    }

    fn prepared(&self) -> Result<&Prepared> {
        let res = self.prepared.get_or_init(|| {
            let shift = transform::shift_projection(self.ds, self.ds.response, self.mode);
            transform::decompose(&shift.xu)
                .map(|svd| Prepared {
                    svd,
                    projection_applied: shift.applied,
                })
                .map_err(|e| e.to_string())
        });
        res.as_ref().map_err(|e| Error::NonFinite(e.clone()))
    }

    /// Target for the unlabeled term: the mean of the labels as the loss sees them
    /// (zero for centered linear responses, the positive rate for logistic ones).
    fn unlabeled_target(&self) -> f64 {
        self.ds.yl.mean()
    }

    pub fn fit(&self, hyper: &Hyperparams, cfg: &FistaConfig) -> Result<FittedModel> {
        hyper.validate()?;
        let ds = self.ds;
        let family = ds.response;
        let supervised = CompositeLoss::supervised(family, &ds.xl, &ds.yl)?;

        let (report, projection_applied) = if hyper.gamma1 == 0.0 {
            (
                solver::solve(&supervised, hyper.lambda1, hyper.lambda2, cfg, None)?,
                false,
            )
        } else {
            if ds.n_unlabeled() == 0 {
                return Err(Error::NoUnlabeledData);
            }
            let prep = self.prepared()?;
            let tu = transform::build_t(&prep.svd, hyper.gamma2, hyper.gamma3)?;
            let cl = supervised.with_unlabeled(&tu.t, self.unlabeled_target(), hyper.gamma1)?;
            (
                solver::solve(&cl, hyper.lambda1, hyper.lambda2, cfg, None)?,
                prep.projection_applied,
            )
        };

        let intercept = match family {
            LossFamily::Linear => ds.preprocess.labels_center,
            LossFamily::Logistic => 0.0,
        };
        Ok(FittedModel {
            beta: DVector::from_column_slice(&report.beta),
            intercept,
            preprocess: ds.preprocess.clone(),
            family,
            hyper: *hyper,
            report,
            projection_applied,
        })
    }
}

pub fn fit(
    ds: &Dataset,
    hyper: &Hyperparams,
    cfg: &FistaConfig,
    mode: ProjectionMode,
) -> Result<FittedModel> {
    Fitter::new(ds, mode).fit(hyper, cfg)
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    software_version: String,
    family: LossFamily,
    beta: Vec<f64>,
    intercept: f64,
    hyper: Hyperparams,
    projection_applied: bool,
    report: SolveReport,
    preprocess: Preprocess,
}

impl FittedModel {
    pub fn nonzero_count(&self) -> usize {
        self.beta.iter().filter(|&&b| b != 0.0).count()
    }

    /// Linear predictor for an already preprocessed matrix.
    pub fn link(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.ncols() != self.beta.len() {
            return Err(Error::Dimension(format!(
                "matrix has {} columns, model has {}",
                x.ncols(),
                self.beta.len()
            )));
        }
        Ok((x * &self.beta).add_scalar(self.intercept))
    }

    pub fn predict_matrix(&self, x: &DMatrix<f64>, kind: PredictType) -> Result<Vec<f64>> {
        let eta = self.link(x)?;
        match (self.family, kind) {
            (_, PredictType::Link) | (LossFamily::Linear, PredictType::Default) => {
                Ok(eta.as_slice().to_vec())
            }
            (LossFamily::Logistic, PredictType::Probability | PredictType::Default) => {
                Ok(eta.iter().map(|&e| sigmoid(e)).collect())
            }
            (LossFamily::Logistic, PredictType::Class) => Ok(eta
                .iter()
                .map(|&e| if sigmoid(e) >= 0.5 { 1.0 } else { 0.0 })
                .collect()),
            (LossFamily::Linear, k) => Err(Error::InvalidParameter(format!(
                "prediction type {k:?} needs a logistic model"
            ))),
        }
    }

    pub fn predict(&self, table: &RawTable, kind: PredictType) -> Result<Vec<f64>> {
        let x = self.preprocess.replay(table)?;
        self.predict_matrix(&x, kind)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument {
            format: "s2net-model".into(),
            version: DOCUMENT_VERSION,
            software_version: crate::VERSION.into(),
            family: self.family,
            beta: self.beta.as_slice().to_vec(),
            intercept: self.intercept,
            hyper: self.hyper,
            projection_applied: self.projection_applied,
            report: self.report.clone(),
            preprocess: self.preprocess.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        check_version(doc.version)?;
        if doc.beta.len() != doc.preprocess.ncols() {
            return Err(Error::Dimension(
                "beta length differs from preprocessed columns".into(),
            ));
        }
        Ok(Self {
            beta: DVector::from_vec(doc.beta),
            intercept: doc.intercept,
            preprocess: doc.preprocess,
            family: doc.family,
            hyper: doc.hyper,
            report: doc.report,
            projection_applied: doc.projection_applied,
        })
    }
}
