//! Risk functions and the composite semi-supervised loss.
//!
//! Risks are sums over rows, not means, so penalty weights live on the sum scale.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `log(1 + e^eta)` evaluated piecewise so it neither overflows nor loses the tail.
///
/// The middle branch uses `ln_1p`, which keeps full relative precision when `e^eta`
/// is far below one.
#[inline]
pub fn stable_log1pexp(eta: f64) -> f64 {
    if eta > 33.3 {
        eta
    } else if eta > 18.0 {
        eta + (-eta).exp()
    } else if eta >= -37.0 {
        eta.exp().ln_1p()
    } else {
        eta.exp()
    }
}

/// Logistic function, split on the sign of `eta` so `exp` never overflows.
#[inline]
pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossFamily {
    Linear,
    Logistic,
}

impl LossFamily {
    /// `R(beta | y, X)`.
    pub fn value(self, beta: &DVector<f64>, y: &DVector<f64>, x: &DMatrix<f64>) -> f64 {
        let eta = x * beta;
        self.value_from_eta(&eta, y)
    }

    pub fn grad(self, beta: &DVector<f64>, y: &DVector<f64>, x: &DMatrix<f64>) -> DVector<f64> {
        self.value_grad(beta, y, x).1
    }

    pub fn value_grad(
        self,
        beta: &DVector<f64>,
        y: &DVector<f64>,
        x: &DMatrix<f64>,
    ) -> (f64, DVector<f64>) {
        let eta = x * beta;
        let value = self.value_from_eta(&eta, y);
        let grad = match self {
            LossFamily::Linear => {
                let residual = y - &eta;
                x.tr_mul(&residual) * -2.0
            }
            LossFamily::Logistic => {
                let dev = DVector::from_iterator(
                    eta.len(),
                    eta.iter().zip(y.iter()).map(|(&e, &yi)| sigmoid(e) - yi),
                );
                x.tr_mul(&dev)
            }
        };
        (value, grad)
    }

    fn value_from_eta(self, eta: &DVector<f64>, y: &DVector<f64>) -> f64 {
        match self {
            LossFamily::Linear => eta
                .iter()
                .zip(y.iter())
                .map(|(&e, &yi)| (yi - e) * (yi - e))
                .sum(),
            LossFamily::Logistic => eta
                .iter()
                .zip(y.iter())
                .map(|(&e, &yi)| stable_log1pexp(e) - yi * e)
                .sum(),
        }
    }
}

pub fn risk_value(
    family: LossFamily,
    beta: &DVector<f64>,
    y: &DVector<f64>,
    x: &DMatrix<f64>,
) -> f64 {
    family.value(beta, y, x)
}

pub fn risk_grad(
    family: LossFamily,
    beta: &DVector<f64>,
    y: &DVector<f64>,
    x: &DMatrix<f64>,
) -> DVector<f64> {
    family.grad(beta, y, x)
}

/// Unlabeled regularization term `gamma1 * R(beta | target, T)`.
#[derive(Debug, Clone)]
pub struct UnlabeledTerm<'a> {
    pub t: &'a DMatrix<f64>,
    pub target: DVector<f64>,
    pub gamma1: f64,
}

/// `L(beta) = R(beta | yL, XL) + gamma1 * R(beta | ybar 1, T)`.
#[derive(Debug, Clone)]
pub struct CompositeLoss<'a> {
    pub family: LossFamily,
    pub xl: &'a DMatrix<f64>,
    pub yl: &'a DVector<f64>,
    pub unlabeled: Option<UnlabeledTerm<'a>>,
}

impl<'a> CompositeLoss<'a> {
    pub fn supervised(
        family: LossFamily,
        xl: &'a DMatrix<f64>,
        yl: &'a DVector<f64>,
    ) -> Result<Self> {
        if xl.nrows() != yl.len() {
            return Err(Error::Dimension(format!(
                "labeled matrix has {} rows but {} labels",
                xl.nrows(),
                yl.len()
            )));
        }
        Ok(Self {
            family,
            xl,
            yl,
            unlabeled: None,
        })
    }

    /// Adds the unlabeled term with every target entry equal to `ybar`.
    /// `gamma1 == 0` leaves the loss purely supervised.
    pub fn with_unlabeled(self, t: &'a DMatrix<f64>, ybar: f64, gamma1: f64) -> Result<Self> {
        let target = DVector::from_element(t.nrows(), ybar);
        self.with_unlabeled_target(t, target, gamma1)
    }

    pub fn with_unlabeled_target(
        mut self,
        t: &'a DMatrix<f64>,
        target: DVector<f64>,
        gamma1: f64,
    ) -> Result<Self> {
        if !(gamma1 >= 0.0 && gamma1.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma1 = {gamma1}")));
        }
        if t.ncols() != self.xl.ncols() {
            return Err(Error::Dimension(format!(
                "transform has {} columns, labeled data has {}",
                t.ncols(),
                self.xl.ncols()
            )));
        }
        if t.nrows() != target.len() {
            return Err(Error::Dimension(format!(
                "transform has {} rows but target has {}",
                t.nrows(),
                target.len()
            )));
        }
        self.unlabeled = if gamma1 > 0.0 {
            Some(UnlabeledTerm { t, target, gamma1 })
        } else {
            None
        };
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.xl.ncols()
    }

    pub fn value(&self, beta: &DVector<f64>) -> f64 {
        let mut v = self.family.value(beta, self.yl, self.xl);
        if let Some(u) = &self.unlabeled {
            v += u.gamma1 * self.family.value(beta, &u.target, u.t);
        }
        v
    }

    pub fn value_grad(&self, beta: &DVector<f64>) -> (f64, DVector<f64>) {
        let (mut v, mut g) = self.family.value_grad(beta, self.yl, self.xl);
        if let Some(u) = &self.unlabeled {
            let (vu, gu) = self.family.value_grad(beta, &u.target, u.t);
            v += u.gamma1 * vu;
            g.axpy(u.gamma1, &gu, 1.0);
        }
        (v, g)
    }

    /// The unlabeled risk `R(beta | target, T)` without the `gamma1` weight; zero when
    /// the term is absent.
    pub fn unlabeled_risk(&self, beta: &DVector<f64>) -> f64 {
        self.unlabeled
            .as_ref()
            .map_or(0.0, |u| self.family.value(beta, &u.target, u.t))
    }
}
