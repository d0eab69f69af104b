//! Unlabeled-data transform `T(gamma2, gamma3)` and mean-shift removal.
//!
//! `T = sqrt(gamma2) U (S^2 + gamma2 I)^(-1/2) S V^T + gamma3 1 mu^T` where `U S V^T` is
//! the thin SVD of the centered unlabeled block and `mu` its column means. `gamma2`
//! caps the spread along each principal direction at `sqrt(gamma2)`; `gamma3` weights
//! the mean shift.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::LossFamily;

/// Singular values below this fraction of the largest one are dropped.
pub const SVD_TRUNCATION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledSvd {
    /// `n_U x r`
    pub u: DMatrix<f64>,
    /// Descending, strictly positive.
    pub sigma: DVector<f64>,
    /// `r x p`
    pub v_t: DMatrix<f64>,
    pub mu: DVector<f64>,
}

impl UnlabeledSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.mu.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedUnlabeled {
    pub t: DMatrix<f64>,
    pub gamma2: f64,
    pub gamma3: f64,
    pub projection_applied: bool,
}

pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows() as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// Thin SVD of `xu - 1 mu^T`, truncated to the numerically nonzero spectrum.
pub fn decompose(xu: &DMatrix<f64>) -> Result<UnlabeledSvd> {
    let (n, p) = xu.shape();
    if n == 0 {
        return Err(Error::Empty("unlabeled matrix has no rows".into()));
    }
    let mu = column_means(xu);
    let mut centered = xu.clone();
    for (mut col, &m) in centered.column_iter_mut().zip(mu.iter()) {
        col.add_scalar_mut(-m);
    }
    if centered.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("unlabeled matrix".into()));
    }

    let svd = centered.svd(true, true);
    let (Some(u_full), Some(vt_full)) = (svd.u, svd.v_t) else {
        return Err(Error::NonFinite(
            "SVD did not produce singular vectors".into(),
        ));
    };
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let smax = order.first().map_or(0.0, |&i| sv[i]);
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| smax > 0.0 && sv[i] > SVD_TRUNCATION * smax)
        .collect();
    let r = keep.len();

    let u = DMatrix::from_fn(n, r, |i, k| u_full[(i, keep[k])]);
    let v_t = DMatrix::from_fn(r, p, |k, j| vt_full[(keep[k], j)]);
    let sigma = DVector::from_fn(r, |k, _| sv[keep[k]]);
    Ok(UnlabeledSvd { u, sigma, v_t, mu })
}

/// Diagonal weights `sqrt(gamma2) s / sqrt(s^2 + gamma2)` applied to the singular values.
pub fn damped_singular_values(sigma: &DVector<f64>, gamma2: f64) -> DVector<f64> {
    let root = gamma2.sqrt();
    sigma.map(|s| root * s / (s * s + gamma2).sqrt())
}

pub fn build_t(svd: &UnlabeledSvd, gamma2: f64, gamma3: f64) -> Result<TransformedUnlabeled> {
    for (name, v) in [("gamma2", gamma2), ("gamma3", gamma3)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} = {v}")));
        }
    }
    let (n, p) = (svd.nrows(), svd.ncols());
    let mut t = if gamma2 > 0.0 && svd.rank() > 0 {
        let d = damped_singular_values(&svd.sigma, gamma2);
        let mut ud = svd.u.clone();
        for (mut col, &dk) in ud.column_iter_mut().zip(d.iter()) {
            col.scale_mut(dk);
        }
        ud * &svd.v_t
    } else {
        DMatrix::zeros(n, p)
    };
    for (j, mut col) in t.column_iter_mut().enumerate() {
        col.add_scalar_mut(gamma3 * svd.mu[j]);
    }
    Ok(TransformedUnlabeled {
        t,
        gamma2,
        gamma3,
        projection_applied: false,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMode {
    /// Project only when the shift is within 45 degrees of the descent direction.
    #[default]
    Auto,
    Always,
    Never,
}

impl std::str::FromStr for ProjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "always" => Ok(Self::Always),
            "never" => Ok(Self::Never),
            other => Err(Error::InvalidParameter(format!(
                "projection mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOutcome {
    pub xu: DMatrix<f64>,
    pub applied: bool,
    /// Unit descent direction `-grad R(0) / |grad R(0)|`; `None` when the gradient vanishes.
    pub direction: Option<DVector<f64>>,
    pub cos_theta: f64,
}

/// Removes the component of the unlabeled mean along `-grad R(0 | yL, XL)`.
pub fn shift_projection_matrices(
    xl: &DMatrix<f64>,
    yl: &DVector<f64>,
    xu: &DMatrix<f64>,
    family: LossFamily,
    mode: ProjectionMode,
) -> ShiftOutcome {
    let unchanged = |direction, cos_theta| ShiftOutcome {
        xu: xu.clone(),
        applied: false,
        direction,
        cos_theta,
    };
    if xu.nrows() == 0 {
        return unchanged(None, 0.0);
    }
    let grad0 = family.grad(&DVector::zeros(xl.ncols()), yl, xl);
    let gnorm = grad0.norm();
    if gnorm == 0.0 || !gnorm.is_finite() {
        return unchanged(None, 0.0);
    }
    let p = grad0 / -gnorm;
    let mu = column_means(xu);
    let mu_norm = mu.norm();
    let along = mu.dot(&p);
    let cos_theta = if mu_norm > 0.0 { along / mu_norm } else { 0.0 };

    let apply = match mode {
        ProjectionMode::Always => true,
        ProjectionMode::Never => false,
        ProjectionMode::Auto => cos_theta.abs() >= FRAC_1_SQRT_2,
    };
    if !apply {
        return unchanged(Some(p), cos_theta);
    }
    let mut out = xu.clone();
    for (mut col, &pj) in out.column_iter_mut().zip(p.iter()) {
        col.add_scalar_mut(-along * pj);
    }
    ShiftOutcome {
        xu: out,
        applied: true,
        direction: Some(p),
        cos_theta,
    }
}

pub fn shift_projection(ds: &Dataset, family: LossFamily, mode: ProjectionMode) -> ShiftOutcome {
    shift_projection_matrices(&ds.xl, &ds.yl, &ds.xu, family, mode)
}
