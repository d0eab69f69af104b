//! FISTA with backtracking for `L(beta) + lambda1 |beta|_1 + lambda2 |beta|_2^2`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::CompositeLoss;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FistaConfig {
    pub max_iter: usize,
    /// Stop once successive proximal iterates differ by less than this in sup-norm.
    pub tol: f64,
    /// Initial step size.
    pub t0: f64,
    /// Backtracking factor in (0, 1).
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Record the objective at every iteration.
    pub trace: bool,
}

impl Default for FistaConfig {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-7,
            t0: 1.0,
            shrink: 0.5,
            max_backtracks: 50,
            trace: false,
        }
    }
}

impl FistaConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iter > 0
            && self.tol > 0.0
            && self.t0 > 0.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.max_backtracks > 0
            && self.tol.is_finite()
            && self.t0.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid solver config {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub final_objective: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_trace: Option<Vec<f64>>,
}

#[inline]
pub fn soft_threshold(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

/// Closed-form minimizer of `|b - beta0 + t grad|^2 / 2t + lambda1 |b|_1 + lambda2 |b|^2`:
/// a soft-thresholded gradient step followed by the ridge factor `1 / (1 + 2 t lambda2)`.
pub fn prox_update(
    beta0: &DVector<f64>,
    grad: &DVector<f64>,
    t: f64,
    lambda1: f64,
    lambda2: f64,
) -> DVector<f64> {
    let ridge = 1.0 / (1.0 + 2.0 * t * lambda2);
    let thr = t * lambda1;
    DVector::from_iterator(
        beta0.len(),
        beta0
            .iter()
            .zip(grad.iter())
            .map(|(&b, &g)| ridge * soft_threshold(b - t * g, thr)),
    )
}

/// Nesterov weight sequence `l_1 = 1`, `l_{k+1} = (1 + sqrt(1 + 4 l_k^2)) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum {
    l: f64,
}

impl Default for Momentum {
    fn default() -> Self {
        Self { l: 1.0 }
    }
}

impl Momentum {
    pub fn current(&self) -> f64 {
        self.l
    }

    pub fn next_weight(&self) -> f64 {
        (1.0 + (1.0 + 4.0 * self.l * self.l).sqrt()) / 2.0
    }

    /// Extrapolated point `u_curr + (l_k - 1)/l_{k+1} (u_curr - u_prev)`; advances `k`.
    pub fn extrapolate(&mut self, u_curr: &DVector<f64>, u_prev: &DVector<f64>) -> DVector<f64> {
        let next = self.next_weight();
        let coef = (self.l - 1.0) / next;
        self.l = next;
        u_curr + (u_curr - u_prev) * coef
    }
}

pub fn penalty(beta: &DVector<f64>, lambda1: f64, lambda2: f64) -> f64 {
    lambda1 * beta.lp_norm(1) + lambda2 * beta.norm_squared()
}

pub fn objective(cl: &CompositeLoss<'_>, beta: &DVector<f64>, lambda1: f64, lambda2: f64) -> f64 {
    cl.value(beta) + penalty(beta, lambda1, lambda2)
}

/// Minimizes the penalized composite loss. Returns the best iterate visited since FISTA
/// is not monotone.
pub fn solve(
    cl: &CompositeLoss<'_>,
    lambda1: f64,
    lambda2: f64,
    cfg: &FistaConfig,
    beta_init: Option<&DVector<f64>>,
) -> Result<SolveReport> {
    cfg.validate()?;
    for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} = {v}")));
        }
    }
    let p = cl.dim();
    let init = match beta_init {
        Some(b) if b.len() != p => {
            return Err(Error::Dimension(format!(
                "beta_init has length {}, expected {p}",
                b.len()
            )))
        }
        Some(b) => b.clone(),
        None => DVector::zeros(p),
    };

    let init_obj = objective(cl, &init, lambda1, lambda2);
    if !init_obj.is_finite() {
        return Err(Error::NonFinite("objective at the initial point".into()));
    }
    let mut best_beta = init.clone();
    let mut best_obj = init_obj;
    let mut trace = cfg.trace.then(Vec::new);

    let mut momentum = Momentum::default();
    let mut u_prev = init.clone();
    let mut y = init;
    let mut t = cfg.t0;
    let mut converged = false;
    let mut iterations = 0;

    'outer: for k in 1..=cfg.max_iter {
        iterations = k;
        let (fy, gy) = cl.value_grad(&y);
        if !fy.is_finite() || gy.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "loss or gradient at iteration {k}"
            )));
        }
        if k > 1 {
            t /= cfg.shrink;
        }

        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            let u = prox_update(&y, &gy, t, lambda1, lambda2);
            let fu = cl.value(&u);
            if fu.is_finite() {
                let d = &u - &y;
                let model = fy + gy.dot(&d) + d.norm_squared() / (2.0 * t);
                let slack = 16.0 * f64::EPSILON * fy.abs().max(1.0);
                if fu <= model + slack {
                    accepted = Some((u, fu));
                    break;
                }
            }
            t *= cfg.shrink;
        }
        let Some((u, fu)) = accepted else {
            // step collapsed; stop at the best point seen
            break 'outer;
        };

        let obj = fu + penalty(&u, lambda1, lambda2);
        if let Some(tr) = trace.as_mut() {
            tr.push(obj);
        }
        if obj < best_obj {
            best_obj = obj;
            best_beta.copy_from(&u);
        }

        let change = (&u - &u_prev).amax();
        if change < cfg.tol {
            converged = true;
            break;
        }
        y = momentum.extrapolate(&u, &u_prev);
        u_prev = u;
    }

    Ok(SolveReport {
        beta: best_beta.as_slice().to_vec(),
        iterations,
        final_objective: best_obj,
        converged,
        objective_trace: trace,
    })
}

/// Largest violation of the subgradient optimality conditions at `beta`: for nonzero
/// coordinates `|g_j + lambda1 sign(b_j)|`, for zero ones `max(0, |g_j| - lambda1)`,
/// where `g = grad L(beta) + 2 lambda2 beta`.
pub fn kkt_residual(
    cl: &CompositeLoss<'_>,
    beta: &DVector<f64>,
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    let (_, grad) = cl.value_grad(beta);
    beta.iter()
        .zip(grad.iter())
        .map(|(&b, &g)| {
            let g = g + 2.0 * lambda2 * b;
            if b == 0.0 {
                (g.abs() - lambda1).max(0.0)
            } else {
                (g + lambda1 * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}
