//! Synthetic source/target designs.
//!
//! Two-group: block compound-symmetric Gaussian covariates whose covariance differs
//! between source and target, with target coefficients jittered by `U[0.9, 1.1]`.
//! Extrapolation: isotropic covariates whose target mean is shifted either along or
//! orthogonal to the coefficient vector.
//!
//! Draw order from the single ChaCha20 stream seeded with `seed` is fixed: design
//! randomness (support, jitter), then source rows and labels, unlabeled target rows,
//! validation rows and labels, and test rows and labels. Within a block all rows are
//! drawn before any label.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{build_dataset, BuildOptions, Dataset, RawTable};
use crate::error::{Error, Result};
use crate::loss::{sigmoid, LossFamily};
use crate::report;
use crate::search::ValidationSet;

pub const N_VALID: usize = 20;
pub const N_TEST_TWO_GROUP: usize = 800;
pub const N_TEST_EXTRAPOLATION: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoGroupSpec {
    pub p: usize,
    pub n_source: usize,
    pub n_target: usize,
    pub response: LossFamily,
    pub seed: u64,
}

impl TwoGroupSpec {
    pub fn new(p: usize, n_target: usize, response: LossFamily, seed: u64) -> Self {
        Self {
            p,
            n_source: 50,
            n_target,
            response,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Same,
    Lucky,
    Unlucky,
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same" => Ok(Self::Same),
            "lucky" => Ok(Self::Lucky),
            "unlucky" => Ok(Self::Unlucky),
            other => Err(Error::InvalidParameter(format!("scenario `{other}`"))),
        }
    }
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Same => "same",
            Scenario::Lucky => "lucky",
            Scenario::Unlucky => "unlucky",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapSpec {
    pub p: usize,
    pub n_source: usize,
    pub n_target: usize,
    pub scenario: Scenario,
    pub delta: f64,
    pub response: LossFamily,
    pub seed: u64,
}

impl ExtrapSpec {
    /// Defaults: `p = 100, delta = 1` for linear responses and `p = 20, delta = 0.1`
    /// for logistic ones.
    pub fn new(scenario: Scenario, n_target: usize, response: LossFamily, seed: u64) -> Self {
        let (p, delta) = match response {
            LossFamily::Linear => (100, 1.0),
            LossFamily::Logistic => (20, 0.1),
        };
        Self {
            p,
            n_source: 50,
            n_target,
            scenario,
            delta,
            response,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimBundle {
    pub response: LossFamily,
    pub x_source: DMatrix<f64>,
    pub y_source: DVector<f64>,
    pub x_target: DMatrix<f64>,
    pub x_valid: DMatrix<f64>,
    pub y_valid: DVector<f64>,
    pub x_test: DMatrix<f64>,
    pub y_test: DVector<f64>,
    pub beta_source: DVector<f64>,
    pub beta_target: DVector<f64>,
    /// Noise variances for linear responses (source, target).
    pub noise_variance: Option<(f64, f64)>,
}

/// `m x m` matrix with `var` on the diagonal and `rho` elsewhere.
pub fn compound_symmetric(m: usize, var: f64, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| if i == j { var } else { rho })
}

/// Block-diagonal covariance with two `p/2` compound-symmetric blocks.
pub fn two_block_covariance(
    p: usize,
    (var1, rho1): (f64, f64),
    (var2, rho2): (f64, f64),
) -> DMatrix<f64> {
    let h = p / 2;
    let mut s = DMatrix::zeros(p, p);
    s.view_mut((0, 0), (h, h))
        .copy_from(&compound_symmetric(h, var1, rho1));
    s.view_mut((h, h), (p - h, p - h))
        .copy_from(&compound_symmetric(p - h, var2, rho2));
    s
}

pub const SOURCE_BLOCKS: ((f64, f64), (f64, f64)) = ((1.0, 0.8), (0.05, 0.01));
pub const TARGET_BLOCKS: ((f64, f64), (f64, f64)) = ((0.1, 0.01), (1.0, 0.5));

struct Gaussian {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
}

impl Gaussian {
    fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(cov)
            .ok_or_else(|| Error::InvalidParameter("covariance is not positive definite".into()))?
            .l();
        Ok(Self { mean, chol })
    }

    fn isotropic(mean: DVector<f64>, var: f64) -> Self {
        let p = mean.len();
        Self {
            mean,
            chol: DMatrix::from_diagonal_element(p, p, var.sqrt()),
        }
    }

    fn sample_rows(&self, n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let p = self.mean.len();
        let mut x = DMatrix::zeros(n, p);
        for i in 0..n {
            let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let row = &self.chol * z + &self.mean;
            x.row_mut(i).copy_from(&row.transpose());
        }
        x
    }
}

fn labels(
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    response: LossFamily,
    noise_var: f64,
    rng: &mut impl Rng,
) -> DVector<f64> {
    let eta = x * beta;
    let sd = noise_var.sqrt();
    eta.map(|e| match response {
        LossFamily::Linear => e + sd * rng.sample::<f64, _>(StandardNormal),
        LossFamily::Logistic => {
            if rng.random::<f64>() < sigmoid(e) {
                1.0
            } else {
                0.0
            }
        }
    })
}

pub fn simulate_two_group(spec: &TwoGroupSpec) -> Result<SimBundle> {
    let p = spec.p;
    if !p.is_multiple_of(2) || p < 12 {
        // five support indices must fit in 1..=p/2-1
        return Err(Error::InvalidParameter(format!(
            "two-group design needs an even p >= 12, got {p}"
        )));
    }
    if spec.n_source == 0 || spec.n_target == 0 {
        return Err(Error::InvalidParameter(
            "sample sizes must be positive".into(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let h = p / 2;

    // 1-based ranges [1, p/2 - 1] and [p/2, p] map to 0-based [0, h - 2] and [h - 1, p - 1]
    let mut beta = DVector::zeros(p);
    for i in index::sample(&mut rng, h - 1, 5) {
        beta[i] = 1.0;
    }
    for i in index::sample(&mut rng, p - h + 1, 5) {
        beta[h - 1 + i] = 1.0;
    }
    let jitter = DVector::from_fn(p, |_, _| rng.random_range(0.9..=1.1));
    let beta_t = beta.component_mul(&jitter);

    let cov_s = two_block_covariance(p, SOURCE_BLOCKS.0, SOURCE_BLOCKS.1);
    let cov_t = two_block_covariance(p, TARGET_BLOCKS.0, TARGET_BLOCKS.1);
    let (noise_s, noise_t) = match spec.response {
        LossFamily::Linear => (
            beta.dot(&(&cov_s * &beta)) / 4.0,
            beta_t.dot(&(&cov_t * &beta_t)) / 4.0,
        ),
        LossFamily::Logistic => (0.0, 0.0),
    };
    let source = Gaussian::new(DVector::zeros(p), cov_s)?;
    let target = Gaussian::new(DVector::zeros(p), cov_t)?;

    let x_source = source.sample_rows(spec.n_source, &mut rng);
    let y_source = labels(&x_source, &beta, spec.response, noise_s, &mut rng);
    let x_target = target.sample_rows(spec.n_target, &mut rng);
    let x_valid = target.sample_rows(N_VALID, &mut rng);
    let y_valid = labels(&x_valid, &beta_t, spec.response, noise_t, &mut rng);
    let x_test = target.sample_rows(N_TEST_TWO_GROUP, &mut rng);
    let y_test = labels(&x_test, &beta_t, spec.response, noise_t, &mut rng);

    Ok(SimBundle {
        response: spec.response,
        x_source,
        y_source,
        x_target,
        x_valid,
        y_valid,
        x_test,
        y_test,
        beta_source: beta,
        beta_target: beta_t,
        noise_variance: (spec.response == LossFamily::Linear).then_some((noise_s, noise_t)),
    })
}

pub fn lucky_pattern(p: usize) -> DVector<f64> {
    DVector::from_fn(p, |i, _| match i {
        0..=4 => 1.0,
        5..=9 => -1.0,
        _ => 0.0,
    })
}

pub fn unlucky_pattern(p: usize) -> DVector<f64> {
    DVector::from_fn(p, |i, _| if i < 10 { 1.0 } else { 0.0 })
}

pub const EXTRAPOLATION_VARIANCE: f64 = 0.4;
pub const EXTRAPOLATION_NOISE: f64 = 2.5;

pub fn simulate_extrapolation(spec: &ExtrapSpec) -> Result<SimBundle> {
    let p = spec.p;
    if p < 10 {
        return Err(Error::InvalidParameter(format!(
            "extrapolation design needs p >= 10, got {p}"
        )));
    }
    if spec.n_source == 0 || spec.n_target == 0 || !spec.delta.is_finite() {
        return Err(Error::InvalidParameter("invalid extrapolation spec".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let scale = 5.0 / 10f64.sqrt();
    let (beta, target_mean) = match spec.scenario {
        Scenario::Same => (lucky_pattern(p) * scale, DVector::zeros(p)),
        Scenario::Lucky => (lucky_pattern(p) * scale, unlucky_pattern(p) * spec.delta),
        Scenario::Unlucky => (unlucky_pattern(p) * scale, unlucky_pattern(p) * spec.delta),
    };
    let noise = match spec.response {
        LossFamily::Linear => EXTRAPOLATION_NOISE,
        LossFamily::Logistic => 0.0,
    };
    let source = Gaussian::isotropic(DVector::zeros(p), EXTRAPOLATION_VARIANCE);
    let target = Gaussian::isotropic(target_mean, EXTRAPOLATION_VARIANCE);

    let x_source = source.sample_rows(spec.n_source, &mut rng);
    let y_source = labels(&x_source, &beta, spec.response, noise, &mut rng);
    let x_target = target.sample_rows(spec.n_target, &mut rng);
    let x_valid = target.sample_rows(N_VALID, &mut rng);
    let y_valid = labels(&x_valid, &beta, spec.response, noise, &mut rng);
    let x_test = target.sample_rows(N_TEST_EXTRAPOLATION, &mut rng);
    let y_test = labels(&x_test, &beta, spec.response, noise, &mut rng);

    Ok(SimBundle {
        response: spec.response,
        x_source,
        y_source,
        x_target,
        x_valid,
        y_valid,
        x_test,
        y_test,
        beta_source: beta.clone(),
        beta_target: beta,
        noise_variance: (spec.response == LossFamily::Linear).then_some((noise, noise)),
    })
}

/// Training data, validation set and test set ready for fitting.
pub struct Prepared {
    pub train: Dataset,
    pub valid: ValidationSet,
    pub x_test: DMatrix<f64>,
    pub y_test: Vec<f64>,
}

fn table_csv(x: &DMatrix<f64>, y: Option<&DVector<f64>>) -> String {
    let mut out = String::new();
    let names: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    out.push_str(&names.join(","));
    if y.is_some() {
        out.push_str(",y");
    }
    out.push('\n');
    for i in 0..x.nrows() {
        let row: Vec<String> = x.row(i).iter().map(|&v| report::full(v)).collect();
        out.push_str(&row.join(","));
        if let Some(y) = y {
            let _ = write!(out, ",{}", report::full(y[i]));
        }
        out.push('\n');
    }
    out
}

impl SimBundle {
    pub fn p(&self) -> usize {
        self.x_source.ncols()
    }

    pub fn prepare(&self, opts: BuildOptions) -> Result<Prepared> {
        let xl = RawTable::from_matrix(&self.x_source, "x")?;
        let xu = RawTable::from_matrix(&self.x_target, "x")?;
        let train = build_dataset(
            &xl,
            self.y_source.as_slice(),
            Some(&xu),
            self.response,
            opts,
        )?;
        let x_valid = train
            .preprocess
            .replay(&RawTable::from_matrix(&self.x_valid, "x")?)?;
        let x_test = train
            .preprocess
            .replay(&RawTable::from_matrix(&self.x_test, "x")?)?;
        Ok(Prepared {
            valid: ValidationSet {
                x: x_valid,
                y: self.y_valid.as_slice().to_vec(),
            },
            x_test,
            y_test: self.y_test.as_slice().to_vec(),
            train,
        })
    }

    /// Writes `labeled.csv`, `unlabeled.csv`, `valid.csv`, `test.csv` (label column `y`)
    /// and `manifest.json` into `dir`.
    pub fn write_csv_dir(&self, dir: &Path, manifest: &serde_json::Value) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("labeled.csv"),
            table_csv(&self.x_source, Some(&self.y_source)),
        )?;
        std::fs::write(dir.join("unlabeled.csv"), table_csv(&self.x_target, None))?;
        std::fs::write(
            dir.join("valid.csv"),
            table_csv(&self.x_valid, Some(&self.y_valid)),
        )?;
        std::fs::write(
            dir.join("test.csv"),
            table_csv(&self.x_test, Some(&self.y_test)),
        )?;
        let mut doc = manifest.clone();
        if let Some(obj) = doc.as_object_mut() {
            obj.insert(
                "beta_source".into(),
                serde_json::json!(self.beta_source.as_slice()),
            );
            obj.insert(
                "beta_target".into(),
                serde_json::json!(self.beta_target.as_slice()),
            );
            obj.insert(
                "noise_variance".into(),
                serde_json::json!(self.noise_variance),
            );
            obj.insert("label_column".into(), serde_json::json!("y"));
        }
        std::fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&doc)?,
        )?;
        Ok(())
    }
}
