//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each, and exits
//! non-zero if any failed. Built with `harness = false` so the lines are always shown.

use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use s2net::bench::{run_bench, BenchConfig, Design};
use s2net::data::{build_dataset, BuildOptions, RawTable};
use s2net::loss::{stable_log1pexp, CompositeLoss, LossFamily};
use s2net::model::{fit, Hyperparams};
use s2net::search::Method;
use s2net::simulate::Scenario;
use s2net::solver::{kkt_residual, objective, prox_update, solve, FistaConfig};
use s2net::transform::{
    build_t, column_means, decompose, shift_projection_matrices, ProjectionMode,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| uniform(rng, -1.0, 1.0))
}

fn tight() -> FistaConfig {
    FistaConfig {
        max_iter: 200_000,
        tol: 1e-13,
        ..FistaConfig::default()
    }
}

/// Golden-section minimizer of a convex scalar function on `[lo, hi]`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    let mid = 0.5 * (lo + hi);
    // a kink at zero may beat every interior probe
    if f(0.0) <= f(mid) && lo <= 0.0 && 0.0 <= hi {
        0.0
    } else {
        mid
    }
}

fn prox_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let b0 = DVector::from_fn(5, |_, _| uniform(&mut rng, -3.0, 3.0));
        let g = DVector::from_fn(5, |_, _| uniform(&mut rng, -3.0, 3.0));
        let t = uniform(&mut rng, 0.01, 2.0);
        let l1 = uniform(&mut rng, 0.0, 3.0);
        let l2 = uniform(&mut rng, 0.0, 3.0);
        let got = prox_update(&b0, &g, t, l1, l2);
        for j in 0..5 {
            let (bj, gj) = (b0[j], g[j]);
            let f = |b: f64| (b - bj + t * gj).powi(2) / (2.0 * t) + l1 * b.abs() + l2 * b * b;
            let bound = (bj - t * gj).abs() + 1.0;
            let oracle = golden_min(f, -bound, bound);
            worst = worst.max((oracle - got[j]).abs());
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max abs deviation from numerical minimizer {worst:.2e} over 1000 instances"),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for k in 0..60 {
        let family = if k % 2 == 0 {
            LossFamily::Linear
        } else {
            LossFamily::Logistic
        };
        let n = rng.random_range(5..=50);
        let p = rng.random_range(1..=20);
        let xl = random_matrix(&mut rng, n, p);
        let yl = DVector::from_fn(n, |_, _| match family {
            LossFamily::Linear => uniform(&mut rng, -2.0, 2.0),
            LossFamily::Logistic => f64::from(rng.random_bool(0.5)),
        });
        let nu = rng.random_range(2..=40);
        let xu = random_matrix(&mut rng, nu, p);
        let t = build_t(
            &decompose(&xu).unwrap(),
            uniform(&mut rng, 0.1, 10.0),
            uniform(&mut rng, 0.0, 1.0),
        )
        .unwrap()
        .t;
        let ybar = match family {
            LossFamily::Linear => 0.0,
            LossFamily::Logistic => yl.mean(),
        };
        let cl = CompositeLoss::supervised(family, &xl, &yl)
            .unwrap()
            .with_unlabeled(&t, ybar, uniform(&mut rng, 0.0, 2.0))
            .unwrap();
        let beta = DVector::from_fn(p, |_, _| uniform(&mut rng, -1.0, 1.0));
        let (_, g) = cl.value_grad(&beta);
        let fd = DVector::from_fn(p, |j, _| {
            let h = 1e-6 * (1.0 + beta[j].abs());
            let mut bp = beta.clone();
            let mut bm = beta.clone();
            bp[j] += h;
            bm[j] -= h;
            (cl.value(&bp) - cl.value(&bm)) / (2.0 * h)
        });
        worst = worst.max((&fd - &g).amax() / g.amax().max(1.0));
    }
    outcome(
        worst <= 1e-5,
        format!("max relative gradient error {worst:.2e} over 60 instances"),
    )
}

fn supervised_reductions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);

    // (a) unpenalized least squares equals the normal equations
    let x = random_matrix(&mut rng, 100, 10);
    let y: Vec<f64> = (0..100)
        .map(|i| x.row(i).sum() + uniform(&mut rng, -0.5, 0.5))
        .collect();
    let xl = RawTable::from_matrix(&x, "x").unwrap();
    let ds = build_dataset(&xl, &y, None, LossFamily::Linear, BuildOptions::default()).unwrap();
    let model = fit(
        &ds,
        &Hyperparams::supervised(0.0, 0.0),
        &tight(),
        ProjectionMode::Auto,
    )
    .unwrap();
    let xtx = ds.xl.transpose() * &ds.xl;
    let normal = xtx.cholesky().unwrap().solve(&(ds.xl.transpose() * &ds.yl));
    let err_a = (&model.beta - &normal).amax();

    // (b) orthonormal design lasso equals soft-thresholding X'y at lambda1 / 2
    let q = random_matrix(&mut rng, 60, 6).qr().q();
    let yv = DVector::from_fn(60, |_, _| uniform(&mut rng, -2.0, 2.0));
    let z = q.transpose() * &yv;
    let lambda1 = 0.8;
    let cl = CompositeLoss::supervised(LossFamily::Linear, &q, &yv).unwrap();
    let rep = solve(&cl, lambda1, 0.0, &tight(), None).unwrap();
    let closed = z.map(|v| v.signum() * (v.abs() - lambda1 / 2.0).max(0.0));
    let err_b = (DVector::from_vec(rep.beta) - closed).amax();

    // (c) gamma1 = 0 ignores the unlabeled content bit for bit
    let xu1 = RawTable::from_matrix(&random_matrix(&mut rng, 30, 10), "x").unwrap();
    let xu2 = RawTable::from_matrix(&(random_matrix(&mut rng, 30, 10) * 50.0), "x").unwrap();
    let d1 = build_dataset(
        &xl,
        &y,
        Some(&xu1),
        LossFamily::Linear,
        BuildOptions::default(),
    )
    .unwrap();
    let d2 = build_dataset(
        &xl,
        &y,
        Some(&xu2),
        LossFamily::Linear,
        BuildOptions::default(),
    )
    .unwrap();
    let h = Hyperparams {
        lambda1: 0.3,
        lambda2: 0.1,
        gamma1: 0.0,
        gamma2: 3.0,
        gamma3: 0.7,
    };
    let cfg = FistaConfig::default();
    let b1 = fit(&d1, &h, &cfg, ProjectionMode::Auto).unwrap().beta;
    let b2 = fit(&d2, &h, &cfg, ProjectionMode::Auto).unwrap().beta;
    let exact = b1 == b2;

    outcome(
        err_a <= 1e-6 && err_b <= 1e-6 && exact,
        format!("normal equations {err_a:.2e}, orthonormal lasso {err_b:.2e}, gamma1=0 invariant to xU: {exact}"),
    )
}

fn transform_limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut exact = true;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(2..30);
        let p = rng.random_range(1..15);
        let xu = random_matrix(&mut rng, n, p) * uniform(&mut rng, 0.1, 10.0);
        let svd = decompose(&xu).unwrap();
        let mu = column_means(&xu);
        let g3 = uniform(&mut rng, 0.0, 2.0);
        let t0 = build_t(&svd, 0.0, g3).unwrap().t;
        let row = (&mu * g3).transpose();
        exact &= (0..n).all(|i| t0.row(i) == row);

        let smax = svd.sigma.iter().cloned().fold(0.0, f64::max);
        let big = build_t(&svd, 1e12 * smax * smax, 0.0).unwrap().t;
        let centered = DMatrix::from_fn(n, p, |i, j| xu[(i, j)] - mu[j]);
        worst = worst.max((&big - &centered).norm() / centered.norm());
    }
    outcome(
        exact && worst <= 1e-5,
        format!("gamma2=0 rows equal gamma3*mu exactly: {exact}; large-gamma2 relative error {worst:.2e}"),
    )
}

fn log1pexp_oracle() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/log1pexp_reference.csv");
    let mut reader = csv::Reader::from_path(path).unwrap();
    let mut worst = 0.0f64;
    let mut count = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let eta: f64 = rec[0].parse().unwrap();
        let want: f64 = rec[1].parse().unwrap();
        worst = worst.max((stable_log1pexp(eta) - want).abs() / want);
        count += 1;
    }
    let finite = (0..=14_000).all(|i| stable_log1pexp(-700.0 + 0.1 * f64::from(i)).is_finite());
    outcome(
        count == 10_000 && worst <= 1e-12 && finite,
        format!(
            "max relative error {worst:.2e} on {count} points; finite on [-700, 700]: {finite}"
        ),
    )
}

fn projection_gate() -> Outcome {
    // each labeled block makes -grad R(0) point along e1
    let linear = (
        DMatrix::<f64>::identity(3, 3),
        DVector::from_vec(vec![1.0, 0.0, 0.0]),
    );
    let e = |j: usize| DVector::from_fn(3, |i, _| if i == j { 1.0 } else { 0.0 }).transpose();
    let logistic = (
        DMatrix::from_rows(&[e(0), e(1), e(1), e(2), e(2)]),
        DVector::from_vec(vec![1.0, 1.0, 0.0, 1.0, 0.0]),
    );
    let mut ok = true;
    let mut notes = Vec::new();
    for (family, (xl, yl)) in [
        (LossFamily::Linear, linear),
        (LossFamily::Logistic, logistic),
    ] {
        for c in [0.0f64, 0.70, 0.71, 1.0, -0.70, -0.71] {
            let mu = DVector::from_vec(vec![c, (1.0 - c * c).sqrt(), 0.0]) * 3.0;
            let xu = DMatrix::from_fn(2, 3, |i, j| match (i, j) {
                (0, 2) => mu[j] + 1.0,
                (1, 2) => mu[j] - 1.0,
                _ => mu[j],
            });
            let out = shift_projection_matrices(&xl, &yl, &xu, family, ProjectionMode::Auto);
            let p = out.direction.clone().unwrap();
            ok &= (p[0] - 1.0).abs() < 1e-15;
            ok &= (out.cos_theta - c).abs() < 1e-12;
            ok &= out.applied == (f64::abs(c) >= std::f64::consts::FRAC_1_SQRT_2);
            if out.applied {
                let resid = column_means(&out.xu).dot(&p).abs();
                ok &= resid <= 1e-10 * mu.norm() * p.norm();
            }
            if family == LossFamily::Linear {
                notes.push(format!("cos {c:+.2} applied={}", out.applied));
            }
        }
    }
    // forced projections on random data always remove the component
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for _ in 0..50 {
        let p = rng.random_range(2..8);
        let xl = random_matrix(&mut rng, 20, p);
        let yl = DVector::from_fn(20, |_, _| uniform(&mut rng, -1.0, 1.0));
        let xu = random_matrix(&mut rng, 15, p).add_scalar(uniform(&mut rng, -3.0, 3.0));
        let out =
            shift_projection_matrices(&xl, &yl, &xu, LossFamily::Linear, ProjectionMode::Always);
        let dir = out.direction.unwrap();
        let mu = column_means(&xu);
        ok &= column_means(&out.xu).dot(&dir).abs() <= 1e-10 * mu.norm();
    }
    outcome(ok, notes.join(", "))
}

fn bench_config(design: Design, response: LossFamily, seed: u64) -> BenchConfig {
    let mut c = BenchConfig::new(design, response);
    c.n_target = 50;
    c.repetitions = 20;
    c.search_iterations = 200;
    c.seed = seed;
    c
}

fn two_group_linear() -> Outcome {
    let mut c = bench_config(Design::TwoGroup, LossFamily::Linear, 7);
    c.p = Some(50);
    let r = run_bench(&c).unwrap();
    let (s, b) = (
        r.mean(Method::S2net).unwrap(),
        r.mean(Method::Baseline).unwrap(),
    );
    outcome(
        s <= 1.02 * b,
        format!("mean test MSE s2net {s:.4} vs baseline {b:.4}"),
    )
}

fn two_group_logistic() -> Outcome {
    let mut c = bench_config(Design::TwoGroup, LossFamily::Logistic, 8);
    c.p = Some(50);
    let r = run_bench(&c).unwrap();
    let (s, b) = (
        r.mean(Method::S2net).unwrap(),
        r.mean(Method::Baseline).unwrap(),
    );
    outcome(
        s >= b - 0.5 && s >= 70.0 && b >= 70.0,
        format!("mean test AUC s2net {s:.2}% vs baseline {b:.2}%"),
    )
}

fn extrapolation_sanity() -> Outcome {
    let mut same = bench_config(Design::Extrapolation, LossFamily::Linear, 9);
    same.scenario = Scenario::Same;
    let mut unlucky = same.clone();
    unlucky.scenario = Scenario::Unlucky;
    let rs = run_bench(&same).unwrap();
    let ru = run_bench(&unlucky).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for m in [Method::S2net, Method::Baseline] {
        let (a, b) = (rs.mean(m).unwrap(), ru.mean(m).unwrap());
        ok &= (4.5..=7.0).contains(&a) && b >= 5.0 * a;
        notes.push(format!("{} same {a:.3} unlucky {b:.3}", m.name()));
    }
    outcome(ok, notes.join("; "))
}

fn solver_quality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst_kkt = 0.0f64;
    let mut monotone = true;
    for k in 0..100 {
        let family = if k % 2 == 0 {
            LossFamily::Linear
        } else {
            LossFamily::Logistic
        };
        let n = rng.random_range(10..=40);
        let p = rng.random_range(2..=15);
        let xl = random_matrix(&mut rng, n, p);
        let yl = DVector::from_fn(n, |_, _| match family {
            LossFamily::Linear => uniform(&mut rng, -2.0, 2.0),
            LossFamily::Logistic => f64::from(rng.random_bool(0.5)),
        });
        let nu = rng.random_range(2..=30);
        let xu = random_matrix(&mut rng, nu, p);
        let t = build_t(
            &decompose(&xu).unwrap(),
            uniform(&mut rng, 0.1, 10.0),
            uniform(&mut rng, 0.0, 1.0),
        )
        .unwrap()
        .t;
        let ybar = if family == LossFamily::Logistic {
            yl.mean()
        } else {
            0.0
        };
        let cl = CompositeLoss::supervised(family, &xl, &yl)
            .unwrap()
            .with_unlabeled(&t, ybar, uniform(&mut rng, 0.05, 1.0))
            .unwrap();
        let scale = cl.value_grad(&DVector::zeros(p)).1.amax().max(1.0);
        let l1 = uniform(&mut rng, 0.05, 0.5) * scale;
        let l2 = uniform(&mut rng, 0.0, 0.5);
        let init = DVector::from_fn(p, |_, _| uniform(&mut rng, -1.0, 1.0));
        let cfg = FistaConfig {
            max_iter: 100_000,
            tol: 1e-11,
            ..FistaConfig::default()
        };
        let rep = solve(&cl, l1, l2, &cfg, Some(&init)).unwrap();
        let beta = DVector::from_vec(rep.beta.clone());
        worst_kkt = worst_kkt.max(kkt_residual(&cl, &beta, l1, l2) / scale);
        monotone &= rep.final_objective <= objective(&cl, &init, l1, l2);
        monotone &= rep.final_objective == objective(&cl, &beta, l1, l2);
    }
    outcome(
        worst_kkt <= 1e-6 && monotone,
        format!("max scaled KKT residual {worst_kkt:.2e}; objective never above start: {monotone}"),
    )
}

fn determinism() -> Outcome {
    let mut c = BenchConfig::new(Design::TwoGroup, LossFamily::Logistic);
    c.p = Some(16);
    c.n_source = 30;
    c.n_target = 20;
    c.repetitions = 6;
    c.search_iterations = 15;
    c.seed = 11;
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_bench(&c).unwrap().repetitions_csv())
    };
    let serial = run(1);
    let again = run(1);
    let parallel = run(4);
    outcome(
        serial == again && serial == parallel,
        format!(
            "1-thread rerun identical: {}; 4-thread identical: {}",
            serial == again,
            serial == parallel
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 proximal update exactness", prox_exactness),
        ("2 gradient vs finite differences", gradient_check),
        ("3 supervised reductions", supervised_reductions),
        ("4 transform limits", transform_limits),
        ("5 stable log1pexp", log1pexp_oracle),
        ("6 shift projection gate", projection_gate),
        ("7 two-group linear benchmark", two_group_linear),
        ("8 two-group logistic benchmark", two_group_logistic),
        ("9 extrapolation benchmark", extrapolation_sanity),
        ("10 solver KKT and objective", solver_quality),
        ("11 benchmark determinism", determinism),
    ];
    // optional comma-separated list of criterion numbers to run, e.g. "1,5,11"
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        let number = name.split(' ').next().unwrap_or_default();
        if only
            .as_ref()
            .is_some_and(|o| !o.iter().any(|x| x == number))
        {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{status}] criterion {name}: {} ({:.1}s)",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
