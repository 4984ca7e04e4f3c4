//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_prox, jacobi_singular_values, l1, l2, linf, matrix_of, transpose, Domain};
use stoch_pd::experiment::{compute_reference, solve, ExperimentConfig};
use stoch_pd::problem::{empirical_oracle_audit, ZeroSmooth};
use stoch_pd::solvers::{
    run_solver, validate_stepsize_pd1, validate_stepsize_pd2, DualArgument, Method, PdMetrics,
    Schedules, SolverOptions, StepRule, StoppingRule,
};
use stoch_pd::spaces::{power_iteration_norm, PowerIterationSettings, SaddleMetric, SaddleVariant};
use stoch_pd::{
    BlockAnalysisOperator, CompositeProblem, Dataset, GradientOracle, LeastSquares, LinearMap, LinearOperator,
    Metric, OracleKind, Regularizer, RegularizerKind,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

const KINDS: [RegularizerKind; 5] = [
    RegularizerKind::Zero,
    RegularizerKind::L1,
    RegularizerKind::GroupL2,
    RegularizerKind::Linf,
    RegularizerKind::Abs,
];

fn random_reg(rng: &mut ChaCha8Rng, kind: RegularizerKind, dim: usize) -> Regularizer {
    match kind {
        RegularizerKind::Zero => Regularizer::zero(dim),
        RegularizerKind::Abs => Regularizer::abs(rng.random_range(0.1..2.0)).unwrap(),
        k => Regularizer::new(k, rng.random_range(0.1..2.0), dim).unwrap(),
    }
}

fn norm_of(kind: RegularizerKind) -> fn(&[f64]) -> f64 {
    match kind {
        RegularizerKind::Zero => |_| 0.0,
        RegularizerKind::L1 | RegularizerKind::Abs => l1,
        RegularizerKind::GroupL2 => l2,
        RegularizerKind::Linf => linf,
    }
}

fn dual_domain(kind: RegularizerKind, lam: f64) -> Domain {
    match kind {
        RegularizerKind::Zero => Domain::Origin,
        RegularizerKind::L1 | RegularizerKind::Abs => Domain::LinfBall(lam),
        RegularizerKind::GroupL2 => Domain::L2Ball(lam),
        RegularizerKind::Linf => Domain::L1Ball(lam),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    let mut count = 0;
    for kind in KINDS {
        for _ in 0..100 {
            let dim = if kind == RegularizerKind::Abs { 1 } else { rng.random_range(1..=2) };
            let g = random_reg(&mut rng, kind, dim);
            let lam = g.weight();
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            let va = Array1::from(v.clone());
            let tau: f64 = rng.random_range(0.1..2.0);
            let norm = norm_of(kind);
            let h = |y: &[f64]| lam * norm(y);
            let around = Domain::Around(2.0 * tau * lam + 1.0);

            let got = g.prox(va.view(), tau);
            let want = brute_prox(&h, &v, &vec![tau; dim], around);
            worst = worst.max(common::max_abs_diff(&got, &Array1::from(want)));

            let got = g.prox_conjugate(va.view(), tau);
            let want = brute_prox(&|_| 0.0, &v, &vec![tau; dim], dual_domain(kind, lam));
            worst = worst.max(common::max_abs_diff(&got, &Array1::from(want)));

            // metric prox: diagonal for separable kinds, scalar otherwise
            let m: Vec<f64> = if g.is_separable() {
                (0..dim).map(|_| rng.random_range(0.1..2.0)).collect()
            } else {
                vec![tau; dim]
            };
            let metric = Metric::diagonal(Array1::from(m.clone())).unwrap();
            let got = g.prox_in_metric(va.view(), &metric, false).unwrap();
            let want = brute_prox(&h, &v, &m, Domain::Around(4.0 * lam + 1.0));
            worst = worst.max(common::max_abs_diff(&got, &Array1::from(want)));
            let got = g.prox_in_metric(va.view(), &metric, true).unwrap();
            let want = brute_prox(&|_| 0.0, &v, &m, dual_domain(kind, lam));
            worst = worst.max(common::max_abs_diff(&got, &Array1::from(want)));
            count += 4;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-5 && secs < 10.0,
        format!("{count} prox evaluations vs brute force, max error {worst:.2e}, {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut moreau, mut firm) = (0.0_f64, f64::NEG_INFINITY);
    for kind in KINDS {
        for _ in 0..200 {
            let dim = if kind == RegularizerKind::Abs { 1 } else { rng.random_range(1..=6) };
            let g = random_reg(&mut rng, kind, dim);
            let tau: f64 = rng.random_range(0.05..5.0);
            let x = Array1::from_shape_fn(dim, |_| rng.random_range(-5.0..5.0));
            let y = Array1::from_shape_fn(dim, |_| rng.random_range(-5.0..5.0));
            let split = &g.prox(x.view(), tau) + &(g.prox_conjugate((&x / tau).view(), 1.0 / tau) * tau);
            moreau = moreau.max(common::max_abs_diff(&split, &x));
            for conj in [false, true] {
                let p = |z: &Array1<f64>| if conj { g.prox_conjugate(z.view(), tau) } else { g.prox(z.view(), tau) };
                let (px, py) = (p(&x), p(&y));
                let d = &px - &py;
                firm = firm.max(d.dot(&d) - d.dot(&(&x - &y)));
            }
        }
    }
    check(
        moreau <= 1e-12 && firm <= 1e-12,
        format!("Moreau gap {moreau:.2e}, firm nonexpansiveness excess {firm:.2e}"),
    )
}

fn random_maps(rng: &mut ChaCha8Rng) -> Vec<LinearMap> {
    let mut maps = Vec::new();
    for d in [1, 2, 3, 5, 8, 13, 20] {
        maps.push(LinearMap::Identity(d));
        maps.push(LinearMap::Scaled { dim: d, factor: rng.random_range(-3.0..3.0) });
        maps.push(LinearMap::Diagonal(Array1::from_shape_fn(d, |_| rng.random_range(-2.0..2.0))));
        maps.push(LinearMap::Zero { in_dim: d, out_dim: rng.random_range(1..=20) });
        let k = rng.random_range(1..=d);
        let mut idx: Vec<usize> = (0..d).collect();
        idx.truncate(k);
        maps.push(LinearMap::restriction(d, idx).unwrap());
        if d >= 2 {
            maps.push(LinearMap::forward_difference(d, rng.random_range(0..d - 1)).unwrap());
            maps.push(LinearMap::DifferenceChain(d));
        }
        let rows = rng.random_range(1..=20);
        maps.push(LinearMap::Dense(Array2::from_shape_fn((rows, d), |_| rng.random_range(-1.0..1.0))));
    }
    maps
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let maps = random_maps(&mut rng);
    let (mut adj, mut norm_err) = (0.0_f64, 0.0_f64);
    let settings = PowerIterationSettings { tol: 1e-14, max_iters: 1_000_000, seed: 5 };
    for m in &maps {
        let (n, k) = (m.in_dim(), m.out_dim());
        let fwd = matrix_of(&|x| m.apply(x.view()), n, k);
        let back = matrix_of(&|y| m.apply_adjoint(y.view()), k, n);
        let t = transpose(&fwd);
        let scale = 1.0 + fwd.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        adj = adj.max((&back - &t).iter().fold(0.0, |a: f64, b| a.max(b.abs())) / scale);
        let x = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(k, |_| rng.random_range(-1.0..1.0));
        let gap = (m.apply(x.view()).dot(&y) - x.dot(&m.apply_adjoint(y.view()))).abs();
        adj = adj.max(gap / scale);

        let svd = jacobi_singular_values(&fwd)[0];
        let est = power_iteration_norm(m, settings).value;
        norm_err = norm_err.max((est - svd).abs() / svd.max(1.0));
        if let Some(exact) = m.exact_norm() {
            norm_err = norm_err.max((exact - svd).abs() / svd.max(1.0));
        }
    }
    // the stacked operator as a whole
    let d = BlockAnalysisOperator::new(6, vec![
        LinearMap::restriction(6, vec![0, 1, 2]).unwrap(),
        LinearMap::DifferenceChain(6),
        LinearMap::Dense(Array2::from_shape_fn((4, 6), |(i, j)| (i as f64 - j as f64).sin())),
    ])
    .unwrap();
    let x = Array1::from_shape_fn(6, |_| rng.random_range(-1.0..1.0));
    let v = d.apply(x.view()).unwrap();
    let back = d.apply_adjoint(&v).unwrap();
    adj = adj.max(((v.norm_sq()) - x.dot(&back)).abs());
    check(
        adj <= 1e-10 && norm_err <= 1e-6,
        format!("{} operators: adjoint error {adj:.2e}, norm error vs Jacobi SVD {norm_err:.2e}", maps.len()),
    )
}

fn criterion_4() -> Outcome {
    let k = array![[1.0, -0.5, 0.2], [0.3, 0.8, -1.1]];
    let (tau, sigma) = (0.4, 0.5);
    let mut worst_cp = 0.0_f64;
    for (f_l1, dual) in [(0.0, DualArgument::Printed), (0.0, DualArgument::Extrapolated), (0.3, DualArgument::Extrapolated)] {
        let problem = CompositeProblem::new(
            Arc::new(ZeroSmooth(3)),
            if f_l1 > 0.0 { Regularizer::l1(f_l1, 3).unwrap() } else { Regularizer::zero(3) },
            vec![(Regularizer::group_l2(0.7, 2).unwrap(), LinearMap::Dense(k.clone()))],
        )
        .unwrap();
        let mut opts = SolverOptions::new(Method::Pd1, PdMetrics::scaled(&problem, tau, sigma).unwrap());
        opts.stop = StoppingRule { max_iters: 100, fp_tol: None };
        opts.dual_argument = dual;
        opts.keep_trajectory = true;
        opts.initial = Some((array![1.0, -2.0, 0.5], problem.zero_dual()));
        let out = run_solver(&problem, &opts, &mut GradientOracle::exact(), None).unwrap();
        let mut hand = hand_cp(&k, f_l1, 0.7, tau, sigma, 100, array![1.0, -2.0, 0.5]);
        hand.insert(0, array![1.0, -2.0, 0.5]);
        for (h, (w, _)) in hand.iter().zip(&out.trajectory) {
            worst_cp = worst_cp.max(common::max_abs_diff(h, w));
        }
    }

    // sifb with A = 0, U = Id, alpha = 0 against plain gradient descent
    let a = Array2::from_shape_fn((12, 4), |(i, j)| ((i + 2 * j) as f64 * 0.37).cos());
    let y = Array1::from_shape_fn(12, |i| (i as f64 * 0.5).sin());
    let data = Dataset::from_design(a.clone(), y.clone()).unwrap();
    let problem = CompositeProblem::new(Arc::new(LeastSquares::new(&data)), Regularizer::zero(4), vec![]).unwrap();
    let gamma = problem.smooth().beta();
    let mut opts = SolverOptions::new(Method::Sifb, PdMetrics::scaled(&problem, 1.0, 1.0).unwrap());
    opts.schedules = Schedules { gamma: StepRule::Constant { value: gamma }, ..Schedules::default() };
    opts.stop = StoppingRule { max_iters: 100, fp_tol: None };
    opts.keep_trajectory = true;
    let out = run_solver(&problem, &opts, &mut GradientOracle::exact(), None).unwrap();
    let mut w = Array1::<f64>::zeros(4);
    let mut worst_gd = 0.0_f64;
    for (ws, _) in out.trajectory.iter().skip(1) {
        let mut grad = Array1::<f64>::zeros(4);
        for i in 0..12 {
            let r: f64 = (0..4).map(|j| a[[i, j]] * w[j]).sum::<f64>() - y[i];
            for j in 0..4 {
                grad[j] += 2.0 * a[[i, j]] * r / 12.0;
            }
        }
        w = &w - &(grad * gamma);
        worst_gd = worst_gd.max(common::max_abs_diff(&w, ws));
    }
    check(
        worst_cp <= 1e-14 && worst_gd <= 1e-14,
        format!("pd1 vs Chambolle-Pock max gap {worst_cp:.2e}, sifb vs gradient descent {worst_gd:.2e} (100 steps)"),
    )
}

/// Chambolle-Pock on `min f(w) + g(Kw)` with `f = f_l1 ||.||_1` and
/// `g = g_l2 ||.||_2`, written out by hand.
fn hand_cp(k: &Array2<f64>, f_l1: f64, g_l2: f64, tau: f64, sigma: f64, iters: usize, x0: Array1<f64>) -> Vec<Array1<f64>> {
    let (m, n) = (k.nrows(), k.ncols());
    let kk = k;
    let mut x = x0.to_vec();
    let mut y = vec![0.0; m];
    let mut out = Vec::new();
    for _ in 0..iters {
        let mut kty = vec![0.0; n];
        for j in 0..n {
            for i in 0..m {
                kty[j] += kk[[i, j]] * y[i];
            }
        }
        let xn: Vec<f64> = (0..n)
            .map(|j| {
                let z = x[j] - tau * kty[j];
                let t = tau * f_l1;
                if z > t {
                    z - t
                } else if z < -t {
                    z + t
                } else {
                    0.0
                }
            })
            .collect();
        let mut z = vec![0.0; m];
        for i in 0..m {
            let kb: f64 = (0..n).map(|j| kk[[i, j]] * (2.0 * xn[j] - x[j])).sum();
            z[i] = y[i] + sigma * kb;
        }
        let nz = z.iter().map(|a| a * a).sum::<f64>().sqrt();
        y = if nz > g_l2 { z.iter().map(|a| a * g_l2 / nz).collect() } else { z };
        x = xn;
        out.push(Array1::from(x.clone()));
    }
    out
}

struct Setup {
    cfg: ExperimentConfig,
    problem: CompositeProblem,
    reference: stoch_pd::solvers::SolutionCertificate,
}

fn regression() -> Setup {
    let cfg = ExperimentConfig::regression();
    let data = cfg.generate_dataset().unwrap();
    let problem = cfg.assemble(&data).unwrap();
    let reference = compute_reference(&cfg, &problem).unwrap().certificate;
    Setup { cfg, problem, reference }
}

fn criterion_5(p: &Setup) -> Outcome {
    let metrics = p.cfg.metrics(&p.problem).unwrap();
    let mut opts = SolverOptions::new(Method::Pd1, metrics.clone());
    opts.stop = StoppingRule { max_iters: 5000, fp_tol: None };
    opts.log_every = 0;
    opts.keep_trajectory = true;
    let out = run_solver(&p.problem, &opts, &mut GradientOracle::exact(), None).unwrap();
    let metric = SaddleMetric::new(metrics.v, metrics.w, p.problem.operator().clone(), SaddleVariant::UPrime).unwrap();
    let d = stoch_pd::solvers::fejer_diagnostic(&out.trajectory, &p.reference, &metric).unwrap();
    let worst = d.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    check(
        stoch_pd::solvers::first_increase(&d, 1e-10).is_none() && d.len() == 5001,
        format!(
            "U' distance {:.3e} -> {:.3e} over 5000 steps, largest increase {worst:.2e} (ref fp residual {:.1e})",
            d[0],
            d[d.len() - 1],
            p.reference.fp_residual
        ),
    )
}

fn criterion_6(p: &Setup) -> Outcome {
    let start = Instant::now();
    let cfg = &p.cfg;
    assert_eq!(cfg.run.seeds.len(), 20);
    assert_eq!(cfg.run.iterations, 5000);
    let sweep = solve(cfg, &p.problem, Some(&p.reference)).unwrap();
    let s = &sweep.summary;
    let median = s.distance.as_ref().unwrap().median;
    let norm = s.reference_norm.unwrap();
    let marks: Vec<f64> = [10, 100, 1000, 5000]
        .iter()
        .map(|n| s.checkpoints.iter().find(|c| c.n == *n).map_or(f64::NAN, |c| c.median_distance))
        .collect();
    let monotone = marks.windows(2).all(|w| w[1] < w[0]);
    let secs = start.elapsed().as_secs_f64();
    check(
        median <= 1e-2 * norm && monotone && secs < 120.0,
        format!(
            "median final distance {median:.3e} vs bound {:.3e}; decades {:.2e} {:.2e} {:.2e} {:.2e}; {secs:.1} s",
            1e-2 * norm,
            marks[0],
            marks[1],
            marks[2],
            marks[3]
        ),
    )
}

fn criterion_7(p: &Setup) -> Outcome {
    let mut opts = SolverOptions::new(Method::Pd2, p.cfg.metrics(&p.problem).unwrap());
    opts.stop = StoppingRule { max_iters: 100_000, fp_tol: Some(1e-12) };
    opts.log_every = 0;
    let out = run_solver(&p.problem, &opts, &mut GradientOracle::exact(), None).unwrap();
    let gap = common::max_abs_diff(&out.certificate.w, &p.reference.w);
    let (r1, r2) = (p.reference.fp_residual, out.certificate.fp_residual);
    check(
        gap <= 1e-4 && r1 <= 1e-6 && r2 <= 1e-6,
        format!("pd1/pd2 limits differ by {gap:.2e}; fp residuals {r1:.1e} / {r2:.1e} ({} pd2 steps)", out.diagnostics.iterations),
    )
}

fn criterion_8(p: &Setup) -> Outcome {
    let zero = Array1::zeros(p.problem.dim());
    let smooth = p.problem.smooth();
    // the additive noise does not depend on F, so the scaling run uses F = 0
    // in the same dimension
    let flat = ZeroSmooth(p.problem.dim());
    let mut oracle = GradientOracle::new(OracleKind::GaussianDecay { variance: 1.0 }, 11).unwrap();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for n in 1..=64usize {
        let a = empirical_oracle_audit(&mut oracle, &flat, zero.view(), n, 100_000);
        xs.push((n as f64).ln());
        ys.push(a.variance_estimate.ln());
    }
    let (mx, my) = (xs.iter().sum::<f64>() / 64.0, ys.iter().sum::<f64>() / 64.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let mut exact = GradientOracle::exact();
    let e = empirical_oracle_audit(&mut exact, smooth, zero.view(), 1, 1000);
    check(
        (slope + 2.0).abs() <= 0.1 && e.variance_estimate == 0.0,
        format!("variance exponent {slope:.4}, exact oracle variance {}", e.variance_estimate),
    )
}

fn criterion_9(p: &Setup) -> Outcome {
    let s = PowerIterationSettings::default();
    let mut rows = Vec::new();
    // single block, tau sigma ||D||^2 at and below 1
    for (map, dim) in [(LinearMap::Identity(3), 3), (LinearMap::forward_difference(3, 0).unwrap(), 3)] {
        let nsq = map.exact_norm().unwrap().powi(2);
        let d = BlockAnalysisOperator::new(dim, vec![map.clone()]).unwrap();
        let out_dim = map.out_dim();
        for (c, expect) in [(1.0, false), (0.99, true)] {
            let tau = 1.0;
            let sigma = c / (tau * nsq);
            let r = validate_stepsize_pd1(
                &Metric::scaled_identity(dim, tau).unwrap(),
                &[Metric::scaled_identity(out_dim, sigma).unwrap()],
                &d,
                f64::INFINITY,
                1e-3,
                s,
            )
            .unwrap();
            rows.push((format!("tau sigma ||D||^2 = {c}"), r.ok(), expect));
        }
    }
    // the experiment's stacked operator
    let ops = p.problem.operator();
    let total: f64 = ops.norms().iter().map(|n| n.value.powi(2)).sum();
    let beta = p.problem.smooth().beta();
    for (c, expect) in [(1.0, false), (0.99, true)] {
        let tau = beta * 1e-3;
        let m = PdMetrics::scaled(&p.problem, tau, c / (tau * total)).unwrap();
        let r = validate_stepsize_pd1(&m.v, &m.w, ops, beta, 1e-3, s).unwrap();
        rows.push((format!("stacked coupling = {c}"), r.ok(), expect));
    }
    for (ratio, expect) in [(0.4, false), (0.6, true)] {
        let m = PdMetrics::scaled(&p.problem, beta / ratio, 1e-3).unwrap();
        let r = validate_stepsize_pd2(&m.v, &m.w, ops, beta, 1e-3, s).unwrap();
        rows.push((format!("beta/||V|| = {ratio}"), r.ok(), expect));
    }
    let wrong: Vec<&String> = rows.iter().filter(|(_, got, want)| got != want).map(|(n, ..)| n).collect();
    let table: Vec<String> = rows.iter().map(|(n, got, _)| format!("{n}: {}", if *got { "pass" } else { "fail" })).collect();
    check(wrong.is_empty(), table.join(", "))
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(msg) => {
            println!("PASS  {name}: {msg} [{secs:.1} s]");
            true
        }
        Err(msg) => {
            println!("FAIL  {name}: {msg} [{secs:.1} s]");
            false
        }
    }
}

type Light = (&'static str, fn() -> Outcome);
type Heavy = (&'static str, fn(&Setup) -> Outcome);

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let wanted = |name: &str| filter.as_deref().is_none_or(|f| name.contains(f));
    let mut ok = true;
    let criteria: [Light; 4] = [
        ("criterion 1 prox oracle equivalence", criterion_1),
        ("criterion 2 Moreau identity and firm nonexpansiveness", criterion_2),
        ("criterion 3 adjoints and operator norms", criterion_3),
        ("criterion 4 reductions", criterion_4),
    ];
    for (name, f) in criteria {
        if wanted(name) {
            ok &= run(name, f);
        }
    }
    let heavy: [Heavy; 5] = [
        ("criterion 5 deterministic Fejer descent", criterion_5),
        ("criterion 6 regression experiment reproduction", criterion_6),
        ("criterion 7 cross-solver agreement", criterion_7),
        ("criterion 8 oracle audit", criterion_8),
        ("criterion 9 validator truth table", criterion_9),
    ];
    if heavy.iter().any(|(n, _)| wanted(n)) {
        let p = regression();
        for (name, f) in heavy {
            if wanted(name) {
                ok &= run(name, || f(&p));
            }
        }
    }
    if !ok {
        std::process::exit(1);
    }
}
