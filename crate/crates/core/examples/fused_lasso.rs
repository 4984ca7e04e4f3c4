//! Fused lasso regression: `l1` on the coefficients plus `|w_{j+1} - w_j|`
//! penalties, one dual block per difference.

use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stoch_pd::problem::assemble_fused_lasso;
use stoch_pd::solvers::{run_solver, Method, PdMetrics, SolverOptions, StoppingRule};
use stoch_pd::{Dataset, GradientOracle, LeastSquares, OracleKind};

fn main() -> stoch_pd::Result<()> {
    let (n, p) = (60, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let truth: Vec<f64> = (0..p).map(|j| if (5..12).contains(&j) { 1.0 } else { 0.0 }).collect();
    let design = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
    let labels = design.dot(&ndarray::Array1::from(truth.clone())).mapv(|y| y + 0.05 * rng.random_range(-1.0..1.0));
    let data = Dataset::from_design(design, labels)?;
    let smooth = Arc::new(LeastSquares::new(&data));
    let problem = assemble_fused_lasso(smooth, 0.01, 0.05)?;

    let tau = 0.8 * problem.smooth().beta();
    // each forward difference has norm sqrt(2)
    let sigma = 0.25 / (tau * 2.0 * (p - 1) as f64);
    let mut opts = SolverOptions::new(Method::Pd1, PdMetrics::scaled(&problem, tau, sigma)?);
    opts.schedules = stoch_pd::solvers::Schedules::experiment();
    opts.stop = StoppingRule { max_iters: 5000, fp_tol: None };
    opts.log_every = 1000;
    let mut oracle = GradientOracle::new(OracleKind::GaussianDecay { variance: 0.5 }, 7)?;
    let out = run_solver(&problem, &opts, &mut oracle, None)?;
    for r in &out.records {
        println!("n = {:>5}  objective {:.6}  fp residual {:.2e}", r.n, r.objective, r.fp_residual);
    }
    let w = &out.certificate.w;
    println!("estimate: {:.2}", w);
    println!("truth:    {:?}", truth);
    Ok(())
}
