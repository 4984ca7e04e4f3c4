//! OSCAR written as pairwise `max(|w_i|, |w_j|)` terms, each handled through
//! the conjugate of the `l_inf` norm (projection onto an `l1` ball).

use std::sync::Arc;

use ndarray::{array, Array2};
use stoch_pd::problem::assemble_oscar;
use stoch_pd::solvers::{run_solver, Method, PdMetrics, SolverOptions, StoppingRule};
use stoch_pd::{Dataset, GradientOracle, LeastSquares};

fn main() -> stoch_pd::Result<()> {
    // two nearly collinear columns and one irrelevant column
    let design: Array2<f64> = array![
        [1.0, 0.98, 0.1],
        [0.5, 0.52, -0.3],
        [-1.0, -0.97, 0.2],
        [0.2, 0.18, 0.9],
        [0.8, 0.83, -0.5],
    ];
    let labels = design.dot(&array![1.0, 1.0, 0.0]);
    let data = Dataset::from_design(design, labels)?;
    let smooth = Arc::new(LeastSquares::new(&data));
    let problem = assemble_oscar(smooth, 0.01, 0.05)?;
    let tau = 0.8 * problem.smooth().beta();
    let sigma = 0.25 / (tau * problem.g().len() as f64);
    let mut opts = SolverOptions::new(Method::Pd1, PdMetrics::scaled(&problem, tau, sigma)?);
    opts.stop = StoppingRule { max_iters: 100_000, fp_tol: Some(1e-10) };
    opts.log_every = 0;
    let out = run_solver(&problem, &opts, &mut GradientOracle::exact(), None)?;
    let c = &out.certificate;
    println!("w = {:.4} after {} iterations", c.w, out.diagnostics.iterations);
    println!("residuals: primal {:.1e}, dual max {:.1e}, fixed point {:.1e}", c.primal_residual, c.dual_residuals.iter().cloned().fold(0.0, f64::max), c.fp_residual);
    Ok(())
}
