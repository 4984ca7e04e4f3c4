//! 1-d total-variation denoising with the first primal-dual method, which
//! reduces to a preconditioned Chambolle-Pock iteration when the inertia is
//! zero and the gradient is exact.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use stoch_pd::solvers::{run_solver, Method, PdMetrics, SolverOptions, StoppingRule};
use stoch_pd::{CompositeProblem, Dataset, GradientOracle, LeastSquares, LinearMap, Regularizer};

fn main() -> stoch_pd::Result<()> {
    let n = 40;
    let signal = Array1::from_shape_fn(n, |i| if (10..25).contains(&i) { 2.0 } else { 0.0 });
    let noisy = Array1::from_shape_fn(n, |i| signal[i] + 0.3 * ((i * 7919 % 13) as f64 / 6.0 - 1.0));
    let data = Dataset::from_design(Array2::eye(n) * (n as f64).sqrt(), noisy * (n as f64).sqrt())?;

    let smooth = Arc::new(LeastSquares::new(&data));
    let problem = CompositeProblem::new(
        smooth,
        Regularizer::zero(n),
        vec![(Regularizer::l1(0.3, n - 1)?, LinearMap::DifferenceChain(n))],
    )?;
    let tau = 0.8 * problem.smooth().beta();
    let sigma = 0.25 / (tau * 4.0);
    let mut opts = SolverOptions::new(Method::Pd1, PdMetrics::scaled(&problem, tau, sigma)?);
    opts.stop = StoppingRule { max_iters: 20_000, fp_tol: Some(1e-10) };
    opts.log_every = 0;
    let out = run_solver(&problem, &opts, &mut GradientOracle::exact(), None)?;

    println!("{} iterations, fp residual {:.2e}", out.diagnostics.iterations, out.certificate.fp_residual);
    let w = &out.certificate.w;
    for i in (0..n).step_by(4) {
        println!("{i:>3} {:>6.3} {:>6.3}", signal[i], w[i]);
    }
    Ok(())
}
