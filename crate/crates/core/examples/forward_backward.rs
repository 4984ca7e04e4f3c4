//! Inertial forward-backward on a lasso problem. The `l1` term acts through
//! the identity map, so its resolvent is a soft threshold.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use stoch_pd::solvers::{run_solver, InertiaRule, Method, PdMetrics, Schedules, SolverOptions, StepRule, StoppingRule};
use stoch_pd::{CompositeProblem, Dataset, GradientOracle, LeastSquares, LinearMap, OracleKind, Regularizer};

fn main() -> stoch_pd::Result<()> {
    let (n, p) = (30, 10);
    let design = Array2::from_shape_fn((n, p), |(i, j)| ((i * 31 + j * 17) % 23) as f64 / 11.0 - 1.0);
    let truth = Array1::from_shape_fn(p, |j| if j % 3 == 0 { 1.0 } else { 0.0 });
    let labels = design.dot(&truth);
    let data = Dataset::from_design(design, labels)?;
    let smooth = Arc::new(LeastSquares::new(&data));
    let problem = CompositeProblem::new(
        smooth,
        Regularizer::zero(p),
        vec![(Regularizer::l1(0.01, p)?, LinearMap::Identity(p))],
    )?;

    let beta = problem.smooth().beta();
    let mut opts = SolverOptions::new(Method::Sifb, PdMetrics::scaled(&problem, 1.0, 1.0)?);
    opts.schedules = Schedules {
        gamma: StepRule::Constant { value: beta },
        alpha: InertiaRule::GammaSquared,
        ..Schedules::default()
    };
    opts.stop = StoppingRule { max_iters: 3000, fp_tol: None };
    opts.log_every = 500;
    let mut oracle = GradientOracle::new(OracleKind::GaussianDecay { variance: 0.1 }, 1)?;
    let out = run_solver(&problem, &opts, &mut oracle, None)?;
    for r in &out.records {
        println!("n = {:>4}  objective {:.6}", r.n, r.objective);
    }
    println!("w = {:.3}", out.certificate.w);
    Ok(())
}
