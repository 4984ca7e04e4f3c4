//! Step-size validation: conditions that pass, conditions that fail, and the
//! error a run returns when they fail without an override.

use stoch_pd::experiment::ExperimentConfig;
use stoch_pd::solvers::{run_solver, validate_stepsize_pd1, validate_stepsize_pd2, Method, PdMetrics, SolverOptions};
use stoch_pd::{BlockAnalysisOperator, GradientOracle, LinearMap, Metric};

fn main() -> stoch_pd::Result<()> {
    let d = BlockAnalysisOperator::new(2, vec![LinearMap::Identity(2)])?;
    for ts in [0.99, 1.0] {
        let r = validate_stepsize_pd1(
            &Metric::scaled_identity(2, ts)?,
            &[Metric::identity(2)],
            &d,
            f64::INFINITY,
            1e-3,
            Default::default(),
        )?;
        println!("tau sigma ||D||^2 = {ts}: {}", if r.ok() { "ok" } else { "violated" });
    }
    let beta = 0.3;
    for ratio in [0.4, 0.6] {
        let r = validate_stepsize_pd2(
            &Metric::scaled_identity(2, beta / ratio)?,
            &[Metric::scaled_identity(2, 0.01)?],
            &d,
            beta,
            1e-3,
            Default::default(),
        )?;
        print!("beta/||V|| = {ratio}:\n{r}");
    }

    let cfg = ExperimentConfig::regression();
    let data = cfg.generate_dataset()?;
    let problem = cfg.assemble(&data)?;
    let opts = SolverOptions::new(Method::Pd1, PdMetrics::scaled(&problem, 1.0, 1.0)?);
    match run_solver(&problem, &opts, &mut GradientOracle::exact(), None) {
        Err(e) => println!("oversized steps rejected (exit code {}): {e}", e.exit_code()),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}
