//! Empirical bias and variance of the gradient oracles at `w = 0`.

use stoch_pd::experiment::ExperimentConfig;
use stoch_pd::problem::empirical_oracle_audit;
use stoch_pd::{GradientOracle, OracleKind};

fn main() -> stoch_pd::Result<()> {
    let cfg = ExperimentConfig::regression();
    let data = cfg.generate_dataset()?;
    let problem = cfg.assemble(&data)?;
    let zero = ndarray::Array1::zeros(problem.dim());
    let kinds = [
        OracleKind::Exact,
        OracleKind::GaussianDecay { variance: 1.0 },
        OracleKind::GrowingMinibatch { initial: 1.0, growth: 0.5 },
        OracleKind::FixedMinibatch { size: 8 },
    ];
    for kind in kinds {
        println!("{kind:?}");
        for n in [1, 4, 16] {
            let mut oracle = GradientOracle::new(kind.clone(), 0)?;
            let a = empirical_oracle_audit(&mut oracle, problem.smooth(), zero.view(), n, 4000);
            println!("  n = {n:>2}: mean error {:.3e}, variance {:.3e}", a.mean_error, a.variance_estimate);
        }
        println!("  summable variance: {}", kind.summable_variance());
    }
    Ok(())
}
