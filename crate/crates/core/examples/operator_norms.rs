//! Exact and power-iteration operator norms, adjoint checks and the coupling
//! terms that enter the step-size conditions.

use stoch_pd::spaces::{adjoint_consistency_check, composite_norm_terms, power_iteration_norm, PowerIterationSettings};
use stoch_pd::{BlockAnalysisOperator, LinearMap, Metric};

fn main() -> stoch_pd::Result<()> {
    let p = 6;
    let maps = vec![
        LinearMap::restriction(p, vec![0, 1, 2])?,
        LinearMap::forward_difference(p, 3)?,
        LinearMap::DifferenceChain(p),
    ];
    for m in &maps {
        let est = power_iteration_norm(m, PowerIterationSettings::default());
        println!(
            "{:<40} exact {:<10} power {:.8} ({} its), adjoint err {:.1e}",
            format!("{m:?}"),
            m.exact_norm().map_or("-".into(), |n| format!("{n:.6}")),
            est.value,
            est.iterations,
            adjoint_consistency_check(m, 20, 1)
        );
    }
    let d = BlockAnalysisOperator::new(p, maps)?;
    let v = Metric::scaled_identity(p, 0.5)?;
    let w: Vec<Metric> = d.out_dims().into_iter().map(|k| Metric::scaled_identity(k, 0.2)).collect::<Result<_, _>>()?;
    let terms = composite_norm_terms(&v, &w, &d, PowerIterationSettings::default())?;
    let sum: f64 = terms.iter().map(|t| t.value).sum();
    println!("sum_k ||W_k^1/2 D_k V^1/2||^2 = {sum:.6}");
    Ok(())
}
