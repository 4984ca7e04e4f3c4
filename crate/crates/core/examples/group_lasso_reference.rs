//! Deterministic reference for the overlapping group-lasso regression and
//! its optimality certificate.

use stoch_pd::experiment::{compute_reference, ExperimentConfig};

fn main() -> stoch_pd::Result<()> {
    let cfg = ExperimentConfig::regression();
    let data = cfg.generate_dataset()?;
    let problem = cfg.assemble(&data)?;
    let (tau, sigma) = cfg.steps(&problem);
    println!("beta = {:.4}, tau = {tau:.4}, sigma = {sigma:.4}", problem.smooth().beta());

    let out = compute_reference(&cfg, &problem)?;
    let c = &out.certificate;
    println!("stopped after {} iterations ({:?})", out.diagnostics.iterations, out.diagnostics.stop_reason);
    println!("objective {:.8}", problem.objective(&c.w));
    println!("fixed-point residual {:.2e}, primal residual {:.2e}", c.fp_residual, c.primal_residual);
    for (k, (grp, r)) in cfg.groups()?.iter().zip(&c.dual_residuals).enumerate() {
        let norm: f64 = grp.iter().map(|&i| c.w[i] * c.w[i]).sum::<f64>().sqrt();
        println!("group {k} {grp:?}: ||w_G|| = {norm:.4}, dual residual {r:.1e}");
    }
    Ok(())
}
