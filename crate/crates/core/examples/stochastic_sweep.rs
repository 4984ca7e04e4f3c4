//! Seeded stochastic runs against the deterministic reference, with the
//! median distance at each decade.

use stoch_pd::experiment::{compute_reference, solve, ExperimentConfig};

fn main() -> stoch_pd::Result<()> {
    let mut cfg = ExperimentConfig::regression();
    if let Some(k) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        cfg.run.seeds = (0..k).collect();
    }
    let data = cfg.generate_dataset()?;
    let problem = cfg.assemble(&data)?;
    let reference = compute_reference(&cfg, &problem)?.certificate;

    let sweep = solve(&cfg, &problem, Some(&reference))?;
    let s = &sweep.summary;
    let norm = s.reference_norm.unwrap_or(f64::NAN);
    println!("{} seeds, ||w_ref|| = {norm:.4}", s.seeds.len());
    for c in &s.checkpoints {
        println!("n = {:>5}: median ||w_n - w_ref|| = {:.3e}", c.n, c.median_distance);
    }
    if let Some(d) = &s.distance {
        println!("final: q1 {:.3e}  median {:.3e}  q3 {:.3e}  (relative {:.2e})", d.q1, d.median, d.q3, d.median / norm);
    }
    Ok(())
}
