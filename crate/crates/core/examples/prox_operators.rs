//! Proximity operators of the shipped regularizers and their conjugates.

use ndarray::array;
use stoch_pd::prox::{project_l1_ball, Regularizer};

fn main() -> stoch_pd::Result<()> {
    let v = array![1.5, -0.2, 0.7];
    let tau = 0.5;
    let regs = [
        ("l1", Regularizer::l1(1.0, 3)?),
        ("group_l2", Regularizer::group_l2(1.0, 3)?),
        ("linf", Regularizer::linf(1.0, 3)?),
    ];
    for (name, g) in &regs {
        let p = g.prox(v.view(), tau);
        let q = g.prox_conjugate(v.view(), tau);
        // Moreau: v = prox_{tau g}(v) + tau prox_{g*/tau}(v/tau)
        let back = &g.prox(v.view(), tau) + &(g.prox_conjugate((&v / tau).view(), 1.0 / tau) * tau);
        let gap = (&back - &v).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        println!("{name:>9}: prox = {p:.4}, prox* = {q:.4}, moreau gap = {gap:.1e}");
    }
    println!("l1-ball projection of [3, -1, 0.5, 2] onto radius 2.5: {:.4}", project_l1_ball(array![3.0, -1.0, 0.5, 2.0].view(), 2.5));
    Ok(())
}
