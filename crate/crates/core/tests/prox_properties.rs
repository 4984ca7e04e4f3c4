mod common;

use ndarray::{array, Array1};
use proptest::prelude::*;

use stoch_pd::prox::{project_l1_ball, project_l2_ball, project_linf_ball};
use stoch_pd::{Metric, Regularizer, RegularizerKind};

fn kind() -> impl Strategy<Value = RegularizerKind> {
    prop_oneof![
        Just(RegularizerKind::Zero),
        Just(RegularizerKind::L1),
        Just(RegularizerKind::GroupL2),
        Just(RegularizerKind::Linf),
        Just(RegularizerKind::Abs),
    ]
}

/// A regularizer together with a point of matching dimension.
fn reg_and_point() -> impl Strategy<Value = (Regularizer, Array1<f64>)> {
    (kind(), 1usize..7, 0.0f64..3.0).prop_flat_map(|(k, d, lam)| {
        let dim = if k == RegularizerKind::Abs { 1 } else { d };
        let reg = match k {
            RegularizerKind::Zero => Regularizer::zero(dim),
            _ => Regularizer::new(k, lam, dim).unwrap(),
        };
        (Just(reg), prop::collection::vec(-10.0f64..10.0, dim).prop_map(Array1::from))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn moreau_decomposition((g, v) in reg_and_point(), tau in 0.01f64..10.0) {
        let split = &g.prox(v.view(), tau) + &(g.prox_conjugate((&v / tau).view(), 1.0 / tau) * tau);
        prop_assert!(common::max_abs_diff(&split, &v) <= 1e-12 * (1.0 + tau));
    }

    #[test]
    fn prox_is_firmly_nonexpansive((g, x) in reg_and_point(), seed in any::<u64>(), tau in 0.01f64..10.0) {
        let y = x.mapv(|a| a * 0.5 - (seed % 7) as f64 + 3.0);
        for conj in [false, true] {
            let p = |z: &Array1<f64>| if conj { g.prox_conjugate(z.view(), tau) } else { g.prox(z.view(), tau) };
            let d = &p(&x) - &p(&y);
            prop_assert!(d.dot(&d) <= d.dot(&(&x - &y)) + 1e-12);
        }
    }

    #[test]
    fn prox_satisfies_optimality((g, v) in reg_and_point(), tau in 0.01f64..10.0) {
        let p = g.prox(v.view(), tau);
        let u = (&v - &p) / tau;
        prop_assert!(g.subgradient_membership(p.view(), u.view(), 1e-9 * (1.0 + v.iter().fold(0.0_f64, |m, a| m.max(a.abs())))));
    }

    #[test]
    fn conjugate_prox_is_the_dual_ball_projection((g, v) in reg_and_point(), tau in 0.01f64..10.0) {
        let q = g.prox_conjugate(v.view(), tau);
        prop_assert!(common::max_abs_diff(&q, &g.project_dual_ball(v.view())) <= 1e-10);
        // (v - q) / tau lies in dg*(q)
        let x = (&v - &q) / tau;
        prop_assert!(g.conjugate_subgradient_distance(q.view(), x.view()) <= 1e-8 * (1.0 + x.iter().fold(0.0_f64, |m, a| m.max(a.abs()))));
    }

    #[test]
    fn scalar_metric_prox_matches_plain_prox((g, v) in reg_and_point(), s in 0.05f64..5.0) {
        let m = Metric::scaled_identity(g.dim(), s).unwrap();
        prop_assert_eq!(g.prox_in_metric(v.view(), &m, false).unwrap(), g.prox(v.view(), s));
        prop_assert_eq!(g.prox_in_metric(v.view(), &m, true).unwrap(), g.prox_conjugate(v.view(), s));
    }

    #[test]
    fn ball_projections_land_in_the_ball(v in prop::collection::vec(-10.0f64..10.0, 1..12), r in 0.0f64..5.0) {
        let v = Array1::from(v);
        let p1 = project_l1_ball(v.view(), r);
        prop_assert!(p1.iter().map(|a| a.abs()).sum::<f64>() <= r * (1.0 + 1e-12) + 1e-15);
        let p2 = project_l2_ball(v.view(), r);
        prop_assert!(p2.dot(&p2).sqrt() <= r * (1.0 + 1e-12) + 1e-15);
        let pi = project_linf_ball(v.view(), r);
        prop_assert!(pi.iter().all(|a| a.abs() <= r));
    }

    #[test]
    fn l1_ball_projection_matches_brute_force(a in -4.0f64..4.0, b in -4.0f64..4.0, r in 0.1f64..3.0) {
        let got = project_l1_ball(array![a, b].view(), r);
        let want = common::brute_prox(&|_| 0.0, &[a, b], &[1.0, 1.0], common::Domain::L1Ball(r));
        prop_assert!(common::max_abs_diff(&got, &Array1::from(want)) <= 1e-6);
    }

    #[test]
    fn diagonal_metric_prox_matches_brute_force(v in -4.0f64..4.0, w in -4.0f64..4.0, m1 in 0.1f64..3.0, m2 in 0.1f64..3.0, lam in 0.0f64..2.0) {
        let g = Regularizer::l1(lam, 2).unwrap();
        let metric = Metric::diagonal(array![m1, m2]).unwrap();
        let got = g.prox_in_metric(array![v, w].view(), &metric, false).unwrap();
        let want = common::brute_prox(&|y| lam * common::l1(y), &[v, w], &[m1, m2], common::Domain::Around(2.0 * 3.0 * lam + 1.0));
        prop_assert!(common::max_abs_diff(&got, &Array1::from(want)) <= 1e-6);
    }
}

#[test]
fn nonseparable_kinds_reject_non_uniform_metrics() {
    let m = Metric::diagonal(array![1.0, 2.0]).unwrap();
    for g in [Regularizer::group_l2(1.0, 2).unwrap(), Regularizer::linf(1.0, 2).unwrap()] {
        assert!(g.prox_in_metric(array![1.0, 1.0].view(), &m, true).is_err());
    }
    assert!(Regularizer::l1(1.0, 2).unwrap().prox_in_metric(array![1.0, 1.0].view(), &m, true).is_ok());
}

#[test]
fn linf_prox_splits_ties_evenly() {
    let g = Regularizer::linf(1.0, 3).unwrap();
    let p = g.prox(array![2.0, -2.0, 0.5].view(), 1.0);
    assert!((p[0] - 1.5).abs() < 1e-15 && (p[1] + 1.5).abs() < 1e-15 && (p[2] - 0.5).abs() < 1e-15);
}
