//! Single iterations of the three method families.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::CompositeProblem;
use crate::spaces::{all_finite, DualBlocks, LinearMap, LinearOperator, Metric, PrimalPoint};

/// Iterates of a run. At `n = 0` the previous iterates equal the current ones.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub w: PrimalPoint,
    pub w_prev: PrimalPoint,
    pub v: DualBlocks,
    pub v_prev: DualBlocks,
    pub n: usize,
}

impl SolverState {
    pub fn new(w0: PrimalPoint, v0: DualBlocks) -> Self {
        SolverState {
            w_prev: w0.clone(),
            w: w0,
            v_prev: v0.clone(),
            v: v0,
            n: 0,
        }
    }

    fn advance(&mut self, w: PrimalPoint, v: DualBlocks) {
        self.w_prev = std::mem::replace(&mut self.w, w);
        self.v_prev = std::mem::replace(&mut self.v, v);
        self.n += 1;
    }

    /// `(u_n, d_n)`, the inertial extrapolation of both variables.
    pub fn extrapolated(&self, alpha: f64) -> (PrimalPoint, DualBlocks) {
        let u = &self.w + &((&self.w - &self.w_prev) * alpha);
        (u, self.v.extrapolate(&self.v_prev, alpha))
    }
}

/// Preconditioners of the primal-dual methods: `V` on the primal space and
/// one `W_k` per dual block.
#[derive(Clone, Debug, PartialEq)]
pub struct PdMetrics {
    pub v: Metric,
    pub w: Vec<Metric>,
}

impl PdMetrics {
    /// `V = tau Id`, `W_k = sigma Id`.
    pub fn scaled(problem: &CompositeProblem, tau: f64, sigma: f64) -> Result<Self> {
        Ok(PdMetrics {
            v: Metric::scaled_identity(problem.dim(), tau)?,
            w: problem
                .block_dims()
                .into_iter()
                .map(|d| Metric::scaled_identity(d, sigma))
                .collect::<Result<_>>()?,
        })
    }

    /// Dimension checks and closed-form prox checks, done before iterating.
    pub fn check(&self, problem: &CompositeProblem) -> Result<()> {
        problem.f().check_metric(&self.v)?;
        if self.w.len() != problem.g().len() {
            return Err(Error::Config(format!(
                "{} dual metrics for {} regularizer blocks",
                self.w.len(),
                problem.g().len()
            )));
        }
        for (k, (gk, wk)) in problem.g().iter().zip(&self.w).enumerate() {
            gk.check_metric(wk).map_err(|e| match e {
                Error::DimensionMismatch { expected, found, .. } => Error::DimensionMismatch {
                    operator: Some(k),
                    expected,
                    found,
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn with_primal_scale(&self, factor: f64) -> Result<Self> {
        Ok(PdMetrics {
            v: self.v.scaled(factor)?,
            w: self.w.clone(),
        })
    }
}

/// Argument of the dual prox in the first primal-dual class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualArgument {
    /// `u_n - 2 V (sum_k D_k* d_k + a_n)`, as printed.
    #[default]
    Printed,
    /// `2 w_{n+1} - u_n`. Differs from the printed form only when `f != 0`.
    Extrapolated,
}

/// Primal update of the second primal-dual class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pd2Form {
    /// `w_{n+1} = u_n - V a_n - V sum_k D_k* q_k`.
    #[default]
    MetricConsistent,
    /// `w_{n+1} = u_n - V a_n - sum_k D_k* q_k`.
    Literal,
}

fn finite_or(step: &str, n: usize, w: &PrimalPoint, v: &DualBlocks) -> Result<()> {
    if all_finite(w) && v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            step: step.to_string(),
            iteration: n,
        })
    }
}

/// One forward-backward step from `(u, d)` with gradient estimate `a`.
pub fn pd1_map(
    problem: &CompositeProblem,
    metrics: &PdMetrics,
    u: &PrimalPoint,
    d: &DualBlocks,
    a: &Array1<f64>,
    dual: DualArgument,
) -> Result<(PrimalPoint, DualBlocks)> {
    let ops = problem.operator();
    let mut shift = ops.apply_adjoint(d)?;
    shift += a;
    let shift = metrics.v.apply(shift.view());
    let w_next = problem.f().prox_in_metric((u - &shift).view(), &metrics.v, false)?;
    let dual_point = match dual {
        DualArgument::Printed => u - &(&shift * 2.0),
        DualArgument::Extrapolated => &w_next * 2.0 - u,
    };
    let blocks = problem
        .g()
        .iter()
        .zip(ops.maps())
        .zip(&metrics.w)
        .zip(d.blocks())
        .map(|(((gk, dk), wk), dblock)| {
            let arg = dblock + &wk.apply(dk.apply(dual_point.view()).view());
            gk.prox_in_metric(arg.view(), wk, true)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((w_next, DualBlocks::from_blocks(blocks)))
}

/// One relaxed step of the second class from `(u, d)`; `v` is the current
/// (non-extrapolated) dual used by the relaxation.
#[allow(clippy::too_many_arguments)]
pub fn pd2_map(
    problem: &CompositeProblem,
    metrics: &PdMetrics,
    u: &PrimalPoint,
    d: &DualBlocks,
    v: &DualBlocks,
    a: &Array1<f64>,
    relaxation: f64,
    form: Pd2Form,
) -> Result<(PrimalPoint, DualBlocks)> {
    if !problem.f().is_zero() {
        return Err(Error::Config("the second primal-dual class requires f = 0".into()));
    }
    let ops = problem.operator();
    let forward = u - &metrics.v.apply(a.view());
    let s = &forward - &metrics.v.apply(ops.apply_adjoint(d)?.view());
    let q = problem
        .g()
        .iter()
        .zip(ops.maps())
        .zip(&metrics.w)
        .zip(d.blocks())
        .map(|(((gk, dk), wk), dblock)| {
            let arg = dblock + &wk.apply(dk.apply(s.view()).view());
            gk.prox_in_metric(arg.view(), wk, true)
        })
        .collect::<Result<Vec<_>>>()?;
    let q = DualBlocks::from_blocks(q);
    let v_next = DualBlocks::from_blocks(
        v.blocks()
            .iter()
            .zip(q.blocks())
            .map(|(vk, qk)| vk + &((qk - vk) * relaxation))
            .collect(),
    );
    let dq = ops.apply_adjoint(&q)?;
    let w_next = match form {
        Pd2Form::MetricConsistent => &forward - &metrics.v.apply(dq.view()),
        Pd2Form::Literal => &forward - &dq,
    };
    Ok((w_next, v_next))
}

/// First primal-dual class. `oracle` is queried at the extrapolated primal
/// point `u_n`.
pub fn pd1_step(
    state: &mut SolverState,
    problem: &CompositeProblem,
    metrics: &PdMetrics,
    alpha: f64,
    dual: DualArgument,
    oracle: &mut dyn FnMut(ArrayView1<f64>) -> Array1<f64>,
) -> Result<()> {
    let (u, d) = state.extrapolated(alpha);
    let a = oracle(u.view());
    if !all_finite(&a) {
        return Err(Error::NonFinite {
            step: "gradient oracle".into(),
            iteration: state.n,
        });
    }
    let (w, v) = pd1_map(problem, metrics, &u, &d, &a, dual)?;
    finite_or("pd1 update", state.n, &w, &v)?;
    state.advance(w, v);
    Ok(())
}

/// Second primal-dual class with dual relaxation `relaxation`.
#[allow(clippy::too_many_arguments)]
pub fn pd2_step(
    state: &mut SolverState,
    problem: &CompositeProblem,
    metrics: &PdMetrics,
    alpha: f64,
    relaxation: f64,
    form: Pd2Form,
    oracle: &mut dyn FnMut(ArrayView1<f64>) -> Array1<f64>,
) -> Result<()> {
    let (u, d) = state.extrapolated(alpha);
    let a = oracle(u.view());
    if !all_finite(&a) {
        return Err(Error::NonFinite {
            step: "gradient oracle".into(),
            iteration: state.n,
        });
    }
    let (w, v) = pd2_map(problem, metrics, &u, &d, &state.v, &a, relaxation, form)?;
    finite_or("pd2 update", state.n, &w, &v)?;
    state.advance(w, v);
    Ok(())
}

/// Generic inertial forward-backward step
/// `z_n = w_n + alpha (w_n - w_{n-1})`, `w_{n+1} = J_{gamma U A}(z_n - gamma U r_n)`.
///
/// `resolvent(x, gamma)` must implement `J_{gamma U A}`; `oracle` receives
/// `z_n`. Dual blocks of `state` are carried unchanged.
pub fn sifb_step(
    state: &mut SolverState,
    resolvent: &dyn Fn(&PrimalPoint, f64) -> Result<PrimalPoint>,
    oracle: &mut dyn FnMut(ArrayView1<f64>) -> Array1<f64>,
    preconditioner: &Metric,
    gamma: f64,
    alpha: f64,
) -> Result<()> {
    let z = &state.w + &((&state.w - &state.w_prev) * alpha);
    let r = oracle(z.view());
    let forward = &z - &(preconditioner.apply(r.view()) * gamma);
    let w = resolvent(&forward, gamma)?;
    let v = state.v.clone();
    finite_or("forward-backward update", state.n, &w, &v)?;
    state.advance(w, v);
    Ok(())
}

/// `J_{gamma U A}` for `A = d(f + sum_k g_k o D_k)` when that sum is
/// separable: either no analysis terms, or `f = 0` and every `D_k` restricts
/// to a coordinate set disjoint from the others.
#[derive(Clone, Debug)]
pub struct SeparableResolvent {
    problem: CompositeProblem,
    preconditioner: Metric,
    groups: Vec<Vec<usize>>,
}

impl SeparableResolvent {
    pub fn new(problem: &CompositeProblem, preconditioner: Metric) -> Result<Self> {
        if preconditioner.dim() != problem.dim() {
            return Err(Error::DimensionMismatch {
                operator: None,
                expected: problem.dim(),
                found: preconditioner.dim(),
            });
        }
        let mut groups = Vec::new();
        if !problem.g().is_empty() {
            if !problem.f().is_zero() {
                return Err(Error::Config(
                    "forward-backward needs f = 0 when analysis terms are present; use pd1 or pd2".into(),
                ));
            }
            let mut seen = vec![false; problem.dim()];
            for map in problem.operator().maps() {
                let idx: Vec<usize> = match map {
                    LinearMap::Restriction { indices, .. } => indices.clone(),
                    LinearMap::Identity(p) => (0..*p).collect(),
                    _ => {
                        return Err(Error::Config(
                            "forward-backward resolvent needs coordinate restrictions; use pd1 or pd2".into(),
                        ))
                    }
                };
                for &i in &idx {
                    if std::mem::replace(&mut seen[i], true) {
                        return Err(Error::Config(format!(
                            "coordinate {i} is shared by two groups; the resolvent has no closed form, use pd1 or pd2"
                        )));
                    }
                }
                groups.push(idx);
            }
        } else {
            problem.f().check_metric(&preconditioner)?;
        }
        for (gk, idx) in problem.g().iter().zip(&groups) {
            gk.check_metric(&preconditioner.restrict(idx))?;
        }
        Ok(SeparableResolvent {
            problem: problem.clone(),
            preconditioner,
            groups,
        })
    }

    pub fn apply(&self, x: &PrimalPoint, gamma: f64) -> Result<PrimalPoint> {
        let metric = self.preconditioner.scaled(gamma)?;
        if self.groups.is_empty() {
            return self.problem.f().prox_in_metric(x.view(), &metric, false);
        }
        let mut out = x.clone();
        for (gk, idx) in self.problem.g().iter().zip(&self.groups) {
            let sub = Array1::from_iter(idx.iter().map(|&i| x[i]));
            let p = gk.prox_in_metric(sub.view(), &metric.restrict(idx), false)?;
            for (&i, &val) in idx.iter().zip(p.iter()) {
                out[i] = val;
            }
        }
        Ok(out)
    }

    /// Dual certificate for a forward-backward solution: the blockwise
    /// restriction of `-grad F(w)`.
    pub fn recover_dual(&self, w: &PrimalPoint) -> DualBlocks {
        let g = self.problem.smooth().gradient(w.view());
        DualBlocks::from_blocks(
            self.problem
                .operator()
                .maps()
                .iter()
                .map(|m| -m.apply(g.view()))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use ndarray::array;

    use super::*;
    use crate::problem::{Dataset, LeastSquares, ZeroSmooth};
    use crate::prox::Regularizer;

    fn quadratic_problem() -> CompositeProblem {
        let ds = Dataset::from_design(array![[2.0, 0.0], [0.0, 1.0], [1.0, 1.0]], array![1.0, -1.0, 0.5]).unwrap();
        CompositeProblem::new(Arc::new(LeastSquares::new(&ds)), Regularizer::zero(2), vec![]).unwrap()
    }

    #[test]
    fn sifb_without_regularizer_is_gradient_descent() {
        let prob = quadratic_problem();
        let res = SeparableResolvent::new(&prob, Metric::identity(2)).unwrap();
        let mut st = SolverState::new(array![0.3, -0.7], DualBlocks::zeros(&[]));
        let w0 = st.w.clone();
        let mut oracle = |x: ArrayView1<f64>| prob.smooth().gradient(x);
        sifb_step(&mut st, &|x, g| res.apply(x, g), &mut oracle, &Metric::identity(2), 0.1, 0.0).unwrap();
        let expected = &w0 - &(prob.smooth().gradient(w0.view()) * 0.1);
        assert_eq!(st.w, expected);
        assert_eq!(st.w_prev, w0);
        assert_eq!(st.n, 1);
    }

    #[test]
    fn inertia_without_forces_keeps_constant() {
        let prob = CompositeProblem::new(Arc::new(ZeroSmooth(2)), Regularizer::zero(2), vec![]).unwrap();
        let res = SeparableResolvent::new(&prob, Metric::identity(2)).unwrap();
        let mut st = SolverState::new(array![1.0, 2.0], DualBlocks::zeros(&[]));
        let mut oracle = |x: ArrayView1<f64>| prob.smooth().gradient(x);
        for _ in 0..5 {
            sifb_step(&mut st, &|x, g| res.apply(x, g), &mut oracle, &Metric::identity(2), 0.5, 0.7).unwrap();
        }
        assert_eq!(st.w, array![1.0, 2.0]);
    }

    #[test]
    fn inertial_step_extrapolates() {
        let prob = CompositeProblem::new(Arc::new(ZeroSmooth(1)), Regularizer::zero(1), vec![]).unwrap();
        let res = SeparableResolvent::new(&prob, Metric::identity(1)).unwrap();
        let mut st = SolverState::new(array![1.0], DualBlocks::zeros(&[]));
        st.w_prev = array![0.0];
        let mut oracle = |x: ArrayView1<f64>| prob.smooth().gradient(x);
        sifb_step(&mut st, &|x, g| res.apply(x, g), &mut oracle, &Metric::identity(1), 1.0, 0.5).unwrap();
        assert_eq!(st.w, array![1.5]);
    }

    #[test]
    fn pd1_with_zero_dual_is_preconditioned_gradient() {
        let base = quadratic_problem();
        let prob = CompositeProblem::new(
            Arc::new(LeastSquares::new(
                &Dataset::from_design(array![[2.0, 0.0], [0.0, 1.0], [1.0, 1.0]], array![1.0, -1.0, 0.5]).unwrap(),
            )),
            Regularizer::zero(2),
            vec![(Regularizer::zero(2), LinearMap::Identity(2))],
        )
        .unwrap();
        let metrics = PdMetrics {
            v: Metric::diagonal(array![0.1, 0.2]).unwrap(),
            w: vec![Metric::identity(2)],
        };
        let mut st = SolverState::new(array![0.5, 0.5], prob.zero_dual());
        let mut w = st.w.clone();
        let mut oracle = |x: ArrayView1<f64>| base.smooth().gradient(x);
        for _ in 0..10 {
            pd1_step(&mut st, &prob, &metrics, 0.0, DualArgument::Printed, &mut oracle).unwrap();
            w = &w - &metrics.v.apply(base.smooth().gradient(w.view()).view());
            assert_eq!(st.w, w);
            assert!(st.v.norm() == 0.0);
        }
    }

    #[test]
    fn pd2_rejects_nonzero_f() {
        let prob = CompositeProblem::new(Arc::new(ZeroSmooth(2)), Regularizer::l1(1.0, 2).unwrap(), vec![]).unwrap();
        let metrics = PdMetrics::scaled(&prob, 0.5, 0.5).unwrap();
        let mut st = SolverState::new(array![1.0, 1.0], prob.zero_dual());
        let mut oracle = |x: ArrayView1<f64>| prob.smooth().gradient(x);
        let err = pd2_step(&mut st, &prob, &metrics, 0.0, 1.0, Pd2Form::MetricConsistent, &mut oracle).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn pd2_with_zero_regularizers_is_gradient_descent() {
        let base = quadratic_problem();
        let prob = CompositeProblem::new(
            Arc::new(LeastSquares::new(
                &Dataset::from_design(array![[2.0, 0.0], [0.0, 1.0], [1.0, 1.0]], array![1.0, -1.0, 0.5]).unwrap(),
            )),
            Regularizer::zero(2),
            vec![(Regularizer::zero(1), LinearMap::forward_difference(2, 0).unwrap())],
        )
        .unwrap();
        let metrics = PdMetrics::scaled(&prob, 0.2, 1.0).unwrap();
        let mut st = SolverState::new(array![0.1, 0.9], prob.zero_dual());
        let mut w = st.w.clone();
        let mut oracle = |x: ArrayView1<f64>| base.smooth().gradient(x);
        for _ in 0..10 {
            pd2_step(&mut st, &prob, &metrics, 0.0, 0.7, Pd2Form::MetricConsistent, &mut oracle).unwrap();
            w = &w - &(base.smooth().gradient(w.view()) * 0.2);
            assert!((&st.w - &w).iter().all(|d| d.abs() < 1e-15));
        }
    }

    #[test]
    fn nan_gradient_is_reported() {
        let prob = quadratic_problem();
        let metrics = PdMetrics::scaled(&prob, 0.1, 1.0).unwrap();
        let mut st = SolverState::new(array![0.0, 0.0], prob.zero_dual());
        let mut oracle = |_: ArrayView1<f64>| array![f64::NAN, 0.0];
        let err = pd1_step(&mut st, &prob, &metrics, 0.0, DualArgument::Printed, &mut oracle).unwrap_err();
        assert!(matches!(err, Error::NonFinite { ref step, .. } if step == "gradient oracle"));
    }

    #[test]
    fn overlapping_groups_have_no_separable_resolvent() {
        let prob = CompositeProblem::new(
            Arc::new(ZeroSmooth(3)),
            Regularizer::zero(3),
            vec![
                (Regularizer::group_l2(1.0, 2).unwrap(), LinearMap::restriction(3, vec![0, 1]).unwrap()),
                (Regularizer::group_l2(1.0, 2).unwrap(), LinearMap::restriction(3, vec![1, 2]).unwrap()),
            ],
        )
        .unwrap();
        assert!(SeparableResolvent::new(&prob, Metric::identity(3)).is_err());
    }
}
