//! Step-size conditions of the convergence theorems, evaluated numerically.

use std::fmt;

use serde::Serialize;

use crate::error::Result;
use crate::spaces::{composite_norm_terms, BlockAnalysisOperator, Metric, PowerIterationSettings};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Condition {
    fn new(name: &str, holds: bool, detail: String) -> Self {
        Condition {
            name: name.to_string(),
            holds,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepsizeReport {
    pub method: &'static str,
    /// `||W_k^{1/2} D_k V^{1/2}||^2` per block.
    pub terms: Vec<f64>,
    pub coupling_sum: f64,
    /// Cocoercivity constant in the product metric (first class only).
    pub gamma: Option<f64>,
    pub beta_over_v: f64,
    pub conditions: Vec<Condition>,
}

impl StepsizeReport {
    pub fn ok(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn violations(&self) -> Vec<&Condition> {
        self.conditions.iter().filter(|c| !c.holds).collect()
    }
}

impl fmt::Display for StepsizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} step-size conditions", self.method)?;
        writeln!(f, "  coupling sum = {:.6e}", self.coupling_sum)?;
        if let Some(g) = self.gamma {
            writeln!(f, "  gamma = {g:.6e}")?;
        }
        writeln!(f, "  beta/||V|| = {:.6e}", self.beta_over_v)?;
        for c in &self.conditions {
            writeln!(
                f,
                "  [{}] {}: {}",
                if c.holds { "pass" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

fn coupling(
    v: &Metric,
    w: &[Metric],
    d: &BlockAnalysisOperator,
    settings: PowerIterationSettings,
) -> Result<(Vec<f64>, f64)> {
    let terms: Vec<f64> = composite_norm_terms(v, w, d, settings)?
        .into_iter()
        .map(|t| t.value)
        .collect();
    let sum = terms.iter().sum();
    Ok((terms, sum))
}

fn offending(terms: &[f64]) -> String {
    let listed: Vec<String> = terms
        .iter()
        .enumerate()
        .filter(|(_, t)| **t > 0.0)
        .map(|(k, t)| format!("block {k}: {t:.4e}"))
        .collect();
    listed.join(", ")
}

/// Conditions of the first primal-dual class:
/// `gamma = (1 - sqrt(sum_k ||W_k^{1/2} D_k V^{1/2}||^2)) beta / ||V|| > 1/2`
/// and `epsilon < min(1, gamma)`.
pub fn validate_stepsize_pd1(
    v: &Metric,
    w: &[Metric],
    d: &BlockAnalysisOperator,
    beta: f64,
    epsilon: f64,
    settings: PowerIterationSettings,
) -> Result<StepsizeReport> {
    let (terms, sum) = coupling(v, w, d, settings)?;
    let factor = 1.0 - sum.sqrt();
    let beta_over_v = beta / v.norm();
    let gamma = if factor > 0.0 { factor * beta_over_v } else { factor };
    let conditions = vec![
        Condition::new(
            "coupling sum < 1",
            sum < 1.0,
            if sum < 1.0 {
                format!("{sum:.6e}")
            } else {
                format!("{sum:.6e} from {}", offending(&terms))
            },
        ),
        Condition::new("gamma > 1/2", gamma > 0.5, format!("gamma = {gamma:.6e}")),
        Condition::new(
            "epsilon < min(1, gamma)",
            epsilon < gamma.min(1.0),
            format!("epsilon = {epsilon:e}"),
        ),
    ];
    Ok(StepsizeReport {
        method: "pd1",
        terms,
        coupling_sum: sum,
        gamma: Some(gamma),
        beta_over_v,
        conditions,
    })
}

/// Conditions of the second class: coupling sum below 1,
/// `beta / ||V|| > 1/2` and `epsilon < min(1, beta)`.
pub fn validate_stepsize_pd2(
    v: &Metric,
    w: &[Metric],
    d: &BlockAnalysisOperator,
    beta: f64,
    epsilon: f64,
    settings: PowerIterationSettings,
) -> Result<StepsizeReport> {
    let (terms, sum) = coupling(v, w, d, settings)?;
    let beta_over_v = beta / v.norm();
    let conditions = vec![
        Condition::new(
            "coupling sum < 1",
            sum < 1.0,
            if sum < 1.0 {
                format!("{sum:.6e}")
            } else {
                format!("{sum:.6e} from {}", offending(&terms))
            },
        ),
        Condition::new(
            "beta/||V|| > 1/2",
            beta_over_v > 0.5,
            format!("beta/||V|| = {beta_over_v:.6e}"),
        ),
        Condition::new(
            "epsilon < min(1, beta)",
            epsilon < beta.min(1.0),
            format!("epsilon = {epsilon:e}, beta = {beta:.6e}"),
        ),
    ];
    Ok(StepsizeReport {
        method: "pd2",
        terms,
        coupling_sum: sum,
        gamma: None,
        beta_over_v,
        conditions,
    })
}

/// Conditions of the generic method with preconditioner `U`:
/// `epsilon < min(1, beta/||U||)` and
/// `gamma_n in [epsilon, (2 - epsilon) beta / ||U||]`.
pub fn validate_stepsize_sifb(
    preconditioner_norm: f64,
    beta: f64,
    epsilon: f64,
    inf_gamma: f64,
    sup_gamma: f64,
) -> StepsizeReport {
    let beta_over_u = beta / preconditioner_norm;
    let upper = (2.0 - epsilon) * beta_over_u;
    let conditions = vec![
        Condition::new(
            "epsilon < min(1, beta/||U||)",
            epsilon < beta_over_u.min(1.0),
            format!("epsilon = {epsilon:e}, beta/||U|| = {beta_over_u:.6e}"),
        ),
        Condition::new("gamma_n >= epsilon", inf_gamma >= epsilon, format!("inf gamma_n = {inf_gamma:.6e}")),
        Condition::new(
            "gamma_n <= (2 - epsilon) beta/||U||",
            sup_gamma <= upper,
            format!("sup gamma_n = {sup_gamma:.6e}, bound = {upper:.6e}"),
        ),
    ];
    StepsizeReport {
        method: "sifb",
        terms: Vec::new(),
        coupling_sum: 0.0,
        gamma: None,
        beta_over_v: beta_over_u,
        conditions,
    }
}
