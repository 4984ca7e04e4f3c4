use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive scalar sequence indexed from `n = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepRule {
    Constant { value: f64 },
    /// `numerator / (n + offset)`.
    Harmonic { numerator: f64, offset: f64 },
}

impl StepRule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            StepRule::Constant { value } => value,
            StepRule::Harmonic { numerator, offset } => numerator / (n as f64 + offset),
        }
    }

    /// Largest value over the run; both rules are nonincreasing.
    pub fn sup(&self) -> f64 {
        self.at(0)
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            StepRule::Constant { value } => value.is_finite() && value > 0.0,
            StepRule::Harmonic { numerator, offset } => numerator.is_finite() && numerator > 0.0 && offset > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{name} schedule must be positive: {self:?}")))
        }
    }
}

/// Inertia sequence `alpha_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InertiaRule {
    Zero,
    Constant { value: f64 },
    /// `alpha_n = gamma_n^2`.
    GammaSquared,
    /// `(n - 1) / (n + 2)`; not summable, accepted only with an override.
    Nesterov,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedules {
    pub gamma: StepRule,
    pub alpha: InertiaRule,
    /// Dual relaxation `lambda_n` of the second primal-dual class.
    pub relaxation: StepRule,
    pub epsilon: f64,
}

impl Default for Schedules {
    fn default() -> Self {
        Schedules {
            gamma: StepRule::Constant { value: 1.0 },
            alpha: InertiaRule::Zero,
            relaxation: StepRule::Constant { value: 1.0 },
            epsilon: 1e-3,
        }
    }
}

impl Schedules {
    /// The experiment's schedules: `gamma_n = 15 / (n + 100)`, `alpha_n = gamma_n^2`.
    pub fn experiment() -> Self {
        Schedules {
            gamma: StepRule::Harmonic {
                numerator: 15.0,
                offset: 100.0,
            },
            alpha: InertiaRule::GammaSquared,
            ..Schedules::default()
        }
    }

    pub fn gamma(&self, n: usize) -> f64 {
        self.gamma.at(n)
    }

    pub fn alpha(&self, n: usize) -> f64 {
        match self.alpha {
            InertiaRule::Zero => 0.0,
            InertiaRule::Constant { value } => value,
            InertiaRule::GammaSquared => self.gamma(n).powi(2),
            InertiaRule::Nesterov => (n as f64 - 1.0).max(0.0) / (n as f64 + 2.0),
        }
    }

    pub fn relaxation(&self, n: usize) -> f64 {
        self.relaxation.at(n)
    }

    pub fn validate(&self) -> Result<()> {
        self.gamma.validate("gamma")?;
        self.relaxation.validate("relaxation")?;
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon {} must lie in (0, 1)", self.epsilon)));
        }
        if let InertiaRule::Constant { value } = self.alpha {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Config(format!("inertia {value} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Range checks over the first `horizon` iterations.
    pub fn report(&self, horizon: usize) -> ScheduleReport {
        let eps = self.epsilon;
        let mut r = ScheduleReport {
            inf_gamma: f64::INFINITY,
            sup_gamma: 0.0,
            alpha_sum: 0.0,
            alpha_max: 0.0,
            inf_relaxation: f64::INFINITY,
            sup_relaxation: 0.0,
            violations: Vec::new(),
        };
        for n in 0..horizon {
            let g = self.gamma(n);
            let a = self.alpha(n);
            let l = self.relaxation(n);
            r.inf_gamma = r.inf_gamma.min(g);
            r.sup_gamma = r.sup_gamma.max(g);
            r.alpha_sum += a;
            r.alpha_max = r.alpha_max.max(a);
            r.inf_relaxation = r.inf_relaxation.min(l);
            r.sup_relaxation = r.sup_relaxation.max(l);
        }
        if horizon > 0 {
            if r.alpha_max > 1.0 - eps {
                r.violations
                    .push(format!("alpha_n reaches {} > 1 - epsilon", r.alpha_max));
            }
            if r.inf_relaxation < eps || r.sup_relaxation > 1.0 {
                r.violations.push(format!(
                    "lambda_n spans [{}, {}], outside [epsilon, 1]",
                    r.inf_relaxation, r.sup_relaxation
                ));
            }
        }
        match self.alpha {
            InertiaRule::Nesterov => r
                .violations
                .push("Nesterov inertia is not summable".into()),
            InertiaRule::Constant { value } if value > 0.0 => r
                .violations
                .push("constant positive inertia is not summable".into()),
            _ => {}
        }
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub inf_gamma: f64,
    pub sup_gamma: f64,
    /// Partial sum of `alpha_n` over the horizon.
    pub alpha_sum: f64,
    pub alpha_max: f64,
    pub inf_relaxation: f64,
    pub sup_relaxation: f64,
    pub violations: Vec<String>,
}
