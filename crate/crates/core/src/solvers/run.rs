//! Orchestration of a full run: validation, iteration, logging and the
//! final certificate.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::diagnostics::{certify_solution, fixed_point_residual, SolutionCertificate};
use super::schedules::{ScheduleReport, Schedules};
use super::steps::{pd1_map, pd1_step, pd2_map, pd2_step, sifb_step, DualArgument, Pd2Form, PdMetrics, SeparableResolvent, SolverState};
use super::validate::{validate_stepsize_pd1, validate_stepsize_pd2, validate_stepsize_sifb, Condition, StepsizeReport};
use crate::error::{Error, Result};
use crate::problem::{CompositeProblem, GradientOracle, OracleKind};
use crate::spaces::{DualBlocks, Metric, PowerIterationSettings, PrimalPoint, SaddleMetric, SaddleVariant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Inertial forward-backward on the primal problem.
    Sifb,
    /// First primal-dual class.
    Pd1,
    /// Second primal-dual class (`f = 0`).
    Pd2,
}

/// How the schedule's `gamma_n` enters the primal-dual methods.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepScaling {
    /// `V` and `W_k` stay fixed; `gamma_n` only feeds the inertia rule.
    #[default]
    None,
    /// `V_n = gamma_n V`.
    Primal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingRule {
    pub max_iters: usize,
    /// Stop once the fixed-point residual drops to this value.
    pub fp_tol: Option<f64>,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            max_iters: 5000,
            fp_tol: Some(1e-8),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub method: Method,
    pub schedules: Schedules,
    pub metrics: PdMetrics,
    pub stop: StoppingRule,
    /// Record every `log_every` iterations (and the last one); 0 keeps only
    /// the last.
    pub log_every: usize,
    pub override_validation: bool,
    pub dual_argument: DualArgument,
    pub pd2_form: Pd2Form,
    pub step_scaling: StepScaling,
    pub divergence_threshold: f64,
    pub record_wall_clock: bool,
    /// Log the noise proxy needed to audit the quasi-Fejer inequality.
    pub fejer_audit: bool,
    pub keep_trajectory: bool,
    pub norm_settings: PowerIterationSettings,
    pub initial: Option<(PrimalPoint, DualBlocks)>,
}

impl SolverOptions {
    pub fn new(method: Method, metrics: PdMetrics) -> Self {
        SolverOptions {
            method,
            schedules: Schedules::default(),
            metrics,
            stop: StoppingRule::default(),
            log_every: 1,
            override_validation: false,
            dual_argument: DualArgument::Printed,
            pd2_form: Pd2Form::MetricConsistent,
            step_scaling: StepScaling::None,
            divergence_threshold: 1e12,
            record_wall_clock: true,
            fejer_audit: false,
            keep_trajectory: false,
            norm_settings: PowerIterationSettings::default(),
            initial: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterateRecord {
    pub n: usize,
    pub objective: f64,
    pub fp_residual: f64,
    /// `||w_n - w_ref||`, primal only.
    pub dist_ref_euclid: Option<f64>,
    /// Product-metric distance of `(w_n, v_n)` to the reference pair.
    pub dist_ref_metric: Option<f64>,
    pub gamma: f64,
    pub alpha: f64,
    pub wall_ms: f64,
    /// `alpha_n ||z_n - z_{n-1}||_M + ||z_{n+1} - T(y_n)||_M`, where `T` is the
    /// exact map; only with `fejer_audit`.
    pub noise_proxy: Option<f64>,
}

pub const LOG_HEADER: &str = "n,objective,fp_residual,dist_ref_euclid,dist_ref_metric,gamma,alpha,wall_ms";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// CSV rendering of an iterate log.
pub fn log_to_csv(records: &[IterateRecord]) -> String {
    let mut out = String::from(LOG_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.objective,
            r.fp_residual,
            opt(r.dist_ref_euclid),
            opt(r.dist_ref_metric),
            r.gamma,
            r.alpha,
            r.wall_ms
        );
    }
    out
}

pub fn write_log(path: &Path, records: &[IterateRecord]) -> Result<()> {
    std::fs::write(path, log_to_csv(records)).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    Converged,
    /// Objective exceeded the divergence threshold; the last good state is
    /// returned.
    Diverged,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunDiagnostics {
    pub stepsize: StepsizeReport,
    pub schedule: ScheduleReport,
    pub override_used: bool,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub sup_primal_increment: f64,
    pub sup_dual_increment: f64,
    pub alpha_sum: f64,
    pub inf_gamma: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub certificate: SolutionCertificate,
    pub records: Vec<IterateRecord>,
    pub diagnostics: RunDiagnostics,
    /// `(w_n, v_n)` for `n = 0..=iterations` when requested.
    pub trajectory: Vec<(PrimalPoint, DualBlocks)>,
}

/// Evaluates the theorem conditions for a configuration without running it.
pub fn validate_run(problem: &CompositeProblem, options: &SolverOptions, oracle: &OracleKind) -> Result<StepsizeReport> {
    options.schedules.validate()?;
    options.metrics.check(problem)?;
    let s = &options.schedules;
    let beta = problem.smooth().beta();
    let horizon = options.stop.max_iters;
    let sched = s.report(horizon.max(1));
    let v_sup = match options.step_scaling {
        StepScaling::Primal if options.method != Method::Sifb => options.metrics.v.scaled(sched.sup_gamma)?,
        _ => options.metrics.v.clone(),
    };
    let mut report = match options.method {
        Method::Pd1 => validate_stepsize_pd1(
            &v_sup,
            &options.metrics.w,
            problem.operator(),
            beta,
            s.epsilon,
            options.norm_settings,
        )?,
        Method::Pd2 => {
            if !problem.f().is_zero() {
                return Err(Error::Config("pd2 requires f = 0".into()));
            }
            validate_stepsize_pd2(
                &v_sup,
                &options.metrics.w,
                problem.operator(),
                beta,
                s.epsilon,
                options.norm_settings,
            )?
        }
        Method::Sifb => {
            SeparableResolvent::new(problem, options.metrics.v.clone())?;
            validate_stepsize_sifb(options.metrics.v.norm(), beta, s.epsilon, sched.inf_gamma, sched.sup_gamma)
        }
    };
    for v in &sched.violations {
        report.conditions.push(Condition {
            name: "schedule".into(),
            holds: false,
            detail: v.clone(),
        });
    }
    report.conditions.push(Condition {
        name: "summable oracle variance".into(),
        holds: oracle.summable_variance(),
        detail: match oracle {
            OracleKind::FixedMinibatch { size } => {
                format!("fixed batch of {size}: variance does not decay, so its sum diverges")
            }
            OracleKind::GrowingMinibatch { growth, .. } if *growth <= 0.0 => {
                "batch growth exponent must be positive".into()
            }
            other => format!("{other:?}"),
        },
    });
    Ok(report)
}

enum DistanceMetric {
    Saddle(SaddleMetric),
    Primal(Metric),
}

impl DistanceMetric {
    fn norm(&self, dw: &PrimalPoint, dv: &DualBlocks) -> Option<f64> {
        match self {
            DistanceMetric::Saddle(m) => m.norm(dw, dv).ok(),
            DistanceMetric::Primal(u) => Some(u.inverse_quadratic(dw.view()).max(0.0).sqrt()),
        }
    }
}

fn distance_metric(problem: &CompositeProblem, options: &SolverOptions, metrics: &PdMetrics) -> Option<DistanceMetric> {
    let variant = match options.method {
        Method::Sifb => return Some(DistanceMetric::Primal(metrics.v.clone())),
        Method::Pd1 => SaddleVariant::UPrime,
        Method::Pd2 => SaddleVariant::TMetric,
    };
    SaddleMetric::new(metrics.v.clone(), metrics.w.clone(), problem.operator().clone(), variant)
        .ok()
        .map(DistanceMetric::Saddle)
}

fn diff_norm(a: &PrimalPoint, b: &PrimalPoint) -> f64 {
    let d = a - b;
    d.dot(&d).sqrt()
}

/// Runs the selected method until `max_iters` or until the fixed-point
/// residual reaches `fp_tol`.
pub fn run_solver(
    problem: &CompositeProblem,
    options: &SolverOptions,
    oracle: &mut GradientOracle,
    reference: Option<&SolutionCertificate>,
) -> Result<RunOutput> {
    let stepsize = validate_run(problem, options, oracle.kind())?;
    if !stepsize.ok() && !options.override_validation {
        let listed: Vec<String> = stepsize
            .violations()
            .iter()
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect();
        return Err(Error::ConditionViolated(listed.join("; ")));
    }
    let override_used = !stepsize.ok();
    let schedule = options.schedules.report(options.stop.max_iters);

    let (w0, v0) = options
        .initial
        .clone()
        .unwrap_or_else(|| (Array1::zeros(problem.dim()), problem.zero_dual()));
    if w0.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            operator: None,
            expected: problem.dim(),
            found: w0.len(),
        });
    }
    if v0.dims() != problem.block_dims() {
        return Err(Error::Config("initial dual does not match the block structure".into()));
    }

    let resolvent = match options.method {
        Method::Sifb => Some(SeparableResolvent::new(problem, options.metrics.v.clone())?),
        _ => None,
    };
    let sifb_dual = |w: &PrimalPoint| match &resolvent {
        Some(r) => r.recover_dual(w),
        None => problem.zero_dual(),
    };

    let base_metrics = &options.metrics;
    let sup_gamma = options.schedules.gamma.sup();
    let dist_metrics = match options.step_scaling {
        StepScaling::Primal if options.method != Method::Sifb => base_metrics.with_primal_scale(sup_gamma)?,
        _ => base_metrics.clone(),
    };
    let dmetric = distance_metric(problem, options, &dist_metrics);
    let reference = reference.filter(|r| r.w.len() == problem.dim());
    let ref_dual_ok = reference.is_some_and(|r| r.v.dims() == problem.block_dims());

    let mut state = SolverState::new(w0, v0);
    let mut records = Vec::new();
    let mut trajectory = Vec::new();
    if options.keep_trajectory {
        trajectory.push((state.w.clone(), state.v.clone()));
    }
    let start = Instant::now();
    let mut stop_reason = StopReason::MaxIterations;
    let mut sup_dw: f64 = 0.0;
    let mut sup_dv: f64 = 0.0;
    let mut alpha_sum = 0.0;
    let mut inf_gamma = f64::INFINITY;
    let smooth = problem.smooth();

    for it in 0..options.stop.max_iters {
        let n = state.n;
        let gamma = options.schedules.gamma(n);
        let alpha = options.schedules.alpha(n);
        let relax = options.schedules.relaxation(n);
        let scaled;
        let metrics = match options.step_scaling {
            StepScaling::Primal if options.method != Method::Sifb => {
                scaled = base_metrics.with_primal_scale(gamma)?;
                &scaled
            }
            _ => base_metrics,
        };
        let previous = (state.w.clone(), state.v.clone(), state.w_prev.clone(), state.v_prev.clone());
        let audit_point = (options.fejer_audit && dmetric.is_some()).then(|| state.extrapolated(alpha));

        let mut draw = |x: ArrayView1<f64>| oracle.draw(smooth, x, n + 1);
        match options.method {
            Method::Pd1 => pd1_step(&mut state, problem, metrics, alpha, options.dual_argument, &mut draw)?,
            Method::Pd2 => pd2_step(&mut state, problem, metrics, alpha, relax, options.pd2_form, &mut draw)?,
            Method::Sifb => {
                let res = resolvent.as_ref().expect("resolvent built for sifb");
                sifb_step(&mut state, &|x, g| res.apply(x, g), &mut draw, &metrics.v, gamma, alpha)?
            }
        }

        let objective = problem.objective(&state.w);
        if !objective.is_finite() || objective > options.divergence_threshold {
            state.w = previous.0;
            state.v = previous.1;
            state.w_prev = previous.2;
            state.v_prev = previous.3;
            state.n -= 1;
            stop_reason = StopReason::Diverged;
            break;
        }

        alpha_sum += alpha;
        inf_gamma = inf_gamma.min(gamma);
        sup_dw = sup_dw.max(diff_norm(&state.w, &state.w_prev));
        sup_dv = sup_dv.max(state.v.sub(&state.v_prev).norm());
        if options.keep_trajectory {
            trajectory.push((state.w.clone(), state.v.clone()));
        }

        let noise_proxy = match (&audit_point, &dmetric) {
            (Some((u, d)), Some(dm)) => {
                let grad = smooth.gradient(u.view());
                let exact = match options.method {
                    Method::Pd1 => pd1_map(problem, metrics, u, d, &grad, options.dual_argument)?,
                    Method::Pd2 => pd2_map(problem, metrics, u, d, &state.v_prev, &grad, relax, options.pd2_form)?,
                    Method::Sifb => {
                        let res = resolvent.as_ref().expect("resolvent built for sifb");
                        let fwd = u - &(metrics.v.apply(grad.view()) * gamma);
                        (res.apply(&fwd, gamma)?, d.clone())
                    }
                };
                let noise = dm.norm(&(&state.w - &exact.0), &state.v.sub(&exact.1)).unwrap_or(f64::NAN);
                let inertia = dm
                    .norm(&(&state.w_prev - &previous.2), &state.v_prev.sub(&previous.3))
                    .unwrap_or(f64::NAN);
                Some(alpha * inertia + noise)
            }
            _ => None,
        };

        let last = it + 1 == options.stop.max_iters;
        let log_row = (options.log_every > 0 && state.n.is_multiple_of(options.log_every)) || last;
        let fp = if options.stop.fp_tol.is_some() || log_row {
            let v_eval = if options.method == Method::Sifb { sifb_dual(&state.w) } else { state.v.clone() };
            Some(fixed_point_residual(problem, base_metrics, &state.w, &v_eval)?)
        } else {
            None
        };
        let converged = matches!((fp, options.stop.fp_tol), (Some(r), Some(tol)) if r <= tol);

        if log_row || converged {
            let (dist_e, dist_m) = match reference {
                Some(r) => {
                    let de = diff_norm(&state.w, &r.w);
                    let dm = if ref_dual_ok || options.method == Method::Sifb {
                        dmetric.as_ref().and_then(|m| {
                            let dv = if ref_dual_ok { state.v.sub(&r.v) } else { DualBlocks::zeros(&[]) };
                            m.norm(&(&state.w - &r.w), &dv)
                        })
                    } else {
                        None
                    };
                    (Some(de), dm)
                }
                None => (None, None),
            };
            records.push(IterateRecord {
                n: state.n,
                objective,
                fp_residual: fp.unwrap_or(f64::NAN),
                dist_ref_euclid: dist_e,
                dist_ref_metric: dist_m,
                gamma,
                alpha,
                wall_ms: if options.record_wall_clock {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                },
                noise_proxy,
            });
        }
        if converged {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    let v_final = if options.method == Method::Sifb { sifb_dual(&state.w) } else { state.v.clone() };
    let certificate = certify_solution(problem, base_metrics, &state.w, &v_final)?;
    Ok(RunOutput {
        certificate,
        records,
        diagnostics: RunDiagnostics {
            stepsize,
            schedule,
            override_used,
            iterations: state.n,
            stop_reason,
            sup_primal_increment: sup_dw,
            sup_dual_increment: sup_dv,
            alpha_sum,
            inf_gamma,
        },
        trajectory,
    })
}
