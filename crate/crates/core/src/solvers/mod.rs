//! Iteration maps, step-size validation, schedules and the run loop.

pub mod diagnostics;
pub mod run;
pub mod schedules;
pub mod steps;
pub mod validate;

pub use diagnostics::{
    certify_solution, fejer_diagnostic, first_increase, first_quasi_fejer_violation, fixed_point_residual,
    CertificateInfo, SolutionCertificate,
};
pub use run::{
    log_to_csv, run_solver, validate_run, write_log, IterateRecord, Method, RunDiagnostics, RunOutput, StepScaling,
    StopReason, SolverOptions, StoppingRule, LOG_HEADER,
};
pub use schedules::{InertiaRule, ScheduleReport, Schedules, StepRule};
pub use steps::{
    pd1_map, pd1_step, pd2_map, pd2_step, sifb_step, DualArgument, Pd2Form, PdMetrics, SeparableResolvent, SolverState,
};
pub use validate::{validate_stepsize_pd1, validate_stepsize_pd2, validate_stepsize_sifb, Condition, StepsizeReport};
