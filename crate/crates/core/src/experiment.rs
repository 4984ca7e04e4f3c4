//! Experiment configuration and the four harness commands: data generation,
//! reference computation, seeded stochastic sweeps and the audit report.

use std::fmt;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{
    assemble_group_lasso, empirical_oracle_audit, experiment_groups, polynomial_features, CompositeProblem, Dataset,
    DatasetMeta, GradientOracle, OracleKind,
};
use crate::solvers::{
    run_solver, validate_run, write_log, CertificateInfo, DualArgument, InertiaRule, Method, Pd2Form, PdMetrics,
    RunOutput, ScheduleReport, Schedules, SolutionCertificate, SolverOptions, StepScaling, StepRule, StepsizeReport,
    StopReason, StoppingRule,
};

/// Coefficients of the generating polynomial in the experiment.
pub const TRUE_COEFFICIENTS: [f64; 32] = [
    3.0, 2.0, 1.0, 0.0, 1.0, 0.0, 1.0, 2.0, -1.0, 0.0, 0.0, -2.0, -1.0, 1.0, 0.5, 0.0, 1.0, 0.0, 4.0, 0.0, -2.0, 0.0,
    0.0, -2.0, 1.0, 1.0, 0.0, 0.0, 0.2, -0.1, 0.0, 0.0,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub samples: usize,
    pub dim: usize,
    pub interval: [f64; 2],
    pub noise_variance: f64,
    pub true_coefficients: Vec<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub lambda: f64,
    /// 0-based coordinate groups. Omitted means the eight overlapping groups
    /// of the experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub algorithm: Method,
    /// `V = tau Id`; omitted means `0.8 beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primal_step: Option<f64>,
    /// `W_k = sigma Id`; omitted means the coupling sum is 1/4.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_step: Option<f64>,
    #[serde(default)]
    pub dual_argument: DualArgument,
    /// Drop the `V` in front of the dual sum in the second class.
    #[serde(default)]
    pub pd2_literal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub iterations: usize,
    pub seeds: Vec<u64>,
    pub log_every: usize,
    pub reference_iterations: usize,
    pub reference_tolerance: f64,
    #[serde(default = "yes")]
    pub wall_clock: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsSection {
    #[serde(default)]
    pub validator_override: bool,
    #[serde(default)]
    pub step_scaling: StepScaling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSection,
    pub problem: ProblemSection,
    pub method: MethodSection,
    pub schedule: Schedules,
    pub oracle: OracleKind,
    pub run: RunSection,
    #[serde(default)]
    pub flags: FlagsSection,
}

impl ExperimentConfig {
    /// The regression experiment: 48 samples, 32 monomials, group lasso with
    /// `lambda = 0.02`, `gamma_n = 15/(n+100)`, `alpha_n = gamma_n^2` and
    /// Gaussian gradient noise decaying like `1/n`.
    pub fn regression() -> Self {
        ExperimentConfig {
            dataset: DatasetSection {
                samples: 48,
                dim: 32,
                interval: [-1.0, 1.0],
                noise_variance: 0.3,
                true_coefficients: TRUE_COEFFICIENTS.to_vec(),
                seed: 0,
            },
            problem: ProblemSection {
                lambda: 0.02,
                groups: None,
            },
            method: MethodSection {
                algorithm: Method::Pd1,
                primal_step: None,
                dual_step: None,
                dual_argument: DualArgument::Printed,
                pd2_literal: false,
            },
            schedule: Schedules::experiment(),
            oracle: OracleKind::GaussianDecay { variance: 1.0 },
            run: RunSection {
                iterations: 5000,
                seeds: (0..20).collect(),
                log_every: 10,
                reference_iterations: 50_000,
                reference_tolerance: 1e-12,
                wall_clock: true,
            },
            flags: FlagsSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            what: "config".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            what: "config".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                what: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        if d.samples == 0 {
            return Err(Error::Config("dataset.samples must be positive".into()));
        }
        if d.dim == 0 {
            return Err(Error::Config("dataset.dim must be positive".into()));
        }
        if d.true_coefficients.len() != d.dim {
            return Err(Error::Config(format!(
                "dataset.true_coefficients has {} entries, expected dim = {}",
                d.true_coefficients.len(),
                d.dim
            )));
        }
        if d.interval[0].is_nan() || d.interval[1].is_nan() || d.interval[0] >= d.interval[1] {
            return Err(Error::Config("dataset.interval must satisfy a < b".into()));
        }
        if !(d.noise_variance >= 0.0 && d.noise_variance.is_finite()) {
            return Err(Error::Config("dataset.noise_variance must be >= 0".into()));
        }
        if !(self.problem.lambda >= 0.0 && self.problem.lambda.is_finite()) {
            return Err(Error::Config("problem.lambda must be >= 0".into()));
        }
        if let Some(groups) = &self.problem.groups {
            for g in groups {
                if g.is_empty() || g.iter().any(|&i| i >= d.dim) {
                    return Err(Error::Config(format!("group {g:?} is empty or out of range for dim {}", d.dim)));
                }
            }
        }
        for (name, step) in [("primal_step", self.method.primal_step), ("dual_step", self.method.dual_step)] {
            if let Some(s) = step {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::Config(format!("method.{name} must be positive")));
                }
            }
        }
        if self.method.algorithm == Method::Sifb && self.flags.step_scaling == StepScaling::Primal {
            return Err(Error::Config("step_scaling applies to the primal-dual methods only".into()));
        }
        if self.run.seeds.is_empty() {
            return Err(Error::Config("run.seeds must not be empty".into()));
        }
        if self.run.reference_tolerance.is_nan() || self.run.reference_tolerance < 0.0 {
            return Err(Error::Config("run.reference_tolerance must be >= 0".into()));
        }
        self.schedule.validate()?;
        self.oracle.validate()
    }

    pub fn dataset_meta(&self) -> DatasetMeta {
        let d = &self.dataset;
        DatasetMeta {
            samples: d.samples,
            dim: d.dim,
            interval: d.interval,
            noise_variance: d.noise_variance,
            true_coefficients: d.true_coefficients.clone(),
            seed: d.seed,
        }
    }

    pub fn groups(&self) -> Result<Vec<Vec<usize>>> {
        match &self.problem.groups {
            Some(g) => Ok(g.clone()),
            None => experiment_groups(self.dataset.dim),
        }
    }

    pub fn generate_dataset(&self) -> Result<Dataset> {
        self.validate()?;
        Dataset::generate_polynomial(self.dataset_meta())
    }

    pub fn assemble(&self, dataset: &Dataset) -> Result<CompositeProblem> {
        assemble_group_lasso(dataset, self.problem.lambda, &self.groups()?)
    }

    /// `(tau, sigma)`, filling in the automatic choices.
    pub fn steps(&self, problem: &CompositeProblem) -> (f64, f64) {
        let beta = problem.smooth().beta();
        let tau = self
            .method
            .primal_step
            .unwrap_or(if beta.is_finite() { 0.8 * beta } else { 1.0 });
        let sigma = self.method.dual_step.unwrap_or_else(|| {
            let total: f64 = problem.operator().norms().iter().map(|n| n.value * n.value).sum();
            if total > 0.0 {
                0.25 / (tau * total)
            } else {
                1.0
            }
        });
        (tau, sigma)
    }

    pub fn metrics(&self, problem: &CompositeProblem) -> Result<PdMetrics> {
        let (tau, sigma) = self.steps(problem);
        PdMetrics::scaled(problem, tau, sigma)
    }

    /// Options for a run of `method` over `iterations` steps.
    pub fn solver_options(&self, problem: &CompositeProblem, method: Method) -> Result<SolverOptions> {
        let mut opts = SolverOptions::new(method, self.metrics(problem)?);
        opts.schedules = self.schedule.clone();
        opts.stop = StoppingRule {
            max_iters: self.run.iterations,
            fp_tol: None,
        };
        opts.log_every = self.run.log_every;
        opts.override_validation = self.flags.validator_override;
        opts.dual_argument = self.method.dual_argument;
        opts.pd2_form = if self.method.pd2_literal {
            Pd2Form::Literal
        } else {
            Pd2Form::MetricConsistent
        };
        opts.step_scaling = self.flags.step_scaling;
        opts.record_wall_clock = self.run.wall_clock;
        Ok(opts)
    }
}

/// Writes `dataset.csv` and `dataset.meta.json` into `dir`.
pub fn gen_data(cfg: &ExperimentConfig, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let data = cfg.generate_dataset()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join("dataset.csv");
    let meta = dir.join("dataset.meta.json");
    data.write(&csv, &meta)?;
    Ok((csv, meta))
}

/// Deterministic first primal-dual run (exact gradients, no inertia) up to
/// `reference_iterations` or a fixed-point residual of
/// `reference_tolerance`.
pub fn compute_reference(cfg: &ExperimentConfig, problem: &CompositeProblem) -> Result<RunOutput> {
    let mut opts = cfg.solver_options(problem, Method::Pd1)?;
    opts.schedules = Schedules {
        gamma: StepRule::Constant { value: 1.0 },
        alpha: InertiaRule::Zero,
        relaxation: StepRule::Constant { value: 1.0 },
        epsilon: cfg.schedule.epsilon,
    };
    opts.step_scaling = StepScaling::None;
    opts.stop = StoppingRule {
        max_iters: cfg.run.reference_iterations,
        fp_tol: Some(cfg.run.reference_tolerance),
    };
    let out = run_solver(problem, &opts, &mut GradientOracle::exact(), None)?;
    if out.diagnostics.stop_reason == StopReason::Diverged {
        return Err(Error::Diverged {
            iteration: out.diagnostics.iterations,
            objective: problem.objective(&out.certificate.w),
        });
    }
    Ok(out)
}

pub fn reference_info(cfg: &ExperimentConfig, problem: &CompositeProblem, out: &RunOutput) -> CertificateInfo {
    let (tau, sigma) = cfg.steps(problem);
    CertificateInfo {
        method: "pd1".into(),
        iterations: out.diagnostics.iterations,
        primal_step: tau,
        dual_step: sigma,
        objective: problem.objective(&out.certificate.w),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub iterations: usize,
    pub final_objective: f64,
    pub final_distance: Option<f64>,
    pub fp_residual: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: usize,
    pub median_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub seeds: Vec<SeedSummary>,
    pub objective: Quartiles,
    pub distance: Option<Quartiles>,
    pub reference_norm: Option<f64>,
    /// Median distance to the reference at `n = 10, 100, 1000, ...` and at
    /// the final iteration.
    pub checkpoints: Vec<Checkpoint>,
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        Quartiles {
            q1: quantile(values, 0.25),
            median: quantile(values, 0.5),
            q3: quantile(values, 0.75),
        }
    }
}

/// Checkpoint iterations: powers of ten up to `iterations`, then
/// `iterations` itself.
pub fn decade_checkpoints(iterations: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = 10;
    while n <= iterations {
        out.push(n);
        n *= 10;
    }
    if iterations > 0 && out.last() != Some(&iterations) {
        out.push(iterations);
    }
    out
}

#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub output: RunOutput,
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub runs: Vec<SeedRun>,
    pub summary: RunSummary,
}

impl RunSummary {
    pub fn from_runs(method: Method, runs: &[SeedRun], reference: Option<&SolutionCertificate>) -> Self {
        let seeds: Vec<SeedSummary> = runs
            .iter()
            .map(|r| {
                let last = r.output.records.last();
                SeedSummary {
                    seed: r.seed,
                    iterations: r.output.diagnostics.iterations,
                    final_objective: last.map_or(f64::NAN, |l| l.objective),
                    final_distance: last.and_then(|l| l.dist_ref_euclid),
                    fp_residual: r.output.certificate.fp_residual,
                    wall_ms: last.map_or(0.0, |l| l.wall_ms),
                }
            })
            .collect();
        let iterations = runs.iter().map(|r| r.output.diagnostics.iterations).max().unwrap_or(0);
        let checkpoints = if reference.is_some() {
            decade_checkpoints(iterations)
                .into_iter()
                .filter_map(|n| {
                    let d: Vec<f64> = runs
                        .iter()
                        .filter_map(|r| r.output.records.iter().find(|x| x.n == n).and_then(|x| x.dist_ref_euclid))
                        .collect();
                    (!d.is_empty()).then(|| Checkpoint {
                        n,
                        median_distance: quantile(&d, 0.5),
                    })
                })
                .collect()
        } else {
            Vec::new()
        };
        let objectives: Vec<f64> = seeds.iter().map(|s| s.final_objective).collect();
        let distances: Vec<f64> = seeds.iter().filter_map(|s| s.final_distance).collect();
        RunSummary {
            method,
            objective: Quartiles::of(&objectives),
            distance: (!distances.is_empty()).then(|| Quartiles::of(&distances)),
            reference_norm: reference.map(|r| r.w.dot(&r.w).sqrt()),
            checkpoints,
            seeds,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse {
            what: "summary".into(),
            message: e.to_string(),
        })
    }
}

/// Runs the configured method once per seed, in parallel. Results come back
/// in seed order.
pub fn solve(cfg: &ExperimentConfig, problem: &CompositeProblem, reference: Option<&SolutionCertificate>) -> Result<Sweep> {
    let opts = cfg.solver_options(problem, cfg.method.algorithm)?;
    let report = validate_run(problem, &opts, &cfg.oracle)?;
    if !report.ok() && !opts.override_validation {
        let listed: Vec<String> = report.violations().iter().map(|c| format!("{} ({})", c.name, c.detail)).collect();
        return Err(Error::ConditionViolated(listed.join("; ")));
    }
    let runs = cfg
        .run
        .seeds
        .par_iter()
        .map(|&seed| {
            let mut oracle = GradientOracle::new(cfg.oracle.clone(), seed)?;
            let output = run_solver(problem, &opts, &mut oracle, reference)?;
            Ok(SeedRun { seed, output })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = RunSummary::from_runs(cfg.method.algorithm, &runs, reference);
    Ok(Sweep { runs, summary })
}

/// `x, f_hat(x), f_true(x)` on `points` equispaced inputs over the interval.
pub fn regression_grid(cfg: &ExperimentConfig, w: &Array1<f64>, points: usize) -> String {
    let [a, b] = cfg.dataset.interval;
    let truth = Array1::from(cfg.dataset.true_coefficients.clone());
    let mut out = String::from("x,f_hat,f_true\n");
    for i in 0..points {
        let x = if points > 1 {
            a + (b - a) * i as f64 / (points - 1) as f64
        } else {
            a
        };
        let phi = polynomial_features(x, w.len());
        out.push_str(&format!("{},{},{}\n", x, phi.dot(w), phi.dot(&truth)));
    }
    out
}

/// Writes `log_seed<k>.csv`, `grid_seed<k>.csv` and `summary.json`.
pub fn write_sweep(cfg: &ExperimentConfig, sweep: &Sweep, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for run in &sweep.runs {
        let log = dir.join(format!("log_seed{}.csv", run.seed));
        write_log(&log, &run.output.records)?;
        let grid = dir.join(format!("grid_seed{}.csv", run.seed));
        std::fs::write(&grid, regression_grid(cfg, &run.output.certificate.w, 200)).map_err(|e| Error::io(&grid, e))?;
        written.push(log);
        written.push(grid);
    }
    let summary = dir.join("summary.json");
    std::fs::write(&summary, sweep.summary.to_json()? + "\n").map_err(|e| Error::io(&summary, e))?;
    written.push(summary);
    Ok(written)
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub beta: f64,
    pub operator_norms: Vec<f64>,
    pub primal_step: f64,
    pub dual_step: f64,
    pub stepsize: StepsizeReport,
    pub schedule: ScheduleReport,
    pub horizon: usize,
    pub oracle: OracleKind,
    pub oracle_mean_error: f64,
    pub oracle_variance: f64,
    pub oracle_draws: usize,
}

impl AuditReport {
    pub fn summable_variance_holds(&self) -> bool {
        self.stepsize
            .conditions
            .iter()
            .find(|c| c.name == "summable oracle variance")
            .is_none_or(|c| c.holds)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "beta = {:.6e}", self.beta)?;
        let norms: Vec<String> = self.operator_norms.iter().map(|n| format!("{n:.6}")).collect();
        writeln!(f, "operator norms = [{}]", norms.join(", "))?;
        writeln!(f, "primal step = {:.6e}, dual step = {:.6e}", self.primal_step, self.dual_step)?;
        writeln!(f, "oracle {:?} at w = 0, n = 1 ({} draws):", self.oracle, self.oracle_draws)?;
        writeln!(f, "  mean error = {:.6e}", self.oracle_mean_error)?;
        writeln!(f, "  variance = {:.6e}", self.oracle_variance)?;
        writeln!(f, "schedule over {} iterations:", self.horizon)?;
        writeln!(f, "  inf gamma_n = {:.6e}", self.schedule.inf_gamma)?;
        writeln!(f, "  sum alpha_n = {:.6e}", self.schedule.alpha_sum)?;
        write!(f, "{}", self.stepsize)
    }
}

pub fn audit(cfg: &ExperimentConfig, problem: &CompositeProblem, draws: usize) -> Result<AuditReport> {
    let opts = cfg.solver_options(problem, cfg.method.algorithm)?;
    let stepsize = validate_run(problem, &opts, &cfg.oracle)?;
    let schedule = cfg.schedule.report(cfg.run.iterations.max(1));
    let (tau, sigma) = cfg.steps(problem);
    let mut oracle = GradientOracle::new(cfg.oracle.clone(), cfg.run.seeds[0])?;
    let zero = Array1::zeros(problem.dim());
    let audit = empirical_oracle_audit(&mut oracle, problem.smooth(), zero.view(), 1, draws);
    Ok(AuditReport {
        beta: problem.smooth().beta(),
        operator_norms: problem.operator().norms().iter().map(|n| n.value).collect(),
        primal_step: tau,
        dual_step: sigma,
        stepsize,
        schedule,
        horizon: cfg.run.iterations,
        oracle: cfg.oracle.clone(),
        oracle_mean_error: audit.mean_error,
        oracle_variance: audit.variance_estimate,
        oracle_draws: draws.max(2),
    })
}
