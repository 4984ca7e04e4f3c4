use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stoch_pd::experiment::{audit, compute_reference, gen_data, reference_info, solve, write_sweep, ExperimentConfig};
use stoch_pd::solvers::{SolutionCertificate, StopReason};
use stoch_pd::{Dataset, Error, Result};

#[derive(Parser)]
#[command(name = "stoch-pd", version, about = "Stochastic primal-dual splitting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment config; the built-in regression experiment if omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides the dataset seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Read `dataset.csv` and `dataset.meta.json` from this directory instead
    /// of regenerating.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the default config to a file.
    InitConfig {
        #[arg(short, long, default_value = "experiment.toml")]
        out: PathBuf,
    },
    /// Generate the regression dataset.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Deterministic reference solution.
    Reference {
        #[command(flatten)]
        common: Common,
        #[arg(short, long, default_value = "out/reference.json")]
        out: PathBuf,
    },
    /// Stochastic runs over the configured seeds.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Reference certificate for the distance columns.
        #[arg(short, long)]
        reference: Option<PathBuf>,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Oracle, step-size and schedule diagnostics.
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::regression(),
    };
    if let Some(seed) = common.seed {
        cfg.dataset.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_dataset(cfg: &ExperimentConfig, common: &Common) -> Result<Dataset> {
    match &common.data {
        Some(dir) => Dataset::read(&dir.join("dataset.csv"), &dir.join("dataset.meta.json")),
        None => cfg.generate_dataset(),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::InitConfig { out } => {
            ensure_parent(&out)?;
            let text = ExperimentConfig::regression().to_toml()?;
            std::fs::write(&out, text).map_err(|e| Error::Io { path: out.clone(), source: e })?;
            println!("wrote {}", out.display());
        }
        Command::GenData { common, out } => {
            let cfg = load_config(&common)?;
            let (csv, meta) = gen_data(&cfg, &out)?;
            println!("wrote {} and {}", csv.display(), meta.display());
        }
        Command::Reference { common, out } => {
            let cfg = load_config(&common)?;
            let data = load_dataset(&cfg, &common)?;
            let problem = cfg.assemble(&data)?;
            let result = compute_reference(&cfg, &problem)?;
            ensure_parent(&out)?;
            result.certificate.write_json(&out, reference_info(&cfg, &problem, &result))?;
            let c = &result.certificate;
            println!(
                "reference: {} iterations, fp residual {:.3e}, primal residual {:.3e}, objective {:.6}",
                result.diagnostics.iterations,
                c.fp_residual,
                c.primal_residual,
                problem.objective(&c.w)
            );
            println!("wrote {}", out.display());
        }
        Command::Solve { common, reference, out } => {
            let cfg = load_config(&common)?;
            let data = load_dataset(&cfg, &common)?;
            let problem = cfg.assemble(&data)?;
            let reference = match reference {
                Some(path) if path.exists() => Some(SolutionCertificate::read_json(&path)?.0),
                Some(path) => {
                    eprintln!("warning: reference {} not found; distance columns omitted", path.display());
                    None
                }
                None => {
                    eprintln!("warning: no reference given; distance columns omitted");
                    None
                }
            };
            let sweep = solve(&cfg, &problem, reference.as_ref())?;
            let written = write_sweep(&cfg, &sweep, &out)?;
            let s = &sweep.summary;
            println!("final objective median {:.6e}", s.objective.median);
            if let Some(d) = &s.distance {
                println!("final distance median {:.3e} (q1 {:.3e}, q3 {:.3e})", d.median, d.q1, d.q3);
            }
            for c in &s.checkpoints {
                println!("  n = {:>6}: median distance {:.3e}", c.n, c.median_distance);
            }
            println!("wrote {} files to {}", written.len(), out.display());
            if let Some(r) = sweep.runs.iter().find(|r| r.output.diagnostics.stop_reason == StopReason::Diverged) {
                return Err(Error::Diverged {
                    iteration: r.output.diagnostics.iterations,
                    objective: problem.objective(&r.output.certificate.w),
                });
            }
        }
        Command::Audit { common, draws } => {
            let cfg = load_config(&common)?;
            let data = load_dataset(&cfg, &common)?;
            let problem = cfg.assemble(&data)?;
            print!("{}", audit(&cfg, &problem, draws)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
