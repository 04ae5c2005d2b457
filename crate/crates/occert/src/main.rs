use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use occert::pipeline::{CertifyConfig, MultiplierSource, Order, ProblemSource};
use occert::tolerances::Tolerances;
use occert::{files, registry, report, selftest};

/// Certify first- and second-order optimality conditions for control-affine
/// problems with a scalar control and a scalar state constraint.
#[derive(Parser)]
#[command(name = "occert", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the certification pipeline on a candidate trajectory.
    Certify {
        /// Builtin instance name (REG1 or CB1).
        #[arg(long, conflicts_with = "problem")]
        registry: Option<String>,
        /// Problem file (TOML).
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Trajectory file (TOML); defaults to the registry trajectory.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Multiplier file (TOML).
        #[arg(long, conflicts_with = "fit_multiplier")]
        multiplier: Option<PathBuf>,
        /// Fit the multiplier from the stationarity system.
        #[arg(long)]
        fit_multiplier: bool,
        /// Certification depth: first, second or sufficient.
        #[arg(long, default_value = "second")]
        order: String,
        /// Interval count when re-gridding a registry trajectory.
        #[arg(long)]
        grid: Option<usize>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Dump per-node arrays as CSV into this directory.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        /// Tolerance overrides, e.g. --tol tol_g=1e-6 (repeatable).
        #[arg(long = "tol", value_name = "KEY=VALUE")]
        tol: Vec<String>,
        /// Include the cone matrices, basis and witness in the report.
        #[arg(long)]
        emit_cone: bool,
    },
    /// Run the deterministic property suites.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON report here in addition to the summary lines.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Emit registry problem/trajectory files.
    Dump {
        #[arg(long)]
        registry: String,
        /// Output directory.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> occert::Result<ExitCode> {
    match cli.command {
        Command::Certify {
            registry,
            problem,
            trajectory,
            multiplier,
            fit_multiplier: _,
            order,
            grid,
            report: report_path,
            csv_dir,
            tol,
            emit_cone,
        } => {
            let mut tolerances = Tolerances::from_env();
            for kv in &tol {
                let (key, value) = kv
                    .split_once('=')
                    .ok_or_else(|| occert::Error::InvalidProblem(format!("bad --tol `{kv}`")))?;
                let value: f64 = value
                    .parse()
                    .map_err(|_| occert::Error::InvalidProblem(format!("bad --tol value in `{kv}`")))?;
                tolerances
                    .apply_override(key, value)
                    .map_err(occert::Error::InvalidProblem)?;
            }
            let source = match (registry, problem) {
                (Some(name), None) => ProblemSource::Registry(name),
                (None, Some(path)) => ProblemSource::File(path),
                _ => {
                    return Err(occert::Error::InvalidProblem(
                        "pass exactly one of --registry or --problem".into(),
                    ))
                }
            };
            let order = match order.as_str() {
                "first" => Order::First,
                "second" => Order::Second,
                "sufficient" => Order::Sufficient,
                other => {
                    return Err(occert::Error::InvalidProblem(format!(
                        "unknown order `{other}` (first|second|sufficient)"
                    )))
                }
            };
            let cfg = CertifyConfig {
                problem: source,
                trajectory,
                multiplier: match multiplier {
                    Some(path) => MultiplierSource::File(path),
                    None => MultiplierSource::Fit,
                },
                order,
                grid,
                tolerances,
                emit_cone,
            };
            let out = occert::pipeline::run_certify(&cfg)?;
            for (name, verdict) in &out.report.verdicts {
                println!("{name}: {verdict:?}");
            }
            let json = out.report.to_json();
            match report_path {
                Some(path) => files::save(&path, &json)?,
                None => print!("{json}"),
            }
            if let Some(dir) = csv_dir {
                std::fs::create_dir_all(&dir).map_err(|e| occert::Error::Io {
                    path: dir.display().to_string(),
                    source: e,
                })?;
                if let Some(lam) = &out.multiplier {
                    report::write_csv(&dir.join("nodes.csv"), &out.spec, &out.trajectory, lam)?;
                    report::write_coefficients_csv(
                        &dir.join("coefficients.csv"),
                        &out.spec,
                        &out.trajectory,
                        lam,
                    )?;
                }
            }
            Ok(ExitCode::from(out.report.exit_code as u8))
        }
        Command::Selftest { seed, report: report_path } => {
            let rep = selftest::run(seed);
            for p in &rep.properties {
                println!(
                    "{}: worst {:.3e} (threshold {:.3e}) {}",
                    p.name,
                    p.worst_error,
                    p.threshold,
                    if p.pass { "PASS" } else { "FAIL" }
                );
            }
            if let Some(path) = report_path {
                files::save(&path, &rep.to_json())?;
            }
            Ok(ExitCode::from(if rep.pass { 0 } else { 1 }))
        }
        Command::Dump { registry: name, dir, grid } => {
            let (spec, traj, _) = registry::registry_get_on(&name, grid.unwrap_or(registry::DEFAULT_GRID))?;
            std::fs::create_dir_all(&dir).map_err(|e| occert::Error::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
            let ppath = dir.join(format!("{}.problem.toml", name.to_lowercase()));
            let tpath = dir.join(format!("{}.trajectory.toml", name.to_lowercase()));
            files::save(&ppath, &files::problem_to_string(&spec))?;
            files::save(&tpath, &files::trajectory_to_string(&traj))?;
            println!("wrote {}", ppath.display());
            println!("wrote {}", tpath.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
