//! Configuration-driven entry point: runs flows, verifies the quantitative
//! estimates on their artifacts, sweeps discretization parameters, and lists
//! the functional catalog.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 config error, 3 solver
//! failure (with partial artifacts).

mod artifacts;
mod config;
mod errors;
mod run;
mod sweep;
mod verify;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use errors::CliError;

#[derive(Parser)]
#[command(
    name = "gradflow",
    about = "Gradient flows by minimizing movements, with estimate verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to the JSON run configuration (optional for verify: the
    /// artifact manifest is the authoritative record of a run)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's out_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for all randomized probes
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured flow and write trajectory artifacts
    Run(ConfigArgs),
    /// Verify the estimates on stored run artifacts
    Verify {
        #[command(flatten)]
        common: ConfigArgs,
        /// Comma-separated list of checks to run (default: all)
        #[arg(long)]
        checks: Option<String>,
    },
    /// Convergence sweep over time steps or grid sizes
    Sweep {
        #[command(flatten)]
        common: ConfigArgs,
        /// Comma-separated list of time steps
        #[arg(long)]
        taus: Option<String>,
        /// Comma-separated list of quantile grid sizes
        #[arg(long)]
        m_list: Option<String>,
    },
    /// List the functional catalog and initial-datum kinds
    ListCatalog,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify { common, checks } => cmd_verify(common, checks),
        Command::Sweep {
            common,
            taus,
            m_list,
        } => cmd_sweep(common, taus, m_list),
        Command::ListCatalog => cmd_list_catalog(),
    };
    ExitCode::from(code)
}

fn load_config(args: &ConfigArgs) -> Result<(RunConfig, PathBuf), CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = RunConfig::from_json(&text).map_err(CliError::config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory (set out_dir or --out)".into()))?;
    config.out_dir = Some(out_dir.clone());
    Ok((config, out_dir))
}

fn cmd_run(args: ConfigArgs) -> u8 {
    let (config, out_dir) = match load_config(&args) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    match run::execute(&config, &out_dir) {
        Ok(output) => {
            println!(
                "run complete: {} steps on the {} carrier (lambda = {}); artifacts in {}",
                output.manifest.n_steps,
                output.manifest.carrier,
                output.manifest.lambda,
                out_dir.display()
            );
            0
        }
        Err(e) => fail(e),
    }
}

fn cmd_verify(args: ConfigArgs, checks: Option<String>) -> u8 {
    // the config file is accepted for interface symmetry; the manifest in the
    // artifact directory is the authoritative record of the run
    let out_dir = match &args.out {
        Some(dir) => dir.clone(),
        None => match load_config(&args) {
            Ok((_, dir)) => dir,
            Err(e) => return fail(e),
        },
    };
    match verify::execute(&out_dir, checks.as_deref(), args.seed) {
        Ok(outcome) => {
            let (passed, failed, skipped) = outcome.report.counts();
            for r in &outcome.report.records {
                let status = if let Some(reason) = &r.skipped {
                    format!("SKIPPED ({reason})")
                } else if r.passed {
                    "pass".to_string()
                } else {
                    format!(
                        "FAIL (violation {:.3e} > {:.3e}{})",
                        r.max_violation,
                        r.tolerance,
                        r.worst_witness
                            .as_ref()
                            .map(|w| format!(" at {w}"))
                            .unwrap_or_default()
                    )
                };
                println!("{:32} {status}", r.name);
            }
            println!("verified: {passed} passed, {failed} failed, {skipped} skipped");
            if outcome.report.all_passed() {
                0
            } else {
                1
            }
        }
        Err(e) => fail(e),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| CliError::Config(format!("bad list entry '{s}': {e}")))
        })
        .collect()
}

fn cmd_sweep(args: ConfigArgs, taus: Option<String>, m_list: Option<String>) -> u8 {
    let (config, out_dir) = match load_config(&args) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    let taus = match taus.as_deref().map(parse_list::<f64>).transpose() {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    let m_list = match m_list.as_deref().map(parse_list::<usize>).transpose() {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    match sweep::execute(&config, &out_dir, taus, m_list) {
        Ok(outcome) => {
            println!(
                "sweep complete: fitted log-log slope {:.4} over {} runs; table in {}",
                outcome.fitted_slope,
                outcome.errors.len(),
                out_dir.join(sweep::SWEEP_CSV).display()
            );
            0
        }
        Err(e) => fail(e),
    }
}

fn cmd_list_catalog() -> u8 {
    println!("euclidean catalog functionals:");
    for (name, description) in gradflow::euclidean::CatalogFunctional::names() {
        println!("  {name:16} {description}");
    }
    println!();
    println!("wasserstein1d energy components (combine with weights alpha1..alpha3):");
    println!("  internal:  entropy (s log s) | power {{ m }} (s^m/(m-1), m > 1)");
    println!("  potential: zero | quadratic {{ a }} (a x^2/2, modulus a)");
    println!("  kernel:    zero | quadratic {{ a }} (a x^2/2, modulus min(a, 0))");
    println!();
    println!("initial data:");
    println!("  vector {{ coords }}          (euclidean)");
    println!("  gaussian {{ mean, var }}     (wasserstein1d)");
    println!("  uniform {{ a, b }}           (wasserstein1d)");
    println!("  barenblatt {{ t0 }}          (wasserstein1d, quadratic diffusion profile)");
    println!("  quantiles {{ values }}       (wasserstein1d)");
    0
}

fn fail(err: CliError) -> u8 {
    eprintln!("{err}");
    err.exit_code() as u8
}
