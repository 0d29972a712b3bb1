use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use landau_cli::{
    cmd_audit, cmd_report, cmd_simulate, AuditSelector, ReportParams, RunConfig, EXIT_AUDIT_FAILED,
    EXIT_UNSTABLE, THREADS_ENV,
};

#[derive(Parser)]
#[command(name = "landau", version, about = "Landau collision operator laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the homogeneous equation from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output root; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the criterion report of a distribution snapshot as JSON.
    Report {
        #[arg(long)]
        snapshot: PathBuf,
        /// Take gamma, delta, s and rho from this config instead of the header.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        /// Also write `report.json` into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run audits on the configured initial state.
    Audit {
        #[arg(long)]
        config: PathBuf,
        /// One of coeff-bounds, divergence-identity, form-equivalence, moser,
        /// calc, scaling, barrier, interpolation, all.
        #[arg(long = "audit")]
        selector: AuditSelector,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn init_threads() -> Result<()> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .parse()
            .with_context(|| format!("{THREADS_ENV}={raw} is not a thread count"))?;
        if !landau_core::par::init_threads(n) {
            log::warn!("{THREADS_ENV} ignored: thread pool unavailable");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_threads()?;
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let root = out.unwrap_or_else(|| cfg.output.dir.clone());
            let outcome = cmd_simulate(&cfg, &root)?;
            println!("{}", outcome.run_dir.display());
            match &outcome.failure {
                None => Ok(ExitCode::SUCCESS),
                Some(f) => {
                    eprintln!(
                        "unstable step at t = {} (step {}): {}; partial outputs kept in {}",
                        f.time,
                        f.step,
                        f.reason,
                        outcome.run_dir.display()
                    );
                    Ok(ExitCode::from(EXIT_UNSTABLE))
                }
            }
        }
        Command::Report {
            snapshot,
            config,
            gamma,
            out,
        } => {
            let mut params = ReportParams::default();
            if let Some(path) = config {
                let cfg = RunConfig::load(&path)?;
                params = ReportParams {
                    gamma: Some(cfg.model.gamma),
                    delta: cfg.model.delta,
                    s: cfg.model.s,
                    rho: cfg.barrier.rho,
                };
            }
            if gamma.is_some() {
                params.gamma = gamma;
            }
            let report = cmd_report(&snapshot, &params)?;
            let text = serde_json::to_string_pretty(&report)?;
            println!("{text}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                landau_cli::output::write_json(&dir.join("report.json"), &report)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit {
            config,
            selector,
            out,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let root = out.unwrap_or_else(|| cfg.output.dir.clone());
            let outcome = cmd_audit(&cfg, selector, &root)?;
            println!("{}", outcome.dir.display());
            for f in &outcome.document.findings {
                eprintln!("{:<28} {:?}", f.audit, f.verdict);
            }
            Ok(if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_AUDIT_FAILED)
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
