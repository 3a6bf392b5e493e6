use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::Parser;
use extremal_core::harness::{
    run_experiment_with, write_outputs, DebugOutputs, Experiment, ExperimentConfig, SEED_ENV,
};

/// Run a named experiment and write its result record.
#[derive(Debug, Parser)]
#[command(name = "extremal", version)]
struct Args {
    /// One of: marginal-gumbel, hitting-law, self-affinity, stationarity,
    /// intersection-scaling, range-stats, centering-phenomenon,
    /// process-convergence, mtg4-diagnostics.
    experiment: String,
    /// JSON configuration; experiment defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config and the EXTREMAL_SEED variable).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Exit with status 2 when any acceptance check fails.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    csv_out: Option<PathBuf>,
    #[arg(long)]
    json_out: Option<PathBuf>,
    /// Write the first simulated path as time,value CSV (process-convergence).
    #[arg(long)]
    path_csv: Option<PathBuf>,
    /// Write one sampled visit set, one time per line.
    #[arg(long)]
    visits_out: Option<PathBuf>,
}

enum Outcome {
    Pass,
    CheckFailed,
}

fn build_config(args: &Args) -> anyhow::Result<ExperimentConfig> {
    let kind: Experiment = args.experiment.parse()?;
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::for_experiment(kind),
    };
    if cfg.experiment.is_empty() {
        cfg.experiment = kind.name().to_string();
    } else if cfg.kind()? != kind {
        anyhow::bail!("config is for `{}` but `{}` was requested", cfg.experiment, kind);
    }
    if let Ok(s) = std::env::var(SEED_ENV) {
        cfg.seed = s.trim().parse().with_context(|| format!("{SEED_ENV}={s:?} is not a u64"))?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = Some(w);
    }
    cfg.check |= args.check;
    if args.csv_out.is_some() {
        cfg.csv_out = args.csv_out.clone();
    }
    if args.json_out.is_some() {
        cfg.json_out = args.json_out.clone();
    }
    Ok(cfg)
}

fn run(args: &Args) -> anyhow::Result<Outcome> {
    let cfg = build_config(args)?;
    let debug = DebugOutputs { visits_out: args.visits_out.clone(), path_csv: args.path_csv.clone() };
    let out = run_experiment_with(&cfg, &debug)?;
    write_outputs(&out)?;
    let rec = &out.record;
    if rec.config.json_out.is_none() {
        println!("{}", serde_json::to_string_pretty(rec)?);
    }
    for c in &rec.checks {
        eprintln!(
            "{} {}: {} {} {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.relation,
            c.threshold
        );
    }
    eprintln!("{}: {} ({:.2}s)", rec.experiment, if rec.pass { "pass" } else { "fail" }, rec.wall_clock_secs);
    Ok(if rec.config.check && !rec.pass { Outcome::CheckFailed } else { Outcome::Pass })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&args) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
