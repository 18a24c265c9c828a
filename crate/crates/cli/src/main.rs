//! `oomd`: run, sweep and benchmark online model selection experiments.

mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use oomd_core::baselines::Variant;
use oomd_core::env::{DriftConfig, PoolSchedule, Scenario, Stream};
use oomd_core::harness::{self, RunConfig};

use config::{parse_list, ConfigFile};

#[derive(Parser, Debug)]
#[command(name = "oomd", version, about)]
struct Cli {
    /// Flat key = value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run seeded trials and write one CSV row per round plus summaries.
    Run(RunArgs),
    /// Final cumulative loss for several grid sizes.
    SweepM(SweepArgs),
    /// Per-round time as the number of experts grows.
    BenchScaling(ScalingArgs),
    /// Run variants on a stream written by `export-stream`.
    Replay(ReplayArgs),
    /// Write a generated stream in the text exchange format.
    ExportStream(ExportArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated variant names.
    #[arg(long)]
    variants: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    experts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    drift_period: Option<usize>,
    #[arg(long)]
    drift_rate: Option<f64>,
    #[arg(long)]
    corruption_prob: Option<f64>,
    /// Half-width of uniform loss noise (off by default).
    #[arg(long)]
    noise: Option<f64>,
    /// Worker threads; `OMS_THREADS` caps this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Grid size M.
    #[arg(long)]
    m_override: Option<usize>,
    #[arg(long)]
    dynamic_pool: bool,
    #[arg(long)]
    chunk_len: Option<usize>,
    #[arg(long)]
    max_pool: Option<usize>,
    /// Record per-round wall time in `elapsed_us`.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated grid sizes.
    #[arg(long)]
    m_values: Option<String>,
    /// Comma-separated scenarios; defaults to the three drift scenarios.
    #[arg(long)]
    scenarios: Option<String>,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated, increasing expert counts.
    #[arg(long)]
    k_values: Option<String>,
    /// Grid size held fixed.
    #[arg(long)]
    m: Option<usize>,
    /// Leading rounds excluded from timing.
    #[arg(long)]
    warmup: Option<usize>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[command(flatten)]
    common: Common,
    /// Stream file to replay.
    #[arg(long)]
    stream: Option<PathBuf>,
    #[arg(long)]
    m_override: Option<usize>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    common: Common,
}

fn base_config(c: &Common, file: &ConfigFile) -> Result<RunConfig> {
    let d = RunConfig::default();
    let scenario: Scenario = file.resolve(
        c.scenario.as_deref().map(str::parse).transpose()?,
        "scenario",
        d.scenario,
    )?;
    let variants = match file.resolve_opt::<String>(c.variants.clone(), "variants")? {
        Some(raw) => parse_list::<Variant>(&raw)?,
        None => d.variants.clone(),
    };
    Ok(RunConfig {
        scenario,
        variants,
        trials: file.resolve(c.trials, "trials", d.trials)?,
        horizon: file.resolve(c.horizon, "horizon", d.horizon)?,
        experts: file.resolve(c.experts, "experts", d.experts)?,
        seed_base: file.resolve(c.seed, "seed", d.seed_base)?,
        out_path: file.resolve_opt(c.out.clone(), "out")?,
        drift_period: file.resolve(c.drift_period, "drift-period", d.drift_period)?,
        drift_rate: file.resolve(c.drift_rate, "drift-rate", d.drift_rate)?,
        corruption_prob: file.resolve(c.corruption_prob, "corruption-prob", d.corruption_prob)?,
        noise: file.resolve(c.noise, "noise", d.noise)?,
        threads: file.resolve_opt(c.threads, "threads")?,
        ..d
    })
}

fn report(out: &harness::RunOutput) {
    for s in &out.summaries {
        println!(
            "{:<22} {:<12} trials={:<4} cum_loss={:.4} ± {:.4} regret={:.4}",
            s.variant, s.scenario, s.trial, s.cum_loss, s.inst_loss, s.regret
        );
    }
}

fn execute(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Run(a) => {
            let mut cfg = base_config(&a.common, &file)?;
            cfg.m_override = file.resolve_opt(a.m_override, "m-override")?;
            cfg.dynamic_pool = file.resolve_bool(a.dynamic_pool, "dynamic-pool")?;
            cfg.timing = file.resolve_bool(a.timing, "timing")?;
            let pool = PoolSchedule::default();
            cfg.pool = PoolSchedule {
                chunk_len: file.resolve(a.chunk_len, "chunk-len", pool.chunk_len)?,
                max_pool: file.resolve(a.max_pool, "max-pool", pool.max_pool)?,
            };
            let out = harness::run(&cfg)?;
            report(&out);
        }
        Command::SweepM(a) => {
            let mut cfg = base_config(&a.common, &file)?;
            if a.common.variants.is_none() && file.resolve_opt::<String>(None, "variants")?.is_none() {
                cfg.variants = vec![Variant::Proposed];
            }
            let m_values = match file.resolve_opt::<String>(a.m_values, "m-values")? {
                Some(raw) => parse_list::<usize>(&raw)?,
                None => vec![8, 16, 24, 32, 48, 64],
            };
            let scenarios = match file.resolve_opt::<String>(a.scenarios, "scenarios")? {
                Some(raw) => parse_list::<Scenario>(&raw)?,
                None => Scenario::DRIFT.to_vec(),
            };
            for row in harness::sensitivity_sweep(&cfg, &scenarios, &m_values)? {
                println!(
                    "{:<12} {:<22} M={:<3} cum_loss={:.4} sd={:.4}",
                    row.scenario, row.variant, row.m, row.mean_cum_loss, row.stddev_cum_loss
                );
            }
        }
        Command::BenchScaling(a) => {
            let mut cfg = base_config(&a.common, &file)?;
            if a.common.trials.is_none() && file.resolve_opt::<usize>(None, "trials")?.is_none() {
                cfg.trials = 1;
            }
            let ks = match file.resolve_opt::<String>(a.k_values, "k-values")? {
                Some(raw) => parse_list::<usize>(&raw)?,
                None => vec![64, 128, 256, 512],
            };
            let m = file.resolve(a.m, "m", 18)?;
            let warmup = file.resolve(a.warmup, "warmup", 20)?;
            for row in harness::scaling_bench(&cfg, &ks, m, warmup)? {
                println!(
                    "{:<22} K={:<5} M={:<3} median={:.1}us mean={:.1}us",
                    row.variant, row.experts, row.m, row.median_us, row.mean_us
                );
            }
        }
        Command::Replay(a) => {
            let mut cfg = base_config(&a.common, &file)?;
            cfg.m_override = file.resolve_opt(a.m_override, "m-override")?;
            let path: PathBuf = file
                .resolve_opt(a.stream, "stream")?
                .context("replay needs --stream")?;
            let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            let stream = Stream::import(BufReader::new(f))?;
            let out = harness::replay(&cfg, &stream)?;
            report(&out);
        }
        Command::ExportStream(a) => {
            let cfg = base_config(&a.common, &file)?;
            let drift = DriftConfig {
                seed: cfg.seed_base,
                ..cfg.drift(0)
            };
            match &cfg.out_path {
                Some(p) => {
                    let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
                    harness::export_stream(&drift, BufWriter::new(f))?;
                }
                None => harness::export_stream(&drift, std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
