use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hcbo::problems::{by_name, fail_rate_monte_carlo};
use hcbo::runner::{plot_data, run_bo, run_campaign, summarize, write_csv, CampaignConfig, RunConfig};
use hcbo::strategy::Strategy;

#[derive(Parser)]
#[command(name = "hcbo", version, about = "Bayesian optimization benchmarks with hidden constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated optimizations of one problem with one strategy.
    Run {
        #[arg(long)]
        problem: String,
        /// e.g. rejection, replace:closest, predict:mdgp:pov=0.25
        #[arg(long, default_value = "predict:mdgp:pov=0.25")]
        strategy: Strategy,
        #[arg(long, default_value_t = 50)]
        n_infill: usize,
        #[arg(long, default_value_t = 1)]
        n_batch: usize,
        /// Fixed DoE size instead of the one derived from the problem size.
        #[arg(long)]
        n_doe: Option<usize>,
        #[arg(long, default_value_t = 16)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a problem-by-strategy campaign described by a key = value file.
    Campaign {
        #[arg(long)]
        config: PathBuf,
    },
    /// Aggregate run logs into a per-problem, per-strategy CSV table.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a problem's fail rate by hierarchical sampling.
    Failrate {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Export median and interquartile convergence curves as CSV.
    Plotdata {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { problem, strategy, n_infill, n_batch, n_doe, reps, seed, out } => {
            let mut cfg = RunConfig::new(problem, strategy);
            cfg.n_infill = n_infill;
            cfg.n_batch = n_batch;
            cfg.n_doe = n_doe;
            cfg.repetitions = reps;
            cfg.seed = seed;
            cfg.out_dir = Some(out.clone());
            let runs = run_bo(&cfg)?;
            for (rep, records) in runs.iter().enumerate() {
                let last = records.last().context("empty run")?;
                println!("rep {rep}: {} evaluations, delta HV {:.6}", last.n_evaluations, last.delta_hv);
            }
        }
        Command::Campaign { config } => {
            let cfg = CampaignConfig::from_file(&config).with_context(|| format!("reading {}", config.display()))?;
            let rows = run_campaign(&cfg)?;
            println!("{} summary rows written", rows.len());
        }
        Command::Summarize { input, out } => {
            let rows = summarize(&input)?;
            write_csv(&out, &rows)?;
            println!("{} rows written to {}", rows.len(), out.display());
        }
        Command::Failrate { problem, n, seed } => {
            let p = by_name(&problem)?;
            let fr = fail_rate_monte_carlo(&p, n, seed)?;
            println!("{}: fail rate {:.4} over {n} samples (listed {:.2})", p.name(), fr, p.metadata().fail_rate);
        }
        Command::Plotdata { input, out } => {
            let points = plot_data(&input)?;
            write_csv(&out, &points)?;
            println!("{} rows written to {}", points.len(), out.display());
        }
    }
    Ok(())
}
