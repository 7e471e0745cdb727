use std::path::PathBuf;
use std::process::ExitCode;

use aego::testfns;
use aego_bench::runner::{self, RunConfig};
use aego_bench::Campaign;
use anyhow::Context;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Seeded benchmark campaigns for batch EGO strategies"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run (or resume) a campaign.
    Run {
        #[arg(long)]
        campaign: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replicates run concurrently.
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// Base seed, overriding the campaign file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute summary.csv from the raw records in a directory.
    Summarize { dir: PathBuf },
    /// Print the catalog with domains, optima and table sizes.
    ListFunctions,
}

fn main() -> anyhow::Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Cmd::Run {
            campaign,
            out,
            parallelism,
            seed,
        } => {
            let c = Campaign::load(&campaign).with_context(|| format!("loading {}", campaign.display()))?;
            let cfg = RunConfig {
                out_dir: out.clone(),
                parallelism,
                seed,
            };
            let outcome = runner::run_campaign(&c, &cfg)?;
            print_rows(&outcome.summary);
            let failed = outcome.failed();
            eprintln!(
                "{} replicates ({} resumed, {} failed); results in {}",
                outcome.replicates.len(),
                outcome.resumed,
                failed,
                out.display()
            );
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Cmd::Summarize { dir } => {
            let rows = runner::summarize_dir(&dir)?;
            print_rows(&rows);
            Ok(if rows.iter().all(|r| r.failed == 0) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Cmd::ListFunctions => {
            println!(
                "{:<10} {:>3} {:>14} {:>5} {:>5}  domain",
                "name", "dim", "minimum", "n", "m"
            );
            for name in testfns::CATALOG.iter().copied().chain(["ackley2"]) {
                let f = testfns::lookup(name)?;
                let d = &f.domain;
                let bounds: Vec<String> = (0..d.dim())
                    .map(|k| format!("[{}, {}]", d.lower()[k], d.upper()[k]))
                    .collect();
                let domain = if bounds.iter().all(|b| *b == bounds[0]) {
                    format!("{}^{}", bounds[0], d.dim())
                } else {
                    bounds.join(" x ")
                };
                println!(
                    "{:<10} {:>3} {:>14} {:>5} {:>5}  {}",
                    f.name,
                    f.dim(),
                    f.minimum,
                    f.initial_size,
                    f.pool_size,
                    domain
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_rows(rows: &[aego_bench::SummaryRow]) {
    println!(
        "{:<24} {:>4} {:>5} {:>4} {:>8} {:>7} {:>7} {:>12} {:>10}",
        "spec", "q", "m", "ok", "mean", "sd", "median", "best", "select s"
    );
    for r in rows {
        let stages = r.stages.unwrap_or_default();
        println!(
            "{:<24} {:>4} {:>5} {:>4} {:>8.2} {:>7.2} {:>7.1} {:>12.6} {:>10.3}",
            r.spec_id,
            r.q,
            r.pool_size.map(|m| m.to_string()).unwrap_or_else(|| "-".into()),
            r.replicates,
            stages.mean,
            stages.sd,
            r.stages_median.unwrap_or(f64::NAN),
            r.best.map_or(f64::NAN, |b| b.mean),
            r.selection_secs.map_or(f64::NAN, |s| s.mean)
        );
    }
}
