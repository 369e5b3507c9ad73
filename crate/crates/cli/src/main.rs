use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod run;

#[derive(Parser)]
#[command(name = "dagsched", version, about = "Simulate cache-aware DAG scheduling on a GPU cluster")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a single configuration and write result directories.
    Run(RunArgs),
    /// Print medians and mean latencies of result directories side by side.
    Compare {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Eviction {
    Fifo,
    Lookahead,
}

#[derive(Args)]
struct RunArgs {
    /// One of low_load, high_load, vary_load, ablation, staleness_sweep, scalability, trace_replay.
    #[arg(long)]
    preset: Option<String>,
    /// key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    scheduler: Option<dagsched_core::SchedulerKind>,
    #[arg(long)]
    workers: Option<usize>,
    /// Requests per second.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seeds; each run is repeated per seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Seconds between finish-time publications.
    #[arg(long)]
    sst_load_interval: Option<f64>,
    /// Seconds between cache-content publications.
    #[arg(long)]
    sst_cache_interval: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    no_dynamic_adjustment: bool,
    #[arg(long)]
    no_model_locality: bool,
    #[arg(long, value_enum)]
    eviction: Option<Eviction>,
    /// Arrival trace, CSV with header `arrival_s,dfg_id`.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Multiplier applied to trace timestamps.
    #[arg(long)]
    rescale: Option<f64>,
}

fn parse_kind(s: &str) -> Result<dagsched_core::SchedulerKind, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run::run(args),
        Command::Compare { dirs } => run::compare(&dirs).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
