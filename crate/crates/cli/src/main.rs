use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use creodrift::pipeline::{self, Experiment, RunOptions};

/// Runs one creodrift experiment as described by a TOML manifest.
#[derive(Parser, Debug)]
#[command(name = "creodrift", version)]
struct Cli {
    /// user-clusters | subreddit-divergence | isotropy-audit | user-drift | simulate
    experiment: String,

    #[arg(long)]
    manifest: PathBuf,

    /// Output directory; overrides the manifest's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Global seed; overrides the manifest's `seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Run a single stage against the artifacts of an earlier run.
    #[arg(long)]
    stage: Option<String>,
}

fn run(cli: Cli) -> creodrift::Result<()> {
    let experiment: Experiment = cli.experiment.parse()?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(creodrift::Error::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| creodrift::Error::InvalidInput(e.to_string()))?;
    }
    let opts = RunOptions { out: cli.out, seed: cli.seed, stage: cli.stage };
    let record = pipeline::run(experiment, &cli.manifest, &opts)?;
    log::info!("{experiment}: {} stage(s) done, digest {}", record.stages.len(), record.content_digest);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
