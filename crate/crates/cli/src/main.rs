use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use reachkit::run::{exit_code, run, RunConfig, Task};

/// Reachable sets of linear systems and reachability-constrained design.
#[derive(Parser, Debug)]
#[command(name = "reachkit", version)]
struct Cli {
    /// boundary | gramian | lp-sample | inner-approx | volume | optimize
    task: String,
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `output_dir` from the config, else `out`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = cli
        .task
        .parse::<Task>()
        .and_then(|task| Ok((task, RunConfig::from_path(&cli.config)?)))
        .and_then(|(task, cfg)| run(task, &cfg, cli.out.as_deref(), cli.seed));
    match result {
        Ok(manifest) => {
            for f in &manifest.files {
                println!("{}  {}", f.sha256, f.name);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("reachkit: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
