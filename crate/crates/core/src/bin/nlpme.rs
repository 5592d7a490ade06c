use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nlpme::config::{parse_config_at, Experiment};
use nlpme::experiments::run_experiment;

/// Batch driver for the nonlocal-pressure porous medium experiments.
#[derive(Debug, Parser)]
#[command(name = "nlpme", version)]
struct Cli {
    /// One of: simulate, integrated, continuation, propagation, smoothing,
    /// asymptotics, transform-check, barrier-check.
    experiment: String,
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` of the configuration.
    #[arg(long, env = "NLPME_OUTPUT")]
    output: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<bool, String> {
    let requested = Experiment::from_name(&cli.experiment).ok_or_else(|| {
        format!(
            "unknown experiment `{}`; valid names: {}",
            cli.experiment,
            Experiment::valid_names()
        )
    })?;
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| format!("{}: {e}", cli.config.display()))?;
    let mut cfg = parse_config_at(&text, cli.config.parent())
        .map_err(|e| format!("{}: {e}", cli.config.display()))?;
    if cfg.experiment != requested {
        return Err(format!(
            "config describes experiment `{}`, not `{}`",
            cfg.experiment.name(),
            requested.name()
        ));
    }
    if let Some(dir) = cli.output {
        cfg.output_dir = dir;
    }
    let manifest = run_experiment(&cfg).map_err(|e| e.to_string())?;
    for c in &manifest.checks {
        println!(
            "{} {} (value {:e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value
        );
    }
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(manifest.success())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
