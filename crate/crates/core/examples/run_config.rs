//! Runs any experiment configuration and prints its checks.
//!
//! `cargo run --release --example run_config -- configs/barrier.toml`

use std::path::Path;

use nlpme::config::parse_config_at;
use nlpme::experiments::run_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "configs/barrier.toml".into());
    let path = Path::new(&path);
    let mut cfg = parse_config_at(&std::fs::read_to_string(path)?, path.parent())?;
    if let Ok(dir) = std::env::var("NLPME_OUTPUT") {
        cfg.output_dir = dir.into();
    }
    let manifest = run_experiment(&cfg)?;
    for c in &manifest.checks {
        println!(
            "{} {} ({:e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value
        );
    }
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}
