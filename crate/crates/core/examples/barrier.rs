//! Infinite-propagation witness for m = 1.5 through the integrated model:
//! a barrier subsolution is searched, verified, and shown to force v > 0
//! beyond the initial support.

use nlpme::config::parse_config;
use nlpme::experiments::run_experiment;

fn main() -> nlpme::Result<()> {
    let mut cfg = parse_config(include_str!("../../../configs/barrier.toml"))?;
    cfg.output_dir = std::env::var("NLPME_OUTPUT")
        .map(Into::into)
        .unwrap_or_else(|_| std::env::temp_dir().join("nlpme_barrier"));
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
