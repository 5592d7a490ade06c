//! Vanishing-regularization chain: runs with decreasing (eps, delta, mu)
//! approach the unregularized solution.

use nlpme::solver::{continuation_limit, gaussian};
use nlpme::{make_grid, ModelParams};

fn main() -> nlpme::Result<()> {
    let g = make_grid(10.0, 512)?;
    let u0 = gaussian(&g, 1.0, 0.5, 0.0);
    let p = ModelParams::new(2.0, 0.5)?;
    let schedule = [
        (0.1, 0.01, 0.01),
        (0.05, 0.005, 0.005),
        (0.025, 0.0025, 0.0025),
    ];
    let rep = continuation_limit(&u0, &p, &schedule, 1.0, 1.0)?;
    for (i, d) in rep.distances.iter().enumerate() {
        println!("L2 distance between levels {i} and {}: {d:.4e}", i + 1);
    }
    println!("decreasing: {}", rep.decreasing);
    println!(
        "max mass drift: {:.2e}",
        rep.mass_drifts.iter().copied().fold(0.0, f64::max)
    );
    Ok(())
}
