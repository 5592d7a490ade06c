//! Mass-preserving rescaled family and self-similar profile extraction.

use nlpme::config::InitialData;
use nlpme::diagnostics::asymptotic_convergence;
use nlpme::experiments::initial_density;
use nlpme::{make_grid, ModelParams};

fn main() -> nlpme::Result<()> {
    let g = make_grid(8.0, 2048)?;
    let data = InitialData::TwoBump {
        masses: [0.42, 0.36],
        centers: [-0.4, 0.5],
        half_widths: [0.35, 0.25],
    };
    let u0 = initial_density(&data, &g)?;
    for m in [1.5, 3.0] {
        let rep = asymptotic_convergence(
            &u0,
            &ModelParams::new(m, 0.5)?,
            &[1.0, 2.0, 4.0, 8.0],
            1.0,
            2.0,
        )?;
        println!("m = {m}");
        println!(
            "  consecutive L2 distances {:?}",
            rep.distances
                .iter()
                .map(|d| format!("{d:.3e}"))
                .collect::<Vec<_>>()
        );
        println!(
            "  decreasing {}, profiles converge {}",
            rep.decreasing, rep.profiles_converge
        );
    }
    Ok(())
}
