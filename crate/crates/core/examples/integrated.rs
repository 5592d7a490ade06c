//! Integrated (primitive) model and its duality with the density model.

use nlpme::diagnostics::{l1_distance, lp_norm};
use nlpme::integrated::{differentiate_primitive, integrate_density, simulate_integrated};
use nlpme::solver::gaussian;
use nlpme::{make_grid, simulate_m1, FracOrder, ModelParams};

fn main() -> nlpme::Result<()> {
    let (m, s, t) = (1.5, 0.5, 0.5);
    for n in [512, 1024, 2048] {
        let g = make_grid(10.0, n)?;
        let u0 = gaussian(&g, 1.0, 0.5, 0.0);
        let v0 = integrate_density(&u0)?;
        let run = simulate_integrated(&v0, m, FracOrder::new(1.0 - s)?, t, &[t])?;
        let from_primitive = differentiate_primitive(&run.snapshots[0])?;
        let direct = simulate_m1(&u0, &ModelParams::new(m, s)?, t, &[t])?;
        let u = &direct.snapshots[0];
        let rel = l1_distance(&from_primitive, u)? / lp_norm(u, 1.0)?;
        println!("n {n:>5}: relative L1 gap {rel:.3e}");
    }
    Ok(())
}
