//! Finite propagation for m = 2 against a parabola barrier, and tail mass
//! for m = 1.5.

use nlpme::config::InitialData;
use nlpme::diagnostics::{finite_propagation, infinite_propagation_witness};
use nlpme::experiments::initial_density;
use nlpme::integrated::{contact_check, parabola_supersolution};
use nlpme::{make_grid, simulate_m1, Field, ModelParams};

fn main() -> nlpme::Result<()> {
    let g = make_grid(10.0, 1024)?;
    let u0 = Field::from_fn(&g, |x| 0.8 * (1.0 - x * x).max(0.0))?;
    let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let traj = simulate_m1(&u0, &ModelParams::new(2.0, 0.25)?, 1.0, &times)?;
    let rep = finite_propagation(&traj, 1e-8, (0.1, 1.0), 0.05)?;
    for (t, r) in rep.times.iter().zip(&rep.support_radii) {
        let upper = parabola_supersolution(5.0, 2.0, *t, &g)?;
        println!(
            "t {t:.1}: support radius {r:.4}, below barrier: {}",
            contact_check(traj.at(*t).unwrap(), &upper)?.strict
        );
    }

    let u0 = initial_density(
        &InitialData::Bump {
            mass: 6.0,
            center: -2.0,
            half_width: 1.0,
        },
        &make_grid(16.0, 1024)?,
    )?;
    let traj = simulate_m1(&u0, &ModelParams::new(1.5, 0.5)?, 0.1, &[0.0, 0.1])?;
    let rep = infinite_propagation_witness(&traj, 4.5, 0.1)?;
    println!(
        "m = 1.5: mass beyond |x| > 4.5 at t = 0.1: {:.3e}",
        rep.tail_masses[1]
    );
    Ok(())
}
