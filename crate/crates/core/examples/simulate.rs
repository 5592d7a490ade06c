//! Density run of the nonlocal-pressure model from Gaussian data.

use nlpme::diagnostics::{energy_monotonicity, mass};
use nlpme::solver::gaussian;
use nlpme::{make_grid, simulate_m1, ModelParams};

fn main() -> nlpme::Result<()> {
    let g = make_grid(10.0, 1024)?;
    let u0 = gaussian(&g, 1.0, 0.5, 0.0);
    let p = ModelParams::new(2.0, 0.5)?;
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5).collect();
    let traj = simulate_m1(&u0, &p, 5.0, &times)?;
    println!("{:>6} {:>12} {:>12}", "t", "mass", "sup");
    for (t, u) in traj.times.iter().zip(&traj.snapshots) {
        println!("{t:>6.2} {:>12.9} {:>12.6}", mass(u), u.max());
    }
    println!("steps {}, mass drift {:.2e}", traj.steps, traj.mass_drift());
    for q in [2.0, 4.0] {
        let rep = energy_monotonicity(&traj, q, 1e-8)?;
        println!("L{q} norm nonincreasing: {}", rep.pass);
    }
    Ok(())
}
