//! Sup-norm decay from concentrated data and the fitted exponent.

use nlpme::diagnostics::smoothing_fit;
use nlpme::selfsimilar::exponents_m1;
use nlpme::solver::mollified_dirac;
use nlpme::{make_grid, simulate_m1, ModelParams};

fn main() -> nlpme::Result<()> {
    let (m, s) = (1.5, 0.5);
    let g = make_grid(40.0, 2048)?;
    let u0 = mollified_dirac(&g, 1.0, 0.0);
    let times: Vec<f64> = (0..=26).map(|k| 10f64.powf(k as f64 / 20.0)).collect();
    let t_end = *times.last().unwrap();
    let traj = simulate_m1(&u0, &ModelParams::new(m, s)?, t_end, &times)?;
    let ex = exponents_m1(m, s, 1, 1.0)?;
    let fit = smoothing_fit(&traj, &ex, (1.0, 20.0))?;
    println!("expected exponent -{:.4}", fit.theory_exponent);
    println!("fitted exponent   {:.4}", fit.fitted_exponent);
    println!("relative gap      {:.3e}", fit.relative_gap);
    Ok(())
}
