//! Spectral fractional Laplacian, Riesz gradient and the mollified kernel
//! operator on a smooth bump.

use nlpme::grid::{frac_laplacian, half_order_energy, mollified_frac_laplacian, riesz_gradient};
use nlpme::{make_grid, Field, FracOrder};

fn main() -> nlpme::Result<()> {
    let g = make_grid(8.0, 512)?;
    let u = Field::from_fn(&g, |x| (-x * x / 4.0).exp())?;
    let s = 0.5;
    let order = FracOrder::new(1.0 - s)?;
    let lap = frac_laplacian(&u, order)?;
    let grad = riesz_gradient(&u, s)?;
    println!(
        "(-Δ)^{} u at 0: {:.6}",
        1.0 - s,
        lap.values()[g.index_of(0.0)]
    );
    println!(
        "max |∂x (-Δ)^-s u|: {:.6}",
        grad.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    );
    println!("half-order energy: {:.6}", half_order_energy(&u, order)?);
    for eps in [0.2, 0.1, 0.05] {
        let approx = mollified_frac_laplacian(&u, s, eps)?;
        let err = approx
            .values()
            .iter()
            .zip(lap.values())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
            / lap.values().iter().map(|b| b * b).sum::<f64>().sqrt();
        println!("eps {eps:<5} mollified vs spectral relative l2 error {err:.3e}");
    }
    Ok(())
}
