use std::f64::consts::PI;

use approx::assert_relative_eq;
use nlpme::grid::{
    frac_laplacian, half_order_energy, make_grid, mollified_frac_laplacian, neg_half_order_norm,
    riesz_gradient, spectral_derivative, spectral_laplacian, Field, FracOrder, MollifiedKernel,
    DEFAULT_IMAGES,
};
use proptest::prelude::*;

fn rel_l2(a: &Field, b: &Field) -> f64 {
    let num: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    let den: f64 = b.values().iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn max_abs(a: &Field) -> f64 {
    a.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn grid_spacing_and_errors() {
    assert_eq!(make_grid(1.0, 16).unwrap().spacing(), 0.125);
    assert_eq!(make_grid(20.0, 2048).unwrap().spacing(), 0.01953125);
    assert!(make_grid(1.0, 10).is_err());
    assert!(make_grid(-1.0, 16).is_err());
    let g = make_grid(3.0, 64).unwrap();
    assert_eq!(g.spacing() * 64.0, 6.0);
    assert_eq!(g.x(0), -3.0);
}

#[test]
fn every_grid_mode_is_an_eigenfunction() {
    let g = make_grid(PI, 256).unwrap();
    for alpha in [0.25, 0.5, 0.75, 1.0] {
        let order = FracOrder::new(alpha).unwrap();
        for j in 1..128 {
            let k = j as f64;
            let f = Field::from_fn(&g, |x| (k * x).cos()).unwrap();
            let expected = f.map(|v| k.powf(2.0 * alpha) * v).unwrap();
            assert!(
                rel_l2(&frac_laplacian(&f, order).unwrap(), &expected) < 1e-10,
                "alpha {alpha} k {k}"
            );
        }
    }
}

#[test]
fn riesz_gradient_of_sine() {
    let g = make_grid(4.0, 256).unwrap();
    for s in [0.1, 0.5, 0.9] {
        for j in [1usize, 5, 40] {
            let k = PI * j as f64 / 4.0;
            let f = Field::from_fn(&g, |x| (k * x).sin()).unwrap();
            let expected = Field::from_fn(&g, |x| k.powf(-2.0 * s) * k * (k * x).cos()).unwrap();
            assert!(rel_l2(&riesz_gradient(&f, s).unwrap(), &expected) < 1e-10);
        }
    }
}

#[test]
fn constants_are_annihilated() {
    let g = make_grid(5.0, 64).unwrap();
    let c = Field::from_fn(&g, |_| 2.5).unwrap();
    assert!(max_abs(&frac_laplacian(&c, FracOrder::new(0.3).unwrap()).unwrap()) < 1e-12);
    assert!(max_abs(&riesz_gradient(&c, 0.4).unwrap()) < 1e-12);
    assert!(max_abs(&mollified_frac_laplacian(&c, 0.4, 0.1).unwrap()) < 1e-10);
}

#[test]
fn order_one_is_minus_second_derivative() {
    let g = make_grid(10.0, 512).unwrap();
    let f = Field::from_fn(&g, |x| (-x * x).exp()).unwrap();
    let lap = frac_laplacian(&f, FracOrder::new(1.0).unwrap()).unwrap();
    let minus_fxx = spectral_laplacian(&f).map(|v| -v).unwrap();
    assert!(rel_l2(&lap, &minus_fxx) < 1e-10);
}

#[test]
fn near_zero_pressure_order_is_the_derivative() {
    let g = make_grid(10.0, 512).unwrap();
    // error scales like 2s·ln|k| over the bump's spectrum, which peaks at |k| = 1 here
    let f = Field::from_fn(&g, |x| (-x * x / 2.0).exp()).unwrap();
    let r = riesz_gradient(&f, 0.001).unwrap();
    let e = rel_l2(&r, &spectral_derivative(&f));
    assert!(e < 1e-3, "{e}");
}

#[test]
fn gradient_then_divergence_is_minus_the_complementary_laplacian() {
    let g = make_grid(8.0, 256).unwrap();
    let f = Field::from_fn(&g, |x| {
        (-(x - 0.7).powi(2)).exp() - (-(x + 1.1).powi(2)).exp()
    })
    .unwrap();
    for s in [0.2, 0.5, 0.8] {
        let lhs = spectral_derivative(&riesz_gradient(&f, s).unwrap());
        let rhs = frac_laplacian(&f, FracOrder::new(1.0 - s).unwrap())
            .unwrap()
            .map(|v| -v)
            .unwrap();
        let err = lhs.axpby(1.0, &rhs, -1.0).unwrap();
        assert!(max_abs(&err) < 1e-10 * max_abs(&rhs));
    }
}

#[test]
fn mollified_operator_is_nonnegative_at_a_strict_maximum() {
    let g = make_grid(6.0, 256).unwrap();
    let f = Field::from_fn(&g, |x| 1.0 / (1.0 + (x - 0.5).powi(2))).unwrap();
    let l = mollified_frac_laplacian(&f, 0.3, 0.1).unwrap();
    let imax = f
        .values()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert!(l.values()[imax] >= 0.0);
}

#[test]
fn mollified_error_has_order_two_s() {
    let g = make_grid(8.0, 512).unwrap();
    let s = 0.9;
    let f = Field::from_fn(&g, |x| (-x * x / 4.0).exp()).unwrap();
    let exact = frac_laplacian(&f, FracOrder::new(1.0 - s).unwrap()).unwrap();
    let errs: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&e| rel_l2(&mollified_frac_laplacian(&f, s, e).unwrap(), &exact))
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.5, "{errs:?}");
    }
}

#[test]
fn cosine_energies_follow_parseval() {
    let l = 4.0;
    let g = make_grid(l, 128).unwrap();
    let k = PI * 3.0 / l;
    let f = Field::from_fn(&g, |x| (k * x).cos()).unwrap();
    for alpha in [0.3, 0.5, 1.0] {
        let e = half_order_energy(&f, FracOrder::new(alpha).unwrap()).unwrap();
        assert_relative_eq!(e, k.powf(2.0 * alpha) * l, max_relative = 1e-12);
    }
    let n = neg_half_order_norm(&f, 0.4).unwrap();
    assert_relative_eq!(n, k.powf(-0.8) * l, max_relative = 1e-12);
    let shifted = f.map(|v| v + 3.0).unwrap();
    assert_relative_eq!(
        neg_half_order_norm(&shifted, 0.4).unwrap(),
        n,
        max_relative = 1e-12
    );
    let zero = Field::zeros(&g);
    assert_eq!(
        half_order_energy(&zero, FracOrder::new(0.5).unwrap()).unwrap(),
        0.0
    );
    assert_eq!(neg_half_order_norm(&zero, 0.5).unwrap(), 0.0);
}

#[test]
fn energy_is_translation_invariant() {
    let g = make_grid(5.0, 128).unwrap();
    let f = Field::from_fn(&g, |x| (-(x - 0.3).powi(2)).exp()).unwrap();
    let mut rolled = f.values().to_vec();
    rolled.rotate_right(17);
    let r = Field::new(&g, rolled).unwrap();
    let o = FracOrder::new(0.6).unwrap();
    assert_relative_eq!(
        half_order_energy(&f, o).unwrap(),
        half_order_energy(&r, o).unwrap(),
        max_relative = 1e-12
    );
}

#[test]
fn order_out_of_range_is_rejected() {
    assert!(FracOrder::new(0.0).is_err());
    assert!(FracOrder::new(1.2).is_err());
    let g = make_grid(1.0, 16).unwrap();
    assert!(riesz_gradient(&Field::zeros(&g), 1.0).is_err());
    assert!(mollified_frac_laplacian(&Field::zeros(&g), 0.5, 0.0).is_err());
}

fn smooth_field(coeffs: &[f64]) -> impl Fn(f64) -> f64 + '_ {
    move |x: f64| {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * (-(x - j as f64 + 2.0).powi(2)).exp())
            .sum()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn operators_are_linear(a in -3.0..3.0f64, b in -3.0..3.0f64,
                            cf in prop::collection::vec(-1.0..1.0f64, 5),
                            cg in prop::collection::vec(-1.0..1.0f64, 5)) {
        let grid = make_grid(8.0, 128).unwrap();
        let f = Field::from_fn(&grid, smooth_field(&cf)).unwrap();
        let g = Field::from_fn(&grid, smooth_field(&cg)).unwrap();
        let comb = f.axpby(a, &g, b).unwrap();
        let order = FracOrder::new(0.4).unwrap();
        let ops: [&dyn Fn(&Field) -> Field; 3] = [
            &|x| frac_laplacian(x, order).unwrap(),
            &|x| riesz_gradient(x, 0.3).unwrap(),
            &|x| mollified_frac_laplacian(x, 0.3, 0.2).unwrap(),
        ];
        for op in ops {
            let lhs = op(&comb);
            let rhs = op(&f).axpby(a, &op(&g), b).unwrap();
            let scale = 1.0 + max_abs(&lhs);
            prop_assert!(max_abs(&lhs.axpby(1.0, &rhs, -1.0).unwrap()) < 1e-10 * scale);
        }
    }

    #[test]
    fn mollified_form_is_positive_semidefinite(v in prop::collection::vec(-1.0..1.0f64, 64),
                                               s in 0.1..0.9f64, eps in 0.05..0.5f64) {
        let grid = make_grid(4.0, 64).unwrap();
        let f = Field::new(&grid, v).unwrap();
        let l = mollified_frac_laplacian(&f, s, eps).unwrap();
        let form: f64 = f.values().iter().zip(l.values()).map(|(a, b)| a * b).sum();
        prop_assert!(form >= -1e-10);
    }

    #[test]
    fn stroock_varopoulos_for_cubes(v in prop::collection::vec(0.0..1.0f64, 6),
                                    s in 0.1..0.9f64, eps in 0.05..0.5f64) {
        let grid = make_grid(4.0, 64).unwrap();
        let w = Field::from_fn(&grid, smooth_field(&v)).unwrap().map(|x| x.max(0.0)).unwrap();
        let kernel = MollifiedKernel::new(&grid, s, eps, DEFAULT_IMAGES).unwrap();
        let psi = w.map(|x| x.powi(3)).unwrap();
        let cap_psi = w.map(|x| 0.5 * 3f64.sqrt() * x * x).unwrap();
        let lw = kernel.apply(w.values());
        let lhs: f64 = psi.values().iter().zip(&lw).map(|(a, b)| a * b).sum();
        // ‖L^{1/2} Ψ‖² from the circulant symbol
        let spec = nlpme::grid::dft(cap_psi.values());
        let rhs: f64 = spec
            .iter()
            .zip(kernel.symbol())
            .map(|(c, lam)| lam * c.norm_sqr())
            .sum::<f64>()
            / grid.n() as f64;
        prop_assert!(lhs >= rhs - 1e-8, "lhs {} rhs {}", lhs, rhs);
    }
}
