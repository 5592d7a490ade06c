use nlpme::diagnostics::{l1_distance, mass};
use nlpme::grid::{make_grid, Field};
use nlpme::selfsimilar::{
    exponents_fpme, exponents_m1, extract_profile, fpme_to_m1_params, map_fpme_to_m1,
    map_m1_to_model2, map_model2_to_m1, profile_residual, rescale_profile, ProfileKind,
};
use nlpme::solver::{gaussian, simulate_m1, ModelParams};
use proptest::prelude::*;

#[test]
fn exponent_examples() {
    let e = exponents_m1(2.0, 0.5, 1, 1.0).unwrap();
    assert_eq!((e.beta2, e.gamma_p, e.delta_p), (0.5, 0.5, 0.5));
    let e = exponents_m1(3.0, 0.5, 1, 1.0).unwrap();
    assert!((e.beta2 - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(e.b, 3.0);
    assert!(exponents_m1(1.0, 0.5, 1, 1.0).is_err());
    assert!(exponents_m1(2.0, 1.0, 1, 1.0).is_err());
    assert_eq!(exponents_fpme(2.0, 0.5, 1).unwrap(), 0.5);
    assert_eq!(exponents_fpme(1.0, 0.5, 1).unwrap(), 1.0);
    assert!(exponents_fpme(0.0, 0.5, 1).is_err());
}

#[test]
fn fpme_map_first_kind() {
    let g = make_grid(4.0, 64).unwrap();
    let phi1 = gaussian(&g, 1.0, 0.5, 0.0);
    let mapped = map_fpme_to_m1(&phi1, 2.0, 0.5, 1, 1.0).unwrap();
    assert_eq!((mapped.m, mapped.s), (1.5, 0.5));
    assert!(matches!(mapped.kind, ProfileKind::First { .. }));
    assert_eq!(
        mapped.kind.rate(),
        exponents_m1(1.5, 0.5, 1, 1.0).unwrap().beta2
    );
}

#[test]
fn critical_fpme_exponent_leaves_the_model_range() {
    let g = make_grid(4.0, 64).unwrap();
    let phi1 = gaussian(&g, 1.0, 0.5, 0.0);
    // q = N/(N+2σ) = 0.5 would be the third kind, but maps to m = 0
    assert_eq!(fpme_to_m1_params(0.5, 0.5), (0.0, 0.5));
    assert!(map_fpme_to_m1(&phi1, 0.5, 0.5, 1, 1.0).is_err());
    assert!(map_fpme_to_m1(&phi1, 1.0, 0.5, 1, 1.0).is_err());
}

#[test]
fn model2_map_round_trips() {
    let g = make_grid(4.0, 128).unwrap();
    let phi = Field::from_fn(&g, |x| 0.1 + (-x * x).exp()).unwrap();
    for m in [3.0, 4.0] {
        let p2 = map_m1_to_model2(&phi, m, 0.5, 1, 0.3).unwrap();
        assert_eq!(p2.mhat, 1.0 / (m - 2.0));
        let back = map_model2_to_m1(&p2.psi, m, 0.5, 1, 0.3).unwrap();
        for (a, b) in back.values().iter().zip(phi.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }
    assert!(map_m1_to_model2(&phi, 2.0, 0.5, 1, 0.3).is_err());
    assert!(map_m1_to_model2(&Field::zeros(&g), 3.0, 0.5, 1, 0.3).is_err());
}

#[test]
fn zero_profile_has_zero_residual() {
    let g = make_grid(4.0, 128).unwrap();
    let z = Field::zeros(&g);
    let kinds = [
        (ProfileKind::First { beta2: 0.5 }, 2.0, 0.5),
        (ProfileKind::Second { rate: 0.5 }, 2.0, 0.5),
        (ProfileKind::Third { c: 1.0 }, 2.0, 0.5),
        (ProfileKind::Fpme { beta1: 0.5 }, 2.0, 0.5),
        (ProfileKind::Model2 { b: 0.25 }, 3.0, 0.5),
    ];
    for (k, a, b) in kinds {
        let r = profile_residual(&z, k, a, b).unwrap();
        assert_eq!(r.max_interior(), 0.0, "{}", k.name());
        assert_eq!(r.normalized(), 0.0);
    }
}

#[test]
fn constant_fpme_residual_is_the_drift() {
    let g = make_grid(4.0, 128).unwrap();
    let c = 0.7;
    let beta1 = exponents_fpme(2.0, 0.5, 1).unwrap();
    let phi = Field::from_fn(&g, |_| c).unwrap();
    let r = profile_residual(&phi, ProfileKind::Fpme { beta1 }, 2.0, 0.5).unwrap();
    for (v, &inside) in r.residual.values().iter().zip(&r.interior) {
        if inside {
            assert!((v + beta1 * c).abs() < 1e-8);
        }
    }
}

#[test]
fn extraction_at_unit_time_is_the_snapshot() {
    let g = make_grid(8.0, 256).unwrap();
    let u0 = gaussian(&g, 1.0, 0.5, 0.0);
    let traj = simulate_m1(&u0, &ModelParams::new(1.5, 0.5).unwrap(), 1.0, &[0.0, 1.0]).unwrap();
    let ex = exponents_m1(1.5, 0.5, 1, 1.0).unwrap();
    let prof = extract_profile(&traj, &ex, 1.0).unwrap();
    assert_eq!(prof.values(), traj.at(1.0).unwrap().values());
    assert!(extract_profile(&traj, &ex, 0.0).is_err());
    assert!(extract_profile(&traj, &ex, 2.0).is_err());
}

#[test]
fn rescaling_preserves_mass() {
    let g = make_grid(16.0, 4096).unwrap();
    let u = gaussian(&g, 1.3, 0.8, 0.2);
    let ex = exponents_m1(1.5, 0.5, 1, 1.0).unwrap();
    for t in [0.5, 2.0, 4.0] {
        let p = rescale_profile(&u, &ex, t).unwrap();
        let rel = (mass(&p) - mass(&u)).abs() / mass(&u);
        assert!(rel < 1e-8, "t {t}: {rel}");
    }
}

#[test]
fn extraction_self_consistency_improves_in_time() {
    let g = make_grid(16.0, 1024).unwrap();
    let u0 = gaussian(&g, 1.0, 0.5, 0.3);
    let times = [1.0, 2.0, 4.0];
    let traj = simulate_m1(&u0, &ModelParams::new(1.5, 0.5).unwrap(), 4.0, &times).unwrap();
    let ex = exponents_m1(1.5, 0.5, 1, 1.0).unwrap();
    let p: Vec<Field> = times
        .iter()
        .map(|&t| extract_profile(&traj, &ex, t).unwrap())
        .collect();
    let d1 = l1_distance(&p[0], &p[1]).unwrap();
    let d2 = l1_distance(&p[1], &p[2]).unwrap();
    assert!(d2 < d1, "{d1} {d2}");
}

proptest! {
    #[test]
    fn exponent_identities(m in 1.01..5.0f64, s in 0.01..0.99f64, n in 1usize..4, p in 1.0..10.0f64) {
        let e = exponents_m1(m, s, n, p).unwrap();
        let nf = n as f64;
        prop_assert!((e.beta2 * e.b - 1.0).abs() < 1e-12);
        prop_assert!((e.gamma_p * ((m - 1.0) * nf + 2.0 * p * (1.0 - s)) - nf).abs() < 1e-12);
        prop_assert!((e.alpha2 - nf * e.beta2).abs() < 1e-14);
    }

    #[test]
    fn fpme_parameter_map_lands_in_range(q in 1.0001..10.0f64, sigma in 0.01..0.99f64) {
        let (m, s) = fpme_to_m1_params(q, sigma);
        prop_assert!(m > 1.0 && m < 2.0);
        prop_assert!(s > 0.0 && s < 1.0);
        prop_assert!((s + sigma - 1.0).abs() < 1e-15);
    }
}
