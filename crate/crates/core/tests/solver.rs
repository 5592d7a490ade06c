use nlpme::diagnostics::{fit_decay, mass};
use nlpme::grid::{dft, idft_real, make_grid, Field};
use nlpme::solver::{
    cfl_dt, continuation_limit, fpme_dt, gaussian, mollified_dirac, simulate_m1, simulate_m1_with,
    step_fpme, step_m1, M1Operator, ModelParams, SimOptions,
};
use proptest::prelude::*;

fn sup(u: &Field) -> f64 {
    u.values().iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}

#[test]
fn constant_state_is_stationary() {
    let g = make_grid(4.0, 128).unwrap();
    let u = Field::from_fn(&g, |_| 0.7).unwrap();
    for (e, d, mu) in [(0.0, 0.0, 0.0), (0.1, 0.01, 0.01)] {
        let p = ModelParams::new(2.0, 0.5)
            .unwrap()
            .with_regularization(e, d, mu)
            .unwrap();
        let next = step_m1(&u, &p, 1e-3).unwrap();
        for v in next.values() {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }
}

#[test]
fn sup_norm_does_not_grow_in_one_step() {
    let g = make_grid(10.0, 1024).unwrap();
    let u = gaussian(&g, 1.0, 0.5, 0.0);
    let p = ModelParams::new(2.0, 0.5).unwrap();
    let dt = cfl_dt(&u, &p, 1.0).unwrap();
    assert!(dt > 0.0);
    let next = step_m1(&u, &p, dt).unwrap();
    assert!(next.is_finite());
    assert!(sup(&next) <= sup(&u) * (1.0 + 1e-10));
}

#[test]
fn zero_data_gives_the_cap() {
    let g = make_grid(4.0, 64).unwrap();
    let p = ModelParams::new(2.0, 0.5).unwrap();
    assert_eq!(cfl_dt(&Field::zeros(&g), &p, 0.25).unwrap(), 0.25);
}

#[test]
fn doubling_viscosity_at_most_halves_the_step() {
    let g = make_grid(4.0, 256).unwrap();
    let u = gaussian(&g, 1.0, 0.5, 0.0);
    let base = ModelParams::new(2.0, 0.5).unwrap();
    let d1 = cfl_dt(&u, &base.with_regularization(0.0, 0.01, 0.0).unwrap(), 1.0).unwrap();
    let d2 = cfl_dt(&u, &base.with_regularization(0.0, 0.02, 0.0).unwrap(), 1.0).unwrap();
    assert!(d2 <= d1);
    assert!(d2 >= 0.5 * d1 * (1.0 - 1e-12));
}

#[test]
fn zero_initial_data_stays_zero() {
    let g = make_grid(4.0, 64).unwrap();
    let p = ModelParams::new(1.5, 0.5).unwrap();
    let traj = simulate_m1(&Field::zeros(&g), &p, 1.0, &[0.0, 0.5, 1.0]).unwrap();
    for snap in &traj.snapshots {
        assert!(snap.values().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn mass_is_conserved_over_a_run() {
    let g = make_grid(10.0, 512).unwrap();
    let u0 = gaussian(&g, 1.0, 0.5, 0.3);
    let p = ModelParams::new(3.0, 0.7).unwrap();
    let traj = simulate_m1(&u0, &p, 1.0, &[0.0, 0.5, 1.0]).unwrap();
    assert!(traj.mass_drift() < 1e-8);
}

#[test]
fn sup_norm_decays_at_the_smoothing_rate() {
    let m = 1.5;
    let s = 0.5;
    let g = make_grid(40.0, 2048).unwrap();
    let u0 = mollified_dirac(&g, 1.0, 0.0);
    let p = ModelParams::new(m, s).unwrap();
    let times: Vec<f64> = (0..=10).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
    let traj = simulate_m1(&u0, &p, 10.0, &times).unwrap();
    let sups: Vec<f64> = traj.diagnostics.iter().map(|d| d.sup).collect();
    let gamma = 1.0 / ((m - 1.0) + 2.0 * (1.0 - s));
    let fit = fit_decay(&traj.times, &sups, gamma, (1.0, 10.0)).unwrap();
    assert!(fit.relative_gap < 0.10, "{fit:?}");
}

#[test]
fn unregularized_schedule_entry_matches_plain_simulation() {
    let g = make_grid(6.0, 256).unwrap();
    let u0 = gaussian(&g, 1.0, 0.5, 0.0);
    let p = ModelParams::new(2.0, 0.5).unwrap();
    let rep = continuation_limit(&u0, &p, &[(0.0, 0.0, 0.0)], 0.5, 0.5).unwrap();
    let plain = simulate_m1(&u0, &p, 0.5, &[0.0, 0.5]).unwrap();
    assert_eq!(
        rep.final_run().at(0.5).unwrap().values(),
        plain.at(0.5).unwrap().values()
    );
    assert!(rep.distances.is_empty());
}

#[test]
fn continuation_distances_decrease() {
    let g = make_grid(10.0, 512).unwrap();
    let u0 = gaussian(&g, 1.0, 0.5, 0.0);
    let p = ModelParams::new(2.0, 0.5).unwrap();
    let sched = [
        (0.1, 0.01, 0.01),
        (0.05, 0.005, 0.005),
        (0.025, 0.0025, 0.0025),
    ];
    let rep = continuation_limit(&u0, &p, &sched, 1.0, 1.0).unwrap();
    assert!(rep.decreasing, "{:?}", rep.distances);
    assert!(rep.mass_drifts.iter().all(|&d| d < 1e-8));
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(ModelParams::new(1.0, 0.5).is_err());
    assert!(ModelParams::new(2.0, 1.0).is_err());
    assert!(ModelParams::new(2.0, 0.5)
        .unwrap()
        .with_regularization(-0.1, 0.0, 0.0)
        .is_err());
    let g = make_grid(4.0, 64).unwrap();
    let p = ModelParams::new(2.0, 0.5).unwrap();
    assert!(simulate_m1(&Field::zeros(&g), &p, 0.0, &[0.0]).is_err());
    assert!(simulate_m1(&Field::zeros(&g), &p, 1.0, &[0.5, 0.2]).is_err());
}

#[test]
fn clipping_budget_aborts_the_run() {
    let g = make_grid(4.0, 64).unwrap();
    let u0 = gaussian(&g, 1.0, 0.3, 0.0);
    let p = ModelParams::new(2.0, 0.5).unwrap();
    let opts = SimOptions {
        max_steps: 1,
        ..Default::default()
    };
    assert!(simulate_m1_with(&u0, &p, 1.0, &[1.0], &opts).is_err());
}

#[test]
fn fpme_constant_is_stationary() {
    let g = make_grid(4.0, 64).unwrap();
    let u = Field::from_fn(&g, |_| 1.3).unwrap();
    let next = step_fpme(&u, 2.0, 0.5, 0.01).unwrap();
    assert!(next.values().iter().all(|v| (v - 1.3).abs() < 1e-12));
}

#[test]
fn fpme_with_linear_nonlinearity_is_the_fractional_heat_flow() {
    let g = make_grid(8.0, 256).unwrap();
    let sigma = 0.5;
    let u0 = gaussian(&g, 1.0, 0.7, 0.0);
    let t_end = 0.5;
    let dt = fpme_dt(&u0, 1.0, sigma, 0.4).unwrap();
    let steps = (t_end / dt).ceil() as usize;
    let dt = t_end / steps as f64;
    let mut u = u0.clone();
    for _ in 0..steps {
        u = step_fpme(&u, 1.0, sigma, dt).unwrap();
    }
    // forward Euler has per-mode amplification (1 - dt λ)
    let spec: Vec<_> = dft(u0.values())
        .into_iter()
        .zip(g.wavenumbers())
        .map(|(c, &k)| c * (1.0 - dt * k.abs().powf(2.0 * sigma)).powi(steps as i32))
        .collect();
    let oracle = idft_real(spec);
    let num: f64 = u
        .values()
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let den: f64 = oracle.iter().map(|b| b * b).sum();
    assert!((num / den).sqrt() < 1e-8);
    // and it approaches the exact semigroup e^{-|k|^{2σ} t}
    let exact: Vec<_> = dft(u0.values())
        .into_iter()
        .zip(g.wavenumbers())
        .map(|(c, &k)| c * (-t_end * k.abs().powf(2.0 * sigma)).exp())
        .collect();
    let exact = idft_real(exact);
    let num: f64 = u
        .values()
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    assert!((num / den).sqrt() < 1e-2);
}

#[test]
fn fpme_rejects_negative_input() {
    let g = make_grid(4.0, 64).unwrap();
    let u = Field::from_fn(&g, |x| x).unwrap();
    assert!(step_fpme(&u, 2.0, 0.5, 0.01).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_step_conserves_mass(m in 1.2..3.5f64, s in 0.1..0.9f64,
                               c in -3.0..3.0f64, w in 0.3..1.0f64,
                               e in 0.0..0.1f64, d in 0.0..0.01f64) {
        let g = make_grid(8.0, 256).unwrap();
        let u = gaussian(&g, 1.0, w, c);
        let p = ModelParams::new(m, s).unwrap().with_regularization(e, d, 0.0).unwrap();
        let dt = cfl_dt(&u, &p, 0.1).unwrap();
        let next = step_m1(&u, &p, dt).unwrap();
        // the update conserves mass; raising negative cells to zero adds `clipped`
        let (clipped_next, clipped) = M1Operator::new(&g, &p).unwrap().step(&u, dt, false).unwrap();
        prop_assert_eq!(clipped_next.values(), next.values());
        prop_assert!(((mass(&next) - clipped - mass(&u)) / mass(&u)).abs() < 1e-12);
        prop_assert!(clipped <= 1e-8 * mass(&u));
    }

    #[test]
    fn fpme_step_conserves_mass(q in 0.6..3.0f64, sigma in 0.1..0.9f64, c in -2.0..2.0f64) {
        let g = make_grid(8.0, 256).unwrap();
        let u = gaussian(&g, 1.0, 0.6, c);
        let dt = fpme_dt(&u, q, sigma, 0.4).unwrap();
        let next = step_fpme(&u, q, sigma, dt).unwrap();
        prop_assert!(((mass(&next) - mass(&u)) / mass(&u)).abs() < 1e-10);
    }
}
