//! Measurable consequences of the theory: conservation, norm decay,
//! smoothing rates, propagation of the support, weak-form consistency and
//! the rescaled-family asymptotics.

use crate::error::{invalid, Result};
use crate::grid::{neg_half_order_norm, same_grid, Field};
use crate::integrated::interp_linear;
use crate::selfsimilar::{exponents_m1, rescale_profile, ExponentSet};
use crate::solver::{simulate_m1, M1Operator, ModelParams, Trajectory};

/// Periodic trapezoid rule `h Σ u_i`.
pub fn mass(u: &Field) -> f64 {
    u.grid().spacing() * u.values().iter().sum::<f64>()
}

/// `(∫ |u|^p)^{1/p}`; `p = ∞` gives `max |u|`.
pub fn lp_norm(u: &Field, p: f64) -> Result<f64> {
    lp_of(u.values(), u.grid().spacing(), p)
}

fn lp_of(v: &[f64], h: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(v.iter().fold(0.0, |a, x| a.max(x.abs())));
    }
    let sum: f64 = v.iter().map(|x| x.abs().powf(p)).sum();
    Ok((h * sum).powf(1.0 / p))
}

/// `‖a - b‖_p`.
pub fn lp_distance(a: &Field, b: &Field, p: f64) -> Result<f64> {
    same_grid(a, b)?;
    let d: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x - y)
        .collect();
    lp_of(&d, a.grid().spacing(), p)
}

pub fn l1_distance(a: &Field, b: &Field) -> Result<f64> {
    lp_distance(a, b, 1.0)
}

pub fn l2_distance(a: &Field, b: &Field) -> Result<f64> {
    lp_distance(a, b, 2.0)
}

/// Largest `|x_i|` with `u_i > threshold`, or 0.
pub fn support_radius(u: &Field, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(invalid("threshold", "must be positive"));
    }
    let g = u.grid();
    Ok(u.values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > threshold)
        .map(|(i, _)| g.x(i).abs())
        .fold(0.0, f64::max))
}

/// `∫_{|x| >= R} u`.
pub fn tail_mass(u: &Field, r: f64) -> Result<f64> {
    let g = u.grid();
    if !(r >= 0.0 && r < g.half_length()) {
        return Err(invalid("R", format!("must lie in [0, L), got {r}")));
    }
    Ok(g.spacing()
        * u.values()
            .iter()
            .enumerate()
            .filter(|(i, _)| g.x(*i).abs() >= r)
            .map(|(_, v)| v)
            .sum::<f64>())
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (my - slope * mx, slope)
}

/// Log-log fit of the sup-norm decay.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_exponent: f64,
    pub theory_exponent: f64,
    /// `|fitted + γ| / γ`.
    pub relative_gap: f64,
    pub fit_window: (f64, f64),
    /// Set when the fit is degenerate (no decay or gap >= 1).
    pub flagged: bool,
}

/// Fits `log ‖u(t)‖_∞` against `log t` over `window`; the theoretical
/// exponent is `γ = N β2`.
pub fn smoothing_fit(traj: &Trajectory, ex: &ExponentSet, window: (f64, f64)) -> Result<DecayFit> {
    let (times, values): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .zip(&traj.diagnostics)
        .filter(|(&t, _)| t >= window.0 && t <= window.1)
        .map(|(&t, d)| (t, d.sup))
        .unzip();
    fit_decay(&times, &values, ex.alpha2, window)
}

/// [`smoothing_fit`] on raw series.
pub fn fit_decay(
    times: &[f64],
    values: &[f64],
    gamma: f64,
    window: (f64, f64),
) -> Result<DecayFit> {
    if times.len() < 5 {
        return Err(invalid(
            "window",
            format!("needs >= 5 points, got {}", times.len()),
        ));
    }
    let (t0, t1) = (times[0], *times.last().unwrap());
    if !(t0 > 0.0) || t1 / t0 < 10.0 * (1.0 - 1e-12) {
        return Err(invalid("window", "must span at least one decade in t"));
    }
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(invalid(
            "values",
            "sup-norm must be positive to fit a power law",
        ));
    }
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (_, slope) = linear_fit(&lx, &ly);
    let gap = (slope + gamma).abs() / gamma;
    Ok(DecayFit {
        times: times.to_vec(),
        values: values.to_vec(),
        fitted_exponent: slope,
        theory_exponent: gamma,
        relative_gap: gap,
        fit_window: window,
        flagged: gap >= 1.0 || !slope.is_finite(),
    })
}

/// Largest relative increase between consecutive entries.
pub fn max_relative_increase(series: &[f64]) -> f64 {
    series
        .windows(2)
        .map(|w| {
            let scale = w[0].abs().max(f64::MIN_POSITIVE);
            ((w[1] - w[0]) / scale).max(0.0)
        })
        .fold(0.0, f64::max)
}

/// Monotone decay of the `L^p` norm and of the second-energy surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub p: f64,
    pub lp_violation: f64,
    pub energy_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn energy_monotonicity(traj: &Trajectory, p: f64, tolerance: f64) -> Result<EnergyReport> {
    if !(p > 1.0) {
        return Err(invalid("p", "must exceed 1"));
    }
    let lp = traj
        .snapshots
        .iter()
        .map(|u| lp_norm(u, p))
        .collect::<Result<Vec<_>>>()?;
    let en = traj
        .snapshots
        .iter()
        .map(|u| neg_half_order_norm(u, traj.params.s))
        .collect::<Result<Vec<_>>>()?;
    let lv = max_relative_increase(&lp);
    let ev = max_relative_increase(&en);
    Ok(EnergyReport {
        p,
        lp_violation: lv,
        energy_violation: ev,
        tolerance,
        pass: lv <= tolerance && ev <= tolerance,
    })
}

/// Values of a test function and its derivatives at `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestValue {
    pub phi: f64,
    pub phi_t: f64,
    pub phi_x: f64,
}

/// `∫∫ u φ_t - (u+μ)^{m-1} ∂x(-Δ)^{-s}u φ_x dx dt + ∫ u0 φ(·,0) dx`, using
/// the trapezoid rule over the snapshot times.
pub fn weak_form_residual(
    traj: &Trajectory,
    testfn: &dyn Fn(f64, f64) -> TestValue,
) -> Result<f64> {
    let grid = traj.grid().clone();
    let l = grid.half_length();
    let nodes = grid.nodes();
    let h = grid.spacing();
    for &t in &traj.times {
        for &x in &nodes {
            if x.abs() >= 0.95 * l && testfn(x, t).phi.abs() > 1e-14 {
                return Err(invalid("testfn", "test function touches the boundary"));
            }
        }
    }
    let op = M1Operator::new(&grid, &traj.params)?;
    let m = traj.params.m;
    let mu = traj.params.mu;
    let mut integrands = Vec::with_capacity(traj.times.len());
    for (u, &t) in traj.snapshots.iter().zip(&traj.times) {
        let w = op.pressure_gradient(u)?;
        let val: f64 = nodes
            .iter()
            .zip(u.values())
            .zip(w.values())
            .map(|((&x, &uv), &wv)| {
                let tv = testfn(x, t);
                uv * tv.phi_t - (uv.max(0.0) + mu).powf(m - 1.0) * wv * tv.phi_x
            })
            .sum::<f64>()
            * h;
        integrands.push(val);
    }
    let mut total = 0.0;
    for k in 1..traj.times.len() {
        total += 0.5 * (traj.times[k] - traj.times[k - 1]) * (integrands[k] + integrands[k - 1]);
    }
    if traj.times[0] == 0.0 {
        let u0 = &traj.snapshots[0];
        total += nodes
            .iter()
            .zip(u0.values())
            .map(|(&x, &uv)| uv * testfn(x, 0.0).phi)
            .sum::<f64>()
            * h;
    }
    Ok(total)
}

/// `λ u0(λ x)` sampled by linear interpolation, renormalized to the mass of `u0`.
pub fn rescaled_initial_data(u0: &Field, lambda: f64) -> Result<Field> {
    if !(lambda >= 1.0) {
        return Err(invalid("lambda", "must be >= 1"));
    }
    let g = u0.grid();
    let l = g.half_length();
    let sup = u0.max().abs();
    for (i, &v) in u0.values().iter().enumerate() {
        if g.x(i).abs() > l / lambda && v.abs() > 1e-12 * sup {
            return Err(invalid(
                "lambda",
                format!(
                    "box too small: data beyond L/λ = {} would be clipped",
                    l / lambda
                ),
            ));
        }
    }
    let vals: Vec<f64> = g
        .nodes()
        .iter()
        .map(|&x| lambda * interp_linear(g, u0.values(), lambda * x, 0.0, 0.0))
        .collect();
    let f = Field::new(g, vals)?;
    let (m0, m1) = (mass(u0), mass(&f));
    if m1 == 0.0 {
        return Ok(f);
    }
    f.map(|v| v * m0 / m1)
}

/// Evolves `λ u0(λx)` for every `λ`, recording `snap_times`.
pub fn rescaled_runs(
    u0: &Field,
    p: &ModelParams,
    lambdas: &[f64],
    snap_times: &[f64],
) -> Result<Vec<Trajectory>> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| !(w[0] < w[1])) || lambdas[0] < 1.0 {
        return Err(invalid("lambdas", "must be >= 1 and strictly increasing"));
    }
    let members = lambdas
        .iter()
        .map(|&l| rescaled_initial_data(u0, l))
        .collect::<Result<Vec<_>>>()?;
    evolve_members(&members, p, snap_times)
}

/// Evolves each initial field independently (in parallel).
pub fn evolve_members(
    members: &[Field],
    p: &ModelParams,
    snap_times: &[f64],
) -> Result<Vec<Trajectory>> {
    let t_end = *snap_times
        .last()
        .ok_or_else(|| invalid("snap_times", "must be non-empty"))?;
    crate::parallel::map(members, |u| simulate_m1(u, p, t_end, snap_times))
}

/// Snapshot at `t_probe` of each rescaled member.
pub fn rescaled_family(
    u0: &Field,
    p: &ModelParams,
    lambdas: &[f64],
    t_probe: f64,
) -> Result<Vec<Field>> {
    let runs = rescaled_runs(u0, p, lambdas, &[0.0, t_probe])?;
    Ok(runs.into_iter().map(|r| r.snapshots[1].clone()).collect())
}

/// Cauchy behaviour of the rescaled family.
#[derive(Debug, Clone)]
pub struct AsymptoticReport {
    pub lambdas: Vec<f64>,
    pub t_probe: f64,
    pub lp: f64,
    /// `‖u_{λ_k} - u_{λ_{k+1}}‖_p` at `t_probe`.
    pub distances: Vec<f64>,
    pub decreasing: bool,
    /// `‖φ(t) - φ(2t)‖_1` of the extracted profiles, per member.
    pub profile_l1: Vec<f64>,
    pub profiles_converge: bool,
    /// `(t, t^{Nβ(1-1/p)} ‖u(t) - Û(t)‖_p)` along the largest-λ run.
    pub weighted: Vec<(f64, f64)>,
    pub weighted_decreasing: bool,
}

/// Snapshot times used for the family runs.
pub fn family_snap_times(t_probe: f64) -> Vec<f64> {
    vec![
        0.0,
        0.125 * t_probe,
        0.25 * t_probe,
        0.5 * t_probe,
        t_probe,
        2.0 * t_probe,
    ]
}

/// Builds the report from already evolved members (see [`family_snap_times`]).
pub fn asymptotic_report(
    runs: &[Trajectory],
    lambdas: &[f64],
    t_probe: f64,
    lp: f64,
) -> Result<AsymptoticReport> {
    let p = runs[0].params;
    let ex = exponents_m1(p.m, p.s, p.n_dim, 1.0)?;
    let at = |r: &Trajectory, t: f64| -> Result<Field> {
        r.at(t)
            .cloned()
            .ok_or_else(|| invalid("t_probe", format!("no snapshot at {t}")))
    };
    let mut distances = Vec::new();
    for w in runs.windows(2) {
        distances.push(lp_distance(&at(&w[0], t_probe)?, &at(&w[1], t_probe)?, lp)?);
    }
    let mut profile_l1 = Vec::new();
    for r in runs {
        let a = rescale_profile(&at(r, t_probe)?, &ex, t_probe)?;
        let b = rescale_profile(&at(r, 2.0 * t_probe)?, &ex, 2.0 * t_probe)?;
        profile_l1.push(l1_distance(&a, &b)?);
    }
    let last = runs.last().unwrap();
    let t_fin = *last.times.last().unwrap();
    let phi_hat = rescale_profile(last.snapshots.last().unwrap(), &ex, t_fin)?;
    let mut weighted = Vec::new();
    for (u, &t) in last.snapshots.iter().zip(&last.times) {
        if t <= 0.0 || t >= t_fin {
            continue;
        }
        // Û(x, t) = t^{-α} φ̂(x t^{-β})
        let g = u.grid();
        let uh: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&x| {
                t.powf(-ex.alpha2)
                    * interp_linear(g, phi_hat.values(), x * t.powf(-ex.beta2), 0.0, 0.0)
            })
            .collect();
        let d = lp_distance(u, &Field::new(g, uh)?, lp)?;
        let wexp = p.n_dim as f64 * ex.beta2 * (1.0 - 1.0 / lp);
        weighted.push((t, t.powf(wexp) * d));
    }
    let decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    let profiles_converge = profile_l1.windows(2).all(|w| w[1] < w[0]);
    let weighted_decreasing = weighted.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(AsymptoticReport {
        lambdas: lambdas.to_vec(),
        t_probe,
        lp,
        distances,
        decreasing,
        profile_l1,
        profiles_converge,
        weighted,
        weighted_decreasing,
    })
}

/// Evolves the rescaled family and reports Cauchy behaviour at `t_probe`.
pub fn asymptotic_convergence(
    u0: &Field,
    p: &ModelParams,
    lambdas: &[f64],
    t_probe: f64,
    lp: f64,
) -> Result<AsymptoticReport> {
    let runs = rescaled_runs(u0, p, lambdas, &family_snap_times(t_probe))?;
    asymptotic_report(&runs, lambdas, t_probe, lp)
}

/// Outcome of the scaling self-consistency check.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub lambda: f64,
    pub t: f64,
    /// `t / λ^b` with `b = (m-1)N + 2 - 2s`.
    pub t_scaled: f64,
    /// `‖u_λ(t/λ^b) - λ u(λ·, t)‖_1 / ‖λ u(λ·, t)‖_1`.
    pub relative_l1: f64,
    pub direct: Field,
    pub rescaled: Field,
}

/// Evolves `λ u0(λx)` to `t/λ^b` and compares it with `λ u(λx, t)`.
pub fn scaling_commutation(
    u0: &Field,
    p: &ModelParams,
    lambda: f64,
    t: f64,
) -> Result<ScalingReport> {
    let b = (p.m - 1.0) * p.n_dim as f64 + 2.0 - 2.0 * p.s;
    let t_scaled = t / lambda.powf(b);
    let v0 = rescaled_initial_data(u0, lambda)?;
    let jobs = [(u0.clone(), t), (v0, t_scaled)];
    let runs = crate::parallel::map(&jobs, |(f, te)| simulate_m1(f, p, *te, &[*te]))?;
    let g = u0.grid();
    let u = &runs[0].snapshots[0];
    let direct = Field::new(
        g,
        g.nodes()
            .iter()
            .map(|&x| lambda * interp_linear(g, u.values(), lambda * x, 0.0, 0.0))
            .collect(),
    )?;
    let rescaled = runs[1].snapshots[0].clone();
    let relative_l1 = l1_distance(&rescaled, &direct)? / lp_norm(&direct, 1.0)?;
    Ok(ScalingReport {
        lambda,
        t,
        t_scaled,
        relative_l1,
        direct,
        rescaled,
    })
}

/// Kind of propagation evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationKind {
    Finite,
    InfiniteWitness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationReport {
    pub kind: PropagationKind,
    pub times: Vec<f64>,
    pub support_radii: Vec<f64>,
    /// Relative threshold (times the sup-norm at each time) defining the support.
    pub threshold_rel: f64,
    pub tail_masses: Vec<f64>,
    pub probe_radius: f64,
    /// Affine fit `R(t) ≈ a + b t` and its largest relative residual.
    pub affine_fit: (f64, f64),
    pub fit_residual: f64,
    pub verdict: bool,
}

fn support_series(traj: &Trajectory, rel: f64, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut times = Vec::new();
    let mut radii = Vec::new();
    for (u, &t) in traj.snapshots.iter().zip(&traj.times) {
        if t < window.0 || t > window.1 {
            continue;
        }
        let sup = u.max();
        let r = if sup > 0.0 {
            support_radius(u, rel * sup)?
        } else {
            0.0
        };
        times.push(t);
        radii.push(r);
    }
    Ok((times, radii))
}

/// Support radius (relative threshold) over `window` must follow an affine
/// law in `t` within `tolerance` relative residual.
pub fn finite_propagation(
    traj: &Trajectory,
    rel: f64,
    window: (f64, f64),
    tolerance: f64,
) -> Result<PropagationReport> {
    let (times, radii) = support_series(traj, rel, window)?;
    if times.len() < 3 {
        return Err(invalid("window", "needs at least three snapshots"));
    }
    let (a, b) = linear_fit(&times, &radii);
    let resid = times
        .iter()
        .zip(&radii)
        .map(|(&t, &r)| {
            let f = a + b * t;
            (r - f).abs() / r.abs().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    Ok(PropagationReport {
        kind: PropagationKind::Finite,
        times,
        support_radii: radii,
        threshold_rel: rel,
        tail_masses: Vec::new(),
        probe_radius: f64::NAN,
        affine_fit: (a, b),
        fit_residual: resid,
        verdict: resid < tolerance,
    })
}

/// Tail mass beyond `probe_radius` must exceed `1e3` times the clipping floor
/// of the run (its cumulative clipped mass, or roundoff on the total mass).
pub fn infinite_propagation_witness(
    traj: &Trajectory,
    probe_radius: f64,
    t_probe: f64,
) -> Result<PropagationReport> {
    let u = traj
        .at(t_probe)
        .ok_or_else(|| invalid("t_probe", format!("no snapshot at {t_probe}")))?;
    let total = mass(u);
    let floor = traj.clipped_mass.max(f64::EPSILON * total);
    let mut tails = Vec::new();
    for s in &traj.snapshots {
        tails.push(tail_mass(s, probe_radius)?);
    }
    let tail = tail_mass(u, probe_radius)?;
    let (times, radii) = support_series(traj, 1e-8, (f64::NEG_INFINITY, f64::INFINITY))?;
    Ok(PropagationReport {
        kind: PropagationKind::InfiniteWitness,
        times,
        support_radii: radii,
        threshold_rel: 1e-8,
        tail_masses: tails,
        probe_radius,
        affine_fit: (f64::NAN, f64::NAN),
        fit_residual: f64::NAN,
        verdict: tail > 1e3 * floor,
    })
}

/// Checks the bound `‖u(t)‖_∞ ≤ C t^{-γ} M^δ` along a trajectory for a given `C`.
pub fn smoothing_bound_holds(traj: &Trajectory, c: f64, gamma: f64, delta: f64) -> bool {
    traj.times
        .iter()
        .zip(&traj.diagnostics)
        .filter(|(&t, _)| t > 0.0)
        .all(|(&t, d)| d.sup <= c * t.powf(-gamma) * d.mass.powf(delta))
}
