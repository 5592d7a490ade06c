//! Explicit conservative integrator for the regularized nonlocal-pressure
//! porous medium problem
//!
//! `u_t = δ u_xx + ∂x((u + μ)^{m-1} ∂x (-Δ)^{-s} u)`
//!
//! on a periodic box, plus the regularization-removal continuation and a
//! companion integrator for `u_t = -(-Δ)^σ u^q`.

use std::f64::consts::PI;

use crate::diagnostics::{l2_distance, lp_norm, mass};
use crate::error::{invalid, Error, Result};
use crate::grid::{
    frac_laplacian, inverse_gradient, neg_half_order_norm, riesz_gradient, spectral_laplacian,
    Field, FracOrder, Grid1D, MollifiedKernel, DEFAULT_IMAGES,
};

/// Exponents and regularization parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub m: f64,
    pub s: f64,
    /// Spatial dimension. The evolution code only supports 1.
    pub n_dim: usize,
    pub eps: f64,
    pub delta: f64,
    pub mu: f64,
    /// Truncation radius; identified with the grid half-length.
    pub r: f64,
}

impl ModelParams {
    /// Unregularized one-dimensional model.
    pub fn new(m: f64, s: f64) -> Result<Self> {
        let p = Self {
            m,
            s,
            n_dim: 1,
            eps: 0.0,
            delta: 0.0,
            mu: 0.0,
            r: f64::INFINITY,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_regularization(mut self, eps: f64, delta: f64, mu: f64) -> Result<Self> {
        self.eps = eps;
        self.delta = delta;
        self.mu = mu;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.0) || !self.m.is_finite() {
            return Err(invalid("m", format!("must exceed 1, got {}", self.m)));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(invalid("s", format!("must lie in (0, 1), got {}", self.s)));
        }
        if self.n_dim == 0 {
            return Err(invalid("N", "must be at least 1"));
        }
        for (name, v) in [("eps", self.eps), ("delta", self.delta), ("mu", self.mu)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    fn require_1d(&self) -> Result<()> {
        if self.n_dim != 1 {
            return Err(invalid("N", "the evolution solvers are one-dimensional"));
        }
        Ok(())
    }
}

/// Diagnostics recorded with every snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotDiagnostics {
    pub mass: f64,
    pub sup: f64,
    pub l2: f64,
    pub l4: f64,
    pub second_energy: f64,
}

impl SnapshotDiagnostics {
    pub fn of(u: &Field, s: f64) -> Result<Self> {
        Ok(Self {
            mass: mass(u),
            sup: lp_norm(u, f64::INFINITY)?,
            l2: lp_norm(u, 2.0)?,
            l4: lp_norm(u, 4.0)?,
            second_energy: neg_half_order_norm(u, s)?,
        })
    }
}

/// Time-stamped snapshots of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ModelParams,
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub diagnostics: Vec<SnapshotDiagnostics>,
    /// Mass removed from the books by clipping negative roundoff.
    pub clipped_mass: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid1D {
        self.snapshots[0].grid()
    }

    /// Snapshot recorded at exactly `t`, if any.
    pub fn at(&self, t: f64) -> Option<&Field> {
        self.times
            .iter()
            .position(|&x| x == t)
            .map(|i| &self.snapshots[i])
    }

    /// Largest relative mass deviation from the first snapshot.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.diagnostics[0].mass;
        if m0 == 0.0 {
            return self
                .diagnostics
                .iter()
                .map(|d| d.mass.abs())
                .fold(0.0, f64::max);
        }
        self.diagnostics
            .iter()
            .map(|d| ((d.mass - m0) / m0).abs())
            .fold(0.0, f64::max)
    }
}

/// Knobs of the explicit integrator.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub safety: f64,
    /// Two-stage strong-stability-preserving Runge-Kutta instead of Euler.
    pub rk2: bool,
    /// Abort once cumulative clipped mass exceeds this fraction of the mass.
    pub max_clip_fraction: f64,
    pub max_steps: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            safety: 0.4,
            rk2: true,
            max_clip_fraction: 1e-6,
            max_steps: 20_000_000,
        }
    }
}

/// Discrete right-hand side of the model for fixed parameters on one grid.
///
/// Caches the mollified kernel when `eps > 0`.
#[derive(Debug, Clone)]
pub struct M1Operator {
    params: ModelParams,
    grid: Grid1D,
    kernel: Option<MollifiedKernel>,
    /// `max_k |sin(k h)/h| |k|^{1-2s}`: spectral radius of the linearized flux divergence.
    lambda_nl: f64,
}

impl M1Operator {
    pub fn new(grid: &Grid1D, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        params.require_1d()?;
        let kernel = if params.eps > 0.0 {
            Some(MollifiedKernel::new(
                grid,
                params.s,
                params.eps,
                DEFAULT_IMAGES,
            )?)
        } else {
            None
        };
        let h = grid.spacing();
        let lambda_nl = grid
            .wavenumbers()
            .iter()
            .filter(|&&k| k != 0.0)
            .map(|&k| ((k * h).sin() / h).abs() * k.abs().powf(1.0 - 2.0 * params.s))
            .fold(0.0, f64::max);
        Ok(Self {
            params: *params,
            grid: grid.clone(),
            kernel,
            lambda_nl,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `∂x (-Δ)^{-s} u`, routed through `∂x(-Δ)^{-1} L_ε` when mollified.
    pub fn pressure_gradient(&self, u: &Field) -> Result<Field> {
        match &self.kernel {
            Some(k) => {
                let lu = Field::from_raw(&self.grid, k.apply(u.values()));
                Ok(inverse_gradient(&lu))
            }
            None => riesz_gradient(u, self.params.s),
        }
    }

    fn mobility(&self, u: f64) -> f64 {
        (u.max(0.0) + self.params.mu).powf(self.params.m - 1.0)
    }

    /// Face fluxes `G_{i+1/2} = g(u_face) · w̄_{i+1/2}`, where `u_face` is the
    /// minmod-limited linear reconstruction from the upwind cell.
    fn face_fluxes(&self, u: &[f64], w: &[f64]) -> Vec<f64> {
        let n = u.len();
        let slope: Vec<f64> = (0..n)
            .map(|i| minmod(u[i] - u[(i + n - 1) % n], u[(i + 1) % n] - u[i]))
            .collect();
        (0..n)
            .map(|i| {
                let ip = (i + 1) % n;
                let wf = 0.5 * (w[i] + w[ip]);
                // mass moves along -w
                let face = if wf < 0.0 {
                    u[i] + 0.5 * slope[i]
                } else {
                    u[ip] - 0.5 * slope[ip]
                };
                self.mobility(face) * wf
            })
            .collect()
    }

    /// One forward Euler stage; returns the clipped field and the clipped mass.
    fn euler(&self, u: &Field, dt: f64) -> Result<(Field, f64)> {
        let h = self.grid.spacing();
        let w = self.pressure_gradient(u)?;
        let mut flux = self.face_fluxes(u.values(), w.values());
        let n = u.values().len();
        // outflow is limited by the mass left after the viscous part
        let base: Vec<f64> = if self.params.delta > 0.0 {
            let lap = spectral_laplacian(u);
            u.values()
                .iter()
                .zip(lap.values())
                .map(|(a, l)| a + dt * self.params.delta * l)
                .collect()
        } else {
            u.values().to_vec()
        };
        let avail: Vec<f64> = base.iter().map(|v| v.max(0.0)).collect();
        limit_outflow(&avail, &mut flux, dt / h);
        let mut clipped = 0.0;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let im = (i + n - 1) % n;
            let mut v = base[i] + dt * (flux[i] - flux[im]) / h;
            if !v.is_finite() {
                return Err(Error::NonFinite("step_m1 output"));
            }
            if v < 0.0 {
                clipped -= v * h;
                v = 0.0;
            }
            out.push(v);
        }
        Ok((Field::from_raw(&self.grid, out), clipped))
    }

    /// Advances `u` by `dt`; returns the new field and the clipped mass.
    pub fn step(&self, u: &Field, dt: f64, rk2: bool) -> Result<(Field, f64)> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if u.values().iter().any(|&v| v < 0.0) {
            return Err(Error::NegativeInput("step_m1"));
        }
        let (u1, c1) = self.euler(u, dt)?;
        if !rk2 {
            return Ok((u1, c1));
        }
        let (u2, c2) = self.euler(&u1, dt)?;
        let avg = u
            .values()
            .iter()
            .zip(u2.values())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        Ok((Field::from_raw(&self.grid, avg), 0.5 * (c1 + c2)))
    }

    /// Stable explicit time step, capped at `cap`.
    pub fn cfl_dt(&self, u: &Field, safety: f64, cap: f64) -> Result<f64> {
        let h = self.grid.spacing();
        let w = self.pressure_gradient(u)?;
        let wmax = w.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let umax = u.max().max(0.0);
        let gmax = self.mobility(umax);
        // transport speed of the donor-cell flux; the outflow limiter covers
        // the thin layer below 1% of the peak
        let floor = 1e-2 * umax;
        let m = self.params.m;
        let speed = u
            .values()
            .iter()
            .filter(|&&v| v > 0.0 && v >= floor)
            .map(|&v| {
                let dg = (m - 1.0) * (v + self.params.mu).powf(m - 2.0);
                dg.max(self.mobility(v) / v)
            })
            .fold(0.0f64, f64::max);
        let mut rate = 2.0 * wmax * speed / h;
        // zero data never moves, however large the mobility shift
        let nonlocal = if umax > 0.0 {
            gmax * self.lambda_nl
        } else {
            0.0
        };
        let viscous = self.params.delta * (PI / h).powi(2) / 2.0;
        rate = rate.max(nonlocal + viscous);
        if rate == 0.0 {
            return Ok(cap);
        }
        Ok((safety / rate).min(cap))
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Scales each face flux by the factor of its donor cell so that no cell
/// sends out more than it holds; keeps the update conservative.
fn limit_outflow(u: &[f64], flux: &mut [f64], ratio: f64) {
    let n = u.len();
    let theta: Vec<f64> = (0..n)
        .map(|i| {
            let im = (i + n - 1) % n;
            let out = ratio * ((-flux[i]).max(0.0) + flux[im].max(0.0));
            if out > u[i] {
                u[i] / out
            } else {
                1.0
            }
        })
        .collect();
    for (i, f) in flux.iter_mut().enumerate() {
        let donor = if *f < 0.0 { i } else { (i + 1) % n };
        *f *= theta[donor];
    }
}

/// One explicit step of the regularized model (forward Euler).
pub fn step_m1(u: &Field, p: &ModelParams, dt: f64) -> Result<Field> {
    Ok(M1Operator::new(u.grid(), p)?.step(u, dt, false)?.0)
}

/// Explicit step size with safety 0.4; `cap` is returned when nothing moves.
pub fn cfl_dt(u: &Field, p: &ModelParams, cap: f64) -> Result<f64> {
    M1Operator::new(u.grid(), p)?.cfl_dt(u, 0.4, cap)
}

/// Evolves `u0` to `t_end`, recording snapshots at `snap_times`.
pub fn simulate_m1(
    u0: &Field,
    p: &ModelParams,
    t_end: f64,
    snap_times: &[f64],
) -> Result<Trajectory> {
    simulate_m1_with(u0, p, t_end, snap_times, &SimOptions::default())
}

/// [`simulate_m1`] with explicit integrator options.
///
/// Snapshots falling inside a step are linearly interpolated in time.
pub fn simulate_m1_with(
    u0: &Field,
    p: &ModelParams,
    t_end: f64,
    snap_times: &[f64],
    opts: &SimOptions,
) -> Result<Trajectory> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(invalid("t_end", format!("must be positive, got {t_end}")));
    }
    if snap_times.is_empty() {
        return Err(invalid(
            "snap_times",
            "at least one snapshot time is required",
        ));
    }
    if snap_times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("snap_times", "must be strictly increasing"));
    }
    if snap_times[0] < 0.0 || *snap_times.last().unwrap() > t_end {
        return Err(invalid("snap_times", "must lie in [0, t_end]"));
    }
    if u0.values().iter().any(|&v| v < 0.0) {
        return Err(Error::NegativeInput("simulate_m1 initial data"));
    }
    let op = M1Operator::new(u0.grid(), p)?;
    let mass0 = mass(u0);
    let mut traj = Trajectory {
        params: *p,
        times: Vec::with_capacity(snap_times.len()),
        snapshots: Vec::with_capacity(snap_times.len()),
        diagnostics: Vec::with_capacity(snap_times.len()),
        clipped_mass: 0.0,
        steps: 0,
    };
    let record = |traj: &mut Trajectory, t: f64, f: Field| -> Result<()> {
        traj.diagnostics.push(SnapshotDiagnostics::of(&f, p.s)?);
        traj.times.push(t);
        traj.snapshots.push(f);
        Ok(())
    };

    let mut next = 0;
    while next < snap_times.len() && snap_times[next] <= 0.0 {
        record(&mut traj, snap_times[next], u0.clone())?;
        next += 1;
    }
    let mut t = 0.0;
    let mut u = u0.clone();
    while next < snap_times.len() {
        if traj.steps >= opts.max_steps {
            return Err(Error::Unstable {
                time: t,
                reason: "step budget exhausted".into(),
            });
        }
        let remaining = t_end - t;
        let mut dt = op.cfl_dt(&u, opts.safety, remaining)?;
        let last = dt >= remaining * (1.0 - 1e-12);
        if last {
            dt = remaining;
        }
        let (un, clipped) = op.step(&u, dt, opts.rk2).map_err(|e| match e {
            Error::NonFinite(_) => Error::Unstable {
                time: t,
                reason: "non-finite values after step".into(),
            },
            other => other,
        })?;
        traj.clipped_mass += clipped;
        traj.steps += 1;
        if traj.clipped_mass > opts.max_clip_fraction * mass0 {
            return Err(Error::ClippingExceeded {
                clipped: traj.clipped_mass,
                limit: opts.max_clip_fraction,
            });
        }
        let t_new = if last { t_end } else { t + dt };
        while next < snap_times.len() && (snap_times[next] <= t_new || last) {
            let ts = snap_times[next];
            let theta = ((ts - t) / (t_new - t)).clamp(0.0, 1.0);
            let f = if theta == 1.0 {
                un.clone()
            } else {
                Field::from_raw(
                    u.grid(),
                    u.values()
                        .iter()
                        .zip(un.values())
                        .map(|(a, b)| a + theta * (b - a))
                        .collect(),
                )
            };
            record(&mut traj, ts, f)?;
            next += 1;
        }
        u = un;
        t = t_new;
    }
    Ok(traj)
}

/// Outcome of the regularization-removal continuation.
#[derive(Debug, Clone)]
pub struct ContinuationReport {
    pub schedule: Vec<(f64, f64, f64)>,
    pub runs: Vec<Trajectory>,
    /// L² distance at the checkpoint between consecutive runs.
    pub distances: Vec<f64>,
    pub decreasing: bool,
    pub mass_drifts: Vec<f64>,
    pub checkpoint: f64,
}

impl ContinuationReport {
    pub fn final_run(&self) -> &Trajectory {
        self.runs.last().expect("schedule is non-empty")
    }
}

/// Checks that a schedule of `(eps, delta, mu)` is nonnegative and strictly
/// decreasing in every coordinate.
pub fn validate_schedule(schedule: &[(f64, f64, f64)]) -> Result<()> {
    if schedule.is_empty() {
        return Err(invalid("schedule", "must contain at least one entry"));
    }
    for &(e, d, m) in schedule {
        if !(e >= 0.0 && d >= 0.0 && m >= 0.0) {
            return Err(invalid("schedule", "entries must be nonnegative"));
        }
    }
    for w in schedule.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b.0 < a.0 && b.1 < a.1 && b.2 < a.2) {
            return Err(invalid(
                "schedule",
                format!("must be strictly decreasing in each coordinate: {a:?} -> {b:?}"),
            ));
        }
    }
    Ok(())
}

/// Runs the model for each `(eps, delta, mu)` of the schedule and measures
/// consecutive L² distances at `checkpoint`.
pub fn continuation_limit(
    u0: &Field,
    p: &ModelParams,
    schedule: &[(f64, f64, f64)],
    t_end: f64,
    checkpoint: f64,
) -> Result<ContinuationReport> {
    validate_schedule(schedule)?;
    if !(checkpoint > 0.0 && checkpoint <= t_end) {
        return Err(invalid("checkpoint", "must lie in (0, t_end]"));
    }
    let mut snaps = vec![0.0, checkpoint];
    if checkpoint < t_end {
        snaps.push(t_end);
    }
    let runs = crate::parallel::map(schedule, |&(e, d, m)| {
        let q = p.with_regularization(e, d, m)?;
        simulate_m1(u0, &q, t_end, &snaps)
    })?;
    let mut distances = Vec::new();
    for w in runs.windows(2) {
        let a = w[0].at(checkpoint).expect("checkpoint recorded");
        let b = w[1].at(checkpoint).expect("checkpoint recorded");
        distances.push(l2_distance(a, b)?);
    }
    let decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    let mass_drifts = runs.iter().map(Trajectory::mass_drift).collect();
    Ok(ContinuationReport {
        schedule: schedule.to_vec(),
        runs,
        distances,
        decreasing,
        mass_drifts,
        checkpoint,
    })
}

fn check_fpme(q: f64, sigma: f64) -> Result<()> {
    if !(q > 0.0) {
        return Err(invalid("q", format!("must be positive, got {q}")));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid("sigma", format!("must lie in (0, 1), got {sigma}")));
    }
    Ok(())
}

/// One explicit step of `u_t = -(-Δ)^σ u^q`.
pub fn step_fpme(u: &Field, q: f64, sigma: f64, dt: f64) -> Result<Field> {
    check_fpme(q, sigma)?;
    let floor = -1e-12 * u.max().abs().max(1.0);
    if u.values().iter().any(|&v| v < floor) {
        return Err(Error::NegativeInput("step_fpme"));
    }
    let uq = Field::from_raw(
        u.grid(),
        u.values().iter().map(|&v| v.max(0.0).powf(q)).collect(),
    );
    let lap = frac_laplacian(&uq, FracOrder::new(sigma)?)?;
    let out: Vec<f64> = u
        .values()
        .iter()
        .zip(lap.values())
        .map(|(a, b)| a - dt * b)
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Unstable {
            time: f64::NAN,
            reason: "non-finite values in step_fpme".into(),
        });
    }
    Ok(Field::from_raw(u.grid(), out))
}

/// Explicit step bound for [`step_fpme`]: `safety (h/π)^{2σ} / (q sup u^{q-1})`.
pub fn fpme_dt(u: &Field, q: f64, sigma: f64, safety: f64) -> Result<f64> {
    check_fpme(q, sigma)?;
    let h = u.grid().spacing();
    let sup = u.max().max(0.0);
    let slope = if sup > 0.0 {
        q * sup.powf(q - 1.0)
    } else {
        0.0
    };
    if slope == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(safety * (h / PI).powf(2.0 * sigma) / slope)
}

/// Gaussian of mass `mass` and standard deviation `4h` centred at `center`.
pub fn mollified_dirac(grid: &Grid1D, mass: f64, center: f64) -> Field {
    gaussian(grid, mass, 4.0 * grid.spacing(), center)
}

/// Gaussian of given mass and standard deviation, normalized so that the
/// discrete mass is exact.
pub fn gaussian(grid: &Grid1D, total: f64, width: f64, center: f64) -> Field {
    let raw: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| (-0.5 * ((x - center) / width).powi(2)).exp())
        .collect();
    let f = Field::from_raw(grid, raw);
    let m = mass(&f);
    let scale = if m > 0.0 { total / m } else { 0.0 };
    Field::from_raw(grid, f.values().iter().map(|v| v * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn params_reject_out_of_range() {
        assert!(ModelParams::new(1.0, 0.5).is_err());
        assert!(ModelParams::new(2.0, 1.0).is_err());
        assert!(ModelParams::new(2.0, 0.5)
            .unwrap()
            .with_regularization(-1.0, 0.0, 0.0)
            .is_err());
    }

    #[test]
    fn schedule_must_decrease() {
        assert!(validate_schedule(&[(0.1, 0.1, 0.1), (0.1, 0.05, 0.05)]).is_err());
        assert!(validate_schedule(&[(0.1, 0.1, 0.1), (0.05, 0.05, 0.05)]).is_ok());
        assert!(validate_schedule(&[]).is_err());
    }

    #[test]
    fn zero_data_gets_the_cap() {
        let g = make_grid(5.0, 64).unwrap();
        let p = ModelParams::new(2.0, 0.5).unwrap();
        assert_eq!(cfl_dt(&Field::zeros(&g), &p, 3.0).unwrap(), 3.0);
    }

    #[test]
    fn gaussian_has_requested_mass() {
        let g = make_grid(10.0, 256).unwrap();
        assert!((mass(&gaussian(&g, 2.5, 0.7, 1.0)) - 2.5).abs() < 1e-13);
    }
}
