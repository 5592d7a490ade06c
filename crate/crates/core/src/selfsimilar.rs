//! Self-similar exponents, profile equations and the transformations between
//! the fractional porous medium profiles and those of the nonlocal-pressure
//! model.

use crate::error::{invalid, Error, Result};
use crate::grid::{frac_laplacian, riesz_gradient, spectral_derivative, Field, FracOrder, Grid1D};
use crate::integrated::interp_linear;
use crate::solver::{fpme_dt, gaussian, Trajectory};

/// Self-similar exponents of the model for `(m, s, N)` and an `L^p` index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentSet {
    pub m: f64,
    pub s: f64,
    pub n_dim: usize,
    pub p: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub b: f64,
    pub gamma_p: f64,
    pub delta_p: f64,
}

pub fn exponents_m1(m: f64, s: f64, n_dim: usize, p: f64) -> Result<ExponentSet> {
    if !(m > 1.0) {
        return Err(invalid("m", format!("must exceed 1, got {m}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", format!("must lie in (0, 1), got {s}")));
    }
    if n_dim == 0 {
        return Err(invalid("N", "must be at least 1"));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid("p", format!("must be finite and >= 1, got {p}")));
    }
    let n = n_dim as f64;
    let b = n * (m - 1.0) + 2.0 - 2.0 * s;
    let beta2 = 1.0 / b;
    let denom = (m - 1.0) * n + 2.0 * p * (1.0 - s);
    Ok(ExponentSet {
        m,
        s,
        n_dim,
        p,
        alpha2: n * beta2,
        beta2,
        b,
        gamma_p: n / denom,
        delta_p: 2.0 * p * (1.0 - s) / denom,
    })
}

/// `β1 = 1/(N(q-1) + 2σ)`, defined for `q > (N - 2σ)/N`.
pub fn exponents_fpme(q: f64, sigma: f64, n_dim: usize) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid("sigma", "must lie in (0, 1)"));
    }
    if n_dim == 0 {
        return Err(invalid("N", "must be at least 1"));
    }
    let n = n_dim as f64;
    if !(q > (n - 2.0 * sigma) / n) {
        return Err(invalid(
            "q",
            format!(
                "must exceed the critical exponent {}",
                (n - 2.0 * sigma) / n
            ),
        ));
    }
    Ok(1.0 / (n * (q - 1.0) + 2.0 * sigma))
}

/// Which profile equation a field is meant to solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    /// Mass-conserving profiles: `∇·(φ^{m-1}∇(-Δ)^{-s}φ) + β2 ∇·(yφ) = 0`.
    First { beta2: f64 },
    /// Extinction profiles: `∇·(ψ^{m-1}∇(-Δ)^{-s}ψ) - rate ∇·(yψ) = 0`.
    Second { rate: f64 },
    /// Eternal profiles: `∇·(F^{m-1}∇(-Δ)^{-s}F) + c ∇·(yF) = 0`.
    Third { c: f64 },
    /// Fractional porous medium profiles: `(-Δ)^σ φ^q - β1 ∇·(yφ) = 0`.
    Fpme { beta1: f64 },
    /// Model-2 profiles: `ψ²(-Δ)^{1-s}ψ^{m̂} - b(Nψ - y∇ψ) = 0`.
    Model2 { b: f64 },
}

impl ProfileKind {
    pub fn rate(&self) -> f64 {
        match *self {
            ProfileKind::First { beta2 } => beta2,
            ProfileKind::Second { rate } => rate,
            ProfileKind::Third { c } => c,
            ProfileKind::Fpme { beta1 } => beta1,
            ProfileKind::Model2 { b } => b,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProfileKind::First { .. } => "first",
            ProfileKind::Second { .. } => "second",
            ProfileKind::Third { .. } => "third",
            ProfileKind::Fpme { .. } => "fpme",
            ProfileKind::Model2 { .. } => "model2",
        }
    }
}

/// Raw parameter map `(q, σ) ↦ (m, s) = ((2q-1)/q, 1-σ)`, with no range checks.
pub fn fpme_to_m1_params(q: f64, sigma: f64) -> (f64, f64) {
    ((2.0 * q - 1.0) / q, 1.0 - sigma)
}

/// Result of transforming a fractional porous medium profile.
#[derive(Debug, Clone)]
pub struct MappedProfile {
    pub profile: Field,
    pub m: f64,
    pub s: f64,
    pub kind: ProfileKind,
}

/// Maps a profile `φ1` of `(-Δ)^σ φ^q = β1 ∇·(yφ)` to a profile of the
/// nonlocal-pressure model. `c` is the free rate of the borderline case.
pub fn map_fpme_to_m1(
    phi1: &Field,
    q: f64,
    sigma: f64,
    n_dim: usize,
    c: f64,
) -> Result<MappedProfile> {
    let beta1 = exponents_fpme(q, sigma, n_dim)?;
    if q == 1.0 {
        return Err(invalid("q", "q = 1 maps to m = 1, outside the model range"));
    }
    let (m, s) = fpme_to_m1_params(q, sigma);
    if !(m > 1.0) {
        return Err(invalid(
            "q",
            format!("maps to m = {m} <= 1, outside the model range"),
        ));
    }
    if phi1.values().iter().any(|&v| v < 0.0) {
        return Err(Error::NegativeInput("map_fpme_to_m1"));
    }
    let n = n_dim as f64;
    let q_crit = n / (n + 2.0 * sigma);
    let (kind, factor, power) = if q == q_crit {
        if !(c > 0.0) {
            return Err(invalid("c", "must be positive"));
        }
        (
            ProfileKind::Third { c },
            (beta1 / c).powf(n / (2.0 * sigma)),
            q_crit,
        )
    } else {
        let beta2 = exponents_m1(m, s, n_dim, 1.0)?.beta2;
        let f = (beta1 / beta2).powf(q / (1.0 - q));
        if q > q_crit {
            (ProfileKind::First { beta2 }, f, q)
        } else {
            (ProfileKind::Second { rate: -beta2 }, f, q)
        }
    };
    let profile = phi1.map(|v| factor * v.powf(power))?;
    Ok(MappedProfile {
        profile,
        m,
        s,
        kind,
    })
}

/// Model-2 transform of a first-kind profile (requires `m > 2`).
#[derive(Debug, Clone)]
pub struct Model2Profile {
    pub psi: Field,
    pub mhat: f64,
    pub b: f64,
    pub c: f64,
}

fn model2_constants(m: f64, s: f64, n_dim: usize, beta: f64) -> Result<(f64, f64, f64)> {
    if !(m > 2.0) {
        return Err(invalid(
            "m",
            format!("the model-2 map needs m > 2, got {m}"),
        ));
    }
    let n = n_dim as f64;
    let mhat = 1.0 / (m - 2.0);
    let b = 1.0 / (n * (mhat + 1.0) + 2.0 * (1.0 - s));
    let c = (beta / b).powf(1.0 / (m - 1.0));
    Ok((mhat, b, c))
}

/// `ψ = (φ/c)^{1/m̂}` with `m̂ = 1/(m-2)` and `c = (β/b)^{1/(m-1)}`.
pub fn map_m1_to_model2(
    phi: &Field,
    m: f64,
    s: f64,
    n_dim: usize,
    beta: f64,
) -> Result<Model2Profile> {
    let (mhat, b, c) = model2_constants(m, s, n_dim, beta)?;
    if phi.values().iter().any(|&v| !(v > 0.0)) {
        return Err(invalid("phi", "must be positive on the evaluation set"));
    }
    let psi = phi.map(|v| (v / c).powf(1.0 / mhat))?;
    Ok(Model2Profile { psi, mhat, b, c })
}

/// Inverse of [`map_m1_to_model2`]: `φ = c ψ^{m̂}`.
pub fn map_model2_to_m1(psi: &Field, m: f64, s: f64, n_dim: usize, beta: f64) -> Result<Field> {
    let (mhat, _, c) = model2_constants(m, s, n_dim, beta)?;
    psi.map(|v| c * v.powf(mhat))
}

/// Pointwise residual of a profile equation with its term scales.
#[derive(Debug, Clone)]
pub struct ProfileResidual {
    pub residual: Field,
    /// Nonlinear (operator) term.
    pub operator_term: Field,
    /// Drift term.
    pub drift_term: Field,
    /// Nodes with `|y| <= 0.3 · 2L`, i.e. the inner 60% of the box.
    pub interior: Vec<bool>,
}

impl ProfileResidual {
    /// `max |residual|` over the interior.
    pub fn max_interior(&self) -> f64 {
        masked_max(self.residual.values(), &self.interior)
    }

    /// Interior residual relative to the larger of the two term magnitudes.
    pub fn normalized(&self) -> f64 {
        let scale = masked_max(self.operator_term.values(), &self.interior)
            .max(masked_max(self.drift_term.values(), &self.interior));
        if scale == 0.0 {
            0.0
        } else {
            self.max_interior() / scale
        }
    }
}

fn masked_max(v: &[f64], mask: &[bool]) -> f64 {
    v.iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold(0.0, |a, (x, _)| a.max(x.abs()))
}

/// `∇·(yφ) = Nφ + y∇φ` with a spectral gradient.
fn drift(phi: &Field, n_dim: usize) -> Field {
    let d = spectral_derivative(phi);
    let vals = phi
        .grid()
        .nodes()
        .iter()
        .zip(phi.values())
        .zip(d.values())
        .map(|((&y, &p), &dp)| n_dim as f64 * p + y * dp)
        .collect();
    Field::from_raw(phi.grid(), vals)
}

/// `∇·(φ^{m-1}∇(-Δ)^{-s}φ)` with spectral operators.
fn pressure_term(phi: &Field, m: f64, s: f64) -> Result<Field> {
    let w = riesz_gradient(phi, s)?;
    let flux = phi
        .values()
        .iter()
        .zip(w.values())
        .map(|(&p, &wv)| p.max(0.0).powf(m - 1.0) * wv)
        .collect();
    Ok(spectral_derivative(&Field::from_raw(phi.grid(), flux)))
}

fn combine(a: &Field, ca: f64, b: &Field, cb: f64) -> Field {
    let vals = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| ca * x + cb * y)
        .collect();
    Field::from_raw(a.grid(), vals)
}

/// Residual of the profile equation selected by `kind`.
///
/// `m_or_q` and `s_or_sigma` are `(m, s)` for the model kinds, `(q, σ)` for
/// [`ProfileKind::Fpme`], and `(m, s)` of the original model for
/// [`ProfileKind::Model2`] (so that `m̂ = 1/(m-2)`).
pub fn profile_residual(
    phi: &Field,
    kind: ProfileKind,
    m_or_q: f64,
    s_or_sigma: f64,
) -> Result<ProfileResidual> {
    if !phi.is_finite() {
        return Err(Error::NonFinite("profile"));
    }
    let n_dim = 1;
    let (op, dr, c_dr) = match kind {
        ProfileKind::First { beta2 } => (
            pressure_term(phi, m_or_q, s_or_sigma)?,
            drift(phi, n_dim),
            beta2,
        ),
        ProfileKind::Second { rate } => (
            pressure_term(phi, m_or_q, s_or_sigma)?,
            drift(phi, n_dim),
            -rate,
        ),
        ProfileKind::Third { c } => (
            pressure_term(phi, m_or_q, s_or_sigma)?,
            drift(phi, n_dim),
            c,
        ),
        ProfileKind::Fpme { beta1 } => {
            let pq = phi.map(|v| v.max(0.0).powf(m_or_q))?;
            let op = frac_laplacian(&pq, FracOrder::new(s_or_sigma)?)?;
            (op, drift(phi, n_dim), -beta1)
        }
        ProfileKind::Model2 { b } => {
            let m = m_or_q;
            if !(m > 2.0) {
                return Err(invalid("m", "the model-2 equation needs m > 2"));
            }
            let mhat = 1.0 / (m - 2.0);
            let pm = phi.map(|v| v.max(0.0).powf(mhat))?;
            let lap = frac_laplacian(&pm, FracOrder::new(1.0 - s_or_sigma)?)?;
            let op = Field::from_raw(
                phi.grid(),
                lap.values()
                    .iter()
                    .zip(phi.values())
                    .map(|(l, p)| p * p * l)
                    .collect(),
            );
            let dphi = spectral_derivative(phi);
            let dr = Field::from_raw(
                phi.grid(),
                phi.grid()
                    .nodes()
                    .iter()
                    .zip(phi.values())
                    .zip(dphi.values())
                    .map(|((&y, &p), &dp)| n_dim as f64 * p - y * dp)
                    .collect(),
            );
            (op, dr, -b)
        }
    };
    let drift_term = Field::from_raw(phi.grid(), dr.values().iter().map(|v| c_dr * v).collect());
    let residual = combine(&op, 1.0, &drift_term, 1.0);
    let operator_term = op;
    let l = phi.grid().half_length();
    let interior = phi
        .grid()
        .nodes()
        .iter()
        .map(|&y| y.abs() <= 0.6 * l)
        .collect();
    Ok(ProfileResidual {
        residual,
        operator_term,
        drift_term,
        interior,
    })
}

/// Profile of the fractional porous medium equation with mass `mass`,
/// obtained as the steady state of the rescaled flow
/// `φ_τ = -(-Δ)^σ φ^q + β1 ∂y(yφ)` started from a unit-width Gaussian.
///
/// The drift is discretized by conservative upwind fluxes with a closed box
/// edge, so the spectral residual of the result keeps a discretization floor.
pub fn manufacture_fpme_profile(
    grid: &Grid1D,
    q: f64,
    sigma: f64,
    mass: f64,
    tau_end: f64,
) -> Result<Field> {
    let beta1 = exponents_fpme(q, sigma, 1)?;
    if !(tau_end > 0.0) {
        return Err(invalid("tau_end", "must be positive"));
    }
    let order = FracOrder::new(sigma)?;
    let h = grid.spacing();
    let n = grid.n();
    let faces: Vec<f64> = (0..n).map(|i| grid.x(i) + 0.5 * h).collect();
    let drift_dt = h / (beta1 * grid.half_length());
    let mut phi = gaussian(grid, mass, 1.0, 0.0);
    let mut tau = 0.0;
    while tau < tau_end {
        let dt = fpme_dt(&phi, q, sigma, 0.4)?
            .min(0.4 * drift_dt)
            .min(tau_end - tau);
        let pq = phi.map(|v| v.max(0.0).powf(q))?;
        let lap = frac_laplacian(&pq, order)?;
        let v = phi.values();
        // flux of the inward velocity -β1 y through face i+1/2; the wrap face is closed
        let flux: Vec<f64> = (0..n)
            .map(|i| {
                if i + 1 == n {
                    return 0.0;
                }
                let vel = -beta1 * faces[i];
                vel * if vel > 0.0 { v[i] } else { v[i + 1] }
            })
            .collect();
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { flux[i - 1] };
                (v[i] - dt * lap.values()[i] - dt * (flux[i] - left) / h).max(0.0)
            })
            .collect();
        phi = Field::new(grid, next)?;
        tau += dt;
    }
    Ok(phi)
}

/// Snapshot at `t`, linear in time between recorded snapshots.
pub fn snapshot_at(traj: &Trajectory, t: f64) -> Result<Field> {
    let times = &traj.times;
    if times.is_empty() || t < times[0] || t > *times.last().unwrap() {
        return Err(invalid("t", format!("{t} is outside the trajectory range")));
    }
    if let Some(f) = traj.at(t) {
        return Ok(f.clone());
    }
    let k = times.iter().position(|&x| x > t).unwrap();
    let (t0, t1) = (times[k - 1], times[k]);
    let th = (t - t0) / (t1 - t0);
    traj.snapshots[k - 1].axpby(1.0 - th, &traj.snapshots[k], th)
}

/// `y ↦ t^{α2} u(y t^{β2}, t)` on the same grid, by linear interpolation.
pub fn extract_profile(traj: &Trajectory, ex: &ExponentSet, t: f64) -> Result<Field> {
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    let u = snapshot_at(traj, t)?;
    rescale_profile(&u, ex, t)
}

/// Self-similar rescaling of a single snapshot taken at time `t`.
pub fn rescale_profile(u: &Field, ex: &ExponentSet, t: f64) -> Result<Field> {
    let grid = u.grid();
    let a = t.powf(ex.alpha2);
    let stretch = t.powf(ex.beta2);
    let vals = grid
        .nodes()
        .iter()
        .map(|&y| a * interp_linear(grid, u.values(), y * stretch, 0.0, 0.0))
        .collect();
    Field::new(grid, vals)
}
