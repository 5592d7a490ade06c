//! The integrated one-dimensional model `v_t = -|v_x|^{m-1} (-Δ)^α v`,
//! where `v` is the primitive of the density, together with the barrier
//! functions used to probe propagation.

use crate::error::{invalid, Error, Result};
use crate::grid::{frac_laplacian, frac_laplacian_constant, Field, FracOrder, Grid1D};
use crate::quadrature::whole_line_frac_laplacian;

/// Nondecreasing primitive with total mass `M`, sampled on cell faces:
/// `v_i = ∫_{-L-h/2}^{x_i - h/2} u`, so that `(v_{i+1} - v_i)/h` is the cell
/// average of `u` around node `x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveField {
    grid: Grid1D,
    values: Vec<f64>,
    total_mass: f64,
}

fn monotone_violation(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[0] - w[1]).max(0.0))
        .fold(0.0, f64::max)
}

impl PrimitiveField {
    pub fn new(grid: &Grid1D, values: Vec<f64>, total_mass: f64) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidGrid("primitive length mismatch".into()));
        }
        if values.iter().any(|v| !v.is_finite()) || !total_mass.is_finite() {
            return Err(Error::NonFinite("primitive"));
        }
        if total_mass < 0.0 {
            return Err(invalid("total_mass", "must be nonnegative"));
        }
        let tol = 1e-12 * total_mass.max(1.0);
        let viol = monotone_violation(&values);
        if viol > tol {
            return Err(Error::Monotonicity {
                violation: viol,
                tolerance: tol,
            });
        }
        if values.iter().any(|&v| v < -tol || v > total_mass + tol) {
            return Err(invalid("values", "must lie in [0, M]"));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            total_mass,
        })
    }

    /// Primitive of a Heaviside jump of height `mass` at `x0`.
    pub fn heaviside(grid: &Grid1D, mass: f64, x0: f64) -> Result<Self> {
        let values = faces(grid)
            .iter()
            .map(|&x| if x > x0 { mass } else { 0.0 })
            .collect();
        Self::new(grid, values, mass)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Distance of the end values from `0` and `M`.
    pub fn boundary_defect(&self) -> f64 {
        let last = *self.values.last().unwrap();
        self.values[0].abs().max((self.total_mass - last).abs())
    }

    /// Positions of the samples, `x_i - h/2`.
    pub fn faces(&self) -> Vec<f64> {
        faces(&self.grid)
    }

    /// Linear ramp through `v_0` and `v_0 + M` one period later.
    fn ramp(&self) -> Vec<f64> {
        let l = self.grid.half_length();
        let v0 = self.values[0];
        faces(&self.grid)
            .iter()
            .map(|&x| v0 + (self.total_mass - v0) * (x + l) / (2.0 * l))
            .collect()
    }

    /// Value at `x` by linear interpolation between faces.
    pub fn at(&self, x: f64) -> f64 {
        interp_linear(
            &self.grid,
            &self.values,
            x + 0.5 * self.grid.spacing(),
            0.0,
            self.total_mass,
        )
    }
}

fn faces(grid: &Grid1D) -> Vec<f64> {
    let h = grid.spacing();
    grid.nodes().into_iter().map(|x| x - 0.5 * h).collect()
}

pub(crate) fn interp_linear(grid: &Grid1D, values: &[f64], x: f64, left: f64, right: f64) -> f64 {
    let h = grid.spacing();
    let pos = (x + grid.half_length()) / h;
    if pos < 0.0 {
        return left;
    }
    let i = pos.floor() as usize;
    if i + 1 >= values.len() {
        return if i + 1 == values.len() && pos == i as f64 {
            values[i]
        } else {
            right
        };
    }
    let th = pos - i as f64;
    values[i] + th * (values[i + 1] - values[i])
}

/// Cumulative midpoint-rule primitive of a nonnegative density.
pub fn integrate_density(u: &Field) -> Result<PrimitiveField> {
    if u.values().iter().any(|&x| x < 0.0) {
        return Err(Error::NegativeInput("integrate_density"));
    }
    let h = u.grid().spacing();
    let mut v = Vec::with_capacity(u.values().len());
    let mut acc = 0.0;
    for &x in u.values() {
        v.push(acc);
        acc += h * x;
    }
    PrimitiveField::new(u.grid(), v, acc)
}

/// Forward difference of a primitive, treating `v(x + 2L) = v(x) + M`;
/// inverts [`integrate_density`] up to roundoff.
pub fn differentiate_primitive(v: &PrimitiveField) -> Result<Field> {
    let tol = 1e-10 * v.total_mass.max(1.0);
    let viol = monotone_violation(&v.values);
    if viol > tol {
        return Err(Error::Monotonicity {
            violation: viol,
            tolerance: tol,
        });
    }
    let h = v.grid.spacing();
    let vals = &v.values;
    let n = vals.len();
    let m = v.total_mass;
    let out = (0..n)
        .map(|i| {
            let right = if i + 1 < n { vals[i + 1] } else { vals[0] + m };
            (right - vals[i]) / h
        })
        .collect();
    Field::new(&v.grid, out)
}

/// Result of one step of the integrated scheme.
#[derive(Debug, Clone)]
pub struct IntegratedStep {
    pub field: PrimitiveField,
    /// Largest single correction applied by clamping and re-monotonization.
    pub repair: f64,
}

/// Upwind one-sided slope: left difference where `(-Δ)^α v > 0`, right
/// difference otherwise.
fn upwind_slopes(vals: &[f64], lap: &[f64], h: f64) -> Vec<f64> {
    let n = vals.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                return 0.0;
            }
            let d = if lap[i] > 0.0 {
                vals[i] - vals[i - 1]
            } else {
                vals[i + 1] - vals[i]
            };
            (d / h).abs()
        })
        .collect()
}

/// Caps each node update at the midpoint of its upwind increment.
///
/// With `c = dt |(-Δ)^α v| / h^{m-1}` the raw update `v_i + c d^{m-1}` is
/// decreasing in `v_i` for small increments `d` when `m < 2`; taking the
/// minimum with the midpoint restores monotonicity in every argument, and
/// neighbouring nodes can no longer cross.
fn cap_at_midpoints(vals: &[f64], flux: &mut [f64]) {
    let n = vals.len();
    for i in 1..n.saturating_sub(1) {
        let f = flux[i];
        if f > 0.0 {
            flux[i] = f.min(0.5 * (vals[i] - vals[i - 1]).max(0.0));
        } else if f < 0.0 {
            flux[i] = f.max(-0.5 * (vals[i + 1] - vals[i]).max(0.0));
        }
    }
}

/// Explicit monotone step `v ← v - dt |Dv|^{m-1} (-Δ)^α (v - ℓ)`; boundary
/// nodes are frozen, and the result is clamped to `[0, M]` and made
/// nondecreasing again.
pub fn step_integrated_tracked(
    v: &PrimitiveField,
    m: f64,
    alpha: FracOrder,
    dt: f64,
) -> Result<IntegratedStep> {
    if !(m > 1.0) {
        return Err(invalid("m", "must exceed 1"));
    }
    let ramp = v.ramp();
    let shifted: Vec<f64> = v.values.iter().zip(&ramp).map(|(a, b)| a - b).collect();
    let lap = frac_laplacian(&Field::from_raw(&v.grid, shifted), alpha)?;
    let lap = lap.values();
    let slopes = upwind_slopes(&v.values, lap, v.grid.spacing());
    let n = v.values.len();
    let mut flux: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                0.0
            } else {
                dt * slopes[i].powf(m - 1.0) * lap[i]
            }
        })
        .collect();
    cap_at_midpoints(&v.values, &mut flux);
    let mut out: Vec<f64> = v.values.iter().zip(&flux).map(|(a, f)| a - f).collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("step_integrated output"));
    }
    let mm = v.total_mass;
    let mut repair = 0.0f64;
    let mut run_max = f64::NEG_INFINITY;
    for x in out.iter_mut() {
        let mut y = x.clamp(0.0, mm);
        if y < run_max {
            y = run_max;
        }
        repair = repair.max((y - *x).abs());
        run_max = y;
        *x = y;
    }
    if repair > 1e-6 * mm.max(f64::MIN_POSITIVE) {
        return Err(Error::Monotonicity {
            violation: repair,
            tolerance: 1e-6 * mm,
        });
    }
    Ok(IntegratedStep {
        field: PrimitiveField {
            grid: v.grid.clone(),
            values: out,
            total_mass: mm,
        },
        repair,
    })
}

/// [`step_integrated_tracked`] without the repair record.
pub fn step_integrated(
    v: &PrimitiveField,
    m: f64,
    alpha: FracOrder,
    dt: f64,
) -> Result<PrimitiveField> {
    Ok(step_integrated_tracked(v, m, alpha, dt)?.field)
}

/// Step bound `safety (h/π)^{2α} / max |v_x|^{m-1}`.
pub fn integrated_dt(v: &PrimitiveField, m: f64, alpha: FracOrder, safety: f64) -> f64 {
    let h = v.grid.spacing();
    let smax = v
        .values
        .windows(2)
        .map(|w| ((w[1] - w[0]) / h).abs())
        .fold(0.0, f64::max);
    if smax == 0.0 {
        return f64::INFINITY;
    }
    safety * (h / std::f64::consts::PI).powf(2.0 * alpha.alpha()) / smax.powf(m - 1.0)
}

/// Snapshots of an integrated-model run.
#[derive(Debug, Clone)]
pub struct IntegratedRun {
    pub times: Vec<f64>,
    pub snapshots: Vec<PrimitiveField>,
    pub max_repair: f64,
    pub steps: usize,
}

impl IntegratedRun {
    pub fn at(&self, t: f64) -> Option<&PrimitiveField> {
        self.times
            .iter()
            .position(|&x| x == t)
            .map(|i| &self.snapshots[i])
    }
}

/// Evolves `v0` to `t_end` with [`integrated_dt`] steps (safety 0.4);
/// snapshots inside a step are linear in time.
pub fn simulate_integrated(
    v0: &PrimitiveField,
    m: f64,
    alpha: FracOrder,
    t_end: f64,
    snap_times: &[f64],
) -> Result<IntegratedRun> {
    if snap_times.windows(2).any(|w| !(w[0] < w[1]))
        || snap_times.iter().any(|&t| t < 0.0 || t > t_end)
    {
        return Err(invalid(
            "snap_times",
            "must increase strictly within [0, t_end]",
        ));
    }
    let mut run = IntegratedRun {
        times: Vec::new(),
        snapshots: Vec::new(),
        max_repair: 0.0,
        steps: 0,
    };
    let mut next = 0;
    while next < snap_times.len() && snap_times[next] <= 0.0 {
        run.times.push(snap_times[next]);
        run.snapshots.push(v0.clone());
        next += 1;
    }
    let mut t = 0.0;
    let mut v = v0.clone();
    while next < snap_times.len() {
        let remaining = t_end - t;
        let mut dt = integrated_dt(&v, m, alpha, 0.4).min(remaining);
        let last = dt >= remaining * (1.0 - 1e-12);
        if last {
            dt = remaining;
        }
        let step = step_integrated_tracked(&v, m, alpha, dt)?;
        run.max_repair = run.max_repair.max(step.repair);
        run.steps += 1;
        let vn = step.field;
        let t_new = if last { t_end } else { t + dt };
        while next < snap_times.len() && (snap_times[next] <= t_new || last) {
            let theta = ((snap_times[next] - t) / (t_new - t)).clamp(0.0, 1.0);
            let vals = v
                .values
                .iter()
                .zip(&vn.values)
                .map(|(a, b)| a + theta * (b - a))
                .collect();
            run.times.push(snap_times[next]);
            run.snapshots.push(PrimitiveField {
                grid: v.grid.clone(),
                values: vals,
                total_mass: v.total_mass,
            });
            next += 1;
        }
        v = vn;
        t = t_new;
    }
    Ok(run)
}

/// Exponents `γ = (m+2α)/(2-m)` and `b = 1/(m-1+2α)` of the barrier.
pub fn barrier_exponents(m: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(m > 1.0 && m < 2.0) {
        return Err(invalid(
            "m",
            format!("the barrier needs 1 < m < 2, got {m}"),
        ));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", "must lie in (0, 1]"));
    }
    Ok(((m + 2.0 * alpha) / (2.0 - m), 1.0 / (m - 1.0 + 2.0 * alpha)))
}

/// Parameters of `Φ_ε(x,t) = (t+τ)^{bγ}((|x|+ξ)^{-γ} + G(x)) - ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    pub m: f64,
    pub alpha: f64,
    pub x0: f64,
    pub xi: f64,
    pub eps_b: f64,
    pub tau: f64,
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
    pub b: f64,
}

impl BarrierParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: f64,
        alpha: f64,
        x0: f64,
        xi: f64,
        eps_b: f64,
        tau: f64,
        c1: f64,
        c2: f64,
    ) -> Result<Self> {
        let (gamma, b) = barrier_exponents(m, alpha)?;
        for (name, v) in [("xi", xi), ("eps_b", eps_b), ("tau", tau)] {
            if !(v > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        Ok(Self {
            m,
            alpha,
            x0,
            xi,
            eps_b,
            tau,
            c1,
            c2,
            gamma,
            b,
        })
    }

    fn growth(&self, t: f64) -> f64 {
        (t + self.tau).powf(self.b * self.gamma)
    }

    /// `(|x| + ξ)^{-γ}`.
    pub fn decay(&self, x: f64) -> f64 {
        (x.abs() + self.xi).powf(-self.gamma)
    }

    /// `Φ_ε(x, t)` with `G` given by `bump`.
    pub fn eval(&self, bump: &Bump, x: f64, t: f64) -> f64 {
        self.growth(t) * (self.decay(x) + bump.eval(x)) - self.eps_b
    }
}

/// Pointwise `Φ_ε` on the grid of `g`.
pub fn barrier_subsolution(bp: &BarrierParams, g: &Field, t: f64) -> Result<Field> {
    if !(bp.m < 2.0) {
        return Err(invalid("m", "the barrier needs m < 2"));
    }
    let a = bp.growth(t);
    let vals = g
        .grid()
        .nodes()
        .iter()
        .zip(g.values())
        .map(|(&x, &gv)| a * (bp.decay(x) + gv) - bp.eps_b)
        .collect();
    Field::new(g.grid(), vals)
}

/// Smooth bump `height · exp(1 - 1/(1 - y²))`, `y = (x - center)/half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub height: f64,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        let y = (x - self.center) / self.half_width;
        if y.abs() >= 1.0 {
            0.0
        } else {
            self.height * (1.0 - 1.0 / (1.0 - y * y)).exp()
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            height: self.height * factor,
            ..*self
        }
    }
}

/// The verified auxiliary function `G` of the barrier.
#[derive(Debug, Clone)]
pub struct BarrierG {
    pub bump: Bump,
    pub field: Field,
    /// `sup G`.
    pub c1: f64,
    /// Measured decay constant: `(-Δ)^s G ≤ -C2 |x|^{-(1+2s)}` for `x < x0`.
    pub c2: f64,
}

/// Checks `(-Δ)^s G(x) ≤ -C2 |x|^{-(1+2s)}` with `C2 > 0` at every node left
/// of `x0`, by direct quadrature on the line. Returns `(C1, C2)`.
pub fn verify_g(g: &Field, x0: f64, s: f64) -> Result<(f64, f64)> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", "must lie in (0, 1)"));
    }
    let grid = g.grid();
    let h = grid.spacing();
    let nodes = grid.nodes();
    let c = frac_laplacian_constant(s);
    let e = 1.0 + 2.0 * s;
    let mut c2 = f64::INFINITY;
    let mut any = false;
    for (i, &x) in nodes.iter().enumerate() {
        if x >= x0 {
            continue;
        }
        any = true;
        if g.values()[i] != 0.0 {
            return Err(Error::Verification(format!("G does not vanish at x = {x}")));
        }
        let integral: f64 = nodes
            .iter()
            .zip(g.values())
            .filter(|(_, &gv)| gv != 0.0)
            .map(|(&y, &gv)| gv / (x - y).abs().powf(e))
            .sum::<f64>()
            * h;
        let lap = -c * integral;
        c2 = c2.min(-lap * x.abs().powf(e));
    }
    if !any {
        return Err(Error::Verification("no nodes left of x0".into()));
    }
    if !(c2 > 0.0) {
        return Err(Error::Verification(format!(
            "(-Δ)^s G has no negative tail (C2 = {c2})"
        )));
    }
    Ok((g.max(), c2))
}

/// Unit-height bump on `[-x0+1, -x0+3]`, verified by [`verify_g`].
#[allow(non_snake_case)]
pub fn make_G(grid: &Grid1D, x0: f64, s: f64) -> Result<BarrierG> {
    if !(x0 < 0.0) || x0 <= -grid.half_length() {
        return Err(invalid("x0", "must be negative and inside the grid"));
    }
    if -x0 + 3.0 >= grid.half_length() {
        return Err(invalid("x0", "bump support leaves the grid"));
    }
    let bump = Bump {
        center: -x0 + 2.0,
        half_width: 1.0,
        height: 1.0,
    };
    let field = Field::from_fn(grid, |x| bump.eval(x))?;
    let (c1, c2) = verify_g(&field, x0, s)?;
    Ok(BarrierG {
        bump,
        field,
        c1,
        c2,
    })
}

/// `(Φ_ε)_t + |(Φ_ε)_x|^{m-1} (-Δ)^α Φ_ε` at `x`, for `G` given by `bump`.
///
/// The fractional term is evaluated on the whole line by quadrature.
pub fn barrier_inequality_residual(
    bp: &BarrierParams,
    bump: &Bump,
    x: f64,
    times: &[f64],
) -> Vec<f64> {
    let psi = |y: f64| bp.decay(y) + bump.eval(y);
    let kinks = [
        0.0,
        bump.center - bump.half_width,
        bump.center + bump.half_width,
    ];
    let lap = whole_line_frac_laplacian(&psi, x, bp.alpha, &kinks);
    let r = x.abs() + bp.xi;
    let dpsi = bp.gamma * r.powf(-bp.gamma - 1.0) + derivative_of_bump(bump, x).abs();
    let bg = bp.b * bp.gamma;
    times
        .iter()
        .map(|&t| {
            let tt = t + bp.tau;
            let phi_t = bg * tt.powf(bg - 1.0) * psi(x);
            let phi_x = tt.powf(bg) * dpsi;
            phi_t + phi_x.powf(bp.m - 1.0) * tt.powf(bg) * lap
        })
        .collect()
}

fn derivative_of_bump(bump: &Bump, x: f64) -> f64 {
    let y = (x - bump.center) / bump.half_width;
    if y.abs() >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - y * y;
    bump.eval(x) * (-2.0 * y / (q * q)) / bump.half_width
}

/// `U(x,t) = ((C t - (|x| - b))_+)²`.
pub fn parabola_supersolution(c: f64, b: f64, t: f64, grid: &Grid1D) -> Result<Field> {
    if !(c > 0.0 && b > 0.0) {
        return Err(invalid("C, b", "must be positive"));
    }
    Field::from_fn(grid, |x| {
        let r = c * t - (x.abs() - b);
        if r > 0.0 {
            r * r
        } else {
            0.0
        }
    })
}

/// Outcome of comparing a solution with a barrier from above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactReport {
    /// `min (U - u)` over the inspected nodes.
    pub margin: f64,
    pub location: f64,
    /// `u < U` at every inspected node.
    pub strict: bool,
}

/// `min(U - u)` over nodes where `U > 0` (the interior of the barrier's
/// support); nodes outside the support are excluded.
pub fn contact_check(u: &Field, upper: &Field) -> Result<ContactReport> {
    crate::grid::same_grid(u, upper)?;
    let mut margin = f64::INFINITY;
    let mut location = f64::NAN;
    let mut strict = true;
    for (i, (&a, &b)) in u.values().iter().zip(upper.values()).enumerate() {
        if b <= 0.0 {
            continue;
        }
        let d = b - a;
        if d <= 0.0 {
            strict = false;
        }
        if d < margin {
            margin = d;
            location = u.grid().x(i);
        }
    }
    if margin == f64::INFINITY {
        margin = 0.0;
    }
    Ok(ContactReport {
        margin,
        location,
        strict,
    })
}

/// Search space and probes for [`verify_barrier`].
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSearch {
    pub taus: Vec<f64>,
    pub xis: Vec<f64>,
    /// Points of the probe region `x < x0` where the inequality is checked.
    pub probe_x: Vec<f64>,
    /// Times in `[0, T]` where the inequality is checked.
    pub probe_t: Vec<f64>,
    /// Factor applied to the smallest admissible amplitude of `G`.
    pub safety: f64,
}

/// Outcome of the numerical barrier construction.
#[derive(Debug, Clone)]
pub struct BarrierReport {
    pub params: BarrierParams,
    pub g: BarrierG,
    /// `min v` over `x >= x0` and the recorded times.
    pub k1: f64,
    /// `min (v0 - Φ_ε(·, 0))` over all nodes.
    pub initial_margin: f64,
    /// `min (v - Φ_ε)` over `x >= x0` and the recorded times.
    pub right_margin: f64,
    /// Largest `(Φ_ε)_t + |(Φ_ε)_x|^{m-1} (-Δ)^α Φ_ε` on the probe grid.
    pub max_residual: f64,
    pub x1: f64,
    pub t1: f64,
    pub phi_x1: f64,
    pub v_x1: f64,
    pub pass: bool,
}

struct Candidate {
    score: f64,
    report: BarrierReport,
}

/// Builds `Φ_ε` for the run `run` of the integrated model and checks every
/// hypothesis of the comparison argument numerically: domination at `t = 0`,
/// domination on `x >= x0` for all recorded times up to `t1`, and the
/// subsolution inequality on the probe region. Among admissible `(τ, ξ)` the
/// one maximizing `Φ_ε(x1, t1)` is reported.
pub fn verify_barrier(
    run: &IntegratedRun,
    m: f64,
    alpha: f64,
    x0: f64,
    x1: f64,
    t1: f64,
    search: &BarrierSearch,
) -> Result<BarrierReport> {
    let (gamma, b) = barrier_exponents(m, alpha)?;
    if !(x1 < x0) {
        return Err(invalid("x1", "probe must lie left of x0"));
    }
    let v0 = run
        .at(0.0)
        .ok_or_else(|| invalid("run", "no snapshot at t = 0"))?;
    let vt1 = run
        .at(t1)
        .ok_or_else(|| invalid("t1", format!("no snapshot at {t1}")))?;
    let grid = v0.grid().clone();
    let unit = make_G(&grid, x0, alpha)?;
    let faces = faces(&grid);
    let recorded: Vec<(f64, &PrimitiveField)> = run
        .times
        .iter()
        .zip(&run.snapshots)
        .filter(|(&t, _)| t <= t1)
        .map(|(&t, v)| (t, v))
        .collect();
    let k1 = recorded
        .iter()
        .flat_map(|(_, v)| {
            faces
                .iter()
                .zip(v.values())
                .filter(|(&x, _)| x >= x0)
                .map(|(_, &y)| y)
        })
        .fold(f64::INFINITY, f64::min);
    let bg = b * gamma;
    let kinks = [
        0.0,
        unit.bump.center - unit.bump.half_width,
        unit.bump.center + unit.bump.half_width,
    ];
    // (-Δ)^α of the unit bump does not depend on (τ, ξ)
    let bump_lap: Vec<f64> = search
        .probe_x
        .iter()
        .map(|&x| whole_line_frac_laplacian(&|y| unit.bump.eval(y), x, alpha, &kinks[1..]))
        .collect();

    let mut best: Option<Candidate> = None;
    for &tau in &search.taus {
        for &xi in &search.xis {
            let decay = |y: f64| (y.abs() + xi).powf(-gamma);
            // residual = A + a B with B < 0 at each probe point
            let mut a_min = 0.0f64;
            let mut feasible = true;
            for (&x, &gl) in search.probe_x.iter().zip(&bump_lap) {
                let dl = whole_line_frac_laplacian(&decay, x, alpha, &kinks[..1]);
                let psi = decay(x);
                let dpsi = gamma * (x.abs() + xi).powf(-gamma - 1.0);
                for &t in &search.probe_t {
                    let tt = t + tau;
                    let grad = (tt.powf(bg) * dpsi).powf(m - 1.0) * tt.powf(bg);
                    let a_part = bg * tt.powf(bg - 1.0) * psi + grad * dl;
                    let b_part = grad * gl;
                    if a_part <= 0.0 {
                        continue;
                    }
                    if b_part >= 0.0 {
                        feasible = false;
                        break;
                    }
                    a_min = a_min.max(a_part / -b_part);
                }
                if !feasible {
                    break;
                }
            }
            if !feasible {
                continue;
            }
            let amp = search.safety * a_min.max(f64::MIN_POSITIVE);
            let g_field = unit.field.map(|v| v * amp)?;
            let bump = unit.bump.scaled(amp);
            let raw = |x: f64, t: f64| (t + tau).powf(bg) * (decay(x) + bump.eval(x));
            let eps_b = faces
                .iter()
                .zip(v0.values())
                .map(|(&x, &v)| raw(x, 0.0) - v)
                .fold(f64::NEG_INFINITY, f64::max)
                .max(0.0)
                * (1.0 + 1e-9)
                + f64::MIN_POSITIVE;
            let bp = BarrierParams::new(m, alpha, x0, xi, eps_b, tau, amp, amp * unit.c2)?;
            let phi_x1 = (t1 + tau).powf(bg) * decay(x1) - eps_b;
            if !(phi_x1 > 0.0) {
                continue;
            }
            let mut right_margin = f64::INFINITY;
            for (t, v) in &recorded {
                for (&x, &vv) in faces.iter().zip(v.values()) {
                    if x >= x0 {
                        right_margin = right_margin.min(vv - bp.eval(&bump, x, *t));
                    }
                }
            }
            if right_margin < 0.0 {
                continue;
            }
            let initial_margin = faces
                .iter()
                .zip(v0.values())
                .map(|(&x, v)| v - bp.eval(&bump, x, 0.0))
                .fold(f64::INFINITY, f64::min);
            let max_residual = search
                .probe_x
                .iter()
                .flat_map(|&x| barrier_inequality_residual(&bp, &bump, x, &search.probe_t))
                .fold(f64::NEG_INFINITY, f64::max);
            let v_x1 = vt1.at(x1);
            let pass = initial_margin >= 0.0
                && right_margin >= 0.0
                && max_residual <= 0.0
                && phi_x1 > 0.0
                && v_x1 >= phi_x1;
            let score = phi_x1 / eps_b;
            let report = BarrierReport {
                params: bp,
                g: BarrierG {
                    bump,
                    field: g_field,
                    c1: amp,
                    c2: amp * unit.c2,
                },
                k1,
                initial_margin,
                right_margin,
                max_residual,
                x1,
                t1,
                phi_x1,
                v_x1,
                pass,
            };
            let better = match &best {
                None => true,
                Some(c) => (pass && !c.report.pass) || (pass == c.report.pass && score > c.score),
            };
            if better {
                best = Some(Candidate { score, report });
            }
        }
    }
    best.map(|c| c.report).ok_or_else(|| {
        Error::Verification(format!(
            "no admissible (tau, xi) in the search space (k1 = {k1})"
        ))
    })
}
