//! Periodic grids, sampled fields and the nonlocal operators built on them.
//!
//! All spectral operators act on the discrete Fourier coefficients of a
//! field sampled on `[-L, L)`. The mollified operator is a direct
//! quadrature of a smoothed singular integral and is the only O(n²) routine
//! here.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Debug)]
struct GridData {
    half_length: f64,
    n: usize,
    spacing: f64,
    wavenumbers: Vec<f64>,
}

/// Uniform periodic grid on `[-L, L)` with `n` nodes.
///
/// Cloning is cheap; the wavenumber table is shared.
#[derive(Debug, Clone)]
pub struct Grid1D {
    data: Arc<GridData>,
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        self.data.n == other.data.n && self.data.half_length == other.data.half_length
    }
}

/// Builds the grid `x_i = -L + i h`, `h = 2L/n`, with wavenumbers in FFT order.
pub fn make_grid(half_length: f64, n: usize) -> Result<Grid1D> {
    if !(half_length > 0.0) || !half_length.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "half_length must be positive and finite, got {half_length}"
        )));
    }
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "n must be a power of two >= 16, got {n}"
        )));
    }
    let spacing = 2.0 * half_length / n as f64;
    let wavenumbers = (0..n)
        .map(|j| {
            let jj = if j < n / 2 {
                j as f64
            } else {
                j as f64 - n as f64
            };
            PI * jj / half_length
        })
        .collect();
    Ok(Grid1D {
        data: Arc::new(GridData {
            half_length,
            n,
            spacing,
            wavenumbers,
        }),
    })
}

impl Grid1D {
    pub fn half_length(&self) -> f64 {
        self.data.half_length
    }

    pub fn n(&self) -> usize {
        self.data.n
    }

    pub fn spacing(&self) -> f64 {
        self.data.spacing
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.data.wavenumbers
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.data.half_length + i as f64 * self.data.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.x(i)).collect()
    }

    /// Index of the node nearest to `x` (clamped to the grid).
    pub fn index_of(&self, x: f64) -> usize {
        let raw = ((x + self.half_length()) / self.spacing()).round();
        raw.clamp(0.0, (self.n() - 1) as f64) as usize
    }
}

/// Real samples of a function on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field samples"));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Builds a field from values already known to be finite.
    pub(crate) fn from_raw(grid: &Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn zeros(grid: &Grid1D) -> Self {
        Self::from_raw(grid, vec![0.0; grid.n()])
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Result<Self> {
        same_grid(self, other)?;
        Self::new(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid() == b.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Order `alpha` of `(-Δ)^alpha`, restricted to `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(invalid("alpha", format!("must lie in (0, 1], got {alpha}")))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(invalid("s", format!("must lie in (0, 1), got {s}")))
    }
}

fn check_finite(f: &Field, what: &'static str) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Forward DFT of real samples.
pub fn dft(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(&mut buf));
    buf
}

/// Inverse DFT returning the real part, normalized by `1/n`.
pub fn idft_real(mut spectrum: Vec<Complex64>) -> Vec<f64> {
    let n = spectrum.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut spectrum));
    let scale = 1.0 / n as f64;
    spectrum.into_iter().map(|c| c.re * scale).collect()
}

/// Applies the Fourier multiplier `symbol(k_j, j)` to the samples of `f`.
pub fn apply_multiplier(f: &Field, symbol: impl Fn(f64, usize) -> Complex64) -> Field {
    let mut spec = dft(f.values());
    for (j, (c, &k)) in spec.iter_mut().zip(f.grid().wavenumbers()).enumerate() {
        *c *= symbol(k, j);
    }
    Field::from_raw(f.grid(), idft_real(spec))
}

fn is_nyquist(grid: &Grid1D, j: usize) -> bool {
    j == grid.n() / 2
}

/// Spectral `(-Δ)^alpha`: multiplier `|k|^{2 alpha}`, zero mode annihilated.
pub fn frac_laplacian(f: &Field, order: FracOrder) -> Result<Field> {
    check_finite(f, "frac_laplacian input")?;
    let two_a = 2.0 * order.alpha();
    Ok(apply_multiplier(f, |k, _| {
        if k == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(k.abs().powf(two_a), 0.0)
        }
    }))
}

/// Spectral `∂x (-Δ)^{-s}`: multiplier `i k |k|^{-2s}`; zero and Nyquist modes dropped.
pub fn riesz_gradient(f: &Field, s: f64) -> Result<Field> {
    check_s(s)?;
    check_finite(f, "riesz_gradient input")?;
    let grid = f.grid().clone();
    Ok(apply_multiplier(f, |k, j| {
        if k == 0.0 || is_nyquist(&grid, j) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k * k.abs().powf(-2.0 * s))
        }
    }))
}

/// Spectral first derivative; the Nyquist mode is dropped.
pub fn spectral_derivative(f: &Field) -> Field {
    let grid = f.grid().clone();
    apply_multiplier(f, |k, j| {
        if is_nyquist(&grid, j) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k)
        }
    })
}

/// Spectral Laplacian `∂xx` (multiplier `-k²`).
pub fn spectral_laplacian(f: &Field) -> Field {
    apply_multiplier(f, |k, _| Complex64::new(-k * k, 0.0))
}

/// Spectral `∂x (-Δ)^{-1}` (multiplier `i/k`); zero and Nyquist modes dropped.
pub fn inverse_gradient(f: &Field) -> Field {
    let grid = f.grid().clone();
    apply_multiplier(f, |k, j| {
        if k == 0.0 || is_nyquist(&grid, j) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0 / k)
        }
    })
}

fn parseval_weight(grid: &Grid1D) -> f64 {
    let n = grid.n() as f64;
    2.0 * grid.half_length() / (n * n)
}

/// `∫ |(-Δ)^{alpha/2} f|²` via Parseval.
pub fn half_order_energy(f: &Field, order: FracOrder) -> Result<f64> {
    check_finite(f, "half_order_energy input")?;
    let spec = dft(f.values());
    let two_a = 2.0 * order.alpha();
    let sum: f64 = spec
        .iter()
        .zip(f.grid().wavenumbers())
        .filter(|(_, &k)| k != 0.0)
        .map(|(c, &k)| k.abs().powf(two_a) * c.norm_sqr())
        .sum();
    Ok(parseval_weight(f.grid()) * sum)
}

/// `∫ |(-Δ)^{-s/2} f|²` with the mean projected out.
///
/// The whole-line quantity has no periodic analogue on the zero mode, so
/// this is a monitoring surrogate.
pub fn neg_half_order_norm(f: &Field, s: f64) -> Result<f64> {
    check_s(s)?;
    check_finite(f, "neg_half_order_norm input")?;
    let spec = dft(f.values());
    let sum: f64 = spec
        .iter()
        .zip(f.grid().wavenumbers())
        .filter(|(_, &k)| k != 0.0)
        .map(|(c, &k)| k.abs().powf(-2.0 * s) * c.norm_sqr())
        .sum();
    Ok(parseval_weight(f.grid()) * sum)
}

/// Normalizing constant of `(-Δ)^sigma` on the line:
/// `4^σ Γ(1/2+σ) / (√π |Γ(-σ)|)`, with `|Γ(-σ)| = Γ(1-σ)/σ`.
pub fn frac_laplacian_constant(sigma: f64) -> f64 {
    let abs_gamma_neg = gamma(1.0 - sigma) / sigma;
    4f64.powf(sigma) * gamma(0.5 + sigma) / (PI.sqrt() * abs_gamma_neg)
}

/// Number of periodic images summed on each side by the mollified operator.
pub const DEFAULT_IMAGES: usize = 16;

/// Circulant kernel of the mollified operator
/// `L_ε f(x) = C ∫ (f(x) - f(y)) / (|x-y|² + ε²)^{(3-2s)/2} dy`.
#[derive(Debug, Clone)]
pub struct MollifiedKernel {
    grid: Grid1D,
    /// `row[d]` is the summed kernel weight (times `h`) at offset `d` nodes.
    row: Vec<f64>,
}

impl MollifiedKernel {
    pub fn new(grid: &Grid1D, s: f64, eps: f64, images: usize) -> Result<Self> {
        check_s(s)?;
        if !(eps > 0.0) {
            return Err(invalid("eps", format!("must be positive, got {eps}")));
        }
        let n = grid.n();
        let h = grid.spacing();
        let period = 2.0 * grid.half_length();
        let c = frac_laplacian_constant(1.0 - s);
        let expo = -(3.0 - 2.0 * s) / 2.0;
        let eps2 = eps * eps;
        let img = images as i64;
        // images beyond |p| = images: the kernel is flat across one period there,
        // so their weight `2C∫_R^∞ z^{-(3-2s)} dz` couples f_i to the mean of f
        let reach = (2 * images + 1) as f64 * grid.half_length();
        let sigma = 1.0 - s;
        let tail = c * reach.powf(-2.0 * sigma) / sigma / n as f64;
        let row = (0..n)
            .map(|d| {
                // minimal-image offset keeps the kernel circulant and symmetric
                let off = if d <= n / 2 {
                    d as f64
                } else {
                    d as f64 - n as f64
                };
                let base = off * h;
                (-img..=img)
                    .map(|p| {
                        let z = base + p as f64 * period;
                        (z * z + eps2).powf(expo)
                    })
                    .sum::<f64>()
                    * c
                    * h
                    + tail
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            row,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Direct O(n²) evaluation of `L_ε f` on every node.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        let row = &self.row;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let fi = f[i];
                let mut acc = 0.0;
                for (j, &fj) in f.iter().enumerate() {
                    let d = (i + n - j) % n;
                    acc += row[d] * (fi - fj);
                }
                acc
            })
            .collect()
    }

    /// Eigenvalues of the circulant operator, indexed like the wavenumbers.
    pub fn symbol(&self) -> Vec<f64> {
        let total: f64 = self.row.iter().sum();
        let spec = dft(&self.row);
        spec.iter().map(|c| total - c.re).collect()
    }
}

/// Mollified fractional Laplacian of order `1 - s` by direct quadrature.
pub fn mollified_frac_laplacian(f: &Field, s: f64, eps: f64) -> Result<Field> {
    check_finite(f, "mollified_frac_laplacian input")?;
    let kernel = MollifiedKernel::new(f.grid(), s, eps, DEFAULT_IMAGES)?;
    Ok(Field::from_raw(f.grid(), kernel.apply(f.values())))
}
