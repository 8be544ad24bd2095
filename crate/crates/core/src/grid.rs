//! Uniform periodic grids, discrete Fourier transforms and Fourier multipliers.
//!
//! Samples `f_j = f(j h)`, `h = L / N`, are expanded as
//! `f(x) = sum_k c_k exp(i xi_k x)` with `xi_k = 2 pi k / L` and
//! `k in {-N/2, ..., N/2 - 1}`. Coefficients are stored in FFT order
//! (index `m` carries `k = m` for `m < N/2` and `k = m - N` otherwise), so the
//! Nyquist coefficient sits at `m = N/2` with `k = -N/2`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};

/// Uniform sample grid on a torus of length `length`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    n_points: usize,
    length: f64,
}

impl PeriodicGrid {
    pub fn new(n_points: usize, length: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(MuskatError::InvalidGrid(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(MuskatError::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        Ok(Self { n_points, length })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n_points as f64
    }

    /// Coordinate of sample `j`.
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Integer wavenumber carried by FFT-order index `m`.
    pub fn wavenumber_index(&self, m: usize) -> i64 {
        let n = self.n_points as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Angular frequency `xi = 2 pi k / L` at FFT-order index `m`.
    pub fn xi(&self, m: usize) -> f64 {
        2.0 * PI * self.wavenumber_index(m) as f64 / self.length
    }

    pub fn nyquist_index(&self) -> usize {
        self.n_points / 2
    }

    /// Same sample count on a torus rescaled to `length / lambda`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.n_points, self.length / lambda)
    }
}

/// Real samples of a function on a [`PeriodicGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: PeriodicGrid,
    samples: Vec<f64>,
    mean_removed: bool,
}

fn detect_mean_removed(samples: &[f64]) -> bool {
    let max = samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    mean.abs() <= 1e-12 * max || max == 0.0
}

impl RealField {
    pub fn new(grid: PeriodicGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(MuskatError::GridMismatch(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.n_points()
            )));
        }
        let mean_removed = detect_mean_removed(&samples);
        Ok(Self {
            grid,
            samples,
            mean_removed,
        })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            samples: vec![0.0; grid.n_points()],
            mean_removed: true,
        }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = (0..grid.n_points()).map(|j| f(grid.x(j))).collect();
        let mean_removed = detect_mean_removed(&samples);
        Self {
            grid,
            samples,
            mean_removed,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn mean_removed(&self) -> bool {
        self.mean_removed
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn remove_mean(&self) -> Self {
        let mean = self.mean();
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|v| v - mean).collect(),
            mean_removed: true,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = self.samples.iter().map(|&v| f(v)).collect();
        let mean_removed = detect_mean_removed(&samples);
        Self {
            grid: self.grid,
            samples,
            mean_removed,
        }
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &RealField, b: f64) -> Result<Self> {
        self.check_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(u, v)| a * u + b * v)
            .collect();
        RealField::new(self.grid, samples)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|v| a * v).collect(),
            mean_removed: self.mean_removed,
        }
    }

    /// Pointwise product; no dealiasing.
    pub fn mul(&self, other: &RealField) -> Result<Self> {
        self.check_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(u, v)| u * v)
            .collect();
        RealField::new(self.grid, samples)
    }

    /// Cyclic shift by a whole number of grid points: `g(x_j) = f(x_{j - shift})`.
    pub fn roll(&self, shift: isize) -> Self {
        let n = self.samples.len() as isize;
        let samples = (0..n)
            .map(|j| self.samples[(j - shift).rem_euclid(n) as usize])
            .collect();
        Self {
            grid: self.grid,
            samples,
            mean_removed: self.mean_removed,
        }
    }

    pub fn max_abs_diff(&self, other: &RealField) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub(crate) fn check_grid(&self, other: &RealField) -> Result<()> {
        if self.grid != other.grid {
            return Err(MuskatError::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }
}

/// Fourier-series coefficients `c_k` of a real field, stored in FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: PeriodicGrid,
    coefficients: Vec<Complex64>,
}

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry((n, forward))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if forward {
                    planner.plan_fft_forward(n)
                } else {
                    planner.plan_fft_inverse(n)
                }
            })
            .clone()
    })
}

impl SpectralField {
    pub fn new(grid: PeriodicGrid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.n_points() {
            return Err(MuskatError::GridMismatch(format!(
                "{} coefficients for a grid of {} points",
                coefficients.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, coefficients })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Coefficients in FFT order.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Coefficient of integer wavenumber `k` in `-N/2..N/2`.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        let n = self.grid.n_points() as i64;
        assert!(
            (-n / 2..n / 2).contains(&k),
            "wavenumber {k} outside -N/2..N/2"
        );
        self.coefficients[k.rem_euclid(n) as usize]
    }

    /// Multiply every coefficient by `m(index, xi)`.
    pub fn apply(&self, m: impl Fn(usize, f64) -> Complex64) -> Self {
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| c * m(i, self.grid.xi(i)))
            .collect();
        Self {
            grid: self.grid,
            coefficients,
        }
    }

    pub fn inverse(&self) -> RealField {
        let mut buf = self.coefficients.clone();
        plan(buf.len(), false).process(&mut buf);
        let samples: Vec<f64> = buf.into_iter().map(|c| c.re).collect();
        let mean_removed = detect_mean_removed(&samples);
        RealField {
            grid: self.grid,
            samples,
            mean_removed,
        }
    }

    /// `L * sum_k |c_k|^2`, equal to the discrete `||f||_{L^2}^2`.
    pub fn energy(&self) -> f64 {
        self.grid.length() * self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Value of the real trigonometric interpolant at an arbitrary point.
    /// The Nyquist term contributes `c_{N/2} cos(xi_N x)`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let nyq = self.grid.nyquist_index();
        let mut acc = self.coefficients[0].re;
        for m in 1..nyq {
            let phase = self.grid.xi(m) * x;
            let c = self.coefficients[m];
            // conjugate partner at N - m doubles the real part
            acc += 2.0 * (c.re * phase.cos() - c.im * phase.sin());
        }
        acc + self.coefficients[nyq].re * (self.grid.xi(nyq) * x).cos()
    }
}

/// Discrete Fourier transform normalized so that `f(x) = sum_k c_k e^{i xi_k x}`.
pub fn forward_transform(f: &RealField) -> SpectralField {
    let n = f.samples.len();
    let mut buf: Vec<Complex64> = f.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n, true).process(&mut buf);
    let inv_n = 1.0 / n as f64;
    for c in &mut buf {
        *c *= inv_n;
    }
    SpectralField {
        grid: f.grid,
        coefficients: buf,
    }
}

fn multiplier(f: &RealField, m: impl Fn(usize, f64) -> Complex64) -> RealField {
    forward_transform(f).apply(m).inverse()
}

/// `Lambda^s f`, multiplier `|xi|^s`, with the zero mode mapped to 0 for `s > 0`.
pub fn apply_lambda_s(f: &RealField, s: f64) -> Result<RealField> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(MuskatError::InvalidArgument(format!(
            "Lambda^s requires s >= 0, got {s}"
        )));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(multiplier(f, |i, xi| {
        if i == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(xi.abs().powf(s), 0.0)
        }
    }))
}

/// Hilbert transform, multiplier `-i sgn(xi)`; zero and Nyquist modes map to 0.
pub fn hilbert(f: &RealField) -> RealField {
    let nyq = f.grid.nyquist_index();
    multiplier(f, |i, xi| {
        if i == 0 || i == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -xi.signum())
        }
    })
}

/// `d^order f / dx^order` for `order` in `1..=4`.
pub fn derivative(f: &RealField, order: u32) -> Result<RealField> {
    if order == 0 || order > 4 {
        return Err(MuskatError::InvalidArgument(format!(
            "derivative order must be in 1..=4, got {order}"
        )));
    }
    let nyq = f.grid.nyquist_index();
    let odd = order % 2 == 1;
    Ok(multiplier(f, |i, xi| {
        if odd && i == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi).powu(order)
        }
    }))
}

/// Phase factor realizing `f(x) -> f(x - y)` on coefficient `i`.
/// The Nyquist mode keeps realness through `cos(xi_N y)`.
pub(crate) fn shift_factor(grid: &PeriodicGrid, i: usize, xi: f64, y: f64) -> Complex64 {
    if i == grid.nyquist_index() {
        Complex64::new((xi * y).cos(), 0.0)
    } else {
        Complex64::from_polar(1.0, -xi * y)
    }
}

/// Spectral translation `g(x) = f(x - y)` for arbitrary real `y`.
pub fn translate(f: &RealField, y: f64) -> RealField {
    let grid = f.grid;
    multiplier(f, |i, xi| shift_factor(&grid, i, xi, y))
}

/// Spectral resampling onto `n_points` samples of the same torus (zero padding
/// or truncation in Fourier space).
pub fn resample(f: &RealField, n_points: usize) -> Result<RealField> {
    let target = PeriodicGrid::new(n_points, f.grid.length())?;
    let src = forward_transform(f);
    let n_src = f.grid.n_points() as i64;
    let n_dst = n_points as i64;
    let mut coefficients = vec![Complex64::new(0.0, 0.0); n_points];
    let kmax = (n_src.min(n_dst)) / 2;
    for k in -kmax..kmax {
        let mut c = src.coefficient(k);
        // a Nyquist mode of either grid is split or folded symmetrically
        if k == -kmax && n_src != n_dst {
            if n_src < n_dst {
                coefficients[(kmax).rem_euclid(n_dst) as usize] += c * 0.5;
                c *= 0.5;
            } else {
                c += src.coefficient(kmax);
            }
        }
        coefficients[k.rem_euclid(n_dst) as usize] += c;
    }
    Ok(SpectralField::new(target, coefficients)?.inverse())
}
