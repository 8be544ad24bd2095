//! Slow reference implementations used to calibrate the fast paths.
//!
//! Everything here is single-threaded and avoids the FFT: derivatives go
//! through a direct `O(N^2)` Fourier sum and the flux is a plain double loop
//! over `(x, a)` with a symmetric excluded ball `|a| < eps` and Richardson
//! extrapolation `eps -> 0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{MuskatError, Result};
use crate::graph::{flux_arctan, GraphState, QuadratureSpec};
use crate::grid::{resample, RealField};

/// `c_k = (1/N) sum_j f_j e^{-2 pi i k j / N}` in FFT order.
pub fn direct_dft(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in samples.iter().enumerate() {
                let phase = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                acc += Complex64::from_polar(v, phase);
            }
            acc / n as f64
        })
        .collect()
}

/// `f_x` from the direct Fourier sum, with the Nyquist mode dropped.
pub fn direct_derivative(f: &RealField) -> RealField {
    let grid = *f.grid();
    let n = grid.n_points();
    let c = direct_dft(f.samples());
    let samples = (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for (m, ck) in c.iter().enumerate() {
                if m == n / 2 {
                    continue;
                }
                let phase = 2.0 * PI * ((m * j) % n) as f64 / n as f64;
                acc +=
                    (Complex64::new(0.0, grid.xi(m)) * ck * Complex64::from_polar(1.0, phase)).re;
            }
            acc
        })
        .collect();
    RealField::new(grid, samples).expect("length matches grid")
}

/// Reference flux with its error estimate.
#[derive(Clone, Debug)]
pub struct PvFlux {
    pub flux: RealField,
    /// `max_x` of the last Richardson correction, in flux units.
    pub envelope: f64,
    /// Raw truncated integrals at `eps = 4h, 2h, h`, in flux units.
    pub ladder: [RealField; 3],
    /// `||I(4h) - I(2h)|| / ||I(2h) - I(h)||`
    pub ladder_ratio: f64,
}

/// Exclusion radii, in grid spacings.
pub const EPS_LADDER: [usize; 3] = [4, 2, 1];

/// Flux of the graph equation in its differentiated form,
/// `(rho/L) PV int (f_x(x) - f_x(x - a)) sin(2 pi a/L) / (cosh(2 pi d/L) - cos(2 pi a/L)) da`,
/// with `d = f(x) - f(x - a)`.
///
/// For each `eps` the integral over `eps <= |a| <= L/2` is taken by the
/// trapezoid rule on the grid offsets. Because the excluded ball is
/// symmetric, the truncation error is odd in `eps`,
/// `I(eps) = I + c1 eps + c3 eps^3 + ...`, and the three radii eliminate
/// `c1` and `c3`.
pub fn pv_flux_direct_report(state: &GraphState) -> Result<PvFlux> {
    let f = state.f();
    let grid = *f.grid();
    let n = grid.n_points();
    let length = grid.length();
    let h = grid.spacing();
    let fx = direct_derivative(f);
    let (fs, ps) = (f.samples(), fx.samples());
    let half = n / 2;
    let scale = state.rho_bar() / length;
    let kernel = |i: usize, src: usize, j: isize| -> f64 {
        let t = 2.0 * PI * j as f64 / n as f64;
        let d = fs[i] - fs[src];
        (ps[i] - ps[src]) * t.sin() / ((2.0 * PI * d / length).cosh() - t.cos())
    };
    let mut ladder = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut out = vec![0.0; n];
    let mut env: f64 = 0.0;
    let mut sym = vec![0.0; half + 1];
    for i in 0..n {
        for (j, s) in sym.iter_mut().enumerate().skip(1) {
            let back = (i + n - j) % n;
            let fwd = (i + j) % n;
            *s = kernel(i, back, j as isize) + kernel(i, fwd, -(j as isize));
        }
        let mut t = [0.0; 3];
        for (slot, &m) in EPS_LADDER.iter().enumerate() {
            // trapezoid on [m h, L/2] of the symmetrized integrand
            let mut acc = 0.5 * sym[m] + 0.5 * sym[half];
            for s in &sym[m + 1..half] {
                acc += s;
            }
            t[slot] = acc * h * scale;
            ladder[slot][i] = t[slot];
        }
        let a_coarse = 2.0 * t[1] - t[0];
        let a_fine = 2.0 * t[2] - t[1];
        let extrapolated = (8.0 * a_fine - a_coarse) / 7.0;
        env = env.max((extrapolated - a_fine).abs());
        out[i] = extrapolated;
    }
    if let Some(index) = out.iter().position(|v| !v.is_finite()) {
        return Err(MuskatError::NonFiniteFlux { index });
    }
    let diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    };
    let coarse = diff(&ladder[0], &ladder[1]);
    let fine = diff(&ladder[1], &ladder[2]);
    let ladder_ratio = if fine == 0.0 { 0.0 } else { coarse / fine };
    let [l0, l1, l2] = ladder;
    Ok(PvFlux {
        flux: RealField::new(grid, out)?,
        envelope: env,
        ladder: [
            RealField::new(grid, l0)?,
            RealField::new(grid, l1)?,
            RealField::new(grid, l2)?,
        ],
        ladder_ratio,
    })
}

/// See [`pv_flux_direct_report`].
pub fn pv_flux_direct(state: &GraphState) -> Result<RealField> {
    Ok(pv_flux_direct_report(state)?.flux)
}

/// Self-convergence of the fast flux under grid refinement.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConvergenceReport {
    /// Grids compared against the reference, ascending.
    pub resolutions: Vec<usize>,
    /// The finest grid, used as reference.
    pub reference: usize,
    /// Max-norm flux discrepancy at the shared grid points.
    pub errors: Vec<f64>,
    /// Least-squares slope of `-log(error)` against `log(N)` over the errors
    /// above the rounding floor; infinite when none is, NaN when only one is.
    /// Non-finite values serialize as the strings `"inf"` and `"nan"`.
    #[serde(serialize_with = "finite_or_string")]
    pub rate: f64,
}

fn finite_or_string<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// Relative level below which convergence errors are treated as resolved.
pub const ROUNDING_FLOOR: f64 = 1e-13;

/// Evaluate [`flux_arctan`] for `initial` resampled onto each grid and compare
/// with the finest one at the coarse grid points.
pub fn convergence_study(
    initial: &RealField,
    resolutions: &[usize],
    rho_bar: f64,
    quad: &QuadratureSpec,
) -> Result<ConvergenceReport> {
    let mut res: Vec<usize> = resolutions.to_vec();
    res.sort_unstable();
    res.dedup();
    if res.len() < 2 {
        return Err(MuskatError::InvalidArgument(
            "convergence study needs at least two resolutions".into(),
        ));
    }
    let flux_at = |n: usize| -> Result<RealField> {
        let f = resample(initial, n)?;
        flux_arctan(&GraphState::new(f, 0.0, rho_bar)?, quad)
    };
    let reference = *res.last().expect("non-empty");
    let fine = flux_at(reference)?;
    let mut errors = Vec::new();
    for &n in &res[..res.len() - 1] {
        let coarse = flux_at(n)?;
        let stride = reference / n;
        let err = coarse
            .samples()
            .iter()
            .enumerate()
            .fold(0.0_f64, |m, (j, v)| {
                m.max((v - fine.samples()[j * stride]).abs())
            });
        errors.push(err);
    }
    // discrepancies at this level are rounding noise, not truncation error
    let floor = ROUNDING_FLOOR * fine.max_abs();
    let points: Vec<(f64, f64)> = res
        .iter()
        .zip(&errors)
        .filter(|(_, e)| **e > floor)
        .map(|(n, e)| ((*n as f64).ln(), e.ln()))
        .collect();
    let rate = if points.is_empty() {
        f64::INFINITY
    } else if points.len() == 1 {
        f64::NAN
    } else {
        let m = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
        let my = points.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        -sxy / sxx
    };
    res.pop();
    Ok(ConvergenceReport {
        resolutions: res,
        reference,
        errors,
        rate,
    })
}

/// Numerical value of `int_0^inf e^{-d} cos(d A) dd` by adaptive
/// double-exponential quadrature on unit panels up to `d = 45`.
pub fn delta_cos_integral(a: f64) -> f64 {
    panel_integral(|d| (-d).exp() * (d * a).cos())
}

/// Numerical value of `int_0^inf e^{-d} sin^2(d A / 2) dd`.
pub fn delta_sin2_integral(a: f64) -> f64 {
    panel_integral(|d| (-d).exp() * (0.5 * d * a).sin().powi(2))
}

fn panel_integral(f: impl Fn(f64) -> f64) -> f64 {
    (0..45)
        .map(|p| quadrature::integrate(&f, p as f64, (p + 1) as f64, 1e-14).integral)
        .sum()
}
