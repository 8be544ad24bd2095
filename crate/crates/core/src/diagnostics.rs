//! Verdicts on the decay and energy statements, computed from a [`RunLog`].
//!
//! Every verdict is a pure function of the log. Tolerances are the ones
//! stated next to each function; `worst_margin` is measured in the same
//! units so that `Violated` always means `worst_margin > tolerance`.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Mode;
use crate::corpus::random_band_limited;
use crate::curve::{dalpha_v1_at_critical, InterfaceCurve, DEFAULT_CRITICAL_TOL};
use crate::error::Result;
use crate::graph::{symmetric_node_sum, QuadratureSpec};
use crate::grid::{apply_lambda_s, derivative, forward_transform, PeriodicGrid, RealField};
use crate::norms::NormReport;
use crate::runlog::{RunLog, RunStatus, SnapshotData};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoremId {
    MaxPrinciple,
    L2Balance,
    SlopeDecay,
    WienerDecay,
    H12Inequality,
    BlowupCriterion,
    Turning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    Holds,
    Violated,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub theorem_id: TheoremId,
    pub status: VerdictStatus,
    pub worst_margin: f64,
    pub details: String,
}

impl TheoremVerdict {
    fn not_applicable(theorem_id: TheoremId, why: impl Into<String>) -> Self {
        Self {
            theorem_id,
            status: VerdictStatus::NotApplicable,
            worst_margin: 0.0,
            details: why.into(),
        }
    }

    fn judged(theorem_id: TheoremId, worst_margin: f64, tol: f64, details: String) -> Self {
        let status = if worst_margin > tol || worst_margin.is_nan() {
            VerdictStatus::Violated
        } else {
            VerdictStatus::Holds
        };
        Self {
            theorem_id,
            status,
            worst_margin,
            details,
        }
    }
}

/// Relative tolerance of the maximum principle.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-6;
/// Relative tolerance of the energy balance.
pub const L2_BALANCE_TOL: f64 = 1e-3;
/// Absolute slack on the monotone slope and Wiener columns.
pub const MONOTONE_TOL: f64 = 1e-6;
pub const SLOPE_THRESHOLD: f64 = 1.0;
pub const WIENER_THRESHOLD: f64 = 1.0 / 3.0;
pub const WIENER_CLASSICAL_THRESHOLD: f64 = 0.2;
/// Reference value for the implied constant of the `H^{1/2}` estimate.
pub const H12_CORPUS_CONSTANT: f64 = 10.0;

fn stable_graph(log: &RunLog) -> std::result::Result<(), String> {
    if log.config.mode != Mode::Graph {
        return Err("not a graph run".into());
    }
    if log.config.rho_bar <= 0.0 {
        return Err(format!("unstable regime, rho_bar = {}", log.config.rho_bar));
    }
    if log.reports.is_empty() {
        return Err("no norm reports".into());
    }
    Ok(())
}

/// Largest excess of `values[i]` over `min_{j<i} values[j]`, with its time.
fn max_rise(reports: &[NormReport], column: impl Fn(&NormReport) -> f64) -> (f64, f64) {
    let mut lowest = f64::INFINITY;
    let mut worst = (0.0, reports.first().map_or(0.0, |r| r.time));
    for r in reports {
        let v = column(r);
        if v - lowest > worst.0 || v.is_nan() {
            worst = (v - lowest, r.time);
        }
        lowest = lowest.min(v);
    }
    worst
}

/// `||f(t)||_inf` nonincreasing up to `1e-6 ||f_0||_inf`.
pub fn verdict_max_principle(log: &RunLog) -> TheoremVerdict {
    let id = TheoremId::MaxPrinciple;
    if let Err(why) = stable_graph(log) {
        return TheoremVerdict::not_applicable(id, why);
    }
    let l0 = log.reports[0].l_inf;
    let (rise, at) = max_rise(&log.reports, |r| r.l_inf);
    let tol = MAX_PRINCIPLE_TOL * l0;
    TheoremVerdict::judged(
        id,
        rise,
        tol,
        format!(
            "l_inf(0) = {l0:.6e}; largest rise {rise:.3e} at t = {at:.6e}; tolerance {tol:.3e}"
        ),
    )
}

/// Space integral of the periodic dissipation density
/// `log(1 + sinh^2(pi d / L) / sin^2(pi a / L))`, `d = f(x) - f(x - a)`, over
/// `x` and one period of `a`.
///
/// On the line this is `log(1 + ((f(x) - f(y)) / (x - y))^2)` summed over all
/// periodic images. The diagonal is the limit `log(1 + f_x^2)`; the trapezoid
/// rule on grid offsets is spectrally accurate because the density is smooth.
pub fn dissipation(f: &RealField) -> f64 {
    let grid = *f.grid();
    let n = grid.n_points();
    let length = grid.length();
    let h = grid.spacing();
    let fx = derivative(f, 1).expect("order 1 is valid");
    let diag: Vec<f64> = fx
        .samples()
        .iter()
        .map(|p| p.mul_add(*p, 1.0).ln())
        .collect();
    let s2: Vec<f64> = (0..=n / 2)
        .map(|j| (PI * j as f64 / n as f64).sin().powi(2))
        .collect();
    let fs = f.samples();
    let g = symmetric_node_sum(diag, n / 2, |i, j| {
        let d = fs[i] - fs[(i + n - j) % n];
        ((PI * d / length).sinh().powi(2) / s2[j]).ln_1p()
    });
    h * h * g.iter().sum::<f64>()
}

fn l2_squared(f: &RealField) -> f64 {
    f.grid().spacing() * f.samples().iter().map(|v| v * v).sum::<f64>()
}

/// Per-snapshot terms of the energy balance.
#[derive(Clone, Debug, PartialEq)]
pub struct L2Balance {
    pub times: Vec<f64>,
    pub l2_squared: Vec<f64>,
    pub dissipation: Vec<f64>,
    /// `||f(t)||^2 + (rho/pi) int_0^t D - ||f_0||^2`, time integral by trapezoid.
    pub residual: Vec<f64>,
}

pub fn l2_balance(log: &RunLog) -> L2Balance {
    let rho = log.config.rho_bar;
    let mut out = L2Balance {
        times: Vec::new(),
        l2_squared: Vec::new(),
        dissipation: Vec::new(),
        residual: Vec::new(),
    };
    let mut integral = 0.0;
    for (t, f) in log.graph_snapshots() {
        let e = l2_squared(f);
        let d = dissipation(f);
        if let (Some(&t0), Some(&d0)) = (out.times.last(), out.dissipation.last()) {
            integral += 0.5 * (t - t0) * (d + d0);
        }
        out.times.push(t);
        out.l2_squared.push(e);
        out.dissipation.push(d);
        out.residual
            .push(e + rho / PI * integral - out.l2_squared[0]);
    }
    out
}

/// `||f(t)||^2 + (rho/pi) int_0^t D <= ||f_0||^2`, checked at every snapshot.
///
/// For smooth solutions the balance is an equality, so the signed residual is
/// also reported. `worst_margin` is the largest residual relative to
/// `||f_0||^2`; a negative dissipation value is a violation on its own.
pub fn verdict_l2_balance(log: &RunLog, _quad: &QuadratureSpec) -> TheoremVerdict {
    let id = TheoremId::L2Balance;
    if let Err(why) = stable_graph(log) {
        return TheoremVerdict::not_applicable(id, why);
    }
    let b = l2_balance(log);
    if b.times.len() < 2 {
        return TheoremVerdict::not_applicable(id, "fewer than two snapshots");
    }
    let e0 = b.l2_squared[0];
    let scale = if e0 > 0.0 { e0 } else { 1.0 };
    let worst = b.residual.iter().fold(0.0_f64, |m, r| m.max(r / scale));
    let min_d = b.dissipation.iter().copied().fold(f64::INFINITY, f64::min);
    let last = b.residual.last().copied().unwrap_or(0.0) / scale;
    let details = format!(
        "||f0||^2 = {e0:.6e}; final relative residual {last:.3e}; min dissipation {min_d:.3e}; {} snapshots",
        b.times.len()
    );
    if min_d < 0.0 {
        return TheoremVerdict {
            theorem_id: id,
            status: VerdictStatus::Violated,
            worst_margin: worst.max(-min_d),
            details,
        };
    }
    TheoremVerdict::judged(id, worst, L2_BALANCE_TOL, details)
}

/// `||f_x(t)||_inf <= ||f_x(0)||_inf` when the initial slope is below 1.
pub fn verdict_slope(log: &RunLog) -> TheoremVerdict {
    let id = TheoremId::SlopeDecay;
    if let Err(why) = stable_graph(log) {
        return TheoremVerdict::not_applicable(id, why);
    }
    let k0 = log.reports[0].lipschitz;
    if k0 >= SLOPE_THRESHOLD {
        return TheoremVerdict::not_applicable(id, format!("initial slope {k0:.6} is not below 1"));
    }
    let worst = log.reports.iter().fold(0.0_f64, |m, r| {
        if r.lipschitz.is_nan() {
            f64::NAN
        } else {
            m.max(r.lipschitz - k0)
        }
    });
    TheoremVerdict::judged(
        id,
        worst,
        MONOTONE_TOL,
        format!("initial slope {k0:.6e}; largest excess {worst:.3e}"),
    )
}

/// `||f(t)||_{A^1}` nonincreasing when it starts below 1/3.
pub fn verdict_wiener(log: &RunLog) -> TheoremVerdict {
    let id = TheoremId::WienerDecay;
    if let Err(why) = stable_graph(log) {
        return TheoremVerdict::not_applicable(id, why);
    }
    let w0 = log.reports[0].wiener1;
    if w0 >= WIENER_THRESHOLD {
        return TheoremVerdict::not_applicable(
            id,
            format!("initial A^1 norm {w0:.6} is not below 1/3"),
        );
    }
    let (rise, at) = max_rise(&log.reports, |r| r.wiener1);
    let classical = if w0 < WIENER_CLASSICAL_THRESHOLD {
        "also below the classical threshold 0.2"
    } else {
        "not below the classical threshold 0.2"
    };
    TheoremVerdict::judged(
        id,
        rise,
        MONOTONE_TOL,
        format!("initial A^1 norm {w0:.6e}, {classical}; largest rise {rise:.3e} at t = {at:.6e}"),
    )
}

/// Both sides of the `H^{1/2}` energy estimate along a run.
#[derive(Clone, Debug, PartialEq)]
pub struct H12Trace {
    pub times: Vec<f64>,
    /// Running max of the slope.
    pub k: Vec<f64>,
    /// Running max of `||f||_{H^{3/2}}`.
    pub x: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `lhs / rhs`, taken as 0 where both vanish.
    pub c_impl: Vec<f64>,
}

/// `P(X) = X + X^2`.
pub fn p_poly(x: f64) -> f64 {
    x + x * x
}

/// `LHS(T) = ||f(T)||^2_{H^{1/2}} + pi/(1+K^2) int_0^T ||f||^2_{H^1}` and
/// `RHS(T) = ||f_0||^2_{H^{1/2}} + P(X) int_0^T ||f||^2_{H^1}`, with
/// `K` and `X` the running maxima of the slope and of `||f||_{H^{3/2}}`.
/// Time integrals use the trapezoid rule on the report instants.
pub fn h12_trace(reports: &[NormReport]) -> H12Trace {
    let mut tr = H12Trace {
        times: Vec::new(),
        k: Vec::new(),
        x: Vec::new(),
        lhs: Vec::new(),
        rhs: Vec::new(),
        c_impl: Vec::new(),
    };
    let Some(first) = reports.first() else {
        return tr;
    };
    let a0 = first.hs_half.powi(2);
    let (mut k, mut x, mut integral) = (0.0_f64, 0.0_f64, 0.0);
    let mut prev: Option<&NormReport> = None;
    for r in reports {
        if let Some(p) = prev {
            integral += 0.5 * (r.time - p.time) * (r.hs_one.powi(2) + p.hs_one.powi(2));
        }
        k = k.max(r.lipschitz);
        x = x.max(r.hs_three_half);
        let lhs = r.hs_half.powi(2) + PI / (1.0 + k * k) * integral;
        let rhs = a0 + p_poly(x) * integral;
        let c = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        tr.times.push(r.time);
        tr.k.push(k);
        tr.x.push(x);
        tr.lhs.push(lhs);
        tr.rhs.push(rhs);
        tr.c_impl.push(c);
        prev = Some(r);
    }
    tr
}

/// Implied constant of the `H^{1/2}` estimate; holds while it stays below
/// [`H12_CORPUS_CONSTANT`]. Only defined for the normalization `rho_bar = pi`.
pub fn verdict_h12_inequality(log: &RunLog) -> TheoremVerdict {
    let id = TheoremId::H12Inequality;
    if let Err(why) = stable_graph(log) {
        return TheoremVerdict::not_applicable(id, why);
    }
    if (log.config.rho_bar - PI).abs() > 1e-12 {
        return TheoremVerdict::not_applicable(
            id,
            format!("rho_bar = {} is not pi", log.config.rho_bar),
        );
    }
    let tr = h12_trace(&log.reports);
    let worst = tr.c_impl.iter().fold(
        0.0_f64,
        |m, c| if c.is_nan() { f64::NAN } else { m.max(*c) },
    );
    let last = tr.times.len() - 1;
    TheoremVerdict::judged(
        id,
        worst,
        H12_CORPUS_CONSTANT,
        format!(
            "C_impl max {worst:.6e}; at T = {:.6e}: LHS {:.6e}, RHS {:.6e}, K {:.6e}, sup H^3/2 {:.6e}",
            tr.times[last], tr.lhs[last], tr.rhs[last], tr.k[last], tr.x[last]
        ),
    )
}

/// No blow-up indicated while the proxy stays below the configured threshold.
pub fn verdict_blowup(log: &RunLog) -> TheoremVerdict {
    let id = TheoremId::BlowupCriterion;
    if log.config.mode != Mode::Graph {
        return TheoremVerdict::not_applicable(id, "not a graph run");
    }
    let threshold = log.config.blowup_threshold;
    let worst = log.reports.iter().fold(0.0_f64, |m, r| {
        if r.blowup_proxy.is_nan() {
            f64::NAN
        } else {
            m.max(r.blowup_proxy)
        }
    });
    let crossing = log
        .reports
        .windows(2)
        .find(|w| w[1].blowup_proxy >= threshold || !w[1].blowup_proxy.is_finite())
        .map(|w| {
            let (a, b) = (w[0].blowup_proxy, w[1].blowup_proxy);
            if b.is_finite() && b > a {
                w[0].time + (threshold - a) / (b - a) * (w[1].time - w[0].time)
            } else {
                w[1].time
            }
        })
        .or_else(|| {
            log.reports
                .first()
                .filter(|r| r.blowup_proxy >= threshold)
                .map(|r| r.time)
        });
    let details = match crossing {
        Some(t) => format!("proxy crossed {threshold:.3e} at t = {t:.6e}; max {worst:.6e}"),
        None => format!("proxy max {worst:.6e} below {threshold:.3e}"),
    };
    TheoremVerdict::judged(id, worst, threshold, details)
}

/// Consistency of the turning criterion: the sign of `d_a v_1` at the
/// critical point of the first snapshot predicts whether the run turned.
///
/// `worst_margin` is 0 when the prediction matches and `|d_a v_1|` otherwise.
pub fn verdict_turning(log: &RunLog, quad: &QuadratureSpec) -> TheoremVerdict {
    let id = TheoremId::Turning;
    if log.config.mode != Mode::Curve {
        return TheoremVerdict::not_applicable(id, "not a curve run");
    }
    let Some(SnapshotData::Curve { grid, z1, z2 }) = log.snapshots.first().map(|s| &s.data) else {
        return TheoremVerdict::not_applicable(id, "no initial curve snapshot");
    };
    let curve = match InterfaceCurve::new(*grid, z1.clone(), z2.clone(), 0.0, log.config.rho_bar) {
        Ok(c) => c,
        Err(e) => return TheoremVerdict::not_applicable(id, e.to_string()),
    };
    let dv1 = match dalpha_v1_at_critical(&curve, quad, DEFAULT_CRITICAL_TOL) {
        Ok(v) => v,
        Err(e) => return TheoremVerdict::not_applicable(id, e.to_string()),
    };
    let turned = log.status == RunStatus::Turned || log.turning_time.is_some();
    let predicted = dv1 < 0.0;
    let margin = if predicted == turned { 0.0 } else { dv1.abs() };
    let outcome = match log.turning_time {
        Some(t) => format!("turned at t = {t:.6e}"),
        None => "did not turn".into(),
    };
    TheoremVerdict::judged(
        id,
        margin,
        0.0,
        format!("d_a v1 at critical point {dv1:.6e}; {outcome}"),
    )
}

/// Every verdict that applies to the log's mode, in a fixed order.
pub fn all_verdicts(log: &RunLog) -> Vec<TheoremVerdict> {
    let quad = &log.config.quad;
    match log.config.mode {
        Mode::Curve => vec![verdict_turning(log, quad)],
        _ => vec![
            verdict_max_principle(log),
            verdict_l2_balance(log, quad),
            verdict_slope(log),
            verdict_wiener(log),
            verdict_h12_inequality(log),
            verdict_blowup(log),
        ],
    }
}

/// `int (f(x - a) + f(x + a) - 2 f(x)) (pi/L)^2 / sin^2(pi a / L) da` over one
/// period, by the trapezoid rule on grid offsets with the `a = 0` node
/// replaced by its limit `f_xx(x)`.
///
/// The weight is the periodization of `1/a^2`, so the result should equal
/// `-2 pi Lambda f`.
pub fn second_difference_integral(f: &RealField) -> RealField {
    let grid = *f.grid();
    let n = grid.n_points();
    let h = grid.spacing();
    let w: Vec<f64> = (0..n)
        .map(|j| (PI / grid.length()).powi(2) / (PI * j as f64 / n as f64).sin().powi(2))
        .collect();
    let fxx = derivative(f, 2).expect("order 2 is valid");
    let fs = f.samples();
    let out = (0..n)
        .map(|i| {
            let mut acc = fxx.samples()[i];
            for (j, wj) in w.iter().enumerate().skip(1) {
                acc += (fs[(i + n - j) % n] + fs[(i + j) % n] - 2.0 * fs[i]) * wj;
            }
            acc * h
        })
        .collect();
    RealField::new(grid, out).expect("length matches grid")
}

/// The same integral at one point, by Gauss-Legendre panels on `(0, L/2)`
/// with `f` evaluated through its trigonometric interpolant.
pub fn second_difference_integral_at(f: &RealField, x: f64, panels: usize) -> f64 {
    let spec = forward_transform(f);
    let length = f.grid().length();
    let gl = GaussLegendre::new(24).expect("degree is valid");
    let f0 = spec.evaluate(x);
    let width = 0.5 * length / panels as f64;
    let integrand = |a: f64| {
        (spec.evaluate(x - a) + spec.evaluate(x + a) - 2.0 * f0) * (PI / length).powi(2)
            / (PI * a / length).sin().powi(2)
    };
    // the integrand is even in a
    2.0 * (0..panels)
        .map(|p| gl.integrate(p as f64 * width, (p + 1) as f64 * width, integrand))
        .sum::<f64>()
}

/// Both sides of `(f(x+a) - f(x-a))/a = (1/a) int_0^a (f_x(x+s) + f_x(x-s) - 2 f_x(x)) ds + 2 f_x(x)`.
pub fn diff_rewrite_sides(f: &RealField, x: f64, a: f64) -> (f64, f64) {
    let spec = forward_transform(f);
    let dspec = forward_transform(&derivative(f, 1).expect("order 1 is valid"));
    let lhs = (spec.evaluate(x + a) - spec.evaluate(x - a)) / a;
    let p0 = dspec.evaluate(x);
    let gl = GaussLegendre::new(48).expect("degree is valid");
    let inner = gl.integrate(0.0, a, |s| {
        dspec.evaluate(x + s) + dspec.evaluate(x - s) - 2.0 * p0
    });
    (lhs, inner / a + 2.0 * p0)
}

/// Errors of the two kernel identities on a seeded random corpus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelIdentityErrors {
    /// Grid trapezoid vs `-2 pi Lambda f`, relative to `max |2 pi Lambda f|`.
    pub second_difference: f64,
    /// Gauss-Legendre at sample points vs `-2 pi Lambda f`, same scale.
    pub second_difference_adaptive: f64,
    /// Largest `|lhs - rhs| / max(1, |lhs|)` of the `D` rewriting.
    pub diff_rewrite: f64,
}

impl KernelIdentityErrors {
    pub fn max_error(&self) -> f64 {
        self.second_difference
            .max(self.second_difference_adaptive)
            .max(self.diff_rewrite)
    }
}

pub const KERNEL_CHECK_POINTS: usize = 1024;

/// Runs both identities on `n_samples` random band-limited fields with
/// `N = 1024`, `L = 2 pi`.
pub fn kernel_identity_errors(n_samples: usize, seed: u64) -> Result<KernelIdentityErrors> {
    let grid = PeriodicGrid::new(KERNEL_CHECK_POINTS, 2.0 * PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = KernelIdentityErrors {
        second_difference: 0.0,
        second_difference_adaptive: 0.0,
        diff_rewrite: 0.0,
    };
    for _ in 0..n_samples {
        let f = random_band_limited(grid, 12, 1.0, 1.0, rng.gen());
        let target = apply_lambda_s(&f, 1.0)?.scale(-2.0 * PI);
        let scale = target.max_abs().max(f64::MIN_POSITIVE);
        let grid_err = second_difference_integral(&f).max_abs_diff(&target) / scale;
        out.second_difference = out.second_difference.max(grid_err);
        let tspec = forward_transform(&target);
        for _ in 0..4 {
            let x = rng.gen_range(0.0..grid.length());
            let v = second_difference_integral_at(&f, x, 32);
            let e = (v - tspec.evaluate(x)).abs() / scale;
            out.second_difference_adaptive = out.second_difference_adaptive.max(e);
            let a = rng.gen_range(1e-3..0.5 * grid.length());
            let (l, r) = diff_rewrite_sides(&f, x, a);
            out.diff_rewrite = out.diff_rewrite.max((l - r).abs() / l.abs().max(1.0));
        }
    }
    Ok(out)
}

/// Largest relative error of the kernel identities; see [`kernel_identity_errors`].
pub fn kernel_identity_check(n_samples: usize) -> Result<f64> {
    Ok(kernel_identity_errors(n_samples, 0)?.max_error())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{InitialData, SimConfig};
    use crate::grid::PeriodicGrid;
    use crate::norms::NormReport;

    fn log_from_fields(fields: &[(f64, RealField)]) -> RunLog {
        let mut cfg = SimConfig::graph(fields[0].1.grid().n_points(), 1.0, InitialData::Zero);
        cfg.length = fields[0].1.grid().length();
        let mut log = RunLog::new(cfg);
        for (t, f) in fields {
            log.reports.push(NormReport::compute(f, *t));
            log.snapshots.push(crate::runlog::Snapshot {
                time: *t,
                data: SnapshotData::Graph(f.clone()),
            });
        }
        log
    }

    #[test]
    fn zero_run_holds_everywhere() {
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let z = RealField::zeros(g);
        let log = log_from_fields(&[(0.0, z.clone()), (0.5, z.clone()), (1.0, z)]);
        for v in all_verdicts(&log) {
            assert_eq!(v.status, VerdictStatus::Holds, "{v:?}");
            assert_eq!(v.worst_margin, 0.0, "{v:?}");
        }
    }

    #[test]
    fn dissipation_of_small_mode_matches_linear_limit() {
        // D ~ 2 pi ||f||^2_{H^{1/2}} for small f
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let eps = 1e-4;
        let f = RealField::from_fn(g, |x| eps * (3.0 * x).cos());
        let h12 = crate::norms::norm_homog_sobolev(&f, 0.5).unwrap();
        let d = dissipation(&f);
        assert!((d / (2.0 * PI * h12 * h12) - 1.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn dissipation_is_nonnegative_and_translation_invariant() {
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let f = random_band_limited(g, 6, 1.0, 0.8, 1);
        let d = dissipation(&f);
        assert!(d > 0.0);
        assert!((dissipation(&f.roll(5)) - d).abs() < 1e-12 * d);
    }

    #[test]
    fn corrupted_max_principle_is_flagged() {
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let f = RealField::from_fn(g, |x| 0.1 * x.cos());
        let mut log =
            log_from_fields(&[(0.0, f.clone()), (0.5, f.scale(0.5)), (1.0, f.scale(0.25))]);
        assert_eq!(verdict_max_principle(&log).status, VerdictStatus::Holds);
        log.reports[2].l_inf = 0.2;
        let v = verdict_max_principle(&log);
        assert_eq!(v.status, VerdictStatus::Violated);
        assert!(v.worst_margin > 0.09);
    }

    #[test]
    fn slope_and_wiener_thresholds() {
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let f = RealField::from_fn(g, |x| 3.0 * x.cos());
        let log = log_from_fields(&[(0.0, f.clone()), (1.0, f)]);
        assert_eq!(verdict_slope(&log).status, VerdictStatus::NotApplicable);
        assert_eq!(verdict_wiener(&log).status, VerdictStatus::NotApplicable);
    }

    #[test]
    fn second_difference_identity_on_single_mode() {
        let g = PeriodicGrid::new(128, 3.0).unwrap();
        let f = RealField::from_fn(g, |x| (2.0 * PI * 5.0 * x / 3.0).cos());
        let target = apply_lambda_s(&f, 1.0).unwrap().scale(-2.0 * PI);
        let err = second_difference_integral(&f).max_abs_diff(&target) / target.max_abs();
        assert!(err < 1e-10, "{err}");
        let v = second_difference_integral_at(&f, 0.7, 32);
        assert!((v - forward_transform(&target).evaluate(0.7)).abs() < 1e-8 * target.max_abs());
    }

    #[test]
    fn diff_rewrite_agrees() {
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let f = random_band_limited(g, 8, 1.0, 1.0, 4);
        let (l, r) = diff_rewrite_sides(&f, 1.3, 0.9);
        assert!((l - r).abs() < 1e-12);
    }
}
