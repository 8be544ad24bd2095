//! Graph form of the interface evolution: flux kernels and time stepping.
//!
//! The interface is `y = f(x, t)` on a torus of length `L`, evolving by
//! `f_t = (rho/pi) d/dx int arctan((f(x) - f(x - a)) / a) da`.
//! For an `L`-periodic height the integral over the whole line is summed over
//! periodic images in closed form,
//!
//! `sum_m arctan(d / (a + mL)) = arctan(tanh(pi d / L) / tan(pi a / L))`,
//!
//! leaving a smooth, `L`-periodic integrand in `a` on `[-L/2, L/2]`. Its limit
//! at `a = 0` is `arctan(f_x)`. The differentiated (rational) form is
//!
//! `f_t = (rho/L) int (f_x(x) - f_x(x - a)) sin(2 pi a/L) / (cosh(2 pi d/L) - cos(2 pi a/L)) da`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, SimConfig};
use crate::error::{MuskatError, Result};
use crate::grid::{apply_lambda_s, derivative, forward_transform, translate, RealField};
use crate::norms::NormReport;
use crate::runlog::{RunLog, RunStatus, Snapshot, SnapshotData};

/// Node layout of the `a`-quadrature.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadRule {
    /// Nodes at `(j + 1/2) h`; `a = 0` is never sampled.
    MidpointExcludeZero,
    /// Nodes at `j h`, with the analytic limit at `a = 0`.
    #[default]
    TrapezoidShifted,
}

/// Principal-value quadrature controls shared by the flux and curve kernels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Nodes with `|a| < inner_cut * h` take the analytic limit value.
    #[serde(default = "default_inner_cut")]
    pub inner_cut: f64,
    /// Outer cutoff; `None` means the full period `L/2`.
    #[serde(default)]
    pub alpha_max: Option<f64>,
    #[serde(default)]
    pub rule: QuadRule,
}

fn default_inner_cut() -> f64 {
    0.5
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            inner_cut: default_inner_cut(),
            alpha_max: None,
            rule: QuadRule::default(),
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self, length: f64) -> Result<()> {
        if !(self.inner_cut > 0.0 && self.inner_cut <= 1.0) {
            return Err(MuskatError::config(
                "quad.inner_cut",
                format!("must lie in (0, 1] grid spacings, got {}", self.inner_cut),
            ));
        }
        if let Some(a) = self.alpha_max {
            if !(a > 0.0 && a <= 0.5 * length * (1.0 + 1e-12)) {
                return Err(MuskatError::config(
                    "quad.alpha_max",
                    format!("must lie in (0, L/2 = {}], got {a}", 0.5 * length),
                ));
            }
        }
        Ok(())
    }

    fn cutoff(&self, length: f64) -> f64 {
        self.alpha_max.unwrap_or(0.5 * length)
    }
}

/// Time integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4Explicit,
    #[default]
    Rk4IntegratingFactor,
}

/// Interface height at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphState {
    f: RealField,
    time: f64,
    rho_bar: f64,
}

impl GraphState {
    /// The mean of `f` is removed; the evolution preserves it.
    pub fn new(f: RealField, time: f64, rho_bar: f64) -> Result<Self> {
        if !rho_bar.is_finite() || !time.is_finite() {
            return Err(MuskatError::InvalidArgument(format!(
                "time and rho_bar must be finite, got {time}, {rho_bar}"
            )));
        }
        Ok(Self {
            f: f.remove_mean(),
            time,
            rho_bar,
        })
    }

    pub fn f(&self) -> &RealField {
        &self.f
    }
    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }

    fn with_field(&self, f: RealField, time: f64) -> Self {
        Self {
            f,
            time,
            rho_bar: self.rho_bar,
        }
    }
}

const CHUNK: usize = 16;

fn pairwise_reduce(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// `g_i = diag_i + sum_{0 < |j| <= jmax} K(i, j)` for a kernel with the pair
/// symmetry `K(i, -j) = K(i + j, j)`, evaluating each unordered pair once.
///
/// The node `j = N/2` is counted once per row. Chunks of `j` are summed in
/// parallel and reduced in a fixed pairwise order, so the result does not
/// depend on the thread count.
pub(crate) fn symmetric_node_sum<K>(diag: Vec<f64>, jmax: usize, kernel: K) -> Vec<f64>
where
    K: Fn(usize, usize) -> f64 + Sync,
{
    let [g] = symmetric_node_sum_vec([diag], jmax, |i, j| [kernel(i, j)]);
    g
}

/// [`symmetric_node_sum`] for a kernel with `M` components.
pub(crate) fn symmetric_node_sum_vec<const M: usize, K>(
    diag: [Vec<f64>; M],
    jmax: usize,
    kernel: K,
) -> [Vec<f64>; M]
where
    K: Fn(usize, usize) -> [f64; M] + Sync,
{
    let n = diag[0].len();
    let half = n / 2;
    let jmax = jmax.min(half);
    let starts: Vec<usize> = (1..=jmax).step_by(CHUNK).collect();
    let parts: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&j0| {
            let mut g = vec![0.0; n * M];
            for j in j0..(j0 + CHUNK).min(jmax + 1) {
                for i in 0..n {
                    let k = kernel(i, j);
                    let partner = (i + n - j) % n;
                    for (m, v) in k.iter().enumerate() {
                        g[i * M + m] += v;
                        if j != half {
                            g[partner * M + m] += v;
                        }
                    }
                }
            }
            g
        })
        .collect();
    let total = pairwise_reduce(parts);
    let mut out = diag;
    if !total.is_empty() {
        for (m, o) in out.iter_mut().enumerate() {
            for (i, v) in o.iter_mut().enumerate() {
                *v += total[i * M + m];
            }
        }
    }
    out
}

/// `g_i = sum_j K(i, j)` over the `N` half-offset nodes `a_j = (j + 1/2) h`,
/// `j = -N/2 .. N/2 - 1`, stored as `j + N/2`.
fn row_node_sum<K>(n: usize, kernel: K) -> Vec<f64>
where
    K: Fn(usize, usize) -> f64 + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| kernel(i, j)).sum())
        .collect()
}

fn check_finite(samples: &[f64]) -> Result<()> {
    match samples.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(MuskatError::NonFiniteFlux { index }),
        None => Ok(()),
    }
}

struct Nodes {
    offsets: Vec<f64>,
    /// `cot(pi a / L)`, exactly 0 at `a = L/2`
    cot: Vec<f64>,
    sin2: Vec<f64>,
    cos2: Vec<f64>,
    jmax: usize,
}

fn grid_nodes(n: usize, length: f64, quad: &QuadratureSpec) -> Nodes {
    let h = length / n as f64;
    let half = n / 2;
    let offsets: Vec<f64> = (0..=half).map(|j| j as f64 * h).collect();
    let cutoff = quad.cutoff(length);
    let jmax = (0..=half)
        .take_while(|&j| offsets[j] <= cutoff * (1.0 + 1e-12))
        .last()
        .unwrap_or(0);
    node_tables(offsets, length, half, jmax)
}

fn half_nodes(n: usize, length: f64) -> Nodes {
    let h = length / n as f64;
    let half = n as isize / 2;
    let offsets: Vec<f64> = (-half..half).map(|j| (j as f64 + 0.5) * h).collect();
    node_tables(offsets, length, usize::MAX, n)
}

fn node_tables(offsets: Vec<f64>, length: f64, half_index: usize, jmax: usize) -> Nodes {
    let mut cot = Vec::with_capacity(offsets.len());
    let mut sin2 = Vec::with_capacity(offsets.len());
    let mut cos2 = Vec::with_capacity(offsets.len());
    for (j, &a) in offsets.iter().enumerate() {
        let t = PI * a / length;
        if j == half_index {
            cot.push(0.0);
            sin2.push(0.0);
            cos2.push(-1.0);
        } else {
            cot.push(t.cos() / t.sin());
            sin2.push((2.0 * t).sin());
            cos2.push((2.0 * t).cos());
        }
    }
    Nodes {
        offsets,
        cot,
        sin2,
        cos2,
        jmax,
    }
}

/// Periodized arctan kernel at height difference `d` and offset cotangent.
#[inline]
fn arctan_kernel(d: f64, cot: f64, length: f64) -> f64 {
    ((PI * d / length).tanh() * cot).atan()
}

/// Periodized rational kernel without the `rho/L` prefactor.
#[inline]
fn rational_kernel(d: f64, dx: f64, sin2: f64, cos2: f64, length: f64) -> f64 {
    dx * sin2 / ((2.0 * PI * d / length).cosh() - cos2)
}

/// `int arctan(Delta_a f) da`, the quantity differentiated by [`flux_arctan`].
pub fn arctan_potential(f: &RealField, quad: &QuadratureSpec) -> Result<RealField> {
    quad.validate(f.grid().length())?;
    let grid = *f.grid();
    let n = grid.n_points();
    let h = grid.spacing();
    let length = grid.length();
    let fx = derivative(f, 1)?;
    let diag: Vec<f64> = fx.samples().iter().map(|s| s.atan()).collect();
    let fs = f.samples();
    let g = match quad.rule {
        QuadRule::TrapezoidShifted => {
            let nodes = grid_nodes(n, length, quad);
            symmetric_node_sum(diag, nodes.jmax, |i, j| {
                arctan_kernel(fs[i] - fs[(i + n - j) % n], nodes.cot[j], length)
            })
        }
        QuadRule::MidpointExcludeZero => {
            let nodes = half_nodes(n, length);
            let u = translate(f, 0.5 * h);
            let us = u.samples();
            let cutoff = quad.cutoff(length) * (1.0 + 1e-12);
            let inner = quad.inner_cut * h;
            let half = n / 2;
            row_node_sum(n, |i, j| {
                let a = nodes.offsets[j].abs();
                if a > cutoff {
                    0.0
                } else if a < inner {
                    diag[i]
                } else {
                    // a_j = (j - N/2 + 1/2) h, so f(x_i - a_j) = u_{i - j + N/2}
                    let src = (i + n + half - j) % n;
                    arctan_kernel(fs[i] - us[src], nodes.cot[j], length)
                }
            })
        }
    };
    let g: Vec<f64> = g.into_iter().map(|v| v * h).collect();
    check_finite(&g)?;
    RealField::new(grid, g)
}

/// `(rho/pi) d/dx int arctan(Delta_a f) da`, with the `x`-derivative taken
/// spectrally.
pub fn flux_arctan(state: &GraphState, quad: &QuadratureSpec) -> Result<RealField> {
    let g = arctan_potential(state.f(), quad)?;
    let out = derivative(&g, 1)?.scale(state.rho_bar / PI);
    check_finite(out.samples())?;
    Ok(out)
}

/// `(rho/pi) int d/dx(Delta_a f) / (1 + (Delta_a f)^2) da` on the same nodes as
/// [`flux_arctan`], with `f_x` taken spectrally and shifted per node.
pub fn flux_rational(state: &GraphState, quad: &QuadratureSpec) -> Result<RealField> {
    let f = state.f();
    let grid = *f.grid();
    let length = grid.length();
    quad.validate(length)?;
    let n = grid.n_points();
    let h = grid.spacing();
    let fx = derivative(f, 1)?;
    let fxx = derivative(f, 2)?;
    let diag: Vec<f64> = fx
        .samples()
        .iter()
        .zip(fxx.samples())
        .map(|(p, q)| q * length / (PI * (1.0 + p * p)))
        .collect();
    let fs = f.samples();
    let ps = fx.samples();
    let g = match quad.rule {
        QuadRule::TrapezoidShifted => {
            let nodes = grid_nodes(n, length, quad);
            symmetric_node_sum(diag, nodes.jmax, |i, j| {
                let src = (i + n - j) % n;
                rational_kernel(
                    fs[i] - fs[src],
                    ps[i] - ps[src],
                    nodes.sin2[j],
                    nodes.cos2[j],
                    length,
                )
            })
        }
        QuadRule::MidpointExcludeZero => {
            let nodes = half_nodes(n, length);
            let u = translate(f, 0.5 * h);
            let up = translate(&fx, 0.5 * h);
            let (us, ups) = (u.samples(), up.samples());
            let cutoff = quad.cutoff(length) * (1.0 + 1e-12);
            let inner = quad.inner_cut * h;
            let half = n / 2;
            row_node_sum(n, |i, j| {
                let a = nodes.offsets[j].abs();
                if a > cutoff {
                    0.0
                } else if a < inner {
                    diag[i]
                } else {
                    let src = (i + n + half - j) % n;
                    rational_kernel(
                        fs[i] - us[src],
                        ps[i] - ups[src],
                        nodes.sin2[j],
                        nodes.cos2[j],
                        length,
                    )
                }
            })
        }
    };
    let scale = state.rho_bar * h / length;
    let out: Vec<f64> = g.into_iter().map(|v| v * scale).collect();
    check_finite(&out)?;
    RealField::new(grid, out)
}

/// `-rho Lambda f`, the linearization of the flux about the flat interface.
pub fn linearized_rhs(state: &GraphState) -> RealField {
    apply_lambda_s(state.f(), 1.0)
        .expect("s = 1 is valid")
        .scale(-state.rho_bar)
}

/// `c h / (|rho| (1 + ||f_x||^2_inf))`; infinite when `rho = 0`.
pub fn cfl_dt(state: &GraphState, cfl_factor: f64) -> f64 {
    let slope = derivative(state.f(), 1)
        .expect("order 1 is valid")
        .max_abs();
    let rho = state.rho_bar.abs();
    if rho == 0.0 {
        return f64::INFINITY;
    }
    cfl_factor * state.f.grid().spacing() / (rho * (1.0 + slope * slope))
}

/// `e^{-rho |xi| tau} f`.
fn propagate(f: &RealField, rho: f64, tau: f64) -> RealField {
    forward_transform(f)
        .apply(|_, xi| Complex64::new((-rho * xi.abs() * tau).exp(), 0.0))
        .inverse()
}

fn combine(terms: &[(f64, &RealField)]) -> RealField {
    let grid = *terms[0].1.grid();
    let mut out = vec![0.0; grid.n_points()];
    for (c, field) in terms {
        for (o, v) in out.iter_mut().zip(field.samples()) {
            *o += c * v;
        }
    }
    RealField::new(grid, out).expect("length matches grid")
}

/// One step of length `dt`. Fails with `CflViolation` when `dt` exceeds
/// [`cfl_dt`] at `cfl_factor`.
pub fn step(
    state: &GraphState,
    dt: f64,
    scheme: Scheme,
    quad: &QuadratureSpec,
    cfl_factor: f64,
) -> Result<GraphState> {
    let limit = cfl_dt(state, cfl_factor);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-9) {
        return Err(MuskatError::CflViolation { dt, limit });
    }
    let rho = state.rho_bar;
    let at = |f: RealField, t: f64| state.with_field(f, t);
    let t0 = state.time;
    let u = state.f();
    let next = match scheme {
        Scheme::Rk4Explicit => {
            let rhs = |s: &GraphState| flux_arctan(s, quad);
            let k1 = rhs(state)?;
            let k2 = rhs(&at(combine(&[(1.0, u), (0.5 * dt, &k1)]), t0 + 0.5 * dt))?;
            let k3 = rhs(&at(combine(&[(1.0, u), (0.5 * dt, &k2)]), t0 + 0.5 * dt))?;
            let k4 = rhs(&at(combine(&[(1.0, u), (dt, &k3)]), t0 + dt))?;
            combine(&[
                (1.0, u),
                (dt / 6.0, &k1),
                (dt / 3.0, &k2),
                (dt / 3.0, &k3),
                (dt / 6.0, &k4),
            ])
        }
        Scheme::Rk4IntegratingFactor => {
            // Lawson RK4 on f_t = -rho Lambda f + N(f)
            let nonlinear = |s: &GraphState| -> Result<RealField> {
                let flux = flux_arctan(s, quad)?;
                flux.axpby(1.0, &linearized_rhs(s), -1.0)
            };
            let e = |f: &RealField| propagate(f, rho, 0.5 * dt);
            let k1 = nonlinear(state)?;
            let a = e(&combine(&[(1.0, u), (0.5 * dt, &k1)]));
            let k2 = nonlinear(&at(a, t0 + 0.5 * dt))?;
            let eu = e(u);
            let b = combine(&[(1.0, &eu), (0.5 * dt, &k2)]);
            let k3 = nonlinear(&at(b, t0 + 0.5 * dt))?;
            let eeu = e(&eu);
            let ek3 = e(&k3);
            let c = combine(&[(1.0, &eeu), (dt, &ek3)]);
            let k4 = nonlinear(&at(c, t0 + dt))?;
            let eek1 = e(&e(&k1));
            let ek23 = e(&combine(&[(1.0, &k2), (1.0, &k3)]));
            combine(&[
                (1.0, &eeu),
                (dt / 6.0, &eek1),
                (dt / 3.0, &ek23),
                (dt / 6.0, &k4),
            ])
        }
    };
    if let Some(index) = next.samples().iter().position(|v| !v.is_finite()) {
        return Err(MuskatError::NonFiniteFlux { index });
    }
    Ok(at(next.remove_mean(), t0 + dt))
}

/// Advance `state` to exactly `target`, re-planning the sub-step size from
/// the CFL bound after every step.
pub fn advance_to(
    mut state: GraphState,
    target: f64,
    scheme: Scheme,
    quad: &QuadratureSpec,
    cfl_factor: f64,
) -> Result<GraphState> {
    while state.time < target {
        let remaining = target - state.time;
        let limit = cfl_dt(&state, cfl_factor);
        let steps = if limit.is_finite() {
            (remaining / limit * (1.0 - 1e-12)).ceil().max(1.0)
        } else {
            1.0
        };
        if steps <= 1.0 {
            state = step(&state, remaining, scheme, quad, cfl_factor)?;
            state.time = target;
        } else {
            state = step(&state, remaining / steps, scheme, quad, cfl_factor)?;
        }
    }
    Ok(state)
}

fn halt_status(err: &MuskatError) -> Option<RunStatus> {
    match err {
        MuskatError::NonFiniteFlux { .. } => Some(RunStatus::NonFinite),
        _ => None,
    }
}

/// Longest run allowed for an ill-posed (`rho <= 0`) configuration: ten
/// grid-crossing times `h / |rho|`.
pub fn unstable_time_cap(config: &SimConfig) -> f64 {
    let h = config.length / config.n_points as f64;
    10.0 * h / config.rho_bar.abs().max(f64::MIN_POSITIVE)
}

/// Evolve the configured initial height, logging a [`NormReport`] every
/// report interval and a snapshot every snapshot interval, plus both at the
/// final time. The run halts with `BlowupSuspected` once `blowup_proxy`
/// exceeds the configured threshold and with `NonFinite` when the flux
/// overflows; the partial log is returned in both cases.
pub fn run_graph(config: &SimConfig) -> Result<RunLog> {
    config.validate()?;
    if config.mode != Mode::Graph {
        return Err(MuskatError::config(
            "mode",
            "run_graph needs mode = \"graph\"",
        ));
    }
    let mut log = RunLog::new(config.clone());
    let mut t_end = config.t_final;
    if config.rho_bar <= 0.0 {
        log.flags.push("unstable_regime".into());
        let cap = unstable_time_cap(config);
        if t_end > cap {
            t_end = cap;
            log.flags
                .push(format!("t_final_capped_at_{}", crate::runlog::fmt_num(cap)));
        }
    }
    let mut state = GraphState::new(config.initial_field()?, 0.0, config.rho_bar)?;
    let ri = config.report_interval();
    let si = config.snapshot_interval();
    let (mut kr, mut ks) = (0u64, 0u64);
    let record = |log: &mut RunLog, s: &GraphState, report: bool, snap: bool| -> bool {
        if snap {
            log.snapshots.push(Snapshot {
                time: s.time,
                data: SnapshotData::Graph(s.f.clone()),
            });
        }
        if report {
            let r = NormReport::compute(&s.f, s.time);
            log.reports.push(r);
            if !r.values().iter().all(|v| v.is_finite()) {
                log.status = RunStatus::NonFinite;
                return true;
            }
            if r.blowup_proxy > config.blowup_threshold {
                log.status = RunStatus::BlowupSuspected;
                log.message = Some(format!(
                    "blowup proxy {} exceeded {} at t = {}",
                    r.blowup_proxy, config.blowup_threshold, s.time
                ));
                return true;
            }
        }
        false
    };
    if record(&mut log, &state, true, true) {
        return Ok(log);
    }
    let tol = 1e-12 * t_end;
    while state.time < t_end {
        let next_r = ((kr + 1) as f64 * ri).min(t_end);
        let next_s = ((ks + 1) as f64 * si).min(t_end);
        let target = next_r.min(next_s);
        state = match advance_to(
            state.clone(),
            target,
            config.scheme,
            &config.quad,
            config.cfl_factor,
        ) {
            Ok(s) => s,
            Err(e) => match halt_status(&e) {
                Some(status) => {
                    log.status = status;
                    log.message = Some(e.to_string());
                    return Ok(log);
                }
                None => return Err(e),
            },
        };
        let last = target >= t_end - tol;
        let is_r = (next_r - target).abs() <= tol || last;
        let is_s = (next_s - target).abs() <= tol || last;
        if (next_r - target).abs() <= tol {
            kr += 1;
        }
        if (next_s - target).abs() <= tol {
            ks += 1;
        }
        if record(&mut log, &state, is_r, is_s) {
            return Ok(log);
        }
        if last {
            break;
        }
    }
    Ok(log)
}
