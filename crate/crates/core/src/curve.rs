//! Parametrized interfaces `z(a) = (z1, z2)` that need not be graphs.
//!
//! The curve is a periodic perturbation of the flat line, `z(a + L) = z(a) + (L, 0)`,
//! and moves by
//!
//! `z_t(a) = (rho/pi) PV int (z1(a) - z1(b)) / |z(a) - z(b)|^2 (z_a(a) - z_a(b)) db`.
//!
//! Summing the periodic images of `b` gives the smooth periodic kernel
//!
//! `(rho/L) int_0^L sin(2 pi D1/L) / (cosh(2 pi D2/L) - cos(2 pi D1/L)) (z_a(a) - z_a(b)) db`,
//!
//! `D = z(a) - z(b)`, whose diagonal limit is `(rho/pi) z1' z'' / |z'|^2`. For
//! `z = (a, f(a))` the horizontal velocity vanishes and the vertical one is
//! the graph flux.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::config::{InitialData, Mode, SimConfig};
use crate::error::{MuskatError, Result};
use crate::graph::{symmetric_node_sum_vec, QuadratureSpec};
use crate::grid::{derivative, PeriodicGrid, RealField};
use crate::norms::{interpolant_max, NormReport};
use crate::runlog::{RunLog, RunStatus, Snapshot, SnapshotData, TurningRecord};

/// Runs halt once `max |z'| / min |z'|` exceeds this.
pub const MAX_PARAM_RATIO: f64 = 20.0;

/// Default tolerance on `min z1'` for locating a vertical tangent.
pub const DEFAULT_CRITICAL_TOL: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceCurve {
    grid: PeriodicGrid,
    /// `z1(a) - a`, periodic
    p1: RealField,
    z2: RealField,
    time: f64,
    rho_bar: f64,
    chord_arc_floor: f64,
}

impl InterfaceCurve {
    /// `z1` holds the full horizontal positions at the grid parameters.
    pub fn new(
        grid: PeriodicGrid,
        z1: Vec<f64>,
        z2: Vec<f64>,
        time: f64,
        rho_bar: f64,
    ) -> Result<Self> {
        if z1.len() != grid.n_points() || z2.len() != grid.n_points() {
            return Err(MuskatError::InvalidArgument(format!(
                "curve arrays must hold {} samples",
                grid.n_points()
            )));
        }
        if !z1.iter().chain(&z2).all(|v| v.is_finite()) {
            return Err(MuskatError::InvalidArgument(
                "curve samples must be finite".into(),
            ));
        }
        let p1: Vec<f64> = z1.iter().enumerate().map(|(j, v)| v - grid.x(j)).collect();
        Ok(Self {
            grid,
            p1: RealField::new(grid, p1)?,
            z2: RealField::new(grid, z2)?,
            time,
            rho_bar,
            chord_arc_floor: 0.0,
        })
    }

    /// The graph `z = (a, f(a))`.
    pub fn from_graph(f: &RealField, time: f64, rho_bar: f64) -> Self {
        Self {
            grid: *f.grid(),
            p1: RealField::zeros(*f.grid()),
            z2: f.clone(),
            time,
            rho_bar,
            chord_arc_floor: 0.0,
        }
    }

    /// Curve velocities fail once the chord-arc minimum drops below `floor`.
    pub fn with_chord_arc_floor(mut self, floor: f64) -> Self {
        self.chord_arc_floor = floor;
        self
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }
    pub fn z1(&self) -> Vec<f64> {
        self.p1
            .samples()
            .iter()
            .enumerate()
            .map(|(j, v)| v + self.grid.x(j))
            .collect()
    }
    pub fn z1_periodic(&self) -> &RealField {
        &self.p1
    }
    pub fn z2(&self) -> &RealField {
        &self.z2
    }
    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }
    pub fn chord_arc_floor(&self) -> f64 {
        self.chord_arc_floor
    }

    fn with_parts(&self, p1: RealField, z2: RealField, time: f64) -> Self {
        Self {
            p1,
            z2,
            time,
            ..self.clone()
        }
    }

    /// Mirror image `x -> -x`, reparametrized by `a -> -a`.
    pub fn mirrored(&self) -> Self {
        let n = self.grid.n_points();
        let flip = |f: &RealField, sign: f64| {
            let s = f.samples();
            RealField::new(self.grid, (0..n).map(|j| sign * s[(n - j) % n]).collect())
                .expect("length preserved")
        };
        self.with_parts(flip(&self.p1, -1.0), flip(&self.z2, 1.0), self.time)
    }

    /// `z + (dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        self.with_parts(self.p1.map(|v| v + dx), self.z2.map(|v| v + dy), self.time)
    }

    fn tangent(&self) -> (RealField, RealField) {
        let d1 = derivative(&self.p1, 1)
            .expect("order 1 is valid")
            .map(|v| v + 1.0);
        let d2 = derivative(&self.z2, 1).expect("order 1 is valid");
        (d1, d2)
    }
}

/// `min |z(a) - z(b)| / dist(a, b)` over distinct grid pairs, with the torus
/// distance in the parameter.
pub fn chord_arc_min(curve: &InterfaceCurve) -> f64 {
    let n = curve.grid.n_points();
    let h = curve.grid.spacing();
    let p = curve.p1.samples();
    let z = curve.z2.samples();
    (1..=n / 2)
        .into_par_iter()
        .map(|j| {
            let dist = j as f64 * h;
            (0..n).fold(f64::INFINITY, |m, i| {
                let k = (i + n - j) % n;
                let d1 = dist + p[i] - p[k];
                let d2 = z[i] - z[k];
                m.min((d1 * d1 + d2 * d2).sqrt() / dist)
            })
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// `max |z'| / min |z'|`.
pub fn param_ratio(curve: &InterfaceCurve) -> f64 {
    let (d1, d2) = curve.tangent();
    let (lo, hi) = d1
        .samples()
        .iter()
        .zip(d2.samples())
        .map(|(a, b)| a.hypot(*b))
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), s| {
            (lo.min(s), hi.max(s))
        });
    hi / lo
}

/// Both velocity components on the parameter grid.
///
/// The quadrature uses the grid-node rule of the graph flux with the analytic
/// diagonal limit; `quad.alpha_max` truncates the parameter offset.
pub fn curve_velocity(
    curve: &InterfaceCurve,
    quad: &QuadratureSpec,
) -> Result<(RealField, RealField)> {
    let grid = curve.grid;
    let length = grid.length();
    quad.validate(length)?;
    let chord = chord_arc_min(curve);
    if !(chord > curve.chord_arc_floor) {
        return Err(MuskatError::ChordArcViolation {
            min: chord,
            floor: curve.chord_arc_floor,
        });
    }
    let n = grid.n_points();
    let h = grid.spacing();
    let (t1, t2) = curve.tangent();
    let s1 = derivative(&curve.p1, 2)?;
    let s2 = derivative(&curve.z2, 2)?;
    let (a1, a2) = (t1.samples(), t2.samples());
    let mut diag1 = Vec::with_capacity(n);
    let mut diag2 = Vec::with_capacity(n);
    for i in 0..n {
        let w = length / PI * a1[i] / (a1[i] * a1[i] + a2[i] * a2[i]);
        diag1.push(w * s1.samples()[i]);
        diag2.push(w * s2.samples()[i]);
    }
    let cutoff = quad.alpha_max.unwrap_or(0.5 * length) * (1.0 + 1e-12);
    let jmax = ((cutoff / h).floor() as usize).min(n / 2);
    let p = curve.p1.samples();
    let z = curve.z2.samples();
    let k = 2.0 * PI / length;
    let [g1, g2] = symmetric_node_sum_vec([diag1, diag2], jmax, |i, j| {
        let src = (i + n - j) % n;
        let d1 = j as f64 * h + p[i] - p[src];
        let d2 = z[i] - z[src];
        let w = (k * d1).sin() / ((k * d2).cosh() - (k * d1).cos());
        [w * (a1[i] - a1[src]), w * (a2[i] - a2[src])]
    });
    let scale = curve.rho_bar * h / length;
    let finish = |g: Vec<f64>| -> Result<RealField> {
        if let Some(index) = g.iter().position(|v| !v.is_finite()) {
            return Err(MuskatError::NonFiniteFlux { index });
        }
        RealField::new(grid, g.into_iter().map(|v| v * scale).collect())
    };
    Ok((finish(g1)?, finish(g2)?))
}

/// `min_a z1'(a)` over the trigonometric interpolant; non-positive values mean
/// the curve is no longer a graph.
pub fn turning_indicator(curve: &InterfaceCurve) -> f64 {
    critical_point(curve).1
}

fn critical_point(curve: &InterfaceCurve) -> (f64, f64) {
    let neg = derivative(&curve.p1, 1)
        .expect("order 1 is valid")
        .scale(-1.0);
    let (a, v) = interpolant_max(&neg);
    (a, 1.0 - v)
}

/// `d v1 / da` at the parameter where `z1'` is smallest. A negative value
/// means the vertical tangent there is about to tip over.
pub fn dalpha_v1_at_critical(
    curve: &InterfaceCurve,
    quad: &QuadratureSpec,
    critical_tol: f64,
) -> Result<f64> {
    let (a, min_slope) = critical_point(curve);
    if min_slope > critical_tol {
        return Err(MuskatError::NoCriticalPoint {
            min_slope,
            tol: critical_tol,
        });
    }
    let (v1, _) = curve_velocity(curve, quad)?;
    let dv1 = crate::grid::forward_transform(&v1).apply(|i, xi| {
        if i == v1.grid().nyquist_index() {
            num_complex::Complex64::new(0.0, 0.0)
        } else {
            num_complex::Complex64::new(0.0, xi)
        }
    });
    Ok(dv1.evaluate(a))
}

/// `c h min|z'| / |rho|`.
pub fn curve_dt(curve: &InterfaceCurve, cfl_factor: f64) -> f64 {
    let (d1, d2) = curve.tangent();
    let min_speed = d1
        .samples()
        .iter()
        .zip(d2.samples())
        .map(|(a, b)| a.hypot(*b))
        .fold(f64::INFINITY, f64::min);
    let rho = curve.rho_bar.abs();
    if rho == 0.0 {
        return f64::INFINITY;
    }
    cfl_factor * curve.grid.spacing() * min_speed / rho
}

/// One explicit RK4 step.
pub fn curve_step(
    curve: &InterfaceCurve,
    dt: f64,
    quad: &QuadratureSpec,
) -> Result<InterfaceCurve> {
    let t0 = curve.time;
    let shifted = |k: &(RealField, RealField), c: f64, t: f64| -> Result<InterfaceCurve> {
        Ok(curve.with_parts(
            curve.p1.axpby(1.0, &k.0, c)?,
            curve.z2.axpby(1.0, &k.1, c)?,
            t,
        ))
    };
    let k1 = curve_velocity(curve, quad)?;
    let k2 = curve_velocity(&shifted(&k1, 0.5 * dt, t0 + 0.5 * dt)?, quad)?;
    let k3 = curve_velocity(&shifted(&k2, 0.5 * dt, t0 + 0.5 * dt)?, quad)?;
    let k4 = curve_velocity(&shifted(&k3, dt, t0 + dt)?, quad)?;
    let combine = |base: &RealField, a: &RealField, b: &RealField, c: &RealField, d: &RealField| {
        let s: Vec<f64> = (0..base.samples().len())
            .map(|i| {
                base.samples()[i]
                    + dt / 6.0
                        * (a.samples()[i]
                            + 2.0 * b.samples()[i]
                            + 2.0 * c.samples()[i]
                            + d.samples()[i])
            })
            .collect();
        RealField::new(*base.grid(), s)
    };
    let p1 = combine(&curve.p1, &k1.0, &k2.0, &k3.0, &k4.0)?;
    let z2 = combine(&curve.z2, &k1.1, &k2.1, &k3.1, &k4.1)?;
    Ok(curve.with_parts(p1, z2, t0 + dt))
}

/// Odd perturbation of the flat line with a near-vertical tangent at `a = 0`:
/// `z1 = a - steepness sin(a)`, `z2 = height sin(2a)`, in units where the
/// period is `2 pi`. The minimum of `z1'` is `1 - steepness`.
pub fn turning_profile(
    grid: PeriodicGrid,
    steepness: f64,
    height: f64,
    rho_bar: f64,
) -> InterfaceCurve {
    let scale = grid.length() / (2.0 * PI);
    let n = grid.n_points();
    let z1 = (0..n)
        .map(|j| {
            let a = grid.x(j);
            a - steepness * scale * (a / scale).sin()
        })
        .collect();
    let z2 = (0..n)
        .map(|j| height * scale * (2.0 * grid.x(j) / scale).sin())
        .collect();
    InterfaceCurve::new(grid, z1, z2, 0.0, rho_bar).expect("sizes match")
}

fn initial_curve(config: &SimConfig) -> Result<InterfaceCurve> {
    let grid = config.grid()?;
    match &config.initial_data {
        InitialData::TurningProfile { steepness, height } => {
            Ok(turning_profile(grid, *steepness, *height, config.rho_bar))
        }
        InitialData::FromCsv { path } => {
            let (header, rows) = crate::runlog::read_csv(path)
                .map_err(|e| MuskatError::config("initial_data.path", e.to_string()))?;
            if header.iter().any(|h| h == "z1") {
                let col = |name: &str| -> Result<Vec<f64>> {
                    let c = header.iter().position(|h| h == name).ok_or_else(|| {
                        MuskatError::config("initial_data.path", format!("no `{name}` column"))
                    })?;
                    Ok(rows.iter().map(|r| r[c]).collect())
                };
                InterfaceCurve::new(grid, col("z1")?, col("z2")?, 0.0, config.rho_bar)
                    .map_err(|e| MuskatError::config("initial_data.path", e.to_string()))
            } else {
                Ok(InterfaceCurve::from_graph(
                    &config.initial_field()?,
                    0.0,
                    config.rho_bar,
                ))
            }
        }
        _ => Ok(InterfaceCurve::from_graph(
            &config.initial_field()?,
            0.0,
            config.rho_bar,
        )),
    }
}

fn turning_record(curve: &InterfaceCurve) -> TurningRecord {
    TurningRecord {
        time: curve.time,
        turning_indicator: turning_indicator(curve),
        chord_arc_min: chord_arc_min(curve),
        param_ratio: param_ratio(curve),
    }
}

/// Evolve the configured curve with explicit RK4. The turning indicator is
/// checked after every step; its first zero crossing (interpolated linearly
/// between steps) is stored as `turning_time` and ends the run with status
/// `Turned`. Chord-arc and parametrization failures also halt the run.
pub fn run_curve(config: &SimConfig) -> Result<RunLog> {
    config.validate()?;
    if config.mode != Mode::Curve {
        return Err(MuskatError::config(
            "mode",
            "run_curve needs mode = \"curve\"",
        ));
    }
    let mut log = RunLog::new(config.clone());
    let mut t_end = config.t_final;
    if config.rho_bar <= 0.0 {
        log.flags.push("unstable_regime".into());
        let cap = crate::graph::unstable_time_cap(config);
        if t_end > cap {
            t_end = cap;
            log.flags
                .push(format!("t_final_capped_at_{}", crate::runlog::fmt_num(cap)));
        }
    }
    let mut curve = initial_curve(config)?.with_chord_arc_floor(config.chord_arc_floor);
    let ri = config.report_interval();
    let si = config.snapshot_interval();
    let record = |log: &mut RunLog, c: &InterfaceCurve, report: bool, snap: bool| {
        if report {
            log.reports.push(NormReport::compute(c.z2(), c.time));
            log.turning.push(turning_record(c));
        }
        if snap {
            log.snapshots.push(Snapshot {
                time: c.time,
                data: SnapshotData::Curve {
                    grid: c.grid,
                    z1: c.z1(),
                    z2: c.z2.samples().to_vec(),
                },
            });
        }
    };
    record(&mut log, &curve, true, true);
    let mut indicator = turning_indicator(&curve);
    if indicator <= 0.0 {
        log.status = RunStatus::Turned;
        log.turning_time = Some(0.0);
        return Ok(log);
    }
    let (mut kr, mut ks) = (0u64, 0u64);
    let tol = 1e-12 * t_end;
    while curve.time < t_end - tol {
        let next_r = ((kr + 1) as f64 * ri).min(t_end);
        let next_s = ((ks + 1) as f64 * si).min(t_end);
        let target = next_r.min(next_s);
        while curve.time < target - tol {
            let remaining = target - curve.time;
            let limit = curve_dt(&curve, config.cfl_factor);
            let steps = (remaining / limit * (1.0 - 1e-12)).ceil().max(1.0);
            let dt = remaining / steps;
            let next = match curve_step(&curve, dt, &config.quad) {
                Ok(c) => c,
                Err(e) => {
                    log.status = match e {
                        MuskatError::ChordArcViolation { .. } => {
                            RunStatus::SelfIntersectionSuspected
                        }
                        MuskatError::NonFiniteFlux { .. } => RunStatus::NonFinite,
                        other => return Err(other),
                    };
                    log.message = Some(e.to_string());
                    record(&mut log, &curve, true, true);
                    return Ok(log);
                }
            };
            let mut next = next;
            if steps <= 1.0 {
                next.time = target;
            }
            let next_indicator = turning_indicator(&next);
            if next_indicator <= 0.0 {
                let frac = indicator / (indicator - next_indicator);
                log.turning_time = Some(curve.time + frac * (next.time - curve.time));
                log.status = RunStatus::Turned;
                log.message = Some(format!("min z1' = {next_indicator} at t = {}", next.time));
                record(&mut log, &next, true, true);
                return Ok(log);
            }
            let ratio = param_ratio(&next);
            if ratio > MAX_PARAM_RATIO {
                log.status = RunStatus::ParametrizationDegraded;
                log.message = Some(format!("|z'| ratio {ratio} exceeds {MAX_PARAM_RATIO}"));
                record(&mut log, &next, true, true);
                return Ok(log);
            }
            indicator = next_indicator;
            curve = next;
        }
        let last = target >= t_end - tol;
        let is_r = (next_r - target).abs() <= tol;
        let is_s = (next_s - target).abs() <= tol;
        if is_r {
            kr += 1;
        }
        if is_s {
            ks += 1;
        }
        record(&mut log, &curve, is_r || last, is_s || last);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{flux_rational, GraphState};
    use approx::assert_relative_eq;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n, 2.0 * PI).unwrap()
    }

    #[test]
    fn flat_curve_is_fixed() {
        let g = grid(64);
        let c = InterfaceCurve::from_graph(&RealField::zeros(g), 0.0, PI);
        let (v1, v2) = curve_velocity(&c, &QuadratureSpec::default()).unwrap();
        assert!(v1.max_abs() < 1e-12 && v2.max_abs() < 1e-12);
        assert_eq!(turning_indicator(&c), 1.0);
        assert!(matches!(
            dalpha_v1_at_critical(&c, &QuadratureSpec::default(), DEFAULT_CRITICAL_TOL),
            Err(MuskatError::NoCriticalPoint { .. })
        ));
    }

    #[test]
    fn graph_curve_reproduces_graph_flux() {
        let g = grid(128);
        let f = RealField::from_fn(g, |x| 0.3 * x.sin() + 0.1 * (2.0 * x).cos()).remove_mean();
        let c = InterfaceCurve::from_graph(&f, 0.0, PI);
        let q = QuadratureSpec::default();
        let (v1, v2) = curve_velocity(&c, &q).unwrap();
        let flux = flux_rational(&GraphState::new(f, 0.0, PI).unwrap(), &q).unwrap();
        assert!(v1.max_abs() < 1e-14);
        assert!(v2.max_abs_diff(&flux) < 1e-12);
    }

    #[test]
    fn indicator_of_sheared_curve() {
        let g = grid(64);
        let z1: Vec<f64> = g.coordinates().iter().map(|a| a - 1.5 * a.sin()).collect();
        let c = InterfaceCurve::new(g, z1, vec![0.0; 64], 0.0, PI).unwrap();
        assert_relative_eq!(turning_indicator(&c), -0.5, max_relative = 1e-12);
    }

    #[test]
    fn velocity_translation_invariant() {
        let c = turning_profile(grid(64), 0.5, 1.0, PI);
        let q = QuadratureSpec::default();
        let (a1, a2) = curve_velocity(&c, &q).unwrap();
        let (b1, b2) = curve_velocity(&c.translated(0.7, -1.3), &q).unwrap();
        assert!(a1.max_abs_diff(&b1) < 1e-10 && a2.max_abs_diff(&b2) < 1e-10);
    }

    #[test]
    fn chord_arc_of_flat_curve_is_one() {
        let c = InterfaceCurve::from_graph(&RealField::zeros(grid(32)), 0.0, PI);
        assert_relative_eq!(chord_arc_min(&c), 1.0, max_relative = 1e-14);
        assert_relative_eq!(param_ratio(&c), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn chord_arc_floor_enforced() {
        let c = turning_profile(grid(32), 0.5, 1.0, PI).with_chord_arc_floor(0.99);
        assert!(matches!(
            curve_velocity(&c, &QuadratureSpec::default()),
            Err(MuskatError::ChordArcViolation { .. })
        ));
    }
}
