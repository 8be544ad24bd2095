use std::f64::consts::PI;

use muskat_core::config::slope_profile;
use muskat_core::corpus::random_band_limited;
use muskat_core::graph::{flux_arctan, flux_rational, GraphState, QuadratureSpec};
use muskat_core::grid::{PeriodicGrid, RealField};
use muskat_core::oracle::{
    convergence_study, delta_cos_integral, delta_sin2_integral, pv_flux_direct,
    pv_flux_direct_report,
};

fn state(f: RealField) -> GraphState {
    GraphState::new(f, 0.0, PI).unwrap()
}

#[test]
fn fast_fluxes_sit_inside_the_oracle_envelope() {
    let q = QuadratureSpec::default();
    let g = PeriodicGrid::new(128, 2.0 * PI).unwrap();
    for seed in 0..3 {
        for f in [
            slope_profile(g, 0.3 * (seed + 1) as f64),
            random_band_limited(g, 6, 1.0, 0.5, seed),
        ] {
            let s = state(f);
            let r = pv_flux_direct_report(&s).unwrap();
            let slack = r.envelope + 1e-12 * r.flux.max_abs();
            assert!(r.flux.max_abs_diff(&flux_arctan(&s, &q).unwrap()) <= slack);
            assert!(r.flux.max_abs_diff(&flux_rational(&s, &q).unwrap()) <= slack);
        }
    }
}

#[test]
fn exclusion_ladder_shrinks_geometrically() {
    let g = PeriodicGrid::new(256, 2.0 * PI).unwrap();
    let r = pv_flux_direct_report(&state(random_band_limited(g, 8, 1.0, 0.4, 5))).unwrap();
    // the leading error is linear in eps, so halving eps halves the gap
    assert!((1.6..2.4).contains(&r.ladder_ratio), "{}", r.ladder_ratio);
}

#[test]
fn oracle_is_deterministic_and_odd() {
    let g = PeriodicGrid::new(64, 2.0).unwrap();
    let f = random_band_limited(g, 5, 1.0, 0.3, 9);
    let a = pv_flux_direct(&state(f.clone())).unwrap();
    assert_eq!(a, pv_flux_direct(&state(f.clone())).unwrap());
    let b = pv_flux_direct(&state(f.scale(-1.0))).unwrap();
    assert!(a.max_abs_diff(&b.scale(-1.0)) < 1e-14 * a.max_abs());
}

#[test]
fn single_mode_study_is_resolved() {
    // the flux of a mode is not a mode; its harmonics need N >= 64 here
    let g = PeriodicGrid::new(256, 2.0 * PI).unwrap();
    let f = RealField::from_fn(g, |x| 0.2 * (3.0 * x).cos());
    let r = convergence_study(&f, &[64, 128, 256], PI, &QuadratureSpec::default()).unwrap();
    assert_eq!(r.resolutions, vec![64, 128]);
    assert_eq!(r.reference, 256);
    assert!(r.errors.iter().all(|e| *e < 1e-10), "{:?}", r.errors);
}

#[test]
fn constant_field_has_zero_error() {
    let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
    let r = convergence_study(
        &RealField::zeros(g),
        &[16, 32, 64],
        PI,
        &QuadratureSpec::default(),
    )
    .unwrap();
    assert!(r.errors.iter().all(|e| *e == 0.0));
    assert_eq!(r.rate, f64::INFINITY);
}

#[test]
fn slope_profile_converges_fast() {
    let g = PeriodicGrid::new(256, 2.0 * PI).unwrap();
    let r = convergence_study(
        &slope_profile(g, 0.9),
        &[32, 64, 128, 256],
        PI,
        &QuadratureSpec::default(),
    )
    .unwrap();
    for w in r.errors.windows(2) {
        assert!(w[1] < w[0], "{:?}", r.errors);
    }
    assert!(r.rate >= 2.0, "{}", r.rate);
}

#[test]
fn convergence_needs_two_grids() {
    let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
    assert!(convergence_study(
        &RealField::zeros(g),
        &[64, 64],
        PI,
        &QuadratureSpec::default()
    )
    .is_err());
}

#[test]
fn delta_integrals_match_closed_forms() {
    for a in [0.0, 0.3, 1.0, 5.0, 20.0] {
        let c = 1.0 / (1.0 + a * a);
        assert!((delta_cos_integral(a) - c).abs() < 1e-12, "{a}");
        assert!(
            (delta_sin2_integral(a) - 0.5 * a * a * c).abs() < 1e-12,
            "{a}"
        );
    }
}
