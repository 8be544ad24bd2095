//! Seeded random test fields.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::{PeriodicGrid, RealField};

/// Mean-zero trigonometric polynomial with modes `1..=max_mode`, Gaussian
/// amplitudes of standard deviation `k^{-decay}` and uniform phases, scaled so
/// that its largest sample has modulus `amplitude`.
pub fn random_band_limited(
    grid: PeriodicGrid,
    max_mode: usize,
    decay: f64,
    amplitude: f64,
    seed: u64,
) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_mode = max_mode.clamp(1, grid.n_points() / 2 - 1);
    let xi = 2.0 * PI / grid.length();
    let modes: Vec<(f64, f64, f64)> = (1..=max_mode)
        .map(|k| {
            let a: f64 = rng.sample::<f64, _>(StandardNormal) * (k as f64).powf(-decay);
            let phase = rng.gen_range(0.0..2.0 * PI);
            (k as f64 * xi, a, phase)
        })
        .collect();
    let raw = RealField::from_fn(grid, |x| {
        modes.iter().map(|(w, a, b)| a * (w * x + b).cos()).sum()
    });
    let peak = raw.max_abs();
    if peak == 0.0 {
        return raw;
    }
    raw.scale(amplitude / peak).remove_mean()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::forward_transform;

    #[test]
    fn seeded_and_band_limited() {
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let a = random_band_limited(g, 5, 1.0, 0.5, 7);
        assert_eq!(a, random_band_limited(g, 5, 1.0, 0.5, 7));
        assert_ne!(a, random_band_limited(g, 5, 1.0, 0.5, 8));
        let spec = forward_transform(&a);
        for k in 6..32 {
            assert!(spec.coefficient(k).norm() < 1e-15);
        }
        assert!(a.mean().abs() < 1e-15);
    }
}
