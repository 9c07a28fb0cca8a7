//! Seeded random data shared by the integration tests.
#![allow(dead_code)]

use kymh::geometry::{normalize_volume, AxisymGrid, ConformalMetric, Field};
use kymh::quiver::{CMatrix, Model, PointData};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth axisymmetric field: low Chebyshev modes plus one oscillation.
pub fn smooth_field(grid: &AxisymGrid, rng: &mut impl Rng, amplitude: f64) -> Field {
    let a: Vec<f64> = (0..5).map(|_| rng.gen_range(-amplitude..amplitude)).collect();
    let (b, c) = (rng.gen_range(-amplitude..amplitude), rng.gen_range(0.5..3.0));
    grid.field_from_fn(|s| {
        let t = s.clamp(-1.0, 1.0).acos();
        a.iter().enumerate().map(|(k, ak)| ak * (k as f64 * t).cos()).sum::<f64>() + b * (c * s).sin()
    })
}

pub fn random_metric(grid: &AxisymGrid, rng: &mut impl Rng) -> ConformalMetric {
    normalize_volume(grid, &smooth_field(grid, rng, 0.3)).unwrap()
}

fn complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_map(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

/// `A A^† + Id`, positive definite.
pub fn random_metric_matrix(r: usize, rng: &mut impl Rng) -> CMatrix {
    let a = random_map(r, r, rng);
    &a * a.adjoint() + CMatrix::identity(r, r)
}

/// Random metrics, maps and curvature at every grid node.
pub fn random_points(model: &Model, n: usize, rng: &mut impl Rng) -> Vec<PointData> {
    (0..n)
        .map(|_| {
            let metrics = model.ranks.iter().map(|&r| random_metric_matrix(r, rng)).collect();
            let sections = model
                .quiver
                .arrows
                .iter()
                .map(|(_, t, h)| random_map(model.ranks[*h], model.ranks[*t], rng))
                .collect();
            let curvature = model.ranks.iter().map(|&r| random_metric_matrix(r, rng)).collect();
            PointData {
                metrics,
                sections,
                curvature,
            }
        })
        .collect()
}
