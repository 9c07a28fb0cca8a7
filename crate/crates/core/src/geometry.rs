//! Axisymmetric discretization of the round sphere.
//!
//! Fields invariant under rotation about the polar axis are functions of the
//! height coordinate `s = (|w|^2 - 1)/(|w|^2 + 1)` in `[-1, 1]`, where `w` is
//! the affine coordinate. Such functions are smooth in `s` up to the poles, so
//! Chebyshev collocation on the Gauss-Lobatto nodes is spectrally accurate and
//! the poles are ordinary grid points.
//!
//! Conventions (see `conventions.md`):
//!
//! * the round metric `ω_FS` has total area `2π`, so `∫ f ω_FS = π ∫ f(s) ds`;
//! * the Laplacian is the non-negative one, `Δ = 2iΛ∂̄∂`; on the round metric
//!   `Δ f = -2 d/ds((1 - s^2) df/ds)`, hence `Δ s = 4 s`;
//! * a conformal metric is `ω = e^{2u} ω_FS`, with `Δ_ω = e^{-2u} Δ_FS` and
//!   scalar curvature `S_ω = e^{-2u}(4 + 2 Δ_FS u)`, normalized to agree with
//!   the Riemannian scalar curvature, so `∫ S_ω ω = 8π`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Grid scalar: one value per collocation node.
pub type Field = DVector<f64>;

/// Total area of the reference round metric.
pub const SPHERE_VOLUME: f64 = 2.0 * PI;

/// Scalar curvature of the round metric of area `2π` (radius `1/√2`).
pub const ROUND_SCALAR_CURVATURE: f64 = 4.0;

pub const MIN_NODES: usize = 33;
pub const MAX_NODES: usize = 4097;

/// Chebyshev-Gauss-Lobatto collocation grid on `s ∈ [-1, 1]`.
#[derive(Debug, Clone)]
pub struct AxisymGrid {
    nodes: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    weights: Vec<f64>,
    lap_fs: DMatrix<f64>,
}

/// Builds the collocation grid with `n` nodes.
///
/// `n` must be odd and lie in `33..=4097`.
pub fn build_grid(n: usize) -> Result<AxisymGrid> {
    if n % 2 == 0 {
        return Err(Error::Config(format!("n must be odd, got {n}")));
    }
    if !(MIN_NODES..=MAX_NODES).contains(&n) {
        return Err(Error::Config(format!(
            "n must lie in {MIN_NODES}..={MAX_NODES}, got {n}"
        )));
    }
    let m = n - 1;
    let mf = m as f64;
    // s_k = -cos(πk/m), written as a sine so that s_{m-k} = -s_k exactly.
    let nodes: Vec<f64> = (0..n)
        .map(|k| (PI * (2.0 * k as f64 - mf) / (2.0 * mf)).sin())
        .collect();
    let theta = |k: usize| PI * k as f64 / mf;

    let c = |k: usize| if k == 0 || k == m { 2.0 } else { 1.0 };
    let mut d1 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            // s_i - s_j = 2 sin((θ_i + θ_j)/2) sin((θ_i - θ_j)/2), without cancellation.
            let diff =
                2.0 * ((theta(i) + theta(j)) / 2.0).sin() * ((theta(i) - theta(j)) / 2.0).sin();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            d1[(i, j)] = c(i) / c(j) * sign / diff;
        }
    }
    for i in 0..n {
        let off: f64 = pairwise_sum((0..n).filter(|&j| j != i).map(|j| d1[(i, j)]));
        d1[(i, i)] = -off;
    }

    // Second derivative from the first: D2_ij = 2 D_ij (D_ii - 1/(s_i - s_j)), i != j.
    let mut d2 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let diff =
                2.0 * ((theta(i) + theta(j)) / 2.0).sin() * ((theta(i) - theta(j)) / 2.0).sin();
            d2[(i, j)] = 2.0 * d1[(i, j)] * (d1[(i, i)] - 1.0 / diff);
        }
    }
    for i in 0..n {
        let off: f64 = pairwise_sum((0..n).filter(|&j| j != i).map(|j| d2[(i, j)]));
        d2[(i, i)] = -off;
    }

    let weights = clenshaw_curtis_weights(m);

    let mut lap_fs = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let s = nodes[i];
        for j in 0..n {
            lap_fs[(i, j)] = -2.0 * ((1.0 - s * s) * d2[(i, j)] - 2.0 * s * d1[(i, j)]);
        }
        // Constants are in the kernel exactly.
        let off: f64 = pairwise_sum((0..n).filter(|&j| j != i).map(|j| lap_fs[(i, j)]));
        lap_fs[(i, i)] = -off;
    }

    Ok(AxisymGrid {
        nodes,
        d1,
        d2,
        weights,
        lap_fs,
    })
}

fn clenshaw_curtis_weights(m: usize) -> Vec<f64> {
    let mf = m as f64;
    let mut w = vec![0.0; m + 1];
    // m is even for odd node counts.
    w[0] = 1.0 / (mf * mf - 1.0);
    w[m] = w[0];
    for (k, wk) in w.iter_mut().enumerate().take(m).skip(1) {
        let th = PI * k as f64 / mf;
        let mut v = 1.0 - (mf * th).cos() / (mf * mf - 1.0);
        for j in 1..m / 2 {
            let jf = j as f64;
            v -= 2.0 * (2.0 * jf * th).cos() / (4.0 * jf * jf - 1.0);
        }
        *wk = 2.0 * v / mf;
    }
    w
}

impl AxisymGrid {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// First-derivative collocation matrix.
    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    /// Second-derivative collocation matrix.
    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    /// Clenshaw-Curtis weights for `∫_{-1}^{1} f(s) ds`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Matrix of the round-metric Laplacian `Δ_FS`.
    pub fn laplacian_fs_matrix(&self) -> &DMatrix<f64> {
        &self.lap_fs
    }

    /// Samples `f` at the nodes.
    pub fn field_from_fn(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_iterator(self.n(), self.nodes.iter().map(|&s| f(s)))
    }

    pub fn constant(&self, value: f64) -> Field {
        Field::from_element(self.n(), value)
    }

    pub fn derivative(&self, f: &Field) -> Field {
        &self.d1 * f
    }

    /// `∫_{-1}^{1} f(s) ds` with compensated summation.
    pub fn integrate_ds(&self, f: &Field) -> f64 {
        pairwise_sum(self.weights.iter().zip(f.iter()).map(|(w, v)| w * v))
    }

    /// Field reflected through the equator, `f(s) ↦ f(-s)`.
    pub fn reflect(&self, f: &Field) -> Field {
        let n = self.n();
        Field::from_iterator(n, (0..n).map(|k| f[n - 1 - k]))
    }

    /// Sup norm of the odd part of `f`.
    pub fn odd_part_sup(&self, f: &Field) -> f64 {
        let r = self.reflect(f);
        (f - r).amax() / 2.0
    }

    /// Chebyshev coefficients `f = Σ_j c_j T_j(s)` of the interpolant.
    pub fn chebyshev_coefficients(&self, f: &Field) -> Vec<f64> {
        let n = self.n();
        let m = n - 1;
        let mf = m as f64;
        (0..n)
            .map(|j| {
                let terms = (0..n).map(|k| {
                    // s_k = cos(π(m-k)/m)
                    let t = (j as f64 * PI * (m - k) as f64 / mf).cos();
                    let half = if k == 0 || k == m { 0.5 } else { 1.0 };
                    half * f[k] * t
                });
                let scale = if j == 0 || j == m { 1.0 / mf } else { 2.0 / mf };
                scale * pairwise_sum(terms)
            })
            .collect()
    }

    /// Antiderivative `F(s) = ∫_{-1}^{s} f(t) dt` of the interpolant, exact in
    /// the Chebyshev basis.
    pub fn antiderivative(&self, f: &Field) -> Field {
        let c = self.chebyshev_coefficients(f);
        let n = self.n();
        let m = n - 1;
        let coef = |j: usize| if j <= m { c[j] } else { 0.0 };
        // Coefficients of the integral, degree up to m + 1.
        let mut big = vec![0.0; m + 2];
        big[1] = coef(0) - coef(2) / 2.0;
        for (j, b) in big.iter_mut().enumerate().skip(2) {
            *b = (coef(j - 1) - coef(j + 1)) / (2.0 * j as f64);
        }
        // T_j(-1) = (-1)^j fixes the constant so that F(-1) = 0.
        let at_minus_one: f64 = pairwise_sum(
            big.iter()
                .enumerate()
                .skip(1)
                .map(|(j, b)| if j % 2 == 0 { *b } else { -*b }),
        );
        big[0] = -at_minus_one;
        let mf = m as f64;
        Field::from_iterator(
            n,
            (0..n).map(|k| {
                let th = PI * (m - k) as f64 / mf;
                pairwise_sum(big.iter().enumerate().map(|(j, b)| b * (j as f64 * th).cos()))
            }),
        )
    }

    /// Barycentric interpolation of nodal values at arbitrary points of `[-1, 1]`.
    pub fn interpolate(&self, f: &Field, points: &[f64]) -> Vec<f64> {
        let n = self.n();
        let m = n - 1;
        let bw = |k: usize| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == m {
                0.5 * sign
            } else {
                sign
            }
        };
        points
            .iter()
            .map(|&x| {
                if let Some(k) = self.nodes.iter().position(|&s| s == x) {
                    return f[k];
                }
                let mut num = 0.0;
                let mut den = 0.0;
                for k in 0..n {
                    let t = bw(k) / (x - self.nodes[k]);
                    num += t * f[k];
                    den += t;
                }
                num / den
            })
            .collect()
    }
}

/// Order-fixed pairwise summation with a compensated base case.
pub(crate) fn pairwise_sum(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    pairwise_slice(&v)
}

fn pairwise_slice(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &x in v {
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
        }
        sum + comp
    } else {
        let mid = v.len() / 2;
        pairwise_slice(&v[..mid]) + pairwise_slice(&v[mid..])
    }
}

/// Conformal Kähler metric `ω = e^{2u} ω_FS` on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalMetric {
    pub u: Field,
    pub vol_target: f64,
}

impl ConformalMetric {
    /// The round metric of area `2π`.
    pub fn round(grid: &AxisymGrid) -> Self {
        ConformalMetric {
            u: grid.constant(0.0),
            vol_target: SPHERE_VOLUME,
        }
    }

    /// Area form density against `ω_FS`.
    pub fn density(&self) -> Field {
        self.u.map(|u| (2.0 * u).exp())
    }

    pub fn volume(&self, grid: &AxisymGrid) -> f64 {
        PI * grid.integrate_ds(&self.density())
    }
}

/// Shifts `u_raw` by a constant so that `∫ e^{2u} ω_FS = 2π`.
pub fn normalize_volume(grid: &AxisymGrid, u_raw: &Field) -> Result<ConformalMetric> {
    normalize_volume_to(grid, u_raw, SPHERE_VOLUME)
}

pub fn normalize_volume_to(
    grid: &AxisymGrid,
    u_raw: &Field,
    vol_target: f64,
) -> Result<ConformalMetric> {
    check_len(grid, u_raw, "u")?;
    ensure_finite("u", u_raw.as_slice())?;
    if !(vol_target > 0.0 && vol_target.is_finite()) {
        return Err(Error::Config(format!(
            "target volume must be positive, got {vol_target}"
        )));
    }
    let vol = PI * grid.integrate_ds(&u_raw.map(|u| (2.0 * u).exp()));
    let shift = 0.5 * (vol_target / vol).ln();
    Ok(ConformalMetric {
        u: u_raw.add_scalar(shift),
        vol_target,
    })
}

pub(crate) fn check_len(grid: &AxisymGrid, f: &Field, what: &str) -> Result<()> {
    if f.len() != grid.n() {
        return Err(Error::InvalidInput(format!(
            "{what} has {} entries, grid has {} nodes",
            f.len(),
            grid.n()
        )));
    }
    Ok(())
}

/// `Δ_ω f = e^{-2u} Δ_FS f`.
pub fn laplacian(grid: &AxisymGrid, metric: &ConformalMetric, f: &Field) -> Result<Field> {
    check_len(grid, f, "f")?;
    ensure_finite("f", f.as_slice())?;
    let lap = grid.laplacian_fs_matrix() * f;
    Ok(lap.component_mul(&metric.u.map(|u| (-2.0 * u).exp())))
}

/// `∫ f ω`.
pub fn integrate(grid: &AxisymGrid, metric: &ConformalMetric, f: &Field) -> Result<f64> {
    check_len(grid, f, "f")?;
    ensure_finite("f", f.as_slice())?;
    Ok(PI * grid.integrate_ds(&f.component_mul(&metric.density())))
}

/// Scalar curvature with its integral and mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub s_field: Field,
    pub total: f64,
    pub mean: f64,
}

pub fn scalar_curvature(grid: &AxisymGrid, metric: &ConformalMetric) -> Result<CurvatureReport> {
    check_len(grid, &metric.u, "u")?;
    ensure_finite("u", metric.u.as_slice())?;
    let lap_u = grid.laplacian_fs_matrix() * &metric.u;
    let s_field = Field::from_iterator(
        grid.n(),
        lap_u
            .iter()
            .zip(metric.u.iter())
            .map(|(l, u)| (-2.0 * u).exp() * (ROUND_SCALAR_CURVATURE + 2.0 * l)),
    );
    let total = integrate(grid, metric, &s_field)?;
    let mean = total / metric.volume(grid);
    Ok(CurvatureReport {
        s_field,
        total,
        mean,
    })
}

/// Writes `s,value` rows with 17 significant digits.
pub fn write_profile_csv<W: Write>(
    out: &mut W,
    grid: &AxisymGrid,
    columns: &[(&str, &Field)],
) -> Result<()> {
    let mut header = String::from("s");
    for (name, f) in columns {
        check_len(grid, f, name)?;
        header.push(',');
        header.push_str(name);
    }
    writeln!(out, "{header}")?;
    for (k, s) in grid.nodes().iter().enumerate() {
        let mut line = format!("{s:.16e}");
        for (_, f) in columns {
            line.push_str(&format!(",{:.16e}", f[k]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
