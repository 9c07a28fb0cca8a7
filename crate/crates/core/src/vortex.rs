//! Abelian vortex equation at a fixed Kähler metric, and the rank-2 residual.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::fields::{higgs_profile, HiggsConfig};
use crate::forms::q_int;
use crate::geometry::{check_len, integrate, AxisymGrid, ConformalMetric, Field};
use crate::newton::{damped_newton, NewtonOptions, SolveReport};

/// Relative potentials `v_j` with `H_j = H_FS e^{2 v_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMetricPotential {
    pub v: Vec<Field>,
}

impl BundleMetricPotential {
    pub fn single(v: Field) -> Self {
        BundleMetricPotential { v: vec![v] }
    }

    pub fn fubini_study(grid: &AxisymGrid, rank: usize) -> Self {
        BundleMetricPotential {
            v: vec![grid.constant(0.0); rank],
        }
    }

    /// `|φ_j|²_H = e^{2 v_j} |φ_j|²_FS`.
    pub fn higgs_norm(&self, grid: &AxisymGrid, config: &HiggsConfig, j: usize) -> Result<Field> {
        let p = higgs_profile(grid, config, j)?;
        let v = self
            .v
            .get(j)
            .ok_or_else(|| Error::InvalidInput(format!("no potential for component {j}")))?;
        Ok(p.zip_map(v, |p, v| p * (2.0 * v).exp()))
    }
}

fn check_inputs(grid: &AxisymGrid, metric: &ConformalMetric, v: &Field) -> Result<()> {
    check_len(grid, &metric.u, "u")?;
    check_len(grid, v, "v")?;
    ensure_finite("u", metric.u.as_slice())?;
    ensure_finite("v", v.as_slice())
}

/// `iΛ_ω F` of `H_FS e^{2v}` on `O(N)`: `e^{-2u}(N + Δ_FS v)`.
pub fn bundle_curvature(
    grid: &AxisymGrid,
    metric: &ConformalMetric,
    degree: f64,
    v: &Field,
) -> Result<Field> {
    check_inputs(grid, metric, v)?;
    let lap = grid.laplacian_fs_matrix() * v;
    Ok(lap.zip_map(&metric.u, |l, u| (-2.0 * u).exp() * (degree + l)))
}

/// `R1 = iΛ_ω F_H + ½(|φ|²_H - τ)`.
pub fn vortex_residual(
    grid: &AxisymGrid,
    metric: &ConformalMetric,
    v: &BundleMetricPotential,
    config: &HiggsConfig,
) -> Result<Field> {
    config.require_rank(1)?;
    config.validate()?;
    let v0 = v
        .v
        .first()
        .ok_or_else(|| Error::InvalidInput("empty bundle potential".into()))?;
    let p = higgs_profile(grid, config, 0)?;
    Ok(residual_raw(grid, metric, v0, &p, config.degrees[0] as f64, config.tau_f64())?)
}

pub(crate) fn residual_raw(
    grid: &AxisymGrid,
    metric: &ConformalMetric,
    v: &Field,
    profile: &Field,
    degree: f64,
    tau: f64,
) -> Result<Field> {
    let curv = bundle_curvature(grid, metric, degree, v)?;
    Ok(Field::from_iterator(
        grid.n(),
        (0..grid.n()).map(|k| curv[k] + 0.5 * ((2.0 * v[k]).exp() * profile[k] - tau)),
    ))
}

/// `∂R1/∂v = e^{-2u} Δ_FS + diag(e^{2v}|φ|²_FS)`.
pub(crate) fn residual_jacobian(
    grid: &AxisymGrid,
    metric: &ConformalMetric,
    v: &Field,
    profile: &Field,
) -> DMatrix<f64> {
    let mut jac = grid.laplacian_fs_matrix().clone();
    for (i, mut row) in jac.row_iter_mut().enumerate() {
        row *= (-2.0 * metric.u[i]).exp();
    }
    for i in 0..grid.n() {
        jac[(i, i)] += (2.0 * v[i]).exp() * profile[i];
    }
    jac
}

/// Existence window `N < τ/2`, checked exactly.
pub fn abelian_window(config: &HiggsConfig) -> bool {
    config.rank() == 1 && (q_int(2 * config.degrees[0] as i64) - &config.tau).is_negative()
}

/// Damped Newton from `v = 0`.
pub fn solve_vortex(
    grid: &AxisymGrid,
    metric: &ConformalMetric,
    config: &HiggsConfig,
    options: &NewtonOptions,
) -> Result<(BundleMetricPotential, SolveReport)> {
    solve_vortex_from(grid, metric, config, options, &grid.constant(0.0))
}

pub fn solve_vortex_from(
    grid: &AxisymGrid,
    metric: &ConformalMetric,
    config: &HiggsConfig,
    options: &NewtonOptions,
    initial: &Field,
) -> Result<(BundleMetricPotential, SolveReport)> {
    config.require_rank(1)?;
    config.validate()?;
    check_inputs(grid, metric, initial)?;
    if !abelian_window(config) {
        return Err(Error::Infeasible(format!(
            "N < tau/2 fails for N = {}, tau = {}",
            config.degrees[0], config.tau
        )));
    }
    let p = higgs_profile(grid, config, 0)?;
    let degree = config.degrees[0] as f64;
    let tau = config.tau_f64();
    let (v, report) = damped_newton(
        initial.clone(),
        |v| residual_raw(grid, metric, v, &p, degree, tau),
        |v| Ok(residual_jacobian(grid, metric, v, &p)),
        options,
        grid.n(),
    )?;
    Ok((BundleMetricPotential::single(v), report))
}

/// S¹-equivariant Hermitian metric on `O(N1) ⊕ O(N2)`: in the Fubini–Study
/// unitary frame at `θ = 0` it is `[[e^{2v1}, q], [q, e^{2v2}]]`, the
/// off-diagonal entry carrying the phase `e^{i(ℓ1-ℓ2)θ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivariantMetric {
    pub v1: Field,
    pub v2: Field,
    pub q: Field,
}

impl EquivariantMetric {
    pub fn diagonal(v1: Field, v2: Field) -> Self {
        let q = Field::zeros(v1.len());
        EquivariantMetric { v1, v2, q }
    }

    fn matrix(&self, k: usize) -> Matrix2<f64> {
        Matrix2::new(
            (2.0 * self.v1[k]).exp(),
            self.q[k],
            self.q[k],
            (2.0 * self.v2[k]).exp(),
        )
    }
}

/// 2×2 field, entry `[i][j]` at each node.
pub type MatrixField = [[Field; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonabelianResidual {
    /// Residual in an `H`-unitary frame (real symmetric at `θ = 0`).
    pub residual: MatrixField,
    /// `iΛ_ω F_H` in the same frame.
    pub curvature: MatrixField,
    /// Fourier weight of the off-diagonal entries.
    pub off_diagonal_weight: i64,
    pub trace_integral: f64,
    /// `2π(N1+N2) + ½∫|φ|²_H ω - 2πτ`.
    pub trace_expected: f64,
}

/// Residual of `iΛ_ω F_H + ½ φ⊗φ^{*H} - (τ/2) Id` for monomial `φ`.
pub fn nonabelian_residual(
    grid: &AxisymGrid,
    metric: &ConformalMetric,
    h: &EquivariantMetric,
    config: &HiggsConfig,
) -> Result<NonabelianResidual> {
    config.require_rank(2)?;
    config.validate()?;
    let phi = [higgs_profile(grid, config, 0)?, higgs_profile(grid, config, 1)?];
    let phi = phi.map(|p| p.map(f64::sqrt));
    nonabelian_residual_with_profiles(
        grid,
        metric,
        h,
        [config.degrees[0] as f64, config.degrees[1] as f64],
        config.exponents[0] as i64 - config.exponents[1] as i64,
        config.tau_f64(),
        &phi,
    )
}

/// Same as [`nonabelian_residual`] with explicit Fubini–Study moduli `|φ_j|_FS`
/// (a component may be identically zero).
pub fn nonabelian_residual_with_profiles(
    grid: &AxisymGrid,
    metric: &ConformalMetric,
    h: &EquivariantMetric,
    degrees: [f64; 2],
    weight: i64,
    tau: f64,
    phi: &[Field; 2],
) -> Result<NonabelianResidual> {
    let n = grid.n();
    for (f, name) in [(&h.v1, "v1"), (&h.v2, "v2"), (&h.q, "q"), (&phi[0], "phi1"), (&phi[1], "phi2")] {
        check_len(grid, f, name)?;
        ensure_finite(name, f.as_slice())?;
    }
    check_len(grid, &metric.u, "u")?;
    ensure_finite("u", metric.u.as_slice())?;
    let s = grid.nodes();
    let kf = weight as f64;
    let lam = |k: usize| {
        Matrix2::new(
            -degrees[0] * (1.0 + s[k]) / 2.0,
            0.0,
            0.0,
            -degrees[1] * (1.0 + s[k]) / 2.0,
        )
    };
    let kmul = |a: &Matrix2<f64>| Matrix2::new(0.0, kf * a[(0, 1)], -kf * a[(1, 0)], 0.0);

    let mut p = Vec::with_capacity(n);
    let mut pinv = Vec::with_capacity(n);
    for k in 0..n {
        let m = h.matrix(k);
        let inv = m
            .try_inverse()
            .filter(|_| m[(0, 0)] * m[(1, 1)] > m[(0, 1)] * m[(0, 1)])
            .ok_or_else(|| {
                Error::InvalidInput(format!("metric is not positive definite at s = {}", s[k]))
            })?;
        p.push(m);
        pinv.push(inv);
    }
    let dp = entrywise_derivative(grid, &p);
    let y: Vec<Matrix2<f64>> = (0..n)
        .map(|k| {
            let l = lam(k);
            pinv[k] * l * p[k] + l + (1.0 - s[k] * s[k]) * pinv[k] * dp[k] + pinv[k] * kmul(&p[k])
        })
        .collect();
    let dy = entrywise_derivative(grid, &y);
    let x: Vec<Matrix2<f64>> = (0..n)
        .map(|k| {
            let l = lam(k);
            (1.0 - s[k] * s[k]) * dy[k] + (y[k] * l - l * y[k]) - kmul(&y[k])
        })
        .collect();
    let dx = entrywise_derivative(grid, &x);

    let mut curv = [[Field::zeros(n), Field::zeros(n)], [Field::zeros(n), Field::zeros(n)]];
    let mut res = curv.clone();
    let mut trace = Field::zeros(n);
    let mut phi_h = Field::zeros(n);
    for k in 0..n {
        let conf = (-2.0 * metric.u[k]).exp();
        let w = 1.0 - s[k] * s[k];
        // Diagonal entries of x carry the factor (1-s²) exactly; off-diagonal
        // ones vanish at the poles and are resolved by l'Hôpital there.
        let mut f = Matrix2::zeros();
        for (i, j) in [(0, 0), (1, 1)] {
            f[(i, j)] = -conf * dy[k][(i, j)];
        }
        for (i, j) in [(0, 1), (1, 0)] {
            f[(i, j)] = if w == 0.0 {
                -conf * dx[k][(i, j)] / (-2.0 * s[k])
            } else {
                -conf * x[k][(i, j)] / w
            };
        }
        let ph = nalgebra::Vector2::new(phi[0][k], phi[1][k]);
        let higgs = ph * ph.transpose() * p[k];
        let e = f + 0.5 * higgs - 0.5 * tau * Matrix2::identity();
        let (c, cinv) = sqrt_and_inverse(&p[k]);
        let fu = c * f * cinv;
        let eu = c * e * cinv;
        for i in 0..2 {
            for j in 0..2 {
                curv[i][j][k] = fu[(i, j)];
                res[i][j][k] = eu[(i, j)];
            }
        }
        trace[k] = e.trace();
        phi_h[k] = (ph.transpose() * p[k] * ph)[(0, 0)];
    }
    let trace_integral = integrate(grid, metric, &trace)?;
    let trace_expected = 2.0 * std::f64::consts::PI * (degrees[0] + degrees[1])
        + 0.5 * integrate(grid, metric, &phi_h)?
        - 2.0 * std::f64::consts::PI * tau;
    Ok(NonabelianResidual {
        residual: res,
        curvature: curv,
        off_diagonal_weight: weight,
        trace_integral,
        trace_expected,
    })
}

fn entrywise_derivative(grid: &AxisymGrid, m: &[Matrix2<f64>]) -> Vec<Matrix2<f64>> {
    let n = m.len();
    let mut out = vec![Matrix2::zeros(); n];
    for i in 0..2 {
        for j in 0..2 {
            let f = DVector::from_iterator(n, m.iter().map(|a| a[(i, j)]));
            let d = grid.derivative(&f);
            for k in 0..n {
                out[k][(i, j)] = d[k];
            }
        }
    }
    out
}

fn sqrt_and_inverse(p: &Matrix2<f64>) -> (Matrix2<f64>, Matrix2<f64>) {
    let eig = SymmetricEigen::new(*p);
    let q = eig.eigenvectors;
    let d = eig.eigenvalues.map(f64::sqrt);
    let c = q * Matrix2::from_diagonal(&d) * q.transpose();
    let cinv = q * Matrix2::from_diagonal(&d.map(|x| 1.0 / x)) * q.transpose();
    (c, cinv)
}
