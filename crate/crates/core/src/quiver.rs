//! Quiver bundles: commutators, the trace identity, parameters and the
//! gravitating quiver vortex residuals on the sphere.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::geometry::{
    check_len, integrate, laplacian, scalar_curvature, AxisymGrid, ConformalMetric, Field,
};
use crate::vortex::bundle_curvature;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    /// Monomial `x0^{d-e} x1^e` of `O(d)`, `d = d_head - d_tail`; absent for the zero map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<u32>,
    /// Constant factor in front of the monomial.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

/// Quiver with explicit head and tail maps, so parallel arrows are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Quiver {
    pub vertices: Vec<String>,
    pub arrows: Vec<(String, usize, usize)>,
}

impl Quiver {
    pub fn head(&self, a: usize) -> usize {
        self.arrows[a].2
    }

    pub fn tail(&self, a: usize) -> usize {
        self.arrows[a].1
    }
}

/// Vertex bundles, arrow sections and the parameters `(ρ, σ, τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuiverBundleSpec {
    pub vertices: Vec<String>,
    pub arrows: Vec<ArrowSpec>,
    pub ranks: BTreeMap<String, usize>,
    pub degrees: BTreeMap<String, i64>,
    pub sigma: BTreeMap<String, f64>,
    pub tau: BTreeMap<String, f64>,
    pub rho: f64,
}

/// Index-based view of a validated spec.
#[derive(Debug, Clone)]
pub struct Model {
    pub quiver: Quiver,
    pub ranks: Vec<usize>,
    pub degrees: Vec<i64>,
    pub sigma: Vec<f64>,
    pub tau: Vec<f64>,
    pub rho: f64,
    pub sections: Vec<Option<(u32, f64)>>,
}

impl QuiverBundleSpec {
    pub fn model(&self) -> Result<Model> {
        let mut problems = Vec::new();
        let mut index = HashMap::new();
        for (k, v) in self.vertices.iter().enumerate() {
            if index.insert(v.as_str(), k).is_some() {
                problems.push(format!("vertex {v:?} listed twice"));
            }
        }
        let lookup = |map_name: &str, key: &String, problems: &mut Vec<String>| {
            if !index.contains_key(key.as_str()) {
                problems.push(format!("{map_name} refers to unknown vertex {key:?}"));
            }
        };
        for k in self.ranks.keys() {
            lookup("ranks", k, &mut problems);
        }
        for k in self.degrees.keys() {
            lookup("degrees", k, &mut problems);
        }
        for k in self.sigma.keys() {
            lookup("sigma", k, &mut problems);
        }
        for k in self.tau.keys() {
            lookup("tau", k, &mut problems);
        }
        let mut ranks = Vec::new();
        let mut degrees = Vec::new();
        let mut sigma = Vec::new();
        let mut tau = Vec::new();
        for v in &self.vertices {
            let r = self.ranks.get(v).copied().unwrap_or_else(|| {
                problems.push(format!("missing rank for vertex {v:?}"));
                1
            });
            if r == 0 {
                problems.push(format!("rank of vertex {v:?} must be positive"));
            }
            ranks.push(r);
            degrees.push(self.degrees.get(v).copied().unwrap_or_else(|| {
                problems.push(format!("missing degree for vertex {v:?}"));
                0
            }));
            let s = self.sigma.get(v).copied().unwrap_or_else(|| {
                problems.push(format!("missing sigma for vertex {v:?}"));
                1.0
            });
            if !(s > 0.0 && s.is_finite()) {
                problems.push(format!("sigma of vertex {v:?} must be positive"));
            }
            sigma.push(s);
            let t = self.tau.get(v).copied().unwrap_or_else(|| {
                problems.push(format!("missing tau for vertex {v:?}"));
                0.0
            });
            if !t.is_finite() {
                problems.push(format!("tau of vertex {v:?} must be finite"));
            }
            tau.push(t);
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            problems.push("rho must be non-negative".into());
        }
        let mut arrows = Vec::new();
        let mut sections = Vec::new();
        let mut ids = HashMap::new();
        for a in &self.arrows {
            if ids.insert(a.id.as_str(), ()).is_some() {
                problems.push(format!("arrow id {:?} listed twice", a.id));
            }
            let (Some(&t), Some(&h)) = (index.get(a.tail.as_str()), index.get(a.head.as_str())) else {
                problems.push(format!("arrow {:?} joins unknown vertices", a.id));
                continue;
            };
            arrows.push((a.id.clone(), t, h));
            if !a.scale.is_finite() {
                problems.push(format!("arrow {:?} has a non-finite scale", a.id));
            }
            match a.exponent {
                None => sections.push(None),
                Some(e) => {
                    let d = degrees.get(h).copied().unwrap_or(0) - degrees.get(t).copied().unwrap_or(0);
                    if d < 0 {
                        problems.push(format!(
                            "arrow {:?} needs deg(head) >= deg(tail) for a non-zero section",
                            a.id
                        ));
                    } else if e as i64 > d {
                        problems.push(format!("arrow {:?}: exponent {e} exceeds degree {d}", a.id));
                    }
                    sections.push(Some((e, a.scale)));
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Model(problems.join("; ")));
        }
        Ok(Model {
            quiver: Quiver {
                vertices: self.vertices.clone(),
                arrows,
            },
            ranks,
            degrees,
            sigma,
            tau,
            rho: self.rho,
            sections,
        })
    }
}

/// Hermitian metrics per vertex and arrow maps at one point of `X`
/// (`sections[a]` is `r_head × r_tail`); `curvature[i]` is `iΛ_ω F_{H_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointData {
    pub metrics: Vec<CMatrix>,
    pub sections: Vec<CMatrix>,
    pub curvature: Vec<CMatrix>,
}

fn check_point(model: &Model, point: &PointData) -> Result<()> {
    let nv = model.quiver.vertices.len();
    if point.metrics.len() != nv || point.curvature.len() != nv {
        return Err(Error::Model(format!("expected data for {nv} vertices")));
    }
    if point.sections.len() != model.quiver.arrows.len() {
        return Err(Error::Model(format!(
            "expected {} arrow maps",
            model.quiver.arrows.len()
        )));
    }
    for (i, (h, f)) in point.metrics.iter().zip(&point.curvature).enumerate() {
        let r = model.ranks[i];
        if h.shape() != (r, r) || f.shape() != (r, r) {
            return Err(Error::Model(format!(
                "vertex {:?} has rank {r} but its data is not {r}×{r}",
                model.quiver.vertices[i]
            )));
        }
    }
    for (a, m) in point.sections.iter().enumerate() {
        let (id, t, h) = &model.quiver.arrows[a];
        if m.shape() != (model.ranks[*h], model.ranks[*t]) {
            return Err(Error::Model(format!(
                "arrow {id:?} must be a {}×{} map, got {}×{}",
                model.ranks[*h],
                model.ranks[*t],
                m.nrows(),
                m.ncols()
            )));
        }
    }
    Ok(())
}

fn inverse(h: &CMatrix) -> Result<CMatrix> {
    h.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("singular Hermitian metric".into()))
}

/// `φ_a^{*H} = H_t^{-1} φ_a^† H_h`.
fn adjoint(point: &PointData, model: &Model, a: usize) -> Result<CMatrix> {
    let (t, h) = (model.quiver.tail(a), model.quiver.head(a));
    Ok(inverse(&point.metrics[t])? * point.sections[a].adjoint() * &point.metrics[h])
}

/// Endomorphism in an `H`-unitary frame: with `H = L L^†`, `E ↦ L^† E L^{-†}`.
pub fn to_unitary_frame(h: &CMatrix, e: &CMatrix) -> Result<CMatrix> {
    let chol = h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("metric is not positive definite".into()))?;
    let l = chol.l();
    let lt = l.adjoint();
    let lt_inv = inverse(&lt)?;
    Ok(lt * e * lt_inv)
}

/// `[φ, φ^{*H}]_i` per vertex in the holomorphic frame.
pub fn commutator_raw(model: &Model, point: &PointData) -> Result<Vec<CMatrix>> {
    check_point(model, point)?;
    let mut out: Vec<CMatrix> = model.ranks.iter().map(|&r| CMatrix::zeros(r, r)).collect();
    for a in 0..model.quiver.arrows.len() {
        let (t, h) = (model.quiver.tail(a), model.quiver.head(a));
        let adj = adjoint(point, model, a)?;
        let phi = &point.sections[a];
        out[h] += phi * &adj;
        out[t] -= &adj * phi;
    }
    Ok(out)
}

/// `[φ, φ^{*H}]_i` per vertex, as Hermitian matrices in `H`-unitary frames.
pub fn commutator(model: &Model, point: &PointData) -> Result<Vec<CMatrix>> {
    commutator_raw(model, point)?
        .iter()
        .zip(&point.metrics)
        .map(|(c, h)| to_unitary_frame(h, c))
        .collect()
}

/// `|φ_a|²_{H_a} = Tr(φ_a φ_a^{*H})`.
pub fn section_norm_sq(model: &Model, point: &PointData, a: usize) -> Result<f64> {
    Ok((&point.sections[a] * adjoint(point, model, a)?).trace().re)
}

/// Replaces the curvature so that `σ_i iΛF_i + [φ,φ*]_i = τ_i Id` holds exactly.
pub fn impose_first_equation(model: &Model, point: &PointData) -> Result<PointData> {
    let comm = commutator_raw(model, point)?;
    let curvature = comm
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let r = model.ranks[i];
            (CMatrix::identity(r, r) * Complex64::from(model.tau[i]) - c)
                / Complex64::from(model.sigma[i])
        })
        .collect();
    Ok(PointData {
        curvature,
        ..point.clone()
    })
}

/// `σ_i iΛF_i + [φ,φ*]_i - τ_i Id` in the holomorphic frame.
pub fn first_equation_residual(model: &Model, point: &PointData) -> Result<Vec<CMatrix>> {
    let comm = commutator_raw(model, point)?;
    Ok(comm
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let r = model.ranks[i];
            &point.curvature[i] * Complex64::from(model.sigma[i]) + c
                - CMatrix::identity(r, r) * Complex64::from(model.tau[i])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceIdentityReport {
    /// `∫ Σ_a (τ_h/σ_h - τ_t/σ_t)|φ_a|² ω`.
    pub lhs: f64,
    /// `∫ Σ_i (τ_i² r_i/σ_i - τ_i Tr iΛF_i) ω`.
    pub rhs: f64,
    pub defect: f64,
    /// `Σ_i (τ_i/σ_i) ∫ Tr(first-equation residual) ω`, which the defect must equal.
    pub predicted_defect: f64,
    pub pointwise_max: f64,
}

/// Integrated trace identity over grid nodes (one `PointData` per node).
pub fn trace_identity_check(
    model: &Model,
    points: &[PointData],
    metric: &ConformalMetric,
    grid: &AxisymGrid,
) -> Result<TraceIdentityReport> {
    if points.len() != grid.n() {
        return Err(Error::InvalidInput(format!(
            "{} points for a grid of {} nodes",
            points.len(),
            grid.n()
        )));
    }
    let n = grid.n();
    let mut lhs = Field::zeros(n);
    let mut rhs = Field::zeros(n);
    let mut pred = Field::zeros(n);
    for (k, p) in points.iter().enumerate() {
        let ratio = |i: usize| model.tau[i] / model.sigma[i];
        for a in 0..model.quiver.arrows.len() {
            let w = ratio(model.quiver.head(a)) - ratio(model.quiver.tail(a));
            lhs[k] += w * section_norm_sq(model, p, a)?;
        }
        for i in 0..model.ranks.len() {
            rhs[k] += model.tau[i] * model.tau[i] * model.ranks[i] as f64 / model.sigma[i]
                - model.tau[i] * p.curvature[i].trace().re;
        }
        for (i, e) in first_equation_residual(model, p)?.iter().enumerate() {
            pred[k] += ratio(i) * e.trace().re;
        }
    }
    let li = integrate(grid, metric, &lhs)?;
    let ri = integrate(grid, metric, &rhs)?;
    Ok(TraceIdentityReport {
        lhs: li,
        rhs: ri,
        defect: li - ri,
        predicted_defect: integrate(grid, metric, &pred)?,
        pointwise_max: (&lhs - &rhs).amax(),
    })
}

/// Raw inputs of the dimensional-reduction dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    /// `dim M_λ` per vertex.
    pub multiplicities: Vec<u32>,
    /// `μ_ε(O_λ)` per vertex.
    pub homogeneous_slopes: Vec<f64>,
    /// `μ(Ẽ)`.
    pub global_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedParameters {
    pub sigma: Vec<f64>,
    pub tau: Vec<f64>,
}

/// `σ_λ = dim M_λ`, `τ_λ = σ_λ(μ(Ẽ) - μ_ε(O_λ))`.
pub fn reduction_parameters(input: &ReductionParams) -> Result<ReducedParameters> {
    if input.multiplicities.len() != input.homogeneous_slopes.len() {
        return Err(Error::Config(
            "multiplicities and slopes must have the same length".into(),
        ));
    }
    if let Some(k) = input.multiplicities.iter().position(|&m| m == 0) {
        return Err(Error::Config(format!("multiplicity {k} must be positive")));
    }
    ensure_finite("slopes", &input.homogeneous_slopes)?;
    ensure_finite("global slope", &[input.global_slope])?;
    let sigma: Vec<f64> = input.multiplicities.iter().map(|&m| m as f64).collect();
    let tau = sigma
        .iter()
        .zip(&input.homogeneous_slopes)
        .map(|(s, mu)| s * (input.global_slope - mu))
        .collect();
    Ok(ReducedParameters { sigma, tau })
}

/// Normalized slope `2π d / (r Vol)` of a bundle of degree `d` and rank `r`.
pub fn slope(degree: i64, rank: usize, volume: f64) -> Result<f64> {
    if rank == 0 || !(volume > 0.0) {
        return Err(Error::Config("slope needs positive rank and volume".into()));
    }
    Ok(2.0 * PI * degree as f64 / (rank as f64 * volume))
}

/// Constant of the second equation on a curve:
/// `c Vol = 2∫ρ_ω + 4ρ Vol Σ_i (τ_i/σ_i - μ(E_i)) τ_i r_i`
/// (plus `-4ρ Σ σ_i ∫Tr F² ∧ ω^{n-2}/(n-2)!` when supplied, zero on a curve).
pub fn quiver_constant(
    model: &Model,
    volume: f64,
    ricci_integral: f64,
    f_squared: Option<&[f64]>,
) -> Result<f64> {
    let mut total = 2.0 * ricci_integral;
    if let Some(fs) = f_squared {
        if fs.len() != model.ranks.len() {
            return Err(Error::Config("one F² integral per vertex".into()));
        }
        total -= 4.0 * model.rho * fs.iter().zip(&model.sigma).map(|(f, s)| s * f).sum::<f64>();
    }
    for i in 0..model.ranks.len() {
        let mu = slope(model.degrees[i], model.ranks[i], volume)?;
        total += 4.0 * model.rho * volume * (model.tau[i] / model.sigma[i] - mu) * model.tau[i] * model.ranks[i] as f64;
    }
    Ok(total / volume)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuiverResidual {
    /// First equation per vertex (rank-1 vertices, so scalar fields).
    pub vertex: Vec<Field>,
    /// Second equation with its ω-mean removed.
    pub scalar: Field,
    /// ω-mean of the left side of the second equation.
    pub c_est: f64,
    /// Constant from the topological formula (valid when the first equation holds).
    pub c_identity: f64,
}

fn require_line_bundles(model: &Model) -> Result<()> {
    if let Some(i) = model.ranks.iter().position(|&r| r != 1) {
        return Err(Error::UnsupportedRank(format!(
            "vertex {:?} has rank {}; the analytic path needs line bundles",
            model.quiver.vertices[i], model.ranks[i]
        )));
    }
    Ok(())
}

/// `|φ_a|²_{H_a}` on the grid for rank-1 vertices with potentials `v_i`.
pub fn arrow_norms(model: &Model, potentials: &[Field], grid: &AxisymGrid) -> Result<Vec<Field>> {
    require_line_bundles(model)?;
    (0..model.quiver.arrows.len())
        .map(|a| {
            let (t, h) = (model.quiver.tail(a), model.quiver.head(a));
            Ok(match model.sections[a] {
                None => Field::zeros(grid.n()),
                Some((e, scale)) => {
                    let d = (model.degrees[h] - model.degrees[t]) as i32;
                    Field::from_iterator(
                        grid.n(),
                        grid.nodes().iter().enumerate().map(|(k, &s)| {
                            let p = (0.5 * (1.0 + s)).powi(e as i32)
                                * (0.5 * (1.0 - s)).powi(d - e as i32);
                            scale * scale * p * (2.0 * (potentials[h][k] - potentials[t][k])).exp()
                        }),
                    )
                }
            })
        })
        .collect()
}

/// Residuals of both equations for rank-1 vertices, `H_i = H_FS e^{2 v_i}`.
pub fn quiver_vortex_residual(
    model: &Model,
    potentials: &[Field],
    metric: &ConformalMetric,
    grid: &AxisymGrid,
) -> Result<QuiverResidual> {
    require_line_bundles(model)?;
    if potentials.len() != model.ranks.len() {
        return Err(Error::Model(format!(
            "{} potentials for {} vertices",
            potentials.len(),
            model.ranks.len()
        )));
    }
    check_len(grid, &metric.u, "u")?;
    ensure_finite("u", metric.u.as_slice())?;
    for v in potentials {
        check_len(grid, v, "v")?;
        ensure_finite("v", v.as_slice())?;
    }
    let norms = arrow_norms(model, potentials, grid)?;
    let mut vertex = Vec::new();
    for (i, v) in potentials.iter().enumerate() {
        let curv = bundle_curvature(grid, metric, model.degrees[i] as f64, v)?;
        let mut r = curv * model.sigma[i];
        for (a, norm) in norms.iter().enumerate() {
            if model.quiver.head(a) == i {
                r += norm;
            }
            if model.quiver.tail(a) == i {
                r -= norm;
            }
        }
        vertex.push(r.add_scalar(-model.tau[i]));
    }
    let sc = scalar_curvature(grid, metric)?;
    let mut lhs = sc.s_field.clone();
    for (a, norm) in norms.iter().enumerate() {
        let (t, h) = (model.quiver.tail(a), model.quiver.head(a));
        let w = 2.0 * (model.tau[h] / model.sigma[h] - model.tau[t] / model.sigma[t]);
        lhs += (laplacian(grid, metric, norm)? + norm * w) * (2.0 * model.rho);
    }
    let vol = metric.volume(grid);
    let c_est = integrate(grid, metric, &lhs)? / vol;
    let c_identity = quiver_constant(model, vol, 4.0 * PI, None)?;
    Ok(QuiverResidual {
        vertex,
        scalar: lhs.add_scalar(-c_est),
        c_est,
        c_identity,
    })
}

/// Grid-node data for rank-1 vertices in Fubini–Study unitary frames, where
/// `H_i = e^{2 v_i}` and each section is `scale · |x0^{d-e} x1^e|_FS` at `θ = 0`.
pub fn analytic_point_data(
    model: &Model,
    potentials: &[Field],
    metric: &ConformalMetric,
    grid: &AxisymGrid,
) -> Result<Vec<PointData>> {
    require_line_bundles(model)?;
    let curv: Vec<Field> = potentials
        .iter()
        .enumerate()
        .map(|(i, v)| bundle_curvature(grid, metric, model.degrees[i] as f64, v))
        .collect::<Result<_>>()?;
    let s = grid.nodes();
    let c1 = |x: f64| CMatrix::from_element(1, 1, Complex64::from(x));
    Ok((0..grid.n())
        .map(|k| {
            let metrics = potentials.iter().map(|v| c1((2.0 * v[k]).exp())).collect();
            let sections = (0..model.quiver.arrows.len())
                .map(|a| match model.sections[a] {
                    None => c1(0.0),
                    Some((e, scale)) => {
                        let d = (model.degrees[model.quiver.head(a)]
                            - model.degrees[model.quiver.tail(a)]) as i32;
                        let p = (0.5 * (1.0 + s[k])).powi(e as i32)
                            * (0.5 * (1.0 - s[k])).powi(d - e as i32);
                        c1(scale * p.sqrt())
                    }
                })
                .collect();
            let curvature = curv.iter().map(|c| c1(c[k])).collect();
            PointData {
                metrics,
                sections,
                curvature,
            }
        })
        .collect())
}
