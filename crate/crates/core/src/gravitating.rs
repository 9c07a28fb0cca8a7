//! Gravitating vortex equations on the sphere with continuation in the coupling.
//!
//! Newton runs on `(u, v, c)` with two extra rows: the volume constraint and a
//! centering constraint `∫ s ω = 0`.  The latter removes the kernel generated
//! by the dilations `w ↦ λw`, which preserve a monomial Higgs field.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ensure_finite, Error, Result};
use crate::fields::{classify_automorphisms, higgs_profile, HiggsConfig};
use crate::geometry::{
    check_len, integrate, laplacian, scalar_curvature, AxisymGrid, ConformalMetric, Field,
    ROUND_SCALAR_CURVATURE, SPHERE_VOLUME,
};
use crate::newton::{damped_newton, NewtonOptions, SolveReport};
use crate::vortex::{abelian_window, bundle_curvature, solve_vortex, BundleMetricPotential};

pub const SINGLE_ZERO_REASON: &str =
    "If φ has only one zero, then there are no solutions of the gravitating vortex equations \
     (automorphism group of (O(N), φ) is the non-reductive Borel group)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravitatingState {
    pub metric: ConformalMetric,
    pub bundle: BundleMetricPotential,
    pub c_value: f64,
    pub alpha: f64,
}

/// Increasing couplings starting at 0, each solved with `options`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    pub alphas: Vec<f64>,
    pub options: NewtonOptions,
}

impl ContinuationSchedule {
    pub fn new(alphas: Vec<f64>, options: NewtonOptions) -> Result<Self> {
        let s = ContinuationSchedule { alphas, options };
        s.validate()?;
        Ok(s)
    }

    /// `0, Δ, 2Δ, ..., alpha` with `steps` equal increments.
    pub fn uniform(alpha: f64, steps: usize, options: NewtonOptions) -> Result<Self> {
        if steps == 0 || !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::Config(
                "a uniform schedule needs alpha >= 0 and at least one step".into(),
            ));
        }
        let alphas = if alpha == 0.0 {
            vec![0.0]
        } else {
            (0..=steps).map(|k| alpha * k as f64 / steps as f64).collect()
        };
        ContinuationSchedule::new(alphas, options)
    }

    pub fn validate(&self) -> Result<()> {
        self.options.validate()?;
        match self.alphas.first() {
            Some(&a) if a == 0.0 => {}
            _ => return Err(Error::Config("schedule must start at alpha = 0".into())),
        }
        if self.alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("schedule entries must be finite".into()));
        }
        if self.alphas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("schedule must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravitatingResidual {
    pub r1: Field,
    pub r2: Field,
    /// ω-mean of `S_ω + α(Δ_ω + τ)(|φ|²_H - τ)`.
    pub c_est: f64,
    /// `(∫ S_ω ω + ατ(∫|φ|²_H ω - τ Vol)) / Vol`, equal to `c_est` when `R1 = 0`.
    pub c_identity: f64,
}

/// Topological constant under the conventions used here: `4 - 2ατN`.
pub fn c_conventions(config: &HiggsConfig, alpha: f64) -> f64 {
    ROUND_SCALAR_CURVATURE - 2.0 * alpha * config.tau_f64() * total_degree(config)
}

/// The same constant with the normalization `2 - 2ατN`, reported alongside.
pub fn c_alternative(config: &HiggsConfig, alpha: f64) -> f64 {
    2.0 - 2.0 * alpha * config.tau_f64() * total_degree(config)
}

fn total_degree(config: &HiggsConfig) -> f64 {
    config.degrees.iter().map(|&n| n as f64).sum()
}

fn check_state(grid: &AxisymGrid, state: &GravitatingState) -> Result<()> {
    check_len(grid, &state.metric.u, "u")?;
    ensure_finite("u", state.metric.u.as_slice())?;
    let v = state
        .bundle
        .v
        .first()
        .ok_or_else(|| Error::InvalidInput("empty bundle potential".into()))?;
    check_len(grid, v, "v")?;
    ensure_finite("v", v.as_slice())?;
    if !state.alpha.is_finite() {
        return Err(Error::NumericInput("alpha is not finite".into()));
    }
    Ok(())
}

/// `R1`, and `R2 = S_ω + α(Δ_ω + τ)(|φ|²_H - τ) - c_est` with `c_est` its ω-mean.
pub fn gravitating_residual(
    grid: &AxisymGrid,
    state: &GravitatingState,
    config: &HiggsConfig,
) -> Result<GravitatingResidual> {
    config.require_rank(1)?;
    config.validate()?;
    check_state(grid, state)?;
    let metric = &state.metric;
    let alpha = state.alpha;
    let tau = config.tau_f64();
    let phi_h = state.bundle.higgs_norm(grid, config, 0)?;
    let curv = bundle_curvature(grid, metric, config.degrees[0] as f64, &state.bundle.v[0])?;
    let r1 = &curv + (&phi_h).add_scalar(-tau) * 0.5;
    let s = scalar_curvature(grid, metric)?;
    let lap = laplacian(grid, metric, &phi_h)?;
    let lhs = &s.s_field + (lap + (&phi_h).add_scalar(-tau) * tau) * alpha;
    let vol = metric.volume(grid);
    let c_est = integrate(grid, metric, &lhs)? / vol;
    let c_identity =
        (s.total + alpha * tau * (integrate(grid, metric, &phi_h)? - tau * vol)) / vol;
    Ok(GravitatingResidual {
        r1,
        r2: lhs.add_scalar(-c_est),
        c_est,
        c_identity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralResidual {
    /// Real form of `i(Λ_ω F_H + φ*μ̂ - z/α)`.
    pub r1: Field,
    /// `S_ω + αΔ_ω|φ|²_H - 2ατ iΛ_ω F_H - c'`.
    pub r2: Field,
    /// ω-mean of the left side of the second equation.
    pub c_prime: f64,
}

/// Residuals of the moment-map form with `μ̂(x) = -(i/2)|x|²` and `z = -iατ/2`.
pub fn kymh_general_residual(
    grid: &AxisymGrid,
    state: &GravitatingState,
    config: &HiggsConfig,
) -> Result<GeneralResidual> {
    config.require_rank(1)?;
    config.validate()?;
    check_state(grid, state)?;
    let metric = &state.metric;
    let alpha = state.alpha;
    let tau = config.tau_f64();
    let phi_h = state.bundle.higgs_norm(grid, config, 0)?;
    let curv = bundle_curvature(grid, metric, config.degrees[0] as f64, &state.bundle.v[0])?;
    // u(1)-valued pieces; z/α = -iτ/2 keeps the equation meaningful at α = 0.
    let z_over_alpha = Complex64::new(0.0, -0.5 * tau);
    let i = Complex64::i();
    let r1 = Field::from_iterator(
        grid.n(),
        (0..grid.n()).map(|k| {
            let lambda_f = -i * curv[k];
            let mu = Complex64::new(0.0, -0.5 * phi_h[k]);
            (i * (lambda_f + mu - z_over_alpha)).re
        }),
    );
    let s = scalar_curvature(grid, metric)?;
    let lap = laplacian(grid, metric, &phi_h)?;
    let lhs = &s.s_field + lap * alpha - &curv * (2.0 * alpha * tau);
    let c_prime = integrate(grid, metric, &lhs)? / metric.volume(grid);
    Ok(GeneralResidual {
        r1,
        r2: lhs.add_scalar(-c_prime),
        c_prime,
    })
}

/// One accepted or failed continuation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub alpha: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual_sup: f64,
    pub c_est: f64,
    pub c_identity: f64,
    pub odd_part_u: f64,
    pub odd_part_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravitatingRun {
    /// Last converged state.
    pub state: GravitatingState,
    /// Report of the last attempted step.
    pub report: SolveReport,
    pub history: Vec<ContinuationStep>,
}

impl GravitatingRun {
    pub fn converged(&self) -> bool {
        self.report.converged && self.history.iter().all(|h| h.converged)
    }
}

/// Refuses single-zero configurations unless `override_obstruction` is set.
pub fn check_gravitating_preconditions(config: &HiggsConfig, override_obstruction: bool) -> Result<()> {
    config.require_rank(1)?;
    config.validate()?;
    if !abelian_window(config) {
        return Err(Error::Infeasible(format!(
            "N < tau/2 fails for N = {}, tau = {}",
            config.degrees[0], config.tau
        )));
    }
    let verdict = classify_automorphisms(&config.divisor(0)?)?;
    if verdict.obstruction && !override_obstruction {
        return Err(Error::Obstructed(SINGLE_ZERO_REASON.into()));
    }
    Ok(())
}

pub fn solve_gravitating(
    grid: &AxisymGrid,
    config: &HiggsConfig,
    schedule: &ContinuationSchedule,
    override_obstruction: bool,
) -> Result<GravitatingRun> {
    check_gravitating_preconditions(config, override_obstruction)?;
    schedule.validate()?;
    let round = ConformalMetric::round(grid);
    let (v0, rep0) = solve_vortex(grid, &round, config, &schedule.options)?;
    let seed = GravitatingState {
        metric: round,
        bundle: v0,
        c_value: ROUND_SCALAR_CURVATURE,
        alpha: 0.0,
    };
    if !rep0.converged {
        return Ok(GravitatingRun {
            state: seed,
            report: rep0,
            history: Vec::new(),
        });
    }
    continue_from(grid, config, seed, &schedule.alphas, &schedule.options)
}

/// Natural continuation from `seed` through `alphas`.
pub fn continue_from(
    grid: &AxisymGrid,
    config: &HiggsConfig,
    seed: GravitatingState,
    alphas: &[f64],
    options: &NewtonOptions,
) -> Result<GravitatingRun> {
    let mut state = seed;
    let mut history = Vec::new();
    let mut last = None;
    for &alpha in alphas {
        let (next, report) = newton_at(grid, config, &state, alpha, options)?;
        let res = gravitating_residual(grid, &next, config)?;
        history.push(ContinuationStep {
            alpha,
            converged: report.converged,
            iterations: report.iterations,
            residual_sup: report.residual_sup,
            c_est: res.c_est,
            c_identity: res.c_identity,
            odd_part_u: grid.odd_part_sup(&next.metric.u),
            odd_part_v: grid.odd_part_sup(&next.bundle.v[0]),
        });
        let ok = report.converged;
        last = Some(report);
        if !ok {
            break;
        }
        state = next;
    }
    let report = last.ok_or_else(|| Error::Config("empty continuation schedule".into()))?;
    Ok(GravitatingRun {
        state,
        report,
        history,
    })
}

fn newton_at(
    grid: &AxisymGrid,
    config: &HiggsConfig,
    start: &GravitatingState,
    alpha: f64,
    options: &NewtonOptions,
) -> Result<(GravitatingState, SolveReport)> {
    let n = grid.n();
    let sys = System::new(grid, config, alpha)?;
    let mut x0 = DVector::zeros(2 * n + 1);
    x0.rows_mut(0, n).copy_from(&start.metric.u);
    x0.rows_mut(n, n).copy_from(&start.bundle.v[0]);
    x0[2 * n] = start.c_value;
    let (x, report) = damped_newton(x0, |x| sys.residual(x), |x| Ok(sys.jacobian(x)), options, n)?;
    let state = GravitatingState {
        metric: ConformalMetric {
            u: x.rows(0, n).into_owned(),
            vol_target: SPHERE_VOLUME,
        },
        bundle: BundleMetricPotential::single(x.rows(n, n).into_owned()),
        c_value: x[2 * n],
        alpha,
    };
    Ok((state, report))
}

struct System<'a> {
    grid: &'a AxisymGrid,
    profile: Field,
    degree: f64,
    tau: f64,
    alpha: f64,
}

impl<'a> System<'a> {
    fn new(grid: &'a AxisymGrid, config: &HiggsConfig, alpha: f64) -> Result<Self> {
        Ok(System {
            grid,
            profile: higgs_profile(grid, config, 0)?,
            degree: config.degrees[0] as f64,
            tau: config.tau_f64(),
            alpha,
        })
    }

    fn split(&self, x: &DVector<f64>) -> (Field, Field, f64) {
        let n = self.grid.n();
        (x.rows(0, n).into_owned(), x.rows(n, n).into_owned(), x[2 * n])
    }

    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.grid.n();
        let (u, v, c) = self.split(x);
        ensure_finite("state", x.as_slice())?;
        let lap = self.grid.laplacian_fs_matrix();
        let e2v_p = v.zip_map(&self.profile, |v, p| (2.0 * v).exp() * p);
        let lap_v = lap * &v;
        let lap_u = lap * &u;
        let lap_phi = lap * &e2v_p;
        let mut out = DVector::zeros(2 * n + 2);
        for k in 0..n {
            let em = (-2.0 * u[k]).exp();
            out[k] = em * (self.degree + lap_v[k]) + 0.5 * (e2v_p[k] - self.tau);
            out[n + k] = em * (ROUND_SCALAR_CURVATURE + 2.0 * lap_u[k])
                + self.alpha * (em * lap_phi[k] + self.tau * (e2v_p[k] - self.tau))
                - c;
        }
        let density = u.map(|u| (2.0 * u).exp());
        let s = self.grid.field_from_fn(|s| s);
        out[2 * n] = PI * self.grid.integrate_ds(&density) - SPHERE_VOLUME;
        out[2 * n + 1] = PI * self.grid.integrate_ds(&density.component_mul(&s));
        Ok(out)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.grid.n();
        let (u, v, _) = self.split(x);
        let lap = self.grid.laplacian_fs_matrix();
        let e2v_p = v.zip_map(&self.profile, |v, p| (2.0 * v).exp() * p);
        let lap_v = lap * &v;
        let lap_u = lap * &u;
        let lap_phi = lap * &e2v_p;
        let mut j = DMatrix::zeros(2 * n + 2, 2 * n + 1);
        for k in 0..n {
            let em = (-2.0 * u[k]).exp();
            // R1
            j[(k, k)] = -2.0 * em * (self.degree + lap_v[k]);
            for m in 0..n {
                j[(k, n + m)] = em * lap[(k, m)];
            }
            j[(k, n + k)] += e2v_p[k];
            // R2
            j[(n + k, k)] = -2.0 * em * (ROUND_SCALAR_CURVATURE + 2.0 * lap_u[k])
                - 2.0 * self.alpha * em * lap_phi[k];
            for m in 0..n {
                j[(n + k, m)] += 2.0 * em * lap[(k, m)];
                j[(n + k, n + m)] = self.alpha * em * lap[(k, m)] * 2.0 * e2v_p[m];
            }
            j[(n + k, n + k)] += 2.0 * self.alpha * self.tau * e2v_p[k];
            j[(n + k, 2 * n)] = -1.0;
        }
        let w = self.grid.weights();
        let s = self.grid.nodes();
        for k in 0..n {
            let d = 2.0 * PI * w[k] * (2.0 * u[k]).exp();
            j[(2 * n, k)] = d;
            j[(2 * n + 1, k)] = d * s[k];
        }
        j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecantOptions {
    pub alpha0: f64,
    pub alpha1: f64,
    /// Target for `|c_est|`.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Largest coupling increment per continuation step.
    pub max_step: f64,
    pub newton: NewtonOptions,
}

impl Default for SecantOptions {
    fn default() -> Self {
        SecantOptions {
            alpha0: 0.0,
            alpha1: 0.02,
            tolerance: 1e-8,
            max_iter: 30,
            max_step: 0.02,
            newton: NewtonOptions {
                tolerance: 1e-9,
                max_iter: 50,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EinsteinBogomolnyi {
    pub state: GravitatingState,
    pub converged: bool,
    pub alpha_star: f64,
    pub c_at_alpha_star: f64,
    /// `α* τ N`.
    pub alpha_tau_n: f64,
    /// Value of `ατN` at which `4 - 2ατN` vanishes.
    pub predicted_conventions: f64,
    /// Value of `ατN` at which `2 - 2ατN` vanishes.
    pub predicted_alternative: f64,
    /// `(α, c_est)` for every secant evaluation.
    pub secant_history: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Secant iteration on `α ↦ c_est(α)` for the topological case `c = 0`.
pub fn einstein_bogomolnyi_solve(
    grid: &AxisymGrid,
    config: &HiggsConfig,
    options: &SecantOptions,
    override_obstruction: bool,
) -> Result<EinsteinBogomolnyi> {
    check_gravitating_preconditions(config, override_obstruction)?;
    if !(options.max_step > 0.0) || options.alpha0 < 0.0 || options.alpha1 <= options.alpha0 {
        return Err(Error::Config(
            "secant needs 0 <= alpha0 < alpha1 and a positive max_step".into(),
        ));
    }
    let base = solve_gravitating(
        grid,
        config,
        &ContinuationSchedule::new(vec![0.0], options.newton)?,
        override_obstruction,
    )?;
    let tau_n = config.tau_f64() * total_degree(config);
    let mut states: Vec<GravitatingState> = vec![base.state.clone()];
    let mut history = Vec::new();
    let mut failure = None;

    // Continues from the converged state closest in α.
    let evaluate = |alpha: f64, states: &mut Vec<GravitatingState>| -> Result<Option<(GravitatingState, f64)>> {
        let seed = states
            .iter()
            .min_by(|a, b| (a.alpha - alpha).abs().total_cmp(&(b.alpha - alpha).abs()))
            .cloned()
            .expect("at least the base state");
        let steps = ((alpha - seed.alpha).abs() / options.max_step).ceil().max(1.0) as usize;
        let alphas: Vec<f64> = (1..=steps)
            .map(|k| seed.alpha + (alpha - seed.alpha) * k as f64 / steps as f64)
            .collect();
        let run = continue_from(grid, config, seed, &alphas, &options.newton)?;
        if !run.converged() {
            return Ok(None);
        }
        let c = gravitating_residual(grid, &run.state, config)?.c_est;
        states.push(run.state.clone());
        Ok(Some((run.state, c)))
    };

    let mut a0 = options.alpha0;
    let mut c0 = match evaluate(a0, &mut states)? {
        Some((_, c)) => c,
        None => return Err(Error::Infeasible(format!("no converged state at alpha = {a0}"))),
    };
    history.push((a0, c0));
    let mut a1 = options.alpha1;
    let mut best = None;
    let mut c1 = match evaluate(a1, &mut states)? {
        Some((s, c)) => {
            best = Some((s, a1, c));
            c
        }
        None => f64::NAN,
    };
    history.push((a1, c1));
    for _ in 0..options.max_iter {
        if !c1.is_finite() {
            failure = Some(format!(
                "continuation failed at alpha = {a1}; endpoint values c({a0}) = {c0}"
            ));
            break;
        }
        if c1.abs() <= options.tolerance {
            break;
        }
        if c1 == c0 {
            failure = Some(format!("flat secant: c({a0}) = c({a1}) = {c1}"));
            break;
        }
        let a2 = a1 - c1 * (a1 - a0) / (c1 - c0);
        if !(a2.is_finite() && a2 >= 0.0) {
            failure = Some(format!(
                "secant left the admissible range: c({a0}) = {c0}, c({a1}) = {c1}"
            ));
            break;
        }
        let c2 = match evaluate(a2, &mut states)? {
            Some((s, c)) => {
                best = Some((s, a2, c));
                c
            }
            None => f64::NAN,
        };
        history.push((a2, c2));
        (a0, c0, a1, c1) = (a1, c1, a2, c2);
    }
    let (state, alpha_star, c_star) = match best {
        Some(b) => b,
        None => (base.state, 0.0, c0),
    };
    if failure.is_none() && c_star.abs() > options.tolerance {
        failure = Some(format!(
            "no root within {} secant steps; last c = {c_star}",
            options.max_iter
        ));
    }
    Ok(EinsteinBogomolnyi {
        state,
        converged: failure.is_none(),
        alpha_star,
        c_at_alpha_star: c_star,
        alpha_tau_n: alpha_star * tau_n,
        predicted_conventions: 2.0,
        predicted_alternative: 1.0,
        secant_history: history,
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, normalize_volume};

    fn random_state(grid: &AxisymGrid, alpha: f64) -> GravitatingState {
        let u = grid.field_from_fn(|s| 0.3 * (2.0 * s).sin() + 0.1 * s * s);
        let v = grid.field_from_fn(|s| -0.4 * (s - 0.2).powi(2) + 0.2 * s);
        GravitatingState {
            metric: normalize_volume(grid, &u).unwrap(),
            bundle: BundleMetricPotential::single(v),
            c_value: 0.0,
            alpha,
        }
    }

    #[test]
    fn schedule_validation() {
        let o = NewtonOptions::default();
        assert!(ContinuationSchedule::new(vec![0.0, 0.1], o).is_ok());
        assert!(ContinuationSchedule::new(vec![0.1], o).is_err());
        assert!(ContinuationSchedule::new(vec![0.0, 0.1, 0.1], o).is_err());
        assert!(ContinuationSchedule::new(vec![], o).is_err());
        assert_eq!(ContinuationSchedule::uniform(0.1, 2, o).unwrap().alphas.len(), 3);
    }

    #[test]
    fn residual_mean_and_identity() {
        let g = build_grid(65).unwrap();
        let c = HiggsConfig::abelian(2, 1, 5.0, 0.0).unwrap();
        let st = random_state(&g, 0.07);
        let r = gravitating_residual(&g, &st, &c).unwrap();
        assert!(integrate(&g, &st.metric, &r.r2).unwrap().abs() < 1e-10);
        // c_est - c_identity = α ∫ Δ|φ|² ω / Vol = 0
        assert!((r.c_est - r.c_identity).abs() < 1e-9);
    }

    #[test]
    fn general_residual_matches() {
        let g = build_grid(65).unwrap();
        let c = HiggsConfig::abelian(2, 1, 5.0, 0.0).unwrap();
        let st = random_state(&g, 0.05);
        let a = gravitating_residual(&g, &st, &c).unwrap();
        let b = kymh_general_residual(&g, &st, &c).unwrap();
        assert!((&a.r1 - &b.r1).amax() < 1e-12);
        let diff = &b.r2 - (&a.r2 - &a.r1 * (2.0 * 0.05 * 5.0));
        let mean = diff.mean();
        assert!(diff.add_scalar(-mean).amax() < 1e-10);
        assert!((b.c_prime - c_conventions(&c, 0.05)).abs() < 1e-8);

        let st0 = random_state(&g, 0.0);
        let b0 = kymh_general_residual(&g, &st0, &c).unwrap();
        let s = scalar_curvature(&g, &st0.metric).unwrap();
        assert!((&b0.r2 - s.s_field.add_scalar(-s.mean)).amax() < 1e-10);
    }

    #[test]
    fn refuses_single_zero() {
        let g = build_grid(33).unwrap();
        let c = HiggsConfig::abelian(1, 0, 3.0, 0.0).unwrap();
        let sched = ContinuationSchedule::new(vec![0.0, 0.01], NewtonOptions::default()).unwrap();
        match solve_gravitating(&g, &c, &sched, false) {
            Err(Error::Obstructed(msg)) => assert!(msg.contains("If φ has only one zero")),
            other => panic!("{other:?}"),
        }
        let c = HiggsConfig::abelian(2, 1, 4.0, 0.0).unwrap();
        assert!(matches!(
            solve_gravitating(&g, &c, &sched, false),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn alpha_zero_is_round() {
        let g = build_grid(65).unwrap();
        let c = HiggsConfig::abelian(2, 1, 5.0, 0.0).unwrap();
        let sched = ContinuationSchedule::new(vec![0.0], NewtonOptions::default()).unwrap();
        let run = solve_gravitating(&g, &c, &sched, false).unwrap();
        assert!(run.converged());
        assert!(run.state.metric.u.amax() < 1e-12);
        assert!((run.state.c_value - 4.0).abs() < 1e-10);
    }

    #[test]
    fn small_continuation() {
        let g = build_grid(65).unwrap();
        let c = HiggsConfig::abelian(2, 1, 5.0, 0.0).unwrap();
        let opts = NewtonOptions {
            tolerance: 1e-9,
            max_iter: 50,
        };
        let sched = ContinuationSchedule::new(vec![0.0, 0.02, 0.05], opts).unwrap();
        let run = solve_gravitating(&g, &c, &sched, false).unwrap();
        assert!(run.converged(), "{:?}", run.history);
        let last = run.history.last().unwrap();
        assert!((last.c_est - c_conventions(&c, 0.05)).abs() < 1e-8);
        assert!(last.odd_part_u < 1e-11 && last.odd_part_v < 1e-11);
    }
}
