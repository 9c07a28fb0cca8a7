//! Futaki invariants, balancing, automorphism verdicts and existence windows.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ensure_finite, Error, Result};
use crate::fields::{
    classify_automorphisms, divisor_gcd_degree, higgs_profile, saturation_degree, AutVerdict,
    Divisor, HiggsConfig,
};
use crate::forms::{q_int, q_to_f64, BinaryForm, Q};
use crate::geometry::{
    build_grid, check_len, integrate, laplacian, scalar_curvature, AxisymGrid, ConformalMetric,
    Field,
};
use crate::vortex::bundle_curvature;

/// A point `(ω, H_1 ⊕ ... )` of the parameter space: `u` and one `v_j` per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FutakiInput {
    pub config: HiggsConfig,
    pub metric: ConformalMetric,
    pub v: Vec<Field>,
}

/// `Σ_j (2N_j - τ)(2ℓ_j - N_j)`, exact.
pub fn futaki_coefficient(config: &HiggsConfig) -> Q {
    config
        .degrees
        .iter()
        .zip(&config.exponents)
        .map(|(&n, &l)| {
            (q_int(2 * n as i64) - &config.tau) * q_int(2 * l as i64 - n as i64)
        })
        .fold(Q::zero(), |a, b| a + b)
}

/// Imaginary part of the character: `2πα Σ_j (2N_j - τ)(2ℓ_j - N_j)`.
pub fn futaki_closed_form(config: &HiggsConfig) -> Result<f64> {
    config.require_rank(2)?;
    config.validate()?;
    Ok(2.0 * PI * config.alpha * q_to_f64(&futaki_coefficient(config)))
}

/// Quadrature of the character on the check field fixing `φ`, for any rank.
///
/// The vector field is `-(1-s²)∂_s`, with Hamiltonian `h` (`dh/ds = -e^{2u}/2`,
/// ω-mean zero) and vertical parts `θ_j = (1-s²)v_j' + (2ℓ_j - N_j - N_j s)/2`.
fn futaki_integral(grid: &AxisymGrid, input: &FutakiInput) -> Result<f64> {
    let config = &input.config;
    config.validate()?;
    let metric = &input.metric;
    check_len(grid, &metric.u, "u")?;
    ensure_finite("u", metric.u.as_slice())?;
    if input.v.len() != config.rank() {
        return Err(Error::InvalidInput(format!(
            "{} bundle potentials for a rank-{} configuration",
            input.v.len(),
            config.rank()
        )));
    }
    let vol = metric.volume(grid);
    if ((vol - metric.vol_target) / metric.vol_target).abs() > 1e-10 {
        return Err(Error::Precondition(format!(
            "ansatz is not volume-normalized: volume {vol}, target {}",
            metric.vol_target
        )));
    }
    let alpha = config.alpha;
    let tau = config.tau_f64();
    let s = grid.nodes();
    let n = grid.n();

    let raw = grid.antiderivative(&metric.density()) * -0.5;
    let h = raw.add_scalar(-integrate(grid, metric, &raw)? / vol);

    let mut vertical = 0.0;
    let mut phi_total = Field::zeros(n);
    let mut curv_total = Field::zeros(n);
    for (j, v) in input.v.iter().enumerate() {
        check_len(grid, v, "v")?;
        ensure_finite("v", v.as_slice())?;
        let nj = config.degrees[j] as f64;
        let lj = config.exponents[j] as f64;
        let curv = bundle_curvature(grid, metric, nj, v)?;
        let phi = higgs_profile(grid, config, j)?.zip_map(v, |p, v| p * (2.0 * v).exp());
        let dv = grid.derivative(v);
        let theta = Field::from_iterator(
            n,
            (0..n).map(|k| (1.0 - s[k] * s[k]) * dv[k] + 0.5 * (2.0 * lj - nj - nj * s[k])),
        );
        let e1 = &curv + (&phi).add_scalar(-tau) * 0.5;
        vertical += integrate(grid, metric, &theta.component_mul(&e1))?;
        phi_total += phi;
        curv_total += curv;
    }
    let sc = scalar_curvature(grid, metric)?;
    let t = &sc.s_field + laplacian(grid, metric, &phi_total)? * alpha - curv_total * (2.0 * alpha * tau);
    Ok(4.0 * alpha * vertical + integrate(grid, metric, &h.component_mul(&t))?)
}

/// Rank-2 Futaki quadrature (imaginary part).
pub fn futaki_quadrature(grid: &AxisymGrid, input: &FutakiInput) -> Result<f64> {
    input.config.require_rank(2)?;
    futaki_integral(grid, input)
}

/// Quadrature values at successive resolutions with a Richardson-type certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichardsonReport {
    pub resolutions: Vec<usize>,
    pub values: Vec<f64>,
    /// Finest value.
    pub value: f64,
    /// Successive differences `|q_{k+1} - q_k|`.
    pub differences: Vec<f64>,
    /// Differences shrink tenfold, or both sit at the rounding floor.
    pub certified: bool,
}

pub const RICHARDSON_RESOLUTIONS: [usize; 3] = [129, 257, 513];

/// Abelian quadrature on the ansatz produced by `ansatz` at n = 129, 257, 513.
pub fn abelian_futaki_quadrature<F>(config: &HiggsConfig, ansatz: F) -> Result<RichardsonReport>
where
    F: Fn(&AxisymGrid) -> Result<(ConformalMetric, Field)>,
{
    config.require_rank(1)?;
    let mut values = Vec::new();
    for &n in &RICHARDSON_RESOLUTIONS {
        let grid = build_grid(n)?;
        let (metric, v) = ansatz(&grid)?;
        let input = FutakiInput {
            config: config.clone(),
            metric,
            v: vec![v],
        };
        values.push(futaki_integral(&grid, &input)?);
    }
    let differences: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let value = *values.last().unwrap();
    let floor = 1e-12 * value.abs().max(1.0);
    let certified = differences[1] <= differences[0] / 10.0
        || (differences[0] <= floor && differences[1] <= floor);
    Ok(RichardsonReport {
        resolutions: RICHARDSON_RESOLUTIONS.to_vec(),
        values,
        value,
        differences,
        certified,
    })
}

/// Abelian quadrature at a single resolution.
pub fn abelian_futaki_at(grid: &AxisymGrid, input: &FutakiInput) -> Result<f64> {
    input.config.require_rank(1)?;
    futaki_integral(grid, input)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Balancing {
    /// Exact left-hand side, `p/q` text.
    pub lhs: String,
    pub lhs_value: f64,
    pub balanced: bool,
}

/// `(2ℓ1 - N1)/(2N2 - τ) + (2ℓ2 - N2)/(2N1 - τ)` in exact arithmetic.
pub fn balancing_condition(config: &HiggsConfig) -> Result<Balancing> {
    config.require_rank(2)?;
    config.validate()?;
    let (n1, n2) = (config.degrees[0] as i64, config.degrees[1] as i64);
    let (l1, l2) = (config.exponents[0] as i64, config.exponents[1] as i64);
    let d2 = q_int(2 * n2) - &config.tau;
    let d1 = q_int(2 * n1) - &config.tau;
    if d2.is_zero() {
        return Err(Error::Pole("denominator 2N2 - tau vanishes".into()));
    }
    if d1.is_zero() {
        return Err(Error::Pole("denominator 2N1 - tau vanishes".into()));
    }
    let lhs = q_int(2 * l1 - n1) / d2 + q_int(2 * l2 - n2) / d1;
    Ok(Balancing {
        lhs: lhs.to_string(),
        lhs_value: q_to_f64(&lhs),
        balanced: lhs.is_zero(),
    })
}

/// Which existence predicate failed for the z-stability check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub subbundle: String,
    pub degree: u32,
    pub contains_phi: bool,
    /// `deg V' + τ rk(L ∩ V')`, exact text.
    pub lhs: String,
    /// `(deg V + τ)/rk V`, exact text.
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rank: usize,
    pub abelian_window: Option<bool>,
    pub nonabelian_window: Option<bool>,
    pub reduced_window: Option<bool>,
    pub saturation_degree: Option<u32>,
    pub z_stable: Option<bool>,
    pub z_witness: Option<Witness>,
    pub balanced: Option<bool>,
    pub balancing_lhs: Option<String>,
    pub automorphisms: Option<AutVerdict>,
    pub futaki_coefficient: String,
    /// True when some predicate rules out solutions.
    pub obstructed: bool,
    pub verdict: String,
    pub reasons: Vec<String>,
}

fn lt(a: &Q, b: &Q) -> bool {
    (b - a).is_positive()
}

/// `N2 < τ/2 < N1 + N2 - d`.
fn window(config: &HiggsConfig, sat: u32) -> bool {
    let half = &config.tau / q_int(2);
    let (n1, n2) = (config.degrees[0] as i64, config.degrees[1] as i64);
    lt(&q_int(n2), &half) && lt(&half, &q_int(n1 + n2 - sat as i64))
}

/// Evaluates every applicable predicate exactly; never fails on a valid config.
pub fn stability_check(config: &HiggsConfig) -> Result<StabilityReport> {
    stability_check_with_forms(config, None)
}

/// As [`stability_check`], with the Higgs components given by arbitrary binary
/// forms of the configured degrees instead of monomials.
pub fn stability_check_with_forms(
    config: &HiggsConfig,
    forms: Option<&[BinaryForm]>,
) -> Result<StabilityReport> {
    config.validate()?;
    if let Some(f) = forms {
        if f.len() != config.rank()
            || f.iter().zip(&config.degrees).any(|(f, &n)| f.degree() != n)
        {
            return Err(Error::Config(
                "coefficients must give one form per component, of the configured degree".into(),
            ));
        }
    }
    let general = forms.is_some();
    let form = |j: usize| -> Result<BinaryForm> {
        match forms {
            Some(f) => Ok(f[j].clone()),
            None => config.form(j),
        }
    };
    let mut reasons = Vec::new();
    let mut obstructed = false;
    let coeff = futaki_coefficient(config);
    let mut report = StabilityReport {
        rank: config.rank(),
        abelian_window: None,
        nonabelian_window: None,
        reduced_window: None,
        saturation_degree: None,
        z_stable: None,
        z_witness: None,
        balanced: None,
        balancing_lhs: None,
        automorphisms: None,
        futaki_coefficient: coeff.to_string(),
        obstructed: false,
        verdict: String::new(),
        reasons: Vec::new(),
    };

    if config.rank() == 1 {
        let n = config.degrees[0] as i64;
        let win = lt(&q_int(n), &(&config.tau / q_int(2)));
        report.abelian_window = Some(win);
        if win {
            reasons.push(format!("N < τ/2 holds ({n} < {}/2): the vortex equation is solvable", config.tau));
        } else {
            obstructed = true;
            reasons.push(format!("N < τ/2 fails ({n} >= {}/2): no vortex solution", config.tau));
        }
        let f = form(0)?;
        if f.is_zero() {
            return Err(Error::InvalidInput("the Higgs field is identically zero".into()));
        }
        let divisor = Divisor::from_form(&f)?;
        let aut = classify_automorphisms(&divisor)?;
        report.automorphisms = Some(aut);
        if aut.obstruction {
            obstructed = true;
            reasons.push(
                "If φ has only one zero, then there are no solutions of the gravitating vortex \
                 equations: the automorphism group is non-reductive"
                    .into(),
            );
        } else {
            reasons.push(format!("automorphism group of the zero divisor is {}: reductive", aut.kind));
        }
        if !general {
            // Abelian Futaki character on the dilation field.
            let balanced = coeff.is_zero();
            report.balanced = Some(balanced);
            if balanced {
                reasons.push("Futaki character (2N - τ)(2ℓ - N) vanishes".into());
            } else {
                obstructed = true;
                reasons.push(format!(
                    "Futaki character (2N - τ)(2ℓ - N) = {coeff} is non-zero: no gravitating vortex for α > 0"
                ));
            }
        }
    } else {
        let (f1, f2) = (form(0)?, form(1)?);
        let sat = saturation_degree(&f1, &f2)?;
        report.saturation_degree = Some(sat);
        let nonab = window(config, sat);
        report.nonabelian_window = Some(nonab);
        let (n1, n2) = (config.degrees[0], config.degrees[1]);
        reasons.push(format!(
            "N2 < τ/2 < N1 + N2 - deg[φ] {}: {n2} < {}/2 < {}",
            if nonab { "holds" } else { "fails" },
            config.tau,
            n1 as i64 + n2 as i64 - sat as i64
        ));
        if !nonab {
            obstructed = true;
        }
        if general {
            reasons.push(
                "non-monomial φ: completeness of the z-stability candidate set {O(N1), O(N2), [φ]} is not proven"
                    .into(),
            );
        } else {
            let (_, d) = divisor_gcd_degree(config)?;
            let reduced = window(config, d);
            report.reduced_window = Some(reduced);
            reasons.push(format!(
                "N2 < τ/2 < N1 + N2 - min(ℓ1, ℓ2) - min(N1 - ℓ1, N2 - ℓ2) {}",
                if reduced { "holds" } else { "fails" }
            ));
        }

        // z-stability over {O(N1), O(N2), [φ]}
        let rhs = (q_int(n1 as i64 + n2 as i64) + &config.tau) / q_int(2);
        let candidates = [
            (format!("O({n1})"), n1, false),
            (format!("O({n2})"), n2, false),
            ("[φ]".to_string(), sat, true),
        ];
        let mut witness = None;
        for (name, deg, contains) in candidates {
            let lhs = if contains {
                q_int(deg as i64) + &config.tau
            } else {
                q_int(deg as i64)
            };
            if !lt(&lhs, &rhs) {
                witness = Some(Witness {
                    subbundle: name,
                    degree: deg,
                    contains_phi: contains,
                    lhs: lhs.to_string(),
                    rhs: rhs.to_string(),
                });
                break;
            }
        }
        let z_stable = witness.is_none();
        report.z_stable = Some(z_stable);
        match &witness {
            None => reasons.push("z-stability inequality holds on O(N1), O(N2) and [φ]".into()),
            Some(w) => reasons.push(format!(
                "z-stability fails on {}: {} >= {}",
                w.subbundle, w.lhs, w.rhs
            )),
        }
        report.z_witness = witness;
        if z_stable != nonab {
            reasons.push(
                "z-stability and the window N2 < τ/2 < N1 + N2 - deg[φ] disagree (different τ normalizations)"
                    .into(),
            );
        }

        match balancing_condition(config) {
            _ if general => {}
            Ok(b) => {
                report.balanced = Some(b.balanced);
                report.balancing_lhs = Some(b.lhs.clone());
                if b.balanced {
                    reasons.push(
                        "balancing condition (2ℓ1 - N1)/(2N2 - τ) + (2ℓ2 - N2)/(2N1 - τ) = 0 holds".into(),
                    );
                } else {
                    if nonab {
                        obstructed = true;
                    }
                    reasons.push(format!(
                        "balancing condition (2ℓ1 - N1)/(2N2 - τ) + (2ℓ2 - N2)/(2N1 - τ) = 0 fails (left side {}): \
                         there is no solution of the non-abelian gravitating vortex equations",
                        b.lhs
                    ));
                }
            }
            Err(Error::Pole(msg)) => reasons.push(format!("balancing condition undefined: {msg}")),
            Err(e) => return Err(e),
        }
    }
    report.obstructed = obstructed;
    report.verdict = if obstructed {
        "obstructed".into()
    } else {
        "no obstruction detected".into()
    };
    report.reasons = reasons;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::normalize_volume;

    fn fs_input(grid: &AxisymGrid, config: &HiggsConfig) -> FutakiInput {
        FutakiInput {
            config: config.clone(),
            metric: ConformalMetric::round(grid),
            v: vec![grid.constant(0.0); config.rank()],
        }
    }

    #[test]
    fn closed_forms() {
        let c = HiggsConfig::rank2([2, 2], [1, 0], 5.0, 1.0).unwrap();
        assert!((futaki_closed_form(&c).unwrap() - 4.0 * PI).abs() < 1e-12);
        let c = HiggsConfig::rank2([1, 1], [0, 1], 3.7, 0.3).unwrap();
        assert_eq!(futaki_closed_form(&c).unwrap(), 0.0);
        let c = HiggsConfig::rank2([2, 2], [1, 1], 3.7, 0.3).unwrap();
        assert_eq!(futaki_closed_form(&c).unwrap(), 0.0);
        let c = HiggsConfig::abelian(1, 0, 3.0, 1.0).unwrap();
        assert!(matches!(futaki_closed_form(&c), Err(Error::WrongRank { .. })));
    }

    #[test]
    fn quadrature_at_fs() {
        let g = build_grid(129).unwrap();
        let c = HiggsConfig::rank2([2, 2], [1, 0], 5.0, 1.0).unwrap();
        let q = futaki_quadrature(&g, &fs_input(&g, &c)).unwrap();
        assert!((q - 4.0 * PI).abs() < 1e-9 * 4.0 * PI, "{q}");
        let c = HiggsConfig::abelian(1, 0, 3.0, 1.0).unwrap();
        let q = abelian_futaki_at(&g, &fs_input(&g, &c)).unwrap();
        assert!((q - 2.0 * PI).abs() < 1e-9, "{q}");
    }

    #[test]
    fn quadrature_metric_independent() {
        let g = build_grid(129).unwrap();
        let c = HiggsConfig::rank2([1, 3], [0, 2], 7.0, 0.7).unwrap();
        let input = FutakiInput {
            config: c.clone(),
            metric: normalize_volume(&g, &g.field_from_fn(|s| 0.3 * (3.0 * s).sin())).unwrap(),
            v: vec![
                g.field_from_fn(|s| 0.2 * s * s - 0.1),
                g.field_from_fn(|s| (-(s - 0.3).powi(2)).exp()),
            ],
        };
        let q = futaki_quadrature(&g, &input).unwrap();
        let want = futaki_closed_form(&c).unwrap();
        assert!((q - want).abs() < 1e-8 * want.abs(), "{q} vs {want}");
    }

    #[test]
    fn rejects_unnormalized() {
        let g = build_grid(33).unwrap();
        let c = HiggsConfig::rank2([1, 1], [0, 1], 3.0, 1.0).unwrap();
        let mut input = fs_input(&g, &c);
        input.metric.u = g.constant(0.1);
        assert!(matches!(futaki_quadrature(&g, &input), Err(Error::Precondition(_))));
    }

    #[test]
    fn balancing_values() {
        let c = HiggsConfig::rank2([1, 1], [0, 1], 3.0, 1.0).unwrap();
        assert!(balancing_condition(&c).unwrap().balanced);
        let c = HiggsConfig::rank2([2, 2], [1, 0], 5.0, 1.0).unwrap();
        let b = balancing_condition(&c).unwrap();
        assert_eq!(b.lhs, "2");
        assert!(!b.balanced);
        let c = HiggsConfig::rank2([1, 2], [0, 1], 4.0, 1.0).unwrap();
        match balancing_condition(&c) {
            Err(Error::Pole(m)) => assert!(m.contains("2N2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stability_examples() {
        let r = stability_check(&HiggsConfig::abelian(1, 0, 3.0, 0.0).unwrap()).unwrap();
        assert_eq!(r.abelian_window, Some(true));
        assert!(r.obstructed);
        assert!(r.reasons.iter().any(|m| m.contains("If φ has only one zero")));

        let r = stability_check(&HiggsConfig::abelian(2, 1, 5.0, 0.0).unwrap()).unwrap();
        assert!(!r.obstructed, "{:?}", r.reasons);

        let r = stability_check(&HiggsConfig::rank2([1, 1], [0, 1], 3.0, 1.0).unwrap()).unwrap();
        assert_eq!(r.reduced_window, Some(true));
        assert_eq!(r.nonabelian_window, Some(true));
        assert_eq!(r.balanced, Some(true));
        assert!(!r.obstructed);

        let r = stability_check(&HiggsConfig::rank2([2, 2], [1, 0], 5.0, 1.0).unwrap()).unwrap();
        assert_eq!(r.reduced_window, Some(true));
        assert_eq!(r.balanced, Some(false));
        assert!(r.obstructed);
        assert!(r.reasons.iter().any(|m| m.contains("balancing condition")));
    }

    #[test]
    fn general_forms_are_flagged() {
        let c = HiggsConfig::rank2([1, 1], [0, 1], 3.0, 1.0).unwrap();
        let forms = [
            BinaryForm::new(vec![q_int(1), q_int(1)]).unwrap(),
            BinaryForm::new(vec![q_int(1), q_int(-1)]).unwrap(),
        ];
        let r = stability_check_with_forms(&c, Some(&forms)).unwrap();
        assert_eq!(r.saturation_degree, Some(0));
        assert!(r.reduced_window.is_none());
        assert!(r.reasons.iter().any(|m| m.contains("not proven")));
    }
}
