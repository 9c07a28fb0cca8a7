//! Higgs configurations on O(N) over the sphere, divisors and their automorphism groups.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{q_from_f64, q_to_f64, BinaryForm, Poly, Q};
use crate::geometry::{AxisymGrid, Field};

/// Monomial Higgs data `φ_j = x0^{N_j-ℓ_j} x1^{ℓ_j}` on `O(N_j)`, rank 1 or split rank 2.
///
/// `tau` is kept as an exact rational so the window predicates have no
/// floating-point boundary cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiggsConfig {
    pub degrees: Vec<u32>,
    pub exponents: Vec<u32>,
    #[serde(with = "tau_serde")]
    pub tau: Q,
    pub alpha: f64,
}

impl HiggsConfig {
    pub fn abelian(degree: u32, exponent: u32, tau: f64, alpha: f64) -> Result<Self> {
        let cfg = HiggsConfig {
            degrees: vec![degree],
            exponents: vec![exponent],
            tau: q_from_f64(tau)?,
            alpha,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn rank2(degrees: [u32; 2], exponents: [u32; 2], tau: f64, alpha: f64) -> Result<Self> {
        let cfg = HiggsConfig {
            degrees: degrees.to_vec(),
            exponents: exponents.to_vec(),
            tau: q_from_f64(tau)?,
            alpha,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same as [`HiggsConfig::rank2`] with an exact rational `tau`.
    pub fn rank2_exact(degrees: [u32; 2], exponents: [u32; 2], tau: Q, alpha: f64) -> Result<Self> {
        let cfg = HiggsConfig {
            degrees: degrees.to_vec(),
            exponents: exponents.to_vec(),
            tau,
            alpha,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.degrees.is_empty() || self.degrees.len() > 2 {
            problems.push(format!(
                "degrees must have one or two entries, got {}",
                self.degrees.len()
            ));
        }
        if self.exponents.len() != self.degrees.len() {
            problems.push(format!(
                "exponents has {} entries but degrees has {}",
                self.exponents.len(),
                self.degrees.len()
            ));
        }
        for (j, &n) in self.degrees.iter().enumerate() {
            if n == 0 {
                problems.push(format!("degrees[{j}] must be positive"));
            }
            if let Some(&l) = self.exponents.get(j) {
                if l > n {
                    problems.push(format!("exponents[{j}] = {l} exceeds degrees[{j}] = {n}"));
                }
            }
        }
        if self.degrees.len() == 2 && self.degrees[0] > self.degrees[1] {
            problems.push("rank-2 degrees must satisfy N1 <= N2".into());
        }
        if !self.tau.is_positive() {
            problems.push("tau must be positive".into());
        }
        if !self.alpha.is_finite() {
            problems.push("alpha must be finite".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn rank(&self) -> usize {
        self.degrees.len()
    }

    pub fn tau_f64(&self) -> f64 {
        q_to_f64(&self.tau)
    }

    /// Imaginary part of the central element `z = -iατ/2`.
    pub fn z_imag(&self) -> f64 {
        -0.5 * self.alpha * self.tau_f64()
    }

    pub(crate) fn require_rank(&self, expected: usize) -> Result<()> {
        if self.rank() != expected {
            return Err(Error::WrongRank {
                expected,
                got: self.rank(),
            });
        }
        Ok(())
    }

    fn component(&self, j: usize) -> Result<(u32, u32)> {
        match (self.degrees.get(j), self.exponents.get(j)) {
            (Some(&n), Some(&l)) => Ok((n, l)),
            _ => Err(Error::Config(format!(
                "component {j} out of range for a rank-{} configuration",
                self.rank()
            ))),
        }
    }

    pub fn form(&self, j: usize) -> Result<BinaryForm> {
        let (n, l) = self.component(j)?;
        BinaryForm::monomial(n, l)
    }

    /// Zero divisor of component `j`: `ℓ` at `w = 0` and `N - ℓ` at `w = ∞`.
    pub fn divisor(&self, j: usize) -> Result<Divisor> {
        let (n, l) = self.component(j)?;
        Ok(Divisor::monomial(l, n - l))
    }
}

pub(crate) mod tau_serde {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    use crate::forms::{is_decimal, parse_q, q_from_f64, q_to_f64, Q};

    pub fn serialize<S: Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
        if is_decimal(q) && q_from_f64(q_to_f64(q)).ok().as_ref() == Some(q) {
            q_to_f64(q).serialize(s)
        } else {
            format!("{}/{}", q.numer(), q.denom()).serialize(s)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => q_from_f64(x).map_err(de::Error::custom),
            Raw::Text(t) => parse_q(&t).map_err(de::Error::custom),
        }
    }
}

/// `|φ_j|²_FS(s) = (1+s)^ℓ (1-s)^{N-ℓ} / 2^N`.
pub fn higgs_profile(grid: &AxisymGrid, config: &HiggsConfig, j: usize) -> Result<Field> {
    config.validate()?;
    let (n, l) = config.component(j)?;
    Ok(grid.field_from_fn(|s| {
        let a = 0.5 * (1.0 + s);
        let b = 0.5 * (1.0 - s);
        a.powi(l as i32) * b.powi((n - l) as i32)
    }))
}

/// Constant `iΛF` of the Fubini–Study metric on `O(N)` for the sphere of area `2π`.
pub fn fs_curvature(degree: i64) -> f64 {
    degree as f64
}

pub fn background_curvature(config: &HiggsConfig, j: usize) -> Result<f64> {
    let (n, _) = config.component(j)?;
    Ok(fs_curvature(n as i64))
}

/// A point of the projective line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    /// `[1 : w]` with `w` rational; `w = 0` is the point `x1 = 0`.
    Affine(#[serde(with = "q_text")] Q),
    /// `[0 : 1]`, where `x0 = 0`.
    Infinity,
    /// The `index`-th root of a square-free factor with no rational roots
    /// (monic, lowest degree first).
    Algebraic {
        #[serde(with = "q_text_vec")]
        factor: Vec<Q>,
        index: usize,
    },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Affine(q) => write!(f, "[1 : {q}]"),
            Location::Infinity => write!(f, "[0 : 1]"),
            Location::Algebraic { factor, index } => {
                let c: Vec<String> = factor.iter().map(|q| q.to_string()).collect();
                write!(f, "root {index} of [{}]", c.join(", "))
            }
        }
    }
}

mod q_text {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use crate::forms::{parse_q, Q};

    pub fn serialize<S: Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        parse_q(&String::deserialize(d)?).map_err(de::Error::custom)
    }
}

mod q_text_vec {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    use crate::forms::{parse_q, Q};

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|q| q.to_string()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| parse_q(t).map_err(de::Error::custom))
            .collect()
    }
}

/// Effective divisor on the projective line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divisor {
    points: Vec<(Location, u32)>,
}

impl Divisor {
    pub fn new(points: Vec<(Location, u32)>) -> Result<Self> {
        for (k, (loc, m)) in points.iter().enumerate() {
            if *m == 0 {
                return Err(Error::InvalidInput(format!(
                    "multiplicity at {loc} must be at least 1"
                )));
            }
            if points[..k].iter().any(|(other, _)| other == loc) {
                return Err(Error::InvalidInput(format!("location {loc} listed twice")));
            }
        }
        Ok(Divisor { points })
    }

    /// `a·[w = 0] + b·[w = ∞]`, omitting zero multiplicities.
    pub fn monomial(at_zero: u32, at_infinity: u32) -> Self {
        let mut points = Vec::new();
        if at_zero > 0 {
            points.push((Location::Affine(Q::zero()), at_zero));
        }
        if at_infinity > 0 {
            points.push((Location::Infinity, at_infinity));
        }
        Divisor { points }
    }

    /// Zero divisor of a non-zero binary form, using a square-free
    /// decomposition over ℚ (no root finding).
    pub fn from_form(form: &BinaryForm) -> Result<Self> {
        if form.is_zero() {
            return Err(Error::InvalidInput("the zero form has no divisor".into()));
        }
        let f = form.dehomogenize();
        let mut points = Vec::new();
        for (g, mult) in f.squarefree_decomposition() {
            push_factor(&mut points, &g, mult);
        }
        let at_inf = form.order_at_infinity().unwrap_or(0);
        if at_inf > 0 {
            points.push((Location::Infinity, at_inf));
        }
        Divisor::new(points)
    }

    pub fn points(&self) -> &[(Location, u32)] {
        &self.points
    }

    pub fn degree(&self) -> u32 {
        self.points.iter().map(|(_, m)| m).sum()
    }

    pub fn support_size(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn push_factor(points: &mut Vec<(Location, u32)>, g: &Poly, mult: u32) {
    match g.degree() {
        Some(1) => {
            let c = g.coeffs();
            points.push((Location::Affine(-&c[0] / &c[1]), mult));
        }
        Some(d) => {
            // Peel off rational roots first so affine points compare equal.
            let (rational, rest) = split_rational_roots(g);
            for r in rational {
                points.push((Location::Affine(r), mult));
            }
            if let Some(rd) = rest.degree().filter(|&rd| rd > 0) {
                for index in 0..rd {
                    points.push((
                        Location::Algebraic {
                            factor: rest.coeffs().to_vec(),
                            index,
                        },
                        mult,
                    ));
                }
            }
            debug_assert!(d > 0);
        }
        None => {}
    }
}

/// Rational roots of a square-free polynomial (rational root theorem) and the cofactor.
fn split_rational_roots(g: &Poly) -> (Vec<Q>, Poly) {
    use num_bigint::BigInt;
    use num_integer::Integer;

    let lcm = g
        .coeffs()
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = g
        .coeffs()
        .iter()
        .map(|c| (c * Q::from_integer(lcm.clone())).to_integer())
        .collect();
    let mut roots = Vec::new();
    let mut rest = g.clone();
    if ints.first().is_some_and(|c| c.is_zero()) {
        roots.push(Q::zero());
        rest = rest.div_rem(&Poly::new(vec![Q::zero(), Q::one()])).0;
    }
    let a0 = ints.iter().find(|c| !c.is_zero()).cloned().unwrap_or_default();
    let an = ints.last().cloned().unwrap_or_default();
    let small = |x: &BigInt| x.abs() <= BigInt::from(1_000_000u32);
    if !small(&a0) || !small(&an) {
        return (roots, rest);
    }
    let divisors = |x: &BigInt| -> Vec<BigInt> {
        let x = x.abs();
        let mut out = Vec::new();
        let mut k = BigInt::one();
        while &k * &k <= x {
            if (&x % &k).is_zero() {
                out.push(k.clone());
                out.push(&x / &k);
            }
            k += 1;
        }
        out
    };
    for p in divisors(&a0) {
        for q in divisors(&an) {
            for cand in [Q::new(p.clone(), q.clone()), -Q::new(p.clone(), q.clone())] {
                if rest.degree().unwrap_or(0) == 0 || roots.contains(&cand) {
                    continue;
                }
                if rest.eval(&cand).is_zero() {
                    rest = rest.div_rem(&Poly::new(vec![-cand.clone(), Q::one()])).0;
                    roots.push(cand);
                }
            }
        }
    }
    (roots, rest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutKind {
    NonReductiveBorel,
    Torus,
    Finite,
}

impl fmt::Display for AutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AutKind::NonReductiveBorel => "non_reductive_borel",
            AutKind::Torus => "torus",
            AutKind::Finite => "finite",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutVerdict {
    pub kind: AutKind,
    pub obstruction: bool,
}

/// Identity component of the Möbius stabilizer of the divisor support.
pub fn classify_automorphisms(divisor: &Divisor) -> Result<AutVerdict> {
    let kind = match divisor.support_size() {
        0 => {
            return Err(Error::InvalidInput(
                "empty divisor: the Higgs field must be non-zero of positive degree".into(),
            ))
        }
        1 => AutKind::NonReductiveBorel,
        2 => AutKind::Torus,
        _ => AutKind::Finite,
    };
    Ok(AutVerdict {
        kind,
        obstruction: kind == AutKind::NonReductiveBorel,
    })
}

/// Gcd divisor of the two components and the degree of the saturation `[φ]`.
pub fn divisor_gcd_degree(config: &HiggsConfig) -> Result<(Divisor, u32)> {
    config.require_rank(2)?;
    config.validate()?;
    let (n1, l1) = config.component(0)?;
    let (n2, l2) = config.component(1)?;
    let d = Divisor::monomial(l1.min(l2), (n1 - l1).min(n2 - l2));
    let deg = d.degree();
    Ok((d, deg))
}

/// Saturation degree of `(F1, F2)` from the binary-form gcd over ℚ.
pub fn saturation_degree(f1: &BinaryForm, f2: &BinaryForm) -> Result<u32> {
    if f1.is_zero() {
        return Err(Error::DegeneratePair { zero_component: 1 });
    }
    if f2.is_zero() {
        return Err(Error::DegeneratePair { zero_component: 2 });
    }
    Ok(f1.gcd_degree(f2).expect("both forms are non-zero"))
}
