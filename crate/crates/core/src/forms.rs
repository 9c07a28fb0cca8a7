//! Exact rationals and univariate polynomials over ℚ.
//!
//! Binary forms `F(x0, x1) = Σ_k c_k x0^{N-k} x1^k` are handled through their
//! dehomogenization `f(w) = F(1, w)`; the degree drop `N - deg f` is the
//! multiplicity of the zero at `w = ∞` (`x0 = 0`).

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"3"`, `"-7/2"` or a decimal such as `"2.5"` / `"1e-3"` exactly.
pub fn parse_q(text: &str) -> Result<Q> {
    let t = text.trim();
    let bad = || Error::Config(format!("cannot parse {text:?} as a rational number"));
    if let Some((num, den)) = t.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::Config(format!("zero denominator in {text:?}")));
        }
        return Ok(Q::new(num, den));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse().map_err(|_| bad())?;
    let mut value = Q::new(all, BigInt::from(10));
    let scale = exp - frac_part.len() as i32;
    let ten = Q::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if neg { -value } else { value })
}

/// Rational with the same shortest decimal rendering as `x` (so `0.1` is `1/10`).
pub fn q_from_f64(x: f64) -> Result<Q> {
    if !x.is_finite() {
        return Err(Error::NumericInput(format!("{x} is not finite")));
    }
    parse_q(&format!("{x:e}"))
}

pub fn q_to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// True when the denominator has only the prime factors 2 and 5.
pub fn is_decimal(q: &Q) -> bool {
    let mut d = q.denom().clone();
    for p in [2u32, 5] {
        let p = BigInt::from(p);
        while (&d % &p).is_zero() {
            d /= &p;
        }
    }
    d.is_one()
}

/// Univariate polynomial with rational coefficients, lowest degree first.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<Q>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "Poly[{}]", parts.join(", "))
    }
}

impl Poly {
    pub fn new(mut coeffs: Vec<Q>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    fn lead(&self) -> Option<&Q> {
        self.coeffs.last()
    }

    pub fn monic(&self) -> Poly {
        match self.lead() {
            None => Poly::zero(),
            Some(l) => {
                let l = l.clone();
                Poly::new(self.coeffs.iter().map(|c| c / &l).collect())
            }
        }
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * q_int(k as i64))
                .collect(),
        )
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.lead().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let len = self.coeffs.len().saturating_sub(dd);
        let mut quot = vec![Q::zero(); len.max(1)];
        while rem.len() > dd {
            let top = rem.len() - 1;
            let c = rem[top].clone() / &lead;
            if !c.is_zero() {
                for (k, dc) in divisor.coeffs.iter().enumerate() {
                    rem[top - dd + k] -= &c * dc;
                }
            }
            quot[top - dd] = c;
            rem.pop();
        }
        (Poly::new(quot), Poly::new(rem))
    }

    /// Monic greatest common divisor (zero only if both inputs are zero).
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Square-free decomposition (Yun): returns `(g_i, i)` with `f = c Π g_i^i`,
    /// the `g_i` monic, square-free, pairwise coprime and non-constant.
    pub fn squarefree_decomposition(&self) -> Vec<(Poly, u32)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let f = self.monic();
        let df = f.derivative();
        let a0 = f.gcd(&df);
        let mut b = f.div_rem(&a0).0;
        let mut c = df.div_rem(&a0).0;
        let mut d = c.sub(&b.derivative());
        let mut i = 1u32;
        while b.degree().unwrap_or(0) > 0 {
            let a = b.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), i));
            }
            b = b.div_rem(&a).0;
            c = d.div_rem(&a).0;
            d = c.sub(&b.derivative());
            i += 1;
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    let a = self.coeffs.get(k).cloned().unwrap_or_else(Q::zero);
                    let b = other.coeffs.get(k).cloned().unwrap_or_else(Q::zero);
                    a - b
                })
                .collect(),
        )
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.coeffs
            .iter()
            .rev()
            .fold(Q::zero(), |acc, c| acc * x + c)
    }
}

/// Binary form of degree `N` given by its `N + 1` coefficients of
/// `x0^{N-k} x1^k`, `k = 0..=N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryForm {
    coeffs: Vec<Q>,
}

impl BinaryForm {
    pub fn new(coeffs: Vec<Q>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput(
                "a binary form needs at least one coefficient".into(),
            ));
        }
        Ok(BinaryForm { coeffs })
    }

    /// `x0^{N-ℓ} x1^ℓ`.
    pub fn monomial(degree: u32, exponent: u32) -> Result<Self> {
        if exponent > degree {
            return Err(Error::Config(format!(
                "exponent {exponent} exceeds degree {degree}"
            )));
        }
        let mut c = vec![Q::zero(); degree as usize + 1];
        c[exponent as usize] = Q::one();
        BinaryForm::new(c)
    }

    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// `f(w) = F(1, w)`.
    pub fn dehomogenize(&self) -> Poly {
        Poly::new(self.coeffs.clone())
    }

    /// Order of vanishing at `w = ∞`; `None` for the zero form.
    pub fn order_at_infinity(&self) -> Option<u32> {
        let f = self.dehomogenize();
        f.degree().map(|d| self.degree() - d as u32)
    }

    /// Degree of the greatest common divisor of two non-zero binary forms.
    pub fn gcd_degree(&self, other: &BinaryForm) -> Option<u32> {
        let (ia, ib) = (self.order_at_infinity()?, other.order_at_infinity()?);
        let g = self.dehomogenize().gcd(&other.dehomogenize());
        Some(g.degree().unwrap_or(0) as u32 + ia.min(ib))
    }

    /// Greatest common divisor as a binary form of degree `gcd_degree`.
    pub fn gcd(&self, other: &BinaryForm) -> Option<BinaryForm> {
        let (ia, ib) = (self.order_at_infinity()?, other.order_at_infinity()?);
        let g = self.dehomogenize().gcd(&other.dehomogenize());
        let mut coeffs = g.coeffs().to_vec();
        coeffs.extend(std::iter::repeat_n(Q::zero(), ia.min(ib) as usize));
        Some(BinaryForm { coeffs })
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> Poly {
        Poly::new(c.iter().map(|&x| q_int(x)).collect())
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_q("7/2").unwrap(), Q::new(7.into(), 2.into()));
        assert_eq!(parse_q("2.5").unwrap(), Q::new(5.into(), 2.into()));
        assert_eq!(parse_q("-0.1").unwrap(), Q::new((-1).into(), 10.into()));
        assert_eq!(parse_q("1e-3").unwrap(), Q::new(1.into(), 1000.into()));
        assert_eq!(parse_q("3").unwrap(), q_int(3));
        assert!(parse_q("abc").is_err());
        assert!(parse_q("1/0").is_err());
        assert_eq!(q_from_f64(0.1).unwrap(), Q::new(1.into(), 10.into()));
        assert!(is_decimal(&parse_q("0.125").unwrap()));
        assert!(!is_decimal(&parse_q("1/3").unwrap()));
    }

    #[test]
    fn gcd_of_polynomials() {
        // (w-1)(w+2) and (w-1)(w-3)
        let a = p(&[-2, 1, 1]);
        let b = p(&[3, -4, 1]);
        assert_eq!(a.gcd(&b), p(&[-1, 1]));
        assert_eq!(a.gcd(&Poly::zero()), a.monic());
    }

    #[test]
    fn squarefree_parts() {
        // (w-1)^3 (w+1) (w^2+1)^2
        let w1 = p(&[-1, 1]);
        let mut f = p(&[1]);
        let mul = |a: &Poly, b: &Poly| {
            let mut c = vec![Q::zero(); a.coeffs().len() + b.coeffs().len() - 1];
            for (i, x) in a.coeffs().iter().enumerate() {
                for (j, y) in b.coeffs().iter().enumerate() {
                    c[i + j] += x * y;
                }
            }
            Poly::new(c)
        };
        for _ in 0..3 {
            f = mul(&f, &w1);
        }
        f = mul(&f, &p(&[1, 1]));
        f = mul(&f, &p(&[1, 0, 1]));
        f = mul(&f, &p(&[1, 0, 1]));
        let parts = f.squarefree_decomposition();
        let summary: Vec<(usize, u32)> = parts
            .iter()
            .map(|(g, i)| (g.degree().unwrap(), *i))
            .collect();
        assert_eq!(summary, vec![(1, 1), (2, 2), (1, 3)]);
    }

    #[test]
    fn monomial_gcd_degree() {
        let a = BinaryForm::monomial(3, 2).unwrap();
        let b = BinaryForm::monomial(3, 2).unwrap();
        assert_eq!(a.gcd_degree(&b), Some(3));
        let a = BinaryForm::monomial(2, 1).unwrap();
        let b = BinaryForm::monomial(2, 0).unwrap();
        assert_eq!(a.gcd_degree(&b), Some(1));
        let a = BinaryForm::monomial(1, 0).unwrap();
        let b = BinaryForm::monomial(1, 1).unwrap();
        assert_eq!(a.gcd_degree(&b), Some(0));
    }
}
