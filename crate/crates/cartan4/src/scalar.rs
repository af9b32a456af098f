//! Exact arithmetic backbone: arbitrary-precision rationals, sparse
//! multivariate polynomials over named parameters, and the quadratic
//! extension Q(sqrt 2) used by a few changes of basis.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

pub type Rational = num_rational::BigRational;

/// Parameter values for instantiating polynomials.
pub type Assignment = BTreeMap<String, Rational>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error("missing parameter `{0}` in assignment")]
    MissingParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("division by zero")]
    DivisionByZero,
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses "2/3", "-5", "7" exactly. Decimal notation is rejected.
pub fn parse_rational(s: &str) -> Result<Rational, ScalarError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| ScalarError::Parse(format!("bad integer `{num}`")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| ScalarError::Parse(format!("bad integer `{den}`")))?;
    if d.is_zero() {
        return Err(ScalarError::DivisionByZero);
    }
    Ok(Rational::new(n, d))
}

pub fn assignment(pairs: &[(&str, Rational)]) -> Assignment {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Exponent vector over named parameters; zero exponents are never stored,
/// so structural equality is canonical.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(BTreeMap<String, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(name: &str) -> Self {
        Self::var_pow(name, 1)
    }

    pub fn var_pow(name: &str, k: u32) -> Self {
        let mut m = BTreeMap::new();
        if k > 0 {
            m.insert(name.to_string(), k);
        }
        Monomial(m)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = self.0.clone();
        for (k, v) in &other.0 {
            *m.entry(k.clone()).or_insert(0) += v;
        }
        Monomial(m)
    }

    pub fn vars(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Sparse multivariate polynomial with exact rational coefficients.
/// Zero coefficients are never stored; the term map is ordered, so two
/// polynomials are equal iff they are structurally equal.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn from_i64(n: i64) -> Self {
        Poly::constant(int(n))
    }

    pub fn param(name: &str) -> Self {
        let mut p = Poly::zero();
        p.terms.insert(Monomial::var(name), Rational::one());
        p
    }

    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Returns the constant value if the polynomial has no parameters.
    pub fn as_constant(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            return Some(Rational::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Monomial::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (name, _) in m.vars() {
                out.insert(name.to_string());
            }
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        let mut out = Poly::zero();
        for (m, v) in &self.terms {
            out.terms.insert(m.clone(), v * c);
        }
        out
    }

    pub fn pow(&self, mut k: u32) -> Poly {
        let mut out = Poly::one();
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                out = out.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    /// Exact evaluation; every parameter occurring in the polynomial must be
    /// assigned.
    pub fn eval(&self, a: &Assignment) -> Result<Rational, ScalarError> {
        let mut out = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (name, k) in m.vars() {
                let v = a
                    .get(name)
                    .ok_or_else(|| ScalarError::MissingParameter(name.to_string()))?;
                for _ in 0..k {
                    t *= v;
                }
            }
            out += t;
        }
        Ok(out)
    }

    /// Substitutes `param := value` leaving the other parameters symbolic.
    pub fn subst(&self, param: &str, value: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut rest = BTreeMap::new();
            let mut k = 0;
            for (name, e) in m.vars() {
                if name == param {
                    k = e;
                } else {
                    rest.insert(name.to_string(), e);
                }
            }
            let base = Poly::term(c.clone(), Monomial(rest));
            out = out.add(&base.mul(&value.pow(k)));
        }
        out
    }

    fn fmt_term(c: &Rational, m: &Monomial, lead: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = c.is_negative();
        if lead {
            if neg {
                write!(f, "-")?;
            }
        } else if neg {
            write!(f, " - ")?;
        } else {
            write!(f, " + ")?;
        }
        let abs = c.abs();
        if m.is_one() {
            return write!(f, "{abs}");
        }
        let mut first = true;
        if !abs.is_one() {
            write!(f, "{abs}*")?;
        }
        for (name, k) in m.vars() {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if k == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{k}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // descending graded-lex so leading terms come first
        let mut ts: Vec<_> = self.terms.iter().collect();
        ts.sort_by(|(m1, _), (m2, _)| m2.degree().cmp(&m1.degree()).then(m2.cmp(m1)));
        for (i, (m, c)) in ts.iter().enumerate() {
            Self::fmt_term(c, m, i == 0, f)?;
        }
        Ok(())
    }
}

impl std::ops::Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        Poly::add(self, rhs)
    }
}
impl std::ops::Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        Poly::sub(self, rhs)
    }
}
impl std::ops::Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        Poly::mul(self, rhs)
    }
}

/// Parses the canonical polynomial grammar: terms joined by `+`/`-`,
/// each term `coef*name^k*...` with an exact rational coefficient.
pub fn parse_poly(input: &str) -> Result<Poly, ScalarError> {
    let s = input.trim();
    if s.is_empty() {
        return Err(ScalarError::Parse("empty polynomial".into()));
    }
    // split into signed terms at top level
    let mut out = Poly::zero();
    let bytes = s.as_bytes();
    let mut i = 0;
    let mut sign = 1i64;
    // leading sign
    if bytes[0] == b'+' || bytes[0] == b'-' {
        sign = if bytes[0] == b'-' { -1 } else { 1 };
        i = 1;
    }
    let mut start = i;
    let flush = |start: usize, end: usize, sign: i64, out: &mut Poly| -> Result<(), ScalarError> {
        let term = s[start..end].trim();
        if term.is_empty() {
            return Err(ScalarError::Parse(format!("empty term in `{input}`")));
        }
        let (c, m) = parse_term(term)?;
        out.add_term(m, if sign < 0 { -c } else { c });
        Ok(())
    };
    while i < bytes.len() {
        let b = bytes[i];
        if (b == b'+' || b == b'-') && i > start {
            // previous char must not be '^', '*' or '/' (no scientific notation here)
            let prev = bytes[i - 1];
            if prev != b'^' && prev != b'*' && prev != b'/' {
                flush(start, i, sign, &mut out)?;
                sign = if b == b'-' { -1 } else { 1 };
                start = i + 1;
            }
        }
        i += 1;
    }
    flush(start, bytes.len(), sign, &mut out)?;
    Ok(out)
}

fn parse_term(term: &str) -> Result<(Rational, Monomial), ScalarError> {
    let mut coef = Rational::one();
    let mut mono = BTreeMap::new();
    for factor in term.split('*') {
        let factor = factor.trim();
        if factor.is_empty() {
            return Err(ScalarError::Parse(format!("empty factor in `{term}`")));
        }
        let first = factor.chars().next().unwrap();
        if first.is_ascii_digit() {
            coef *= parse_rational(factor)?;
        } else {
            let (name, k) = match factor.split_once('^') {
                Some((n, e)) => {
                    let k: u32 = e
                        .trim()
                        .parse()
                        .map_err(|_| ScalarError::Parse(format!("bad exponent in `{factor}`")))?;
                    (n.trim(), k)
                }
                None => (factor, 1),
            };
            if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ScalarError::Parse(format!("bad parameter name `{name}`")));
            }
            *mono.entry(name.to_string()).or_insert(0) += k;
        }
    }
    Ok((coef, Monomial(mono)))
}

/// Element of Q(sqrt 2): `a + b*sqrt(2)` with exact rational parts.
/// Zero iff both parts vanish, since sqrt 2 is irrational.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QSqrt2 {
    pub a: Rational,
    pub b: Rational,
}

impl QSqrt2 {
    pub fn new(a: Rational, b: Rational) -> Self {
        QSqrt2 { a, b }
    }

    pub fn from_rational(a: Rational) -> Self {
        QSqrt2 {
            a,
            b: Rational::zero(),
        }
    }

    pub fn zero() -> Self {
        Self::from_rational(Rational::zero())
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn sqrt2() -> Self {
        QSqrt2 {
            a: Rational::zero(),
            b: Rational::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        QSqrt2::new(&self.a + &o.a, &self.b + &o.b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        QSqrt2::new(&self.a - &o.a, &self.b - &o.b)
    }

    pub fn neg(&self) -> Self {
        QSqrt2::new(-self.a.clone(), -self.b.clone())
    }

    pub fn mul(&self, o: &Self) -> Self {
        // (a + b s)(c + d s) = ac + 2bd + (ad + bc) s
        QSqrt2::new(
            &self.a * &o.a + int(2) * &self.b * &o.b,
            &self.a * &o.b + &self.b * &o.a,
        )
    }

    pub fn inv(&self) -> Result<Self, ScalarError> {
        // 1/(a + b s) = (a - b s)/(a^2 - 2 b^2)
        let den = &self.a * &self.a - int(2) * &self.b * &self.b;
        if den.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(QSqrt2::new(&self.a / &den, -self.b.clone() / &den))
    }

    pub fn div(&self, o: &Self) -> Result<Self, ScalarError> {
        Ok(self.mul(&o.inv()?))
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            write!(f, "{}*sqrt2", self.b)
        } else {
            write!(f, "{} + {}*sqrt2", self.a, self.b)
        }
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Poly {
        parse_poly(s).unwrap()
    }

    #[test]
    fn poly_arith_examples() {
        // (alpha+1) + (alpha-1) = 2 alpha
        assert_eq!(p("alpha + 1").add(&p("alpha - 1")), p("2*alpha"));
        // (p1^2 + p2^2) * 1
        assert_eq!(p("p1^2 + p2^2").mul(&Poly::one()), p("p1^2 + p2^2"));
        // (p1+p4)(p1-p4) = p1^2 - p4^2
        assert_eq!(p("p1 + p4").mul(&p("p1 - p4")), p("p1^2 - p4^2"));
    }

    #[test]
    fn poly_eval_examples() {
        let a = assignment(&[("alpha", rat(2, 3))]);
        assert_eq!(p("alpha + 1").eval(&a).unwrap(), rat(5, 3));
        let a = assignment(&[("p1", int(1)), ("p2", int(0))]);
        assert_eq!(p("p1^2 + p2^2").eval(&a).unwrap(), int(1));
        // Einstein constant at alpha = 2/3, p4 = 1
        let a = assignment(&[("alpha", rat(2, 3)), ("p4", int(1))]);
        assert_eq!(p("3*alpha^2*p4^2").eval(&a).unwrap(), rat(4, 3));
    }

    #[test]
    fn eval_missing_parameter() {
        let a = assignment(&[("p1", int(1))]);
        assert_eq!(
            p("p1*p2").eval(&a),
            Err(ScalarError::MissingParameter("p2".into()))
        );
    }

    #[test]
    fn display_roundtrip() {
        for s in [
            "3*alpha^2*p4^2",
            "p1^2 - p4^2",
            "2*alpha",
            "0",
            "-1/2*t1 + 5/3",
            "alpha^2*p4 - 2*p1*p2*t1 + 7",
        ] {
            let q = p(s);
            assert_eq!(parse_poly(&q.to_string()).unwrap(), q, "roundtrip {s}");
        }
    }

    #[test]
    fn subst_replaces_parameter() {
        // K := (2 p6 t^2 + p1)/p6 cleared: substitute p1 = p6*kk - 2*p6*t^2
        let table = p("kk*p6");
        let out = table.subst("kk", &p("2*t^2 + 3"));
        assert_eq!(out, p("2*p6*t^2 + 3*p6"));
    }

    #[test]
    fn qsqrt2_field_ops() {
        let x = QSqrt2::new(int(1), int(1)); // 1 + s
        let y = x.inv().unwrap();
        assert_eq!(x.mul(&y), QSqrt2::one());
        assert_eq!(
            QSqrt2::sqrt2().mul(&QSqrt2::sqrt2()),
            QSqrt2::from_rational(int(2))
        );
        assert!(QSqrt2::new(int(0), int(0)).inv().is_err());
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_poly() -> impl Strategy<Value = Poly> {
        let term = (
            -9i64..10,
            1i64..5,
            prop::collection::vec((0usize..3, 1u32..3), 0..3),
        );
        prop::collection::vec(term, 0..5).prop_map(|ts| {
            let names = ["alpha", "p1", "t1"];
            let mut p = Poly::zero();
            for (num, den, vars) in ts {
                let mut m = Monomial::one();
                for (vi, k) in vars {
                    m = m.mul(&Monomial::var_pow(names[vi], k));
                }
                p = p.add(&Poly::term(rat(num, den), m));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            prop_assert_eq!(a.mul(&b), b.mul(&a));
        }

        #[test]
        fn eval_is_ring_hom(a in arb_poly(), b in arb_poly(),
                            x in -6i64..7, y in -6i64..7, z in -6i64..7) {
            let asn = assignment(&[("alpha", int(x)), ("p1", int(y)), ("t1", int(z))]);
            let lhs = a.mul(&b).eval(&asn).unwrap();
            let rhs = a.eval(&asn).unwrap() * b.eval(&asn).unwrap();
            prop_assert_eq!(lhs, rhs);
            let lhs = a.add(&b).eval(&asn).unwrap();
            let rhs = a.eval(&asn).unwrap() + b.eval(&asn).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn display_parse_roundtrip(a in arb_poly()) {
            prop_assert_eq!(parse_poly(&a.to_string()).unwrap(), a);
        }
    }
}
