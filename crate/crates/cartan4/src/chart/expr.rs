//! Closed-form expression trees over rational constants, named parameters
//! and coordinates, closed under symbolic differentiation.

use crate::scalar::{parse_rational, rational_to_f64, Assignment, Rational, ScalarError};
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rational),
    Param(String),
    Coord(usize),
    Add(Rc<Expr>, Rc<Expr>),
    Sub(Rc<Expr>, Rc<Expr>),
    Mul(Rc<Expr>, Rc<Expr>),
    Div(Rc<Expr>, Rc<Expr>),
    Pow(Rc<Expr>, i32),
    Exp(Rc<Expr>),
    Sin(Rc<Expr>),
    Cos(Rc<Expr>),
    Neg(Rc<Expr>),
}

use Expr::*;

impl Expr {
    pub fn num(r: Rational) -> Expr {
        Num(r)
    }

    pub fn zero() -> Expr {
        Num(Rational::zero())
    }

    pub fn one() -> Expr {
        Num(Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Num(r) if r.is_zero())
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Num(x), Num(y)) => Num(x + y),
            (Num(x), _) if x.is_zero() => b,
            (_, Num(y)) if y.is_zero() => a,
            _ => Add(Rc::new(a), Rc::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Num(x), Num(y)) => Num(x - y),
            (_, Num(y)) if y.is_zero() => a,
            (Num(x), _) if x.is_zero() => Expr::neg(b),
            _ => Sub(Rc::new(a), Rc::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Num(x), Num(y)) => Num(x * y),
            (Num(x), _) if x.is_zero() => Expr::zero(),
            (_, Num(y)) if y.is_zero() => Expr::zero(),
            (Num(x), _) if x.is_one() => b,
            (_, Num(y)) if y.is_one() => a,
            _ => Mul(Rc::new(a), Rc::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (_, Num(y)) if y.is_one() => a,
            (Num(x), Num(y)) if !y.is_zero() => Num(x / y),
            (Num(x), _) if x.is_zero() => Expr::zero(),
            _ => Div(Rc::new(a), Rc::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match &a {
            Num(x) => Num(-x.clone()),
            Neg(inner) => inner.as_ref().clone(),
            _ => Neg(Rc::new(a)),
        }
    }

    pub fn pow(a: Expr, k: i32) -> Expr {
        match k {
            0 => Expr::one(),
            1 => a,
            _ => match &a {
                Num(x) if k > 0 => {
                    let mut acc = Rational::one();
                    for _ in 0..k {
                        acc *= x;
                    }
                    Num(acc)
                }
                _ => Pow(Rc::new(a), k),
            },
        }
    }

    pub fn exp(a: Expr) -> Expr {
        if a.is_zero() {
            Expr::one()
        } else {
            Exp(Rc::new(a))
        }
    }

    pub fn sin(a: Expr) -> Expr {
        if a.is_zero() {
            Expr::zero()
        } else {
            Sin(Rc::new(a))
        }
    }

    pub fn cos(a: Expr) -> Expr {
        if a.is_zero() {
            Expr::one()
        } else {
            Cos(Rc::new(a))
        }
    }

    /// Exact partial derivative with respect to coordinate `i`.
    pub fn diff(&self, i: usize) -> Expr {
        match self {
            Num(_) | Param(_) => Expr::zero(),
            Coord(j) => {
                if *j == i {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Add(a, b) => Expr::add(a.diff(i), b.diff(i)),
            Sub(a, b) => Expr::sub(a.diff(i), b.diff(i)),
            Mul(a, b) => Expr::add(
                Expr::mul(a.diff(i), b.as_ref().clone()),
                Expr::mul(a.as_ref().clone(), b.diff(i)),
            ),
            Div(a, b) => {
                // (a/b)' = a'/b - a b'/b^2
                let da = a.diff(i);
                let db = b.diff(i);
                Expr::sub(
                    Expr::div(da, b.as_ref().clone()),
                    Expr::div(
                        Expr::mul(a.as_ref().clone(), db),
                        Expr::pow(b.as_ref().clone(), 2),
                    ),
                )
            }
            Pow(a, k) => Expr::mul(
                Expr::mul(Expr::num(crate::scalar::int(*k as i64)), a.diff(i)),
                Expr::pow(a.as_ref().clone(), k - 1),
            ),
            Exp(a) => Expr::mul(a.diff(i), Expr::exp(a.as_ref().clone())),
            Sin(a) => Expr::mul(a.diff(i), Expr::cos(a.as_ref().clone())),
            Cos(a) => Expr::neg(Expr::mul(a.diff(i), Expr::sin(a.as_ref().clone()))),
            Neg(a) => Expr::neg(a.diff(i)),
        }
    }

    /// Substitutes rational values for all parameters, leaving coordinates.
    pub fn bind(&self, a: &Assignment) -> Result<Expr, ScalarError> {
        Ok(match self {
            Num(r) => Num(r.clone()),
            Param(name) => Num(a
                .get(name)
                .ok_or_else(|| ScalarError::MissingParameter(name.clone()))?
                .clone()),
            Coord(j) => Coord(*j),
            Add(x, y) => Expr::add(x.bind(a)?, y.bind(a)?),
            Sub(x, y) => Expr::sub(x.bind(a)?, y.bind(a)?),
            Mul(x, y) => Expr::mul(x.bind(a)?, y.bind(a)?),
            Div(x, y) => Expr::div(x.bind(a)?, y.bind(a)?),
            Pow(x, k) => Expr::pow(x.bind(a)?, *k),
            Exp(x) => Expr::exp(x.bind(a)?),
            Sin(x) => Expr::sin(x.bind(a)?),
            Cos(x) => Expr::cos(x.bind(a)?),
            Neg(x) => Expr::neg(x.bind(a)?),
        })
    }

    /// Substitutes expressions for coordinates (used for chart maps).
    pub fn subst_coords(&self, subs: &[Expr]) -> Expr {
        match self {
            Num(r) => Num(r.clone()),
            Param(name) => Param(name.clone()),
            Coord(j) => subs[*j].clone(),
            Add(x, y) => Expr::add(x.subst_coords(subs), y.subst_coords(subs)),
            Sub(x, y) => Expr::sub(x.subst_coords(subs), y.subst_coords(subs)),
            Mul(x, y) => Expr::mul(x.subst_coords(subs), y.subst_coords(subs)),
            Div(x, y) => Expr::div(x.subst_coords(subs), y.subst_coords(subs)),
            Pow(x, k) => Expr::pow(x.subst_coords(subs), *k),
            Exp(x) => Expr::exp(x.subst_coords(subs)),
            Sin(x) => Expr::sin(x.subst_coords(subs)),
            Cos(x) => Expr::cos(x.subst_coords(subs)),
            Neg(x) => Expr::neg(x.subst_coords(subs)),
        }
    }

    /// Floating evaluation at a point; parameters must already be bound.
    pub fn eval(&self, point: &[f64]) -> Result<f64, ScalarError> {
        Ok(match self {
            Num(r) => rational_to_f64(r),
            Param(name) => return Err(ScalarError::MissingParameter(name.clone())),
            Coord(j) => point[*j],
            Add(a, b) => a.eval(point)? + b.eval(point)?,
            Sub(a, b) => a.eval(point)? - b.eval(point)?,
            Mul(a, b) => a.eval(point)? * b.eval(point)?,
            Div(a, b) => {
                let den = b.eval(point)?;
                if den == 0.0 {
                    return Err(ScalarError::DivisionByZero);
                }
                a.eval(point)? / den
            }
            Pow(a, k) => a.eval(point)?.powi(*k),
            Exp(a) => a.eval(point)?.exp(),
            Sin(a) => a.eval(point)?.sin(),
            Cos(a) => a.eval(point)?.cos(),
            Neg(a) => -a.eval(point)?,
        })
    }

    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match self {
            Param(name) => out.push(name.clone()),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            Pow(a, _) | Exp(a) | Sin(a) | Cos(a) | Neg(a) => a.collect_params(out),
            _ => {}
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(r) => {
                if r.is_negative() {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            Param(name) => write!(f, "{name}"),
            Coord(j) => write!(f, "#{j}"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "{a}*{b}"),
            Div(a, b) => write!(f, "({a}/{b})"),
            Pow(a, k) => write!(f, "{a}^{k}"),
            Exp(a) => write!(f, "exp({a})"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Neg(a) => write!(f, "-({a})"),
        }
    }
}

/// Recursive-descent parser for the standard infix grammar with
/// exp/sin/cos, integer powers and exact rational literals. Identifiers
/// that name a coordinate become `Coord`, everything else is a parameter.
pub fn parse_expr(input: &str, coords: &[String]) -> Result<Expr, ScalarError> {
    let tokens = tokenize(input)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        coords,
    };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(ScalarError::Parse(format!(
            "trailing input at token {} in `{input}`",
            p.pos
        )));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<Tok>, ScalarError> {
    let mut out = Vec::new();
    let b: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = b[start..i].iter().collect();
                out.push(Tok::Num(parse_rational(&text)?));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(b[start..i].iter().collect()));
            }
            _ => return Err(ScalarError::Parse(format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    coords: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr, ScalarError> {
        let mut acc = self.term()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Plus => {
                    self.next();
                    acc = Expr::add(acc, self.term()?);
                }
                Tok::Minus => {
                    self.next();
                    acc = Expr::sub(acc, self.term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ScalarError> {
        let mut acc = self.unary()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Star => {
                    self.next();
                    acc = Expr::mul(acc, self.unary()?);
                }
                Tok::Slash => {
                    self.next();
                    acc = Expr::div(acc, self.unary()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ScalarError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.next();
            return Ok(Expr::neg(self.unary()?));
        }
        if matches!(self.peek(), Some(Tok::Plus)) {
            self.next();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ScalarError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.next();
            let mut sign = 1i32;
            if matches!(self.peek(), Some(Tok::Minus)) {
                self.next();
                sign = -1;
            }
            match self.next() {
                Some(Tok::Num(r)) if r.is_integer() => {
                    use num_traits::ToPrimitive;
                    let k = r
                        .to_integer()
                        .to_i32()
                        .ok_or_else(|| ScalarError::Parse("exponent too large".into()))?;
                    return Ok(Expr::pow(base, sign * k));
                }
                other => {
                    return Err(ScalarError::Parse(format!(
                        "expected integer exponent, got {other:?}"
                    )))
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ScalarError> {
        match self.next() {
            Some(Tok::Num(r)) => Ok(Expr::num(r)),
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.next();
                    let arg = self.expr()?;
                    match self.next() {
                        Some(Tok::RParen) => {}
                        _ => return Err(ScalarError::Parse(format!("unclosed call `{name}(`"))),
                    }
                    match name.as_str() {
                        "exp" => Ok(Expr::exp(arg)),
                        "sin" => Ok(Expr::sin(arg)),
                        "cos" => Ok(Expr::cos(arg)),
                        _ => Err(ScalarError::Parse(format!("unknown function `{name}`"))),
                    }
                } else if let Some(idx) = self.coords.iter().position(|c| *c == name) {
                    Ok(Expr::Coord(idx))
                } else {
                    Ok(Expr::Param(name))
                }
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(ScalarError::Parse("unbalanced parenthesis".into())),
                }
            }
            other => Err(ScalarError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Deterministic pseudo-random stream for evaluation points (splitmix64).
#[derive(Clone, Debug)]
pub struct PointSampler {
    state: u64,
}

impl PointSampler {
    pub fn new(seed: u64) -> Self {
        PointSampler { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1].
    pub fn next_coord(&mut self) -> f64 {
        let u = self.next_u64() >> 11; // 53 bits
        (u as f64) / ((1u64 << 52) as f64) - 1.0
    }

    pub fn point(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.next_coord()).collect()
    }
}

/// Central finite difference used as the independent oracle for `diff`.
pub fn central_difference(
    e: &Expr,
    point: &[f64],
    i: usize,
    h: f64,
) -> Result<f64, ScalarError> {
    let mut up = point.to_vec();
    up[i] += h;
    let mut dn = point.to_vec();
    dn[i] -= h;
    Ok((e.eval(&up)? - e.eval(&dn)?) / (2.0 * h))
}

/// Convenience: evaluate with explicit parameter values in one call.
pub fn eval_with_params(
    e: &Expr,
    point: &[f64],
    params: &HashMap<String, f64>,
) -> Result<f64, ScalarError> {
    // used by tests; production paths bind rationals first
    fn go(e: &Expr, point: &[f64], params: &HashMap<String, f64>) -> Result<f64, ScalarError> {
        Ok(match e {
            Num(r) => rational_to_f64(r),
            Param(name) => *params
                .get(name)
                .ok_or_else(|| ScalarError::MissingParameter(name.clone()))?,
            Coord(j) => point[*j],
            Add(a, b) => go(a, point, params)? + go(b, point, params)?,
            Sub(a, b) => go(a, point, params)? - go(b, point, params)?,
            Mul(a, b) => go(a, point, params)? * go(b, point, params)?,
            Div(a, b) => {
                let den = go(b, point, params)?;
                if den == 0.0 {
                    return Err(ScalarError::DivisionByZero);
                }
                go(a, point, params)? / den
            }
            Pow(a, k) => go(a, point, params)?.powi(*k),
            Exp(a) => go(a, point, params)?.exp(),
            Sin(a) => go(a, point, params)?.sin(),
            Cos(a) => go(a, point, params)?.cos(),
            Neg(a) => -go(a, point, params)?,
        })
    }
    go(e, point, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{assignment, int, rat};

    fn coords4() -> Vec<String> {
        vec!["y1".into(), "y2".into(), "y3".into(), "y4".into()]
    }

    #[test]
    fn parse_and_eval() {
        let c = coords4();
        let e = parse_expr("exp(y1)*cos(y2)", &c).unwrap();
        assert!((e.eval(&[0.0, 0.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let e = parse_expr("2/3*a1 + y3^2", &c).unwrap();
        let b = e.bind(&assignment(&[("a1", int(3))])).unwrap();
        assert!((b.eval(&[0.0, 0.0, 2.0, 0.0]).unwrap() - 6.0).abs() < 1e-15);
        // exact rational literals, no decimals
        assert!(parse_expr("0.5*y1", &c).is_err());
    }

    #[test]
    fn diff_examples() {
        let c = coords4();
        // d/dy1 exp(y1) = exp(y1)
        let e = parse_expr("exp(y1)", &c).unwrap();
        let d = e.diff(0);
        assert_eq!(d, e);
        // d/dy2 (exp(y1) cos(y2)) = -exp(y1) sin(y2)
        let e = parse_expr("exp(y1)*cos(y2)", &c).unwrap();
        let d = e.diff(1);
        let expect = parse_expr("-(exp(y1)*sin(y2))", &c).unwrap();
        for p in [[0.1, 0.2, 0.0, 0.0], [1.0, -0.5, 0.0, 0.0]] {
            assert!((d.eval(&p).unwrap() - expect.eval(&p).unwrap()).abs() < 1e-14);
        }
        // d/dy4 (a1 exp(-4/3 y4)) = -4/3 a1 exp(-4/3 y4)
        let e = parse_expr("a1*exp(-4/3*y4)", &c)
            .unwrap()
            .bind(&assignment(&[("a1", rat(1, 1))]))
            .unwrap();
        let d = e.diff(3);
        let at = d.eval(&[0.0, 0.0, 0.0, 0.3]).unwrap();
        let want = -4.0 / 3.0 * (-4.0f64 / 3.0 * 0.3).exp();
        assert!((at - want).abs() < 1e-14);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let c = coords4();
        let e = parse_expr("1/y1", &c).unwrap();
        assert!(matches!(
            e.eval(&[0.0, 1.0, 1.0, 1.0]),
            Err(ScalarError::DivisionByZero)
        ));
        assert!((e.eval(&[2.0, 1.0, 1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampler_is_deterministic() {
        let mut a = PointSampler::new(42);
        let mut b = PointSampler::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut s = PointSampler::new(7);
        for _ in 0..1000 {
            let x = s.next_coord();
            assert!((-1.0..=1.0).contains(&x));
        }
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-5i64..6).prop_map(|n| Expr::num(crate::scalar::int(n))),
            (0usize..3).prop_map(Expr::Coord),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
                (inner.clone(), 1i32..4).prop_map(|(a, k)| Expr::pow(a, k)),
                inner.clone().prop_map(|a| Expr::sin(a)),
                inner.clone().prop_map(|a| Expr::cos(a)),
                // tame the argument so exp stays in range
                inner
                    .clone()
                    .prop_map(|a| Expr::exp(Expr::mul(Expr::num(crate::scalar::rat(1, 8)), a))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn diff_matches_central_difference(e in arb_expr(), seed in 0u64..1000) {
            let mut sampler = PointSampler::new(seed);
            let p = sampler.point(3);
            for i in 0..3 {
                let d = e.diff(i);
                let Ok(sym) = d.eval(&p) else { continue };
                let Ok(fd) = central_difference(&e, &p, i, 1e-5) else { continue };
                if sym.is_finite() && fd.is_finite() {
                    let scale = sym.abs().max(fd.abs()).max(1.0);
                    prop_assert!((sym - fd).abs() / scale < 1e-5,
                        "diff mismatch: sym={sym} fd={fd}");
                }
            }
        }
    }
}
