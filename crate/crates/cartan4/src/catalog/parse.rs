//! Parser for the catalog text format: one block per entry, line-oriented,
//! with an exact scalar-expression grammar used for coefficients (rationals,
//! parameters, arithmetic, sqrt and the sqrt2 constant).

use crate::scalar::{parse_rational, Assignment, Poly, QSqrt2, Rational, ScalarError};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    At { line: usize, msg: String },
}

pub fn err1<T>(line: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::At {
        line,
        msg: msg.into(),
    })
}

// --- exact scalar expressions -------------------------------------------------

/// Arithmetic expression over parameters with exact evaluation into Q(sqrt 2).
#[derive(Clone, Debug, PartialEq)]
pub enum SExpr {
    Num(Rational),
    Var(String),
    Add(Box<SExpr>, Box<SExpr>),
    Sub(Box<SExpr>, Box<SExpr>),
    Mul(Box<SExpr>, Box<SExpr>),
    Div(Box<SExpr>, Box<SExpr>),
    Pow(Box<SExpr>, i32),
    Neg(Box<SExpr>),
    Sqrt(Box<SExpr>),
    Abs(Box<SExpr>),
}

impl SExpr {
    /// Exact evaluation. `vars` supplies rational values; the reserved name
    /// `sqrt2` evaluates to the sqrt 2 generator.
    pub fn eval(&self, vars: &BTreeMap<String, QSqrt2>) -> Result<QSqrt2, ScalarError> {
        Ok(match self {
            SExpr::Num(r) => QSqrt2::from_rational(r.clone()),
            SExpr::Var(name) => {
                if name == "sqrt2" {
                    QSqrt2::sqrt2()
                } else {
                    vars.get(name)
                        .cloned()
                        .ok_or_else(|| ScalarError::MissingParameter(name.clone()))?
                }
            }
            SExpr::Add(a, b) => a.eval(vars)?.add(&b.eval(vars)?),
            SExpr::Sub(a, b) => a.eval(vars)?.sub(&b.eval(vars)?),
            SExpr::Mul(a, b) => a.eval(vars)?.mul(&b.eval(vars)?),
            SExpr::Div(a, b) => a.eval(vars)?.div(&b.eval(vars)?)?,
            SExpr::Pow(a, k) => {
                let base = a.eval(vars)?;
                if *k < 0 {
                    let inv = base.inv()?;
                    let mut acc = QSqrt2::one();
                    for _ in 0..(-k) {
                        acc = acc.mul(&inv);
                    }
                    acc
                } else {
                    let mut acc = QSqrt2::one();
                    for _ in 0..*k {
                        acc = acc.mul(&base);
                    }
                    acc
                }
            }
            SExpr::Neg(a) => a.eval(vars)?.neg(),
            SExpr::Sqrt(a) => exact_sqrt(&a.eval(vars)?)?,
            SExpr::Abs(a) => {
                let v = a.eval(vars)?;
                if !v.b.is_zero() {
                    return Err(ScalarError::Parse(
                        "abs of an irrational value is not supported".into(),
                    ));
                }
                QSqrt2::from_rational(v.a.abs())
            }
        })
    }

    /// Conversion to a polynomial: the expression must be polynomial in its
    /// variables (division only by constants, no sqrt/abs).
    pub fn to_poly(&self) -> Result<Poly, ScalarError> {
        Ok(match self {
            SExpr::Num(r) => Poly::constant(r.clone()),
            SExpr::Var(name) => Poly::param(name),
            SExpr::Add(a, b) => a.to_poly()?.add(&b.to_poly()?),
            SExpr::Sub(a, b) => a.to_poly()?.sub(&b.to_poly()?),
            SExpr::Mul(a, b) => a.to_poly()?.mul(&b.to_poly()?),
            SExpr::Div(a, b) => {
                let den = b.to_poly()?;
                let c = den.as_constant().ok_or_else(|| {
                    ScalarError::Parse("polynomial division is not supported".into())
                })?;
                if c.is_zero() {
                    return Err(ScalarError::DivisionByZero);
                }
                a.to_poly()?
                    .scale(&(Rational::from_integer(BigInt::from(1)) / c))
            }
            SExpr::Pow(a, k) => {
                if *k < 0 {
                    return Err(ScalarError::Parse("negative power in polynomial".into()));
                }
                a.to_poly()?.pow(*k as u32)
            }
            SExpr::Neg(a) => a.to_poly()?.neg(),
            SExpr::Sqrt(_) | SExpr::Abs(_) => {
                return Err(ScalarError::Parse("sqrt/abs in polynomial context".into()))
            }
        })
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            SExpr::Var(v) => {
                if v != "sqrt2" {
                    out.push(v.clone())
                }
            }
            SExpr::Add(a, b) | SExpr::Sub(a, b) | SExpr::Mul(a, b) | SExpr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            SExpr::Pow(a, _) | SExpr::Neg(a) | SExpr::Sqrt(a) | SExpr::Abs(a) => {
                a.collect_vars(out)
            }
            SExpr::Num(_) => {}
        }
    }
}

/// Exact square root in Q(sqrt 2): succeeds for perfect rational squares
/// and for 2 times a perfect square.
fn exact_sqrt(v: &QSqrt2) -> Result<QSqrt2, ScalarError> {
    if !v.b.is_zero() {
        return Err(ScalarError::Parse("sqrt of an irrational value".into()));
    }
    let r = &v.a;
    if r.is_negative() {
        return Err(ScalarError::Parse("sqrt of a negative value".into()));
    }
    if let Some(s) = rational_sqrt(r) {
        return Ok(QSqrt2::from_rational(s));
    }
    let half = r / Rational::from_integer(BigInt::from(2));
    if let Some(s) = rational_sqrt(&half) {
        return Ok(QSqrt2::new(Rational::zero(), s));
    }
    Err(ScalarError::Parse(format!(
        "sqrt({r}) is not exact in Q(sqrt 2); choose a different sample"
    )))
}

fn rational_sqrt(r: &Rational) -> Option<Rational> {
    let n = r.numer();
    let d = r.denom();
    let sn = n.sqrt();
    let sd = d.sqrt();
    if &(&sn * &sn) == n && &(&sd * &sd) == d {
        Some(Rational::new(sn, sd))
    } else {
        None
    }
}

/// Parses the scalar-expression grammar.
pub fn parse_sexpr(input: &str) -> Result<SExpr, ScalarError> {
    let tokens = tokenize(input)?;
    let mut p = SParser { tokens, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(ScalarError::Parse(format!("trailing input in `{input}`")));
    }
    Ok(e)
}

pub fn parse_poly_expr(input: &str) -> Result<Poly, ScalarError> {
    parse_sexpr(input)?.to_poly()
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
        match b[i] {
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
            c if c.is_ascii_digit() => {
                let start = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = b[start..i].iter().collect();
                out.push(Tok::Num(parse_rational(&text)?));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(b[start..i].iter().collect()));
            }
            c => return Err(ScalarError::Parse(format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct SParser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl SParser {
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

    fn expr(&mut self) -> Result<SExpr, ScalarError> {
        let mut acc = self.term()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Plus => {
                    self.next();
                    acc = SExpr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.next();
                    acc = SExpr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<SExpr, ScalarError> {
        let mut acc = self.unary()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Star => {
                    self.next();
                    acc = SExpr::Mul(Box::new(acc), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.next();
                    acc = SExpr::Div(Box::new(acc), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<SExpr, ScalarError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.next();
                Ok(SExpr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Plus) => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<SExpr, ScalarError> {
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
                    return Ok(SExpr::Pow(Box::new(base), sign * k));
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

    fn atom(&mut self) -> Result<SExpr, ScalarError> {
        match self.next() {
            Some(Tok::Num(r)) => Ok(SExpr::Num(r)),
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.next();
                    let arg = self.expr()?;
                    if !matches!(self.next(), Some(Tok::RParen)) {
                        return Err(ScalarError::Parse(format!("unclosed `{name}(`")));
                    }
                    match name.as_str() {
                        "sqrt" => Ok(SExpr::Sqrt(Box::new(arg))),
                        "abs" => Ok(SExpr::Abs(Box::new(arg))),
                        _ => Err(ScalarError::Parse(format!("unknown function `{name}`"))),
                    }
                } else {
                    Ok(SExpr::Var(name))
                }
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                if !matches!(self.next(), Some(Tok::RParen)) {
                    return Err(ScalarError::Parse("unbalanced parenthesis".into()));
                }
                Ok(e)
            }
            other => Err(ScalarError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

// --- shared line helpers ------------------------------------------------------

/// "p1=1,p2=2/3" -> assignment
pub fn parse_assignment(s: &str, line: usize) -> Result<Assignment, ParseError> {
    let mut out = Assignment::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (k, v) = part
            .split_once('=')
            .ok_or(ParseError::At {
                line,
                msg: format!("expected name=value, got `{part}`"),
            })?;
        let r = parse_rational(v).map_err(|e| ParseError::At {
            line,
            msg: e.to_string(),
        })?;
        out.insert(k.trim().to_string(), r);
    }
    Ok(out)
}

/// Matrix rows "a b c ; d e f ; ..." of exact rationals.
pub fn parse_matrix_rows(s: &str, line: usize) -> Result<Vec<Vec<Rational>>, ParseError> {
    let mut rows = Vec::new();
    for row in s.split(';') {
        let entries: Result<Vec<Rational>, _> =
            row.split_whitespace().map(parse_rational).collect();
        let entries = entries.map_err(|e| ParseError::At {
            line,
            msg: e.to_string(),
        })?;
        if !entries.is_empty() {
            rows.push(entries);
        }
    }
    Ok(rows)
}

/// k-indexed basis-dual token: th<i> or w<al>, 1-based.
pub fn dual_token_index(tok: &str, n: usize, q: usize, line: usize) -> Result<usize, ParseError> {
    if let Some(rest) = tok.strip_prefix("th") {
        let i: usize = rest.parse().map_err(|_| ParseError::At {
            line,
            msg: format!("bad theta index `{tok}`"),
        })?;
        if i == 0 || i > n {
            return err1(line, format!("theta index out of range in `{tok}`"));
        }
        Ok(i - 1)
    } else if let Some(rest) = tok.strip_prefix('w') {
        let al: usize = rest.parse().map_err(|_| ParseError::At {
            line,
            msg: format!("bad omega index `{tok}`"),
        })?;
        if al == 0 || al > q {
            return err1(line, format!("omega index out of range in `{tok}`"));
        }
        Ok(n + al - 1)
    } else {
        err1(line, format!("expected th<i> or w<a>, got `{tok}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    #[test]
    fn sexpr_eval_exact() {
        let e = parse_sexpr("sqrt2*(p1 + 1/2)").unwrap();
        let mut vars = BTreeMap::new();
        vars.insert("p1".to_string(), QSqrt2::from_rational(rat(1, 2)));
        let v = e.eval(&vars).unwrap();
        assert_eq!(v, QSqrt2::new(int(0), int(1)));
        // sqrt of a perfect square and of twice a square
        let e = parse_sexpr("sqrt(abs(-9/4))").unwrap();
        assert_eq!(
            e.eval(&BTreeMap::new()).unwrap(),
            QSqrt2::from_rational(rat(3, 2))
        );
        let e = parse_sexpr("sqrt(8)").unwrap();
        assert_eq!(e.eval(&BTreeMap::new()).unwrap(), QSqrt2::new(int(0), int(2)));
        assert!(parse_sexpr("sqrt(3)").unwrap().eval(&BTreeMap::new()).is_err());
    }

    #[test]
    fn sexpr_to_poly() {
        let p = parse_poly_expr("-(p1^2 + 4*p2^2)*(L - 1)/2").unwrap();
        let q = crate::scalar::parse_poly(
            "-1/2*L*p1^2 - 2*L*p2^2 + 1/2*p1^2 + 2*p2^2",
        )
        .unwrap();
        assert_eq!(p, q);
        assert!(parse_poly_expr("p1/p2").is_err());
    }

    #[test]
    fn assignment_and_matrix_lines() {
        let a = parse_assignment("p1=1, p2=-2/3", 1).unwrap();
        assert_eq!(a["p1"], int(1));
        assert_eq!(a["p2"], rat(-2, 3));
        let m = parse_matrix_rows("1 0 ; 0 1/2", 1).unwrap();
        assert_eq!(m[1][1], rat(1, 2));
    }
}
