//! Lie algebras as structure-constant tensors with polynomial entries:
//! Jacobi validation, brackets, Killing form, subalgebra and morphism
//! verification, and construction of matrix algebras o(p,q) from explicit
//! generators.

use crate::linalg::{in_span, Field, Mat};
use crate::scalar::{parse_poly, Assignment, Poly, Rational, ScalarError};
use num_traits::Zero;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("matrix {0} is not in the span of the basis")]
    NotInSpan(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Structure constants c^k_{ij} with antisymmetry in (i,j) enforced at
/// construction. Entries are polynomials in the declared parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebra {
    pub dim: usize,
    pub labels: Vec<String>,
    pub params: Vec<String>,
    c: Vec<Poly>, // [k][i][j] row-major
}

impl LieAlgebra {
    pub fn new(dim: usize) -> Self {
        LieAlgebra {
            dim,
            labels: (1..=dim).map(|i| format!("e{i}")).collect(),
            params: Vec::new(),
            c: vec![Poly::zero(); dim * dim * dim],
        }
    }

    fn idx(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.dim + i) * self.dim + j
    }

    pub fn c(&self, k: usize, i: usize, j: usize) -> &Poly {
        &self.c[self.idx(k, i, j)]
    }

    /// Declares `[e_i, e_j] += p * e_k` (0-indexed), with the antisymmetric
    /// partner set automatically.
    pub fn add_bracket_term(&mut self, i: usize, j: usize, k: usize, p: Poly) {
        assert!(i != j, "bracket of a basis vector with itself");
        let ij = self.idx(k, i, j);
        self.c[ij] = self.c[ij].add(&p);
        let ji = self.idx(k, j, i);
        self.c[ji] = self.c[ji].sub(&p);
    }

    pub fn set_bracket(&mut self, i: usize, j: usize, terms: &[(usize, Poly)]) {
        for (k, p) in terms {
            self.add_bracket_term(i, j, *k, p.clone());
        }
    }

    /// Bracket of two vectors with polynomial coordinates.
    pub fn bracket(&self, x: &[Poly], y: &[Poly]) -> Result<Vec<Poly>, AlgebraError> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.dim,
                got: x.len().max(y.len()),
            });
        }
        let mut out = vec![Poly::zero(); self.dim];
        for i in 0..self.dim {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..self.dim {
                if y[j].is_zero() {
                    continue;
                }
                let xy = x[i].mul(&y[j]);
                for (k, o) in out.iter_mut().enumerate() {
                    let c = self.c(k, i, j);
                    if !c.is_zero() {
                        *o = o.add(&c.mul(&xy));
                    }
                }
            }
        }
        Ok(out)
    }

    /// J^m_{ijk} = sum over cyclic (i,j,k) of c^m_{il} c^l_{jk}; the zero
    /// tensor exactly when the Jacobi identity holds for all parameter values.
    pub fn jacobi_residual(&self) -> Vec<Poly> {
        let n = self.dim;
        let mut out = vec![Poly::zero(); n * n * n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for m in 0..n {
                        let mut acc = Poly::zero();
                        for l in 0..n {
                            // [ [e_i,e_j], e_k ] + cyclic
                            acc = acc.add(&self.c(l, i, j).mul(self.c(m, l, k)));
                            acc = acc.add(&self.c(l, j, k).mul(self.c(m, l, i)));
                            acc = acc.add(&self.c(l, k, i).mul(self.c(m, l, j)));
                        }
                        out[((m * n + i) * n + j) * n + k] = acc;
                    }
                }
            }
        }
        out
    }

    pub fn jacobi_holds(&self) -> bool {
        self.jacobi_residual().iter().all(|p| p.is_zero())
    }

    /// ad(x) as a matrix of polynomials: column j holds [x, e_j].
    fn ad_basis(&self, i: usize) -> Vec<Vec<Poly>> {
        let n = self.dim;
        let mut m = vec![vec![Poly::zero(); n]; n];
        for j in 0..n {
            for (k, row) in m.iter_mut().enumerate() {
                row[j] = self.c(k, i, j).clone();
            }
        }
        m
    }

    /// B_{ij} = trace(ad e_i . ad e_j), symmetric by construction.
    pub fn killing_form(&self) -> Vec<Vec<Poly>> {
        let n = self.dim;
        let ads: Vec<_> = (0..n).map(|i| self.ad_basis(i)).collect();
        let mut b = vec![vec![Poly::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let mut tr = Poly::zero();
                for a in 0..n {
                    for l in 0..n {
                        let x = &ads[i][a][l];
                        if x.is_zero() {
                            continue;
                        }
                        tr = tr.add(&x.mul(&ads[j][l][a]));
                    }
                }
                b[i][j] = tr.clone();
                b[j][i] = tr;
            }
        }
        b
    }

    /// Exact rank of the Killing form over the rationals after instantiating
    /// all parameters.
    pub fn killing_rank(&self, a: &Assignment) -> Result<usize, AlgebraError> {
        let b = self.killing_form();
        let m = Mat::from_fn(self.dim, self.dim, |i, j| {
            b[i][j].eval(a).unwrap_or_else(|_| Rational::zero())
        });
        // re-check for missing parameters explicitly
        for row in &b {
            for p in row {
                p.eval(a)?;
            }
        }
        Ok(m.rank())
    }

    /// Instantiates the structure constants at an assignment.
    pub fn instantiate(&self, a: &Assignment) -> Result<ConstAlgebra<Rational>, AlgebraError> {
        let n = self.dim;
        let mut c = Vec::with_capacity(n * n * n);
        for p in &self.c {
            c.push(p.eval(a)?);
        }
        Ok(ConstAlgebra { dim: n, c })
    }

    pub fn params_used(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for p in &self.c {
            out.extend(p.params());
        }
        out
    }
}

/// Structure constants over a fixed field (for instantiated checks,
/// including Q(sqrt 2) valued morphisms).
#[derive(Clone, Debug)]
pub struct ConstAlgebra<T> {
    pub dim: usize,
    c: Vec<T>,
}

impl<T: Field> ConstAlgebra<T> {
    pub fn c(&self, k: usize, i: usize, j: usize) -> &T {
        &self.c[(k * self.dim + i) * self.dim + j]
    }

    pub fn new(dim: usize) -> Self {
        ConstAlgebra {
            dim,
            c: vec![T::f_zero(); dim * dim * dim],
        }
    }

    pub fn add_bracket_term(&mut self, i: usize, j: usize, k: usize, v: T) {
        let n = self.dim;
        self.c[(k * n + i) * n + j] = self.c[(k * n + i) * n + j].f_add(&v);
        self.c[(k * n + j) * n + i] = self.c[(k * n + j) * n + i].f_sub(&v);
    }

    pub fn bracket(&self, x: &[T], y: &[T]) -> Vec<T> {
        let n = self.dim;
        let mut out = vec![T::f_zero(); n];
        for i in 0..n {
            if x[i].f_is_zero() {
                continue;
            }
            for j in 0..n {
                if y[j].f_is_zero() {
                    continue;
                }
                let xy = x[i].f_mul(&y[j]);
                for (k, o) in out.iter_mut().enumerate() {
                    let c = self.c(k, i, j);
                    if !c.f_is_zero() {
                        *o = o.f_add(&c.f_mul(&xy));
                    }
                }
            }
        }
        out
    }

    pub fn jacobi_holds(&self) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let mut e1 = vec![T::f_zero(); n];
                    e1[i] = T::f_one();
                    let mut e2 = vec![T::f_zero(); n];
                    e2[j] = T::f_one();
                    let mut e3 = vec![T::f_zero(); n];
                    e3[k] = T::f_one();
                    let a = self.bracket(&self.bracket(&e1, &e2), &e3);
                    let b = self.bracket(&self.bracket(&e2, &e3), &e1);
                    let c = self.bracket(&self.bracket(&e3, &e1), &e2);
                    for m in 0..n {
                        if !a[m].f_add(&b[m]).f_add(&c[m]).f_is_zero() {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    pub fn map_scalars<U: Field>(&self, f: impl Fn(&T) -> U) -> ConstAlgebra<U> {
        ConstAlgebra {
            dim: self.dim,
            c: self.c.iter().map(f).collect(),
        }
    }
}

/// Linear map between algebras; the matrix sends source basis vectors to
/// target coordinates (column c holds the image of e_c).
#[derive(Clone, Debug)]
pub struct LinearMap {
    pub matrix: Mat<Poly>,
}

impl Mat<Poly> {
    pub fn eval_assignment(&self, a: &Assignment) -> Result<Mat<Rational>, ScalarError> {
        let mut out = Mat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].eval(a)?;
            }
        }
        Ok(out)
    }
}

impl Field for Poly {
    fn f_zero() -> Self {
        Poly::zero()
    }
    fn f_one() -> Self {
        Poly::one()
    }
    fn f_add(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn f_sub(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn f_mul(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn f_div(&self, o: &Self) -> Self {
        // only exact constant division is supported; polynomial division is
        // out of scope and instantiation happens first
        let c = o
            .as_constant()
            .expect("polynomial division requires instantiation");
        self.scale(&(Rational::from_integer(1.into()) / c))
    }
    fn f_neg(&self) -> Self {
        self.neg()
    }
    fn f_is_zero(&self) -> bool {
        self.is_zero()
    }
}

/// Residual tensor f([e_i,e_j]) - [f(e_i), f(e_j)] over a fixed field.
pub fn morphism_residual<T: Field>(
    src: &ConstAlgebra<T>,
    dst: &ConstAlgebra<T>,
    f: &Mat<T>,
) -> Vec<T> {
    assert_eq!(f.cols, src.dim, "map shape");
    assert_eq!(f.rows, dst.dim, "map shape");
    let n = src.dim;
    let mut residuals = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut ei = vec![T::f_zero(); n];
            ei[i] = T::f_one();
            let mut ej = vec![T::f_zero(); n];
            ej[j] = T::f_one();
            let lhs = f.matvec(&src.bracket(&ei, &ej));
            let fi: Vec<T> = (0..f.rows).map(|r| f[(r, i)].clone()).collect();
            let fj: Vec<T> = (0..f.rows).map(|r| f[(r, j)].clone()).collect();
            let rhs = dst.bracket(&fi, &fj);
            for m in 0..dst.dim {
                residuals.push(lhs[m].f_sub(&rhs[m]));
            }
        }
    }
    residuals
}

/// Symbolic morphism residual for maps and algebras with polynomial entries.
pub fn morphism_residual_poly(src: &LieAlgebra, dst: &LieAlgebra, f: &Mat<Poly>) -> Vec<Poly> {
    assert_eq!(f.cols, src.dim);
    assert_eq!(f.rows, dst.dim);
    let n = src.dim;
    let mut residuals = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut ei = vec![Poly::zero(); n];
            ei[i] = Poly::one();
            let mut ej = vec![Poly::zero(); n];
            ej[j] = Poly::one();
            let br = src.bracket(&ei, &ej).expect("dims");
            let lhs = f.matvec(&br);
            let fi: Vec<Poly> = (0..f.rows).map(|r| f[(r, i)].clone()).collect();
            let fj: Vec<Poly> = (0..f.rows).map(|r| f[(r, j)].clone()).collect();
            let rhs = dst.bracket(&fi, &fj).expect("dims");
            for m in 0..dst.dim {
                residuals.push(lhs[m].sub(&rhs[m]));
            }
        }
    }
    residuals
}

#[derive(Clone, Debug)]
pub struct PairIsoReport {
    pub residual_zero: bool,
    pub invertible: bool,
    pub isotropy_maps: bool,
}

impl PairIsoReport {
    pub fn holds(&self) -> bool {
        self.residual_zero && self.invertible && self.isotropy_maps
    }
}

/// A Lie algebra with a distinguished subalgebra given by spanning vectors.
#[derive(Clone, Debug)]
pub struct ConstPair<T> {
    pub algebra: ConstAlgebra<T>,
    pub h_span: Vec<Vec<T>>,
}

/// Verifies that `f` is an isomorphism of pairs: zero bracket residual,
/// invertible, and maps the isotropy span onto the target isotropy span.
pub fn verify_pair_isomorphism<T: Field>(
    a: &ConstPair<T>,
    b: &ConstPair<T>,
    f: &Mat<T>,
) -> PairIsoReport {
    let residual_zero = morphism_residual(&a.algebra, &b.algebra, f)
        .iter()
        .all(|x| x.f_is_zero());
    let invertible = a.algebra.dim == b.algebra.dim && !f.det().f_is_zero();
    let image: Vec<Vec<T>> = a.h_span.iter().map(|v| f.matvec(v)).collect();
    let fwd = image.iter().all(|v| in_span(&b.h_span, v));
    let dims = {
        let ra = Mat::from_rows(a.h_span.clone()).rank();
        let rb = Mat::from_rows(b.h_span.clone()).rank();
        ra == rb
    };
    PairIsoReport {
        residual_zero,
        invertible,
        isotropy_maps: fwd && dims,
    }
}

/// Bracket-closure test for a span of vectors at fixed scalars.
pub fn is_subalgebra<T: Field>(alg: &ConstAlgebra<T>, span: &[Vec<T>]) -> bool {
    for (i, x) in span.iter().enumerate() {
        for y in span.iter().skip(i + 1) {
            let br = alg.bracket(x, y);
            if !in_span(span, &br) {
                return false;
            }
        }
    }
    true
}

/// Builds structure constants for a matrix Lie algebra from explicit
/// generators: commutators are expressed in the generator basis exactly.
pub fn algebra_from_matrices(gens: &[Mat<Rational>]) -> Result<LieAlgebra, AlgebraError> {
    let q = gens.len();
    let n = if q == 0 { 0 } else { gens[0].rows };
    // flatten generators into the columns of a matrix for span solving
    let flat = Mat::from_fn(n * n, q, |e, g| gens[g][(e / n, e % n)].clone());
    let mut alg = LieAlgebra::new(q);
    for i in 0..q {
        for j in (i + 1)..q {
            let comm = gens[i].matmul(&gens[j]).sub(&gens[j].matmul(&gens[i]));
            let rhs: Vec<Rational> = (0..n * n).map(|e| comm[(e / n, e % n)].clone()).collect();
            let sol = flat
                .solve_affine(&rhs)
                .ok_or_else(|| AlgebraError::NotInSpan(format!("[g{i},g{j}]")))?;
            for (k, coef) in sol.particular.iter().enumerate() {
                if !coef.is_zero() {
                    alg.add_bracket_term(i, j, k, Poly::constant(coef.clone()));
                }
            }
        }
    }
    Ok(alg)
}

/// Basis of the matrix algebra { X : X^T eta + eta X = 0 } for a symmetric
/// non-degenerate eta, via the exact nullspace of the linear condition.
pub fn skew_algebra_basis(eta: &Mat<Rational>) -> Vec<Mat<Rational>> {
    let n = eta.rows;
    // unknowns X_{ab}, equations (X^T eta + eta X)_{ij} = 0
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut row = vec![Rational::zero(); n * n];
            for a in 0..n {
                // (X^T eta)_{ij} = sum_a X_{ai} eta_{aj}
                row[a * n + i] = row[a * n + i].f_add(&eta[(a, j)]);
                // (eta X)_{ij} = sum_a eta_{ia} X_{aj}
                row[a * n + j] = row[a * n + j].f_add(&eta[(i, a)]);
            }
            rows.push(row);
        }
    }
    let m = Mat::from_rows(rows);
    m.nullspace()
        .into_iter()
        .map(|v| Mat::from_fn(n, n, |a, b| v[a * n + b].clone()))
        .collect()
}

/// Checks X^T eta + eta X = 0.
pub fn is_eta_skew(eta: &Mat<Rational>, x: &Mat<Rational>) -> bool {
    x.transpose().matmul(eta).add(&eta.matmul(x)).is_zero()
}

// --- algebra text format -------------------------------------------------
//
// dim N
// labels e1 e2 ...
// params alpha ...
// bracket i j -> k: poly
//
// Indices are 1-based in the file.

pub fn serialize_algebra(alg: &LieAlgebra) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dim {}", alg.dim);
    let _ = writeln!(out, "labels {}", alg.labels.join(" "));
    if !alg.params.is_empty() {
        let _ = writeln!(out, "params {}", alg.params.join(" "));
    }
    for i in 0..alg.dim {
        for j in (i + 1)..alg.dim {
            for k in 0..alg.dim {
                let c = alg.c(k, i, j);
                if !c.is_zero() {
                    let _ = writeln!(out, "bracket {} {} -> {}: {}", i + 1, j + 1, k + 1, c);
                }
            }
        }
    }
    out
}

pub fn parse_algebra(text: &str) -> Result<LieAlgebra, AlgebraError> {
    let mut alg: Option<LieAlgebra> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| AlgebraError::Parse { line: ln + 1, msg };
        if let Some(rest) = line.strip_prefix("dim ") {
            let d: usize = rest
                .trim()
                .parse()
                .map_err(|_| err(format!("bad dim `{rest}`")))?;
            alg = Some(LieAlgebra::new(d));
        } else if let Some(rest) = line.strip_prefix("labels ") {
            let a = alg.as_mut().ok_or_else(|| err("labels before dim".into()))?;
            a.labels = rest.split_whitespace().map(str::to_string).collect();
            if a.labels.len() != a.dim {
                return Err(err("label count does not match dim".into()));
            }
        } else if let Some(rest) = line.strip_prefix("params ") {
            let a = alg.as_mut().ok_or_else(|| err("params before dim".into()))?;
            a.params = rest.split_whitespace().map(str::to_string).collect();
        } else if let Some(rest) = line.strip_prefix("bracket ") {
            let a = alg.as_mut().ok_or_else(|| err("bracket before dim".into()))?;
            let (head, poly) = rest
                .split_once(':')
                .ok_or_else(|| err(format!("missing `:` in bracket `{rest}`")))?;
            let (ij, k) = head
                .split_once("->")
                .ok_or_else(|| err(format!("missing `->` in bracket `{rest}`")))?;
            let idx: Vec<usize> = ij
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| err(format!("bad indices `{ij}`")))?;
            if idx.len() != 2 {
                return Err(err(format!("expected two indices, got `{ij}`")));
            }
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| err(format!("bad target index `{k}`")))?;
            if idx[0] == 0 || idx[1] == 0 || k == 0 || idx[0] > a.dim || idx[1] > a.dim || k > a.dim
            {
                return Err(err("bracket index out of range".into()));
            }
            let p = parse_poly(poly).map_err(|e| err(e.to_string()))?;
            a.add_bracket_term(idx[0] - 1, idx[1] - 1, k - 1, p);
        } else {
            return Err(err(format!("unrecognized line `{line}`")));
        }
    }
    alg.ok_or(AlgebraError::Parse {
        line: 0,
        msg: "no dim line".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{assignment, int, parse_poly, rat};

    /// The five-dimensional table with an sl(2) block and a two-dimensional
    /// solvable block.
    fn table_a1() -> LieAlgebra {
        let mut a = LieAlgebra::new(5);
        a.add_bracket_term(0, 1, 1, Poly::from_i64(2));
        a.add_bracket_term(0, 2, 2, Poly::from_i64(-2));
        a.add_bracket_term(1, 2, 0, Poly::from_i64(1));
        a.add_bracket_term(3, 4, 3, Poly::from_i64(1));
        a
    }

    fn table_a2() -> LieAlgebra {
        let mut a = LieAlgebra::new(5);
        a.params = vec!["alpha".into()];
        a.add_bracket_term(0, 4, 0, parse_poly("alpha + 1").unwrap());
        a.add_bracket_term(1, 3, 0, Poly::one());
        a.add_bracket_term(1, 4, 1, Poly::param("alpha"));
        a.add_bracket_term(2, 3, 1, Poly::one());
        a.add_bracket_term(2, 4, 2, parse_poly("alpha - 1").unwrap());
        a.add_bracket_term(3, 4, 3, Poly::one());
        a
    }

    fn table_a4() -> LieAlgebra {
        let mut a = LieAlgebra::new(6);
        a.add_bracket_term(0, 1, 1, Poly::from_i64(2));
        a.add_bracket_term(0, 2, 2, Poly::from_i64(-2));
        a.add_bracket_term(1, 2, 0, Poly::one());
        a.add_bracket_term(0, 3, 3, Poly::one());
        a.add_bracket_term(0, 4, 4, Poly::from_i64(-1));
        a.add_bracket_term(1, 4, 3, Poly::one());
        a.add_bracket_term(2, 3, 4, Poly::one());
        a.add_bracket_term(3, 4, 5, Poly::one());
        a
    }

    #[test]
    fn bracket_examples() {
        let a2 = table_a2();
        // [e2, e4] -> e1
        let mut x = vec![Poly::zero(); 5];
        x[1] = Poly::one();
        let mut y = vec![Poly::zero(); 5];
        y[3] = Poly::one();
        let br = a2.bracket(&x, &y).unwrap();
        assert_eq!(br[0], Poly::one());
        assert!(br[1..].iter().all(|p| p.is_zero()));
        // [x, x] = 0
        let br = a2.bracket(&x, &x).unwrap();
        assert!(br.iter().all(|p| p.is_zero()));
        // [e4, e5] = e6 in the six-dimensional table
        let a4 = table_a4();
        let mut x = vec![Poly::zero(); 6];
        x[3] = Poly::one();
        let mut y = vec![Poly::zero(); 6];
        y[4] = Poly::one();
        let br = a4.bracket(&x, &y).unwrap();
        assert_eq!(br[5], Poly::one());
    }

    #[test]
    fn jacobi_examples() {
        assert!(table_a2().jacobi_holds()); // symbolic in alpha
        assert!(LieAlgebra::new(4).jacobi_holds()); // abelian
        let mut bad = table_a1();
        bad.add_bracket_term(0, 3, 3, Poly::one());
        assert!(!bad.jacobi_holds());
    }

    #[test]
    fn killing_form_sl2_block() {
        let b = table_a1().killing_form();
        assert_eq!(b[0][0], Poly::from_i64(8));
        assert_eq!(b[1][2], Poly::from_i64(4));
        assert_eq!(b[1][1], Poly::zero());
        // abelian algebra: zero matrix
        let z = LieAlgebra::new(3).killing_form();
        assert!(z.iter().flatten().all(|p| p.is_zero()));
    }

    #[test]
    fn killing_ranks() {
        let none = assignment(&[]);
        assert_eq!(table_a1().killing_rank(&none).unwrap(), 4);
        let a = assignment(&[("alpha", rat(2, 3))]);
        assert_eq!(table_a2().killing_rank(&a).unwrap(), 1);
        // missing parameter is an error
        assert!(table_a2().killing_rank(&none).is_err());
    }

    #[test]
    fn subalgebra_checks() {
        let a2 = table_a2().instantiate(&assignment(&[("alpha", int(2))])).unwrap();
        let e = |i: usize| {
            let mut v = vec![Rational::zero(); 5];
            v[i] = int(1);
            v
        };
        // span{e4, e5}: [e4,e5] = e4, closed
        assert!(is_subalgebra(&a2, &[e(3), e(4)]));
        // span{e2, e4}: [e2,e4] = e1 escapes
        assert!(!is_subalgebra(&a2, &[e(1), e(3)]));
        // single vector is always a subalgebra
        assert!(is_subalgebra(&a2, &[e(1)]));
        // the A4 isotropy reading span{e3+e6, e5}
        let a4 = table_a4().instantiate(&assignment(&[])).unwrap();
        let mut v1 = vec![Rational::zero(); 6];
        v1[2] = int(1);
        v1[5] = int(1);
        let mut v2 = vec![Rational::zero(); 6];
        v2[4] = int(1);
        assert!(is_subalgebra(&a4, &[v1, v2]));
    }

    #[test]
    fn identity_is_pair_isomorphism() {
        let inst = table_a2().instantiate(&assignment(&[("alpha", rat(1, 3))])).unwrap();
        let mut h = vec![Rational::zero(); 5];
        h[3] = int(1);
        let pair = ConstPair {
            algebra: inst.clone(),
            h_span: vec![h],
        };
        let id = Mat::identity(5);
        let rep = verify_pair_isomorphism(&pair, &pair, &id);
        assert!(rep.holds());
    }

    #[test]
    fn ad_invariance_of_killing_form() {
        // B([x,y],z) + B(y,[x,z]) = 0 on basis triples, symbolically
        for alg in [table_a1(), table_a2(), table_a4()] {
            let b = alg.killing_form();
            let n = alg.dim;
            let basis = |i: usize| {
                let mut v = vec![Poly::zero(); n];
                v[i] = Poly::one();
                v
            };
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        let xy = alg.bracket(&basis(x), &basis(y)).unwrap();
                        let xz = alg.bracket(&basis(x), &basis(z)).unwrap();
                        let mut acc = Poly::zero();
                        for k in 0..n {
                            acc = acc.add(&xy[k].mul(&b[k][z]));
                            acc = acc.add(&xz[k].mul(&b[y][k]));
                        }
                        assert!(acc.is_zero(), "ad-invariance fails at ({x},{y},{z})");
                    }
                }
            }
        }
    }

    #[test]
    fn algebra_file_roundtrip() {
        let a2 = table_a2();
        let text = serialize_algebra(&a2);
        let back = parse_algebra(&text).unwrap();
        assert_eq!(back, a2);
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "dim 3\nbracket 1 2 -> 9: 1\n";
        match parse_algebra(text) {
            Err(AlgebraError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
