//! The Cartan extension engine: orthogonal splits of o(p,q), the linear
//! isotropy condition on the complement coefficients, structure equations
//! for the canonical and connection forms, Bianchi solving, curvature, and
//! the reductivity decision.
//!
//! Conventions. Basis one-forms are indexed 0..n-1 for theta^i and
//! n..n+q-1 for omega^alpha. A two-form is stored as coefficients on
//! ordered pairs (a < b); the antisymmetric component array of the same
//! form is obtained by extending with a sign. Curvature is the matrix
//! two-form d omega + omega ^ omega; the lowered components use eta on the
//! first index.

use crate::liealg::{algebra_from_matrices, is_eta_skew, ConstAlgebra, ConstPair};
use crate::linalg::{AffineFamily, Field, Mat};
use crate::scalar::{Assignment, Poly, Rational, ScalarError};
use num_traits::Zero;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CartanError {
    #[error("basis matrix `{0}` is not eta-skew")]
    NotSkew(String),
    #[error("isotropy is not closed under the commutator")]
    NotSubalgebra,
    #[error("declared generators do not form a basis of the eta-skew algebra")]
    NotBasis,
    #[error("Bianchi system is inconsistent at this instantiation")]
    Inconsistent,
    #[error("Bianchi residuals do not vanish: assembled bracket violates Jacobi")]
    BianchiViolated,
    #[error("assignment violates the declared parameter domain: {0} = 0")]
    DegenerateParameters(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// A subalgebra of o(p,q) with a chosen complement and the structure
/// constants of the split basis.
#[derive(Clone, Debug)]
pub struct OrthoSplit {
    pub n: usize,
    pub q: usize,
    pub m: usize,
    pub eta: Mat<Rational>,
    pub iso: Vec<Mat<Rational>>,
    pub comp: Vec<Mat<Rational>>,
    /// [b_al, b_be] = K^ga_{al be} b_ga
    kk: Vec<Rational>, // [ga][al][be]
    /// [b_al, b~_r] = Kt^be_{al r} b_be + Kh^s_{al r} b~_s
    kt: Vec<Rational>, // [be][al][r]
    kh: Vec<Rational>, // [s][al][r]
    /// [b~_r, b~_s] = Lt^al_{r s} b_al + L^t_{r s} b~_t
    lt: Vec<Rational>, // [al][r][s]
    ll: Vec<Rational>, // [t][r][s]
}

impl OrthoSplit {
    pub fn kk(&self, ga: usize, al: usize, be: usize) -> &Rational {
        &self.kk[(ga * self.q + al) * self.q + be]
    }
    pub fn kt(&self, be: usize, al: usize, r: usize) -> &Rational {
        &self.kt[(be * self.q + al) * self.m + r]
    }
    pub fn kh(&self, s: usize, al: usize, r: usize) -> &Rational {
        &self.kh[(s * self.q + al) * self.m + r]
    }
    pub fn lt(&self, al: usize, r: usize, s: usize) -> &Rational {
        &self.lt[(al * self.m + r) * self.m + s]
    }
    pub fn ll(&self, t: usize, r: usize, s: usize) -> &Rational {
        &self.ll[(t * self.m + r) * self.m + s]
    }
}

/// Checks the split data and computes all five families of structure
/// constants exactly.
pub fn build_ortho(
    eta: &Mat<Rational>,
    iso: Vec<Mat<Rational>>,
    comp: Vec<Mat<Rational>>,
) -> Result<OrthoSplit, CartanError> {
    let n = eta.rows;
    for (idx, b) in iso.iter().enumerate() {
        if !is_eta_skew(eta, b) {
            return Err(CartanError::NotSkew(format!("iso[{idx}]")));
        }
    }
    for (idx, b) in comp.iter().enumerate() {
        if !is_eta_skew(eta, b) {
            return Err(CartanError::NotSkew(format!("comp[{idx}]")));
        }
    }
    let q = iso.len();
    let m = comp.len();
    if q + m != n * (n - 1) / 2 {
        return Err(CartanError::NotBasis);
    }
    // independence of the joint family
    let all: Vec<Mat<Rational>> = iso.iter().chain(comp.iter()).cloned().collect();
    let flat = Mat::from_fn(n * n, q + m, |e, g| all[g][(e / n, e % n)].clone());
    if flat.rank() != q + m {
        return Err(CartanError::NotBasis);
    }
    // expansion helper: write a matrix in the split basis (iso first)
    let expand = |x: &Mat<Rational>| -> Option<Vec<Rational>> {
        let rhs: Vec<Rational> = (0..n * n).map(|e| x[(e / n, e % n)].clone()).collect();
        flat.solve_affine(&rhs).map(|f| f.particular)
    };
    let comm = |a: &Mat<Rational>, b: &Mat<Rational>| a.matmul(b).sub(&b.matmul(a));

    let mut kk = vec![Rational::zero(); q * q * q];
    let mut kt = vec![Rational::zero(); q * q * m];
    let mut kh = vec![Rational::zero(); m * q * m];
    let mut lt = vec![Rational::zero(); q * m * m];
    let mut ll = vec![Rational::zero(); m * m * m];
    for al in 0..q {
        for be in 0..q {
            let co = expand(&comm(&iso[al], &iso[be])).ok_or(CartanError::NotBasis)?;
            for (s, v) in co.iter().enumerate().skip(q) {
                if !v.is_zero() {
                    // the isotropy must be a subalgebra
                    let _ = s;
                    return Err(CartanError::NotSubalgebra);
                }
            }
            for ga in 0..q {
                kk[(ga * q + al) * q + be] = co[ga].clone();
            }
        }
    }
    for al in 0..q {
        for r in 0..m {
            let co = expand(&comm(&iso[al], &comp[r])).ok_or(CartanError::NotBasis)?;
            for be in 0..q {
                kt[(be * q + al) * m + r] = co[be].clone();
            }
            for s in 0..m {
                kh[(s * q + al) * m + r] = co[q + s].clone();
            }
        }
    }
    for r in 0..m {
        for s in 0..m {
            let co = expand(&comm(&comp[r], &comp[s])).ok_or(CartanError::NotBasis)?;
            for al in 0..q {
                lt[(al * m + r) * m + s] = co[al].clone();
            }
            for t in 0..m {
                ll[(t * m + r) * m + s] = co[q + t].clone();
            }
        }
    }
    Ok(OrthoSplit {
        n,
        q,
        m,
        eta: eta.clone(),
        iso,
        comp,
        kk,
        kt,
        kh,
        lt,
        ll,
    })
}

/// Antisymmetric tensor with polynomial entries, stored on ordered index
/// pairs per isotropy slot.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CTensor {
    entries: BTreeMap<(usize, usize, usize), Poly>, // (al, j, k) with j < k
}

impl CTensor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, al: usize, j: usize, k: usize, p: Poly) {
        assert!(j != k);
        if j < k {
            self.entries.insert((al, j, k), p);
        } else {
            self.entries.insert((al, k, j), p.neg());
        }
    }

    pub fn get(&self, al: usize, j: usize, k: usize) -> Poly {
        if j == k {
            return Poly::zero();
        }
        if j < k {
            self.entries.get(&(al, j, k)).cloned().unwrap_or_default()
        } else {
            self.entries
                .get(&(al, k, j))
                .map(|p| p.neg())
                .unwrap_or_default()
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize, usize), &Poly)> {
        self.entries.iter()
    }
}

/// An extension problem: a split together with the complement coefficients
/// P^r_i and the undetermined two-form coefficients C^al_{jk}.
#[derive(Clone, Debug)]
pub struct ExtensionProblem {
    pub split: OrthoSplit,
    pub p_mat: Mat<Poly>, // m x n
    pub c_ten: CTensor,
    /// polynomials that must stay nonzero at instantiations
    pub domain: Vec<Poly>,
}

impl ExtensionProblem {
    pub fn new(split: OrthoSplit, p_mat: Mat<Poly>, c_ten: CTensor) -> Self {
        assert_eq!(p_mat.rows, split.m);
        assert_eq!(p_mat.cols, split.n);
        ExtensionProblem {
            split,
            p_mat,
            c_ten,
            domain: Vec::new(),
        }
    }

    pub fn check_domain(&self, a: &Assignment) -> Result<(), CartanError> {
        for d in &self.domain {
            if d.eval(a)?.is_zero() {
                return Err(CartanError::DegenerateParameters(d.to_string()));
            }
        }
        Ok(())
    }

    /// Substitutes an assignment into P and C, producing a fully rational
    /// problem.
    pub fn instantiate(&self, a: &Assignment) -> Result<ExtensionProblem, CartanError> {
        self.check_domain(a)?;
        let p_mat = Mat::from_fn(self.p_mat.rows, self.p_mat.cols, |i, j| {
            Poly::constant(self.p_mat[(i, j)].eval(a).unwrap_or_else(|_| Rational::zero()))
        });
        for i in 0..self.p_mat.rows {
            for j in 0..self.p_mat.cols {
                self.p_mat[(i, j)].eval(a)?;
            }
        }
        let mut c_ten = CTensor::new();
        for (&(al, j, k), p) in self.c_ten.iter() {
            c_ten.set(al, j, k, Poly::constant(p.eval(a)?));
        }
        Ok(ExtensionProblem {
            split: self.split.clone(),
            p_mat,
            c_ten,
            domain: Vec::new(),
        })
    }
}

/// Sparse two-form over the combined basis (theta then omega).
pub type TwoForm = BTreeMap<(usize, usize), Poly>;
/// Sparse three-form over the combined basis.
pub type ThreeForm = BTreeMap<(usize, usize, usize), Poly>;

fn two_add(d: &mut TwoForm, a: usize, b: usize, c: Poly) {
    if a == b || c.is_zero() {
        return;
    }
    let (key, c) = if a < b { ((a, b), c) } else { ((b, a), c.neg()) };
    let e = d.entry(key).or_default();
    *e = e.add(&c);
    if e.is_zero() {
        d.remove(&key);
    }
}

fn three_add(d: &mut ThreeForm, mut idx: [usize; 3], c: Poly) {
    if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] || c.is_zero() {
        return;
    }
    let mut sign = false;
    for i in 0..2 {
        for j in 0..2 - i {
            if idx[j] > idx[j + 1] {
                idx.swap(j, j + 1);
                sign = !sign;
            }
        }
    }
    let c = if sign { c.neg() } else { c };
    let key = (idx[0], idx[1], idx[2]);
    let e = d.entry(key).or_default();
    *e = e.add(&c);
    if e.is_zero() {
        d.remove(&key);
    }
}

pub fn two_get(d: &TwoForm, a: usize, b: usize) -> Poly {
    if a == b {
        return Poly::zero();
    }
    if a < b {
        d.get(&(a, b)).cloned().unwrap_or_default()
    } else {
        d.get(&(b, a)).map(|p| p.neg()).unwrap_or_default()
    }
}

impl ExtensionProblem {
    /// d theta^i expanded via the matrix form of the connection:
    /// -b^i_{al j} omega^al ^ theta^j - b~^i_{r j} P^r_k theta^k ^ theta^j.
    /// This equals the bracketed antisymmetrization with weight 1/2.
    pub fn dtheta(&self, i: usize) -> TwoForm {
        let s = &self.split;
        let mut d = TwoForm::new();
        for al in 0..s.q {
            for j in 0..s.n {
                let b = &s.iso[al][(i, j)];
                if !b.is_zero() {
                    two_add(&mut d, s.n + al, j, Poly::constant(b.clone()).neg());
                }
            }
        }
        for r in 0..s.m {
            for j in 0..s.n {
                let b = &s.comp[r][(i, j)];
                if b.is_zero() {
                    continue;
                }
                for k in 0..s.n {
                    let p = &self.p_mat[(r, k)];
                    if !p.is_zero() {
                        two_add(&mut d, k, j, p.scale(b).neg());
                    }
                }
            }
        }
        d
    }

    /// d omega^al = -1/2 K^al_{be ga} w^be ^ w^ga
    ///              - Kt^al_{be r} P^r_i w^be ^ theta^i
    ///              - 1/2 C^al_{jk} theta^j ^ theta^k.
    pub fn domega(&self, al: usize) -> TwoForm {
        let s = &self.split;
        let mut d = TwoForm::new();
        let half = crate::scalar::rat(1, 2);
        for be in 0..s.q {
            for ga in 0..s.q {
                let k = s.kk(al, be, ga);
                if !k.is_zero() {
                    two_add(
                        &mut d,
                        s.n + be,
                        s.n + ga,
                        Poly::constant(-(k * &half)),
                    );
                }
            }
        }
        for be in 0..s.q {
            for r in 0..s.m {
                let kt = s.kt(al, be, r);
                if kt.is_zero() {
                    continue;
                }
                for i in 0..s.n {
                    let p = &self.p_mat[(r, i)];
                    if !p.is_zero() {
                        two_add(&mut d, s.n + be, i, p.scale(kt).neg());
                    }
                }
            }
        }
        for j in 0..s.n {
            for k in (j + 1)..s.n {
                let c = self.c_ten.get(al, j, k);
                if !c.is_zero() {
                    // -1/2 C (theta^j theta^k - theta^k theta^j) = -C theta^j^theta^k on j<k
                    two_add(&mut d, j, k, c.neg());
                }
            }
        }
        d
    }

    fn dbasis(&self, a: usize) -> TwoForm {
        if a < self.split.n {
            self.dtheta(a)
        } else {
            self.domega(a - self.split.n)
        }
    }

    /// Exterior derivative of a two-form with constant coefficients using
    /// the structure equations for the basis one-forms.
    pub fn d2(&self, two: &TwoForm) -> ThreeForm {
        let mut out = ThreeForm::new();
        for (&(a, b), c) in two {
            for (&(x, y), cc) in &self.dbasis(a) {
                three_add(&mut out, [x, y, b], c.mul(cc));
            }
            for (&(x, y), cc) in &self.dbasis(b) {
                three_add(&mut out, [a, x, y], c.mul(cc).neg());
            }
        }
        out
    }

    /// All coefficients of d^2 theta^i and d^2 omega^al; identically zero
    /// exactly when the Bianchi identities hold symbolically.
    pub fn bianchi_residual(&self) -> Vec<Poly> {
        let mut out = Vec::new();
        for i in 0..self.split.n {
            out.extend(self.d2(&self.dtheta(i)).into_values());
        }
        for al in 0..self.split.q {
            out.extend(self.d2(&self.domega(al)).into_values());
        }
        out
    }
}

/// Solution space of the isotropy condition on P, with free coordinates
/// named p1, p2, ... in leading-position order.
#[derive(Clone, Debug)]
pub struct A3Solution {
    pub n: usize,
    pub m: usize,
    /// basis vectors over flat index r*n + i
    pub basis: Vec<Vec<Rational>>,
}

impl A3Solution {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// P as a polynomial matrix in the named free parameters.
    pub fn as_poly_matrix(&self) -> Mat<Poly> {
        let mut p: Mat<Poly> = Mat::zeros(self.m, self.n);
        for (k, v) in self.basis.iter().enumerate() {
            let name = format!("p{}", k + 1);
            for r in 0..self.m {
                for i in 0..self.n {
                    let c = &v[r * self.n + i];
                    if !c.is_zero() {
                        p[(r, i)] = p[(r, i)].add(&Poly::param(&name).scale(c));
                    }
                }
            }
        }
        p
    }

    /// Rendering used to compare with printed solution tables.
    pub fn display(&self) -> String {
        let p = self.as_poly_matrix();
        let mut out = String::new();
        for r in 0..self.m {
            let mut terms = Vec::new();
            for i in 0..self.n {
                if !p[(r, i)].is_zero() {
                    terms.push(format!("({})*th{}", p[(r, i)], i + 1));
                }
            }
            out.push_str(&format!(
                "w~{} = {}\n",
                r + 1,
                if terms.is_empty() {
                    "0".to_string()
                } else {
                    terms.join(" + ")
                }
            ));
        }
        out
    }

    /// True iff every generator of the given polynomial P-matrix lies in
    /// this solution space.
    pub fn contains_family(&self, p: &Mat<Poly>) -> bool {
        assert_eq!((p.rows, p.cols), (self.m, self.n));
        let mut params = std::collections::BTreeSet::new();
        for r in 0..p.rows {
            for i in 0..p.cols {
                params.extend(p[(r, i)].params());
            }
        }
        // evaluate the gradient of each entry at unit vectors in param space
        for name in &params {
            let mut gen = vec![Rational::zero(); self.m * self.n];
            for r in 0..self.m {
                for i in 0..self.n {
                    // coefficient of `name` (P is linear in its parameters)
                    let one = p[(r, i)].subst(
                        name,
                        &Poly::one(),
                    );
                    let zero = p[(r, i)].subst(name, &Poly::zero());
                    let diff = one.sub(&zero);
                    let mut a = Assignment::new();
                    for other in &params {
                        a.insert(other.clone(), Rational::zero());
                    }
                    gen[r * self.n + i] = diff.eval(&a).unwrap_or_else(|_| Rational::zero());
                }
            }
            if !crate::linalg::in_span(&self.basis, &gen) {
                return false;
            }
        }
        true
    }
}

/// Solves P^r_i b^i_{al j} - Kh^r_{al s} P^s_j = 0 exactly.
pub fn solve_a3(split: &OrthoSplit) -> A3Solution {
    let (n, q, m) = (split.n, split.q, split.m);
    let mut rows = Vec::new();
    for al in 0..q {
        for r in 0..m {
            for j in 0..n {
                let mut row = vec![Rational::zero(); m * n];
                for i in 0..n {
                    row[r * n + i] = row[r * n + i].f_add(&split.iso[al][(i, j)]);
                }
                for s in 0..m {
                    row[s * n + j] = row[s * n + j].f_sub(split.kh(r, al, s));
                }
                rows.push(row);
            }
        }
    }
    if rows.is_empty() {
        // trivial isotropy imposes no condition
        rows.push(vec![Rational::zero(); m * n]);
    }
    let a = Mat::from_rows(rows);
    A3Solution {
        n,
        m,
        basis: a.nullspace(),
    }
}

/// Residual of the isotropy condition for a given polynomial P.
pub fn a3_residual(split: &OrthoSplit, p: &Mat<Poly>) -> Vec<Poly> {
    let (n, q, m) = (split.n, split.q, split.m);
    let mut out = Vec::new();
    for al in 0..q {
        for r in 0..m {
            for j in 0..n {
                let mut acc = Poly::zero();
                for i in 0..n {
                    acc = acc.add(&p[(r, i)].scale(&split.iso[al][(i, j)]));
                }
                for s in 0..m {
                    acc = acc.sub(&p[(s, j)].scale(split.kh(r, al, s)));
                }
                out.push(acc);
            }
        }
    }
    out
}

/// Affine family of C tensors solving both Bianchi identities at an
/// instantiated P.
#[derive(Clone, Debug)]
pub struct CFamily {
    pub slots: Vec<(usize, usize, usize)>, // (al, j, k) with j < k
    pub family: AffineFamily<Rational>,
}

impl CFamily {
    pub fn tensor_at(&self, frees: &[Rational]) -> CTensor {
        let vals = self.family.at(frees);
        let mut c = CTensor::new();
        for (&(al, j, k), v) in self.slots.iter().zip(&vals) {
            c.set(al, j, k, Poly::constant(v.clone()));
        }
        c
    }

    pub fn contains_tensor(&self, c: &CTensor) -> bool {
        let x: Vec<Rational> = self
            .slots
            .iter()
            .map(|&(al, j, k)| {
                c.get(al, j, k)
                    .as_constant()
                    .expect("tensor must be rational")
            })
            .collect();
        self.family.contains(&x)
    }
}

/// Imposes d^2 theta = 0 and d^2 omega = 0 with P instantiated and C
/// treated as linear unknowns; pure-P inconsistencies are reported as an
/// error carrying the violated constants.
pub fn bianchi_solve(
    problem: &ExtensionProblem,
    a: &Assignment,
) -> Result<CFamily, CartanError> {
    let inst = problem.instantiate(a)?;
    let split = inst.split.clone();
    // symbolic C parameters
    let mut slots = Vec::new();
    let mut c_sym = CTensor::new();
    for al in 0..split.q {
        for j in 0..split.n {
            for k in (j + 1)..split.n {
                slots.push((al, j, k));
                c_sym.set(al, j, k, Poly::param(&format!("_c{al}_{j}_{k}")));
            }
        }
    }
    let sym = ExtensionProblem::new(split, inst.p_mat.clone(), c_sym);
    let residuals = sym.bianchi_residual();
    // each residual is affine-linear in the C parameters
    let zero_asn: Assignment = slots
        .iter()
        .map(|(al, j, k)| (format!("_c{al}_{j}_{k}"), Rational::zero()))
        .collect();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for res in &residuals {
        if res.is_zero() {
            continue;
        }
        let konst = res.eval(&zero_asn)?;
        let mut row = Vec::with_capacity(slots.len());
        for (al, j, k) in &slots {
            let name = format!("_c{al}_{j}_{k}");
            let mut asn = zero_asn.clone();
            asn.insert(name, Rational::from_integer(1.into()));
            row.push(res.eval(&asn)? - &konst);
        }
        rows.push(row);
        rhs.push(-konst);
    }
    if rows.is_empty() {
        return Ok(CFamily {
            family: AffineFamily {
                particular: vec![Rational::zero(); slots.len()],
                directions: Mat::<Rational>::zeros(1, slots.len()).nullspace(),
            },
            slots,
        });
    }
    let mat = Mat::from_rows(rows);
    let family = mat.solve_affine(&rhs).ok_or(CartanError::Inconsistent)?;
    Ok(CFamily { slots, family })
}

/// Curvature coefficients in the theta ^ theta basis, split into the
/// isotropy and complement components.
#[derive(Clone, Debug)]
pub struct CurvatureForm {
    pub n: usize,
    pub q: usize,
    pub m: usize,
    /// Omega^al as coefficients on ordered pairs (i < j)
    pub omega_iso: Vec<TwoForm>,
    /// Omega~^r likewise
    pub omega_comp: Vec<TwoForm>,
}

/// Curvature from the closed-form expression in P, C and the split
/// constants.
pub fn curvature(problem: &ExtensionProblem) -> CurvatureForm {
    let s = &problem.split;
    let (n, q, m) = (s.n, s.q, s.m);
    let p = &problem.p_mat;
    let half = crate::scalar::rat(1, 2);
    let mut omega_comp = Vec::with_capacity(m);
    for r in 0..m {
        let mut form = TwoForm::new();
        for j in 0..n {
            for k in 0..n {
                // A_{jk} = P^r_i b~^i_{s j} P^s_k + 1/2 L^r_{st} P^s_j P^t_k
                let mut a = Poly::zero();
                for i in 0..n {
                    if p[(r, i)].is_zero() {
                        continue;
                    }
                    for sx in 0..m {
                        let b = &s.comp[sx][(i, j)];
                        if !b.is_zero() {
                            a = a.add(&p[(r, i)].mul(&p[(sx, k)]).scale(b));
                        }
                    }
                }
                for sx in 0..m {
                    for t in 0..m {
                        let l = s.ll(r, sx, t);
                        if !l.is_zero() {
                            a = a.add(&p[(sx, j)].mul(&p[(t, k)]).scale(&(l * &half)));
                        }
                    }
                }
                two_add(&mut form, j, k, a);
            }
        }
        omega_comp.push(form);
    }
    let mut omega_iso = Vec::with_capacity(q);
    for al in 0..q {
        let mut form = TwoForm::new();
        for i in 0..n {
            for j in (i + 1)..n {
                // Lt^al_{rs} P^r_i P^s_j - C^al_{ij}, already antisymmetric
                let mut a = Poly::zero();
                for r in 0..m {
                    for sx in 0..m {
                        let l = s.lt(al, r, sx);
                        if !l.is_zero() {
                            a = a.add(&p[(r, i)].mul(&p[(sx, j)]).scale(l));
                        }
                    }
                }
                a = a.sub(&problem.c_ten.get(al, i, j));
                two_add(&mut form, i, j, a);
            }
        }
        omega_iso.push(form);
    }
    CurvatureForm {
        n,
        q,
        m,
        omega_iso,
        omega_comp,
    }
}

impl CurvatureForm {
    /// Matrix entry (Omega)^i_j as a two-form in theta ^ theta.
    pub fn matrix_entry(&self, split: &OrthoSplit, i: usize, j: usize) -> TwoForm {
        let mut out = TwoForm::new();
        for al in 0..self.q {
            let b = &split.iso[al][(i, j)];
            if b.is_zero() {
                continue;
            }
            for (&(a, c), v) in &self.omega_iso[al] {
                two_add(&mut out, a, c, v.scale(b));
            }
        }
        for r in 0..self.m {
            let b = &split.comp[r][(i, j)];
            if b.is_zero() {
                continue;
            }
            for (&(a, c), v) in &self.omega_comp[r] {
                two_add(&mut out, a, c, v.scale(b));
            }
        }
        out
    }

    /// Lowered components Omega_{ij} = eta_{ik} (Omega)^k_j.
    pub fn lowered(&self, split: &OrthoSplit) -> Vec<Vec<TwoForm>> {
        let n = self.n;
        let mut out = vec![vec![TwoForm::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut form = TwoForm::new();
                for k in 0..n {
                    let e = &split.eta[(i, k)];
                    if e.is_zero() {
                        continue;
                    }
                    for (&(a, c), v) in &self.matrix_entry(split, k, j) {
                        two_add(&mut form, a, c, v.scale(e));
                    }
                }
                out[i][j] = form;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.omega_iso.iter().all(BTreeMap::is_empty)
            && self.omega_comp.iter().all(BTreeMap::is_empty)
    }
}

/// Curvature computed independently as d omega + omega ^ omega on the
/// matrix form of the connection; used to cross-check the closed-form
/// expression and the horizontality of the result.
pub fn curvature_via_structure(problem: &ExtensionProblem) -> Vec<Vec<TwoForm>> {
    let s = &problem.split;
    let n = s.n;
    // connection entries as one-forms over the combined basis
    let one_form = |i: usize, j: usize| -> Vec<Poly> {
        let mut v = vec![Poly::zero(); n + s.q];
        for al in 0..s.q {
            let b = &s.iso[al][(i, j)];
            if !b.is_zero() {
                v[n + al] = v[n + al].add(&Poly::constant(b.clone()));
            }
        }
        for r in 0..s.m {
            let b = &s.comp[r][(i, j)];
            if b.is_zero() {
                continue;
            }
            for k in 0..n {
                let p = &problem.p_mat[(r, k)];
                if !p.is_zero() {
                    v[k] = v[k].add(&p.scale(b));
                }
            }
        }
        v
    };
    let mut out = vec![vec![TwoForm::new(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut form = TwoForm::new();
            // d of the entry
            let w = one_form(i, j);
            for (a, coeff) in w.iter().enumerate() {
                if coeff.is_zero() {
                    continue;
                }
                for (&(x, y), cc) in &problem.dbasis(a) {
                    two_add(&mut form, x, y, coeff.mul(cc));
                }
            }
            // (omega ^ omega)^i_j
            for k in 0..n {
                let wik = one_form(i, k);
                let wkj = one_form(k, j);
                for (a, ca) in wik.iter().enumerate() {
                    if ca.is_zero() {
                        continue;
                    }
                    for (b, cb) in wkj.iter().enumerate() {
                        if !cb.is_zero() {
                            two_add(&mut form, a, b, ca.mul(cb));
                        }
                    }
                }
            }
            out[i][j] = form;
        }
    }
    out
}

/// Solves the reductivity condition r^ga_i K^al_{be ga} - r^al_j b^j_{be i}
/// = Kt^al_{be r} P^r_i at an instantiated P. `Some` means reductive and
/// carries the full family of invariant connection coefficients.
pub fn reductivity_check(
    problem: &ExtensionProblem,
    a: &Assignment,
) -> Result<Option<AffineFamily<Rational>>, CartanError> {
    let inst = problem.instantiate(a)?;
    let s = &inst.split;
    let (n, q, m) = (s.n, s.q, s.m);
    if q == 0 {
        return Ok(Some(AffineFamily {
            particular: Vec::new(),
            directions: Vec::new(),
        }));
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for al in 0..q {
        for be in 0..q {
            for i in 0..n {
                let mut row = vec![Rational::zero(); q * n];
                for ga in 0..q {
                    row[ga * n + i] = row[ga * n + i].f_add(s.kk(al, be, ga));
                }
                for j in 0..n {
                    row[al * n + j] = row[al * n + j].f_sub(&s.iso[be][(j, i)]);
                }
                rows.push(row);
                let mut v = Rational::zero();
                for r in 0..m {
                    let kt = s.kt(al, be, r);
                    if !kt.is_zero() {
                        v += kt * inst.p_mat[(r, i)].as_constant().expect("instantiated");
                    }
                }
                rhs.push(v);
            }
        }
    }
    Ok(Mat::from_rows(rows).solve_affine(&rhs))
}

/// True iff the Killing form of the ambient algebra restricted to the
/// isotropy span is non-degenerate.
pub fn killing_nondegenerate_subspace(split: &OrthoSplit) -> Result<bool, CartanError> {
    let gens: Vec<Mat<Rational>> = split.iso.iter().chain(split.comp.iter()).cloned().collect();
    let alg = algebra_from_matrices(&gens).map_err(|_| CartanError::NotBasis)?;
    let b = alg.killing_form();
    let q = split.q;
    let restricted = Mat::from_fn(q, q, |i, j| {
        b[i][j].as_constant().expect("constant structure constants")
    });
    Ok(restricted.rank() == q)
}

/// Builds the Lie algebra pair on R^n + h with structure constants read
/// off from the structure equations via alpha([X,Y]) = -d alpha(X,Y).
/// Fails when the resulting bracket violates Jacobi (Bianchi residuals
/// nonzero at the assignment).
pub fn assemble_pair(
    problem: &ExtensionProblem,
    a: &Assignment,
) -> Result<ConstPair<Rational>, CartanError> {
    let inst = problem.instantiate(a)?;
    let s = &inst.split;
    let dim = s.n + s.q;
    let mut alg = ConstAlgebra::<Rational>::new(dim);
    for mdual in 0..dim {
        let d = inst.dbasis(mdual);
        for (&(x, y), c) in &d {
            let v = c.as_constant().expect("instantiated");
            // c^m_{xy} = -(d beta^m)_{xy}
            alg.add_bracket_term(x, y, mdual, -v);
        }
    }
    if !alg.jacobi_holds() {
        return Err(CartanError::BianchiViolated);
    }
    let mut h_span = Vec::new();
    for al in 0..s.q {
        let mut v = vec![Rational::zero(); dim];
        v[s.n + al] = Rational::from_integer(1.into());
        h_span.push(v);
    }
    Ok(ConstPair {
        algebra: alg,
        h_span,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{assignment, int, parse_poly, rat};

    fn e(i: usize, j: usize) -> Mat<Rational> {
        Mat::from_fn(4, 4, |a, b| {
            if a + 1 == i && b + 1 == j {
                int(1)
            } else {
                int(0)
            }
        })
    }

    fn eta31() -> Mat<Rational> {
        Mat::from_rows(vec![
            vec![int(1), int(0), int(0), int(0)],
            vec![int(0), int(1), int(0), int(0)],
            vec![int(0), int(0), int(0), int(1)],
            vec![int(0), int(0), int(1), int(0)],
        ])
    }

    fn o31_basis() -> Vec<Mat<Rational>> {
        vec![
            e(2, 1).sub(&e(1, 2)), // B1
            e(4, 4).sub(&e(3, 3)), // B2
            e(4, 1).sub(&e(1, 3)), // B3
            e(4, 2).sub(&e(2, 3)), // B4
            e(1, 4).sub(&e(3, 1)), // B5
            e(3, 2).sub(&e(2, 4)), // B6
        ]
    }

    fn split_f7() -> OrthoSplit {
        let b = o31_basis();
        build_ortho(
            &eta31(),
            vec![b[1].clone(), b[2].clone(), b[3].clone()],
            vec![b[0].clone(), b[4].clone(), b[5].clone()],
        )
        .unwrap()
    }

    fn p_f7() -> Mat<Poly> {
        let mut p = Mat::zeros(3, 4);
        p[(0, 0)] = Poly::param("p1");
        p[(0, 1)] = Poly::param("p2");
        p[(1, 2)] = Poly::param("p2").neg();
        p[(2, 2)] = Poly::param("p1").neg();
        p
    }

    fn c_f7() -> CTensor {
        let k = parse_poly("p1^2 + p2^2").unwrap();
        let mut c = CTensor::new();
        c.set(0, 2, 3, k.neg());
        c.set(1, 0, 3, k.neg());
        c.set(2, 1, 3, k.neg());
        c
    }

    #[test]
    fn build_ortho_validates() {
        let s = split_f7();
        assert_eq!((s.n, s.q, s.m), (4, 3, 3));
        // a non-skew matrix is rejected
        let bad = build_ortho(&eta31(), vec![e(1, 2)], o31_basis()[..5].to_vec());
        assert!(matches!(bad, Err(CartanError::NotSkew(_))));
        // trivial isotropy: fails the basis count here, so use o(2,1)-sized
        // data in the catalog tests instead; the empty-iso path is covered
        // by reductivity_check below.
    }

    #[test]
    fn split_constants_reproduce_commutators() {
        let s = split_f7();
        // [b_al, b~_r] must equal Kt b + Kh b~ entrywise
        for al in 0..s.q {
            for r in 0..s.m {
                let comm = s.iso[al]
                    .matmul(&s.comp[r])
                    .sub(&s.comp[r].matmul(&s.iso[al]));
                let mut rec = Mat::zeros(s.n, s.n);
                for be in 0..s.q {
                    rec = rec.add(&s.iso[be].scale(s.kt(be, al, r)));
                }
                for t in 0..s.m {
                    rec = rec.add(&s.comp[t].scale(s.kh(t, al, r)));
                }
                assert_eq!(comm, rec);
            }
        }
    }

    #[test]
    fn a3_reproduces_printed_solution() {
        let s = split_f7();
        let sol = solve_a3(&s);
        assert_eq!(sol.dim(), 2);
        let disp = sol.display();
        assert_eq!(
            disp,
            "w~1 = (p1)*th1 + (p2)*th2\nw~2 = (-p2)*th3\nw~3 = (-p1)*th3\n"
        );
        // the residual of the produced family is identically zero
        for r in a3_residual(&s, &sol.as_poly_matrix()) {
            assert!(r.is_zero());
        }
    }

    #[test]
    fn bianchi_calibration_case() {
        let s = split_f7();
        let problem = ExtensionProblem::new(s, p_f7(), CTensor::new());
        let a = assignment(&[("p1", int(1)), ("p2", int(0))]);
        let fam = bianchi_solve(&problem, &a).unwrap();
        assert_eq!(fam.family.dim(), 0);
        // C^1_{34} = C^2_{14} = C^3_{24} = -1 at K = 1
        let mut expected = CTensor::new();
        expected.set(0, 2, 3, Poly::from_i64(-1));
        expected.set(1, 0, 3, Poly::from_i64(-1));
        expected.set(2, 1, 3, Poly::from_i64(-1));
        assert!(fam.contains_tensor(&expected));
        // and the full symbolic residual with the symbolic C vanishes
        let sym = ExtensionProblem::new(split_f7(), p_f7(), c_f7());
        assert!(sym.bianchi_residual().iter().all(|p| p.is_zero()));
    }

    #[test]
    fn curvature_is_constant_curvature() {
        // mandatory calibration: lowered form must be -K theta_i ^ theta_j
        let s = split_f7();
        let problem = ExtensionProblem::new(s.clone(), p_f7(), c_f7());
        let curv = curvature(&problem);
        let low = curv.lowered(&s);
        let k = parse_poly("p1^2 + p2^2").unwrap();
        for i in 0..4 {
            for j in 0..4 {
                // -K theta_i ^ theta_j with theta_i = eta_{ia} theta^a
                let mut expect = TwoForm::new();
                for a in 0..4 {
                    for b in 0..4 {
                        let c = (&s.eta[(i, a)] * &s.eta[(j, b)]).clone();
                        if !c.is_zero() {
                            two_add(&mut expect, a, b, k.scale(&c).neg());
                        }
                    }
                }
                assert_eq!(low[i][j], expect, "Omega_{}{}", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn curvature_matches_structure_equation_route() {
        let s = split_f7();
        let problem = ExtensionProblem::new(s.clone(), p_f7(), c_f7());
        let direct = curvature(&problem);
        let via = curvature_via_structure(&problem);
        for i in 0..4 {
            for j in 0..4 {
                let d = direct.matrix_entry(&s, i, j);
                // the structure route may only contain theta ^ theta terms
                for (&(a, b), c) in &via[i][j] {
                    assert!(
                        (a < 4 && b < 4) || c.is_zero(),
                        "non-horizontal curvature term"
                    );
                    assert_eq!(two_get(&d, a, b), c.clone());
                }
                for (&(a, b), c) in &d {
                    assert_eq!(two_get(&via[i][j], a, b), c.clone());
                }
            }
        }
    }

    #[test]
    fn zero_problem_has_zero_curvature() {
        let s = split_f7();
        let problem = ExtensionProblem::new(s, Mat::zeros(3, 4), CTensor::new());
        assert!(curvature(&problem).is_zero());
    }

    #[test]
    fn reductivity_verdicts() {
        let s = split_f7();
        let problem = ExtensionProblem::new(s, p_f7(), CTensor::new());
        // non-reductive at p != 0
        let a = assignment(&[("p1", int(1)), ("p2", int(0))]);
        assert!(reductivity_check(&problem, &a).unwrap().is_none());
        // reductive exactly at p1 = p2 = 0
        let a = assignment(&[("p1", int(0)), ("p2", int(0))]);
        assert!(reductivity_check(&problem, &a).unwrap().is_some());
    }

    #[test]
    fn killing_restriction_is_degenerate_on_f7() {
        let s = split_f7();
        assert!(!killing_nondegenerate_subspace(&s).unwrap());
        // the full algebra as isotropy is non-degenerate (semisimple)
        let full = build_ortho(&eta31(), o31_basis(), vec![]).unwrap();
        assert!(killing_nondegenerate_subspace(&full).unwrap());
    }

    #[test]
    fn assemble_pair_requires_bianchi() {
        let s = split_f7();
        let good = ExtensionProblem::new(s.clone(), p_f7(), c_f7());
        let a = assignment(&[("p1", int(1)), ("p2", int(2))]);
        let pair = assemble_pair(&good, &a).unwrap();
        assert_eq!(pair.algebra.dim, 7);
        assert!(pair.algebra.jacobi_holds());
        // wrong C violates Jacobi
        let mut bad_c = CTensor::new();
        bad_c.set(0, 0, 1, Poly::from_i64(3));
        let bad = ExtensionProblem::new(s, p_f7(), bad_c);
        assert!(matches!(
            assemble_pair(&bad, &a),
            Err(CartanError::BianchiViolated)
        ));
    }

    #[test]
    fn domain_is_enforced() {
        let s = split_f7();
        let mut problem = ExtensionProblem::new(s, p_f7(), CTensor::new());
        problem.domain.push(parse_poly("p1^2 + p2^2").unwrap());
        let a = assignment(&[("p1", int(0)), ("p2", int(0))]);
        assert!(matches!(
            problem.instantiate(&a),
            Err(CartanError::DegenerateParameters(_))
        ));
        let a = assignment(&[("p1", rat(1, 2)), ("p2", int(0))]);
        assert!(problem.instantiate(&a).is_ok());
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use crate::scalar::{int, rat};
    use proptest::prelude::*;

    fn e(i: usize, j: usize) -> Mat<Rational> {
        Mat::from_fn(4, 4, |a, b| if a + 1 == i && b + 1 == j { int(1) } else { int(0) })
    }

    fn eta31() -> Mat<Rational> {
        Mat::from_rows(vec![
            vec![int(1), int(0), int(0), int(0)],
            vec![int(0), int(1), int(0), int(0)],
            vec![int(0), int(0), int(0), int(1)],
            vec![int(0), int(0), int(1), int(0)],
        ])
    }

    fn split_f7() -> OrthoSplit {
        let b1 = e(2, 1).sub(&e(1, 2));
        let b2 = e(4, 4).sub(&e(3, 3));
        let b3 = e(4, 1).sub(&e(1, 3));
        let b4 = e(4, 2).sub(&e(2, 3));
        let b5 = e(1, 4).sub(&e(3, 1));
        let b6 = e(3, 2).sub(&e(2, 4));
        build_ortho(&eta31(), vec![b2, b3, b4], vec![b1, b5, b6]).unwrap()
    }

    fn rat_strategy() -> impl Strategy<Value = Rational> {
        (-4i64..5, 1i64..4).prop_map(|(n, d)| rat(n, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// The assembled bracket satisfies Jacobi exactly when the Bianchi
        /// system admits the chosen data; a mismatched tensor must break it.
        #[test]
        fn bianchi_jacobi_equivalence(p1 in rat_strategy(), p2 in rat_strategy(),
                                      noise in rat_strategy()) {
            let split = split_f7();
            let mut p: Mat<Poly> = Mat::zeros(3, 4);
            p[(0, 0)] = Poly::constant(p1.clone());
            p[(0, 1)] = Poly::constant(p2.clone());
            p[(1, 2)] = Poly::constant(-p2.clone());
            p[(2, 2)] = Poly::constant(-p1.clone());
            let problem = ExtensionProblem::new(split.clone(), p.clone(), CTensor::new());
            let fam = bianchi_solve(&problem, &Assignment::new()).unwrap();
            let solved = ExtensionProblem::new(split.clone(), p.clone(), fam.tensor_at(&[]));
            // consistent data assembles to a Lie algebra
            let pair = assemble_pair(&solved, &Assignment::new()).unwrap();
            prop_assert!(pair.algebra.jacobi_holds());
            // perturbing one solved coefficient must violate Jacobi unless the
            // perturbation is zero
            if !noise.is_zero() {
                let mut bad = fam.tensor_at(&[]);
                let cur = bad.get(0, 0, 1);
                bad.set(0, 0, 1, cur.add(&Poly::constant(noise)));
                let broken = ExtensionProblem::new(split, p, bad);
                prop_assert!(matches!(
                    assemble_pair(&broken, &Assignment::new()),
                    Err(CartanError::BianchiViolated)
                ));
            }
        }

        /// Non-degenerate restricted Killing form forces solvability of the
        /// reductivity condition for every complement coefficient choice.
        #[test]
        fn killing_nondegenerate_implies_reductive(c1 in rat_strategy(), c2 in rat_strategy()) {
            // a compact rotation inside the Lorentz algebra: span{B1}
            let b1 = e(2, 1).sub(&e(1, 2));
            let b2 = e(4, 4).sub(&e(3, 3));
            let b3 = e(4, 1).sub(&e(1, 3));
            let b4 = e(4, 2).sub(&e(2, 3));
            let b5 = e(1, 4).sub(&e(3, 1));
            let b6 = e(3, 2).sub(&e(2, 4));
            let split = build_ortho(&eta31(), vec![b1], vec![b2, b3, b4, b5, b6]).unwrap();
            prop_assume!(killing_nondegenerate_subspace(&split).unwrap());
            let sol = solve_a3(&split);
            let mut asn = Assignment::new();
            for k in 0..sol.dim() {
                asn.insert(format!("p{}", k + 1), if k % 2 == 0 { c1.clone() } else { c2.clone() });
            }
            let problem = ExtensionProblem::new(split, sol.as_poly_matrix(), CTensor::new());
            prop_assert!(reductivity_check(&problem, &asn).unwrap().is_some());
        }
    }
}

#[cfg(test)]
mod trivial_isotropy_tests {
    use super::*;
    use crate::scalar::int;

    #[test]
    fn empty_isotropy_split_is_vacuously_reductive() {
        // o(2,1) with the whole algebra as the complement
        let e3 = |i: usize, j: usize| {
            Mat::from_fn(3, 3, |a, b| if a + 1 == i && b + 1 == j { int(1) } else { int(0) })
        };
        let eta = Mat::from_rows(vec![
            vec![int(1), int(0), int(0)],
            vec![int(0), int(0), int(1)],
            vec![int(0), int(1), int(0)],
        ]);
        let b1 = e3(2, 2).sub(&e3(3, 3));
        let b2 = e3(1, 2).sub(&e3(3, 1));
        let b3 = e3(2, 1).sub(&e3(1, 3));
        let split = build_ortho(&eta, vec![], vec![b1, b2, b3]).unwrap();
        assert_eq!((split.q, split.m), (0, 3));
        // no isotropy condition: the whole coefficient space survives
        let sol = solve_a3(&split);
        assert_eq!(sol.dim(), 9);
        // with zero coefficients everything is flat and abelian
        let problem = ExtensionProblem::new(split, Mat::zeros(3, 3), CTensor::new());
        for i in 0..3 {
            assert!(problem.dtheta(i).is_empty());
        }
        let fam = bianchi_solve(&problem, &Assignment::new()).unwrap();
        assert_eq!(fam.family.dim(), 0);
        assert!(reductivity_check(&problem, &Assignment::new())
            .unwrap()
            .is_some());
        let pair = assemble_pair(&problem, &Assignment::new()).unwrap();
        assert_eq!(pair.algebra.dim, 3);
        assert!(pair.h_span.is_empty());
        // abelian: every bracket vanishes
        for i in 0..3 {
            for j in 0..3 {
                let mut x = vec![Rational::zero(); 3];
                x[i] = int(1);
                let mut y = vec![Rational::zero(); 3];
                y[j] = int(1);
                assert!(pair.algebra.bracket(&x, &y).iter().all(|v| v.is_zero()));
            }
        }
    }
}
