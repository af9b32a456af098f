//! Dense exact linear algebra over a field: reduced row echelon form,
//! rank, nullspace, inverse, and affine solution families. Used with
//! `Rational` throughout and with `QSqrt2` for the handful of changes of
//! basis that involve sqrt 2.

use crate::scalar::{QSqrt2, Rational};
use num_traits::{One, Zero};

/// The field operations the elimination routines need.
pub trait Field: Clone + PartialEq + std::fmt::Debug {
    fn f_zero() -> Self;
    fn f_one() -> Self;
    fn f_add(&self, o: &Self) -> Self;
    fn f_sub(&self, o: &Self) -> Self;
    fn f_mul(&self, o: &Self) -> Self;
    /// Division; only called with a nonzero divisor.
    fn f_div(&self, o: &Self) -> Self;
    fn f_neg(&self) -> Self;
    fn f_is_zero(&self) -> bool;
}

impl Field for Rational {
    fn f_zero() -> Self {
        Rational::zero()
    }
    fn f_one() -> Self {
        Rational::one()
    }
    fn f_add(&self, o: &Self) -> Self {
        self + o
    }
    fn f_sub(&self, o: &Self) -> Self {
        self - o
    }
    fn f_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn f_div(&self, o: &Self) -> Self {
        self / o
    }
    fn f_neg(&self) -> Self {
        -self.clone()
    }
    fn f_is_zero(&self) -> bool {
        self.is_zero()
    }
}

impl Field for QSqrt2 {
    fn f_zero() -> Self {
        QSqrt2::zero()
    }
    fn f_one() -> Self {
        QSqrt2::one()
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
        self.div(o).expect("division by zero in QSqrt2")
    }
    fn f_neg(&self) -> Self {
        self.neg()
    }
    fn f_is_zero(&self) -> bool {
        self.is_zero()
    }
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Debug)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
}

impl<T: Field> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::f_zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::f_one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn matmul(&self, o: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, o.rows, "shape mismatch in matmul");
        Mat::from_fn(self.rows, o.cols, |i, j| {
            let mut acc = T::f_zero();
            for k in 0..self.cols {
                acc = acc.f_add(&self[(i, k)].f_mul(&o[(k, j)]));
            }
            acc
        })
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = T::f_zero();
                for k in 0..self.cols {
                    acc = acc.f_add(&self[(i, k)].f_mul(&v[k]));
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, o: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].f_add(&o[(i, j)]))
    }

    pub fn sub(&self, o: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].f_sub(&o[(i, j)]))
    }

    pub fn scale(&self, c: &T) -> Mat<T> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].f_mul(c))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.f_is_zero())
    }

    /// In-place Gaussian elimination to reduced row echelon form.
    /// Returns the pivot columns in order.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].f_is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = T::f_one().f_div(&self[(r, c)]);
            for j in c..self.cols {
                self[(r, j)] = self[(r, j)].f_mul(&inv);
            }
            for i in 0..self.rows {
                if i != r && !self[(i, c)].f_is_zero() {
                    let factor = self[(i, c)].clone();
                    for j in c..self.cols {
                        let t = self[(r, j)].f_mul(&factor);
                        self[(i, j)] = self[(i, j)].f_sub(&t);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the right nullspace, canonicalized so that scanning the
    /// coordinate positions in increasing order, each basis vector is the
    /// unique one with a (unit) leading entry at its own position and zero
    /// there in all the others. This makes the induced parameter naming of
    /// a solution family deterministic and position-ordered.
    pub fn nullspace(&self) -> Vec<Vec<T>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis: Vec<Vec<T>> = Vec::new();
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut v = vec![T::f_zero(); self.cols];
            v[free] = T::f_one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = m[(r, free)].f_neg();
            }
            basis.push(v);
        }
        echelonize_by_position(&mut basis);
        basis
    }

    /// Determinant by fraction-free-ish elimination (plain division is fine
    /// over an exact field).
    pub fn det(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = T::f_one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].f_is_zero()) else {
                return T::f_zero();
            };
            if p != c {
                m.swap_rows(c, p);
                det = det.f_neg();
            }
            det = det.f_mul(&m[(c, c)]);
            let inv = T::f_one().f_div(&m[(c, c)]);
            for i in (c + 1)..n {
                if m[(i, c)].f_is_zero() {
                    continue;
                }
                let factor = m[(i, c)].f_mul(&inv);
                for j in c..n {
                    let t = m[(c, j)].f_mul(&factor);
                    m[(i, j)] = m[(i, j)].f_sub(&t);
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<Mat<T>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Mat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = T::f_one();
        }
        let pivots = aug.rref();
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return None;
        }
        Some(Mat::from_fn(n, n, |i, j| aug[(i, n + j)].clone()))
    }

    /// Exact solution of `A x = b` as an affine family, or `None` when the
    /// system is inconsistent.
    pub fn solve_affine(&self, b: &[T]) -> Option<AffineFamily<T>> {
        assert_eq!(self.rows, b.len());
        let mut aug = Mat::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None; // a row [0 .. 0 | 1]
        }
        let mut particular = vec![T::f_zero(); self.cols];
        for (r, &p) in pivots.iter().enumerate() {
            particular[p] = aug[(r, self.cols)].clone();
        }
        Some(AffineFamily {
            particular,
            directions: self.nullspace(),
        })
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Column-echelon reduction of a set of vectors with positions scanned in
/// increasing order; pivots are normalized to 1 and cleared from the other
/// vectors, and the output is ordered by leading position.
pub fn echelonize_by_position<T: Field>(basis: &mut Vec<Vec<T>>) {
    if basis.is_empty() {
        return;
    }
    let dim = basis[0].len();
    let mut out: Vec<Vec<T>> = Vec::new();
    let mut rest: Vec<Vec<T>> = std::mem::take(basis);
    for pos in 0..dim {
        let Some(k) = rest.iter().position(|v| !v[pos].f_is_zero()) else {
            continue;
        };
        let mut piv = rest.remove(k);
        let inv = T::f_one().f_div(&piv[pos]);
        for x in piv.iter_mut() {
            *x = x.f_mul(&inv);
        }
        for v in rest.iter_mut().chain(out.iter_mut()) {
            if !v[pos].f_is_zero() {
                let f = v[pos].clone();
                for (x, pv) in v.iter_mut().zip(piv.iter()) {
                    *x = x.f_sub(&f.f_mul(pv));
                }
            }
        }
        out.push(piv);
        if rest.is_empty() {
            break;
        }
    }
    *basis = out;
}

/// Affine solution family `particular + span(directions)`.
#[derive(Clone, Debug)]
pub struct AffineFamily<T> {
    pub particular: Vec<T>,
    pub directions: Vec<Vec<T>>,
}

impl<T: Field> AffineFamily<T> {
    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Exact membership test.
    pub fn contains(&self, x: &[T]) -> bool {
        assert_eq!(x.len(), self.particular.len());
        let diff: Vec<T> = x
            .iter()
            .zip(&self.particular)
            .map(|(a, b)| a.f_sub(b))
            .collect();
        in_span(&self.directions, &diff)
    }

    /// Instantiates the family at given free coordinates.
    pub fn at(&self, frees: &[T]) -> Vec<T> {
        assert_eq!(frees.len(), self.directions.len());
        let mut out = self.particular.clone();
        for (c, dir) in frees.iter().zip(&self.directions) {
            for (o, d) in out.iter_mut().zip(dir) {
                *o = o.f_add(&c.f_mul(d));
            }
        }
        out
    }
}

/// True iff `x` lies in the span of `basis` (exact).
pub fn in_span<T: Field>(basis: &[Vec<T>], x: &[T]) -> bool {
    if x.iter().all(|v| v.f_is_zero()) {
        return true;
    }
    if basis.is_empty() {
        return false;
    }
    // rank(basis) == rank(basis + x)
    let a = Mat::from_rows(basis.to_vec());
    let mut with = basis.to_vec();
    with.push(x.to_vec());
    let b = Mat::from_rows(with);
    a.rank() == b.rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    #[test]
    fn rref_rank_nullspace() {
        // x + y + z = 0, x - y = 0  => nullspace dim 1
        let a = Mat::from_rows(vec![
            vec![int(1), int(1), int(1)],
            vec![int(1), int(-1), int(0)],
        ]);
        assert_eq!(a.rank(), 2);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 1);
        for v in &ns {
            assert!(a.matvec(v).iter().all(|x| x.f_is_zero()));
        }
    }

    #[test]
    fn nullspace_position_naming() {
        // single constraint x0 - x2 = 0 over R^3: leading positions 0 and 1
        let a = Mat::from_rows(vec![vec![int(1), int(0), int(-1)]]);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 2);
        // first vector leads at position 0 (and carries x2 = x0)
        assert_eq!(ns[0], vec![int(1), int(0), int(1)]);
        assert_eq!(ns[1], vec![int(0), int(1), int(0)]);
    }

    #[test]
    fn det_and_inverse() {
        let a = Mat::from_rows(vec![
            vec![int(2), int(1)],
            vec![int(1), int(1)],
        ]);
        assert_eq!(a.det(), int(1));
        let inv = a.inverse().unwrap();
        assert_eq!(a.matmul(&inv), Mat::identity(2));
        let sing = Mat::from_rows(vec![vec![int(1), int(2)], vec![int(2), int(4)]]);
        assert_eq!(sing.det(), int(0));
        assert!(sing.inverse().is_none());
    }

    #[test]
    fn solve_affine_family() {
        // x + y = 2 has a 1-dim family
        let a = Mat::from_rows(vec![vec![int(1), int(1)]]);
        let fam = a.solve_affine(&[int(2)]).unwrap();
        assert_eq!(fam.dim(), 1);
        assert!(fam.contains(&[int(2), int(0)]));
        assert!(fam.contains(&[rat(1, 2), rat(3, 2)]));
        assert!(!fam.contains(&[int(1), int(2)]));
        // inconsistent
        let a = Mat::from_rows(vec![vec![int(1), int(1)], vec![int(1), int(1)]]);
        assert!(a.solve_affine(&[int(1), int(2)]).is_none());
    }
}
