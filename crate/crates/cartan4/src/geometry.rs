//! Algebraic curvature analysis at the origin frame: Ricci contraction of a
//! curvature form, Einstein and constant-curvature decisions.

use crate::cartan::{two_get, CurvatureForm, OrthoSplit, TwoForm};
use crate::linalg::Mat;
use crate::scalar::{Assignment, Poly, Rational, ScalarError};
use num_traits::Zero;

/// Symmetric Ricci matrix with polynomial entries, referred to the
/// orthonormal coframe.
#[derive(Clone, Debug, PartialEq)]
pub struct RicciTensor {
    pub mat: Mat<Poly>,
}

/// Ricci by contraction of the matrix-valued curvature two-form. The
/// single global sign is calibrated on the rank-one Einstein family and
/// then frozen for every module; concretely Ric_{jl} = -sum_i [Omega^i_j]_{il}.
pub fn ricci_from_curvature(curv: &CurvatureForm, split: &OrthoSplit) -> RicciTensor {
    let n = split.n;
    let entries: Vec<Vec<TwoForm>> = (0..n)
        .map(|i| (0..n).map(|j| curv.matrix_entry(split, i, j)).collect())
        .collect();
    let mat = Mat::from_fn(n, n, |j, l| {
        let mut acc = Poly::zero();
        for (i, row) in entries.iter().enumerate() {
            acc = acc.add(&two_get(&row[j], i, l));
        }
        acc.neg()
    });
    RicciTensor { mat }
}

impl RicciTensor {
    pub fn is_symmetric(&self) -> bool {
        let n = self.mat.rows;
        (0..n).all(|i| (i..n).all(|j| self.mat[(i, j)] == self.mat[(j, i)]))
    }

    pub fn is_zero(&self) -> bool {
        self.mat.is_zero()
    }
}

/// Exact Einstein decision at an instantiation: returns lambda with
/// Ric = lambda * eta when one exists.
pub fn einstein_check(
    ric: &RicciTensor,
    eta: &Mat<Rational>,
    a: &Assignment,
) -> Result<Option<Rational>, ScalarError> {
    let n = eta.rows;
    let mut lambda: Option<Rational> = None;
    for i in 0..n {
        for j in 0..n {
            let r = ric.mat[(i, j)].eval(a)?;
            let e = &eta[(i, j)];
            if e.is_zero() {
                if !r.is_zero() {
                    return Ok(None);
                }
            } else {
                let cand = r / e;
                match &lambda {
                    None => lambda = Some(cand),
                    Some(l) if *l != cand => return Ok(None),
                    _ => {}
                }
            }
        }
    }
    Ok(Some(lambda.unwrap_or_else(Rational::zero)))
}

/// Exact constant-curvature decision: K with lowered Omega_{ij}
/// = -K theta_i ^ theta_j (theta_i = eta_{ia} theta^a) at an instantiation.
pub fn constant_curvature_check(
    curv: &CurvatureForm,
    split: &OrthoSplit,
    a: &Assignment,
) -> Result<Option<Rational>, ScalarError> {
    let n = split.n;
    let low = curv.lowered(split);
    let mut k: Option<Rational> = None;
    for i in 0..n {
        for j in 0..n {
            for c in 0..n {
                for d in (c + 1)..n {
                    let got = two_get(&low[i][j], c, d).eval(a)?;
                    let basis = eta_pair(split, i, j, c, d);
                    if basis.is_zero() {
                        if !got.is_zero() {
                            return Ok(None);
                        }
                        continue;
                    }
                    let cand = -(got / basis);
                    match &k {
                        None => k = Some(cand),
                        Some(v) if *v != cand => return Ok(None),
                        _ => {}
                    }
                }
            }
        }
    }
    Ok(Some(k.unwrap_or_else(Rational::zero)))
}

fn eta_pair(split: &OrthoSplit, i: usize, j: usize, c: usize, d: usize) -> Rational {
    // coefficient of theta^c ^ theta^d (c < d) in theta_i ^ theta_j
    let e = &split.eta;
    (&e[(i, c)] * &e[(j, d)]) - (&e[(i, d)] * &e[(j, c)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{build_ortho, curvature, CTensor, ExtensionProblem};
    use crate::scalar::{assignment, int, parse_poly, rat};

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

    /// One-dimensional isotropy split carrying the rank-one family.
    fn split_f14() -> crate::cartan::OrthoSplit {
        let b1 = e(2, 1).sub(&e(1, 2));
        let b2 = e(4, 4).sub(&e(3, 3));
        let b3 = e(4, 1).sub(&e(1, 3));
        let b4 = e(4, 2).sub(&e(2, 3));
        let b5 = e(1, 4).sub(&e(3, 1));
        let b6 = e(3, 2).sub(&e(2, 4));
        build_ortho(&eta31(), vec![b3], vec![b1, b2, b4, b5, b6]).unwrap()
    }

    fn problem_42a() -> ExtensionProblem {
        let s = split_f14();
        let pp = |s: &str| parse_poly(s).unwrap();
        let mut p: Mat<Poly> = Mat::zeros(5, 4);
        p[(0, 0)] = pp("p1");
        p[(1, 1)] = pp("p4");
        p[(1, 2)] = pp("t1*p4 + t1*p1");
        p[(2, 1)] = pp("t1*p1 - t1*p4");
        p[(2, 2)] = pp("p7");
        p[(2, 3)] = pp("p1").neg();
        p[(4, 2)] = pp("p1").neg();
        let mut c = CTensor::new();
        c.set(0, 0, 1, pp("p1*t1*p4 - t1*p1^2"));
        c.set(0, 0, 2, pp("t1^2*p1*p4"));
        ExtensionProblem::new(s, p, c)
    }

    #[test]
    fn ricci_calibration_formula() {
        // the symbolic Ricci of the rank-one family must equal
        // 3 p1^2 eta - (t1^2 p4 + p7)(3 p1 - 2 p4) theta^3 x theta^3
        let problem = problem_42a();
        assert!(problem.bianchi_residual().iter().all(|p| p.is_zero()));
        let curv = curvature(&problem);
        let ric = ricci_from_curvature(&curv, &problem.split);
        assert!(ric.is_symmetric());
        let pp = |s: &str| parse_poly(s).unwrap();
        let lam = pp("3*p1^2");
        let corr = pp("t1^2*p4 + p7").mul(&pp("3*p1 - 2*p4"));
        for i in 0..4 {
            for j in 0..4 {
                let mut expect = lam.scale(&problem.split.eta[(i, j)]);
                if i == 2 && j == 2 {
                    expect = expect.sub(&corr);
                }
                assert_eq!(ric.mat[(i, j)], expect, "Ric[{i}][{j}]");
            }
        }
    }

    #[test]
    fn einstein_examples() {
        let problem = problem_42a();
        let curv = curvature(&problem);
        let ric = ricci_from_curvature(&curv, &problem.split);
        // p1/p4 = 2/3 kills the correction: lambda = 3 p1^2 = 4/3
        let a = assignment(&[
            ("p1", rat(2, 3)),
            ("p4", int(1)),
            ("t1", int(0)),
            ("p7", int(1)),
        ]);
        assert_eq!(
            einstein_check(&ric, &problem.split.eta, &a).unwrap(),
            Some(rat(4, 3))
        );
        // not Einstein away from the critical ratio
        let a = assignment(&[
            ("p1", int(1)),
            ("p4", int(1)),
            ("t1", int(0)),
            ("p7", int(1)),
        ]);
        assert_eq!(einstein_check(&ric, &problem.split.eta, &a).unwrap(), None);
        // zero Ricci is Einstein with lambda = 0
        let zero = RicciTensor {
            mat: Mat::zeros(4, 4),
        };
        assert_eq!(
            einstein_check(&zero, &eta31(), &Assignment::new()).unwrap(),
            Some(int(0))
        );
    }

    #[test]
    fn constant_curvature_examples() {
        let problem = problem_42a();
        let curv = curvature(&problem);
        // p7 + t1^2 p4 = 0 forces constant curvature K = p1^2
        let a = assignment(&[
            ("p1", int(2)),
            ("p4", int(3)),
            ("t1", int(0)),
            ("p7", int(0)),
        ]);
        assert_eq!(
            constant_curvature_check(&curv, &problem.split, &a).unwrap(),
            Some(int(4))
        );
        // generic instantiation is not of constant curvature
        let a = assignment(&[
            ("p1", int(2)),
            ("p4", int(3)),
            ("t1", int(0)),
            ("p7", int(1)),
        ]);
        assert_eq!(
            constant_curvature_check(&curv, &problem.split, &a).unwrap(),
            None
        );
        // constant curvature implies Einstein
        let a = assignment(&[
            ("p1", int(1)),
            ("p4", int(5)),
            ("t1", int(1)),
            ("p7", int(-5)),
        ]);
        let cc = constant_curvature_check(&curv, &problem.split, &a).unwrap();
        let ric = ricci_from_curvature(&curv, &problem.split);
        let ein = einstein_check(&ric, &problem.split.eta, &a).unwrap();
        assert!(cc.is_some());
        assert!(ein.is_some());
        // zero curvature: K = 0
        let zero = ExtensionProblem::new(split_f14(), Mat::zeros(5, 4), CTensor::new());
        let zc = curvature(&zero);
        assert_eq!(
            constant_curvature_check(&zc, &zero.split, &Assignment::new()).unwrap(),
            Some(int(0))
        );
    }
}
