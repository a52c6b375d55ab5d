//! Points, covectors and tangent vectors of gl(n) x gl(n), and the open set M.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, EigenIssue, Mat};

/// A point `(A, B)` of gl(n) x gl(n).
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    a: Mat,
    b: Mat,
}

impl PhasePoint {
    pub fn new(a: Mat, b: Mat) -> Result<Self> {
        check_square(&a)?;
        check_square(&b)?;
        if a.nrows() != b.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.nrows(),
            });
        }
        if a.nrows() == 0 {
            return Err(Error::InvalidState("n must be positive".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("A"));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("B"));
        }
        Ok(Self { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn into_parts(self) -> (Mat, Mat) {
        (self.a, self.b)
    }

    /// Frobenius norm of the stacked pair.
    pub fn norm(&self) -> f64 {
        (self.a.norm_squared() + self.b.norm_squared()).sqrt()
    }

    /// Moves the point along a tangent vector: `(A + h V, B + h W)`.
    pub fn displaced(&self, t: &TangentPair, h: f64) -> Self {
        Self {
            a: &self.a + &t.v * h,
            b: &self.b + &t.w * h,
        }
    }
}

fn check_square(m: &Mat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// A covector `(xi, eta)`, identified with gl(n) x gl(n) by the trace pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct CovectorPair {
    pub xi: Mat,
    pub eta: Mat,
}

/// A tangent vector `(V, W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPair {
    pub v: Mat,
    pub w: Mat,
}

macro_rules! pair_ops {
    ($ty:ident, $f0:ident, $f1:ident) => {
        impl $ty {
            pub fn new($f0: Mat, $f1: Mat) -> Self {
                Self { $f0, $f1 }
            }

            pub fn zeros(n: usize) -> Self {
                Self {
                    $f0: Mat::zeros(n, n),
                    $f1: Mat::zeros(n, n),
                }
            }

            pub fn n(&self) -> usize {
                self.$f0.nrows()
            }

            pub fn scale(&self, c: f64) -> Self {
                Self {
                    $f0: &self.$f0 * c,
                    $f1: &self.$f1 * c,
                }
            }

            pub fn add(&self, other: &Self) -> Self {
                Self {
                    $f0: &self.$f0 + &other.$f0,
                    $f1: &self.$f1 + &other.$f1,
                }
            }

            pub fn sub(&self, other: &Self) -> Self {
                Self {
                    $f0: &self.$f0 - &other.$f0,
                    $f1: &self.$f1 - &other.$f1,
                }
            }

            /// Largest entry magnitude over both blocks.
            pub fn max_abs(&self) -> f64 {
                linalg::max_abs(&self.$f0).max(linalg::max_abs(&self.$f1))
            }

            pub fn norm(&self) -> f64 {
                (self.$f0.norm_squared() + self.$f1.norm_squared()).sqrt()
            }
        }
    };
}

pair_ops!(CovectorPair, xi, eta);
pair_ops!(TangentPair, v, w);

/// `tr(xi V) + tr(eta W)`.
pub fn pairing(c: &CovectorPair, t: &TangentPair) -> Result<f64> {
    if c.n() != t.n() || c.eta.nrows() != t.w.nrows() {
        return Err(Error::DimensionMismatch {
            expected: c.n(),
            got: t.n(),
        });
    }
    Ok(trace_of_product(&c.xi, &t.v) + trace_of_product(&c.eta, &t.w))
}

/// `tr(x y)` without forming the product.
pub fn trace_of_product(x: &Mat, y: &Mat) -> f64 {
    x.component_mul(&y.transpose()).sum()
}

/// Simultaneous conjugation `(g A g^-1, g B g^-1)`.
pub fn conjugate(g: &Mat, p: &PhasePoint) -> Result<PhasePoint> {
    if g.nrows() != p.n() || g.ncols() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            got: g.nrows(),
        });
    }
    let cond = linalg::condition_number(g);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::SingularMatrix);
    }
    let g_inv = g.clone().try_inverse().ok_or(Error::SingularMatrix)?;
    PhasePoint::new(g * p.a() * &g_inv, g * p.b() * &g_inv)
}

/// Why a point fails to lie in M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipIssue {
    EigenvaluesNotReal,
    EigenvaluesNotDistinct,
    /// An off-diagonal entry of A vanishes in an eigenbasis of B.
    #[serde(rename = "zero-coupling-entry-AB")]
    ZeroCouplingEntryAB,
    /// An off-diagonal entry of B vanishes in an eigenbasis of A.
    #[serde(rename = "zero-coupling-entry-BA")]
    ZeroCouplingEntryBA,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    #[serde(rename = "in_M")]
    pub in_m: bool,
    pub reasons: Vec<MembershipIssue>,
    /// Smallest relative eigenvalue gap seen over A and B; 0 when a spectrum is
    /// not real or no gap exists (n = 1).
    pub gap: f64,
}

pub const DEFAULT_TOL: f64 = 1e-8;

/// Tests the three conditions defining M: real distinct spectra, and no vanishing
/// off-diagonal coupling of either matrix in an eigenbasis of the other.
pub fn in_open_set_m(p: &PhasePoint, tol: f64) -> MembershipReport {
    let mut reasons = Vec::new();
    let mut gap = f64::INFINITY;

    let mut basis = |m: &Mat| match linalg::real_eigen(m, tol) {
        Ok(e) => {
            gap = gap.min(e.rel_gap);
            Some(e)
        }
        Err(EigenIssue::NotDistinct { rel_gap }) => {
            gap = gap.min(rel_gap);
            reasons.push(MembershipIssue::EigenvaluesNotDistinct);
            None
        }
        Err(EigenIssue::NotReal | EigenIssue::Failed) => {
            gap = 0.0;
            reasons.push(MembershipIssue::EigenvaluesNotReal);
            None
        }
    };
    let eig_b = basis(p.b());
    let eig_a = basis(p.a());

    if let Some(e) = eig_b {
        if !couplings_nonzero(p.a(), &e.vectors, tol) {
            reasons.push(MembershipIssue::ZeroCouplingEntryAB);
        }
    }
    if let Some(e) = eig_a {
        if !couplings_nonzero(p.b(), &e.vectors, tol) {
            reasons.push(MembershipIssue::ZeroCouplingEntryBA);
        }
    }
    reasons.sort();
    reasons.dedup();
    MembershipReport {
        in_m: reasons.is_empty(),
        reasons,
        gap: if gap.is_finite() { gap } else { 0.0 },
    }
}

fn couplings_nonzero(m: &Mat, basis: &Mat, tol: f64) -> bool {
    let Some(inv) = basis.clone().try_inverse() else {
        return false;
    };
    let t = inv * m * basis;
    let n = t.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || t[(i, j)].abs() > tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(v: [f64; 4]) -> Mat {
        Mat::from_row_slice(2, 2, &v)
    }

    #[test]
    fn pairing_examples() {
        let i = Mat::identity(2, 2);
        let z = Mat::zeros(2, 2);
        let c = CovectorPair::new(i.clone(), z.clone());
        let t = TangentPair::new(i.clone(), z.clone());
        assert_eq!(pairing(&c, &t).unwrap(), 2.0);

        let c = CovectorPair::new(z.clone(), i.clone());
        assert_eq!(pairing(&c, &t).unwrap(), 0.0);

        let c = CovectorPair::new(m2([1.0, 2.0, 3.0, 4.0]), z.clone());
        let t = TangentPair::new(m2([0.0, 1.0, 0.0, 0.0]), z);
        assert_eq!(pairing(&c, &t).unwrap(), 3.0);
    }

    #[test]
    fn pairing_rejects_mismatch() {
        let c = CovectorPair::zeros(2);
        let t = TangentPair::zeros(3);
        assert!(matches!(
            pairing(&c, &t),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn phase_point_validation() {
        assert!(PhasePoint::new(Mat::zeros(2, 2), Mat::zeros(3, 3)).is_err());
        assert!(PhasePoint::new(Mat::zeros(2, 3), Mat::zeros(2, 3)).is_err());
        let mut a = Mat::zeros(2, 2);
        a[(0, 1)] = f64::NAN;
        assert_eq!(
            PhasePoint::new(a, Mat::zeros(2, 2)),
            Err(Error::NonFinite("A"))
        );
    }

    #[test]
    fn membership_examples() {
        let p = PhasePoint::new(linalg::diag(&[1.0, 2.0]), linalg::diag(&[3.0, 4.0])).unwrap();
        let r = in_open_set_m(&p, DEFAULT_TOL);
        assert!(!r.in_m);
        assert!(r.reasons.contains(&MembershipIssue::ZeroCouplingEntryAB));

        let p = PhasePoint::new(m2([0.0, 1.0, 1.0, 0.0]), linalg::diag(&[0.0, 1.0])).unwrap();
        let r = in_open_set_m(&p, DEFAULT_TOL);
        assert!(r.in_m, "{r:?}");
        assert!(r.reasons.is_empty());
        assert!(r.gap > 0.0);

        let p = PhasePoint::new(m2([0.0, -1.0, 1.0, 0.0]), linalg::diag(&[0.0, 1.0])).unwrap();
        let r = in_open_set_m(&p, DEFAULT_TOL);
        assert!(!r.in_m);
        assert_eq!(r.reasons, vec![MembershipIssue::EigenvaluesNotReal]);
    }

    #[test]
    fn membership_repeated_eigenvalue() {
        let p = PhasePoint::new(m2([0.0, 1.0, 1.0, 0.0]), Mat::identity(2, 2)).unwrap();
        let r = in_open_set_m(&p, DEFAULT_TOL);
        assert!(r.reasons.contains(&MembershipIssue::EigenvaluesNotDistinct));
    }

    #[test]
    fn conjugation_examples() {
        let p = PhasePoint::new(m2([0.0, 1.0, 1.0, 0.0]), linalg::diag(&[0.5, 1.5])).unwrap();
        assert_eq!(conjugate(&Mat::identity(2, 2), &p).unwrap(), p);

        let q = conjugate(&(Mat::identity(2, 2) * 3.0), &p).unwrap();
        assert!(linalg::max_abs(&(q.a() - p.a())) < 1e-15);

        let q = conjugate(&linalg::diag(&[2.0, 1.0]), &p).unwrap();
        assert_eq!(q.a(), &m2([0.0, 2.0, 0.5, 0.0]));
    }

    #[test]
    fn conjugation_by_singular_matrix_fails() {
        let p = PhasePoint::new(Mat::identity(2, 2), Mat::identity(2, 2)).unwrap();
        assert_eq!(
            conjugate(&m2([1.0, 2.0, 2.0, 4.0]), &p),
            Err(Error::SingularMatrix)
        );
    }
}
