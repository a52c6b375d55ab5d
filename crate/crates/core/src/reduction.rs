//! First projection: the section P meeting every conjugation orbit in M once,
//! the splitting of tangent vectors into section and orbit parts, and the
//! projected Lax flows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, commutator, Mat};
use crate::pencil::HierarchyIndex;
use crate::phase::{in_open_set_m, MembershipIssue, PhasePoint, TangentPair};

/// Relative tolerance used when validating section structure.
pub const SECTION_TOL: f64 = 1e-10;

/// Signs `eps_i`, `i = 1..n-1`, with `A_{i,i+1} = eps_i A_{i+1,i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignPattern(Vec<i8>);

impl SignPattern {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidState("sign pattern entries must be +1 or -1".into()));
        }
        Ok(Self(signs))
    }

    /// The attractive component `(-, ..., -)`.
    pub fn all_minus(n: usize) -> Self {
        Self(vec![-1; n.saturating_sub(1)])
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn sign(&self, i: usize) -> f64 {
        f64::from(self.0[i])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A point of the section: B diagonal and strictly ascending,
/// `A_{i+1,i} > 0` and `A_{i,i+1} = eps_i A_{i+1,i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionPoint {
    point: PhasePoint,
    pattern: SignPattern,
}

impl SectionPoint {
    /// Validates the section structure and reads off the sign pattern.
    pub fn new(point: PhasePoint) -> Result<Self> {
        let pattern = section_pattern(point.a(), point.b(), SECTION_TOL)?;
        Ok(Self { point, pattern })
    }

    pub fn point(&self) -> &PhasePoint {
        &self.point
    }

    pub fn pattern(&self) -> &SignPattern {
        &self.pattern
    }

    pub fn n(&self) -> usize {
        self.point.n()
    }

    pub fn a(&self) -> &Mat {
        self.point.a()
    }

    pub fn b(&self) -> &Mat {
        self.point.b()
    }
}

/// Checks section structure on a raw pair and returns its sign pattern.
pub fn section_pattern(a: &Mat, b: &Mat, tol: f64) -> Result<SignPattern> {
    let n = a.nrows();
    let scale_b = 1.0 + linalg::max_abs(b);
    for i in 0..n {
        for j in 0..n {
            if i != j && b[(i, j)].abs() > tol * scale_b {
                return Err(Error::NotSection(format!("B[{i},{j}] = {:e} is off-diagonal", b[(i, j)])));
            }
        }
    }
    for i in 0..n.saturating_sub(1) {
        if b[(i, i)] >= b[(i + 1, i + 1)] {
            return Err(Error::NotSection(format!("B diagonal not ascending at {i}")));
        }
    }
    let mut signs = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n.saturating_sub(1) {
        let lower = a[(i + 1, i)];
        let upper = a[(i, i + 1)];
        if !(lower > 0.0) {
            return Err(Error::NotSection(format!("A[{},{i}] = {lower:e} is not positive", i + 1)));
        }
        let eps: i8 = if upper > 0.0 { 1 } else { -1 };
        if (upper - f64::from(eps) * lower).abs() > tol * (1.0 + lower) {
            return Err(Error::NotSection(format!(
                "|A[{i},{}]| = {:e} differs from A[{},{i}] = {lower:e}",
                i + 1,
                upper.abs(),
                i + 1
            )));
        }
        signs.push(eps);
    }
    Ok(SignPattern(signs))
}

/// Unique representative of the conjugation orbit of `p` in the section, and the
/// matrix `g` with `g p g^-1` equal to it (`g` fixed by `d_n = 1`).
pub fn canonical_form(p: &PhasePoint, tol: f64) -> Result<(SectionPoint, Mat)> {
    let report = in_open_set_m(p, tol);
    if !report.in_m {
        if report.reasons.contains(&MembershipIssue::EigenvaluesNotDistinct) {
            return Err(Error::DegenerateGap { gap: report.gap, tol });
        }
        return Err(Error::NotInM(format!("{:?}", report.reasons)));
    }
    let n = p.n();
    let eig = linalg::real_eigen(p.b(), tol)
        .map_err(|e| Error::NotInM(format!("eigen-decomposition of B: {e:?}")))?;
    let s_inv = eig.vectors.clone().try_inverse().ok_or(Error::SingularMatrix)?;
    let a1 = &s_inv * p.a() * &eig.vectors;

    // d_i / d_{i+1} = +-sqrt(|A_{i+1,i} / A_{i,i+1}|), sign making d_{i+1} A_{i+1,i} / d_i > 0
    let mut d = vec![1.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        let lower = a1[(i + 1, i)];
        let upper = a1[(i, i + 1)];
        let ratio = (lower / upper).abs().sqrt();
        d[i] = (d[i + 1] * lower).signum() * d[i + 1].abs() * ratio;
    }
    let mut a2 = Mat::from_fn(n, n, |i, j| d[i] * a1[(i, j)] / d[j]);
    for i in 0..n.saturating_sub(1) {
        let eps = a2[(i, i + 1)].signum();
        a2[(i, i + 1)] = eps * a2[(i + 1, i)];
    }
    let g = Mat::from_fn(n, n, |i, j| d[i] * s_inv[(i, j)] + 0.0);
    let section = SectionPoint::new(PhasePoint::new(a2, linalg::diag(&eig.values))?)?;
    Ok((section, g))
}

/// Splitting `(V, W) = (A', B') + ([A, xi], [B, xi])` with `(A', B')` tangent to
/// the section and `tr xi = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub section_tangent: TangentPair,
    pub generator: Mat,
}

pub fn tangent_decompose(sp: &SectionPoint, t: &TangentPair) -> Result<Decomposition> {
    if t.n() != sp.n() {
        return Err(Error::DimensionMismatch {
            expected: sp.n(),
            got: t.n(),
        });
    }
    Ok(decompose_raw(sp.a(), sp.b(), sp.pattern(), t))
}

/// Decomposition on a pair assumed to satisfy the section structure; used inside
/// integrators where intermediate stages drift from it by rounding.
pub(crate) fn decompose_raw(a: &Mat, b: &Mat, pattern: &SignPattern, t: &TangentPair) -> Decomposition {
    let n = a.nrows();
    let mut xi = Mat::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            t.w[(i, j)] / (b[(i, i)] - b[(j, j)])
        }
    });
    let r = &t.v - commutator(a, &xi);
    // consecutive differences delta_i - delta_{i+1}
    let mut delta = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        let eps = pattern.sign(i);
        let step = (r[(i + 1, i)] - eps * r[(i, i + 1)]) / (2.0 * a[(i + 1, i)]);
        delta[i] = delta[i + 1] + step;
    }
    let mean = delta.iter().sum::<f64>() / n as f64;
    for (i, d) in delta.iter().enumerate() {
        xi[(i, i)] = d - mean;
    }
    let a_dot = &t.v - commutator(a, &xi);
    let b_dot = Mat::from_fn(n, n, |i, j| if i == j { t.w[(i, i)] } else { 0.0 });
    Decomposition {
        section_tangent: TangentPair::new(a_dot, b_dot),
        generator: xi,
    }
}

/// The `(n-1) x n` linear system for the diagonal of the generator; row `i`
/// reads `2 eps_i A_{i+1,i} (xi_ii - xi_{i+1,i+1}) = rhs_i`.
pub fn diagonal_system(sp: &SectionPoint) -> Mat {
    let n = sp.n();
    let mut m = Mat::zeros(n.saturating_sub(1), n);
    for i in 0..n.saturating_sub(1) {
        let c = 2.0 * sp.pattern().sign(i) * sp.a()[(i + 1, i)];
        m[(i, i)] = c;
        m[(i, i + 1)] = -c;
    }
    m
}

/// Generator `xi_k` (trace-free) of the projected k-th flow.
pub fn lax_generator(sp: &SectionPoint, k: HierarchyIndex) -> Mat {
    let n = sp.n();
    let field = TangentPair::new(Mat::zeros(n, n), linalg::power(sp.a(), k.get() - 1));
    decompose_raw(sp.a(), sp.b(), sp.pattern(), &field).generator
}

/// Section part of the hierarchy field `(0, A^(k-1))`:
/// `([xi_k, A], [xi_k, B] + A^(k-1))`.
pub fn projected_flow(sp: &SectionPoint, k: HierarchyIndex) -> TangentPair {
    projected_flow_raw(sp.a(), sp.b(), sp.pattern(), k)
}

pub(crate) fn projected_flow_raw(a: &Mat, b: &Mat, pattern: &SignPattern, k: HierarchyIndex) -> TangentPair {
    let n = a.nrows();
    let field = TangentPair::new(Mat::zeros(n, n), linalg::power(a, k.get() - 1));
    decompose_raw(a, b, pattern, &field).section_tangent
}

/// Largest violation of the section tangency relations by `t` at `sp`.
pub fn section_tangency_defect(sp: &SectionPoint, t: &TangentPair) -> f64 {
    let n = sp.n();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                worst = worst.max(t.w[(i, j)].abs());
            }
        }
    }
    for i in 0..n.saturating_sub(1) {
        let eps = sp.pattern().sign(i);
        worst = worst.max((t.v[(i, i + 1)] - eps * t.v[(i + 1, i)]).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;
    use crate::phase::conjugate;

    fn m(n: usize, v: &[f64]) -> Mat {
        Mat::from_row_slice(n, n, v)
    }

    fn section3() -> SectionPoint {
        let a = m(3, &[-2.0, -0.7, 0.2, 0.7, 0.3, 0.5, -0.6, 0.5, 2.5]);
        SectionPoint::new(PhasePoint::new(a, diag(&[-1.0, 0.2, 1.1])).unwrap()).unwrap()
    }

    #[test]
    fn section_validation() {
        let sp = section3();
        assert_eq!(sp.pattern().signs(), &[-1, 1]);
        let bad = PhasePoint::new(sp.a().clone(), diag(&[1.0, 0.0, 2.0])).unwrap();
        assert!(matches!(SectionPoint::new(bad), Err(Error::NotSection(_))));
        let mut a = sp.a().clone();
        a[(1, 0)] = -0.7;
        a[(0, 1)] = 0.7;
        let bad = PhasePoint::new(a, sp.b().clone()).unwrap();
        assert!(SectionPoint::new(bad).is_err());
    }

    #[test]
    fn section_point_is_fixed() {
        let sp = section3();
        let (q, g) = canonical_form(sp.point(), 1e-8).unwrap();
        assert_eq!(q, sp);
        assert_eq!(g, Mat::identity(3, 3));
    }

    #[test]
    fn conjugated_section_point_is_recovered() {
        let sp = section3();
        let g0 = m(3, &[1.0, 0.3, -0.2, 0.1, 0.9, 0.4, -0.3, 0.2, 1.2]);
        let p = conjugate(&g0, sp.point()).unwrap();
        let (q, g) = canonical_form(&p, 1e-8).unwrap();
        assert!(linalg::max_abs(&(q.a() - sp.a())) < 1e-10);
        assert!(linalg::max_abs(&(q.b() - sp.b())) < 1e-10);
        let back = conjugate(&g, &p).unwrap();
        assert!(linalg::max_abs(&(back.a() - q.a())) < 1e-10);
    }

    #[test]
    fn n2_minus_pattern() {
        let a = m(2, &[1.5, -0.8, 0.8, -0.5]);
        let p = PhasePoint::new(a, diag(&[-0.5, 0.5])).unwrap();
        let (q, _) = canonical_form(&p, 1e-8).unwrap();
        assert_eq!(q.pattern().signs(), &[-1]);
        assert_eq!(q.a()[(0, 1)], -q.a()[(1, 0)]);
    }

    #[test]
    fn canonical_form_rejects_points_outside_m() {
        let p = PhasePoint::new(diag(&[1.0, 2.0]), diag(&[3.0, 4.0])).unwrap();
        assert!(matches!(canonical_form(&p, 1e-8), Err(Error::NotInM(_))));
        let p = PhasePoint::new(m(2, &[0.0, 1.0, 1.0, 0.0]), Mat::identity(2, 2)).unwrap();
        assert!(matches!(canonical_form(&p, 1e-8), Err(Error::DegenerateGap { .. })));
    }

    #[test]
    fn tangent_vector_of_section_is_untouched() {
        let sp = section3();
        let v = m(3, &[0.1, -0.4, 0.3, 0.4, 0.2, 0.6, -0.2, 0.6, -0.5]);
        let t = TangentPair::new(v, diag(&[0.3, -0.1, 0.7]));
        let d = tangent_decompose(&sp, &t).unwrap();
        assert!(linalg::max_abs(&d.generator) < 1e-15);
        assert!(d.section_tangent.sub(&t).max_abs() < 1e-15);
    }

    #[test]
    fn orbit_direction_recovers_generator() {
        let sp = section3();
        let zeta = m(3, &[0.2, -0.5, 0.3, 0.7, 0.1, -0.4, 0.6, 0.9, -0.3]);
        let t = TangentPair::new(commutator(sp.a(), &zeta), commutator(sp.b(), &zeta));
        let d = tangent_decompose(&sp, &t).unwrap();
        assert!(linalg::max_abs(&(d.generator - &zeta)) < 1e-12);
        assert!(d.section_tangent.max_abs() < 1e-12);
    }

    #[test]
    fn diagonal_system_has_rank_n_minus_1() {
        let sp = section3();
        let s = linalg::singular_values(&diagonal_system(&sp));
        assert_eq!(s.len(), 2);
        assert!(s[1] > 1e-6 * s[0]);
    }

    #[test]
    fn first_flow_is_translation_of_b() {
        let sp = section3();
        let k1 = HierarchyIndex::new(1).unwrap();
        assert_eq!(lax_generator(&sp, k1), Mat::zeros(3, 3));
        let f = projected_flow(&sp, k1);
        assert_eq!(f, TangentPair::new(Mat::zeros(3, 3), Mat::identity(3, 3)));
    }

    #[test]
    fn n2_second_generator() {
        let a = m(2, &[0.3, -0.8, 0.8, -0.1]);
        let b = diag(&[-0.5, 0.7]);
        let sp = SectionPoint::new(PhasePoint::new(a, b).unwrap()).unwrap();
        let xi = lax_generator(&sp, HierarchyIndex::new(2).unwrap());
        let c = 0.8 / 1.2;
        let expected = m(2, &[0.0, c, c, 0.0]);
        assert!(linalg::max_abs(&(xi - expected)) < 1e-15);
    }

    #[test]
    fn projected_flows_are_tangent() {
        let sp = section3();
        for k in 1..=5 {
            let f = projected_flow(&sp, HierarchyIndex::new(k).unwrap());
            assert!(section_tangency_defect(&sp, &f) < 1e-12);
        }
    }
}
