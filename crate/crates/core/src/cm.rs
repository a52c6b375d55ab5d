//! Invariants `(I, J)`, their bracket tables, the Calogero-Moser locus and its
//! flows, inversion of the invariant map, the `n = 2` coordinate brackets and the
//! duality swap.

use nalgebra::{DVector, SVD};
use num::{BigRational, FromPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, commutator, Mat};
use crate::newton;
use crate::pencil::{bracket_of_covectors, HierarchyIndex, PencilSelector};
use crate::phase::{pairing, CovectorPair, PhasePoint, TangentPair};
use crate::poly::{i_poly, j_poly, rational, Poly};
use crate::reduction::SectionPoint;
use crate::word::TraceExpr;

/// Default threshold for `sigma_2 < tol * sigma_1`.
pub const RANK1_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantVector {
    #[serde(rename = "I")]
    pub i: Vec<f64>,
    #[serde(rename = "J")]
    pub j: Vec<f64>,
}

impl InvariantVector {
    pub fn new(i: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        if i.len() != j.len() {
            return Err(Error::DimensionMismatch {
                expected: i.len(),
                got: j.len(),
            });
        }
        if i.is_empty() {
            return Err(Error::InvalidState("n must be positive".into()));
        }
        if i.iter().chain(&j).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("invariants"));
        }
        Ok(Self { i, j })
    }

    pub fn n(&self) -> usize {
        self.i.len()
    }
}

/// Ordered positions `x` and momenta `y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CMState {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl CMState {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::InvalidState("n must be positive".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("particle coordinates"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidState(
                "positions must be strictly increasing".into(),
            ));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

impl<'de> Deserialize<'de> for CMState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            x: Vec<f64>,
            y: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        CMState::new(raw.x, raw.y).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues `lambda` (ascending) of the diagonal member and the diagonal
/// `mu` of the Lax-type member of a point of the alternative section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QPrimeData {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

impl QPrimeData {
    pub fn new(lambda: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if lambda.len() != mu.len() {
            return Err(Error::DimensionMismatch {
                expected: lambda.len(),
                got: mu.len(),
            });
        }
        if lambda.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidState("lambda must be strictly increasing".into()));
        }
        Ok(Self { lambda, mu })
    }

    /// Invariants of any point with `A = diag(lambda)` and `diag(B) = mu`:
    /// `I_k = sum lambda^k / k`, `J_k = sum mu lambda^(k-1)`.
    pub fn invariants(&self) -> InvariantVector {
        let n = self.lambda.len();
        let i = (1..=n)
            .map(|k| self.lambda.iter().map(|l| l.powi(k as i32)).sum::<f64>() / k as f64)
            .collect();
        let j = (1..=n)
            .map(|k| {
                self.lambda
                    .iter()
                    .zip(&self.mu)
                    .map(|(l, m)| m * l.powi(k as i32 - 1))
                    .sum()
            })
            .collect();
        InvariantVector { i, j }
    }
}

/// The pair `(diag(lambda), L')` with `L'_ii = mu_i` and off-diagonal entries
/// chosen so that `[B, A] = mu`.
pub fn embed_q_prime(q: &QPrimeData) -> PhasePoint {
    let l = &q.lambda;
    let n = l.len();
    let b = Mat::from_fn(n, n, |i, j| if i == j { q.mu[i] } else { 1.0 / (l[j] - l[i]) });
    PhasePoint::new(linalg::diag(l), b).expect("finite for strictly increasing lambda")
}

/// `mu_ij = 1 - delta_ij`.
pub fn mu_matrix(n: usize) -> Mat {
    Mat::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 })
}

/// `I_k = tr(A^k) / k`, `J_k = tr(A^(k-1) B)` for `k = 1..n`.
pub fn invariants_map(p: &PhasePoint) -> InvariantVector {
    let n = p.n();
    let mut i = Vec::with_capacity(n);
    let mut j = Vec::with_capacity(n);
    let mut pow = Mat::identity(n, n);
    for k in 1..=n {
        j.push(crate::phase::trace_of_product(&pow, p.b()));
        pow = &pow * p.a();
        i.push(pow.trace() / k as f64);
    }
    InvariantVector { i, j }
}

/// Family of an invariant function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    I,
    J,
}

/// Closed-form bracket `{F_k, G_l}_s` as a polynomial in `I_1..I_n, J_1..J_n`,
/// reducing indices above `n`.
pub fn bracket_ij(
    s: PencilSelector,
    f: (Family, usize),
    g: (Family, usize),
    n: usize,
) -> Result<Poly> {
    for &(_, k) in &[f, g] {
        if k == 0 || k > n {
            return Err(Error::IndexOutOfRange(format!("index {k} not in 1..={n}")));
        }
    }
    let (w0, w1) = s.weights();
    let mut out = Poly::zero(n);
    if w0 != 0.0 {
        let t = table_entry(0, f, g, n)?;
        out = out.plus(&t.scale(&exact(w0)?));
    }
    if w1 != 0.0 {
        let t = table_entry(1, f, g, n)?;
        out = out.plus(&t.scale(&exact(w1)?));
    }
    Ok(out)
}

fn exact(w: f64) -> Result<BigRational> {
    BigRational::from_f64(w).ok_or(Error::NonFinite("pencil parameter"))
}

fn table_entry(s: usize, f: (Family, usize), g: (Family, usize), n: usize) -> Result<Poly> {
    let int = |v: i64| rational(v, 1);
    match (f, g) {
        ((Family::I, _), (Family::I, _)) => Ok(Poly::zero(n)),
        ((Family::I, _), (Family::J, _)) => Ok(table_entry(s, g, f, n)?.scale(&int(-1))),
        ((Family::J, l), (Family::I, k)) => {
            if s == 0 && k == 1 && l == 1 {
                return Ok(Poly::constant(n, int(n as i64)));
            }
            let m = k + l + s - 2;
            Ok(i_poly(n, m)?.scale(&int(m as i64)))
        }
        ((Family::J, k), (Family::J, l)) => {
            if k == l {
                return Ok(Poly::zero(n));
            }
            let m = k + l + s - 2;
            Ok(j_poly(n, m)?.scale(&int(l as i64 - k as i64)))
        }
    }
}

/// `L_ii = y_i`, `L_ij = 1 / (x_i - x_j)`.
pub fn lax_matrix(c: &CMState) -> Mat {
    let (x, y) = (c.x(), c.y());
    Mat::from_fn(c.n(), c.n(), |i, j| {
        if i == j {
            y[i]
        } else {
            1.0 / (x[i] - x[j])
        }
    })
}

/// `(L, diag(x))`.
pub fn embed_q(c: &CMState) -> PhasePoint {
    PhasePoint::new(lax_matrix(c), linalg::diag(c.x()))
        .expect("Lax matrix of a valid state is finite and square")
}

/// `[B, A] + I`.
pub fn moment_plus_identity(p: &PhasePoint) -> Mat {
    commutator(p.b(), p.a()) + Mat::identity(p.n(), p.n())
}

/// Whether `[B, A] + I` has numerical rank one: `sigma_2 < tol * sigma_1`.
pub fn rank1_check(p: &PhasePoint, tol: f64) -> bool {
    rank1_ratio(p) < tol
}

/// `sigma_2 / sigma_1` of `[B, A] + I` (0 for `n = 1`).
pub fn rank1_ratio(p: &PhasePoint) -> f64 {
    let s = linalg::singular_values(&moment_plus_identity(p));
    match s.as_slice() {
        [] => f64::INFINITY,
        [_] => 0.0,
        [s1, s2, ..] if *s1 > 0.0 => s2 / s1,
        _ => f64::INFINITY,
    }
}

/// Recovers the particle state of a point in the orbit of the locus.
pub fn normalize_to_q(p: &PhasePoint, tol: f64) -> Result<CMState> {
    let ratio = rank1_ratio(p);
    if !(ratio < tol) {
        return Err(Error::RankOneFailure { ratio });
    }
    let eig = linalg::real_eigen(p.b(), crate::phase::DEFAULT_TOL)
        .map_err(|e| Error::NotInM(format!("B: {e:?}")))?;
    let s = &eig.vectors;
    let s_inv = s.clone().try_inverse().ok_or(Error::SingularMatrix)?;
    let a = &s_inv * p.a() * s;
    let k = &s_inv * moment_plus_identity(p) * s;
    let n = p.n();
    let scale = 1.0 + linalg::max_abs(&k);
    let check = tol.max(1e-12) * scale;
    for i in 0..n {
        if (k[(i, i)] - 1.0).abs() > check {
            return Err(Error::InvalidState(format!(
                "K_{0}{0} = {1} deviates from 1",
                i + 1,
                k[(i, i)]
            )));
        }
    }
    // K = a b^T with b_i = 1 / a_i; after conjugating by diag(1/a) all entries are 1
    let col = (0..n)
        .max_by(|&u, &v| k.column(u).norm().total_cmp(&k.column(v).norm()))
        .expect("n >= 1");
    let a_vec: Vec<f64> = (0..n).map(|i| k[(i, col)] / k[(col, col)]).collect();
    if a_vec.iter().any(|v| v.abs() < check) {
        return Err(Error::RankOneFailure { ratio });
    }
    for i in 0..n {
        for j in 0..n {
            let normalized = k[(i, j)] * a_vec[j] / a_vec[i];
            if (normalized - 1.0).abs() > 1e3 * check {
                return Err(Error::InvalidState(format!(
                    "gauge-fixed K_{}{} = {normalized} is not 1",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let y = (0..n).map(|i| a[(i, i)]).collect();
    CMState::new(eig.values, y)
}

/// Generator `xi_k` of the k-th flow at a locus point:
/// `xi_ij = (L^(k-1))_ij / (x_i - x_j)`, `xi_ii = -1/2 sum_{l != i} (xi_il + xi_li)`.
pub fn xi_closed_form(c: &CMState, k: HierarchyIndex) -> Mat {
    let n = c.n();
    let x = c.x();
    let pow = linalg::power(&lax_matrix(c), k.get() - 1);
    let mut xi = Mat::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            pow[(i, j)] / (x[i] - x[j])
        }
    });
    for i in 0..n {
        let s: f64 = (0..n).filter(|&l| l != i).map(|l| xi[(i, l)] + xi[(l, i)]).sum();
        xi[(i, i)] = -0.5 * s;
    }
    xi
}

/// Velocities `(x', y')` of the k-th flow: `x'_i = (L^(k-1))_ii`,
/// `y'_i = [xi_k, L]_ii`.
pub fn cm_flow(c: &CMState, k: HierarchyIndex) -> (Vec<f64>, Vec<f64>) {
    let l = lax_matrix(c);
    let pow = linalg::power(&l, k.get() - 1);
    let xi = xi_closed_form(c, k);
    let lie = commutator(&xi, &l);
    let n = c.n();
    ((0..n).map(|i| pow[(i, i)]).collect(), (0..n).map(|i| lie[(i, i)]).collect())
}

/// Tangent vectors `d(embed_q)/dx_i` then `d(embed_q)/dy_i`.
pub fn embed_q_tangents(c: &CMState) -> Vec<TangentPair> {
    let n = c.n();
    let x = c.x();
    let mut out = Vec::with_capacity(2 * n);
    for m in 0..n {
        let v = Mat::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else if i == m {
                -1.0 / (x[i] - x[j]).powi(2)
            } else if j == m {
                1.0 / (x[i] - x[j]).powi(2)
            } else {
                0.0
            }
        });
        let mut w = Mat::zeros(n, n);
        w[(m, m)] = 1.0;
        out.push(TangentPair::new(v, w));
    }
    for m in 0..n {
        let mut v = Mat::zeros(n, n);
        v[(m, m)] = 1.0;
        out.push(TangentPair::new(v, Mat::zeros(n, n)));
    }
    out
}

/// Pushes a velocity `(x', y')` forward to the pair: `(dL, dB)`.
pub fn embed_q_differential(c: &CMState, xdot: &[f64], ydot: &[f64]) -> TangentPair {
    let n = c.n();
    let mut t = TangentPair::zeros(n);
    for (m, basis) in embed_q_tangents(c).iter().enumerate() {
        let coeff = if m < n { xdot[m] } else { ydot[m - n] };
        t = t.add(&basis.scale(coeff));
    }
    t
}

/// Gradients of `I_1..I_n, J_1..J_n` at `p`.
pub fn invariant_gradients(p: &PhasePoint) -> Vec<CovectorPair> {
    let n = p.n();
    (1..=n)
        .map(|k| TraceExpr::i_k(k).grad(p))
        .chain((1..=n).map(|k| TraceExpr::j_k(k).grad(p)))
        .collect()
}

/// `2n x 2n` Jacobian of `(I, J)` with respect to `(x, y)` along the locus.
pub fn invariants_jacobian_q(c: &CMState) -> Mat {
    let p = embed_q(c);
    let grads = invariant_gradients(&p);
    let tangents = embed_q_tangents(c);
    Mat::from_fn(grads.len(), tangents.len(), |r, s| {
        pairing(&grads[r], &tangents[s]).expect("same dimension")
    })
}

/// Bracket matrix `{F_a, F_b}_s` of the invariants from the closed-form table.
pub fn invariant_bracket_matrix(s: PencilSelector, v: &InvariantVector) -> Result<Mat> {
    let n = v.n();
    let fam = |a: usize| if a < n { (Family::I, a + 1) } else { (Family::J, a - n + 1) };
    let mut m = Mat::zeros(2 * n, 2 * n);
    for a in 0..2 * n {
        for b in 0..2 * n {
            m[(a, b)] = bracket_ij(s, fam(a), fam(b), n)?.eval(&v.i, &v.j)?;
        }
    }
    Ok(m)
}

/// Brackets of the coordinates `(x, y)` obtained by transporting the invariant
/// table through the Jacobian: `Pi_z = Jac^-1 Pi_F Jac^-T`.
pub fn transported_xy_brackets(c: &CMState, s: PencilSelector) -> Result<Mat> {
    let jac = invariants_jacobian_q(c);
    let pi_f = invariant_bracket_matrix(s, &invariants_map(&embed_q(c)))?;
    let cond = linalg::condition_number(&jac);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::IllConditioned(cond));
    }
    let inv = jac.try_inverse().ok_or(Error::SingularMatrix)?;
    Ok(&inv * pi_f * inv.transpose())
}

/// A coordinate of the two-particle phase space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coord {
    X1,
    X2,
    Y1,
    Y2,
}

impl Coord {
    pub const ALL: [Coord; 4] = [Coord::X1, Coord::X2, Coord::Y1, Coord::Y2];

    /// Position in the order `x1, x2, y1, y2`.
    pub fn index(self) -> usize {
        self as usize
    }
}

/// `Delta = 4 x12^2 - (y1 - y2)^2` with `x12 = 1 / (x1 - x2)`.
pub fn n2_delta(c: &CMState) -> Result<f64> {
    if c.n() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: c.n(),
        });
    }
    let x12 = 1.0 / (c.x()[0] - c.x()[1]);
    let dy = c.y()[0] - c.y()[1];
    Ok(4.0 * x12 * x12 - dy * dy)
}

/// Second bracket of two coordinates for `n = 2`.
pub fn n2_bracket1_xy(c: &CMState, f: Coord, g: Coord) -> Result<f64> {
    let delta = n2_delta(c)?;
    let x12 = 1.0 / (c.x()[0] - c.x()[1]);
    let (y1, y2) = (c.y()[0], c.y()[1]);
    let guard = 1e-10 * (1.0 + 4.0 * x12 * x12 + (y1 - y2).powi(2));
    if delta.abs() < guard {
        return Err(Error::SingularBracket(delta));
    }
    let cross = (y1 - y2) * x12 * x12 / delta;
    use Coord::*;
    let upper = |f: Coord, g: Coord| -> Option<f64> {
        match (f, g) {
            (X1, X2) => Some(2.0 * x12 / delta),
            (X1, Y1) => Some(y1 + cross),
            (X2, Y2) => Some(y2 - cross),
            (Y2, X1) => Some(cross),
            (X2, Y1) => Some(cross),
            (Y1, Y2) => Some(-2.0 * x12.powi(3)),
            _ => None,
        }
    };
    if f == g {
        return Ok(0.0);
    }
    Ok(upper(f, g)
        .or_else(|| upper(g, f).map(|v| -v))
        .expect("every unordered pair is listed"))
}

/// Recovers `(lambda, mu)` from invariants: power sums give the characteristic
/// polynomial, its roots give `lambda`, and a Vandermonde solve gives `mu`.
pub fn pi_inverse(v: &InvariantVector, tol: f64) -> Result<QPrimeData> {
    let n = v.n();
    let p: Vec<f64> = v.i.iter().enumerate().map(|(k, i)| (k + 1) as f64 * i).collect();
    let e = newton::elementary_from_power_sums(&p);
    let lambda = newton::real_roots_from_elementary(&e, tol)?;
    let vand = Mat::from_fn(n, n, |k, l| lambda[l].powi(k as i32));
    let cond = linalg::condition_number(&vand);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::IllConditioned(cond));
    }
    let rhs = DVector::from_column_slice(&v.j);
    let mu = vand
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularMatrix)?;
    QPrimeData::new(lambda, mu.iter().copied().collect())
}

/// `(A, B) -> (-B, A)`.
pub fn duality_swap(p: &PhasePoint) -> PhasePoint {
    PhasePoint::new(-p.b(), p.a().clone()).expect("swap preserves validity")
}

/// `I'_k = tr(B^k) / k`, `J'_k = tr(B^(k-1) A)`.
pub fn primed_invariants(p: &PhasePoint) -> InvariantVector {
    let swapped = PhasePoint::new(p.b().clone(), p.a().clone()).expect("valid");
    invariants_map(&swapped)
}

/// Bracket of `f, g` in the structure obtained by exchanging the roles of the
/// two factors, with reversed orientation: the pair `(B, A)` with covectors
/// `(eta, xi)`, negated.
pub fn exchanged_bracket(s: PencilSelector, f: &TraceExpr, g: &TraceExpr, p: &PhasePoint) -> f64 {
    let swap = |c: CovectorPair| CovectorPair::new(c.eta, c.xi);
    let q = PhasePoint::new(p.b().clone(), p.a().clone()).expect("valid");
    -bracket_of_covectors(s, &q, &swap(f.grad(p)), &swap(g.grad(p)))
}

/// `2n x (n^2 + 1)` Jacobian of the invariants along the section, in the
/// coordinates `B_11..B_nn`, then the entries of `A` with each pair
/// `(A_{i+1,i}, A_{i,i+1})` merged into one coordinate.
pub fn invariants_jacobian_on_section(sp: &SectionPoint) -> Mat {
    let n = sp.n();
    let mut dirs = Vec::with_capacity(n * n + 1);
    for m in 0..n {
        let mut w = Mat::zeros(n, n);
        w[(m, m)] = 1.0;
        dirs.push(TangentPair::new(Mat::zeros(n, n), w));
    }
    for i in 0..n {
        for j in 0..n {
            if j == i + 1 {
                continue;
            }
            let mut v = Mat::zeros(n, n);
            v[(i, j)] = 1.0;
            if i == j + 1 {
                v[(j, i)] = sp.pattern().sign(j);
            }
            dirs.push(TangentPair::new(v, Mat::zeros(n, n)));
        }
    }
    let grads = invariant_gradients(sp.point());
    Mat::from_fn(grads.len(), dirs.len(), |r, s| {
        pairing(&grads[r], &dirs[s]).expect("same dimension")
    })
}

/// Ratio of the smallest to the largest of the `2n` singular values of the
/// section Jacobian.
pub fn submersion_ratio(sp: &SectionPoint) -> f64 {
    let svd = SVD::new(invariants_jacobian_on_section(sp), false, false);
    let s = svd.singular_values;
    let max = s.max();
    let min = s.min();
    if max > 0.0 {
        min / max
    } else {
        0.0
    }
}
