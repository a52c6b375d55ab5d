//! The Poisson pair `(P0, P1)` on gl(n) x gl(n), its recursion operator and hierarchy.
//!
//! Sign conventions are anchored by two printed values: `{tr B, tr A}_0 = n` and
//! `X_k = -P0 dH_k = (0, A^(k-1))`. Brackets are `{f, g} = <dg, P df>`, which gives
//!
//! ```text
//! {f, g}_0 = tr(eta_f xi_g - eta_g xi_f)
//! {f, g}_1 = tr(A (eta_f xi_g - eta_g xi_f) + B [eta_f, eta_g])
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, commutator, Mat};
use crate::phase::{pairing, CovectorPair, PhasePoint, TangentPair};
use crate::word::{opened_at, Letter, TraceExpr, Word};

/// Which member of the pencil `P0 + t P1` to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PencilSelector {
    P0,
    P1,
    /// `P0 + t P1`
    Pencil(f64),
}

impl PencilSelector {
    /// Weights `(w0, w1)` with `P = w0 P0 + w1 P1`.
    pub fn weights(self) -> (f64, f64) {
        match self {
            PencilSelector::P0 => (1.0, 0.0),
            PencilSelector::P1 => (0.0, 1.0),
            PencilSelector::Pencil(t) => (1.0, t),
        }
    }
}

/// Index `k >= 1` of the hierarchy `H_k = tr(A^k) / k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HierarchyIndex(usize);

impl HierarchyIndex {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::IndexOutOfRange("hierarchy index must be >= 1".into()));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// `(xi, eta) -> (eta, -xi)`.
pub fn p0_apply(c: &CovectorPair) -> TangentPair {
    TangentPair::new(c.eta.clone(), -&c.xi)
}

/// `(xi, eta) -> (A eta, -xi A + [B, eta])`.
pub fn p1_apply(p: &PhasePoint, c: &CovectorPair) -> TangentPair {
    TangentPair::new(
        p.a() * &c.eta,
        -(&c.xi * p.a()) + commutator(p.b(), &c.eta),
    )
}

pub fn pencil_apply(s: PencilSelector, p: &PhasePoint, c: &CovectorPair) -> TangentPair {
    match s {
        PencilSelector::P0 => p0_apply(c),
        PencilSelector::P1 => p1_apply(p, c),
        PencilSelector::Pencil(t) => p0_apply(c).add(&p1_apply(p, c).scale(t)),
    }
}

/// `N = P1 P0^-1`: `(V, W) -> (A V, [B, V] + W A)`.
pub fn recursion_apply(p: &PhasePoint, t: &TangentPair) -> TangentPair {
    TangentPair::new(p.a() * &t.v, commutator(p.b(), &t.v) + &t.w * p.a())
}

/// Transpose of `N` under the trace pairing: `(xi, eta) -> (xi A + [eta, B], A eta)`.
pub fn recursion_transpose_apply(p: &PhasePoint, c: &CovectorPair) -> CovectorPair {
    CovectorPair::new(&c.xi * p.a() + commutator(&c.eta, p.b()), p.a() * &c.eta)
}

/// `<dg, P df>` from the two differentials, evaluated as
/// `(<dg, P df> - <df, P dg>) / 2` so that antisymmetry holds bit for bit.
pub fn bracket_of_covectors(
    s: PencilSelector,
    p: &PhasePoint,
    df: &CovectorPair,
    dg: &CovectorPair,
) -> f64 {
    let fg = pairing(dg, &pencil_apply(s, p, df)).expect("covectors built at p share its dimension");
    let gf = pairing(df, &pencil_apply(s, p, dg)).expect("covectors built at p share its dimension");
    0.5 * (fg - gf)
}

pub fn bracket_numeric(s: PencilSelector, f: &TraceExpr, g: &TraceExpr, p: &PhasePoint) -> f64 {
    bracket_of_covectors(s, p, &f.grad(p), &g.grad(p))
}

/// Closed-form bracket of two trace expressions, again a trace expression.
pub fn necklace_bracket(s: PencilSelector, f: &TraceExpr, g: &TraceExpr) -> TraceExpr {
    let (w0, w1) = s.weights();
    let mut out = TraceExpr::zero();
    for (fw, fc) in f.terms() {
        for (gw, gc) in g.terms() {
            let c = fc * gc;
            if w0 != 0.0 {
                necklace0_words(fw, gw, c * w0, &mut out);
            }
            if w1 != 0.0 {
                necklace1_words(fw, gw, c * w1, &mut out);
            }
        }
    }
    out
}

fn concat(parts: &[&[Letter]]) -> Word {
    Word::new(parts.iter().flat_map(|p| p.iter().copied()).collect())
}

fn necklace0_words(f: &Word, g: &Word, c: f64, out: &mut TraceExpr) {
    let (a, b) = (f.letters(), g.letters());
    for (i, &ai) in a.iter().enumerate() {
        let open_a = opened_at(a, i);
        for (j, &bj) in b.iter().enumerate() {
            match (ai, bj) {
                (Letter::B, Letter::A) => {
                    out.add_term(concat(&[&open_a, &opened_at(b, j)]), c);
                }
                (Letter::A, Letter::B) => {
                    out.add_term(concat(&[&opened_at(b, j), &open_a]), -c);
                }
                _ => {}
            }
        }
    }
}

fn necklace1_words(f: &Word, g: &Word, c: f64, out: &mut TraceExpr) {
    let (a, b) = (f.letters(), g.letters());
    for (i, &ai) in a.iter().enumerate() {
        let open_a = opened_at(a, i);
        for (j, &bj) in b.iter().enumerate() {
            let open_b = opened_at(b, j);
            match (ai, bj) {
                (Letter::B, Letter::A) => {
                    out.add_term(concat(&[&[Letter::A], &open_a, &open_b]), c);
                }
                (Letter::A, Letter::B) => {
                    out.add_term(concat(&[&[Letter::A], &open_b, &open_a]), -c);
                }
                (Letter::B, Letter::B) => {
                    out.add_term(concat(&[&[Letter::B], &open_a, &open_b]), c);
                    out.add_term(concat(&[&[Letter::B], &open_b, &open_a]), -c);
                }
                (Letter::A, Letter::A) => {}
            }
        }
    }
}

/// `H_k = tr(A^k) / k`.
pub fn hierarchy_hamiltonian(k: HierarchyIndex, p: &PhasePoint) -> f64 {
    linalg::power(p.a(), k.get()).trace() / k.get() as f64
}

/// `dH_k = (A^(k-1), 0)`.
pub fn hierarchy_gradient(k: HierarchyIndex, p: &PhasePoint) -> CovectorPair {
    let n = p.n();
    CovectorPair::new(linalg::power(p.a(), k.get() - 1), Mat::zeros(n, n))
}

/// `X_k = -P0 dH_k = (0, A^(k-1))`.
pub fn hierarchy_field(k: HierarchyIndex, p: &PhasePoint) -> TangentPair {
    p0_apply(&hierarchy_gradient(k, p)).scale(-1.0)
}

/// Cyclic sum `{f,{g,h}} + {g,{h,f}} + {h,{f,g}}` at `p`. Inner brackets are
/// closed-form trace expressions; only the outer bracket is evaluated numerically.
pub fn jacobi_defect(
    s: PencilSelector,
    f: &TraceExpr,
    g: &TraceExpr,
    h: &TraceExpr,
    p: &PhasePoint,
) -> f64 {
    let term = |x: &TraceExpr, y: &TraceExpr, z: &TraceExpr| {
        bracket_numeric(s, x, &necklace_bracket(s, y, z), p)
    };
    term(f, g, h) + term(g, h, f) + term(h, f, g)
}

/// Nijenhuis torsion of `N` at `p` on the constant fields `t1`, `t2`:
/// `[NX, NY] - N([NX, Y] + [X, NY] - N[X, Y])`, with the Lie brackets taken by
/// central differences of step `h`.
pub fn nijenhuis_torsion_numeric(
    p: &PhasePoint,
    t1: &TangentPair,
    t2: &TangentPair,
    h: f64,
) -> Result<TangentPair> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig("finite-difference step must be > 0".into()));
    }
    // D(N u)(p)[z]
    let dn = |u: &TangentPair, z: &TangentPair| {
        let plus = recursion_apply(&p.displaced(z, h), u);
        let minus = recursion_apply(&p.displaced(z, -h), u);
        plus.sub(&minus).scale(0.5 / h)
    };
    let nx = recursion_apply(p, t1);
    let ny = recursion_apply(p, t2);
    // [U, V] = DV[U] - DU[V]; constant fields have zero derivative
    let nx_ny = dn(t2, &nx).sub(&dn(t1, &ny));
    let nx_y = dn(t1, t2).scale(-1.0);
    let x_ny = dn(t2, t1);
    let inner = nx_y.add(&x_ny);
    Ok(nx_ny.sub(&recursion_apply(p, &inner)))
}
