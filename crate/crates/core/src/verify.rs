//! Seeded property suites. Each trial draws its own inputs from an independent
//! stream and returns its largest defect; a run passes when every defect is
//! strictly below the tolerance.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cm::{
    self, bracket_ij, embed_q, embed_q_differential, embed_q_prime, invariants_map, n2_bracket1_xy, n2_delta,
    normalize_to_q, pi_inverse, rank1_check, transported_xy_brackets, xi_closed_form, Coord, Family, RANK1_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{self, commutator, Mat};
use crate::pencil::{
    bracket_numeric, hierarchy_gradient, jacobi_defect, necklace_bracket, nijenhuis_torsion_numeric,
    recursion_transpose_apply, HierarchyIndex, PencilSelector,
};
use crate::phase::{conjugate, PhasePoint, TangentPair};
use crate::reduction::{canonical_form, lax_generator, section_tangency_defect, tangent_decompose, SectionPoint};
use crate::sample::{self, trial_rng};
use crate::word::{Letter, TraceExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Gradients,
    Jacobi,
    Compatibility,
    Ladder,
    Involutivity,
    Torsion,
    ReductionRoundtrip,
    Decomposition,
    Subalgebra,
    Tangency,
    Locus,
    N2Oracle,
    PiRoundtrip,
    Duality,
    Necklace,
}

impl Suite {
    pub const ALL: [Suite; 15] = [
        Suite::Gradients,
        Suite::Jacobi,
        Suite::Compatibility,
        Suite::Ladder,
        Suite::Involutivity,
        Suite::Torsion,
        Suite::ReductionRoundtrip,
        Suite::Decomposition,
        Suite::Subalgebra,
        Suite::Tangency,
        Suite::Locus,
        Suite::N2Oracle,
        Suite::PiRoundtrip,
        Suite::Duality,
        Suite::Necklace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gradients => "gradients",
            Suite::Jacobi => "jacobi",
            Suite::Compatibility => "compatibility",
            Suite::Ladder => "ladder",
            Suite::Involutivity => "involutivity",
            Suite::Torsion => "torsion",
            Suite::ReductionRoundtrip => "reduction-roundtrip",
            Suite::Decomposition => "decomposition",
            Suite::Subalgebra => "subalgebra",
            Suite::Tangency => "tangency",
            Suite::Locus => "locus",
            Suite::N2Oracle => "n2-oracle",
            Suite::PiRoundtrip => "pi-roundtrip",
            Suite::Duality => "duality",
            Suite::Necklace => "necklace",
        }
    }

    /// Tolerance used when none is given.
    pub fn default_tol(self) -> f64 {
        match self {
            Suite::Gradients | Suite::Torsion => 1e-6,
            Suite::Jacobi | Suite::Compatibility => 1e-8,
            Suite::Ladder => 1e-12,
            Suite::Involutivity | Suite::Decomposition | Suite::Duality | Suite::Necklace => 1e-10,
            Suite::ReductionRoundtrip | Suite::Locus | Suite::PiRoundtrip => 1e-8,
            Suite::Subalgebra | Suite::Tangency | Suite::N2Oracle => 1e-9,
        }
    }

    fn min_n(self) -> usize {
        match self {
            Suite::Gradients | Suite::Ladder | Suite::Involutivity | Suite::Necklace | Suite::Duality => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

/// How trials are scheduled. `Parallel` needs the `parallel` feature and falls
/// back to sequential execution without it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    pub max_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_defect: f64,
    pub passed: bool,
    pub trial_results: Vec<TrialResult>,
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig, exec: Execution) -> Result<VerifyReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    if cfg.n < suite.min_n() {
        return Err(Error::InvalidConfig(format!("suite {suite} needs n >= {}", suite.min_n())));
    }
    if cfg.tol.is_nan() || cfg.tol < 0.0 {
        return Err(Error::InvalidConfig("tolerance must be >= 0".into()));
    }
    let n = if suite == Suite::N2Oracle { 2 } else { cfg.n };
    let run = |index: usize| -> Result<TrialResult> {
        let mut rng = trial_rng(cfg.seed, index as u64);
        let max_defect = trial(suite, &mut rng, n)?;
        Ok(TrialResult { index, max_defect })
    };
    let results: Vec<Result<TrialResult>> = match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..cfg.trials).into_par_iter().map(run).collect()
        }
        _ => (0..cfg.trials).map(run).collect(),
    };
    let trial_results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let max_defect = trial_results
        .iter()
        .map(|t| t.max_defect)
        .fold(0.0_f64, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    Ok(VerifyReport {
        suite,
        n,
        trials: cfg.trials,
        seed: cfg.seed,
        tol: cfg.tol,
        max_defect,
        passed: trial_results.iter().all(|t| t.max_defect < cfg.tol),
        trial_results,
    })
}

/// `|a - b| / max(1, |b|)`.
fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

const SELECTORS: [PencilSelector; 2] = [PencilSelector::P0, PencilSelector::P1];
const PENCIL_PARAMS: [f64; 3] = [-1.0, 0.5, 2.0];

fn trial<R: Rng>(suite: Suite, rng: &mut R, n: usize) -> Result<f64> {
    match suite {
        Suite::Gradients => gradients(rng, n),
        Suite::Jacobi => {
            let p = sample::random_phase_point(rng, n);
            jacobi(rng, &p, &SELECTORS)
        }
        Suite::Compatibility => {
            let p = sample::random_phase_point(rng, n);
            let sel = PENCIL_PARAMS.map(PencilSelector::Pencil);
            jacobi(rng, &p, &sel)
        }
        Suite::Ladder => ladder(rng, n),
        Suite::Involutivity => involutivity(rng, n),
        Suite::Torsion => torsion(rng, n),
        Suite::ReductionRoundtrip => reduction_roundtrip(rng, n),
        Suite::Decomposition => decomposition(rng, n),
        Suite::Subalgebra => subalgebra(rng, n),
        Suite::Tangency => tangency(rng, n),
        Suite::Locus => locus(rng, n),
        Suite::N2Oracle => n2_oracle(rng),
        Suite::PiRoundtrip => pi_roundtrip(rng, n),
        Suite::Duality => duality(rng, n),
        Suite::Necklace => necklace(rng, n),
    }
}

fn gradients<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let p = sample::random_phase_point(rng, n);
    let f = TraceExpr::word(sample::random_word(rng, 5), 1.0);
    let g = f.grad(&p);
    let h = 1e-5 * (1.0 + p.norm());
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let dir = TangentPair::new(sample::uniform_matrix(rng, n), sample::uniform_matrix(rng, n));
        let fd = (f.eval(&p.displaced(&dir, h)) - f.eval(&p.displaced(&dir, -h))) / (2.0 * h);
        let exact = crate::phase::pairing(&g, &dir)?;
        worst = worst.max(rel(fd, exact));
    }
    Ok(worst)
}

fn jacobi<R: Rng>(rng: &mut R, p: &PhasePoint, selectors: &[PencilSelector]) -> Result<f64> {
    let f = sample::random_trace_expr(rng, 4);
    let g = sample::random_trace_expr(rng, 4);
    let h = sample::random_trace_expr(rng, 4);
    Ok(selectors
        .iter()
        .map(|&s| jacobi_defect(s, &f, &g, &h, p).abs())
        .fold(0.0, f64::max))
}

fn ladder<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let p = sample::random_phase_point(rng, n);
    let mut worst = 0.0_f64;
    for k in 1..=2 * n {
        let lifted = recursion_transpose_apply(&p, &hierarchy_gradient(HierarchyIndex::new(k)?, &p));
        let next = hierarchy_gradient(HierarchyIndex::new(k + 1)?, &p);
        worst = worst.max(lifted.sub(&next).max_abs());
    }
    Ok(worst)
}

fn involutivity<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let p = sample::random_phase_point(rng, n);
    let mut worst = 0.0_f64;
    for k in 1..=2 * n {
        for l in 1..=2 * n {
            for s in SELECTORS {
                worst = worst.max(bracket_numeric(s, &TraceExpr::i_k(k), &TraceExpr::i_k(l), &p).abs());
            }
        }
    }
    Ok(worst)
}

fn torsion<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let p = sample::random_phase_point(rng, n);
    let t1 = TangentPair::new(sample::uniform_matrix(rng, n), sample::uniform_matrix(rng, n));
    let t2 = TangentPair::new(sample::uniform_matrix(rng, n), sample::uniform_matrix(rng, n));
    let h = 1e-3 * (1.0 + p.norm());
    let t = nijenhuis_torsion_numeric(&p, &t1, &t2, h)?;
    Ok(t.max_abs() / (1.0 + p.norm().powi(2)))
}

fn reduction_roundtrip<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let q = sample::random_section_point(rng, n)?;
    let g = sample::well_conditioned_g(rng, n)?;
    let p = conjugate(&g, q.point())?;
    let (back, g_back) = canonical_form(&p, crate::phase::DEFAULT_TOL)?;
    let entry = linalg::max_abs(&(back.a() - q.a())).max(linalg::max_abs(&(back.b() - q.b())));
    // the returned conjugator must map p onto the representative
    let mapped = conjugate(&g_back, &p)?;
    let map_err = linalg::max_abs(&(mapped.a() - back.a())).max(linalg::max_abs(&(mapped.b() - back.b())));
    let pattern = if back.pattern() == q.pattern() { 0.0 } else { f64::INFINITY };
    Ok(entry.max(map_err).max(pattern))
}

fn decomposition<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let sp = sample::random_section_point(rng, n)?;
    let t = TangentPair::new(sample::uniform_matrix(rng, n), sample::uniform_matrix(rng, n));
    let d = tangent_decompose(&sp, &t)?;
    let orbit = TangentPair::new(commutator(sp.a(), &d.generator), commutator(sp.b(), &d.generator));
    let residual = t.sub(&d.section_tangent).sub(&orbit).max_abs() / (1.0 + t.max_abs());
    let tangency = section_tangency_defect(&sp, &d.section_tangent) / (1.0 + t.max_abs());
    let again = tangent_decompose(&sp, &d.section_tangent)?;
    let direct = linalg::max_abs(&again.generator) / (1.0 + t.max_abs());
    Ok(residual.max(tangency).max(direct))
}

fn subalgebra<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let p = sample::random_m_point(rng, n)?;
    let v = invariants_map(&p);
    let expr = |f: Family, k: usize| match f {
        Family::I => TraceExpr::i_k(k),
        Family::J => TraceExpr::j_k(k),
    };
    let mut worst = 0.0_f64;
    for s in SELECTORS {
        for f in [Family::I, Family::J] {
            for g in [Family::I, Family::J] {
                for k in 1..=n {
                    for l in 1..=n {
                        let closed = bracket_ij(s, (f, k), (g, l), n)?.eval(&v.i, &v.j)?;
                        let (fe, ge) = (expr(f, k), expr(g, l));
                        let numeric = bracket_numeric(s, &fe, &ge, &p);
                        let lifted = necklace_bracket(s, &fe, &ge).eval(&p);
                        worst = worst.max(rel(numeric, closed)).max(rel(lifted, closed));
                    }
                }
            }
        }
    }
    Ok(worst)
}

fn tangency<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let c = sample::random_cm_state(rng, n)?;
    let p = embed_q(&c);
    let sp = SectionPoint::new(p.clone())?;
    let mut worst = 0.0_f64;
    for k in 1..=n {
        let k = HierarchyIndex::new(k)?;
        let closed = trace_free(&xi_closed_form(&c, k));
        let generator = lax_generator(&sp, k);
        worst = worst.max(linalg::max_abs(&(generator - &closed)) / (1.0 + linalg::max_abs(&closed)));
        let (xd, yd) = cm::cm_flow(&c, k);
        let t = embed_q_differential(&c, &xd, &yd);
        let preserved = commutator(&t.w, p.a()) + commutator(p.b(), &t.v);
        worst = worst.max(linalg::max_abs(&preserved) / (1.0 + t.max_abs()));
    }
    Ok(worst)
}

fn trace_free(m: &Mat) -> Mat {
    let n = m.nrows();
    let t = m.trace() / n as f64;
    m - Mat::identity(n, n) * t
}

fn locus<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let c = sample::random_cm_state(rng, n)?;
    let g = sample::well_conditioned_g(rng, n)?;
    let p = conjugate(&g, &embed_q(&c))?;
    let negative = sample::random_m_point(rng, n)?;
    if !rank1_check(&p, RANK1_TOL) || rank1_check(&negative, RANK1_TOL) {
        return Ok(f64::INFINITY);
    }
    let back = normalize_to_q(&p, RANK1_TOL)?;
    Ok(back
        .x()
        .iter()
        .zip(c.x())
        .chain(back.y().iter().zip(c.y()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn n2_oracle<R: Rng>(rng: &mut R) -> Result<f64> {
    let c = loop {
        let c = sample::random_cm_state(rng, 2)?;
        if n2_delta(&c)?.abs() > 0.1 {
            break c;
        }
    };
    let t1 = transported_xy_brackets(&c, PencilSelector::P1)?;
    let t0 = transported_xy_brackets(&c, PencilSelector::P0)?;
    let mut worst = 0.0_f64;
    for f in Coord::ALL {
        for g in Coord::ALL {
            let closed = n2_bracket1_xy(&c, f, g)?;
            worst = worst.max(rel(t1[(f.index(), g.index())], closed));
            let canonical = match (f.index(), g.index()) {
                (a, b) if b == a + 2 => 1.0,
                (a, b) if a == b + 2 => -1.0,
                _ => 0.0,
            };
            worst = worst.max((t0[(f.index(), g.index())] - canonical).abs());
        }
    }
    let v = invariants_map(&embed_q(&c));
    let in_image = 4.0 * v.i[1] - v.i[0].powi(2) > 0.0 && (v.j[1] - 0.5 * v.i[0] * v.j[0]).abs() > 1.0;
    Ok(if in_image { worst } else { f64::INFINITY })
}

fn pi_roundtrip<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let q = sample::random_q_prime(rng, n)?;
    let v = invariants_map(&embed_q_prime(&q));
    let back = pi_inverse(&v, crate::phase::DEFAULT_TOL)?;
    Ok(back
        .lambda
        .iter()
        .zip(&q.lambda)
        .chain(back.mu.iter().zip(&q.mu))
        .map(|(a, b)| rel(*a, *b))
        .fold(0.0, f64::max))
}

fn duality<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let p = sample::random_phase_point(rng, n);
    let q = cm::duality_swap(&p);
    let f = sample::random_trace_expr(rng, 4);
    let g = sample::random_trace_expr(rng, 4);
    let pull = |e: &TraceExpr| e.substitute((-1.0, Letter::B), (1.0, Letter::A));
    let mut worst = 0.0_f64;
    for s in SELECTORS {
        let pushed = bracket_numeric(s, &pull(&f), &pull(&g), &p);
        let exchanged = cm::exchanged_bracket(s, &f, &g, &q);
        worst = worst.max(rel(pushed, exchanged));
    }
    let direct = invariants_map(&q);
    let primed = cm::primed_invariants(&p);
    for k in 0..n {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        worst = worst.max(rel(direct.i[k], sign * primed.i[k]));
        worst = worst.max(rel(direct.j[k], -sign * primed.j[k]));
    }
    Ok(worst)
}

fn necklace<R: Rng>(rng: &mut R, n: usize) -> Result<f64> {
    let p = sample::random_phase_point(rng, n);
    let f = sample::random_trace_expr(rng, 5);
    let g = sample::random_trace_expr(rng, 5);
    Ok(SELECTORS
        .iter()
        .map(|&s| rel(necklace_bracket(s, &f, &g).eval(&p), bracket_numeric(s, &f, &g, &p)))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, trials: usize, seed: u64, tol: f64) -> VerifyConfig {
        VerifyConfig { n, trials, seed, tol }
    }

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!(matches!("nope".parse::<Suite>(), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn every_suite_passes_small_runs() {
        for s in Suite::ALL {
            let r = run_suite(s, &cfg(3, 4, 11, s.default_tol()), Execution::Sequential).unwrap();
            assert!(r.passed, "{s}: {}", r.max_defect);
        }
    }

    #[test]
    fn zero_tolerance_fails() {
        let r = run_suite(Suite::Jacobi, &cfg(3, 3, 1, 0.0), Execution::Sequential).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn execution_modes_agree() {
        let c = cfg(3, 8, 5, 1e-8);
        let a = run_suite(Suite::Subalgebra, &c, Execution::Sequential).unwrap();
        let b = run_suite(Suite::Subalgebra, &c, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
