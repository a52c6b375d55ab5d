//! Fixed-step RK4 integration of the hierarchy flows on the section and on the
//! Calogero-Moser locus, with conservation diagnostics.

use serde::{Deserialize, Serialize};

use crate::cm::{cm_flow, embed_q, embed_q_differential, invariants_map, mu_matrix, xi_closed_form, CMState};
use crate::error::{Error, Result};
use crate::linalg::{self, commutator, Mat};
use crate::pencil::HierarchyIndex;
use crate::phase::{in_open_set_m, PhasePoint, DEFAULT_TOL};
use crate::reduction::{projected_flow_raw, section_pattern, SectionPoint, SignPattern};

/// Tolerance of the section and membership checks made after each step.
pub const DOMAIN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    /// The section of the conjugation action.
    #[serde(rename = "P")]
    Section,
    /// The Calogero-Moser locus.
    #[serde(rename = "Q")]
    Locus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub k: HierarchyIndex,
    pub t_end: f64,
    pub dt: f64,
    pub space: Space,
    pub record_stride: usize,
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig("t_end must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt < self.t_end) {
            return Err(Error::InvalidConfig("dt must satisfy 0 < dt < t_end".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record stride must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Section(SectionPoint),
    Locus(CMState),
}

/// State at a recorded time.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Section { a: Mat, b: Mat },
    Locus { x: Vec<f64>, y: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: Snapshot,
    pub i: Vec<f64>,
    pub j: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// `max_t |I_k(t) - I_k(0)| / max(|I_k(0)|, 1)` for `k = 1..n`.
    pub invariant_drift: Vec<f64>,
    pub j_initial: Vec<f64>,
    pub j_final: Vec<f64>,
    /// `max_t ||[B, A] - mu||_max`; only for runs that start on the locus.
    pub constraint_residual: Option<f64>,
    /// `max_t ||dL/dt - [xi_k, L]||_max` along locus runs.
    pub lax_residual: Option<f64>,
    pub domain_exit: bool,
    pub exit_time: Option<f64>,
    pub exit_reason: Option<String>,
    pub steps: usize,
}

/// Integrates the `k`-th flow from `start`.
pub fn integrate_flow(start: &Start, cfg: &IntegrationConfig) -> Result<(Vec<Sample>, DriftReport)> {
    cfg.validate()?;
    match (start, cfg.space) {
        (Start::Section(sp), Space::Section) => integrate_section(sp, cfg),
        (Start::Locus(c), Space::Locus) => integrate_locus(c, cfg),
        _ => Err(Error::InvalidConfig("start state does not match the selected space".into())),
    }
}

fn rk4_step<F>(y: &[f64], h: f64, f: &F) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u + s * v).collect() };
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * h, &k1));
    let k3 = f(&axpy(y, 0.5 * h, &k2));
    let k4 = f(&axpy(y, h, &k3));
    (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Step sizes covering `[0, t_end]`; the last one is shortened if needed.
fn step_sizes(t_end: f64, dt: f64) -> Vec<f64> {
    let full = ((t_end / dt) * (1.0 + 1e-12)).floor() as usize;
    let mut steps = vec![dt; full];
    let rest = t_end - full as f64 * dt;
    if rest > 1e-12 * t_end {
        steps.push(rest);
    }
    steps
}

struct Tracker {
    i0: Vec<f64>,
    drift: Vec<f64>,
    j0: Vec<f64>,
    j_last: Vec<f64>,
}

impl Tracker {
    fn new(p: &PhasePoint) -> Self {
        let v = invariants_map(p);
        Self {
            drift: vec![0.0; v.i.len()],
            i0: v.i,
            j_last: v.j.clone(),
            j0: v.j,
        }
    }

    fn observe(&mut self, p: &PhasePoint) -> (Vec<f64>, Vec<f64>) {
        let v = invariants_map(p);
        for (k, ik) in v.i.iter().enumerate() {
            let rel = (ik - self.i0[k]).abs() / self.i0[k].abs().max(1.0);
            self.drift[k] = self.drift[k].max(rel);
        }
        self.j_last = v.j.clone();
        (v.i, v.j)
    }
}

fn locus_field(n: usize, k: HierarchyIndex) -> impl Fn(&[f64]) -> Vec<f64> {
    move |s: &[f64]| {
        let c = CMState::new(s[..n].to_vec(), s[n..].to_vec());
        match c {
            Ok(c) => {
                let (xd, yd) = cm_flow(&c, k);
                xd.into_iter().chain(yd).collect()
            }
            Err(_) => vec![f64::NAN; 2 * n],
        }
    }
}

/// `||dL/dt - [xi_k, L]||_max` at `c`, with `dL/dt` the push-forward of the
/// particle velocities.
pub fn lax_residual(c: &CMState, k: HierarchyIndex) -> f64 {
    let (xd, yd) = cm_flow(c, k);
    let t = embed_q_differential(c, &xd, &yd);
    let l = embed_q(c);
    let lie = commutator(&xi_closed_form(c, k), l.a());
    linalg::max_abs(&(&t.v - lie))
}

fn integrate_locus(c0: &CMState, cfg: &IntegrationConfig) -> Result<(Vec<Sample>, DriftReport)> {
    let n = c0.n();
    let field = locus_field(n, cfg.k);
    let mu = mu_matrix(n);
    let p0 = embed_q(c0);
    let mut tracker = Tracker::new(&p0);
    let mut constraint = 0.0_f64;
    let mut lax = 0.0_f64;
    let mut samples = Vec::new();
    let record = |t: f64, c: &CMState, tracker: &mut Tracker, constraint: &mut f64, lax: &mut f64| {
        let p = embed_q(c);
        *constraint = constraint.max(linalg::max_abs(&(commutator(p.b(), p.a()) - &mu)));
        *lax = lax.max(lax_residual(c, cfg.k));
        let (i, j) = tracker.observe(&p);
        Sample {
            t,
            state: Snapshot::Locus {
                x: c.x().to_vec(),
                y: c.y().to_vec(),
            },
            i,
            j,
        }
    };
    samples.push(record(0.0, c0, &mut tracker, &mut constraint, &mut lax));

    let mut state: Vec<f64> = c0.x().iter().chain(c0.y()).copied().collect();
    let mut exit: Option<(f64, String)> = None;
    let steps = step_sizes(cfg.t_end, cfg.dt);
    let total = steps.len();
    let mut taken = 0;
    for (idx, h) in steps.into_iter().enumerate() {
        let next = rk4_step(&state, h, &field);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("integrated state"));
        }
        let t = if idx + 1 == total { cfg.t_end } else { (idx + 1) as f64 * cfg.dt };
        taken += 1;
        state = next;
        let c = match CMState::new(state[..n].to_vec(), state[n..].to_vec()) {
            Ok(c) => c,
            Err(_) => {
                exit = Some((t, "ordering violation".into()));
                break;
            }
        };
        if !in_open_set_m(&embed_q(&c), DOMAIN_TOL).in_m {
            samples.push(record(t, &c, &mut tracker, &mut constraint, &mut lax));
            exit = Some((t, "eigenvalue-gap collapse".into()));
            break;
        }
        // every step feeds the drift; only strided steps are stored
        if (idx + 1) % cfg.record_stride == 0 || idx + 1 == total {
            samples.push(record(t, &c, &mut tracker, &mut constraint, &mut lax));
        } else {
            tracker.observe(&embed_q(&c));
        }
    }
    let report = DriftReport {
        invariant_drift: tracker.drift.clone(),
        j_initial: tracker.j0.clone(),
        j_final: tracker.j_last.clone(),
        constraint_residual: Some(constraint),
        lax_residual: Some(lax),
        domain_exit: exit.is_some(),
        exit_time: exit.as_ref().map(|e| e.0),
        exit_reason: exit.map(|e| e.1),
        steps: taken,
    };
    Ok((samples, report))
}

fn flatten(a: &Mat, b: &Mat) -> Vec<f64> {
    let n = a.nrows();
    let mut v = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            v.push(a[(i, j)]);
        }
    }
    for i in 0..n {
        for j in 0..n {
            v.push(b[(i, j)]);
        }
    }
    v
}

fn unflatten(s: &[f64], n: usize) -> (Mat, Mat) {
    (
        Mat::from_row_slice(n, n, &s[..n * n]),
        Mat::from_row_slice(n, n, &s[n * n..]),
    )
}

fn section_field(n: usize, pattern: SignPattern, k: HierarchyIndex) -> impl Fn(&[f64]) -> Vec<f64> {
    move |s: &[f64]| {
        let (a, b) = unflatten(s, n);
        let t = projected_flow_raw(&a, &b, &pattern, k);
        flatten(&t.v, &t.w)
    }
}

fn integrate_section(sp: &SectionPoint, cfg: &IntegrationConfig) -> Result<(Vec<Sample>, DriftReport)> {
    let n = sp.n();
    let pattern = sp.pattern().clone();
    let field = section_field(n, pattern.clone(), cfg.k);
    let mu = mu_matrix(n);
    let p0 = sp.point().clone();
    let on_locus = linalg::max_abs(&(commutator(p0.b(), p0.a()) - &mu)) < 1e-10;
    let mut tracker = Tracker::new(&p0);
    let mut constraint = 0.0_f64;
    let mut samples = Vec::new();
    let record = |t: f64, p: &PhasePoint, tracker: &mut Tracker, constraint: &mut f64| {
        if on_locus {
            *constraint = constraint.max(linalg::max_abs(&(commutator(p.b(), p.a()) - &mu)));
        }
        let (i, j) = tracker.observe(p);
        Sample {
            t,
            state: Snapshot::Section {
                a: p.a().clone(),
                b: p.b().clone(),
            },
            i,
            j,
        }
    };
    samples.push(record(0.0, &p0, &mut tracker, &mut constraint));

    let mut state = flatten(p0.a(), p0.b());
    let mut exit: Option<(f64, String)> = None;
    let steps = step_sizes(cfg.t_end, cfg.dt);
    let total = steps.len();
    let mut taken = 0;
    for (idx, h) in steps.into_iter().enumerate() {
        let next = rk4_step(&state, h, &field);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("integrated state"));
        }
        let t = if idx + 1 == total { cfg.t_end } else { (idx + 1) as f64 * cfg.dt };
        taken += 1;
        state = next;
        let (a, b) = unflatten(&state, n);
        match section_pattern(&a, &b, DOMAIN_TOL.max(DEFAULT_TOL)) {
            Ok(pt) if pt == pattern => {}
            Ok(_) => {
                exit = Some((t, "section sign flip".into()));
                break;
            }
            Err(e) => {
                exit = Some((t, format!("left the section: {e}")));
                break;
            }
        }
        let p = PhasePoint::new(a, b)?;
        if !in_open_set_m(&p, DOMAIN_TOL).in_m {
            samples.push(record(t, &p, &mut tracker, &mut constraint));
            exit = Some((t, "eigenvalue-gap collapse".into()));
            break;
        }
        if (idx + 1) % cfg.record_stride == 0 || idx + 1 == total {
            samples.push(record(t, &p, &mut tracker, &mut constraint));
        } else {
            tracker.observe(&p);
        }
    }
    let report = DriftReport {
        invariant_drift: tracker.drift.clone(),
        j_initial: tracker.j0.clone(),
        j_final: tracker.j_last.clone(),
        constraint_residual: on_locus.then_some(constraint),
        lax_residual: None,
        domain_exit: exit.is_some(),
        exit_time: exit.as_ref().map(|e| e.0),
        exit_reason: exit.map(|e| e.1),
        steps: taken,
    };
    Ok((samples, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::canonical_form;

    fn cfg(k: usize, t_end: f64, dt: f64, space: Space) -> IntegrationConfig {
        IntegrationConfig {
            k: HierarchyIndex::new(k).unwrap(),
            t_end,
            dt,
            space,
            record_stride: 1,
        }
    }

    fn two_body() -> CMState {
        CMState::new(vec![-1.0, 1.0], vec![-1.0, 1.0]).unwrap()
    }

    #[test]
    fn translation_flow_is_exact() {
        let (samples, report) =
            integrate_flow(&Start::Locus(two_body()), &cfg(1, 1.0, 0.125, Space::Locus)).unwrap();
        let Snapshot::Locus { x, y } = &samples.last().unwrap().state else {
            panic!("locus run")
        };
        assert_eq!(x, &vec![0.0, 2.0]);
        assert_eq!(y, &vec![-1.0, 1.0]);
        assert!(!report.domain_exit);
        assert_eq!(report.steps, 8);
    }

    #[test]
    fn two_body_conserves_invariants() {
        let (samples, report) =
            integrate_flow(&Start::Locus(two_body()), &cfg(2, 1.0, 1e-3, Space::Locus)).unwrap();
        assert_eq!(samples.len(), 1001);
        assert!(report.invariant_drift.iter().all(|d| *d < 1e-10), "{report:?}");
        assert!(report.constraint_residual.unwrap() < 1e-12);
        assert!(report.lax_residual.unwrap() < 1e-12);
    }

    #[test]
    fn section_run_matches_locus_run() {
        let c = CMState::new(vec![-1.3, 0.2, 1.4], vec![-1.5, 0.8, 2.5]).unwrap();
        let (sp, _) = canonical_form(&embed_q(&c), 1e-8).unwrap();
        let (qs, _) = integrate_flow(&Start::Locus(c), &cfg(2, 0.5, 1e-3, Space::Locus)).unwrap();
        let (ps, rep) = integrate_flow(&Start::Section(sp), &cfg(2, 0.5, 1e-3, Space::Section)).unwrap();
        let (qi, pi) = (&qs.last().unwrap().j, &ps.last().unwrap().j);
        for (a, b) in qi.iter().zip(pi) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        assert!(rep.constraint_residual.unwrap() < 1e-6);
    }

    #[test]
    fn mismatched_start_is_rejected() {
        let r = integrate_flow(&Start::Locus(two_body()), &cfg(2, 1.0, 0.1, Space::Section));
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
        let r = integrate_flow(&Start::Locus(two_body()), &cfg(2, 1.0, 2.0, Space::Locus));
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn step_partition() {
        assert_eq!(step_sizes(1.0, 0.25).len(), 4);
        let s = step_sizes(1.0, 0.3);
        assert_eq!(s.len(), 4);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
