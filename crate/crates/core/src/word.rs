//! Invariant functions `tr(a_1 ... a_r)` built from cyclic words in the letters A and B.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::phase::{CovectorPair, PhasePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    A,
    B,
}

impl Letter {
    fn matrix(self, p: &PhasePoint) -> &Mat {
        match self {
            Letter::A => p.a(),
            Letter::B => p.b(),
        }
    }
}

/// A word stored in its lexicographically minimal rotation (A < B).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word(canonical_rotation(letters))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `tr` of the product of the letters at `p`.
    pub fn eval(&self, p: &PhasePoint) -> f64 {
        if self.0.is_empty() {
            return p.n() as f64;
        }
        product(&self.0, p).trace()
    }
}

fn canonical_rotation(letters: Vec<Letter>) -> Vec<Letter> {
    let r = letters.len();
    if r < 2 {
        return letters;
    }
    let best = (1..r).fold(0, |best, s| {
        let cand = letters[s..].iter().chain(&letters[..s]);
        let cur = letters[best..].iter().chain(&letters[..best]);
        if cand.lt(cur) {
            s
        } else {
            best
        }
    });
    let mut out = letters;
    out.rotate_left(best);
    out
}

/// Ordered product of the letters' matrices; the identity for an empty slice.
pub fn product(letters: &[Letter], p: &PhasePoint) -> Mat {
    let n = p.n();
    match letters.split_first() {
        None => Mat::identity(n, n),
        Some((first, rest)) => rest
            .iter()
            .fold(first.matrix(p).clone(), |acc, l| acc * l.matrix(p)),
    }
}

/// The word read cyclically starting just after position `i`, with position `i` removed:
/// `a_{i+1} ... a_r a_1 ... a_{i-1}`.
pub fn opened_at(letters: &[Letter], i: usize) -> Vec<Letter> {
    letters[i + 1..]
        .iter()
        .chain(&letters[..i])
        .copied()
        .collect()
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            f.write_str(match l {
                Letter::A => "A",
                Letter::B => "B",
            })?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                'A' => Ok(Letter::A),
                'B' => Ok(Letter::B),
                _ => Err(Error::InvalidWord(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word::new)
    }
}

/// A finite real linear combination of trace words.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceExpr {
    terms: BTreeMap<Word, f64>,
}

impl TraceExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn word(w: Word, coeff: f64) -> Self {
        let mut e = Self::zero();
        e.add_term(w, coeff);
        e
    }

    /// Parses a single word such as `"AAB"` with unit coefficient.
    pub fn parse(word: &str) -> Result<Self> {
        Ok(Self::word(word.parse()?, 1.0))
    }

    /// `I_k = tr(A^k) / k`, also the hierarchy Hamiltonian `H_k`.
    pub fn i_k(k: usize) -> Self {
        assert!(k >= 1, "I_k needs k >= 1");
        Self::word(Word::new(vec![Letter::A; k]), 1.0 / k as f64)
    }

    /// `J_k = tr(A^(k-1) B)`.
    pub fn j_k(k: usize) -> Self {
        assert!(k >= 1, "J_k needs k >= 1");
        let mut letters = vec![Letter::A; k - 1];
        letters.push(Letter::B);
        Self::word(Word::new(letters), 1.0)
    }

    pub fn add_term(&mut self, w: Word, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        match self.terms.entry(w) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.terms.iter().map(|(w, c)| (w, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: &Word) -> f64 {
        self.terms.get(w).copied().unwrap_or(0.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero();
        for (w, v) in self.terms() {
            out.add_term(w.clone(), v * c);
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, v) in other.terms() {
            out.add_term(w.clone(), v);
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scale(-1.0))
    }

    pub fn eval(&self, p: &PhasePoint) -> f64 {
        self.terms().map(|(w, c)| c * w.eval(p)).sum()
    }

    /// Exact gradient under the trace pairing: each occurrence of a letter
    /// contributes the product of the remaining letters read cyclically.
    pub fn grad(&self, p: &PhasePoint) -> CovectorPair {
        let n = p.n();
        let mut g = CovectorPair::zeros(n);
        for (w, c) in self.terms() {
            let letters = w.letters();
            for (i, l) in letters.iter().enumerate() {
                let rest = product(&opened_at(letters, i), p) * c;
                match l {
                    Letter::A => g.xi += rest,
                    Letter::B => g.eta += rest,
                }
            }
        }
        g
    }

    /// Pull-back along a linear substitution of the letters: each A becomes
    /// `sa * X_a` and each B becomes `sb * X_b`, where `X_a, X_b` are letters.
    pub fn substitute(&self, a_to: (f64, Letter), b_to: (f64, Letter)) -> Self {
        let mut out = Self::zero();
        for (w, c) in self.terms() {
            let mut coeff = c;
            let letters: Vec<Letter> = w
                .letters()
                .iter()
                .map(|l| {
                    let (s, to) = match l {
                        Letter::A => a_to,
                        Letter::B => b_to,
                    };
                    coeff *= s;
                    to
                })
                .collect();
            out.add_term(Word::new(letters), coeff);
        }
        out
    }
}

impl fmt::Display for TraceExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.terms().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let w = if w.is_empty() { "I".to_string() } else { w.to_string() };
            write!(f, "{c} tr({w})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TermJson {
    word: String,
    coeff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TraceExprJson {
    terms: Vec<TermJson>,
}

impl Serialize for TraceExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TraceExprJson {
            terms: self
                .terms()
                .map(|(w, c)| TermJson {
                    word: w.to_string(),
                    coeff: c,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TraceExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TraceExprJson::deserialize(d)?;
        let mut out = TraceExpr::zero();
        for t in raw.terms {
            if !t.coeff.is_finite() {
                return Err(serde::de::Error::custom("non-finite coefficient"));
            }
            let w: Word = t.word.parse().map_err(serde::de::Error::custom)?;
            out.add_term(w, t.coeff);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;

    fn pt(a: &[f64], b: &[f64]) -> PhasePoint {
        let n = (a.len() as f64).sqrt() as usize;
        PhasePoint::new(Mat::from_row_slice(n, n, a), Mat::from_row_slice(n, n, b)).unwrap()
    }

    #[test]
    fn rotations_share_a_key() {
        let w: Word = "BAAB".parse().unwrap();
        for s in ["ABBA", "BBAA", "BAAB", "AABB"] {
            assert_eq!(s.parse::<Word>().unwrap(), w);
        }
        assert_eq!(w.to_string(), "AABB");
        assert_eq!("BAB".parse::<Word>().unwrap().to_string(), "ABB");
    }

    #[test]
    fn bad_letter_is_rejected() {
        assert!(matches!("ABC".parse::<Word>(), Err(Error::InvalidWord(_))));
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let mut e = TraceExpr::parse("AB").unwrap();
        e.add_term("BA".parse().unwrap(), -1.0);
        assert!(e.is_zero());
        e.add_term("A".parse().unwrap(), 0.0);
        assert!(e.is_zero());
    }

    #[test]
    fn eval_examples() {
        let p = PhasePoint::new(diag(&[1.0, 2.0]), Mat::zeros(2, 2)).unwrap();
        assert_eq!(TraceExpr::parse("A").unwrap().eval(&p), 3.0);

        let p = pt(&[-1.0, -0.5, 0.5, 1.0], &[-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(TraceExpr::parse("AB").unwrap().eval(&p), 2.0);

        let p = PhasePoint::new(Mat::zeros(3, 3), Mat::zeros(3, 3)).unwrap();
        assert_eq!(TraceExpr::word(Word::empty(), 1.0).eval(&p), 3.0);
    }

    #[test]
    fn grad_examples() {
        let p = pt(&[0.3, -1.2, 0.4, 0.9], &[1.1, 0.2, -0.7, 0.5]);
        let g = TraceExpr::parse("AB").unwrap().grad(&p);
        assert_eq!(&g.xi, p.b());
        assert_eq!(&g.eta, p.a());

        let g = TraceExpr::parse("AA").unwrap().grad(&p);
        assert_eq!(g.xi, p.a() * 2.0);
        assert_eq!(g.eta, Mat::zeros(2, 2));

        let g = TraceExpr::parse("B").unwrap().grad(&p);
        assert_eq!(g.xi, Mat::zeros(2, 2));
        assert_eq!(g.eta, Mat::identity(2, 2));
    }

    #[test]
    fn empty_word_has_no_gradient() {
        let p = pt(&[0.3, -1.2, 0.4, 0.9], &[1.1, 0.2, -0.7, 0.5]);
        let g = TraceExpr::word(Word::empty(), 2.0).grad(&p);
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn json_roundtrip_shape() {
        let e: TraceExpr =
            serde_json::from_str(r#"{"terms":[{"word":"BAA","coeff":1.0},{"word":"","coeff":2.5}]}"#)
                .unwrap();
        assert_eq!(e.coeff(&"AAB".parse().unwrap()), 1.0);
        assert_eq!(e.coeff(&Word::empty()), 2.5);
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"terms":[{"word":"","coeff":2.5},{"word":"AAB","coeff":1.0}]}"#);
    }

    #[test]
    fn swap_substitution_signs() {
        let e = TraceExpr::parse("AAB").unwrap();
        // A -> -B, B -> A
        let s = e.substitute((-1.0, Letter::B), (1.0, Letter::A));
        assert_eq!(s.coeff(&"ABB".parse().unwrap()), 1.0);
        let s = TraceExpr::parse("AB").unwrap().substitute((-1.0, Letter::B), (1.0, Letter::A));
        assert_eq!(s.coeff(&"AB".parse().unwrap()), -1.0);
    }
}
