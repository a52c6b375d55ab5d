//! Polynomials with rational coefficients in the invariants `I_1..I_n, J_1..J_n`.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exponents of `I_1..I_n` followed by those of `J_1..J_n`.
type Monomial = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: BigRational) -> Self {
        let mut p = Self::zero(n);
        p.add_term(vec![0; 2 * n], c);
        p
    }

    /// `I_k`, `1 <= k <= n`.
    pub fn var_i(n: usize, k: usize) -> Result<Self> {
        Self::var(n, k, 0)
    }

    /// `J_k`, `1 <= k <= n`.
    pub fn var_j(n: usize, k: usize) -> Result<Self> {
        Self::var(n, k, n)
    }

    fn var(n: usize, k: usize, offset: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::IndexOutOfRange(format!("index {k} not in 1..={n}")));
        }
        let mut m = vec![0; 2 * n];
        m[offset + k - 1] = 1;
        let mut p = Self::zero(n);
        p.add_term(m, BigRational::one());
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        use std::collections::btree_map::Entry;
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero(self.n);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn times(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                out.add_term(m, c1 * c2);
            }
        }
        out
    }

    /// Evaluates at `I = i`, `J = j`.
    pub fn eval(&self, i: &[f64], j: &[f64]) -> Result<f64> {
        if i.len() != self.n || j.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: i.len().min(j.len()),
            });
        }
        let vars: Vec<f64> = i.iter().chain(j).copied().collect();
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| {
                let coeff = c.to_f64().unwrap_or(f64::NAN);
                m.iter()
                    .zip(&vars)
                    .fold(coeff, |acc, (&e, &v)| acc * v.powi(e as i32))
            })
            .sum())
    }

    /// Coefficient of the given monomial, zero when absent.
    pub fn coeff(&self, monomial: &[u32]) -> BigRational {
        self.terms
            .get(monomial)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigRational)> {
        self.terms.iter().map(|(m, c)| (m.as_slice(), c))
    }
}

/// Power sums `p_1..p_k` (`p_m = tr A^m`) as polynomials in `I_1..I_n`.
pub fn power_sum_polys(n: usize, k: usize) -> Vec<Poly> {
    let mut p: Vec<Poly> = (1..=n.min(k))
        .map(|m| {
            Poly::var_i(n, m)
                .expect("index in range")
                .scale(&rational(m as i64, 1))
        })
        .collect();
    if k <= n {
        return p;
    }
    let e = elementary_polys(n, &p);
    for m in n + 1..=k {
        let mut acc = Poly::zero(n);
        for (i, ei) in e.iter().enumerate().skip(1) {
            let term = ei.times(&p[m - i - 1]);
            acc = if i % 2 == 1 { acc.plus(&term) } else { acc.minus(&term) };
        }
        p.push(acc);
    }
    p
}

/// `e_0..e_n` from `p_1..p_n`.
fn elementary_polys(n: usize, p: &[Poly]) -> Vec<Poly> {
    let mut e = vec![Poly::constant(n, BigRational::one())];
    for k in 1..=n {
        let mut acc = Poly::zero(n);
        for i in 1..=k {
            let term = e[k - i].times(&p[i - 1]);
            acc = if i % 2 == 1 { acc.plus(&term) } else { acc.minus(&term) };
        }
        e.push(acc.scale(&rational(1, k as i64)));
    }
    e
}

/// `I_m` for any `m >= 1`, reduced to `I_1..I_n` when `m > n`.
pub fn i_poly(n: usize, m: usize) -> Result<Poly> {
    if m == 0 {
        return Err(Error::IndexOutOfRange("I_0 is not defined".into()));
    }
    if m <= n {
        return Poly::var_i(n, m);
    }
    let p = power_sum_polys(n, m);
    Ok(p[m - 1].scale(&rational(1, m as i64)))
}

/// `J_m` for any `m >= 1`, reduced through `J_m = sum_i (-1)^(i-1) e_i J_(m-i)`.
pub fn j_poly(n: usize, m: usize) -> Result<Poly> {
    if m == 0 {
        return Err(Error::IndexOutOfRange("J_0 is not defined".into()));
    }
    let mut js: Vec<Poly> = (1..=n.min(m))
        .map(|k| Poly::var_j(n, k))
        .collect::<Result<_>>()?;
    if m <= n {
        return Ok(js.pop().expect("nonempty"));
    }
    let p = power_sum_polys(n, n);
    let e = elementary_polys(n, &p);
    for k in n + 1..=m {
        let mut acc = Poly::zero(n);
        for (i, ei) in e.iter().enumerate().skip(1) {
            let term = ei.times(&js[k - i - 1]);
            acc = if i % 2 == 1 { acc.plus(&term) } else { acc.minus(&term) };
        }
        js.push(acc);
    }
    Ok(js.pop().expect("nonempty"))
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            match (idx, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mag = c.abs();
            let vars = monomial_string(self.n, m);
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{vars}")?;
            } else {
                write!(f, "{mag} {vars}")?;
            }
        }
        Ok(())
    }
}

fn monomial_string(n: usize, m: &[u32]) -> String {
    let mut parts = Vec::new();
    for (idx, &e) in m.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let name = if idx < n {
            format!("I{}", idx + 1)
        } else {
            format!("J{}", idx - n + 1)
        };
        parts.push(if e == 1 { name } else { format!("{name}^{e}") });
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reduction_for_two() {
        let i3 = i_poly(2, 3).unwrap();
        // 3 I_3 = 3 I_1 I_2 - 1/2 I_1^3
        assert_eq!(i3.scale(&rational(3, 1)).to_string(), "3 I1 I2 - 1/2 I1^3");
    }

    #[test]
    fn reduced_polys_match_numeric_reduction() {
        let i = [0.7, -1.3, 0.4];
        let j = [0.0; 3];
        for m in 1..9 {
            let poly = i_poly(3, m).unwrap().eval(&i, &j).unwrap();
            let num = if m <= 3 {
                i[m - 1]
            } else {
                crate::newton::cayley_hamilton_reduce(&i, m)
            };
            assert!((poly - num).abs() < 1e-12 * (1.0 + num.abs()), "m={m}");
        }
    }

    #[test]
    fn j_reduction_on_diagonal_pair() {
        // A = diag(1, 2), B = diag(3, 4): J_m = 3 + 4 * 2^(m-1)
        let i = [3.0, 2.5];
        let j = [7.0, 11.0];
        for m in 1..8 {
            let v = j_poly(2, m).unwrap().eval(&i, &j).unwrap();
            let expected = 3.0 + 4.0 * 2f64.powi(m as i32 - 1);
            assert!((v - expected).abs() < 1e-10, "m={m}: {v}");
        }
    }

    #[test]
    fn display_and_arithmetic() {
        let i1 = Poly::var_i(2, 1).unwrap();
        let j2 = Poly::var_j(2, 2).unwrap();
        assert_eq!(i1.minus(&i1).to_string(), "0");
        assert_eq!(Poly::constant(2, rational(2, 1)).to_string(), "2");
        assert_eq!(j2.scale(&rational(-1, 1)).to_string(), "-J2");
        assert!(Poly::var_i(2, 3).is_err());
    }
}
