//! Newton's identities between power sums and elementary symmetric functions,
//! and real roots of the resulting characteristic polynomial.

use nalgebra::Schur;

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// `e_0 = 1, e_1, ..., e_n` from power sums `p_1..p_n` (`p[0]` is `p_1`).
pub fn elementary_from_power_sums(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for k in 1..=n {
        let mut acc = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * p[i - 1];
        }
        e[k] = acc / k as f64;
    }
    e
}

/// Extends power sums `p_1..p_n` to `p_1..p_k` using
/// `p_m = sum_{i=1}^n (-1)^(i-1) e_i p_(m-i)` for `m > n`.
pub fn extend_power_sums(p: &[f64], k: usize) -> Vec<f64> {
    let n = p.len();
    let e = elementary_from_power_sums(p);
    let mut out = p.to_vec();
    for m in n + 1..=k {
        let mut acc = 0.0;
        for i in 1..=n {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[i] * out[m - i - 1];
        }
        out.push(acc);
    }
    out.truncate(k.max(n));
    out
}

/// `I_k = p_k / k` for `k > n`, from `I_1..I_n`.
pub fn cayley_hamilton_reduce(i: &[f64], k: usize) -> f64 {
    let p: Vec<f64> = i.iter().enumerate().map(|(j, v)| (j + 1) as f64 * v).collect();
    let ext = extend_power_sums(&p, k);
    ext[k - 1] / k as f64
}

/// Real, pairwise distinct roots (ascending) of
/// `x^n - e_1 x^(n-1) + e_2 x^(n-2) - ... + (-1)^n e_n`.
pub fn real_roots_from_elementary(e: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = e.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    // monic coefficients c_i of x^(n-i)
    let c: Vec<f64> = (0..=n)
        .map(|i| if i % 2 == 0 { e[i] } else { -e[i] })
        .collect();
    let mut companion = Mat::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -c[j + 1];
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    let schur = Schur::try_new(companion, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::ComplexRoots("companion eigen-solver did not converge".into()))?;
    let roots = schur.complex_eigenvalues();
    let mut out = Vec::with_capacity(n);
    for z in roots.iter() {
        if z.im.abs() >= tol * (1.0 + z.norm()) {
            return Err(Error::ComplexRoots(format!("root {} {:+}i", z.re, z.im)));
        }
        out.push(polish(&c, z.re));
    }
    out.sort_by(f64::total_cmp);
    let scale = 1.0 + out.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if out.windows(2).any(|w| w[1] - w[0] <= tol * scale) {
        return Err(Error::ComplexRoots("coincident roots".into()));
    }
    Ok(out)
}

fn polish(c: &[f64], mut x: f64) -> f64 {
    for _ in 0..3 {
        let (mut v, mut d) = (0.0, 0.0);
        for &ci in c {
            d = d * x + v;
            v = v * x + ci;
        }
        if d == 0.0 {
            break;
        }
        let step = v / d;
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_reduction() {
        // I_3 = I_1 I_2 - I_1^3 / 6
        for &(i1, i2) in &[(0.3, 1.7), (-2.0, 0.25), (1.5, -0.4)] {
            let expected = i1 * i2 - i1 * i1 * i1 / 6.0;
            assert!((cayley_hamilton_reduce(&[i1, i2], 3) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_power_sums() {
        // A = diag(1, 2): I_1 = 3, I_2 = 5/2, I_3 = 9/3
        assert!((cayley_hamilton_reduce(&[3.0, 2.5], 3) - 3.0).abs() < 1e-14);
        let direct = |k: i32| (1.0 + 2f64.powi(k)) / k as f64;
        for k in 3..10 {
            assert!((cayley_hamilton_reduce(&[3.0, 2.5], k as usize) - direct(k)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_power_sums_stay_zero() {
        for k in 3..8 {
            assert_eq!(cayley_hamilton_reduce(&[0.0, 0.0], k), 0.0);
        }
    }

    #[test]
    fn roots_of_known_cubic() {
        let roots = [-1.5, 0.25, 2.0];
        let p: Vec<f64> = (1..=3).map(|k| roots.iter().map(|r: &f64| r.powi(k)).sum()).collect();
        let e = elementary_from_power_sums(&p);
        let got = real_roots_from_elementary(&e, 1e-8).unwrap();
        for (g, r) in got.iter().zip(roots) {
            assert!((g - r).abs() < 1e-13);
        }
    }

    #[test]
    fn complex_roots_are_reported() {
        // x^2 + 1
        let e = [1.0, 0.0, 1.0];
        assert!(matches!(
            real_roots_from_elementary(&e, 1e-8),
            Err(Error::ComplexRoots(_))
        ));
    }
}
