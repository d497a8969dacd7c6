//! Characteristic values `a_r(q)` (even family) and `b_r(q)` (odd family).
//!
//! Each parity/order-parity pair is one tridiagonal sector. Real `q` uses a
//! Sturm-sequence bisection, complex `q` follows the branch from `q = 0` by
//! continuation. Results are cached by the bit pattern of `q`.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::Parity;

type C64 = Complex64;

/// Tridiagonal block of the Fourier recurrence.
///
/// Row `k` reads `(alpha - diag_k) X_k - q (L_k X_{k-1} + X_{k+1}) = 0` with
/// harmonic `n_k = 2k + first_harmonic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    /// cosines of even harmonic
    EvenEven,
    /// cosines of odd harmonic
    EvenOdd,
    /// sines of odd harmonic
    OddOdd,
    /// sines of even harmonic
    OddEven,
}

impl Sector {
    pub fn of(parity: Parity, r: u32) -> Sector {
        match (parity, r % 2) {
            (Parity::Even, 0) => Sector::EvenEven,
            (Parity::Even, _) => Sector::EvenOdd,
            (Parity::Odd, 1) => Sector::OddOdd,
            (Parity::Odd, _) => Sector::OddEven,
        }
    }

    pub fn parity(self) -> Parity {
        match self {
            Sector::EvenEven | Sector::EvenOdd => Parity::Even,
            Sector::OddOdd | Sector::OddEven => Parity::Odd,
        }
    }

    pub fn first_harmonic(self) -> u32 {
        match self {
            Sector::EvenEven => 0,
            Sector::EvenOdd | Sector::OddOdd => 1,
            Sector::OddEven => 2,
        }
    }

    pub fn harmonic(self, k: usize) -> u32 {
        2 * k as u32 + self.first_harmonic()
    }

    pub fn index_of(self, r: u32) -> usize {
        ((r - self.first_harmonic()) / 2) as usize
    }

    pub fn diag(self, k: usize, q: C64) -> C64 {
        let n = self.harmonic(k) as f64;
        let base = C64::from(n * n);
        match (self, k) {
            (Sector::EvenOdd, 0) => base + q,
            (Sector::OddOdd, 0) => base - q,
            _ => base,
        }
    }

    /// Coupling of row `k` to its lower neighbour.
    pub fn lower_coupling(self, k: usize) -> f64 {
        if self == Sector::EvenEven && k == 1 {
            2.0
        } else {
            1.0
        }
    }

    /// Off-diagonal of the symmetrized matrix between `k` and `k + 1`.
    pub fn sym_offdiag(self, k: usize, q: C64) -> C64 {
        q * self.lower_coupling(k + 1).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharValue {
    pub parity: Parity,
    pub r: u32,
    pub q: C64,
    pub alpha: C64,
    pub matrix_dim: usize,
    /// Zero for real `q`.
    pub continuation_steps: usize,
}

pub fn default_dim(r: u32, q: C64) -> usize {
    let a = 2 * r as usize + 20;
    let b = 20 + (1.5 * q.norm().sqrt()).ceil() as usize;
    a.max(b)
}

pub(crate) fn validate(parity: Parity, r: u32, q: C64) -> Result<()> {
    if parity == Parity::Odd && r == 0 {
        return Err(Error::InvalidFunction(
            "odd-family order must be at least 1".into(),
        ));
    }
    if !(q.re.is_finite() && q.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite parameter q = {q}")));
    }
    Ok(())
}

type Key = (Parity, u32, u64, u64);

fn cache() -> &'static RwLock<HashMap<Key, CharValue>> {
    static CACHE: OnceLock<RwLock<HashMap<Key, CharValue>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// `a_r(q)` for the even family, `b_r(q)` for the odd family.
pub fn char_value(parity: Parity, r: u32, q: C64) -> Result<CharValue> {
    validate(parity, r, q)?;
    let key = (parity, r, q.re.to_bits(), q.im.to_bits());
    if let Some(v) = cache().read().unwrap().get(&key) {
        return Ok(*v);
    }
    let v = char_value_with_dim(parity, r, q, default_dim(r, q))?;
    cache().write().unwrap().insert(key, v);
    Ok(v)
}

/// Uncached evaluation with an explicit sector dimension.
pub fn char_value_with_dim(parity: Parity, r: u32, q: C64, dim: usize) -> Result<CharValue> {
    validate(parity, r, q)?;
    let sector = Sector::of(parity, r);
    let k = sector.index_of(r);
    let dim = dim.max(k + 4);
    if q.im == 0.0 {
        let alpha = sturm_kth(sector, q.re, dim, k);
        return Ok(CharValue {
            parity,
            r,
            q,
            alpha: C64::from(alpha),
            matrix_dim: dim,
            continuation_steps: 0,
        });
    }
    let (alpha, steps) = continuation(sector, r, q, dim)?;
    Ok(CharValue {
        parity,
        r,
        q,
        alpha,
        matrix_dim: dim,
        continuation_steps: steps,
    })
}

/// Diagonal and symmetric off-diagonal of the sector matrix.
pub fn sector_matrix(sector: Sector, q: C64, dim: usize) -> (Vec<C64>, Vec<C64>) {
    let d = (0..dim).map(|k| sector.diag(k, q)).collect();
    let e = (0..dim - 1).map(|k| sector.sym_offdiag(k, q)).collect();
    (d, e)
}

/// Number of eigenvalues below `x` for a real symmetric tridiagonal matrix.
fn sturm_count(d: &[f64], e2: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut t = d[0] - x;
    if t < 0.0 {
        count += 1;
    }
    for k in 1..d.len() {
        let prev = if t == 0.0 { f64::EPSILON * (1.0 + x.abs()) } else { t };
        t = d[k] - x - e2[k - 1] / prev;
        if t < 0.0 {
            count += 1;
        }
    }
    count
}

fn sturm_kth(sector: Sector, q: f64, dim: usize, k: usize) -> f64 {
    let (d, e) = sector_matrix(sector, C64::from(q), dim);
    let d: Vec<f64> = d.iter().map(|z| z.re).collect();
    let e2: Vec<f64> = e.iter().map(|z| z.re * z.re).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..dim {
        let rad = if i > 0 { e[i - 1].re.abs() } else { 0.0 }
            + if i + 1 < dim { e[i].re.abs() } else { 0.0 };
        lo = lo.min(d[i] - rad);
        hi = hi.max(d[i] + rad);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(&d, &e2, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn dense_eigenvalues(sector: Sector, q: C64, dim: usize) -> Option<Vec<C64>> {
    let (d, e) = sector_matrix(sector, q, dim);
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = d[i];
        if i + 1 < dim {
            m[(i, i + 1)] = e[i];
            m[(i + 1, i)] = e[i];
        }
    }
    m.eigenvalues().map(|v| v.iter().copied().collect())
}

/// Branch tracking from `q = 0`, where the eigenvalue is `r^2`.
pub(crate) fn continuation(sector: Sector, r: u32, q: C64, dim: usize) -> Result<(C64, usize)> {
    let n_steps = (q.norm() / 2.0).ceil() as usize + 1;
    let mut prev2: Option<(f64, C64)> = None;
    let mut prev = (0.0f64, C64::from((r * r) as f64));
    let mut steps = 0usize;
    let fail = || Error::ContinuationFailure {
        parity: sector.parity(),
        r,
        q,
    };
    for j in 1..=n_steps {
        let t_target = j as f64 / n_steps as f64;
        let mut pending = vec![t_target];
        while let Some(t) = pending.pop() {
            let pred = match prev2 {
                Some((t2, a2)) => prev.1 + (prev.1 - a2) * ((t - prev.0) / (prev.0 - t2)),
                None => prev.1,
            };
            let eig = dense_eigenvalues(sector, q * t, dim).ok_or_else(fail)?;
            let mut best = (f64::INFINITY, C64::new(0.0, 0.0));
            let mut second = f64::INFINITY;
            for &l in &eig {
                let dist = (l - pred).norm();
                if dist < best.0 {
                    second = best.0;
                    best = (dist, l);
                } else if dist < second {
                    second = dist;
                }
            }
            steps += 1;
            let ambiguous = second < 4.0 * best.0;
            if ambiguous {
                // A ray passing a collision at distance δ needs steps below δ;
                // closer passes are reported rather than guessed.
                let h = t - prev.0;
                if h < 1.0 / (n_steps as f64 * 16384.0) {
                    return Err(fail());
                }
                pending.push(t);
                pending.push(prev.0 + 0.5 * h);
                continue;
            }
            let refined = refine(sector, q * t, dim, best.1);
            prev2 = Some(prev);
            prev = (t, refined);
        }
    }
    Ok((prev.1, steps))
}

/// Inverse iteration with the complex-symmetric Rayleigh quotient.
fn refine(sector: Sector, q: C64, dim: usize, guess: C64) -> C64 {
    let (d, e) = sector_matrix(sector, q, dim);
    let mut v = vec![C64::new(1.0, 0.0); dim];
    let mut lambda = guess;
    for _ in 0..4 {
        let sigma = lambda;
        let Some(w) = solve_shifted(&d, &e, sigma, &v) else {
            break;
        };
        let wv: C64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let ww: C64 = w.iter().map(|a| a * a).sum();
        if ww.norm() == 0.0 {
            break;
        }
        let next = sigma + wv / ww;
        if (next - guess).norm() > 1e-6 * (1.0 + guess.norm()) {
            break;
        }
        let scale = w.iter().map(|a| a.norm()).fold(0.0, f64::max);
        v = w.iter().map(|a| a / scale).collect();
        let done = (next - lambda).norm() <= 1e-16 * (1.0 + next.norm());
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}

/// Thomas solve of `(T - sigma) w = v` for symmetric tridiagonal `T`.
fn solve_shifted(d: &[C64], e: &[C64], sigma: C64, v: &[C64]) -> Option<Vec<C64>> {
    let n = d.len();
    let tiny = 1e-300;
    let mut c = vec![C64::new(0.0, 0.0); n];
    let mut g = vec![C64::new(0.0, 0.0); n];
    let mut piv = d[0] - sigma;
    if piv.norm() < tiny {
        piv = C64::from(1e-18 * (1.0 + sigma.norm()));
    }
    c[0] = if n > 1 { e[0] / piv } else { C64::new(0.0, 0.0) };
    g[0] = v[0] / piv;
    for i in 1..n {
        let mut piv = d[i] - sigma - e[i - 1] * c[i - 1];
        if piv.norm() < tiny {
            piv = C64::from(1e-18 * (1.0 + sigma.norm()));
        }
        if i + 1 < n {
            c[i] = e[i] / piv;
        }
        g[i] = (v[i] - e[i - 1] * g[i - 1]) / piv;
    }
    let mut w = g;
    for i in (0..n - 1).rev() {
        let next = w[i + 1];
        w[i] -= c[i] * next;
    }
    if w.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(w)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Oracle: the full exponential-basis matrix over harmonics -N..=N,
    /// `n^2 c_n + q (c_{n-2} + c_{n+2}) = alpha c_n`, holding every sector.
    fn exponential_basis_eigenvalues(q: C64, odd_harmonics: bool, n: i32) -> Vec<C64> {
        let ns: Vec<i32> = (-n..=n)
            .filter(|h| (h.rem_euclid(2) == 1) == odd_harmonics)
            .collect();
        let dim = ns.len();
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for (i, &h) in ns.iter().enumerate() {
            m[(i, i)] = C64::from((h * h) as f64);
            if i + 1 < dim {
                m[(i, i + 1)] = q;
                m[(i + 1, i)] = q;
            }
        }
        m.eigenvalues().unwrap().iter().copied().collect()
    }

    fn nearest(values: &[C64], target: C64) -> C64 {
        *values
            .iter()
            .min_by(|a, b| (*a - target).norm().partial_cmp(&(*b - target).norm()).unwrap())
            .unwrap()
    }

    #[test]
    fn a1_b1_at_q_one() {
        let a1 = char_value(Parity::Even, 1, c(1.0, 0.0)).unwrap().alpha.re;
        let b1 = char_value(Parity::Odd, 1, c(1.0, 0.0)).unwrap().alpha.re;
        // Frozen from the exponential-basis oracle below.
        assert!((a1 - 1.859_108_072_514_364).abs() < 1e-12, "{a1}");
        assert!((b1 + 0.110_248_816_992_095_6).abs() < 1e-12, "{b1}");
        let all = exponential_basis_eigenvalues(c(1.0, 0.0), true, 61);
        assert!((nearest(&all, c(a1, 0.0)).re - a1).abs() < 1e-12);
        assert!((nearest(&all, c(b1, 0.0)).re - b1).abs() < 1e-12);
    }

    #[test]
    fn zero_q_gives_squares() {
        for r in 0..8 {
            let a = char_value(Parity::Even, r, c(0.0, 0.0)).unwrap().alpha;
            assert!((a.re - (r * r) as f64).abs() < 1e-13);
            if r > 0 {
                let b = char_value(Parity::Odd, r, c(0.0, 0.0)).unwrap().alpha;
                assert!((b.re - (r * r) as f64).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn odd_order_zero_is_rejected() {
        assert!(matches!(
            char_value(Parity::Odd, 0, c(1.0, 0.0)),
            Err(Error::InvalidFunction(_))
        ));
    }

    #[test]
    fn complex_q_matches_dense_oracle_and_conjugation() {
        for &q in &[c(1.0, 1.0), c(-3.0, 2.0), c(6.0, -4.0), c(0.5, 8.0)] {
            for r in 0..6u32 {
                for parity in [Parity::Even, Parity::Odd] {
                    if parity == Parity::Odd && r == 0 {
                        continue;
                    }
                    let v = match char_value(parity, r, q) {
                        Ok(v) => v,
                        Err(Error::ContinuationFailure { .. }) => continue,
                        Err(e) => panic!("{e}"),
                    };
                    let all = exponential_basis_eigenvalues(q, r % 2 == 1, 81);
                    let near = nearest(&all, v.alpha);
                    assert!((near - v.alpha).norm() < 1e-10 * (1.0 + v.alpha.norm()));
                    let vc = char_value(parity, r, q.conj()).unwrap();
                    assert!((vc.alpha - v.alpha.conj()).norm() < 1e-10 * (1.0 + v.alpha.norm()));
                }
            }
        }
    }

    #[test]
    fn continuation_agrees_with_real_path() {
        for &qr in &[0.7, 5.0, -12.0, 30.0] {
            for r in 0..7u32 {
                let s = Sector::of(Parity::Even, r);
                let dim = default_dim(r, c(qr, 0.0));
                let (a, _) = continuation(s, r, c(qr, 0.0), dim).unwrap();
                let b = char_value(Parity::Even, r, c(qr, 0.0)).unwrap().alpha;
                assert!((a - b).norm() < 1e-11 * (1.0 + b.norm()), "r={r} q={qr}");
            }
        }
    }

    #[test]
    fn rays_near_and_through_collisions() {
        // The b_2/b_4 collision sits near q = 6.93i; this ray misses it narrowly.
        let near = c(0.0034, 8.566);
        let v = char_value(Parity::Odd, 4, near).unwrap();
        let w = char_value(Parity::Odd, 4, c(0.0034 * 1.01, 8.566)).unwrap();
        assert!((v.alpha - w.alpha).norm() < 1e-2);
        // The imaginary axis runs straight through the a_0/a_2 collision.
        assert!(matches!(
            char_value(Parity::Even, 0, c(0.0, 3.0)),
            Err(Error::ContinuationFailure { .. })
        ));
    }

    #[test]
    fn doubling_dimension_is_stable() {
        for &q in &[c(2.0, 0.0), c(40.0, 0.0), c(3.0, 3.0)] {
            for r in [0u32, 3, 10] {
                let d = default_dim(r, q);
                let a = char_value_with_dim(Parity::Even, r, q, d).unwrap().alpha;
                let b = char_value_with_dim(Parity::Even, r, q, 2 * d).unwrap().alpha;
                assert!((a - b).norm() <= 1e-11 * a.norm().max(1.0));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn interlacing_for_positive_q(q in 0.01f64..60.0, k in 0u32..8) {
            let qc = c(q, 0.0);
            let a = |r| char_value(Parity::Even, r, qc).unwrap().alpha.re;
            let b = |r| char_value(Parity::Odd, r, qc).unwrap().alpha.re;
            // a_0 < b_1 < a_1 < b_2 < a_2 < ...
            if k == 0 {
                prop_assert!(a(0) < b(1));
            } else {
                prop_assert!(b(k) < a(k));
                prop_assert!(a(k) < b(k + 1));
            }
        }

        #[test]
        fn sign_symmetry(q in 0.01f64..40.0, k in 0u32..6) {
            let p = c(q, 0.0);
            let m = c(-q, 0.0);
            let a = |r, z| char_value(Parity::Even, r, z).unwrap().alpha.re;
            let b = |r, z| char_value(Parity::Odd, r, z).unwrap().alpha.re;
            let tol = 1e-11 * (1.0 + q + (k * k) as f64);
            prop_assert!((a(2 * k, p) - a(2 * k, m)).abs() < tol);
            prop_assert!((a(2 * k + 1, p) - b(2 * k + 1, m)).abs() < tol);
            if k > 0 {
                prop_assert!((b(2 * k, p) - b(2 * k, m)).abs() < tol);
            }
        }
    }
}
