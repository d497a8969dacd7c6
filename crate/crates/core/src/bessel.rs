//! Integer-order Bessel functions of complex argument, delivered in order batches.
//!
//! `J` and `I` come from Miller's downward recurrence normalized by the
//! generating-function sum. `Y`, `H = J + iY` and `K` are built by upward
//! recurrence from order-0/1 seeds, which is the stable direction for the
//! dominant solutions.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

const RESCALE_AT: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BesselFamily {
    J,
    Y,
    /// Hankel function of the first kind.
    H,
    I,
    K,
}

/// Values and derivatives for orders `0..=n_max` at one argument.
///
/// When `scaled` is set the stored values carry the exponential factor
/// `e^{-|Im z|}` (J, Y), `e^{-iz}` (H), `e^{-|Re z|}` (I) or `e^{z}` (K).
#[derive(Debug, Clone)]
pub struct BesselBatch {
    pub family: BesselFamily,
    pub argument: C64,
    pub n_max: usize,
    pub scaled: bool,
    values: Vec<C64>,
    derivatives: Vec<C64>,
}

impl BesselBatch {
    /// Value at integer order `n`, negative orders by reflection.
    pub fn value(&self, n: i64) -> C64 {
        let k = n.unsigned_abs() as usize;
        let v = self.values[k];
        if n < 0 {
            v * self.reflection_sign(k)
        } else {
            v
        }
    }

    /// Derivative with respect to the argument at integer order `n`.
    pub fn derivative(&self, n: i64) -> C64 {
        let k = n.unsigned_abs() as usize;
        let v = self.derivatives[k];
        if n < 0 {
            v * self.reflection_sign(k)
        } else {
            v
        }
    }

    pub fn values(&self) -> &[C64] {
        &self.values[..=self.n_max]
    }

    pub fn derivatives(&self) -> &[C64] {
        &self.derivatives[..=self.n_max]
    }

    fn reflection_sign(&self, k: usize) -> f64 {
        match self.family {
            BesselFamily::I | BesselFamily::K => 1.0,
            BesselFamily::J | BesselFamily::Y | BesselFamily::H => {
                if k % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// Unscaled batch for orders `0..=n_max`.
pub fn bessel_batch(family: BesselFamily, z: C64, n_max: usize) -> Result<BesselBatch> {
    batch(family, z, n_max, false)
}

/// Exponentially scaled batch; see [`BesselBatch`] for the factors.
pub fn bessel_batch_scaled(family: BesselFamily, z: C64, n_max: usize) -> Result<BesselBatch> {
    batch(family, z, n_max, true)
}

fn batch(family: BesselFamily, z: C64, n_max: usize, scaled: bool) -> Result<BesselBatch> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite Bessel argument {z}")));
    }
    // One extra order feeds the derivative identities.
    let top = n_max + 1;
    let values = match family {
        BesselFamily::J => miller_j(z, top, scaled),
        BesselFamily::I => {
            let iz = C64::new(-z.im, z.re);
            let j = miller_j(iz, top, scaled);
            // I_n(z) = i^{-n} J_n(iz)
            j.into_iter()
                .enumerate()
                .map(|(n, v)| v * i_pow(-(n as i64)))
                .collect()
        }
        BesselFamily::Y | BesselFamily::H | BesselFamily::K => upward(family, z, top, scaled)?,
    };
    for (n, v) in values.iter().enumerate().take(n_max + 1) {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Overflow {
                context: format!("{family:?}_{n}({z})"),
            });
        }
    }
    let derivatives = derivatives(family, &values, n_max);
    Ok(BesselBatch {
        family,
        argument: z,
        n_max,
        scaled,
        values,
        derivatives,
    })
}

fn i_pow(n: i64) -> C64 {
    match n.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

fn start_order(z: C64, top: usize) -> usize {
    let az = z.norm();
    let base = (top as f64).max(az.ceil());
    (base + 20.0 + (9.0 * (az / 2.0).cbrt()).ceil()) as usize
}

/// `J_0..=J_top` by Miller's algorithm.
fn miller_j(z: C64, top: usize, scaled: bool) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); top + 1];
    if z.norm() == 0.0 {
        out[0] = C64::new(1.0, 0.0);
        return out;
    }
    let n_start = start_order(z, top);
    // Weight (-i)^k pairs with e^{-iz}, i^k with e^{iz}; the choice keeps the
    // target modulus e^{|Im z|} so the normalization sum has no cancellation.
    let upper = z.im >= 0.0;
    let weight = |k: usize| -> C64 {
        let e = if upper { -(k as i64) } else { k as i64 };
        i_pow(e)
    };
    let inv_z = z.inv();
    let mut f_next = C64::new(0.0, 0.0);
    let mut f_cur = C64::new(1e-30, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    if n_start <= top {
        out[n_start] = f_cur;
    }
    for k in (1..=n_start).rev() {
        sum += weight(k) * f_cur * 2.0;
        let f_prev = inv_z * (2.0 * k as f64) * f_cur - f_next;
        f_next = f_cur;
        f_cur = f_prev;
        if k - 1 <= top {
            out[k - 1] = f_cur;
        }
        if f_cur.norm() > RESCALE_AT {
            let s = 1.0 / RESCALE_AT;
            f_cur *= s;
            f_next *= s;
            sum *= s;
            for v in out.iter_mut().skip(k - 1) {
                *v *= s;
            }
        }
    }
    sum += f_cur;
    // e^{-iz} or e^{iz}, optionally divided by e^{|Im z|} before exponentiating.
    let shift = if scaled { z.im.abs() } else { 0.0 };
    let target = if upper {
        C64::new(z.im - shift, -z.re).exp()
    } else {
        C64::new(-z.im - shift, z.re).exp()
    };
    let m = sum.norm();
    let factor = target * (sum.conj() / m) / m;
    for v in out.iter_mut() {
        *v *= factor;
    }
    out
}

/// `J_0..=J_{n_max}` for real `x`, normalized by `J_0 + 2 Σ J_{2k} = 1`.
pub fn j_values_real(x: f64, n_max: usize) -> Vec<f64> {
    miller_real(x, n_max, false)
}

/// `I_0..=I_{n_max}` for real `x >= 0`, normalized by `I_0 + 2 Σ I_k = e^x`.
pub fn i_values_real(x: f64, n_max: usize) -> Vec<f64> {
    miller_real(x, n_max, true)
}

fn miller_real(x: f64, n_max: usize, modified: bool) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let n_start = start_order(C64::from(ax), n_max);
    let inv = 2.0 / ax;
    let mut f_next = 0.0;
    let mut f_cur = 1e-30;
    let mut sum = 0.0;
    if n_start <= n_max {
        out[n_start] = f_cur;
    }
    for k in (1..=n_start).rev() {
        if modified || k % 2 == 0 {
            sum += 2.0 * f_cur;
        }
        let f_prev = if modified {
            inv * k as f64 * f_cur + f_next
        } else {
            inv * k as f64 * f_cur - f_next
        };
        f_next = f_cur;
        f_cur = f_prev;
        if k - 1 <= n_max {
            out[k - 1] = f_cur;
        }
        if f_cur.abs() > RESCALE_AT {
            let s = 1.0 / RESCALE_AT;
            f_cur *= s;
            f_next *= s;
            sum *= s;
            for v in out.iter_mut().skip(k - 1) {
                *v *= s;
            }
        }
    }
    sum += f_cur;
    let target = if modified { ax.exp() } else { 1.0 };
    let factor = target / sum;
    for (n, v) in out.iter_mut().enumerate() {
        *v *= factor;
        // Odd orders change sign with the argument.
        if x < 0.0 && n % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

fn seed(family: BesselFamily, nu: f64, z: C64, scaled: bool) -> Result<C64> {
    use complex_bessel as cb;
    let r = match (family, scaled) {
        (BesselFamily::Y, false) => cb::bessely(nu, z),
        (BesselFamily::Y, true) => cb::bessely_scaled(nu, z),
        (BesselFamily::K, false) => cb::besselk(nu, z),
        (BesselFamily::K, true) => cb::besselk_scaled(nu, z),
        (BesselFamily::H, false) => cb::hankel1(nu, z),
        (BesselFamily::H, true) => cb::hankel1_scaled(nu, z),
        _ => unreachable!("seeds are only needed for Y, H and K"),
    };
    r.map_err(|e| match e {
        cb::Error::Overflow => Error::Overflow {
            context: format!("{family:?}_{nu}({z})"),
        },
        other => Error::Domain(format!("{family:?}_{nu}({z}): {other:?}")),
    })
}

fn upward(family: BesselFamily, z: C64, top: usize, scaled: bool) -> Result<Vec<C64>> {
    if z.norm() == 0.0 {
        return Err(Error::Domain(format!("{family:?} is singular at z = 0")));
    }
    let mut out = Vec::with_capacity(top + 1);
    out.push(seed(family, 0.0, z, scaled)?);
    out.push(seed(family, 1.0, z, scaled)?);
    let inv_z = z.inv();
    for n in 1..top {
        let two_n_over_z = inv_z * (2.0 * n as f64);
        let next = match family {
            BesselFamily::Y | BesselFamily::H => two_n_over_z * out[n] - out[n - 1],
            _ => out[n - 1] + two_n_over_z * out[n],
        };
        out.push(next);
    }
    out.truncate(top + 1);
    Ok(out)
}

fn derivatives(family: BesselFamily, v: &[C64], n_max: usize) -> Vec<C64> {
    let mut d = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let below = if n == 0 { -v[1] } else { v[n - 1] };
        let dn = match family {
            BesselFamily::J | BesselFamily::Y | BesselFamily::H => (below - v[n + 1]) * 0.5,
            BesselFamily::I => {
                let below = if n == 0 { v[1] } else { v[n - 1] };
                (below + v[n + 1]) * 0.5
            }
            BesselFamily::K => {
                let below = if n == 0 { v[1] } else { v[n - 1] };
                -(below + v[n + 1]) * 0.5
            }
        };
        d.push(dn);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Ascending power series; an independent oracle for moderate |z|.
    fn j_series(n: u32, z: C64) -> C64 {
        let half = z * 0.5;
        let mut term = half.powu(n);
        for k in 1..=n {
            term /= k as f64;
        }
        let mut sum = term;
        let h2 = -(half * half);
        for k in 1..200 {
            term *= h2 / ((k * (k + n as usize)) as f64);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    }

    #[test]
    fn j0_of_one() {
        let b = bessel_batch(BesselFamily::J, c(1.0, 0.0), 4).unwrap();
        assert!((b.value(0).re - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!(b.value(0).im.abs() < 1e-16);
    }

    #[test]
    fn k0_of_one() {
        let b = bessel_batch(BesselFamily::K, c(1.0, 0.0), 4).unwrap();
        assert!((b.value(0).re - 0.421_024_438_240_708_34).abs() < 1e-15);
    }

    #[test]
    fn j_matches_power_series() {
        for &z in &[c(0.3, 0.0), c(2.5, 1.0), c(-4.0, 3.0), c(7.0, -2.0), c(0.0, 5.0)] {
            let b = bessel_batch(BesselFamily::J, z, 25).unwrap();
            for n in 0..=25u32 {
                let s = j_series(n, z);
                let scale = s.norm().max(1e-300);
                let err = (b.value(n as i64) - s).norm();
                assert!(err <= 1e-12 * scale.max(1e-3 * b.value(0).norm()), "n={n} z={z}");
            }
        }
    }

    #[test]
    fn j_large_argument_matches_reference_crate() {
        for &z in &[c(80.0, 0.0), c(150.0, 3.0), c(40.0, -25.0)] {
            let b = bessel_batch(BesselFamily::J, z, 60).unwrap();
            for n in [0usize, 1, 7, 30, 60] {
                let r = complex_bessel::besselj(n as f64, z).unwrap();
                assert!((b.value(n as i64) - r).norm() <= 1e-12 * r.norm().max(1e-2), "n={n} z={z}");
            }
        }
    }

    #[test]
    fn y_and_k_match_reference_crate_per_order() {
        for &z in &[c(0.7, 0.0), c(3.0, 1.5), c(12.0, -4.0)] {
            let y = bessel_batch(BesselFamily::Y, z, 20).unwrap();
            let k = bessel_batch(BesselFamily::K, z, 20).unwrap();
            for n in 0..=20 {
                let yr = complex_bessel::bessely(n as f64, z).unwrap();
                let kr = complex_bessel::besselk(n as f64, z).unwrap();
                assert!((y.value(n) - yr).norm() <= 1e-12 * yr.norm(), "Y n={n} z={z}");
                assert!((k.value(n) - kr).norm() <= 1e-12 * kr.norm(), "K n={n} z={z}");
            }
        }
    }

    #[test]
    fn hankel_matches_reference_crate_where_it_decays() {
        for &z in &[c(0.7, 0.0), c(3.0, 1.5), c(2.0, 9.0), c(-1.0, 6.0)] {
            let h = bessel_batch(BesselFamily::H, z, 20).unwrap();
            for n in 0..=20 {
                let hr = complex_bessel::hankel1(n as f64, z).unwrap();
                assert!((h.value(n) - hr).norm() <= 1e-12 * hr.norm(), "H n={n} z={z}");
            }
        }
    }

    #[test]
    fn i_matches_reference_crate() {
        for &z in &[c(0.5, 0.0), c(6.0, 2.0), c(-3.0, 0.5)] {
            let b = bessel_batch(BesselFamily::I, z, 15).unwrap();
            for n in 0..=15 {
                let r = complex_bessel::besseli(n as f64, z).unwrap();
                assert!((b.value(n) - r).norm() <= 1e-12 * r.norm().max(1e-200), "n={n} z={z}");
            }
        }
    }

    #[test]
    fn zero_argument() {
        let j = bessel_batch(BesselFamily::J, c(0.0, 0.0), 3).unwrap();
        assert_eq!(j.value(0), c(1.0, 0.0));
        assert_eq!(j.value(2), c(0.0, 0.0));
        assert_eq!(j.derivative(1), c(0.5, 0.0));
        let i = bessel_batch(BesselFamily::I, c(0.0, 0.0), 3).unwrap();
        assert_eq!(i.derivative(1), c(0.5, 0.0));
        assert!(matches!(
            bessel_batch(BesselFamily::Y, c(0.0, 0.0), 3),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            bessel_batch(BesselFamily::K, c(0.0, 0.0), 3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn overflow_is_signalled() {
        assert!(matches!(
            bessel_batch(BesselFamily::I, c(800.0, 0.0), 2),
            Err(Error::Overflow { .. })
        ));
        assert!(matches!(
            bessel_batch(BesselFamily::K, c(1e-3, 0.0), 200),
            Err(Error::Overflow { .. })
        ));
        // The scaled variant stays finite.
        let s = bessel_batch_scaled(BesselFamily::I, c(800.0, 0.0), 2).unwrap();
        let x = 800.0f64;
        let asym = (1.0 + 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x)) / (2.0 * std::f64::consts::PI * x).sqrt();
        assert!((s.value(0).re - asym).abs() < 1e-10);
    }

    #[test]
    fn scaled_matches_unscaled() {
        let z = c(5.0, -3.0);
        for fam in [BesselFamily::J, BesselFamily::Y, BesselFamily::H, BesselFamily::I, BesselFamily::K] {
            let u = bessel_batch(fam, z, 10).unwrap();
            let s = bessel_batch_scaled(fam, z, 10).unwrap();
            let f = match fam {
                BesselFamily::J | BesselFamily::Y => C64::from((-z.im.abs()).exp()),
                BesselFamily::I => C64::from((-z.re.abs()).exp()),
                BesselFamily::H => (-C64::i() * z).exp(),
                BesselFamily::K => z.exp(),
            };
            for n in 0..=10 {
                assert!((u.value(n) * f - s.value(n)).norm() <= 1e-12 * s.value(n).norm());
            }
        }
    }

    #[test]
    fn negative_orders_reflect() {
        let z = c(2.0, 0.5);
        let j = bessel_batch(BesselFamily::J, z, 5).unwrap();
        assert_eq!(j.value(-3), -j.value(3));
        assert_eq!(j.value(-2), j.value(2));
        let k = bessel_batch(BesselFamily::K, z, 5).unwrap();
        assert_eq!(k.value(-3), k.value(3));
    }

    #[test]
    fn real_fast_paths_match_complex_batches() {
        for &x in &[0.0, 1e-6, 0.3, 4.0, 37.5, 120.0, -3.0] {
            let j = j_values_real(x, 40);
            let jc = bessel_batch(BesselFamily::J, c(x, 0.0), 40).unwrap();
            for n in 0..=40 {
                let r = jc.value(n as i64).re;
                assert!((j[n] - r).abs() <= 1e-13 * r.abs().max(1e-3 * jc.value(0).norm().max(1e-300)) + 1e-300, "J n={n} x={x}");
            }
            if x >= 0.0 {
                let i = i_values_real(x, 40);
                let ic = bessel_batch(BesselFamily::I, c(x, 0.0), 40).unwrap();
                for n in 0..=40 {
                    let r = ic.value(n as i64).re;
                    assert!((i[n] - r).abs() <= 1e-13 * r.abs() + 1e-300, "I n={n} x={x}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn wronskian_jy(re in 0.2f64..30.0, im in -5.0f64..5.0, n in 0i64..20) {
            let z = c(re, im);
            let j = bessel_batch(BesselFamily::J, z, 21).unwrap();
            let y = bessel_batch(BesselFamily::Y, z, 21).unwrap();
            let w = j.value(n + 1) * y.value(n) - j.value(n) * y.value(n + 1);
            let expected = 2.0 / (std::f64::consts::PI * z);
            let scale = (j.value(n) * y.value(n + 1)).norm().max(expected.norm());
            prop_assert!((w - expected).norm() <= 1e-12 * scale);
        }

        #[test]
        fn wronskian_ik(re in 0.2f64..30.0, im in -5.0f64..5.0, n in 0i64..20) {
            let z = c(re, im);
            let i = bessel_batch(BesselFamily::I, z, 21).unwrap();
            let k = bessel_batch(BesselFamily::K, z, 21).unwrap();
            let w = i.value(n) * k.value(n + 1) + i.value(n + 1) * k.value(n);
            let expected = z.inv();
            let scale = (i.value(n) * k.value(n + 1)).norm().max(expected.norm());
            prop_assert!((w - expected).norm() <= 1e-12 * scale);
        }

        #[test]
        fn j_recurrence_residual(re in -40.0f64..40.0, im in -10.0f64..10.0, n in 1i64..30) {
            let z = c(re, im);
            prop_assume!(z.norm() > 0.1);
            let j = bessel_batch(BesselFamily::J, z, 31).unwrap();
            let lhs = j.value(n - 1) + j.value(n + 1);
            let rhs = j.value(n) * (2.0 * n as f64) / z;
            let scale = j.value(n - 1).norm().max(j.value(n + 1).norm()).max(rhs.norm());
            prop_assert!((lhs - rhs).norm() <= 1e-12 * scale.max(1e-300));
        }

        #[test]
        fn j_derivative_identity(re in 0.1f64..20.0, im in -3.0f64..3.0, n in 0i64..15) {
            let z = c(re, im);
            let j = bessel_batch(BesselFamily::J, z, 16).unwrap();
            let expect = j.value(n - 1) - j.value(n) * (n as f64) / z;
            let expect = if n == 0 { -j.value(1) } else { expect };
            let scale = j.derivative(n).norm().max(j.value(n).norm()).max(1e-300);
            prop_assert!((j.derivative(n) - expect).norm() <= 1e-12 * scale.max(j.value(0).norm() * 1e-3));
        }
    }
}
