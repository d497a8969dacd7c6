//! Reference values by direct integration of the governing ODE.
//!
//! A library value and derivative at a seed point half a unit away are
//! carried to the target with an adaptive high-order Taylor method. The
//! potential and its local expansion are written out here rather than
//! borrowed from the crate.

#![allow(dead_code)]

use mathieu_casimir::characteristic::char_value;
use mathieu_casimir::mathieu::{evaluate, Class, FunctionId};
use num_complex::Complex64 as C64;

const ORDER: usize = 40;
const STEP_EPS: f64 = 1e-16;

/// `f'' = V f` with `V = s (α - 2q c(2z))`, `c = cos` (s = -1) or `cosh` (s = 1).
struct Equation {
    alpha: C64,
    q: C64,
    class: Class,
}

impl Equation {
    fn new(id: FunctionId, q: C64) -> Equation {
        let q = if id.modified { -q } else { q };
        let alpha = char_value(id.parity, id.r, q).expect("characteristic value").alpha;
        Equation {
            alpha,
            q,
            class: id.class,
        }
    }

    fn sign(&self) -> f64 {
        match self.class {
            Class::Angular => -1.0,
            Class::Radial => 1.0,
        }
    }

    fn potential(&self, z: C64) -> C64 {
        let c = match self.class {
            Class::Angular => (z * 2.0).cos(),
            Class::Radial => (z * 2.0).cosh(),
        };
        (self.alpha - self.q * 2.0 * c) * self.sign()
    }

    /// Taylor coefficients of `V(z + s)` in `s`.
    fn potential_series(&self, z: C64) -> [C64; ORDER + 1] {
        let (c, sn) = match self.class {
            Class::Angular => ((z * 2.0).cos(), (z * 2.0).sin()),
            Class::Radial => ((z * 2.0).cosh(), (z * 2.0).sinh()),
        };
        // cos(2z + 2s) = c cos 2s - sn sin 2s; cosh(2z + 2s) = c cosh 2s + sn sinh 2s.
        let flip = self.class == Class::Angular;
        let mut out = [C64::new(0.0, 0.0); ORDER + 1];
        let mut pow = 1.0; // 2^k / k!
        for (k, o) in out.iter_mut().enumerate() {
            if k > 0 {
                pow *= 2.0 / k as f64;
            }
            let alt = if flip && (k / 2) % 2 == 1 { -1.0 } else { 1.0 };
            let term = if k % 2 == 0 { c } else if flip { -sn } else { sn };
            let mut v = -self.q * 2.0 * term * (alt * pow);
            if k == 0 {
                v += self.alpha;
            }
            *o = v * self.sign();
        }
        out
    }
}

/// One Taylor step of length up to `|h|` along `h`; returns the step taken.
fn taylor_step(eq: &Equation, z: C64, f: C64, g: C64, h: C64) -> (C64, C64, C64) {
    let v = eq.potential_series(z);
    let mut c = [C64::new(0.0, 0.0); ORDER + 1];
    c[0] = f;
    c[1] = g;
    for k in 0..=ORDER - 2 {
        let s: C64 = (0..=k).map(|j| v[j] * c[k - j]).sum();
        c[k + 2] = s / ((k + 1) * (k + 2)) as f64;
    }
    let k_loc = (1.0 + v[0].norm()).sqrt();
    let amp = f.norm().max(g.norm() / k_loc);
    let mut len = h.norm();
    for k in [ORDER - 1, ORDER] {
        let ck = c[k].norm();
        if ck > 0.0 {
            len = len.min((STEP_EPS * amp / ck).powf(1.0 / k as f64));
        }
    }
    // Keep steps well inside the convergence radius of the local series.
    len = len.min(0.5 / k_loc.max(1.0));
    let h = h / h.norm() * len;
    let (mut fv, mut gv, mut p) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    for k in 0..=ORDER {
        fv += c[k] * p;
        if k < ORDER {
            gv += c[k + 1] * p * (k + 1) as f64;
        }
        p *= h;
    }
    (h, fv, gv)
}

/// Solution of the equation for `id` with `(f, f')` at `z0`, carried to `z1`.
pub fn propagate(id: FunctionId, q: C64, z0: C64, f0: C64, g0: C64, z1: C64) -> (C64, C64) {
    let eq = Equation::new(id, q);
    let (mut z, mut f, mut g) = (z0, f0, g0);
    for _ in 0..1_000_000 {
        let rest = z1 - z;
        if rest.norm() <= 1e-15 * (1.0 + z1.norm()) {
            return (f, g);
        }
        let (h, nf, ng) = taylor_step(&eq, z, f, g, rest);
        z = if (rest - h).norm() <= 1e-15 * (1.0 + z1.norm()) { z1 } else { z + h };
        f = nf;
        g = ng;
    }
    panic!("oracle did not reach {z1} from {z0}");
}

/// The oracle's `(f, f')` at `arg`. Of the two seeds half a unit either side,
/// the one with the smaller local amplitude is used, so integration runs
/// toward growth and seed error stays relative.
pub fn oracle(id: FunctionId, q: C64, arg: C64) -> (C64, C64) {
    let eq = Equation::new(id, q);
    let amp = |z: C64, f: C64, g: C64| f.norm().max(g.norm() / (1.0 + eq.potential(z).norm()).sqrt());
    let seeds = [arg - 0.5, arg + 0.5].map(|z| {
        let s = evaluate(id, q, z).expect("seed value");
        (z, s.value, s.derivative)
    });
    let (z, f, g) = if amp(seeds[0].0, seeds[0].1, seeds[0].2) <= amp(seeds[1].0, seeds[1].1, seeds[1].2) {
        seeds[0]
    } else {
        seeds[1]
    };
    propagate(id, q, z, f, g, arg)
}

/// Deviation of `(f, f')` from the reference, relative to the local amplitude
/// `max(|f|, |f'| / sqrt(1 + |V|))` so zeros of either do not blow it up.
pub fn relative_deviation(id: FunctionId, q: C64, arg: C64, got: (C64, C64), want: (C64, C64)) -> f64 {
    let k = (1.0 + Equation::new(id, q).potential(arg).norm()).sqrt();
    let amp = want.0.norm().max(want.1.norm() / k);
    let dev = (got.0 - want.0).norm().max((got.1 - want.1).norm() / k);
    dev / amp
}

#[test]
fn oracle_reproduces_elementary_solutions() {
    use mathieu_casimir::mathieu::Family;
    // q = 0: ce_2 = cos 2θ, α = 4.
    let id = Family::Ce.id(2);
    let (f, g) = propagate(id, C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.3, 0.4));
    let z = C64::new(2.6, 0.8);
    assert!((f - z.cos()).norm() < 1e-13 * z.cos().norm());
    assert!((g + z.sin() * 2.0).norm() < 1e-13 * z.sin().norm() * 2.0);
}
