//! Angular, radial and modified Mathieu functions with derivatives.
//!
//! Conventions: `Θ'' + (α - 2q cos 2θ) Θ = 0`, `M'' - (α - 2q cosh 2μ) M = 0`,
//! `∫₀^{2π} ce² = ∫₀^{2π} se² = π`, and every first/second-kind Wronskian
//! equals `2/π`. Modified functions take the parameter of the modified
//! equation: `Ie_r(q, μ) = i^{-r} Je_r(-q, μ)` and
//! `Ke_r(q, μ) = i^{r+1} (π/2) He_r(-q, μ)`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::bessel::{bessel_batch, BesselBatch, BesselFamily};
use crate::coefficients::{fourier_coeffs, second_kind_for, CoefficientTable, TRIG_LIMIT_Q};
use crate::error::{Error, Result};
use crate::Parity;

type C64 = Complex64;

/// Real-argument angular evaluation switches to the radial route below this |q|...
pub const RADIAL_ROUTE_Q_MAX: f64 = 1e-2;
/// ...and above this one.
pub const RADIAL_ROUTE_Q_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Angular,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    First,
    Second,
    Third,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct FunctionId {
    pub parity: Parity,
    pub class: Class,
    pub kind: Kind,
    pub modified: bool,
    pub r: u32,
}

impl FunctionId {
    pub fn validate(&self) -> Result<()> {
        if self.parity == Parity::Odd && self.r == 0 {
            return Err(Error::InvalidFunction(format!(
                "{} requires order r >= 1",
                self.name()
            )));
        }
        match (self.class, self.kind, self.modified) {
            (Class::Angular, Kind::Third, _) => Err(Error::InvalidFunction(
                "angular functions have no third kind".into(),
            )),
            (Class::Angular, Kind::Second, true) => Err(Error::InvalidFunction(
                "modified second-kind angular functions are not provided".into(),
            )),
            (Class::Radial, Kind::Second, true) => Err(Error::InvalidFunction(
                "modified radial functions are Ie/Io (first) and Ke/Ko (third)".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        let e = if self.parity == Parity::Even { "e" } else { "o" };
        match (self.class, self.kind, self.modified) {
            (Class::Angular, Kind::First, m) => {
                let base = if self.parity == Parity::Even { "ce" } else { "se" };
                if m {
                    format!("{base}(-q)")
                } else {
                    base.into()
                }
            }
            (Class::Angular, _, _) => format!("F{e}"),
            (Class::Radial, Kind::First, false) => format!("J{e}"),
            (Class::Radial, Kind::Second, _) => format!("Y{e}"),
            (Class::Radial, Kind::Third, false) => format!("H{e}"),
            (Class::Radial, Kind::First, true) => format!("I{e}"),
            (Class::Radial, Kind::Third, true) => format!("K{e}"),
        }
    }
}

/// The fourteen named function families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ce,
    Se,
    Fe,
    Fo,
    Je,
    Jo,
    Ye,
    Yo,
    He,
    Ho,
    Ie,
    Io,
    Ke,
    Ko,
}

impl Family {
    pub const ALL: [Family; 14] = [
        Family::Ce,
        Family::Se,
        Family::Fe,
        Family::Fo,
        Family::Je,
        Family::Jo,
        Family::Ye,
        Family::Yo,
        Family::He,
        Family::Ho,
        Family::Ie,
        Family::Io,
        Family::Ke,
        Family::Ko,
    ];

    pub fn id(self, r: u32) -> FunctionId {
        use Family::*;
        let parity = match self {
            Ce | Fe | Je | Ye | He | Ie | Ke => Parity::Even,
            _ => Parity::Odd,
        };
        let (class, kind, modified) = match self {
            Ce | Se => (Class::Angular, Kind::First, false),
            Fe | Fo => (Class::Angular, Kind::Second, false),
            Je | Jo => (Class::Radial, Kind::First, false),
            Ye | Yo => (Class::Radial, Kind::Second, false),
            He | Ho => (Class::Radial, Kind::Third, false),
            Ie | Io => (Class::Radial, Kind::First, true),
            Ke | Ko => (Class::Radial, Kind::Third, true),
        };
        FunctionId {
            parity,
            class,
            kind,
            modified,
            r,
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        use Family::*;
        Ok(match s.to_ascii_lowercase().as_str() {
            "ce" => Ce,
            "se" => Se,
            "fe" => Fe,
            "fo" => Fo,
            "je" => Je,
            "jo" => Jo,
            "ye" => Ye,
            "yo" => Yo,
            "he" => He,
            "ho" => Ho,
            "ie" => Ie,
            "io" => Io,
            "ke" => Ke,
            "ko" => Ko,
            other => return Err(Error::InvalidFunction(format!("unknown function '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalResult {
    pub value: C64,
    pub derivative: C64,
}

/// Dispatch on a function identifier.
pub fn evaluate(id: FunctionId, q: C64, arg: C64) -> Result<EvalResult> {
    id.validate()?;
    match (id.class, id.kind, id.modified) {
        (Class::Angular, Kind::First, false) => angular_first(id.parity, id.r, q, arg),
        (Class::Angular, Kind::First, true) => angular_first(id.parity, id.r, -q, arg),
        (Class::Angular, Kind::Second, _) => angular_second(id.parity, id.r, q, arg),
        (Class::Radial, kind, false) => radial(id.parity, kind, id.r, q, arg),
        (Class::Radial, kind, true) => radial_modified(id.parity, kind, id.r, q, arg),
        (Class::Angular, Kind::Third, _) => unreachable!("rejected by validate"),
    }
}

/// The `V` in `f'' = V f` for the equation the function satisfies.
pub fn ode_potential(id: FunctionId, q: C64, arg: C64) -> Result<C64> {
    id.validate()?;
    let q_eq = if id.modified { -q } else { q };
    let alpha = crate::characteristic::char_value(id.parity, id.r, q_eq)?.alpha;
    Ok(match id.class {
        Class::Angular => -(alpha - q_eq * 2.0 * (arg * 2.0).cos()),
        Class::Radial => alpha - q_eq * 2.0 * (arg * 2.0).cosh(),
    })
}

fn trig_first(parity: Parity, r: u32, theta: C64) -> EvalResult {
    let n = r as f64;
    match parity {
        Parity::Even if r == 0 => EvalResult {
            value: C64::from(FRAC_1_SQRT_2),
            derivative: C64::new(0.0, 0.0),
        },
        Parity::Even => EvalResult {
            value: (theta * n).cos(),
            derivative: -(theta * n).sin() * n,
        },
        Parity::Odd => EvalResult {
            value: (theta * n).sin(),
            derivative: (theta * n).cos() * n,
        },
    }
}

/// `ce_r` (even) or `se_r` (odd) at complex θ.
pub fn angular_first(parity: Parity, r: u32, q: C64, theta: C64) -> Result<EvalResult> {
    crate::characteristic::validate(parity, r, q)?;
    check_arg(theta)?;
    if q.norm() < TRIG_LIMIT_Q {
        return Ok(trig_first(parity, r, theta));
    }
    let small = q.norm() >= RADIAL_ROUTE_Q_MIN && q.norm() < RADIAL_ROUTE_Q_MAX;
    if theta.im == 0.0 && !small {
        let t = fourier_coeffs(parity, r, q)?;
        let (value, derivative) = t.eval(theta);
        return Ok(EvalResult { value, derivative });
    }
    angular_via_radial(parity, r, q, theta)
}

/// Angular function through `f(θ) = c · J(q, -iθ)` with the joining factor `c`.
pub fn angular_via_radial(parity: Parity, r: u32, q: C64, theta: C64) -> Result<EvalResult> {
    let jf = joining_factor(parity, r, q)?;
    // Period-π reduction keeps |Im μ| ≤ π/2; the parity of r sets the sign.
    let k = (theta.re / PI).round();
    let reduced = theta - PI * k;
    let sign = if r % 2 == 1 && (k as i64) % 2 != 0 { -1.0 } else { 1.0 };
    let mu = C64::new(0.0, -1.0) * reduced;
    let j = radial(parity, Kind::First, r, q, mu)?;
    Ok(EvalResult {
        value: jf.value * j.value * sign,
        derivative: jf.value * C64::new(0.0, -1.0) * j.derivative * sign,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JoiningFactor {
    pub value: C64,
    /// Angular point where the Fourier and radial representations were matched.
    pub matching_point: f64,
    /// Set when the matching point is not θ = 0.
    pub shifted: bool,
}

type Key = (Parity, u32, u64, u64);

fn jf_cache() -> &'static RwLock<HashMap<Key, JoiningFactor>> {
    static CACHE: OnceLock<RwLock<HashMap<Key, JoiningFactor>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Constant `c` with `ce_r(q, θ) = c · Je_r(q, -iθ)` (or the odd analogue).
pub fn joining_factor(parity: Parity, r: u32, q: C64) -> Result<JoiningFactor> {
    crate::characteristic::validate(parity, r, q)?;
    if q.norm() == 0.0 {
        return Err(Error::Domain("joining factor needs q != 0".into()));
    }
    let key = (parity, r, q.re.to_bits(), q.im.to_bits());
    if let Some(v) = jf_cache().read().unwrap().get(&key) {
        return Ok(*v);
    }
    let t = fourier_coeffs(parity, r, q)?;
    let alpha_scale = 1.0 + t.alpha.norm().sqrt();
    let weight = |th: f64| {
        let (f, df) = t.eval(C64::from(th));
        f.norm().max(df.norm() / alpha_scale)
    };
    let theta_m = if weight(FRAC_PI_2) > weight(0.0) { FRAC_PI_2 } else { 0.0 };
    let jf = joining_factor_at(parity, r, q, &t, theta_m)?;
    jf_cache().write().unwrap().insert(key, jf);
    Ok(jf)
}

/// Least-squares match of value and derivative at one angular point.
pub fn joining_factor_at(
    parity: Parity,
    r: u32,
    q: C64,
    t: &CoefficientTable,
    theta_m: f64,
) -> Result<JoiningFactor> {
    let (f, df) = t.eval(C64::from(theta_m));
    let j = radial(parity, Kind::First, r, q, C64::new(0.0, -theta_m))?;
    // Scale first so tiny radial values do not underflow when squared.
    let m = j.value.norm().max(j.derivative.norm());
    let g = j.value / m;
    let dg = C64::new(0.0, -1.0) * j.derivative / m;
    let den = (g.norm_sqr() + dg.norm_sqr()) * m;
    if !(m > 0.0 && den.is_finite() && den > 0.0) {
        return Err(Error::Domain(format!(
            "radial partner of {parity} r={r} vanishes with its derivative at θ={theta_m}"
        )));
    }
    Ok(JoiningFactor {
        value: (f * g.conj() + df * dg.conj()) / den,
        matching_point: theta_m,
        shifted: theta_m != 0.0,
    })
}

/// `Fe_r` (even) or `Fo_r` (odd), Wronskian 2/π with the first kind.
pub fn angular_second(parity: Parity, r: u32, q: C64, theta: C64) -> Result<EvalResult> {
    crate::characteristic::validate(parity, r, q)?;
    check_arg(theta)?;
    if q.norm() < TRIG_LIMIT_Q {
        let n = r as f64;
        return Ok(match (parity, r) {
            (Parity::Even, 0) => EvalResult {
                value: theta * (2.0 * 2f64.sqrt() / PI),
                derivative: C64::from(2.0 * 2f64.sqrt() / PI),
            },
            (Parity::Even, _) => {
                let c = 2.0 / (PI * n);
                EvalResult {
                    value: (theta * n).sin() * c,
                    derivative: (theta * n).cos() * (c * n),
                }
            }
            (Parity::Odd, _) => {
                let c = -2.0 / (PI * n);
                EvalResult {
                    value: (theta * n).cos() * c,
                    derivative: -(theta * n).sin() * (c * n),
                }
            }
        });
    }
    let s = second_kind_for(parity, r, q, theta.im)?;
    let (value, derivative) = s.eval(theta);
    Ok(EvalResult { value, derivative })
}

fn check_arg(z: C64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-finite argument {z}")))
    }
}

/// Bessel-product combination used by a radial series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Product {
    /// `J_a(x1) J_b(x2)`: first kind.
    JJ,
    /// `J_a(x1) Y_b(x2)`: second kind.
    JY,
    /// `J_a(x1) H_b(x2)`: third kind.
    JH,
    /// `I_a(y1) I_b(y2)`: modified first kind.
    II,
    /// `I_a(y1) K_b(y2)`: modified third kind.
    IK,
}

impl Product {
    pub fn families(self) -> (BesselFamily, BesselFamily) {
        match self {
            Product::JJ => (BesselFamily::J, BesselFamily::J),
            Product::JY => (BesselFamily::J, BesselFamily::Y),
            Product::JH => (BesselFamily::J, BesselFamily::H),
            Product::II => (BesselFamily::I, BesselFamily::I),
            Product::IK => (BesselFamily::I, BesselFamily::K),
        }
    }
}

/// Highest Bessel order a series over `t` touches.
pub fn bessel_order_needed(t: &CoefficientTable) -> usize {
    let m_max = t.coeffs.len() - 1;
    let shift_hi = ((t.r() + t.p()) / 2) as usize;
    let shift_lo = ((t.r() - t.p()) / 2) as usize;
    (m_max + shift_hi).max(shift_lo) + 1
}

/// Sum of the Bessel-product series and its μ-derivative, using batches
/// `b1` at `x1 = h e^{-μ}` and `b2` at `x2 = h e^{μ}`.
pub fn product_series(
    t: &CoefficientTable,
    product: Product,
    b1: &BesselBatch,
    b2: &BesselBatch,
) -> (C64, C64) {
    let r = t.r() as i64;
    let p = t.p() as i64;
    let x1 = b1.argument;
    let x2 = b2.argument;
    let even = t.parity() == Parity::Even;
    // Relative sign of the exchanged product.
    let mut exch = if even { 1.0 } else { -1.0 };
    if product == Product::IK && p == 1 {
        exch = -exch;
    }
    let alternating = product != Product::II;
    let mut sum = C64::new(0.0, 0.0);
    let mut dsum = C64::new(0.0, 0.0);
    for (m, &c) in t.coeffs.iter().enumerate() {
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let mi = m as i64;
        let a = mi - (r - p) / 2;
        let b = mi + (r + p) / 2;
        let f1a = b1.value(a);
        let f1b = b1.value(b);
        let f2a = b2.value(a);
        let f2b = b2.value(b);
        let d1a = b1.derivative(a) * x1;
        let d1b = b1.derivative(b) * x1;
        let d2a = b2.derivative(a) * x2;
        let d2b = b2.derivative(b) * x2;
        let term = f1a * f2b + f1b * f2a * exch;
        // d/dμ: x1 contributes -x1 F', x2 contributes +x2 F'.
        let dterm = (-d1a * f2b + f1a * d2b) + (-d1b * f2a + f1b * d2a) * exch;
        let s = if alternating && m % 2 == 1 { -c } else { c };
        sum += s * term;
        dsum += s * dterm;
    }
    let mut pre = t.at_order().inv();
    if even && r == 0 {
        pre *= 0.5;
    }
    if product != Product::II && ((r - p) / 2) % 2 == 1 {
        pre = -pre;
    }
    (sum * pre, dsum * pre)
}

fn series_at(t: &CoefficientTable, product: Product, h: C64, mu: C64) -> Result<EvalResult> {
    check_arg(mu)?;
    let x1 = h * (-mu).exp();
    let x2 = h * mu.exp();
    let n = bessel_order_needed(t);
    let (f1, f2) = product.families();
    let b1 = bessel_batch(f1, x1, n)?;
    let b2 = bessel_batch(f2, x2, n)?;
    let (value, derivative) = product_series(t, product, &b1, &b2);
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::Overflow {
            context: format!("radial series at μ={mu}"),
        });
    }
    Ok(EvalResult { value, derivative })
}

/// `Je/Jo`, `Ye/Yo` or `He/Ho` at complex μ.
pub fn radial(parity: Parity, kind: Kind, r: u32, q: C64, mu: C64) -> Result<EvalResult> {
    crate::characteristic::validate(parity, r, q)?;
    if q.norm() == 0.0 {
        return Err(Error::Domain("radial functions need q != 0".into()));
    }
    let t = fourier_coeffs(parity, r, q)?;
    let h = q.sqrt();
    match kind {
        Kind::First => series_at(&t, Product::JJ, h, mu),
        Kind::Second => series_at(&t, Product::JY, h, mu),
        // Hankel products directly: J + iY cancels wherever the result decays.
        Kind::Third => series_at(&t, Product::JH, h, mu),
    }
}

/// `Ie/Io` (first kind) or `Ke/Ko` (third kind) of the modified equation
/// `M'' - (α(-q) + 2q cosh 2μ) M = 0`.
pub fn radial_modified(parity: Parity, kind: Kind, r: u32, q: C64, mu: C64) -> Result<EvalResult> {
    crate::characteristic::validate(parity, r, q)?;
    if q.norm() == 0.0 {
        return Err(Error::Domain("modified radial functions need q != 0".into()));
    }
    let q_ord = -q;
    let t = fourier_coeffs(parity, r, q_ord)?;
    // sqrt(q_ord) = i h, so J_n(i h x) = i^n I_n(h x) holds on every branch.
    let h = C64::new(0.0, -1.0) * q_ord.sqrt();
    match kind {
        Kind::First => series_at(&t, Product::II, h, mu),
        Kind::Third => series_at(&t, Product::IK, h, mu),
        Kind::Second => Err(Error::InvalidFunction(
            "modified radial functions are of the first or third kind".into(),
        )),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WronskianReport {
    pub parity: Parity,
    pub r: u32,
    pub q: C64,
    pub mu_grid: Vec<f64>,
    pub values: Vec<C64>,
    pub expected: f64,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Radial first/second-kind Wronskian over a μ grid.
pub fn wronskian_check(parity: Parity, r: u32, q: C64, mu_grid: &[f64]) -> Result<WronskianReport> {
    let expected = 2.0 / PI;
    let mut values = Vec::with_capacity(mu_grid.len());
    let mut max_dev: f64 = 0.0;
    for &mu in mu_grid {
        let m = C64::from(mu);
        let j = radial(parity, Kind::First, r, q, m)?;
        let y = radial(parity, Kind::Second, r, q, m)?;
        let w = j.value * y.derivative - j.derivative * y.value;
        max_dev = max_dev.max((w - expected).norm());
        values.push(w);
    }
    Ok(WronskianReport {
        parity,
        r,
        q,
        mu_grid: mu_grid.to_vec(),
        values,
        expected,
        max_deviation: max_dev,
        pass: max_dev < 1e-9,
    })
}

/// Angular first/second-kind Wronskian at θ.
pub fn angular_wronskian(parity: Parity, r: u32, q: C64, theta: f64) -> Result<C64> {
    let th = C64::from(theta);
    let f = angular_first(parity, r, q, th)?;
    let g = angular_second(parity, r, q, th)?;
    Ok(f.value * g.derivative - f.derivative * g.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn second_kind_wronskian_off_the_real_axis() {
        use std::f64::consts::FRAC_2_PI;
        // Harmonic n is amplified by e^{n |Im θ|}; the series must reach further.
        for (parity, r, q, th) in [
            (Parity::Even, 4, c(-9.6549, 0.6867), c(2.2993, -0.99)),
            (Parity::Odd, 1, c(-1.7042, 9.2962), c(1.8767, 0.9868)),
            (Parity::Even, 2, c(3.0, 0.0), c(0.4, 2.0)),
        ] {
            let f = angular_first(parity, r, q, th).unwrap();
            let g = angular_second(parity, r, q, th).unwrap();
            let w = f.value * g.derivative - f.derivative * g.value;
            let scale = f.value.norm() * g.derivative.norm() + f.derivative.norm() * g.value.norm();
            assert!((w - FRAC_2_PI).norm() <= 1e-12 * scale.max(1.0), "{parity} r={r} q={q} W={w}");
        }
    }

    #[test]
    fn ce0_at_zero_q() {
        let v = angular_first(Parity::Even, 0, c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(v.value, c(FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn radial_wronskian_examples() {
        let rep = wronskian_check(Parity::Even, 2, c(1.0, 0.0), &[1.5]).unwrap();
        assert!(rep.pass, "{:?}", rep.values);
        for &q in &[0.5, 2.0, 10.0] {
            for r in 0..=6u32 {
                for parity in [Parity::Even, Parity::Odd] {
                    if parity == Parity::Odd && r == 0 {
                        continue;
                    }
                    let rep = wronskian_check(parity, r, c(q, 0.0), &[0.1, 0.7, 1.5, 3.0]).unwrap();
                    assert!(rep.pass, "{parity} r={r} q={q}: {:?}", rep.values);
                }
            }
        }
    }

    #[test]
    fn fourier_and_radial_routes_agree() {
        for &q in &[c(0.5, 0.0), c(3.0, 0.0), c(-4.0, 0.0), c(2.0, 1.5), c(30.0, 0.0)] {
            for r in 0..6u32 {
                for parity in [Parity::Even, Parity::Odd] {
                    if parity == Parity::Odd && r == 0 {
                        continue;
                    }
                    let t = fourier_coeffs(parity, r, q).unwrap();
                    for th in [0.0, 0.4, 1.2, 2.0, -2.9] {
                        let (f, df) = t.eval(c(th, 0.0));
                        let v = angular_via_radial(parity, r, q, c(th, 0.0)).unwrap();
                        let scale = 1.0 + t.alpha.norm().sqrt();
                        assert!((v.value - f).norm() < 1e-10, "{parity} r={r} q={q} θ={th}");
                        assert!((v.derivative - df).norm() < 1e-10 * scale, "{parity} r={r} q={q} θ={th} d");
                    }
                }
            }
        }
    }

    #[test]
    fn joining_factor_is_point_independent() {
        for &q in &[c(1.0, 0.0), c(-2.0, 0.0), c(3.0, -1.0)] {
            for r in 0..4u32 {
                let t = fourier_coeffs(Parity::Even, r, q).unwrap();
                let a = joining_factor_at(Parity::Even, r, q, &t, 0.0).unwrap().value;
                let b = joining_factor_at(Parity::Even, r, q, &t, FRAC_PI_2).unwrap().value;
                assert!((a - b).norm() < 1e-10 * a.norm(), "r={r} q={q}");
            }
        }
    }

    #[test]
    fn invalid_ids_are_rejected() {
        assert!(matches!(
            evaluate(Family::Se.id(0), c(1.0, 0.0), c(0.0, 0.0)),
            Err(Error::InvalidFunction(_))
        ));
        assert!(matches!(
            radial(Parity::Even, Kind::First, 1, c(0.0, 0.0), c(1.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn modified_identities() {
        for &qv in &[0.5, 2.0] {
            let q = c(qv, 0.0);
            for r in 0..=6u32 {
                for parity in [Parity::Even, Parity::Odd] {
                    if parity == Parity::Odd && r == 0 {
                        continue;
                    }
                    for &mu in &[0.3, 1.0, 2.0] {
                        let m = c(mu, 0.0);
                        let ip = C64::new(0.0, -1.0).powu(r);
                        let ie = radial_modified(parity, Kind::First, r, -q, m).unwrap();
                        let je = radial(parity, Kind::First, r, q, m).unwrap();
                        assert!((ie.value - ip * je.value).norm() < 1e-10 * je.value.norm().max(1.0));
                        let ke = radial_modified(parity, Kind::Third, r, -q, m).unwrap();
                        let he = radial(parity, Kind::Third, r, q, m).unwrap();
                        let f = C64::new(0.0, 1.0).powu(r + 1) * FRAC_PI_2;
                        assert!(
                            (ke.value - f * he.value).norm() < 1e-10 * he.value.norm().max(1.0),
                            "{parity} r={r} q={qv} μ={mu}: {} vs {}",
                            ke.value,
                            f * he.value
                        );
                    }
                }
            }
        }
    }
}
