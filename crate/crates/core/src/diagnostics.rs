//! Self-check suites shared by the CLI `check` command and the test harness.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::bessel::{bessel_batch, BesselFamily};
use crate::coefficients::fourier_coeffs;
use crate::error::{Error, Result};
use crate::mathieu::{angular_first, evaluate, ode_potential, radial_modified, wronskian_check, Family, Kind};
use crate::Parity;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Wronskian,
    Normalization,
    Ode,
    Bessel,
    Symmetry,
    Modified,
    Limits,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "wronskian" => Suite::Wronskian,
            "normalization" => Suite::Normalization,
            "ode" => Suite::Ode,
            "bessel" => Suite::Bessel,
            "symmetry" => Suite::Symmetry,
            "modified" => Suite::Modified,
            "limits" => Suite::Limits,
            other => return Err(Error::Parse(format!("unknown suite '{other}'"))),
        })
    }
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Wronskian => "wronskian",
            Suite::Normalization => "normalization",
            Suite::Ode => "ode",
            Suite::Bessel => "bessel",
            Suite::Symmetry => "symmetry",
            Suite::Modified => "modified",
            Suite::Limits => "limits",
        }
    }

    pub fn default_orders(self) -> Vec<u32> {
        match self {
            Suite::Normalization => (0..=8).collect(),
            Suite::Bessel => (0..=20).collect(),
            _ => (0..=6).collect(),
        }
    }

    pub fn default_qs(self) -> Vec<C64> {
        let re = |v: &[f64]| v.iter().map(|&x| C64::from(x)).collect();
        match self {
            Suite::Wronskian => re(&[0.5, 2.0, 10.0]),
            Suite::Normalization => re(&[-5.0, -1.0, 1.0, 5.0]),
            Suite::Ode => vec![
                C64::new(0.5, 0.0),
                C64::new(2.0, 0.0),
                C64::new(-3.0, 0.0),
                C64::new(1.0, 1.0),
                C64::new(4.0, -2.0),
            ],
            Suite::Bessel => vec![
                C64::new(0.3, 0.0),
                C64::new(5.0, 0.0),
                C64::new(2.0, 3.0),
                C64::new(25.0, -4.0),
            ],
            Suite::Symmetry => vec![C64::new(0.5, 0.0), C64::new(2.0, 0.0), C64::new(6.0, 0.0), C64::new(1.0, 1.5)],
            Suite::Modified => re(&[0.5, 2.0]),
            Suite::Limits => re(&[0.0, 1e-13, 1e-11]),
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Suite::Wronskian => 1e-9,
            Suite::Normalization => 1e-8,
            Suite::Ode => 1e-6,
            Suite::Bessel => 1e-12,
            Suite::Symmetry => 1e-9,
            Suite::Modified => 1e-10,
            Suite::Limits => 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: bool,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub samples: usize,
    /// Description of the sample with the largest deviation.
    pub worst: String,
    /// Samples that errored instead of producing a value.
    pub errors: Vec<String>,
}

struct Tally {
    max: f64,
    worst: String,
    samples: usize,
    errors: Vec<String>,
}

impl Tally {
    fn new() -> Tally {
        Tally {
            max: 0.0,
            worst: String::new(),
            samples: 0,
            errors: Vec::new(),
        }
    }

    fn record(&mut self, dev: f64, what: impl FnOnce() -> String) {
        self.samples += 1;
        // NaN counts as the worst possible deviation.
        if !(dev <= self.max) {
            self.max = if dev.is_nan() { f64::INFINITY } else { dev };
            self.worst = what();
        }
    }

    fn fail(&mut self, what: String, e: Error) {
        self.samples += 1;
        self.errors.push(format!("{what}: {e}"));
    }

    fn finish(self, suite: Suite) -> SuiteReport {
        let tol = suite.tolerance();
        SuiteReport {
            suite,
            pass: self.errors.is_empty() && self.max <= tol,
            tolerance: tol,
            max_deviation: self.max,
            samples: self.samples,
            worst: self.worst,
            errors: self.errors,
        }
    }
}

fn parities(r: u32) -> impl Iterator<Item = Parity> {
    [Parity::Even, Parity::Odd]
        .into_iter()
        .filter(move |&p| !(p == Parity::Odd && r == 0))
}

pub fn run_suite(suite: Suite, orders: &[u32], qs: &[C64]) -> SuiteReport {
    match suite {
        Suite::Wronskian => wronskian_suite(orders, qs),
        Suite::Normalization => normalization_suite(orders, qs),
        Suite::Ode => ode_suite(orders, qs),
        Suite::Bessel => bessel_suite(orders, qs),
        Suite::Symmetry => symmetry_suite(orders, qs),
        Suite::Modified => modified_suite(orders, qs),
        Suite::Limits => limits_suite(orders, qs),
    }
}

/// `W{Je, Ye}` (and odd) equals `2/π` on `μ ∈ [0.1, 3]`.
pub fn wronskian_suite(orders: &[u32], qs: &[C64]) -> SuiteReport {
    let grid = [0.1, 0.4, 0.7, 1.0, 1.5, 2.0, 2.5, 3.0];
    let mut t = Tally::new();
    for &q in qs {
        for &r in orders {
            for p in parities(r) {
                match wronskian_check(p, r, q, &grid) {
                    Ok(rep) => t.record(rep.max_deviation, || format!("{p} r={r} q={q}")),
                    Err(e) => t.fail(format!("{p} r={r} q={q}"), e),
                }
            }
        }
    }
    t.finish(Suite::Wronskian)
}

/// `∫₀^{2π} ce_r² = ∫₀^{2π} se_r² = π`, by the periodic trapezoid rule.
pub fn normalization_suite(orders: &[u32], qs: &[C64]) -> SuiteReport {
    let mut t = Tally::new();
    for &q in qs {
        for &r in orders {
            for p in parities(r) {
                let what = || format!("{p} r={r} q={q}");
                let n = match fourier_coeffs(p, r, q) {
                    Ok(tb) => 8 * (tb.coeffs.len() + r as usize + 8),
                    Err(e) => {
                        t.fail(what(), e);
                        continue;
                    }
                };
                let h = 2.0 * PI / n as f64;
                let mut sum = C64::new(0.0, 0.0);
                let mut err = None;
                for k in 0..n {
                    match angular_first(p, r, q, C64::from(h * k as f64)) {
                        Ok(v) => sum += v.value * v.value,
                        Err(e) => {
                            err = Some(e);
                            break;
                        }
                    }
                }
                match err {
                    Some(e) => t.fail(what(), e),
                    None => t.record((sum * h - PI).norm(), what),
                }
            }
        }
    }
    t.finish(Suite::Normalization)
}

/// Every family satisfies its equation: central second difference with step
/// `1e-4` against `V f`, relative to `(1 + |V|)` times the local amplitude.
pub fn ode_suite(orders: &[u32], qs: &[C64]) -> SuiteReport {
    let args = [C64::new(0.3, 0.0), C64::new(1.1, 0.0), C64::new(0.5, 0.2)];
    let h = 1e-4;
    let mut t = Tally::new();
    for fam in Family::ALL {
        for &r in orders {
            let id = fam.id(r);
            if id.validate().is_err() {
                continue;
            }
            for &q in qs {
                for &x in &args {
                    let what = || format!("{fam:?} r={r} q={q} arg={x}");
                    let eval = |z: C64| evaluate(id, q, z);
                    let res = (|| -> Result<(f64, f64)> {
                        let fm = eval(x - h)?;
                        let f0 = eval(x)?;
                        let fp = eval(x + h)?;
                        let v = ode_potential(id, q, x)?;
                        let fd2 = (fp.value - f0.value * 2.0 + fm.value) / (h * h);
                        // Local amplitude, so zeros of oscillating solutions do not inflate it.
                        let mag = fm.value.norm().max(f0.value.norm()).max(fp.value.norm())
                            .max(f0.derivative.norm() / (1.0 + v.norm()).sqrt());
                        let scale = (1.0 + v.norm()) * mag;
                        let ode = (fd2 - v * f0.value).norm() / scale;
                        // The returned derivative against the first difference.
                        let fd1 = (fp.value - fm.value) / (2.0 * h);
                        let deriv = (fd1 - f0.derivative).norm() / (scale + f0.derivative.norm());
                        Ok((ode, deriv))
                    })();
                    match res {
                        Ok((a, b)) => {
                            if mag_ok(a) && mag_ok(b) {
                                t.record(a.max(b), what);
                            } else {
                                t.record(f64::INFINITY, what);
                            }
                        }
                        Err(e) => t.fail(what(), e),
                    }
                }
            }
        }
    }
    t.finish(Suite::Ode)
}

fn mag_ok(v: f64) -> bool {
    v.is_finite()
}

/// Wronskians `W{J,Y} = 2/(πz)`, `W{I,K} = -1/z` and the three-term
/// recurrences, relative to the product magnitudes.
pub fn bessel_suite(orders: &[u32], zs: &[C64]) -> SuiteReport {
    let n_max = orders.iter().copied().max().unwrap_or(0) as usize + 1;
    let mut t = Tally::new();
    for &z in zs {
        let what = |fam: &str, n: u32| format!("{fam} n={n} z={z}");
        let batches = (|| -> Result<_> {
            Ok((
                bessel_batch(BesselFamily::J, z, n_max)?,
                bessel_batch(BesselFamily::Y, z, n_max)?,
                bessel_batch(BesselFamily::I, z, n_max)?,
                bessel_batch(BesselFamily::K, z, n_max)?,
            ))
        })();
        let (j, y, i, k) = match batches {
            Ok(b) => b,
            Err(e) => {
                t.fail(format!("z={z}"), e);
                continue;
            }
        };
        for &n in orders {
            let m = n as i64;
            let wjy = j.value(m) * y.derivative(m) - j.derivative(m) * y.value(m);
            let sjy = (j.value(m) * y.derivative(m)).norm() + (j.derivative(m) * y.value(m)).norm();
            t.record((wjy - 2.0 / (PI * z)).norm() / sjy, || what("JY", n));
            let wik = i.value(m) * k.derivative(m) - i.derivative(m) * k.value(m);
            let sik = (i.value(m) * k.derivative(m)).norm() + (i.derivative(m) * k.value(m)).norm();
            t.record((wik + 1.0 / z).norm() / sik, || what("IK", n));
            if n >= 1 {
                let lhs = j.value(m - 1) + j.value(m + 1);
                let rhs = j.value(m) * (2.0 * n as f64) / z;
                let s = j.value(m - 1).norm() + j.value(m + 1).norm() + rhs.norm();
                t.record((lhs - rhs).norm() / s, || what("J recurrence", n));
            }
        }
    }
    t.finish(Suite::Bessel)
}

/// Reflection `q → -q`: `ce_{2n}(-q,θ) = (-1)^n ce_{2n}(q,π/2-θ)`,
/// `ce_{2n+1}(-q,θ) = (-1)^n se_{2n+1}(q,π/2-θ)`,
/// `se_{2n+1}(-q,θ) = (-1)^n ce_{2n+1}(q,π/2-θ)`,
/// `se_{2n+2}(-q,θ) = (-1)^n se_{2n+2}(q,π/2-θ)`.
pub fn symmetry_suite(orders: &[u32], qs: &[C64]) -> SuiteReport {
    let thetas = [
        C64::new(0.3, 0.0),
        C64::new(1.2, 0.0),
        C64::new(0.4, 0.7),
        C64::new(0.0, 2.0),
        C64::new(0.0, -1.5),
        C64::new(0.9, -2.0),
    ];
    let mut t = Tally::new();
    for &q in qs {
        for &r in orders {
            for p in parities(r) {
                let (partner, n) = match (p, r % 2) {
                    (Parity::Even, 0) => (Parity::Even, r / 2),
                    (Parity::Even, _) => (Parity::Odd, (r - 1) / 2),
                    (Parity::Odd, 1) => (Parity::Even, (r - 1) / 2),
                    (Parity::Odd, _) => (Parity::Odd, r / 2 - 1),
                };
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                for &th in &thetas {
                    let what = || format!("{p} r={r} q={q} theta={th}");
                    let res = (|| -> Result<f64> {
                        let lhs = angular_first(p, r, -q, th)?.value;
                        let rhs = angular_first(partner, r, q, C64::from(FRAC_PI_2) - th)?.value * sign;
                        Ok((lhs - rhs).norm() / lhs.norm().max(1.0))
                    })();
                    match res {
                        Ok(d) => t.record(d, what),
                        Err(e) => t.fail(what(), e),
                    }
                }
            }
        }
    }
    t.finish(Suite::Symmetry)
}

/// `Ie_r(-q,μ) = i^{-r} Je_r(q,μ)` and `Ke_r(-q,μ) = i^{r+1}(π/2) He_r(q,μ)`,
/// with the odd analogues.
pub fn modified_suite(orders: &[u32], qs: &[C64]) -> SuiteReport {
    let mus = [0.3, 1.0, 2.0];
    let mut t = Tally::new();
    for &q in qs {
        for &r in orders {
            for p in parities(r) {
                let ir = C64::new(0.0, 1.0).powi(-(r as i32));
                let kr = C64::new(0.0, 1.0).powi(r as i32 + 1) * FRAC_PI_2;
                for &mu in &mus {
                    let what = |w: &str| format!("{w} {p} r={r} q={q} mu={mu}");
                    let m = C64::from(mu);
                    let res = (|| -> Result<(f64, f64)> {
                        let i = radial_modified(p, Kind::First, r, -q, m)?;
                        let j = crate::mathieu::radial(p, Kind::First, r, q, m)?;
                        let k = radial_modified(p, Kind::Third, r, -q, m)?;
                        let h = crate::mathieu::radial(p, Kind::Third, r, q, m)?;
                        let di = (i.value - ir * j.value).norm() / i.value.norm().max(1e-300);
                        let dk = (k.value - kr * h.value).norm() / k.value.norm().max(1e-300);
                        Ok((di, dk))
                    })();
                    match res {
                        Ok((a, b)) => {
                            t.record(a, || what("I"));
                            t.record(b, || what("K"));
                        }
                        Err(e) => t.fail(what("I/K"), e),
                    }
                }
            }
        }
    }
    t.finish(Suite::Modified)
}

/// `ce_r → cos rθ`, `se_r → sin rθ`, `ce_0 → 1/√2` as `q → 0`.
pub fn limits_suite(orders: &[u32], qs: &[C64]) -> SuiteReport {
    let thetas = [0.0, 0.37, 1.3, 2.9, 5.0];
    let mut t = Tally::new();
    for &q in qs {
        for &r in orders {
            for p in parities(r) {
                for &th in &thetas {
                    let what = || format!("{p} r={r} q={q} theta={th}");
                    let expect = match (p, r) {
                        (Parity::Even, 0) => FRAC_1_SQRT_2,
                        (Parity::Even, _) => (r as f64 * th).cos(),
                        (Parity::Odd, _) => (r as f64 * th).sin(),
                    };
                    match angular_first(p, r, q, C64::from(th)) {
                        Ok(v) => t.record((v.value - expect).norm(), what),
                        Err(e) => t.fail(what(), e),
                    }
                }
            }
        }
    }
    t.finish(Suite::Limits)
}
