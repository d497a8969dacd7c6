//! Casimir energy of a perfectly reflecting strip (or elliptic cylinder)
//! parallel to a perfectly reflecting plane, and the edge-coefficient fit.
//!
//! The kernel functions are the angular functions at imaginary argument,
//! written through the joining factor as radial functions of positive
//! parameter `Q = d²p²/4`. The elliptic T-matrices come from the Wronskian
//! `W_μ{Ie, Ke} = -1`, which gives `Ke = Ie ∫_μ^∞ dt / Ie²` and so avoids
//! the cancelling I·K series near the strip.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{i_values_real, j_values_real};
use crate::coefficients::{fourier_coeffs, CoefficientTable};
use crate::error::{Error, Result};
use crate::mathieu::{bessel_order_needed, joining_factor};
use crate::quadrature::{GaussKronrod15, GaussLegendre};
use crate::Parity;

type C64 = Complex64;

/// Prefactor of the proximity-force energy, `π²/720`.
pub const PFA_CONSTANT: f64 = PI * PI / 720.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    /// Sum of Dirichlet and Neumann.
    Electromagnetic,
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" | "d" => Ok(BoundaryCondition::Dirichlet),
            "neumann" | "n" => Ok(BoundaryCondition::Neumann),
            "em" | "electromagnetic" => Ok(BoundaryCondition::Electromagnetic),
            other => Err(Error::Parse(format!("unknown boundary condition '{other}'"))),
        }
    }
}

/// Scalar boundary condition on one surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    Dirichlet,
    Neumann,
}

impl Surface {
    /// Reflection factor of the plane.
    pub fn plane_t(self) -> f64 {
        match self {
            Surface::Dirichlet => -1.0,
            Surface::Neumann => 1.0,
        }
    }
}

/// Channels whose function parity matches the parity of `r`, and the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParitySector {
    Matched,
    Mismatched,
}

impl ParitySector {
    /// Family of the radial kernel functions in this sector.
    pub fn kernel_family(self) -> Parity {
        match self {
            ParitySector::Matched => Parity::Even,
            ParitySector::Mismatched => Parity::Odd,
        }
    }

    /// Family of the T-matrix for order `r` in this sector.
    pub fn t_family(self, r: u32) -> Parity {
        match (self, r % 2) {
            (ParitySector::Matched, 0) | (ParitySector::Mismatched, 1) => Parity::Even,
            _ => Parity::Odd,
        }
    }

    pub fn first_order(self) -> u32 {
        match self {
            ParitySector::Matched => 0,
            ParitySector::Mismatched => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    pub s_min: f64,
    pub s_max: f64,
    /// Log-spaced Gauss–Kronrod panels over `[s_min, s_max]`.
    pub s_panels: usize,
    /// Kernel integrals stop once `s (cosh u - 1)` exceeds this.
    pub u_exponent_cut: f64,
    pub u_max_halvings: u32,
    /// First channel cutoff tried when `r_max` is not fixed.
    pub r_start: u32,
    pub r_cap: u32,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            s_min: 1e-4,
            s_max: 40.0,
            s_panels: 12,
            u_exponent_cut: 36.0,
            u_max_halvings: 4,
            r_start: 12,
            r_cap: 80,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CasimirConfig {
    pub d: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub mu0: f64,
    pub phi: f64,
    pub bc: BoundaryCondition,
    /// Fixed channel cutoff; `None` grows it until converged.
    pub r_max: Option<u32>,
    pub quad: QuadSettings,
    pub tol: f64,
}

impl CasimirConfig {
    pub fn new(d: f64, h: f64, bc: BoundaryCondition) -> CasimirConfig {
        CasimirConfig {
            d,
            h,
            mu0: 0.0,
            phi: 0.0,
            bc,
            r_max: None,
            quad: QuadSettings::default(),
            tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos(self.d, "d")?;
        pos(self.h, "H")?;
        if !(self.mu0.is_finite() && self.mu0 >= 0.0) {
            return Err(Error::Domain(format!("mu0 must be non-negative, got {}", self.mu0)));
        }
        if self.phi != 0.0 {
            return Err(Error::Domain("only the parallel orientation phi = 0 is supported".into()));
        }
        if self.mu0 > 0.0 && self.h <= self.d * self.mu0.sinh() * (1.0 + 1e-9) {
            return Err(Error::Domain(format!(
                "the cylinder (semi-minor axis {}) touches the plane at H = {}",
                self.d * self.mu0.sinh(),
                self.h
            )));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Domain(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if let Some(r) = self.r_max {
            if r < 4 {
                return Err(Error::Domain("r_max must be at least 4".into()));
            }
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.mu0 == 0.0 && self.h <= self.d {
            w.push(format!(
                "H = {} <= d = {}: the plane is closer than the strip half-width",
                self.h, self.d
            ));
        }
        w
    }

    fn surfaces(&self) -> Vec<Surface> {
        match self.bc {
            BoundaryCondition::Dirichlet => vec![Surface::Dirichlet],
            BoundaryCondition::Neumann => vec![Surface::Neumann],
            BoundaryCondition::Electromagnetic => vec![Surface::Dirichlet, Surface::Neumann],
        }
    }
}

fn real_table(parity: Parity, r: u32, q: f64) -> Result<Arc<CoefficientTable>> {
    fourier_coeffs(parity, r, C64::from(q))
}

/// `J_n` with reflection for negative `n`.
#[inline]
fn j_at(v: &[f64], n: i64) -> f64 {
    let x = v[n.unsigned_abs() as usize];
    if n < 0 && n % 2 != 0 {
        -x
    } else {
        x
    }
}

#[inline]
fn i_at(v: &[f64], n: i64) -> f64 {
    v[n.unsigned_abs() as usize]
}

fn prefactor(t: &CoefficientTable, alternating: bool) -> f64 {
    let r = t.r() as i64;
    let p = t.p() as i64;
    let mut pre = 1.0 / t.at_order().re;
    if t.parity() == Parity::Even && r == 0 {
        pre *= 0.5;
    }
    if alternating && ((r - p) / 2) % 2 == 1 {
        pre = -pre;
    }
    // The modified functions carry i^{-r} relative to the table at -Q.
    if !alternating && r % 2 == 1 {
        pre = -pre;
    }
    pre
}

/// `Je_r(Q, u)` or `Jo_r(Q, u)` for real positive `Q` and real `u`.
fn radial_real(t: &CoefficientTable, j1: &[f64], j2: &[f64]) -> f64 {
    let r = t.r() as i64;
    let p = t.p() as i64;
    let exch = if t.parity() == Parity::Even { 1.0 } else { -1.0 };
    let mut sum = 0.0;
    for (m, c) in t.coeffs.iter().enumerate() {
        let c = c.re;
        if c == 0.0 {
            continue;
        }
        let m = m as i64;
        let a = m - (r - p) / 2;
        let b = m + (r + p) / 2;
        let term = j_at(j1, a) * j_at(j2, b) + exch * j_at(j1, b) * j_at(j2, a);
        sum += if m % 2 == 1 { -c * term } else { c * term };
    }
    sum * prefactor(t, true)
}

/// `Ie_r(Q, t)` or `Io_r(Q, t)` and the t-derivative, from the table at `-Q`.
fn modified_real(t: &CoefficientTable, i1: &[f64], i2: &[f64], y1: f64, y2: f64) -> (f64, f64) {
    let r = t.r() as i64;
    let p = t.p() as i64;
    let exch = if t.parity() == Parity::Even { 1.0 } else { -1.0 };
    let d = |v: &[f64], n: i64| 0.5 * (i_at(v, n - 1) + i_at(v, n + 1));
    let mut sum = 0.0;
    let mut dsum = 0.0;
    for (m, c) in t.coeffs.iter().enumerate() {
        let c = c.re;
        if c == 0.0 {
            continue;
        }
        let m = m as i64;
        let a = m - (r - p) / 2;
        let b = m + (r + p) / 2;
        let (i1a, i1b, i2a, i2b) = (i_at(i1, a), i_at(i1, b), i_at(i2, a), i_at(i2, b));
        sum += c * (i1a * i2b + exch * i1b * i2a);
        let da = -y1 * d(i1, a) * i2b + i1a * y2 * d(i2, b);
        let db = -y1 * d(i1, b) * i2a + i1b * y2 * d(i2, a);
        dsum += c * (da + exch * db);
    }
    let pre = prefactor(t, false);
    (sum * pre, dsum * pre)
}

fn max_order(tables: &[Arc<CoefficientTable>]) -> usize {
    tables.iter().map(|t| bessel_order_needed(t)).max().unwrap_or(1) + 1
}

/// Diagonal T-matrix element of the elliptic cylinder.
///
/// `q` is the parameter of the angular functions, `q = -d²p²/4 < 0`.
pub fn t_matrix(parity: Parity, r: u32, q: C64, mu0: f64, surface: Surface) -> Result<f64> {
    if q.im != 0.0 || !(q.re < 0.0) {
        return Err(Error::Domain(format!("T-matrix needs real negative q, got {q}")));
    }
    crate::characteristic::validate(parity, r, q)?;
    Ok(t_values(-q.re, mu0, surface, parity, &[r])?[0])
}

/// `-I/K` (Dirichlet) or `-I'/K'` (Neumann) from the direct series, for cross-checks.
pub fn t_matrix_direct(parity: Parity, r: u32, q: C64, mu0: f64, surface: Surface) -> Result<C64> {
    use crate::mathieu::{radial_modified, Kind};
    let qm = -q;
    let i = radial_modified(parity, Kind::First, r, qm, C64::from(mu0))?;
    let k = radial_modified(parity, Kind::Third, r, qm, C64::from(mu0))?;
    Ok(match surface {
        Surface::Dirichlet => -i.value / k.value,
        Surface::Neumann => -i.derivative / k.derivative,
    })
}

/// T-matrix elements for one family at modified parameter `qm = d²p²/4`.
fn t_values(qm: f64, mu0: f64, surface: Surface, parity: Parity, rs: &[u32]) -> Result<Vec<f64>> {
    let vanishes = mu0 == 0.0
        && matches!(
            (surface, parity),
            (Surface::Dirichlet, Parity::Odd) | (Surface::Neumann, Parity::Even)
        );
    if vanishes || rs.is_empty() {
        return Ok(vec![0.0; rs.len()]);
    }
    let regularized = mu0 == 0.0 && surface == Surface::Neumann;
    let tables: Vec<_> = rs
        .iter()
        .map(|&r| real_table(parity, r, -qm))
        .collect::<Result<_>>()?;
    let nb = max_order(&tables);
    let h = qm.sqrt();
    let eval = |t: f64| -> Option<Vec<(f64, f64)>> {
        let y1 = h * (-t).exp();
        let y2 = h * t.exp();
        if y2 > 690.0 {
            return None;
        }
        let i1 = i_values_real(y1, nb + 1);
        let i2 = i_values_real(y2, nb + 1);
        Some(tables.iter().map(|tb| modified_real(tb, &i1, &i2, y1, y2)).collect())
    };

    let at0 = eval(mu0).ok_or_else(|| Error::Overflow {
        context: "modified radial functions at mu0".into(),
    })?;
    // Per-channel scale: the value at mu0, or the slope at 0 in the regularized case.
    let scale: Vec<f64> = at0
        .iter()
        .map(|&(g, dg)| if regularized { dg } else { g })
        .collect();
    let mut acc = vec![0.0; rs.len()];
    let mut active: Vec<bool> = scale.iter().map(|s| s.is_finite() && *s != 0.0).collect();

    let mut t_left = mu0;
    if regularized {
        // Taylor series of O = Io / Io'(0) on [0, t_c], where 1/O² - 1/t² is smooth.
        let v0s: Vec<f64> = tables.iter().map(|tb| tb.alpha.re + 2.0 * qm).collect();
        let vmax = v0s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let t_c = 0.1f64.min(1.0 / (vmax + 0.04 * qm).sqrt().max(1e-300));
        let gl = GaussLegendre::new(16);
        for (k, &v0) in v0s.iter().enumerate() {
            if !active[k] {
                continue;
            }
            let c = odd_taylor(v0, qm);
            acc[k] += gl.integrate(0.0, t_c, |t| {
                let t2 = t * t;
                let mut u_over = 0.0;
                let mut pw = 1.0;
                for ck in &c[1..] {
                    u_over += ck * pw;
                    pw *= t2;
                }
                let u = u_over * t2;
                -u_over * (2.0 + u) / ((1.0 + u) * (1.0 + u))
            });
        }
        t_left = t_c;
    }

    let gk = GaussKronrod15::new();
    let mut panels = 0usize;
    // Where each channel stopped; the regularized tail starts there.
    let mut t_end = vec![f64::INFINITY; rs.len()];
    while active.iter().any(|&a| a) {
        panels += 1;
        if t_left > 80.0 || panels > 20_000 {
            return Err(Error::NonConvergent {
                what: "T-matrix Wronskian integral".into(),
                attempted: panels,
            });
        }
        let Some(left) = eval(t_left) else {
            break;
        };
        let mut lambda = 0.0f64;
        for (k, &(g, dg)) in left.iter().enumerate() {
            if active[k] && g != 0.0 {
                lambda = lambda.max(2.0 * (dg / g).abs());
            }
        }
        let w = 0.5f64.min(4.0 / lambda.max(1e-300));
        let b = t_left + w;
        let mut contrib = vec![0.0; rs.len()];
        let mut positive = vec![0.0; rs.len()];
        let mut overflow = false;
        for (x, wk, _) in gk.mapped(t_left, b) {
            let Some(vals) = eval(x) else {
                overflow = true;
                break;
            };
            for k in 0..rs.len() {
                if !active[k] {
                    continue;
                }
                let ratio = scale[k] / vals[k].0;
                let f = ratio * ratio;
                positive[k] += wk * f;
                contrib[k] += wk * if regularized { f - 1.0 / (x * x) } else { f };
            }
        }
        if overflow {
            // The integrand is below e^{-1000} there.
            break;
        }
        for k in 0..rs.len() {
            if !active[k] {
                continue;
            }
            acc[k] += contrib[k];
            if positive[k] <= 1e-17 * acc[k].abs() && t_left > mu0 + 1e-3 {
                active[k] = false;
                t_end[k] = b;
            }
        }
        t_left = b;
    }
    for te in t_end.iter_mut() {
        *te = te.min(t_left);
    }

    let mut out = Vec::with_capacity(rs.len());
    for k in 0..rs.len() {
        let s = scale[k];
        if !(s.is_finite() && s != 0.0) {
            out.push(0.0);
            continue;
        }
        // acc[k] = s² ∫ 1/G² (or its regularized version).
        let tv = if regularized {
            let integral = acc[k] - 1.0 / t_end[k];
            -s * s / integral
        } else {
            match surface {
                Surface::Dirichlet => -s * s / acc[k],
                Surface::Neumann => {
                    let (g, dg) = at0[k];
                    let ell = dg / g;
                    g * g * ell / (1.0 - ell * acc[k])
                }
            }
        };
        out.push(tv);
    }
    Ok(out)
}

/// Taylor coefficients `c_k` of `O(t) = Σ c_k t^{2k+1}` with `O'' = (v0 + 2Q(cosh 2t - 1)) O`.
fn odd_taylor(v0: f64, qm: f64) -> Vec<f64> {
    let n = 40;
    let mut v = vec![v0];
    let mut f = 1.0;
    for j in 1..n {
        f *= 4.0 / ((2 * j - 1) as f64 * (2 * j) as f64);
        v.push(2.0 * qm * f);
    }
    let mut c = vec![1.0];
    for k in 0..n - 1 {
        let s: f64 = (0..=k).map(|j| v[j] * c[k - j]).sum();
        c.push(s / ((2 * k + 3) as f64 * (2 * k + 2) as f64));
    }
    c
}

/// Gram matrices `∫₀^∞ e^{-s(cosh u - 1)} F_a(u) F_b(u) du` for groups of
/// radial kernel functions sharing one u-grid. `weights` rank channels for
/// the error test.
struct GramResult {
    grams: Vec<DMatrix<f64>>,
    u_max: f64,
}

fn kernel_grams(
    qm: f64,
    s: f64,
    groups: &[Vec<Arc<CoefficientTable>>],
    weights: &[Vec<f64>],
    tol: f64,
    quad: &QuadSettings,
) -> Result<GramResult> {
    let all: Vec<Arc<CoefficientTable>> = groups.iter().flatten().cloned().collect();
    let nb = max_order(&all);
    let r_top = all.iter().map(|t| t.r()).max().unwrap_or(0) as f64;
    let h = qm.sqrt();
    let gk = GaussKronrod15::new();
    let eval = |t: f64| -> Vec<Vec<f64>> {
        let u = t.asinh();
        let j1 = j_values_real(h * (-u).exp(), nb);
        let j2 = j_values_real(h * u.exp(), nb);
        groups
            .iter()
            .map(|g| g.iter().map(|tb| radial_real(tb, &j1, &j2)).collect())
            .collect()
    };
    let mut last_err = f64::INFINITY;
    for halving in 0..=quad.u_max_halvings {
        let shrink = 0.5f64.powi(halving as i32);
        let mut grams: Vec<DMatrix<f64>> = groups
            .iter()
            .map(|g| DMatrix::zeros(g.len(), g.len()))
            .collect();
        let mut errs: Vec<Vec<f64>> = groups.iter().map(|g| vec![0.0; g.len()]).collect();
        let mut t_left = 0.0f64;
        let mut panels = 0usize;
        loop {
            panels += 1;
            let mut w = (t_left.max(1.0) * 4.0 / (r_top + 1.0)).min(8.0 / s);
            if h > 0.0 {
                w = w.min(PI / h);
            }
            w *= shrink;
            let b = t_left + w;
            let mut panel: Vec<DMatrix<f64>> = groups
                .iter()
                .map(|g| DMatrix::zeros(g.len(), g.len()))
                .collect();
            let mut gauss_diag: Vec<Vec<f64>> = groups.iter().map(|g| vec![0.0; g.len()]).collect();
            for (x, wk, wg) in gk.mapped(t_left, b) {
                let rt = (1.0 + x * x).sqrt();
                let weight = (-s * (rt - 1.0)).exp() / rt;
                let f = eval(x);
                for (gi, fv) in f.iter().enumerate() {
                    let n = fv.len();
                    let pm = &mut panel[gi];
                    for a in 0..n {
                        let fa = fv[a] * weight * wk;
                        for bb in a..n {
                            pm[(a, bb)] += fa * fv[bb];
                        }
                        gauss_diag[gi][a] += wg * weight * fv[a] * fv[a];
                    }
                }
            }
            let mut done = s * ((1.0 + b * b).sqrt() - 1.0) > quad.u_exponent_cut;
            for gi in 0..groups.len() {
                let n = groups[gi].len();
                for a in 0..n {
                    for bb in a..n {
                        let v = panel[gi][(a, bb)];
                        grams[gi][(a, bb)] += v;
                    }
                    let pd = panel[gi][(a, a)];
                    errs[gi][a] += (pd - gauss_diag[gi][a]).abs();
                    if pd.abs() > 1e-17 * grams[gi][(a, a)].abs() {
                        done = false;
                    }
                }
            }
            t_left = b;
            if done {
                break;
            }
            if t_left > 1e9 || panels > 200_000 {
                return Err(Error::Quadrature { u_max: t_left.asinh() });
            }
        }
        for g in grams.iter_mut() {
            let n = g.nrows();
            for a in 0..n {
                for bb in 0..a {
                    g[(a, bb)] = g[(bb, a)];
                }
            }
        }
        // Error budget relative to the trace of the weighted kernel, which
        // bounds |log det| from below.
        let mut trace = 0.0;
        let mut err = 0.0;
        for gi in 0..groups.len() {
            for a in 0..groups[gi].len() {
                let w = weights[gi][a].abs();
                trace += w * grams[gi][(a, a)].abs();
                err += w * errs[gi][a];
            }
        }
        let rel = if trace > 0.0 { err / trace } else { 0.0 };
        if rel <= tol / 10.0 || halving == quad.u_max_halvings {
            if rel > tol / 10.0 && rel >= last_err {
                return Err(Error::Quadrature { u_max: t_left.asinh() });
            }
            return Ok(GramResult {
                grams,
                u_max: t_left.asinh(),
            });
        }
        last_err = rel;
    }
    unreachable!("loop returns on the last halving")
}

/// Kernel of the log-det formula,
/// `∫ du e^{-2pH cosh u} X_r(q, π/2 + iu) X_r'(q, π/2 - iu)`, with `X = ce`
/// or `se` as the sector assigns to each order.
pub fn translation_kernel(r: u32, r2: u32, sector: ParitySector, p: f64, cfg: &CasimirConfig) -> Result<C64> {
    cfg.validate()?;
    let first = sector.first_order();
    if r < first || r2 < first {
        return Err(Error::Domain(format!("order below {first} in the {sector:?} sector")));
    }
    let qm = cfg.d * cfg.d * p * p / 4.0;
    let s = 2.0 * p * cfg.h;
    let fam = sector.kernel_family();
    let ta = real_table(fam, r, qm)?;
    let tb = real_table(fam, r2, qm)?;
    let res = kernel_grams(qm, s, &[vec![ta, tb]], &[vec![1.0, 1.0]], cfg.tol, &cfg.quad)?;
    let g = res.grams[0][(0, 1)] * 2.0 * (-s).exp();
    let ja = joining_factor(fam, r, C64::from(qm))?.value;
    let jb = joining_factor(fam, r2, C64::from(qm))?.value;
    let eps = |r: u32| -> f64 {
        // Signs of the q -> -q reflection for each channel.
        let e = match (sector, r % 2) {
            (ParitySector::Matched, 0) => r / 2,
            (ParitySector::Matched, _) => (r - 1) / 2,
            (ParitySector::Mismatched, 1) => (r - 1) / 2,
            (ParitySector::Mismatched, _) => r / 2 + 1,
        };
        if e % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let sign = eps(r) * eps(r2);
    Ok(match sector {
        ParitySector::Matched => ja * jb * g * sign,
        ParitySector::Mismatched => -(ja * jb) * g * sign,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogDet {
    pub dirichlet: Option<f64>,
    pub neumann: Option<f64>,
    /// Sum over the requested boundary conditions.
    pub value: f64,
    pub r_max_used: u32,
    /// Change of `value` between the last two channel cutoffs.
    pub r_delta: f64,
    pub u_max: f64,
}

struct NodeSetup {
    qm: f64,
    s: f64,
}

/// Channel data of one sector for one surface, at cutoff `rr`.
struct SectorData {
    orders: Vec<u32>,
    weights: Vec<f64>,
}

fn sector_data(
    sector: ParitySector,
    surface: Surface,
    rr: u32,
    t_even: &[f64],
    t_odd: &[f64],
    jf: &[f64],
) -> SectorData {
    let mut orders = Vec::new();
    let mut weights = Vec::new();
    for r in sector.first_order()..=rr {
        let t = match sector.t_family(r) {
            Parity::Even => t_even[r as usize],
            Parity::Odd => t_odd[r as usize],
        };
        orders.push(r);
        weights.push(surface.plane_t() * t * jf[r as usize]);
    }
    SectorData { orders, weights }
}

fn log_det_sector(gram: &DMatrix<f64>, first: u32, data: &SectorData, rr: u32, s: f64, p: f64) -> Result<f64> {
    let idx: Vec<usize> = data
        .orders
        .iter()
        .enumerate()
        .filter(|(_, &r)| r <= rr)
        .filter(|(k, _)| data.weights[*k] != 0.0)
        .map(|(k, _)| k)
        .collect();
    let n = idx.len();
    if n == 0 {
        return Ok(0.0);
    }
    let scale = 2.0 * (-s).exp();
    let mut m = DMatrix::<f64>::identity(n, n);
    for (i, &a) in idx.iter().enumerate() {
        let ga = (data.orders[a] - first) as usize;
        for (j, &b) in idx.iter().enumerate() {
            let gb = (data.orders[b] - first) as usize;
            m[(i, j)] -= data.weights[a] * scale * gram[(ga, gb)];
        }
    }
    let det = m.lu().determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::NonPositiveDeterminant { p, det });
    }
    Ok(det.ln())
}

/// `Σ_sectors log det(1 - T T^P K)` at transverse wavenumber `p`.
pub fn log_det_integrand(p: f64, cfg: &CasimirConfig) -> Result<LogDet> {
    cfg.validate()?;
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Domain(format!("p must be positive, got {p}")));
    }
    let node = NodeSetup {
        qm: cfg.d * cfg.d * p * p / 4.0,
        s: 2.0 * p * cfg.h,
    };
    let surfaces = cfg.surfaces();
    let cap = cfg.quad.r_cap.min(representable_order(node.qm)).max(4);
    let mut rr = cfg.r_max.unwrap_or(cfg.quad.r_start).clamp(4, cap);
    loop {
        let (vals, prev, u_max) = node_at_cutoff(&node, rr, cfg, &surfaces, p)?;
        let total: f64 = vals.iter().sum();
        let total_prev: f64 = prev.iter().sum();
        let delta = (total - total_prev).abs();
        // The energy integrand is s² log det, of order one near its peak.
        let s2 = node.s * node.s;
        let converged = delta * s2 <= cfg.tol * (total.abs() * s2).max(1e-2) || delta < 1e-15;
        if cfg.r_max.is_some() || converged || rr >= cap {
            let pick = |sf: Surface| surfaces.iter().position(|&x| x == sf).map(|i| vals[i]);
            return Ok(LogDet {
                dirichlet: pick(Surface::Dirichlet),
                neumann: pick(Surface::Neumann),
                value: total,
                r_max_used: rr,
                r_delta: delta,
                u_max,
            });
        }
        rr = (rr + 8).min(cap);
    }
}

/// Largest order whose radial functions near `u = 0`, of size
/// `(√Q/2)^r / r!`, have squares well inside double range.
fn representable_order(qm: f64) -> u32 {
    let l = (2.0 / qm.sqrt()).ln().max(0.0);
    let mut log_fact = 0.0;
    for r in 1..=400u32 {
        log_fact += (r as f64).ln();
        if r as f64 * l + log_fact > 250.0 {
            return r - 1;
        }
    }
    400
}

/// Log dets at cutoff `rr` and `rr - 4` for each surface.
fn node_at_cutoff(
    node: &NodeSetup,
    rr: u32,
    cfg: &CasimirConfig,
    surfaces: &[Surface],
    p: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let qm = node.qm;
    let even_orders: Vec<u32> = (0..=rr).collect();
    let odd_orders: Vec<u32> = (1..=rr).collect();
    let cq = C64::from(qm);
    // Joining-factor squares with their reflection signs: positive by construction.
    let jf_e: Vec<f64> = even_orders
        .iter()
        .map(|&r| joining_factor(Parity::Even, r, cq).map(|j| (j.value * j.value).re))
        .collect::<Result<_>>()?;
    let mut jf_o = vec![0.0];
    for &r in &odd_orders {
        let j = joining_factor(Parity::Odd, r, cq)?.value;
        jf_o.push(-(j * j).re);
    }
    let mut t_cache: Vec<(Surface, Vec<f64>, Vec<f64>)> = Vec::new();
    for &sf in surfaces {
        let te = t_values(qm, cfg.mu0, sf, Parity::Even, &even_orders)?;
        let mut to = vec![0.0];
        to.extend(t_values(qm, cfg.mu0, sf, Parity::Odd, &odd_orders)?);
        t_cache.push((sf, te, to));
    }
    // Error weights: the largest channel weight over the surfaces.
    let mut w_match = vec![0.0; even_orders.len()];
    let mut w_mis = vec![0.0; odd_orders.len()];
    let mut sectors = Vec::new();
    for (sf, te, to) in &t_cache {
        let m = sector_data(ParitySector::Matched, *sf, rr, te, to, &jf_e);
        let x = sector_data(ParitySector::Mismatched, *sf, rr, te, to, &jf_o);
        for (k, w) in m.weights.iter().enumerate() {
            w_match[k] = f64::max(w_match[k], w.abs());
        }
        for (k, w) in x.weights.iter().enumerate() {
            w_mis[k] = f64::max(w_mis[k], w.abs());
        }
        sectors.push((m, x));
    }
    let tables_e: Vec<_> = even_orders
        .iter()
        .map(|&r| real_table(Parity::Even, r, qm))
        .collect::<Result<_>>()?;
    let tables_o: Vec<_> = odd_orders
        .iter()
        .map(|&r| real_table(Parity::Odd, r, qm))
        .collect::<Result<_>>()?;
    // Drop kernel functions that no surface needs.
    let keep_e: Vec<usize> = (0..tables_e.len()).filter(|&k| w_match[k] != 0.0).collect();
    let keep_o: Vec<usize> = (0..tables_o.len()).filter(|&k| w_mis[k] != 0.0).collect();
    let groups = vec![
        keep_e.iter().map(|&k| tables_e[k].clone()).collect::<Vec<_>>(),
        keep_o.iter().map(|&k| tables_o[k].clone()).collect::<Vec<_>>(),
    ];
    let weights = vec![
        keep_e.iter().map(|&k| w_match[k]).collect::<Vec<_>>(),
        keep_o.iter().map(|&k| w_mis[k]).collect::<Vec<_>>(),
    ];
    let res = kernel_grams(qm, node.s, &groups, &weights, cfg.tol, &cfg.quad)?;
    // Re-embed the kept channels into full-size Gram matrices.
    let embed = |g: &DMatrix<f64>, keep: &[usize], n: usize| {
        let mut full = DMatrix::<f64>::zeros(n, n);
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate() {
                full[(a, b)] = g[(i, j)];
            }
        }
        full
    };
    let ge = embed(&res.grams[0], &keep_e, even_orders.len());
    let go = embed(&res.grams[1], &keep_o, odd_orders.len());
    let mut vals = Vec::new();
    let mut prev = Vec::new();
    for (m, x) in &sectors {
        let cur = log_det_sector(&ge, 0, m, rr, node.s, p)? + log_det_sector(&go, 1, x, rr, node.s, p)?;
        let low = rr.saturating_sub(4);
        let before = log_det_sector(&ge, 0, m, low, node.s, p)? + log_det_sector(&go, 1, x, low, node.s, p)?;
        vals.push(cur);
        prev.push(before);
    }
    Ok((vals, prev, res.u_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyResult {
    /// `E / (ħ c L)`.
    pub energy: f64,
    pub dirichlet: Option<f64>,
    pub neumann: Option<f64>,
    pub est_error: f64,
    pub r_max_used: u32,
    pub pfa_energy: f64,
    pub ratio_pfa: f64,
    pub p_nodes: usize,
    pub error_budget: ErrorBudget,
}

/// Components of `est_error`, in energy units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub quadrature: f64,
    pub low_tail: f64,
    pub high_tail: f64,
    pub truncation: f64,
}

/// Proximity-force energy `-(π²/720)(2d/H³)`.
pub fn pfa_energy(d: f64, h: f64) -> f64 {
    -PFA_CONSTANT * 2.0 * d / (h * h * h)
}

/// `E/(ħcL) = (1/4π) ∫ p dp log det`, with `s = 2pH` on log-spaced panels.
pub fn energy_per_length(cfg: &CasimirConfig) -> Result<EnergyResult> {
    cfg.validate()?;
    let q = &cfg.quad;
    let gk = GaussKronrod15::new();
    let (l0, l1) = (q.s_min.ln(), q.s_max.ln());
    let step = (l1 - l0) / q.s_panels as f64;
    let mut nodes = Vec::new();
    for k in 0..q.s_panels {
        let a = l0 + step * k as f64;
        for (x, wk, wg) in gk.mapped(a, a + step) {
            nodes.push((k, x.exp(), wk, wg));
        }
    }
    // The lower tail extrapolates from s_min itself.
    let mut evals: Vec<Result<LogDet>> = nodes
        .par_iter()
        .map(|&(_, s, _, _)| log_det_integrand(s / (2.0 * cfg.h), cfg))
        .collect();
    let low = log_det_integrand(q.s_min / (2.0 * cfg.h), cfg)?;
    let mut kron = vec![0.0; q.s_panels];
    let mut gauss = vec![0.0; q.s_panels];
    let (mut sum_d, mut sum_n) = (0.0, 0.0);
    let mut r_used = 0;
    let mut trunc = 0.0;
    let (mut last_s, mut last_l) = (q.s_max, 0.0);
    for (i, &(k, s, wk, wg)) in nodes.iter().enumerate() {
        let v = std::mem::replace(&mut evals[i], Err(Error::Domain(String::new())))?;
        let f = s * s;
        kron[k] += wk * f * v.value;
        gauss[k] += wg * f * v.value;
        sum_d += wk * f * v.dirichlet.unwrap_or(0.0);
        sum_n += wk * f * v.neumann.unwrap_or(0.0);
        trunc += wk * f * v.r_delta;
        r_used = r_used.max(v.r_max_used);
        last_s = s;
        last_l = v.value;
    }
    let mut integral: f64 = kron.iter().sum();
    let quad_err: f64 = kron.iter().zip(&gauss).map(|(a, b)| (a - b).abs()).sum();
    // ∫₀^{s_min} s L ds with L near its s_min value.
    let low_tail = low.value * q.s_min * q.s_min / 2.0;
    integral += low_tail;
    // ∫_{S}^∞ s L ds with L decaying at least like e^{-(s-S)}.
    let high_tail = last_l.abs() * (last_s + 1.0);
    let norm = 1.0 / (4.0 * PI) / (4.0 * cfg.h * cfg.h);
    let energy = integral * norm;
    let est_error = (quad_err + low_tail.abs() + high_tail + trunc) * norm;
    let pfa = pfa_energy(cfg.d, cfg.h);
    let pick = |sf: BoundaryCondition, v: f64| match (cfg.bc, sf) {
        (BoundaryCondition::Dirichlet, BoundaryCondition::Dirichlet)
        | (BoundaryCondition::Neumann, BoundaryCondition::Neumann)
        | (BoundaryCondition::Electromagnetic, _) => Some(v * norm),
        _ => None,
    };
    Ok(EnergyResult {
        energy,
        dirichlet: pick(BoundaryCondition::Dirichlet, sum_d + low.dirichlet.unwrap_or(0.0) * q.s_min * q.s_min / 2.0),
        neumann: pick(BoundaryCondition::Neumann, sum_n + low.neumann.unwrap_or(0.0) * q.s_min * q.s_min / 2.0),
        est_error,
        r_max_used: r_used,
        pfa_energy: pfa,
        ratio_pfa: energy / pfa,
        p_nodes: nodes.len() + 1,
        error_budget: ErrorBudget {
            quadrature: quad_err * norm,
            low_tail: low_tail.abs() * norm,
            high_tail: high_tail * norm,
            truncation: trunc * norm,
        },
    })
}

pub fn pfa_ratio(cfg: &CasimirConfig) -> Result<f64> {
    Ok(energy_per_length(cfg)?.ratio_pfa)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    #[serde(rename = "H")]
    pub h: f64,
    pub energy_per_length: f64,
    pub ratio_pfa: f64,
    pub est_error: f64,
    pub r_max_used: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCurve {
    pub records: Vec<CurveRecord>,
}

/// Energies at `points` evenly spaced heights in `[h_min, h_max]`.
pub fn energy_curve(base: &CasimirConfig, h_min: f64, h_max: f64, points: usize) -> Result<EnergyCurve> {
    if points < 2 || !(h_min > 0.0 && h_max > h_min) {
        return Err(Error::Domain(format!(
            "need points >= 2 and 0 < H-min < H-max, got {points} points on [{h_min}, {h_max}]"
        )));
    }
    let hs: Vec<f64> = (0..points)
        .map(|i| h_min + (h_max - h_min) * i as f64 / (points - 1) as f64)
        .collect();
    let results: Vec<Result<CurveRecord>> = hs
        .par_iter()
        .map(|&h| {
            let mut cfg = *base;
            cfg.h = h;
            let e = energy_per_length(&cfg)?;
            Ok(CurveRecord {
                h,
                energy_per_length: e.energy,
                ratio_pfa: e.ratio_pfa,
                est_error: e.est_error,
                r_max_used: e.r_max_used,
            })
        })
        .collect();
    Ok(EnergyCurve {
        records: results.into_iter().collect::<Result<_>>()?,
    })
}

impl EnergyCurve {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.records {
            wr.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<EnergyCurve> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rd.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let expected = ["H", "energy_per_length", "ratio_pfa", "est_error", "r_max_used"];
        if headers.len() != expected.len() || headers.iter().zip(expected).any(|(a, b)| a != b) {
            return Err(Error::Parse(format!(
                "expected header {}, got {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut records = Vec::new();
        for row in rd.deserialize() {
            let rec: CurveRecord = row.map_err(|e| Error::Parse(e.to_string()))?;
            if !(rec.h.is_finite() && rec.h > 0.0) {
                return Err(Error::Parse(format!("non-positive height {}", rec.h)));
            }
            if !(rec.ratio_pfa.is_finite() && rec.est_error.is_finite() && rec.energy_per_length.is_finite()) {
                return Err(Error::Parse("non-finite value in curve".into()));
            }
            records.push(rec);
        }
        Ok(EnergyCurve { records })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub d: f64,
    /// Fit window in `2d/H`.
    pub aspect_min: f64,
    pub aspect_max: f64,
    /// Pin the intercept to 1.
    pub fix_intercept: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            d: 1.0,
            aspect_min: 2.0,
            aspect_max: 10.0,
            fix_intercept: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub beta: f64,
    pub gamma: f64,
    pub sigma_beta: f64,
    pub sigma_gamma: f64,
    pub intercept: f64,
    pub sigma_intercept: f64,
    pub n_points: usize,
    pub residual_rms: f64,
    pub condition_number: f64,
    /// `[c0, c1, c2]` of `c0 + c1 x + c2 x²`.
    pub coefficients: [f64; 3],
    /// Covariance of `coefficients`; the intercept row is zero when fixed.
    pub covariance: [[f64; 3]; 3],
}

impl FitReport {
    /// Fitted `E/E_pfa` at `x = H/(2d)`.
    pub fn model_ratio(&self, x: f64) -> f64 {
        let [c0, c1, c2] = self.coefficients;
        c0 + c1 * x + c2 * x * x
    }

    /// Standard deviation of `model_ratio(x)` from the coefficient covariance.
    pub fn model_sigma(&self, x: f64) -> f64 {
        let v = [1.0, x, x * x];
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += v[i] * self.covariance[i][j] * v[j];
            }
        }
        s.max(0.0).sqrt()
    }
}

/// Weighted least squares of `E/E_pfa = c0 + c1 x + c2 x²`, `x = H/(2d)`,
/// giving `β = -c1 (π²/720)/2` and `γ = -c2 (π²/720)`.
pub fn fit_edge_coefficients(curve: &EnergyCurve, opts: &FitOptions) -> Result<FitReport> {
    if !(opts.d > 0.0) {
        return Err(Error::Domain("fit needs d > 0".into()));
    }
    let pts: Vec<&CurveRecord> = curve
        .records
        .iter()
        .filter(|r| {
            let a = 2.0 * opts.d / r.h;
            a >= opts.aspect_min * (1.0 - 1e-12) && a <= opts.aspect_max * (1.0 + 1e-12)
        })
        .collect();
    if pts.len() < 6 {
        return Err(Error::IllConditioned(format!(
            "need at least 6 curve points with 2d/H in [{}, {}], got {}",
            opts.aspect_min,
            opts.aspect_max,
            pts.len()
        )));
    }
    let k = if opts.fix_intercept { 2 } else { 3 };
    let n = pts.len();
    let sig: Vec<f64> = pts
        .iter()
        .map(|r| (r.est_error / (PFA_CONSTANT * 2.0 * opts.d / r.h.powi(3))).abs())
        .collect();
    let use_weights = sig.iter().all(|&s| s > 0.0 && s.is_finite());
    let mut x = DMatrix::<f64>::zeros(n, k);
    let mut y = DVector::<f64>::zeros(n);
    let mut w = DVector::<f64>::from_element(n, 1.0);
    for (i, r) in pts.iter().enumerate() {
        let xi = r.h / (2.0 * opts.d);
        let mut col = 0;
        if !opts.fix_intercept {
            x[(i, col)] = 1.0;
            col += 1;
        }
        x[(i, col)] = xi;
        x[(i, col + 1)] = xi * xi;
        y[i] = if opts.fix_intercept { r.ratio_pfa - 1.0 } else { r.ratio_pfa };
        if use_weights {
            w[i] = 1.0 / (sig[i] * sig[i]);
        }
    }
    // Normalize the weights so the covariance scale comes from the residuals.
    let wmax = w.max();
    w /= wmax;
    let mut xw = x.clone();
    for i in 0..n {
        let sw = w[i].sqrt();
        for j in 0..k {
            xw[(i, j)] *= sw;
        }
    }
    let yw = DVector::from_iterator(n, (0..n).map(|i| y[i] * w[i].sqrt()));
    let svd = xw.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond < 1e10) {
        return Err(Error::IllConditioned(format!("design matrix condition number {cond:e}")));
    }
    let coef = svd
        .solve(&yw, 1e-14 * smax)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    let resid = &yw - &xw * &coef;
    let dof = (n - k).max(1) as f64;
    let s2 = resid.norm_squared() / dof;
    let normal = xw.transpose() * &xw;
    let cov = normal
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned("singular normal matrix".into()))?
        * s2;
    let (c0, s0, i1) = if opts.fix_intercept {
        (1.0, 0.0, 0)
    } else {
        (coef[0], cov[(0, 0)].sqrt(), 1)
    };
    let c1 = coef[i1];
    let c2 = coef[i1 + 1];
    let raw_resid = &y - &x * &coef;
    let mut covariance = [[0.0; 3]; 3];
    let off = 3 - k;
    for i in 0..k {
        for j in 0..k {
            covariance[i + off][j + off] = cov[(i, j)];
        }
    }
    Ok(FitReport {
        coefficients: [c0, c1, c2],
        covariance,
        beta: -c1 * PFA_CONSTANT / 2.0,
        gamma: -c2 * PFA_CONSTANT,
        sigma_beta: cov[(i1, i1)].sqrt() * PFA_CONSTANT / 2.0,
        sigma_gamma: cov[(i1 + 1, i1 + 1)].sqrt() * PFA_CONSTANT,
        intercept: c0,
        sigma_intercept: s0,
        n_points: n,
        residual_rms: (raw_resid.norm_squared() / n as f64).sqrt(),
        condition_number: cond,
    })
}

/// `1 - (2β/c) x - (γ/c) x²` with `x = H/(2d)` and `c = π²/720`.
pub fn expansion_ratio(beta: f64, gamma: f64, h: f64, d: f64) -> f64 {
    let x = h / (2.0 * d);
    1.0 - 2.0 * beta / PFA_CONSTANT * x - gamma / PFA_CONSTANT * x * x
}
