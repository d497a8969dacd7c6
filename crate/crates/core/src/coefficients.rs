//! Fourier coefficients of the angular functions of both kinds.
//!
//! First-kind coefficients come from ratio recurrences run upward below the
//! order index and downward above it. The row at the meet index is the one
//! left implicit, so its consistency measures the characteristic-value error.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::characteristic::{self, default_dim, Sector};
use crate::error::{Error, Result};
use crate::Parity;

type C64 = Complex64;

const TAIL_TOL: f64 = 1e-15;
const MAX_TERMS: usize = 4000;
/// Below this |q| the trigonometric limit is exact to double precision.
pub const TRIG_LIMIT_Q: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesSpec {
    pub parity: Parity,
    pub r: u32,
    /// Number of stored terms, indexed by `m` with harmonic `2m + p`.
    pub m_terms: usize,
}

impl SeriesSpec {
    pub fn p(&self) -> u32 {
        self.r % 2
    }
}

/// Normalized coefficients: `coeffs[m]` multiplies `cos((2m+p)θ)` (even
/// family) or `sin((2m+p)θ)` (odd family). For the odd family with even
/// order `coeffs[0]` is zero.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientTable {
    pub spec: SeriesSpec,
    pub q: C64,
    pub alpha: C64,
    pub coeffs: Vec<C64>,
    /// Ratio between the base-one coefficients and the stored ones.
    pub scale: C64,
    pub meet_index: usize,
}

impl CoefficientTable {
    pub fn parity(&self) -> Parity {
        self.spec.parity
    }

    pub fn r(&self) -> u32 {
        self.spec.r
    }

    pub fn p(&self) -> u32 {
        self.spec.p()
    }

    pub fn harmonic(&self, m: usize) -> u32 {
        2 * m as u32 + self.p()
    }

    pub fn order_m(&self) -> usize {
        ((self.r() - self.p()) / 2) as usize
    }

    /// The coefficient of the harmonic equal to the order.
    pub fn at_order(&self) -> C64 {
        self.coeffs[self.order_m()]
    }

    /// Angular function and its derivative at `theta`.
    pub fn eval(&self, theta: C64) -> (C64, C64) {
        let mut f = C64::new(0.0, 0.0);
        let mut df = C64::new(0.0, 0.0);
        for (m, &c) in self.coeffs.iter().enumerate() {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let n = self.harmonic(m) as f64;
            let x = theta * n;
            match self.parity() {
                Parity::Even => {
                    f += c * x.cos();
                    df -= c * n * x.sin();
                }
                Parity::Odd => {
                    f += c * x.sin();
                    df += c * n * x.cos();
                }
            }
        }
        (f, df)
    }
}

fn delta(parity: Parity, r: u32, q: C64) -> f64 {
    if q.re >= 0.0 {
        return 1.0;
    }
    let p = r % 2;
    let e = match parity {
        Parity::Even => (r - p) / 2,
        Parity::Odd => (r + p - 2) / 2,
    };
    if e % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

type Key = (Parity, u32, u64, u64);

fn table_cache() -> &'static RwLock<HashMap<Key, Arc<CoefficientTable>>> {
    static CACHE: OnceLock<RwLock<HashMap<Key, Arc<CoefficientTable>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Cached first-kind coefficient table.
pub fn fourier_coeffs(parity: Parity, r: u32, q: C64) -> Result<Arc<CoefficientTable>> {
    characteristic::validate(parity, r, q)?;
    let key = (parity, r, q.re.to_bits(), q.im.to_bits());
    if let Some(t) = table_cache().read().unwrap().get(&key) {
        return Ok(t.clone());
    }
    let t = Arc::new(fourier_coeffs_with(parity, r, q, None, 0)?);
    table_cache().write().unwrap().insert(key, t.clone());
    Ok(t)
}

fn initial_terms(r: u32, q: C64) -> usize {
    let a = r as usize / 2 + 12;
    let b = (0.75 * q.norm().sqrt()).ceil() as usize + 12;
    a.max(b)
}

/// Uncached table. `m_terms` fixes the length (no tail growth);
/// `meet_shift` moves the meet index away from the order index.
pub fn fourier_coeffs_with(
    parity: Parity,
    r: u32,
    q: C64,
    m_terms: Option<usize>,
    meet_shift: i32,
) -> Result<CoefficientTable> {
    characteristic::validate(parity, r, q)?;
    let sector = Sector::of(parity, r);
    let offset = usize::from(sector == Sector::OddEven);
    let kr = sector.index_of(r);

    if q.norm() < TRIG_LIMIT_Q {
        let m_len = m_terms.unwrap_or(initial_terms(r, q));
        let m_len = m_len.max(kr + offset + 1);
        let mut coeffs = vec![C64::new(0.0, 0.0); m_len];
        let v = if r == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
        coeffs[kr + offset] = C64::from(v);
        return Ok(CoefficientTable {
            spec: SeriesSpec { parity, r, m_terms: m_len },
            q,
            alpha: C64::from((r * r) as f64),
            coeffs,
            scale: C64::from(1.0 / v),
            meet_index: kr,
        });
    }

    // `k_top` is the last sector index; the table holds `k_top + offset + 1` terms.
    let mut k_top = m_terms.map_or(initial_terms(r, q), |m| m.saturating_sub(offset + 1));
    k_top = k_top.max(kr + 2);
    loop {
        let dim = default_dim(r, q).max(k_top + 10);
        let alpha = if dim == default_dim(r, q) {
            characteristic::char_value(parity, r, q)?.alpha
        } else {
            characteristic::char_value_with_dim(parity, r, q, dim)?.alpha
        };
        let mut built = None;
        let shifts: Vec<i32> = if meet_shift != 0 {
            vec![meet_shift]
        } else {
            vec![0, 1, -1, 2, -2]
        };
        for s in shifts {
            let km = kr as i64 + s as i64;
            if km < 0 || km as usize >= k_top {
                continue;
            }
            if let Some(a) = base_one_values(sector, q, alpha, k_top, km as usize) {
                built = Some((a, km as usize));
                break;
            }
        }
        let (a, km) = built.ok_or_else(|| Error::NonConvergent {
            what: format!("coefficient recurrence for {parity} r={r} q={q}"),
            attempted: k_top,
        })?;
        let max = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tail_ok = a[k_top].norm() <= TAIL_TOL * max;
        if !tail_ok && m_terms.is_none() {
            if k_top >= MAX_TERMS {
                return Err(Error::NonConvergent {
                    what: format!("coefficient tail for {parity} r={r} q={q}"),
                    attempted: k_top,
                });
            }
            k_top += k_top / 2 + 4;
            continue;
        }
        // Phase of the index-zero coefficient relative to the meet index,
        // tracked separately so that it survives underflow of the magnitude.
        let mut ph = C64::new(1.0, 0.0);
        for k in 0..km {
            let ratio = a[k + 1] / a[k];
            ph *= ratio / ratio.norm();
        }
        let mut s2: C64 = a.iter().map(|z| z * z).sum();
        if sector == Sector::EvenEven {
            s2 += a[0] * a[0];
        }
        let root = (s2 * ph * ph).sqrt();
        let factor = ph * delta(parity, r, q) / root;
        let mut coeffs = Vec::with_capacity(k_top + offset + 1);
        if offset == 1 {
            coeffs.push(C64::new(0.0, 0.0));
        }
        coeffs.extend(a.iter().map(|z| z * factor));
        let base0 = coeffs[offset];
        return Ok(CoefficientTable {
            spec: SeriesSpec {
                parity,
                r,
                m_terms: coeffs.len(),
            },
            q,
            alpha,
            scale: if base0.norm() > 0.0 { base0.inv() } else { factor.inv() },
            coeffs,
            meet_index: km,
        });
    }
}

/// Sector-indexed coefficients with value one at the meet index.
fn base_one_values(sector: Sector, q: C64, alpha: C64, k_top: usize, km: usize) -> Option<Vec<C64>> {
    let d = |k: usize| alpha - sector.diag(k, q);
    let mut ratio = vec![C64::new(0.0, 0.0); k_top + 1];
    // Downward: ratio[k] = A_{k+1}/A_k from row k+1, with A_{k_top+1} = 0.
    for k in (km..k_top).rev() {
        let den = d(k + 1) - q * ratio[k + 1];
        ratio[k] = q * sector.lower_coupling(k + 1) / den;
    }
    // Upward from row k for k below the meet index.
    for k in 0..km {
        let mut v = d(k) / q;
        if k > 0 {
            v -= sector.lower_coupling(k) / ratio[k - 1];
        }
        ratio[k] = v;
    }
    if ratio[..k_top]
        .iter()
        .any(|z| !(z.re.is_finite() && z.im.is_finite()) || z.norm() == 0.0)
    {
        return None;
    }
    let mut a = vec![C64::new(0.0, 0.0); k_top + 1];
    a[km] = C64::new(1.0, 0.0);
    for k in km + 1..=k_top {
        a[k] = a[k - 1] * ratio[k - 1];
    }
    for k in (0..km).rev() {
        a[k] = a[k + 1] / ratio[k];
    }
    Some(a)
}

/// Second-kind trigonometric series.
///
/// `Fe = prefactor (θ ce + Σ coeffs[m] sin((2m+p)θ))`,
/// `Fo = prefactor (θ se + Σ coeffs[m] cos((2m+p)θ))`.
#[derive(Debug, Clone, Serialize)]
pub struct SecondKindTable {
    pub spec: SeriesSpec,
    pub q: C64,
    /// The first-kind table the series was solved against; evaluation reuses it.
    pub first: CoefficientTable,
    pub coeffs: Vec<C64>,
    pub rho: C64,
    /// `[Σ A, Σ A²]` (even) or `[Σ n B, Σ B²]` (odd), over base-one coefficients.
    pub alpha_sums: [C64; 2],
    /// Normalization fixing the Wronskian with the first kind at 2/π.
    pub prefactor: C64,
    /// The closed-form prefactor in base-one units, kept for comparison.
    pub literal_prefactor: C64,
    /// Change in `rho` when eight more coefficients are used.
    pub rho_truncation_change: f64,
}

type SecondKey = (Parity, u32, u64, u64, usize);

fn second_cache() -> &'static RwLock<HashMap<SecondKey, Arc<SecondKindTable>>> {
    static CACHE: OnceLock<RwLock<HashMap<SecondKey, Arc<SecondKindTable>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

pub fn second_kind_coeffs(parity: Parity, r: u32, q: C64) -> Result<Arc<SecondKindTable>> {
    second_kind_from(parity, r, q, None)
}

/// A second-kind table whose tail stays negligible at `|Im θ| = im_theta`,
/// where harmonic `n` is amplified by `e^{n |Im θ|}`.
pub fn second_kind_for(parity: Parity, r: u32, q: C64, im_theta: f64) -> Result<Arc<SecondKindTable>> {
    let mut t = second_kind_coeffs(parity, r, q)?;
    let y = im_theta.abs();
    while y > 0.0 && !t.tail_negligible(y) {
        let len = t.coeffs.len();
        if len >= MAX_TERMS {
            return Err(Error::NonConvergent {
                what: format!("second-kind series for {parity} r={r} q={q} at |Im θ| = {y}"),
                attempted: len,
            });
        }
        t = second_kind_from(parity, r, q, Some(len + len / 2))?;
    }
    Ok(t)
}

fn second_kind_from(parity: Parity, r: u32, q: C64, start_len: Option<usize>) -> Result<Arc<SecondKindTable>> {
    characteristic::validate(parity, r, q)?;
    if q.norm() < TRIG_LIMIT_Q {
        return Err(Error::Domain(
            "second-kind series needs q away from zero; use the trigonometric limit".into(),
        ));
    }
    let key = (parity, r, q.re.to_bits(), q.im.to_bits(), start_len.unwrap_or(0));
    if let Some(t) = second_cache().read().unwrap().get(&key) {
        return Ok(t.clone());
    }
    let base = fourier_coeffs(parity, r, q)?;
    let mut m_len = start_len.unwrap_or(base.coeffs.len()).min(MAX_TERMS);
    let table = loop {
        let t1 = fourier_coeffs_with(parity, r, q, Some(m_len), 0)?;
        let t2 = fourier_coeffs_with(parity, r, q, Some(m_len + 8), 0)?;
        let (g1, rho1) = second_kind_raw(&t1);
        let (_, rho2) = second_kind_raw(&t2);
        let change = (rho1 - rho2).norm() / rho1.norm().max(1e-300);
        if change <= 1e-9 || m_len >= MAX_TERMS {
            break build_second(t1, g1, rho1, change);
        }
        m_len += 16;
    };
    let table = Arc::new(table);
    second_cache().write().unwrap().insert(key, table.clone());
    Ok(table)
}

/// Trigonometric coefficients (indexed by `m`) and ρ.
fn second_kind_raw(t: &CoefficientTable) -> (Vec<C64>, C64) {
    let q = t.q;
    let alpha = t.alpha;
    let p = t.p() as i64;
    let len = t.coeffs.len();
    let coef = |m: i64| -> C64 {
        if m >= 0 && (m as usize) < len {
            t.coeffs[m as usize]
        } else {
            C64::new(0.0, 0.0)
        }
    };
    // Driving sign: +2nA for the sine series, -2nB for the cosine series.
    let drive = match t.parity() {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    // s[m + 1] holds the unknown at harmonic 2m + p, for m from -1 to len + 1.
    let mut s = vec![C64::new(0.0, 0.0); len + 3];
    let idx = |m: i64| (m + 1) as usize;
    let lowest = if p == 1 || t.parity() == Parity::Even { 0 } else { 1 };
    // Row at harmonic n gives the unknown two harmonics below.
    for m in (lowest..=len as i64).rev() {
        let n = (2 * m + p) as f64;
        let val = ((alpha - n * n) * s[idx(m)] - coef(m) * (2.0 * n * drive)) / q - s[idx(m + 1)];
        s[idx(m - 1)] = val;
    }
    let mut g = vec![C64::new(0.0, 0.0); len];
    let rho;
    match (t.parity(), p) {
        (Parity::Even, 0) => {
            rho = s[idx(0)] / (coef(0) * 2.0);
            for (m, gm) in g.iter_mut().enumerate().skip(1) {
                *gm = s[idx(m as i64)] - rho * coef(m as i64);
            }
        }
        (Parity::Even, _) => {
            rho = (s[idx(-1)] + s[idx(0)]) / (coef(0) * 2.0);
            for (m, gm) in g.iter_mut().enumerate() {
                *gm = s[idx(m as i64)] - rho * coef(m as i64);
            }
        }
        (Parity::Odd, 0) => {
            // Rows 0 and 2 of the cosine series fix h_0 = T_0 / 2 and ρ.
            let t0 = s[idx(0)];
            rho = (s[idx(1)] - alpha * t0 / (q * 2.0)) / coef(1);
            g[0] = t0 * 0.5;
            for (m, gm) in g.iter_mut().enumerate().skip(1) {
                *gm = s[idx(m as i64)] - rho * coef(m as i64);
            }
        }
        (Parity::Odd, _) => {
            rho = (s[idx(0)] - s[idx(-1)]) / (coef(0) * 2.0);
            for (m, gm) in g.iter_mut().enumerate() {
                *gm = s[idx(m as i64)] - rho * coef(m as i64);
            }
        }
    }
    (g, rho)
}

fn build_second(first: CoefficientTable, g: Vec<C64>, rho: C64, change: f64) -> SecondKindTable {
    let t = &first;
    let raw = SecondRaw { first: t, coeffs: &g };
    let w0 = raw.wronskian(C64::new(0.0, 0.0));
    let w1 = raw.wronskian(C64::new(FRAC_PI_2, 0.0));
    let (f0, d0) = t.eval(C64::new(0.0, 0.0));
    let (f1, d1) = t.eval(C64::new(FRAC_PI_2, 0.0));
    let w = if f0.norm() + d0.norm() >= f1.norm() + d1.norm() { w0 } else { w1 };
    let prefactor = C64::from(2.0 / std::f64::consts::PI) / w;

    let p = t.p() as f64;
    let base: Vec<C64> = t.coeffs.iter().map(|c| c * t.scale).collect();
    let g_base: Vec<C64> = g.iter().map(|c| c * t.scale).collect();
    let delta = delta(t.parity(), t.r(), t.q);
    let (alpha_sums, literal) = match t.parity() {
        Parity::Even => {
            let a1: C64 = base.iter().sum();
            let a2: C64 = base.iter().map(|z| z * z).sum();
            let ng: C64 = g_base
                .iter()
                .enumerate()
                .map(|(m, z)| z * t.harmonic(m) as f64)
                .sum();
            let num = (a2 + (1.0 - p)).sqrt() * (2.0 * delta) / ((a1 + 1.0) * std::f64::consts::PI);
            ([a1, a2], num / (a1 * (ng / a1 + 1.0)))
        }
        Parity::Odd => {
            let a11: C64 = base
                .iter()
                .enumerate()
                .map(|(m, z)| z * t.harmonic(m) as f64)
                .sum();
            let a20: C64 = base.iter().map(|z| z * z).sum();
            let sh: C64 = g_base.iter().sum();
            let c = a11 + (2.0 - p);
            let num = a20.sqrt() * (2.0 * delta) / (c * std::f64::consts::PI);
            ([a11, a20], num / (c + sh / a11))
        }
    };
    SecondKindTable {
        spec: t.spec,
        q: t.q,
        first: first.clone(),
        coeffs: g,
        rho,
        alpha_sums,
        prefactor,
        literal_prefactor: literal,
        rho_truncation_change: change,
    }
}

struct SecondRaw<'a> {
    first: &'a CoefficientTable,
    coeffs: &'a [C64],
}

impl SecondRaw<'_> {
    /// Unnormalized series and derivative.
    fn eval(&self, theta: C64) -> (C64, C64) {
        let (f, df) = self.first.eval(theta);
        let mut s = theta * f;
        let mut ds = f + theta * df;
        for (m, &c) in self.coeffs.iter().enumerate() {
            let n = self.first.harmonic(m) as f64;
            let x = theta * n;
            match self.first.parity() {
                Parity::Even => {
                    s += c * x.sin();
                    ds += c * n * x.cos();
                }
                Parity::Odd => {
                    s += c * x.cos();
                    ds -= c * n * x.sin();
                }
            }
        }
        (s, ds)
    }

    fn wronskian(&self, theta: C64) -> C64 {
        let (f, df) = self.first.eval(theta);
        let (g, dg) = self.eval(theta);
        f * dg - df * g
    }
}

impl SecondKindTable {
    /// Normalized second-kind function and derivative.
    pub fn eval(&self, theta: C64) -> (C64, C64) {
        let raw = SecondRaw {
            first: &self.first,
            coeffs: &self.coeffs,
        };
        let (s, ds) = raw.eval(theta);
        (s * self.prefactor, ds * self.prefactor)
    }

    /// Whether the last two harmonics, weighted by `e^{n y}`, sit below
    /// round-off of the largest weighted term.
    fn tail_negligible(&self, y: f64) -> bool {
        let len = self.coeffs.len().min(self.first.coeffs.len());
        let w = |m: usize| {
            let n = self.first.harmonic(m) as f64;
            (self.coeffs[m].norm().max(self.first.coeffs[m].norm() * (1.0 + n))).ln() + n * y
        };
        let peak = (0..len).map(w).fold(f64::NEG_INFINITY, f64::max);
        len >= 2 && w(len - 1).max(w(len - 2)) <= peak + (1e-17f64).ln()
    }
}
