//! Gauss–Legendre rules and composite panel integration.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Cached `n`-point rule.
    pub fn new(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(r) = cache.read().unwrap().get(&n) {
            return r.clone();
        }
        let rule = Arc::new(compute(n));
        cache.write().unwrap().insert(n, rule.clone());
        rule
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// 15-point Kronrod rule with its embedded 7-point Gauss rule, on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussKronrod15 {
    pub nodes: [f64; 15],
    pub kronrod: [f64; 15],
    /// Gauss weights on the same nodes; zero where the node is Kronrod-only.
    pub gauss: [f64; 15],
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

impl GaussKronrod15 {
    pub fn new() -> GaussKronrod15 {
        let mut nodes = [0.0; 15];
        let mut kronrod = [0.0; 15];
        let mut gauss = [0.0; 15];
        for i in 0..7 {
            nodes[i] = -XGK[i];
            nodes[14 - i] = XGK[i];
            kronrod[i] = WGK[i];
            kronrod[14 - i] = WGK[i];
            if i % 2 == 1 {
                gauss[i] = WG[i / 2];
                gauss[14 - i] = WG[i / 2];
            }
        }
        nodes[7] = 0.0;
        kronrod[7] = WGK[7];
        gauss[7] = WG[3];
        GaussKronrod15 {
            nodes,
            kronrod,
            gauss,
        }
    }

    /// `(x, kronrod_weight, gauss_weight)` mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        (0..15).map(move |i| {
            (
                mid + half * self.nodes[i],
                half * self.kronrod[i],
                half * self.gauss[i],
            )
        })
    }

    /// Kronrod value and `|Kronrod - Gauss|`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> (f64, f64) {
        let mut k = 0.0;
        let mut g = 0.0;
        for (x, wk, wg) in self.mapped(a, b) {
            let v = f(x);
            k += wk * v;
            g += wg * v;
        }
        (k, (k - g).abs())
    }
}

impl Default for GaussKronrod15 {
    fn default() -> Self {
        Self::new()
    }
}

fn compute(n: usize) -> GaussLegendre {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussLegendre { nodes, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
