use std::f64::consts::PI;

use mathieu_casimir::casimir::{energy_per_length, log_det_integrand, t_matrix, BoundaryCondition, CasimirConfig, Surface};
use mathieu_casimir::mathieu::angular_first;
use mathieu_casimir::quadrature::GaussLegendre;
use mathieu_casimir::Parity;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

#[test]
fn log_det_grows_with_channel_cutoff() {
    for (h, p) in [(0.3, 0.5), (0.5, 1.0), (1.0, 2.0), (0.25, 4.0)] {
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let mut cfg = CasimirConfig::new(1.0, h, bc);
            let mut last = 0.0f64;
            for rr in (4..=24).step_by(2) {
                cfg.r_max = Some(rr);
                let v = log_det_integrand(p, &cfg).unwrap().value.abs();
                assert!(v >= last - 1e-12, "H={h} p={p} {bc:?} r_max={rr}: {v} < {last}");
                last = v;
            }
        }
    }
}

#[test]
fn energy_scales_as_inverse_square_length() {
    let base = CasimirConfig::new(1.0, 0.8, BoundaryCondition::Electromagnetic);
    let e = energy_per_length(&base).unwrap().energy;
    for lambda in [0.5, 2.0, 3.7] {
        let cfg = CasimirConfig::new(lambda, 0.8 * lambda, BoundaryCondition::Electromagnetic);
        let scaled = energy_per_length(&cfg).unwrap().energy * lambda * lambda;
        assert!((scaled - e).abs() <= 1e-9 * e.abs(), "lambda={lambda}: {scaled} vs {e}");
    }
}

#[test]
fn dirichlet_dominates_neumann() {
    for h in [0.3, 0.6, 1.0] {
        let cfg = CasimirConfig::new(1.0, h, BoundaryCondition::Electromagnetic);
        let res = energy_per_length(&cfg).unwrap();
        let (dd, nn) = (res.dirichlet.unwrap(), res.neumann.unwrap());
        assert!(dd < 0.0 && nn < 0.0 && dd.abs() > nn.abs(), "H={h}: D={dd} N={nn}");
    }
}

/// Channels coupled by the plane, as (parity, order, sign under θ → π - θ).
fn channels(top: u32) -> Vec<(Parity, u32, i32)> {
    let mut out: Vec<_> = (0..=top).map(|r| (Parity::Even, r, if r % 2 == 0 { 1 } else { -1 })).collect();
    out.extend((1..=top).map(|r| (Parity::Odd, r, if r % 2 == 1 { 1 } else { -1 })));
    out
}

/// Full plane kernel over all channels by direct quadrature of the angular
/// functions along θ = π/2 + iu, with no sector structure assumed.
fn brute_kernel(chans: &[(Parity, u32, i32)], q: C64, s: f64) -> DMatrix<C64> {
    let gl = GaussLegendre::new(40);
    let n = chans.len();
    let mut g = DMatrix::<C64>::zeros(n, n);
    for panel in 0..40 {
        let a = -6.0 + 0.3 * panel as f64;
        for (u, w) in gl.mapped(a, a + 0.3) {
            let weight = (-s * u.cosh()).exp() * w;
            let up: Vec<C64> = chans
                .iter()
                .map(|&(par, r, _)| angular_first(par, r, q, C64::new(PI / 2.0, u)).unwrap().value)
                .collect();
            let down: Vec<C64> = chans
                .iter()
                .map(|&(par, r, _)| angular_first(par, r, q, C64::new(PI / 2.0, -u)).unwrap().value)
                .collect();
            for i in 0..n {
                for j in 0..n {
                    g[(i, j)] += up[i] * down[j] * weight;
                }
            }
        }
    }
    g
}

#[test]
fn reflection_sectors_decouple() {
    let (d, h, p) = (1.0, 0.5, 1.2);
    let q = C64::from(-d * d * p * p / 4.0);
    let mu0 = 0.0;
    let chans = channels(5);
    let g = brute_kernel(&chans, q, 2.0 * p * h);
    let n = chans.len();
    for i in 0..n {
        for j in 0..n {
            let scale = (g[(i, i)] * g[(j, j)]).norm().sqrt();
            if chans[i].2 != chans[j].2 {
                assert!(g[(i, j)].norm() <= 1e-12 * scale, "{:?} x {:?}: {}", chans[i], chans[j], g[(i, j)]);
            } else {
                // The conjugate of an in-sector integrand is its mirror in u.
                assert!(g[(i, j)].im.abs() <= 1e-12 * scale, "{:?} x {:?}: {}", chans[i], chans[j], g[(i, j)]);
            }
        }
    }
    // log det over all channels equals the sum over the two sectors.
    let t: Vec<f64> = chans
        .iter()
        .map(|&(par, r, _)| t_matrix(par, r, q, mu0, Surface::Dirichlet).unwrap())
        .collect();
    let ldet = |idx: &[usize]| {
        let mut m = DMatrix::<f64>::identity(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] -= t[i] * g[(i, j)].re;
            }
        }
        m.determinant().ln()
    };
    let all: Vec<usize> = (0..n).collect();
    let plus: Vec<usize> = all.iter().copied().filter(|&i| chans[i].2 == 1).collect();
    let minus: Vec<usize> = all.iter().copied().filter(|&i| chans[i].2 == -1).collect();
    let full = ldet(&all);
    let split = ldet(&plus) + ldet(&minus);
    assert!(full.is_finite() && full != 0.0);
    assert!((full - split).abs() <= 1e-10 * full.abs().max(1e-300), "{full} vs {split}");
}
