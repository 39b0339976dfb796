use std::sync::Arc;

use ctm_core::jost::{detect_threshold_resonance, JostSolver};
use ctm_core::potentials::{Gaussian, PoschlTeller, Potential, SechSquare, Zero};
use ctm_core::{Grid, C64};

fn pt1() -> Arc<dyn Potential> {
    Arc::new(PoschlTeller { depth: 1 })
}

fn pt_jost(k: f64, x: f64) -> C64 {
    let ik = C64::new(0.0, k);
    (ik - x.tanh()) / (ik - 1.0) * C64::from_polar(1.0, k * x)
}

/// Classical RK4 on y'' = (V - k²) y, integrated leftward from x0 with a plane-wave start.
fn rk4_plus(v: &dyn Potential, k: f64, x0: f64, x1: f64, n: usize) -> C64 {
    let ik = C64::new(0.0, k);
    let mut y = [C64::from_polar(1.0, k * x0), ik * C64::from_polar(1.0, k * x0)];
    let h = (x1 - x0) / n as f64;
    let f = |x: f64, y: [C64; 2]| [y[1], y[0] * (v.value(x) - k * k)];
    let mut x = x0;
    for _ in 0..n {
        let k1 = f(x, y);
        let k2 = f(x + h / 2.0, [y[0] + k1[0] * (h / 2.0), y[1] + k1[1] * (h / 2.0)]);
        let k3 = f(x + h / 2.0, [y[0] + k2[0] * (h / 2.0), y[1] + k2[1] * (h / 2.0)]);
        let k4 = f(x + h, [y[0] + k3[0] * h, y[1] + k3[1] * h]);
        for c in 0..2 {
            y[c] += (k1[c] + k2[c] * 2.0 + k3[c] * 2.0 + k4[c]) * (h / 6.0);
        }
        x += h;
    }
    y[0]
}

#[test]
fn free_jost_is_plane_wave() {
    let solver = JostSolver::new(Arc::new(Zero));
    let (s, r) = solver.coefficients(0.7);
    assert_eq!((s, r), (C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
    let f = solver.plus_at(0.7, -3.0);
    assert!((f[0] - C64::from_polar(1.0, -2.1)).norm() < 1e-15);
}

#[test]
fn poschl_teller_jost_matches_closed_form() {
    let solver = JostSolver::new(pt1());
    for &x in &[-5.0, -1.0, 0.0, 0.3, 2.0] {
        let got = solver.plus_at(1.0, x)[0];
        assert!((got - pt_jost(1.0, x)).norm() < 1e-6, "x = {x}: {got} vs {}", pt_jost(1.0, x));
        let rk = rk4_plus(&PoschlTeller { depth: 1 }, 1.0, 20.0, x, 40_000);
        assert!((rk - pt_jost(1.0, x)).norm() < 1e-6);
    }
    let grid = Grid::standard();
    let core = solver.plus_on_core(&grid, 2.5);
    for j in (core.lo..=core.hi).step_by(37) {
        assert!((core.f[j - core.lo] - pt_jost(2.5, grid.x(j))).norm() < 1e-6);
    }
}

#[test]
fn poschl_teller_is_reflectionless() {
    for depth in [1, 2] {
        let solver = JostSolver::new(Arc::new(PoschlTeller { depth }));
        for i in 0..400 {
            let k = 1e-3 + i as f64 * 0.05;
            let (s, r) = solver.coefficients(k);
            assert!(r.norm() <= 1e-6, "depth {depth}, k = {k}: |r| = {}", r.norm());
            assert!((s.norm_sqr() + r.norm_sqr() - 1.0).abs() < 1e-6);
        }
    }
    let (s, _) = JostSolver::new(pt1()).coefficients(1.0);
    assert!((s - C64::new(0.0, 1.0)).norm() < 1e-5, "s(1) = {s}");
    let (s, _) = JostSolver::new(pt1()).coefficients(0.37);
    let exact = C64::new(0.37, 1.0) / C64::new(0.37, -1.0);
    assert!((s - exact).norm() < 1e-6);
}

#[test]
fn negative_k_is_conjugate() {
    let solver = JostSolver::new(Arc::new(Gaussian { amplitude: 0.5, width: 1.0 }));
    let (sp, rp) = solver.coefficients(0.8);
    let (sm, rm) = solver.coefficients(-0.8);
    assert_eq!((sm, rm), (sp.conj(), rp.conj()));
}

fn born_reflection(a: f64, sigma: f64, k: f64) -> C64 {
    let q = 2.0 * k;
    let vhat = a * sigma * (2.0 * std::f64::consts::PI).sqrt() * (-q * q * sigma * sigma / 2.0).exp();
    C64::new(vhat, 0.0) / C64::new(0.0, 2.0 * k)
}

#[test]
fn weak_gaussian_reflection_follows_born() {
    let solver = JostSolver::new(Arc::new(Gaussian { amplitude: 0.05, width: 1.0 }));
    let k = 1.0;
    let (_, r) = solver.coefficients(k);
    let born = born_reflection(0.05, 1.0, k);
    assert!((r.norm() - born.norm()).abs() / born.norm() < 0.2, "{r} vs {born}");
}

#[test]
fn unitarity_on_library_potentials() {
    let ks: Vec<f64> = (0..2000).map(|i| -20.0 + 40.0 * i as f64 / 1999.0).collect();
    for v in [
        pt1(),
        Arc::new(PoschlTeller { depth: 2 }) as Arc<dyn Potential>,
        Arc::new(Gaussian { amplitude: 0.2, width: 1.0 }),
        Arc::new(Gaussian { amplitude: -1.0, width: 1.5 }),
        Arc::new(SechSquare { amplitude: -1.5, rate: 1.0 }),
    ] {
        let data = JostSolver::new(v.clone()).scattering_data(&ks).unwrap();
        assert!(data.unitarity_defect() < 1e-6, "{}", v.label());
    }
}

#[test]
fn threshold_resonance_detection() {
    let free = detect_threshold_resonance(Arc::new(Zero));
    assert!(free.resonant && free.wronskian == 0.0);
    let g = detect_threshold_resonance(Arc::new(Gaussian { amplitude: 0.3, width: 1.0 }));
    assert!(!g.resonant && g.wronskian.abs() > 1e-4);
    assert!(detect_threshold_resonance(pt1()).resonant);

    let w = |a: f64| JostSolver::new(Arc::new(SechSquare { amplitude: -a, rate: 1.0 })).threshold_wronskian();
    let (mut lo, mut hi) = (1.5, 2.5);
    assert!(w(lo) * w(hi) < 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if w(lo) * w(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let depth = 0.5 * (lo + hi);
    assert!((depth - 2.0).abs() < 1e-6, "crossing at {depth}");
    assert!(detect_threshold_resonance(Arc::new(SechSquare { amplitude: -depth, rate: 1.0 })).resonant);
}

#[test]
fn decay_certificates() {
    let grid = Grid::standard();
    let ks = grid.ks();
    let free = JostSolver::new(Arc::new(Zero)).scattering_data(&ks).unwrap().decay_certificate();
    assert_eq!((free.c0, free.c1), (0.0, 0.0));

    let pt = JostSolver::new(pt1()).scattering_data(&ks).unwrap().decay_certificate();
    let closed = ks
        .iter()
        .map(|&k| {
            let kk = k.abs().max(1e-3) * k.signum().max(0.0) + k.min(0.0);
            let kk = if k == 0.0 { 1e-3 } else { kk };
            (1.0 + k.abs()) * (C64::new(1.0, 0.0) - C64::new(kk, 1.0) / C64::new(kk, -1.0)).norm()
        })
        .fold(0.0, f64::max);
    assert!((pt.c0 - closed).abs() / closed < 1e-4, "{} vs {closed}", pt.c0);

    let g = Arc::new(Gaussian { amplitude: 0.2, width: 1.0 });
    let narrow: Vec<f64> = ks.iter().copied().filter(|k| k.abs() <= 16.0).collect();
    let wide = JostSolver::new(g.clone()).scattering_data(&ks).unwrap().decay_certificate();
    let half = JostSolver::new(g).scattering_data(&narrow).unwrap().decay_certificate();
    assert!(wide.c0.is_finite() && (wide.c0 - half.c0).abs() / wide.c0 < 0.05);
}
