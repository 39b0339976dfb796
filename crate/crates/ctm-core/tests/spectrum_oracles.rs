use std::sync::Arc;

use ctm_core::potentials::{MatrixPotential, PoschlTeller, Potential, SechSquare, Zero};
use ctm_core::spectrum::{matrix_discrete_spectrum, scalar_discrete_spectrum, ModeRole};
use ctm_core::{Grid, C64};

#[test]
fn free_operator_has_no_bound_states() {
    let s = scalar_discrete_spectrum(Arc::new(Zero), &Grid::standard()).unwrap();
    assert!(s.states.is_empty());
}

#[test]
fn poschl_teller_bound_state() {
    let grid = Grid::standard();
    let s = scalar_discrete_spectrum(Arc::new(PoschlTeller { depth: 1 }), &grid).unwrap();
    assert_eq!(s.states.len(), 1);
    let b = &s.states[0];
    assert!((b.lambda.re + 1.0).abs() < 1e-5, "{}", b.lambda);
    assert!(b.residual < 1e-6, "residual {}", b.residual);
    let sech = grid.sample_real(|x| 1.0 / x.cosh() / 2f64.sqrt());
    let phase = grid.inner_x(&b.z[0], &sech);
    let phase = phase / phase.norm();
    let diff: Vec<C64> = b.z[0].iter().zip(&sech).map(|(z, e)| z - e * phase).collect();
    assert!(grid.norm_x(&diff) < 1e-5, "distance {}", grid.norm_x(&diff));
}

#[test]
fn deeper_wells() {
    let grid = Grid::standard();
    let s = scalar_discrete_spectrum(Arc::new(PoschlTeller { depth: 2 }), &grid).unwrap();
    let l: Vec<f64> = s.states.iter().map(|b| b.lambda.re).collect();
    assert_eq!(l.len(), 2);
    assert!((l[0] + 4.0).abs() < 1e-6 && (l[1] + 1.0).abs() < 1e-6, "{l:?}");
    let shallow = SechSquare { amplitude: -2.0 * 0.09, rate: 0.3 };
    let s = scalar_discrete_spectrum(Arc::new(shallow), &grid).unwrap();
    assert_eq!(s.states.len(), 1);
    assert!((s.states[0].lambda.re + 0.09).abs() < 1e-6, "{}", s.states[0].lambda);
    assert!(s.states[0].residual < 1e-6);
}

#[test]
fn decoupled_matrix_spectrum_follows_scalar() {
    let grid = Grid::standard();
    let u: Arc<dyn Potential> = Arc::new(PoschlTeller { depth: 1 });
    let p = MatrixPotential { u, w: Arc::new(Zero), omega: 2.0 };
    let s = matrix_discrete_spectrum(&p, &grid).unwrap();
    let mut l = s.eigenvalues();
    l.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    assert_eq!(l.len(), 2, "{l:?}");
    assert!((l[0] + 1.0).norm() < 1e-6 && (l[1] - 1.0).norm() < 1e-6, "{l:?}");
    assert_eq!(s.kernel_dim, 0);
    for b in s.states.iter() {
        assert!(b.residual < 1e-6);
        let (main, other) = if b.lambda.re > 0.0 { (0, 1) } else { (1, 0) };
        assert!(grid.norm_x(&b.z[other]) < 1e-8 && grid.norm_x(&b.z[main]) > 0.99);
    }
}

/// Linearization of the focusing cubic NLS around Q = √(2ω) sech(√ω x).
fn nls(omega: f64) -> MatrixPotential {
    MatrixPotential {
        u: Arc::new(SechSquare { amplitude: -4.0 * omega, rate: omega.sqrt() }),
        w: Arc::new(SechSquare { amplitude: 2.0 * omega, rate: omega.sqrt() }),
        omega,
    }
}

#[test]
fn nls_generalized_kernel() {
    let grid = Grid::standard();
    let s = matrix_discrete_spectrum(&nls(1.0), &grid).unwrap();
    assert_eq!((s.kernel_dim, s.kernel2_dim), (2, 4));
    assert!(s.eigenvalues().is_empty(), "{:?}", s.eigenvalues());
    let q = grid.sample_real(|x| 2f64.sqrt() / x.cosh());
    for b in s.states.iter().filter(|b| b.role == ModeRole::Kernel) {
        assert!(b.residual < 1e-6, "kernel residual {}", b.residual);
    }
    let gens: Vec<_> = s.states.iter().filter(|b| b.role == ModeRole::Generalized).collect();
    assert_eq!(gens.len(), 2);
    for g in gens {
        assert!(g.residual < 1e-6, "ℋ²Z¹ residual {}", g.residual);
        let y = g.image.as_ref().unwrap();
        assert!(grid.norm_x(&y[0]) > 1e-3);
    }
    let _ = q;
}
