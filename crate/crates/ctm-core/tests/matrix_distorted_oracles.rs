use std::sync::{Arc, OnceLock};

use ctm_core::distorted::{kappa, kappas, to_coeff, ScalarBasis};
use ctm_core::matrix_distorted::{sigma3, MatrixBasis};
use ctm_core::potentials::{Gaussian, MatrixPotential, SechSquare, Zero};
use ctm_core::spectrum::DiscreteSpectrum;
use ctm_core::{Field, Grid, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn nls() -> &'static MatrixBasis {
    static BASIS: OnceLock<MatrixBasis> = OnceLock::new();
    BASIS.get_or_init(|| {
        let p = MatrixPotential {
            u: Arc::new(SechSquare { amplitude: -4.0, rate: 1.0 }),
            w: Arc::new(SechSquare { amplitude: 2.0, rate: 1.0 }),
            omega: 1.0,
        };
        MatrixBasis::new(&p, &Grid::standard()).unwrap()
    })
}

fn random_band_limited(grid: &Grid, rng: &mut ChaCha8Rng) -> Field {
    let centers: Vec<(f64, f64, f64, f64)> =
        (0..3).map(|_| (rng.gen_range(-4.0..4.0), rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    kappas(grid)
        .into_iter()
        .map(|k| centers.iter().map(|&(c, w, a, b)| C64::new(a, b) * (-(k - c).powi(2) / (2.0 * w * w)).exp()).sum())
        .collect()
}

fn rel(grid: &Grid, a: &[C64], b: &[C64]) -> f64 {
    let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    grid.norm_k(&d) / grid.norm_k(b)
}

#[test]
fn free_basis_reduces_to_plane_waves() {
    let grid = Grid::standard();
    let p = MatrixPotential { u: Arc::new(Zero), w: Arc::new(Zero), omega: 1.0 };
    let b = MatrixBasis::with_spectrum(&p, &grid, DiscreteSpectrum::default()).unwrap();
    let u1 = grid.sample(|x| C64::new((-x * x).exp(), 0.2 * x * (-x * x).exp()));
    let u2 = grid.sample(|x| C64::new((-(x - 1.0).powi(2)).exp(), 0.0));
    let out = b.f_star(&[u1.clone(), u2.clone()]);
    // F(x,-k) = e^{-ikx}e₁, so F*u is the plain transform of each component.
    assert!(rel(&grid, &out[0], &to_coeff(&grid, &u1)) < 1e-10);
    assert!(rel(&grid, &out[1], &to_coeff(&grid, &u2)) < 1e-10);
    let f1 = to_coeff(&grid, &u1);
    let zero = vec![C64::new(0.0, 0.0); grid.n];
    let synth = b.g_hat(&[f1, zero]).unwrap();
    let d: Vec<C64> = synth[0].iter().zip(&u1).map(|(a, b)| a - b).collect();
    assert!(grid.norm_x(&d) < 1e-10 && grid.norm_x(&synth[1]) < 1e-12);
}

#[test]
fn decoupled_channel_matches_scalar_scattering() {
    let grid = Grid::standard();
    let u = Arc::new(Gaussian { amplitude: 1.5, width: 1.0 });
    let p = MatrixPotential { u: u.clone(), w: Arc::new(Zero), omega: 1.0 };
    let mb = MatrixBasis::with_spectrum(&p, &grid, DiscreteSpectrum::default()).unwrap();
    let sb = ScalarBasis::new(u, &grid).unwrap();
    for i in 0..grid.n {
        let (s, r) = sb.coefficients_at(i);
        assert!((mb.transmission(i) - s).norm() < 1e-7 && (mb.reflection(i) - r).norm() < 1e-7, "k = {}", kappa(&grid, i));
    }
}

#[test]
fn nls_operator_is_reflectionless_and_unitary() {
    let b = nls();
    let n = b.grid.n;
    assert!(b.unitarity_defect() < 1e-10);
    assert!((0..n).all(|i| b.reflection(i).norm() < 1e-5));
    // Eighth-order stencil floor: halving the integration step leaves this residual unchanged.
    for i in [n / 2, n / 2 + 10, n / 2 + 60, n / 2 + 100, n / 2 - 50] {
        for fam in 0..2 {
            let res = b.eigen_residual(fam, i);
            assert!(res < 5e-6, "family {fam} k = {} residual {res}", kappa(&b.grid, i));
        }
    }
}

#[test]
fn frequency_side_inversion() {
    let b = nls();
    let grid = &b.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let f = [random_band_limited(grid, &mut rng), random_band_limited(grid, &mut rng)];
        let back = sigma3(&b.f_star(&sigma3(&b.g_hat(&f).unwrap())));
        assert!(rel(grid, &back[0], &f[0]) < 1e-4 && rel(grid, &back[1], &f[1]) < 1e-4);
        let back = sigma3(&b.g_star(&sigma3(&b.f_hat(&f).unwrap())));
        assert!(rel(grid, &back[0], &f[0]) < 1e-4 && rel(grid, &back[1], &f[1]) < 1e-4);
    }
}

#[test]
fn transforms_annihilate_generalized_kernel() {
    let b = nls();
    assert_eq!(b.spectrum.kernel2_dim, 4);
    for st in &b.spectrum.states {
        let z = sigma3(&[st.z[0].clone(), st.z[1].clone()]);
        for out in [b.f_star(&z), b.g_star(&z)] {
            let sup = out.iter().flat_map(|f| f.iter()).map(|c| c.norm()).fold(0.0, f64::max);
            assert!(sup < 1e-5, "{:?}: {sup}", st.role);
        }
    }
}

#[test]
fn synthesis_range_is_orthogonal_to_modes() {
    let b = nls();
    let grid = &b.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = [random_band_limited(grid, &mut rng), random_band_limited(grid, &mut rng)];
    let u = b.g_hat(&f).unwrap();
    let scale = grid.norm_x(&u[0]).hypot(grid.norm_x(&u[1]));
    for st in &b.spectrum.states {
        let z = sigma3(&[st.z[0].clone(), st.z[1].clone()]);
        let pairing: C64 = (0..grid.n).map(|j| u[0][j] * z[0][j] + u[1][j] * z[1][j]).sum::<C64>() * grid.dx();
        assert!(pairing.norm() < 1e-5 * scale, "{:?}: {}", st.role, pairing.norm());
    }
}
