use std::sync::Arc;

use ctm_core::distorted::kappas;
use ctm_core::fit::line_fit;
use ctm_core::hardy::{frequency_grid, interaction_norm, p_minus, Side};
use ctm_core::jost::JostSolver;
use ctm_core::matrix_distorted::{sigma3, MatrixBasis};
use ctm_core::potentials::{Gaussian, MatrixPotential, PoschlTeller, Potential, SechSquare};
use ctm_core::spectrum::scalar_discrete_spectrum;
use ctm_core::{Field, Grid, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Context, Outcome, Table};

/// ±k on a log scale over [10⁻³, 20].
fn k_samples() -> Vec<f64> {
    let n = 200;
    let (a, b) = (1e-3f64.ln(), 20f64.ln());
    let pos: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    pos.iter().map(|k| -k).chain(pos.iter().copied()).collect()
}

pub fn unitarity(_: &Context) -> Result<Outcome> {
    let wells: Vec<Arc<dyn Potential>> = vec![
        Arc::new(Gaussian { amplitude: -2.0, width: 1.0 }),
        Arc::new(Gaussian { amplitude: 1.5, width: 0.7 }),
        Arc::new(PoschlTeller { depth: 1 }),
        Arc::new(PoschlTeller { depth: 2 }),
    ];
    let mut table = Table::new(&["potential", "k", "defect"]);
    let mut worst: f64 = 0.0;
    for (i, v) in wells.iter().enumerate() {
        let solver = JostSolver::new(v.clone());
        for k in k_samples() {
            let (s, r) = solver.coefficients(k);
            let d = (r.norm_sqr() + s.norm_sqr() - 1.0).abs();
            worst = worst.max(d);
            table.push(vec![i as f64, k, d]);
        }
    }
    let mut o = Outcome::new("scattering_unitarity", table);
    o.fitted("max_defect", worst).tolerance("max_defect", 1e-6);
    o.note(format!("potentials: {}", wells.iter().map(|v| v.label()).collect::<Vec<_>>().join(", ")));
    o.pass = worst <= 1e-6;
    Ok(o)
}

pub fn reflectionless(_: &Context) -> Result<Outcome> {
    let solver = JostSolver::new(Arc::new(PoschlTeller { depth: 1 }));
    let mut table = Table::new(&["k", "abs_r", "re_s", "im_s"]);
    let mut max_r: f64 = 0.0;
    for k in k_samples() {
        let (s, r) = solver.coefficients(k);
        max_r = max_r.max(r.norm());
        table.push(vec![k, r.norm(), s.re, s.im]);
    }
    let s1 = solver.coefficients(1.0).0;
    let err = (s1 - C64::new(0.0, 1.0)).norm();
    let mut o = Outcome::new("reflectionless_benchmark", table);
    o.fitted("max_abs_r", max_r).fitted("s1_error", err);
    o.tolerance("max_abs_r", 1e-6).tolerance("s1_error", 1e-5);
    o.pass = max_r <= 1e-6 && err <= 1e-5;
    Ok(o)
}

pub fn bound_state(_: &Context) -> Result<Outcome> {
    let grid = Grid::standard();
    let spectrum = scalar_discrete_spectrum(Arc::new(PoschlTeller { depth: 1 }), &grid)?;
    let mut table = Table::new(&["lambda", "residual", "distance"]);
    let mut lambda_err = f64::INFINITY;
    let mut distance = f64::INFINITY;
    let sech = grid.sample_real(|x| 1.0 / x.cosh() / 2f64.sqrt());
    for b in &spectrum.states {
        let overlap = grid.inner_x(&b.z[0], &sech);
        let phase = overlap / overlap.norm();
        let diff: Field = b.z[0].iter().zip(&sech).map(|(z, e)| z - e * phase).collect();
        let d = grid.norm_x(&diff);
        table.push(vec![b.lambda.re, b.residual, d]);
        if (b.lambda.re + 1.0).abs() < lambda_err {
            lambda_err = (b.lambda.re + 1.0).abs();
            distance = d;
        }
    }
    let mut o = Outcome::new("bound_state", table);
    o.fitted("states", spectrum.states.len() as f64).fitted("lambda_error", lambda_err).fitted("distance", distance);
    o.tolerance("lambda_error", 1e-5).tolerance("distance", 1e-5);
    o.pass = spectrum.states.len() == 1 && lambda_err <= 1e-5 && distance <= 1e-5;
    Ok(o)
}

fn random_band_limited(grid: &Grid, rng: &mut ChaCha8Rng) -> Field {
    let bumps: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(-4.0..4.0), rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    kappas(grid)
        .into_iter()
        .map(|k| bumps.iter().map(|&(c, w, a, b)| C64::new(a, b) * (-(k - c).powi(2) / (2.0 * w * w)).exp()).sum())
        .collect()
}

/// Linearization of the focusing cubic NLS around its ground state (ω = 1).
pub fn nls_potential() -> MatrixPotential {
    MatrixPotential {
        u: Arc::new(SechSquare { amplitude: -4.0, rate: 1.0 }),
        w: Arc::new(SechSquare { amplitude: 2.0, rate: 1.0 }),
        omega: 1.0,
    }
}

pub fn distorted_inversion(ctx: &Context) -> Result<Outcome> {
    let grid = Grid::standard();
    let basis = MatrixBasis::new(&nls_potential(), &grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 4);
    let mut table = Table::new(&["sample", "relative_error"]);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let f = [random_band_limited(&grid, &mut rng), random_band_limited(&grid, &mut rng)];
        let back = sigma3(&basis.f_star(&sigma3(&basis.g_hat(&f)?)));
        let num = grid.norm_k(&back[0].iter().zip(&f[0]).map(|(a, b)| a - b).collect::<Field>())
            .hypot(grid.norm_k(&back[1].iter().zip(&f[1]).map(|(a, b)| a - b).collect::<Field>()));
        let rel = num / grid.norm_k(&f[0]).hypot(grid.norm_k(&f[1]));
        worst = worst.max(rel);
        table.push(vec![i as f64, rel]);
    }
    let mut annihilation: f64 = 0.0;
    for st in &basis.spectrum.states {
        let z = sigma3(&[st.z[0].clone(), st.z[1].clone()]);
        for out in [basis.f_star(&z), basis.g_star(&z)] {
            annihilation = annihilation.max(out.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max));
        }
    }
    let mut o = Outcome::new("distorted_inversion", table);
    o.fitted("max_relative_error", worst)
        .fitted("max_annihilation_residual", annihilation)
        .fitted("modes", basis.spectrum.states.len() as f64);
    o.tolerance("max_relative_error", 1e-4).tolerance("max_annihilation_residual", 1e-5);
    o.pass = worst <= 1e-4 && annihilation <= 1e-5 && !basis.spectrum.states.is_empty();
    Ok(o)
}

pub fn hardy(_: &Context) -> Result<Outcome> {
    let kg = frequency_grid(&Grid::standard())?;
    // Analytic in the upper half-plane, where s and r have their poles.
    let f = p_minus(&kg, &kg.sample(|k| C64::new(k, 1.0).powi(-9)));
    let ys = [5.0, 10.0, 20.0, 40.0];
    // γ = 1/4 keeps e^{-γ y₀} above the coefficient noise floor up to y₀ = 40.
    let pt = JostSolver::new(Arc::new(SechSquare { amplitude: -2.0 / 16.0, rate: 0.25 }));
    let well = JostSolver::new(Arc::new(SechSquare { amplitude: -0.1, rate: 0.3 }));
    let s_minus_one = |k: f64| pt.coefficients(k).0 - 1.0;
    let r = |k: f64| well.coefficients(k).1;
    let cases: [(&str, &dyn Fn(f64) -> C64, f64); 2] = [("s_minus_one", &s_minus_one, 0.0), ("reflection", &r, 1.0)];
    let mut table = Table::new(&["case", "y0", "log_norm"]);
    let mut o = Outcome::new("hardy_interaction", Table::default());
    let mut pass = true;
    for (i, (name, c, h0)) in cases.iter().enumerate() {
        let logs: Vec<f64> = ys.iter().map(|&y| interaction_norm(&kg, y, *c, *h0, &f, Side::Minus).ln()).collect();
        for (y, l) in ys.iter().zip(&logs) {
            table.push(vec![i as f64, *y, *l]);
        }
        let fit = line_fit(&ys, &logs);
        o.fitted(&format!("{name}_slope"), fit.slope).fitted(&format!("{name}_r2"), fit.r2);
        pass &= fit.slope < 0.0 && fit.r2 >= 0.9;
    }
    o.tolerance("slope_max", 0.0).tolerance("r2_min", 0.9);
    o.table = table;
    o.pass = pass;
    Ok(o)
}
