use std::sync::Arc;

use ctm_core::coefficient_ops::{product_bound, Form, FormOperator, Scattering, WithoutReflection};
use ctm_core::fit::line_fit;
use ctm_core::jost::JostSolver;
use ctm_core::potentials::{Potential, SechSquare, TravelingCenter, Config};
use ctm_core::{CtmError, Grid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::operators::{branch_crossing, form_operator, neumann_bound_experiment, random_probe, BoundRow};
use crate::{Context, Outcome, Table};

fn kgrid() -> Grid {
    Grid::symmetric(64.0, 256).expect("valid frequency grid")
}

pub fn annihilation(ctx: &Context) -> Result<Outcome> {
    let g = kgrid();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 5);
    let wells = [
        SechSquare { amplitude: -1.5, rate: 1.0 },
        SechSquare { amplitude: 0.8, rate: 0.7 },
        SechSquare { amplitude: -0.6, rate: 1.2 },
        SechSquare { amplitude: -2.5, rate: 0.8 },
    ];
    let mut table = Table::new(&["m", "form", "sample", "ratio"]);
    let mut worst: f64 = 0.0;
    for m in 2..=4 {
        let centers: Vec<Arc<dyn Scattering>> = wells[..m]
            .iter()
            .map(|&w| Arc::new(WithoutReflection(Arc::new(JostSolver::new(Arc::new(w))))) as Arc<dyn Scattering>)
            .collect();
        let vs: Vec<f64> = (0..m).map(|l| 1.0 - l as f64).collect();
        for (fi, form) in [Form::One, Form::Two].into_iter().enumerate() {
            let op = FormOperator::new(form, &g, &centers, &vs)?;
            for i in 0..20 {
                let x = random_probe(&g, op.dim(), &mut rng);
                let y = op.apply_t(&x)?;
                // (Id - T) = R, so (Id - T)^{m-1} = R^{m-1}.
                let diff: Vec<_> = x.iter().zip(&y).map(|(a, b)| a.iter().zip(b).map(|(p, q)| p - q).collect()).collect();
                let ratio = op.power_norm(&diff, m - 2)? / op.norm(&x);
                worst = worst.max(ratio);
                table.push(vec![m as f64, fi as f64 + 1.0, i as f64, ratio]);
            }
        }
    }
    let mut o = Outcome::new("annihilation_identity", table);
    o.fitted("max_ratio", worst).tolerance("max_ratio", 1e-12);
    o.pass = worst <= 1e-12;
    Ok(o)
}

fn push_rows(table: &mut Table, m: usize, rows: &[BoundRow]) {
    for r in rows {
        table.push(vec![m as f64, r.j as f64, r.measured, r.theoretical, r.factorial_branch, r.floor_branch]);
    }
}

fn bound_table() -> Table {
    Table::new(&["m", "j", "measured", "theoretical", "factorial_branch", "floor_branch"])
}

pub fn neumann_bound(ctx: &Context) -> Result<Outcome> {
    let g = kgrid();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 6);
    let wells: [Arc<dyn Potential>; 3] = [
        Arc::new(SechSquare { amplitude: -1.5, rate: 1.0 }),
        Arc::new(SechSquare { amplitude: 0.8, rate: 0.7 }),
        Arc::new(SechSquare { amplitude: -0.6, rate: 1.2 }),
    ];
    let mut table = bound_table();
    let mut o = Outcome::new("neumann_bound", Table::default());
    let mut pass = true;
    for (m, vs) in [(2usize, vec![0.25, -0.25]), (3, vec![0.5, 0.0, -0.5])] {
        let centers = wells[..m]
            .iter()
            .zip(&vs)
            .enumerate()
            .map(|(l, (w, &v))| (w.clone(), TravelingCenter::new(v, -20.0 * l as f64)))
            .collect();
        let config = Config::scalar(g, centers)?;
        let (op, c) = form_operator(&config, &g)?;
        let rows = neumann_bound_experiment(&op, c, 6, 20, &mut rng)?;
        push_rows(&mut table, m, &rows);
        let bounded = rows.iter().all(|r| r.measured <= r.theoretical);
        let rhs = random_probe(&g, op.dim(), &mut rng);
        let sol = op.neumann_solve(&rhs, 1e-10, 200, c)?;
        o.fitted(&format!("m{m}_decay_constant"), c)
            .fitted(&format!("m{m}_gap"), op.gap())
            .fitted(&format!("m{m}_bounded"), bounded)
            .fitted(&format!("m{m}_residual"), sol.residual)
            .fitted(&format!("m{m}_iterations"), sol.iterations as f64)
            .fitted(&format!("m{m}_branch_crossing"), branch_crossing(&rows).map(|j| j as f64));
        pass &= bounded && sol.residual <= 1e-8 && sol.iterations <= 200;
    }
    o.tolerance("residual", 1e-8).tolerance("max_iterations", 200.0).tolerance("min_velocity_gap", 0.5);
    o.table = table;
    o.pass = pass;
    Ok(o)
}

pub fn config_neumann_bound(ctx: &Context) -> Result<Outcome> {
    let config = ctx.config.as_ref().ok_or_else(|| CtmError::Config("the config suite needs --config".into()))?;
    if config.m() < 2 {
        return Err(CtmError::Config("the Neumann bound needs at least two centers".into()));
    }
    let g = kgrid();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 16);
    let (op, c) = form_operator(config, &g)?;
    let rows = neumann_bound_experiment(&op, c, 6, 20, &mut rng)?;
    let mut table = bound_table();
    push_rows(&mut table, config.m(), &rows);
    let mut o = Outcome::new("config_neumann_bound", table);
    o.fitted("decay_constant", c).fitted("gap", op.gap());
    o.pass = rows.iter().all(|r| r.measured <= r.theoretical);
    Ok(o)
}

pub fn product(ctx: &Context) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 7);
    let mut table = Table::new(&["m", "gap", "sup", "bound"]);
    let mut all_bounded = true;
    for _ in 0..100 {
        let m = rng.gen_range(2..=8);
        let mut q = vec![rng.gen_range(-5.0..5.0)];
        for _ in 1..m {
            let last = *q.last().expect("non-empty");
            q.push(last - rng.gen_range(0.1..6.0));
        }
        let gap = q.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        let (sup, bound) = product_bound(&q);
        all_bounded &= sup <= bound;
        table.push(vec![m as f64, gap, sup, bound]);
    }
    let mut o = Outcome::new("product_bound", table);
    let mut exponents_ok = true;
    for m in 2..=8usize {
        let gaps = [200.0f64, 400.0, 800.0, 1600.0];
        let (xs, ys): (Vec<f64>, Vec<f64>) = gaps
            .iter()
            .map(|&d| {
                let q: Vec<f64> = (0..m).map(|j| -(j as f64) * d).collect();
                (d.ln(), product_bound(&q).0.ln())
            })
            .unzip();
        let slope = line_fit(&xs, &ys).slope;
        let target = 1.0 - m as f64;
        exponents_ok &= (slope - target).abs() <= 0.1 * target.abs();
        o.fitted(&format!("exponent_m{m}"), slope);
    }
    o.fitted("all_bounded", all_bounded).tolerance("exponent_relative", 0.1);
    o.pass = all_bounded && exponents_ok;
    Ok(o)
}
