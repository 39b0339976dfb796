use std::sync::Arc;

use ctm_core::coefficient_ops::{theoretical_bound, Form, FormOperator, Scattering};
use ctm_core::jost::JostSolver;
use ctm_core::potentials::Config;
use ctm_core::{Field, Grid, Result, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random smooth coefficient vectors concentrated in |k| < 3.
pub fn random_probe(grid: &Grid, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Field> {
    (0..dim)
        .map(|_| {
            let (c, w, a, b): (f64, f64, f64, f64) =
                (rng.gen_range(-3.0..3.0), rng.gen_range(0.7..2.0), rng.gen(), rng.gen());
            grid.sample(|k| C64::new(a - 0.5, b - 0.5) * (-(k - c).powi(2) / (w * w)).exp())
        })
        .collect()
}

/// Largest decay-certificate constant over the centers, sampled on the operator's grid.
pub fn measured_decay_constant(solvers: &[JostSolver], kgrid: &Grid) -> Result<f64> {
    let mut c: f64 = 0.0;
    for s in solvers {
        let cert = s.scattering_data(&kgrid.xs())?.decay_certificate();
        c = c.max(cert.c0).max(cert.c1);
    }
    Ok(c)
}

/// Form-1 operator on `kgrid` built from each center's Jost data, with its measured decay constant.
pub fn form_operator(config: &Config, kgrid: &Grid) -> Result<(FormOperator, f64)> {
    let solvers: Vec<JostSolver> = config.centers.iter().map(|c| JostSolver::new(c.potential.clone())).collect();
    let c = measured_decay_constant(&solvers, kgrid)?;
    let centers: Vec<Arc<dyn Scattering>> = solvers.into_iter().map(|s| Arc::new(s) as Arc<dyn Scattering>).collect();
    Ok((FormOperator::new(Form::One, kgrid, &centers, &config.vs())?, c))
}

#[derive(Clone, Debug)]
pub struct BoundRow {
    pub j: usize,
    /// Largest ‖R^{j(m-1)}x‖/‖x‖ over the probes.
    pub measured: f64,
    pub theoretical: f64,
    pub factorial_branch: f64,
    pub floor_branch: f64,
}

/// Randomized probe norms of R^{j(m-1)} against the factorial bound, j = 1..=j_max.
pub fn neumann_bound_experiment(
    op: &FormOperator,
    decay_constant: f64,
    j_max: usize,
    probes: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BoundRow>> {
    let m = op.m();
    let c = decay_constant.max(1.0);
    let cm = 2f64.powi(m as i32 - 1) * c / op.gap().min(1.0);
    let xs: Vec<Vec<Field>> = (0..probes).map(|_| random_probe(&op.kgrid, op.dim(), rng)).collect();
    let mut rows = Vec::new();
    for j in 1..=j_max {
        let mut measured: f64 = 0.0;
        for x in &xs {
            measured = measured.max(op.power_norm(x, j * (m - 1))? / op.norm(x));
        }
        let num = j as f64 * m as f64 * cm.powi(j as i32);
        let floor = if j >= 3 { (j - 3) / 2 } else { 0 };
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        rows.push(BoundRow {
            j,
            measured,
            theoretical: theoretical_bound(m, j, c, op.gap()),
            factorial_branch: num / fact(j),
            floor_branch: num / fact(floor).powi(2),
        });
    }
    Ok(rows)
}

/// First j at which the squared-floor branch becomes the smaller one.
pub fn branch_crossing(rows: &[BoundRow]) -> Option<usize> {
    rows.iter().find(|r| r.floor_branch < r.factorial_branch).map(|r| r.j)
}
