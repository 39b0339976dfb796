use num_complex::Complex64 as C64;

use crate::distorted::{from_coeff, kappa, kappas, to_coeff};
use crate::error::Result;
use crate::grid::{Field, Grid};

/// Keeps the frequencies k < 0 (P₊) or k > 0 (P₋) on the half-shifted nodes, which avoid k = 0.
fn project(grid: &Grid, f: &[C64], negative: bool) -> Field {
    let mut g = to_coeff(grid, f);
    for (i, z) in g.iter_mut().enumerate() {
        if (kappa(grid, i) < 0.0) != negative {
            *z = C64::new(0.0, 0.0);
        }
    }
    from_coeff(grid, &g)
}

pub fn p_plus(grid: &Grid, f: &[C64]) -> Field {
    project(grid, f, true)
}

pub fn p_minus(grid: &Grid, f: &[C64]) -> Field {
    project(grid, f, false)
}

/// The κ nodes of `grid` viewed as a uniform grid of their own, so that coefficient functions
/// can be projected like fields.
pub fn frequency_grid(grid: &Grid) -> Result<Grid> {
    let k0 = kappas(grid)[0];
    Grid::new(k0, k0 + grid.n as f64 * grid.dk(), grid.n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// f = P₊f; measures ‖P₋(e^{-iy₀k} c(k+h₀) f(k))‖.
    Plus,
    /// f = P₋f; measures ‖P₊(e^{iy₀k} c(k+h₀) f(k))‖.
    Minus,
}

/// y₀ rounded to the dual lattice of `kgrid`, where e^{iy₀k} is an exact cyclic frequency shift.
pub fn lattice_shift(kgrid: &Grid, y0: f64) -> f64 {
    (y0 / kgrid.dk()).round() * kgrid.dk()
}

/// Size of the part of e^{∓iy₀k} c(k+h₀) f(k) that leaks into the opposite half-space.
pub fn interaction_norm(kgrid: &Grid, y0: f64, coeff: &dyn Fn(f64) -> C64, h0: f64, f: &[C64], side: Side) -> f64 {
    let y0 = lattice_shift(kgrid, y0);
    let sign = match side {
        Side::Plus => -1.0,
        Side::Minus => 1.0,
    };
    let prod: Field =
        (0..kgrid.n).map(|i| {
            let k = kgrid.x(i);
            C64::from_polar(1.0, sign * y0 * k) * coeff(k + h0) * f[i]
        }).collect();
    let wrong = match side {
        Side::Plus => p_minus(kgrid, &prod),
        Side::Minus => p_plus(kgrid, &prod),
    };
    kgrid.norm_x(&wrong)
}
