use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{CtmError, Result};

pub type Field = Vec<C64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 4 {
            return Err(CtmError::Config(format!("grid size {n} is not a power of two")));
        }
        if !(x_max > x_min) {
            return Err(CtmError::Config("grid requires x_max > x_min".into()));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn symmetric(width: f64, n: usize) -> Result<Self> {
        Self::new(-width / 2.0, width / 2.0, n)
    }

    pub fn standard() -> Self {
        Self::symmetric(400.0, 4096).unwrap()
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.width() / self.n as f64
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / self.width()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn k(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.dk()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn ks(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.k(i)).collect()
    }

    pub fn k_max(&self) -> f64 {
        self.dk() * (self.n / 2) as f64
    }

    /// Index of the k-node reflected through the origin (k -> -k); the lowest node maps to itself.
    pub fn reflect_index(&self, i: usize) -> usize {
        if i == 0 {
            0
        } else {
            self.n - i
        }
    }

    pub fn nearest_node(&self, x: f64) -> usize {
        let j = ((x - self.x_min) / self.dx()).round();
        j.clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn sample<F: Fn(f64) -> C64>(&self, f: F) -> Field {
        self.xs().into_iter().map(f).collect()
    }

    pub fn sample_real<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        self.xs().into_iter().map(|x| C64::new(f(x), 0.0)).collect()
    }

    pub fn sample_k<F: Fn(f64) -> C64>(&self, f: F) -> Field {
        self.ks().into_iter().map(f).collect()
    }

    pub fn check(&self, f: &[C64]) -> Result<()> {
        if f.len() != self.n {
            return Err(CtmError::Config(format!(
                "field has {} samples but the grid has {}",
                f.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// g(k) = (2π)^{-1/2} ∫ e^{-ikx} f(x) dx on the centered k-grid.
    pub fn dft(&self, f: &[C64]) -> Field {
        let n = self.n;
        let mut buf = f.to_vec();
        plan(n, false).process(&mut buf);
        let scale = self.dx() / (2.0 * PI).sqrt();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let j = (i + n / 2) % n;
            let k = self.k(i);
            out[i] = buf[j] * C64::from_polar(scale, -k * self.x_min);
        }
        out
    }

    /// Inverse of [`Grid::dft`].
    pub fn idft(&self, g: &[C64]) -> Field {
        let n = self.n;
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let j = (i + n / 2) % n;
            let k = self.k(i);
            buf[j] = g[i] * C64::from_polar(1.0, k * self.x_min);
        }
        plan(n, true).process(&mut buf);
        let scale = self.dk() / (2.0 * PI).sqrt();
        buf.iter().map(|z| z * scale).collect()
    }

    pub fn try_dft(&self, f: &[C64]) -> Result<Field> {
        self.check(f)?;
        Ok(self.dft(f))
    }

    pub fn try_idft(&self, g: &[C64]) -> Result<Field> {
        self.check(g)?;
        Ok(self.idft(g))
    }

    /// f(x - c) by exact Fourier phase shift.
    pub fn translate(&self, f: &[C64], c: f64) -> Field {
        if c == 0.0 {
            return f.to_vec();
        }
        let mut g = self.dft(f);
        for (i, z) in g.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, -self.k(i) * c);
        }
        self.idft(&g)
    }

    /// Spectral derivative of order `order`.
    pub fn derivative(&self, f: &[C64], order: u32) -> Field {
        let mut g = self.dft(f);
        for (i, z) in g.iter_mut().enumerate() {
            *z *= C64::new(0.0, self.k(i)).powu(order);
        }
        self.idft(&g)
    }

    pub fn norm_x(&self, f: &[C64]) -> f64 {
        (self.dx() * f.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn norm_k(&self, g: &[C64]) -> f64 {
        (self.dk() * g.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn inner_x(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter().zip(g).map(|(a, b)| a * b.conj()).sum::<C64>() * self.dx()
    }

    pub fn inner_k(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter().zip(g).map(|(a, b)| a * b.conj()).sum::<C64>() * self.dk()
    }

    pub fn sup(&self, f: &[C64]) -> f64 {
        f.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn weighted_norm(&self, f: &[C64], w: &Weight, p: Lp) -> f64 {
        let weights = self.xs().into_iter().map(|x| w.at(x));
        match p {
            Lp::One => self.dx() * f.iter().zip(weights).map(|(z, w)| z.norm() * w).sum::<f64>(),
            Lp::Two => {
                (self.dx() * f.iter().zip(weights).map(|(z, w)| (z.norm() * w).powi(2)).sum::<f64>())
                    .sqrt()
            }
            Lp::Inf => f.iter().zip(weights).map(|(z, w)| z.norm() * w).fold(0.0, f64::max),
        }
    }

    /// H^s norm computed with the ⟨k⟩^s multiplier.
    pub fn sobolev_norm(&self, f: &[C64], s: f64) -> f64 {
        let g = self.dft(f);
        let w: Vec<C64> = g
            .iter()
            .enumerate()
            .map(|(i, z)| z * (1.0 + self.k(i).powi(2)).powf(s / 2.0))
            .collect();
        self.norm_k(&w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lp {
    One,
    Two,
    Inf,
}

/// ⟨x - y - v t⟩^exponent.
#[derive(Clone, Copy, Debug)]
pub struct Weight {
    pub center: f64,
    pub velocity: f64,
    pub t: f64,
    pub exponent: f64,
}

impl Weight {
    pub fn none() -> Self {
        Self { center: 0.0, velocity: 0.0, t: 0.0, exponent: 0.0 }
    }

    pub fn at(&self, x: f64) -> f64 {
        if self.exponent == 0.0 {
            return 1.0;
        }
        let d = x - self.center - self.velocity * self.t;
        (1.0 + d * d).sqrt().powf(self.exponent)
    }
}

/// Sharp windows χ_ℓ(t, ·) split at the midpoints between consecutive moving centers.
pub fn localization_windows(grid: &Grid, ys: &[f64], vs: &[f64], t: f64) -> Result<Vec<Vec<f64>>> {
    let m = ys.len();
    if m == 0 || vs.len() != m {
        return Err(CtmError::Config("windows need matching, non-empty center lists".into()));
    }
    for l in 1..m {
        if !(vs[l - 1] > vs[l]) || !(ys[l - 1] > ys[l]) {
            return Err(CtmError::Config("centers must satisfy v1 > v2 > ... and y1 > y2 > ...".into()));
        }
    }
    let bounds = window_boundaries(ys, vs, t);
    let xs = grid.xs();
    let mut out = vec![vec![0.0; grid.n]; m];
    for (j, &x) in xs.iter().enumerate() {
        let l = bounds.iter().position(|&b| x > b).unwrap_or(m - 1);
        out[l][j] = 1.0;
    }
    Ok(out)
}

pub fn window_boundaries(ys: &[f64], vs: &[f64], t: f64) -> Vec<f64> {
    (0..ys.len().saturating_sub(1))
        .map(|l| (ys[l] + ys[l + 1] + t * (vs[l] + vs[l + 1])) / 2.0)
        .collect()
}

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((n, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// Linear interpolation of a table sampled on a uniform grid; None outside the table.
pub fn interp_uniform(k0: f64, dk: f64, table: &[C64], k: f64) -> Option<C64> {
    let u = (k - k0) / dk;
    let n = table.len();
    if u < -1e-9 || u > (n - 1) as f64 + 1e-9 {
        return None;
    }
    let u = u.clamp(0.0, (n - 1) as f64);
    let i = (u.floor() as usize).min(n.saturating_sub(2));
    let w = u - i as f64;
    Some(table[i] * (1.0 - w) + table[i + 1] * w)
}
