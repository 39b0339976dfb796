use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{CtmError, Result};
use crate::grid::Grid;
use crate::potentials::Potential;

pub const K_FLOOR: f64 = 1e-3;
pub const RESONANCE_THRESHOLD: f64 = 1e-4;
const STEP: f64 = 0.02;

const SQRT3_12: f64 = 0.144_337_567_297_406_43;
const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9;

/// Real 2×2 propagator of y'' = q y over one step of length h (fourth-order Magnus).
fn magnus_step(q1: f64, q2: f64, h: f64) -> [[f64; 2]; 2] {
    let a = SQRT3_12 * h * h * (q1 - q2);
    let b = h;
    let c = h * (q1 + q2) / 2.0;
    let mu2 = a * a + b * c;
    let (ch, sh) = if mu2.abs() < 1e-8 {
        (1.0 + mu2 / 2.0 + mu2 * mu2 / 24.0, 1.0 + mu2 / 6.0 + mu2 * mu2 / 120.0)
    } else if mu2 > 0.0 {
        let mu = mu2.sqrt();
        (mu.cosh(), mu.sinh() / mu)
    } else {
        let mu = (-mu2).sqrt();
        (mu.cos(), mu.sin() / mu)
    };
    [[ch + sh * a, sh * b], [sh * c, ch - sh * a]]
}

fn apply(m: &[[f64; 2]; 2], y: [C64; 2]) -> [C64; 2] {
    [y[0] * m[0][0] + y[1] * m[0][1], y[0] * m[1][0] + y[1] * m[1][1]]
}

/// Integrates y'' = (V - k²) y from `x0` to `x1` in `steps` Magnus steps.
pub fn integrate(v: &dyn Potential, k2: f64, x0: f64, x1: f64, steps: usize, mut y: [C64; 2]) -> [C64; 2] {
    let h = (x1 - x0) / steps as f64;
    for i in 0..steps {
        let xa = x0 + i as f64 * h;
        let q1 = v.value(xa + h * (0.5 - GAUSS_OFFSET)) - k2;
        let q2 = v.value(xa + h * (0.5 + GAUSS_OFFSET)) - k2;
        y = apply(&magnus_step(q1, q2, h), y);
    }
    y
}

/// Jost solutions and scattering coefficients of H = -∂² + V for an even potential.
#[derive(Clone, Debug)]
pub struct JostSolver {
    pub potential: Arc<dyn Potential>,
    /// Matching radius: V is negligible for |x| > xc.
    pub xc: f64,
    vmax: f64,
}

impl JostSolver {
    pub fn new(potential: Arc<dyn Potential>) -> Self {
        let xc = potential.core_radius();
        Self::with_radius(potential, xc)
    }

    pub fn with_radius(potential: Arc<dyn Potential>, xc: f64) -> Self {
        let vmax = (0..=2000)
            .map(|i| potential.value(xc * i as f64 / 2000.0).abs())
            .fold(0.0, f64::max);
        Self { potential, xc, vmax }
    }

    fn step_len(&self, k: f64) -> f64 {
        STEP / (self.vmax.sqrt().max(1.0) * k.abs().sqrt().max(1.0))
    }

    fn steps(&self, len: f64, k: f64) -> usize {
        ((len.abs() / self.step_len(k)).ceil() as usize).max(1)
    }

    /// (f₊, f₊') at x for k > 0 (f₊ = e^{ikx} beyond xc).
    pub fn plus_at(&self, k: f64, x: f64) -> [C64; 2] {
        let start = self.xc.max(x);
        let ik = C64::new(0.0, k);
        let e = C64::from_polar(1.0, k * start);
        let y0 = [e, ik * e];
        if x >= self.xc || self.potential.is_zero() {
            let e = C64::from_polar(1.0, k * x);
            return [e, ik * e];
        }
        integrate(&*self.potential, k * k, start, x, self.steps(start - x, k), y0)
    }

    /// (s(k), r(k)) for real k; uses k_floor near 0 and conjugation symmetry for k < 0.
    pub fn coefficients(&self, k: f64) -> (C64, C64) {
        let ka = k.abs().max(K_FLOOR);
        let (s, r) = if self.potential.is_zero() || self.xc == 0.0 {
            (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
        } else {
            let x = -self.xc;
            let [f, df] = self.plus_at(ka, x);
            let ik = C64::new(0.0, ka);
            let a = (df + ik * f) * C64::from_polar(1.0, -ka * x) / (ik * 2.0);
            let b = (ik * f - df) * C64::from_polar(1.0, ka * x) / (ik * 2.0);
            (1.0 / a, b / a)
        };
        if k < 0.0 {
            (s.conj(), r.conj())
        } else {
            (s, r)
        }
    }

    /// f₊(·, k) and its derivative on the grid nodes of [-xc, xc] (k > 0), plus the node range.
    pub fn plus_on_core(&self, grid: &Grid, k: f64) -> CoreProfile {
        let (lo, hi) = core_nodes(grid, self.xc);
        let mut f = vec![C64::new(0.0, 0.0); hi - lo + 1];
        let mut df = f.clone();
        let x_hi = grid.x(hi);
        let ik = C64::new(0.0, k);
        let e = C64::from_polar(1.0, k * x_hi);
        let mut y = [e, ik * e];
        let sub = self.steps(grid.dx(), k);
        f[hi - lo] = y[0];
        df[hi - lo] = y[1];
        for j in (lo..hi).rev() {
            y = integrate(&*self.potential, k * k, grid.x(j + 1), grid.x(j), sub, y);
            f[j - lo] = y[0];
            df[j - lo] = y[1];
        }
        CoreProfile { lo, hi, f, df }
    }

    /// Wronskian of the two zero-energy Jost solutions: W = f₊f₋' - f₊'f₋ at x = 0.
    pub fn threshold_wronskian(&self) -> f64 {
        if self.potential.is_zero() {
            return 0.0;
        }
        let y0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let y = integrate(&*self.potential, 0.0, self.xc, 0.0, self.steps(self.xc, 0.0), y0);
        -2.0 * (y[0] * y[1]).re
    }

    pub fn scattering_data(&self, ks: &[f64]) -> Result<ScatteringData> {
        let mut r = Vec::with_capacity(ks.len());
        let mut s = Vec::with_capacity(ks.len());
        for &k in ks {
            let (sk, rk) = self.coefficients(k);
            let defect = (sk.norm_sqr() + rk.norm_sqr() - 1.0).abs();
            if defect > 1e-6 {
                return Err(CtmError::Numerical(format!(
                    "unitarity defect {defect:.2e} at k = {k:.4}; widen the matching radius"
                )));
            }
            s.push(sk);
            r.push(rk);
        }
        Ok(ScatteringData { k: ks.to_vec(), r, s })
    }
}

pub fn core_nodes(grid: &Grid, xc: f64) -> (usize, usize) {
    let mid = grid.nearest_node(0.0);
    let c = (xc / grid.dx()).ceil() as usize;
    (mid.saturating_sub(c), (mid + c).min(grid.n - 1))
}

#[derive(Clone, Debug)]
pub struct CoreProfile {
    pub lo: usize,
    pub hi: usize,
    pub f: Vec<C64>,
    pub df: Vec<C64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScatteringData {
    pub k: Vec<f64>,
    pub r: Vec<C64>,
    pub s: Vec<C64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct DecayCertificate {
    pub c0: f64,
    pub c1: f64,
}

impl ScatteringData {
    pub fn free(ks: &[f64]) -> Self {
        Self { k: ks.to_vec(), r: vec![C64::new(0.0, 0.0); ks.len()], s: vec![C64::new(1.0, 0.0); ks.len()] }
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.r.iter().zip(&self.s).map(|(r, s)| (r.norm_sqr() + s.norm_sqr() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// sup (1+|k|)^{n+1} (|dⁿr| + |dⁿ(1-s)|) for n = 0, 1 (derivatives by finite differences).
    pub fn decay_certificate(&self) -> DecayCertificate {
        let n = self.k.len();
        let mut c0: f64 = 0.0;
        let mut c1: f64 = 0.0;
        for i in 0..n {
            let w = 1.0 + self.k[i].abs();
            c0 = c0.max(w * (self.r[i].norm() + (C64::new(1.0, 0.0) - self.s[i]).norm()));
            if i > 0 && i + 1 < n {
                let h = self.k[i + 1] - self.k[i - 1];
                let dr = (self.r[i + 1] - self.r[i - 1]) / h;
                let ds = (self.s[i + 1] - self.s[i - 1]) / h;
                c1 = c1.max(w * w * (dr.norm() + ds.norm()));
            }
        }
        DecayCertificate { c0, c1 }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,re_r,im_r,re_s,im_s\n");
        for i in 0..self.k.len() {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.k[i], self.r[i].re, self.r[i].im, self.s[i].re, self.s[i].im
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub resonant: bool,
    pub wronskian: f64,
}

pub fn detect_threshold_resonance(v: Arc<dyn Potential>) -> ResonanceReport {
    let w = JostSolver::new(v).threshold_wronskian();
    ResonanceReport { resonant: w.abs() < RESONANCE_THRESHOLD, wronskian: w }
}
