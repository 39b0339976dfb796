use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{CtmError, Result};
use crate::grid::{Field, Grid};
use crate::jost::{core_nodes, JostSolver, ScatteringData, K_FLOOR};
use crate::potentials::Potential;
use crate::spectrum::{scalar_discrete_spectrum, DiscreteSpectrum};

pub const S_FLOOR: f64 = 1e-6;

/// Coefficient nodes κ_i = k_i + dk/2, symmetric about 0 with no node at k = 0.
pub fn kappa(grid: &Grid, i: usize) -> f64 {
    grid.k(i) + 0.5 * grid.dk()
}

pub fn kappas(grid: &Grid) -> Vec<f64> {
    (0..grid.n).map(|i| kappa(grid, i)).collect()
}

/// Index of -κ_i.
pub fn reflect(grid: &Grid, i: usize) -> usize {
    grid.n - 1 - i
}

fn half_phase(grid: &Grid, sign: f64) -> Vec<C64> {
    let a = 0.5 * grid.dk() * sign;
    grid.xs().iter().map(|&x| C64::from_polar(1.0, a * x)).collect()
}

/// Fourier transform sampled at the κ nodes.
pub fn to_coeff(grid: &Grid, f: &[C64]) -> Field {
    let m: Field = f.iter().zip(half_phase(grid, -1.0)).map(|(a, b)| a * b).collect();
    grid.dft(&m)
}

pub fn from_coeff(grid: &Grid, g: &[C64]) -> Field {
    grid.idft(g).iter().zip(half_phase(grid, 1.0)).map(|(a, b)| a * b).collect()
}

/// φ(κ + a), exact for profiles whose inverse transform is localized inside the box.
pub fn shift_coeff(grid: &Grid, phi: &[C64], a: f64) -> Field {
    if a == 0.0 {
        return phi.to_vec();
    }
    let u = from_coeff(grid, phi);
    let m: Field = u.iter().zip(grid.xs()).map(|(z, x)| z * C64::from_polar(1.0, -a * x)).collect();
    to_coeff(grid, &m)
}

/// φ(-κ).
pub fn reflect_coeff(grid: &Grid, phi: &[C64]) -> Field {
    (0..grid.n).map(|i| phi[reflect(grid, i)]).collect()
}

/// Generalized eigenfunctions e(x,k) of -∂² + V on a grid.
///
/// For k > 0, e = s(k) f₊(x,k)/√(2π); for k < 0, e(x,k) = e(-x,-k). Outside the core |x| ≤ xc the
/// eigenfunctions are plane-wave combinations handled by FFTs; inside they come from a dense table.
pub struct ScalarBasis {
    pub grid: Grid,
    pub potential: Arc<dyn Potential>,
    pub spectrum: DiscreteSpectrum,
    lo: usize,
    hi: usize,
    /// Rows |κ| = dk/2, 3dk/2, ….
    s: Vec<C64>,
    r: Vec<C64>,
    table: Vec<C64>,
}

impl ScalarBasis {
    pub fn new(potential: Arc<dyn Potential>, grid: &Grid) -> Result<Self> {
        let solver = JostSolver::new(potential.clone());
        let spectrum = scalar_discrete_spectrum(potential.clone(), grid)?;
        let (lo, hi) = if potential.is_zero() { (1, 0) } else { core_nodes(grid, solver.xc) };
        let half = grid.n / 2;
        let width = (hi + 1).saturating_sub(lo);
        let norm = 1.0 / (2.0 * PI).sqrt();
        let mut s = Vec::with_capacity(half);
        let mut r = Vec::with_capacity(half);
        let mut table = vec![C64::new(0.0, 0.0); half * width];
        for row in 0..half {
            let k = ((row as f64 + 0.5) * grid.dk()).max(K_FLOOR);
            let (sk, rk) = if potential.is_zero() {
                (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
            } else {
                solver.coefficients(k)
            };
            if (sk.norm_sqr() + rk.norm_sqr() - 1.0).abs() > 1e-6 {
                return Err(CtmError::Numerical(format!("unitarity defect at k = {k:.4}")));
            }
            s.push(sk);
            r.push(rk);
            if width > 0 {
                let core = solver.plus_on_core(grid, k);
                for (c, f) in core.f.iter().enumerate() {
                    table[row * width + c] = sk * f * norm;
                }
            }
        }
        Ok(Self { grid: *grid, potential, spectrum, lo, hi, s, r, table })
    }

    pub fn free(grid: &Grid) -> Result<Self> {
        Self::new(Arc::new(crate::potentials::Zero), grid)
    }

    pub fn ks(&self) -> Vec<f64> {
        kappas(&self.grid)
    }

    fn width(&self) -> usize {
        (self.hi + 1).saturating_sub(self.lo)
    }

    fn row(&self, i: usize) -> usize {
        let half = self.grid.n / 2;
        if i >= half {
            i - half
        } else {
            half - 1 - i
        }
    }

    fn mirror(&self, j: usize) -> usize {
        self.grid.n - j
    }

    /// s(κ_i), r(κ_i), conjugated for κ < 0.
    pub fn coefficients_at(&self, i: usize) -> (C64, C64) {
        let row = self.row(i);
        if i >= self.grid.n / 2 {
            (self.s[row], self.r[row])
        } else {
            (self.s[row].conj(), self.r[row].conj())
        }
    }

    /// (s, r) at any real k by four-point Lagrange interpolation of the κ-node tables.
    pub fn coefficients_interp(&self, k: f64) -> (C64, C64) {
        let g = &self.grid;
        let t = (k - kappa(g, 0)) / g.dk();
        if t <= 0.0 {
            return self.coefficients_at(0);
        }
        if t >= (g.n - 1) as f64 {
            return self.coefficients_at(g.n - 1);
        }
        let j = (t.floor() as usize).clamp(1, g.n - 3);
        let u = t - j as f64;
        let w = [
            -u * (u - 1.0) * (u - 2.0) / 6.0,
            (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
            -(u + 1.0) * u * (u - 2.0) / 2.0,
            (u + 1.0) * u * (u - 1.0) / 6.0,
        ];
        let mut s = C64::new(0.0, 0.0);
        let mut r = C64::new(0.0, 0.0);
        for (q, wq) in w.iter().enumerate() {
            let (sq, rq) = self.coefficients_at(j + q - 1);
            s += sq * wq;
            r += rq * wq;
        }
        (s, r)
    }

    pub fn scattering_data(&self) -> ScatteringData {
        let n = self.grid.n;
        let (mut r, mut s) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let (si, ri) = self.coefficients_at(i);
            s.push(si);
            r.push(ri);
        }
        ScatteringData { k: self.ks(), r, s }
    }

    /// e(x_j, κ_i) for a core node j.
    fn core_value(&self, i: usize, j: usize) -> C64 {
        let row = self.row(i);
        let col = if i >= self.grid.n / 2 { j } else { self.mirror(j) } - self.lo;
        self.table[row * self.width() + col]
    }

    /// g(κ) = ⟨f, e(·,κ)⟩.
    pub fn expand(&self, f: &[C64]) -> Field {
        let g = &self.grid;
        let n = g.n;
        let half = n / 2;
        let zero = C64::new(0.0, 0.0);
        let (lo, hi) = (self.lo, self.hi);
        if self.width() == 0 {
            return to_coeff(g, f);
        }
        let right: Field = f.iter().enumerate().map(|(j, &z)| if j > hi { z } else { zero }).collect();
        let left: Field = f.iter().enumerate().map(|(j, &z)| if j < lo { z } else { zero }).collect();
        let dr = to_coeff(g, &right);
        let dl = to_coeff(g, &left);
        let dx = g.dx();
        let mut out = vec![zero; n];
        for i in 0..n {
            let row = self.row(i);
            let (s, r) = (self.s[row], self.r[row]);
            let ir = reflect(g, i);
            let tails = if i >= half {
                s.conj() * dr[i] + dl[i] + r.conj() * dl[ir]
            } else {
                dr[i] + r.conj() * dr[ir] + s.conj() * dl[i]
            };
            let mut core = zero;
            for j in lo..=hi {
                core += f[j] * self.core_value(i, j).conj();
            }
            out[i] = tails + core * dx;
        }
        out
    }

    /// f(x) = ∫ e(x,κ) g(κ) dκ.
    pub fn synthesize(&self, gk: &[C64]) -> Field {
        let g = &self.grid;
        let n = g.n;
        let half = n / 2;
        let zero = C64::new(0.0, 0.0);
        let dk = g.dk();
        let gw = gk;
        if self.width() == 0 {
            return from_coeff(g, gw);
        }
        let mut hr = vec![zero; n];
        let mut hl = vec![zero; n];
        for i in 0..n {
            let row = self.row(i);
            let (s, r) = (self.s[row], self.r[row]);
            let ir = reflect(g, i);
            if i >= half {
                hr[i] += s * gw[i];
                hl[i] += gw[i];
                hl[ir] += r * gw[i];
            } else {
                hr[i] += gw[i];
                hr[ir] += r * gw[i];
                hl[i] += s * gw[i];
            }
        }
        let fr = from_coeff(g, &hr);
        let fl = from_coeff(g, &hl);
        let mut out = vec![zero; n];
        for j in 0..n {
            if j > self.hi {
                out[j] = fr[j];
            } else if j < self.lo {
                out[j] = fl[j];
            } else {
                let mut acc = zero;
                for (i, gi) in gw.iter().enumerate() {
                    acc += gi * self.core_value(i, j);
                }
                out[j] = acc * dk;
            }
        }
        out
    }

    /// Removes the bound-state components of f.
    pub fn project_continuous(&self, f: &[C64]) -> Field {
        let mut out = f.to_vec();
        for b in &self.spectrum.states {
            let c = self.grid.inner_x(f, &b.z[0]);
            for (o, z) in out.iter_mut().zip(&b.z[0]) {
                *o -= c * z;
            }
        }
        out
    }

    pub fn evolve_coefficients(&self, g: &[C64], t: f64) -> Field {
        g.iter().zip(self.ks()).map(|(z, k)| z * C64::from_polar(1.0, -t * k * k)).collect()
    }

    /// e^{-itH} restricted to the continuous spectrum.
    pub fn flat_evolution(&self, f: &[C64], t: f64) -> Field {
        self.synthesize(&self.evolve_coefficients(&self.expand(f), t))
    }

    /// Coefficient map M with Ĝ̃ = Ê∘M: identity for κ > 0, [φ(κ) - r(-κ)φ(-κ)]/s(-κ) for κ < 0.
    pub fn m_map(&self, phi: &[C64]) -> Result<Field> {
        let g = &self.grid;
        let half = g.n / 2;
        let peak = phi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut out = phi.to_vec();
        for i in 0..half {
            let row = self.row(i);
            let (s, r) = (self.s[row], self.r[row]);
            let num = phi[i] - r * phi[reflect(g, i)];
            if s.norm() < S_FLOOR {
                if num.norm() > 1e-12 * peak {
                    return Err(CtmError::Singular { k: kappa(g, i), value: s.norm() });
                }
                out[i] = C64::new(0.0, 0.0);
            } else {
                out[i] = num / s;
            }
        }
        Ok(out)
    }

    pub fn m_inverse(&self, gk: &[C64]) -> Field {
        let g = &self.grid;
        let half = g.n / 2;
        let mut out = gk.to_vec();
        for i in 0..half {
            let row = self.row(i);
            out[i] = self.s[row] * gk[i] + self.r[row] * gk[reflect(g, i)];
        }
        out
    }

    /// Adjoint of [`ScalarBasis::m_map`] in the uniform k-inner product.
    pub fn m_adjoint(&self, u: &[C64]) -> Field {
        let g = &self.grid;
        let half = g.n / 2;
        let mut out = vec![C64::new(0.0, 0.0); g.n];
        for i in 0..g.n {
            if i >= half {
                out[i] += u[i];
            } else {
                let row = self.row(i);
                let (s, r) = (self.s[row], self.r[row]);
                let inv = if s.norm() < S_FLOOR { C64::new(0.0, 0.0) } else { 1.0 / s };
                out[i] += inv.conj() * u[i];
                out[reflect(g, i)] -= (r * inv).conj() * u[i];
            }
        }
        out
    }

    /// Ĝ̃(φ): free on the left of the center.
    pub fn synth_tilde(&self, phi: &[C64]) -> Result<Field> {
        Ok(self.synthesize(&self.m_map(phi)?))
    }

    pub fn synth_tilde_adjoint(&self, f: &[C64]) -> Field {
        self.m_adjoint(&self.expand(f))
    }
}
