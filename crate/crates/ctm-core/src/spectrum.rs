use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{CtmError, Result};
use crate::grid::{Field, Grid};
use crate::potentials::{MatrixPotential, Potential};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeRole {
    Ordinary,
    Kernel,
    Generalized,
}

/// One discrete mode on the main grid; `z` has one component (scalar) or two (matrix).
#[derive(Clone, Debug)]
pub struct BoundState {
    pub lambda: C64,
    pub z: Vec<Field>,
    pub role: ModeRole,
    /// For generalized vectors: ℋZ¹ (lies in the kernel).
    pub image: Option<Vec<Field>>,
    pub residual: f64,
}

#[derive(Clone, Debug, Default)]
pub struct DiscreteSpectrum {
    pub states: Vec<BoundState>,
    pub real_pairs: usize,
    pub imaginary_pairs: usize,
    pub kernel_dim: usize,
    pub kernel2_dim: usize,
}

impl DiscreteSpectrum {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.states.iter().filter(|s| s.role == ModeRole::Ordinary).map(|s| s.lambda).collect()
    }
}

/// Circulant second-derivative matrix of the Fourier collocation method on n periodic nodes.
fn spectral_laplacian(n: usize, width: f64) -> DMatrix<f64> {
    let mut planner = FftPlanner::new();
    let mut col = vec![C64::new(0.0, 0.0); n];
    col[0] = C64::new(1.0, 0.0);
    planner.plan_fft_forward(n).process(&mut col);
    for (j, z) in col.iter_mut().enumerate() {
        let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        let k = 2.0 * PI * m / width;
        *z *= -k * k / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut col);
    DMatrix::from_fn(n, n, |i, j| col[(i + n - j) % n].re)
}

/// Box of `n` periodic nodes on [-half, half).
#[derive(Clone, Copy, Debug)]
struct SubBox {
    n: usize,
    half: f64,
}

impl SubBox {
    fn choose(half: f64, dx_target: f64, cap: usize) -> Self {
        let mut n = 64;
        while n < cap && 2.0 * half / n as f64 > dx_target {
            n *= 2;
        }
        Self { n, half }
    }

    fn x(&self, j: usize) -> f64 {
        -self.half + 2.0 * self.half * j as f64 / self.n as f64
    }

    /// Trigonometric interpolation of box samples onto the main-grid nodes inside the box.
    fn to_grid(&self, vals: &[C64], grid: &Grid) -> Field {
        let n = self.n;
        let width = 2.0 * self.half;
        let mut c = vals.to_vec();
        FftPlanner::new().plan_fft_forward(n).process(&mut c);
        let mut out = vec![C64::new(0.0, 0.0); grid.n];
        for (j, o) in out.iter_mut().enumerate() {
            let x = grid.x(j);
            if x < -self.half || x >= self.half {
                continue;
            }
            let u = x + self.half;
            let mut acc = C64::new(0.0, 0.0);
            for (m, cm) in c.iter().enumerate() {
                let mm = if m < n / 2 {
                    m as f64
                } else if m == n / 2 {
                    acc += cm * (PI * n as f64 * u / width).cos();
                    continue;
                } else {
                    m as f64 - n as f64
                };
                acc += cm * C64::from_polar(1.0, 2.0 * PI * mm * u / width);
            }
            *o = acc / n as f64;
        }
        out
    }
}

fn normalize(grid: &Grid, z: &mut [Field]) {
    let nrm = z.iter().map(|c| grid.norm_x(c).powi(2)).sum::<f64>().sqrt();
    let phase = {
        let (mut best, mut arg) = (0.0, C64::new(1.0, 0.0));
        for c in z.iter() {
            for v in c {
                if v.norm() > best {
                    best = v.norm();
                    arg = v / v.norm();
                }
            }
        }
        arg
    };
    for c in z.iter_mut() {
        for v in c.iter_mut() {
            *v /= phase * nrm;
        }
    }
}

/// -∂²f + V f on the main grid.
pub fn apply_scalar_h(grid: &Grid, v: &[f64], f: &[C64]) -> Field {
    let d2 = grid.derivative(f, 2);
    d2.iter().zip(f).zip(v).map(|((d, f), v)| -d + f * v).collect()
}

/// ℋ = σ₃(-∂² + ω) + [[U, -W], [W, -U]] on the main grid.
pub fn apply_matrix_h(grid: &Grid, u: &[f64], w: &[f64], omega: f64, f: &[Field]) -> Vec<Field> {
    let d1 = grid.derivative(&f[0], 2);
    let d2 = grid.derivative(&f[1], 2);
    let n = grid.n;
    let mut a = vec![C64::new(0.0, 0.0); n];
    let mut b = a.clone();
    for j in 0..n {
        a[j] = -d1[j] + (omega + u[j]) * f[0][j] - w[j] * f[1][j];
        b[j] = d2[j] - (omega + u[j]) * f[1][j] + w[j] * f[0][j];
    }
    vec![a, b]
}

fn sample_real(grid: &Grid, v: &dyn Potential) -> Vec<f64> {
    grid.xs().into_iter().map(|x| v.value(x)).collect()
}

fn vmax(v: &dyn Potential, radius: f64) -> f64 {
    (0..=2000).map(|i| v.value(radius * i as f64 / 2000.0).abs()).fold(0.0, f64::max)
}

/// Bound states of -∂² + V: eigenvalues below -1e-3 of a Fourier collocation discretization on a
/// box sized to the slowest decay, transferred to the main grid by trigonometric interpolation.
pub fn scalar_discrete_spectrum(v: Arc<dyn Potential>, grid: &Grid) -> Result<DiscreteSpectrum> {
    if v.is_zero() {
        return Ok(DiscreteSpectrum::default());
    }
    let xc = v.core_radius();
    let dx_target = 0.2f64.min(0.6 / vmax(&*v, xc).sqrt().max(1e-12));
    let mut half = (xc + 12.0).max(20.0).min(-grid.x_min);
    let mut found = Vec::new();
    for _ in 0..3 {
        let sb = SubBox::choose(half, dx_target, 1024);
        let mut h = -spectral_laplacian(sb.n, 2.0 * half);
        for j in 0..sb.n {
            h[(j, j)] += v.value(sb.x(j));
        }
        let eig = SymmetricEigen::new(h);
        let mut modes: Vec<(f64, DVector<f64>)> = (0..sb.n)
            .filter(|&i| eig.eigenvalues[i] < -1e-3)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
            .collect();
        modes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let kappa_min = modes.iter().map(|m| (-m.0).sqrt()).fold(f64::INFINITY, f64::min);
        let needed = xc + 34.0 / kappa_min;
        found = modes.into_iter().map(|(l, vec)| (l, vec, sb)).collect();
        if needed <= half || half >= -grid.x_min {
            break;
        }
        half = needed.min(-grid.x_min);
    }
    let vs = sample_real(grid, &*v);
    let mut states = Vec::new();
    for (lambda, vec, sb) in found {
        let vals: Vec<C64> = vec.iter().map(|&a| C64::new(a, 0.0)).collect();
        let mut z = vec![sb.to_grid(&vals, grid)];
        normalize(grid, &mut z);
        let hz = apply_scalar_h(grid, &vs, &z[0]);
        let rq = grid.inner_x(&hz, &z[0]).re;
        let res: Vec<C64> = hz.iter().zip(&z[0]).map(|(a, b)| a - b * rq).collect();
        let residual = grid.norm_x(&res);
        if (rq - lambda).abs() > 1e-4 {
            return Err(CtmError::Numerical(format!(
                "bound state {lambda:.6} not resolved on the main grid (Rayleigh quotient {rq:.6})"
            )));
        }
        states.push(BoundState { lambda: C64::new(rq, 0.0), z, role: ModeRole::Ordinary, image: None, residual });
    }
    for w in states.windows(2) {
        if (w[0].lambda - w[1].lambda).norm() < 1e-6 {
            return Err(CtmError::Numerical("near-degenerate eigenvalue cluster; refine the grid".into()));
        }
    }
    let real_pairs = states.len();
    Ok(DiscreteSpectrum { states, real_pairs, imaginary_pairs: 0, kernel_dim: 0, kernel2_dim: 0 })
}

/// Kernel of a real matrix and a pseudo-inverse, both from the eigen-decomposition of HᵀH.
struct GramSolver {
    kernel: Vec<DVector<f64>>,
    range: Vec<(f64, DVector<f64>)>,
}

impl GramSolver {
    fn new(h: &DMatrix<f64>, tol: f64) -> Self {
        let eig = SymmetricEigen::new(h.transpose() * h);
        let mut kernel = Vec::new();
        let mut range = Vec::new();
        for i in 0..eig.eigenvalues.len() {
            let v = eig.eigenvectors.column(i).into_owned();
            if eig.eigenvalues[i] < tol * tol {
                kernel.push(v);
            } else {
                range.push((eig.eigenvalues[i], v));
            }
        }
        Self { kernel, range }
    }

    /// Least-squares solution of H z = y orthogonal to the kernel.
    fn solve(&self, h: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
        let hty = h.transpose() * y;
        let mut z = DVector::zeros(y.len());
        for (s2, v) in &self.range {
            z += v * (v.dot(&hty) / s2);
        }
        z
    }
}

/// Discrete spectrum of ℋ = σ₃(-∂² + ω) + [[U, -W], [W, -U]], including the generalized kernel.
pub fn matrix_discrete_spectrum(p: &MatrixPotential, grid: &Grid) -> Result<DiscreteSpectrum> {
    let omega = p.omega;
    let xc = p.core_radius();
    let vm = vmax(&*p.u, xc.max(1.0)).max(vmax(&*p.w, xc.max(1.0)));
    let half = (xc + 10.0).max(25.0).min(-grid.x_min);
    let sb = SubBox::choose(half, 0.2f64.min(0.6 / (vm + omega).sqrt()), 512);
    let n = sb.n;
    let d2 = spectral_laplacian(n, 2.0 * half);
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = -d2[(i, j)];
            h[(n + i, n + j)] = d2[(i, j)];
        }
        let x = sb.x(i);
        let (u, w) = (p.u.value(x), p.w.value(x));
        h[(i, i)] += omega + u;
        h[(n + i, n + i)] -= omega + u;
        h[(i, n + i)] = -w;
        h[(n + i, i)] = w;
    }
    let hc = h.map(|a| C64::new(a, 0.0));
    let eigs = Schur::try_new(h.clone(), 1e-13, 20_000)
        .ok_or_else(|| CtmError::Numerical("Schur iteration did not converge".into()))?
        .complex_eigenvalues();
    let edge = omega * (1.0 - 1e-6);
    let mut cands: Vec<C64> = eigs
        .iter()
        .copied()
        .filter(|l| l.norm() > 1e-3 && (l.im.abs() > 1e-6 || l.re.abs() < edge))
        .collect();
    cands.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());

    let us = sample_real(grid, &*p.u);
    let ws = sample_real(grid, &*p.w);
    let lift = |v: &DVector<C64>| -> Vec<Field> {
        let a: Vec<C64> = (0..n).map(|i| v[i]).collect();
        let b: Vec<C64> = (0..n).map(|i| v[n + i]).collect();
        vec![sb.to_grid(&a, grid), sb.to_grid(&b, grid)]
    };
    let residual_of = |z: &[Field], lambda: C64| -> f64 {
        let hz = apply_matrix_h(grid, &us, &ws, omega, z);
        (0..2)
            .map(|c| {
                let r: Vec<C64> = hz[c].iter().zip(&z[c]).map(|(a, b)| a - b * lambda).collect();
                grid.norm_x(&r).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    };

    let mut states = Vec::new();
    for &lambda in &cands {
        let mut shifted = hc.clone();
        let mu = lambda + C64::new(1e-10, 1e-10);
        for i in 0..2 * n {
            shifted[(i, i)] -= mu;
        }
        let lu = shifted.lu();
        let mut v = DVector::<C64>::from_element(2 * n, C64::new(1.0, 0.0));
        for _ in 0..3 {
            v = lu.solve(&v).ok_or_else(|| CtmError::Numerical("singular shifted eigenproblem".into()))?;
            let nv = v.norm();
            v /= C64::new(nv, 0.0);
        }
        let lam = (v.adjoint() * &hc * &v)[(0, 0)] / v.dotc(&v);
        let mut z = lift(&v);
        normalize(grid, &mut z);
        let residual = residual_of(&z, lam);
        states.push(BoundState { lambda: lam, z, role: ModeRole::Ordinary, image: None, residual });
    }
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            if (states[i].lambda - states[j].lambda).norm() < 1e-6 {
                return Err(CtmError::Numerical("near-degenerate eigenvalue cluster; refine the grid".into()));
            }
        }
        let l = states[i].lambda;
        if !states.iter().any(|s| (s.lambda + l).norm() < 1e-6 * l.norm().max(1.0)) {
            return Err(CtmError::Numerical(format!("eigenvalue {l:.6} has no partner -λ")));
        }
    }

    let gram = GramSolver::new(&h, 1e-4);
    let kernel_dim = gram.kernel.len();
    let lift_real = |v: &DVector<f64>| lift(&v.map(|a| C64::new(a, 0.0)));
    let mut chains = 0;
    for v in &gram.kernel {
        let mut z = lift_real(v);
        normalize(grid, &mut z);
        let residual = residual_of(&z, C64::new(0.0, 0.0));
        states.push(BoundState { lambda: C64::new(0.0, 0.0), z, role: ModeRole::Kernel, image: None, residual });
        let g = gram.solve(&h, v);
        let miss = (&h * &g - v).norm();
        if miss > 1e-6 {
            continue;
        }
        chains += 1;
        let mut z1 = lift_real(&g);
        normalize(grid, &mut z1);
        let y = apply_matrix_h(grid, &us, &ws, omega, &z1);
        let hy = apply_matrix_h(grid, &us, &ws, omega, &y);
        let residual = hy.iter().map(|c| grid.norm_x(c).powi(2)).sum::<f64>().sqrt();
        if residual > 1e-4 {
            return Err(CtmError::Numerical("kernel chain extraction is ill-conditioned; refine the grid".into()));
        }
        states.push(BoundState {
            lambda: C64::new(0.0, 0.0),
            z: z1,
            role: ModeRole::Generalized,
            image: Some(y),
            residual,
        });
    }
    let kernel2_dim = kernel_dim + chains;
    let ordinary: Vec<C64> =
        states.iter().filter(|s| s.role == ModeRole::Ordinary).map(|s| s.lambda).collect();
    let real_pairs = ordinary.iter().filter(|l| l.im.abs() <= 1e-6 && l.re > 0.0).count();
    let imaginary_pairs = ordinary.iter().filter(|l| l.im > 1e-6).count();
    Ok(DiscreteSpectrum { states, real_pairs, imaginary_pairs, kernel_dim, kernel2_dim })
}
