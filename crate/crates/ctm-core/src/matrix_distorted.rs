use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::distorted::{from_coeff, kappa, reflect, to_coeff, S_FLOOR};
use crate::error::{CtmError, Result};
use crate::grid::{Field, Grid};
use crate::jost::core_nodes;
use crate::potentials::MatrixPotential;
use crate::spectrum::{matrix_discrete_spectrum, DiscreteSpectrum};

const STEP: f64 = 0.05;
const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9;
const SQRT3_12: f64 = 0.144_337_567_297_406_4;

type M4 = [[f64; 4]; 4];
type State = [C64; 4];
type Frame = [State; 3];

fn mul(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            for j in 0..4 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn expm(a: &M4) -> M4 {
    let norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scale = 0.5f64.powi(squarings as i32);
    let mut x = *a;
    for row in x.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    let mut out = [[0.0; 4]; 4];
    let mut term = [[0.0; 4]; 4];
    for i in 0..4 {
        out[i][i] = 1.0;
        term[i][i] = 1.0;
    }
    for n in 1..=12 {
        term = mul(&term, &x);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= n as f64;
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        out = mul(&out, &out);
    }
    out
}

/// Fourth-order Magnus step for y'' = Q(x) y with Q sampled at the two Gauss points.
fn magnus(q1: &[[f64; 2]; 2], q2: &[[f64; 2]; 2], h: f64) -> M4 {
    let a = SQRT3_12 * h * h;
    let mut om = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            let d = a * (q1[i][j] - q2[i][j]);
            om[i][j] = d;
            om[i + 2][j + 2] = -d;
            om[i + 2][j] = h * (q1[i][j] + q2[i][j]) / 2.0;
        }
        om[i][i + 2] = h;
    }
    expm(&om)
}

fn apply(m: &M4, y: &State) -> State {
    let mut out = [C64::new(0.0, 0.0); 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i] += y[j] * m[i][j];
        }
    }
    out
}

fn dot(a: &State, b: &State) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &State) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormalizes the columns in order; returns the upper-triangular factor.
fn orthonormalize(cols: &mut Frame) -> [[C64; 3]; 3] {
    let mut r = [[C64::new(0.0, 0.0); 3]; 3];
    for j in 0..3 {
        for _ in 0..2 {
            for i in 0..j {
                let c = dot(&cols[i], &cols[j]);
                r[i][j] += c;
                let ci = cols[i];
                for (x, y) in cols[j].iter_mut().zip(ci) {
                    *x -= c * y;
                }
            }
        }
        let nj = norm(&cols[j]);
        r[j][j] = C64::new(nj, 0.0);
        for x in cols[j].iter_mut() {
            *x /= nj;
        }
    }
    r
}

fn solve_upper(r: &[[C64; 3]; 3], b: [C64; 3]) -> [C64; 3] {
    let mut x = [C64::new(0.0, 0.0); 3];
    for i in (0..3).rev() {
        let mut acc = b[i];
        for j in i + 1..3 {
            acc -= r[i][j] * x[j];
        }
        x[i] = acc / r[i][i];
    }
    x
}

/// Bounded generalized eigenfunction: core samples of both components plus the e₁-channel
/// asymptotics a e^{ikx} + b e^{-ikx} on each side, for one k ≥ 0.
#[derive(Clone, Debug)]
struct Solution {
    core: Vec<[C64; 2]>,
    plus: (C64, C64),
    minus: (C64, C64),
}

/// Orthonormal frames of the solutions bounded on one side, swept across the core.
struct Sweep {
    frames: Vec<Frame>,
    steps: Vec<[[C64; 3]; 3]>,
    initial: [[C64; 3]; 3],
}

struct Shooter<'a> {
    grid: &'a Grid,
    p: &'a MatrixPotential,
    lo: usize,
    hi: usize,
    mid: usize,
    scale: f64,
}

impl Shooter<'_> {
    fn q(&self, x: f64, k: f64) -> [[f64; 2]; 2] {
        let u = self.p.u.value(x);
        let w = self.p.w.value(x);
        [[u - k * k, -w], [-w, k * k + 2.0 * self.p.omega + u]]
    }

    /// Sweeps from an outer core edge to the center; `dir` = -1 moves left from `hi`.
    fn sweep(&self, k: f64, dir: i64) -> Sweep {
        let g = self.grid;
        let (start, count) = if dir < 0 { (self.hi, self.hi - self.mid) } else { (self.lo, self.mid - self.lo) };
        let x0 = g.x(start);
        let mu = (k * k + 2.0 * self.p.omega).sqrt();
        let sgn = -(dir as f64);
        let e = |k: f64| C64::from_polar(1.0, k * x0);
        let zero = C64::new(0.0, 0.0);
        let mut cols: Frame = [
            [zero, C64::new(1.0, 0.0), zero, C64::new(-sgn * mu, 0.0)],
            [e(k), zero, C64::new(0.0, k) * e(k), zero],
            [e(-k), zero, C64::new(0.0, -k) * e(-k), zero],
        ];
        let initial = orthonormalize(&mut cols);
        let sub = ((g.dx() * self.scale * k.sqrt().max(1.0)) / STEP).ceil() as usize;
        let h = dir as f64 * g.dx() / sub as f64;
        let mut frames = Vec::with_capacity(count + 1);
        let mut steps = Vec::with_capacity(count);
        frames.push(cols);
        for node in 0..count {
            let xa = x0 + dir as f64 * node as f64 * g.dx();
            let mut prop = [[0.0; 4]; 4];
            for i in 0..4 {
                prop[i][i] = 1.0;
            }
            for s in 0..sub {
                let xs = xa + s as f64 * h;
                let step = magnus(&self.q(xs + h * (0.5 - GAUSS_OFFSET), k), &self.q(xs + h * (0.5 + GAUSS_OFFSET), k), h);
                prop = mul(&step, &prop);
            }
            for c in cols.iter_mut() {
                *c = apply(&prop, c);
            }
            steps.push(orthonormalize(&mut cols));
            frames.push(cols);
        }
        Sweep { frames, steps, initial }
    }

    fn solve(&self, k: f64) -> [Solution; 2] {
        let right = self.sweep(k, -1);
        let left = self.sweep(k, 1);
        let a = right.frames.last().unwrap();
        let b = left.frames.last().unwrap();
        let basis = intersection(a, b);
        // Asymptotic coordinates (evanescent, e^{ikx}, e^{-ikx}) of each intersection vector.
        let coords = |sw: &Sweep, frame: &Frame, z: &State| {
            let mut d = [frame[0], frame[1], frame[2]].map(|c| dot(&c, z));
            for r in sw.steps.iter().rev() {
                d = solve_upper(r, d);
            }
            solve_upper(&sw.initial, d)
        };
        let cp: Vec<[C64; 3]> = basis.iter().map(|z| coords(&right, a, z)).collect();
        let cm: Vec<[C64; 3]> = basis.iter().map(|z| coords(&left, b, z)).collect();
        // F: no e^{-ikx} on the right, unit e^{ikx} on the left. G: no e^{ikx} on the left, unit e^{-ikx} on the right.
        let f = solve2([cp[0][2], cp[1][2]], [cm[0][1], cm[1][1]], [0.0, 1.0]);
        let gg = solve2([cm[0][1], cm[1][1]], [cp[0][2], cp[1][2]], [0.0, 1.0]);
        [f, gg].map(|w| {
            let z: State = std::array::from_fn(|i| w[0] * basis[0][i] + w[1] * basis[1][i]);
            let comb = |c: &Vec<[C64; 3]>| -> [C64; 3] { std::array::from_fn(|i| w[0] * c[0][i] + w[1] * c[1][i]) };
            let (p, m) = (comb(&cp), comb(&cm));
            let mut core = vec![[C64::new(0.0, 0.0); 2]; self.hi - self.lo + 1];
            self.fill(&right, &z, -1, &mut core);
            self.fill(&left, &z, 1, &mut core);
            Solution { core, plus: (p[1], p[2]), minus: (m[1], m[2]) }
        })
    }

    fn fill(&self, sw: &Sweep, z: &State, dir: i64, core: &mut [[C64; 2]]) {
        let last = sw.frames.len() - 1;
        let mut d = sw.frames[last].map(|c| dot(&c, z));
        for idx in (0..=last).rev() {
            let frame = &sw.frames[idx];
            let v: State = std::array::from_fn(|i| (0..3).map(|c| frame[c][i] * d[c]).sum());
            let node = if dir < 0 { self.hi - idx } else { self.lo + idx };
            core[node - self.lo] = [v[0], v[1]];
            if idx > 0 {
                d = solve_upper(&sw.steps[idx - 1], d);
            }
        }
    }
}

/// Orthonormal basis of the intersection of two 3-dimensional subspaces of ℂ⁴.
fn intersection(a: &Frame, b: &Frame) -> [State; 2] {
    let normal = |f: &Frame| -> State {
        let mut best = [C64::new(0.0, 0.0); 4];
        let mut best_norm = -1.0;
        for e in 0..4 {
            let mut v = [C64::new(0.0, 0.0); 4];
            v[e] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for c in f {
                    let p = dot(c, &v);
                    for (x, y) in v.iter_mut().zip(c) {
                        *x -= p * y;
                    }
                }
            }
            let n = norm(&v);
            if n > best_norm {
                best_norm = n;
                best = v.map(|x| x / n);
            }
        }
        best
    };
    let na = normal(a);
    let mut nb = normal(b);
    let p = dot(&na, &nb);
    for (x, y) in nb.iter_mut().zip(&na) {
        *x -= p * y;
    }
    let nbn = norm(&nb);
    let nb = nb.map(|x| x / nbn);
    let mut out = Vec::with_capacity(2);
    let mut cands: Vec<(f64, State)> = (0..4)
        .map(|e| {
            let mut v = [C64::new(0.0, 0.0); 4];
            v[e] = C64::new(1.0, 0.0);
            for c in [&na, &nb] {
                let p = dot(c, &v);
                for (x, y) in v.iter_mut().zip(c.iter()) {
                    *x -= p * y;
                }
            }
            (norm(&v), v)
        })
        .collect();
    cands.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    for (_, mut v) in cands {
        for _ in 0..2 {
            for c in out.iter().chain([&na, &nb]) {
                let p = dot(c, &v);
                for (x, y) in v.iter_mut().zip(c.iter()) {
                    *x -= p * y;
                }
            }
        }
        let n = norm(&v);
        if n > 1e-3 {
            out.push(v.map(|x| x / n));
        }
        if out.len() == 2 {
            break;
        }
    }
    [out[0], out[1]]
}

/// w with w·x = t[0], w·y = t[1].
fn solve2(x: [C64; 2], y: [C64; 2], t: [f64; 2]) -> [C64; 2] {
    let det = x[0] * y[1] - x[1] * y[0];
    [(t[0] * y[1] - t[1] * x[1]) / det, (t[1] * x[0] - t[0] * y[0]) / det]
}

/// Tables of one family of bounded eigenfunctions Φ(x,κ) of ℋ at energy κ² + ω on the κ nodes.
#[derive(Clone, Debug)]
pub struct EigenTable {
    lo: usize,
    hi: usize,
    /// Rows κ = dk/2, 3dk/2, …; Φ(x,-κ) = conj Φ(x,κ).
    core: Vec<[C64; 2]>,
    plus: Vec<(C64, C64)>,
    minus: Vec<(C64, C64)>,
}

impl EigenTable {
    fn width(&self) -> usize {
        (self.hi + 1).saturating_sub(self.lo)
    }

    fn row(n: usize, i: usize) -> (usize, bool) {
        let half = n / 2;
        if i >= half {
            (i - half, false)
        } else {
            (half - 1 - i, true)
        }
    }

    fn asym(list: &[(C64, C64)], n: usize, i: usize) -> (C64, C64) {
        let (row, conj) = Self::row(n, i);
        let (a, b) = list[row];
        if conj {
            (a.conj(), b.conj())
        } else {
            (a, b)
        }
    }

    /// Coefficients (a, b) of e^{iκx}, e^{-iκx} in the first component for x → +∞.
    pub fn plus_at(&self, n: usize, i: usize) -> (C64, C64) {
        Self::asym(&self.plus, n, i)
    }

    pub fn minus_at(&self, n: usize, i: usize) -> (C64, C64) {
        Self::asym(&self.minus, n, i)
    }

    fn core_value(&self, n: usize, i: usize, j: usize) -> [C64; 2] {
        let (row, conj) = Self::row(n, i);
        let v = self.core[row * self.width() + j - self.lo];
        if conj {
            [v[0].conj(), v[1].conj()]
        } else {
            v
        }
    }

    /// (1/√(2π)) Σ_κ Φ(x,κ) c(κ) dκ.
    pub fn synthesize(&self, grid: &Grid, c: &[C64]) -> [Field; 2] {
        let n = grid.n;
        let zero = C64::new(0.0, 0.0);
        let mut hr = vec![zero; n];
        let mut hl = vec![zero; n];
        for i in 0..n {
            let ir = reflect(grid, i);
            let (ap, bp) = self.plus_at(n, i);
            let (am, bm) = self.minus_at(n, i);
            hr[i] += ap * c[i];
            hr[ir] += bp * c[i];
            hl[i] += am * c[i];
            hl[ir] += bm * c[i];
        }
        let fr = from_coeff(grid, &hr);
        let fl = from_coeff(grid, &hl);
        let mut a = vec![zero; n];
        let mut b = vec![zero; n];
        for j in 0..n {
            if j > self.hi {
                a[j] = fr[j];
            } else if j < self.lo {
                a[j] = fl[j];
            }
        }
        let scale = grid.dk() / (2.0 * PI).sqrt();
        for j in self.lo..=self.hi.min(n - 1) {
            let (mut s0, mut s1) = (zero, zero);
            for (i, ci) in c.iter().enumerate() {
                let v = self.core_value(n, i, j);
                s0 += v[0] * ci;
                s1 += v[1] * ci;
            }
            a[j] = s0 * scale;
            b[j] = s1 * scale;
        }
        [a, b]
    }

    /// (1/√(2π)) ∫ [Φ₁ u₁ + Φ₂ u₂](x,κ) dx, or with Φ₁ and Φ₂ swapped.
    pub fn analyze(&self, grid: &Grid, u: &[Field; 2], swap: bool) -> Field {
        let n = grid.n;
        let zero = C64::new(0.0, 0.0);
        let w = if swap { &u[1] } else { &u[0] };
        let right: Field = w.iter().enumerate().map(|(j, &z)| if j > self.hi { z } else { zero }).collect();
        let left: Field = w.iter().enumerate().map(|(j, &z)| if j < self.lo { z } else { zero }).collect();
        let dr = to_coeff(grid, &right);
        let dl = to_coeff(grid, &left);
        let scale = grid.dx() / (2.0 * PI).sqrt();
        (0..n)
            .map(|i| {
                let ir = reflect(grid, i);
                let (ap, bp) = self.plus_at(n, i);
                let (am, bm) = self.minus_at(n, i);
                let mut acc = ap * dr[ir] + bp * dr[i] + am * dl[ir] + bm * dl[i];
                let mut core = zero;
                for j in self.lo..=self.hi.min(n - 1) {
                    let v = self.core_value(n, i, j);
                    core += if swap { v[1] * u[0][j] + v[0] * u[1][j] } else { v[0] * u[0][j] + v[1] * u[1][j] };
                }
                acc += core * scale;
                acc
            })
            .collect()
    }
}

/// Distorted Fourier basis of ℋ = σ₃(-∂² + ω) + [[U, -W], [W, -U]].
///
/// 𝓕(x,k) ~ s e^{ikx}e₁ as x → +∞ and e^{ikx}e₁ + r e^{-ikx}e₁ as x → -∞; 𝓖(x,k) ~ s e^{-ikx}e₁ as
/// x → -∞ and e^{-ikx}e₁ + r e^{ikx}e₁ as x → +∞. Synthesis:
/// Ĝ(f) = (1/√(2π)) ∫ [𝓖(x,-k) f₁(k) + σ₁𝓖(x,-k) f₂(k)] / s̄(k) dk, so that σ₃F*σ₃Ĝ = Id.
pub struct MatrixBasis {
    pub grid: Grid,
    pub potential: MatrixPotential,
    pub spectrum: DiscreteSpectrum,
    pub f: EigenTable,
    pub g: EigenTable,
}

impl MatrixBasis {
    pub fn new(p: &MatrixPotential, grid: &Grid) -> Result<Self> {
        let spectrum = matrix_discrete_spectrum(p, grid)?;
        Self::with_spectrum(p, grid, spectrum)
    }

    pub fn with_spectrum(p: &MatrixPotential, grid: &Grid, spectrum: DiscreteSpectrum) -> Result<Self> {
        let zero = p.u.is_zero() && p.w.is_zero();
        let (lo, hi) = if zero { (1, 0) } else { core_nodes(grid, p.core_radius().max(1.0)) };
        let mid = grid.nearest_node(0.0);
        let vmax = (0..=(hi.saturating_sub(lo)))
            .map(|j| p.u.value(grid.x(lo + j)).abs() + p.w.value(grid.x(lo + j)).abs())
            .fold(0.0, f64::max);
        let shooter = Shooter { grid, p, lo, hi, mid, scale: vmax.sqrt().max(1.0) };
        let half = grid.n / 2;
        let one = C64::new(1.0, 0.0);
        let zero_c = C64::new(0.0, 0.0);
        let mut tables = [(); 2].map(|_| EigenTable { lo, hi, core: Vec::new(), plus: Vec::new(), minus: Vec::new() });
        for row in 0..half {
            let k = (row as f64 + 0.5) * grid.dk();
            if zero {
                tables[0].plus.push((one, zero_c));
                tables[0].minus.push((one, zero_c));
                tables[1].plus.push((zero_c, one));
                tables[1].minus.push((zero_c, one));
                continue;
            }
            let sols = shooter.solve(k);
            for (t, s) in tables.iter_mut().zip(sols) {
                t.core.extend(s.core);
                t.plus.push(s.plus);
                t.minus.push(s.minus);
            }
        }
        let [f, g] = tables;
        let basis = Self { grid: *grid, potential: p.clone(), spectrum, f, g };
        let defect = basis.unitarity_defect();
        if defect > 1e-6 {
            return Err(CtmError::Numerical(format!("matrix scattering unitarity defect {defect:.2e}")));
        }
        Ok(basis)
    }

    /// s(κ) and r(κ) of 𝓕 on the κ nodes.
    pub fn transmission(&self, i: usize) -> C64 {
        self.f.plus_at(self.grid.n, i).0
    }

    pub fn reflection(&self, i: usize) -> C64 {
        self.f.minus_at(self.grid.n, i).1
    }

    pub fn unitarity_defect(&self) -> f64 {
        (0..self.grid.n)
            .map(|i| (self.transmission(i).norm_sqr() + self.reflection(i).norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn divide_by_sbar(&self, f: &[C64]) -> Result<Field> {
        let peak = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
        f.iter()
            .enumerate()
            .map(|(i, z)| {
                let s = self.transmission(i);
                if s.norm() < S_FLOOR {
                    if z.norm() > 1e-12 * peak {
                        return Err(CtmError::Singular { k: kappa(&self.grid, i), value: s.norm() });
                    }
                    Ok(C64::new(0.0, 0.0))
                } else {
                    Ok(z / s.conj())
                }
            })
            .collect()
    }

    fn synth(&self, table: &EigenTable, f: &[Field; 2]) -> Result<[Field; 2]> {
        let g = &self.grid;
        let c1: Field = {
            let h = self.divide_by_sbar(&f[0])?;
            (0..g.n).map(|i| h[reflect(g, i)]).collect()
        };
        let c2: Field = {
            let h = self.divide_by_sbar(&f[1])?;
            (0..g.n).map(|i| h[reflect(g, i)]).collect()
        };
        let [a1, b1] = table.synthesize(g, &c1);
        let [a2, b2] = table.synthesize(g, &c2);
        let first = a1.iter().zip(&b2).map(|(x, y)| x + y).collect();
        let second = b1.iter().zip(&a2).map(|(x, y)| x + y).collect();
        Ok([first, second])
    }

    fn star(&self, table: &EigenTable, u: &[Field; 2]) -> [Field; 2] {
        let g = &self.grid;
        let r1 = table.analyze(g, u, false);
        let r2 = table.analyze(g, u, true);
        [(0..g.n).map(|i| r1[reflect(g, i)]).collect(), (0..g.n).map(|i| r2[reflect(g, i)]).collect()]
    }

    pub fn g_hat(&self, f: &[Field; 2]) -> Result<[Field; 2]> {
        self.synth(&self.g, f)
    }

    pub fn f_hat(&self, f: &[Field; 2]) -> Result<[Field; 2]> {
        self.synth(&self.f, f)
    }

    pub fn f_star(&self, u: &[Field; 2]) -> [Field; 2] {
        self.star(&self.f, u)
    }

    pub fn g_star(&self, u: &[Field; 2]) -> [Field; 2] {
        self.star(&self.g, u)
    }

    /// max |(ℋ - κ² - ω)Φ| / max |Φ| over the core, with an eighth-order stencil for ∂².
    pub fn eigen_residual(&self, family: usize, i: usize) -> f64 {
        const D2: [f64; 9] = [-1.0 / 560.0, 8.0 / 315.0, -0.2, 1.6, -205.0 / 72.0, 1.6, -0.2, 8.0 / 315.0, -1.0 / 560.0];
        let g = &self.grid;
        let t = if family == 0 { &self.f } else { &self.g };
        if t.width() < 9 {
            return 0.0;
        }
        let k = kappa(g, i);
        let e = k * k + self.potential.omega;
        let dx2 = g.dx() * g.dx();
        let vals: Vec<[C64; 2]> = (t.lo..=t.hi).map(|j| t.core_value(g.n, i, j)).collect();
        let peak = vals.iter().map(|v| v[0].norm().max(v[1].norm())).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for c in 4..vals.len() - 4 {
            let x = g.x(t.lo + c);
            let (u, w) = (self.potential.u.value(x), self.potential.w.value(x));
            let mut d = [C64::new(0.0, 0.0); 2];
            for (o, coef) in D2.iter().enumerate() {
                d[0] += vals[c + o - 4][0] * coef / dx2;
                d[1] += vals[c + o - 4][1] * coef / dx2;
            }
            let [a, b] = vals[c];
            let r1 = -d[0] + (self.potential.omega + u) * a - w * b - e * a;
            let r2 = d[1] - (self.potential.omega + u) * b + w * a - e * b;
            worst = worst.max(r1.norm()).max(r2.norm());
        }
        worst / peak
    }

    /// Core samples of 𝓕(x, κ_i) (`family` 0) or 𝓖 (`family` 1) on the main grid.
    pub fn eigenfunction(&self, family: usize, i: usize) -> [Field; 2] {
        let g = &self.grid;
        let t = if family == 0 { &self.f } else { &self.g };
        let mut c = vec![C64::new(0.0, 0.0); g.n];
        c[i] = C64::new((2.0 * PI).sqrt() / g.dk(), 0.0);
        t.synthesize(g, &c)
    }
}

pub fn sigma3(u: &[Field; 2]) -> [Field; 2] {
    [u[0].clone(), u[1].iter().map(|z| -z).collect()]
}

pub fn sigma1(u: &[Field; 2]) -> [Field; 2] {
    [u[1].clone(), u[0].clone()]
}
