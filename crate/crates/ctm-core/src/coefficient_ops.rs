use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{CtmError, Result};
use crate::grid::{Field, Grid};
use crate::jost::JostSolver;

/// Reflection and transmission coefficients (r, s) as functions of k.
pub trait Scattering: Send + Sync {
    fn rs(&self, k: f64) -> (C64, C64);
}

impl Scattering for JostSolver {
    fn rs(&self, k: f64) -> (C64, C64) {
        let (s, r) = self.coefficients(k);
        (r, s)
    }
}

pub struct FreeScattering;

impl Scattering for FreeScattering {
    fn rs(&self, _k: f64) -> (C64, C64) {
        (C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }
}

/// Keeps s and sets r ≡ 0.
pub struct WithoutReflection(pub Arc<dyn Scattering>);

impl Scattering for WithoutReflection {
    fn rs(&self, k: f64) -> (C64, C64) {
        (C64::new(0.0, 0.0), self.0.rs(k).1)
    }
}

/// Uniformly sampled tables, linearly interpolated; (0, 1) outside.
pub struct SampledScattering {
    pub k0: f64,
    pub dk: f64,
    pub r: Vec<C64>,
    pub s: Vec<C64>,
}

impl Scattering for SampledScattering {
    fn rs(&self, k: f64) -> (C64, C64) {
        let t = (k - self.k0) / self.dk;
        if t < 0.0 || t > (self.r.len() - 1) as f64 {
            return (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        }
        let i = (t.floor() as usize).min(self.r.len() - 2);
        let w = t - i as f64;
        (self.r[i] * (1.0 - w) + self.r[i + 1] * w, self.s[i] * (1.0 - w) + self.s[i + 1] * w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    One,
    Two,
}

/// R contribution: out[target](k) += coeff(k) · g[source](sign·k + shift).
struct Term {
    target: usize,
    source: usize,
    coeff: Vec<C64>,
    sign: f64,
    shift: f64,
}

/// The operator T = Id - R on 2m-2 coefficient functions sampled on `kgrid` (nodes `kgrid.x(i)`).
pub struct FormOperator {
    pub form: Form,
    pub kgrid: Grid,
    pub velocities: Vec<f64>,
    terms: Vec<Term>,
    /// Samples with modulus in (1, 1 + 1e-6] scaled back to 1.
    pub clipped: usize,
    /// Treat shifted evaluations outside the k-grid as zero instead of failing.
    pub zero_extension: bool,
}

pub type CoefficientVector = Vec<Field>;

impl FormOperator {
    /// `centers[ℓ]` and `velocities[ℓ]` are 0-based versions of the 1-based ℓ = 1..m.
    pub fn new(form: Form, kgrid: &Grid, centers: &[Arc<dyn Scattering>], velocities: &[f64]) -> Result<Self> {
        let m = centers.len();
        if m < 2 || velocities.len() != m {
            return Err(CtmError::Config("form operators need m ≥ 2 centers with one velocity each".into()));
        }
        if velocities.windows(2).any(|w| w[0] <= w[1]) {
            return Err(CtmError::Config("velocities must be strictly decreasing".into()));
        }
        let dim = 2 * m - 2;
        let ks: Vec<f64> = (0..kgrid.n).map(|i| kgrid.x(i)).collect();
        let sample = |l: usize, sign: f64, offset: f64, refl: bool| -> Vec<C64> {
            ks.iter()
                .map(|&k| {
                    let (r, s) = centers[l - 1].rs(sign * k + offset);
                    if refl {
                        r
                    } else {
                        s
                    }
                })
                .collect()
        };
        let v = |l: usize| velocities[l - 1];
        let mut terms = Vec::new();
        let mut push = |target: usize, source: usize, coeff: Vec<C64>, sign: f64, shift: f64| {
            if (1..=dim).contains(&source) {
                terms.push(Term { target: target - 1, source: source - 1, coeff, sign, shift });
            }
        };
        match form {
            Form::One => {
                for l in 1..m {
                    let t = 2 * l;
                    push(t, 2 * l - 1, sample(l, 1.0, v(l) / 2.0, true), -1.0, -v(l));
                    push(t, 2 * l - 2, sample(l, 1.0, v(l) / 2.0, false), 1.0, 0.0);
                }
                for l in 0..m - 1 {
                    let t = 2 * l + 1;
                    let c = l + 2;
                    push(t, 2 * l + 2, sample(c, -1.0, -v(c) / 2.0, true), -1.0, -v(c));
                    push(t, 2 * l + 3, sample(c, -1.0, -v(c) / 2.0, false), 1.0, 0.0);
                }
            }
            Form::Two => {
                for n in 1..m {
                    if n >= 2 {
                        push(2 * n - 1, 2 * n - 3, sample(n, -1.0, v(n) / 2.0, false), 1.0, 0.0);
                    }
                    push(2 * n - 1, 2 * n, sample(n, -1.0, v(n) / 2.0, true), -1.0, v(n));
                    let c = n + 1;
                    push(2 * n, 2 * n - 1, sample(c, 1.0, -v(c) / 2.0, true), -1.0, v(c));
                    push(2 * n, 2 * n + 2, sample(c, 1.0, -v(c) / 2.0, false), 1.0, 0.0);
                }
            }
        }
        let mut clipped = 0;
        for t in terms.iter_mut() {
            for c in t.coeff.iter_mut() {
                let a = c.norm();
                if a > 1.0 + 1e-6 {
                    return Err(CtmError::Numerical(format!("scattering coefficient of modulus {a:.3e} exceeds 1")));
                }
                if a > 1.0 {
                    *c /= a;
                    clipped += 1;
                }
            }
        }
        Ok(Self { form, kgrid: *kgrid, velocities: velocities.to_vec(), terms, clipped, zero_extension: false })
    }

    pub fn with_zero_extension(mut self) -> Self {
        self.zero_extension = true;
        self
    }

    pub fn m(&self) -> usize {
        self.velocities.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.m() - 2
    }

    /// min_n (v_n - v_{n+1})/2.
    pub fn gap(&self) -> f64 {
        self.velocities.windows(2).map(|w| (w[0] - w[1]) / 2.0).fold(f64::INFINITY, f64::min)
    }

    /// Coupling pattern (target, source) of R, 0-based.
    pub fn couplings(&self) -> Vec<(usize, usize)> {
        self.terms.iter().map(|t| (t.target, t.source)).collect()
    }

    /// g(sign·k + shift) on the nodes by linear interpolation.
    fn evaluate(&self, g: &[C64], sign: f64, shift: f64) -> Result<Field> {
        let kg = &self.kgrid;
        let n = kg.n;
        let peak = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let edge = g[0].norm().max(g[n - 1].norm());
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (i, o) in out.iter_mut().enumerate() {
            let q = sign * kg.x(i) + shift;
            let t = (q - kg.x(0)) / kg.dx();
            if t < 0.0 || t > (n - 1) as f64 {
                if !self.zero_extension && edge > 1e-8 * peak {
                    return Err(CtmError::Range(format!(
                        "shifted evaluation at k = {q:.3} leaves the k-grid while the coefficient is non-negligible at its edge; widen the k-grid"
                    )));
                }
                continue;
            }
            let j = (t.floor() as usize).min(n - 2);
            let w = t - j as f64;
            *o = g[j] * (1.0 - w) + g[j + 1] * w;
        }
        Ok(out)
    }

    pub fn apply_r(&self, g: &[Field]) -> Result<CoefficientVector> {
        let n = self.kgrid.n;
        let mut out = vec![vec![C64::new(0.0, 0.0); n]; self.dim()];
        for t in &self.terms {
            let src = if t.sign == 1.0 && t.shift == 0.0 { g[t.source].clone() } else { self.evaluate(&g[t.source], t.sign, t.shift)? };
            for ((o, c), s) in out[t.target].iter_mut().zip(&t.coeff).zip(&src) {
                *o += c * s;
            }
        }
        Ok(out)
    }

    pub fn apply_t(&self, g: &[Field]) -> Result<CoefficientVector> {
        let r = self.apply_r(g)?;
        Ok(g.iter().zip(r).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect())
    }

    pub fn norm(&self, g: &[Field]) -> f64 {
        g.iter().map(|f| self.kgrid.norm_x(f).powi(2)).sum::<f64>().sqrt()
    }

    /// ‖(Id - T)^p g‖.
    pub fn power_norm(&self, g: &[Field], p: usize) -> Result<f64> {
        let mut h = g.to_vec();
        for _ in 0..p {
            h = self.apply_r(&h)?;
        }
        Ok(self.norm(&h))
    }

    /// Solves T g = rhs by the Neumann series Σ Rⁿ rhs.
    pub fn neumann_solve(&self, rhs: &[Field], tol: f64, max_iter: usize, decay_constant: f64) -> Result<NeumannSolution> {
        let m = self.m();
        let scale = self.norm(rhs).max(f64::MIN_POSITIVE);
        let mut g = rhs.to_vec();
        let mut term = rhs.to_vec();
        let mut increments = vec![1.0];
        let mut iterations = 0;
        while iterations < max_iter {
            term = self.apply_r(&term)?;
            iterations += 1;
            for (a, b) in g.iter_mut().zip(&term) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            let inc = self.norm(&term) / scale;
            increments.push(inc);
            let window = 5 * (m - 1);
            if increments.len() > window && increments[increments.len() - window..].windows(2).all(|w| w[1] > w[0] * 1.0001) && inc > 1.0 {
                return Err(CtmError::Numerical(format!(
                    "Neumann series diverges: increment grew for {window} consecutive powers"
                )));
            }
            if inc < tol {
                break;
            }
        }
        let tg = self.apply_t(&g)?;
        let diff: Vec<Field> = tg.iter().zip(rhs).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
        let residual = self.norm(&diff) / scale;
        Ok(NeumannSolution {
            g,
            iterations,
            increment: *increments.last().unwrap(),
            certified_tail: certified_tail(m, iterations + 1, decay_constant, self.gap()),
            residual,
        })
    }
}

#[derive(Clone, Debug)]
pub struct NeumannSolution {
    pub g: CoefficientVector,
    pub iterations: usize,
    pub increment: f64,
    /// Bound on ‖Σ_{n ≥ N} Rⁿ‖ from the factorial estimate, relative to ‖rhs‖.
    pub certified_tail: f64,
    pub residual: f64,
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// min(jmC(m)^j/j!, jmC(m)^j/(⌊(j-3)/2⌋!)²) with C(m) = 2^{m-1}C/min(c,1); negative floors count as 0! = 1.
pub fn theoretical_bound(m: usize, j: usize, c_coeff: f64, c_gap: f64) -> f64 {
    let cm = 2f64.powi(m as i32 - 1) * c_coeff / c_gap.min(1.0);
    let num = j as f64 * m as f64 * cm.powi(j as i32);
    let floor = if j >= 3 { ((j - 3) / 2) as u64 } else { 0 };
    let b1 = num / factorial(j as u64);
    let b2 = num / factorial(floor).powi(2);
    b1.min(b2)
}

/// Bound on ‖Rⁿ‖ for any n: ‖R^{j(m-1)}‖·‖R‖^{i} with n = j(m-1) + i and ‖R‖ ≤ 2.
pub fn power_bound(m: usize, n: usize, c_coeff: f64, c_gap: f64) -> f64 {
    let j = n / (m - 1);
    let i = n % (m - 1);
    let head = if j == 0 { 1.0 } else { theoretical_bound(m, j, c_coeff, c_gap).min(2f64.powi((j * (m - 1)) as i32)) };
    head * 2f64.powi(i as i32)
}

/// Σ_{n ≥ start} of [`power_bound`], with C > 1 enforced.
pub fn certified_tail(m: usize, start: usize, c_coeff: f64, c_gap: f64) -> f64 {
    let c = c_coeff.max(1.0);
    let mut total = 0.0;
    let mut n = start;
    loop {
        let b = power_bound(m, n, c, c_gap);
        total += b;
        if !total.is_finite() {
            return f64::INFINITY;
        }
        if n > start + 10 * (m - 1) && b < 1e-18 * total.max(1e-300) {
            return total;
        }
        if n > start + 100_000 {
            return total;
        }
        n += 1;
    }
}

/// sup_k ∏ 1/(1+|k+q_j|) and the factorial/gap bound; the supremum is attained at some k = -q_j.
pub fn product_bound(q: &[f64]) -> (f64, f64) {
    let m = q.len();
    let gap = q.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    let prod = |k: f64| q.iter().map(|&qj| 1.0 / (1.0 + (k + qj).abs())).product::<f64>();
    let lo = -q[0] - 2.0 * gap;
    let hi = -q[m - 1] + 2.0 * gap;
    let steps = 20_000;
    let mut sup = (0..=steps).map(|i| prod(lo + (hi - lo) * i as f64 / steps as f64)).fold(0.0, f64::max);
    for &qj in q {
        sup = sup.max(prod(-qj));
    }
    let f1 = if m >= 2 { factorial(((m - 2) / 2) as u64) } else { 1.0 };
    let first = 1.0 / (f1 * f1 * gap.powi(m as i32 - 2));
    let second = 1.0 / (factorial(m as u64 - 1) * gap.powi(m as i32 - 1));
    (sup, first.max(second))
}
