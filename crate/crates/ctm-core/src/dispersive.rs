use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::distorted::{from_coeff, kappas, reflect_coeff, shift_coeff, to_coeff, ScalarBasis, S_FLOOR};
use crate::error::{CtmError, Result};
use crate::grid::{Field, Grid};
use crate::potentials::{Config, Model, TravelingCenter};
use crate::registry::{Named, Registry};

/// Chooses whose scattering data drives the step φ_ℓ → φ_{ℓ+1} (0-based center indices).
pub trait ProfileRecursion: Named + Send + Sync {
    fn center(&self, step: usize) -> usize;
}

/// Data of center ℓ for the step out of φ_ℓ, as written in the model statement.
pub struct Printed;

/// Data of center ℓ+1: φ_{ℓ+1} is the incoming profile that center ℓ+1 scatters into φ_ℓ.
pub struct Matched;

impl Named for Printed {
    fn name(&self) -> &'static str {
        "printed"
    }
}

impl ProfileRecursion for Printed {
    fn center(&self, step: usize) -> usize {
        step
    }
}

impl Named for Matched {
    fn name(&self) -> &'static str {
        "matched"
    }
}

impl ProfileRecursion for Matched {
    fn center(&self, step: usize) -> usize {
        step + 1
    }
}

pub fn recursions() -> Registry<dyn ProfileRecursion> {
    let mut r: Registry<dyn ProfileRecursion> = Registry::new("profile recursion");
    let matched: Arc<dyn ProfileRecursion> = Arc::new(Matched);
    let printed: Arc<dyn ProfileRecursion> = Arc::new(Printed);
    r.register(matched).register(printed);
    r
}

/// One traveling center with its eigenfunction basis on the shared grid.
pub struct MapCenter {
    pub basis: Arc<ScalarBasis>,
    pub motion: TravelingCenter,
}

/// Recursion step φ ↦ b·φ + a·φ(v - ·) on the κ nodes.
struct Step {
    v: f64,
    a: Field,
    b: Field,
}

#[derive(Clone, Debug)]
pub struct PhiProfile {
    pub phis: Vec<Field>,
    pub phibar: Field,
}

/// A moving bound state e^{i(vx/2 - v²t/4)} e^{-iλt} Z(x - y - vt).
#[derive(Clone, Debug)]
pub struct MovingMode {
    pub center: usize,
    pub index: usize,
    pub lambda: f64,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub phi: Field,
    pub modes: Vec<(MovingMode, C64)>,
    pub residual: f64,
    pub iterations: usize,
}

pub struct DispersiveMap {
    pub grid: Grid,
    pub centers: Vec<MapCenter>,
    pub recursion: Arc<dyn ProfileRecursion>,
    steps: Vec<Step>,
}

impl DispersiveMap {
    pub fn new(config: &Config, recursion: Arc<dyn ProfileRecursion>) -> Result<Self> {
        if config.model != Model::Scalar {
            return Err(CtmError::Config("the dispersive map is implemented for the scalar model".into()));
        }
        let grid = config.grid;
        let centers = config
            .centers
            .iter()
            .map(|c| Ok(MapCenter { basis: Arc::new(ScalarBasis::new(c.potential.clone(), &grid)?), motion: c.motion }))
            .collect::<Result<Vec<_>>>()?;
        Self::from_centers(grid, centers, recursion)
    }

    pub fn from_centers(grid: Grid, centers: Vec<MapCenter>, recursion: Arc<dyn ProfileRecursion>) -> Result<Self> {
        let m = centers.len();
        let ps = kappas(&grid);
        let mut steps = Vec::new();
        for step in 0..m.saturating_sub(1) {
            let c = recursion.center(step);
            let center = centers.get(c).ok_or_else(|| CtmError::Config(format!("recursion refers to center {c}")))?;
            let (v, y) = (center.motion.v, center.motion.y);
            let mut a = Vec::with_capacity(grid.n);
            let mut b = Vec::with_capacity(grid.n);
            for &p in &ps {
                let kappa = p - v / 2.0;
                let (s, r) = center.basis.coefficients_interp(kappa);
                if s.norm() < S_FLOOR {
                    return Err(CtmError::Singular { k: kappa, value: s.norm() });
                }
                b.push(1.0 / s);
                a.push(-r * C64::from_polar(1.0, -2.0 * y * kappa) / s);
            }
            steps.push(Step { v, a, b });
        }
        Ok(Self { grid, centers, recursion, steps })
    }

    pub fn m(&self) -> usize {
        self.centers.len()
    }

    fn step_forward(&self, st: &Step, phi: &[C64]) -> Field {
        let g = &self.grid;
        let mirrored = shift_coeff(g, &reflect_coeff(g, phi), -st.v);
        (0..g.n).map(|i| st.b[i] * phi[i] + st.a[i] * mirrored[i]).collect()
    }

    fn step_adjoint(&self, st: &Step, u: &[C64]) -> Field {
        let g = &self.grid;
        let au: Field = u.iter().zip(&st.a).map(|(z, a)| a.conj() * z).collect();
        let back = reflect_coeff(g, &shift_coeff(g, &au, st.v));
        (0..g.n).map(|i| st.b[i].conj() * u[i] + back[i]).collect()
    }

    pub fn build_profile_sequence(&self, phi: &[C64]) -> PhiProfile {
        let mut phis = vec![phi.to_vec()];
        for st in &self.steps {
            let next = self.step_forward(st, phis.last().unwrap());
            phis.push(next);
        }
        let mut phibar = vec![C64::new(0.0, 0.0); self.grid.n];
        for p in &phis[..self.m() - 1] {
            for (o, z) in phibar.iter_mut().zip(p) {
                *o += z;
            }
        }
        PhiProfile { phis, phibar }
    }

    fn free_phase(&self, t: f64) -> Vec<C64> {
        kappas(&self.grid).iter().map(|k| C64::from_polar(1.0, -t * k * k)).collect()
    }

    /// Traveling term of center ℓ at time t.
    pub fn traveling_term(&self, l: usize, phi_l: &[C64], t: f64) -> Result<Field> {
        let g = &self.grid;
        let c = &self.centers[l].motion;
        let shifted = shift_coeff(g, phi_l, c.v / 2.0);
        let free = self.free_phase(t);
        let arg: Field = kappas(g)
            .iter()
            .zip(shifted)
            .zip(free)
            .map(|((&k, z), f)| z * f * C64::from_polar(1.0, c.y * k))
            .collect();
        let u = g.translate(&self.centers[l].basis.synth_tilde(&arg)?, c.position(t));
        Ok(u.iter().zip(g.xs()).map(|(z, x)| z * C64::from_polar(1.0, c.galilei_phase(t, x))).collect())
    }

    pub fn evaluate(&self, profile: &PhiProfile, t: f64) -> Result<Field> {
        let g = &self.grid;
        let free = self.free_phase(t);
        let bar: Field = profile.phibar.iter().zip(&free).map(|(a, b)| a * b).collect();
        let mut out: Field = from_coeff(g, &bar).iter().map(|z| -z).collect();
        for l in 0..self.m() {
            let term = self.traveling_term(l, &profile.phis[l], t)?;
            for (o, z) in out.iter_mut().zip(term) {
                *o += z;
            }
        }
        Ok(out)
    }

    /// S(φ)(t).
    pub fn evaluate_s(&self, phi: &[C64], t: f64) -> Result<Field> {
        self.evaluate(&self.build_profile_sequence(phi), t)
    }

    /// Adjoint of φ ↦ S(φ)(t) in the x and κ inner products.
    pub fn evaluate_s_adjoint(&self, f: &[C64], t: f64) -> Field {
        let g = &self.grid;
        let m = self.m();
        let free = self.free_phase(t);
        let xs = g.xs();
        let mut dual: Vec<Field> = Vec::with_capacity(m);
        let bar: Field = to_coeff(g, f).iter().zip(&free).map(|(z, e)| -z * e.conj()).collect();
        for l in 0..m {
            let c = &self.centers[l].motion;
            let unphased: Field = f.iter().zip(&xs).map(|(z, &x)| z * C64::from_polar(1.0, -c.galilei_phase(t, x))).collect();
            let w = self.centers[l].basis.synth_tilde_adjoint(&g.translate(&unphased, -c.position(t)));
            let w: Field = kappas(g).iter().zip(w).zip(&free).map(|((&k, z), e)| z * e.conj() * C64::from_polar(1.0, -c.y * k)).collect();
            let mut d = shift_coeff(g, &w, -c.v / 2.0);
            if l + 1 < m {
                for (o, z) in d.iter_mut().zip(&bar) {
                    *o += z;
                }
            }
            dual.push(d);
        }
        let mut acc = dual.pop().unwrap();
        for l in (0..m - 1).rev() {
            let back = self.step_adjoint(&self.steps[l], &acc);
            acc = back.iter().zip(&dual[l]).map(|(a, b)| a + b).collect();
        }
        acc
    }

    pub fn modes(&self) -> Vec<MovingMode> {
        let mut out = Vec::new();
        for (l, c) in self.centers.iter().enumerate() {
            for (j, b) in c.basis.spectrum.states.iter().enumerate() {
                out.push(MovingMode { center: l, index: j, lambda: b.lambda.re });
            }
        }
        out
    }

    pub fn mode_field(&self, mode: &MovingMode, t: f64) -> Field {
        let g = &self.grid;
        let c = &self.centers[mode.center].motion;
        let z = &self.centers[mode.center].basis.spectrum.states[mode.index].z[0];
        let u = g.translate(z, c.position(t));
        let e = C64::from_polar(1.0, -mode.lambda * t);
        u.iter().zip(g.xs()).map(|(z, x)| z * e * C64::from_polar(1.0, c.galilei_phase(t, x))).collect()
    }

    /// Least-squares representation f = S(φ)(t) + Σ a_j (moving modes at t) by conjugate gradients on the normal equations.
    pub fn decompose(&self, f: &[C64], t: f64, tol: f64, max_iter: usize) -> Result<Decomposition> {
        let g = &self.grid;
        let modes = self.modes();
        let fields: Vec<Field> = modes.iter().map(|md| self.mode_field(md, t)).collect();
        let dk = g.dk();
        let apply = |phi: &[C64], a: &[C64]| -> Result<Field> {
            let mut u = self.evaluate_s(phi, t)?;
            for (c, z) in a.iter().zip(&fields) {
                for (o, w) in u.iter_mut().zip(z) {
                    *o += c * w;
                }
            }
            Ok(u)
        };
        let adjoint = |u: &[C64]| -> (Field, Field) {
            let phi = self.evaluate_s_adjoint(u, t);
            let a = fields.iter().map(|z| g.inner_x(u, z)).collect();
            (phi, a)
        };
        let norm2 = |phi: &[C64], a: &[C64]| phi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dk + a.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let fnorm = g.norm_x(f).max(f64::MIN_POSITIVE);
        let mut phi = vec![C64::new(0.0, 0.0); g.n];
        let mut a = vec![C64::new(0.0, 0.0); modes.len()];
        let mut r = f.to_vec();
        let (mut sphi, mut sa) = adjoint(&r);
        let (mut pphi, mut pa) = (sphi.clone(), sa.clone());
        let mut gamma = norm2(&sphi, &sa);
        let mut iterations = 0;
        while iterations < max_iter && g.norm_x(&r) / fnorm > tol {
            let q = apply(&pphi, &pa)?;
            let qn = g.norm_x(&q).powi(2);
            if qn == 0.0 {
                break;
            }
            let alpha = gamma / qn;
            for (x, p) in phi.iter_mut().zip(&pphi) {
                *x += alpha * p;
            }
            for (x, p) in a.iter_mut().zip(&pa) {
                *x += alpha * p;
            }
            for (x, p) in r.iter_mut().zip(&q) {
                *x -= alpha * p;
            }
            (sphi, sa) = adjoint(&r);
            let next = norm2(&sphi, &sa);
            let beta = next / gamma;
            gamma = next;
            for (p, s) in pphi.iter_mut().zip(&sphi) {
                *p = s + beta * *p;
            }
            for (p, s) in pa.iter_mut().zip(&sa) {
                *p = s + beta * *p;
            }
            iterations += 1;
        }
        let recon = apply(&phi, &a)?;
        let diff: Field = recon.iter().zip(f).map(|(x, y)| x - y).collect();
        Ok(Decomposition { phi, modes: modes.into_iter().zip(a).collect(), residual: g.norm_x(&diff) / fnorm, iterations })
    }

    /// Ratios max_ℓ‖⟨k⟩ⁿφ_ℓ‖ / ‖S(φ)(0)‖_{Hⁿ} for n = 0, 1, 2.
    pub fn coercivity_ratios(&self, phi: &[C64]) -> Result<[f64; 3]> {
        let g = &self.grid;
        let profile = self.build_profile_sequence(phi);
        let s0 = self.evaluate(&profile, 0.0)?;
        let ks = kappas(g);
        let mut out = [0.0; 3];
        for (n, o) in out.iter_mut().enumerate() {
            let top = profile
                .phis
                .iter()
                .map(|p| {
                    (p.iter().zip(&ks).map(|(z, k)| z.norm_sqr() * (1.0 + k * k).powi(n as i32)).sum::<f64>() * g.dk()).sqrt()
                })
                .fold(0.0, f64::max);
            *o = top / g.sobolev_norm(&s0, n as f64);
        }
        Ok(out)
    }
}
