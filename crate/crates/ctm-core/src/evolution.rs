use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::dispersive::DispersiveMap;
use crate::error::{CtmError, Result};
use crate::fit::{exponential_decay, line_fit, DecayFit, LineFit};
use crate::grid::{Field, Grid};
use crate::potentials::{Config, Model, PhaseConvention, TravelingCenter};
use crate::spectrum::{matrix_discrete_spectrum, scalar_discrete_spectrum, DiscreteSpectrum, ModeRole};

/// One- (scalar) or two-component (matrix) state.
pub type State = Vec<Field>;

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub dt: f64,
}

impl Trajectory {
    pub fn norms(&self, grid: &Grid) -> Vec<f64> {
        self.states.iter().map(|s| state_norm(grid, s)).collect()
    }

    /// CSV rows x, re ψ₁, im ψ₁, re ψ₂, im ψ₂ for sample `i`.
    pub fn to_csv(&self, grid: &Grid, i: usize) -> String {
        let s = &self.states[i];
        let mut out = String::from("x,re_psi1,im_psi1,re_psi2,im_psi2\n");
        for (j, x) in grid.xs().into_iter().enumerate() {
            let b = s.get(1).map(|f| f[j]).unwrap_or_default();
            out.push_str(&format!("{x:.10e},{:.12e},{:.12e},{:.12e},{:.12e}\n", s[0][j].re, s[0][j].im, b.re, b.im));
        }
        out
    }
}

pub fn state_norm(grid: &Grid, s: &[Field]) -> f64 {
    s.iter().map(|f| grid.norm_x(f).powi(2)).sum::<f64>().sqrt()
}

pub fn state_distance(grid: &Grid, a: &[Field], b: &[Field]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(f, g)| {
            let d: Field = f.iter().zip(g).map(|(x, y)| x - y).collect();
            grid.norm_x(&d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Strang splitting for i∂ₜψ = -σ₃∂²ψ + V(t)ψ (scalar: i∂ₜψ = -∂²ψ + Vψ).
pub struct Propagator<'a> {
    pub config: &'a Config,
    /// Largest admissible exponential growth rate (max |Im λ|) for the instability detector.
    pub growth_rate: f64,
}

impl<'a> Propagator<'a> {
    pub fn new(config: &'a Config) -> Self {
        Self { config, growth_rate: 0.0 }
    }

    pub fn components(&self) -> usize {
        match self.config.model {
            Model::Scalar => 1,
            Model::Matrix => 2,
        }
    }

    fn potential_peak(&self) -> f64 {
        self.config
            .centers
            .iter()
            .map(|c| {
                let r = c.potential.core_radius().max(1.0);
                (0..=400)
                    .map(|i| {
                        let x = r * i as f64 / 400.0;
                        c.potential.value(x).abs() + c.coupling.value(x).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .sum()
    }

    /// Integrates from `t0` through the increasing (or decreasing) `samples`, recording each.
    pub fn run(&self, psi0: &[Field], t0: f64, samples: &[f64], dt: f64) -> Result<Trajectory> {
        let grid = &self.config.grid;
        let nc = self.components();
        if psi0.len() != nc {
            return Err(CtmError::Config(format!("initial state has {} components, model needs {nc}", psi0.len())));
        }
        for f in psi0 {
            grid.check(f)?;
        }
        let dt = dt.abs();
        if !(dt > 0.0) {
            return Err(CtmError::Config("dt must be positive".into()));
        }
        let vmax = self.potential_peak();
        if dt * vmax > 1.0 {
            return Err(CtmError::Numerical(format!(
                "dt too large: dt·max|V| = {:.3} exceeds 1 (use dt ≤ {:.3e})",
                dt * vmax,
                1.0 / vmax
            )));
        }
        let ks = grid.ks();
        let n0 = state_norm(grid, psi0);
        let mut psi = psi0.to_vec();
        let mut t = t0;
        let mut out = Trajectory { times: Vec::new(), states: Vec::new(), dt };
        for &target in samples {
            let span = target - t;
            let steps = (span.abs() / dt).ceil() as usize;
            let h = if steps == 0 { 0.0 } else { span / steps as f64 };
            if steps > 0 {
                let half: Vec<C64> = ks.iter().map(|k| C64::from_polar(1.0, -0.5 * h * k * k)).collect();
                for _ in 0..steps {
                    self.free_step(grid, &mut psi, &half);
                    self.potential_step(&mut psi, t + 0.5 * h, h)?;
                    self.free_step(grid, &mut psi, &half);
                    t += h;
                }
            }
            t = target;
            let norm = state_norm(grid, &psi);
            let elapsed = (t - t0).abs();
            let allowed = 10.0 * (1.0 + elapsed).powi(2) * (1.5 * self.growth_rate * elapsed).exp() * n0.max(1e-300);
            let bound_ok = match self.config.model {
                Model::Scalar => (norm - n0).abs() <= 1e-6 * n0.max(1e-300) * (1.0 + (t - t0).abs()),
                Model::Matrix => norm <= allowed,
            };
            if !norm.is_finite() || !bound_ok {
                return Err(CtmError::Numerical(format!(
                    "dt too large: norm {norm:.3e} at t = {t:.3} departs from the admissible range (initial {n0:.3e})"
                )));
            }
            out.times.push(t);
            out.states.push(psi.clone());
        }
        Ok(out)
    }

    fn free_step(&self, grid: &Grid, psi: &mut [Field], half: &[C64]) {
        for (c, f) in psi.iter_mut().enumerate() {
            let mut g = grid.dft(f);
            for (z, e) in g.iter_mut().zip(half) {
                *z *= if c == 0 { *e } else { e.conj() };
            }
            *f = grid.idft(&g);
        }
    }

    fn potential_step(&self, psi: &mut [Field], t: f64, h: f64) -> Result<()> {
        match self.config.model {
            Model::Scalar => {
                let v = self.config.scalar_potential_at(t);
                for (z, vx) in psi[0].iter_mut().zip(v) {
                    *z *= C64::from_polar(1.0, -h * vx);
                }
            }
            Model::Matrix => {
                let v = self.config.matrix_potential_at(t, PhaseConvention::Galilean)?;
                let (a, b) = psi.split_at_mut(1);
                for ((p, q), m) in a[0].iter_mut().zip(b[0].iter_mut()).zip(v) {
                    let e = expm_traceless(m, -h);
                    let (x, y) = (*p, *q);
                    *p = e[0] * x + e[1] * y;
                    *q = e[2] * x + e[3] * y;
                }
            }
        }
        Ok(())
    }
}

/// exp(-i·h·V) for a traceless 2×2 V = [[a, b], [c, -a]]: cosh μ·I + (sinh μ/μ)·M with μ² = -h²(a² + bc).
fn expm_traceless(v: [C64; 4], h: f64) -> [C64; 4] {
    let i = C64::new(0.0, 1.0);
    let m = [i * h * v[0], i * h * v[1], i * h * v[2], i * h * v[3]];
    let mu2 = m[0] * m[0] + m[1] * m[2];
    let mu = mu2.sqrt();
    let (ch, sh) = if mu.norm() < 1e-6 {
        (C64::new(1.0, 0.0) + mu2 / 2.0, C64::new(1.0, 0.0) + mu2 / 6.0)
    } else {
        (mu.cosh(), mu.sinh() / mu)
    };
    [ch + sh * m[0], sh * m[1], sh * m[2], ch + sh * m[3]]
}

/// A discrete mode of one center, carried by e^{iΘσ₃}Z(x - y - vt), Θ = vx/2 - v²t/4 + ωt + γ.
#[derive(Clone, Debug)]
pub struct TravelingMode {
    pub center: usize,
    pub index: usize,
    pub lambda: C64,
    pub role: ModeRole,
    pub z: State,
    pub image: Option<State>,
    pub motion: TravelingCenter,
}

#[derive(Clone, Debug)]
pub struct ModeSet {
    pub grid: Grid,
    pub model: Model,
    pub modes: Vec<TravelingMode>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeCoefficients {
    pub values: Vec<C64>,
    pub gram_condition: f64,
}

impl ModeSet {
    pub fn from_config(config: &Config) -> Result<Self> {
        let spectra = config
            .centers
            .iter()
            .map(|c| match config.model {
                Model::Scalar => scalar_discrete_spectrum(c.potential.clone(), &config.grid),
                Model::Matrix => matrix_discrete_spectrum(&c.matrix()?, &config.grid),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_spectra(config, &spectra))
    }

    pub fn from_spectra(config: &Config, spectra: &[DiscreteSpectrum]) -> Self {
        let mut modes = Vec::new();
        for (l, (c, s)) in config.centers.iter().zip(spectra).enumerate() {
            for (j, b) in s.states.iter().enumerate() {
                modes.push(TravelingMode {
                    center: l,
                    index: j,
                    lambda: b.lambda,
                    role: b.role,
                    z: b.z.clone(),
                    image: b.image.clone(),
                    motion: c.motion,
                });
            }
        }
        Self { grid: config.grid, model: config.model, modes }
    }

    /// e^{iΘσ₃}u(x - y - vt) for a state u given in the center's frame.
    pub fn boost(&self, motion: &TravelingCenter, u: &[Field], t: f64) -> State {
        let g = &self.grid;
        let xs = g.xs();
        let omega = if self.model == Model::Matrix { motion.omega * t + motion.gamma_phase } else { 0.0 };
        u.iter()
            .enumerate()
            .map(|(c, f)| {
                let sign = if c == 0 { 1.0 } else { -1.0 };
                g.translate(f, motion.position(t))
                    .iter()
                    .zip(&xs)
                    .map(|(z, &x)| z * C64::from_polar(1.0, sign * (motion.galilei_phase(t, x) + omega)))
                    .collect()
            })
            .collect()
    }

    pub fn field(&self, j: usize, t: f64) -> State {
        let m = &self.modes[j];
        self.boost(&m.motion, &m.z, t)
    }

    /// ⟨a, σ₃b⟩ (⟨a, b⟩ for scalar states).
    pub fn pairing(&self, a: &[Field], b: &[Field]) -> C64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(c, (f, g))| {
                let s = self.grid.inner_x(g, f);
                if c == 0 {
                    s
                } else {
                    -s
                }
            })
            .sum()
    }

    /// Coefficients of ψ along the traveling modes from the σ₃-Gram system.
    pub fn coefficients(&self, psi: &[Field], t: f64) -> Result<ModeCoefficients> {
        let n = self.modes.len();
        if n == 0 {
            return Ok(ModeCoefficients { values: Vec::new(), gram_condition: 1.0 });
        }
        let fields: Vec<State> = (0..n).map(|j| self.field(j, t)).collect();
        let gram = DMatrix::from_fn(n, n, |i, j| self.pairing(&fields[i], &fields[j]));
        let rhs = nalgebra::DVector::from_iterator(n, fields.iter().map(|f| self.pairing(f, psi)));
        let sv = gram.clone().svd(false, false).singular_values;
        let cond = sv.max() / sv.min().max(f64::MIN_POSITIVE);
        if cond > 1e6 {
            return Err(CtmError::Numerical(format!(
                "mode Gram matrix condition number {cond:.3e} exceeds 1e6; centers overlap (increase the separation)"
            )));
        }
        let x = gram.lu().solve(&rhs).ok_or_else(|| CtmError::Numerical("singular mode Gram matrix".into()))?;
        Ok(ModeCoefficients { values: x.iter().copied().collect(), gram_condition: cond })
    }

    pub fn coefficient_series(&self, traj: &Trajectory) -> Result<Vec<Vec<C64>>> {
        traj.times.iter().zip(&traj.states).map(|(&t, s)| Ok(self.coefficients(s, t)?.values)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeResidual {
    pub mode: usize,
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    /// Fit |b(t)| ≈ A e^{-βt}; absent when the residual is below the noise floor throughout.
    pub fit: Option<DecayFit>,
}

/// b(t) = i ȧ - λa for every ordinary mode, with ȧ from fourth-order central differences.
pub fn mode_ode_residual(modes: &ModeSet, traj: &Trajectory) -> Result<Vec<ModeResidual>> {
    let series = modes.coefficient_series(traj)?;
    let n = traj.times.len();
    if n < 5 {
        return Err(CtmError::Config("mode residuals need at least five samples".into()));
    }
    let h = traj.times[1] - traj.times[0];
    let mut out = Vec::new();
    for (j, m) in modes.modes.iter().enumerate() {
        if m.role != ModeRole::Ordinary {
            continue;
        }
        let a: Vec<C64> = series.iter().map(|s| s[j]).collect();
        let mut times = Vec::new();
        let mut residual = Vec::new();
        for i in 2..n - 2 {
            let da = (a[i - 2] - 8.0 * a[i - 1] + 8.0 * a[i + 1] - a[i + 2]) / (12.0 * h);
            times.push(traj.times[i]);
            residual.push((C64::new(0.0, 1.0) * da - m.lambda * a[i]).norm());
        }
        let fit = exponential_decay(&times, &residual, 1e-12);
        out.push(ModeResidual { mode: j, times, residual, fit });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveSolution {
    #[serde(skip)]
    pub psi0: State,
    pub times: Vec<f64>,
    pub distance: Vec<f64>,
    /// Exponential fit of the distance over [0, T/2], where the anchoring at T is not yet felt.
    pub fit: Option<DecayFit>,
}

/// Solution asymptotic to S(φ): S(φ)(T) propagated back to 0, then forward again for comparison.
pub fn construct_wave_solution(
    map: &DispersiveMap,
    config: &Config,
    phi: &[C64],
    t_anchor: f64,
    dt: f64,
    samples: usize,
) -> Result<WaveSolution> {
    let prop = Propagator::new(config);
    let end = map.evaluate_s(phi, t_anchor)?;
    let back = prop.run(&[end], t_anchor, &[0.0], dt)?;
    let psi0 = back.states[0].clone();
    let times: Vec<f64> = (0..=samples).map(|i| t_anchor * i as f64 / samples as f64).collect();
    let fwd = prop.run(&psi0, 0.0, &times[1..], dt)?;
    let mut distance = vec![state_distance(&config.grid, &psi0, &[map.evaluate_s(phi, 0.0)?])];
    for (t, s) in fwd.times.iter().zip(&fwd.states) {
        distance.push(state_distance(&config.grid, s, &[map.evaluate_s(phi, *t)?]));
    }
    let half = samples / 2;
    let fit = exponential_decay(&times[..=half], &distance[..=half], 1e-14);
    Ok(WaveSolution { psi0, times, distance, fit })
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneralizedFit {
    pub times: Vec<f64>,
    /// Coefficient of -iY per unit time (1 for a pure Z¹ start).
    pub slope: f64,
    pub fit: LineFit,
}

/// Projects a trajectory onto the traveling pair (Z¹, Y = ℋZ¹) and fits the Y-coefficient linearly in t.
pub fn generalized_mode_check(modes: &ModeSet, mode: usize, traj: &Trajectory) -> Result<GeneralizedFit> {
    let m = &modes.modes[mode];
    let y = m.image.as_ref().ok_or_else(|| CtmError::Config("mode has no generalized-kernel image".into()))?;
    let g = &modes.grid;
    let inner = |a: &[Field], b: &[Field]| -> C64 { a.iter().zip(b).map(|(f, h)| g.inner_x(h, f)).sum() };
    let mut ts = Vec::new();
    let mut coeffs = Vec::new();
    for (&t, psi) in traj.times.iter().zip(&traj.states) {
        let z1 = modes.boost(&m.motion, &m.z, t);
        let yb = modes.boost(&m.motion, y, t);
        let gram = nalgebra::Matrix2::new(inner(&z1, &z1), inner(&z1, &yb), inner(&yb, &z1), inner(&yb, &yb));
        let rhs = nalgebra::Vector2::new(inner(&z1, psi), inner(&yb, psi));
        let x = gram.lu().solve(&rhs).ok_or_else(|| CtmError::Numerical("degenerate (Z¹, Y) pair".into()))?;
        ts.push(t);
        coeffs.push(x[1] * C64::new(0.0, 1.0));
    }
    let re: Vec<f64> = coeffs.iter().map(|c| c.re).collect();
    let fit = line_fit(&ts, &re);
    Ok(GeneralizedFit { times: ts, slope: fit.slope, fit })
}
