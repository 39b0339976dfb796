use ctm_core::dispersive::DispersiveMap;
use ctm_core::evolution::Propagator;
use ctm_core::fit::{exponential_decay, line_fit, DecayFit};
use ctm_core::potentials::Config;
use ctm_core::{Field, Result, C64};

/// Fraction of the time span used for convergence fits; the tail is pinned to zero by the limit itself.
pub const FIT_FRACTION: f64 = 0.75;
pub const FIT_FLOOR: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct ModeConvergence {
    pub mode: usize,
    pub lambda: f64,
    pub a_inf: C64,
    /// Residual phase rate removed before measuring convergence (time-stepping phase error).
    pub phase_drift: f64,
    pub distance: Vec<f64>,
    pub fit: Option<DecayFit>,
}

#[derive(Clone, Debug)]
pub struct CompletenessReport {
    pub times: Vec<f64>,
    pub modes: Vec<ModeConvergence>,
    pub phi_distance: Vec<f64>,
    pub phi_fit: Option<DecayFit>,
    pub residuals: Vec<f64>,
}

fn unwrapped_phase(values: &[C64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(values.len());
    for v in values {
        let mut p = v.arg();
        if let Some(&last) = out.last() {
            while p - last > std::f64::consts::PI {
                p -= 2.0 * std::f64::consts::PI;
            }
            while p - last < -std::f64::consts::PI {
                p += 2.0 * std::f64::consts::PI;
            }
        }
        out.push(p);
    }
    out
}

fn convergence_fit(times: &[f64], distance: &[f64]) -> Option<DecayFit> {
    let end = times[times.len() - 1] * FIT_FRACTION;
    let n = times.iter().take_while(|&&t| t <= end).count();
    exponential_decay(&times[..n], &distance[..n], FIT_FLOOR)
}

/// Decomposes ψ(t) = S(φ(t))(t) + Σ a_j(t)·(moving modes) along a trajectory and fits the approach of
/// each a_j and of φ to their values at the final time.
pub fn completeness_experiment(map: &DispersiveMap, config: &Config, psi0: &Field, times: &[f64], dt: f64) -> Result<CompletenessReport> {
    let later: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0).collect();
    let traj = Propagator::new(config).run(&[psi0.clone()], 0.0, &later, dt)?;
    let mut ts = Vec::new();
    let mut decs = Vec::new();
    if times.first() == Some(&0.0) {
        ts.push(0.0);
        decs.push(map.decompose(psi0, 0.0, 1e-10, 60)?);
    }
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        ts.push(t);
        decs.push(map.decompose(&s[0], t, 1e-10, 60)?);
    }
    let last = decs.last().expect("at least one sample").clone();
    let half = ts.len() / 2;
    let mut modes = Vec::new();
    for (j, (mode, _)) in last.modes.iter().enumerate() {
        let a: Vec<C64> = decs.iter().map(|d| d.modes[j].1).collect();
        let phase = unwrapped_phase(&a);
        let phase_drift = -line_fit(&ts[half..], &phase[half..]).slope;
        let corrected: Vec<C64> = a.iter().zip(&ts).map(|(z, &t)| z * C64::from_polar(1.0, phase_drift * t)).collect();
        let a_inf = *corrected.last().expect("non-empty");
        let distance: Vec<f64> = corrected.iter().map(|z| (z - a_inf).norm()).collect();
        let fit = convergence_fit(&ts, &distance);
        modes.push(ModeConvergence { mode: j, lambda: mode.lambda, a_inf, phase_drift, distance, fit });
    }
    let dk = map.grid.dk();
    let phi_distance: Vec<f64> = decs
        .iter()
        .map(|d| (d.phi.iter().zip(&last.phi).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * dk).sqrt())
        .collect();
    let phi_fit = convergence_fit(&ts, &phi_distance);
    let residuals = decs.iter().map(|d| d.residual).collect();
    Ok(CompletenessReport { times: ts, modes, phi_distance, phi_fit, residuals })
}
