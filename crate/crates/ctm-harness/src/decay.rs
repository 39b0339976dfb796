use ctm_core::evolution::Propagator;
use ctm_core::fit::{line_fit, LineFit};
use ctm_core::grid::{Lp, Weight};
use ctm_core::jost::detect_threshold_resonance;
use ctm_core::potentials::Config;
use ctm_core::{CtmError, Field, Result};

/// Largest admissible slope of log K against log(t - s) on the late ladder.
pub const TREND_MAX: f64 = 0.1;
/// Smallest admissible weighted decay exponent (3/2 minus discretization slack).
pub const WEIGHTED_MIN: f64 = 1.4;
/// Lebesgue exponent for the L^p → L^{p*} report.
pub const P_LEBESGUE: f64 = 1.1;

/// Dyadic sampling t = s + 2^j, j = 0..=max_power; rate fits use t - s ≥ fit_from.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub s: f64,
    pub offsets: Vec<f64>,
    pub fit_from: f64,
}

impl Ladder {
    pub fn dyadic(s: f64, max_power: i32) -> Self {
        Self { s, offsets: (0..=max_power).map(|j| 2f64.powi(j)).collect(), fit_from: 16.0 }
    }

    pub fn times(&self) -> Vec<f64> {
        self.offsets.iter().map(|o| self.s + o).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DecayOptions {
    pub dt: f64,
    /// Measure resonant configurations instead of refusing them (negative controls only).
    pub allow_resonant: bool,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self { dt: 0.01, allow_resonant: false }
    }
}

/// Norms of ψ(t) along a ladder, with ψ(s) norms for normalization.
#[derive(Clone, Debug)]
pub struct DecaySamples {
    pub ladder: Ladder,
    pub l1_at_s: f64,
    pub sup: Vec<f64>,
    /// sup |ψ(t,x)| / (1 + min_ℓ |x - y_ℓ - v_ℓ t|).
    pub weighted: Vec<f64>,
    /// ‖ψ(t)/(1 + min_ℓ |x - y_ℓ - v_ℓ t|)‖ in L^{p*}.
    pub weighted_lp: Vec<f64>,
}

pub fn refuse_resonant(config: &Config) -> Result<()> {
    for c in &config.centers {
        let report = detect_threshold_resonance(c.potential.clone());
        if report.resonant {
            return Err(CtmError::Resonance(report.wronskian));
        }
    }
    Ok(())
}

fn nearest_center_weight(config: &Config, t: f64) -> Vec<f64> {
    let (ys, vs) = (config.ys(), config.vs());
    config
        .grid
        .xs()
        .into_iter()
        .map(|x| {
            let d = ys.iter().zip(&vs).map(|(y, v)| (x - y - v * t).abs()).fold(f64::INFINITY, f64::min);
            1.0 / (1.0 + d)
        })
        .collect()
}

pub fn sample_decay(config: &Config, psi0: &Field, ladder: &Ladder, opts: DecayOptions) -> Result<DecaySamples> {
    if !opts.allow_resonant {
        refuse_resonant(config)?;
    }
    let grid = &config.grid;
    let mut samples = vec![ladder.s];
    samples.extend(ladder.times());
    let traj = Propagator::new(config).run(&[psi0.clone()], 0.0, &samples, opts.dt)?;
    let l1_at_s = grid.weighted_norm(&traj.states[0][0], &Weight::none(), Lp::One);
    let q = P_LEBESGUE / (P_LEBESGUE - 1.0);
    let mut out = DecaySamples { ladder: ladder.clone(), l1_at_s, sup: Vec::new(), weighted: Vec::new(), weighted_lp: Vec::new() };
    for (&t, state) in traj.times.iter().zip(&traj.states).skip(1) {
        let psi = &state[0];
        let w = nearest_center_weight(config, t);
        out.sup.push(grid.sup(psi));
        out.weighted.push(psi.iter().zip(&w).map(|(z, w)| z.norm() * w).fold(0.0, f64::max));
        let lp = psi.iter().zip(&w).map(|(z, w)| (z.norm() * w).powf(q)).sum::<f64>() * grid.dx();
        out.weighted_lp.push(lp.powf(1.0 / q));
    }
    Ok(out)
}

fn late_fit(ladder: &Ladder, values: &[f64]) -> LineFit {
    let (xs, ys): (Vec<f64>, Vec<f64>) = ladder
        .offsets
        .iter()
        .zip(values)
        .filter(|(o, v)| **o >= ladder.fit_from && **v > 0.0)
        .map(|(o, v)| (o.ln(), v.ln()))
        .unzip();
    line_fit(&xs, &ys)
}

#[derive(Clone, Debug)]
pub struct LinftyReport {
    /// (t - s, √(t - s)‖ψ(t)‖∞/‖ψ(s)‖₁).
    pub table: Vec<(f64, f64)>,
    pub constant: f64,
    pub trend: f64,
    pub bounded: bool,
}

pub fn linfty_report(samples: &DecaySamples) -> LinftyReport {
    let table: Vec<(f64, f64)> = samples
        .ladder
        .offsets
        .iter()
        .zip(&samples.sup)
        .map(|(&o, &s)| (o, o.sqrt() * s / samples.l1_at_s))
        .collect();
    let constant = table.iter().map(|r| r.1).fold(0.0, f64::max);
    let k: Vec<f64> = table.iter().map(|r| r.1).collect();
    let trend = late_fit(&samples.ladder, &k).slope;
    LinftyReport { table, constant, trend, bounded: trend <= TREND_MAX }
}

#[derive(Clone, Debug)]
pub struct WeightedReport {
    /// (t - s, (t - s)^{3/2}·weighted sup / ‖ψ(s)‖₁).
    pub table: Vec<(f64, f64)>,
    pub exponent: f64,
    pub r2: f64,
    pub lp_exponent: f64,
    pub lp_reference: f64,
    pub decays: bool,
}

pub fn weighted_report(samples: &DecaySamples) -> WeightedReport {
    let table = samples
        .ladder
        .offsets
        .iter()
        .zip(&samples.weighted)
        .map(|(&o, &w)| (o, o.powf(1.5) * w / samples.l1_at_s))
        .collect();
    let fit = late_fit(&samples.ladder, &samples.weighted);
    let lp = late_fit(&samples.ladder, &samples.weighted_lp);
    let q = P_LEBESGUE / (P_LEBESGUE - 1.0);
    WeightedReport {
        table,
        exponent: -fit.slope,
        r2: fit.r2,
        lp_exponent: -lp.slope,
        lp_reference: 1.5 * (1.0 / P_LEBESGUE - 1.0 / q),
        decays: -fit.slope >= WEIGHTED_MIN,
    }
}

pub fn decay_linfty_experiment(config: &Config, psi0: &Field, ladder: &Ladder, opts: DecayOptions) -> Result<LinftyReport> {
    Ok(linfty_report(&sample_decay(config, psi0, ladder, opts)?))
}

pub fn decay_weighted_experiment(config: &Config, psi0: &Field, ladder: &Ladder, opts: DecayOptions) -> Result<WeightedReport> {
    Ok(weighted_report(&sample_decay(config, psi0, ladder, opts)?))
}
