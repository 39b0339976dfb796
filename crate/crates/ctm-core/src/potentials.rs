use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CtmError, Result};
use crate::grid::{Field, Grid};
use crate::registry::{Named, Registry};

/// Real, even, exponentially decaying profile.
pub trait Potential: Send + Sync + std::fmt::Debug {
    fn value(&self, x: f64) -> f64;
    fn decay_rate(&self) -> f64;
    fn label(&self) -> String;

    /// Radius beyond which |V| is below 1e-16 relative to its peak, capped at 25/γ.
    fn core_radius(&self) -> f64 {
        let cap = 25.0 / self.decay_rate();
        let peak = (0..=4000)
            .map(|i| self.value(cap * i as f64 / 4000.0).abs())
            .fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut r = cap;
        let steps = 4000;
        for i in (0..=steps).rev() {
            let x = cap * i as f64 / steps as f64;
            if self.value(x).abs() > 1e-16 * peak.max(1.0) {
                r = (x + cap / steps as f64).min(cap);
                break;
            }
        }
        r.max(1.0)
    }

    fn is_zero(&self) -> bool {
        false
    }
}

pub trait PotentialFamily: Named + Send + Sync {
    fn build(&self, params: &Value) -> Result<Arc<dyn Potential>>;
}

#[derive(Debug, Clone, Copy)]
pub struct Zero;

impl Potential for Zero {
    fn value(&self, _x: f64) -> f64 {
        0.0
    }
    fn decay_rate(&self) -> f64 {
        1.0
    }
    fn label(&self) -> String {
        "zero".into()
    }
    fn core_radius(&self) -> f64 {
        0.0
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// V(x) = -n(n+1) sech²(x).
#[derive(Debug, Clone, Copy)]
pub struct PoschlTeller {
    pub depth: u32,
}

impl Potential for PoschlTeller {
    fn value(&self, x: f64) -> f64 {
        let n = self.depth as f64;
        -n * (n + 1.0) / x.cosh().powi(2)
    }
    fn decay_rate(&self) -> f64 {
        1.0
    }
    fn label(&self) -> String {
        format!("poschl_teller({})", self.depth)
    }
    fn is_zero(&self) -> bool {
        self.depth == 0
    }
}

/// V(x) = a exp(-x²/(2σ²)).
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub amplitude: f64,
    pub width: f64,
}

impl Potential for Gaussian {
    fn value(&self, x: f64) -> f64 {
        self.amplitude * (-x * x / (2.0 * self.width * self.width)).exp()
    }
    fn decay_rate(&self) -> f64 {
        1.0
    }
    fn label(&self) -> String {
        format!("gaussian({}, {})", self.amplitude, self.width)
    }
    fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }
}

/// V(x) = a sech²(γ x).
#[derive(Debug, Clone, Copy)]
pub struct SechSquare {
    pub amplitude: f64,
    pub rate: f64,
}

impl Potential for SechSquare {
    fn value(&self, x: f64) -> f64 {
        self.amplitude / (self.rate * x).cosh().powi(2)
    }
    fn decay_rate(&self) -> f64 {
        (2.0 * self.rate).min(1.0)
    }
    fn label(&self) -> String {
        format!("sech_square({}, {})", self.amplitude, self.rate)
    }
    fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }
}

/// Sampled profile on x ≥ 0, evaluated at |x| by linear interpolation and zero beyond the table.
#[derive(Debug, Clone)]
pub struct Table {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub gamma: f64,
}

impl Table {
    pub fn new(xs: Vec<f64>, values: Vec<f64>, gamma: f64) -> Result<Self> {
        if xs.len() != values.len() || xs.len() < 2 {
            return Err(CtmError::Config("table needs matching xs/values with at least two rows".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || xs[0] < 0.0 {
            return Err(CtmError::Config("table xs must be increasing and non-negative".into()));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(CtmError::Config("table decay rate must lie in (0, 1]".into()));
        }
        let last = *xs.last().unwrap();
        let envelope = |lim: f64| {
            xs.iter()
                .zip(&values)
                .filter(|(x, _)| **x <= lim)
                .map(|(x, v)| v.abs() * (gamma * x).exp())
                .fold(0.0, f64::max)
        };
        if envelope(last) > 10.0 * envelope(last / 4.0) + 1e-300 {
            return Err(CtmError::Config(format!("table does not decay at the declared rate {gamma}")));
        }
        Ok(Self { xs, values, gamma })
    }
}

impl Potential for Table {
    fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        let last = *self.xs.last().unwrap();
        if a >= last {
            return 0.0;
        }
        let i = self.xs.partition_point(|&p| p <= a).saturating_sub(1);
        let w = (a - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
    fn decay_rate(&self) -> f64 {
        self.gamma
    }
    fn label(&self) -> String {
        format!("table({} rows)", self.xs.len())
    }
}

fn param(params: &Value, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| CtmError::Config(format!("missing numeric parameter '{key}'")))
}

struct ZeroFamily;
struct PoschlTellerFamily;
struct GaussianFamily;
struct SechSquareFamily;
struct TableFamily;

impl Named for ZeroFamily {
    fn name(&self) -> &'static str {
        "zero"
    }
}
impl PotentialFamily for ZeroFamily {
    fn build(&self, _params: &Value) -> Result<Arc<dyn Potential>> {
        Ok(Arc::new(Zero))
    }
}

impl Named for PoschlTellerFamily {
    fn name(&self) -> &'static str {
        "poschl_teller"
    }
}
impl PotentialFamily for PoschlTellerFamily {
    fn build(&self, params: &Value) -> Result<Arc<dyn Potential>> {
        let n = param(params, "depth")?;
        if n < 0.0 || n.fract() != 0.0 {
            return Err(CtmError::Config("poschl_teller depth must be a non-negative integer".into()));
        }
        Ok(Arc::new(PoschlTeller { depth: n as u32 }))
    }
}

impl Named for GaussianFamily {
    fn name(&self) -> &'static str {
        "gaussian"
    }
}
impl PotentialFamily for GaussianFamily {
    fn build(&self, params: &Value) -> Result<Arc<dyn Potential>> {
        let width = param(params, "width")?;
        if !(width > 0.0) {
            return Err(CtmError::Config("gaussian width must be positive".into()));
        }
        Ok(Arc::new(Gaussian { amplitude: param(params, "amplitude")?, width }))
    }
}

impl Named for SechSquareFamily {
    fn name(&self) -> &'static str {
        "sech_square"
    }
}
impl PotentialFamily for SechSquareFamily {
    fn build(&self, params: &Value) -> Result<Arc<dyn Potential>> {
        let rate = param(params, "rate")?;
        if !(rate > 0.0) {
            return Err(CtmError::Config("sech_square rate must be positive".into()));
        }
        Ok(Arc::new(SechSquare { amplitude: param(params, "amplitude")?, rate }))
    }
}

impl Named for TableFamily {
    fn name(&self) -> &'static str {
        "table"
    }
}
impl PotentialFamily for TableFamily {
    fn build(&self, params: &Value) -> Result<Arc<dyn Potential>> {
        let list = |key: &str| -> Result<Vec<f64>> {
            params
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| CtmError::Config(format!("table needs an array '{key}'")))?
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| CtmError::Config(format!("non-numeric entry in '{key}'"))))
                .collect()
        };
        Ok(Arc::new(Table::new(list("x")?, list("values")?, param(params, "gamma")?)?))
    }
}

pub fn families() -> Registry<dyn PotentialFamily> {
    let mut r: Registry<dyn PotentialFamily> = Registry::new("potential family");
    r.register(Arc::new(ZeroFamily))
        .register(Arc::new(PoschlTellerFamily))
        .register(Arc::new(GaussianFamily))
        .register(Arc::new(SechSquareFamily))
        .register(Arc::new(TableFamily));
    r
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PotentialSpec {
    pub family: String,
    #[serde(default)]
    pub params: Value,
}

impl PotentialSpec {
    pub fn new(family: &str, params: Value) -> Self {
        Self { family: family.into(), params }
    }

    pub fn build(&self) -> Result<Arc<dyn Potential>> {
        families().get(&self.family)?.build(&self.params)
    }
}

pub fn sample_potential(v: &dyn Potential, grid: &Grid) -> Field {
    grid.sample_real(|x| v.value(x))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct TravelingCenter {
    pub v: f64,
    pub y: f64,
    #[serde(default = "unit")]
    pub omega: f64,
    #[serde(default)]
    pub gamma_phase: f64,
}

fn unit() -> f64 {
    1.0
}

impl TravelingCenter {
    pub fn new(v: f64, y: f64) -> Self {
        Self { v, y, omega: 1.0, gamma_phase: 0.0 }
    }

    pub fn position(&self, t: f64) -> f64 {
        self.y + self.v * t
    }

    /// Galilei phase v x/2 - v² t/4 carried by a profile moving with this center.
    pub fn galilei_phase(&self, t: f64, x: f64) -> f64 {
        self.v * x / 2.0 - self.v * self.v * t / 4.0
    }
}

/// Off-diagonal phase convention for the moving matrix potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseConvention {
    /// θ = (v² + ω) t + 2 x v + γ, as written in the model statement.
    Literal,
    /// θ = v x - v² t/2 + 2 ω t + 2 γ, the phase produced by conjugating a static center with its
    /// Galilei boost and internal rotation; this is what the evolution uses.
    Galilean,
}

impl PhaseConvention {
    pub fn theta(&self, c: &TravelingCenter, t: f64, x: f64) -> f64 {
        match self {
            PhaseConvention::Literal => (c.v * c.v + c.omega) * t + 2.0 * x * c.v + c.gamma_phase,
            PhaseConvention::Galilean => {
                2.0 * (c.galilei_phase(t, x) + c.omega * t + c.gamma_phase)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatrixPotential {
    pub u: Arc<dyn Potential>,
    pub w: Arc<dyn Potential>,
    pub omega: f64,
}

impl MatrixPotential {
    pub fn decay_rate(&self) -> f64 {
        self.u.decay_rate().min(self.w.decay_rate())
    }

    pub fn core_radius(&self) -> f64 {
        self.u.core_radius().max(self.w.core_radius())
    }
}

/// Entries (V11, V12, V21, V22) of one moving matrix potential at node x.
pub fn moving_matrix_entries(
    p: &MatrixPotential,
    c: &TravelingCenter,
    conv: PhaseConvention,
    t: f64,
    x: f64,
) -> [C64; 4] {
    let z = x - c.position(t);
    let u = p.u.value(z);
    let w = p.w.value(z);
    let e = C64::from_polar(1.0, conv.theta(c, t, x));
    [C64::new(u, 0.0), -e * w, e.conj() * w, C64::new(-u, 0.0)]
}

pub fn moving_matrix_potential(
    config: &Config,
    l: usize,
    t: f64,
    grid: &Grid,
    conv: PhaseConvention,
) -> Result<Vec<[C64; 4]>> {
    let center = config.centers.get(l).ok_or_else(|| {
        CtmError::Config(format!("center index {l} out of range (m = {})", config.centers.len()))
    })?;
    let p = center.matrix()?;
    Ok(grid.xs().into_iter().map(|x| moving_matrix_entries(&p, &center.motion, conv, t, x)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Scalar,
    Matrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CenterSpec {
    pub potential: PotentialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<PotentialSpec>,
    pub v: f64,
    pub y: f64,
    #[serde(default = "unit")]
    pub omega: f64,
    #[serde(default)]
    pub gamma_phase: f64,
}

#[derive(Clone, Debug)]
pub struct Center {
    pub potential: Arc<dyn Potential>,
    pub coupling: Arc<dyn Potential>,
    pub motion: TravelingCenter,
}

impl Center {
    pub fn matrix(&self) -> Result<MatrixPotential> {
        if !(self.motion.omega > 0.0) {
            return Err(CtmError::Config("matrix centers need omega > 0".into()));
        }
        Ok(MatrixPotential { u: self.potential.clone(), w: self.coupling.clone(), omega: self.motion.omega })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigFile {
    pub model: Model,
    pub centers: Vec<CenterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub model: Model,
    pub centers: Vec<Center>,
    pub grid: Grid,
}

impl Config {
    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        if file.centers.is_empty() {
            return Err(CtmError::Config("config needs at least one center".into()));
        }
        let mut centers = Vec::new();
        for (i, c) in file.centers.iter().enumerate() {
            let potential = c.potential.build().map_err(|e| CtmError::Config(format!("centers[{i}].potential: {e}")))?;
            let coupling = match &c.coupling {
                Some(w) => w.build().map_err(|e| CtmError::Config(format!("centers[{i}].coupling: {e}")))?,
                None => Arc::new(Zero),
            };
            if file.model == Model::Matrix && !(c.omega > 0.0) {
                return Err(CtmError::Config(format!("centers[{i}].omega must be positive")));
            }
            centers.push(Center {
                potential,
                coupling,
                motion: TravelingCenter { v: c.v, y: c.y, omega: c.omega, gamma_phase: c.gamma_phase },
            });
        }
        let grid = match &file.grid {
            Some(g) => Grid::symmetric(g.width, g.n)?,
            None => Grid::standard(),
        };
        let config = Self { model: file.model, centers, grid };
        config.validate()?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text).map_err(|e| {
            CtmError::Config(format!("line {}, column {}: {}", e.line(), e.column(), e))
        })?;
        Self::from_file(&file)
    }

    pub fn scalar(grid: Grid, centers: Vec<(Arc<dyn Potential>, TravelingCenter)>) -> Result<Self> {
        let config = Self {
            model: Model::Scalar,
            centers: centers
                .into_iter()
                .map(|(potential, motion)| Center { potential, coupling: Arc::new(Zero), motion })
                .collect(),
            grid,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for l in 1..self.centers.len() {
            let (a, b) = (&self.centers[l - 1].motion, &self.centers[l].motion);
            if !(a.v > b.v) {
                return Err(CtmError::Config(format!("velocities must decrease strictly (v{} <= v{})", l, l + 1)));
            }
            if !(a.y > b.y) {
                return Err(CtmError::Config(format!("positions must decrease strictly (y{} <= y{})", l, l + 1)));
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.centers.len()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.centers.iter().map(|c| c.motion.y).collect()
    }

    pub fn vs(&self) -> Vec<f64> {
        self.centers.iter().map(|c| c.motion.v).collect()
    }

    pub fn separation(&self) -> f64 {
        self.centers.windows(2).map(|w| w[0].motion.y - w[1].motion.y).fold(f64::INFINITY, f64::min)
    }

    pub fn velocity_gap(&self) -> f64 {
        self.centers.windows(2).map(|w| w[0].motion.v - w[1].motion.v).fold(f64::INFINITY, f64::min)
    }

    /// Sum of all moving scalar potentials at time t.
    pub fn scalar_potential_at(&self, t: f64) -> Vec<f64> {
        let xs = self.grid.xs();
        let mut out = vec![0.0; self.grid.n];
        for c in &self.centers {
            if c.potential.is_zero() {
                continue;
            }
            let p = c.motion.position(t);
            for (o, &x) in out.iter_mut().zip(&xs) {
                *o += c.potential.value(x - p);
            }
        }
        out
    }

    /// Sum of all moving matrix potentials at time t, per node.
    pub fn matrix_potential_at(&self, t: f64, conv: PhaseConvention) -> Result<Vec<[C64; 4]>> {
        let xs = self.grid.xs();
        let zero = C64::new(0.0, 0.0);
        let mut out = vec![[zero; 4]; self.grid.n];
        for c in &self.centers {
            let p = c.matrix()?;
            for (o, &x) in out.iter_mut().zip(&xs) {
                let e = moving_matrix_entries(&p, &c.motion, conv, t, x);
                for q in 0..4 {
                    o[q] += e[q];
                }
            }
        }
        Ok(out)
    }
}

pub fn gaussian_packet(grid: &Grid, x0: f64, k0: f64, width: f64) -> Field {
    let norm = (2.0 * PI * width * width).powf(-0.25);
    grid.sample(|x| C64::from_polar(norm * (-(x - x0).powi(2) / (4.0 * width * width)).exp(), k0 * x))
}
