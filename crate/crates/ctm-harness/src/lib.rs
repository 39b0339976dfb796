pub mod completeness;
pub mod decay;
pub mod experiments;
pub mod operators;
pub mod report;

use std::path::Path;
use std::sync::{Arc, Mutex};

use ctm_core::potentials::Config;
use ctm_core::registry::{Named, Registry};
use ctm_core::{CtmError, Result};
use serde_json::{json, Value};

pub use report::{Outcome, Table};

#[derive(Clone, Debug)]
pub struct Context {
    pub seed: u64,
    /// User configuration for the config-driven suite.
    pub config: Option<Config>,
}

impl Default for Context {
    fn default() -> Self {
        Self { seed: 20240607, config: None }
    }
}

pub trait Experiment: Named + Send + Sync {
    /// Acceptance criterion number, if the experiment is one.
    fn criterion(&self) -> Option<usize>;
    fn description(&self) -> &'static str;
    fn run(&self, ctx: &Context) -> Result<Outcome>;
}

pub fn experiments() -> Registry<dyn Experiment> {
    let mut r = Registry::new("experiment");
    for e in experiments::all() {
        r.register(e);
    }
    r
}

/// Suite name → experiment names, in run order.
pub fn suite(name: &str) -> Result<Vec<Arc<dyn Experiment>>> {
    let reg = experiments();
    let mut all: Vec<Arc<dyn Experiment>> = reg.names().into_iter().map(|n| reg.get(n)).collect::<Result<_>>()?;
    match name {
        "acceptance" => {
            all.retain(|e| e.criterion().is_some());
            all.sort_by_key(|e| e.criterion());
            Ok(all)
        }
        "quick" => {
            let quick = ["scattering_unitarity", "reflectionless_benchmark", "bound_state", "annihilation_identity", "product_bound", "hardy_interaction"];
            quick.iter().map(|n| reg.get(n)).collect()
        }
        "config" => ["config_decay", "config_neumann_bound"].iter().map(|n| reg.get(n)).collect(),
        other => reg.get(other).map(|e| vec![e]).map_err(|_| {
            CtmError::Config(format!(
                "unknown suite '{other}' (known: {}, or a single experiment: {})",
                suite_names().join(", "),
                reg.names().join(", ")
            ))
        }),
    }
}

pub fn suite_names() -> Vec<&'static str> {
    vec!["acceptance", "quick", "config"]
}

pub fn meta(e: &dyn Experiment, ctx: &Context) -> Value {
    json!({
        "experiment": e.name(),
        "criterion": e.criterion(),
        "description": e.description(),
        "seed": ctx.seed,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

/// Runs one experiment, turning an error into a failed verdict.
pub fn run_one(e: &dyn Experiment, ctx: &Context) -> Outcome {
    e.run(ctx).unwrap_or_else(|err| Outcome::failed(e.name(), &err.to_string()))
}

/// Runs a suite on `threads` workers and writes every verdict under `out`; outcomes keep suite order.
pub fn run_suite(name: &str, ctx: &Context, out: &Path, threads: usize) -> Result<Vec<Outcome>> {
    let list = suite(name)?;
    let slots: Vec<Mutex<Option<Outcome>>> = list.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..threads.max(1).min(list.len().max(1)) {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().expect("queue lock");
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some(e) = list.get(i) else { break };
                *slots[i].lock().expect("slot lock") = Some(run_one(e.as_ref(), ctx));
            });
        }
    });
    let mut outcomes = Vec::new();
    for (e, slot) in list.iter().zip(slots) {
        let o = slot.into_inner().expect("slot lock").expect("every experiment ran");
        o.write(out, &meta(e.as_ref(), ctx)).map_err(|err| CtmError::Numerical(format!("writing results: {err}")))?;
        outcomes.push(o);
    }
    Ok(outcomes)
}
