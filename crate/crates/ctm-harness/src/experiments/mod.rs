mod decay_runs;
mod dispersive_runs;
mod operator_runs;
mod scattering_runs;

use std::sync::Arc;

use ctm_core::registry::Named;
use ctm_core::Result;

use crate::{Context, Experiment, Outcome};

struct FnExperiment {
    name: &'static str,
    criterion: Option<usize>,
    description: &'static str,
    run: fn(&Context) -> Result<Outcome>,
}

impl Named for FnExperiment {
    fn name(&self) -> &'static str {
        self.name
    }
}

impl Experiment for FnExperiment {
    fn criterion(&self) -> Option<usize> {
        self.criterion
    }

    fn description(&self) -> &'static str {
        self.description
    }

    fn run(&self, ctx: &Context) -> Result<Outcome> {
        (self.run)(ctx)
    }
}

fn entry(
    name: &'static str,
    criterion: Option<usize>,
    description: &'static str,
    run: fn(&Context) -> Result<Outcome>,
) -> Arc<dyn Experiment> {
    Arc::new(FnExperiment { name, criterion, description, run })
}

pub fn all() -> Vec<Arc<dyn Experiment>> {
    vec![
        entry("scattering_unitarity", Some(1), "||r|²+|s|²-1| over 10⁻³ ≤ |k| ≤ 20 for Gaussian and Pöschl–Teller wells", scattering_runs::unitarity),
        entry("reflectionless_benchmark", Some(2), "Pöschl–Teller depth 1: r ≡ 0 and s(1) = i", scattering_runs::reflectionless),
        entry("bound_state", Some(3), "Pöschl–Teller depth 1: λ = -1 with eigenfunction sech/√2", scattering_runs::bound_state),
        entry("distorted_inversion", Some(4), "matrix transforms: σ₃F*σ₃Ĝ = Id on random inputs, F* and G* annihilate the discrete modes", scattering_runs::distorted_inversion),
        entry("annihilation_identity", Some(5), "(Id - T)^{m-1} = 0 when every reflection vanishes", operator_runs::annihilation),
        entry("neumann_bound", Some(6), "probe norms of R^{j(m-1)} against the factorial bound; Neumann solve residual", operator_runs::neumann_bound),
        entry("product_bound", Some(7), "sup_k ∏1/(1+|k+q_j|) against the gap bound; gap exponent 1-M", operator_runs::product),
        entry("dispersive_round_trip", Some(8), "decompose(S(φ)(0)) recovers φ and mode weights for a reflectionless pair", dispersive_runs::round_trip),
        entry("free_decay", Some(9), "free Gaussian: ‖ψ(t)‖∞(1+4t²)^{1/4} constant on [0, 64]", decay_runs::free_decay),
        entry("decay_verdicts", Some(10), "L∞ and weighted decay on dyadic ladders, with failing negative controls", decay_runs::decay_verdicts),
        entry("completeness", Some(11), "mode coefficients and dispersive profile converge; generalized-kernel growth", dispersive_runs::completeness),
        entry("wave_operator", Some(12), "solution asymptotic to S(φ) built backwards from T = 40", dispersive_runs::wave_operator),
        entry("hardy_interaction", Some(13), "cross-half-space leakage of shifted scattering data decays in y₀", scattering_runs::hardy),
        entry("config_decay", None, "decay verdicts for the user configuration", decay_runs::config_decay),
        entry("config_neumann_bound", None, "Neumann bound scan for the user configuration", operator_runs::config_neumann_bound),
    ]
}
