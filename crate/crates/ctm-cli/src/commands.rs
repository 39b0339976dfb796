use std::fs;
use std::path::Path;

use ctm_core::dispersive::{recursions, DispersiveMap};
use ctm_core::distorted::kappa;
use ctm_core::evolution::{state_norm, ModeSet, Propagator, Trajectory};
use ctm_core::jost::{detect_threshold_resonance, JostSolver};
use ctm_core::matrix_distorted::MatrixBasis;
use ctm_core::potentials::{gaussian_packet, Center, Config, Model};
use ctm_core::spectrum::{matrix_discrete_spectrum, scalar_discrete_spectrum, DiscreteSpectrum};
use ctm_core::{Field, Grid, C64};
use ctm_harness::report::pretty;
use ctm_harness::{run_suite, Context};
use serde_json::{json, Value};

use crate::cache::Cache;
use crate::fields::{parse_gaussian, read_field};
use crate::Failure;

const K_MAX: f64 = 20.0;

fn load_config(path: &Path) -> Result<Config, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    Config::from_json(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn write_files(out: &Path, files: &[(&str, String)]) -> Result<(), Failure> {
    fs::create_dir_all(out)?;
    for (name, body) in files {
        fs::write(out.join(name), body)?;
    }
    Ok(())
}

fn center_key(config: &Config, c: &Center) -> String {
    let g = &config.grid;
    format!(
        "{:?}|{}|{}|{}|{}|{}|{}",
        config.model,
        c.potential.label(),
        c.coupling.label(),
        c.motion.omega,
        g.x_min,
        g.x_max,
        g.n
    )
}

fn spectrum_of(config: &Config, c: &Center) -> Result<DiscreteSpectrum, Failure> {
    Ok(match config.model {
        Model::Scalar => scalar_discrete_spectrum(c.potential.clone(), &config.grid)?,
        Model::Matrix => matrix_discrete_spectrum(&c.matrix()?, &config.grid)?,
    })
}

fn spectrum_json(index: usize, c: &Center, s: &DiscreteSpectrum) -> Value {
    let modes: Vec<Value> = s
        .states
        .iter()
        .map(|b| json!({"re": b.lambda.re, "im": b.lambda.im, "role": b.role, "residual": b.residual}))
        .collect();
    json!({
        "center": index,
        "potential": c.potential.label(),
        "coupling": c.coupling.label(),
        "modes": modes,
        "real_pairs": s.real_pairs,
        "imaginary_pairs": s.imaginary_pairs,
        "kernel_dim": s.kernel_dim,
        "kernel2_dim": s.kernel2_dim,
    })
}

fn scattering_rows(config: &Config, c: &Center, spectrum: DiscreteSpectrum) -> Result<String, Failure> {
    let mut rows = String::new();
    match config.model {
        Model::Scalar => {
            let solver = JostSolver::new(c.potential.clone());
            let n = 800;
            for i in 0..=n {
                let k = -K_MAX + 2.0 * K_MAX * i as f64 / n as f64;
                let (s, r) = solver.coefficients(k);
                rows.push_str(&format!("{k:.10e},{:.12e},{:.12e},{:.12e},{:.12e}\n", r.re, r.im, s.re, s.im));
            }
        }
        Model::Matrix => {
            let basis = MatrixBasis::with_spectrum(&c.matrix()?, &config.grid, spectrum)?;
            for i in 0..config.grid.n {
                let k = kappa(&config.grid, i);
                if k.abs() <= K_MAX {
                    let (s, r) = (basis.transmission(i), basis.reflection(i));
                    rows.push_str(&format!("{k:.10e},{:.12e},{:.12e},{:.12e},{:.12e}\n", r.re, r.im, s.re, s.im));
                }
            }
        }
    }
    Ok(rows)
}

pub fn scatter(config_path: &Path, out: &Path) -> Result<u8, Failure> {
    let config = load_config(config_path)?;
    let cache = Cache::from_env();
    let mut csv = String::from("center,k,re_r,im_r,re_s,im_s\n");
    let mut spectra = Vec::new();
    let mut resonance = Vec::new();
    for (l, c) in config.centers.iter().enumerate() {
        let key = center_key(&config, c);
        let spectrum = spectrum_of(&config, c)?;
        spectra.push(spectrum_json(l, c, &spectrum));
        let rows = cache.get_or("scattering", &key, || scattering_rows(&config, c, spectrum))?;
        for line in rows.lines() {
            csv.push_str(&format!("{l},{line}\n"));
        }
        let report = detect_threshold_resonance(c.potential.clone());
        resonance.push(json!({"center": l, "resonant": report.resonant, "wronskian": report.wronskian}));
    }
    write_files(
        out,
        &[
            ("scattering.csv", csv),
            ("spectrum.json", pretty(&json!({ "model": config.model, "centers": spectra }))),
            ("resonance.json", pretty(&json!({ "centers": resonance }))),
        ],
    )?;
    Ok(0)
}

fn trajectory_csv(grid: &Grid, traj: &Trajectory) -> String {
    let mut out = String::from("t,norm,sup_psi1,sup_psi2\n");
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let sup2 = s.get(1).map(|f| grid.sup(f)).unwrap_or(0.0);
        out.push_str(&format!("{t:.10e},{:.12e},{:.12e},{sup2:.12e}\n", state_norm(grid, s), grid.sup(&s[0])));
    }
    out
}

pub fn evolve(config_path: &Path, out: &Path, psi0: &str, t_final: f64, dt: f64, samples: usize) -> Result<u8, Failure> {
    let config = load_config(config_path)?;
    if !(t_final > 0.0) || samples == 0 {
        return Err(Failure::config("--t-final must be positive and --samples at least 1"));
    }
    let grid = config.grid;
    let nc = match config.model {
        Model::Scalar => 1,
        Model::Matrix => 2,
    };
    let mut modes: Option<ModeSet> = None;
    let initial: Vec<Field> = if psi0.starts_with("gaussian:") {
        let (x0, k0, w) = parse_gaussian(psi0)?;
        let mut s = vec![gaussian_packet(&grid, x0, k0, w)];
        s.resize(nc, vec![C64::new(0.0, 0.0); grid.n]);
        s
    } else if let Some(j) = psi0.strip_prefix("mode:") {
        let j: usize = j.trim().parse().map_err(|_| Failure::config(format!("--psi0 '{psi0}': expected mode:J")))?;
        let set = ModeSet::from_config(&config)?;
        if j >= set.modes.len() {
            return Err(Failure::config(format!("--psi0 mode:{j}: the configuration has {} modes", set.modes.len())));
        }
        let s = set.field(j, 0.0);
        modes = Some(set);
        s
    } else {
        read_field(Path::new(psi0), &grid, nc)?
    };
    let mut prop = Propagator::new(&config);
    if config.model == Model::Matrix {
        let set = match modes {
            Some(m) => m,
            None => ModeSet::from_config(&config)?,
        };
        prop.growth_rate = set.modes.iter().map(|m| m.lambda.im.abs()).fold(0.0, f64::max);
    }
    let times: Vec<f64> = (1..=samples).map(|i| t_final * i as f64 / samples as f64).collect();
    let mut traj = prop.run(&initial, 0.0, &times, dt)?;
    traj.times.insert(0, 0.0);
    traj.states.insert(0, initial);
    let last = traj.states.len() - 1;
    let summary = json!({
        "t_final": t_final,
        "dt": traj.dt,
        "samples": samples,
        "initial_norm": state_norm(&grid, &traj.states[0]),
        "final_norm": state_norm(&grid, &traj.states[last]),
    });
    write_files(
        out,
        &[
            ("trajectory.csv", trajectory_csv(&grid, &traj)),
            ("initial.csv", traj.to_csv(&grid, 0)),
            ("final.csv", traj.to_csv(&grid, last)),
            ("evolve.json", pretty(&summary)),
        ],
    )?;
    Ok(0)
}

pub fn decompose(config_path: &Path, out: &Path, field: &Path, t: f64, tol: f64, max_iter: usize) -> Result<u8, Failure> {
    let config = load_config(config_path)?;
    if config.model != Model::Scalar {
        return Err(Failure::config("decompose needs a scalar configuration"));
    }
    let f = read_field(field, &config.grid, 1)?.remove(0);
    let map = DispersiveMap::new(&config, recursions().get("matched")?)?;
    let d = map.decompose(&f, t, tol, max_iter)?;
    let modes: Vec<Value> = d
        .modes
        .iter()
        .map(|(m, a)| json!({"center": m.center, "index": m.index, "lambda": m.lambda, "re": a.re, "im": a.im}))
        .collect();
    let report = json!({
        "t": t,
        "residual": d.residual,
        "iterations": d.iterations,
        "phi_norm": config.grid.norm_k(&d.phi),
        "modes": modes,
    });
    let mut phi = String::from("k,re_phi,im_phi\n");
    for (i, z) in d.phi.iter().enumerate() {
        phi.push_str(&format!("{:.10e},{:.12e},{:.12e}\n", kappa(&config.grid, i), z.re, z.im));
    }
    write_files(out, &[("decomposition.json", pretty(&report)), ("phi.csv", phi)])?;
    Ok(0)
}

pub fn verify(config_path: Option<&Path>, out: &Path, suite: &str, seed: u64, threads: usize) -> Result<u8, Failure> {
    let config = config_path.map(load_config).transpose()?;
    let ctx = Context { seed, config };
    let outcomes = run_suite(suite, &ctx, out, threads)?;
    let mut failed = 0usize;
    for o in &outcomes {
        println!("{:<24} {}", o.experiment, if o.pass { "PASS" } else { "FAIL" });
        failed += usize::from(!o.pass);
    }
    Ok(failed.min(u8::MAX as usize) as u8)
}
