use std::sync::Arc;

use ctm_core::evolution::{generalized_mode_check, state_distance, state_norm, ModeSet, Propagator};
use ctm_core::potentials::{
    gaussian_packet, CenterSpec, Config, ConfigFile, Gaussian, GridSpec, Model, PoschlTeller, Potential, PotentialSpec,
    TravelingCenter, Zero,
};
use ctm_core::spectrum::ModeRole;
use ctm_core::{CtmError, Field, Grid, C64};

fn grid() -> Grid {
    Grid::symmetric(200.0, 1024).unwrap()
}

fn scalar(centers: Vec<(Arc<dyn Potential>, TravelingCenter)>) -> Config {
    Config::scalar(grid(), centers).unwrap()
}

fn two_wells() -> Config {
    let a: Arc<dyn Potential> = Arc::new(PoschlTeller { depth: 1 });
    let b: Arc<dyn Potential> = Arc::new(Gaussian { amplitude: -1.0, width: 0.8 });
    scalar(vec![(a, TravelingCenter::new(0.6, 8.0)), (b, TravelingCenter::new(-0.4, -8.0))])
}

fn packet(g: &Grid) -> Vec<Field> {
    vec![gaussian_packet(g, -3.0, 1.0, 1.5)]
}

#[test]
fn free_gaussian_matches_closed_form() {
    let config = scalar(vec![(Arc::new(Zero), TravelingCenter::new(0.0, 0.0))]);
    let g = config.grid;
    let traj = Propagator::new(&config).run(&[gaussian_packet(&g, 0.0, 0.0, 1.0)], 0.0, &[1.0, 3.0], 0.5).unwrap();
    let norm = (2.0 * std::f64::consts::PI).powf(-0.25);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let a = C64::new(1.0, *t);
        let exact = g.sample(|x| norm / a.sqrt() * (-x * x / (4.0 * a)).exp());
        assert!(state_distance(&g, s, &[exact]) < 1e-6, "t = {t}");
    }
}

#[test]
fn bound_state_only_rotates() {
    let config = scalar(vec![(Arc::new(PoschlTeller { depth: 1 }), TravelingCenter::new(0.0, 0.0))]);
    let g = config.grid;
    let modes = ModeSet::from_config(&config).unwrap();
    assert_eq!(modes.modes.len(), 1);
    let z = modes.field(0, 0.0);
    let traj = Propagator::new(&config).run(&z, 0.0, &[3.0], 0.002).unwrap();
    let rotated: Vec<Field> = z.iter().map(|f| f.iter().map(|w| w * C64::from_polar(1.0, 3.0)).collect()).collect();
    assert!(state_distance(&g, &traj.states[0], &rotated) < 1e-4);
}

#[test]
fn scalar_flow_is_unitary() {
    let config = two_wells();
    let g = config.grid;
    let psi0 = packet(&g);
    let traj = Propagator::new(&config).run(&psi0, 0.0, &[2.0, 6.0, 10.0], 0.01).unwrap();
    let n0 = state_norm(&g, &psi0);
    for n in traj.norms(&g) {
        assert!((n - n0).abs() < 1e-12 * n0);
    }
}

#[test]
fn flow_runs_backwards_to_the_start() {
    let config = two_wells();
    let g = config.grid;
    let psi0 = packet(&g);
    let prop = Propagator::new(&config);
    let fwd = prop.run(&psi0, 0.0, &[5.0], 0.01).unwrap();
    let back = prop.run(&fwd.states[0], 5.0, &[0.0], 0.01).unwrap();
    assert!(state_distance(&g, &back.states[0], &psi0) < 1e-10);
}

#[test]
fn splitting_is_second_order() {
    let config = two_wells();
    let g = config.grid;
    let psi0 = packet(&g);
    let prop = Propagator::new(&config);
    let at = |dt: f64| prop.run(&psi0, 0.0, &[4.0], dt).unwrap().states.remove(0);
    let reference = at(0.0025);
    let coarse = state_distance(&g, &at(0.04), &reference);
    let fine = state_distance(&g, &at(0.02), &reference);
    let order = (coarse / fine).log2();
    assert!((order - 2.0).abs() < 0.15, "order {order}");
}

#[test]
fn oversized_step_is_refused() {
    let config = scalar(vec![(Arc::new(PoschlTeller { depth: 2 }), TravelingCenter::new(0.0, 0.0))]);
    let err = Propagator::new(&config).run(&packet(&config.grid), 0.0, &[1.0], 0.5).unwrap_err();
    assert!(matches!(err, CtmError::Numerical(ref m) if m.contains("dt too large")), "{err}");
}

#[test]
fn wrong_component_count_is_a_config_error() {
    let config = two_wells();
    let g = config.grid;
    let two = vec![gaussian_packet(&g, 0.0, 0.0, 1.0); 2];
    assert!(matches!(Propagator::new(&config).run(&two, 0.0, &[1.0], 0.01), Err(CtmError::Config(_))));
}

#[test]
fn generalized_kernel_vector_grows_linearly() {
    let nls = CenterSpec {
        potential: PotentialSpec::new("sech_square", serde_json::json!({"amplitude": -4.0, "rate": 1.0})),
        coupling: Some(PotentialSpec::new("sech_square", serde_json::json!({"amplitude": 2.0, "rate": 1.0}))),
        v: 0.3,
        y: 0.0,
        omega: 1.0,
        gamma_phase: 0.0,
    };
    let file = ConfigFile { model: Model::Matrix, centers: vec![nls], grid: Some(GridSpec { width: 200.0, n: 1024 }) };
    let config = Config::from_file(&file).unwrap();
    let modes = ModeSet::from_config(&config).unwrap();
    let j = modes.modes.iter().position(|m| m.role == ModeRole::Generalized).expect("generalized kernel vector");
    let times: Vec<f64> = (1..=6).map(f64::from).collect();
    let traj = Propagator::new(&config).run(&modes.field(j, 0.0), 0.0, &times, 0.005).unwrap();
    let fit = generalized_mode_check(&modes, j, &traj).unwrap();
    assert!((fit.slope - 1.0).abs() < 0.02, "slope {}", fit.slope);
    assert!(fit.fit.r2 > 0.999);
}
