use std::sync::{Arc, OnceLock};

use ctm_core::dispersive::{recursions, DispersiveMap};
use ctm_core::distorted::{kappas, to_coeff};
use ctm_core::evolution::Propagator;
use ctm_core::potentials::{gaussian_packet, Config, PoschlTeller, Potential, TravelingCenter, Zero};
use ctm_core::{Field, Grid, C64};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::symmetric(200.0, 1024).unwrap()
}

fn map_for(centers: Vec<(Arc<dyn Potential>, TravelingCenter)>) -> (Config, DispersiveMap) {
    let config = Config::scalar(grid(), centers).unwrap();
    let map = DispersiveMap::new(&config, recursions().get("matched").unwrap()).unwrap();
    (config, map)
}

fn pt_pair() -> &'static DispersiveMap {
    static MAP: OnceLock<DispersiveMap> = OnceLock::new();
    MAP.get_or_init(|| {
        let p: Arc<dyn Potential> = Arc::new(PoschlTeller { depth: 1 });
        map_for(vec![(p.clone(), TravelingCenter::new(0.5, 10.0)), (p, TravelingCenter::new(-0.5, -10.0))]).1
    })
}

fn dist(grid: &Grid, a: &[C64], b: &[C64]) -> f64 {
    let d: Field = a.iter().zip(b).map(|(x, y)| x - y).collect();
    grid.norm_x(&d)
}

fn bump(grid: &Grid, k0: f64, re: f64, im: f64) -> Field {
    kappas(grid).iter().map(|&k| C64::new(re, im) * (-(k - k0).powi(2) / 0.3).exp()).collect()
}

#[test]
fn free_center_reproduces_free_gaussian() {
    let (_, map) = map_for(vec![(Arc::new(Zero), TravelingCenter::new(0.0, 0.0))]);
    let g = map.grid;
    let psi0 = gaussian_packet(&g, 0.0, 0.0, 1.0);
    let phi = to_coeff(&g, &psi0);
    assert!(dist(&g, &map.evaluate_s(&phi, 0.0).unwrap(), &psi0) < 1e-12);
    let t = 2.0;
    let a = C64::new(1.0, t);
    let norm = (2.0 * std::f64::consts::PI).powf(-0.25);
    let exact = g.sample(|x| norm / a.sqrt() * (-x * x / (4.0 * a)).exp());
    assert!(dist(&g, &map.evaluate_s(&phi, t).unwrap(), &exact) < 1e-10);
}

#[test]
fn moving_center_term_solves_the_equation() {
    let p: Arc<dyn Potential> = Arc::new(PoschlTeller { depth: 1 });
    let (config, map) = map_for(vec![(p, TravelingCenter::new(0.5, -5.0))]);
    let g = map.grid;
    let phi = bump(&g, 0.8, 1.0, 0.0);
    let start = map.evaluate_s(&phi, 0.0).unwrap();
    let traj = Propagator::new(&config).run(&[start], 0.0, &[4.0], 0.005).unwrap();
    let direct = &traj.states[0][0];
    let err = dist(&g, direct, &map.evaluate_s(&phi, 4.0).unwrap()) / g.norm_x(direct);
    assert!(err < 1e-4, "{err:e}");
}

#[test]
fn adjoint_passes_dot_test() {
    let map = pt_pair();
    let g = map.grid;
    for t in [0.0, 3.0] {
        let phi = bump(&g, 0.4, 0.6, -0.3);
        let f = gaussian_packet(&g, 4.0, -0.7, 2.0);
        let lhs = g.inner_x(&map.evaluate_s(&phi, t).unwrap(), &f);
        let rhs = g.inner_k(&phi, &map.evaluate_s_adjoint(&f, t));
        assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()), "t = {t}: {lhs} vs {rhs}");
    }
}

#[test]
fn zero_potentials_leave_profiles_unchanged() {
    let z: Arc<dyn Potential> = Arc::new(Zero);
    let (_, map) = map_for(vec![
        (z.clone(), TravelingCenter::new(1.0, 5.0)),
        (z.clone(), TravelingCenter::new(0.0, 0.0)),
        (z, TravelingCenter::new(-1.0, -5.0)),
    ]);
    let phi = bump(&map.grid, 0.2, 1.0, 1.0);
    let profile = map.build_profile_sequence(&phi);
    for p in &profile.phis {
        assert!(p.iter().zip(&phi).all(|(a, b)| (a - b).norm() < 1e-14));
    }
}

#[test]
fn pair_round_trip_recovers_profile_and_weights() {
    let map = pt_pair();
    let g = map.grid;
    let phi = bump(&g, 0.3, 1.0, 0.5);
    let weights = [C64::new(0.4, -0.2), C64::new(0.0, 0.9)];
    let mut f = map.evaluate_s(&phi, 1.0).unwrap();
    for (md, w) in map.modes().iter().zip(&weights) {
        for (o, z) in f.iter_mut().zip(map.mode_field(md, 1.0)) {
            *o += w * z;
        }
    }
    let d = map.decompose(&f, 1.0, 1e-12, 60).unwrap();
    let diff: Field = d.phi.iter().zip(&phi).map(|(a, b)| a - b).collect();
    assert!(g.norm_k(&diff) / g.norm_k(&phi) < 1e-6);
    assert_eq!(d.modes.len(), 2);
    for ((_, a), w) in d.modes.iter().zip(&weights) {
        assert!((a - w).norm() < 1e-6, "{a} vs {w}");
    }
}

#[test]
fn recursion_registry_lists_both_choices() {
    let r = recursions();
    let mut names = r.names();
    names.sort_unstable();
    assert_eq!(names, ["matched", "printed"]);
    assert!(r.get("sideways").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn map_is_linear(k0 in -1.0f64..1.0, k1 in -1.0f64..1.0, a in -2.0f64..2.0, b in -2.0f64..2.0, t in 0.0f64..5.0) {
        let map = pt_pair();
        let g = map.grid;
        let (p, q) = (bump(&g, k0, 1.0, 0.0), bump(&g, k1, 0.0, 1.0));
        let combo: Field = p.iter().zip(&q).map(|(x, y)| a * x + b * y).collect();
        let sp = map.evaluate_s(&p, t).unwrap();
        let sq = map.evaluate_s(&q, t).unwrap();
        let expected: Field = sp.iter().zip(&sq).map(|(x, y)| a * x + b * y).collect();
        let got = map.evaluate_s(&combo, t).unwrap();
        prop_assert!(dist(&g, &got, &expected) <= 1e-11 * (1.0 + g.norm_x(&expected)));
    }
}
