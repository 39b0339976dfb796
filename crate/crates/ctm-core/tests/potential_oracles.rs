use ctm_core::potentials::{
    moving_matrix_entries, sample_potential, Config, Gaussian, MatrixPotential, PhaseConvention, PoschlTeller,
    Potential, PotentialSpec, TravelingCenter, Zero,
};
use ctm_core::{Grid, C64};
use serde_json::json;
use std::sync::Arc;

#[test]
fn closed_form_samples() {
    let grid = Grid::symmetric(40.0, 512).unwrap();
    assert!(sample_potential(&Zero, &grid).iter().all(|z| *z == C64::new(0.0, 0.0)));
    assert_eq!(PoschlTeller { depth: 1 }.value(0.0), -2.0);
    assert!((PoschlTeller { depth: 1 }.value(0.7) + 2.0 / 0.7f64.cosh().powi(2)).abs() < 1e-15);
    assert_eq!(Gaussian { amplitude: 1.0, width: 1.0 }.value(0.0), 1.0);
    let pt = sample_potential(&PoschlTeller { depth: 2 }, &grid);
    let mid = grid.nearest_node(0.0);
    assert_eq!(pt[mid].re, -6.0);
    assert_eq!(pt[mid + 17], pt[mid - 17]);
}

#[test]
fn library_potentials_vanish_outside_their_radius() {
    for spec in [
        PotentialSpec::new("poschl_teller", json!({"depth": 2})),
        PotentialSpec::new("gaussian", json!({"amplitude": 0.3, "width": 1.0})),
        PotentialSpec::new("sech_square", json!({"amplitude": -1.5, "rate": 0.5})),
    ] {
        let v = spec.build().unwrap();
        let cap = 25.0 / v.decay_rate();
        for i in 0..200 {
            let x = cap + i as f64 * 0.5;
            assert!(v.value(x).abs() < 1e-8, "{} at {x}", v.label());
        }
    }
}

#[test]
fn unknown_family_is_a_config_error() {
    let err = PotentialSpec::new("morse", json!({})).build().unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("poschl_teller"));
}

#[test]
fn table_family_validates_decay() {
    let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.2).collect();
    let good: Vec<f64> = xs.iter().map(|x| -(-x).exp()).collect();
    let v = PotentialSpec::new("table", json!({"x": xs, "values": good, "gamma": 1.0})).build().unwrap();
    assert!((v.value(-1.0) + (-1.0f64).exp()).abs() < 1e-2);
    let bad: Vec<f64> = xs.iter().map(|x| 1.0 / (1.0 + x)).collect();
    assert!(PotentialSpec::new("table", json!({"x": xs, "values": bad, "gamma": 1.0})).build().is_err());
}

fn nls_like() -> MatrixPotential {
    MatrixPotential {
        u: Arc::new(Gaussian { amplitude: -1.0, width: 1.0 }),
        w: Arc::new(Gaussian { amplitude: 0.5, width: 1.0 }),
        omega: 1.0,
    }
}

#[test]
fn moving_matrix_potential_structure() {
    let p = nls_like();
    let rest = TravelingCenter { v: 0.0, y: 0.0, omega: 1.0, gamma_phase: 0.0 };
    let e = moving_matrix_entries(&p, &rest, PhaseConvention::Literal, 0.0, 0.3);
    let (u, w) = (p.u.value(0.3), p.w.value(0.3));
    assert!((e[0] - u).norm() < 1e-15 && (e[1] + w).norm() < 1e-15);
    assert!((e[2] - w).norm() < 1e-15 && (e[3] + u).norm() < 1e-15);

    let moving = TravelingCenter { v: 2.0, y: 0.0, omega: 1.0, gamma_phase: 0.0 };
    let x = 0.4;
    assert!((PhaseConvention::Literal.theta(&moving, 1.0, x) - (5.0 + 4.0 * x)).abs() < 1e-14);
    let e = moving_matrix_entries(&p, &moving, PhaseConvention::Literal, 1.0, x);
    let expected = -C64::from_polar(1.0, 5.0 + 4.0 * x) * p.w.value(x - 2.0);
    assert!((e[1] - expected).norm() < 1e-14);
    for conv in [PhaseConvention::Literal, PhaseConvention::Galilean] {
        let e = moving_matrix_entries(&p, &moving, conv, 1.3, -0.2);
        assert!((e[0] + e[3]).norm() < 1e-15);
    }
    let decoupled = MatrixPotential { u: p.u.clone(), w: Arc::new(Zero), omega: 1.0 };
    let e = moving_matrix_entries(&decoupled, &moving, PhaseConvention::Galilean, 1.0, 2.5);
    assert_eq!(e[1], C64::new(0.0, 0.0));
    assert_eq!(e[0].re, decoupled.u.value(0.5));
}

#[test]
fn config_json_round_trip_and_validation() {
    let text = r#"{"model":"scalar","centers":[
        {"potential":{"family":"poschl_teller","params":{"depth":1}},"v":1.0,"y":10.0},
        {"potential":{"family":"gaussian","params":{"amplitude":0.3,"width":1.0}},"v":-1.0,"y":-10.0}]}"#;
    let c = Config::from_json(text).unwrap();
    assert_eq!(c.m(), 2);
    assert_eq!(c.separation(), 20.0);
    assert_eq!(c.velocity_gap(), 2.0);
    let unordered = text.replace("\"v\":1.0", "\"v\":-3.0");
    assert!(Config::from_json(&unordered).unwrap_err().is_config());
    let err = Config::from_json("{\"model\": \"scalar\",\n \"centers\": [}").unwrap_err();
    assert!(err.to_string().contains("line 2"));
}
