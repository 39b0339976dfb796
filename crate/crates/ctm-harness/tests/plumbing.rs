use std::fs;

use ctm_core::CtmError;
use ctm_harness::{experiments, meta, run_suite, suite, suite_names, Context, Outcome, Table};
use serde_json::{json, Value};

#[test]
fn table_csv_is_fixed_format() {
    let mut t = Table::new(&["t", "value"]);
    t.push(vec![1.0, 0.1]);
    t.push(vec![2.0, f64::NAN]);
    assert_eq!(t.to_csv(), "t,value\n1.000000000000e0,1.000000000000e-1\n2.000000000000e0,NaN\n");
    assert_eq!(t.column("value").unwrap()[0], 0.1);
    assert!(t.column("missing").is_none());
}

#[test]
fn verdict_has_fixed_keys_and_files() {
    let mut o = Outcome::new("demo", Table::new(&["x"]));
    o.fitted("slope", 1.5).fitted("bad", f64::INFINITY).tolerance("slope_max", 2.0).note("a note");
    o.pass = true;
    let v = o.verdict_json();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["experiment", "fitted", "pass", "tolerances"]);
    assert_eq!(v["fitted"]["bad"], Value::Null);
    let dir = tempfile::tempdir().unwrap();
    let written = o.write(dir.path(), &json!({"experiment": "demo"})).unwrap();
    assert!(written.ends_with("results/demo"));
    for f in ["metrics.csv", "verdict.json", "meta.json"] {
        assert!(written.join(f).exists(), "{f}");
    }
    let m: Value = serde_json::from_str(&fs::read_to_string(written.join("meta.json")).unwrap()).unwrap();
    assert_eq!(m["notes"], json!(["a note"]));
}

#[test]
fn failed_outcome_records_error() {
    let o = Outcome::failed("demo", "went wrong");
    assert!(!o.pass);
    assert_eq!(o.verdict_json()["fitted"]["error"], json!("went wrong"));
}

#[test]
fn acceptance_suite_covers_each_criterion_once() {
    let list = suite("acceptance").unwrap();
    let criteria: Vec<usize> = list.iter().map(|e| e.criterion().unwrap()).collect();
    assert_eq!(criteria, (1..=13).collect::<Vec<_>>());
    for name in suite_names() {
        assert!(!suite(name).unwrap().is_empty(), "{name}");
    }
    assert_eq!(suite("bound_state").unwrap().len(), 1);
}

#[test]
fn unknown_suite_is_a_config_error() {
    match suite("everything") {
        Err(CtmError::Config(m)) => assert!(m.contains("acceptance") && m.contains("bound_state"), "{m}"),
        other => panic!("expected config error, got {:?}", other.map(|l| l.len())),
    }
}

#[test]
fn meta_is_reproducible() {
    let reg = experiments();
    let e = reg.get("product_bound").unwrap();
    let ctx = Context::default();
    assert_eq!(meta(e.as_ref(), &ctx), meta(e.as_ref(), &ctx));
    assert_eq!(meta(e.as_ref(), &ctx)["criterion"], json!(7));
}

#[test]
fn config_suite_without_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let outcomes = run_suite("config", &Context::default(), dir.path(), 2).unwrap();
    assert_eq!(outcomes.len(), 2);
    assert!(outcomes.iter().all(|o| !o.pass));
    assert!(dir.path().join("results/config_decay/verdict.json").exists());
}
