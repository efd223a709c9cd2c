mod common;

use common::*;
use serde_json::json;

fn sample() -> serde_json::Value {
    json!({
        "kind": "B",
        "confidence": 0.95,
        "N": 3600.0,
        "epsilon": 0.054,
        "sigma": 1.0,
        "radius": 0.054,
        "estimate": [[[0.5, 0.0], [0.1, -0.2]], [[0.1, 0.2], [0.5, 0.0]]],
        "semiaxes": [{ "length": 0.13, "multiplicity": 3 }, { "length": 0.05, "multiplicity": 1 }],
    })
}

#[test]
fn schema_accepts_a_well_formed_report() {
    let schema = read_json(&schema_path());
    validate(&schema, &sample()).unwrap();
}

#[test]
fn schema_rejects_malformed_reports() {
    let schema = read_json(&schema_path());
    let mut missing = sample();
    missing.as_object_mut().unwrap().remove("radius");
    let mut bad_kind = sample();
    bad_kind["kind"] = json!("Z");
    let mut bad_entry = sample();
    bad_entry["estimate"][0][0] = json!([0.5]);
    let mut bad_conf = sample();
    bad_conf["confidence"] = json!(1.0);
    let mut bad_mult = sample();
    bad_mult["semiaxes"][0]["multiplicity"] = json!(1.5);
    let mut extra = sample();
    extra["surprise"] = json!(true);
    for (name, v) in [
        ("missing", missing),
        ("kind", bad_kind),
        ("entry", bad_entry),
        ("confidence", bad_conf),
        ("multiplicity", bad_mult),
        ("extra", extra),
    ] {
        assert!(validate(&schema, &v).is_err(), "{name} accepted");
    }
}
