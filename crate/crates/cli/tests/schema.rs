//! Every JSON output mode validates against docs/report.schema.json.

use std::process::Command;

use serde_json::Value;

fn validator() -> jsonschema::Validator {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn documents(args: &[&str]) -> Vec<Value> {
    let out = Command::new(env!("CARGO_BIN_EXE_eqa")).args(args).output().unwrap();
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn assert_valid(v: &jsonschema::Validator, docs: &[Value]) {
    assert!(!docs.is_empty());
    for d in docs {
        let errors: Vec<String> = v.iter_errors(d).map(|e| format!("{} at {}", e, e.instance_path())).collect();
        assert!(errors.is_empty(), "{errors:#?}");
    }
}

#[test]
fn outputs_validate() {
    let v = validator();
    assert_valid(
        &v,
        &documents(&[
            "invariants", "--builtin", "helicoid3", "--point", "0,1,1", "--point", "0.3,-2,4",
        ]),
    );
    // degenerate report and a critical-point error line
    assert_valid(
        &v,
        &documents(&[
            "invariants", "--expr", "x1^2*x3+x1*x2*x4+x2^2*x5", "--vars", "x1,x2,x3,x4,x5", "--point",
            "1,1,1,1,1", "--point", "0,0,0,0,0",
        ]),
    );
    assert_valid(&v, &documents(&["verify", "--suite", "flow", "--format", "json"]));
    assert_valid(
        &v,
        &documents(&[
            "flow", "--builtin", "helicoid3", "--point", "0,1,0", "--steps", "5", "--exact", "--format", "json",
        ]),
    );
    assert_valid(&v, &documents(&["sample", "--builtin", "helicoid3", "--grid", "4", "--format", "json"]));
}

#[test]
fn schema_rejects_malformed_reports() {
    let v = validator();
    let bad = serde_json::json!({"point": [0.0], "F": 1.0, "flags": {"regular_point": true}});
    assert!(!v.is_valid(&bad));
}
