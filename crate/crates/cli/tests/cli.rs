use std::process::{Command, Output};

use serde_json::Value;

fn eqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqa"))
        .args(args)
        .env_remove("EQA_SEED")
        .output()
        .expect("eqa runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_lines(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn helicoid_invariants() {
    let o = eqa(&["invariants", "--builtin", "helicoid3", "--point", "0,1,1"]);
    assert_eq!(code(&o), 0);
    let r = &json_lines(&o)[0];
    assert!((r["Ucal"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert!(r["kappa_eq"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(r["flags"]["nondegenerate"], true);
}

#[test]
fn gordan_noether_is_degenerate() {
    let o = eqa(&[
        "invariants",
        "--expr",
        "x1^2*x3+x1*x2*x4+x2^2*x5",
        "--vars",
        "x1,x2,x3,x4,x5",
        "--point",
        "1,1,1,1,1",
    ]);
    assert_eq!(code(&o), 2);
    let r = &json_lines(&o)[0];
    assert_eq!(r["flags"]["nondegenerate"], false);
    assert_eq!(r["gauss_kronecker"].as_f64().unwrap(), 0.0);
    assert!(r.get("nm").is_none());
}

#[test]
fn symdet_idempotent_token() {
    let o = eqa(&["invariants", "--builtin", "symdet", "--param", "2", "--point", "E0"]);
    assert_eq!(code(&o), 0);
    let k = json_lines(&o)[0]["kappa_eq"].as_f64().unwrap();
    assert!((k - 2f64.powf(-0.75)).abs() < 1e-9);
}

#[test]
fn critical_point_keeps_order_and_exits_2() {
    let o = eqa(&[
        "invariants", "--expr", "x1^2 + x2^2", "--vars", "x1,x2", "--point", "1,0", "--point", "0,0",
        "--point", "0,-2",
    ]);
    assert_eq!(code(&o), 2);
    let rows = json_lines(&o);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["point"][0], 1.0);
    assert_eq!(rows[1]["error"]["kind"], "critical_point");
    assert_eq!(rows[2]["point"][1], -2.0);
}

#[test]
fn usage_errors_exit_1() {
    let cases: &[&[&str]] = &[
        &["invariants", "--expr", "x1 +", "--vars", "x1,x2", "--point", "1,1"],
        &["invariants", "--builtin", "helicoid3", "--point", "1,1"],
        &["invariants", "--builtin", "helicoid3", "--expr", "x1", "--point", "1,1,1"],
        &["invariants", "--builtin", "nosuch", "--point", "1"],
        &["invariants", "--builtin", "helicoid3", "--point", "0,1,1", "--tol-regular", "-1"],
        &["invariants", "--builtin", "helicoid3"],
        &["verify", "--suite", "nosuch"],
        &["flow", "--builtin", "helicoid3", "--point", "0,1,0", "--steps", "0"],
        &["sample", "--builtin", "helicoid3", "--grid", "3x3x3"],
        &["nosuch"],
    ];
    for args in cases {
        assert_eq!(code(&eqa(args)), 1, "{args:?}");
    }
}

#[test]
fn syntax_error_reports_offset() {
    let o = eqa(&["invariants", "--expr", "x1 + * x2", "--vars", "x1,x2", "--point", "1,1"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("byte 5"));
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&eqa(&["--help"])), 0);
    assert_eq!(code(&eqa(&["flow", "--help"])), 0);
}

#[test]
fn csv_invariants_header() {
    let o = eqa(&["invariants", "--builtin", "helicoid3", "--point", "0,1,1", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "u,x,y,F,H,Ucal,kappa_eq,gauss_kronecker,regular_point,nondegenerate,Ucal_sign,nm_u,nm_x,nm_y,error"
    );
    assert_eq!(lines.count(), 1);
}

#[test]
fn points_file_and_out() {
    let dir = std::env::temp_dir().join(format!("eqa-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let pts = dir.join("points.txt");
    std::fs::write(&pts, "# helicoid points\n0,1,1\n\n1.5,-2,0.5\n").unwrap();
    let out = dir.join("out.jsonl");
    let o = eqa(&[
        "invariants", "--builtin", "helicoid3", "--points-file", pts.to_str().unwrap(), "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sample_helicoid_grid() {
    let o = eqa(&["sample", "--builtin", "helicoid3", "--t", "0", "--grid", "50x50"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["u", "x", "y", "F"]);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let v: Vec<f64> = rec.iter().map(|s| s.parse().unwrap()).collect();
        // recheck the level independently of the reported F
        let f = v[1] * v[0].sin() + v[2] * v[0].cos();
        assert!(f.abs() <= 1e-9);
        rows += 1;
    }
    assert_eq!(rows, 2500);
}

#[test]
fn sample_genhel_level_one() {
    let o = eqa(&["sample", "--builtin", "genhel", "--param", "x1*x2", "--t", "1", "--grid", "3"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    let mut rows = 0;
    for rec in rdr.records() {
        let f: f64 = rec.unwrap()[5].parse().unwrap();
        assert!((f - 1.0).abs() <= 1e-9);
        rows += 1;
    }
    assert_eq!(rows, 81);
}

#[test]
fn sample_uncalibrated_exits_2() {
    let o = eqa(&[
        "sample", "--builtin", "ruled", "--param", "sin(x1)*cos(x2); sin(x1)*sin(x2); cos(x1)",
    ]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
}

#[test]
fn flow_helicoid_linearity() {
    let o = eqa(&[
        "flow", "--builtin", "helicoid3", "--point", "0,1,0", "--t-end", "1", "--steps", "100",
        "--format", "json",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["report"]["starts"][0]["linearity"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["trajectories"][0]["times"].as_array().unwrap().len(), 101);

    let o = eqa(&["flow", "--builtin", "helicoid3", "--point", "0,1,0", "--steps", "100"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("linearity="));
    assert_eq!(stdout(&o).lines().next().unwrap(), "start,t,u,x,y,F");
    assert_eq!(stdout(&o).lines().count(), 102);
}

#[test]
fn flow_exact_genhel() {
    let o = eqa(&[
        "flow", "--builtin", "genhel", "--param", "x1*x2", "--point", "0.3,0.2,1,0.5,-0.4", "--exact",
        "--steps", "20", "--t-end", "0.5", "--format", "json",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["exact_max_error"][0].as_f64().unwrap() <= 1e-6);
}

#[test]
fn flow_degenerate_start_exits_2() {
    let o = eqa(&[
        "flow", "--expr", "x1^2*x3+x1*x2*x4+x2^2*x5", "--vars", "x1,x2,x3,x4,x5", "--point", "1,1,1,1,1",
        "--steps", "4",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_identities_passes_and_is_deterministic() {
    let a = eqa(&["verify", "--suite", "identities", "--seed", "7", "--format", "csv"]);
    assert_eq!(code(&a), 0);
    let b = Command::new(env!("CARGO_BIN_EXE_eqa"))
        .args(["verify", "--suite", "identities", "--format", "csv", "--sequential"])
        .env("EQA_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("criterion,label,value,bound,kind,pass\n"));
}

#[test]
fn verify_examples_json() {
    let o = eqa(&["verify", "--suite", "examples", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], true);
    let ids: Vec<u64> = v["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert!(ids.contains(&3) && ids.contains(&11));
}

#[test]
fn invariants_output_is_deterministic() {
    let args = [
        "invariants", "--builtin", "genhel", "--param", "sin(x1)+x2^2/2", "--point", "0.1,0.2,0.3,0.4,0.5",
        "--point", "-0.7,1.1,0.2,-0.3,2",
    ];
    assert_eq!(eqa(&args).stdout, eqa(&args).stdout);
}
