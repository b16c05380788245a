use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affsurf")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn catalog_lists_both_types() {
    let a = run(&["catalog", "--type", "A"]);
    assert_eq!(code(&a), 0);
    assert_eq!(json(&a).as_array().unwrap().len(), 15);
    let b = run(&["catalog", "--type", "B"]);
    assert_eq!(json(&b).as_array().unwrap().len(), 14);
    let one = json(&run(&["catalog", "--family", "A.M24", "--c", "2"]));
    assert_eq!(one[0]["id"], "A.M24");
    assert!(one[0]["instance"].is_object());
}

#[test]
fn guard_violation_is_a_usage_error() {
    let out = run(&["verify", "A.M24", "--c", "0"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("c"));
    assert_eq!(code(&run(&["geodesic", "A.M36", "--c", "-0.5", "--init", "0,0,1,0"])), 2);
    assert_eq!(code(&run(&["table", "--theorem", "9.9"])), 2);
    assert_eq!(code(&run(&["verify"])), 2);
}

#[test]
fn verify_single_model() {
    let out = run(&["verify", "A.M12", "--a1", "2", "--a2", "3"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v[0]["pass"], true);
}

#[test]
fn m26_geodesic_blows_up_at_one() {
    let v = json(&run(&["geodesic", "A.M26", "--init", "0,0,1,1", "--T", "5"]));
    assert_eq!(v["forward"]["kind"], "blowup");
    let lo = v["forward"]["bracket"][0].as_f64().unwrap();
    let hi = v["forward"]["bracket"][1].as_f64().unwrap();
    assert!(lo <= 1.0 && 1.0 <= hi && hi - lo <= 1e-3);
    assert_eq!(v["escaped"], true);
}

#[test]
fn n13_flow_escapes_backward() {
    let v = json(&run(&["flow", "B.N13p", "--init", "1,-1", "--T", "10"]));
    assert_eq!(v["forward"]["kind"], "reached-horizon");
    assert_eq!(v["backward"]["kind"], "blowup");
    let lo = v["backward"]["bracket"][0].as_f64().unwrap();
    let hi = v["backward"]["bracket"][1].as_f64().unwrap();
    assert!(lo <= -1.0 && -1.0 <= hi);
}

#[test]
fn csv_and_svg_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("g.csv");
    let svg = dir.path().join("g.svg");
    let out = run(&[
        "geodesic",
        "A.M56",
        "--init",
        "0,0,1,0.5",
        "--T",
        "2",
        "--csv",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x1,x2,v1,v2");
    let direct = fs::read_to_string(&svg).unwrap();
    assert!(direct.starts_with("<svg") && direct.contains("<polyline"));

    let again = dir.path().join("h.svg");
    assert_eq!(code(&run(&["plot", "--csv", csv.to_str().unwrap(), "--svg", again.to_str().unwrap()])), 0);
    assert_eq!(fs::read_to_string(&again).unwrap(), direct);

    let fcsv = dir.path().join("f.csv");
    run(&["flow", "B.N33", "--init", "1,1", "--T", "1", "--csv", fcsv.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(&fcsv).unwrap().lines().next().unwrap(), "t,x1,x2");
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["geodesic", "A.M44", "--c", "-0.5", "--init", "0.1,0.2,0.3,-1"][..],
        &["flatten", "A.M54", "--c", "2"][..],
        &["table", "--theorem", "1.7"][..],
    ] {
        assert_eq!(run(args).stdout, run(args).stdout, "{args:?}");
    }
}

#[test]
fn unwritable_path_is_an_io_error() {
    let out = run(&["geodesic", "A.M06", "--init", "0,0,1,0", "--T", "1", "--csv", "/nonexistent/dir/out.csv"]);
    assert_eq!(code(&out), 3);
    let out = run(&["plot", "--csv", "/nonexistent/in.csv", "--svg", "/tmp/x.svg"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn flatten_reports_type_a_only() {
    let v = json(&run(&["flatten", "A.M44", "--c", "0"]));
    assert_eq!(v["qe_sign"], "+");
    assert_eq!(code(&run(&["flatten", "B.N33"])), 2);
}
