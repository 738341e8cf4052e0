use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn spirallab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spirallab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report on stdout")
}

fn verdict(doc: &Value, name: &str) -> String {
    doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check named {name}"))["verdict"]
        .as_str()
        .unwrap()
        .to_string()
}

fn schema_validator() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(doc: &Value) {
    let v = schema_validator();
    let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema errors: {errors:?}");
}

#[test]
fn hartogs_spirallike_writes_strict_report_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let svg = dir.path().join("r.svg");
    let run = spirallab(&[
        "spirallike",
        "--catalog",
        "hartogs-spiral(5)",
        "--samples",
        "200",
        "--tmax",
        "5",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_valid(&doc);
    assert_eq!(verdict(&doc, "strict_spirallike"), "EvidenceStrict");
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["config"]["seed"], 7);
    assert_eq!(doc["inputs"]["catalog"], "hartogs-spiral(5)");
    let picture = std::fs::read_to_string(&svg).unwrap();
    assert!(picture.contains("<svg") && picture.contains("<circle"));
}

#[test]
fn ball_hull_probe_is_separated() {
    let run = spirallab(&["hull", "--catalog", "ball(2)", "--probe", "2,0", "--degree", "4"]);
    assert_eq!(code(&run), 0);
    let doc = report(&run);
    assert_valid(&doc);
    assert!(verdict(&doc, "hull_probe[2,0]").starts_with("Separated"));
}

#[test]
fn rotation_field_is_not_stable() {
    let run = spirallab(&["stability", "--field", "iz1", "--samples", "20", "--tmax", "2"]);
    assert_eq!(code(&run), 1);
    let doc = report(&run);
    assert_valid(&doc);
    assert_eq!(doc["passed"], false);
    assert!(verdict(&doc, "spectral_stability").starts_with("Inconclusive"));
}

#[test]
fn stable_field_passes_stability() {
    let run = spirallab(&["stability", "--field", "-z1;-2z2+z1^2", "--samples", "20"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_valid(&report(&run));
}

#[test]
fn flow_agrees_with_closed_form() {
    let run = spirallab(&["flow", "--catalog", "hartogs-spiral(5)", "--point", "1, 0.5i", "--tmax", "2"]);
    assert_eq!(code(&run), 0);
    let doc = report(&run);
    assert_valid(&doc);
    assert!(doc["checks"].as_array().unwrap().iter().any(|c| c["name"] == "closed_form_agreement"));
}

#[test]
fn loewner_and_operators_reports_validate() {
    let run = spirallab(&["loewner", "--catalog", "ball(2)", "--samples", "60", "--probe", "4,4", "--u-scale", "2"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let doc = report(&run);
    assert_valid(&doc);
    assert!(verdict(&doc, "range_exhaustion[4,4]").starts_with("absorbed"));

    let run = spirallab(&["operators", "--samples", "120", "--probe", "0", "--probe", "0.5"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let doc = report(&run);
    assert_valid(&doc);
    assert_eq!(verdict(&doc, "compact_divergence"), "j0 = 6");
    assert_eq!(verdict(&doc, "no_interior_fixed_point"), "NoneFound");
}

#[test]
fn rotation_automorphism_has_fixed_point() {
    let run = spirallab(&["operators", "--auto", "rotation(1)", "--samples", "60", "--jmax", "5"]);
    assert_eq!(code(&run), 1);
    let doc = report(&run);
    assert_valid(&doc);
    assert!(verdict(&doc, "no_interior_fixed_point").starts_with("FixedPoint"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["spirallike", "--catalog", "ovoid", "--samples", "80", "--seed", "3", "--convexity"];
    let a = spirallab(&args);
    let b = spirallab(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn timing_is_opt_in() {
    let base = ["hull", "--catalog", "ball(2)", "--probe", "0.1,0"];
    let doc = report(&spirallab(&base));
    assert!(doc.get("timing").is_none());
    let mut timed = base.to_vec();
    timed.push("--timing");
    let doc = report(&spirallab(&timed));
    assert!(doc["timing"]["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert_valid(&doc);
}

#[test]
fn interior_probe_is_reported_as_failure() {
    let run = spirallab(&["hull", "--catalog", "ball(2)", "--probe", "0.1,0", "--degree", "3", "--budget", "50"]);
    assert_eq!(code(&run), 1);
    assert!(verdict(&report(&run), "hull_probe[0.1,0]").starts_with("Inconclusive"));
}

#[test]
fn usage_errors_exit_two_without_report() {
    let cases: &[&[&str]] = &[
        &["spirallike", "--catalog", "nope"],
        &["spirallike", "--catalog", "ovoid", "--spec", "x.json"],
        &["hull", "--catalog", "ball(2)"],
        &["hull", "--catalog", "ball(2)", "--probe", "1,2,3"],
        &["stability", "--field", "z1+"],
        &["flow", "--field", "-z1"],
        &["spirallike", "--catalog", "ovoid", "--tol", "-1"],
        &["spirallike", "--catalog", "ovoid", "--proj", "re7,re1"],
        &["frobnicate"],
    ];
    for args in cases {
        let run = spirallab(args);
        assert_eq!(code(&run), 2, "{args:?}");
        assert!(run.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn non_holomorphic_field_is_rejected() {
    let run = spirallab(&["stability", "--field", "conj(z1)"]);
    assert_eq!(code(&run), 2);
}

#[test]
fn spec_file_round_trips_through_catalog_show() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let show = spirallab(&["catalog", "show", "hartogs-spiral(5)", "--out", spec.to_str().unwrap()]);
    assert_eq!(code(&show), 0);
    let from_spec = spirallab(&["spirallike", "--spec", spec.to_str().unwrap(), "--samples", "60"]);
    assert_eq!(code(&from_spec), 0, "{}", String::from_utf8_lossy(&from_spec.stderr));
    let doc = report(&from_spec);
    assert_valid(&doc);
    assert_eq!(verdict(&doc, "strict_spirallike"), "EvidenceStrict");
}

#[test]
fn spec_maps_drive_the_loewner_chain() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let doc = serde_json::json!({
        "domain": {"dim": 1, "defining": ["z1*conj(z1)-1"], "bound": 1.0},
        "field": {"components": ["-z1"]},
        "maps": {"f": ["z1/(1-0.2*z1)"], "f_inv": ["z1/(1+0.2*z1)"]}
    });
    std::fs::write(&spec, doc.to_string()).unwrap();
    let run = spirallab(&["loewner", "--spec", spec.to_str().unwrap(), "--samples", "40", "--u-scale", "2"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let rep = report(&run);
    assert_valid(&rep);
    assert_eq!(rep["inputs"]["maps"]["f"][0], "z1/(1-0.2*z1)");
}

#[test]
fn catalog_list_and_show() {
    let list = spirallab(&["catalog", "list"]);
    assert_eq!(code(&list), 0);
    let entries: Value = serde_json::from_slice(&list.stdout).unwrap();
    assert!(entries.as_array().unwrap().len() >= 3);
    let show = spirallab(&["catalog", "show", "ball(2)"]);
    assert_eq!(code(&show), 0);
    let spec: Value = serde_json::from_slice(&show.stdout).unwrap();
    assert_eq!(spec["domain"]["dim"], 2);
    assert_eq!(code(&spirallab(&["catalog", "show", "nope"])), 2);
}
