//! Exit-code and file-format behavior of the command front end.

use std::fs;
use std::path::PathBuf;

use rnm_cli::run;

fn args(list: &[&str]) -> Vec<String> {
    std::iter::once("rnm".to_string())
        .chain(list.iter().map(|s| s.to_string()))
        .collect()
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("rnm-cli-{tag}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        TempDir(dir)
    }

    fn write(&self, name: &str, content: &str) -> String {
        let path = self.0.join(name);
        fs::write(&path, content).unwrap();
        path.to_string_lossy().into_owned()
    }

    fn path(&self, name: &str) -> String {
        self.0.join(name).to_string_lossy().into_owned()
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

const SPEC: &str = r#"{"atoms":[
  {"id":"a","weight":0.5,"dim":2,"norm":{"kind":"euclid"}},
  {"id":"b","weight":0.5,"dim":1,"norm":{"kind":"euclid"}}
]}"#;

#[test]
fn space_validate_good_and_bad() {
    let dir = TempDir::new("validate");
    let good = dir.write("spec.json", SPEC);
    let result = run(&args(&["space", "validate", &good]));
    assert_eq!(result.exit_code, 0);
    assert!(result.payload.contains("\"grand_stratum\": [\"a\"]"));

    let bad = dir.write(
        "bad.json",
        r#"{"atoms":[{"id":"a","weight":0.5},{"id":"b","weight":0.4}]}"#,
    );
    let result = run(&args(&["space", "validate", &bad]));
    assert_eq!(result.exit_code, 4);

    let missing = dir.path("does-not-exist.json");
    let result = run(&args(&["space", "validate", &missing]));
    assert_eq!(result.exit_code, 4);
}

#[test]
fn norm_command() {
    let dir = TempDir::new("norm");
    let spec = dir.write("spec.json", SPEC);
    let elem = dir.write("x.json", r#"{"values":{"a":[3.0,4.0],"b":[-2.0]}}"#);
    let result = run(&args(&["norm", "--space", &spec, "--element", &elem]));
    assert_eq!(result.exit_code, 0);
    assert!(result.payload.contains("\"a\": 5.0000000000000000e0"));
    assert!(result.payload.contains("\"b\": 2.0000000000000000e0"));
}

#[test]
fn ivt_command_and_error_codes() {
    let dir = TempDir::new("ivt");
    let spec = dir.write("spec.json", SPEC);
    let c = dir.write("c.json", r#"{"values":{"a":1.0,"b":8.0}}"#);
    let y1 = dir.write("y1.json", r#"{"values":{"a":-2.0,"b":-2.0}}"#);
    let y2 = dir.write("y2.json", r#"{"values":{"a":2.0,"b":2.0}}"#);
    let xi = dir.write("xi.json", r#"{"values":{"a":0.0,"b":0.0}}"#);
    let result = run(&args(&[
        "ivt",
        "--space",
        &spec,
        "--f",
        "x^3 - c",
        "--bind",
        &format!("c={c}"),
        "--y1",
        &y1,
        "--y2",
        &y2,
        "--xi",
        &xi,
        "--tol",
        "1e-9",
    ]));
    assert_eq!(result.exit_code, 0, "{:?}", result.diagnostics);
    assert!(result.payload.contains("\"a\": 1.0000000000"));
    assert!(result.payload.contains("\"b\": 2.0000000000"));

    // Expression syntax error -> 3.
    let result = run(&args(&[
        "ivt", "--space", &spec, "--f", "x +", "--y1", &y1, "--y2", &y2, "--xi", &xi, "--tol",
        "1e-9",
    ]));
    assert_eq!(result.exit_code, 3);

    // Bracket violation -> 2.
    let bad_xi = dir.write("bad_xi.json", r#"{"values":{"a":99.0,"b":0.0}}"#);
    let result = run(&args(&[
        "ivt", "--space", &spec, "--f", "x", "--y1", &y1, "--y2", &y2, "--xi", &bad_xi, "--tol",
        "1e-9",
    ]));
    assert_eq!(result.exit_code, 2);
}

#[test]
fn modulus_command_with_csv_and_convention_diagnostic() {
    let dir = TempDir::new("modulus");
    let spec = dir.write("spec.json", SPEC);
    let csv = dir.path("out.csv");
    let result = run(&args(&[
        "modulus",
        "--space",
        &spec,
        "--set",
        "b",
        "--eps",
        "1.0",
        "--variant",
        "eq",
        "--grid",
        "64",
        "--seed",
        "9",
        "--csv",
        &csv,
    ]));
    assert_eq!(result.exit_code, 0);
    assert!(result.payload.contains("\"b\": 1.0000000000000000e0"));
    assert!(result
        .diagnostics
        .iter()
        .any(|d| d.contains("empty feasible set")));
    let written = fs::read_to_string(&csv).unwrap();
    assert!(written.starts_with("atom_id,eps,variant,estimate\n"));
    assert!(written.contains("b,1.0000000000000000e0,eq,1.0000000000000000e0"));

    // eps out of range -> 2.
    let result = run(&args(&[
        "modulus",
        "--space",
        &spec,
        "--set",
        "a",
        "--eps",
        "2.5",
        "--variant",
        "def",
        "--seed",
        "9",
    ]));
    assert_eq!(result.exit_code, 2);

    // unknown atom id -> 4 (schema).
    let result = run(&args(&[
        "modulus",
        "--space",
        &spec,
        "--set",
        "zz",
        "--eps",
        "1.0",
        "--variant",
        "def",
        "--seed",
        "9",
    ]));
    assert_eq!(result.exit_code, 4);
}

#[test]
fn modulus_accepts_per_atom_eps_file() {
    let dir = TempDir::new("epsfile");
    let spec = dir.write("spec.json", SPEC);
    let eps = dir.write("eps.json", r#"{"values":{"a":0.5,"b":1.5}}"#);
    let result = run(&args(&[
        "modulus",
        "--space",
        &spec,
        "--set",
        "a,b",
        "--eps-file",
        &eps,
        "--variant",
        "def",
        "--grid",
        "128",
        "--seed",
        "2",
    ]));
    assert_eq!(result.exit_code, 0);
    assert!(result.payload.contains("\"a\": 5.0000000000000000e-1"));
    assert!(result.payload.contains("\"b\": 1.5000000000000000e0"));

    // both eps forms at once -> 2
    let result = run(&args(&[
        "modulus",
        "--space",
        &spec,
        "--set",
        "a",
        "--eps",
        "1.0",
        "--eps-file",
        &eps,
        "--variant",
        "def",
        "--seed",
        "2",
    ]));
    assert_eq!(result.exit_code, 2);
}

#[test]
fn verify_command_reports() {
    let result = run(&args(&["verify", "--suite", "cor21", "--seed", "4"]));
    assert_eq!(result.exit_code, 0);
    assert!(result.payload.contains("\"passed\": true"));
    assert!(result.diagnostics.iter().any(|d| d.contains("[pass]")));

    let result = run(&args(&["verify", "--suite", "nope", "--seed", "4"]));
    assert_eq!(result.exit_code, 2);
}

#[test]
fn lp_modulus_command() {
    let dir = TempDir::new("lp");
    let spec = dir.write("spec.json", SPEC);
    let result = run(&args(&[
        "lp-modulus",
        "--space",
        &spec,
        "--p",
        "2.0",
        "--eps",
        "1.0",
        "--samples",
        "2000",
        "--seed",
        "12",
    ]));
    assert_eq!(result.exit_code, 0);
    assert!(result.payload.contains("\"estimate\": "));

    let result = run(&args(&[
        "lp-modulus",
        "--space",
        &spec,
        "--p",
        "1.0",
        "--eps",
        "1.0",
        "--samples",
        "2000",
        "--seed",
        "12",
    ]));
    assert_eq!(result.exit_code, 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new("determinism");
    let spec = dir.write("spec.json", SPEC);
    let argv = args(&[
        "modulus",
        "--space",
        &spec,
        "--set",
        "a,b",
        "--eps",
        "0.75",
        "--variant",
        "ball",
        "--grid",
        "128",
        "--seed",
        "31",
    ]);
    let first = run(&argv);
    let second = run(&argv);
    assert_eq!(first.exit_code, 0);
    assert_eq!(first.payload, second.payload);
}
