//! Runs the `specmult` binary and checks output and exit codes.

use std::io::Write;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_specmult"))
        .args(args)
        .output()
        .expect("failed to run specmult");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn measure_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn fock_set_prints_multiplicity_set() {
    let (code, out, _) = run(&["fock-set", "--k", "2", "--max-m", "4", "--atoms", "8"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("{1, 3, 15, 105}\n"), "{out}");
}

#[test]
fn cs_min_m_reports_sequence() {
    let (code, out, _) = run(&["cs-min-m", "--k", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("m=2, sequence 1, 2"), "{out}");
    let (code, out, _) = run(&["--format", "json", "cs-min-m", "--k", "2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["sequence"][1], "4/3");
}

#[test]
fn search_exhaustion_is_an_input_error() {
    let (code, _, err) = run(&["cs-min-m", "--k", "3", "--m-cap", "4"]);
    assert_eq!(code, 2);
    assert!(err.contains("no m <= 4"), "{err}");
}

#[test]
fn malformed_fraction_exits_2() {
    let f = measure_file(r#"{"atoms":[{"weight":"0.5"}]}"#);
    let (code, out, err) = run(&[
        "multiplicity",
        "--measure",
        f.path().to_str().unwrap(),
        "--n",
        "2",
    ]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("malformed fraction"), "{err}");
}

#[test]
fn malformed_json_exits_2() {
    let f = measure_file("{\"atoms\": [");
    let (code, _, err) = run(&[
        "multiplicity",
        "--measure",
        f.path().to_str().unwrap(),
        "--n",
        "2",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("malformed JSON"), "{err}");
}

#[test]
fn cap_exceeded_exits_2() {
    let (code, _, err) = run(&[
        "--tuple-cap",
        "10",
        "multiplicity",
        "--atoms",
        "4",
        "--n",
        "2",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("exceeds cap 10"), "{err}");
}

#[test]
fn unknown_subcommand_exits_2() {
    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(err.contains("unrecognized subcommand"), "{err}");
}

#[test]
fn failed_check_exits_1_with_report() {
    // Three atoms cannot produce a product of four distinct atoms.
    let (code, out, _) = run(&[
        "--format", "json", "krot", "--k", "2", "--m", "2", "--atoms", "3",
    ]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passed"], false);
    assert!(!v["report"]["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn multiplicity_from_file_with_oracle() {
    let f = measure_file(
        r#"{"atoms":[{"weight":"1/2","generic":{"0":1}},{"weight":"1/2","rational":"1/3","generic":{"1":1}}]}"#,
    );
    let (code, out, _) = run(&[
        "--format",
        "json",
        "multiplicity",
        "--measure",
        f.path().to_str().unwrap(),
        "--n",
        "2",
        "--group",
        "symmetric",
        "--oracle",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["oracle_agrees"], true);
    assert_eq!(v["report"]["counting"]["entries"]["1/3 * g0^1 * g1^1"], 1);
}

#[test]
fn json_envelope_records_seed_and_is_deterministic() {
    let args = [
        "--format", "json", "--seed", "42", "markov", "lm-kk", "--dims", "2,3",
    ];
    let (code, first, _) = run(&args);
    let (_, second, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(first, second);
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["command"], "markov lm-kk");
    assert_eq!(v["report"]["selectors"].as_array().unwrap().len(), 4);
}

#[test]
fn markov_subcommands_pass() {
    for args in [
        vec!["markov", "round-trip"],
        vec!["markov", "incl-excl", "--dims", "2,2,3"],
        vec!["markov", "incl-excl", "--dims", "3,3", "--uniform"],
    ] {
        let (code, out, err) = run(&args);
        assert_eq!(code, 0, "{args:?}: {out}{err}");
    }
}

#[test]
fn coupling_file_round_trip() {
    let f = measure_file(
        r#"{"left":{"labels":["a","b"],"probs":["1/2","1/2"]},"right":{"labels":["u","v"],"probs":["1/2","1/2"]},"joint":[["1/3","1/6"],["1/6","1/3"]]}"#,
    );
    let (code, out, _) = run(&[
        "--format",
        "json",
        "markov",
        "round-trip",
        "--coupling",
        f.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["operator"]["matrix"][0][0], "2/3");
    // Marginals that do not match the joint matrix are rejected.
    let bad = measure_file(
        r#"{"left":{"labels":["a","b"],"probs":["1/4","3/4"]},"right":{"labels":["u","v"],"probs":["1/2","1/2"]},"joint":[["1/3","1/6"],["1/6","1/3"]]}"#,
    );
    let (code, _, _) = run(&[
        "markov",
        "round-trip",
        "--coupling",
        bad.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn spectral_subcommands_pass() {
    for args in [
        vec!["krot", "--k", "1", "--m", "3"],
        vec!["sym-krot", "--k", "2", "--m", "2"],
        vec!["cs-criterion", "--k", "2", "--m", "2", "--n", "3"],
        vec!["translate-singular", "--n", "2", "--m", "2"],
        vec!["nonsimple"],
        vec!["girsanov"],
        vec!["vproste", "--atoms", "4", "--k", "3"],
        vec![
            "multiplicity",
            "--atoms",
            "4",
            "--n",
            "4",
            "--group",
            "krot:2,2",
        ],
        vec![
            "multiplicity",
            "--atoms",
            "3",
            "--n",
            "3",
            "--group",
            "gens:1,2,0",
        ],
    ] {
        let (code, out, err) = run(&args);
        assert_eq!(code, 0, "{args:?}: {out}{err}");
    }
}

#[test]
fn translate_by_identity_is_not_singular() {
    let (code, out, _) = run(&[
        "--format",
        "json",
        "translate-singular",
        "--n",
        "2",
        "--m",
        "2",
        "--a",
        "1",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["singular"], false);
}

#[test]
fn relations_reports_designed_relation() {
    // g2 = g0·g1 (times a torsion shift of 1/2).
    let f = measure_file(
        r#"{"atoms":[{"weight":"1/3","generic":{"0":1}},{"weight":"1/3","generic":{"1":1}},{"weight":"1/3","rational":"1/2","generic":{"0":1,"1":1}}]}"#,
    );
    let (code, out, _) = run(&[
        "--format",
        "json",
        "relations",
        "--measure",
        f.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["relations"].as_array().unwrap().len(), 1);
}

#[test]
fn suite_single_criterion() {
    let (code, out, _) = run(&["suite", "--only", "4"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("[PASS]  4"), "{out}");
    let (code, _, _) = run(&["suite", "--only", "12"]);
    assert_eq!(code, 2);
}
