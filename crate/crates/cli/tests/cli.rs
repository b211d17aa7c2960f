use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use unitarity_core::classifier::{BipartiteMap, Witness, WitnessKind};
use unitarity_core::schmidt::schmidt_decompose;
use unitarity_core::{BipartiteShape, ComplexMatrix, ComplexVector, C64};

fn kit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unitarity-kit"))
        .args(args)
        .env_remove("UNITARITY_KIT_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).to_str().unwrap().to_string();
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &path]);
    let o = kit(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn pairs(v: &Value) -> ComplexVector {
    let entries: Vec<C64> = v.as_array().unwrap().iter().map(|p| C64::new(p[0].as_f64().unwrap(), p[1].as_f64().unwrap())).collect();
    ComplexVector::from_vec(entries)
}

fn load_map(path: &str) -> BipartiteMap {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let rows = v["matrix"].as_array().unwrap();
    let d = rows.len();
    let m = ComplexMatrix::from_fn(d, d, |r, c| C64::new(rows[r][c][0].as_f64().unwrap(), rows[r][c][1].as_f64().unwrap()));
    let s = v["shape"].as_array().unwrap();
    BipartiteMap::new(m, BipartiteShape::new(s[0].as_u64().unwrap() as usize, s[1].as_u64().unwrap() as usize).unwrap()).unwrap()
}

#[test]
fn malformed_json_exits_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"kind\": \"bipartite_map\", ").unwrap();
    assert_eq!(code(&kit(&["classify", path.to_str().unwrap()])), 1);
    std::fs::write(&path, r#"{"kind":"bipartite_map","shape":[2,2],"matrix":[["1e",0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#).unwrap();
    assert_eq!(code(&kit(&["classify", path.to_str().unwrap()])), 1);
    assert_eq!(code(&kit(&["classify", "/nonexistent/map.json"])), 1);
}

#[test]
fn dimension_mismatch_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.json");
    std::fs::write(&path, r#"{"kind":"bipartite_map","shape":[2,3],"matrix":[[1,0],[0,1]]}"#).unwrap();
    assert_eq!(code(&kit(&["classify", path.to_str().unwrap()])), 2);
    let state = gen(dir.path(), "bell.json", &["bell"]);
    assert_eq!(code(&kit(&["measure", &state, "--shape", "3", "3"])), 2);
}

#[test]
fn bad_arguments_exit_with_parse_code() {
    assert_eq!(code(&kit(&["gen", "local", "3"])), 1);
    assert_eq!(code(&kit(&["gen", "nonsense"])), 1);
    assert_eq!(code(&kit(&["frobnicate"])), 1);
    assert_eq!(code(&kit(&["--help"])), 0);
}

#[test]
fn help_documents_exit_codes() {
    let text = stdout(&kit(&["classify", "--help"]));
    for line in ["0  success", "1  parse", "2  dimension", "3  map does not preserve", "4  internal"] {
        assert!(text.contains(line), "missing {line:?} in\n{text}");
    }
}

#[test]
fn generated_local_map_classifies_as_local() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "local.json", &["local", "3", "3", "--seed", "11"]);
    let o = kit(&["classify", &path]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("verdict: Local\n"));
    let path = gen(dir.path(), "swap.json", &["swap_local", "2", "3", "--seed", "11"]);
    let o = kit(&["classify", &path]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("verdict: SwapLocal\n"));
    let path = gen(dir.path(), "global.json", &["unitary", "2", "2", "--seed", "11"]);
    assert_eq!(code(&kit(&["classify", &path])), 3);
}

#[test]
fn psi_at_one_over_root_two_has_one_ebit() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "psi.json", &["psi_c", "0.707106781"]);
    let o = kit(&["measure", &path, "--measure", "E"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "E = 1.000000000");
}

#[test]
fn seed_comes_from_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_unitarity-kit"));
        cmd.args(["gen", "local", "2", "2"]).args(extra).env_remove("UNITARITY_KIT_SEED");
        if let Some(s) = env {
            cmd.env("UNITARITY_KIT_SEED", s);
        }
        stdout(&cmd.output().unwrap())
    };
    assert_eq!(run(Some("5"), &[]), run(None, &["--seed", "5"]));
    assert_ne!(run(Some("5"), &[]), run(None, &[]));
    assert_eq!(run(Some("5"), &["--seed", "6"]), run(None, &["--seed", "6"]));
}

#[test]
fn json_report_parses_back_and_witness_reverifies() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "cnot.json", &["cnot"]);
    let o = kit(&["classify", &path, "--json", "--seed", "3"]);
    assert_eq!(code(&o), 3);
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["seed"], 3);
    assert_eq!(report["exit_code"], 3);
    assert_eq!(report["tolerances"]["tol"], 1e-8);
    assert_eq!(report["rng"], unitarity_core::RNG_ALGORITHM);
    assert_eq!(report["result"]["command"], "classify");
    assert_eq!(report["result"]["verdict"], "NotPreserving");

    let map = load_map(&path);
    let w = &report["result"]["witness"];
    let kind = match w["kind"].as_str().unwrap() {
        "ProductToEntangled" => WitnessKind::ProductToEntangled,
        "EntangledToProduct" => WitnessKind::EntangledToProduct,
        "NonFactorizablePhase" => WitnessKind::NonFactorizablePhase,
        "SchmidtRankChange" => WitnessKind::SchmidtRankChange,
        "KernelVector" => WitnessKind::KernelVector,
        other => panic!("unexpected witness kind {other}"),
    };
    let state = pairs(&w["state"]);
    let rebuilt = Witness::build(kind, &map, &state, 1e-8).unwrap().expect("witness still demonstrates the claim");
    assert!(rebuilt.reverify(&map, 1e-8));
    assert!((rebuilt.image - pairs(&w["image"])).norm() < 1e-12);
    let reported_rank = w["image_schmidt"].as_array().unwrap().len();
    assert_eq!(schmidt_decompose(&map.apply(&state), map.shape(), 1e-8).unwrap().rank(), reported_rank);
}

#[test]
fn local_report_includes_measure_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "local.json", &["local", "2", "2", "--seed", "2"]);
    let report: Value = serde_json::from_str(&stdout(&kit(&["classify", &path, "--json"]))).unwrap();
    let r = &report["result"];
    assert_eq!(r["verdict"], "Local");
    assert_eq!(r["e1"]["measure"], "E1");
    assert_eq!(r["e2"]["measure"], "E2");
    // Random factors with condition number up to 10 are almost surely not scaled unitaries.
    assert_eq!(r["e1"]["preserved"], false);
    assert!(r["e1"]["witness"]["after"].as_f64().is_some());
}

#[test]
fn entropy_verification_of_generated_superoperators() {
    let dir = tempfile::tempdir().unwrap();
    let u = gen(dir.path(), "u.json", &["superop_unitary", "3", "--seed", "9"]);
    let o = kit(&["verify-entropy", &u]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("verdict: UnitaryConjugation\n"));
    let t = gen(dir.path(), "t.json", &["superop_transpose", "2"]);
    assert!(stdout(&kit(&["verify-entropy", &t])).starts_with("verdict: AntiunitaryConjugation\n"));
    let d = gen(dir.path(), "d.json", &["superop_depolarize", "2", "0.5"]);
    let o = kit(&["verify-entropy", &d, "--json"]);
    assert_eq!(code(&o), 3);
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let out = report["result"]["witness"]["entropy_out"].as_f64().unwrap();
    assert!((out - 0.811278124).abs() < 1e-8);
    assert_eq!(code(&kit(&["verify-entropy", &d, "--samples", "2"])), 1);
}

#[test]
fn schmidt_of_bell_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "bell.json", &["bell"]);
    let report: Value = serde_json::from_str(&stdout(&kit(&["schmidt", &path, "--json"]))).unwrap();
    assert_eq!(report["result"]["rank"], 2);
    for c in report["result"]["coefficients"].as_array().unwrap() {
        assert!((c.as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }
}
