//! End-to-end criterion: the binary's self-check passes and the fixture
//! files round-trip with the documented exit codes.

use std::process::Command;
use std::time::{Duration, Instant};

const SELFCHECK_BUDGET: Duration = Duration::from_secs(300);
const ENTROPY_TOL: f64 = 1e-9;

fn kit(args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_unitarity-kit"))
        .args(args)
        .env_remove("UNITARITY_KIT_SEED")
        .output()
        .expect("binary runs");
    (o.status.code().expect("exited normally"), String::from_utf8(o.stdout).unwrap())
}

fn report(id: u8, name: &str, passed: bool, elapsed: Duration, detail: &str) {
    println!("[{}] criterion {id}: {name} ({:.2}s) {detail}", if passed { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
}

#[test]
fn criterion_9_cli_selfcheck_and_fixtures() {
    let start = Instant::now();
    let (code, out) = kit(&["selfcheck", "--seed", "20240601"]);
    let elapsed = start.elapsed();
    print!("{out}");
    let selfcheck_ok = code == 0 && elapsed < SELFCHECK_BUDGET && out.contains("all checks passed");

    let dir = tempfile::tempdir().unwrap();
    let path = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    let mut fixtures = Vec::new();

    let cnot = path("cnot.json");
    kit(&["gen", "cnot", "--out", &cnot]);
    let (c, _) = kit(&["classify", &cnot]);
    fixtures.push(("cnot classify exits 3", c == 3));

    let bell = path("bell.json");
    kit(&["gen", "bell", "--out", &bell]);
    let (c, out) = kit(&["measure", &bell]);
    let e = out.trim().trim_start_matches("E = ").parse::<f64>().unwrap_or(f64::NAN);
    fixtures.push(("bell E = 1", c == 0 && (e - 1.0).abs() < ENTROPY_TOL));

    for cv in ["0.6", "0.707106781", "0.9"] {
        let psi = path(&format!("psi_{cv}.json"));
        kit(&["gen", "psi_c", cv, "--out", &psi]);
        let (c, out) = kit(&["measure", &psi]);
        let e = out.trim().trim_start_matches("E = ").parse::<f64>().unwrap_or(f64::NAN);
        let x: f64 = cv.parse().unwrap();
        let ok = c == 0 && (e - h(x * x)).abs() < ENTROPY_TOL;
        fixtures.push((if cv == "0.6" { "psi(0.6) E = h(0.36)" } else if cv == "0.9" { "psi(0.9) E = h(0.81)" } else { "psi(1/sqrt2) E = 1" }, ok));
    }

    let failed: Vec<&str> = fixtures.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    let passed = selfcheck_ok && failed.is_empty();
    let detail = format!(
        "selfcheck exit {code} in {:.1}s (budget {}s); fixtures {}/{} ok{}",
        elapsed.as_secs_f64(),
        SELFCHECK_BUDGET.as_secs(),
        fixtures.len() - failed.len(),
        fixtures.len(),
        if failed.is_empty() { String::new() } else { format!(", failed: {}", failed.join(", ")) }
    );
    report(9, "command-line tool", passed, start.elapsed(), &detail);
    assert!(passed, "{detail}");
}
