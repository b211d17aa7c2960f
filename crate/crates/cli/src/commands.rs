use std::fmt::Write as _;
use std::path::Path;

use unitarity_core::acceptance;
use unitarity_core::classifier::{self, BipartiteMap};
use unitarity_core::quantitative::{self, check_verdict, LocalFrames};
use unitarity_core::schmidt::{measure_e1, measure_e2, schmidt_decompose};
use unitarity_core::{
    analyze, classify, AnalyzeConfig, BipartiteShape, ClassifierConfig, ComplexMatrix, ComplexVector, Generator, Measure,
    PureState, QualitativeKind, SingleSystemKind, Superoperator, C64,
};

use crate::exit::{CliError, ExitCode};
use crate::mapfile::MapFile;
use crate::report::*;

/// What a command produced: the exit status, a report and its plain-text rendering.
pub struct Outcome {
    pub code: ExitCode,
    pub report: Report,
    pub text: String,
}

impl Outcome {
    pub fn render(&self, json: bool) -> String {
        if json {
            self.report.to_json()
        } else {
            self.text.clone()
        }
    }
}

fn c(z: C64) -> String {
    format!("{:.9}{:+.9}i", z.re, z.im)
}

fn reals(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.9}")).collect();
    format!("[{}]", parts.join(", "))
}

fn vector_text(v: &ComplexVector) -> String {
    let parts: Vec<String> = v.iter().map(|z| c(*z)).collect();
    format!("[{}]", parts.join(", "))
}

fn matrix_text(out: &mut String, name: &str, m: &ComplexMatrix) {
    let _ = writeln!(out, "{name} =");
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|k| c(m[(r, k)])).collect();
        let _ = writeln!(out, "  [{}]", row.join("  "));
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    pub tol: f64,
    pub parallel_tol: f64,
    pub spot_checks: usize,
    pub seed: u64,
}

pub fn run_classify(map: &BipartiteMap, opts: ClassifyOptions) -> Result<Outcome, CliError> {
    let config = ClassifierConfig { tol: opts.tol, parallel_tol: opts.parallel_tol, spot_checks: opts.spot_checks, seed: opts.seed };
    let verdict = classify(map, &config)?;
    let e1 = check_verdict(&verdict, Measure::E1, opts.tol)?;
    let e2 = check_verdict(&verdict, Measure::E2, opts.tol)?;
    let shape = map.shape();
    let code = if verdict.is_preserving() { ExitCode::Ok } else { ExitCode::NotPreserving };

    let mut text = String::new();
    let _ = writeln!(text, "verdict: {:?}", verdict.kind);
    let _ = writeln!(text, "shape: {shape} -> {}", verdict.output_shape);
    if let Some(err) = verdict.reconstruction_error {
        let _ = writeln!(text, "reconstruction error: {err:.3e}");
    }
    if let (Some(a), Some(b)) = (&verdict.a, &verdict.b) {
        matrix_text(&mut text, "A", a);
        matrix_text(&mut text, "B", b);
    }
    for q in [&e1, &e2].into_iter().flatten() {
        let _ = write!(text, "{:?}: {}", q.measure, if q.preserved { "preserved" } else { "not preserved" });
        let _ = writeln!(text, " (lambda {}, mu {})", reals(&q.spectra.lambdas), reals(&q.spectra.mus));
        if let Some(w) = &q.witness {
            let _ = writeln!(text, "  witness c = {:.9}: {:.9} -> {:.9}", w.c, w.before, w.after);
        }
    }
    if let Some(w) = &verdict.witness {
        let _ = writeln!(text, "witness: {:?}", w.kind);
        let _ = writeln!(text, "  state: {}", vector_text(&w.state));
        let _ = writeln!(text, "  image: {}", vector_text(&w.image));
        let _ = writeln!(text, "  input Schmidt coefficients: {}", reals(&w.input_coefficients));
        let _ = writeln!(text, "  image Schmidt coefficients: {}", reals(&w.image_coefficients));
        if let Some(comp) = &w.companion {
            let _ = writeln!(text, "  companion {:?}: {}", comp.kind, vector_text(&comp.state));
        }
    }

    let body = ReportBody::Classify(ClassifyReport::new([shape.n, shape.m], &verdict, e1.as_ref(), e2.as_ref()));
    let report = Report::new(
        opts.seed,
        &[("tol", opts.tol), ("parallel_tol", opts.parallel_tol), ("spot_checks", opts.spot_checks as f64)],
        code.code(),
        body,
    );
    Ok(Outcome { code, report, text })
}

pub fn run_verify_entropy(s: &Superoperator, samples: Option<usize>, seed: u64, tol: f64) -> Result<Outcome, CliError> {
    let d = s.dim();
    let used = samples.unwrap_or(2 * d + 2);
    let verdict = analyze(s, &AnalyzeConfig { samples: Some(used), seed, tol })?;
    let code = if verdict.kind == SingleSystemKind::NotPreserving { ExitCode::NotPreserving } else { ExitCode::Ok };

    let mut text = String::new();
    let _ = writeln!(text, "verdict: {:?}", verdict.kind);
    let _ = writeln!(text, "dimension: {d}, samples: {used}");
    if let Some(g) = verdict.gain {
        let _ = writeln!(text, "gain: {g:.9}");
    }
    if verdict.ambiguous {
        let _ = writeln!(text, "note: unitary and antiunitary fits agree within tolerance");
    }
    if let Some(e) = verdict.verification_error {
        let _ = writeln!(text, "verification error: {e:.3e}");
    }
    if let Some(u) = &verdict.unitary {
        matrix_text(&mut text, "U", u);
    }
    if let Some(w) = &verdict.witness {
        let _ = writeln!(text, "witness: {:?}", w.violation);
        let _ = writeln!(text, "  first: {}", vector_text(w.first.vector()));
        let _ = writeln!(text, "  second: {}", vector_text(w.second.vector()));
        let _ = writeln!(text, "  p = {:.9}, entropy in = {:.9}", w.p, w.entropy_in);
        match w.entropy_out {
            Some(e) => {
                let _ = writeln!(text, "  entropy out = {e:.9}");
            }
            None => {
                let _ = writeln!(text, "  image is not a valid state");
            }
        }
    }

    let report = Report::new(seed, &[("tol", tol)], code.code(), ReportBody::VerifyEntropy(EntropyReport::new(d, used, &verdict)));
    Ok(Outcome { code, report, text })
}

pub fn run_schmidt(v: &ComplexVector, shape: BipartiteShape, tol: f64, seed: u64) -> Result<Outcome, CliError> {
    let dec = schmidt_decompose(v, shape, tol)?;
    let mut text = String::new();
    let _ = writeln!(text, "shape: {shape}");
    let _ = writeln!(text, "rank: {}", dec.rank());
    let _ = writeln!(text, "coefficients: {}", reals(&dec.coefficients));
    for (k, (a, b)) in dec.left.iter().zip(&dec.right).enumerate() {
        let _ = writeln!(text, "  a{} = {}", k + 1, vector_text(a.vector()));
        let _ = writeln!(text, "  b{} = {}", k + 1, vector_text(b.vector()));
    }
    let body = SchmidtReport {
        shape: [shape.n, shape.m],
        rank: dec.rank(),
        coefficients: dec.coefficients.clone(),
        left: dec.left.iter().map(|s| vector_pairs(s.vector())).collect(),
        right: dec.right.iter().map(|s| vector_pairs(s.vector())).collect(),
    };
    let report = Report::new(seed, &[("tol", tol)], 0, ReportBody::Schmidt(body));
    Ok(Outcome { code: ExitCode::Ok, report, text })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureChoice {
    E,
    E1,
    E2,
}

pub fn run_measure(v: &ComplexVector, shape: BipartiteShape, choice: MeasureChoice, seed: u64) -> Result<Outcome, CliError> {
    let (name, value) = match choice {
        MeasureChoice::E => ("E", measure_e1(v, shape)?),
        MeasureChoice::E1 => ("E1", measure_e1(v, shape)?),
        MeasureChoice::E2 => ("E2", measure_e2(v, shape)?),
    };
    let text = format!("{name} = {value:.9}\n");
    let body = MeasureReport { shape: [shape.n, shape.m], measure: name.to_string(), value };
    let report = Report::new(seed, &[], 0, ReportBody::Measure(body));
    Ok(Outcome { code: ExitCode::Ok, report, text })
}

/// Random and fixed test objects written by `gen`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GenKind {
    Unitary(BipartiteShape),
    Local(BipartiteShape),
    SwapLocal(BipartiteShape),
    Cnot,
    Bell,
    PsiC(f64, BipartiteShape),
    SuperopUnitary(usize),
    SuperopTranspose(usize),
    SuperopDepolarize(usize, f64),
}

pub const GEN_KINDS: &str =
    "unitary N M | local N M | swap_local N M | cnot | bell | psi_c C [N M] | superop_unitary D | superop_transpose D | superop_depolarize D P";

fn count(name: &str, s: &str) -> Result<usize, CliError> {
    s.parse().map_err(|_| CliError::parse(format!("{name} must be a positive integer, got {s:?}")))
}

fn real(name: &str, s: &str) -> Result<f64, CliError> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::parse(format!("{name} must be a finite number, got {s:?}")))
}

impl GenKind {
    pub fn parse(kind: &str, params: &[String]) -> Result<Self, CliError> {
        let shape_at = |k: usize| -> Result<BipartiteShape, CliError> {
            match params.get(k..k + 2) {
                Some([n, m]) => BipartiteShape::new(count("N", n)?, count("M", m)?).map_err(|e| CliError::parse(e.to_string())),
                _ => Err(CliError::parse(format!("{kind} needs N M"))),
            }
        };
        let dim_at = |k: usize| -> Result<usize, CliError> {
            let d = count("D", params.get(k).ok_or_else(|| CliError::parse(format!("{kind} needs D")))?)?;
            if d == 0 {
                return Err(CliError::parse("D must be positive"));
            }
            Ok(d)
        };
        let expect = |n: usize| -> Result<(), CliError> {
            if params.len() != n {
                return Err(CliError::parse(format!("{kind} takes {n} parameter(s), got {}", params.len())));
            }
            Ok(())
        };
        let k = match kind {
            "unitary" => expect(2).and(shape_at(0)).map(GenKind::Unitary)?,
            "local" => expect(2).and(shape_at(0)).map(GenKind::Local)?,
            "swap_local" => expect(2).and(shape_at(0)).map(GenKind::SwapLocal)?,
            "cnot" => expect(0).map(|_| GenKind::Cnot)?,
            "bell" => expect(0).map(|_| GenKind::Bell)?,
            "psi_c" => {
                let cv = real("C", params.first().ok_or_else(|| CliError::parse("psi_c needs C"))?)?;
                if !(0.0..=1.0).contains(&cv) {
                    return Err(CliError::parse(format!("C must lie in [0, 1], got {cv}")));
                }
                let shape = match params.len() {
                    1 => BipartiteShape::new(2, 2).expect("2x2 is valid"),
                    3 => shape_at(1)?,
                    n => return Err(CliError::parse(format!("psi_c takes C [N M], got {n} parameter(s)"))),
                };
                GenKind::PsiC(cv, shape)
            }
            "superop_unitary" => expect(1).and(dim_at(0)).map(GenKind::SuperopUnitary)?,
            "superop_transpose" => expect(1).and(dim_at(0)).map(GenKind::SuperopTranspose)?,
            "superop_depolarize" => {
                expect(2)?;
                let p = real("P", &params[1])?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(CliError::parse(format!("P must lie in [0, 1], got {p}")));
                }
                GenKind::SuperopDepolarize(dim_at(0)?, p)
            }
            other => return Err(CliError::parse(format!("unknown kind {other:?}; expected one of {GEN_KINDS}"))),
        };
        Ok(k)
    }
}

pub fn bell_state() -> ComplexVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexVector::from_vec(vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)])
}

pub fn generate(kind: GenKind, seed: u64, cond: f64) -> Result<MapFile, CliError> {
    let mut gen = Generator::new(seed);
    let file = match kind {
        GenKind::Unitary(shape) => MapFile::bipartite(&BipartiteMap::new(gen.haar_unitary(shape.dim()), shape)?),
        GenKind::Local(shape) => MapFile::bipartite(&gen.local_map(shape, false, cond)?),
        GenKind::SwapLocal(shape) => MapFile::bipartite(&gen.local_map(shape, true, cond)?),
        GenKind::Cnot => MapFile::bipartite(&BipartiteMap::new(classifier::cnot(), BipartiteShape::new(2, 2)?)?),
        GenKind::Bell => MapFile::state(&bell_state(), BipartiteShape::new(2, 2)?),
        GenKind::PsiC(cv, shape) => {
            let psi: PureState = quantitative::psi_c(cv, &LocalFrames::standard(shape))?;
            MapFile::state(psi.vector(), shape)
        }
        GenKind::SuperopUnitary(d) => MapFile::superoperator(&Superoperator::unitary_conjugation(&gen.haar_unitary(d), 1.0)),
        GenKind::SuperopTranspose(d) => MapFile::superoperator(&Superoperator::transpose(d)),
        GenKind::SuperopDepolarize(d, p) => MapFile::superoperator(&Superoperator::depolarizing(d, p)?),
    };
    Ok(file)
}

fn binary_entropy_oracle(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Fixture round-trips through files on disk: each entry is `(name, passed, detail)`.
fn fixture_checks(dir: &Path, seed: u64) -> Vec<(String, bool, String)> {
    let opts = ClassifyOptions { tol: 1e-8, parallel_tol: 1e-8, spot_checks: 16, seed };
    let two = BipartiteShape::new(2, 2).expect("2x2 is valid");
    let cases: Vec<(&str, GenKind)> = vec![
        ("cnot", GenKind::Cnot),
        ("local", GenKind::Local(BipartiteShape::new(3, 3).expect("3x3 is valid"))),
        ("swap_local", GenKind::SwapLocal(BipartiteShape::new(2, 3).expect("2x3 is valid"))),
        ("bell", GenKind::Bell),
        ("psi_c", GenKind::PsiC(0.6, two)),
        ("superop_transpose", GenKind::SuperopTranspose(3)),
        ("superop_depolarize", GenKind::SuperopDepolarize(2, 0.5)),
    ];
    let mut out = Vec::new();
    for (name, kind) in cases {
        let result = (|| -> Result<(bool, String), CliError> {
            let path = dir.join(format!("{name}.json"));
            let file = generate(kind, seed, 10.0)?;
            std::fs::write(&path, file.to_json()).map_err(|e| CliError::internal(e.to_string()))?;
            let back = MapFile::load(&path)?;
            if back != file {
                return Ok((false, "file did not round-trip".into()));
            }
            Ok(match kind {
                GenKind::Cnot => {
                    let map = back.to_bipartite_map()?;
                    let o = run_classify(&map, opts)?;
                    let reverified = match &o.report.result {
                        ReportBody::Classify(r) => r.witness.as_ref().is_some_and(|w| witness_reverifies(&map, w, opts.tol)),
                        _ => false,
                    };
                    (o.code == ExitCode::NotPreserving && reverified, format!("exit {} witness reverified {reverified}", o.code.code()))
                }
                GenKind::Local(_) | GenKind::SwapLocal(_) => {
                    let o = run_classify(&back.to_bipartite_map()?, opts)?;
                    let want = if matches!(kind, GenKind::Local(_)) { QualitativeKind::Local } else { QualitativeKind::SwapLocal };
                    let got = match &o.report.result {
                        ReportBody::Classify(r) => r.verdict.clone(),
                        _ => String::new(),
                    };
                    (o.code == ExitCode::Ok && got == format!("{want:?}"), format!("exit {} verdict {got}", o.code.code()))
                }
                GenKind::Bell | GenKind::PsiC(..) => {
                    let expected = match kind {
                        GenKind::PsiC(cv, _) => binary_entropy_oracle(cv * cv),
                        _ => 1.0,
                    };
                    let (v, shape) = back.to_state(None)?;
                    let value = measure_e1(&v, shape)?;
                    ((value - expected).abs() < 1e-9, format!("E = {value:.9}, expected {expected:.9}"))
                }
                GenKind::SuperopTranspose(_) => {
                    let o = run_verify_entropy(&back.to_superoperator()?, None, seed, 1e-8)?;
                    let ok = matches!(&o.report.result, ReportBody::VerifyEntropy(r) if r.verdict == "AntiunitaryConjugation");
                    (o.code == ExitCode::Ok && ok, format!("exit {}", o.code.code()))
                }
                _ => {
                    let o = run_verify_entropy(&back.to_superoperator()?, None, seed, 1e-8)?;
                    (o.code == ExitCode::NotPreserving, format!("exit {}", o.code.code()))
                }
            })
        })();
        let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
        out.push((format!("fixture {name}"), passed, detail));
    }
    out
}

/// Recomputes the Schmidt ranks of a reported witness and its image.
pub fn witness_reverifies(map: &BipartiteMap, w: &WitnessReport, tol: f64) -> bool {
    let shape = map.shape();
    let state = pairs_vector(&w.state);
    let image = map.apply(&state);
    let reported = pairs_vector(&w.image);
    if (&image - &reported).norm() > tol * image.norm().max(1.0) {
        return false;
    }
    let rank = |v: &ComplexVector, s: BipartiteShape| -> Option<usize> {
        if v.norm() <= tol {
            return Some(0);
        }
        schmidt_decompose(v, s, tol).ok().map(|d| d.rank())
    };
    let (Some(r_in), Some(r_out)) = (rank(&state, shape), rank(&image, map.output_shape())) else {
        return false;
    };
    let claimed_out = w.image_schmidt.len();
    let differ = match w.kind.as_str() {
        "KernelVector" => r_out == 0,
        "ProductToEntangled" | "NonFactorizablePhase" => r_in == 1 && r_out >= 2,
        "EntangledToProduct" => r_in >= 2 && r_out == 1,
        "SchmidtRankChange" => r_in >= 2 && r_out >= 2 && r_in != r_out,
        _ => false,
    };
    differ && r_in == w.input_schmidt.len() && r_out == claimed_out
}

pub fn run_selfcheck(seed: u64) -> Result<Outcome, CliError> {
    let mut checks: Vec<CheckReport> = acceptance::run_all(seed).iter().map(Into::into).collect();

    let dir = std::env::temp_dir().join(format!("unitarity-kit-selfcheck-{}-{seed}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::internal(format!("cannot create {}: {e}", dir.display())))?;
    let start = std::time::Instant::now();
    let fixtures = fixture_checks(&dir, seed);
    let _ = std::fs::remove_dir_all(&dir);
    let per = start.elapsed().as_secs_f64() / fixtures.len().max(1) as f64;
    checks.extend(fixtures.into_iter().map(|(name, passed, detail)| CheckReport { id: "cli".into(), name, passed, detail, seconds: per }));

    let passed = checks.iter().all(|c| c.passed);
    let mut text = String::new();
    for ch in &checks {
        let _ = writeln!(text, "[{}] {} {}: {} ({:.2}s)", if ch.passed { "PASS" } else { "FAIL" }, ch.id, ch.name, ch.detail, ch.seconds);
    }
    let _ = writeln!(text, "{}", if passed { "all checks passed" } else { "some checks failed" });
    let code = if passed { ExitCode::Ok } else { ExitCode::Internal };
    let report = Report::new(seed, &[], code.code(), ReportBody::Selfcheck(SelfcheckReport { checks, passed }));
    Ok(Outcome { code, report, text })
}
