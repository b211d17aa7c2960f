//! End-to-end acceptance checks, shared by the integration test target and
//! the CLI `selfcheck` command. Each check returns a [`CriterionOutcome`]
//! instead of panicking so callers can report every line.

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::{Duration, Instant};

use crate::classifier::{classify, cnot, factor_phase_grid, BipartiteMap, ClassifierConfig, QualitativeKind};
use crate::dynamics::{
    analyze, gain_equality_deficit, input_spectrum, mu2_relation, output_spectrum, ratio_mismatch_scan, state_pair,
    AnalyzeConfig, SingleSystemKind, Superoperator,
};
use crate::error::Result;
use crate::generators::Generator;
use crate::linalg::{
    diag_real, hermitian_eigenvalues, kron, partial_trace, real_matrix, ComplexMatrix, ComplexVector, Side,
    DEFAULT_RANK_TOL,
};
use crate::quantitative::{
    check_e1, check_e2, entropy_ratio_root, sampled_measure_change, scan_entropy_ratio, Measure,
};
use crate::schmidt::{measure_e2, schmidt_rank, swap_operator, BipartiteShape};

pub const SPECTRUM_TOL: f64 = 1e-10;
pub const SPECTRUM_BUDGET: Duration = Duration::from_secs(5);
pub const GAIN_TOL: f64 = 1e-9;
pub const OVERLAP_TOL: f64 = 1e-9;
pub const E1_WITNESS_VALUE: f64 = 0.721928;
pub const E1_WITNESS_TOL: f64 = 1e-6;
pub const DEPOLARIZER_ENTROPY: f64 = 0.811278;
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
pub const CLASSIFY_BUDGET: Duration = Duration::from_secs(60);
pub const PERTURBED_PASS_RATE: f64 = 0.99;
pub const MEASURE_TOL: f64 = 1e-8;
pub const ROOT_TOL: f64 = 1e-9;
pub const ROOT_GRID: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] criterion {}: {} ({:.2}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

fn run(id: u8, name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> CriterionOutcome {
    let start = Instant::now();
    let (passed, detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome { id, name, passed, detail, elapsed: start.elapsed() }
}

/// Schmidt rank from the reduced density matrix, independent of the SVD route.
fn oracle_rank(v: &ComplexVector, shape: BipartiteShape) -> Result<usize> {
    let rho = v * v.adjoint();
    let reduced = partial_trace(&rho, (shape.n, shape.m), Side::B)?;
    let values = hermitian_eigenvalues(&reduced, 1e-9)?;
    let cut = 1e-13 * values[0];
    Ok(values.iter().filter(|&&x| x > cut).count())
}

pub fn closed_form_spectra(seed: u64) -> CriterionOutcome {
    run(1, "closed-form mixture spectra", || {
        let start = Instant::now();
        let mut g = Generator::with_stream(seed, 101);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let p = g.uniform(0.0, 1.0);
            let lambda2 = g.uniform(0.01, 1.0);
            let (a, b) = state_pair(lambda2)?;
            let numeric = hermitian_eigenvalues(&(a.projector().scale(p) + b.projector().scale(1.0 - p)), 1e-12)?;
            let s = input_spectrum(p, lambda2)?;
            worst = worst.max((s.hi - numeric[0]).abs()).max((s.lo - numeric[1]).abs());

            let (d1, d2, mu2) = (g.uniform(0.1, 5.0), g.uniform(0.1, 5.0), g.uniform(0.01, 1.0));
            let (a, b) = state_pair(mu2)?;
            let numeric = hermitian_eigenvalues(&(a.projector().scale(p * d1) + b.projector().scale((1.0 - p) * d2)), 1e-12)?;
            let t = output_spectrum(p, d1, d2, mu2)?;
            worst = worst.max((t.hi - numeric[0]).abs()).max((t.lo - numeric[1]).abs());
        }
        let elapsed = start.elapsed();
        Ok((worst <= SPECTRUM_TOL && elapsed < SPECTRUM_BUDGET, format!("max abs error {worst:.2e}, {:.3}s", elapsed.as_secs_f64())))
    })
}

pub fn single_system_round_trip(seed: u64) -> CriterionOutcome {
    run(2, "single-system reconstruction", || {
        let mut g = Generator::with_stream(seed, 102);
        let mut failures = 0;
        let (mut worst_gain, mut worst_overlap) = (0.0f64, 0.0f64);
        for k in 0..100 {
            let d = 2 + g.index(5);
            let u = g.haar_unitary(d);
            let c = g.uniform(0.5, 2.0);
            let v = analyze(&Superoperator::unitary_conjugation(&u, c), &AnalyzeConfig { seed: seed ^ k, ..Default::default() })?;
            let (Some(rec), Some(gain)) = (v.unitary.as_ref(), v.gain) else {
                failures += 1;
                continue;
            };
            let gain_err = (gain - c).abs();
            let overlap_err = (0..d).map(|col| 1.0 - u.column(col).dotc(&rec.column(col)).norm()).fold(0.0, f64::max);
            worst_gain = worst_gain.max(gain_err);
            worst_overlap = worst_overlap.max(overlap_err);
            if v.kind != SingleSystemKind::UnitaryConjugation || gain_err > GAIN_TOL || overlap_err > OVERLAP_TOL {
                failures += 1;
            }
        }
        let t = analyze(&Superoperator::transpose(3), &AnalyzeConfig { seed, ..Default::default() })?;
        let transpose_ok = t.kind == SingleSystemKind::AntiunitaryConjugation;
        let dep = analyze(&Superoperator::depolarizing(2, 0.5)?, &AnalyzeConfig { seed, ..Default::default() })?;
        let dep_entropy = dep.witness.as_ref().and_then(|w| w.entropy_out);
        let dep_ok = dep.kind == SingleSystemKind::NotPreserving
            && dep_entropy.is_some_and(|e| (e - DEPOLARIZER_ENTROPY).abs() <= E1_WITNESS_TOL);
        Ok((
            failures == 0 && transpose_ok && dep_ok,
            format!(
                "{failures}/100 failures, gain err {worst_gain:.1e}, column overlap defect {worst_overlap:.1e}, transpose {:?}, depolarizer entropy {:?}",
                t.kind,
                dep_entropy.map(|e| format!("{e:.6}"))
            ),
        ))
    })
}

pub fn equal_gains_necessary(seed: u64) -> CriterionOutcome {
    run(3, "equal gains necessary", || {
        let mut g = Generator::with_stream(seed, 103);
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let mut failures = 0;
        let mut weakest = f64::INFINITY;
        for _ in 0..100 {
            let d1 = g.uniform(0.2, 5.0);
            let d2 = loop {
                let x = g.uniform(0.2, 5.0);
                if (x - d1).abs() > 1e-3 {
                    break x;
                }
            };
            let lambda2 = g.uniform(0.05, 1.0);
            let deficit = gain_equality_deficit(d1, d2, lambda2, &grid)?;
            let mu2 = mu2_relation(0.5, d1, d2, lambda2)?.min(1.0);
            let scan = ratio_mismatch_scan(d1, d2, lambda2, mu2, &grid)?;
            weakest = weakest.min(scan.mismatch);
            if !(deficit > 0.0 && scan.mismatch > 10.0 * DEFAULT_RANK_TOL) {
                failures += 1;
            }
        }
        Ok((failures == 0, format!("{failures}/100 failures, smallest ratio mismatch {weakest:.2e}")))
    })
}

fn random_shape(g: &mut Generator) -> BipartiteShape {
    BipartiteShape { n: 2 + g.index(3), m: 2 + g.index(3) }
}

pub fn classification(seed: u64) -> CriterionOutcome {
    run(4, "local / swap-local classification", || {
        let start = Instant::now();
        let mut g = Generator::with_stream(seed, 104);
        let config = ClassifierConfig { seed, ..Default::default() };
        let mut misses = 0;
        let mut worst = 0.0f64;
        for k in 0..1000 {
            let swap = k >= 500;
            let shape = random_shape(&mut g);
            let map = g.local_map(shape, swap, 1e3)?;
            let v = classify(&map, &config)?;
            let expected = if swap { QualitativeKind::SwapLocal } else { QualitativeKind::Local };
            let err = v.reconstruction_error.unwrap_or(f64::INFINITY);
            worst = worst.max(err);
            if v.kind != expected || err > RECONSTRUCTION_TOL {
                misses += 1;
            }
        }

        let s22 = BipartiteShape { n: 2, m: 2 };
        let mut named_ok = true;
        for m in [cnot(), cnot() * swap_operator(s22)] {
            let map = BipartiteMap::new(m, s22)?;
            let v = classify(&map, &config)?;
            named_ok &= v.kind == QualitativeKind::NotPreserving && v.witness.as_ref().is_some_and(|w| w.reverify(&map, config.tol));
        }

        let mut perturbed_ok = 0;
        for _ in 0..200 {
            let shape = random_shape(&mut g);
            let swap = g.index(2) == 1;
            let map = g.local_map(shape, swap, 1e3)?;
            let bad = g.perturb(&map, 1e-2)?;
            let v = classify(&bad, &config)?;
            if v.kind == QualitativeKind::NotPreserving && v.witness.as_ref().is_some_and(|w| w.reverify(&bad, config.tol)) {
                perturbed_ok += 1;
            }
        }
        let rate = perturbed_ok as f64 / 200.0;
        let elapsed = start.elapsed();
        Ok((
            misses == 0 && worst <= RECONSTRUCTION_TOL && named_ok && rate >= PERTURBED_PASS_RATE && elapsed < CLASSIFY_BUDGET,
            format!(
                "{misses}/1000 misclassified, max reconstruction error {worst:.1e}, CNOT cases rejected: {named_ok}, perturbed rejected {perturbed_ok}/200, {:.1}s",
                elapsed.as_secs_f64()
            ),
        ))
    })
}

pub fn grid_factorization(seed: u64) -> CriterionOutcome {
    run(5, "phase grid factorization", || {
        let mut g = Generator::with_stream(seed, 105);
        let mut worst = 0.0f64;
        let mut rejected = 0;
        for _ in 0..100 {
            let (n, m) = (2 + g.index(3), 2 + g.index(3));
            let mu = g.gaussian_vector(n);
            let nu = g.gaussian_vector(m);
            let grid = &mu * nu.transpose();
            match factor_phase_grid(&grid, DEFAULT_RANK_TOL)? {
                Ok((a, b)) => {
                    let rebuilt = ComplexMatrix::from_fn(n, m, |i, j| a[i] * b[j]);
                    worst = worst.max((rebuilt - &grid).norm() / grid.norm());
                }
                Err(_) => rejected += 1,
            }
        }
        let bad = real_matrix(&[&[1.0, 2.0], &[3.0, 5.0]]);
        let witness_rank = match factor_phase_grid(&bad, DEFAULT_RANK_TOL)? {
            Ok(_) => 0,
            Err(w) => {
                let s = BipartiteShape { n: 2, m: 2 };
                if oracle_rank(&w.state, s)? == 1 { oracle_rank(&w.image, s)? } else { 0 }
            }
        };
        Ok((
            rejected == 0 && worst <= 1e-12 && witness_rank == 2,
            format!("{rejected}/100 rank-1 grids rejected, max error {worst:.1e}, witness image rank {witness_rank}"),
        ))
    })
}

pub fn measure_checks(seed: u64) -> CriterionOutcome {
    run(6, "E1 and E2 measure checks", || {
        let mut g = Generator::with_stream(seed, 106);
        let id2 = ComplexMatrix::identity(2, 2);
        let mut notes = Vec::new();

        let v = check_e1(&diag_real(&[2.0, 1.0]), &id2, MEASURE_TOL)?;
        let e1_value = v.witness.as_ref().map(|w| w.after);
        let e1_ok = !v.preserved && e1_value.is_some_and(|x| (x - E1_WITNESS_VALUE).abs() <= E1_WITNESS_TOL);
        notes.push(format!("E1 witness {:?}", e1_value.map(|x| format!("{x:.6}"))));

        let mut flat_ok = true;
        for _ in 0..50 {
            let s = random_shape(&mut g);
            let (ca, cb) = (g.uniform(0.2, 5.0), g.uniform(0.2, 5.0));
            let a = g.haar_unitary(s.n).scale(ca);
            let b = g.haar_unitary(s.m).scale(cb);
            flat_ok &= check_e1(&a, &b, MEASURE_TOL)?.preserved;
        }

        let (u, w) = (g.haar_unitary(2), g.haar_unitary(2));
        let v = check_e2(&u.scale(2.0), &w.scale(0.5), MEASURE_TOL)?;
        let c = v.certificate.as_ref().map(|c| c.scale);
        let e2_accept = v.preserved && c.is_some_and(|c| (c - 2.0).abs() <= 1e-9);
        let v = check_e2(&u.scale(2.0), &w, MEASURE_TOL)?;
        let e2_value = v.witness.as_ref().map(|x| (x.c, x.after));
        let e2_reject = !v.preserved && e2_value.is_some_and(|(c, x)| (c - FRAC_1_SQRT_2).abs() < 1e-15 && (x - 4.0).abs() <= 1e-8);
        notes.push(format!("E2 certificate {c:?}, E2 witness {:?}", e2_value.map(|(_, x)| x)));

        // Sampled oracle: a verdict is preserved exactly when no sampled state changes its measure.
        let mut disagreements = 0;
        let mut maps: Vec<(ComplexMatrix, ComplexMatrix)> = vec![
            (diag_real(&[2.0, 1.0]), id2.clone()),
            (u.scale(2.0), w.scale(0.5)),
            (u.scale(2.0), w.clone()),
            (diag_real(&[2.0, 0.5]), id2.clone()),
        ];
        for _ in 0..8 {
            let s = random_shape(&mut g);
            let c = g.uniform(0.5, 2.0);
            maps.push((g.haar_unitary(s.n).scale(c), g.haar_unitary(s.m).scale(1.0 / c)));
            maps.push((g.random_invertible(s.n, 10.0)?, g.random_invertible(s.m, 10.0)?));
        }
        for (k, (a, b)) in maps.iter().enumerate() {
            let shape = BipartiteShape { n: a.nrows(), m: b.nrows() };
            let l = kron(a, b);
            for measure in [Measure::E1, Measure::E2] {
                let verdict = match measure {
                    Measure::E1 => check_e1(a, b, MEASURE_TOL)?,
                    Measure::E2 => check_e2(a, b, MEASURE_TOL)?,
                };
                let change = sampled_measure_change(&l, shape, shape, measure, 200, seed ^ k as u64)?;
                if verdict.preserved != (change <= MEASURE_TOL) {
                    disagreements += 1;
                }
            }
        }
        notes.push(format!("{disagreements} oracle disagreements over {} maps", maps.len()));
        Ok((e1_ok && flat_ok && e2_accept && e2_reject && disagreements == 0, notes.join(", ")))
    })
}

pub fn entropy_ratio_root_check(_seed: u64) -> CriterionOutcome {
    run(7, "entropy-ratio root and balanced extremes", || {
        let root = entropy_ratio_root(ROOT_TOL * 1e-3)?;
        let scan = scan_entropy_ratio(ROOT_GRID);
        let root_ok = (root - FRAC_1_SQRT_2).abs() <= ROOT_TOL;
        let unique = scan.slope_sign_changes == 1 && scan.max_value <= 1e-9;

        // λ = (2, 1/2), μ = (1, 1): λ₁μ₁λₙμₘ = 1 but λ₁μ₁ = 2.
        let a = diag_real(&[2.0, 0.5]);
        let b = ComplexMatrix::identity(2, 2);
        let v = check_e2(&a, &b, MEASURE_TOL)?;
        let witness_ok = !v.preserved
            && v.witness.as_ref().is_some_and(|w| {
                let s = BipartiteShape { n: 2, m: 2 };
                let before = measure_e2(&w.state, s).unwrap_or(f64::NAN);
                let after = measure_e2(&(kron(&a, &b) * &w.state), s).unwrap_or(f64::NAN);
                (after - before).abs() > MEASURE_TOL
            });
        Ok((
            root_ok && unique && witness_ok,
            format!(
                "root {root:.12}, slope sign changes {} on {ROOT_GRID} points, max f {:.1e}, balanced map rejected: {witness_ok}",
                scan.slope_sign_changes, scan.max_value
            ),
        ))
    })
}

pub fn schmidt_rank_invariance(seed: u64) -> CriterionOutcome {
    run(8, "Schmidt rank invariance", || {
        let mut g = Generator::with_stream(seed, 108);
        let config = ClassifierConfig { seed, ..Default::default() };
        let mut violations = 0;
        let mut checked = 0;
        for k in 0..12 {
            let shape = random_shape(&mut g);
            let map = if k == 0 {
                BipartiteMap::new(swap_operator(BipartiteShape { n: 3, m: 3 }), BipartiteShape { n: 3, m: 3 })?
            } else {
                g.local_map(shape, k % 2 == 0, 1e2)?
            };
            if !classify(&map, &config)?.is_preserving() {
                violations += 1;
                continue;
            }
            let s = map.shape();
            for rank in 1..=s.max_rank() {
                for _ in 0..100 {
                    let v = g.schmidt_state(s, rank)?.into_vector();
                    let out = schmidt_rank(&map.apply(&v), map.output_shape(), DEFAULT_RANK_TOL)?;
                    checked += 1;
                    if out != rank {
                        violations += 1;
                    }
                }
            }
        }
        Ok((violations == 0, format!("{violations} violations over {checked} states")))
    })
}

pub fn run_all(seed: u64) -> Vec<CriterionOutcome> {
    vec![
        closed_form_spectra(seed),
        single_system_round_trip(seed),
        equal_gains_necessary(seed),
        classification(seed),
        grid_factorization(seed),
        measure_checks(seed),
        entropy_ratio_root_check(seed),
        schmidt_rank_invariance(seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_line_format() {
        let o = CriterionOutcome { id: 3, name: "x", passed: true, detail: "ok".into(), elapsed: Duration::from_millis(1500) };
        assert_eq!(o.to_string(), "[PASS] criterion 3: x (1.50s) ok");
    }
}
