//! Quantitative checks on local (or swap-local) maps `A ⊗ B`: whether the
//! renormalized measure E₁ or the probabilistic measure E₂ is preserved.
//!
//! With `A = V_A D_A U_A` and `B = V_B D_B U_B`, the test states
//! `|ψ(c)⟩ = c|a₁b₁⟩ + √(1-c²)|aₙb_m⟩` built from `|aᵢ⟩ = U_A†|i⟩` and
//! `|bⱼ⟩ = U_B†|j⟩` map to `cλ₁μ₁|e₁f₁⟩ + √(1-c²)λₙμₘ|eₙf_m⟩`, already in
//! Schmidt form. E₁ therefore forces flat spectra and E₂ additionally forces
//! `λ₁μ₁ = λₙμₘ = 1`.

use crate::classifier::{QualitativeKind, QualitativeVerdict};
use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::linalg::{c64, kron, kron_vec, svd, ComplexMatrix, ComplexVector, DEFAULT_RANK_TOL};
use crate::schmidt::{measure_e1, measure_e2, BipartiteShape};
use crate::states::PureState;

#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrumPair {
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
}

fn spectrum(m: &ComplexMatrix, tol: f64) -> Result<Vec<f64>> {
    let values = svd(m)?.singular_values;
    let top = values[0];
    let bottom = *values.last().unwrap();
    if !(bottom > tol * top) {
        return Err(Error::RankDeficient { ratio: if top > 0.0 { bottom / top } else { 0.0 } });
    }
    Ok(values)
}

pub fn singular_spectra(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<SingularSpectrumPair> {
    Ok(SingularSpectrumPair { lambdas: spectrum(a, tol)?, mus: spectrum(b, tol)? })
}

/// `(max - min) / max`.
pub fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    (hi - lo) / hi
}

/// Columns `aᵢ` and `bⱼ`: the input-side singular vectors of `A` and `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFrames {
    pub a_basis: ComplexMatrix,
    pub b_basis: ComplexMatrix,
}

impl LocalFrames {
    pub fn from_factors(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self> {
        // svd gives M = left · diag · right, so |aᵢ⟩ = right†|i⟩.
        Ok(Self { a_basis: svd(a)?.right.adjoint(), b_basis: svd(b)?.right.adjoint() })
    }

    pub fn standard(shape: BipartiteShape) -> Self {
        Self { a_basis: ComplexMatrix::identity(shape.n, shape.n), b_basis: ComplexMatrix::identity(shape.m, shape.m) }
    }

    pub fn shape(&self) -> Result<BipartiteShape> {
        BipartiteShape::new(self.a_basis.ncols(), self.b_basis.ncols())
    }
}

/// `c|a₁b₁⟩ + √(1-c²)|aₙb_m⟩`.
pub fn psi_c(c: f64, frames: &LocalFrames) -> Result<PureState> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::ParamOutOfRange { name: "c", value: c });
    }
    let (n, m) = (frames.a_basis.ncols(), frames.b_basis.ncols());
    let first = kron_vec(&frames.a_basis.column(0).into_owned(), &frames.b_basis.column(0).into_owned());
    let last = kron_vec(&frames.a_basis.column(n - 1).into_owned(), &frames.b_basis.column(m - 1).into_owned());
    PureState::normalized(&(first * c64(c, 0.0) + last * c64((1.0 - c * c).max(0.0).sqrt(), 0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    E1,
    E2,
}

impl Measure {
    pub fn evaluate(&self, v: &ComplexVector, shape: BipartiteShape) -> Result<f64> {
        match self {
            Measure::E1 => measure_e1(v, shape),
            Measure::E2 => measure_e2(v, shape),
        }
    }
}

/// For E₁: `A ⊗ B = scale · (unitary_a ⊗ unitary_b)` with `scale = λ₁μ₁`.
/// For E₂: `A = scale · unitary_a`, `B = unitary_b / scale` with `scale = λ₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub scale: f64,
    pub unitary_a: ComplexMatrix,
    pub unitary_b: ComplexMatrix,
}

/// A member of the ψ(c) family with the chosen measure before and after the map.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementWitness {
    pub c: f64,
    pub state: ComplexVector,
    pub image: ComplexVector,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantitativeVerdict {
    pub measure: Measure,
    pub preserved: bool,
    pub spectra: SingularSpectrumPair,
    pub certificate: Option<Certificate>,
    pub witness: Option<EntanglementWitness>,
}

fn polar_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dec = svd(m)?;
    Ok(&dec.left * &dec.right)
}

fn family_witness(a: &ComplexMatrix, b: &ComplexMatrix, measure: Measure, tol: f64) -> Result<EntanglementWitness> {
    let frames = LocalFrames::from_factors(a, b)?;
    let shape = frames.shape()?;
    let map = kron(a, b);
    let probe = |c: f64| -> Result<EntanglementWitness> {
        let state = psi_c(c, &frames)?.into_vector();
        let image = &map * &state;
        let before = measure.evaluate(&state, shape)?;
        let after = measure.evaluate(&image, shape)?;
        Ok(EntanglementWitness { c, state, image, before, after })
    };
    let preferred = probe(std::f64::consts::FRAC_1_SQRT_2)?;
    if (preferred.after - preferred.before).abs() > tol {
        return Ok(preferred);
    }
    let mut best = preferred;
    for k in 1..100 {
        let w = probe(k as f64 / 100.0)?;
        if (w.after - w.before).abs() > (best.after - best.before).abs() {
            best = w;
        }
    }
    Ok(best)
}

/// E₁ is preserved exactly when both singular spectra are flat.
pub fn check_e1(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<QuantitativeVerdict> {
    let spectra = singular_spectra(a, b, DEFAULT_RANK_TOL)?;
    let preserved = spread(&spectra.lambdas) <= tol && spread(&spectra.mus) <= tol;
    let (certificate, witness) = if preserved {
        let cert = Certificate { scale: spectra.lambdas[0] * spectra.mus[0], unitary_a: polar_unitary(a)?, unitary_b: polar_unitary(b)? };
        (Some(cert), None)
    } else {
        (None, Some(family_witness(a, b, Measure::E1, tol)?))
    };
    Ok(QuantitativeVerdict { measure: Measure::E1, preserved, spectra, certificate, witness })
}

/// E₂ is preserved exactly when `λ₁μ₁ = λₙμₘ = 1`.
pub fn check_e2(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<QuantitativeVerdict> {
    let spectra = singular_spectra(a, b, DEFAULT_RANK_TOL)?;
    let top = spectra.lambdas[0] * spectra.mus[0];
    let bottom = spectra.lambdas.last().unwrap() * spectra.mus.last().unwrap();
    let preserved = (top - 1.0).abs() <= tol && (bottom - 1.0).abs() <= tol;
    let (certificate, witness) = if preserved {
        let cert = Certificate { scale: spectra.lambdas[0], unitary_a: polar_unitary(a)?, unitary_b: polar_unitary(b)? };
        (Some(cert), None)
    } else {
        (None, Some(family_witness(a, b, Measure::E2, tol)?))
    };
    Ok(QuantitativeVerdict { measure: Measure::E2, preserved, spectra, certificate, witness })
}

/// Runs [`check_e1`] or [`check_e2`] on the factors of a preserving
/// qualitative verdict. The swap does not change either measure.
pub fn check_verdict(verdict: &QualitativeVerdict, measure: Measure, tol: f64) -> Result<Option<QuantitativeVerdict>> {
    if verdict.kind == QualitativeKind::NotPreserving {
        return Ok(None);
    }
    let (Some(a), Some(b)) = (&verdict.a, &verdict.b) else { return Ok(None) };
    match measure {
        Measure::E1 => check_e1(a, b, tol).map(Some),
        Measure::E2 => check_e2(a, b, tol).map(Some),
    }
}

/// Direct oracle: applies `map` (on `shape`, images cut by `output_shape`)
/// to Haar-random states and reports the largest change of the measure.
pub fn sampled_measure_change(
    map: &ComplexMatrix,
    shape: BipartiteShape,
    output_shape: BipartiteShape,
    measure: Measure,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut gen = Generator::with_stream(seed, 3);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let v = gen.pure_state(shape.dim()).into_vector();
        let before = measure.evaluate(&v, shape)?;
        let after = measure.evaluate(&(map * &v), output_shape)?;
        worst = worst.max((after - before).abs());
    }
    Ok(worst)
}

/// `h(x) = -x log₂ x - (1-x) log₂(1-x)`.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    term(x) + term(1.0 - x)
}

/// `f(c) = h(c²) / √(c²(1-c²)) - 2` on `(0, 1)`.
pub fn entropy_ratio(c: f64) -> f64 {
    let x = c * c;
    binary_entropy(x) / (x * (1.0 - x)).sqrt() - 2.0
}

/// Sign of `f'(c)`: with `x = c²`, the numerator of the derivative is
/// `h'(x)·x(1-x) - h(x)(1-2x)/2`, positive below `x = ½` and negative above.
pub fn entropy_ratio_slope(c: f64) -> f64 {
    let x = c * c;
    let dh = ((1.0 - x) / x).log2();
    dh * x * (1.0 - x) - binary_entropy(x) * (1.0 - 2.0 * x) / 2.0
}

/// The root of `f` on `(0, 1)`, located by bisecting the slope: `f` never
/// changes sign, it touches zero at its maximum.
pub fn entropy_ratio_root(tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::ParamOutOfRange { name: "tol", value: tol });
    }
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    if entropy_ratio_slope(lo).signum() == entropy_ratio_slope(hi).signum() {
        return Err(Error::NoRoot);
    }
    while hi - lo > tol * 0.5 {
        let mid = 0.5 * (lo + hi);
        if entropy_ratio_slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    if entropy_ratio(root).abs() > 1e-9 {
        return Err(Error::NoRoot);
    }
    Ok(root)
}

/// Grid summary of `f` on `points` interior nodes of `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioScan {
    pub slope_sign_changes: usize,
    pub value_sign_changes: usize,
    pub max_value: f64,
    pub argmax: f64,
}

pub fn scan_entropy_ratio(points: usize) -> RatioScan {
    let mut scan = RatioScan { slope_sign_changes: 0, value_sign_changes: 0, max_value: f64::NEG_INFINITY, argmax: f64::NAN };
    let mut last_slope = 0.0f64;
    let mut last_value = 0.0f64;
    for k in 1..=points {
        let c = k as f64 / (points + 1) as f64;
        let (value, slope) = (entropy_ratio(c), entropy_ratio_slope(c));
        if value > scan.max_value {
            scan.max_value = value;
            scan.argmax = c;
        }
        if slope != 0.0 {
            if last_slope != 0.0 && slope.signum() != last_slope.signum() {
                scan.slope_sign_changes += 1;
            }
            last_slope = slope;
        }
        if value != 0.0 {
            if last_value != 0.0 && value.signum() != last_value.signum() {
                scan.value_sign_changes += 1;
            }
            last_value = value;
        }
    }
    scan
}
