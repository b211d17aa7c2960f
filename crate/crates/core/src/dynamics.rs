//! Single-system analysis: is a linear map on density matrices entropy
//! preserving, and if so which (anti)unitary conjugation implements it?
//!
//! Maps are stored as `d² × d²` matrices acting on column-stacked density
//! matrices, `vec(ρ)[i + j·d] = ρ[i, j]`. In this form `ρ ↦ U ρ U†` is
//! `conj(U) ⊗ U`, and linearity on mixtures holds by construction.
//!
//! The closed-form helpers ([`input_spectrum`], [`output_spectrum`],
//! [`mu2_relation`], [`gain_equality_deficit`]) describe what happens to the
//! mixture `p|φ₁⟩⟨φ₁| + (1-p)|φ₂⟩⟨φ₂|` when the two pure states are sent to
//! `d₁|ψ₁⟩⟨ψ₁|` and `d₂|ψ₂⟩⟨ψ₂|`. Here `λ₂` is the length of the component
//! of `φ₂` orthogonal to `φ₁` and `μ₂` the same quantity for the images.

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::linalg::{
    c64, hermitian_deviation, hermitian_eigen, kron, nearest_unitary, pseudo_inverse, relative_error,
    unitarity_deviation, C64, ComplexMatrix, ComplexVector, DEFAULT_RANK_TOL,
};
use crate::states::{entropy_of_spectrum, normalized_entropy, PureState};

/// A linear map on `d × d` matrices in column-stacked form.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    matrix: ComplexMatrix,
    dim: usize,
}

pub fn vectorize(m: &ComplexMatrix) -> ComplexVector {
    // nalgebra storage is column-major, i.e. already column-stacked.
    ComplexVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &ComplexVector, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(dim, dim, v.as_slice())
}

impl Superoperator {
    pub fn new(matrix: ComplexMatrix, dim: usize) -> Result<Self> {
        let sq = dim * dim;
        if dim == 0 || matrix.nrows() != sq || matrix.ncols() != sq {
            return Err(Error::ShapeMismatch {
                expected: format!("{sq}x{sq}"),
                found: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        Ok(Self { matrix, dim })
    }

    /// `ρ ↦ gain · U ρ U†`.
    pub fn unitary_conjugation(u: &ComplexMatrix, gain: f64) -> Self {
        let dim = u.nrows();
        Self { matrix: kron(&u.conjugate(), u).scale(gain), dim }
    }

    /// `ρ ↦ gain · U ρᵀ U†`.
    pub fn antiunitary_conjugation(u: &ComplexMatrix, gain: f64) -> Self {
        let dim = u.nrows();
        let t = Self::transpose(dim);
        Self { matrix: kron(&u.conjugate(), u).scale(gain) * t.matrix, dim }
    }

    /// `ρ ↦ ρᵀ`.
    pub fn transpose(dim: usize) -> Self {
        let sq = dim * dim;
        let mut m = ComplexMatrix::zeros(sq, sq);
        for i in 0..dim {
            for j in 0..dim {
                m[(j + i * dim, i + j * dim)] = C64::new(1.0, 0.0);
            }
        }
        Self { matrix: m, dim }
    }

    /// `ρ ↦ (1 - p) ρ + p Tr(ρ) I / d`.
    pub fn depolarizing(dim: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        let sq = dim * dim;
        let id = vectorize(&ComplexMatrix::identity(dim, dim));
        let m = ComplexMatrix::identity(sq, sq).scale(1.0 - p) + (&id * id.transpose()).scale(p / dim as f64);
        Ok(Self { matrix: m, dim })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim)
    }
}

/// The two eigenvalues of a 2-dimensional mixture, ascending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSpectrum {
    pub lo: f64,
    pub hi: f64,
}

impl MixtureSpectrum {
    pub fn ratio(&self) -> f64 {
        self.lo / self.hi
    }

    pub fn sum(&self) -> f64 {
        self.lo + self.hi
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange { name: "p", value: p })
    }
}

fn check_unit_interval(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange { name, value: x })
    }
}

fn check_gain(name: &'static str, d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange { name, value: d })
    }
}

/// Spectrum of `p|φ₁⟩⟨φ₁| + (1-p)|φ₂⟩⟨φ₂|`:
/// `½(1 ∓ √(1 - 4pλ₂² + 4p²λ₂²))`.
pub fn input_spectrum(p: f64, lambda2: f64) -> Result<MixtureSpectrum> {
    check_probability(p)?;
    check_unit_interval("lambda2", lambda2)?;
    let l2 = lambda2 * lambda2;
    let root = (1.0 - 4.0 * p * l2 + 4.0 * p * p * l2).max(0.0).sqrt();
    Ok(MixtureSpectrum { lo: 0.5 * (1.0 - root), hi: 0.5 * (1.0 + root) })
}

/// Spectrum of `p d₁|ψ₁⟩⟨ψ₁| + (1-p) d₂|ψ₂⟩⟨ψ₂|`: `½(α ∓ β)` with
/// `α = p d₁ + d₂ - p d₂` and `β = √(α² + 4 p d₁ d₂ μ₂² (p - 1))`.
pub fn output_spectrum(p: f64, d1: f64, d2: f64, mu2: f64) -> Result<MixtureSpectrum> {
    check_probability(p)?;
    check_gain("d1", d1)?;
    check_gain("d2", d2)?;
    check_unit_interval("mu2", mu2)?;
    let alpha = p * d1 + d2 - p * d2;
    let disc = alpha * alpha + 4.0 * p * d1 * d2 * mu2 * mu2 * (p - 1.0);
    let disc = if disc < 0.0 {
        // Rounding can push an exactly-zero discriminant slightly negative.
        if disc < -1e-12 * alpha * alpha {
            return Err(Error::NegativeDiscriminant(disc));
        }
        0.0
    } else {
        disc
    };
    let beta = disc.sqrt();
    Ok(MixtureSpectrum { lo: 0.5 * (alpha - beta), hi: 0.5 * (alpha + beta) })
}

/// The image overlap length forced by equal eigenvalue ratios:
/// `μ₂ = |p(d₁ - d₂) + d₂| λ₂ / √(d₁ d₂)`.
pub fn mu2_relation(p: f64, d1: f64, d2: f64, lambda2: f64) -> Result<f64> {
    check_probability(p)?;
    check_gain("d1", d1)?;
    check_gain("d2", d2)?;
    check_unit_interval("lambda2", lambda2)?;
    Ok((p * (d1 - d2) + d2).abs() * lambda2 / (d1 * d2).sqrt())
}

/// Spread (max − min) of [`mu2_relation`] over a grid of mixing weights.
/// Zero exactly when `d₁ = d₂`.
pub fn gain_equality_deficit(d1: f64, d2: f64, lambda2: f64, grid: &[f64]) -> Result<f64> {
    if grid.len() < 3 {
        return Err(Error::ParamOutOfRange { name: "grid length", value: grid.len() as f64 });
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &p in grid {
        let mu = mu2_relation(p, d1, d2, lambda2)?;
        lo = lo.min(mu);
        hi = hi.max(mu);
    }
    Ok(hi - lo)
}

/// Worst eigenvalue-ratio mismatch between input and output mixtures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioScan {
    pub p: f64,
    pub mismatch: f64,
}

/// Scans `p` over `grid` for a fixed image overlap `μ₂` and reports where the
/// ratios `s_lo/s_hi` and `t_lo/t_hi` differ most. Equal entropies of the
/// normalized 2×2 mixtures require the ratios to agree.
pub fn ratio_mismatch_scan(d1: f64, d2: f64, lambda2: f64, mu2: f64, grid: &[f64]) -> Result<RatioScan> {
    let mut best = RatioScan { p: f64::NAN, mismatch: -1.0 };
    for &p in grid {
        let s = input_spectrum(p, lambda2)?;
        let t = output_spectrum(p, d1, d2, mu2)?;
        let mismatch = (s.ratio() - t.ratio()).abs();
        if mismatch > best.mismatch {
            best = RatioScan { p, mismatch };
        }
    }
    if best.p.is_nan() {
        return Err(Error::ParamOutOfRange { name: "grid length", value: 0.0 });
    }
    Ok(best)
}

/// Options for [`analyze`]. `samples: None` uses `2d + 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeConfig {
    pub samples: Option<usize>,
    pub seed: u64,
    pub tol: f64,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self { samples: None, seed: 0, tol: DEFAULT_RANK_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingleSystemKind {
    UnitaryConjugation,
    AntiunitaryConjugation,
    NotPreserving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    ImageNotHermitian,
    ImageNotPositive,
    ImageNotPure,
    GainMismatch,
    OverlapMismatch,
    ReconstructionMismatch,
}

/// A concrete pair of pure states and a mixing weight: the input
/// `p|φ₁⟩⟨φ₁| + (1-p)|φ₂⟩⟨φ₂|` has entropy `entropy_in`, its image after
/// trace normalization has `entropy_out` (`None` when the image is not a
/// valid unnormalized state).
#[derive(Debug, Clone)]
pub struct EntropyWitness {
    pub violation: Violation,
    pub first: PureState,
    pub second: PureState,
    pub p: f64,
    pub entropy_in: f64,
    pub entropy_out: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SingleSystemVerdict {
    pub kind: SingleSystemKind,
    pub unitary: Option<ComplexMatrix>,
    pub gain: Option<f64>,
    /// Both the unitary and the antiunitary branch fit the sampled overlaps.
    pub ambiguous: bool,
    /// Largest relative deviation seen on the fresh verification states.
    pub verification_error: Option<f64>,
    pub witness: Option<EntropyWitness>,
}

impl SingleSystemVerdict {
    fn rejected(witness: EntropyWitness) -> Self {
        Self {
            kind: SingleSystemKind::NotPreserving,
            unitary: None,
            gain: None,
            ambiguous: false,
            verification_error: None,
            witness: Some(witness),
        }
    }
}

fn mixture(first: &PureState, second: &PureState, p: f64) -> ComplexMatrix {
    first.projector().scale(p) + second.projector().scale(1.0 - p)
}

fn image_entropy(s: &Superoperator, rho: &ComplexMatrix, tol: f64) -> Option<f64> {
    let out = s.apply(rho);
    let scale = out.norm();
    if scale == 0.0 || hermitian_deviation(&out) > tol * scale {
        return None;
    }
    let eig = hermitian_eigen(&out, tol * scale).ok()?;
    let trace: f64 = eig.values.iter().sum();
    if !(trace > 0.0) || eig.values.last().is_some_and(|&v| v < -tol * scale) {
        return None;
    }
    let normalized: Vec<f64> = eig.values.iter().map(|v| (v / trace).max(0.0)).collect();
    entropy_of_spectrum(&normalized).ok()
}

/// Picks the mixing weight on a fixed grid that maximizes the entropy change.
fn mixture_witness(s: &Superoperator, first: &PureState, second: &PureState, violation: Violation, tol: f64) -> EntropyWitness {
    let mut best: Option<EntropyWitness> = None;
    let mut best_gap = f64::NEG_INFINITY;
    for k in 1..20 {
        let p = k as f64 / 20.0;
        let rho = mixture(first, second, p);
        let entropy_in = normalized_entropy(&rho, tol).unwrap_or(0.0);
        let entropy_out = image_entropy(s, &rho, tol);
        let gap = entropy_out.map_or(f64::INFINITY, |e| (e - entropy_in).abs());
        if gap > best_gap {
            best_gap = gap;
            best = Some(EntropyWitness { violation, first: first.clone(), second: second.clone(), p, entropy_in, entropy_out });
        }
    }
    best.expect("grid is non-empty")
}

fn single_witness(s: &Superoperator, state: &PureState, violation: Violation, tol: f64) -> EntropyWitness {
    let entropy_out = image_entropy(s, &state.projector(), tol);
    EntropyWitness { violation, first: state.clone(), second: state.clone(), p: 1.0, entropy_in: 0.0, entropy_out }
}

/// Phases `θ_k` making `e^{i(θ_b - θ_a)} G[a,b]` match `target[a,b]`, fixed
/// greedily along the strongest available overlaps. Returns the phases and
/// the largest residual over all pairs.
fn fit_phases(gram: &ComplexMatrix, target: &ComplexMatrix) -> (Vec<C64>, f64) {
    let s = gram.nrows();
    let mut phase: Vec<Option<C64>> = vec![None; s];
    phase[0] = Some(C64::new(1.0, 0.0));
    for _ in 1..s {
        let mut pick: Option<(usize, usize, f64)> = None;
        for b in (0..s).filter(|&b| phase[b].is_none()) {
            for a in (0..s).filter(|&a| phase[a].is_some()) {
                let w = target[(a, b)].norm().min(gram[(a, b)].norm());
                if pick.is_none_or(|(_, _, best)| w > best) {
                    pick = Some((a, b, w));
                }
            }
        }
        let (a, b, w) = pick.expect("an unfixed index remains");
        let unit = |z: C64| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
        let rel = if w > 0.0 { unit(target[(a, b)]) / unit(gram[(a, b)]) } else { C64::new(1.0, 0.0) };
        phase[b] = Some(phase[a].unwrap() * rel);
    }
    let phase: Vec<C64> = phase.into_iter().map(Option::unwrap).collect();
    let mut residual = 0.0f64;
    for a in 0..s {
        for b in 0..s {
            let fitted = phase[a].conj() * gram[(a, b)] * phase[b];
            residual = residual.max((fitted - target[(a, b)]).norm());
        }
    }
    (phase, residual)
}

/// Decides whether `s` preserves entropy and reconstructs the implementing
/// (anti)unitary and its gain.
///
/// Pipeline: pure inputs must map to positive multiples of pure states, all
/// with the same gain; overlap moduli must be preserved; the image phases are
/// then fixed against the input Gram matrix (or its conjugate, for the
/// antiunitary branch), the operator is solved for by least squares, and the
/// result is checked against the map on fresh mixed states.
pub fn analyze(s: &Superoperator, config: &AnalyzeConfig) -> Result<SingleSystemVerdict> {
    let d = s.dim();
    let tol = config.tol;
    let samples = config.samples.unwrap_or(2 * d + 2);
    if samples < d + 1 {
        return Err(Error::InsufficientSamples { needed: d + 1, got: samples });
    }
    let mut gen = Generator::with_stream(config.seed, 0);
    let inputs: Vec<PureState> = (0..samples).map(|_| gen.pure_state(d)).collect();

    let mut gains = Vec::with_capacity(samples);
    let mut images = Vec::with_capacity(samples);
    for phi in &inputs {
        let out = s.apply(&phi.projector());
        let scale = out.norm();
        if scale == 0.0 {
            return Ok(SingleSystemVerdict::rejected(single_witness(s, phi, Violation::ImageNotPositive, tol)));
        }
        if hermitian_deviation(&out) > tol * scale {
            return Ok(SingleSystemVerdict::rejected(single_witness(s, phi, Violation::ImageNotHermitian, tol)));
        }
        let eig = hermitian_eigen(&out, tol * scale)?;
        let top = eig.values[0];
        let low = *eig.values.last().unwrap();
        if top <= 0.0 || low < -tol * scale {
            return Ok(SingleSystemVerdict::rejected(single_witness(s, phi, Violation::ImageNotPositive, tol)));
        }
        if eig.values.get(1).is_some_and(|&v| v > tol * top) {
            return Ok(SingleSystemVerdict::rejected(single_witness(s, phi, Violation::ImageNotPure, tol)));
        }
        gains.push(out.trace().re);
        images.push(PureState::normalized(&eig.vectors.column(0).into_owned())?);
    }

    let (imax, gmax) = gains.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let (imin, gmin) = gains.iter().cloned().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    if gmax - gmin > tol * gmax {
        let w = mixture_witness(s, &inputs[imax], &inputs[imin], Violation::GainMismatch, tol);
        return Ok(SingleSystemVerdict::rejected(w));
    }
    let gain = gains.iter().sum::<f64>() / samples as f64;

    let gram_in = ComplexMatrix::from_fn(samples, samples, |a, b| inputs[a].vector().dotc(inputs[b].vector()));
    let gram_out = ComplexMatrix::from_fn(samples, samples, |a, b| images[a].vector().dotc(images[b].vector()));
    let mut worst = (0, 0, 0.0f64);
    for a in 0..samples {
        for b in 0..samples {
            let gap = (gram_in[(a, b)].norm() - gram_out[(a, b)].norm()).abs();
            if gap > worst.2 {
                worst = (a, b, gap);
            }
        }
    }
    if worst.2 > tol {
        let w = mixture_witness(s, &inputs[worst.0], &inputs[worst.1], Violation::OverlapMismatch, tol);
        return Ok(SingleSystemVerdict::rejected(w));
    }

    let (phase_u, res_u) = fit_phases(&gram_out, &gram_in);
    let (phase_a, res_a) = fit_phases(&gram_out, &gram_in.conjugate());
    let unitary_fits = res_u <= tol;
    let anti_fits = res_a <= tol;
    if !unitary_fits && !anti_fits {
        let w = mixture_witness(s, &inputs[0], &inputs[1], Violation::ReconstructionMismatch, tol);
        return Ok(SingleSystemVerdict::rejected(w));
    }
    // Continuous evolutions are never antilinear, so a tie goes to the unitary branch.
    let (kind, phases) = if unitary_fits {
        (SingleSystemKind::UnitaryConjugation, phase_u)
    } else {
        (SingleSystemKind::AntiunitaryConjugation, phase_a)
    };

    let mut source = ComplexMatrix::from_fn(d, samples, |r, c| inputs[c].vector()[r]);
    if kind == SingleSystemKind::AntiunitaryConjugation {
        source = source.conjugate();
    }
    let target = ComplexMatrix::from_fn(d, samples, |r, c| images[c].vector()[r] * phases[c]);
    let raw = target * pseudo_inverse(&source, 1e-12)?;
    if unitarity_deviation(&raw) > tol * (d as f64).sqrt() {
        let w = mixture_witness(s, &inputs[0], &inputs[1], Violation::ReconstructionMismatch, tol);
        return Ok(SingleSystemVerdict::rejected(w));
    }
    let u = nearest_unitary(&raw)?;

    let candidate = match kind {
        SingleSystemKind::UnitaryConjugation => Superoperator::unitary_conjugation(&u, gain),
        _ => Superoperator::antiunitary_conjugation(&u, gain),
    };
    let mut fresh = Generator::with_stream(config.seed, 1);
    let mut verification_error = 0.0f64;
    for k in 0..samples {
        let rho = fresh.density(d, 1 + k % d)?;
        let err = relative_error(&candidate.apply(rho.matrix()), &s.apply(rho.matrix()));
        verification_error = verification_error.max(err);
    }
    if verification_error > tol {
        let a = fresh.pure_state(d);
        let b = fresh.pure_state(d);
        let w = mixture_witness(s, &a, &b, Violation::ReconstructionMismatch, tol);
        return Ok(SingleSystemVerdict::rejected(w));
    }

    Ok(SingleSystemVerdict {
        kind,
        unitary: Some(u),
        gain: Some(gain),
        ambiguous: unitary_fits && anti_fits,
        verification_error: Some(verification_error),
        witness: None,
    })
}

/// Builds the explicit 2-dimensional pair `|φ₁⟩ = |0⟩`,
/// `|φ₂⟩ = √(1-λ₂²)|0⟩ + λ₂|1⟩`.
pub fn state_pair(lambda2: f64) -> Result<(PureState, PureState)> {
    check_unit_interval("lambda2", lambda2)?;
    let first = PureState::basis(2, 0);
    let v = ComplexVector::from_vec(vec![c64((1.0 - lambda2 * lambda2).max(0.0).sqrt(), 0.0), c64(lambda2, 0.0)]);
    Ok((first, PureState::normalized(&v)?))
}
