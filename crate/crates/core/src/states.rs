//! Pure states, density matrices and von Neumann entropy.
//!
//! Entropies are in bits (logarithm base 2).

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermitian_deviation, C64, ComplexMatrix, ComplexVector};

/// Default tolerance for state validation.
pub const STATE_TOL: f64 = 1e-9;

/// Eigenvalues in `[-ENTROPY_CLAMP, 0)` are treated as zero when taking logs.
pub const ENTROPY_CLAMP: f64 = 1e-9;

/// A unit vector. Equality of states is up to global phase, see [`PureState::same_ray`].
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(ComplexVector);

impl PureState {
    pub fn new(v: ComplexVector, tol: f64) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::ZeroVector);
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self(v))
    }

    /// Normalizes any nonzero vector.
    pub fn normalized(v: &ComplexVector) -> Result<Self> {
        let norm = v.norm();
        if v.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self(v.unscale(norm)))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = ComplexVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn vector(&self) -> &ComplexVector {
        &self.0
    }

    pub fn into_vector(self) -> ComplexVector {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.0 * self.0.adjoint()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix(self.projector())
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(self.0.dotc(&other.0))
    }

    pub fn same_ray(&self, other: &PureState, tol: f64) -> bool {
        overlap_modulus(self, other).is_ok_and(|o| o >= 1.0 - tol)
    }
}

/// A pure projector multiplied by a positive gain, `d |ψ⟩⟨ψ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPureState {
    gain: f64,
    state: PureState,
}

impl ScaledPureState {
    pub fn new(gain: f64, state: PureState) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::ParamOutOfRange { name: "gain", value: gain });
        }
        Ok(Self { gain, state })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn matrix(&self) -> ComplexMatrix {
        self.state.projector().scale(self.gain)
    }
}

/// `|⟨φ|ψ⟩|`, clamped into `[0, 1]`.
pub fn overlap_modulus(phi: &PureState, psi: &PureState) -> Result<f64> {
    Ok(phi.inner(psi)?.norm().min(1.0))
}

/// Splits `φ₂ = λ₁ φ₁ + λ₂ Φ` with `Φ ⟂ φ₁` and `λ₂ ≥ 0`.
#[derive(Debug, Clone)]
pub struct RelativeDecomposition {
    pub parallel: C64,
    pub orthogonal: f64,
    pub complement: PureState,
}

impl RelativeDecomposition {
    pub fn recombine(&self, phi1: &PureState) -> ComplexVector {
        phi1.vector() * self.parallel + self.complement.vector() * C64::new(self.orthogonal, 0.0)
    }
}

pub fn decompose_relative(phi1: &PureState, phi2: &PureState, tol: f64) -> Result<RelativeDecomposition> {
    let parallel = phi1.inner(phi2)?;
    let rest = phi2.vector() - phi1.vector() * parallel;
    let orthogonal = rest.norm();
    if orthogonal <= tol {
        return Err(Error::ParallelStates);
    }
    Ok(RelativeDecomposition { parallel, orthogonal, complement: PureState(rest.unscale(orthogonal)) })
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidDensityMatrix { reason: format!("shape {}x{}", m.nrows(), m.ncols()) });
        }
        let dev = hermitian_deviation(&m);
        if dev > tol {
            return Err(Error::InvalidDensityMatrix { reason: format!("not Hermitian (deviation {dev:.3e})") });
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
            return Err(Error::InvalidDensityMatrix { reason: format!("trace {trace}") });
        }
        let low = hermitian_eigenvalues(&m, tol)?.last().copied().unwrap_or(0.0);
        if low < -tol {
            return Err(Error::InvalidDensityMatrix { reason: format!("negative eigenvalue {low:.3e}") });
        }
        Ok(Self(m))
    }

    /// Normalizes a Hermitian PSD matrix by its trace.
    pub fn from_unnormalized(m: &ComplexMatrix, tol: f64) -> Result<Self> {
        let trace = m.trace().re;
        if !(trace > 0.0) {
            return Err(Error::InvalidDensityMatrix { reason: format!("non-positive trace {trace}") });
        }
        Self::new(m.unscale(trace), tol)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim, dim).unscale(dim as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.0, STATE_TOL.max(1e-12 * self.0.norm()))
    }

    pub fn entropy(&self) -> Result<f64> {
        von_neumann_entropy(self)
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `U ρ U†`; `u` is assumed unitary.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self(u * &self.0 * u.adjoint())
    }
}

/// `S(ρ) = -Σ pᵢ log₂ pᵢ` over the spectrum of `ρ`, with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_spectrum(&rho.eigenvalues()?)
}

/// Shannon entropy (bits) of an eigenvalue list summing to one.
///
/// Values in `[-ENTROPY_CLAMP, 0)` are clamped to zero; anything more
/// negative is rejected.
pub fn entropy_of_spectrum(values: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for &p in values {
        if p < -ENTROPY_CLAMP {
            return Err(Error::InvalidDensityMatrix { reason: format!("negative eigenvalue {p:.3e}") });
        }
        if p > 0.0 {
            total -= p * p.log2();
        }
    }
    Ok(total.max(0.0))
}

/// Entropy of `M / Tr M` for a Hermitian PSD `M` with positive trace.
pub fn normalized_entropy(m: &ComplexMatrix, tol: f64) -> Result<f64> {
    let trace = m.trace().re;
    if !(trace > 0.0) {
        return Err(Error::InvalidDensityMatrix { reason: format!("non-positive trace {trace}") });
    }
    let values: Vec<f64> = hermitian_eigenvalues(m, tol * m.norm().max(1.0))?.iter().map(|v| v / trace).collect();
    entropy_of_spectrum(&values)
}

/// `p ρ₁ + (1 - p) ρ₂`.
pub fn mix(rho1: &DensityMatrix, rho2: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimMismatch { left: rho1.dim(), right: rho2.dim() });
    }
    Ok(DensityMatrix(rho1.0.scale(p) + rho2.0.scale(1.0 - p)))
}
