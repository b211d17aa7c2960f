//! Schmidt decomposition, the swap relabeling, and the entanglement
//! measures E, E₁ (renormalized) and E₂ (probabilistic).

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{reshape_bipartite, svd, C64, ComplexMatrix, ComplexVector};
use crate::states::PureState;

/// Dimensions `(n, m)` of `H_A ⊗ H_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BipartiteShape {
    pub n: usize,
    pub m: usize,
}

impl BipartiteShape {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n < 2 || m < 2 {
            return Err(Error::InvalidShape { n, m });
        }
        Ok(Self { n, m })
    }

    pub fn dim(&self) -> usize {
        self.n * self.m
    }

    pub fn swapped(&self) -> Self {
        Self { n: self.m, m: self.n }
    }

    pub fn max_rank(&self) -> usize {
        self.n.min(self.m)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.m + j
    }
}

impl fmt::Display for BipartiteShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n, self.m)
    }
}

/// `v = Σᵢ λᵢ |aᵢ⟩ ⊗ |bᵢ⟩` with `λ₁ ≥ λ₂ ≥ … > 0`.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub left: Vec<PureState>,
    pub right: Vec<PureState>,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn reconstruct(&self) -> ComplexVector {
        let dim = self.left[0].dim() * self.right[0].dim();
        let mut v = ComplexVector::zeros(dim);
        for ((l, a), b) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            v += a.vector().kronecker(b.vector()) * C64::new(*l, 0.0);
        }
        v
    }

    /// Entropy of the squared coefficients after normalizing them to sum to one.
    pub fn entropy(&self) -> f64 {
        entropy_from_coefficients(&self.coefficients)
    }
}

/// Schmidt decomposition via SVD of the `n × m` coefficient matrix.
/// Coefficients at or below `tol · λ₁` are dropped.
pub fn schmidt_decompose(v: &ComplexVector, shape: BipartiteShape, tol: f64) -> Result<SchmidtDecomposition> {
    if v.len() != shape.dim() {
        return Err(Error::DimMismatch { left: v.len(), right: shape.dim() });
    }
    if v.norm() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dec = svd(&reshape_bipartite(v, shape.n, shape.m)?)?;
    let rank = dec.rank(tol);
    let mut left = Vec::with_capacity(rank);
    let mut right = Vec::with_capacity(rank);
    for k in 0..rank {
        left.push(PureState::normalized(&dec.left.column(k).into_owned())?);
        right.push(PureState::normalized(&dec.right.row(k).transpose())?);
    }
    Ok(SchmidtDecomposition { coefficients: dec.singular_values[..rank].to_vec(), left, right })
}

pub fn schmidt_rank(v: &ComplexVector, shape: BipartiteShape, tol: f64) -> Result<usize> {
    schmidt_decompose(v, shape, tol).map(|d| d.rank())
}

/// `-Σ pᵢ log₂ pᵢ` with `pᵢ = λᵢ² / Σλ²`.
pub fn entropy_from_coefficients(coefficients: &[f64]) -> f64 {
    let total: f64 = coefficients.iter().map(|l| l * l).sum();
    if total == 0.0 {
        return 0.0;
    }
    let h: f64 = coefficients
        .iter()
        .map(|l| l * l / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Entropy of entanglement of a normalized state, in ebits.
pub fn entanglement_entropy(psi: &PureState, shape: BipartiteShape) -> Result<f64> {
    Ok(schmidt_decompose(psi.vector(), shape, crate::linalg::DEFAULT_RANK_TOL)?.entropy())
}

/// Renormalized measure: `E₁(c|ψ⟩) = E(|ψ⟩)`.
pub fn measure_e1(v: &ComplexVector, shape: BipartiteShape) -> Result<f64> {
    entanglement_entropy(&PureState::normalized(v)?, shape)
}

/// Probabilistic measure: `E₂(c|ψ⟩) = |c|² E(|ψ⟩)`.
pub fn measure_e2(v: &ComplexVector, shape: BipartiteShape) -> Result<f64> {
    Ok(v.norm_squared() * measure_e1(v, shape)?)
}

/// The relabeling `|i⟩_A |j⟩_B ↦ |j⟩_A' |i⟩_B'` from `n ⊗ m` onto `m ⊗ n`.
pub fn swap_operator(shape: BipartiteShape) -> ComplexMatrix {
    let (n, m) = (shape.n, shape.m);
    let mut s = ComplexMatrix::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..m {
            s[(j * n + i, i * m + j)] = C64::new(1.0, 0.0);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, kron_vec, unitarity_deviation};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn shape22() -> BipartiteShape {
        BipartiteShape::new(2, 2).unwrap()
    }

    fn basis(dim: usize, k: usize) -> ComplexVector {
        PureState::basis(dim, k).into_vector()
    }

    fn bell() -> ComplexVector {
        (basis(4, 0) + basis(4, 3)).scale(FRAC_1_SQRT_2)
    }

    fn psi_c_standard(c: f64, shape: BipartiteShape) -> ComplexVector {
        let mut v = ComplexVector::zeros(shape.dim());
        v[0] = c64(c, 0.0);
        v[shape.dim() - 1] = c64((1.0 - c * c).sqrt(), 0.0);
        v
    }

    fn binary_entropy_bits(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn shape_validation() {
        assert!(BipartiteShape::new(1, 3).is_err());
        assert_eq!(BipartiteShape::new(2, 3).unwrap().swapped(), BipartiteShape { n: 3, m: 2 });
    }

    #[test]
    fn decomposition_examples() {
        let product = kron_vec(&basis(2, 0), &basis(2, 1));
        let d = schmidt_decompose(&product, shape22(), 1e-8).unwrap();
        assert_eq!(d.rank(), 1);
        assert_abs_diff_eq!(d.coefficients[0], 1.0, epsilon = 1e-14);

        let d = schmidt_decompose(&bell(), shape22(), 1e-8).unwrap();
        assert_eq!(d.rank(), 2);
        for c in &d.coefficients {
            assert_abs_diff_eq!(*c, FRAC_1_SQRT_2, epsilon = 1e-14);
        }

        let shape = BipartiteShape::new(3, 4).unwrap();
        let v = psi_c_standard(0.6, shape);
        let d = schmidt_decompose(&v, shape, 1e-8).unwrap();
        assert_eq!(d.rank(), 2);
        assert_abs_diff_eq!(d.coefficients[0], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(d.coefficients[1], 0.6, epsilon = 1e-14);
        assert!((d.reconstruct() - v).norm() < 1e-12);
    }

    #[test]
    fn zero_vector_is_an_error() {
        assert!(matches!(schmidt_decompose(&ComplexVector::zeros(4), shape22(), 1e-8), Err(Error::ZeroVector)));
        assert!(matches!(measure_e2(&ComplexVector::zeros(4), shape22()), Err(Error::ZeroVector)));
    }

    #[test]
    fn entanglement_examples() {
        let product = PureState::normalized(&kron_vec(&basis(2, 1), &basis(2, 0))).unwrap();
        assert_abs_diff_eq!(entanglement_entropy(&product, shape22()).unwrap(), 0.0, epsilon = 1e-12);

        let max = PureState::normalized(&psi_c_standard(FRAC_1_SQRT_2, shape22())).unwrap();
        assert_abs_diff_eq!(entanglement_entropy(&max, shape22()).unwrap(), 1.0, epsilon = 1e-12);

        let oracle = binary_entropy_bits(0.36);
        let psi = PureState::normalized(&psi_c_standard(0.6, shape22())).unwrap();
        assert_abs_diff_eq!(entanglement_entropy(&psi, shape22()).unwrap(), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle, 0.942683, epsilon = 1e-6);
    }

    #[test]
    fn measure_examples() {
        let product = kron_vec(&basis(2, 0), &basis(2, 0));
        assert_abs_diff_eq!(measure_e1(&product.scale(3.0), shape22()).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(measure_e1(&bell().scale(0.2), shape22()).unwrap(), 1.0, epsilon = 1e-12);
        let psi = psi_c_standard(0.6, shape22());
        let oracle = binary_entropy_bits(0.36);
        assert_abs_diff_eq!(measure_e1(&psi.scale(5.0), shape22()).unwrap(), oracle, epsilon = 1e-12);

        assert_abs_diff_eq!(measure_e2(&bell(), shape22()).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(measure_e2(&bell().scale(FRAC_1_SQRT_2), shape22()).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(measure_e2(&psi.scale(2.0), shape22()).unwrap(), 4.0 * oracle, epsilon = 1e-11);
        assert_abs_diff_eq!(4.0 * oracle, 3.770733, epsilon = 1e-6);
    }

    #[test]
    fn swap_examples() {
        let s = swap_operator(shape22());
        assert_eq!(&s * basis(4, 1), basis(4, 2));
        assert_eq!(&s * basis(4, 0), basis(4, 0));
        assert_eq!(&s * &s, ComplexMatrix::identity(4, 4));

        let shape = BipartiteShape::new(2, 3).unwrap();
        let s = swap_operator(shape);
        assert!(unitarity_deviation(&s) < 1e-15);
        let a = ComplexVector::from_vec(vec![c64(1.0, 2.0), c64(-0.5, 0.0)]);
        let b = ComplexVector::from_vec(vec![c64(0.0, 1.0), c64(3.0, 0.0), c64(1.0, -1.0)]);
        assert!((&s * kron_vec(&a, &b) - kron_vec(&b, &a)).norm() < 1e-14);
    }
}
