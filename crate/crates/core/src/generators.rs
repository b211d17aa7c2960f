//! Seeded random instances: Haar unitaries, well-conditioned invertible
//! factors, states, density matrices and (swap-)local bipartite maps.
//!
//! Every generator is a ChaCha8 stream keyed by `(seed, stream)`, so the same
//! pair reproduces the same instances bit for bit on a given build.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::classifier::BipartiteMap;
use crate::error::{Error, Result};
use crate::linalg::{c64, diag_real, kron, kron_vec, ComplexMatrix, ComplexVector, C64};
use crate::schmidt::{swap_operator, BipartiteShape};
use crate::states::{DensityMatrix, PureState, STATE_TOL};

/// Name of the PRNG, recorded in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng(seed_from_u64, stream)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Seed(pub u64);

#[derive(Debug, Clone)]
pub struct Generator {
    rng: ChaCha8Rng,
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn index(&mut self, upper: usize) -> usize {
        self.rng.random_range(0..upper)
    }

    /// Standard complex normal, `E|z|² = 1`.
    pub fn gaussian(&mut self) -> C64 {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        c64(re, im).scale(std::f64::consts::FRAC_1_SQRT_2)
    }

    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> ComplexMatrix {
        // Fill row by row so the stream order does not depend on storage layout.
        let mut m = ComplexMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = self.gaussian();
            }
        }
        m
    }

    pub fn gaussian_vector(&mut self, dim: usize) -> ComplexVector {
        ComplexVector::from_fn(dim, |_, _| self.gaussian())
    }

    /// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
    /// `R`'s diagonal moved into `Q`.
    pub fn haar_unitary(&mut self, dim: usize) -> ComplexMatrix {
        assert!(dim >= 1, "haar_unitary needs dim >= 1");
        let qr = self.gaussian_matrix(dim, dim).qr();
        let (mut q, r) = (qr.q(), qr.r());
        for k in 0..dim {
            let z = r[(k, k)];
            let phase = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
            for row in 0..dim {
                q[(row, k)] *= phase;
            }
        }
        q
    }

    /// `U diag(σ) V` with `σ` log-uniform in `[s/cond_cap, s]`, `s` uniform in `[0.5, 2]`.
    pub fn random_invertible(&mut self, dim: usize, cond_cap: f64) -> Result<ComplexMatrix> {
        if !(cond_cap >= 1.0) {
            return Err(Error::ParamOutOfRange { name: "cond_cap", value: cond_cap });
        }
        let u = self.haar_unitary(dim);
        let v = self.haar_unitary(dim);
        let scale = self.uniform(0.5, 2.0);
        let log_cap = cond_cap.ln();
        let mut sigma: Vec<f64> = (0..dim).map(|_| scale * (-log_cap * self.rng.random::<f64>()).exp()).collect();
        if dim > 1 && cond_cap > 1.0 {
            // Pin the extremes so the requested spread is actually exercised.
            sigma[0] = scale;
            sigma[dim - 1] = scale / cond_cap;
        }
        Ok(u * diag_real(&sigma) * v)
    }

    pub fn pure_state(&mut self, dim: usize) -> PureState {
        loop {
            if let Ok(s) = PureState::normalized(&self.gaussian_vector(dim)) {
                return s;
            }
        }
    }

    pub fn product_state(&mut self, shape: BipartiteShape) -> PureState {
        let a = self.pure_state(shape.n);
        let b = self.pure_state(shape.m);
        PureState::normalized(&kron_vec(a.vector(), b.vector())).expect("product of unit vectors")
    }

    /// A state of exact Schmidt rank `rank` in Haar-random local bases, with
    /// coefficients drawn from `[0.5, 1]` before normalization.
    pub fn schmidt_state(&mut self, shape: BipartiteShape, rank: usize) -> Result<PureState> {
        if rank == 0 || rank > shape.max_rank() {
            return Err(Error::ParamOutOfRange { name: "rank", value: rank as f64 });
        }
        let ua = self.haar_unitary(shape.n);
        let ub = self.haar_unitary(shape.m);
        let mut v = ComplexVector::zeros(shape.dim());
        for k in 0..rank {
            let weight = self.uniform(0.5, 1.0);
            let a = ua.column(k).into_owned();
            let b = ub.column(k).into_owned();
            v += kron_vec(&a, &b) * c64(weight, 0.0);
        }
        PureState::normalized(&v)
    }

    /// Mixture of `rank` Haar-random pure states with Dirichlet(1) weights.
    pub fn density(&mut self, dim: usize, rank: usize) -> Result<DensityMatrix> {
        if rank == 0 || rank > dim {
            return Err(Error::ParamOutOfRange { name: "rank", value: rank as f64 });
        }
        // Orthonormal eigenvectors guarantee the requested rank.
        let u = self.haar_unitary(dim);
        let weights: Vec<f64> = (0..rank).map(|_| -(1.0 - self.rng.random::<f64>()).ln()).collect();
        let total: f64 = weights.iter().sum();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (k, w) in weights.iter().enumerate() {
            let col = u.column(k).into_owned();
            m += (&col * col.adjoint()).scale(w / total);
        }
        DensityMatrix::new(m, STATE_TOL)
    }

    /// `A ⊗ B`, or `(A ⊗ B) · Ŝ` when `swap` is set, with random invertible
    /// factors of condition number at most `cond_cap`.
    ///
    /// With `swap` the factors act on the swapped cut: `A` is `m × m`, `B` is
    /// `n × n`, and the output cut is `m ⊗ n`.
    pub fn local_map(&mut self, shape: BipartiteShape, swap: bool, cond_cap: f64) -> Result<BipartiteMap> {
        if swap {
            let out = shape.swapped();
            let a = self.random_invertible(out.n, cond_cap)?;
            let b = self.random_invertible(out.m, cond_cap)?;
            BipartiteMap::with_output_shape(kron(&a, &b) * swap_operator(shape), shape, out)
        } else {
            let a = self.random_invertible(shape.n, cond_cap)?;
            let b = self.random_invertible(shape.m, cond_cap)?;
            BipartiteMap::new(kron(&a, &b), shape)
        }
    }

    /// `U_A ⊗ U_B` with Haar factors.
    pub fn local_unitary(&mut self, shape: BipartiteShape) -> ComplexMatrix {
        let a = self.haar_unitary(shape.n);
        let b = self.haar_unitary(shape.m);
        kron(&a, &b)
    }

    /// `L + ε ‖L‖ G / ‖G‖` with `G` complex Gaussian (Frobenius norms).
    pub fn perturb(&mut self, map: &BipartiteMap, eps: f64) -> Result<BipartiteMap> {
        if !(eps >= 0.0) {
            return Err(Error::ParamOutOfRange { name: "eps", value: eps });
        }
        if eps == 0.0 {
            return Ok(map.clone());
        }
        let dim = map.shape().dim();
        let g = self.gaussian_matrix(dim, dim);
        let delta = g.scale(eps * map.matrix().norm() / g.norm());
        BipartiteMap::with_output_shape(map.matrix() + delta, map.shape(), map.output_shape())
    }
}
