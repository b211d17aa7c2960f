//! Qualitative classification of bipartite maps: does `L` send product
//! states to product states and entangled states to entangled states?
//!
//! A map passing every stage is either local, `L = A ⊗ B`, or swap-local,
//! `L = Ŝ (A ⊗ B)` with `Ŝ` the relabeling from `n ⊗ m` onto `m ⊗ n`. Every
//! failing stage produces a [`Witness`], a concrete state whose Schmidt rank
//! changes (or which is annihilated) under `L`.

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::linalg::{
    c64, diag_complex, fix_phase_gauge, hermitian_eigenvalues, kron, kron_vec, partial_trace, relative_error,
    svd, Side, C64, ComplexMatrix, ComplexVector, DEFAULT_RANK_TOL,
};
use crate::schmidt::{schmidt_decompose, swap_operator, BipartiteShape};

/// A linear map on `H_A ⊗ H_B`, stored as an `nm × nm` matrix.
///
/// `output_shape` fixes how image vectors are cut into two factors. It is
/// either `shape` or, for swap-local maps with `n ≠ m`, `shape.swapped()`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteMap {
    matrix: ComplexMatrix,
    shape: BipartiteShape,
    output_shape: BipartiteShape,
}

impl BipartiteMap {
    pub fn new(matrix: ComplexMatrix, shape: BipartiteShape) -> Result<Self> {
        Self::with_output_shape(matrix, shape, shape)
    }

    pub fn with_output_shape(matrix: ComplexMatrix, shape: BipartiteShape, output_shape: BipartiteShape) -> Result<Self> {
        let dim = shape.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch {
                expected: format!("{dim}x{dim}"),
                found: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        if output_shape != shape && output_shape != shape.swapped() {
            return Err(Error::ShapeMismatch { expected: format!("{shape} or {}", shape.swapped()), found: output_shape.to_string() });
        }
        Ok(Self { matrix, shape, output_shape })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn shape(&self) -> BipartiteShape {
        self.shape
    }

    pub fn output_shape(&self) -> BipartiteShape {
        self.output_shape
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        &self.matrix * v
    }

    pub fn scaled(&self, z: C64) -> Self {
        Self { matrix: self.matrix.map(|x| x * z), ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    /// A nonzero state annihilated by the map.
    KernelVector,
    ProductToEntangled,
    EntangledToProduct,
    /// A product state whose image is entangled because the phase grid is not rank one.
    NonFactorizablePhase,
    /// Entangled input whose image has a different Schmidt rank ≥ 2.
    SchmidtRankChange,
}

/// A unit input state together with the Schmidt data of the state and of
/// its image. Only constructed when the data actually demonstrate the claim.
#[derive(Debug, Clone)]
pub struct Witness {
    pub kind: WitnessKind,
    pub state: ComplexVector,
    pub image: ComplexVector,
    pub input_coefficients: Vec<f64>,
    /// Empty when the image vanishes.
    pub image_coefficients: Vec<f64>,
    /// For kernel witnesses: a Schmidt-rank-2 state whose image has rank ≤ 1.
    pub companion: Option<Box<Witness>>,
}

fn schmidt_coefficients(v: &ComplexVector, shape: BipartiteShape, tol: f64) -> Result<Vec<f64>> {
    if v.norm() == 0.0 {
        return Ok(Vec::new());
    }
    Ok(schmidt_decompose(v, shape, tol)?.coefficients)
}

fn is_negligible(image: &ComplexVector, map: &BipartiteMap, state_norm: f64, tol: f64) -> bool {
    image.norm() <= tol * map.matrix().norm() * state_norm
}

fn kind_holds(kind: WitnessKind, input_rank: usize, image_rank: usize) -> bool {
    match kind {
        WitnessKind::KernelVector => image_rank == 0,
        WitnessKind::ProductToEntangled | WitnessKind::NonFactorizablePhase => input_rank == 1 && image_rank >= 2,
        WitnessKind::EntangledToProduct => input_rank >= 2 && image_rank <= 1,
        WitnessKind::SchmidtRankChange => input_rank != image_rank,
    }
}

fn rank_change_kind(input_rank: usize, image_rank: usize) -> WitnessKind {
    match (input_rank, image_rank) {
        (_, 0) => WitnessKind::KernelVector,
        (1, _) => WitnessKind::ProductToEntangled,
        (_, 1) => WitnessKind::EntangledToProduct,
        _ => WitnessKind::SchmidtRankChange,
    }
}

/// Schmidt rank through the reduced density matrix rather than an SVD.
/// Eigenvalues are squared coefficients, hence the squared threshold, floored
/// where eigenvalue rounding takes over.
fn oracle_rank(v: &ComplexVector, shape: BipartiteShape, tol: f64) -> Result<usize> {
    let rho = v * v.adjoint();
    let reduced = partial_trace(&rho, (shape.n, shape.m), Side::B)?;
    let values = hermitian_eigenvalues(&reduced, 1e-9 * reduced.norm().max(f64::MIN_POSITIVE))?;
    let top = values.first().copied().unwrap_or(0.0);
    let cut = (tol * tol).max(1e-13) * top;
    Ok(values.iter().filter(|&&x| x > cut).count())
}

impl Witness {
    /// Applies `map` to `state` and keeps the witness only if the Schmidt
    /// data confirm `kind`.
    pub fn build(kind: WitnessKind, map: &BipartiteMap, state: &ComplexVector, tol: f64) -> Result<Option<Self>> {
        let norm = state.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let state = state.unscale(norm);
        let mut image = map.apply(&state);
        if is_negligible(&image, map, 1.0, tol) {
            image.fill(C64::new(0.0, 0.0));
        }
        let input_coefficients = schmidt_coefficients(&state, map.shape(), tol)?;
        let image_coefficients = schmidt_coefficients(&image, map.output_shape(), tol)?;
        if !kind_holds(kind, input_coefficients.len(), image_coefficients.len()) {
            return Ok(None);
        }
        Ok(Some(Self { kind, state, image, input_coefficients, image_coefficients, companion: None }))
    }

    pub fn input_rank(&self) -> usize {
        self.input_coefficients.len()
    }

    pub fn image_rank(&self) -> usize {
        self.image_coefficients.len()
    }

    /// Recomputes the image and both ranks from scratch via partial traces.
    pub fn reverify(&self, map: &BipartiteMap, tol: f64) -> bool {
        let image = map.apply(&self.state);
        let input_rank = oracle_rank(&self.state, map.shape(), tol);
        let image_rank = if is_negligible(&image, map, self.state.norm(), tol) {
            Ok(0)
        } else {
            oracle_rank(&image, map.output_shape(), tol)
        };
        match (input_rank, image_rank) {
            (Ok(r_in), Ok(r_out)) => kind_holds(self.kind, r_in, r_out),
            _ => false,
        }
    }
}

/// `Ok(inner)` on success, `Err(witness)` when the stage finds a violation.
pub type Stage<T> = std::result::Result<T, Witness>;

fn orthogonal_complement(v: &ComplexVector) -> Vec<ComplexVector> {
    let dim = v.len();
    let mut basis = vec![v.normalize()];
    for k in 0..dim {
        let mut w = ComplexVector::zeros(dim);
        w[k] = C64::new(1.0, 0.0);
        for b in &basis {
            let proj = b.dotc(&w);
            w -= b * proj;
        }
        if w.norm() > 1e-6 {
            basis.push(w.normalize());
        }
        if basis.len() == dim {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Given a product `|a₁b₁⟩` in the kernel, the rank-2 state
/// `|a₁b₁⟩ + |a₂b₂⟩` has the same image as `|a₂b₂⟩`.
fn kernel_companion(map: &BipartiteMap, kernel: &ComplexVector, tol: f64) -> Result<Option<Witness>> {
    let shape = map.shape();
    let product = match schmidt_decompose(kernel, shape, tol) {
        Ok(d) if d.rank() == 1 => Some((d.left[0].vector().clone(), d.right[0].vector().clone())),
        _ => None,
    };
    let product = product.or_else(|| {
        let scale = map.matrix().norm();
        (0..shape.dim()).find(|&k| map.matrix().column(k).norm() <= tol * scale).map(|k| {
            let mut a = ComplexVector::zeros(shape.n);
            let mut b = ComplexVector::zeros(shape.m);
            a[k / shape.m] = C64::new(1.0, 0.0);
            b[k % shape.m] = C64::new(1.0, 0.0);
            (a, b)
        })
    });
    let Some((a1, b1)) = product else { return Ok(None) };
    let base = kron_vec(&a1, &b1);
    for a2 in orthogonal_complement(&a1) {
        for b2 in orthogonal_complement(&b1) {
            let state = &base + kron_vec(&a2, &b2);
            if let Some(w) = Witness::build(WitnessKind::EntangledToProduct, map, &state, tol)? {
                return Ok(Some(w));
            }
        }
    }
    Ok(None)
}

/// Full-rank test. A rank-deficient map yields a kernel vector and, when the
/// kernel contains a product state, a companion entangled-to-product witness.
pub fn check_full_rank(map: &BipartiteMap, tol: f64) -> Result<Stage<()>> {
    let dec = svd(map.matrix())?;
    let dim = map.shape().dim();
    if dec.rank(tol) == dim {
        return Ok(Ok(()));
    }
    let kernel: ComplexVector = dec.right.row(dim - 1).adjoint();
    let mut witness = Witness::build(WitnessKind::KernelVector, map, &kernel, tol)?.ok_or(Error::RankDeficient {
        ratio: dec.singular_values[dim - 1] / dec.singular_values[0].max(f64::MIN_POSITIVE),
    })?;
    witness.companion = kernel_companion(map, &witness.state, tol)?.map(Box::new);
    Ok(Err(witness))
}

/// `L|ij⟩ = amplitude · left ⊗ right` with gauge-fixed unit factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductImage {
    pub amplitude: C64,
    pub left: ComplexVector,
    pub right: ComplexVector,
}

#[derive(Debug, Clone)]
pub struct ProductImageTable {
    shape: BipartiteShape,
    output_shape: BipartiteShape,
    entries: Vec<ProductImage>,
}

impl ProductImageTable {
    pub fn shape(&self) -> BipartiteShape {
        self.shape
    }

    pub fn output_shape(&self) -> BipartiteShape {
        self.output_shape
    }

    pub fn get(&self, i: usize, j: usize) -> &ProductImage {
        &self.entries[self.shape.index(i, j)]
    }

    pub fn entries(&self) -> &[ProductImage] {
        &self.entries
    }
}

fn basis_state(dim: usize, k: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[k] = C64::new(1.0, 0.0);
    v
}

/// Schmidt-decomposes the image of every product basis state.
pub fn build_image_table(map: &BipartiteMap, tol: f64) -> Result<Stage<ProductImageTable>> {
    let shape = map.shape();
    let out = map.output_shape();
    let scale = map.matrix().norm();
    let mut entries = Vec::with_capacity(shape.dim());
    for k in 0..shape.dim() {
        let column: ComplexVector = map.matrix().column(k).into_owned();
        if column.norm() <= tol * scale {
            if let Some(w) = Witness::build(WitnessKind::KernelVector, map, &basis_state(shape.dim(), k), tol)? {
                return Ok(Err(w));
            }
        }
        let dec = schmidt_decompose(&column, out, tol)?;
        if dec.rank() >= 2 {
            if let Some(w) = Witness::build(WitnessKind::ProductToEntangled, map, &basis_state(shape.dim(), k), tol)? {
                return Ok(Err(w));
            }
        }
        let (left, pl) = fix_phase_gauge(dec.left[0].vector());
        let (right, pr) = fix_phase_gauge(dec.right[0].vector());
        entries.push(ProductImage { amplitude: pl * pr * dec.coefficients[0], left, right });
    }
    Ok(Ok(ProductImageTable { shape, output_shape: out, entries }))
}

/// `CaseI`: the A'-factor of `L|ij⟩` depends only on `i`, the B'-factor only
/// on `j`. `CaseII`: the roles are exchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    CaseI,
    CaseII,
}

fn parallel(x: &ComplexVector, y: &ComplexVector, tol_par: f64) -> bool {
    x.dotc(y).norm() >= 1.0 - tol_par
}

/// Whether every basis image fits the parallelism pattern of `case`.
pub fn case_holds(table: &ProductImageTable, case: Case, tol_par: f64) -> bool {
    let shape = table.shape;
    let fits_shape = match case {
        Case::CaseI => table.output_shape == shape,
        Case::CaseII => table.output_shape == shape.swapped(),
    };
    if !fits_shape {
        return false;
    }
    (0..shape.n).all(|i| {
        (0..shape.m).all(|j| {
            let here = table.get(i, j);
            match case {
                Case::CaseI => parallel(&here.left, &table.get(i, 0).left, tol_par) && parallel(&here.right, &table.get(0, j).right, tol_par),
                Case::CaseII => parallel(&here.left, &table.get(0, j).left, tol_par) && parallel(&here.right, &table.get(i, 0).right, tol_par),
            }
        })
    })
}

/// CaseI when it holds, else CaseII; the full cascade is checked over all pairs.
pub fn detect_case(table: &ProductImageTable, tol_par: f64) -> Result<Case> {
    [Case::CaseI, Case::CaseII]
        .into_iter()
        .find(|&c| case_holds(table, c, tol_par))
        .ok_or(Error::InconsistentParallelism)
}

/// Searches basis pairs for a witness of an inconsistent table: two images
/// sharing an input index with no common factor, or two images differing in
/// both indices that do share a factor.
pub fn parallelism_witness(map: &BipartiteMap, table: &ProductImageTable, tol_par: f64, tol: f64) -> Result<Option<Witness>> {
    let shape = table.shape;
    let dim = shape.dim();
    let mut candidates: Vec<(f64, WitnessKind, usize, usize)> = Vec::new();
    for p in 0..dim {
        for q in p + 1..dim {
            let (x, y) = (&table.entries[p], &table.entries[q]);
            let od = x.left.dotc(&y.left).norm();
            let oe = x.right.dotc(&y.right).norm();
            let shares_index = p / shape.m == q / shape.m || p % shape.m == q % shape.m;
            if shares_index {
                if od < 1.0 - tol_par && oe < 1.0 - tol_par {
                    candidates.push(((1.0 - od).min(1.0 - oe), WitnessKind::ProductToEntangled, p, q));
                }
            } else if od >= 1.0 - tol_par || oe >= 1.0 - tol_par {
                candidates.push((od.max(oe) - 1.0, WitnessKind::EntangledToProduct, p, q));
            }
        }
    }
    // Product inputs first, strongest violations first.
    candidates.sort_by(|a, b| {
        let rank = |k: WitnessKind| (k != WitnessKind::ProductToEntangled) as u8;
        rank(a.1).cmp(&rank(b.1)).then(b.0.total_cmp(&a.0))
    });
    for (_, kind, p, q) in candidates {
        let state = basis_state(dim, p) + basis_state(dim, q);
        if let Some(w) = Witness::build(kind, map, &state, tol)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Unit-column factors and the residual phase grid
/// `c̃ᵢⱼ = ⟨(A eᵢ) ⊗ (B eⱼ)| L |ij⟩` (CaseI) or with the output factors
/// exchanged (CaseII).
#[derive(Debug, Clone)]
pub struct ExtractedFactors {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub grid: ComplexMatrix,
}

pub fn extract_factors(table: &ProductImageTable, case: Case) -> Result<ExtractedFactors> {
    let shape = table.shape;
    let (n, m) = (shape.n, shape.m);
    let expected = match case {
        Case::CaseI => shape,
        Case::CaseII => shape.swapped(),
    };
    if table.output_shape != expected {
        return Err(Error::ShapeMismatch { expected: expected.to_string(), found: table.output_shape.to_string() });
    }
    let (a_col, b_col): (Vec<&ComplexVector>, Vec<&ComplexVector>) = match case {
        Case::CaseI => ((0..n).map(|i| &table.get(i, 0).left).collect(), (0..m).map(|j| &table.get(0, j).right).collect()),
        Case::CaseII => ((0..n).map(|i| &table.get(i, 0).right).collect(), (0..m).map(|j| &table.get(0, j).left).collect()),
    };
    let a = ComplexMatrix::from_fn(n, n, |r, c| a_col[c][r]);
    let b = ComplexMatrix::from_fn(m, m, |r, c| b_col[c][r]);
    let grid = ComplexMatrix::from_fn(n, m, |i, j| {
        let img = table.get(i, j);
        let (da, db) = match case {
            Case::CaseI => (a_col[i].dotc(&img.left), b_col[j].dotc(&img.right)),
            Case::CaseII => (a_col[i].dotc(&img.right), b_col[j].dotc(&img.left)),
        };
        img.amplitude * da * db
    });
    Ok(ExtractedFactors { a, b, grid })
}

/// A product input `(eᵢ + e_k) ⊗ (f_j + f_l) / 2` whose image under the
/// diagonal map `|ij⟩ ↦ gridᵢⱼ |ij⟩` is entangled.
#[derive(Debug, Clone)]
pub struct GridWitness {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    pub state: ComplexVector,
    pub image: ComplexVector,
    pub image_coefficients: Vec<f64>,
}

/// Rank-one factorization `gridᵢⱼ = μᵢ νⱼ` from the dominant singular triple,
/// in the gauge `μ₀ = 1`.
pub fn factor_phase_grid(grid: &ComplexMatrix, tol: f64) -> Result<std::result::Result<(Vec<C64>, Vec<C64>), GridWitness>> {
    let (n, m) = grid.shape();
    let dec = svd(grid)?;
    let sigma = dec.singular_values[0];
    let mut mu: Vec<C64> = (0..n).map(|i| dec.left[(i, 0)] * sigma).collect();
    let mut nu: Vec<C64> = (0..m).map(|j| dec.right[(0, j)]).collect();
    let approx = ComplexMatrix::from_fn(n, m, |i, j| mu[i] * nu[j]);
    if relative_error(&approx, grid) <= tol && mu[0].norm() > 0.0 {
        let g = mu[0];
        mu.iter_mut().for_each(|x| *x /= g);
        nu.iter_mut().for_each(|x| *x *= g);
        return Ok(Ok((mu, nu)));
    }

    let mut best = (0, 1, 0, 1, -1.0f64);
    for i in 0..n {
        for k in i + 1..n {
            for j in 0..m {
                for l in j + 1..m {
                    let (p, q) = (grid[(i, j)] * grid[(k, l)], grid[(i, l)] * grid[(k, j)]);
                    let scale = p.norm() + q.norm();
                    let v = if scale > 0.0 { (p - q).norm() / scale } else { 0.0 };
                    if v > best.4 {
                        best = (i, k, j, l, v);
                    }
                }
            }
        }
    }
    let (i, k, j, l, _) = best;
    let mut state = ComplexVector::zeros(n * m);
    for &r in &[i, k] {
        for &c in &[j, l] {
            state[r * m + c] = c64(0.5, 0.0);
        }
    }
    let image = ComplexVector::from_fn(n * m, |idx, _| state[idx] * grid[(idx / m, idx % m)]);
    let image_coefficients = schmidt_coefficients(&image, BipartiteShape::new(n, m)?, tol)?;
    Ok(Err(GridWitness { rows: (i, k), cols: (j, l), state, image, image_coefficients }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    /// Rank decisions and the final reconstruction gate.
    pub tol: f64,
    /// Overlap threshold for the parallelism tests.
    pub parallel_tol: f64,
    pub spot_checks: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { tol: DEFAULT_RANK_TOL, parallel_tol: DEFAULT_RANK_TOL, spot_checks: 16, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualitativeKind {
    Local,
    SwapLocal,
    NotPreserving,
}

/// `Local`: `L ≈ A ⊗ B`. `SwapLocal`: `Ŝ_out L ≈ A ⊗ B`, where `Ŝ_out`
/// relabels `output_shape` back onto `shape`; `A` is `n × n`, `B` is `m × m`.
#[derive(Debug, Clone)]
pub struct QualitativeVerdict {
    pub kind: QualitativeKind,
    pub a: Option<ComplexMatrix>,
    pub b: Option<ComplexMatrix>,
    pub reconstruction_error: Option<f64>,
    pub output_shape: BipartiteShape,
    pub witness: Option<Witness>,
}

impl QualitativeVerdict {
    pub fn is_preserving(&self) -> bool {
        self.kind != QualitativeKind::NotPreserving
    }

    /// `A ⊗ B`, or `Ŝ (A ⊗ B)` for swap-local verdicts.
    pub fn reconstruct(&self, shape: BipartiteShape) -> Option<ComplexMatrix> {
        let local = kron(self.a.as_ref()?, self.b.as_ref()?);
        match self.kind {
            QualitativeKind::Local => Some(local),
            QualitativeKind::SwapLocal => Some(swap_operator(shape) * local),
            QualitativeKind::NotPreserving => None,
        }
    }
}

fn rejected(map: &BipartiteMap, witness: Option<Witness>) -> QualitativeVerdict {
    QualitativeVerdict {
        kind: QualitativeKind::NotPreserving,
        a: None,
        b: None,
        reconstruction_error: None,
        output_shape: map.output_shape(),
        witness,
    }
}

/// Random product and entangled states of every rank; the first whose
/// Schmidt rank changes under `map` becomes a witness.
pub fn spot_check(map: &BipartiteMap, count: usize, seed: u64, tol: f64) -> Result<Option<Witness>> {
    let shape = map.shape();
    let mut gen = Generator::with_stream(seed, 2);
    for k in 0..count {
        let rank = 1 + k % shape.max_rank();
        let state = if rank == 1 { gen.product_state(shape) } else { gen.schmidt_state(shape, rank)? };
        let image = map.apply(state.vector());
        let r_in = schmidt_coefficients(state.vector(), shape, tol)?.len();
        let r_out = if is_negligible(&image, map, 1.0, tol) { 0 } else { schmidt_coefficients(&image, map.output_shape(), tol)?.len() };
        if r_in != r_out {
            if let Some(w) = Witness::build(rank_change_kind(r_in, r_out), map, state.vector(), tol)? {
                return Ok(Some(w));
            }
        }
    }
    Ok(None)
}

/// Runs rank → basis images → parallelism case → factors → phase grid, then
/// checks the reconstruction and spot-checks Schmidt-rank invariance.
pub fn classify(map: &BipartiteMap, config: &ClassifierConfig) -> Result<QualitativeVerdict> {
    let tol = config.tol;
    if let Err(w) = check_full_rank(map, tol)? {
        return Ok(rejected(map, Some(w)));
    }
    let table = match build_image_table(map, tol)? {
        Ok(t) => t,
        Err(w) => return Ok(rejected(map, Some(w))),
    };

    let cases: Vec<Case> = [Case::CaseI, Case::CaseII].into_iter().filter(|&c| case_holds(&table, c, config.parallel_tol)).collect();
    if cases.is_empty() {
        let w = match parallelism_witness(map, &table, config.parallel_tol, tol)? {
            Some(w) => Some(w),
            None => spot_check(map, config.spot_checks.max(64), config.seed, tol)?,
        };
        return Ok(rejected(map, w));
    }

    let mut failure: Option<Witness> = None;
    let scale = map.matrix().norm();
    for case in cases {
        let factors = extract_factors(&table, case)?;
        let (mu, nu) = match factor_phase_grid(&factors.grid, tol)? {
            Ok(pair) => pair,
            Err(gw) => {
                if failure.is_none() {
                    failure = Witness::build(WitnessKind::NonFactorizablePhase, map, &gw.state, tol)?;
                }
                continue;
            }
        };
        let a = factors.a * diag_complex(&mu);
        let b = factors.b * diag_complex(&nu);
        let (kind, target) = match case {
            Case::CaseI => (QualitativeKind::Local, map.matrix().clone()),
            Case::CaseII => (QualitativeKind::SwapLocal, swap_operator(map.output_shape()) * map.matrix()),
        };
        let error = (kron(&a, &b) - target).norm() / scale;
        if error > tol {
            continue;
        }
        if let Some(w) = spot_check(map, config.spot_checks, config.seed, tol)? {
            failure.get_or_insert(w);
            continue;
        }
        return Ok(QualitativeVerdict {
            kind,
            a: Some(a),
            b: Some(b),
            reconstruction_error: Some(error),
            output_shape: map.output_shape(),
            witness: None,
        });
    }
    if failure.is_none() {
        failure = spot_check(map, config.spot_checks.max(64), config.seed ^ 0x9e37_79b9, tol)?;
    }
    Ok(rejected(map, failure))
}

/// `CNOT` on `2 ⊗ 2`, control on the first factor.
pub fn cnot() -> ComplexMatrix {
    crate::linalg::real_matrix(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 0.0]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real_matrix, unitarity_deviation};
    use approx::assert_abs_diff_eq;

    fn shape(n: usize, m: usize) -> BipartiteShape {
        BipartiteShape::new(n, m).unwrap()
    }

    fn map22(m: ComplexMatrix) -> BipartiteMap {
        BipartiteMap::new(m, shape(2, 2)).unwrap()
    }

    #[test]
    fn map_shape_validation() {
        assert!(BipartiteMap::new(ComplexMatrix::identity(5, 5), shape(2, 2)).is_err());
        let s = shape(2, 3);
        assert!(BipartiteMap::with_output_shape(ComplexMatrix::identity(6, 6), s, s.swapped()).is_ok());
        assert!(BipartiteMap::with_output_shape(ComplexMatrix::identity(6, 6), s, shape(2, 2)).is_err());
    }

    #[test]
    fn full_rank_examples() {
        assert!(check_full_rank(&map22(ComplexMatrix::identity(4, 4)), 1e-8).unwrap().is_ok());

        let projector = crate::linalg::diag_real(&[1.0, 1.0, 1.0, 0.0]);
        let map = map22(projector);
        let w = check_full_rank(&map, 1e-8).unwrap().unwrap_err();
        assert_eq!(w.kind, WitnessKind::KernelVector);
        assert!(w.reverify(&map, 1e-8));
        assert!((w.state[3].norm() - 1.0).abs() < 1e-12);

        let companion = w.companion.expect("kernel is spanned by |11>");
        assert_eq!(companion.input_rank(), 2);
        assert!(companion.image_rank() <= 1);
        assert!(companion.reverify(&map, 1e-8));
    }

    #[test]
    fn table_examples() {
        let mut g = Generator::new(4);
        let s = shape(2, 3);
        let a = g.random_invertible(2, 10.0).unwrap();
        let b = g.random_invertible(3, 10.0).unwrap();
        let map = BipartiteMap::new(kron(&a, &b), s).unwrap();
        let table = build_image_table(&map, 1e-8).unwrap().unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert!(parallel(&table.get(i, j).left, &table.get(i, 0).left, 1e-10));
            }
        }
        assert_eq!(detect_case(&table, 1e-8).unwrap(), Case::CaseI);

        let table = build_image_table(&map22(cnot()), 1e-8).unwrap().unwrap();
        assert_eq!(detect_case(&table, 1e-8), Err(Error::InconsistentParallelism));

        // |00> -> Bell, rest permuted so the map stays unitary.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bellish = real_matrix(&[&[h, 0.0, 0.0, h], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[h, 0.0, 0.0, -h]]);
        let map = map22(bellish);
        let w = build_image_table(&map, 1e-8).unwrap().unwrap_err();
        assert_eq!(w.kind, WitnessKind::ProductToEntangled);
        assert_eq!(w.state, basis_state(4, 0));
        assert!(w.reverify(&map, 1e-8));
    }

    #[test]
    fn swapped_map_is_case_two() {
        let mut g = Generator::new(12);
        let map = g.local_map(shape(2, 2), true, 10.0).unwrap();
        let table = build_image_table(&map, 1e-8).unwrap().unwrap();
        assert_eq!(detect_case(&table, 1e-8).unwrap(), Case::CaseII);
    }

    #[test]
    fn identity_factors() {
        let table = build_image_table(&map22(ComplexMatrix::identity(4, 4)), 1e-8).unwrap().unwrap();
        let f = extract_factors(&table, Case::CaseI).unwrap();
        assert!((&f.a - ComplexMatrix::identity(2, 2)).norm() < 1e-14);
        assert!((&f.b - ComplexMatrix::identity(2, 2)).norm() < 1e-14);
        assert!(f.grid.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-14));
        assert!(extract_factors(&table, Case::CaseII).is_ok());
    }

    #[test]
    fn diagonal_phases_give_unit_modulus_grid() {
        let phases: Vec<C64> = (0..4).map(|k| C64::from_polar(1.0, 0.3 * k as f64 + 0.1)).collect();
        let map = map22(diag_complex(&phases));
        let table = build_image_table(&map, 1e-8).unwrap().unwrap();
        let f = extract_factors(&table, Case::CaseI).unwrap();
        for z in f.grid.iter() {
            assert_abs_diff_eq!(z.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn grid_examples() {
        let grid = real_matrix(&[&[1.0, 2.0], &[3.0, 6.0]]);
        let (mu, nu) = factor_phase_grid(&grid, 1e-8).unwrap().unwrap();
        for (x, e) in mu.iter().zip([1.0, 3.0]) {
            assert!((x - C64::new(e, 0.0)).norm() < 1e-12);
        }
        for (x, e) in nu.iter().zip([1.0, 2.0]) {
            assert!((x - C64::new(e, 0.0)).norm() < 1e-12);
        }

        let ones = ComplexMatrix::from_element(3, 2, C64::new(1.0, 0.0));
        let (mu, nu) = factor_phase_grid(&ones, 1e-8).unwrap().unwrap();
        assert!(mu.iter().chain(&nu).all(|x| (x - C64::new(1.0, 0.0)).norm() < 1e-12));

        let grid = real_matrix(&[&[1.0, 2.0], &[3.0, 5.0]]);
        let w = factor_phase_grid(&grid, 1e-8).unwrap().unwrap_err();
        assert_eq!((w.rows, w.cols), ((0, 1), (0, 1)));
        assert_eq!(w.image_coefficients.len(), 2);
        assert_eq!(oracle_rank(&w.image, shape(2, 2), 1e-8).unwrap(), 2);
        assert_eq!(oracle_rank(&w.state, shape(2, 2), 1e-8).unwrap(), 1);
    }

    #[test]
    fn classify_haar_local_unitary() {
        let mut g = Generator::new(33);
        let s = shape(3, 3);
        let map = BipartiteMap::new(g.local_unitary(s), s).unwrap();
        let v = classify(&map, &ClassifierConfig::default()).unwrap();
        assert_eq!(v.kind, QualitativeKind::Local);
        assert!(v.reconstruction_error.unwrap() <= 1e-9);
        assert!(relative_error(&v.reconstruct(s).unwrap(), map.matrix()) <= 1e-9);
    }

    #[test]
    fn classify_swap_local() {
        let mut g = Generator::new(34);
        for s in [shape(2, 2), shape(2, 3), shape(4, 3)] {
            let map = g.local_map(s, true, 100.0).unwrap();
            let v = classify(&map, &ClassifierConfig::default()).unwrap();
            assert_eq!(v.kind, QualitativeKind::SwapLocal, "{s}");
            assert_eq!(v.a.as_ref().unwrap().nrows(), s.n);
            assert!(relative_error(&v.reconstruct(s).unwrap(), map.matrix()) <= 1e-8);
        }
    }

    #[test]
    fn classify_pure_swap() {
        let s = shape(3, 3);
        let map = BipartiteMap::new(swap_operator(s), s).unwrap();
        let v = classify(&map, &ClassifierConfig::default()).unwrap();
        assert_eq!(v.kind, QualitativeKind::SwapLocal);
        let (a, b) = (v.a.unwrap(), v.b.unwrap());
        assert!(unitarity_deviation(&a) < 1e-12);
        let phase = a[(0, 0)];
        assert!((a - ComplexMatrix::identity(3, 3) * phase).norm() < 1e-12);
        let phase = b[(0, 0)];
        assert!((b - ComplexMatrix::identity(3, 3) * phase).norm() < 1e-12);
    }

    #[test]
    fn classify_cnot() {
        let map = map22(cnot());
        let v = classify(&map, &ClassifierConfig::default()).unwrap();
        assert_eq!(v.kind, QualitativeKind::NotPreserving);
        let w = v.witness.unwrap();
        assert_eq!(w.kind, WitnessKind::ProductToEntangled);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus_zero = ComplexVector::from_vec(vec![c64(h, 0.0), c64(0.0, 0.0), c64(h, 0.0), c64(0.0, 0.0)]);
        assert!((&w.state - plus_zero).norm() < 1e-12);
        assert_eq!(w.image_coefficients.len(), 2);
        assert!(w.reverify(&map, 1e-8));
    }

    #[test]
    fn classify_swap_then_cnot() {
        let map = map22(cnot() * swap_operator(shape(2, 2)));
        let v = classify(&map, &ClassifierConfig::default()).unwrap();
        assert_eq!(v.kind, QualitativeKind::NotPreserving);
        assert!(v.witness.unwrap().reverify(&map, 1e-8));
    }

    #[test]
    fn classify_phase_gate_grid_witness() {
        // Controlled phase: all basis images are products and the cases hold,
        // but the phase grid [[1,1],[1,-1]] is not rank one.
        let map = map22(crate::linalg::diag_real(&[1.0, 1.0, 1.0, -1.0]));
        let v = classify(&map, &ClassifierConfig::default()).unwrap();
        assert_eq!(v.kind, QualitativeKind::NotPreserving);
        let w = v.witness.unwrap();
        assert_eq!(w.kind, WitnessKind::NonFactorizablePhase);
        assert!(w.reverify(&map, 1e-8));
    }

    #[test]
    fn gauge_consistency() {
        let mut g = Generator::new(5);
        let map = g.local_map(shape(2, 3), false, 50.0).unwrap();
        let z = C64::from_polar(2.5, 0.7);
        let v1 = classify(&map, &ClassifierConfig::default()).unwrap();
        let v2 = classify(&map.scaled(z), &ClassifierConfig::default()).unwrap();
        assert_eq!(v1.kind, v2.kind);
        let r1 = v1.reconstruct(map.shape()).unwrap();
        let r2 = v2.reconstruct(map.shape()).unwrap();
        assert!(relative_error(&r2, &r1.map(|x| x * z)) < 1e-9);
    }

    #[test]
    fn perturbed_map_rejected() {
        let mut g = Generator::new(6);
        let map = g.local_map(shape(3, 2), false, 10.0).unwrap();
        let bad = g.perturb(&map, 1e-2).unwrap();
        let v = classify(&bad, &ClassifierConfig::default()).unwrap();
        assert_eq!(v.kind, QualitativeKind::NotPreserving);
        assert!(v.witness.unwrap().reverify(&bad, 1e-8));
    }
}
