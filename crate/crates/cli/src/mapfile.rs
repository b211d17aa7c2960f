//! JSON interchange for maps and states.
//!
//! ```json
//! { "kind": "bipartite_map", "shape": [2, 2], "matrix": [[[1, 0], [0, 0], ...], ...] }
//! { "kind": "superoperator", "shape": 2, "matrix": [...] }
//! { "kind": "state", "shape": [2, 2], "vector": [[0.707106781, 0], ...] }
//! ```
//!
//! Entries are `[re, im]` pairs or plain reals; either part may be a decimal
//! string. Matrices are row-major.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unitarity_core::classifier::BipartiteMap;
use unitarity_core::dynamics::Superoperator;
use unitarity_core::{BipartiteShape, ComplexMatrix, ComplexVector, Error as CoreError, C64};

use crate::exit::{CliError, ExitCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    BipartiteMap,
    Superoperator,
    State,
}

impl fmt::Display for FileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FileKind::BipartiteMap => "bipartite_map",
            FileKind::Superoperator => "superoperator",
            FileKind::State => "state",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    fn value(&self) -> Result<f64, CliError> {
        let x = match self {
            Scalar::Number(x) => *x,
            Scalar::Text(s) => s.trim().parse::<f64>().map_err(|_| CliError::parse(format!("not a decimal number: {s:?}")))?,
        };
        if !x.is_finite() {
            return Err(CliError::parse(format!("non-finite entry {x}")));
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Pair([Scalar; 2]),
    Real(Scalar),
}

impl Entry {
    pub fn from_complex(z: C64) -> Self {
        Entry::Pair([Scalar::Number(z.re), Scalar::Number(z.im)])
    }

    fn value(&self) -> Result<C64, CliError> {
        match self {
            Entry::Pair([re, im]) => Ok(C64::new(re.value()?, im.value()?)),
            Entry::Real(x) => Ok(C64::new(x.value()?, 0.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeSpec {
    Bipartite([usize; 2]),
    Single(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub kind: FileKind,
    pub shape: ShapeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_shape: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<Entry>>,
}

pub fn matrix_entries(m: &ComplexMatrix) -> Vec<Vec<Entry>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| Entry::from_complex(m[(r, c)])).collect()).collect()
}

impl MapFile {
    pub fn bipartite(map: &BipartiteMap) -> Self {
        let s = map.shape();
        let out = map.output_shape();
        Self {
            kind: FileKind::BipartiteMap,
            shape: ShapeSpec::Bipartite([s.n, s.m]),
            output_shape: (out != s).then_some([out.n, out.m]),
            matrix: Some(matrix_entries(map.matrix())),
            vector: None,
        }
    }

    pub fn superoperator(s: &Superoperator) -> Self {
        Self {
            kind: FileKind::Superoperator,
            shape: ShapeSpec::Single(s.dim()),
            output_shape: None,
            matrix: Some(matrix_entries(s.matrix())),
            vector: None,
        }
    }

    pub fn state(v: &ComplexVector, shape: BipartiteShape) -> Self {
        Self {
            kind: FileKind::State,
            shape: ShapeSpec::Bipartite([shape.n, shape.m]),
            output_shape: None,
            matrix: None,
            vector: Some(v.iter().map(|z| Entry::from_complex(*z)).collect()),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::parse(format!("invalid map file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map files serialize")
    }

    fn expect_kind(&self, kind: FileKind) -> Result<(), CliError> {
        if self.kind != kind {
            return Err(CliError::parse(format!("expected a {kind} file, found {}", self.kind)));
        }
        Ok(())
    }

    fn bipartite_shape(&self) -> Result<BipartiteShape, CliError> {
        match self.shape {
            ShapeSpec::Bipartite([n, m]) => Ok(BipartiteShape::new(n, m)?),
            ShapeSpec::Single(d) => Err(CliError::dimension(format!("expected shape [n, m], found {d}"))),
        }
    }

    fn dense(&self, rows: usize, cols: usize) -> Result<ComplexMatrix, CliError> {
        let data = self.matrix.as_ref().ok_or_else(|| CliError::parse("missing \"matrix\""))?;
        if data.len() != rows || data.iter().any(|r| r.len() != cols) {
            let found_cols = data.first().map_or(0, |r| r.len());
            return Err(CliError::dimension(format!("matrix must be {rows}x{cols}, found {}x{found_cols} (or ragged rows)", data.len())));
        }
        let mut m = ComplexMatrix::zeros(rows, cols);
        for (r, row) in data.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                m[(r, c)] = e.value()?;
            }
        }
        Ok(m)
    }

    pub fn to_bipartite_map(&self) -> Result<BipartiteMap, CliError> {
        self.expect_kind(FileKind::BipartiteMap)?;
        let shape = self.bipartite_shape()?;
        let matrix = self.dense(shape.dim(), shape.dim())?;
        let out = match self.output_shape {
            Some([n, m]) => BipartiteShape::new(n, m)?,
            None => shape,
        };
        Ok(BipartiteMap::with_output_shape(matrix, shape, out)?)
    }

    pub fn to_superoperator(&self) -> Result<Superoperator, CliError> {
        self.expect_kind(FileKind::Superoperator)?;
        let d = match self.shape {
            ShapeSpec::Single(d) if d >= 1 => d,
            ShapeSpec::Single(d) => return Err(CliError::dimension(format!("dimension must be positive, found {d}"))),
            ShapeSpec::Bipartite(s) => return Err(CliError::dimension(format!("expected a scalar dimension, found {s:?}"))),
        };
        let matrix = self.dense(d * d, d * d)?;
        Ok(Superoperator::new(matrix, d)?)
    }

    /// The state vector and its cut; `shape_override` replaces the file's shape.
    pub fn to_state(&self, shape_override: Option<BipartiteShape>) -> Result<(ComplexVector, BipartiteShape), CliError> {
        self.expect_kind(FileKind::State)?;
        let shape = match shape_override {
            Some(s) => s,
            None => self.bipartite_shape()?,
        };
        let entries: Vec<C64> = match (&self.vector, &self.matrix) {
            (Some(v), _) => v.iter().map(Entry::value).collect::<Result<_, _>>()?,
            (None, Some(rows)) => rows.iter().flatten().map(Entry::value).collect::<Result<_, _>>()?,
            (None, None) => return Err(CliError::parse("missing \"vector\"")),
        };
        if entries.len() != shape.dim() {
            return Err(CliError::dimension(format!("state has {} entries, shape {shape} needs {}", entries.len(), shape.dim())));
        }
        Ok((ComplexVector::from_vec(entries), shape))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::ShapeMismatch { .. } | CoreError::DimMismatch { .. } | CoreError::InvalidShape { .. } => ExitCode::Dimension,
            CoreError::ZeroVector
            | CoreError::ParamOutOfRange { .. }
            | CoreError::ProbabilityOutOfRange(_)
            | CoreError::InsufficientSamples { .. } => ExitCode::Parse,
            _ => ExitCode::Internal,
        };
        CliError { code, message: e.to_string() }
    }
}
