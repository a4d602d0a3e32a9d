//! JSON file formats. Complex entries are `[re, im]` pairs and matrices are
//! lists of rows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decompose::Decomposition;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::tower::TowerPresentation;
use crate::tuple::MatrixTuple;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<ComplexMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidShape("ragged matrix rows".into()));
    }
    Ok(ComplexMatrix::from_fn(n, cols, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

/// On-disk tuple: `{"label_count": L, "degree": d, "letters": [...]}` with
/// optional free-form metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleFile {
    pub label_count: usize,
    pub degree: usize,
    pub letters: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl TupleFile {
    pub fn from_tuple(x: &MatrixTuple) -> Self {
        Self {
            label_count: x.label_count(),
            degree: x.degree(),
            letters: x.letters().iter().map(matrix_to_json).collect(),
            metadata: None,
        }
    }

    pub fn to_tuple(&self) -> Result<MatrixTuple> {
        if self.letters.len() != self.label_count {
            return Err(Error::InvalidShape(format!(
                "label_count is {} but {} letters given",
                self.label_count,
                self.letters.len()
            )));
        }
        let letters = self.letters.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
        if letters.iter().any(|m| m.nrows() != self.degree || m.ncols() != self.degree) {
            return Err(Error::InvalidShape(format!("letters are not {0}x{0}", self.degree)));
        }
        MatrixTuple::new(letters)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite tuple serializes")
    }
}

/// Parse a tuple file straight to a tuple.
pub fn read_tuple(text: &str) -> Result<MatrixTuple> {
    TupleFile::parse(text)?.to_tuple()
}

pub fn read_presentation(text: &str) -> Result<TowerPresentation> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorJson {
    pub degree: usize,
    pub multiplicity: usize,
    pub letters: Vec<JsonMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub conjugator: JsonMatrix,
    pub factors: Vec<FactorJson>,
    pub residual: f64,
}

impl DecompositionJson {
    pub fn new(dec: &Decomposition, residual: f64) -> Self {
        Self {
            conjugator: matrix_to_json(dec.conjugator()),
            factors: dec
                .factors()
                .iter()
                .map(|f| FactorJson {
                    degree: f.irreducible.degree(),
                    multiplicity: f.multiplicity,
                    letters: f.irreducible.letters().iter().map(matrix_to_json).collect(),
                })
                .collect(),
            residual,
        }
    }
}

/// Ground truth attached to generated composites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeTruth {
    pub seed: u64,
    /// Sorted `(degree, multiplicity)` pairs.
    pub signature: Vec<(usize, usize)>,
}
