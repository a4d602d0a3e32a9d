//! Finite families of same-size square matrices and the tower operations on
//! them: degree, direct sum, unitary action and n-fold sums.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Rng, Tolerances};

/// An ordered family `(X_1, .., X_L)` of `d x d` complex matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTuple {
    degree: usize,
    letters: Vec<ComplexMatrix>,
}

impl MatrixTuple {
    pub fn new(letters: Vec<ComplexMatrix>) -> Result<Self> {
        let first = letters.first().ok_or_else(|| Error::InvalidShape("tuple needs at least one letter".into()))?;
        let degree = first.nrows();
        if degree == 0 {
            return Err(Error::InvalidShape("tuple degree must be positive".into()));
        }
        for (k, m) in letters.iter().enumerate() {
            if m.nrows() != degree || m.ncols() != degree {
                return Err(Error::InvalidShape(format!(
                    "letter {k} is {}x{}, expected {degree}x{degree}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidShape(format!("letter {k} has non-finite entries")));
            }
        }
        Ok(Self { degree, letters })
    }

    /// Degree-1 tuple with the given scalar letters.
    pub fn scalars(values: &[Complex64]) -> Result<Self> {
        Self::new(values.iter().map(|&z| ComplexMatrix::from_element(1, 1, z)).collect())
    }

    /// Tuple of `label_count` independent Ginibre letters.
    pub fn random(degree: usize, label_count: usize, rng: &mut Rng) -> Self {
        let letters = (0..label_count).map(|_| rng.ginibre(degree, degree)).collect();
        Self::new(letters).expect("random tuple has consistent shapes")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn label_count(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[ComplexMatrix] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<ComplexMatrix> {
        self.letters
    }

    /// Largest operator norm over the letters.
    pub fn norm(&self) -> f64 {
        self.letters.iter().map(linalg::op_norm).fold(0.0, f64::max)
    }

    /// Every letter has operator norm at most `1 + eq_abs`.
    pub fn is_normalized(&self, tol: &Tolerances) -> bool {
        self.norm() <= 1.0 + tol.eq_abs
    }

    /// Letterwise scaling.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { degree: self.degree, letters: self.letters.iter().map(|m| m.scale(factor)).collect() }
    }

    pub(crate) fn check_labels(&self, other: &MatrixTuple) -> Result<()> {
        if self.label_count() != other.label_count() {
            return Err(Error::LabelMismatch { left: self.label_count(), right: other.label_count() });
        }
        Ok(())
    }

    /// Letterwise direct sum `X ⊕ Y`.
    pub fn oplus(&self, other: &MatrixTuple) -> Result<Self> {
        self.check_labels(other)?;
        let letters = self.letters.iter().zip(&other.letters).map(|(a, b)| linalg::block_diag(&[a, b])).collect();
        Ok(Self { degree: self.degree + other.degree, letters })
    }

    /// Direct sum of a nonempty list of tuples.
    pub fn oplus_all<'a>(parts: impl IntoIterator<Item = &'a MatrixTuple>) -> Result<Self> {
        let parts: Vec<&MatrixTuple> = parts.into_iter().collect();
        let first = parts.first().ok_or_else(|| Error::InvalidShape("empty direct sum".into()))?;
        for p in &parts[1..] {
            first.check_labels(p)?;
        }
        let letters = (0..first.label_count())
            .map(|l| {
                let blocks: Vec<&ComplexMatrix> = parts.iter().map(|p| &p.letters[l]).collect();
                linalg::block_diag(&blocks)
            })
            .collect();
        Ok(Self { degree: parts.iter().map(|p| p.degree).sum(), letters })
    }

    /// Unitary action `U . X`, letterwise `U X_l U*`.
    pub fn act(&self, u: &ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if u.nrows() != self.degree || u.ncols() != self.degree {
            return Err(Error::InvalidShape(format!(
                "conjugator is {}x{}, tuple degree is {}",
                u.nrows(),
                u.ncols(),
                self.degree
            )));
        }
        let defect = linalg::unitarity_defect(u);
        if defect > tol.eq_abs {
            return Err(Error::NotUnitary { defect });
        }
        Ok(self.act_unchecked(u))
    }

    pub(crate) fn act_unchecked(&self, u: &ComplexMatrix) -> Self {
        let letters = self.letters.iter().map(|m| linalg::conjugate(u, m)).collect();
        Self { degree: self.degree, letters }
    }

    /// `n ⊙ X`, the n-fold direct sum.
    pub fn times(&self, n: usize) -> Self {
        assert!(n >= 1, "multiplicity must be positive");
        let letters = self.letters.iter().map(|m| linalg::kron(&linalg::identity(n), m)).collect();
        Self { degree: n * self.degree, letters }
    }

    /// Compression `V* X V` onto the column space of an isometry `V`.
    pub(crate) fn compress(&self, v: &ComplexMatrix) -> Self {
        let letters = self.letters.iter().map(|m| v.adjoint() * m * v).collect();
        Self { degree: v.ncols(), letters }
    }

    /// Adjoint letters, used by the `*`-closed commutant equations.
    pub fn adjoint_letters(&self) -> impl Iterator<Item = ComplexMatrix> + '_ {
        self.letters.iter().map(|m| m.adjoint())
    }
}

/// Largest Frobenius distance between corresponding letters.
pub fn tuple_distance(x: &MatrixTuple, y: &MatrixTuple) -> Result<f64> {
    x.check_labels(y)?;
    if x.degree() != y.degree() {
        return Err(Error::InvalidShape(format!("degrees differ: {} vs {}", x.degree(), y.degree())));
    }
    Ok(x.letters.iter().zip(&y.letters).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}
