//! Commutants, intertwiner spaces, bicommutants and stabilizers.
//!
//! All spaces are computed as the kernel of one stacked Sylvester operator:
//! for `A` of shape `d_X x d_Y` and every letter we impose
//! `A Y_l = X_l A` and `A Y_l* = X_l* A`. With column-major `vec`, each
//! equation is `(Y_lᵀ ⊗ I − I ⊗ X_l) vec(A) = 0`.

use num_complex::Complex64;

use crate::decompose::Decomposition;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Rng, Tolerances};
use crate::tuple::MatrixTuple;

/// A subspace of `rows x cols` matrices with a Frobenius-orthonormal basis.
#[derive(Debug, Clone)]
pub struct OperatorSpace {
    rows: usize,
    cols: usize,
    basis: Vec<ComplexMatrix>,
    tolerance_warning: bool,
}

impl OperatorSpace {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    /// Set when a singular value landed within a factor 10 of the rank
    /// cutoff, i.e. the dimension is numerically fragile.
    pub fn tolerance_warning(&self) -> bool {
        self.tolerance_warning
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows, self.cols);
        for b in &self.basis {
            out += b * linalg::frobenius_inner(b, m);
        }
        out
    }

    /// Frobenius distance from `m` to the span.
    pub fn span_residual(&self, m: &ComplexMatrix) -> f64 {
        (m - self.project(m)).norm()
    }

    /// The basis as a tuple, for square spaces with at least one element.
    pub fn as_tuple(&self) -> Option<MatrixTuple> {
        if self.rows != self.cols || self.basis.is_empty() {
            return None;
        }
        MatrixTuple::new(self.basis.clone()).ok()
    }

    /// A random element with independent complex Gaussian coordinates.
    pub fn random_element(&self, rng: &mut Rng) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows, self.cols);
        for b in &self.basis {
            out += b * rng.complex_normal();
        }
        out
    }
}

fn stacked_system(x: &MatrixTuple, y: &MatrixTuple) -> ComplexMatrix {
    let (dx, dy) = (x.degree(), y.degree());
    let n = dx * dy;
    let pairs: Vec<(ComplexMatrix, ComplexMatrix)> = x
        .letters()
        .iter()
        .zip(y.letters())
        .flat_map(|(a, b)| [(a.clone(), b.clone()), (a.adjoint(), b.adjoint())])
        .collect();
    let mut m = ComplexMatrix::zeros(pairs.len() * n, n);
    for (k, (xl, yl)) in pairs.iter().enumerate() {
        let offset = k * n;
        // vec(A Y) = (Yᵀ ⊗ I_dx) vec(A): entry ((j, i), (c, i)) = Y[c, j].
        for j in 0..dy {
            for c in 0..dy {
                let v = yl[(c, j)];
                if v != linalg::ZERO {
                    for i in 0..dx {
                        m[(offset + j * dx + i, c * dx + i)] += v;
                    }
                }
            }
        }
        // vec(X A) = (I_dy ⊗ X) vec(A): entry ((j, i), (j, r)) = X[i, r].
        for j in 0..dy {
            for i in 0..dx {
                for r in 0..dx {
                    let v = xl[(i, r)];
                    if v != linalg::ZERO {
                        m[(offset + j * dx + i, j * dx + r)] -= v;
                    }
                }
            }
        }
    }
    m
}

/// `{A : A Y_l = X_l A, A Y_l* = X_l* A for all l}`, matrices of shape
/// `d(X) x d(Y)`.
pub fn intertwiner_basis(x: &MatrixTuple, y: &MatrixTuple, tol: &Tolerances) -> Result<OperatorSpace> {
    x.check_labels(y)?;
    let system = stacked_system(x, y);
    let scale = x.letters().iter().chain(y.letters()).map(|m| m.norm()).fold(0.0, f64::max);
    let ns = linalg::nullspace_basis_scaled(&system, scale, tol);
    let basis = ns.vectors.iter().map(|v| linalg::unvec(v, x.degree(), y.degree())).collect();
    Ok(OperatorSpace { rows: x.degree(), cols: y.degree(), basis, tolerance_warning: ns.borderline })
}

/// The `*`-commutant `W'(X)`.
pub fn commutant_basis(x: &MatrixTuple, tol: &Tolerances) -> OperatorSpace {
    let mut space = intertwiner_basis(x, x, tol).expect("a tuple always matches its own labels");
    // W'(X) is a unital *-algebra; failing either property means the rank
    // cutoff split a cluster of singular values.
    let d = x.degree();
    let unit_residual = space.span_residual(&linalg::identity(d));
    let star_residual = space.basis.iter().map(|b| space.span_residual(&b.adjoint())).fold(0.0, f64::max);
    if unit_residual > 1e-6 || star_residual > 1e-6 {
        space.tolerance_warning = true;
    }
    space
}

/// Largest residual of the defining equations over the basis of `space`,
/// measured against `Hom(X, Y)`.
pub fn equation_residual(space: &OperatorSpace, x: &MatrixTuple, y: &MatrixTuple) -> f64 {
    let mut worst: f64 = 0.0;
    for a in space.basis() {
        for (xl, yl) in x.letters().iter().zip(y.letters()) {
            worst = worst.max((a * yl - xl * a).norm());
            worst = worst.max((a * yl.adjoint() - xl.adjoint() * a).norm());
        }
    }
    worst
}

/// Irreducibility verdict with the borderline-rank flag attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Irreducibility {
    pub irreducible: bool,
    pub commutant_dim: usize,
    pub tolerance_warning: bool,
}

pub fn irreducibility(x: &MatrixTuple, tol: &Tolerances) -> Irreducibility {
    let space = commutant_basis(x, tol);
    Irreducibility {
        irreducible: space.dim() == 1,
        commutant_dim: space.dim(),
        tolerance_warning: space.tolerance_warning(),
    }
}

/// True iff the commutant consists of scalars only.
pub fn is_irreducible(x: &MatrixTuple, tol: &Tolerances) -> bool {
    irreducibility(x, tol).irreducible
}

/// `W''(X)`: the von Neumann algebra generated by the letters.
pub fn bicommutant_basis(x: &MatrixTuple, tol: &Tolerances) -> OperatorSpace {
    let commutant = commutant_basis(x, tol);
    let generators = commutant.as_tuple().expect("commutant contains the identity");
    let mut space = commutant_basis(&generators, tol);
    space.tolerance_warning |= commutant.tolerance_warning;
    space
}

/// `stab(X)` described as `U* (⊕_j V_j ⊗ I_{d_j}) U` with `V_j ∈ U(α_j)`,
/// where `U . X = ⊕_j α_j ⊙ A_j`.
///
/// Index layout inside the `j`-th block is copy-major (`copy * d_j + inner`),
/// which is why the multiplicity factor sits on the left of the Kronecker
/// product.
#[derive(Debug, Clone)]
pub struct StabilizerStructure {
    conjugator: ComplexMatrix,
    blocks: Vec<(usize, usize)>,
}

impl StabilizerStructure {
    pub fn conjugator(&self) -> &ComplexMatrix {
        &self.conjugator
    }

    /// `(irreducible degree, multiplicity)` per block.
    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn degree(&self) -> usize {
        self.blocks.iter().map(|&(d, a)| d * a).sum()
    }

    /// Assembles the group element for the given per-block unitaries.
    pub fn element(&self, factors: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        if factors.len() != self.blocks.len() {
            return Err(Error::InvalidShape(format!("expected {} block unitaries", self.blocks.len())));
        }
        let mut parts = Vec::with_capacity(factors.len());
        for (v, &(d, alpha)) in factors.iter().zip(&self.blocks) {
            if v.nrows() != alpha || v.ncols() != alpha {
                return Err(Error::InvalidShape(format!("block unitary must be {alpha}x{alpha}")));
            }
            parts.push(linalg::kron(v, &linalg::identity(d)));
        }
        let refs: Vec<&ComplexMatrix> = parts.iter().collect();
        let inner = linalg::block_diag(&refs);
        Ok(self.conjugator.adjoint() * inner * &self.conjugator)
    }

    /// Haar-random member of the stabilizer.
    pub fn sample(&self, rng: &mut Rng) -> ComplexMatrix {
        let factors: Vec<ComplexMatrix> = self.blocks.iter().map(|&(_, a)| linalg::haar_unitary(a, rng)).collect();
        self.element(&factors).expect("factor shapes follow the block list")
    }

    /// Frobenius-orthogonal projection onto the commutant of the stabilizer,
    /// i.e. onto `U* (⊕_j I_{α_j} ⊗ M_{d_j}) U`.
    pub fn project_commutant(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let inner = &self.conjugator * m * self.conjugator.adjoint();
        let n = self.degree();
        let mut out = ComplexMatrix::zeros(n, n);
        let mut offset = 0;
        for &(d, alpha) in &self.blocks {
            let mut avg = ComplexMatrix::zeros(d, d);
            for c in 0..alpha {
                let at = offset + c * d;
                avg += inner.view((at, at), (d, d));
            }
            avg /= Complex64::new(alpha as f64, 0.0);
            for c in 0..alpha {
                let at = offset + c * d;
                out.view_mut((at, at), (d, d)).copy_from(&avg);
            }
            offset += d * alpha;
        }
        self.conjugator.adjoint() * out * &self.conjugator
    }
}

/// Reads the stabilizer off a decomposition of `x`, after checking that the
/// decomposition really reconstructs `x`.
pub fn stabilizer_structure(x: &MatrixTuple, dec: &Decomposition, tol: &Tolerances) -> Result<StabilizerStructure> {
    let residual = dec.reconstruction_residual(x).map_err(|e| Error::InvalidDecomposition(e.to_string()))?;
    let bound = 1e-8 * (1.0 + x.norm());
    if residual > bound.max(tol.eq_abs) {
        return Err(Error::InvalidDecomposition(format!("reconstruction residual {residual:.3e}")));
    }
    Ok(StabilizerStructure {
        conjugator: dec.conjugator().clone(),
        blocks: dec.factors().iter().map(|f| (f.irreducible.degree(), f.multiplicity)).collect(),
    })
}
