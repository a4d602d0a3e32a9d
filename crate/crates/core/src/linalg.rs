//! Dense complex matrix kernels.
//!
//! Everything here works on [`ComplexMatrix`] (a column-major
//! `nalgebra::DMatrix<Complex64>`). Rank decisions are always gated by a
//! relative singular-value threshold taken from [`Tolerances`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Numerical thresholds shared by every rank or equality decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Singular values below `rank_rel * sigma_max` count as zero.
    pub rank_rel: f64,
    /// Absolute Frobenius tolerance for matrix equality.
    pub eq_abs: f64,
    /// Rounding quantum for canonical sort keys.
    pub fingerprint_round: f64,
    /// Absolute gap below which neighbouring eigenvalues are merged into one
    /// spectral projection.
    pub eig_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank_rel: 1e-9, eq_abs: 1e-8, fingerprint_round: 1e-6, eig_gap: 1e-7 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rank_rel", self.rank_rel),
            ("eq_abs", self.eq_abs),
            ("fingerprint_round", self.fingerprint_round),
            ("eig_gap", self.eig_gap),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Unsupported(format!("tolerance {name} must be positive, got {value}")));
            }
        }
        if self.rank_rel >= 1.0 {
            return Err(Error::Unsupported("rank_rel must be < 1".into()));
        }
        Ok(())
    }
}

/// Seeded deterministic random stream.
///
/// Passed explicitly by `&mut` wherever randomness is consumed; there is no
/// global generator.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Independent child stream; advances `self` by one draw.
    pub fn fork(&mut self) -> Rng {
        Rng::new(self.next_u64())
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        (self.uniform() * n as f64) as usize % n
    }

    /// Standard complex Gaussian, `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.normal() * s, self.normal() * s)
    }

    pub fn ginibre(&mut self, rows: usize, cols: usize) -> ComplexMatrix {
        // Fill column by column so the draw order matches storage order.
        let mut m = ComplexMatrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = self.complex_normal();
            }
        }
        m
    }

    pub fn hermitian(&mut self, n: usize) -> ComplexMatrix {
        let g = self.ginibre(n, n);
        (&g + g.adjoint()).scale(0.5)
    }
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

fn require_square(m: &ComplexMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidShape(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Block-diagonal matrix `A ⊕ B`.
pub fn direct_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(a, "left summand")?;
    require_square(b, "right summand")?;
    Ok(block_diag(&[a, b]))
}

/// Block-diagonal matrix of arbitrary (possibly rectangular) blocks.
pub fn block_diag(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// `‖U*U − I‖_F`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    (u.adjoint() * u - identity(u.nrows())).norm()
}

pub fn is_unitary(u: &ComplexMatrix, tol: &Tolerances) -> bool {
    unitarity_defect(u) <= tol.eq_abs
}

/// `U A U*` without any checks.
pub fn conjugate(u: &ComplexMatrix, a: &ComplexMatrix) -> ComplexMatrix {
    u * a * u.adjoint()
}

/// The unitary action `U . A = U A U⁻¹`.
pub fn conj_action(u: &ComplexMatrix, a: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    require_square(a, "conjugated matrix")?;
    if u.nrows() != a.nrows() || u.ncols() != a.ncols() {
        return Err(Error::InvalidShape(format!(
            "conjugator is {}x{}, matrix is {}x{}",
            u.nrows(),
            u.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = unitarity_defect(u);
    if defect > tol.eq_abs {
        return Err(Error::NotUnitary { defect });
    }
    Ok(conjugate(u, a))
}

/// Permutation unitary `U_{p,q}` of size `p + q`.
///
/// Acting on row vectors it sends `(w_1..w_q, z_1..z_p)` to
/// `(z_1..z_p, w_1..w_q)`; as a conjugator it maps `X ⊕ Y` (with `X` of size
/// `p`) to `Y ⊕ X`.
pub fn swap_unitary(p: usize, q: usize) -> ComplexMatrix {
    assert!(p >= 1 && q >= 1, "swap_unitary needs p, q >= 1");
    let n = p + q;
    let mut u = ComplexMatrix::zeros(n, n);
    for i in 0..p {
        u[(q + i, i)] = ONE;
    }
    for j in 0..q {
        u[(j, p + j)] = ONE;
    }
    u
}

/// Block permutation unitary `P` with `act(P, ⊕_j A_j) = ⊕_k A_{order[k]}`
/// for blocks of the given sizes.
pub fn block_permutation(sizes: &[usize], order: &[usize]) -> ComplexMatrix {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    assert!(sorted.iter().copied().eq(0..sizes.len()), "order must permute the blocks");
    let offsets: Vec<usize> = sizes.iter().scan(0, |acc, &s| Some(std::mem::replace(acc, *acc + s))).collect();
    let n: usize = sizes.iter().sum();
    let mut p = ComplexMatrix::zeros(n, n);
    let mut row = 0;
    for &block in order {
        for i in 0..sizes[block] {
            p[(row, offsets[block] + i)] = ONE;
            row += 1;
        }
    }
    p
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the
/// `R_ii / |R_ii|` phase fix.
pub fn haar_unitary(n: usize, rng: &mut Rng) -> ComplexMatrix {
    assert!(n >= 1);
    let g = rng.ginibre(n, n);
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Orthonormal kernel basis together with a flag for borderline rank
/// decisions.
#[derive(Debug, Clone)]
pub struct NullSpace {
    pub vectors: Vec<DVector<Complex64>>,
    /// Some singular value sat within a factor 10 of the cutoff.
    pub borderline: bool,
}

/// Numerical kernel of `m`: right singular vectors whose singular value is
/// below `rank_rel * sigma_max`.
pub fn nullspace_basis(m: &ComplexMatrix, tol: &Tolerances) -> NullSpace {
    nullspace_basis_scaled(m, 0.0, tol)
}

/// As [`nullspace_basis`], with the cutoff taken relative to
/// `max(sigma_max, scale)`. Operators assembled from differences of nearly
/// equal inputs (e.g. `X ⊗ I − I ⊗ X` for scalar `X`) have a roundoff-sized
/// `sigma_max`; `scale` is the magnitude of the inputs they were built from.
pub fn nullspace_basis_scaled(m: &ComplexMatrix, scale: f64, tol: &Tolerances) -> NullSpace {
    let n = m.ncols();
    if n == 0 {
        return NullSpace { vectors: Vec::new(), borderline: false };
    }
    // Tall systems are compressed to their n x n triangular factor first;
    // wide ones are padded so the SVD yields a full right basis.
    let square = if m.nrows() > n {
        m.clone().qr().r()
    } else if m.nrows() < n {
        let mut padded = ComplexMatrix::zeros(n, n);
        padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = nalgebra::SVD::new(square, false, true);
    let sigma = &svd.singular_values;
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max).max(scale);
    let cutoff = tol.rank_rel * sigma_max;
    let mut vectors = Vec::new();
    let mut borderline = false;
    for (k, &s) in sigma.iter().enumerate() {
        if sigma_max > 0.0 && s > cutoff / 10.0 && s < cutoff * 10.0 {
            borderline = true;
        }
        if sigma_max == 0.0 || s < cutoff {
            vectors.push(v_t.row(k).adjoint());
        }
    }
    NullSpace { vectors, borderline }
}

#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `k` belongs to `values[k]`.
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eig(h: &ComplexMatrix, tol: &Tolerances) -> Result<HermitianEig> {
    require_square(h, "hermitian input")?;
    let defect = (h - h.adjoint()).norm();
    if defect > tol.eq_abs {
        return Err(Error::NotHermitian { defect });
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(h.nrows(), h.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEig { values, vectors })
}

/// Groups ascending eigenvalues into maximal runs whose consecutive gaps are
/// below `gap`.
pub fn cluster_eigenvalues(values: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] >= gap {
            if k > start {
                out.push(start..k);
            }
            start = k;
        }
    }
    out
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    nalgebra::SVD::new(m.clone(), false, false).singular_values.iter().cloned().collect()
}

/// Operator (spectral) norm.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Frobenius inner product `tr(A* B)`.
pub fn frobenius_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Unitary factor `U V*` of the polar decomposition `M = (U V*)(V Σ V*)`.
pub fn polar_unitary(m: &ComplexMatrix) -> ComplexMatrix {
    let svd = nalgebra::SVD::new(m.clone(), true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Column-major reshape of a vector into a `rows x cols` matrix.
pub fn unvec(v: &DVector<Complex64>, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Permutation matrix sending basis vector `e_i` to `e_{perm[i]}`.
pub fn permutation_matrix(perm: &[usize]) -> ComplexMatrix {
    let n = perm.len();
    let mut p = ComplexMatrix::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        p[(j, i)] = ONE;
    }
    p
}

/// Closest scalar multiple of the identity in Frobenius norm and the
/// distance to it.
pub fn scalar_part(m: &ComplexMatrix) -> (Complex64, f64) {
    let n = m.nrows();
    let c = m.trace() / n as f64;
    let dist = (m - identity(n) * c).norm();
    (c, dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> ComplexMatrix {
        let n = values.len();
        ComplexMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(values[i], 0.0) } else { ZERO })
    }

    #[test]
    fn direct_sum_small_cases() {
        let one = identity(1);
        assert_eq!(direct_sum(&one, &one).unwrap(), identity(2));
        assert_eq!(direct_sum(&diag(&[2.0]), &diag(&[3.0])).unwrap(), diag(&[2.0, 3.0]));
        let wide = ComplexMatrix::zeros(1, 2);
        assert!(matches!(direct_sum(&wide, &one), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn direct_sum_is_associative() {
        let mut rng = Rng::new(3);
        let (a, b, c) = (rng.ginibre(2, 2), rng.ginibre(2, 2), rng.ginibre(2, 2));
        let left = direct_sum(&direct_sum(&a, &b).unwrap(), &c).unwrap();
        let right = direct_sum(&a, &direct_sum(&b, &c).unwrap()).unwrap();
        assert_eq!(left, right);
        // Entry-by-entry construction as the independent route.
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i / 2 == j / 2 { [&a, &b, &c][i / 2][(i % 2, j % 2)] } else { ZERO };
                assert_eq!(left[(i, j)], expected);
            }
        }
    }

    #[test]
    fn conj_action_examples() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(1);
        let a = rng.ginibre(3, 3);
        assert!((conj_action(&identity(3), &a, &tol).unwrap() - &a).norm() < 1e-15);
        let u = haar_unitary(3, &mut rng);
        assert!((conj_action(&u, &identity(3), &tol).unwrap() - identity(3)).norm() < 1e-12);
        let swapped = conj_action(&swap_unitary(1, 1), &diag(&[1.0, 2.0]), &tol).unwrap();
        assert_eq!(swapped, diag(&[2.0, 1.0]));
        assert!(matches!(
            conj_action(&diag(&[1.0, 2.0]), &a.view((0, 0), (2, 2)).into_owned(), &tol),
            Err(Error::NotUnitary { .. })
        ));
        assert!(matches!(conj_action(&identity(2), &a, &tol), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn swap_unitary_matches_row_vector_rule() {
        assert_eq!(swap_unitary(1, 1), ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]));
        for p in 1..=4 {
            for q in 1..=4 {
                // (w_1..w_q z_1..z_p) . U = (z_1..z_p w_1..w_q), checked on labelled entries.
                let row = DMatrix::from_fn(1, p + q, |_, k| Complex64::new(k as f64, 0.0));
                let image = &row * swap_unitary(p, q);
                for k in 0..p {
                    assert_eq!(image[(0, k)].re, (q + k) as f64);
                }
                for k in 0..q {
                    assert_eq!(image[(0, p + k)].re, k as f64);
                }
                assert_eq!(unitarity_defect(&swap_unitary(p, q)), 0.0);
                assert_eq!(swap_unitary(p, q) * swap_unitary(q, p), identity(p + q));
            }
        }
    }

    #[test]
    fn swap_unitary_exchanges_summands() {
        let mut rng = Rng::new(11);
        for p in 1..=3 {
            for q in 1..=3 {
                let (x, y) = (rng.ginibre(p, p), rng.ginibre(q, q));
                let u = swap_unitary(p, q);
                let moved = conjugate(&u, &direct_sum(&x, &y).unwrap());
                assert!((moved - direct_sum(&y, &x).unwrap()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn haar_is_unitary_and_deterministic() {
        let mut rng = Rng::new(42);
        for n in 1..=8 {
            assert!(unitarity_defect(&haar_unitary(n, &mut rng)) < 1e-12);
        }
        let a = haar_unitary(2, &mut Rng::new(42));
        let b = haar_unitary(2, &mut Rng::new(42));
        assert_eq!(a, b);
    }

    #[test]
    fn haar_mean_vanishes() {
        let mut rng = Rng::new(5);
        let samples = 10_000;
        let mut mean = ComplexMatrix::zeros(2, 2);
        for _ in 0..samples {
            mean += haar_unitary(2, &mut rng);
        }
        mean /= Complex64::new(samples as f64, 0.0);
        assert!(mean.iter().all(|z| z.norm() < 0.05), "{mean}");
    }

    #[test]
    fn nullspace_examples() {
        let tol = Tolerances::default();
        assert!(nullspace_basis(&identity(4), &tol).vectors.is_empty());
        let zero = nullspace_basis(&ComplexMatrix::zeros(3, 3), &tol);
        assert_eq!(zero.vectors.len(), 3);
        let ones = ComplexMatrix::from_element(2, 2, ONE);
        let ns = nullspace_basis(&ones, &tol);
        assert_eq!(ns.vectors.len(), 1);
        let v = &ns.vectors[0];
        // Proportional to (1, -1)/sqrt(2) up to a phase.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let overlap = (v[0] * s - v[1] * s).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nullspace_of_tall_and_wide_systems() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(9);
        // Rank-2 6x4: kernel of dimension 2.
        let m = rng.ginibre(6, 2) * rng.ginibre(2, 4);
        let ns = nullspace_basis(&m, &tol);
        assert_eq!(ns.vectors.len(), 2);
        for v in &ns.vectors {
            assert!((&m * v).norm() < 1e-10);
        }
        let wide = rng.ginibre(2, 5);
        let ns = nullspace_basis(&wide, &tol);
        assert_eq!(ns.vectors.len(), 3);
        for (i, a) in ns.vectors.iter().enumerate() {
            for (j, b) in ns.vectors.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((a.dotc(b) - Complex64::new(expected, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn hermitian_eig_examples() {
        let tol = Tolerances::default();
        assert_eq!(hermitian_eig(&identity(2), &tol).unwrap().values, vec![1.0, 1.0]);
        let e = hermitian_eig(&diag(&[3.0, -1.0]), &tol).unwrap();
        assert_eq!(e.values, vec![-1.0, 3.0]);
        let non = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(hermitian_eig(&non, &tol), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn hermitian_eig_reconstructs() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(77);
        for k in 0..100 {
            let n = 1 + k % 12;
            let h = rng.hermitian(n);
            let e = hermitian_eig(&h, &tol).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            let lambda =
                ComplexMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(e.values[i], 0.0) } else { ZERO });
            assert!((&e.vectors * lambda * e.vectors.adjoint() - &h).norm() < 1e-10);
            assert!(unitarity_defect(&e.vectors) < 1e-10);
        }
    }

    #[test]
    fn clustering_merges_close_values() {
        assert_eq!(cluster_eigenvalues(&[0.0, 1e-9, 1.0, 2.0, 2.0], 1e-7), vec![0..2, 2..3, 3..5]);
        assert!(cluster_eigenvalues(&[], 1e-7).is_empty());
    }

    #[test]
    fn block_conjugation_commutes_with_direct_sum() {
        let mut rng = Rng::new(21);
        let tol = Tolerances::default();
        for (p, q) in [(1, 2), (2, 2), (3, 1)] {
            let (a, b) = (rng.ginibre(p, p), rng.ginibre(q, q));
            let (u, v) = (haar_unitary(p, &mut rng), haar_unitary(q, &mut rng));
            let lhs = conj_action(&direct_sum(&u, &v).unwrap(), &direct_sum(&a, &b).unwrap(), &tol).unwrap();
            let rhs = direct_sum(&conjugate(&u, &a), &conjugate(&v, &b)).unwrap();
            assert!((lhs - rhs).norm() < tol.eq_abs);
        }
    }

    #[test]
    fn tolerances_reject_nonsense() {
        assert!(Tolerances::default().validate().is_ok());
        let bad = Tolerances { rank_rel: 1.5, ..Tolerances::default() };
        assert!(bad.validate().is_err());
        let bad = Tolerances { eq_abs: 0.0, ..Tolerances::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn block_permutation_generalizes_swap() {
        assert_eq!(block_permutation(&[2, 3], &[1, 0]), swap_unitary(2, 3));
        assert_eq!(block_permutation(&[1, 2, 1], &[0, 1, 2]), identity(4));
        let mut rng = Rng::new(9);
        let blocks: Vec<ComplexMatrix> = [1, 2, 3].iter().map(|&k| rng.ginibre(k, k)).collect();
        let refs: Vec<&ComplexMatrix> = blocks.iter().collect();
        let p = block_permutation(&[1, 2, 3], &[2, 0, 1]);
        let moved = conjugate(&p, &block_diag(&refs));
        assert!((moved - block_diag(&[&blocks[2], &blocks[0], &blocks[1]])).norm() < 1e-15);
    }
}
