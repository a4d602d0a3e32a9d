//! Prime decomposition `U . X = ⊕_j α_j ⊙ A_j` and the relations built on
//! it: equivalence, disjointness and subordination.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::commutant::{self, OperatorSpace};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Rng, Tolerances};
use crate::tuple::{tuple_distance, MatrixTuple};

/// Seed used by the relation tests when the caller does not supply a stream.
pub const RELATION_SEED: u64 = 0x6d74_6f77_6572;

const MAX_DRAWS: usize = 8;
const MAX_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub irreducible: MatrixTuple,
    pub multiplicity: usize,
}

/// Normal form of a tuple: `act(conjugator, X) == ⊕ multiplicity_j ⊙ irreducible_j`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    conjugator: ComplexMatrix,
    factors: Vec<Factor>,
}

impl Decomposition {
    pub fn new(conjugator: ComplexMatrix, factors: Vec<Factor>) -> Self {
        Self { conjugator, factors }
    }

    pub fn conjugator(&self) -> &ComplexMatrix {
        &self.conjugator
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn degree(&self) -> usize {
        self.factors.iter().map(|f| f.multiplicity * f.irreducible.degree()).sum()
    }

    /// `⊕_j α_j ⊙ A_j`.
    pub fn normal_form(&self) -> Result<MatrixTuple> {
        let parts: Vec<MatrixTuple> = self.factors.iter().map(|f| f.irreducible.times(f.multiplicity)).collect();
        MatrixTuple::oplus_all(&parts)
    }

    /// Distance between `act(conjugator, x)` and the normal form.
    pub fn reconstruction_residual(&self, x: &MatrixTuple) -> Result<f64> {
        let normal = self.normal_form()?;
        if normal.degree() != x.degree() || self.conjugator.nrows() != x.degree() {
            return Err(Error::InvalidShape(format!(
                "decomposition has degree {}, tuple has degree {}",
                normal.degree(),
                x.degree()
            )));
        }
        tuple_distance(&x.act_unchecked(&self.conjugator), &normal)
    }

    /// Sorted `(degree, multiplicity)` pairs.
    pub fn signature(&self) -> Vec<(usize, usize)> {
        let mut sig: Vec<(usize, usize)> =
            self.factors.iter().map(|f| (f.irreducible.degree(), f.multiplicity)).collect();
        sig.sort_unstable();
        sig
    }
}

/// Rounded traces of every word of length at most 3 in the letters and
/// their adjoints. Invariant under the unitary action up to rounding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fingerprint {
    pub degree: usize,
    pub moments: Vec<(i64, i64)>,
}

pub fn fingerprint(x: &MatrixTuple, tol: &Tolerances) -> Fingerprint {
    let alphabet: Vec<ComplexMatrix> = x.letters().iter().cloned().chain(x.adjoint_letters()).collect();
    let q = tol.fingerprint_round;
    let round = |z: Complex64| ((z.re / q).round() as i64, (z.im / q).round() as i64);
    let mut moments = Vec::new();
    let mut level: Vec<ComplexMatrix> = vec![linalg::identity(x.degree())];
    for _ in 0..3 {
        let mut next = Vec::with_capacity(level.len() * alphabet.len());
        for w in &level {
            for a in &alphabet {
                let word = w * a;
                moments.push(round(word.trace()));
                next.push(word);
            }
        }
        level = next;
    }
    Fingerprint { degree: x.degree(), moments }
}

/// Rounded entries of a representative fixed by a deterministic spectral
/// frame. Only used to order inequivalent factors whose fingerprints
/// collide.
fn canonical_key(x: &MatrixTuple, tol: &Tolerances) -> Vec<(i64, i64)> {
    let d = x.degree();
    let mut h = ComplexMatrix::zeros(d, d);
    for (k, l) in x.letters().iter().enumerate() {
        let w = 1.0 / (k as f64 + std::f64::consts::E);
        let v = 1.0 / (k as f64 + std::f64::consts::PI);
        let re = (l + l.adjoint()).scale(0.5);
        let im = (l - l.adjoint()) * Complex64::new(0.0, -0.5);
        h += re.scale(w) + im.scale(v);
    }
    let eig = match linalg::hermitian_eig(&h, &Tolerances { eq_abs: 1e-6, ..*tol }) {
        Ok(e) => e,
        Err(_) => return Vec::new(),
    };
    let mut frame = eig.vectors;
    let compressed: Vec<ComplexMatrix> = x.letters().iter().map(|l| frame.adjoint() * l * &frame).collect();
    for j in 1..d {
        if let Some(z) = compressed.iter().map(|m| m[(0, j)]).find(|z| z.norm() > 1e-6) {
            let phase = z / z.norm();
            for i in 0..d {
                frame[(i, j)] *= phase;
            }
        }
    }
    let q = tol.fingerprint_round;
    x.letters()
        .iter()
        .flat_map(|l| (frame.adjoint() * l * &frame).iter().cloned().collect::<Vec<_>>())
        .map(|z| ((z.re / q).round() as i64, (z.im / q).round() as i64))
        .collect()
}

/// For irreducible `a`, `b`: a unitary `W` with `act(W, a) == b`, if any.
///
/// `Hom(b, a)` is at most one-dimensional and any nonzero element is a
/// multiple of a unitary; its polar factor is the witness.
pub fn irreducible_equivalence(a: &MatrixTuple, b: &MatrixTuple, tol: &Tolerances) -> Result<Option<ComplexMatrix>> {
    a.check_labels(b)?;
    if a.degree() != b.degree() {
        return Ok(None);
    }
    if !cheap_invariants_match(a, b) {
        return Ok(None);
    }
    let hom = commutant::intertwiner_basis(b, a, tol)?;
    if hom.dim() != 1 {
        return Ok(None);
    }
    let w = linalg::polar_unitary(&hom.basis()[0]);
    let moved = a.act_unchecked(&w);
    let scale = 1.0 + a.norm();
    if tuple_distance(&moved, b)? > 1e-8 * scale {
        return Ok(None);
    }
    Ok(Some(w))
}

// Traces of X_l and X_l X_l* are conjugation invariants; a mismatch rules out
// equivalence without solving the Sylvester system.
fn cheap_invariants_match(a: &MatrixTuple, b: &MatrixTuple) -> bool {
    let scale = 1.0 + a.norm().max(b.norm());
    let d = a.degree() as f64;
    a.letters().iter().zip(b.letters()).all(|(x, y)| {
        let t = (x.trace() - y.trace()).norm();
        let g = (x.norm_squared() - y.norm_squared()).abs();
        t <= 1e-6 * scale * d && g <= 1e-6 * scale * scale * d
    })
}

struct Leaf {
    isometry: ComplexMatrix,
    tuple: MatrixTuple,
}

fn hermitian_element(space: &OperatorSpace, rng: &mut Rng) -> ComplexMatrix {
    let d = space.rows();
    let mut h = ComplexMatrix::zeros(d, d);
    let half_i = Complex64::new(0.0, -0.5);
    for b in space.basis() {
        let re = (b + b.adjoint()).scale(0.5);
        let im = (b - b.adjoint()) * half_i;
        h += re.scale(rng.normal()) + im.scale(rng.normal());
    }
    h = (&h + h.adjoint()).scale(0.5);
    let norm = h.norm();
    if norm > 0.0 {
        h /= Complex64::new(norm, 0.0);
    }
    h
}

fn split(
    x: &MatrixTuple,
    isometry: ComplexMatrix,
    depth: usize,
    max_depth: usize,
    rng: &mut Rng,
    tol: &Tolerances,
    leaves: &mut Vec<Leaf>,
) -> Result<()> {
    let comm = commutant::commutant_basis(x, tol);
    if comm.dim() <= 1 {
        leaves.push(Leaf { isometry, tuple: x.clone() });
        return Ok(());
    }
    if depth >= max_depth {
        return Err(Error::DecompositionFailed(format!("recursion depth {max_depth} exhausted")));
    }
    for _ in 0..MAX_DRAWS {
        let h = hermitian_element(&comm, rng);
        let eig = linalg::hermitian_eig(&h, tol)?;
        let clusters = linalg::cluster_eigenvalues(&eig.values, tol.eig_gap);
        if clusters.len() < 2 {
            continue;
        }
        for range in clusters {
            let v = eig.vectors.columns(range.start, range.len()).into_owned();
            let sub = x.compress(&v);
            split(&sub, &isometry * &v, depth + 1, max_depth, rng, tol, leaves)?;
        }
        return Ok(());
    }
    Err(Error::DecompositionFailed(format!("no splitting element found in a commutant of dimension {}", comm.dim())))
}

struct Class {
    rep: MatrixTuple,
    // (leaf index, W with act(W, leaf) == rep)
    members: Vec<(usize, ComplexMatrix)>,
}

fn compare_classes(a: &(Fingerprint, &Class), b: &(Fingerprint, &Class), tol: &Tolerances) -> Ordering {
    a.0.cmp(&b.0).then_with(|| canonical_key(&a.1.rep, tol).cmp(&canonical_key(&b.1.rep, tol)))
}

fn decompose_once(x: &MatrixTuple, rng: &mut Rng, tol: &Tolerances) -> Result<Decomposition> {
    let d = x.degree();
    let mut leaves = Vec::new();
    split(x, linalg::identity(d), 0, 2 * d, rng, tol, &mut leaves)?;

    let mut classes: Vec<Class> = Vec::new();
    'leaves: for (idx, leaf) in leaves.iter().enumerate() {
        for class in classes.iter_mut() {
            if let Some(w) = irreducible_equivalence(&leaf.tuple, &class.rep, tol)? {
                class.members.push((idx, w));
                continue 'leaves;
            }
        }
        let k = leaf.tuple.degree();
        classes.push(Class { rep: leaf.tuple.clone(), members: vec![(idx, linalg::identity(k))] });
    }

    let mut keyed: Vec<(Fingerprint, &Class)> = classes.iter().map(|c| (fingerprint(&c.rep, tol), c)).collect();
    keyed.sort_by(|a, b| compare_classes(a, b, tol));

    let mut conjugator = ComplexMatrix::zeros(d, d);
    let mut row = 0;
    let mut factors = Vec::with_capacity(keyed.len());
    for (_, class) in &keyed {
        for (idx, w) in &class.members {
            let block = w * leaves[*idx].isometry.adjoint();
            conjugator.view_mut((row, 0), (block.nrows(), d)).copy_from(&block);
            row += block.nrows();
        }
        factors.push(Factor { irreducible: class.rep.clone(), multiplicity: class.members.len() });
    }
    Ok(Decomposition { conjugator, factors })
}

/// Splits `x` into pairwise disjoint irreducibles with multiplicities.
///
/// Factors come out sorted by `(degree, fingerprint)`. The result is
/// checked against the reconstruction bound `1e-8 (1 + ‖X‖)`; failing
/// draws are retried before giving up with `DecompositionFailed`.
pub fn decompose(x: &MatrixTuple, rng: &mut Rng, tol: &Tolerances) -> Result<Decomposition> {
    let bound = 1e-8 * (1.0 + x.norm());
    let mut last = String::new();
    for _ in 0..MAX_ATTEMPTS {
        match decompose_once(x, rng, tol) {
            Ok(dec) => {
                let residual = dec.reconstruction_residual(x)?;
                if residual <= bound {
                    return Ok(dec);
                }
                last = format!("reconstruction residual {residual:.3e} exceeds {bound:.3e}");
            }
            Err(Error::DecompositionFailed(msg)) => last = msg,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DecompositionFailed(last))
}

/// For every factor of `left`, the index of the equivalent factor of
/// `right` and the witness `W` with `act(W, left_j) == right_k`.
fn match_factors(
    left: &Decomposition,
    right: &Decomposition,
    tol: &Tolerances,
) -> Result<Vec<Option<(usize, ComplexMatrix)>>> {
    let mut used = vec![false; right.factors.len()];
    let mut out = Vec::with_capacity(left.factors.len());
    for f in &left.factors {
        let mut found = None;
        for (k, g) in right.factors.iter().enumerate() {
            if used[k] {
                continue;
            }
            if let Some(w) = irreducible_equivalence(&f.irreducible, &g.irreducible, tol)? {
                used[k] = true;
                found = Some((k, w));
                break;
            }
        }
        out.push(found);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Equivalence {
    pub equivalent: bool,
    /// `act(witness, X) == Y` when equivalent.
    pub witness: Option<ComplexMatrix>,
}

impl Equivalence {
    fn no() -> Self {
        Self { equivalent: false, witness: None }
    }
}

pub fn are_equivalent(x: &MatrixTuple, y: &MatrixTuple, tol: &Tolerances) -> Result<Equivalence> {
    are_equivalent_with(x, y, &mut Rng::new(RELATION_SEED), tol)
}

pub fn are_equivalent_with(x: &MatrixTuple, y: &MatrixTuple, rng: &mut Rng, tol: &Tolerances) -> Result<Equivalence> {
    x.check_labels(y)?;
    if x.degree() != y.degree() {
        return Ok(Equivalence::no());
    }
    if tuple_distance(x, y)? <= tol.eq_abs {
        return Ok(Equivalence { equivalent: true, witness: Some(linalg::identity(x.degree())) });
    }
    let dx = decompose(x, rng, tol)?;
    let dy = decompose(y, rng, tol)?;
    if dx.factors.len() != dy.factors.len() {
        return Ok(Equivalence::no());
    }
    let matches = match_factors(&dx, &dy, tol)?;
    let mut pairs = Vec::with_capacity(matches.len());
    for (f, m) in dx.factors.iter().zip(matches) {
        match m {
            Some((k, w)) if dy.factors[k].multiplicity == f.multiplicity => pairs.push((k, w)),
            _ => return Ok(Equivalence::no()),
        }
    }

    // Offsets of each block in the normal forms of x and y.
    let block_size = |f: &Factor| f.multiplicity * f.irreducible.degree();
    let offsets = |fs: &[Factor]| {
        fs.iter()
            .scan(0, |acc, f| {
                let at = *acc;
                *acc += block_size(f);
                Some(at)
            })
            .collect::<Vec<_>>()
    };
    let (off_x, off_y) = (offsets(&dx.factors), offsets(&dy.factors));
    let d = x.degree();
    let mut perm = vec![0; d];
    let mut inner_blocks = Vec::with_capacity(pairs.len());
    for (j, (k, w)) in pairs.iter().enumerate() {
        for t in 0..block_size(&dx.factors[j]) {
            perm[off_x[j] + t] = off_y[*k] + t;
        }
        inner_blocks.push(linalg::kron(&linalg::identity(dx.factors[j].multiplicity), w));
    }
    let refs: Vec<&ComplexMatrix> = inner_blocks.iter().collect();
    let witness =
        dy.conjugator.adjoint() * linalg::permutation_matrix(&perm) * linalg::block_diag(&refs) * &dx.conjugator;

    let residual = tuple_distance(&x.act_unchecked(&witness), y)?;
    if residual > 1e-8 * (1.0 + x.norm()) {
        return Err(Error::InternalInconsistency(format!("assembled witness misses by {residual:.3e}")));
    }
    Ok(Equivalence { equivalent: true, witness: Some(witness) })
}

/// `X ⊥ Y`: no nonzero intertwiner. Cross-checked against the
/// decompositions, which must not share an irreducible class.
pub fn are_disjoint(x: &MatrixTuple, y: &MatrixTuple, tol: &Tolerances) -> Result<bool> {
    are_disjoint_with(x, y, &mut Rng::new(RELATION_SEED), tol)
}

pub fn are_disjoint_with(x: &MatrixTuple, y: &MatrixTuple, rng: &mut Rng, tol: &Tolerances) -> Result<bool> {
    let hom = commutant::intertwiner_basis(x, y, tol)?;
    let by_hom = hom.dim() == 0;
    let dx = decompose(x, rng, tol)?;
    let dy = decompose(y, rng, tol)?;
    let shared = match_factors(&dx, &dy, tol)?.iter().any(Option::is_some);
    if by_hom == shared {
        return Err(Error::InternalInconsistency(format!(
            "intertwiner dimension {} disagrees with factor matching (shared class: {shared})",
            hom.dim()
        )));
    }
    Ok(by_hom)
}

/// `X ≼ Y`: `X` is equivalent to a direct summand of `Y`.
pub fn is_subordinate(x: &MatrixTuple, y: &MatrixTuple, tol: &Tolerances) -> Result<bool> {
    is_subordinate_with(x, y, &mut Rng::new(RELATION_SEED), tol)
}

pub fn is_subordinate_with(x: &MatrixTuple, y: &MatrixTuple, rng: &mut Rng, tol: &Tolerances) -> Result<bool> {
    x.check_labels(y)?;
    if x.degree() > y.degree() {
        return Ok(false);
    }
    let dx = decompose(x, rng, tol)?;
    let dy = decompose(y, rng, tol)?;
    let matches = match_factors(&dx, &dy, tol)?;
    Ok(dx
        .factors
        .iter()
        .zip(matches)
        .all(|(f, m)| matches!(m, Some((k, _)) if f.multiplicity <= dy.factors[k].multiplicity)))
}
