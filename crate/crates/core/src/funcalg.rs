//! Compatible matrix-valued functions on finitely sampled towers.
//!
//! A [`SampledTower`] stores pairwise disjoint irreducible orbit
//! representatives and a list of points, each given as a conjugator plus an
//! ordered list of representatives: the raw point is
//! `act(conjugator, ⊕ representatives)`. A [`TowerFunction`] is determined by
//! its values on the representatives; every other value follows from
//! `f(U . (⊕ A_j)) = U . (⊕ f(A_j))`.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::commutant::{self, StabilizerStructure};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Rng, Tolerances};
use crate::tuple::{tuple_distance, MatrixTuple};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub id: String,
    pub conjugator: ComplexMatrix,
    /// Registry indices in direct-sum order.
    pub content: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SampledTower {
    label_count: usize,
    registry: Vec<MatrixTuple>,
    points: Vec<SamplePoint>,
    raw: Vec<MatrixTuple>,
}

fn block_degrees(registry: &[MatrixTuple], content: &[usize]) -> usize {
    content.iter().map(|&r| registry[r].degree()).sum()
}

impl SampledTower {
    /// Validates the registry (irreducible, pairwise disjoint) and every
    /// point, then materializes the raw tuples.
    pub fn new(registry: Vec<MatrixTuple>, points: Vec<SamplePoint>, tol: &Tolerances) -> Result<Self> {
        let first = registry.first().ok_or_else(|| Error::InvalidShape("registry is empty".into()))?;
        let label_count = first.label_count();
        for (k, r) in registry.iter().enumerate() {
            first.check_labels(r)?;
            if !commutant::is_irreducible(r, tol) {
                return Err(Error::InvalidShape(format!("registry entry {k} is not irreducible")));
            }
        }
        for i in 0..registry.len() {
            for j in i + 1..registry.len() {
                if commutant::intertwiner_basis(&registry[i], &registry[j], tol)?.dim() != 0 {
                    return Err(Error::InvalidShape(format!("registry entries {i} and {j} are not disjoint")));
                }
            }
        }
        let mut tower = Self { label_count, registry, points: Vec::new(), raw: Vec::new() };
        for p in points {
            tower.push_point(p, tol)?;
        }
        Ok(tower)
    }

    pub fn push_point(&mut self, point: SamplePoint, tol: &Tolerances) -> Result<()> {
        if self.points.iter().any(|p| p.id == point.id) {
            return Err(Error::InvalidShape(format!("duplicate point id {}", point.id)));
        }
        if point.content.is_empty() {
            return Err(Error::InvalidShape(format!("point {} has empty content", point.id)));
        }
        if let Some(&bad) = point.content.iter().find(|&&r| r >= self.registry.len()) {
            return Err(Error::NotFound(format!("registry id {bad} in point {}", point.id)));
        }
        let parts: Vec<&MatrixTuple> = point.content.iter().map(|&r| &self.registry[r]).collect();
        let raw = MatrixTuple::oplus_all(parts)?.act(&point.conjugator, tol)?;
        self.points.push(point);
        self.raw.push(raw);
        Ok(())
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn registry(&self) -> &[MatrixTuple] {
        &self.registry
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn point_index(&self, id: &str) -> Result<usize> {
        self.points.iter().position(|p| p.id == id).ok_or_else(|| Error::NotFound(format!("point {id}")))
    }

    /// The stored tuple `act(conjugator, ⊕ representatives)`.
    pub fn raw_point(&self, id: &str) -> Result<&MatrixTuple> {
        Ok(&self.raw[self.point_index(id)?])
    }

    pub fn point_degree(&self, id: &str) -> Result<usize> {
        Ok(block_degrees(&self.registry, &self.points[self.point_index(id)?].content))
    }

    /// Recomputes every raw tuple and reports the largest drift.
    pub fn revalidate(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.raw)
            .map(|(p, raw)| {
                let parts: Vec<&MatrixTuple> = p.content.iter().map(|&r| &self.registry[r]).collect();
                let fresh = MatrixTuple::oplus_all(parts).expect("validated on insertion").act_unchecked(&p.conjugator);
                tuple_distance(&fresh, raw).expect("same shape")
            })
            .fold(0.0, f64::max)
    }
}

/// A compatible function, stored by its values on registry classes.
#[derive(Debug, Clone, PartialEq)]
pub struct TowerFunction {
    values: Vec<ComplexMatrix>,
}

impl TowerFunction {
    pub fn new(tower: &SampledTower, values: Vec<ComplexMatrix>) -> Result<Self> {
        if values.len() != tower.registry.len() {
            return Err(Error::InvalidShape(format!(
                "{} values for {} registry classes",
                values.len(),
                tower.registry.len()
            )));
        }
        for (k, (v, r)) in values.iter().zip(&tower.registry).enumerate() {
            if v.nrows() != r.degree() || v.ncols() != r.degree() {
                return Err(Error::InvalidShape(format!("value {k} must be {0}x{0}", r.degree())));
            }
        }
        Ok(Self { values })
    }

    pub fn from_fn(tower: &SampledTower, mut f: impl FnMut(usize, &MatrixTuple) -> ComplexMatrix) -> Result<Self> {
        let values = tower.registry.iter().enumerate().map(|(k, r)| f(k, r)).collect();
        Self::new(tower, values)
    }

    /// The unit `j`: identity on every class.
    pub fn unit(tower: &SampledTower) -> Self {
        Self { values: tower.registry.iter().map(|r| linalg::identity(r.degree())).collect() }
    }

    /// Value `1_{r}`: identity on class `r`, zero elsewhere.
    pub fn indicator(tower: &SampledTower, class: usize) -> Self {
        let values = tower
            .registry
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let d = r.degree();
                if k == class {
                    linalg::identity(d)
                } else {
                    ComplexMatrix::zeros(d, d)
                }
            })
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[ComplexMatrix] {
        &self.values
    }

    fn zip_with(&self, other: &Self, op: impl Fn(&ComplexMatrix, &ComplexMatrix) -> ComplexMatrix) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| op(a, b)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn adjoint(&self) -> Self {
        Self { values: self.values.iter().map(|a| a.adjoint()).collect() }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { values: self.values.iter().map(|a| a * c).collect() }
    }

    /// `f ∘ τ` for a map sending each class `s` of another registry to the
    /// point `act(conjugator_s, ⊕ content_s)` of this tower.
    pub fn pullback(&self, tower: &SampledTower, images: &[(ComplexMatrix, Vec<usize>)]) -> Result<TowerFunction> {
        let values =
            images.iter().map(|(u, content)| evaluate_parts(tower, self, u, content)).collect::<Result<Vec<_>>>()?;
        Ok(TowerFunction { values })
    }
}

fn evaluate_parts(
    tower: &SampledTower,
    f: &TowerFunction,
    u: &ComplexMatrix,
    content: &[usize],
) -> Result<ComplexMatrix> {
    if let Some(&bad) = content.iter().find(|&&r| r >= f.values.len()) {
        return Err(Error::NotFound(format!("registry id {bad}")));
    }
    if f.values.len() != tower.registry.len() {
        return Err(Error::InvalidShape("function does not belong to this tower".into()));
    }
    let blocks: Vec<&ComplexMatrix> = content.iter().map(|&r| &f.values[r]).collect();
    let inner = linalg::block_diag(&blocks);
    if u.nrows() != inner.nrows() {
        return Err(Error::InvalidShape("conjugator does not match point degree".into()));
    }
    Ok(linalg::conjugate(u, &inner))
}

/// `f(p) = conjugator_p . (⊕ f(r))`.
pub fn evaluate(tower: &SampledTower, f: &TowerFunction, point: &str) -> Result<ComplexMatrix> {
    let p = &tower.points[tower.point_index(point)?];
    evaluate_parts(tower, f, &p.conjugator, &p.content)
}

/// `‖f‖`: largest operator norm over the registry classes.
pub fn sup_norm(f: &TowerFunction) -> f64 {
    f.values.iter().map(linalg::op_norm).fold(0.0, f64::max)
}

/// Largest operator norm over all stored points; equals [`sup_norm`] when
/// every class occurs in some point.
pub fn sup_norm_over_points(tower: &SampledTower, f: &TowerFunction) -> Result<f64> {
    let mut best: f64 = 0.0;
    for p in &tower.points {
        best = best.max(linalg::op_norm(&evaluate(tower, f, &p.id)?));
    }
    Ok(best)
}

/// The finite-dimensional representation `π_p : f ↦ f(p)`.
#[derive(Debug, Clone, Copy)]
pub struct PointRepresentation<'a> {
    tower: &'a SampledTower,
    index: usize,
}

impl PointRepresentation<'_> {
    pub fn apply(&self, f: &TowerFunction) -> Result<ComplexMatrix> {
        let p = &self.tower.points[self.index];
        evaluate_parts(self.tower, f, &p.conjugator, &p.content)
    }

    pub fn dimension(&self) -> usize {
        block_degrees(&self.tower.registry, &self.tower.points[self.index].content)
    }

    /// Irreducible exactly when the point is a single class.
    pub fn is_irreducible(&self) -> bool {
        self.tower.points[self.index].content.len() == 1
    }
}

pub fn representation_at<'a>(tower: &'a SampledTower, point: &str) -> Result<PointRepresentation<'a>> {
    Ok(PointRepresentation { tower, index: tower.point_index(point)? })
}

/// Which construction produced a separating function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationCase {
    /// Evaluations live in different matrix sizes.
    DegreeMismatch,
    /// A class occurs in one point only.
    DisjointClass,
    /// A shared class occurs with different multiplicities.
    Multiplicity,
    /// Same classes and multiplicities, conjugators differ modulo the
    /// stabilizer.
    Conjugator,
}

#[derive(Debug, Clone)]
pub struct Separation {
    pub function: TowerFunction,
    pub case: SeparationCase,
    /// `‖f(p) − f(q)‖` in operator norm; infinite for `DegreeMismatch`.
    pub gap: f64,
}

fn counts(content: &[usize]) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for &r in content {
        *out.entry(r).or_insert(0) += 1;
    }
    out
}

/// Builds `f` with `f(p) ≠ f(q)`.
pub fn separate(tower: &SampledTower, p: &str, q: &str, rng: &mut Rng, tol: &Tolerances) -> Result<Separation> {
    let (ip, iq) = (tower.point_index(p)?, tower.point_index(q)?);
    let (pp, pq) = (&tower.points[ip], &tower.points[iq]);
    let (dp, dq) = (block_degrees(&tower.registry, &pp.content), block_degrees(&tower.registry, &pq.content));
    if dp != dq {
        return Ok(Separation {
            function: TowerFunction::unit(tower),
            case: SeparationCase::DegreeMismatch,
            gap: f64::INFINITY,
        });
    }
    if tuple_distance(&tower.raw[ip], &tower.raw[iq])? < tol.eq_abs {
        return Err(Error::NotSeparable(format!("points {p} and {q} coincide")));
    }
    let (cp, cq) = (counts(&pp.content), counts(&pq.content));
    let chosen = cp
        .keys()
        .find(|r| !cq.contains_key(r))
        .map(|&r| (r, SeparationCase::DisjointClass))
        .or_else(|| {
            cp.iter().find(|(r, n)| cq.get(r).is_some_and(|m| m != *n)).map(|(&r, _)| (r, SeparationCase::Multiplicity))
        })
        .or_else(|| cq.keys().find(|r| !cp.contains_key(r)).map(|&r| (r, SeparationCase::DisjointClass)));

    let gap_of =
        |f: &TowerFunction| -> Result<f64> { Ok(linalg::op_norm(&(evaluate(tower, f, p)? - evaluate(tower, f, q)?))) };

    if let Some((class, case)) = chosen {
        let function = TowerFunction::indicator(tower, class);
        let gap = gap_of(&function)?;
        return Ok(Separation { function, case, gap });
    }

    // Same multiset: give each class an irreducible value, pairwise disjoint,
    // so that stab(f(t)) = stab(t) and differing conjugators show up.
    let mut best_gap = 0.0;
    for _ in 0..10 {
        let values: Vec<ComplexMatrix> = tower.registry.iter().map(|r| rng.ginibre(r.degree(), r.degree())).collect();
        let singles: Vec<MatrixTuple> =
            values.iter().map(|v| MatrixTuple::new(vec![v.clone()]).expect("square")).collect();
        if !singles.iter().all(|s| commutant::is_irreducible(s, tol)) {
            continue;
        }
        let mut disjoint = true;
        'pairs: for i in 0..singles.len() {
            for j in i + 1..singles.len() {
                if singles[i].degree() == singles[j].degree()
                    && commutant::intertwiner_basis(&singles[i], &singles[j], tol)?.dim() != 0
                {
                    disjoint = false;
                    break 'pairs;
                }
            }
        }
        if !disjoint {
            continue;
        }
        let function = TowerFunction { values };
        let gap = gap_of(&function)?;
        if gap > 10.0 * tol.eq_abs {
            return Ok(Separation { function, case: SeparationCase::Conjugator, gap });
        }
        best_gap = f64::max(best_gap, gap);
    }
    Err(Error::NotSeparable(format!("best gap {best_gap:.3e} after 10 draws")))
}

/// Central elements take scalar values on every class.
pub fn is_central(f: &TowerFunction, tol: &Tolerances) -> bool {
    f.values.iter().all(|v| linalg::scalar_part(v).1 <= tol.eq_abs)
}

/// The ideal of functions vanishing on a set of classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VanishingIdealSpec {
    pub zero_set: BTreeSet<usize>,
}

impl VanishingIdealSpec {
    pub fn contains(&self, f: &TowerFunction, tol: &Tolerances) -> bool {
        self.zero_set.iter().all(|&r| f.values.get(r).is_some_and(|v| v.norm() <= tol.eq_abs))
    }
}

/// Monte-Carlo Haar average `(1/K) Σ U_k* w(U_k) U_k` followed by the exact
/// projection onto the commutant of `stab(X)`.
///
/// `w(U)` is read as the raw value at `act(U, X)`.
pub fn twirl(
    x: &MatrixTuple,
    mut w: impl FnMut(&ComplexMatrix) -> ComplexMatrix,
    samples: usize,
    rng: &mut Rng,
    stab: &StabilizerStructure,
) -> Result<ComplexMatrix> {
    let d = x.degree();
    if stab.degree() != d {
        return Err(Error::InvalidShape(format!("stabilizer acts on degree {}, tuple has {d}", stab.degree())));
    }
    if samples == 0 {
        return Err(Error::Unsupported("twirl needs at least one sample".into()));
    }
    let mut acc = ComplexMatrix::zeros(d, d);
    for _ in 0..samples {
        let u = linalg::haar_unitary(d, rng);
        let value = w(&u);
        if value.nrows() != d || value.ncols() != d {
            return Err(Error::InvalidShape(format!(
                "integrand returned {}x{}, expected {d}x{d}",
                value.nrows(),
                value.ncols()
            )));
        }
        acc += u.adjoint() * value * &u;
    }
    acc /= Complex64::new(samples as f64, 0.0);
    Ok(stab.project_commutant(&acc))
}

/// The letters generate all of `M_d` as a von Neumann algebra.
pub fn generates_fully(x: &MatrixTuple, tol: &Tolerances) -> bool {
    let d = x.degree();
    commutant::bicommutant_basis(x, tol).dim() == d * d
}

/// `I ⊕ 0` lies in the von Neumann algebra generated by `X ⊕ Y`.
pub fn separating_projection_exists(x: &MatrixTuple, y: &MatrixTuple, tol: &Tolerances) -> Result<bool> {
    let sum = x.oplus(y)?;
    let algebra = commutant::bicommutant_basis(&sum, tol);
    let mut projection = ComplexMatrix::zeros(sum.degree(), sum.degree());
    for i in 0..x.degree() {
        projection[(i, i)] = linalg::ONE;
    }
    Ok(algebra.span_residual(&projection) < 1e-8)
}

/// `c_n`: largest operator norm of the values on classes of degree `n`, for
/// `n` from 1 to the largest registry degree (0 where no class has that
/// degree).
pub fn degree_profile(tower: &SampledTower, f: &TowerFunction) -> Vec<(usize, f64)> {
    let top = tower.registry.iter().map(|r| r.degree()).max().unwrap_or(0);
    let mut profile: Vec<(usize, f64)> = (1..=top).map(|n| (n, 0.0)).collect();
    for (r, v) in tower.registry.iter().zip(&f.values) {
        let slot = &mut profile[r.degree() - 1].1;
        *slot = slot.max(linalg::op_norm(v));
    }
    profile
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::decompose;
    use crate::linalg::{haar_unitary, identity, swap_unitary, ZERO};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag(values: &[f64]) -> ComplexMatrix {
        let n = values.len();
        ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { ZERO })
    }

    fn irreducible(degree: usize, rng: &mut Rng) -> MatrixTuple {
        let tol = Tolerances::default();
        loop {
            let t = MatrixTuple::random(degree, 2, rng).scaled(0.5);
            if commutant::is_irreducible(&t, &tol) {
                return t;
            }
        }
    }

    fn point(id: &str, conjugator: ComplexMatrix, content: Vec<usize>) -> SamplePoint {
        SamplePoint { id: id.into(), conjugator, content }
    }

    /// Registry: r0 of degree 1, r1 and r2 of degree 2.
    fn small_tower(rng: &mut Rng) -> SampledTower {
        let tol = Tolerances::default();
        let registry = vec![irreducible(1, rng), irreducible(2, rng), irreducible(2, rng)];
        let points = vec![
            point("a", identity(2), vec![1]),
            point("b", identity(2), vec![2]),
            point("c", haar_unitary(5, rng), vec![0, 1, 2]),
            point("d", haar_unitary(4, rng), vec![1, 1]),
            point("e", haar_unitary(4, rng), vec![1, 2]),
            point("f", haar_unitary(4, rng), vec![1, 2]),
            point("g", identity(1), vec![0]),
        ];
        SampledTower::new(registry, points, &tol).unwrap()
    }

    #[test]
    fn registry_must_be_irreducible_and_disjoint() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(1);
        let a = irreducible(2, &mut rng);
        let reducible = a.oplus(&irreducible(1, &mut rng)).unwrap();
        assert!(SampledTower::new(vec![reducible], vec![], &tol).is_err());
        let moved = a.act(&haar_unitary(2, &mut rng), &tol).unwrap();
        assert!(SampledTower::new(vec![a, moved], vec![], &tol).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let mut rng = Rng::new(2);
        let tower = small_tower(&mut rng);
        assert!(tower.revalidate() < 1e-12);
        let unit = TowerFunction::unit(&tower);
        for p in tower.points() {
            let d = tower.point_degree(&p.id).unwrap();
            assert!((evaluate(&tower, &unit, &p.id).unwrap() - identity(d)).norm() < 1e-12);
        }
        let f = TowerFunction::from_fn(&tower, |_, r| rng.ginibre(r.degree(), r.degree())).unwrap();
        assert_eq!(evaluate(&tower, &f, "a").unwrap(), f.values()[1]);
        assert!(matches!(evaluate(&tower, &f, "nope"), Err(Error::NotFound(_))));
    }

    #[test]
    fn evaluation_ignores_stabilizer_changes_of_conjugator() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(3);
        let mut tower = small_tower(&mut rng);
        let content = vec![1, 1, 2];
        let base = MatrixTuple::oplus_all(content.iter().map(|&r| &tower.registry()[r])).unwrap();
        let dec = decompose(&base, &mut rng, &tol).unwrap();
        let stab = commutant::stabilizer_structure(&base, &dec, &tol).unwrap();
        let w1 = haar_unitary(6, &mut rng);
        let w2 = &w1 * stab.sample(&mut rng);
        tower.push_point(point("w1", w1, content.clone()), &tol).unwrap();
        tower.push_point(point("w2", w2, content), &tol).unwrap();
        assert!(tuple_distance(tower.raw_point("w1").unwrap(), tower.raw_point("w2").unwrap()).unwrap() < 1e-8);
        let f = TowerFunction::from_fn(&tower, |_, r| rng.ginibre(r.degree(), r.degree())).unwrap();
        let diff = evaluate(&tower, &f, "w1").unwrap() - evaluate(&tower, &f, "w2").unwrap();
        assert!(diff.norm() < 1e-8);
    }

    #[test]
    fn reordering_content_with_swap_keeps_values() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(4);
        let mut tower = small_tower(&mut rng);
        let u = haar_unitary(3, &mut rng);
        tower.push_point(point("x", u.clone(), vec![0, 1]), &tol).unwrap();
        // ⊕(r1, r0) = U_{1,2} . ⊕(r0, r1), so the same raw point is u U_{1,2}*.
        tower.push_point(point("y", &u * swap_unitary(1, 2).adjoint(), vec![1, 0]), &tol).unwrap();
        let f = TowerFunction::from_fn(&tower, |_, r| rng.ginibre(r.degree(), r.degree())).unwrap();
        let diff = evaluate(&tower, &f, "x").unwrap() - evaluate(&tower, &f, "y").unwrap();
        assert!(diff.norm() < 1e-8);
    }

    #[test]
    fn sup_norm_examples() {
        let mut rng = Rng::new(5);
        let tower = small_tower(&mut rng);
        let unit = TowerFunction::unit(&tower);
        assert!((sup_norm(&unit) - 1.0).abs() < 1e-12);
        assert!((sup_norm(&unit.scale(c(3.0))) - 3.0).abs() < 1e-12);
        let f = TowerFunction::from_fn(&tower, |_, r| rng.ginibre(r.degree(), r.degree())).unwrap();
        assert!((sup_norm(&f) - sup_norm_over_points(&tower, &f).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn sup_norm_matches_exhaustive_points() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(6);
        let registry = vec![irreducible(1, &mut rng), irreducible(2, &mut rng)];
        let x = ComplexMatrix::from_row_slice(2, 2, &[c(0.9), ZERO, ZERO, c(0.3)]);
        let mut tower = SampledTower::new(registry, vec![], &tol).unwrap();
        for k in 0..50 {
            let content: Vec<usize> = (0..1 + rng.below(4)).map(|_| rng.below(2)).collect();
            let d = content.iter().map(|&r| r + 1).sum();
            tower.push_point(point(&format!("p{k}"), haar_unitary(d, &mut rng), content), &tol).unwrap();
        }
        let f = TowerFunction::new(&tower, vec![diag(&[0.5]), x]).unwrap();
        assert!((sup_norm(&f) - 0.9).abs() < 1e-12);
        // The 50 random points all contain some class; at least one has r1.
        assert!((sup_norm_over_points(&tower, &f).unwrap() - 0.9).abs() < 1e-10);
    }

    #[test]
    fn representation_is_a_unital_homomorphism() {
        let mut rng = Rng::new(7);
        let tower = small_tower(&mut rng);
        let f = TowerFunction::from_fn(&tower, |_, r| rng.ginibre(r.degree(), r.degree())).unwrap();
        let g = TowerFunction::from_fn(&tower, |_, r| rng.ginibre(r.degree(), r.degree())).unwrap();
        for id in ["a", "c", "e"] {
            let pi = representation_at(&tower, id).unwrap();
            let d = pi.dimension();
            assert!((pi.apply(&TowerFunction::unit(&tower)).unwrap() - identity(d)).norm() < 1e-12);
            let prod = pi.apply(&f.mul(&g)).unwrap() - pi.apply(&f).unwrap() * pi.apply(&g).unwrap();
            assert!(prod.norm() < 1e-8);
            let sum = pi.apply(&f.add(&g)).unwrap() - pi.apply(&f).unwrap() - pi.apply(&g).unwrap();
            assert!(sum.norm() < 1e-12);
            let adj = pi.apply(&f.adjoint()).unwrap() - pi.apply(&f).unwrap().adjoint();
            assert!(adj.norm() < 1e-9);
        }
        assert!(representation_at(&tower, "a").unwrap().is_irreducible());
        assert!(!representation_at(&tower, "c").unwrap().is_irreducible());
    }

    #[test]
    fn separate_covers_all_cases() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(8);
        let tower = small_tower(&mut rng);

        let s = separate(&tower, "a", "b", &mut rng, &tol).unwrap();
        assert_eq!(s.case, SeparationCase::DisjointClass);
        assert!((evaluate(&tower, &s.function, "a").unwrap() - identity(2)).norm() < 1e-12);
        assert!(evaluate(&tower, &s.function, "b").unwrap().norm() < 1e-12);

        let s = separate(&tower, "d", "e", &mut rng, &tol).unwrap();
        assert_eq!(s.case, SeparationCase::Multiplicity);
        let rank = |m: ComplexMatrix| linalg::singular_values(&m).iter().filter(|&&v| v > 0.5).count();
        assert_eq!(rank(evaluate(&tower, &s.function, "d").unwrap()), 4);
        assert_eq!(rank(evaluate(&tower, &s.function, "e").unwrap()), 2);

        let s = separate(&tower, "e", "f", &mut rng, &tol).unwrap();
        assert_eq!(s.case, SeparationCase::Conjugator);
        let direct = linalg::op_norm(
            &(evaluate(&tower, &s.function, "e").unwrap() - evaluate(&tower, &s.function, "f").unwrap()),
        );
        assert!(direct > 10.0 * tol.eq_abs);
        assert!((direct - s.gap).abs() < 1e-12);

        let s = separate(&tower, "a", "g", &mut rng, &tol).unwrap();
        assert_eq!(s.case, SeparationCase::DegreeMismatch);
        assert!(matches!(separate(&tower, "e", "e", &mut rng, &tol), Err(Error::NotSeparable(_))));
    }

    #[test]
    fn centrality_examples() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(9);
        let registry = vec![irreducible(1, &mut rng), irreducible(2, &mut rng)];
        let tower = SampledTower::new(registry, vec![], &tol).unwrap();
        assert!(is_central(&TowerFunction::unit(&tower), &tol));
        let f = TowerFunction::new(&tower, vec![diag(&[2.0]), identity(2).scale(3.0)]).unwrap();
        assert!(is_central(&f, &tol));
        let g = TowerFunction::new(&tower, vec![diag(&[2.0]), diag(&[1.0, 2.0])]).unwrap();
        assert!(!is_central(&g, &tol));
        let ideal = VanishingIdealSpec { zero_set: [0].into() };
        assert!(ideal.contains(&TowerFunction::indicator(&tower, 1), &tol));
        assert!(!ideal.contains(&f, &tol));
    }

    #[test]
    fn twirl_of_constant_tends_to_trace_average() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(10);
        let x = irreducible(3, &mut rng);
        let dec = decompose(&x, &mut rng, &tol).unwrap();
        let stab = commutant::stabilizer_structure(&x, &dec, &tol).unwrap();
        let constant = rng.ginibre(3, 3);
        let k = 4096;
        let v = twirl(&x, |_| constant.clone(), k, &mut rng, &stab).unwrap();
        // Haar average of U* C U is tr(C)/d I.
        let expected = identity(3) * (constant.trace() / 3.0);
        let err = (v - expected).norm();
        assert!(err < 6.0 * constant.norm() / (k as f64).sqrt(), "{err}");
    }

    #[test]
    fn twirl_fixes_equivariant_integrands() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(11);
        let a = irreducible(2, &mut rng);
        let x = a.times(2);
        let dec = decompose(&x, &mut rng, &tol).unwrap();
        let stab = commutant::stabilizer_structure(&x, &dec, &tol).unwrap();
        let value = &x.letters()[0] * &x.letters()[1] + x.letters()[0].adjoint();
        for k in [1, 7] {
            let v = twirl(&x, |u| linalg::conjugate(u, &value), k, &mut rng, &stab).unwrap();
            assert!((v - &value).norm() < 1e-10);
        }
        let arbitrary = twirl(&x, |u| u.map(|z| z * z), 64, &mut rng, &stab).unwrap();
        for _ in 0..20 {
            let s = stab.sample(&mut rng);
            assert!((linalg::conjugate(&s, &arbitrary) - &arbitrary).norm() < 1e-10);
        }
        assert!(matches!(twirl(&x, |_| identity(2), 4, &mut rng, &stab), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn generation_examples() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(12);
        assert!(generates_fully(&irreducible(3, &mut rng), &tol));
        assert!(!generates_fully(&MatrixTuple::new(vec![diag(&[1.0, 2.0])]).unwrap(), &tol));
        assert!(!generates_fully(&MatrixTuple::new(vec![identity(2)]).unwrap(), &tol));
    }

    #[test]
    fn separating_projection_examples() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(13);
        let x = irreducible(2, &mut rng);
        let y = irreducible(3, &mut rng);
        assert!(separating_projection_exists(&x, &y, &tol).unwrap());
        let moved = x.act(&haar_unitary(2, &mut rng), &tol).unwrap();
        assert!(!separating_projection_exists(&x, &moved, &tol).unwrap());
        let a = MatrixTuple::scalars(&[c(1.0)]).unwrap();
        let b = MatrixTuple::scalars(&[c(2.0)]).unwrap();
        assert!(separating_projection_exists(&a, &b, &tol).unwrap());
    }

    #[test]
    fn degree_profile_examples() {
        let tol = Tolerances::default();
        let mut rng = Rng::new(14);
        let registry = vec![irreducible(1, &mut rng), irreducible(2, &mut rng), irreducible(3, &mut rng)];
        let tower = SampledTower::new(registry, vec![], &tol).unwrap();
        let unit = degree_profile(&tower, &TowerFunction::unit(&tower));
        assert!(unit.iter().all(|&(_, c)| (c - 1.0).abs() < 1e-12));
        let halving =
            TowerFunction::from_fn(&tower, |_, r| identity(r.degree()).scale(0.5f64.powi(r.degree() as i32))).unwrap();
        let profile = degree_profile(&tower, &halving);
        for (n, value) in profile {
            assert!((value - 0.5f64.powi(n as i32)).abs() < 1e-12);
        }
        let vanishing = TowerFunction::from_fn(&tower, |_, r| {
            if r.degree() == 2 {
                ComplexMatrix::zeros(2, 2)
            } else {
                identity(r.degree())
            }
        })
        .unwrap();
        assert_eq!(degree_profile(&tower, &vanishing)[1], (2, 0.0));
    }

    #[test]
    fn pullback_preserves_products() {
        let mut rng = Rng::new(15);
        let tower = small_tower(&mut rng);
        let images = vec![(haar_unitary(3, &mut rng), vec![0, 2]), (identity(2), vec![1])];
        let f = TowerFunction::from_fn(&tower, |_, r| rng.ginibre(r.degree(), r.degree())).unwrap();
        let g = TowerFunction::from_fn(&tower, |_, r| rng.ginibre(r.degree(), r.degree())).unwrap();
        let lhs = f.mul(&g).pullback(&tower, &images).unwrap();
        let rhs = f.pullback(&tower, &images).unwrap().mul(&g.pullback(&tower, &images).unwrap());
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()));
        }
    }
}
