//! Finite combinatorial tower presentations.
//!
//! A presentation lists irreducible classes with their degrees. A
//! `Sequence` class stands for a convergent family of irreducible points;
//! its `limits` are the multisets (direct sums of classes) that the family
//! accumulates at. Points of the tower are arbitrary multisets of classes.
//!
//! The subtower generated by a set of classes is the least set closed under
//! "a sequence class brings in the constituents of its limits". Tail
//! subtowers `T[N]` are generated by the classes of degree at least `N`
//! together with the classes flagged `in_every_tail`, which stand for
//! behaviour beyond the truncation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Multiset of class ids, serialized as `[["id", multiplicity], ...]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiset(BTreeMap<String, u32>);

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(id: impl Into<String>, count: u32) -> Self {
        let mut m = Self::new();
        m.add(id, count);
        m
    }

    pub fn add(&mut self, id: impl Into<String>, count: u32) {
        if count > 0 {
            *self.0.entry(id.into()).or_insert(0) += count;
        }
    }

    pub fn union(&self, other: &Multiset) -> Multiset {
        let mut out = self.clone();
        for (id, &n) in &other.0 {
            out.add(id.clone(), n);
        }
        out
    }

    pub fn count(&self, id: &str) -> u32 {
        self.0.get(id).copied().unwrap_or(0)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.count(id) > 0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn size(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn support(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// `self - other`, or `None` if some count would go negative.
    fn checked_sub(&self, other: &Multiset) -> Option<Multiset> {
        let mut out = self.0.clone();
        for (id, &n) in &other.0 {
            let slot = out.get_mut(id)?;
            if *slot < n {
                return None;
            }
            *slot -= n;
            if *slot == 0 {
                out.remove(id);
            }
        }
        Some(Multiset(out))
    }
}

impl FromIterator<(String, u32)> for Multiset {
    fn from_iter<I: IntoIterator<Item = (String, u32)>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for (id, n) in iter {
            m.add(id, n);
        }
        m
    }
}

impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.iter().map(|(id, n)| if n == 1 { id.to_string() } else { format!("{n}*{id}") }).collect();
        write!(f, "{{{}}}", parts.join(" + "))
    }
}

impl Serialize for Multiset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<(&str, u32)> = self.iter().collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Multiset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<(String, u32)>::deserialize(d)?;
        Ok(pairs.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    Singleton,
    Sequence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub id: String,
    pub degree: u32,
    pub kind: ClassKind,
    #[serde(default)]
    pub limits: Vec<Multiset>,
    #[serde(default)]
    pub in_every_tail: bool,
}

impl ClassSpec {
    pub fn singleton(id: impl Into<String>, degree: u32) -> Self {
        Self { id: id.into(), degree, kind: ClassKind::Singleton, limits: Vec::new(), in_every_tail: false }
    }

    pub fn sequence(id: impl Into<String>, degree: u32, limits: Vec<Multiset>) -> Self {
        Self { id: id.into(), degree, kind: ClassKind::Sequence, limits, in_every_tail: false }
    }

    pub fn flagged(mut self) -> Self {
        self.in_every_tail = true;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerPresentation {
    pub classes: Vec<ClassSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
}

/// Point of a presented tower: a nonempty multiset of classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerPoint {
    pub content: Multiset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Diagnostic {
    DuplicateId { class: String },
    ZeroDegree { class: String },
    KindViolation { class: String },
    EmptyLimit { class: String, limit: usize },
    UnknownClass { class: String, reference: String },
    DegreeMismatch { class: String, limit: usize, expected: u32, found: u32 },
    UnknownTheta { theta: String },
    ThetaDegree { theta: String, degree: u32 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicateId { class } => write!(f, "{class}: duplicate id"),
            Diagnostic::ZeroDegree { class } => write!(f, "{class}: degree must be positive"),
            Diagnostic::KindViolation { class } => write!(f, "{class}: singleton class declares limits"),
            Diagnostic::EmptyLimit { class, limit } => write!(f, "{class}: limit {limit} is empty"),
            Diagnostic::UnknownClass { class, reference } => {
                write!(f, "{class}: limit refers to unknown class {reference}")
            }
            Diagnostic::DegreeMismatch { class, limit, expected, found } => {
                write!(f, "{class}: limit {limit} has total degree {found}, expected {expected}")
            }
            Diagnostic::UnknownTheta { theta } => write!(f, "theta {theta} is not a class"),
            Diagnostic::ThetaDegree { theta, degree } => write!(f, "theta {theta} has degree {degree}, expected 1"),
        }
    }
}

/// Index of a tail subtower `T[N]`. Serialized as the integer or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TailIndex {
    Finite(u32),
    Infinity,
}

impl Serialize for TailIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TailIndex::Finite(n) => s.serialize_u32(*n),
            TailIndex::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for TailIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u32),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(TailIndex::Finite(n)),
            Raw::S(s) if s == "inf" => Ok(TailIndex::Infinity),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad tail index {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Regular,
    Singular,
    NotSolid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub vanishing_classes: BTreeSet<String>,
    pub height: u32,
    /// Some class persists in every tail, so the presented tower stands for
    /// one of unbounded height.
    pub unbounded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosednessViolation {
    pub n: u32,
    pub class: String,
    /// `None` when the class itself is theta.
    pub limit: Option<Multiset>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosednessReport {
    pub closed: bool,
    pub violations: Vec<ClosednessViolation>,
    /// Tails are examined for `N = 1 ..= evaluated_up_to`; beyond that the
    /// `in_every_tail` flags stand in for the missing classes.
    pub evaluated_up_to: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub height: u32,
    pub core_size: usize,
    pub tails: Vec<(u32, BTreeSet<String>)>,
    pub vanishing_classes: BTreeSet<String>,
    pub classification: Classification,
    pub solid_witnesses: Vec<(u32, Option<u32>)>,
    pub warnings: Vec<String>,
}

impl TowerPresentation {
    pub fn new(classes: Vec<ClassSpec>, theta: Option<String>) -> Self {
        Self { classes, theta }
    }

    pub fn class(&self, id: &str) -> Option<&ClassSpec> {
        self.classes.iter().find(|c| c.id == id)
    }

    fn require(&self, id: &str) -> Result<&ClassSpec> {
        self.class(id).ok_or_else(|| Error::NotFound(format!("class {id}")))
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.classes.iter().map(|c| c.id.clone()).collect()
    }

    /// Total degree of a multiset; unknown ids are an error.
    pub fn multiset_degree(&self, m: &Multiset) -> Result<u32> {
        m.iter().map(|(id, n)| Ok(self.require(id)?.degree * n)).sum()
    }

    pub fn point_degree(&self, p: &TowerPoint) -> Result<u32> {
        self.multiset_degree(&p.content)
    }

    /// Every violated structural invariant, in class order.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for c in &self.classes {
            if !seen.insert(c.id.as_str()) {
                out.push(Diagnostic::DuplicateId { class: c.id.clone() });
            }
        }
        for c in &self.classes {
            if c.degree == 0 {
                out.push(Diagnostic::ZeroDegree { class: c.id.clone() });
            }
            if c.kind == ClassKind::Singleton && !c.limits.is_empty() {
                out.push(Diagnostic::KindViolation { class: c.id.clone() });
            }
            for (k, m) in c.limits.iter().enumerate() {
                if m.is_empty() {
                    out.push(Diagnostic::EmptyLimit { class: c.id.clone(), limit: k });
                    continue;
                }
                let mut unknown = false;
                for id in m.support() {
                    if self.class(id).is_none() {
                        unknown = true;
                        out.push(Diagnostic::UnknownClass { class: c.id.clone(), reference: id.to_string() });
                    }
                }
                if !unknown {
                    let found = self.multiset_degree(m).expect("ids checked above");
                    if found != c.degree {
                        out.push(Diagnostic::DegreeMismatch {
                            class: c.id.clone(),
                            limit: k,
                            expected: c.degree,
                            found,
                        });
                    }
                }
            }
        }
        if let Some(theta) = &self.theta {
            match self.class(theta) {
                None => out.push(Diagnostic::UnknownTheta { theta: theta.clone() }),
                Some(c) if c.degree != 1 => {
                    out.push(Diagnostic::ThetaDegree { theta: theta.clone(), degree: c.degree })
                }
                Some(_) => {}
            }
        }
        out
    }

    /// Largest class degree.
    pub fn height(&self) -> Result<u32> {
        self.classes.iter().map(|c| c.degree).max().ok_or(Error::EmptyTower)
    }

    /// Least superset of `seed` closed under taking constituents of limits.
    pub fn generated_subtower(&self, seed: &BTreeSet<String>) -> Result<BTreeSet<String>> {
        let mut closed = BTreeSet::new();
        let mut stack: Vec<String> = Vec::new();
        for id in seed {
            self.require(id)?;
            stack.push(id.clone());
        }
        while let Some(id) = stack.pop() {
            if !closed.insert(id.clone()) {
                continue;
            }
            let class = self.require(&id)?;
            for m in &class.limits {
                for constituent in m.support() {
                    self.require(constituent)?;
                    if !closed.contains(constituent) {
                        stack.push(constituent.to_string());
                    }
                }
            }
        }
        Ok(closed)
    }

    /// Classes reached from `seed` by limit edges alone (seed excluded unless
    /// re-entered through an edge).
    fn edge_reachable(&self, seed: &BTreeSet<String>) -> BTreeSet<String> {
        let mut reached = BTreeSet::new();
        let mut stack: Vec<&str> = Vec::new();
        for id in seed {
            if let Some(c) = self.class(id) {
                stack.extend(c.limits.iter().flat_map(|m| m.support()));
            }
        }
        while let Some(id) = stack.pop() {
            if reached.insert(id.to_string()) {
                if let Some(c) = self.class(id) {
                    stack.extend(c.limits.iter().flat_map(|m| m.support()));
                }
            }
        }
        reached
    }

    fn tail_seed(&self, n: TailIndex) -> BTreeSet<String> {
        self.classes
            .iter()
            .filter(|c| c.in_every_tail || matches!(n, TailIndex::Finite(k) if c.degree >= k))
            .map(|c| c.id.clone())
            .collect()
    }

    /// `T[N]` as a class set.
    pub fn tail_subtower(&self, n: TailIndex) -> Result<BTreeSet<String>> {
        self.generated_subtower(&self.tail_seed(n))
    }

    /// Classes of the vanishing tower `T[∞]`.
    pub fn vanishing_classes(&self) -> Result<BTreeSet<String>> {
        self.tail_subtower(TailIndex::Infinity)
    }

    pub fn classify(&self) -> Result<Classification> {
        let height = self.height()?;
        let vanishing = self.vanishing_classes()?;
        let has_degree_one = self.classes.iter().any(|c| c.degree == 1);
        let verdict = if vanishing.is_empty() && has_degree_one {
            Verdict::Regular
        } else if vanishing.len() == 1 && self.require(vanishing.iter().next().unwrap())?.degree == 1 {
            Verdict::Singular
        } else {
            Verdict::NotSolid
        };
        Ok(Classification {
            verdict,
            vanishing_classes: vanishing,
            height,
            unbounded: self.classes.iter().any(|c| c.in_every_tail),
        })
    }

    /// For each `N ≤ height`, the least `n ≤ height + 1` with every class of
    /// `T[n]` of degree above `N`, so `T[n]` has no point of degree `≤ N`.
    pub fn prop_solid_check(&self) -> Result<Vec<(u32, Option<u32>)>> {
        let height = self.height()?;
        let min_degrees = (1..=height + 1)
            .map(|n| {
                let tail = self.tail_subtower(TailIndex::Finite(n))?;
                Ok(tail.iter().map(|id| self.class(id).unwrap().degree).min())
            })
            .collect::<Result<Vec<Option<u32>>>>()?;
        Ok((1..=height)
            .map(|big_n| {
                let witness = (1..=height + 1).find(|&n| match min_degrees[(n - 1) as usize] {
                    None => true,
                    Some(d) => d > big_n,
                });
                (big_n, witness)
            })
            .collect())
    }

    /// Closedness criterion: for every `N`, no class outside `T[N]` is theta
    /// and none of their limits involves theta.
    pub fn closedness_test(&self) -> Result<ClosednessReport> {
        let theta = self.theta.as_deref().ok_or(Error::ThetaRequired)?;
        self.require(theta)?;
        let upto = self.height()? + 1;
        let mut violations = Vec::new();
        for n in 1..=upto {
            let tail = self.tail_subtower(TailIndex::Finite(n))?;
            for c in self.classes.iter().filter(|c| !tail.contains(&c.id)) {
                if c.id == theta {
                    violations.push(ClosednessViolation { n, class: c.id.clone(), limit: None });
                }
                for m in c.limits.iter().filter(|m| m.contains(theta)) {
                    violations.push(ClosednessViolation { n, class: c.id.clone(), limit: Some(m.clone()) });
                }
            }
        }
        Ok(ClosednessReport { closed: violations.is_empty(), violations, evaluated_up_to: upto })
    }

    /// A flagged class should also be reachable through limit edges from the
    /// degree-`≥ N` classes for every `N ≤ height`; otherwise the flag is the
    /// only thing keeping it in the tails.
    pub fn flag_warnings(&self) -> Result<Vec<String>> {
        let height = self.height()?;
        let mut out = Vec::new();
        for c in self.classes.iter().filter(|c| c.in_every_tail) {
            let missing: Vec<u32> = (1..=height)
                .filter(|&n| {
                    let seed: BTreeSet<String> =
                        self.classes.iter().filter(|d| d.degree >= n).map(|d| d.id.clone()).collect();
                    let mut reach = self.edge_reachable(&seed);
                    if c.degree >= n {
                        reach.insert(c.id.clone());
                    }
                    !reach.contains(&c.id)
                })
                .collect();
            if !missing.is_empty() {
                out.push(format!(
                    "flagged class {} is not edge-reachable in T[N] for N in {:?}; its persistence rests on the flag",
                    c.id, missing
                ));
            }
        }
        Ok(out)
    }

    /// A point lies in the subtower over `classes` iff all of its
    /// constituents do.
    pub fn point_in(&self, classes: &BTreeSet<String>, p: &TowerPoint) -> bool {
        !p.content.is_empty() && p.content.support().all(|id| classes.contains(id))
    }

    pub fn analyze(&self) -> Result<Analysis> {
        let height = self.height()?;
        let tails =
            (1..=height + 1).map(|n| Ok((n, self.tail_subtower(TailIndex::Finite(n))?))).collect::<Result<Vec<_>>>()?;
        Ok(Analysis {
            height,
            core_size: self.classes.len(),
            tails,
            vanishing_classes: self.vanishing_classes()?,
            classification: self.classify()?,
            solid_witnesses: self.prop_solid_check()?,
            warnings: self.flag_warnings()?,
        })
    }
}

pub const MAX_BUILDER_DEGREE: u32 = 12;

fn check_builder(max_degree: u32, depth: u32) -> Result<()> {
    if !(2..=MAX_BUILDER_DEGREE).contains(&max_degree) {
        return Err(Error::Unsupported(format!("max degree must lie in 2..={MAX_BUILDER_DEGREE}, got {max_degree}")));
    }
    if depth == 0 {
        return Err(Error::Unsupported("depth must be at least 1".into()));
    }
    Ok(())
}

pub const THETA: &str = "theta";

fn ir_id(n: u32, s: u32) -> String {
    format!("ir({n},{s})")
}

/// Singly generated closed singular example.
///
/// Class `ir(n, s)` models the irreducible members of degree `n` with norm
/// about `2^-s`, `n < s ≤ n + scale_depth`. Its limits are the homogeneous
/// sums `(n/k) ⊙ ir(k, s')` with `k | n`, `1 < k < n` and `s' ≥ n`. The
/// multiples `n ⊙ theta` only arise as the norm tends to zero, which is the
/// part beyond the truncation; `theta` carries `in_every_tail` instead.
pub fn build_example_clo(max_degree: u32, scale_depth: u32) -> Result<TowerPresentation> {
    check_builder(max_degree, scale_depth)?;
    let mut classes = vec![ClassSpec::singleton(THETA, 1).flagged()];
    for n in 2..=max_degree {
        for s in n + 1..=n + scale_depth {
            let mut limits = Vec::new();
            for k in (2..n).filter(|k| n % k == 0) {
                for s2 in (k + 1..=k + scale_depth).filter(|&s2| s2 >= n) {
                    limits.push(Multiset::single(ir_id(k, s2), n / k));
                }
            }
            classes.push(ClassSpec::sequence(ir_id(n, s), n, limits));
        }
    }
    Ok(TowerPresentation::new(classes, Some(THETA.into())))
}

fn z_id(n: u32, k: u32) -> String {
    format!("z({n},{k})")
}

/// Nonclosed singular example: classes `z(n, k)` for the scaled irreducibles
/// `2^-k (U . X_n)`, each collapsing to `n ⊙ theta` as `k → ∞`.
pub fn build_non_one(max_degree: u32, k_depth: u32) -> Result<TowerPresentation> {
    check_builder(max_degree, k_depth)?;
    let mut classes = vec![ClassSpec::singleton(THETA, 1).flagged()];
    for n in 2..=max_degree {
        for k in n + 1..=n + k_depth {
            classes.push(ClassSpec::sequence(z_id(n, k), n, vec![Multiset::single(THETA, n)]));
        }
    }
    Ok(TowerPresentation::new(classes, Some(THETA.into())))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MorphismDiagnostic {
    /// Degree of the image differs from the degree of the class.
    DegreeNotPreserved { class: String, expected: u32, found: u32 },
    /// The image of a limit cannot be reached from the image of its class.
    LimitNotReached { class: String, limit: Multiset, image: Multiset, target: Multiset },
}

/// Choose, for each copy of each constituent of `source`, either the
/// constituent itself or one of its limits, so that the pieces add up to
/// `target`.
fn reachable(dst: &TowerPresentation, source: &[(String, u32)], target: &Multiset) -> bool {
    let Some(((id, count), rest)) = source.split_first() else {
        return target.is_empty();
    };
    let mut options = vec![Multiset::single(id.clone(), 1)];
    if let Some(c) = dst.class(id) {
        options.extend(c.limits.iter().cloned());
    }
    distribute(dst, &options, 0, *count, target, rest)
}

fn distribute(
    dst: &TowerPresentation,
    options: &[Multiset],
    from: usize,
    remaining: u32,
    target: &Multiset,
    rest: &[(String, u32)],
) -> bool {
    if remaining == 0 {
        return reachable(dst, rest, target);
    }
    (from..options.len()).any(|k| {
        target.checked_sub(&options[k]).is_some_and(|left| distribute(dst, options, k, remaining - 1, &left, rest))
    })
}

/// Checks degree preservation and the limit-reachability continuity
/// condition for a map from classes of `src` to points of `dst`.
pub fn validate_morphism(
    src: &TowerPresentation,
    dst: &TowerPresentation,
    map: &BTreeMap<String, TowerPoint>,
) -> Result<Vec<MorphismDiagnostic>> {
    for id in map.keys() {
        src.require(id)?;
    }
    let mut out = Vec::new();
    for c in &src.classes {
        let image = map.get(&c.id).ok_or_else(|| Error::NotFound(format!("no image for class {}", c.id)))?;
        let found = dst.point_degree(image)?;
        if found != c.degree {
            out.push(MorphismDiagnostic::DegreeNotPreserved { class: c.id.clone(), expected: c.degree, found });
        }
    }
    for c in &src.classes {
        let image = &map[&c.id].content;
        for limit in &c.limits {
            let mut target = Multiset::new();
            for (id, n) in limit.iter() {
                let part = &map.get(id).ok_or_else(|| Error::NotFound(format!("class {id}")))?.content;
                for _ in 0..n {
                    target = target.union(part);
                }
            }
            let source: Vec<(String, u32)> = image.iter().map(|(id, n)| (id.to_string(), n)).collect();
            if !reachable(dst, &source, &target) {
                out.push(MorphismDiagnostic::LimitNotReached {
                    class: c.id.clone(),
                    limit: limit.clone(),
                    image: image.clone(),
                    target,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn ms(pairs: &[(&str, u32)]) -> Multiset {
        pairs.iter().map(|&(id, n)| (id.to_string(), n)).collect()
    }

    /// t(1), b(2) ⇝ 2t, c(3), e(4) ⇝ c + t.
    fn chain() -> TowerPresentation {
        TowerPresentation::new(
            vec![
                ClassSpec::singleton("t", 1),
                ClassSpec::sequence("b", 2, vec![ms(&[("t", 2)])]),
                ClassSpec::singleton("c", 3),
                ClassSpec::sequence("e", 4, vec![ms(&[("c", 1), ("t", 1)])]),
            ],
            Some("t".into()),
        )
    }

    #[test]
    fn validation_examples() {
        let single = TowerPresentation::new(vec![ClassSpec::singleton("a", 1)], None);
        assert!(single.validate().is_empty());

        let mismatch = TowerPresentation::new(
            vec![ClassSpec::singleton("a", 1), ClassSpec::sequence("x", 3, vec![ms(&[("a", 2)])])],
            None,
        );
        assert_eq!(
            mismatch.validate(),
            vec![Diagnostic::DegreeMismatch { class: "x".into(), limit: 0, expected: 3, found: 2 }]
        );

        let mut kind = ClassSpec::singleton("s", 2);
        kind.limits.push(ms(&[("a", 2)]));
        let bad = TowerPresentation::new(vec![ClassSpec::singleton("a", 1), kind], None);
        assert_eq!(bad.validate(), vec![Diagnostic::KindViolation { class: "s".into() }]);

        let theta = TowerPresentation::new(vec![ClassSpec::singleton("a", 2)], Some("a".into()));
        assert_eq!(theta.validate(), vec![Diagnostic::ThetaDegree { theta: "a".into(), degree: 2 }]);
    }

    #[test]
    fn height_examples() {
        let p = TowerPresentation::new(
            vec![ClassSpec::singleton("a", 1), ClassSpec::singleton("b", 2), ClassSpec::singleton("c", 3)],
            None,
        );
        assert_eq!(p.height().unwrap(), 3);
        let theta_only = TowerPresentation::new(vec![ClassSpec::singleton("theta", 1)], Some("theta".into()));
        assert_eq!(theta_only.height().unwrap(), 1);
        assert_eq!(build_example_clo(6, 2).unwrap().height().unwrap(), 6);
        assert!(matches!(TowerPresentation::default().height(), Err(Error::EmptyTower)));
    }

    #[test]
    fn generated_subtower_examples() {
        let p = TowerPresentation::new(
            vec![
                ClassSpec::singleton("theta", 1),
                ClassSpec::sequence("b", 2, vec![ms(&[("theta", 2)])]),
                ClassSpec::sequence("a", 4, vec![ms(&[("b", 2)])]),
            ],
            Some("theta".into()),
        );
        assert_eq!(p.generated_subtower(&p.ids()).unwrap(), p.ids());
        assert_eq!(p.generated_subtower(&set(&["a"])).unwrap(), set(&["a", "b", "theta"]));
        assert_eq!(p.generated_subtower(&set(&["theta"])).unwrap(), set(&["theta"]));
        assert!(matches!(p.generated_subtower(&set(&["zz"])), Err(Error::NotFound(_))));
    }

    #[test]
    fn chain_tails_match_hand_fixpoints() {
        let p = chain();
        assert!(p.validate().is_empty());
        let all = set(&["b", "c", "e", "t"]);
        assert_eq!(p.tail_subtower(TailIndex::Finite(1)).unwrap(), all);
        assert_eq!(p.tail_subtower(TailIndex::Finite(2)).unwrap(), all);
        assert_eq!(p.tail_subtower(TailIndex::Finite(3)).unwrap(), set(&["c", "e", "t"]));
        assert_eq!(p.tail_subtower(TailIndex::Finite(4)).unwrap(), set(&["c", "e", "t"]));
        assert_eq!(p.tail_subtower(TailIndex::Finite(5)).unwrap(), set(&[]));
        assert!(p.vanishing_classes().unwrap().is_empty());
        assert_eq!(p.classify().unwrap().verdict, Verdict::Regular);
    }

    #[test]
    fn non_one_tails_follow_degree_cut() {
        let p = build_non_one(6, 2).unwrap();
        assert!(p.validate().is_empty());
        for n in 1..=7 {
            let mut expected: BTreeSet<String> =
                p.classes.iter().filter(|c| c.degree >= n && c.id != THETA).map(|c| c.id.clone()).collect();
            expected.insert(THETA.into());
            assert_eq!(p.tail_subtower(TailIndex::Finite(n)).unwrap(), expected);
        }
        assert_eq!(p.vanishing_classes().unwrap(), set(&[THETA]));
    }

    #[test]
    fn regular_presentation() {
        let mut classes = vec![ClassSpec::singleton("theta", 1)];
        classes.extend((2..=5).map(|n| ClassSpec::singleton(format!("a{n}"), n)));
        let p = TowerPresentation::new(classes, Some("theta".into()));
        let c = p.classify().unwrap();
        assert_eq!(c.verdict, Verdict::Regular);
        assert!(c.vanishing_classes.is_empty());
        assert!(!c.unbounded);
        let witnesses = p.prop_solid_check().unwrap();
        assert_eq!(witnesses, (1..=5).map(|n| (n, Some(n + 1))).collect::<Vec<_>>());
        assert!(p.tail_subtower(TailIndex::Finite(6)).unwrap().is_empty());
    }

    #[test]
    fn single_class_witness() {
        let p = TowerPresentation::new(vec![ClassSpec::singleton("a", 1)], None);
        assert_eq!(p.prop_solid_check().unwrap(), vec![(1, Some(2))]);
        assert!(matches!(p.closedness_test(), Err(Error::ThetaRequired)));
    }

    #[test]
    fn two_flagged_degree_one_classes_are_not_solid() {
        let p = TowerPresentation::new(
            vec![ClassSpec::singleton("a", 1).flagged(), ClassSpec::singleton("b", 1).flagged()],
            None,
        );
        let c = p.classify().unwrap();
        assert_eq!(c.verdict, Verdict::NotSolid);
        assert_eq!(c.vanishing_classes, set(&["a", "b"]));
    }

    #[test]
    fn example_clo_is_singular_and_closed() {
        let p = build_example_clo(6, 2).unwrap();
        assert!(p.validate().is_empty());
        let c = p.classify().unwrap();
        assert_eq!(c.verdict, Verdict::Singular);
        assert_eq!(c.vanishing_classes, set(&[THETA]));
        assert!(c.unbounded);
        let report = p.closedness_test().unwrap();
        assert!(report.closed, "{:?}", report.violations);
        assert_eq!(report.evaluated_up_to, 7);
        assert!(p.prop_solid_check().unwrap().iter().all(|(_, w)| w.is_none()));
        assert!(matches!(build_example_clo(13, 2), Err(Error::Unsupported(_))));
        assert!(matches!(build_example_clo(1, 2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn example_clo_tail_at_degree_four() {
        // Classes: theta, ir(2,3), ir(2,4), ir(3,4), ir(3,5), ir(4,5), ir(4,6);
        // only ir(4,·) has a limit, 2 ⊙ ir(2,4).
        let p = build_example_clo(4, 2).unwrap();
        assert_eq!(p.class("ir(4,5)").unwrap().limits, vec![ms(&[("ir(2,4)", 2)])]);
        assert_eq!(
            p.tail_subtower(TailIndex::Finite(3)).unwrap(),
            set(&["ir(2,4)", "ir(3,4)", "ir(3,5)", "ir(4,5)", "ir(4,6)", THETA])
        );
        assert_eq!(p.tail_subtower(TailIndex::Finite(5)).unwrap(), set(&[THETA]));
    }

    #[test]
    fn non_one_is_singular_and_not_closed() {
        let p = build_non_one(6, 2).unwrap();
        assert_eq!(p.classify().unwrap().verdict, Verdict::Singular);
        let report = p.closedness_test().unwrap();
        assert!(!report.closed);
        assert!(report.violations.iter().all(|v| v.limit.as_ref().is_some_and(|m| m.contains(THETA))));
        // z(2,k) leaves the tail at N = 3 and its limit 2 ⊙ theta is flagged.
        assert!(report.violations.iter().any(|v| v.n == 3 && v.class == "z(2,3)"));
        assert!(p.flag_warnings().unwrap().is_empty());
    }

    #[test]
    fn tails_are_monotone() {
        for p in [chain(), build_example_clo(6, 2).unwrap(), build_non_one(5, 3).unwrap()] {
            let h = p.height().unwrap();
            let vanishing = p.vanishing_classes().unwrap();
            for n in 1..=h + 1 {
                let now = p.tail_subtower(TailIndex::Finite(n)).unwrap();
                let next = p.tail_subtower(TailIndex::Finite(n + 1)).unwrap();
                assert!(next.is_subset(&now));
                assert!(vanishing.is_subset(&now));
            }
        }
    }

    #[test]
    fn flag_free_presentations_do_not_vanish() {
        let p = chain();
        assert!(p.vanishing_classes().unwrap().is_empty());
    }

    #[test]
    fn generated_subtower_is_a_closure_operator() {
        let p = build_example_clo(6, 2).unwrap();
        let ids: Vec<String> = p.ids().into_iter().collect();
        for (i, a) in ids.iter().enumerate() {
            let small = set(&[a]);
            let big: BTreeSet<String> = [a.clone(), ids[(i * 7 + 3) % ids.len()].clone()].into();
            let closed_small = p.generated_subtower(&small).unwrap();
            let closed_big = p.generated_subtower(&big).unwrap();
            assert!(small.is_subset(&closed_small));
            assert!(closed_small.is_subset(&closed_big));
            assert_eq!(p.generated_subtower(&closed_small).unwrap(), closed_small);
        }
    }

    #[test]
    fn semitower_law_on_points() {
        // theta, ir(2,3), ir(2,4), ir(3,4), ir(3,5)
        let p = build_example_clo(3, 2).unwrap();
        let ids: Vec<String> = p.ids().into_iter().collect();
        assert_eq!(ids.len(), 5);
        let mut points: Vec<Multiset> = Vec::new();
        for a in 0..5 {
            for b in a..=5 {
                for c in b..=5 {
                    let mut m = Multiset::single(ids[a].clone(), 1);
                    for k in [b, c].into_iter().filter(|&k| k < 5) {
                        m.add(ids[k].clone(), 1);
                    }
                    if !points.contains(&m) {
                        points.push(m);
                    }
                }
            }
        }
        for seed in &ids {
            let sub = p.generated_subtower(&set(&[seed])).unwrap();
            let inside = |m: &Multiset| p.point_in(&sub, &TowerPoint { content: m.clone() });
            for id in &ids {
                assert_eq!(inside(&Multiset::single(id.clone(), 1)), sub.contains(id));
            }
            for x in &points {
                for y in points.iter().filter(|y| x.size() + y.size() <= 3) {
                    assert_eq!(inside(&x.union(y)), inside(x) && inside(y));
                }
            }
        }
    }

    #[test]
    fn morphism_examples() {
        let p = chain();
        let identity: BTreeMap<String, TowerPoint> =
            p.ids().into_iter().map(|id| (id.clone(), TowerPoint { content: Multiset::single(id, 1) })).collect();
        assert!(validate_morphism(&p, &p, &identity).unwrap().is_empty());

        let mut broken = identity.clone();
        broken.insert("c".into(), TowerPoint { content: Multiset::single("b", 1) });
        let diags = validate_morphism(&p, &p, &broken).unwrap();
        assert!(diags.contains(&MorphismDiagnostic::DegreeNotPreserved { class: "c".into(), expected: 3, found: 2 }));

        let mut partial = identity.clone();
        partial.remove("c");
        assert!(matches!(validate_morphism(&p, &p, &partial), Err(Error::NotFound(_))));
    }

    #[test]
    fn collapse_morphism_reaches_limits() {
        // Source: theta and z ⇝ 2 theta. Target: theta' and w ⇝ 2 theta'.
        let src = TowerPresentation::new(
            vec![ClassSpec::singleton("theta", 1), ClassSpec::sequence("z", 2, vec![ms(&[("theta", 2)])])],
            Some("theta".into()),
        );
        let dst = TowerPresentation::new(
            vec![ClassSpec::singleton("t", 1), ClassSpec::sequence("w", 2, vec![ms(&[("t", 2)])])],
            Some("t".into()),
        );
        let theta_image = TowerPoint { content: ms(&[("t", 1)]) };
        let via_w: BTreeMap<String, TowerPoint> =
            [("theta".into(), theta_image.clone()), ("z".into(), TowerPoint { content: ms(&[("w", 1)]) })].into();
        assert!(validate_morphism(&src, &dst, &via_w).unwrap().is_empty());
        let collapse: BTreeMap<String, TowerPoint> =
            [("theta".into(), theta_image), ("z".into(), TowerPoint { content: ms(&[("t", 2)]) })].into();
        assert!(validate_morphism(&src, &dst, &collapse).unwrap().is_empty());

        // Reversed: w ⇝ 2t must be reached from z, which only collapses to 2 theta.
        let back: BTreeMap<String, TowerPoint> = [
            ("t".into(), TowerPoint { content: ms(&[("z", 1)]) }),
            ("w".into(), TowerPoint { content: ms(&[("z", 1)]) }),
        ]
        .into();
        let diags = validate_morphism(&dst, &src, &back).unwrap();
        assert!(diags.iter().any(|d| matches!(d, MorphismDiagnostic::LimitNotReached { class, .. } if class == "w")));
    }

    #[test]
    fn presentation_json_shape() {
        let p = chain();
        let json = serde_json::to_value(&p).unwrap();
        assert_eq!(json["classes"][1]["limits"], serde_json::json!([[["t", 2]]]));
        assert_eq!(json["classes"][1]["kind"], "sequence");
        assert_eq!(json["theta"], "t");
        let back: TowerPresentation = serde_json::from_value(json).unwrap();
        assert_eq!(back, p);
    }
}
