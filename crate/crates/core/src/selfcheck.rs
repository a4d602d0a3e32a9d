//! Seeded property suites over the whole library, plus the generators they
//! share (random irreducibles and composites with known structure).
//!
//! Every suite draws from its own stream forked off the master seed in a
//! fixed order, so reports are reproducible bit for bit.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::commutant;
use crate::decompose::{self, Factor};
use crate::error::{Error, Result};
use crate::funcalg::{self, SamplePoint, SampledTower, SeparationCase, TowerFunction};
use crate::io::{CompositeTruth, TupleFile};
use crate::linalg::{self, ComplexMatrix, Rng, Tolerances};
use crate::tower::{self, ClassSpec, Multiset, TailIndex, TowerPresentation, Verdict};
use crate::tuple::{tuple_distance, MatrixTuple};

/// Irreducible tuple with letters of operator norm about one.
pub fn random_irreducible(degree: usize, labels: usize, rng: &mut Rng, tol: &Tolerances) -> MatrixTuple {
    let scale = 0.5 / (degree as f64).sqrt();
    loop {
        let t = MatrixTuple::random(degree, labels, rng).scaled(scale);
        if commutant::is_irreducible(&t, tol) {
            return t;
        }
    }
}

/// Pairwise disjoint irreducibles of the given degrees.
pub fn disjoint_irreducibles(degrees: &[usize], labels: usize, rng: &mut Rng, tol: &Tolerances) -> Vec<MatrixTuple> {
    let mut out: Vec<MatrixTuple> = Vec::with_capacity(degrees.len());
    for &d in degrees {
        loop {
            let candidate = random_irreducible(d, labels, rng, tol);
            let clash = out.iter().any(|prev| {
                prev.degree() == d
                    && commutant::intertwiner_basis(prev, &candidate, tol).map_or(true, |hom| hom.dim() != 0)
            });
            if !clash {
                out.push(candidate);
                break;
            }
        }
    }
    out
}

/// `act(conjugator, ⊕_j α_j ⊙ A_j)` together with its construction.
#[derive(Debug, Clone)]
pub struct Composite {
    pub tuple: MatrixTuple,
    pub conjugator: ComplexMatrix,
    pub parts: Vec<Factor>,
}

impl Composite {
    pub fn new(parts: Vec<Factor>, rng: &mut Rng) -> Self {
        let blocks: Vec<MatrixTuple> = parts.iter().map(|f| f.irreducible.times(f.multiplicity)).collect();
        let normal = MatrixTuple::oplus_all(&blocks).expect("parts share a label count");
        let conjugator = linalg::haar_unitary(normal.degree(), rng);
        let tuple = normal.act_unchecked(&conjugator);
        Self { tuple, conjugator, parts }
    }

    pub fn signature(&self) -> Vec<(usize, usize)> {
        let mut sig: Vec<(usize, usize)> =
            self.parts.iter().map(|f| (f.irreducible.degree(), f.multiplicity)).collect();
        sig.sort_unstable();
        sig
    }
}

/// Up to three `(degree, multiplicity)` pairs of total degree at most `budget`.
pub fn random_signature(budget: usize, rng: &mut Rng) -> Vec<(usize, usize)> {
    let distinct = 1 + rng.below(3);
    let mut remaining = budget;
    let mut sig = Vec::new();
    for _ in 0..distinct {
        if remaining == 0 {
            break;
        }
        let degree = 1 + rng.below(remaining.min(4));
        let multiplicity = 1 + rng.below((remaining / degree).min(3));
        remaining -= degree * multiplicity;
        sig.push((degree, multiplicity));
    }
    sig
}

pub fn random_composite(budget: usize, labels: usize, rng: &mut Rng, tol: &Tolerances) -> Composite {
    let sig = random_signature(budget, rng);
    let degrees: Vec<usize> = sig.iter().map(|&(d, _)| d).collect();
    let irreducibles = disjoint_irreducibles(&degrees, labels, rng, tol);
    let parts = irreducibles
        .into_iter()
        .zip(&sig)
        .map(|(irreducible, &(_, multiplicity))| Factor { irreducible, multiplicity })
        .collect();
    Composite::new(parts, rng)
}

/// Composite tuple file with its ground truth, for feeding the CLI.
pub fn emit_composite(seed: u64, max_degree: usize, tol: &Tolerances) -> TupleFile {
    let mut rng = Rng::new(seed);
    let labels = 1 + rng.below(3);
    let composite = random_composite(max_degree.max(1), labels, &mut rng, tol);
    let truth = CompositeTruth { seed, signature: composite.signature() };
    let mut file = TupleFile::from_tuple(&composite.tuple);
    file.metadata = Some(serde_json::to_value(truth).expect("plain data serializes"));
    file
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfCheckConfig {
    pub seed: u64,
    /// Largest degree of any tuple a suite builds.
    pub max_degree: usize,
    /// Monte-Carlo sample count for the twirl suite.
    pub samples: usize,
    pub tolerances: Tolerances,
}

impl Default for SelfCheckConfig {
    fn default() -> Self {
        Self { seed: 0, max_degree: 12, samples: 2048, tolerances: Tolerances::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub status: SuiteStatus,
    pub cases: usize,
    pub failures: usize,
    /// First few failure descriptions, or the skip reason.
    pub messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

const KEPT_MESSAGES: usize = 5;

struct Tally {
    cases: usize,
    failures: usize,
    messages: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Self { cases: 0, failures: 0, messages: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.fail(what());
        }
    }

    fn fail(&mut self, message: String) {
        self.failures += 1;
        if self.messages.len() < KEPT_MESSAGES {
            self.messages.push(message);
        }
    }

    /// Records a case; a library error counts as a failure.
    fn run(&mut self, label: impl Fn() -> String, body: impl FnOnce() -> CaseResult) {
        self.cases += 1;
        if let Err(CaseFailure(why)) = body() {
            self.fail(format!("{}: {why}", label()));
        }
    }

    fn finish(self, name: &str) -> SuiteReport {
        SuiteReport {
            name: name.into(),
            status: if self.failures == 0 { SuiteStatus::Pass } else { SuiteStatus::Fail },
            cases: self.cases,
            failures: self.failures,
            messages: self.messages,
        }
    }
}

struct CaseFailure(String);

impl From<Error> for CaseFailure {
    fn from(e: Error) -> Self {
        Self(e.to_string())
    }
}

type CaseResult = std::result::Result<(), CaseFailure>;

fn ensure(ok: bool, why: impl FnOnce() -> String) -> CaseResult {
    if ok {
        Ok(())
    } else {
        Err(CaseFailure(why()))
    }
}

type SuiteFn = fn(&SelfCheckConfig, &mut Rng) -> SuiteReport;

/// `(name, smallest max_degree it needs, body)`, in report order.
pub const SUITES: [(&str, usize, SuiteFn); 8] = [
    ("1-decomposition", 2, suite_decomposition),
    ("2-commutant-dimension", 2, suite_commutant),
    ("3-cancellation", 2, suite_cancellation),
    ("4-disjointness", 2, suite_disjointness),
    ("5-twirl", 2, suite_twirl),
    ("6-function-algebra", 6, suite_function_algebra),
    ("7-generation", 2, suite_generation),
    ("8-tower-oracles", 6, suite_towers),
];

pub fn run(config: &SelfCheckConfig) -> SelfCheckReport {
    run_selected(config, |_| true)
}

/// Runs the suites whose names pass `filter`. Streams are forked for every
/// suite regardless, so a suite's result does not depend on the selection.
pub fn run_selected(config: &SelfCheckConfig, filter: impl Fn(&str) -> bool) -> SelfCheckReport {
    let mut master = Rng::new(config.seed);
    let mut suites = Vec::new();
    for (name, min_degree, body) in SUITES {
        let mut rng = master.fork();
        if !filter(name) {
            continue;
        }
        if config.max_degree < min_degree {
            suites.push(SuiteReport {
                name: name.into(),
                status: SuiteStatus::Skipped,
                cases: 0,
                failures: 0,
                messages: vec![format!("needs max degree {min_degree}")],
            });
            continue;
        }
        suites.push(body(config, &mut rng));
    }
    let passed = suites.iter().all(|s| s.status != SuiteStatus::Fail);
    SelfCheckReport { passed, suites }
}

fn recon_bound(x: &MatrixTuple) -> f64 {
    1e-8 * (1.0 + x.norm())
}

fn suite_decomposition(config: &SelfCheckConfig, rng: &mut Rng) -> SuiteReport {
    let tol = &config.tolerances;
    let budget = config.max_degree.min(12);
    let mut tally = Tally::new();
    for case in 0..200 {
        let labels = 1 + rng.below(3);
        let composite = random_composite(budget, labels, rng, tol);
        let mut stream_a = rng.fork();
        let mut stream_b = rng.fork();
        tally.run(
            || format!("case {case} {:?}", composite.signature()),
            || {
                let x = &composite.tuple;
                let dec = decompose::decompose(x, &mut stream_a, tol)?;
                ensure(dec.signature() == composite.signature(), || format!("recovered {:?}", dec.signature()))?;
                let residual = dec.reconstruction_residual(x)?;
                ensure(residual < recon_bound(x), || format!("residual {residual:.3e}"))?;
                let mut unmatched: Vec<&Factor> = composite.parts.iter().collect();
                for f in dec.factors() {
                    let mut hit = None;
                    for (k, built) in unmatched.iter().enumerate() {
                        if built.multiplicity == f.multiplicity
                            && decompose::are_equivalent(&f.irreducible, &built.irreducible, tol)?.equivalent
                        {
                            hit = Some(k);
                            break;
                        }
                    }
                    match hit {
                        Some(k) => {
                            unmatched.remove(k);
                        }
                        None => return Err(CaseFailure("a recovered factor matches no constructed one".into())),
                    }
                }
                let again = decompose::decompose(x, &mut stream_b, tol)?;
                ensure(again.signature() == dec.signature(), || format!("second stream gave {:?}", again.signature()))
            },
        );
    }
    tally.finish("1-decomposition")
}

fn suite_commutant(config: &SelfCheckConfig, rng: &mut Rng) -> SuiteReport {
    let tol = &config.tolerances;
    let budget = config.max_degree.min(12);
    let mut tally = Tally::new();
    for case in 0..100 {
        let labels = 1 + rng.below(3);
        let composite = random_composite(budget, labels, rng, tol);
        let mut stream = rng.fork();
        tally.run(
            || format!("case {case} {:?}", composite.signature()),
            || {
                let x = &composite.tuple;
                let expected: usize = composite.parts.iter().map(|f| f.multiplicity * f.multiplicity).sum();
                let dim = commutant::commutant_basis(x, tol).dim();
                ensure(dim == expected, || format!("commutant dimension {dim}, expected {expected}"))?;
                let dec = decompose::decompose(x, &mut stream, tol)?;
                let stab = commutant::stabilizer_structure(x, &dec, tol)?;
                for _ in 0..20 {
                    let s = stab.sample(&mut stream);
                    let residual = tuple_distance(&x.act(&s, tol)?, x)?;
                    ensure(residual < 1e-8, || format!("stabilizer sample moves X by {residual:.3e}"))?;
                }
                Ok(())
            },
        );
    }
    tally.finish("2-commutant-dimension")
}

/// `act(V, ⊕ parts in a shuffled order)`: equivalent to the composite.
fn reshuffled(composite: &Composite, rng: &mut Rng) -> MatrixTuple {
    let mut order: Vec<usize> = (0..composite.parts.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.below(i + 1));
    }
    let parts = order.iter().map(|&k| composite.parts[k].clone()).collect();
    Composite::new(parts, rng).tuple
}

fn suite_cancellation(config: &SelfCheckConfig, rng: &mut Rng) -> SuiteReport {
    let tol = &config.tolerances;
    let cap = config.max_degree.min(12);
    let mut tally = Tally::new();
    for case in 0..50 {
        let labels = 1 + rng.below(3);
        let x = random_composite((cap / 2).max(1), labels, rng, tol);
        let z = random_composite(cap - x.tuple.degree(), labels, rng, tol);
        let y = reshuffled(&x, rng);
        let moved = conjugated(&z.tuple.oplus(&y).expect("same labels"), rng);
        tally.run(
            || format!("triple {case}"),
            || {
                let zx = z.tuple.oplus(&x.tuple)?;
                ensure(decompose::are_equivalent(&zx, &moved, tol)?.equivalent, || {
                    "Z+X and Z+Y not equivalent".into()
                })?;
                let eq = decompose::are_equivalent(&x.tuple, &y, tol)?;
                ensure(eq.equivalent, || "X and Y reported inequivalent".into())?;
                let w = eq.witness.expect("equivalent comes with a witness");
                let defect = linalg::unitarity_defect(&w);
                ensure(defect < 1e-9, || format!("witness unitarity defect {defect:.3e}"))?;
                let residual = tuple_distance(&x.tuple.act(&w, tol)?, &y)?;
                ensure(residual < recon_bound(&x.tuple), || format!("witness residual {residual:.3e}"))
            },
        );
    }
    for case in 0..50 {
        let labels = 1 + rng.below(3);
        let sig = random_signature((cap / 2).max(1), rng);
        let mut degrees: Vec<usize> = sig.iter().map(|&(d, _)| d).collect();
        degrees.extend(sig.iter().map(|&(d, _)| d));
        let pool = disjoint_irreducibles(&degrees, labels, rng, tol);
        let half = sig.len();
        let build = |offset: usize, rng: &mut Rng| {
            let parts = sig
                .iter()
                .enumerate()
                .map(|(k, &(_, m))| Factor { irreducible: pool[offset + k].clone(), multiplicity: m })
                .collect();
            Composite::new(parts, rng).tuple
        };
        let x = build(0, rng);
        let y = build(half, rng);
        let z = random_composite(cap - x.degree(), labels, rng, tol);
        tally.run(
            || format!("control {case}"),
            || {
                ensure(decompose::are_disjoint(&x, &y, tol)?, || "control pair not disjoint".into())?;
                ensure(!decompose::are_equivalent(&x, &y, tol)?.equivalent, || "X and Y reported equivalent".into())?;
                let zx = z.tuple.oplus(&x)?;
                let zy = z.tuple.oplus(&y)?;
                ensure(!decompose::are_equivalent(&zx, &zy, tol)?.equivalent, || {
                    "Z+X and Z+Y reported equivalent".into()
                })
            },
        );
    }
    tally.finish("3-cancellation")
}

fn conjugated(x: &MatrixTuple, rng: &mut Rng) -> MatrixTuple {
    x.act_unchecked(&linalg::haar_unitary(x.degree(), rng))
}

fn sum_of(parts: &[MatrixTuple], rng: &mut Rng) -> MatrixTuple {
    conjugated(&MatrixTuple::oplus_all(parts).expect("same labels"), rng)
}

fn suite_disjointness(config: &SelfCheckConfig, rng: &mut Rng) -> SuiteReport {
    let tol = &config.tolerances;
    let cap = config.max_degree.min(12);
    let pool_degrees: Vec<usize> = if cap >= 6 { vec![1, 2, 1, 2] } else { vec![1; 4] };
    let mut tally = Tally::new();

    // Z ⊥ X and Z ⊥ Y imply Z ⊥ X ⊕ Y.
    for case in 0..100 {
        let labels = 1 + rng.below(3);
        let pool = disjoint_irreducibles(&pool_degrees, labels, rng, tol);
        let z = conjugated(&pool[0], rng);
        // X and Y come from the rest of the pool, except that every other
        // instance lets Y share Z's class to exercise the other direction.
        let x = conjugated(&pool[1 + rng.below(3)], rng);
        let shared = case % 2 == 1;
        let y = if shared { conjugated(&pool[0], rng) } else { conjugated(&pool[1 + rng.below(3)], rng) };
        tally.run(
            || format!("additivity {case}"),
            || {
                let zx = decompose::are_disjoint(&z, &x, tol)?;
                let zy = decompose::are_disjoint(&z, &y, tol)?;
                let whole = decompose::are_disjoint(&z, &x.oplus(&y)?, tol)?;
                ensure(zx && zy != shared, || format!("pair verdicts {zx} {zy} contradict construction"))?;
                ensure(whole == (zx && zy), || format!("Z vs X+Y gave {whole}, pairs gave {zx} {zy}"))
            },
        );
    }

    // ⊕T_j ⊥ ⊕S_k iff every T_j ⊥ S_k.
    let max_factors = (cap / pool_degrees.iter().max().unwrap()).clamp(1, 3);
    for case in 0..100 {
        let labels = 1 + rng.below(3);
        let pool = disjoint_irreducibles(&pool_degrees, labels, rng, tol);
        let pick = |rng: &mut Rng| -> Vec<MatrixTuple> {
            let n = 1 + rng.below(max_factors);
            (0..n).map(|_| conjugated(&pool[rng.below(pool.len())], rng)).collect()
        };
        let ts = pick(rng);
        let ss = pick(rng);
        let t = sum_of(&ts, rng);
        let s = sum_of(&ss, rng);
        tally.run(
            || format!("factorwise {case}"),
            || {
                let mut pairwise = true;
                for a in &ts {
                    for b in &ss {
                        pairwise &= decompose::are_disjoint(a, b, tol)?;
                    }
                }
                let whole = decompose::are_disjoint(&t, &s, tol)?;
                ensure(whole == pairwise, || format!("sums gave {whole}, factors gave {pairwise}"))
            },
        );
    }
    tally.finish("4-disjointness")
}

/// `c0 I + Σ c_l X_l + Σ c'_l X_l X_l*`, an element of the algebra generated
/// by the letters.
fn letter_polynomial(x: &MatrixTuple, coeffs: &[Complex64]) -> ComplexMatrix {
    let d = x.degree();
    let mut out = linalg::identity(d) * coeffs[0];
    for (l, a) in x.letters().iter().enumerate() {
        out += a * coeffs[1 + 2 * l];
        out += a * a.adjoint() * coeffs[2 + 2 * l];
    }
    out
}

fn suite_twirl(config: &SelfCheckConfig, rng: &mut Rng) -> SuiteReport {
    let tol = &config.tolerances;
    let cap = config.max_degree.min(6);
    let mut tally = Tally::new();
    for case in 0..20 {
        let labels = 1 + rng.below(2);
        let composite = random_composite(cap, labels, rng, tol);
        let x = composite.tuple.clone();
        let d = x.degree();
        let coeffs: Vec<Complex64> = (0..1 + 2 * labels).map(|_| rng.complex_normal()).collect();
        let c = {
            let g = rng.ginibre(d, d);
            let n = linalg::op_norm(&g);
            g / Complex64::new(n, 0.0)
        };
        let mut streams: Vec<Rng> = (0..4).map(|_| rng.fork()).collect();
        tally.run(
            || format!("case {case} {:?}", composite.signature()),
            || {
                let dec = decompose::decompose(&x, &mut streams[0], tol)?;
                let stab = commutant::stabilizer_structure(&x, &dec, tol)?;
                let target = letter_polynomial(&x, &coeffs);
                let equivariant = |u: &ComplexMatrix| letter_polynomial(&x.act_unchecked(u), &coeffs);
                for k in [1, 7, 64] {
                    let out = funcalg::twirl(&x, equivariant, k, &mut streams[1], &stab)?;
                    let err = linalg::op_norm(&(out - &target));
                    ensure(err < 1e-10, || format!("equivariant input moved by {err:.3e} at K={k}"))?;
                }
                let arbitrary = |u: &ComplexMatrix| &c + letter_polynomial(&x.act_unchecked(u), &coeffs);
                let first = funcalg::twirl(&x, arbitrary, config.samples, &mut streams[2], &stab)?;
                let second = funcalg::twirl(&x, arbitrary, config.samples, &mut streams[3], &stab)?;
                let spread = linalg::op_norm(&(&first - &second));
                ensure(spread < 0.1, || format!("independent runs differ by {spread:.3e}"))?;
                for _ in 0..20 {
                    let s = stab.sample(&mut streams[0]);
                    let moved = linalg::conjugate(&s, &first);
                    let residual = linalg::op_norm(&(moved - &first));
                    ensure(residual < 1e-10, || format!("output not stabilizer invariant: {residual:.3e}"))?;
                }
                Ok(())
            },
        );
    }
    tally.finish("5-twirl")
}

fn point(id: String, conjugator: ComplexMatrix, content: Vec<usize>) -> SamplePoint {
    SamplePoint { id, conjugator, content }
}

/// Registry of degrees 1, 2, 2 with every class sampled on its own, plus a
/// few random composite points.
fn random_sampled_tower(rng: &mut Rng, tol: &Tolerances) -> Result<SampledTower> {
    let labels = 1 + rng.below(2);
    let registry = disjoint_irreducibles(&[1, 2, 2], labels, rng, tol);
    let degrees: Vec<usize> = registry.iter().map(MatrixTuple::degree).collect();
    let mut points: Vec<SamplePoint> =
        (0..3).map(|r| point(format!("r{r}"), linalg::haar_unitary(degrees[r], rng), vec![r])).collect();
    for k in 0..3 {
        let n = 1 + rng.below(3);
        let content: Vec<usize> = (0..n).map(|_| rng.below(3)).collect();
        let d = content.iter().map(|&r| degrees[r]).sum();
        points.push(point(format!("p{k}"), linalg::haar_unitary(d, rng), content));
    }
    SampledTower::new(registry, points, tol)
}

fn random_function(tower: &SampledTower, rng: &mut Rng) -> Result<TowerFunction> {
    TowerFunction::from_fn(tower, |_, r| rng.ginibre(r.degree(), r.degree()))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for at in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(at, n - 1);
            out.push(p);
        }
    }
    out
}

fn suite_function_algebra(config: &SelfCheckConfig, rng: &mut Rng) -> SuiteReport {
    let tol = &config.tolerances;
    let mut tally = Tally::new();

    for case in 0..50 {
        let mut stream = rng.fork();
        tally.run(
            || format!("norm {case}"),
            || {
                let tower = random_sampled_tower(&mut stream, tol)?;
                let f = random_function(&tower, &mut stream)?;
                let (a, b) = (funcalg::sup_norm(&f), funcalg::sup_norm_over_points(&tower, &f)?);
                ensure((a - b).abs() < 1e-10, || format!("registry sup {a} vs point sup {b}"))
            },
        );
    }

    // Re-presenting a point with permuted content and the matching block
    // permutation leaves every value unchanged.
    let mut stream = rng.fork();
    let tower = random_sampled_tower(&mut stream, tol);
    match tower {
        Err(e) => tally.fail(format!("key tower: {e}")),
        Ok(mut tower) => {
            let degrees: Vec<usize> = tower.registry().iter().map(MatrixTuple::degree).collect();
            let mut contents: Vec<Vec<usize>> = Vec::new();
            for len in 1..=3u32 {
                for code in 0..3usize.pow(len) {
                    contents.push((0..len).map(|i| code / 3usize.pow(i) % 3).collect());
                }
            }
            let f = random_function(&tower, &mut stream).expect("registry is nonempty");
            for (c, content) in contents.iter().enumerate() {
                let sizes: Vec<usize> = content.iter().map(|&r| degrees[r]).collect();
                let u = linalg::haar_unitary(sizes.iter().sum(), &mut stream);
                let base = format!("k{c}");
                let pushed = tower.push_point(point(base.clone(), u.clone(), content.clone()), tol);
                if let Err(e) = pushed {
                    tally.fail(format!("{base}: {e}"));
                    continue;
                }
                for (k, order) in permutations(content.len()).into_iter().enumerate() {
                    let p = linalg::block_permutation(&sizes, &order);
                    let permuted: Vec<usize> = order.iter().map(|&j| content[j]).collect();
                    let id = format!("k{c}-{k}");
                    tally.run(
                        || format!("key {id}"),
                        || {
                            tower.push_point(point(id.clone(), &u * p.adjoint(), permuted), tol)?;
                            let raw = tuple_distance(tower.raw_point(&base)?, tower.raw_point(&id)?)?;
                            ensure(raw < 1e-8, || format!("raw points differ by {raw:.3e}"))?;
                            let diff = funcalg::evaluate(&tower, &f, &base)? - funcalg::evaluate(&tower, &f, &id)?;
                            ensure(diff.norm() < 1e-8, || format!("values differ by {:.3e}", diff.norm()))
                        },
                    );
                }
            }
        }
    }

    // Distinct points of equal degree, cycling through the three ways they
    // can differ.
    let mut seen = BTreeSet::new();
    for case in 0..100 {
        let mut stream = rng.fork();
        let (expected, p_content, q_content) = match case % 3 {
            0 => (SeparationCase::DisjointClass, vec![1], vec![2]),
            1 => (SeparationCase::Multiplicity, vec![1, 1], vec![1, 0, 0]),
            _ => (SeparationCase::Conjugator, vec![1, 2], vec![1, 2]),
        };
        tally.run(
            || format!("separate {case}"),
            || {
                let labels = 1 + stream.below(2);
                let registry = disjoint_irreducibles(&[1, 2, 2], labels, &mut stream, tol);
                let degree = |c: &[usize]| c.iter().map(|&r| registry[r].degree()).sum::<usize>();
                let up = linalg::haar_unitary(degree(&p_content), &mut stream);
                let uq = linalg::haar_unitary(degree(&q_content), &mut stream);
                let points = vec![point("p".into(), up, p_content.clone()), point("q".into(), uq, q_content.clone())];
                let tower = SampledTower::new(registry, points, tol)?;
                let sep = funcalg::separate(&tower, "p", "q", &mut stream, tol)?;
                ensure(sep.case == expected, || format!("case {:?}, expected {expected:?}", sep.case))?;
                let gap = linalg::op_norm(
                    &(funcalg::evaluate(&tower, &sep.function, "p")? - funcalg::evaluate(&tower, &sep.function, "q")?),
                );
                ensure(gap > 10.0 * tol.eq_abs, || format!("gap {gap:.3e}"))?;
                seen.insert(format!("{:?}", sep.case));
                Ok(())
            },
        );
    }
    tally.check(seen.len() == 3, || format!("separation cases covered: {seen:?}"));
    tally.finish("6-function-algebra")
}

fn suite_generation(config: &SelfCheckConfig, rng: &mut Rng) -> SuiteReport {
    let tol = &config.tolerances;
    let top = config.max_degree.min(6);
    let mut tally = Tally::new();
    for case in 0..50 {
        let d = 2 + case % (top - 1);
        let x = random_irreducible(d, 1 + rng.below(3), rng, tol);
        tally.check(funcalg::generates_fully(&x, tol), || format!("irreducible {case} (d={d}) does not generate"));
    }
    for case in 0..50 {
        let d = 2 + case % (top - 1);
        let labels = 1 + rng.below(3);
        let letters = (0..labels)
            .map(|_| {
                let values: Vec<Complex64> = (0..d).map(|_| rng.complex_normal()).collect();
                ComplexMatrix::from_fn(d, d, |i, j| if i == j { values[i] } else { linalg::ZERO })
            })
            .collect();
        let x = MatrixTuple::new(letters).expect("square letters");
        tally.check(!funcalg::generates_fully(&x, tol), || format!("diagonal control {case} (d={d}) generates"));
    }
    for case in 0..100 {
        let labels = 1 + rng.below(3);
        let dx = 1 + rng.below(top);
        let x = random_irreducible(dx, labels, rng, tol);
        // A third of the pairs are equivalent, the rest independent draws.
        let y =
            if case % 3 == 0 { conjugated(&x, rng) } else { random_irreducible(1 + rng.below(top), labels, rng, tol) };
        tally.run(
            || format!("pair {case}"),
            || {
                let disjoint = decompose::are_disjoint(&x, &y, tol)?;
                let separated = funcalg::separating_projection_exists(&x, &y, tol)?;
                ensure(disjoint == separated, || format!("disjoint {disjoint} but projection {separated}"))?;
                ensure(disjoint == (case % 3 != 0), || format!("disjoint {disjoint} contradicts construction"))
            },
        );
    }
    tally.finish("7-generation")
}

fn ids(list: &[&str]) -> BTreeSet<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// t(1), b(2) with limit 2t, c(3), e(4) with limit c + t.
pub fn chain_presentation() -> TowerPresentation {
    let limit = |pairs: &[(&str, u32)]| pairs.iter().map(|&(id, n)| (id.to_string(), n)).collect::<Multiset>();
    TowerPresentation::new(
        vec![
            ClassSpec::singleton("t", 1),
            ClassSpec::sequence("b", 2, vec![limit(&[("t", 2)])]),
            ClassSpec::singleton("c", 3),
            ClassSpec::sequence("e", 4, vec![limit(&[("c", 1), ("t", 1)])]),
        ],
        Some("t".into()),
    )
}

/// Theta plus one singleton class in each degree 2..=5, no limits.
pub fn regular_presentation() -> TowerPresentation {
    let mut classes = vec![ClassSpec::singleton(tower::THETA, 1)];
    classes.extend((2..=5).map(|n| ClassSpec::singleton(format!("a{n}"), n)));
    TowerPresentation::new(classes, Some(tower::THETA.into()))
}

fn suite_towers(_config: &SelfCheckConfig, _rng: &mut Rng) -> SuiteReport {
    let mut tally = Tally::new();
    let theta = ids(&[tower::THETA]);

    tally.run(
        || "exm-clo".into(),
        || {
            let p = tower::build_example_clo(6, 2)?;
            ensure(p.validate().is_empty(), || "validation diagnostics".into())?;
            let c = p.classify()?;
            ensure(c.verdict == Verdict::Singular, || format!("verdict {:?}", c.verdict))?;
            ensure(c.vanishing_classes == theta, || format!("vanishing {:?}", c.vanishing_classes))?;
            ensure(p.closedness_test()?.closed, || "closedness failed".into())
        },
    );
    tally.run(
        || "non-one".into(),
        || {
            let p = tower::build_non_one(6, 2)?;
            ensure(p.validate().is_empty(), || "validation diagnostics".into())?;
            let c = p.classify()?;
            ensure(c.verdict == Verdict::Singular, || format!("verdict {:?}", c.verdict))?;
            let report = p.closedness_test()?;
            ensure(!report.closed, || "closedness passed".into())?;
            ensure(report.violations.iter().all(|v| v.limit.as_ref().is_some_and(|m| m.contains(tower::THETA))), || {
                "violation without theta".into()
            })
        },
    );
    tally.run(
        || "regular".into(),
        || {
            let p = regular_presentation();
            ensure(p.classes.len() == 5 && p.classes.iter().all(|c| !c.in_every_tail), || "not flag-free".into())?;
            let c = p.classify()?;
            ensure(c.verdict == Verdict::Regular, || format!("verdict {:?}", c.verdict))?;
            ensure(c.vanishing_classes.is_empty(), || format!("vanishing {:?}", c.vanishing_classes))?;
            let witnesses = p.prop_solid_check()?;
            ensure(witnesses.iter().all(|(_, w)| w.is_some()), || format!("witnesses {witnesses:?}"))
        },
    );
    let chain = chain_presentation();
    let all = ids(&["b", "c", "e", "t"]);
    let upper = ids(&["c", "e", "t"]);
    let expected = [(1, all.clone()), (2, all), (3, upper.clone()), (4, upper), (5, BTreeSet::new())];
    for (n, want) in expected {
        tally.run(
            || format!("chain T[{n}]"),
            || {
                let got = chain.tail_subtower(TailIndex::Finite(n))?;
                ensure(got == want, || format!("got {got:?}, expected {want:?}"))
            },
        );
    }
    tally.finish("8-tower-oracles")
}
