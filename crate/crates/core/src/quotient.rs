//! Maps between filtered spaces and the covering-map axioms: generation,
//! chain lifting and (strong) approximate uniqueness of chain lifts, plus the
//! quotient of the source by the scale components of the fibers.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{components_of, Chain, Entourage, FilteredSpace, Partition, PointId};

/// A uniformly continuous map; `continuity[k - 1]` is the coarsest source
/// scale whose image lies in target scale `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilteredMap {
    source: FilteredSpace,
    target: FilteredSpace,
    assignment: Vec<PointId>,
    continuity: Vec<usize>,
}

impl FilteredMap {
    pub fn new(source: FilteredSpace, target: FilteredSpace, assignment: Vec<PointId>) -> Result<Self> {
        if assignment.len() != source.len() || assignment.iter().any(|&y| y >= target.len()) {
            return Err(Error::BadAssignment);
        }
        let images: Vec<Entourage> = source
            .scales()
            .iter()
            .map(|e| e.image(&assignment, target.len()))
            .collect();
        let mut continuity = Vec::with_capacity(target.scale_count());
        for (k, ek) in target.scales().iter().enumerate() {
            match images.iter().position(|im| im.is_subset(ek)) {
                Some(j) => continuity.push(j + 1),
                None => return Err(Error::NotUniformlyContinuous(k + 1)),
            }
        }
        Ok(FilteredMap {
            source,
            target,
            assignment,
            continuity,
        })
    }

    pub fn identity(space: &FilteredSpace) -> Self {
        Self::new(space.clone(), space.clone(), (0..space.len()).collect()).expect("identity is continuous")
    }

    pub fn source(&self) -> &FilteredSpace {
        &self.source
    }

    pub fn target(&self) -> &FilteredSpace {
        &self.target
    }

    pub fn assignment(&self) -> &[PointId] {
        &self.assignment
    }

    pub fn apply(&self, x: PointId) -> PointId {
        self.assignment[x]
    }

    pub fn continuity(&self) -> &[usize] {
        &self.continuity
    }

    /// `f(E_j)` for source scale `j`.
    pub fn image_of_scale(&self, j: usize) -> Result<Entourage> {
        Ok(self.source.scale(j)?.image(&self.assignment, self.target.len()))
    }

    /// `g ∘ self`.
    pub fn then(&self, g: &FilteredMap) -> Result<FilteredMap> {
        let assignment = self.assignment.iter().map(|&y| g.apply(y)).collect();
        FilteredMap::new(self.source.clone(), g.target.clone(), assignment)
    }
}

/// Why a map fails to generate the target structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenerationFailure {
    /// A target point outside the image.
    NotSurjective { point: PointId },
    /// The image of a source scale contains no target scale; `pair` is a pair
    /// of the finest target scale it misses.
    ImageTooSmall {
        source_scale: usize,
        pair: (PointId, PointId),
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationWitness {
    pub passed: bool,
    /// Per target scale, the source scale whose image lies inside it.
    pub continuity: Vec<usize>,
    /// Per source scale, the coarsest target scale contained in its image.
    pub contains: Vec<Option<usize>>,
    pub failure: Option<GenerationFailure>,
}

pub fn check_generates(f: &FilteredMap) -> GenerationWitness {
    let image_points: Vec<bool> = {
        let mut seen = vec![false; f.target.len()];
        for &y in &f.assignment {
            seen[y] = true;
        }
        seen
    };
    let mut failure = image_points
        .iter()
        .position(|&s| !s)
        .map(|point| GenerationFailure::NotSurjective { point });
    let mut contains = Vec::new();
    for j in 1..=f.source.scale_count() {
        let image = f.image_of_scale(j).expect("valid scale");
        let found = if failure.is_none() {
            f.target
                .scales()
                .iter()
                .position(|e| e.is_subset(&image))
                .map(|k| k + 1)
        } else {
            None
        };
        if found.is_none() && failure.is_none() {
            let pair = f
                .target
                .finest()
                .pairs()
                .find(|&(a, b)| !image.contains(a, b))
                .expect("finest scale not contained");
            failure = Some(GenerationFailure::ImageTooSmall { source_scale: j, pair });
        }
        contains.push(found);
    }
    GenerationWitness {
        passed: failure.is_none(),
        continuity: f.continuity.clone(),
        contains,
        failure,
    }
}

/// A point and a downstairs step from its image with no lift.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftFailure {
    pub scale: usize,
    pub lifting_scale: usize,
    pub point: PointId,
    pub step_to: PointId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftingWitness {
    pub passed: bool,
    /// Per source scale `E`, the coarsest scale `F` such that `f(F)` steps
    /// lift to `E` steps.
    pub witnesses: Vec<Option<usize>>,
    pub failure: Option<LiftFailure>,
}

fn first_unliftable(f: &FilteredMap, e: usize, lifting: usize) -> Option<(PointId, PointId)> {
    let ee = f.source.scale(e).expect("valid scale");
    let down = f.image_of_scale(lifting).expect("valid scale");
    (0..f.source.len()).find_map(|x| {
        let fx = f.apply(x);
        down.neighbors(fx)
            .iter()
            .find(|&&y| !ee.neighbors(x).iter().any(|&x2| f.apply(x2) == y))
            .map(|&y| (x, y))
    })
}

/// One-step chain lifting: for each source scale `E`, scales `F` are tried
/// from coarsest to finest.
pub fn check_chain_lifting(f: &FilteredMap) -> LiftingWitness {
    let m = f.source.scale_count();
    let mut witnesses = Vec::with_capacity(m);
    let mut failure = None;
    for e in 1..=m {
        let mut last = None;
        let found = (1..=m).find(|&l| {
            last = first_unliftable(f, e, l).map(|c| (l, c));
            last.is_none()
        });
        if let (None, Some((l, (point, step_to))), None) = (found, last, &failure) {
            failure = Some(LiftFailure {
                scale: e,
                lifting_scale: l,
                point,
                step_to,
            });
        }
        witnesses.push(found);
    }
    LiftingWitness {
        passed: failure.is_none(),
        witnesses,
        failure,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniquenessMode {
    /// Lifts with equal images are `E`-close.
    Plain,
    /// Lifts with equal images are `F`-close.
    Strong,
}

/// Two `F`-chains from one point with equal images that are not close at
/// scale `closeness` in their last position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainPair {
    pub chain_scale: usize,
    pub closeness: usize,
    pub left: Chain,
    pub right: Chain,
}

impl ChainPair {
    /// Re-checks the counterexample against `f`.
    pub fn replay(&self, f: &FilteredMap) -> bool {
        let (c, d) = (&self.left, &self.right);
        let valid =
            |ch: &Chain| ch.scale == self.chain_scale && f.source.is_chain(self.chain_scale, &ch.seq).unwrap_or(false);
        if !valid(c) || !valid(d) || c.len() != d.len() || c.start() != d.start() {
            return false;
        }
        if c.seq.iter().zip(&d.seq).any(|(&a, &b)| f.apply(a) != f.apply(b)) {
            return false;
        }
        let Ok(close) = f.source.scale(self.closeness) else {
            return false;
        };
        c.seq.iter().zip(&d.seq).any(|(&a, &b)| !close.contains(a, b))
    }
}

/// Pair fixpoint: are any two `E_chain`-chains from a common point with
/// identical images `E_closeness`-close? Returns the first violation found
/// breadth-first.
pub fn uniqueness_counterexample(f: &FilteredMap, chain_scale: usize, closeness: usize) -> Result<Option<ChainPair>> {
    let step = f.source.scale(chain_scale)?;
    let close = f.source.scale(closeness)?;
    let n = f.source.len();
    let idx = |a: PointId, b: PointId| a * n + b;
    let mut parent: Vec<Option<usize>> = vec![None; n * n];
    let mut seen = vec![false; n * n];
    let mut queue = VecDeque::new();
    for x in 0..n {
        seen[idx(x, x)] = true;
        queue.push_back((x, x));
    }
    let moves = |a: PointId| {
        let mut v = step.neighbors(a).to_vec();
        v.push(a);
        v.sort_unstable();
        v
    };
    while let Some((a, b)) = queue.pop_front() {
        let mb = moves(b);
        for a2 in moves(a) {
            for &b2 in &mb {
                if f.apply(a2) != f.apply(b2) || seen[idx(a2, b2)] {
                    continue;
                }
                seen[idx(a2, b2)] = true;
                parent[idx(a2, b2)] = Some(idx(a, b));
                if !close.contains(a2, b2) {
                    let mut left = vec![a2];
                    let mut right = vec![b2];
                    let mut cur = idx(a2, b2);
                    while let Some(p) = parent[cur] {
                        left.push(p / n);
                        right.push(p % n);
                        cur = p;
                    }
                    left.reverse();
                    right.reverse();
                    return Ok(Some(ChainPair {
                        chain_scale,
                        closeness,
                        left: Chain {
                            scale: chain_scale,
                            seq: left,
                        },
                        right: Chain {
                            scale: chain_scale,
                            seq: right,
                        },
                    }));
                }
                queue.push_back((a2, b2));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniquenessRow {
    pub scale: usize,
    /// The finest-first search result: the scale `F ⊆ E` that works.
    pub witness: Option<usize>,
    /// Violation for the finest candidate when no candidate works.
    pub counterexample: Option<ChainPair>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniquenessWitness {
    pub mode: UniquenessMode,
    pub passed: bool,
    pub rows: Vec<UniquenessRow>,
}

impl UniquenessWitness {
    pub fn counterexample(&self) -> Option<&ChainPair> {
        self.rows.iter().find_map(|r| r.counterexample.as_ref())
    }

    pub fn witness(&self, e: usize) -> Option<usize> {
        self.rows.get(e.checked_sub(1)?)?.witness
    }
}

pub fn check_approx_uniqueness(f: &FilteredMap, mode: UniquenessMode) -> UniquenessWitness {
    let m = f.source.scale_count();
    let mut rows = Vec::with_capacity(m);
    for e in 1..=m {
        let mut first = None;
        let mut witness = None;
        for cand in (e..=m).rev() {
            let closeness = match mode {
                UniquenessMode::Plain => e,
                UniquenessMode::Strong => cand,
            };
            match uniqueness_counterexample(f, cand, closeness).expect("valid scales") {
                None => {
                    witness = Some(cand);
                    break;
                }
                Some(c) => {
                    first.get_or_insert(c);
                }
            }
        }
        rows.push(UniquenessRow {
            scale: e,
            witness,
            counterexample: if witness.is_none() { first } else { None },
        });
    }
    UniquenessWitness {
        mode,
        passed: rows.iter().all(|r| r.witness.is_some()),
        rows,
    }
}

/// Blocks are the `E_k`-components of the fibers of `f`.
pub fn fiber_e_components(f: &FilteredMap, k: usize) -> Result<Partition> {
    let e = f.source.scale(k)?;
    Ok(components_of(f.source.len(), |a| {
        e.neighbors(a)
            .iter()
            .copied()
            .filter(|&b| f.apply(b) == f.apply(a))
            .collect()
    }))
}

/// The source with fiber components collapsed, scales pushed forward.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientSpace {
    pub scale: usize,
    pub blocks: Partition,
    /// Block index of each source point.
    pub q: Vec<usize>,
    /// Target point of each block.
    pub g: Vec<PointId>,
    pub space: FilteredSpace,
    /// Strong uniqueness fails at this scale, so the pushed structure need
    /// not make `q` generate.
    pub hypothesis_unmet: bool,
}

impl QuotientSpace {
    pub fn q_map(&self, f: &FilteredMap) -> Result<FilteredMap> {
        FilteredMap::new(f.source.clone(), self.space.clone(), self.q.clone())
    }

    pub fn g_map(&self, f: &FilteredMap) -> Result<FilteredMap> {
        FilteredMap::new(self.space.clone(), f.target.clone(), self.g.clone())
    }
}

pub fn block_name(space: &FilteredSpace, block: &[PointId]) -> String {
    let names: Vec<&str> = block.iter().map(|&p| space.name(p)).collect();
    format!("{{{}}}", names.join(","))
}

pub fn build_fiber_quotient(f: &FilteredMap, k: usize) -> Result<QuotientSpace> {
    let blocks = fiber_e_components(f, k)?;
    let q = blocks.labels(f.source.len());
    let g: Vec<PointId> = blocks.blocks.iter().map(|b| f.apply(b[0])).collect();
    debug_assert!((0..f.source.len()).all(|x| g[q[x]] == f.apply(x)));
    let names = blocks.blocks.iter().map(|b| block_name(&f.source, b)).collect();
    let scales: Vec<Entourage> = f.source.scales().iter().map(|e| e.image(&q, blocks.len())).collect();
    let hausdorff = scales.last().is_some_and(Entourage::is_diagonal);
    let space = FilteredSpace::from_entourages(names, scales, hausdorff)?;
    let hypothesis_unmet = uniqueness_counterexample(f, k, k)?.is_some();
    Ok(QuotientSpace {
        scale: k,
        blocks,
        q,
        g,
        space,
        hypothesis_unmet,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorVerdict {
    Ucm,
    NotUcm,
    PreconditionFailed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub scale: usize,
    pub generates: bool,
    pub chain_lifting: bool,
    pub strong_uniqueness: bool,
    /// First failing precondition, if any.
    pub failing_axiom: Option<String>,
    /// The scale `F ⊆ E` used for the quotient.
    pub chosen: Option<usize>,
    pub blocks: Vec<Vec<PointId>>,
    pub blocks_bounded: bool,
    pub g_generates: bool,
    pub g_chain_lifting: bool,
    /// Quotient scale (same index as `F`) transverse to `g`.
    pub g_transverse_scale: Option<usize>,
    pub verdict: FactorVerdict,
}

/// Factors `f` through the fiber quotient at a scale `F ⊆ E_e` with strong
/// uniqueness and checks that the second factor is a uniform covering map.
pub fn factor_and_verify(f: &FilteredMap, e: usize) -> Result<Factorization> {
    f.source.scale(e)?;
    let generates = check_generates(f).passed;
    let chain_lifting = check_chain_lifting(f).passed;
    let strong = check_approx_uniqueness(f, UniquenessMode::Strong);
    let failing_axiom = if !generates {
        Some("generation")
    } else if !chain_lifting {
        Some("chain lifting")
    } else if !strong.passed {
        Some("strong approximate uniqueness")
    } else {
        None
    };
    let mut report = Factorization {
        scale: e,
        generates,
        chain_lifting,
        strong_uniqueness: strong.passed,
        failing_axiom: failing_axiom.map(str::to_owned),
        chosen: None,
        blocks: Vec::new(),
        blocks_bounded: false,
        g_generates: false,
        g_chain_lifting: false,
        g_transverse_scale: None,
        verdict: FactorVerdict::PreconditionFailed,
    };
    if failing_axiom.is_some() {
        return Ok(report);
    }
    let m = f.source.scale_count();
    let mut chosen = None;
    for cand in (e..=m).rev() {
        if uniqueness_counterexample(f, cand, cand)?.is_none() {
            chosen = Some(cand);
            break;
        }
    }
    let chosen = chosen.expect("strong uniqueness passed at this scale");
    let quotient = build_fiber_quotient(f, chosen)?;
    let fs = f.source.scale(chosen)?;
    report.chosen = Some(chosen);
    report.blocks_bounded = quotient.blocks.blocks.iter().all(|b| fs.bounds(b));
    report.blocks = quotient.blocks.blocks.clone();
    let g = quotient.g_map(f)?;
    report.g_generates = check_generates(&g).passed;
    report.g_chain_lifting = check_chain_lifting(&g).passed;
    let transverse = g.source.scale(chosen)?.pairs().all(|(u, v)| g.apply(u) != g.apply(v));
    report.g_transverse_scale = transverse.then_some(chosen);
    report.verdict = if report.blocks_bounded && report.g_generates && report.g_chain_lifting && transverse {
        FactorVerdict::Ucm
    } else {
        FactorVerdict::NotUcm
    };
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GucmReport {
    pub generation: GenerationWitness,
    pub lifting: LiftingWitness,
    pub uniqueness: UniquenessWitness,
    /// Fibers are finite, hence complete.
    pub fibers_complete: bool,
    pub passed: bool,
}

pub fn verify_gucm(f: &FilteredMap) -> GucmReport {
    let generation = check_generates(f);
    let lifting = check_chain_lifting(f);
    let uniqueness = check_approx_uniqueness(f, UniquenessMode::Plain);
    let passed = generation.passed && lifting.passed && uniqueness.passed;
    GucmReport {
        generation,
        lifting,
        uniqueness,
        fibers_complete: true,
        passed,
    }
}

/// A counterexample emitted in a report, re-checkable against its map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "property", rename_all = "snake_case")]
pub enum Counterexample {
    Generation(GenerationFailure),
    Lifting(LiftFailure),
    Uniqueness(ChainPair),
}

impl Counterexample {
    /// True iff the counterexample still refutes the property on `f`.
    pub fn replay(&self, f: &FilteredMap) -> bool {
        match self {
            Counterexample::Generation(GenerationFailure::NotSurjective { point }) => {
                *point < f.target.len() && !f.assignment.contains(point)
            }
            Counterexample::Generation(GenerationFailure::ImageTooSmall { source_scale, pair }) => {
                let Ok(image) = f.image_of_scale(*source_scale) else {
                    return false;
                };
                let finest = f.target.finest();
                pair.0 < f.target.len()
                    && pair.1 < f.target.len()
                    && finest.contains(pair.0, pair.1)
                    && !image.contains(pair.0, pair.1)
            }
            Counterexample::Lifting(l) => {
                let (Ok(e), Ok(down)) = (f.source.scale(l.scale), f.image_of_scale(l.lifting_scale)) else {
                    return false;
                };
                l.point < f.source.len()
                    && down.contains(f.apply(l.point), l.step_to)
                    && !e
                        .neighbors(l.point)
                        .iter()
                        .chain([&l.point])
                        .any(|&x| f.apply(x) == l.step_to)
            }
            Counterexample::Uniqueness(pair) => pair.replay(f),
        }
    }
}
