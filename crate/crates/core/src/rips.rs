//! Rips 2-skeletons, edge-path presentations of the chain-homotopy group at a
//! scale, first homology by Smith normal form, and certified decisions of
//! chain homotopy.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{
    enumerate_cosets, tietze_simplify, CosetTable, Enumeration, Letter, Presentation, Simplified, Word,
};
use crate::linalg::{is_surjective_onto, AbelianGroupInv, AbelianQuotient, IntMatrix};
use crate::space::{Chain, FilteredSpace, PointId};

/// Vertices, edges and triangles of the Rips complex at one scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rips2Skeleton {
    pub scale: usize,
    pub vertices: Vec<PointId>,
    pub edges: Vec<(PointId, PointId)>,
    pub triangles: Vec<[PointId; 3]>,
}

pub fn rips_2_skeleton(space: &FilteredSpace, k: usize) -> Result<Rips2Skeleton> {
    let e = space.scale(k)?;
    let edges: Vec<_> = e.pairs().collect();
    let mut triangles = Vec::new();
    for &(a, b) in &edges {
        for &c in e.neighbors(b) {
            if c > b && e.contains(a, c) {
                triangles.push([a, b, c]);
            }
        }
    }
    triangles.sort_unstable();
    Ok(Rips2Skeleton {
        scale: k,
        vertices: (0..space.len()).collect(),
        edges,
        triangles,
    })
}

/// Spanning forest of `(points, E_k)` grown breadth-first from the given
/// roots, neighbors visited in input order.
#[derive(Clone, Debug)]
struct Forest {
    parent: Vec<Option<PointId>>,
    depth: Vec<usize>,
    reached: Vec<bool>,
}

impl Forest {
    fn grow(space: &FilteredSpace, k: usize, roots: impl IntoIterator<Item = PointId>) -> Self {
        let e = space.scale(k).expect("scale checked by caller");
        let n = space.len();
        let mut f = Forest {
            parent: vec![None; n],
            depth: vec![0; n],
            reached: vec![false; n],
        };
        for root in roots {
            if f.reached[root] {
                continue;
            }
            f.reached[root] = true;
            let mut queue = VecDeque::from([root]);
            while let Some(a) = queue.pop_front() {
                for &b in e.neighbors(a) {
                    if !f.reached[b] {
                        f.reached[b] = true;
                        f.parent[b] = Some(a);
                        f.depth[b] = f.depth[a] + 1;
                        queue.push_back(b);
                    }
                }
            }
        }
        f
    }

    fn is_tree_edge(&self, a: PointId, b: PointId) -> bool {
        self.parent[b] == Some(a) || self.parent[a] == Some(b)
    }

    /// Oriented edges of the tree path from `a` to `b` (same tree).
    fn path(&self, mut a: PointId, mut b: PointId) -> Vec<(PointId, PointId)> {
        let mut up = Vec::new();
        let mut down = Vec::new();
        while self.depth[a] > self.depth[b] {
            let p = self.parent[a].expect("not a root");
            up.push((a, p));
            a = p;
        }
        while self.depth[b] > self.depth[a] {
            let p = self.parent[b].expect("not a root");
            down.push((p, b));
            b = p;
        }
        while a != b {
            let pa = self.parent[a].expect("same tree");
            let pb = self.parent[b].expect("same tree");
            up.push((a, pa));
            down.push((pb, b));
            a = pa;
            b = pb;
        }
        down.reverse();
        up.extend(down);
        up
    }
}

/// Edge-path presentation of the group of chain-homotopy classes of loops
/// at `basepoint` on scale `scale`: one generator per non-tree edge of the
/// basepoint's component (oriented smaller endpoint first), one relator per
/// triangle.
#[derive(Clone, Debug)]
pub struct EdgePathPresentation {
    pub scale: usize,
    pub basepoint: PointId,
    /// Points of the basepoint's component, ascending.
    pub component: Vec<PointId>,
    pub generators: Vec<(PointId, PointId)>,
    pub presentation: Presentation,
    tree: Forest,
    generator_index: HashMap<(PointId, PointId), usize>,
}

impl EdgePathPresentation {
    pub fn tree_edges(&self) -> Vec<(PointId, PointId)> {
        let mut v: Vec<_> = self
            .component
            .iter()
            .filter_map(|&b| self.tree.parent[b].map(|a| (a.min(b), a.max(b))))
            .collect();
        v.sort_unstable();
        v
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.tree.reached.get(p).copied().unwrap_or(false)
    }

    fn edge_letter(&self, a: PointId, b: PointId) -> Option<Letter> {
        if a == b || self.tree.is_tree_edge(a, b) {
            return None;
        }
        let g = self.generator_index[&(a.min(b), a.max(b))];
        Some(Letter::new(g, a > b))
    }

    /// Word of a point sequence whose steps are edges or repeats.
    fn word_of(&self, seq: &[PointId]) -> Word {
        let mut w = Word::empty();
        for s in seq.windows(2) {
            if let Some(l) = self.edge_letter(s[0], s[1]) {
                w.push(l);
            }
        }
        w.reduced()
    }
}

pub fn presentation_at_scale(space: &FilteredSpace, k: usize, basepoint: PointId) -> Result<EdgePathPresentation> {
    let e = space.scale(k)?;
    space.check_point(basepoint)?;
    let tree = Forest::grow(space, k, [basepoint]);
    let component: Vec<PointId> = (0..space.len()).filter(|&p| tree.reached[p]).collect();
    let mut generators = Vec::new();
    let mut generator_index = HashMap::new();
    for (a, b) in e.pairs() {
        if tree.reached[a] && !tree.is_tree_edge(a, b) {
            generator_index.insert((a, b), generators.len());
            generators.push((a, b));
        }
    }
    let mut pres = EdgePathPresentation {
        scale: k,
        basepoint,
        component,
        presentation: Presentation {
            generators: generators.len(),
            relators: Vec::new(),
        },
        generators,
        tree,
        generator_index,
    };
    let skeleton = rips_2_skeleton(space, k)?;
    pres.presentation.relators = skeleton
        .triangles
        .iter()
        .filter(|t| pres.tree.reached[t[0]])
        .map(|&[a, b, c]| pres.word_of(&[a, b, c, a]))
        .collect();
    Ok(pres)
}

/// Word of `chain` relative to the presentation's tree, freely reduced.
pub fn chain_word(pres: &EdgePathPresentation, chain: &Chain) -> Result<Word> {
    if chain.scale != pres.scale {
        return Err(Error::ScaleMismatch);
    }
    if chain.seq.iter().any(|&p| !pres.contains(p)) {
        return Err(Error::OutsideComponent);
    }
    for s in chain.seq.windows(2) {
        if s[0] != s[1]
            && !pres.generator_index.contains_key(&(s[0].min(s[1]), s[0].max(s[1])))
            && !pres.tree.is_tree_edge(s[0], s[1])
        {
            return Err(Error::NotAChain(chain.scale));
        }
    }
    Ok(pres.word_of(&chain.seq))
}

/// First homology of the Rips 2-skeleton at one scale, with cycle coordinates.
#[derive(Clone, Debug)]
pub struct ScaleHomology {
    pub scale: usize,
    forest: Forest,
    /// Non-tree edges; these index the cycle coordinates.
    nontree: Vec<(PointId, PointId)>,
    nontree_index: HashMap<(PointId, PointId), usize>,
    quotient: AbelianQuotient,
}

/// Oriented 1-chain: coefficient per edge `(a, b)` with `a < b`.
pub type EdgeChain = BTreeMap<(PointId, PointId), BigInt>;

impl ScaleHomology {
    /// Whole-space variant: spanning forest rooted at the least point of each
    /// component.
    pub fn whole_space(space: &FilteredSpace, k: usize) -> Result<Self> {
        let skeleton = rips_2_skeleton(space, k)?;
        let forest = Forest::grow(space, k, 0..space.len());
        Ok(Self::from_forest(k, forest, &skeleton, |_| true))
    }

    /// Component of `basepoint` only.
    pub fn component(space: &FilteredSpace, k: usize, basepoint: PointId) -> Result<Self> {
        let skeleton = rips_2_skeleton(space, k)?;
        space.check_point(basepoint)?;
        let forest = Forest::grow(space, k, [basepoint]);
        let reached = forest.reached.clone();
        Ok(Self::from_forest(k, forest, &skeleton, |p| reached[p]))
    }

    fn from_forest(scale: usize, forest: Forest, skeleton: &Rips2Skeleton, keep: impl Fn(PointId) -> bool) -> Self {
        let mut nontree = Vec::new();
        let mut nontree_index = HashMap::new();
        for &(a, b) in &skeleton.edges {
            if keep(a) && !forest.is_tree_edge(a, b) {
                nontree_index.insert((a, b), nontree.len());
                nontree.push((a, b));
            }
        }
        let rows: Vec<Vec<BigInt>> = skeleton
            .triangles
            .iter()
            .filter(|t| keep(t[0]))
            .map(|&[a, b, c]| {
                let mut row = vec![BigInt::zero(); nontree.len()];
                for (u, v, s) in [(a, b, 1), (b, c, 1), (a, c, -1)] {
                    if let Some(&i) = nontree_index.get(&(u, v)) {
                        row[i] += s;
                    }
                }
                row
            })
            .collect();
        let quotient = AbelianQuotient::new(nontree.len(), &rows);
        ScaleHomology {
            scale,
            forest,
            nontree,
            nontree_index,
            quotient,
        }
    }

    pub fn invariants(&self) -> &AbelianGroupInv {
        self.quotient.invariants()
    }

    /// H1 coordinates of a 1-cycle.
    pub fn cycle_coordinates(&self, cycle: &EdgeChain) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); self.nontree.len()];
        for (edge, c) in cycle {
            if let Some(&i) = self.nontree_index.get(edge) {
                v[i] += c;
            }
        }
        self.quotient.coordinates(&v)
    }

    /// A cycle representing the `i`-th invariant generator.
    pub fn generator_cycle(&self, i: usize) -> EdgeChain {
        let coeffs = self.quotient.representative(i);
        let mut cycle = EdgeChain::new();
        for (&(a, b), c) in self.nontree.iter().zip(&coeffs) {
            if c.is_zero() {
                continue;
            }
            add_oriented(&mut cycle, a, b, c);
            for (u, v) in self.forest.path(b, a) {
                add_oriented(&mut cycle, u, v, c);
            }
        }
        cycle.retain(|_, c| !c.is_zero());
        cycle
    }
}

fn add_oriented(chain: &mut EdgeChain, u: PointId, v: PointId, c: &BigInt) {
    let (key, sign) = if u < v { ((u, v), c.clone()) } else { ((v, u), -c) };
    *chain.entry(key).or_insert_with(BigInt::zero) += sign;
}

/// Edge 1-chain traced by a point sequence.
pub fn sequence_cycle(seq: &[PointId]) -> EdgeChain {
    let mut chain = EdgeChain::new();
    for s in seq.windows(2) {
        if s[0] != s[1] {
            add_oriented(&mut chain, s[0], s[1], &BigInt::one());
        }
    }
    chain.retain(|_, c| !c.is_zero());
    chain
}

/// H1 of the whole Rips 2-skeleton at scale `k`.
pub fn h1_at_scale(space: &FilteredSpace, k: usize) -> Result<AbelianGroupInv> {
    Ok(ScaleHomology::whole_space(space, k)?.invariants().clone())
}

/// H1 of the basepoint's component at scale `k`.
pub fn h1_of_component(space: &FilteredSpace, k: usize, basepoint: PointId) -> Result<AbelianGroupInv> {
    Ok(ScaleHomology::component(space, k, basepoint)?.invariants().clone())
}

/// Abelianized class of a loop, in the invariant-factor coordinates of the
/// basepoint component's H1.
pub fn h1_class(space: &FilteredSpace, k: usize, loop_chain: &Chain) -> Result<Vec<BigInt>> {
    let decider = HomotopyDecider::new(space, k, loop_chain.start(), HomotopyBudget::default())?;
    decider.h1_class(loop_chain)
}

/// Bounds for the semi-decision of chain homotopy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomotopyBudget {
    pub tietze_passes: usize,
    pub max_relator_length: usize,
    pub coset_rows: usize,
}

impl Default for HomotopyBudget {
    fn default() -> Self {
        HomotopyBudget {
            tietze_passes: 64,
            max_relator_length: 10_000,
            coset_rows: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum YesCertificate {
    FreeReduction,
    Tietze,
    CosetEnumeration { order: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum NoWitness {
    /// The loop has this nonzero H1 class.
    H1Class { class: Vec<BigInt> },
    /// Tietze moves reached a free group in which the loop's word is
    /// nonempty and reduced.
    FreeGroup { word: Word },
    /// The loop acts nontrivially on the regular coset table of a finite group.
    FiniteQuotient { order: usize, image: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Decision {
    Yes(YesCertificate),
    No(NoWitness),
    Unknown { budget: String },
}

impl Decision {
    pub fn is_yes(&self) -> bool {
        matches!(self, Decision::Yes(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Decision::No(_))
    }
}

/// Prepared decision procedure for chain homotopy at one scale and basepoint:
/// free reduction, H1 separation, Tietze simplification, then coset
/// enumeration within a row budget.
#[derive(Debug)]
pub struct HomotopyDecider {
    presentation: EdgePathPresentation,
    abelian: AbelianQuotient,
    simplified: Simplified,
    budget: HomotopyBudget,
    regular: OnceLock<Option<CosetTable>>,
}

impl HomotopyDecider {
    pub fn new(space: &FilteredSpace, k: usize, basepoint: PointId, budget: HomotopyBudget) -> Result<Self> {
        let presentation = presentation_at_scale(space, k, basepoint)?;
        let abelian = AbelianQuotient::new(
            presentation.presentation.generators,
            &presentation.presentation.relation_rows(),
        );
        let simplified = tietze_simplify(
            &presentation.presentation,
            budget.tietze_passes,
            budget.max_relator_length,
        );
        Ok(HomotopyDecider {
            presentation,
            abelian,
            simplified,
            budget,
            regular: OnceLock::new(),
        })
    }

    pub fn budget(&self) -> HomotopyBudget {
        self.budget
    }

    pub fn presentation(&self) -> &EdgePathPresentation {
        &self.presentation
    }

    pub fn simplified(&self) -> &Simplified {
        &self.simplified
    }

    pub fn word(&self, chain: &Chain) -> Result<Word> {
        chain_word(&self.presentation, chain)
    }

    pub fn h1_invariants(&self) -> &AbelianGroupInv {
        self.abelian.invariants()
    }

    pub fn h1_class(&self, loop_chain: &Chain) -> Result<Vec<BigInt>> {
        if !loop_chain.is_loop() || loop_chain.start() != self.presentation.basepoint {
            return Err(Error::NotALoop);
        }
        let w = self.word(loop_chain)?;
        Ok(self.word_class(&w))
    }

    fn word_class(&self, w: &Word) -> Vec<BigInt> {
        self.abelian
            .coordinates(&w.exponent_sums(self.presentation.presentation.generators))
    }

    fn regular_table(&self) -> Option<&CosetTable> {
        self.regular
            .get_or_init(
                || match enumerate_cosets(&self.simplified.presentation, &[], self.budget.coset_rows) {
                    Enumeration::Complete(t) => Some(t),
                    Enumeration::Exhausted { .. } => None,
                },
            )
            .as_ref()
    }

    /// Is the group element of `w` trivial?
    pub fn decide_word(&self, w: &Word) -> Decision {
        let w = w.reduced();
        if w.is_empty() {
            return Decision::Yes(YesCertificate::FreeReduction);
        }
        let class = self.word_class(&w);
        if class.iter().any(|c| !c.is_zero()) {
            return Decision::No(NoWitness::H1Class { class });
        }
        let t = self.simplified.translate(&w);
        if t.is_empty() {
            return Decision::Yes(YesCertificate::Tietze);
        }
        if self.simplified.presentation.relators.is_empty() {
            return Decision::No(NoWitness::FreeGroup { word: t });
        }
        match self.regular_table() {
            Some(table) => {
                let image = table.act(0, &t);
                if image == 0 {
                    Decision::Yes(YesCertificate::CosetEnumeration { order: table.index() })
                } else {
                    Decision::No(NoWitness::FiniteQuotient {
                        order: table.index(),
                        image,
                    })
                }
            }
            None => Decision::Unknown {
                budget: format!("coset-rows={}", self.budget.coset_rows),
            },
        }
    }

    /// Are two chains from the basepoint with a common end homotopic
    /// relative endpoints?
    pub fn decide(&self, c: &Chain, d: &Chain) -> Result<Decision> {
        if c.scale != d.scale || c.scale != self.presentation.scale {
            return Err(Error::ScaleMismatch);
        }
        if c.start() != d.start() || c.end() != d.end() || c.start() != self.presentation.basepoint {
            return Err(Error::EndpointMismatch);
        }
        let w = self.word(c)?.concat(&self.word(d)?.inverse());
        Ok(self.decide_word(&w))
    }
}

/// Certified tri-state decision of whether `c` and `d` are chain-homotopic
/// relative endpoints at scale `k`.
pub fn decide_e_homotopic(
    space: &FilteredSpace,
    k: usize,
    c: &Chain,
    d: &Chain,
    budget: HomotopyBudget,
) -> Result<Decision> {
    if c.scale != k || d.scale != k {
        return Err(Error::ScaleMismatch);
    }
    for ch in [c, d] {
        if !space.is_chain(k, &ch.seq)? {
            return Err(Error::NotAChain(k));
        }
    }
    if c.start() != d.start() || c.end() != d.end() {
        return Err(Error::EndpointMismatch);
    }
    let decider = HomotopyDecider::new(space, k, c.start(), budget)?;
    decider.decide(c, d)
}

/// Greedy shortening by elementary homotopies: drop repeated points and any
/// interior point whose neighbors are related at scale `k`.
pub fn reduce_chain(space: &FilteredSpace, k: usize, chain: &Chain) -> Result<Chain> {
    if chain.scale != k {
        return Err(Error::ScaleMismatch);
    }
    if !space.is_chain(k, &chain.seq)? {
        return Err(Error::NotAChain(k));
    }
    let e = space.scale(k)?;
    let mut seq = chain.seq.clone();
    seq.dedup();
    let mut i = 1;
    while i + 1 < seq.len() {
        if e.contains(seq[i - 1], seq[i + 1]) {
            seq.remove(i);
            if seq[i - 1] == seq[i] {
                seq.remove(i);
            }
            i = 1;
        } else {
            i += 1;
        }
    }
    Ok(Chain { scale: k, seq })
}

/// Matrix of the inclusion-induced map `H1(scale j) -> H1(scale k)` in
/// invariant-factor coordinates (rows: target, columns: source), for
/// `j >= k` (scale `j` finer).
pub fn bonding_h1_map(space: &FilteredSpace, j: usize, k: usize) -> Result<IntMatrix> {
    space.scale(j)?;
    space.scale(k)?;
    if j < k {
        return Err(Error::BadScalePair(j, k));
    }
    let source = ScaleHomology::whole_space(space, j)?;
    let target = ScaleHomology::whole_space(space, k)?;
    Ok(homology_map(&source, &target))
}

fn homology_map(source: &ScaleHomology, target: &ScaleHomology) -> IntMatrix {
    let cols = source.invariants().dimension();
    let rows = target.invariants().dimension();
    let mut m = IntMatrix::zeros(rows, cols);
    for i in 0..cols {
        let coords = target.cycle_coordinates(&source.generator_cycle(i));
        for (r, v) in coords.into_iter().enumerate() {
            m.set(r, i, v);
        }
    }
    m
}

/// Adjacent scale pairs `(k, k + 1)` whose bonding H1 map is not an
/// isomorphism.
pub fn critical_scales(space: &FilteredSpace) -> Result<Vec<(usize, usize)>> {
    let homs: Vec<ScaleHomology> = (1..=space.scale_count())
        .map(|k| ScaleHomology::whole_space(space, k))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for k in 1..space.scale_count() {
        let (coarse, fine) = (&homs[k - 1], &homs[k]);
        let m = homology_map(fine, coarse);
        let iso = coarse.invariants() == fine.invariants() && is_surjective_onto(&m, &coarse.invariants().moduli());
        if !iso {
            out.push((k, k + 1));
        }
    }
    Ok(out)
}
