//! Truncated inverse sequences: thread spaces of towers of filtered spaces,
//! the strong Mittag-Leffler check, reconstruction of a map from its fiber
//! quotients, and towers of finitely generated abelian groups with the
//! telescoping solver and lim¹ certificates.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_hermite_form, is_surjective_onto, reduce_mod, IntMatrix};
use crate::quotient::{
    build_fiber_quotient, check_approx_uniqueness, check_chain_lifting, check_generates, uniqueness_counterexample,
    verify_gucm, FilteredMap, QuotientSpace, UniquenessMode,
};
use crate::space::{Entourage, FilteredSpace, PointId};

pub const DEFAULT_PRODUCT_BOUND: usize = 1_000_000;

/// What the truncation says about the indices beyond it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stabilization {
    #[default]
    None,
    /// Every later bonding map is a bijection.
    BijectiveBeyond,
    /// The last bonding map repeats forever.
    Repeats,
}

/// Spaces `X_1, ..., X_n` with bonding maps `X_{i+1} -> X_i`.
#[derive(Clone, Debug)]
pub struct SpaceTower {
    spaces: Vec<FilteredSpace>,
    bonds: Vec<FilteredMap>,
    pub stabilization: Stabilization,
}

impl SpaceTower {
    /// `bonds[i]` maps the points of `spaces[i + 1]` into `spaces[i]`.
    pub fn new(spaces: Vec<FilteredSpace>, bonds: Vec<Vec<PointId>>) -> Result<Self> {
        if spaces.is_empty() {
            return Err(Error::BadTower("no spaces".into()));
        }
        if bonds.len() + 1 != spaces.len() {
            return Err(Error::BadTower(format!(
                "{} spaces need {} bonding maps, got {}",
                spaces.len(),
                spaces.len() - 1,
                bonds.len()
            )));
        }
        let bonds = bonds
            .into_iter()
            .enumerate()
            .map(|(i, a)| FilteredMap::new(spaces[i + 1].clone(), spaces[i].clone(), a))
            .collect::<Result<_>>()?;
        Ok(SpaceTower {
            spaces,
            bonds,
            stabilization: Stabilization::None,
        })
    }

    pub fn constant(space: &FilteredSpace, levels: usize) -> Self {
        let id: Vec<PointId> = (0..space.len()).collect();
        Self::new(vec![space.clone(); levels], vec![id; levels.saturating_sub(1)]).expect("identity bonds")
    }

    pub fn levels(&self) -> usize {
        self.spaces.len()
    }

    /// Level `i`, 1-based.
    pub fn space(&self, i: usize) -> &FilteredSpace {
        &self.spaces[i - 1]
    }

    pub fn spaces(&self) -> &[FilteredSpace] {
        &self.spaces
    }

    /// The bonding map from level `i + 1` to level `i`.
    pub fn bond(&self, i: usize) -> &FilteredMap {
        &self.bonds[i - 1]
    }

    /// Image of `x` in level `to` for a point of level `from >= to`.
    pub fn project(&self, from: usize, to: usize, mut x: PointId) -> PointId {
        for i in (to..from).rev() {
            x = self.bonds[i - 1].apply(x);
        }
        x
    }
}

/// Threads of a tower with the limit filtration.
#[derive(Clone, Debug)]
pub struct LimitSpace {
    pub space: FilteredSpace,
    /// `threads[t][i - 1]` is the level-`i` coordinate of thread `t`.
    pub threads: Vec<Vec<PointId>>,
    /// The `(level, scale)` pair whose preimage introduced each limit scale.
    pub scale_sources: Vec<(usize, usize)>,
}

impl LimitSpace {
    /// The projection to level `i` as a point map.
    pub fn projection(&self, i: usize) -> Vec<PointId> {
        self.threads.iter().map(|t| t[i - 1]).collect()
    }

    pub fn thread_index(&self) -> HashMap<Vec<PointId>, usize> {
        self.threads.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect()
    }
}

/// Threads are determined by their last coordinate. Scales are the
/// cumulative intersections of the preimages `π_i⁻¹(E_j)` taken in the order
/// `i + j` increasing, then `i`, with repeated relations dropped.
pub fn assemble_limit_space(tower: &SpaceTower, product_bound: usize) -> Result<LimitSpace> {
    let n = tower.levels();
    let top = tower.space(n);
    if top.len().saturating_mul(n) > product_bound {
        return Err(Error::ProductTooLarge(product_bound));
    }
    let threads: Vec<Vec<PointId>> = (0..top.len())
        .map(|x| (1..=n).map(|i| tower.project(n, i, x)).collect())
        .collect();
    let names = threads
        .iter()
        .map(|t| {
            let parts: Vec<&str> = t.iter().enumerate().map(|(i, &x)| tower.space(i + 1).name(x)).collect();
            format!("({})", parts.join(","))
        })
        .collect();
    let mut order: Vec<(usize, usize)> = (1..=n)
        .flat_map(|i| (1..=tower.space(i).scale_count()).map(move |j| (i, j)))
        .collect();
    order.sort_by_key(|&(i, j)| (i + j, i));
    let t = threads.len();
    let mut current = Entourage::full(t);
    let mut scales: Vec<Entourage> = Vec::new();
    let mut scale_sources = Vec::new();
    for (i, j) in order {
        let proj: Vec<PointId> = threads.iter().map(|th| th[i - 1]).collect();
        let pre = tower.space(i).scale(j)?.preimage(&proj);
        current = current.intersection(&pre);
        if scales.last() != Some(&current) {
            scales.push(current.clone());
            scale_sources.push((i, j));
        }
    }
    let hausdorff = scales.last().is_some_and(Entourage::is_diagonal);
    let space = FilteredSpace::from_entourages(names, scales, hausdorff)?;
    Ok(LimitSpace {
        space,
        threads,
        scale_sources,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlRow {
    pub index: usize,
    /// Least deeper index whose image equals the limit projection; the last
    /// index is its own witness.
    pub witness: Option<usize>,
    /// For the witness, inclusion was re-checked as equality.
    pub equality: bool,
}

pub fn strong_ml_check(tower: &SpaceTower, limit: &LimitSpace) -> Vec<MlRow> {
    let n = tower.levels();
    (1..=n)
        .map(|a| {
            let mut proj: Vec<PointId> = limit.projection(a);
            proj.sort_unstable();
            proj.dedup();
            let image_of = |b: usize| {
                let mut im: Vec<PointId> = (0..tower.space(b).len()).map(|x| tower.project(b, a, x)).collect();
                im.sort_unstable();
                im.dedup();
                im
            };
            let candidates: Vec<usize> = if a == n { vec![n] } else { ((a + 1)..=n).collect() };
            let witness = candidates
                .into_iter()
                .find(|&b| image_of(b).iter().all(|x| proj.binary_search(x).is_ok()));
            MlRow {
                index: a,
                witness,
                equality: witness.is_some_and(|b| image_of(b) == proj),
            }
        })
        .collect()
}

/// How a point map between two filtered spaces compares their structures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceCheck {
    pub injective: bool,
    pub surjective: bool,
    /// Every target scale contains the image of some source scale.
    pub continuous: bool,
    /// Every source scale contains the preimage of some target scale.
    pub inverse_continuous: bool,
}

impl EquivalenceCheck {
    pub fn holds(&self) -> bool {
        self.injective && self.surjective && self.continuous && self.inverse_continuous
    }
}

pub fn uniform_equivalence(source: &FilteredSpace, target: &FilteredSpace, map: &[PointId]) -> EquivalenceCheck {
    let mut hit = vec![0usize; target.len()];
    for &y in map {
        hit[y] += 1;
    }
    let images: Vec<Entourage> = source.scales().iter().map(|e| e.image(map, target.len())).collect();
    let preimages: Vec<Entourage> = target.scales().iter().map(|e| e.preimage(map)).collect();
    EquivalenceCheck {
        injective: hit.iter().all(|&c| c <= 1),
        surjective: hit.iter().all(|&c| c >= 1),
        continuous: target.scales().iter().all(|t| images.iter().any(|im| im.is_subset(t))),
        inverse_continuous: source
            .scales()
            .iter()
            .all(|s| preimages.iter().any(|pre| pre.is_subset(s))),
    }
}

/// `a ∘ b` as a relation: pairs joined through a middle point.
pub fn compose(a: &Entourage, b: &Entourage, n: usize) -> Entourage {
    let mut pairs = Vec::new();
    for x in 0..n {
        let mut reach: Vec<PointId> = vec![x];
        reach.extend_from_slice(a.neighbors(x));
        let mut out = Vec::new();
        for &y in &reach {
            out.push(y);
            out.extend_from_slice(b.neighbors(y));
        }
        pairs.extend(out.into_iter().filter(|&z| z > x).map(|z| (x, z)));
    }
    Entourage::new(n, pairs)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    /// Source scales at which strong uniqueness holds; the tower levels.
    pub basis: Vec<usize>,
    pub level_sizes: Vec<usize>,
    pub limit_size: usize,
    pub equivalence: EquivalenceCheck,
    /// Pairs related at a level's own pushed scale lie in the cube of that
    /// scale.
    pub cube_bound: bool,
    /// The limit of the second factors agrees with `f` through `q`.
    pub limit_map_agrees: bool,
    /// Image of each source point in the limit.
    pub q: Vec<usize>,
    pub passed: bool,
}

/// Rebuilds `f` as the limit of its fiber quotients over the scales with
/// strong uniqueness and checks `x ↦ (q_k(x))` is a uniform equivalence.
pub fn quotient_tower_reconstruct(f: &FilteredMap, product_bound: usize) -> Result<ReconstructionReport> {
    let src = f.source();
    if !src.hausdorff() {
        return Err(Error::HypothesisUnmet("source hausdorff".into()));
    }
    if !verify_gucm(f).passed {
        return Err(Error::HypothesisUnmet("generalized uniform covering map".into()));
    }
    if !check_approx_uniqueness(f, UniquenessMode::Strong).passed {
        return Err(Error::HypothesisUnmet("strong approximate uniqueness".into()));
    }
    let mut basis = Vec::new();
    for k in 1..=src.scale_count() {
        if uniqueness_counterexample(f, k, k)?.is_none() {
            basis.push(k);
        }
    }
    let quotients: Vec<QuotientSpace> = basis
        .iter()
        .map(|&k| build_fiber_quotient(f, k))
        .collect::<Result<_>>()?;
    let bonds: Vec<Vec<PointId>> = quotients
        .windows(2)
        .map(|w| w[1].blocks.blocks.iter().map(|b| w[0].q[b[0]]).collect())
        .collect();
    let tower = SpaceTower::new(quotients.iter().map(|q| q.space.clone()).collect(), bonds)?;
    let limit = assemble_limit_space(&tower, product_bound)?;
    let index = limit.thread_index();
    let q: Vec<usize> = (0..src.len())
        .map(|x| index[&quotients.iter().map(|qs| qs.q[x]).collect::<Vec<_>>()])
        .collect();
    let equivalence = uniform_equivalence(src, &limit.space, &q);
    let mut cube_bound = true;
    for (level, (&k, qs)) in basis.iter().zip(&quotients).enumerate() {
        let fk = src.scale(k)?;
        let cube = compose(&compose(fk, fk, src.len()), fk, src.len());
        let rel = qs.space.scale(k)?.preimage(&limit.projection(level + 1));
        cube_bound &= rel.preimage(&q).is_subset(&cube);
    }
    let limit_map_agrees = (0..src.len()).all(|x| {
        let t = &limit.threads[q[x]];
        quotients.iter().zip(t).all(|(qs, &b)| qs.g[b] == f.apply(x))
    });
    let passed = equivalence.holds() && cube_bound && limit_map_agrees;
    Ok(ReconstructionReport {
        basis,
        level_sizes: quotients.iter().map(|qs| qs.space.len()).collect(),
        limit_size: limit.space.len(),
        equivalence,
        cube_bound,
        limit_map_agrees,
        q,
        passed,
    })
}

/// Hypotheses and conclusions of a limit-map lemma replayed on an instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitMapReport {
    pub strong_ml: bool,
    pub hypotheses: BTreeMap<String, bool>,
    pub conclusions: BTreeMap<String, bool>,
    /// Each verified hypothesis came with its verified conclusion.
    pub consistent: bool,
}

/// Compatible maps `f_i: X_i -> Y` into a fixed target; replays generation
/// and chain lifting on the limit map.
pub fn tower_map_limits(tower: &SpaceTower, maps: &[FilteredMap], product_bound: usize) -> Result<LimitMapReport> {
    let n = tower.levels();
    if maps.len() != n {
        return Err(Error::BadTower("one map per level".into()));
    }
    let target = maps[0].target().clone();
    for i in 1..n {
        let bond = tower.bond(i);
        let compatible = (0..tower.space(i + 1).len()).all(|x| maps[i].apply(x) == maps[i - 1].apply(bond.apply(x)));
        if !compatible || maps[i].target() != &target {
            return Err(Error::BadTower(format!("map {} is not compatible", i + 1)));
        }
    }
    let limit = assemble_limit_space(tower, product_bound)?;
    let assignment = limit.threads.iter().map(|t| maps[n - 1].apply(t[n - 1])).collect();
    let f = FilteredMap::new(limit.space.clone(), target, assignment)?;
    let strong_ml = strong_ml_check(tower, &limit).iter().all(|r| r.witness.is_some());
    let mut hypotheses = BTreeMap::new();
    hypotheses.insert("generates".to_owned(), maps.iter().all(|m| check_generates(m).passed));
    hypotheses.insert(
        "chain_lifting".to_owned(),
        maps.iter().all(|m| check_chain_lifting(m).passed),
    );
    let mut conclusions = BTreeMap::new();
    conclusions.insert("generates".to_owned(), check_generates(&f).passed);
    conclusions.insert("chain_lifting".to_owned(), check_chain_lifting(&f).passed);
    let consistent = !strong_ml || hypotheses.iter().all(|(k, &h)| !h || conclusions[k]);
    Ok(LimitMapReport {
        strong_ml,
        hypotheses,
        conclusions,
        consistent,
    })
}

/// Levelwise maps `f_i: X_i -> Y_i` between two towers; replays plain and
/// strong approximate uniqueness on the limit map.
pub fn tower_map_limits_between(
    source: &SpaceTower,
    target: &SpaceTower,
    maps: &[FilteredMap],
    product_bound: usize,
) -> Result<LimitMapReport> {
    let n = source.levels();
    if target.levels() != n || maps.len() != n {
        return Err(Error::BadTower("towers and maps differ in length".into()));
    }
    for i in 1..n {
        let compatible = (0..source.space(i + 1).len())
            .all(|x| target.bond(i).apply(maps[i].apply(x)) == maps[i - 1].apply(source.bond(i).apply(x)));
        if !compatible {
            return Err(Error::BadTower(format!("map {} is not compatible", i + 1)));
        }
    }
    let lx = assemble_limit_space(source, product_bound)?;
    let ly = assemble_limit_space(target, product_bound)?;
    let index = ly.thread_index();
    let assignment = lx
        .threads
        .iter()
        .map(|t| index[&t.iter().zip(maps).map(|(&x, m)| m.apply(x)).collect::<Vec<_>>()])
        .collect();
    let f = FilteredMap::new(lx.space.clone(), ly.space.clone(), assignment)?;
    let strong_ml = strong_ml_check(source, &lx).iter().all(|r| r.witness.is_some());
    let mut hypotheses = BTreeMap::new();
    let mut conclusions = BTreeMap::new();
    for (name, mode) in [
        ("plain_uniqueness", UniquenessMode::Plain),
        ("strong_uniqueness", UniquenessMode::Strong),
    ] {
        hypotheses.insert(
            name.to_owned(),
            maps.iter().all(|m| check_approx_uniqueness(m, mode).passed),
        );
        conclusions.insert(name.to_owned(), check_approx_uniqueness(&f, mode).passed);
    }
    let consistent = hypotheses.iter().all(|(k, &h)| !h || conclusions[k]);
    Ok(LimitMapReport {
        strong_ml,
        hypotheses,
        conclusions,
        consistent,
    })
}

/// A tower of groups for the set-level telescoping recursion.
pub trait TowerGroup {
    type Elem: Clone + PartialEq;
    fn levels(&self) -> usize;
    /// Identity of level `i` (0-based).
    fn identity(&self, level: usize) -> Self::Elem;
    fn mul(&self, level: usize, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// Bonding map from level `level + 1` into `level`.
    fn bond(&self, level: usize, a: &Self::Elem) -> Self::Elem;
}

/// `h_n = 1`, `h_i = ψ(h_{i+1}) g_i`, so that `g_i = ψ(h_{i+1})⁻¹ h_i`.
pub fn telescope_backward<T: TowerGroup>(tower: &T, g: &[T::Elem]) -> Vec<T::Elem> {
    let n = tower.levels();
    assert_eq!(g.len() + 1, n, "one element per bonding map");
    let mut h = vec![tower.identity(n - 1)];
    for i in (0..n - 1).rev() {
        let next = tower.mul(i, &tower.bond(i, &h[0]), &g[i]);
        h.insert(0, next);
    }
    h
}

pub fn telescope_holds<T: TowerGroup>(tower: &T, g: &[T::Elem], h: &[T::Elem]) -> bool {
    h.len() == tower.levels()
        && g.len() + 1 == h.len()
        && (0..g.len()).all(|i| tower.mul(i, &tower.bond(i, &h[i + 1]), &g[i]) == h[i])
}

/// `Z^r ⊕ torsion` as coordinate moduli (`0` for a free coordinate).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbGroup {
    pub moduli: Vec<BigInt>,
}

impl AbGroup {
    pub fn free(rank: usize) -> Self {
        AbGroup {
            moduli: vec![BigInt::zero(); rank],
        }
    }

    pub fn dimension(&self) -> usize {
        self.moduli.len()
    }

    pub fn reduce(&self, v: &[BigInt]) -> Vec<BigInt> {
        v.iter().zip(&self.moduli).map(|(x, d)| reduce_mod(x, d)).collect()
    }

    fn relation_matrix(&self) -> IntMatrix {
        let n = self.dimension();
        let mut m = IntMatrix::zeros(n, n);
        for (i, d) in self.moduli.iter().enumerate() {
            m.set(i, i, d.clone());
        }
        m
    }

    /// Is every generator column of `b` in the subgroup spanned by `a`?
    pub fn subgroup_contains(&self, a: &IntMatrix, b: &IntMatrix) -> bool {
        let hermite = column_hermite_form(&a.hcat(&self.relation_matrix()));
        (0..b.cols()).all(|j| hermite.solve(&b.column(j)).is_some())
    }
}

/// Abelian groups `G_1, ..., G_n` and matrices of `ψ_{i+1}: G_{i+1} -> G_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerAb {
    pub groups: Vec<AbGroup>,
    pub bonds: Vec<IntMatrix>,
    #[serde(default)]
    pub stabilization: Stabilization,
}

impl TowerAb {
    pub fn new(groups: Vec<AbGroup>, bonds: Vec<IntMatrix>, stabilization: Stabilization) -> Result<Self> {
        if groups.is_empty() || bonds.len() + 1 != groups.len() {
            return Err(Error::BadTower("need n groups and n - 1 bonding matrices".into()));
        }
        for g in &groups {
            if g.moduli.iter().any(|d| d < &BigInt::zero()) {
                return Err(Error::BadTower("negative modulus".into()));
            }
        }
        for (i, m) in bonds.iter().enumerate() {
            let (to, from) = (&groups[i], &groups[i + 1]);
            if m.rows() != to.dimension() || m.cols() != from.dimension() {
                return Err(Error::BadTower(format!("bonding matrix {} has the wrong shape", i + 1)));
            }
            for (j, d) in from.moduli.iter().enumerate() {
                let col: Vec<BigInt> = m.column(j).iter().map(|x| x * d).collect();
                if to.reduce(&col).iter().any(|x| !x.is_zero()) {
                    return Err(Error::BadTower(format!("bonding matrix {} ignores torsion", i + 1)));
                }
            }
        }
        if stabilization == Stabilization::Repeats {
            let n = groups.len();
            if n < 2 || groups[n - 1] != groups[n - 2] {
                return Err(Error::BadTower("a repeating map needs equal last two groups".into()));
            }
        }
        Ok(TowerAb {
            groups,
            bonds,
            stabilization,
        })
    }

    pub fn levels(&self) -> usize {
        self.groups.len()
    }

    /// `ψ_{i+1}(v)` for `v` in `G_{i+1}` (0-based `i`).
    pub fn apply(&self, i: usize, v: &[BigInt]) -> Vec<BigInt> {
        self.groups[i].reduce(&self.bonds[i].mul_vec(v))
    }

    fn check_sequence(&self, g: &[Vec<BigInt>]) -> Result<()> {
        if g.len() + 1 != self.levels() || g.iter().zip(&self.groups).any(|(v, grp)| v.len() != grp.dimension()) {
            return Err(Error::BadTower("sequence does not match the tower".into()));
        }
        Ok(())
    }
}

impl TowerGroup for TowerAb {
    type Elem = Vec<BigInt>;

    fn levels(&self) -> usize {
        self.groups.len()
    }

    fn identity(&self, level: usize) -> Vec<BigInt> {
        vec![BigInt::zero(); self.groups[level].dimension()]
    }

    fn mul(&self, level: usize, a: &Vec<BigInt>, b: &Vec<BigInt>) -> Vec<BigInt> {
        let sum: Vec<BigInt> = a.iter().zip(b).map(|(x, y)| x + y).collect();
        self.groups[level].reduce(&sum)
    }

    fn bond(&self, level: usize, a: &Vec<BigInt>) -> Vec<BigInt> {
        self.apply(level, a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// `h_1 = 0`, solve `ψ(h_{i+1}) = h_i - g_i` upward.
    Forward,
    /// `h_n = 0`, `h_i = g_i + ψ(h_{i+1})` downward.
    Backward,
}

/// Finds `(h_i)` with `g_i = h_i - ψ_{i+1}(h_{i+1})` for `i < n`.
pub fn telescoping_solve(tower: &TowerAb, g: &[Vec<BigInt>], mode: SolveMode) -> Result<Vec<Vec<BigInt>>> {
    tower.check_sequence(g)?;
    let g: Vec<Vec<BigInt>> = g.iter().zip(&tower.groups).map(|(v, grp)| grp.reduce(v)).collect();
    match mode {
        SolveMode::Backward => Ok(telescope_backward(tower, &g)),
        SolveMode::Forward => {
            let mut h = vec![tower.identity(0)];
            for (i, gi) in g.iter().enumerate() {
                let grp = &tower.groups[i];
                let rhs: Vec<BigInt> = h[i].iter().zip(gi).map(|(a, b)| a - b).collect();
                let system = tower.bonds[i].hcat(&grp.relation_matrix());
                let x = column_hermite_form(&system)
                    .solve(&rhs)
                    .ok_or(Error::Unsolvable(i + 1))?;
                let cols = tower.bonds[i].cols();
                h.push(tower.groups[i + 1].reduce(&x[..cols]));
            }
            Ok(h)
        }
    }
}

pub fn telescoping_holds(tower: &TowerAb, g: &[Vec<BigInt>], h: &[Vec<BigInt>]) -> bool {
    if tower.check_sequence(g).is_err() || h.len() != tower.levels() {
        return false;
    }
    (0..g.len()).all(|i| {
        let lhs: Vec<BigInt> = h[i].iter().zip(tower.apply(i, &h[i + 1])).map(|(a, b)| a - b).collect();
        tower.groups[i].reduce(&lhs) == tower.groups[i].reduce(&g[i])
    })
}

/// Solves for `-g` in the `h_i ψ(h_{i+1})⁻¹` form and inverts, giving a
/// solution of the `ψ(h_{i+1})⁻¹ h_i` form; in additive notation both forms
/// read `g_i = h_i - ψ(h_{i+1})`.
pub fn lim1_transform(tower: &TowerAb, g: &[Vec<BigInt>]) -> Result<Vec<Vec<BigInt>>> {
    let neg: Vec<Vec<BigInt>> = g.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
    let k = telescoping_solve(tower, &neg, SolveMode::Backward)?;
    let h: Vec<Vec<BigInt>> = k
        .iter()
        .zip(&tower.groups)
        .map(|(v, grp)| grp.reduce(&v.iter().map(|x| -x).collect::<Vec<_>>()))
        .collect();
    debug_assert!(telescoping_holds(tower, g, &h));
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "certificate", rename_all = "snake_case")]
pub enum Lim1Certificate {
    Surjectivity,
    /// Images of deeper groups stop shrinking from this power of the
    /// repeating map on, or the tower is declared bijective beyond.
    MittagLeffler {
        stable_from: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Lim1Verdict {
    Trivial(Lim1Certificate),
    Undetermined { reason: String, index: usize },
}

/// Iterations of a repeating map examined before giving up.
pub const STABILIZATION_STEPS: usize = 64;

/// Certifies a trivial lim¹ when possible; never claims it is nontrivial.
pub fn lim1_verdict(tower: &TowerAb) -> Lim1Verdict {
    let first_bad = (0..tower.bonds.len()).find(|&i| !is_surjective_onto(&tower.bonds[i], &tower.groups[i].moduli));
    let Some(bad) = first_bad else {
        return Lim1Verdict::Trivial(Lim1Certificate::Surjectivity);
    };
    let n = tower.levels();
    match tower.stabilization {
        Stabilization::None => Lim1Verdict::Undetermined {
            reason: "bonding map is not surjective and nothing is declared beyond the truncation".into(),
            index: bad + 1,
        },
        Stabilization::BijectiveBeyond => Lim1Verdict::Trivial(Lim1Certificate::MittagLeffler { stable_from: n }),
        Stabilization::Repeats => {
            let a = &tower.bonds[n - 2];
            let grp = &tower.groups[n - 1];
            let mut power = a.clone();
            for k in 1..=STABILIZATION_STEPS {
                let next = a.mul(&power);
                if grp.subgroup_contains(&next, &power) {
                    return Lim1Verdict::Trivial(Lim1Certificate::MittagLeffler { stable_from: k });
                }
                power = next;
            }
            Lim1Verdict::Undetermined {
                reason: format!("images of the repeating map still shrink after {STABILIZATION_STEPS} steps"),
                index: n,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::to_bigints;
    use crate::space::cycle_metric;

    fn c6(radii: &[f64]) -> FilteredSpace {
        FilteredSpace::from_metric(&cycle_metric(6), radii).unwrap()
    }

    fn c3(radii: &[f64]) -> FilteredSpace {
        FilteredSpace::from_metric(&cycle_metric(3), radii).unwrap()
    }

    fn sets(sizes: &[usize]) -> Vec<FilteredSpace> {
        sizes
            .iter()
            .map(|&n| FilteredSpace::from_edges((0..n).map(|i| i.to_string()).collect(), vec![vec![]], true).unwrap())
            .collect()
    }

    fn times_two(levels: usize, stabilization: Stabilization) -> TowerAb {
        TowerAb::new(
            vec![AbGroup::free(1); levels],
            vec![IntMatrix::from_i64_rows(1, 1, &[vec![2]]); levels - 1],
            stabilization,
        )
        .unwrap()
    }

    #[test]
    fn constant_tower_limit_is_the_space() {
        let x = c6(&[2.0, 1.0]);
        let tower = SpaceTower::constant(&x, 3);
        let limit = assemble_limit_space(&tower, DEFAULT_PRODUCT_BOUND).unwrap();
        assert_eq!(limit.space.len(), 6);
        assert_eq!(limit.space.scales(), x.scales());
        assert!(uniform_equivalence(&x, &limit.space, &(0..6).collect::<Vec<_>>()).holds());
        assert!(strong_ml_check(&tower, &limit)
            .iter()
            .all(|r| r.witness.is_some() && r.equality));
    }

    #[test]
    fn graph_of_a_map_as_a_limit() {
        let tower = SpaceTower::new(vec![c3(&[1.0]), c6(&[1.0])], vec![(0..6).map(|i| i % 3).collect()]).unwrap();
        let limit = assemble_limit_space(&tower, DEFAULT_PRODUCT_BOUND).unwrap();
        assert_eq!(limit.threads.len(), 6);
        for t in &limit.threads {
            assert_eq!(t[0], t[1] % 3);
        }
        assert!(matches!(
            assemble_limit_space(&tower, 5),
            Err(Error::ProductTooLarge(5))
        ));
    }

    #[test]
    fn empty_top_gives_empty_limit() {
        let s = sets(&[2, 0]);
        let tower = SpaceTower::new(s, vec![vec![]]).unwrap();
        let limit = assemble_limit_space(&tower, DEFAULT_PRODUCT_BOUND).unwrap();
        assert!(limit.space.is_empty());
    }

    #[test]
    fn ml_on_small_set_towers() {
        let tower = SpaceTower::new(sets(&[1, 2, 1]), vec![vec![0, 0], vec![0]]).unwrap();
        let limit = assemble_limit_space(&tower, DEFAULT_PRODUCT_BOUND).unwrap();
        let rows = strong_ml_check(&tower, &limit);
        assert_eq!(
            rows.iter().map(|r| r.witness).collect::<Vec<_>>(),
            vec![Some(2), Some(3), Some(3)]
        );
        let single = SpaceTower::new(sets(&[3]), vec![]).unwrap();
        let limit = assemble_limit_space(&single, DEFAULT_PRODUCT_BOUND).unwrap();
        assert_eq!(strong_ml_check(&single, &limit)[0].witness, Some(1));
    }

    #[test]
    fn reconstruction() {
        let x = c6(&[1.0, 0.0]);
        let y = c3(&[1.0, 0.0]);
        let f = FilteredMap::new(x, y, (0..6).map(|i| i % 3).collect()).unwrap();
        let r = quotient_tower_reconstruct(&f, DEFAULT_PRODUCT_BOUND).unwrap();
        assert!(r.passed);
        assert_eq!(r.level_sizes, vec![6, 6]);
        let l4 = FilteredSpace::from_metric(&crate::space::line_metric(4), &[1.0, 0.5]).unwrap();
        let r = quotient_tower_reconstruct(&FilteredMap::identity(&l4), DEFAULT_PRODUCT_BOUND).unwrap();
        assert!(r.passed);
        assert_eq!(r.q, vec![0, 1, 2, 3]);
        let point = FilteredSpace::from_edges(vec!["*".into()], vec![vec![], vec![]], true).unwrap();
        let constant = FilteredMap::new(c6(&[2.0, 1.0]), point, vec![0; 6]).unwrap();
        assert!(matches!(
            quotient_tower_reconstruct(&constant, 100),
            Err(Error::HypothesisUnmet(_))
        ));
        let not_hausdorff = FilteredMap::identity(&c6(&[1.0]));
        assert_eq!(
            quotient_tower_reconstruct(&not_hausdorff, 100).unwrap_err(),
            Error::HypothesisUnmet("source hausdorff".into())
        );
    }

    #[test]
    fn limit_maps() {
        let x = c6(&[1.0]);
        let y = c3(&[1.0]);
        let f = FilteredMap::new(x.clone(), y, (0..6).map(|i| i % 3).collect()).unwrap();
        let tower = SpaceTower::constant(&x, 3);
        let r = tower_map_limits(&tower, &[f.clone(), f.clone(), f.clone()], DEFAULT_PRODUCT_BOUND).unwrap();
        assert!(r.strong_ml && r.consistent);
        assert!(r.conclusions.values().all(|&c| c));
        let ty = SpaceTower::constant(f.target(), 3);
        let r = tower_map_limits_between(&tower, &ty, &[f.clone(), f.clone(), f], DEFAULT_PRODUCT_BOUND).unwrap();
        assert!(r.consistent);
        assert!(r.conclusions["strong_uniqueness"]);
    }

    #[test]
    fn telescoping_examples() {
        let id = TowerAb::new(
            vec![AbGroup::free(1); 4],
            vec![IntMatrix::identity(1); 3],
            Stabilization::None,
        )
        .unwrap();
        let g: Vec<_> = (0..3).map(|_| to_bigints(&[1])).collect();
        let h = telescoping_solve(&id, &g, SolveMode::Forward).unwrap();
        assert_eq!(
            h,
            vec![
                to_bigints(&[0]),
                to_bigints(&[-1]),
                to_bigints(&[-2]),
                to_bigints(&[-3])
            ]
        );
        assert!(telescoping_holds(&id, &g, &h));

        let t = times_two(3, Stabilization::Repeats);
        let g = vec![to_bigints(&[1]), to_bigints(&[0])];
        assert_eq!(telescoping_solve(&t, &g, SolveMode::Forward), Err(Error::Unsolvable(1)));
        let h = telescoping_solve(&t, &g, SolveMode::Backward).unwrap();
        assert_eq!(h, vec![to_bigints(&[1]), to_bigints(&[0]), to_bigints(&[0])]);
        assert!(telescoping_holds(&t, &g, &h));
        assert_eq!(lim1_transform(&t, &g).unwrap(), h);
    }

    #[test]
    fn lim1_verdicts() {
        let id = TowerAb::new(
            vec![AbGroup::free(2); 3],
            vec![IntMatrix::identity(2); 2],
            Stabilization::None,
        )
        .unwrap();
        assert_eq!(lim1_verdict(&id), Lim1Verdict::Trivial(Lim1Certificate::Surjectivity));
        assert!(matches!(
            lim1_verdict(&times_two(3, Stabilization::Repeats)),
            Lim1Verdict::Undetermined { index: 3, .. }
        ));
        assert!(matches!(
            lim1_verdict(&times_two(3, Stabilization::None)),
            Lim1Verdict::Undetermined { index: 1, .. }
        ));
        assert_eq!(
            lim1_verdict(&times_two(3, Stabilization::BijectiveBeyond)),
            Lim1Verdict::Trivial(Lim1Certificate::MittagLeffler { stable_from: 3 })
        );
        let zero_repeat = TowerAb::new(
            vec![AbGroup::free(1); 3],
            vec![IntMatrix::from_i64_rows(1, 1, &[vec![0]]); 2],
            Stabilization::Repeats,
        )
        .unwrap();
        assert_eq!(
            lim1_verdict(&zero_repeat),
            Lim1Verdict::Trivial(Lim1Certificate::MittagLeffler { stable_from: 1 })
        );
    }

    #[test]
    fn torsion_must_be_respected() {
        let z2 = AbGroup {
            moduli: to_bigints(&[2]),
        };
        let bad = TowerAb::new(
            vec![AbGroup::free(1), z2],
            vec![IntMatrix::identity(1)],
            Stabilization::None,
        );
        assert!(matches!(bad, Err(Error::BadTower(_))));
    }
}
