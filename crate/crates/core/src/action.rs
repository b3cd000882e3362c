//! Finite permutation groups acting on filtered spaces.
//!
//! Groups are materialized as element lists, the identity first. Coset and
//! orbit representatives are the least element or point index, so every
//! table here is deterministic.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quotient::{block_name, verify_gucm, FilteredMap};
use crate::space::{Entourage, FilteredSpace, Partition, PointId};
use crate::tower::{
    assemble_limit_space, strong_ml_check, telescope_backward, uniform_equivalence, LimitMapReport, SpaceTower,
    TowerGroup,
};

pub const DEFAULT_GROUP_BOUND: usize = 10_000;

/// A group of permutations of a filtered space's points.
#[derive(Clone, Debug)]
pub struct GroupAction {
    space: FilteredSpace,
    generators: Vec<Vec<PointId>>,
    elements: Vec<Vec<PointId>>,
    index: HashMap<Vec<PointId>, usize>,
}

fn check_permutation(n: usize, p: &[PointId]) -> Result<()> {
    let mut seen = vec![false; n];
    if p.len() != n {
        return Err(Error::NotAPermutation);
    }
    for &x in p {
        if x >= n || std::mem::replace(&mut seen[x], true) {
            return Err(Error::NotAPermutation);
        }
    }
    Ok(())
}

/// Materializes the group generated by `generators`.
pub fn close_group(space: &FilteredSpace, generators: Vec<Vec<PointId>>, bound: usize) -> Result<GroupAction> {
    let n = space.len();
    for g in &generators {
        check_permutation(n, g)?;
    }
    let identity: Vec<PointId> = (0..n).collect();
    let mut elements = vec![identity.clone()];
    let mut index = HashMap::from([(identity, 0)]);
    let mut queue = VecDeque::from([0]);
    while let Some(a) = queue.pop_front() {
        for g in &generators {
            let prod: Vec<PointId> = g.iter().map(|&y| elements[a][y]).collect();
            if !index.contains_key(&prod) {
                if elements.len() == bound {
                    return Err(Error::GroupTooLarge(bound));
                }
                index.insert(prod.clone(), elements.len());
                queue.push_back(elements.len());
                elements.push(prod);
            }
        }
    }
    Ok(GroupAction {
        space: space.clone(),
        generators,
        elements,
        index,
    })
}

impl GroupAction {
    /// Takes a list already closed under composition, identity first.
    pub fn from_elements(space: &FilteredSpace, elements: Vec<Vec<PointId>>) -> Result<Self> {
        let n = space.len();
        for g in &elements {
            check_permutation(n, g)?;
        }
        if elements
            .first()
            .is_none_or(|e| e.iter().enumerate().any(|(i, &x)| i != x))
        {
            return Err(Error::BadTower("element list must start with the identity".into()));
        }
        let mut index = HashMap::new();
        for (i, g) in elements.iter().enumerate() {
            if index.insert(g.clone(), i).is_some() {
                return Err(Error::NotFaithful);
            }
        }
        let action = GroupAction {
            space: space.clone(),
            generators: elements[1..].to_vec(),
            elements,
            index,
        };
        for a in 0..action.order() {
            for b in 0..action.order() {
                if !action.index.contains_key(&action.compose(a, b)) {
                    return Err(Error::BadTower("element list is not closed".into()));
                }
            }
        }
        Ok(action)
    }

    pub fn space(&self) -> &FilteredSpace {
        &self.space
    }

    pub fn generators(&self) -> &[Vec<PointId>] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, g: usize) -> &[PointId] {
        &self.elements[g]
    }

    pub fn elements(&self) -> &[Vec<PointId>] {
        &self.elements
    }

    pub fn apply(&self, g: usize, x: PointId) -> PointId {
        self.elements[g][x]
    }

    fn compose(&self, a: usize, b: usize) -> Vec<PointId> {
        self.elements[b].iter().map(|&y| self.elements[a][y]).collect()
    }

    /// `a ∘ b`: first `b`, then `a`.
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.index[&self.compose(a, b)]
    }

    pub fn inverse(&self, a: usize) -> usize {
        let mut inv = vec![0; self.space.len()];
        for (x, &y) in self.elements[a].iter().enumerate() {
            inv[y] = x;
        }
        self.index[&inv]
    }

    /// Only the identity fixes every point. Distinct permutations make this
    /// automatic; it is still checked.
    pub fn is_faithful(&self) -> bool {
        self.elements[1..]
            .iter()
            .all(|g| g.iter().enumerate().any(|(x, &y)| x != y))
    }

    /// Sorted indices of the subgroup generated by `gens`.
    pub fn generated(&self, gens: &[usize]) -> Vec<usize> {
        let mut inside = vec![false; self.order()];
        inside[0] = true;
        let mut members = vec![0];
        let mut queue = VecDeque::from([0]);
        while let Some(a) = queue.pop_front() {
            for &g in gens {
                let p = self.mul(a, g);
                if !std::mem::replace(&mut inside[p], true) {
                    members.push(p);
                    queue.push_back(p);
                }
            }
        }
        members.sort_unstable();
        members
    }

    /// Elements moving some point within `e`.
    pub fn small_elements(&self, e: &Entourage) -> Vec<usize> {
        (0..self.order())
            .filter(|&g| (0..self.space.len()).any(|x| e.contains(x, self.apply(g, x))))
            .collect()
    }

    /// The subgroup generated by elements moving some point within `e`.
    pub fn subgroup_for(&self, e: &Entourage) -> Vec<usize> {
        self.generated(&self.small_elements(e))
    }

    pub fn orbits(&self, subgroup: &[usize]) -> Partition {
        let n = self.space.len();
        let mut seen = vec![false; n];
        let mut blocks = Vec::new();
        for x in 0..n {
            if seen[x] {
                continue;
            }
            let mut block: Vec<PointId> = subgroup.iter().map(|&g| self.apply(g, x)).collect();
            block.sort_unstable();
            block.dedup();
            for &y in &block {
                seen[y] = true;
            }
            blocks.push(block);
        }
        Partition { blocks }
    }

    /// `g(e) = e` for every element.
    pub fn is_invariant(&self, e: &Entourage) -> bool {
        self.generators
            .iter()
            .all(|g| e.pairs().all(|(x, y)| e.contains(g[x], g[y])))
    }

    pub fn saturate(&self, e: &Entourage) -> Entourage {
        let pairs = self
            .elements
            .iter()
            .flat_map(|g| e.pairs().map(move |(x, y)| (g[x].min(g[y]), g[x].max(g[y]))));
        Entourage::new(self.space.len(), pairs.collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupAtScale {
    pub scale: usize,
    pub elements: Vec<usize>,
}

pub fn subgroup_at_scale(action: &GroupAction, k: usize) -> Result<SubgroupAtScale> {
    let e = action.space.scale(k)?;
    Ok(SubgroupAtScale {
        scale: k,
        elements: action.subgroup_for(e),
    })
}

/// Smallest invariant entourage containing scale `k`.
pub fn saturate_invariant(action: &GroupAction, k: usize) -> Result<Entourage> {
    Ok(action.saturate(action.space.scale(k)?))
}

/// For one scale `E`: the coarsest `F` that works, or a failing instance at
/// the finest scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleWitness {
    pub scale: usize,
    pub witness: Option<usize>,
    pub counterexample: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdRow {
    pub scale: usize,
    /// `(g, x)` with `g ≠ 1` and `(x, gx)` in the scale.
    pub counterexample: Option<(usize, PointId)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionDiagnosis {
    pub neutral: Vec<ScaleWitness>,
    pub upd_rows: Vec<UpdRow>,
    /// Coarsest scale at which no nontrivial element moves a point within it.
    pub upd_scale: Option<usize>,
    pub bounded_orbits: Vec<ScaleWitness>,
    /// `F` with `g(F) ⊆ E` for all `g`.
    pub equicontinuity: Vec<ScaleWitness>,
    pub invariant_scales: Vec<bool>,
    /// `F` with `g(F) ⊆ E` for all `g` in `G_F`.
    pub ss_equicontinuity: Vec<ScaleWitness>,
}

impl ActionDiagnosis {
    pub fn is_neutral(&self) -> bool {
        self.neutral.iter().all(|r| r.witness.is_some())
    }

    pub fn is_upd(&self) -> bool {
        self.upd_scale.is_some()
    }

    pub fn has_bounded_orbits(&self) -> bool {
        self.bounded_orbits.iter().all(|r| r.witness.is_some())
    }

    pub fn is_equicontinuous(&self) -> bool {
        self.equicontinuity.iter().all(|r| r.witness.is_some())
    }

    pub fn is_ss_equicontinuous(&self) -> bool {
        self.ss_equicontinuity.iter().all(|r| r.witness.is_some())
    }
}

/// Searches `F` from coarsest to finest; `test` returns a failing instance.
fn scale_rows(space: &FilteredSpace, test: impl Fn(&Entourage, &Entourage) -> Option<Vec<usize>>) -> Vec<ScaleWitness> {
    let scales = space.scales();
    scales
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let mut last = None;
            for (l, f) in scales.iter().enumerate() {
                match test(e, f) {
                    None => {
                        return ScaleWitness {
                            scale: j + 1,
                            witness: Some(l + 1),
                            counterexample: None,
                        }
                    }
                    Some(c) => last = Some(c),
                }
            }
            ScaleWitness {
                scale: j + 1,
                witness: None,
                counterexample: last,
            }
        })
        .collect()
}

fn maps_into(action: &GroupAction, elements: &[usize], f: &Entourage, e: &Entourage) -> Option<Vec<usize>> {
    elements.iter().find_map(|&g| {
        f.pairs()
            .find(|&(x, y)| !e.contains(action.apply(g, x), action.apply(g, y)))
            .map(|(x, y)| vec![g, x, y])
    })
}

pub fn diagnose_action(action: &GroupAction) -> ActionDiagnosis {
    let space = &action.space;
    let n = space.len();
    let all: Vec<usize> = (0..action.order()).collect();
    let neutral = scale_rows(space, |e, f| {
        for x in 0..n {
            for y in 0..n {
                let Some(g) = all.iter().copied().find(|&g| f.contains(x, action.apply(g, y))) else {
                    continue;
                };
                if !all.iter().any(|&h| e.contains(action.apply(h, x), y)) {
                    return Some(vec![x, y, g]);
                }
            }
        }
        None
    });
    let upd_rows: Vec<UpdRow> = space
        .scales()
        .iter()
        .enumerate()
        .map(|(k, e)| UpdRow {
            scale: k + 1,
            counterexample: (1..action.order())
                .find_map(|g| (0..n).find(|&x| e.contains(x, action.apply(g, x))).map(|x| (g, x))),
        })
        .collect();
    let upd_scale = upd_rows.iter().find(|r| r.counterexample.is_none()).map(|r| r.scale);
    let bounded_orbits = scale_rows(space, |e, f| {
        let sub = action.subgroup_for(f);
        action
            .orbits(&sub)
            .blocks
            .iter()
            .find_map(|b| {
                b.iter()
                    .flat_map(|&x| b.iter().map(move |&y| (x, y)))
                    .find(|&(x, y)| !e.contains(x, y))
            })
            .map(|(x, y)| vec![x, y])
    });
    let equicontinuity = scale_rows(space, |e, f| maps_into(action, &all, f, e));
    let ss_equicontinuity = scale_rows(space, |e, f| maps_into(action, &action.subgroup_for(f), f, e));
    ActionDiagnosis {
        neutral,
        upd_rows,
        upd_scale,
        bounded_orbits,
        equicontinuity,
        invariant_scales: space.scales().iter().map(|e| action.is_invariant(e)).collect(),
        ss_equicontinuity,
    }
}

/// `X/G_F` with the induced action of `G/G_F`.
#[derive(Clone, Debug)]
pub struct QuotientAction {
    /// Scale the quotient was requested at.
    pub scale: usize,
    /// The scale was not invariant and its saturation was used instead.
    pub saturated: bool,
    pub entourage: Entourage,
    pub subgroup: Vec<usize>,
    pub normal: bool,
    pub orbits: Partition,
    pub orbit_of: Vec<usize>,
    /// Orbits with every original scale pushed forward.
    pub space: FilteredSpace,
    /// Left cosets `gG_F`, ordered by least element.
    pub cosets: Vec<Vec<usize>>,
    pub coset_of: Vec<usize>,
    pub products: Vec<Vec<usize>>,
    /// `induced[c][o]`: orbit reached from orbit `o` by coset `c`.
    pub induced: Vec<Vec<usize>>,
    pub well_defined: bool,
    /// No nontrivial coset moves an orbit within the image of the entourage.
    pub upd: bool,
    pub faithful: bool,
}

impl QuotientAction {
    pub fn group_order(&self) -> usize {
        self.cosets.len()
    }

    /// The induced action as a permutation group on the quotient space,
    /// element `c` being coset `c`.
    pub fn as_action(&self) -> Result<GroupAction> {
        GroupAction::from_elements(&self.space, self.induced.clone())
    }

    /// The quotient map as a filtered map.
    pub fn projection(&self, source: &FilteredSpace) -> Result<FilteredMap> {
        FilteredMap::new(source.clone(), self.space.clone(), self.orbit_of.clone())
    }
}

pub fn pushed_space(space: &FilteredSpace, orbits: &Partition) -> Result<(FilteredSpace, Vec<usize>)> {
    let labels = orbits.labels(space.len());
    let m = orbits.len();
    let names = orbits.blocks.iter().map(|b| block_name(space, b)).collect();
    let scales: Vec<Entourage> = space.scales().iter().map(|e| e.image(&labels, m)).collect();
    let hausdorff = scales.last().is_some_and(Entourage::is_diagonal);
    Ok((FilteredSpace::from_entourages(names, scales, hausdorff)?, labels))
}

fn quotient_by(action: &GroupAction, scale: usize, entourage: Entourage, saturated: bool) -> Result<QuotientAction> {
    let subgroup = action.subgroup_for(&entourage);
    let orbits = action.orbits(&subgroup);
    let (space, orbit_of) = pushed_space(&action.space, &orbits)?;
    let in_sub = {
        let mut v = vec![false; action.order()];
        for &h in &subgroup {
            v[h] = true;
        }
        v
    };
    let normal = action.generators.iter().all(|g| {
        let g = action.index[g];
        let gi = action.inverse(g);
        subgroup.iter().all(|&h| in_sub[action.mul(action.mul(g, h), gi)])
    });
    let mut coset_of = vec![usize::MAX; action.order()];
    let mut cosets = Vec::new();
    for g in 0..action.order() {
        if coset_of[g] != usize::MAX {
            continue;
        }
        let mut c: Vec<usize> = subgroup.iter().map(|&h| action.mul(g, h)).collect();
        c.sort_unstable();
        for &x in &c {
            coset_of[x] = cosets.len();
        }
        cosets.push(c);
    }
    let products = cosets
        .iter()
        .map(|a| cosets.iter().map(|b| coset_of[action.mul(a[0], b[0])]).collect())
        .collect();
    let induced: Vec<Vec<usize>> = cosets
        .iter()
        .map(|c| {
            orbits
                .blocks
                .iter()
                .map(|b| orbit_of[action.apply(c[0], b[0])])
                .collect()
        })
        .collect();
    let well_defined = cosets.iter().zip(&induced).all(|(c, row)| {
        c.iter().all(|&g| {
            orbits
                .blocks
                .iter()
                .zip(row)
                .all(|(b, &o)| b.iter().all(|&x| orbit_of[action.apply(g, x)] == o))
        })
    });
    let pushed = entourage.image(&orbit_of, orbits.len());
    let upd = induced[1..]
        .iter()
        .all(|row| row.iter().enumerate().all(|(o, &p)| !pushed.contains(o, p)));
    let faithful = induced[1..]
        .iter()
        .all(|row| row.iter().enumerate().any(|(o, &p)| o != p));
    Ok(QuotientAction {
        scale,
        saturated,
        entourage,
        subgroup,
        normal,
        orbits,
        orbit_of,
        space,
        cosets,
        coset_of,
        products,
        induced,
        well_defined,
        upd,
        faithful,
    })
}

/// Quotient by `G_{E_k}`, saturating `E_k` first when it is not invariant.
pub fn quotient_at_scale(action: &GroupAction, k: usize) -> Result<QuotientAction> {
    if !action.is_faithful() {
        return Err(Error::NotFaithful);
    }
    let e = action.space.scale(k)?;
    if action.is_invariant(e) {
        quotient_by(action, k, e.clone(), false)
    } else {
        quotient_by(action, k, action.saturate(e), true)
    }
}

/// Compatible towers of groups acting on spaces. Bond `i` maps level `i + 1`
/// to level `i`, on points and on element indices.
#[derive(Clone, Debug)]
pub struct ActionTower {
    pub levels: Vec<GroupAction>,
    pub space_bonds: Vec<Vec<PointId>>,
    pub group_bonds: Vec<Vec<usize>>,
}

impl ActionTower {
    pub fn new(levels: Vec<GroupAction>, space_bonds: Vec<Vec<PointId>>, group_bonds: Vec<Vec<usize>>) -> Result<Self> {
        if levels.is_empty() || space_bonds.len() + 1 != levels.len() || group_bonds.len() + 1 != levels.len() {
            return Err(Error::BadTower("need n actions and n - 1 bonds of each kind".into()));
        }
        for i in 0..space_bonds.len() {
            let (lo, hi) = (&levels[i], &levels[i + 1]);
            let (phi, psi) = (&space_bonds[i], &group_bonds[i]);
            if phi.len() != hi.space.len()
                || phi.iter().any(|&y| y >= lo.space.len())
                || psi.len() != hi.order()
                || psi.iter().any(|&g| g >= lo.order())
            {
                return Err(Error::BadTower(format!("bond {} has the wrong shape", i + 1)));
            }
            let hom = (0..hi.order()).all(|a| (0..hi.order()).all(|b| psi[hi.mul(a, b)] == lo.mul(psi[a], psi[b])));
            let equivariant =
                (0..hi.order()).all(|g| (0..hi.space.len()).all(|x| phi[hi.apply(g, x)] == lo.apply(psi[g], phi[x])));
            if !hom || !equivariant {
                return Err(Error::BadTower(format!("bond {} is not compatible", i + 1)));
            }
        }
        Ok(ActionTower {
            levels,
            space_bonds,
            group_bonds,
        })
    }

    pub fn constant(action: &GroupAction, levels: usize) -> Self {
        let points: Vec<PointId> = (0..action.space.len()).collect();
        let elems: Vec<usize> = (0..action.order()).collect();
        let k = levels.saturating_sub(1);
        Self::new(vec![action.clone(); levels], vec![points; k], vec![elems; k]).expect("identity bonds")
    }

    pub fn space_tower(&self) -> Result<SpaceTower> {
        SpaceTower::new(
            self.levels.iter().map(|a| a.space.clone()).collect(),
            self.space_bonds.clone(),
        )
    }

    /// Groups as discrete spaces, for thread enumeration.
    pub fn group_tower(&self) -> Result<SpaceTower> {
        let discrete = |a: &GroupAction| {
            let names = (0..a.order()).map(|g| g.to_string()).collect();
            FilteredSpace::from_edges(names, vec![vec![]], true)
        };
        SpaceTower::new(
            self.levels.iter().map(discrete).collect::<Result<_>>()?,
            self.group_bonds.clone(),
        )
    }
}

impl TowerGroup for ActionTower {
    type Elem = usize;

    fn levels(&self) -> usize {
        self.levels.len()
    }

    fn identity(&self, _level: usize) -> usize {
        0
    }

    fn mul(&self, level: usize, a: &usize, b: &usize) -> usize {
        self.levels[level].mul(*a, *b)
    }

    fn bond(&self, level: usize, a: &usize) -> usize {
        self.group_bonds[level][*a]
    }
}

/// The limit group acting on the limit space, with the group threads.
pub struct LimitAction {
    pub action: GroupAction,
    pub group_threads: Vec<Vec<usize>>,
    pub point_threads: Vec<Vec<PointId>>,
}

pub fn assemble_limit_action(tower: &ActionTower, product_bound: usize) -> Result<LimitAction> {
    let groups = assemble_limit_space(&tower.group_tower()?, product_bound)?;
    let points = assemble_limit_space(&tower.space_tower()?, product_bound)?;
    let index = points.thread_index();
    let mut threads = groups.threads;
    // Identity thread first so the element list starts with the identity.
    threads.sort_by_key(|t| t.iter().any(|&g| g != 0));
    let elements = threads
        .iter()
        .map(|g| {
            points
                .threads
                .iter()
                .map(|x| {
                    let moved: Vec<PointId> = g
                        .iter()
                        .zip(x)
                        .enumerate()
                        .map(|(i, (&gi, &xi))| tower.levels[i].apply(gi, xi))
                        .collect();
                    index[&moved]
                })
                .collect()
        })
        .collect();
    Ok(LimitAction {
        action: GroupAction::from_elements(&points.space, elements)?,
        group_threads: threads,
        point_threads: points.threads,
    })
}

/// Orbits of the whole group with pushed-forward scales.
pub fn orbit_projection(action: &GroupAction) -> Result<FilteredMap> {
    let all: Vec<usize> = (0..action.order()).collect();
    let (space, labels) = pushed_space(&action.space, &action.orbits(&all))?;
    FilteredMap::new(action.space.clone(), space, labels)
}

/// Replays the limit lemmas on a compatible tower of actions.
pub fn limit_action_verify(tower: &ActionTower, product_bound: usize) -> Result<LimitMapReport> {
    let groups = tower.group_tower()?;
    let glimit = assemble_limit_space(&groups, product_bound)?;
    let strong_ml = strong_ml_check(&groups, &glimit).iter().all(|r| r.witness.is_some());
    if !strong_ml {
        return Err(Error::HypothesisUnmet("strong ML".into()));
    }
    let limit = assemble_limit_action(tower, product_bound)?;
    let levels: Vec<ActionDiagnosis> = tower.levels.iter().map(diagnose_action).collect();
    let diag = diagnose_action(&limit.action);
    let neutral = levels.iter().all(ActionDiagnosis::is_neutral);
    let bounded = levels.iter().all(ActionDiagnosis::has_bounded_orbits);
    let mut hypotheses = BTreeMap::new();
    hypotheses.insert("neutral".to_owned(), neutral);
    hypotheses.insert("ss_bounded_orbits".to_owned(), bounded);
    hypotheses.insert(
        "gucm".to_owned(),
        neutral && bounded && tower.levels.iter().all(|a| a.space.hausdorff()),
    );
    let mut conclusions = BTreeMap::new();
    conclusions.insert("neutral".to_owned(), diag.is_neutral());
    conclusions.insert("ss_bounded_orbits".to_owned(), diag.has_bounded_orbits());
    conclusions.insert("gucm".to_owned(), verify_gucm(&orbit_projection(&limit.action)?).passed);
    let consistent = hypotheses.iter().all(|(k, &h)| !h || conclusions[k]);
    Ok(LimitMapReport {
        strong_ml,
        hypotheses,
        conclusions,
        consistent,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionTowerReport {
    /// Scale whose saturation gives each tower level.
    pub basis: Vec<usize>,
    pub group_sizes: Vec<usize>,
    pub space_sizes: Vec<usize>,
    /// `g ↦ ([g])` is an isomorphism onto the thread group.
    pub group_isomorphism: bool,
    /// `x ↦ ([x])` is a uniform equivalence onto the thread space.
    pub space_equivalence: bool,
    /// Orbits of the limit match the limit of orbit spaces.
    pub quotient_commutes: bool,
    /// Threads rebuilt by the telescoping recursion.
    pub telescoped: usize,
    pub bonds_surjective: bool,
    pub levels_upd: bool,
    pub passed: bool,
}

/// Expresses the action as the limit of the actions of `G/G_E` on `X/G_E`
/// over a saturated invariant basis, and checks the four conclusions.
pub fn action_tower_verify(action: &GroupAction, product_bound: usize) -> Result<ActionTowerReport> {
    let space = &action.space;
    if !action.is_faithful() {
        return Err(Error::HypothesisUnmet("faithful".into()));
    }
    if !space.hausdorff() {
        return Err(Error::HypothesisUnmet("hausdorff".into()));
    }
    let diag = diagnose_action(action);
    if !diag.is_equicontinuous() {
        return Err(Error::HypothesisUnmet("uniformly equicontinuous".into()));
    }
    if !diag.has_bounded_orbits() {
        return Err(Error::HypothesisUnmet("small scale bounded orbits".into()));
    }
    let mut basis = Vec::new();
    let mut entourages: Vec<Entourage> = Vec::new();
    for row in &diag.equicontinuity {
        let l = row.witness.expect("checked above");
        let b = action.saturate(space.scale(l)?);
        if entourages.last() != Some(&b) {
            entourages.push(b);
            basis.push(l);
        }
    }
    let quotients: Vec<QuotientAction> = basis
        .iter()
        .zip(&entourages)
        .map(|(&l, b)| quotient_by(action, l, b.clone(), !diag.invariant_scales[l - 1]))
        .collect::<Result<_>>()?;
    let levels: Vec<GroupAction> = quotients.iter().map(QuotientAction::as_action).collect::<Result<_>>()?;
    let space_bonds: Vec<Vec<PointId>> = quotients
        .windows(2)
        .map(|w| w[1].orbits.blocks.iter().map(|b| w[0].orbit_of[b[0]]).collect())
        .collect();
    let group_bonds: Vec<Vec<usize>> = quotients
        .windows(2)
        .map(|w| w[1].cosets.iter().map(|c| w[0].coset_of[c[0]]).collect())
        .collect();
    let tower = ActionTower::new(levels, space_bonds, group_bonds)?;
    let n = tower.levels.len();

    let groups = tower.group_tower()?;
    let glimit = assemble_limit_space(&groups, product_bound)?;
    let gindex = glimit.thread_index();
    let g_threads: Vec<Option<usize>> = (0..action.order())
        .map(|g| {
            gindex
                .get(&quotients.iter().map(|q| q.coset_of[g]).collect::<Vec<_>>())
                .copied()
        })
        .collect();
    let group_isomorphism = {
        let mut hit = vec![false; glimit.threads.len()];
        let mapped = g_threads
            .iter()
            .all(|t| t.is_some_and(|t| !std::mem::replace(&mut hit[t], true)));
        let hom = (0..action.order()).all(|a| {
            (0..action.order()).all(|b| {
                let ab = &glimit.threads[g_threads[action.mul(a, b)].unwrap_or(0)];
                let (ta, tb) = (
                    &glimit.threads[g_threads[a].unwrap_or(0)],
                    &glimit.threads[g_threads[b].unwrap_or(0)],
                );
                (0..n).all(|i| ab[i] == tower.levels[i].mul(ta[i], tb[i]))
            })
        });
        mapped && hit.iter().all(|&h| h) && hom
    };

    let xlimit = assemble_limit_space(&tower.space_tower()?, product_bound)?;
    let xindex = xlimit.thread_index();
    let x_threads: Option<Vec<usize>> = (0..space.len())
        .map(|x| {
            xindex
                .get(&quotients.iter().map(|q| q.orbit_of[x]).collect::<Vec<_>>())
                .copied()
        })
        .collect();
    let space_equivalence = x_threads
        .as_ref()
        .is_some_and(|m| uniform_equivalence(space, &xlimit.space, m).holds());

    // Orbit spaces of each level and their limit.
    let level_orbits: Vec<FilteredMap> = tower.levels.iter().map(orbit_projection).collect::<Result<_>>()?;
    let orbit_bonds: Vec<Vec<PointId>> = (0..n.saturating_sub(1))
        .map(|i| {
            let hi = &level_orbits[i + 1];
            let blocks = hi.target().len();
            (0..blocks)
                .map(|o| {
                    let x = (0..hi.source().len())
                        .find(|&x| hi.apply(x) == o)
                        .expect("orbit is nonempty");
                    level_orbits[i].apply(tower.space_bonds[i][x])
                })
                .collect()
        })
        .collect();
    let orbit_tower = SpaceTower::new(level_orbits.iter().map(|f| f.target().clone()).collect(), orbit_bonds)?;
    let olimit = assemble_limit_space(&orbit_tower, product_bound)?;
    let global = orbit_projection(action)?;
    let oindex = olimit.thread_index();
    let orbit_map: Option<Vec<usize>> = (0..global.target().len())
        .map(|o| {
            let x = (0..space.len())
                .find(|&x| global.apply(x) == o)
                .expect("orbit is nonempty");
            let t: Vec<usize> = (0..n)
                .map(|i| level_orbits[i].apply(quotients[i].orbit_of[x]))
                .collect();
            oindex.get(&t).copied()
        })
        .collect();
    let mut quotient_commutes = orbit_map
        .as_ref()
        .is_some_and(|m| uniform_equivalence(global.target(), &olimit.space, m).holds());
    let mut telescoped = 0;
    for t in &olimit.threads {
        let reps: Vec<PointId> = (0..n)
            .map(|i| {
                (0..tower.levels[i].space.len())
                    .find(|&x| level_orbits[i].apply(x) == t[i])
                    .expect("orbit is nonempty")
            })
            .collect();
        let steps: Option<Vec<usize>> = (0..n - 1)
            .map(|i| {
                let target = tower.space_bonds[i][reps[i + 1]];
                (0..tower.levels[i].order()).find(|&g| tower.levels[i].apply(g, reps[i]) == target)
            })
            .collect();
        let Some(steps) = steps else {
            quotient_commutes = false;
            continue;
        };
        let k = telescope_backward(&tower, &steps);
        let moved: Vec<PointId> = (0..n).map(|i| tower.levels[i].apply(k[i], reps[i])).collect();
        if (0..n - 1).all(|i| tower.space_bonds[i][moved[i + 1]] == moved[i]) {
            telescoped += 1;
        } else {
            quotient_commutes = false;
        }
    }

    let bonds_surjective = tower.group_bonds.iter().zip(&tower.levels).all(|(psi, lo)| {
        let mut hit = vec![false; lo.order()];
        psi.iter().for_each(|&g| hit[g] = true);
        hit.iter().all(|&h| h)
    });
    let levels_upd = quotients
        .iter()
        .all(|q| q.upd && q.faithful && q.normal && q.well_defined);
    let passed = group_isomorphism && space_equivalence && quotient_commutes && bonds_surjective && levels_upd;
    Ok(ActionTowerReport {
        basis,
        group_sizes: quotients.iter().map(QuotientAction::group_order).collect(),
        space_sizes: quotients.iter().map(|q| q.space.len()).collect(),
        group_isomorphism,
        space_equivalence,
        quotient_commutes,
        telescoped,
        bonds_surjective,
        levels_upd,
        passed,
    })
}

/// The antipodal involution on a six-cycle at radii 3, 1 and 0.5.
pub fn antipodal_hexagon() -> GroupAction {
    let space = FilteredSpace::from_metric(&crate::space::cycle_metric(6), &[3.0, 1.0, 0.5]).expect("valid radii");
    close_group(&space, vec![vec![3, 4, 5, 0, 1, 2]], DEFAULT_GROUP_BOUND).expect("a permutation")
}
