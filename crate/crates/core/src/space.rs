//! Finite filtered spaces: a point set with a descending chain of symmetric
//! reflexive relations, together with chains and chain components.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PointId = usize;

/// A symmetric reflexive relation on `0..n`, stored as unordered off-diagonal
/// pairs `(a, b)` with `a < b`; the diagonal is implicit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entourage {
    n: usize,
    pairs: BTreeSet<(PointId, PointId)>,
    neighbors: Vec<Vec<PointId>>,
}

impl Entourage {
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (PointId, PointId)>) -> Self {
        let pairs: BTreeSet<_> = pairs
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| {
                assert!(a < n && b < n, "pair ({a}, {b}) outside 0..{n}");
                (a.min(b), a.max(b))
            })
            .collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &pairs {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Entourage { n, pairs, neighbors }
    }

    pub fn diagonal(n: usize) -> Self {
        Self::new(n, std::iter::empty())
    }

    pub fn full(n: usize) -> Self {
        Self::new(n, (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))))
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn contains(&self, a: PointId, b: PointId) -> bool {
        a == b || self.pairs.contains(&(a.min(b), a.max(b)))
    }

    /// Points related to `a`, excluding `a`, ascending.
    pub fn neighbors(&self, a: PointId) -> &[PointId] {
        &self.neighbors[a]
    }

    /// Off-diagonal unordered pairs, ascending.
    pub fn pairs(&self) -> impl Iterator<Item = (PointId, PointId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_diagonal(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_subset(&self, other: &Entourage) -> bool {
        self.n == other.n && self.pairs.is_subset(&other.pairs)
    }

    pub fn intersection(&self, other: &Entourage) -> Entourage {
        Entourage::new(self.n, self.pairs.intersection(&other.pairs).copied())
    }

    pub fn union(&self, other: &Entourage) -> Entourage {
        Entourage::new(self.n, self.pairs.union(&other.pairs).copied())
    }

    /// `{(f a, f b) : (a, b) in self}` on a codomain of size `m`.
    pub fn image(&self, f: &[PointId], m: usize) -> Entourage {
        Entourage::new(m, self.pairs().map(|(a, b)| (f[a], f[b])))
    }

    /// `{(a, b) : (f a, f b) in self}` on a domain of size `f.len()`.
    pub fn preimage(&self, f: &[PointId]) -> Entourage {
        let n = f.len();
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if self.contains(f[a], f[b]) {
                    pairs.push((a, b));
                }
            }
        }
        Entourage::new(n, pairs)
    }

    /// Restriction to the listed points, relabeled `0..points.len()`.
    pub fn restrict(&self, points: &[PointId]) -> Entourage {
        let mut pairs = Vec::new();
        for (i, &a) in points.iter().enumerate() {
            for (j, &b) in points.iter().enumerate().skip(i + 1) {
                if self.contains(a, b) {
                    pairs.push((i, j));
                }
            }
        }
        Entourage::new(points.len(), pairs)
    }

    /// Pairs with both ends in `set`, labels unchanged.
    pub fn restrict_within(&self, set: &[PointId]) -> Entourage {
        Entourage::new(self.n, self.pairs().filter(|(a, b)| set.contains(a) && set.contains(b)))
    }

    /// True iff every two points of `set` are related.
    pub fn bounds(&self, set: &[PointId]) -> bool {
        set.iter()
            .enumerate()
            .all(|(i, &a)| set[i + 1..].iter().all(|&b| self.contains(a, b)))
    }
}

/// A finite point set with scales `E_1 ⊇ E_2 ⊇ ... ⊇ E_m`, index 1 coarsest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilteredSpace {
    names: Vec<String>,
    scales: Vec<Entourage>,
    hausdorff: bool,
}

impl FilteredSpace {
    /// Builds a space from unordered edge lists (symmetric and reflexive by
    /// construction). Only nesting and the hausdorff flag are checked.
    pub fn from_edges(names: Vec<String>, scales: Vec<Vec<(PointId, PointId)>>, hausdorff: bool) -> Result<Self> {
        let n = names.len();
        if let Some(&(a, b)) = scales.iter().flatten().find(|(a, b)| *a >= n || *b >= n) {
            return Err(Error::UnknownPoint(format!("#{}", a.max(b))));
        }
        let scales = scales.into_iter().map(|s| Entourage::new(n, s)).collect();
        Self::from_entourages(names, scales, hausdorff)
    }

    pub fn from_entourages(names: Vec<String>, scales: Vec<Entourage>, hausdorff: bool) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::NoScales);
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicatePoint(name.clone()));
            }
        }
        for (k, w) in scales.windows(2).enumerate() {
            if !w[1].is_subset(&w[0]) {
                return Err(Error::NotNested(k + 1));
            }
        }
        if hausdorff && !scales.last().expect("nonempty").is_diagonal() {
            return Err(Error::HausdorffViolated);
        }
        Ok(FilteredSpace {
            names,
            scales,
            hausdorff,
        })
    }

    /// Checks raw ordered-pair relations and builds the space. The input must
    /// already be reflexive, symmetric and nested; nothing is repaired.
    pub fn validate(points: Vec<String>, relations: &[Vec<(String, String)>], hausdorff: bool) -> Result<Self> {
        let index: HashMap<&str, PointId> = points.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        if index.len() != points.len() {
            let mut seen = BTreeSet::new();
            let dup = points.iter().find(|p| !seen.insert(p.as_str())).expect("duplicate");
            return Err(Error::DuplicatePoint(dup.clone()));
        }
        let n = points.len();
        let mut scales = Vec::with_capacity(relations.len());
        for (k, rel) in relations.iter().enumerate() {
            let mut ordered = BTreeSet::new();
            for (a, b) in rel {
                let ia = *index.get(a.as_str()).ok_or_else(|| Error::UnknownPoint(a.clone()))?;
                let ib = *index.get(b.as_str()).ok_or_else(|| Error::UnknownPoint(b.clone()))?;
                ordered.insert((ia, ib));
            }
            if (0..n).any(|x| !ordered.contains(&(x, x))) {
                return Err(Error::NonReflexive(k + 1));
            }
            if ordered.iter().any(|&(a, b)| !ordered.contains(&(b, a))) {
                return Err(Error::NonSymmetric(k + 1));
            }
            scales.push(Entourage::new(n, ordered));
        }
        Self::from_entourages(points, scales, hausdorff)
    }

    /// Metric filtration `E_k = {(x, y) : d(x, y) <= r_k}`; hausdorff iff the
    /// last radius is below the smallest positive distance.
    pub fn from_metric(distances: &[Vec<f64>], radii: &[f64]) -> Result<Self> {
        let n = distances.len();
        if distances.iter().any(|row| row.len() != n) {
            return Err(Error::NonSquareMatrix);
        }
        for (i, row) in distances.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(Error::AsymmetricMatrix);
            }
            for (j, &d) in row.iter().enumerate().take(i) {
                if d != distances[j][i] || !d.is_finite() || d < 0.0 {
                    return Err(Error::AsymmetricMatrix);
                }
            }
        }
        if radii.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::NegativeRadius);
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::NonDecreasingRadii);
        }
        let scales: Vec<Entourage> = radii
            .iter()
            .map(|&r| {
                let pairs = (0..n)
                    .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| distances[i][j] <= r);
                Entourage::new(n, pairs)
            })
            .collect();
        let min_positive = distances
            .iter()
            .flatten()
            .copied()
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let hausdorff = radii.last().is_some_and(|r| *r < min_positive);
        let names = (0..n).map(|i| i.to_string()).collect();
        Self::from_entourages(names, scales, hausdorff)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, p: PointId) -> &str {
        &self.names[p]
    }

    pub fn point(&self, name: &str) -> Result<PointId> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownPoint(name.to_string()))
    }

    pub fn scale_count(&self) -> usize {
        self.scales.len()
    }

    pub fn hausdorff(&self) -> bool {
        self.hausdorff
    }

    /// Scale `k`, 1-based.
    pub fn scale(&self, k: usize) -> Result<&Entourage> {
        if k == 0 || k > self.scales.len() {
            return Err(Error::BadScale(k));
        }
        Ok(&self.scales[k - 1])
    }

    pub fn scales(&self) -> &[Entourage] {
        &self.scales
    }

    pub fn finest(&self) -> &Entourage {
        self.scales.last().expect("at least one scale")
    }

    pub(crate) fn check_point(&self, p: PointId) -> Result<()> {
        if p < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownPoint(format!("#{p}")))
        }
    }

    pub fn is_chain(&self, k: usize, seq: &[PointId]) -> Result<bool> {
        let e = self.scale(k)?;
        if seq.is_empty() {
            return Err(Error::EmptyChain);
        }
        for &p in seq {
            self.check_point(p)?;
        }
        Ok(seq.windows(2).all(|w| e.contains(w[0], w[1])))
    }

    /// Connected components of the graph `(points, E_k)`.
    pub fn chain_components(&self, k: usize) -> Result<Partition> {
        let e = self.scale(k)?;
        Ok(components_of(self.len(), |a| e.neighbors(a).to_vec()))
    }

    /// Subspace on `points` (in the given order) with restricted scales.
    pub fn restrict(&self, points: &[PointId]) -> FilteredSpace {
        let names = points.iter().map(|&p| self.names[p].clone()).collect();
        let scales = self.scales.iter().map(|e| e.restrict(points)).collect();
        let hausdorff = self.hausdorff;
        FilteredSpace {
            names,
            scales,
            hausdorff,
        }
    }

    /// Same points with the scales replaced; nesting is re-checked.
    pub fn with_scales(&self, scales: Vec<Entourage>) -> Result<FilteredSpace> {
        let hausdorff = scales.last().is_some_and(Entourage::is_diagonal);
        Self::from_entourages(self.names.clone(), scales, hausdorff)
    }
}

/// Connected components of a graph on `0..n`, blocks ordered by least member.
pub(crate) fn components_of<F>(n: usize, neighbors: F) -> Partition
where
    F: Fn(PointId) -> Vec<PointId>,
{
    let mut label = vec![usize::MAX; n];
    let mut blocks = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut block = vec![start];
        label[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for b in neighbors(a) {
                if label[b] == usize::MAX {
                    label[b] = id;
                    block.push(b);
                    queue.push_back(b);
                }
            }
        }
        block.sort_unstable();
        blocks.push(block);
    }
    Partition { blocks }
}

/// A chain at scale `scale`: consecutive points are `E_scale`-related.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Chain {
    pub scale: usize,
    pub seq: Vec<PointId>,
}

impl Chain {
    pub fn new(space: &FilteredSpace, scale: usize, seq: Vec<PointId>) -> Result<Self> {
        if !space.is_chain(scale, &seq)? {
            return Err(Error::NotAChain(scale));
        }
        Ok(Chain { scale, seq })
    }

    pub fn constant(scale: usize, p: PointId) -> Self {
        Chain { scale, seq: vec![p] }
    }

    pub fn start(&self) -> PointId {
        self.seq[0]
    }

    pub fn end(&self) -> PointId {
        *self.seq.last().expect("chains are nonempty")
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn is_loop(&self) -> bool {
        self.start() == self.end()
    }

    pub fn inverse(&self) -> Chain {
        let mut seq = self.seq.clone();
        seq.reverse();
        Chain { scale: self.scale, seq }
    }

    /// Concatenation keeping one copy of the shared point.
    pub fn concat(&self, other: &Chain) -> Result<Chain> {
        if self.scale != other.scale {
            return Err(Error::ScaleMismatch);
        }
        if self.end() != other.start() {
            return Err(Error::EndpointMismatch);
        }
        let mut seq = self.seq.clone();
        seq.extend_from_slice(&other.seq[1..]);
        Ok(Chain { scale: self.scale, seq })
    }

    /// The same sequence regarded at another scale (no check).
    pub fn at_scale(&self, scale: usize) -> Chain {
        Chain {
            scale,
            seq: self.seq.clone(),
        }
    }
}

/// Disjoint blocks covering a carrier set; blocks sorted, ordered by least
/// member.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub blocks: Vec<Vec<PointId>>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `labels[x]` = index of the block containing `x`, for a carrier `0..n`.
    pub fn labels(&self, n: usize) -> Vec<usize> {
        let mut labels = vec![usize::MAX; n];
        for (i, b) in self.blocks.iter().enumerate() {
            for &x in b {
                labels[x] = i;
            }
        }
        labels
    }

    pub fn block_of(&self, x: PointId) -> Option<usize> {
        self.blocks.iter().position(|b| b.binary_search(&x).is_ok())
    }

    /// Every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.blocks.iter().all(|b| {
            let target = coarser.block_of(b[0]);
            target.is_some() && b.iter().all(|&x| coarser.block_of(x) == target)
        })
    }

    /// Blocks pairwise disjoint with union exactly `0..n`.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for b in &self.blocks {
            if b.is_empty() {
                return false;
            }
            for &x in b {
                if x >= n || seen[x] {
                    return false;
                }
                seen[x] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Symmetric `n`-cycle metric `min(|i - j|, n - |i - j|)`.
pub fn cycle_metric(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = i.abs_diff(j);
                    d.min(n - d) as f64
                })
                .collect()
        })
        .collect()
}

/// Points `0..n` on a line with unit spacing.
pub fn line_metric(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| i.abs_diff(j) as f64).collect()).collect()
}
