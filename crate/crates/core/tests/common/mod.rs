#![allow(dead_code)]

use std::collections::VecDeque;

use proptest::prelude::*;
use unicov::quotient::FilteredMap;
use unicov::{Chain, FilteredSpace, PointId};

/// Random nested scales on `n` points: each pair survives to a random depth.
pub fn space_with(n: usize, m: usize, hausdorff: bool) -> impl Strategy<Value = FilteredSpace> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
    proptest::collection::vec(0usize..=m, pairs.len()).prop_map(move |levels| {
        let mut scales: Vec<Vec<(usize, usize)>> = (1..=m)
            .map(|k| {
                pairs
                    .iter()
                    .zip(&levels)
                    .filter(|(_, &l)| l >= k)
                    .map(|(p, _)| *p)
                    .collect()
            })
            .collect();
        if hausdorff {
            scales.push(Vec::new());
        }
        let names = (0..n).map(|i| format!("p{i}")).collect();
        FilteredSpace::from_edges(names, scales, hausdorff).unwrap()
    })
}

pub fn random_space() -> impl Strategy<Value = FilteredSpace> {
    (2usize..7, 1usize..4).prop_flat_map(|(n, m)| space_with(n, m, false))
}

/// Random uniformly continuous maps; discontinuous draws are rejected.
pub fn random_map() -> impl Strategy<Value = FilteredMap> {
    (2usize..6, 1usize..4, 1usize..4, 1usize..3)
        .prop_flat_map(|(n, m, t, s)| {
            (
                space_with(n, m, false),
                space_with(t, s, false),
                proptest::collection::vec(0usize..t, n),
            )
        })
        .prop_filter_map("continuous", |(x, y, a)| FilteredMap::new(x, y, a).ok())
}

pub fn bfs_path(space: &FilteredSpace, k: usize, a: PointId, b: PointId) -> Option<Vec<PointId>> {
    let e = space.scale(k).ok()?;
    let mut prev = vec![usize::MAX; space.len()];
    prev[a] = a;
    let mut queue = VecDeque::from([a]);
    while let Some(x) = queue.pop_front() {
        for &y in e.neighbors(x) {
            if prev[y] == usize::MAX {
                prev[y] = x;
                queue.push_back(y);
            }
        }
    }
    if prev[b] == usize::MAX {
        return None;
    }
    let mut path = vec![b];
    while *path.last().unwrap() != a {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some(path)
}

/// A loop at `base`: a random walk followed by a shortest way home.
pub fn random_loop(space: &FilteredSpace, k: usize, base: PointId, steps: &[usize]) -> Chain {
    let e = space.scale(k).unwrap();
    let mut seq = vec![base];
    for s in steps {
        let cur = *seq.last().unwrap();
        let nb = e.neighbors(cur);
        if !nb.is_empty() {
            seq.push(nb[s % nb.len()]);
        }
    }
    let back = bfs_path(space, k, *seq.last().unwrap(), base).unwrap();
    seq.extend_from_slice(&back[1..]);
    Chain::new(space, k, seq).unwrap()
}
