//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero when any criterion fails.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unicov::action::{action_tower_verify, antipodal_hexagon, diagnose_action, quotient_at_scale};
use unicov::cover::{build_cover, verify_endpoint_ucm, UcmVerdict};
use unicov::linalg::{is_surjective_onto, smith_normal_form, IntMatrix};
use unicov::quotient::{
    check_approx_uniqueness, check_chain_lifting, check_generates, factor_and_verify, FactorVerdict, FilteredMap,
    UniquenessMode,
};
use unicov::rips::{bonding_h1_map, critical_scales, h1_at_scale, HomotopyBudget};
use unicov::space::cycle_metric;
use unicov::tower::{
    lim1_verdict, quotient_tower_reconstruct, telescoping_holds, telescoping_solve, uniform_equivalence, AbGroup,
    Lim1Certificate, Lim1Verdict, SolveMode, Stabilization, TowerAb, DEFAULT_PRODUCT_BOUND,
};
use unicov::{Chain, Error, FilteredSpace, PointId};

type Outcome = Result<String, String>;

fn c6(radii: &[f64]) -> FilteredSpace {
    FilteredSpace::from_metric(&cycle_metric(6), radii).unwrap()
}

fn c3(radii: &[f64]) -> FilteredSpace {
    FilteredSpace::from_metric(&cycle_metric(3), radii).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Integer Smith form over i64, kept separate from the library's.

#[allow(clippy::needless_range_loop)]
fn smith_diagonal(mut a: Vec<Vec<i64>>) -> Vec<i64> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut diag = Vec::new();
    for t in 0..rows.min(cols) {
        loop {
            let pivot = (t..rows)
                .flat_map(|i| (t..cols).map(move |j| (i, j)))
                .filter(|&(i, j)| a[i][j] != 0)
                .min_by_key(|&(i, j)| a[i][j].abs());
            let Some((pi, pj)) = pivot else {
                return diag;
            };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            let p = a[t][t];
            let mut clean = true;
            for i in t + 1..rows {
                let q = a[i][t] / p;
                for j in t..cols {
                    a[i][j] -= q * a[t][j];
                }
                clean &= a[i][t] == 0;
            }
            for j in t + 1..cols {
                let q = a[t][j] / p;
                for i in t..rows {
                    a[i][j] -= q * a[i][t];
                }
                clean &= a[t][j] == 0;
            }
            if !clean {
                continue;
            }
            // Divisibility: fold a row with a non-multiple into the pivot row.
            if let Some(i) = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % p != 0)) {
                for j in t..cols {
                    a[t][j] += a[i][j];
                }
                continue;
            }
            diag.push(p.abs());
            break;
        }
    }
    diag
}

/// Rank and torsion of H1 of the Rips complex at radius `r` on the hexagon,
/// from explicitly listed boundary matrices.
fn hexagon_h1_oracle(r: usize) -> (usize, Vec<i64>) {
    let d = |a: usize, b: usize| a.abs_diff(b).min(6 - a.abs_diff(b));
    let edges: Vec<(usize, usize)> = (0..6)
        .flat_map(|a| (a + 1..6).map(move |b| (a, b)))
        .filter(|&(a, b)| d(a, b) <= r)
        .collect();
    let triangles: Vec<[usize; 3]> = (0..6)
        .flat_map(|a| (a + 1..6).flat_map(move |b| (b + 1..6).map(move |c| [a, b, c])))
        .filter(|&[a, b, c]| d(a, b) <= r && d(b, c) <= r && d(a, c) <= r)
        .collect();
    let mut d1 = vec![vec![0i64; edges.len()]; 6];
    for (e, &(a, b)) in edges.iter().enumerate() {
        d1[a][e] = -1;
        d1[b][e] = 1;
    }
    let edge_index: HashMap<(usize, usize), usize> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut d2 = vec![vec![0i64; triangles.len()]; edges.len()];
    for (t, &[a, b, c]) in triangles.iter().enumerate() {
        d2[edge_index[&(b, c)]][t] += 1;
        d2[edge_index[&(a, c)]][t] -= 1;
        d2[edge_index[&(a, b)]][t] += 1;
    }
    let rank1 = smith_diagonal(d1).len();
    let s2 = smith_diagonal(d2);
    let rank = edges.len() - rank1 - s2.len();
    (rank, s2.into_iter().filter(|&x| x > 1).collect())
}

fn criterion_1() -> Outcome {
    let space = c6(&[2.0, 1.0]);
    let mut found = Vec::new();
    for (k, r) in [(1, 2), (2, 1)] {
        let h1 = h1_at_scale(&space, k).map_err(|e| e.to_string())?;
        let (rank, torsion) = hexagon_h1_oracle(r);
        let torsion: Vec<BigInt> = torsion.into_iter().map(BigInt::from).collect();
        ensure(h1.rank == rank && h1.torsion == torsion, || {
            format!("scale {k}: library {h1}, oracle rank {rank} torsion {torsion:?}")
        })?;
        found.push(h1.to_string());
    }
    ensure(
        hexagon_h1_oracle(1) == (1, vec![]) && hexagon_h1_oracle(2) == (0, vec![]),
        || "oracle disagrees with Z then trivial".into(),
    )?;
    let bond = bonding_h1_map(&space, 2, 1).map_err(|e| e.to_string())?;
    ensure(bond.is_zero(), || format!("bonding map {bond:?} is not zero"))?;
    let critical = critical_scales(&space).map_err(|e| e.to_string())?;
    ensure(critical == vec![(1, 2)], || format!("critical scales {critical:?}"))?;
    Ok(format!(
        "H1 = {} (radius 2), {} (radius 1); zero bond; critical [(1,2)]",
        found[0], found[1]
    ))
}

// ---------------------------------------------------------------------------
// Chains from the basepoint up to a length bound, identified by single-point
// insertions and deletions that keep the endpoints and the chain property.

struct ChainClasses {
    chains: Vec<Vec<PointId>>,
    parent: Vec<usize>,
}

impl ChainClasses {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn enumerate(space: &FilteredSpace, k: usize, max_points: usize) -> Self {
        let e = space.scale(k).unwrap();
        let mut chains = vec![vec![0]];
        let mut layer = vec![vec![0]];
        for _ in 1..max_points {
            let mut next = Vec::new();
            for c in &layer {
                let last = *c.last().unwrap();
                for y in (0..space.len()).filter(|&y| e.contains(last, y)) {
                    let mut d = c.clone();
                    d.push(y);
                    next.push(d);
                }
            }
            chains.extend(next.iter().cloned());
            layer = next;
        }
        let index: HashMap<Vec<PointId>, usize> = chains.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        let mut classes = ChainClasses {
            parent: (0..chains.len()).collect(),
            chains: chains.clone(),
        };
        for (i, c) in chains.iter().enumerate() {
            let last = c.len() - 1;
            for p in 0..c.len() {
                // Interior points may go when their neighbours are related;
                // an end point only when it repeats its neighbour.
                let removable = match p {
                    0 => last > 0 && c[1] == c[0],
                    p if p == last => c[p - 1] == c[p],
                    p => e.contains(c[p - 1], c[p + 1]),
                };
                if removable {
                    let mut d = c.clone();
                    d.remove(p);
                    let (a, b) = (classes.find(i), classes.find(index[&d]));
                    classes.parent[a] = b;
                }
            }
        }
        classes
    }

    fn class_of(&mut self, seq: &[PointId]) -> usize {
        let i = self
            .chains
            .iter()
            .position(|c| c == seq)
            .expect("chain within the bound");
        self.find(i)
    }

    /// Classes of chains with at most `steps` steps.
    fn classes_within(&mut self, steps: usize) -> HashSet<usize> {
        (0..self.chains.len())
            .filter(|&i| self.chains[i].len() <= steps + 1)
            .collect::<Vec<_>>()
            .into_iter()
            .map(|i| self.find(i))
            .collect()
    }
}

fn criterion_2() -> Outcome {
    let space = c6(&[2.0, 1.0]);
    let mut classes = ChainClasses::enumerate(&space, 2, 8);
    let mut sizes = Vec::new();
    for r in 1..=6 {
        let cover = build_cover(&space, 2, 0, r, HomotopyBudget::default()).map_err(|e| e.to_string())?;
        let expected = classes.classes_within(r);
        ensure(cover.len() == 2 * r + 1 && expected.len() == 2 * r + 1, || {
            format!(
                "radius {r}: cover {} vertices, brute force {} classes",
                cover.len(),
                expected.len()
            )
        })?;
        let reps: HashSet<usize> = cover
            .representatives()
            .map(|c: &Chain| classes.class_of(&c.seq))
            .collect();
        ensure(reps == expected, || {
            format!("radius {r}: representatives miss brute-force classes")
        })?;
        sizes.push(cover.len());
    }
    let cover = build_cover(&space, 1, 0, 2, HomotopyBudget::default()).map_err(|e| e.to_string())?;
    let report = verify_endpoint_ucm(&cover).map_err(|e| e.to_string())?;
    let mut coarse = ChainClasses::enumerate(&space, 1, 7);
    let coarse_classes = coarse.classes_within(2).len();
    ensure(cover.is_complete() && cover.len() == 6 && coarse_classes == 6, || {
        format!(
            "coarse cover: {} vertices, brute force {coarse_classes} classes",
            cover.len()
        )
    })?;
    ensure(report.verdict == UcmVerdict::Ucm, || {
        format!("coarse verdict {:?}", report.verdict)
    })?;
    Ok(format!(
        "vertex counts {sizes:?} for radii 1..6; coarse radius-2 cover complete with 6 vertices, UCM"
    ))
}

// ---------------------------------------------------------------------------
// Random maps: covers built from edge permutations with optional extra
// pairs inside fibers, plus unstructured maps.

fn random_levels(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<((usize, usize), usize)> {
    (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect::<Vec<_>>()
        .into_iter()
        .map(|p| (p, rng.gen_range(0..=m)))
        .collect()
}

fn scales_from(n: usize, m: usize, levels: &[((usize, usize), usize)], diagonal: bool) -> FilteredSpace {
    let mut scales: Vec<Vec<(usize, usize)>> = (1..=m)
        .map(|k| levels.iter().filter(|(_, l)| *l >= k).map(|(p, _)| *p).collect())
        .collect();
    if diagonal {
        scales.push(Vec::new());
    }
    FilteredSpace::from_edges((0..n).map(|i| format!("x{i}")).collect(), scales, diagonal).unwrap()
}

fn random_map(rng: &mut ChaCha8Rng, hausdorff: bool) -> Option<FilteredMap> {
    let m = rng.gen_range(1..=3);
    let t = rng.gen_range(1..=4);
    if !hausdorff && rng.gen_bool(0.25) {
        let n = rng.gen_range(1..=8);
        let source = scales_from(n, m, &random_levels(rng, n, m), false);
        let target = scales_from(t, m, &random_levels(rng, t, m), false);
        let assignment = (0..n).map(|_| rng.gen_range(0..t)).collect();
        return FilteredMap::new(source, target, assignment).ok();
    }
    let d = rng.gen_range(1..=(8 / t).min(3));
    let target_levels = random_levels(rng, t, m);
    let mut source_levels = Vec::new();
    for &((a, b), l) in &target_levels {
        if l == 0 {
            continue;
        }
        let mut sigma: Vec<usize> = (0..d).collect();
        sigma.shuffle(rng);
        for (i, &j) in sigma.iter().enumerate() {
            let (u, v) = (a * d + i, b * d + j);
            source_levels.push(((u.min(v), u.max(v)), l));
        }
    }
    for y in 0..t {
        for i in 0..d {
            for j in i + 1..d {
                if rng.gen_bool(0.15) {
                    source_levels.push(((y * d + i, y * d + j), rng.gen_range(1..=m)));
                }
            }
        }
    }
    let source = scales_from(t * d, m, &source_levels, hausdorff);
    let target = scales_from(t, m, &target_levels, hausdorff);
    let assignment = (0..t * d).map(|x| x / d).collect();
    FilteredMap::new(source, target, assignment).ok()
}

fn preconditions_hold(f: &FilteredMap) -> bool {
    check_generates(f).passed
        && check_chain_lifting(f).passed
        && check_approx_uniqueness(f, UniquenessMode::Strong).passed
}

const ATTEMPTS: usize = 200_000;

fn precondition_maps(count: usize) -> Result<Vec<FilteredMap>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut maps = Vec::new();
    for _ in 0..ATTEMPTS {
        if let Some(f) = random_map(&mut rng, false) {
            if preconditions_hold(&f) {
                maps.push(f);
                if maps.len() == count {
                    return Ok(maps);
                }
            }
        }
    }
    Err(format!("only {} of {count} maps passed the preconditions", maps.len()))
}

fn criterion_3(maps: &[FilteredMap]) -> Outcome {
    let mut checked = 0;
    let mut merged = 0;
    for (i, f) in maps.iter().enumerate() {
        for e in 1..=f.source().scale_count() {
            let r = factor_and_verify(f, e).map_err(|err| err.to_string())?;
            merged += usize::from(r.blocks.iter().any(|b| b.len() > 1));
            let ok = r.verdict == FactorVerdict::Ucm
                && r.g_generates
                && r.g_chain_lifting
                && r.g_transverse_scale.is_some()
                && r.blocks_bounded;
            ensure(ok, || format!("map {i} at scale {e}: {r:?}"))?;
            checked += 1;
        }
    }
    let folding = maps.iter().filter(|f| f.target().len() < f.source().len()).count();
    Ok(format!(
        "{} maps ({folding} non-injective), {checked} factorizations ({merged} with merged blocks), 0 discrepancies",
        maps.len()
    ))
}

// ---------------------------------------------------------------------------
// Approximate uniqueness by layered enumeration of chain pairs.

const MAX_CHAIN_POINTS: usize = 6;

fn pairs_stay_close(f: &FilteredMap, chain_scale: usize, closeness: usize) -> bool {
    let src = f.source();
    let fs = src.scale(chain_scale).unwrap();
    let close = src.scale(closeness).unwrap();
    let n = src.len();
    let mut layer: HashSet<(usize, usize)> = (0..n).map(|x| (x, x)).collect();
    for _ in 1..MAX_CHAIN_POINTS {
        let mut next = HashSet::new();
        for &(a, b) in &layer {
            for a2 in (0..n).filter(|&y| fs.contains(a, y)) {
                for b2 in (0..n).filter(|&y| fs.contains(b, y) && f.apply(y) == f.apply(a2)) {
                    if !close.contains(a2, b2) {
                        return false;
                    }
                    next.insert((a2, b2));
                }
            }
        }
        layer = next;
    }
    true
}

fn brute_uniqueness(f: &FilteredMap, mode: UniquenessMode) -> Vec<Option<usize>> {
    let m = f.source().scale_count();
    (1..=m)
        .map(|e| {
            (e..=m).rev().find(|&cand| {
                let closeness = match mode {
                    UniquenessMode::Plain => e,
                    UniquenessMode::Strong => cand,
                };
                pairs_stay_close(f, cand, closeness)
            })
        })
        .collect()
}

fn criterion_4(maps: &[FilteredMap]) -> Outcome {
    let constant = FilteredMap::new(
        c6(&[2.0, 1.0]),
        FilteredSpace::from_edges(vec!["p".into()], vec![vec![], vec![]], true).unwrap(),
        vec![0; 6],
    )
    .map_err(|e| e.to_string())?;
    let mut rows = 0;
    for (i, f) in maps.iter().chain([&constant]).enumerate() {
        for mode in [UniquenessMode::Plain, UniquenessMode::Strong] {
            let fast = check_approx_uniqueness(f, mode);
            let slow = brute_uniqueness(f, mode);
            let witnesses: Vec<Option<usize>> = fast.rows.iter().map(|r| r.witness).collect();
            ensure(
                witnesses == slow && fast.passed == slow.iter().all(Option::is_some),
                || format!("map {i} {mode:?}: fixpoint {witnesses:?}, enumeration {slow:?}"),
            )?;
            rows += slow.len();
        }
    }
    Ok(format!(
        "{} maps, {rows} scale rows in both modes, 0 disagreements",
        maps.len() + 1
    ))
}

// ---------------------------------------------------------------------------

fn doubling(stabilization: Stabilization) -> TowerAb {
    let two = IntMatrix::from_i64_rows(1, 1, &[vec![2]]);
    TowerAb::new(vec![AbGroup::free(1); 3], vec![two.clone(), two], stabilization).unwrap()
}

/// A random matrix made surjective by replacing its Smith diagonal with ones.
fn surjective_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> IntMatrix {
    let entries: Vec<Vec<i64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-3..=3)).collect())
        .collect();
    let a = IntMatrix::from_i64_rows(rows, cols, &entries);
    if is_surjective_onto(&a, &vec![BigInt::from(0); rows]) {
        return a;
    }
    let s = smith_normal_form(&a);
    let mut d = IntMatrix::zeros(rows, cols);
    for i in 0..rows {
        d.set(i, i, BigInt::from(1));
    }
    s.p_inv.mul(&d).mul(&s.q_inv)
}

fn criterion_5() -> Outcome {
    let tower = doubling(Stabilization::None);
    let g = vec![vec![BigInt::from(1)], vec![BigInt::from(0)]];
    let forward = telescoping_solve(&tower, &g, SolveMode::Forward);
    ensure(matches!(forward, Err(Error::Unsolvable(1))), || {
        format!("forward gave {forward:?}")
    })?;
    let h = telescoping_solve(&tower, &g, SolveMode::Backward).map_err(|e| e.to_string())?;
    let expected: Vec<Vec<BigInt>> = [1, 0, 0].iter().map(|&x| vec![BigInt::from(x)]).collect();
    ensure(h == expected && telescoping_holds(&tower, &g, &h), || {
        format!("backward gave {h:?}")
    })?;
    for s in [Stabilization::None, Stabilization::Repeats] {
        let v = lim1_verdict(&doubling(s));
        ensure(matches!(v, Lim1Verdict::Undetermined { .. }), || {
            format!("doubling tower ({s:?}): {v:?}")
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in 0..100 {
        let mut ranks: Vec<usize> = (0..rng.gen_range(2..=5)).map(|_| rng.gen_range(1..=3)).collect();
        ranks.sort_unstable();
        let bonds: Vec<IntMatrix> = ranks
            .windows(2)
            .map(|w| surjective_matrix(&mut rng, w[0], w[1]))
            .collect();
        let tower = TowerAb::new(
            ranks.iter().map(|&r| AbGroup::free(r)).collect(),
            bonds,
            Stabilization::None,
        )
        .map_err(|e| e.to_string())?;
        let v = lim1_verdict(&tower);
        ensure(v == Lim1Verdict::Trivial(Lim1Certificate::Surjectivity), || {
            format!("tower {t}: {v:?}")
        })?;
    }
    Ok(
        "forward unsolvable at step 1; backward h = (1,0,0); 100 surjective towers trivial; doubling undetermined"
            .into(),
    )
}

fn criterion_6() -> Outcome {
    let fix = FilteredMap::new(c6(&[1.0, 0.0]), c3(&[1.0, 0.0]), (0..6).map(|i| i % 3).collect())
        .map_err(|e| e.to_string())?;
    let mut maps = vec![fix];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut attempts = 0;
    while maps.len() < 51 && attempts < ATTEMPTS {
        attempts += 1;
        let Some(f) = random_map(&mut rng, true) else {
            continue;
        };
        match quotient_tower_reconstruct(&f, DEFAULT_PRODUCT_BOUND) {
            Ok(_) => maps.push(f),
            Err(Error::HypothesisUnmet(_)) => {}
            Err(e) => return Err(e.to_string()),
        }
    }
    ensure(maps.len() == 51, || {
        format!("only {} random maps met the hypotheses", maps.len() - 1)
    })?;
    for (i, f) in maps.iter().enumerate() {
        let r = quotient_tower_reconstruct(f, DEFAULT_PRODUCT_BOUND).map_err(|e| e.to_string())?;
        let eq = &r.equivalence;
        ensure(
            r.passed && eq.injective && eq.surjective && eq.continuous && eq.inverse_continuous,
            || format!("map {i}: {r:?}"),
        )?;
    }
    Ok("fold map and 50 random maps: q bijective and a uniform equivalence".into())
}

fn criterion_7() -> Outcome {
    let action = antipodal_hexagon();
    let space = action.space();
    let diag = diagnose_action(&action);
    // Oracle: the only nontrivial element is the antipode, which moves every
    // point by distance 3.
    let dist = cycle_metric(6);
    let radii = [3.0, 1.0, 0.5];
    let oracle_upd = radii
        .iter()
        .position(|&r| (0..6).all(|x| dist[x][(x + 3) % 6] > r))
        .map(|i| i + 1);
    ensure(oracle_upd == Some(2) && diag.upd_scale == oracle_upd, || {
        format!("u.p.d. scale {:?}, oracle {oracle_upd:?}", diag.upd_scale)
    })?;
    let elements = [vec![0, 1, 2, 3, 4, 5], vec![3, 4, 5, 0, 1, 2]];
    for e in 1..=3 {
        let ent = space.scale(e).unwrap();
        let neutral_here = (0..6).all(|x| {
            (0..6).all(|y| {
                let near = elements.iter().any(|g| ent.contains(x, g[y]));
                !near || elements.iter().any(|h| ent.contains(h[x], y))
            })
        });
        ensure(neutral_here && diag.neutral[e - 1].witness.is_some(), || {
            format!("neutrality fails at scale {e}")
        })?;
    }
    let quotient = quotient_at_scale(&action, 1).map_err(|e| e.to_string())?;
    let target = c3(&[1.0, 0.0]);
    let relabel: Vec<usize> = quotient.orbits.blocks.iter().map(|b| b[0] % 3).collect();
    let eq = uniform_equivalence(&quotient.space, &target, &relabel);
    ensure(!quotient.saturated && eq.holds(), || {
        format!("quotient vs triangle: {eq:?}")
    })?;
    let report = action_tower_verify(&action, DEFAULT_PRODUCT_BOUND).map_err(|e| e.to_string())?;
    ensure(
        report.group_isomorphism
            && report.space_equivalence
            && report.quotient_commutes
            && report.bonds_surjective
            && report.passed,
        || format!("{report:?}"),
    )?;
    Ok(format!(
        "u.p.d. at scale 2, neutral at every scale; quotient = triangle; tower parts (a)-(d) pass, groups {:?}",
        report.group_sizes
    ))
}

// ---------------------------------------------------------------------------

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn run_cli(args: &[String]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_unicov"))
        .args(args)
        .env_remove("UNICOV_RADIUS")
        .env_remove("UNICOV_IDENT_BUDGET")
        .env_remove("UNICOV_COSET_ROWS")
        .env_remove("UNICOV_PRODUCT_BOUND")
        .env_remove("UNICOV_GROUP_BOUND")
        .output()
        .expect("run the binary");
    (out.stdout, out.status.code().unwrap_or(-1))
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let tmp = |name: &str| dir.path().join(name).display().to_string();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let map_report = tmp("map.json");
    let action_report = tmp("action.json");
    let commands: Vec<(Vec<String>, Option<String>)> = vec![
        (
            s(&["analyze", &data("hexagon.json"), "--barcode", &tmp("barcode.csv")]),
            Some(tmp("barcode.csv")),
        ),
        (s(&["analyze", &data("c6.csv"), "--radii", "2,1"]), None),
        (
            s(&[
                "cover",
                &data("hexagon.json"),
                "--scale",
                "2",
                "--radius",
                "6",
                "--dot",
                &tmp("cover.dot"),
            ]),
            Some(tmp("cover.dot")),
        ),
        (
            s(&["cover", &data("hexagon.json"), "--scale", "1", "--radius", "2"]),
            None,
        ),
        (s(&["map", &data("fold.json")]), None),
        (
            s(&["map", &data("collapse.json"), "--out", &map_report]),
            Some(map_report.clone()),
        ),
        (s(&["quotient", &data("fold_fine.json"), "--reconstruct"]), None),
        (
            s(&["tower", &data("doubling.json"), "--lim1", "--solve", "backward"]),
            None,
        ),
        (s(&["tower", &data("hexagon_tower.json")]), None),
        (
            s(&["action", &data("antipode.json"), "--out", &action_report]),
            Some(action_report.clone()),
        ),
        (s(&["action", &data("rotation.json")]), None),
        (s(&["verify", "--replay", &map_report]), None),
        (s(&["verify", "--replay", &action_report]), None),
    ];
    for (args, export) in &commands {
        let first = run_cli(args);
        let first_export = export
            .as_ref()
            .map(std::fs::read)
            .transpose()
            .map_err(|e| e.to_string())?;
        let second = run_cli(args);
        let second_export = export
            .as_ref()
            .map(std::fs::read)
            .transpose()
            .map_err(|e| e.to_string())?;
        ensure(first.1 != 3 && !(first.0.is_empty() && export.is_none()), || {
            format!("`{}` failed with exit {}", args.join(" "), first.1)
        })?;
        ensure(first == second && first_export == second_export, || {
            format!("`{}` differs between runs", args.join(" "))
        })?;
    }
    Ok(format!(
        "{} command lines, byte-identical reports and exports",
        commands.len()
    ))
}

// ---------------------------------------------------------------------------

struct Criterion {
    id: usize,
    name: &'static str,
    limit: Option<Duration>,
    run: Box<dyn Fn() -> Outcome>,
}

fn main() -> ExitCode {
    let maps = std::rc::Rc::new(precondition_maps(200));
    let m3 = maps.clone();
    let m4 = maps.clone();
    let criteria = vec![
        Criterion {
            id: 1,
            name: "hexagon invariants",
            limit: Some(Duration::from_secs(1)),
            run: Box::new(criterion_1),
        },
        Criterion {
            id: 2,
            name: "cover correctness",
            limit: Some(Duration::from_secs(5)),
            run: Box::new(criterion_2),
        },
        Criterion {
            id: 3,
            name: "factorization through covering maps",
            limit: Some(Duration::from_secs(60)),
            run: Box::new(move || criterion_3(m3.as_ref().as_ref().map_err(Clone::clone)?)),
        },
        Criterion {
            id: 4,
            name: "approximate uniqueness vs enumeration",
            limit: None,
            run: Box::new(move || criterion_4(m4.as_ref().as_ref().map_err(Clone::clone)?)),
        },
        Criterion {
            id: 5,
            name: "telescoping and lim1",
            limit: Some(Duration::from_secs(10)),
            run: Box::new(criterion_5),
        },
        Criterion {
            id: 6,
            name: "reconstruction as a limit",
            limit: None,
            run: Box::new(criterion_6),
        },
        Criterion {
            id: 7,
            name: "group-action suite",
            limit: Some(Duration::from_secs(1)),
            run: Box::new(criterion_7),
        },
        Criterion {
            id: 8,
            name: "determinism",
            limit: None,
            run: Box::new(criterion_8),
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let slow = c.limit.is_some_and(|l| elapsed > l);
        let limit = c
            .limit
            .map_or(String::new(), |l| format!(", limit {} ms", l.as_millis()));
        let (tag, detail) = match (&outcome, slow) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("too slow: {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {} [{tag}] {}: {detail} ({} ms{limit})",
            c.id,
            c.name,
            elapsed.as_millis()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
