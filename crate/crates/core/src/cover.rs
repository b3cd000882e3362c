//! Budgeted construction of the cover of a filtered space at one scale: the
//! homotopy classes of chains from a basepoint, with their endpoint map.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Word;
use crate::rips::{Decision, HomotopyBudget, HomotopyDecider};
use crate::space::{Chain, Entourage, FilteredSpace, PointId};

/// One chain class: its canonical representative and its reduced word in
/// the edge-path presentation at the basepoint.
#[derive(Clone, Debug)]
struct Vertex {
    rep: Chain,
    word: Word,
}

enum Identified {
    Existing(usize),
    New,
    Undetermined(Vec<usize>),
}

/// A partially explored cover. Vertex `0` is the class of the constant chain.
#[derive(Debug)]
pub struct PartialCover {
    space: FilteredSpace,
    scale: usize,
    basepoint: PointId,
    decider: HomotopyDecider,
    vertices: Vec<Vertex>,
    /// `slots[v][i]` is the target of the step from `v` to the `i`-th
    /// neighbor of its endpoint.
    slots: Vec<Vec<Option<usize>>>,
    frontier: Vec<usize>,
    radius: usize,
    identification_incomplete: bool,
    undetermined: Vec<(usize, usize)>,
}

impl PartialCover {
    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn basepoint(&self) -> PointId {
        self.basepoint
    }

    pub fn space(&self) -> &FilteredSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Extension rounds explored so far.
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn representative(&self, v: usize) -> &Chain {
        &self.vertices[v].rep
    }

    pub fn representatives(&self) -> impl Iterator<Item = &Chain> {
        self.vertices.iter().map(|v| &v.rep)
    }

    /// No unexplored slot remains and the last round found no new class.
    pub fn is_complete(&self) -> bool {
        self.frontier.is_empty()
    }

    /// Some identification returned Unknown within the budget.
    pub fn identification_incomplete(&self) -> bool {
        self.identification_incomplete
    }

    /// Vertex pairs whose identification could not be decided.
    pub fn undetermined_pairs(&self) -> &[(usize, usize)] {
        &self.undetermined
    }

    /// The vertex reached from `v` by one step to `b`, if explored.
    pub fn step(&self, v: usize, b: PointId) -> Option<usize> {
        let a = self.vertices[v].rep.end();
        if a == b {
            return Some(v);
        }
        let i = self.space.scale(self.scale).ok()?.neighbors(a).binary_search(&b).ok()?;
        self.slots[v][i]
    }

    fn identify(&self, word: &Word, end: PointId) -> Identified {
        let mut unknown = Vec::new();
        for (u, vertex) in self.vertices.iter().enumerate() {
            if vertex.rep.end() != end {
                continue;
            }
            if vertex.word == *word {
                return Identified::Existing(u);
            }
            match self.decider.decide_word(&word.concat(&vertex.word.inverse())) {
                Decision::Yes(_) => return Identified::Existing(u),
                Decision::No(_) => {}
                Decision::Unknown { .. } => unknown.push(u),
            }
        }
        if unknown.is_empty() {
            Identified::New
        } else {
            Identified::Undetermined(unknown)
        }
    }

    fn step_word(&self, v: usize, b: PointId) -> Word {
        let vertex = &self.vertices[v];
        let step = Chain {
            scale: self.scale,
            seq: vec![vertex.rep.end(), b],
        };
        let letters = self.decider.word(&step).expect("steps stay in the basepoint component");
        vertex.word.concat(&letters).reduced()
    }

    /// One breadth-first round: resolve every slot of the current frontier.
    fn expand(&mut self) {
        let e = self.space.scale(self.scale).expect("scale checked at build").clone();
        let mut next = Vec::new();
        for v in std::mem::take(&mut self.frontier) {
            let end = self.vertices[v].rep.end();
            for (i, &b) in e.neighbors(end).iter().enumerate() {
                if self.slots[v][i].is_some() {
                    continue;
                }
                let word = self.step_word(v, b);
                let target = match self.identify(&word, b) {
                    Identified::Existing(u) => u,
                    found => {
                        let id = self.vertices.len();
                        if let Identified::Undetermined(others) = found {
                            self.identification_incomplete = true;
                            self.undetermined.extend(others.into_iter().map(|u| (u, id)));
                        }
                        let mut seq = self.vertices[v].rep.seq.clone();
                        seq.push(b);
                        self.vertices.push(Vertex {
                            rep: Chain { scale: self.scale, seq },
                            word,
                        });
                        self.slots.push(vec![None; e.neighbors(b).len()]);
                        next.push(id);
                        id
                    }
                };
                self.slots[v][i] = Some(target);
            }
        }
        self.frontier = next;
        self.radius += 1;
        self.close();
    }

    /// Resolves frontier slots that lead to known classes; vertices whose
    /// slots all resolve leave the frontier.
    fn close(&mut self) {
        let e = self.space.scale(self.scale).expect("scale checked at build").clone();
        let mut open = Vec::new();
        for v in std::mem::take(&mut self.frontier) {
            let end = self.vertices[v].rep.end();
            for (i, &b) in e.neighbors(end).iter().enumerate() {
                if self.slots[v][i].is_none() {
                    if let Identified::Existing(u) = self.identify(&self.step_word(v, b), b) {
                        self.slots[v][i] = Some(u);
                    }
                }
            }
            if self.slots[v].iter().any(Option::is_none) {
                open.push(v);
            }
        }
        self.frontier = open;
    }

    /// Endpoint of each vertex's representative.
    pub fn endpoint_map(&self) -> Vec<PointId> {
        self.vertices.iter().map(|v| v.rep.end()).collect()
    }

    /// The lifted entourage for scale `j >= k` on discovered vertices:
    /// `(v, w)` with `w` the one-step extension of `v` to an `E_j`-close
    /// endpoint. Pairs through unexplored slots are omitted.
    pub fn fhat(&self, j: usize) -> Result<Entourage> {
        if j < self.scale {
            return Err(Error::BadScalePair(j, self.scale));
        }
        let ej = self.space.scale(j)?;
        let ek = self.space.scale(self.scale)?;
        let mut pairs = Vec::new();
        for (v, vertex) in self.vertices.iter().enumerate() {
            let a = vertex.rep.end();
            for (i, &b) in ek.neighbors(a).iter().enumerate() {
                if let (true, Some(w)) = (ej.contains(a, b), self.slots[v][i]) {
                    pairs.push((v, w));
                }
            }
        }
        Ok(Entourage::new(self.len(), pairs))
    }

    /// The discovered vertices as a filtered space with scales
    /// `fhat(k), ..., fhat(m)`.
    pub fn as_space(&self) -> Result<FilteredSpace> {
        let names = self.vertices.iter().map(|v| self.chain_label(&v.rep)).collect();
        let scales = (self.scale..=self.space.scale_count())
            .map(|j| self.fhat(j))
            .collect::<Result<Vec<_>>>()?;
        let hausdorff = scales.last().is_some_and(Entourage::is_diagonal);
        FilteredSpace::from_entourages(names, scales, hausdorff)
    }

    pub fn chain_label(&self, c: &Chain) -> String {
        let names: Vec<&str> = c.seq.iter().map(|&p| self.space.name(p)).collect();
        format!("[{}]", names.join(","))
    }

    /// Graphviz rendering: one node per vertex labeled by its representative,
    /// one edge per lifted step.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph cover {\n");
        for (v, vertex) in self.vertices.iter().enumerate() {
            let _ = writeln!(
                out,
                "  v{v} [label=\"{}\", point=\"{}\"];",
                self.chain_label(&vertex.rep),
                self.space.name(vertex.rep.end())
            );
        }
        let ek = self.space.scale(self.scale).expect("valid scale");
        for (v, vertex) in self.vertices.iter().enumerate() {
            for (i, _) in ek.neighbors(vertex.rep.end()).iter().enumerate() {
                match self.slots[v][i] {
                    Some(w) if v < w => {
                        let _ = writeln!(out, "  v{v} -- v{w};");
                    }
                    _ => {}
                }
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn summary(&self) -> CoverSummary {
        let ek = self.space.scale(self.scale).expect("valid scale");
        CoverSummary {
            scale: self.scale,
            basepoint: self.basepoint,
            radius: self.radius,
            complete: self.is_complete(),
            identification_incomplete: self.identification_incomplete,
            vertices: self
                .vertices
                .iter()
                .map(|v| CoverVertexSummary {
                    representative: v.rep.seq.clone(),
                    endpoint: v.rep.end(),
                })
                .collect(),
            steps: self
                .vertices
                .iter()
                .enumerate()
                .map(|(v, vertex)| {
                    ek.neighbors(vertex.rep.end())
                        .iter()
                        .zip(&self.slots[v])
                        .map(|(&b, s)| (b, *s))
                        .collect()
                })
                .collect(),
            undetermined: self.undetermined.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverVertexSummary {
    pub representative: Vec<PointId>,
    pub endpoint: PointId,
}

/// Serializable view of a cover; `steps[v]` lists `(neighbor, target)`
/// with `None` for unexplored slots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverSummary {
    pub scale: usize,
    pub basepoint: PointId,
    pub radius: usize,
    pub complete: bool,
    pub identification_incomplete: bool,
    pub vertices: Vec<CoverVertexSummary>,
    pub steps: Vec<Vec<(PointId, Option<usize>)>>,
    pub undetermined: Vec<(usize, usize)>,
}

/// Explores the cover at scale `k` from `basepoint` for at most `radius`
/// breadth-first rounds.
pub fn build_cover(
    space: &FilteredSpace,
    k: usize,
    basepoint: PointId,
    radius: usize,
    budget: HomotopyBudget,
) -> Result<PartialCover> {
    let e = space.scale(k)?;
    let decider = HomotopyDecider::new(space, k, basepoint, budget)?;
    let mut cover = PartialCover {
        space: space.clone(),
        scale: k,
        basepoint,
        decider,
        vertices: vec![Vertex {
            rep: Chain::constant(k, basepoint),
            word: Word::empty(),
        }],
        slots: vec![vec![None; e.neighbors(basepoint).len()]],
        frontier: vec![0],
        radius: 0,
        identification_incomplete: false,
        undetermined: Vec::new(),
    };
    cover.close();
    while cover.radius < radius && !cover.frontier.is_empty() {
        cover.expand();
    }
    Ok(cover)
}

/// Lifts `chain` (at scale `k` or finer) to the cover starting at vertex
/// `start`, exploring further rounds up to `max_radius` when a step leads
/// past the frontier.
pub fn lift_chain(cover: &mut PartialCover, start: usize, chain: &Chain, max_radius: usize) -> Result<Vec<usize>> {
    if chain.scale < cover.scale {
        return Err(Error::ScaleMismatch);
    }
    if !cover.space.is_chain(chain.scale, &chain.seq)? {
        return Err(Error::NotAChain(chain.scale));
    }
    if start >= cover.len() || cover.vertices[start].rep.end() != chain.start() {
        return Err(Error::EndpointMismatch);
    }
    let mut lift = vec![start];
    let mut v = start;
    for &b in &chain.seq[1..] {
        v = loop {
            if let Some(w) = cover.step(v, b) {
                break w;
            }
            if cover.radius >= max_radius || cover.frontier.is_empty() {
                return Err(Error::BudgetExhausted(format!("radius={max_radius}")));
            }
            cover.expand();
        };
        lift.push(v);
    }
    Ok(lift)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum UcmVerdict {
    Ucm,
    NotUcm,
    Inconclusive { budget: String },
}

/// Image of the lifted entourage at one scale against the scale itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageCheck {
    pub scale: usize,
    pub equal: bool,
    /// Pairs of the scale (inside the component) missing from the image.
    pub missing: Vec<(PointId, PointId)>,
    /// Image pairs outside the scale.
    pub extra: Vec<(PointId, PointId)>,
}

/// Per-scale chain lifting: the lifted scale whose steps lift `E_j` steps,
/// or the first vertex and step without a lift.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftCheck {
    pub scale: usize,
    pub witness: Option<usize>,
    pub failure: Option<(usize, PointId)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UcmReport {
    pub generates: bool,
    pub generation: Vec<ImageCheck>,
    pub chain_lifting: bool,
    pub lifting: Vec<LiftCheck>,
    pub transverse_scale: Option<usize>,
    pub verdict: UcmVerdict,
}

/// Checks generation, one-step chain lifting and transversality of the
/// endpoint map of `cover`.
pub fn verify_endpoint_ucm(cover: &PartialCover) -> Result<UcmReport> {
    let space = &cover.space;
    let p = cover.endpoint_map();
    let component = space.chain_components(cover.scale)?;
    let block = &component.blocks[component.block_of(cover.basepoint).expect("basepoint is a point")];
    let mut generation = Vec::new();
    let mut lifting = Vec::new();
    for j in cover.scale..=space.scale_count() {
        let fhat = cover.fhat(j)?;
        let image = fhat.image(&p, space.len());
        let target = space.scale(j)?.restrict_within(block);
        let missing: Vec<_> = target.pairs().filter(|&(a, b)| !image.contains(a, b)).collect();
        let extra: Vec<_> = image.pairs().filter(|&(a, b)| !target.contains(a, b)).collect();
        generation.push(ImageCheck {
            scale: j,
            equal: missing.is_empty() && extra.is_empty(),
            missing,
            extra,
        });
        let ej = space.scale(j)?;
        let failure = (0..cover.len()).find_map(|v| {
            ej.neighbors(p[v])
                .iter()
                .find(|&&b| !fhat.neighbors(v).iter().any(|&w| p[w] == b))
                .map(|&b| (v, b))
        });
        lifting.push(LiftCheck {
            scale: j,
            witness: failure.is_none().then_some(j),
            failure,
        });
    }
    let fk = cover.fhat(cover.scale)?;
    let transverse = fk.pairs().all(|(v, w)| p[v] != p[w]);
    let generates = generation.iter().all(|c| c.equal);
    let chain_lifting = lifting.iter().all(|c| c.failure.is_none());
    let verdict = if !cover.is_complete() {
        UcmVerdict::Inconclusive {
            budget: format!("radius={}", cover.radius),
        }
    } else if cover.identification_incomplete {
        UcmVerdict::Inconclusive {
            budget: format!("coset-rows={}", cover.decider_budget().coset_rows),
        }
    } else if generates && chain_lifting && transverse {
        UcmVerdict::Ucm
    } else {
        UcmVerdict::NotUcm
    };
    Ok(UcmReport {
        generates,
        generation,
        chain_lifting,
        lifting,
        transverse_scale: transverse.then_some(cover.scale),
        verdict,
    })
}

impl PartialCover {
    fn decider_budget(&self) -> HomotopyBudget {
        self.decider.budget()
    }
}
