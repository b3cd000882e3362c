//! Words over a free group, finite presentations, bounded Tietze
//! simplification and Todd-Coxeter coset enumeration.

use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

/// A generator or its inverse, stored as `±(generator + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Letter(i32);

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        let v = generator as i32 + 1;
        Letter(if inverse { -v } else { v })
    }

    pub fn generator(self) -> usize {
        (self.0.unsigned_abs() - 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    pub fn inverse(self) -> Letter {
        Letter(-self.0)
    }

    /// Column in a coset table: `2g` for `g`, `2g + 1` for `g^-1`.
    fn column(self) -> usize {
        2 * self.generator() + usize::from(self.is_inverse())
    }
}

/// A word in signed generator letters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn generator(g: usize) -> Self {
        Word(vec![Letter::new(g, false)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn push(&mut self, l: Letter) {
        self.0.push(l);
    }

    /// Cancels adjacent `x x^-1` pairs.
    pub fn reduced(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Free and cyclic reduction (for relators).
    pub fn cyclically_reduced(&self) -> Word {
        let w = self.reduced().0;
        let (mut i, mut j) = (0, w.len());
        while j >= i + 2 && w[i] == w[j - 1].inverse() {
            i += 1;
            j -= 1;
        }
        Word(w[i..j].to_vec())
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v).reduced()
    }

    pub fn power(&self, n: usize) -> Word {
        let mut v = Vec::with_capacity(self.0.len() * n);
        for _ in 0..n {
            v.extend_from_slice(&self.0);
        }
        Word(v).reduced()
    }

    /// Exponent sum of each of the first `generators` generators.
    pub fn exponent_sums(&self, generators: usize) -> Vec<BigInt> {
        let mut sums = vec![0i64; generators];
        for l in &self.0 {
            sums[l.generator()] += if l.is_inverse() { -1 } else { 1 };
        }
        sums.into_iter().map(BigInt::from).collect()
    }

    fn occurrences(&self, g: usize) -> usize {
        self.0.iter().filter(|l| l.generator() == g).count()
    }

    /// Replaces each generator `g` by `images[g]` and reduces.
    pub fn substitute(&self, images: &[Word]) -> Word {
        let mut v = Vec::new();
        for l in &self.0 {
            let img = &images[l.generator()];
            if l.is_inverse() {
                v.extend(img.0.iter().rev().map(|x| x.inverse()));
            } else {
                v.extend_from_slice(&img.0);
            }
        }
        Word(v).reduced()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|l| {
                if l.is_inverse() {
                    format!("g{}^-1", l.generator())
                } else {
                    format!("g{}", l.generator())
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub generators: usize,
    pub relators: Vec<Word>,
}

impl Presentation {
    /// Relator exponent-sum matrix rows, for abelianization.
    pub fn relation_rows(&self) -> Vec<Vec<BigInt>> {
        self.relators.iter().map(|r| r.exponent_sums(self.generators)).collect()
    }
}

/// A presentation obtained by Tietze moves, with the images of the original
/// generators as words in the new ones.
#[derive(Clone, Debug)]
pub struct Simplified {
    pub presentation: Presentation,
    pub substitution: Vec<Word>,
}

impl Simplified {
    pub fn translate(&self, w: &Word) -> Word {
        w.substitute(&self.substitution)
    }
}

/// Eliminates generators that occur exactly once in some relator, at most
/// `max_passes` times, never letting the total relator length exceed
/// `max_length`. Empty and duplicate relators are dropped.
pub fn tietze_simplify(p: &Presentation, max_passes: usize, max_length: usize) -> Simplified {
    let n = p.generators;
    let mut images: Vec<Word> = (0..n).map(Word::generator).collect();
    let mut live = vec![true; n];
    let mut relators: Vec<Word> = p.relators.clone();
    for _ in 0..=max_passes {
        tidy(&mut relators);
        // shortest relator with a generator occurring exactly once
        let mut choice: Option<(usize, usize)> = None;
        for (ri, r) in relators.iter().enumerate() {
            if choice.is_some_and(|(cr, _)| relators[cr].len() <= r.len()) {
                continue;
            }
            let mut gens: Vec<usize> = r.0.iter().map(|l| l.generator()).collect();
            gens.sort_unstable();
            gens.dedup();
            if let Some(&g) = gens.iter().find(|&&g| r.occurrences(g) == 1) {
                choice = Some((ri, g));
            }
        }
        let Some((ri, g)) = choice else {
            break;
        };
        let r = &relators[ri];
        let pos = r.0.iter().position(|l| l.generator() == g).expect("occurs once");
        // rotate so that the letter of g comes first: g^e w = 1
        let mut rotated = r.0[pos..].to_vec();
        rotated.extend_from_slice(&r.0[..pos]);
        let lead = rotated[0];
        let rest = Word(rotated[1..].to_vec());
        let value = if lead.is_inverse() { rest } else { rest.inverse() };
        let mut subst: Vec<Word> = (0..n).map(Word::generator).collect();
        subst[g] = value;
        let new_relators: Vec<Word> = relators
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != ri)
            .map(|(_, w)| w.substitute(&subst).cyclically_reduced())
            .collect();
        let total: usize = new_relators.iter().map(Word::len).sum();
        if total > max_length {
            break;
        }
        relators = new_relators;
        for img in &mut images {
            *img = img.substitute(&subst);
        }
        live[g] = false;
    }
    tidy(&mut relators);
    // renumber surviving generators
    let mut renumber = vec![Word::empty(); n];
    let mut next = 0;
    for g in 0..n {
        if live[g] {
            renumber[g] = Word::generator(next);
            next += 1;
        }
    }
    let relators = relators.iter().map(|r| r.substitute(&renumber)).collect();
    let substitution = images.iter().map(|w| w.substitute(&renumber)).collect();
    Simplified {
        presentation: Presentation {
            generators: next,
            relators,
        },
        substitution,
    }
}

fn tidy(relators: &mut Vec<Word>) {
    for r in relators.iter_mut() {
        *r = r.cyclically_reduced();
    }
    relators.retain(|r| !r.is_empty());
    relators.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    relators.dedup();
}

const NONE: usize = usize::MAX;

/// A complete, consistent coset table: `table[c][col]` is the coset reached
/// from `c` by the letter with that column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetTable {
    generators: usize,
    table: Vec<Vec<usize>>,
}

impl CosetTable {
    pub fn index(&self) -> usize {
        self.table.len()
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn act_letter(&self, coset: usize, l: Letter) -> usize {
        self.table[coset][l.column()]
    }

    pub fn act(&self, coset: usize, w: &Word) -> usize {
        w.0.iter().fold(coset, |c, &l| self.act_letter(c, l))
    }

    /// Every entry defined, inverse columns consistent and every relator
    /// closing at every coset.
    pub fn verify(&self, p: &Presentation) -> bool {
        let n = self.table.len();
        for c in 0..n {
            for g in 0..self.generators {
                let d = self.table[c][2 * g];
                if d >= n || self.table[d][2 * g + 1] != c {
                    return false;
                }
            }
            if p.relators.iter().any(|r| self.act(c, r) != c) {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug)]
pub enum Enumeration {
    Complete(CosetTable),
    Exhausted { rows: usize },
}

struct Enumerator {
    columns: usize,
    table: Vec<Vec<usize>>,
    parent: Vec<usize>,
}

impl Enumerator {
    fn rep(&mut self, c: usize) -> usize {
        let mut r = c;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut x = c;
        while self.parent[x] != r {
            let next = self.parent[x];
            self.parent[x] = r;
            x = next;
        }
        r
    }

    fn live(&self, c: usize) -> bool {
        self.parent[c] == c
    }

    fn define(&mut self, c: usize, col: usize) {
        let fresh = self.table.len();
        self.table.push(vec![NONE; self.columns]);
        self.parent.push(fresh);
        self.table[c][col] = fresh;
        self.table[fresh][col ^ 1] = c;
    }

    fn merge(&mut self, a: usize, b: usize, queue: &mut Vec<usize>) {
        let (a, b) = (self.rep(a), self.rep(b));
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        self.parent[hi] = lo;
        queue.push(hi);
    }

    fn coincidence(&mut self, a: usize, b: usize) {
        let mut queue = Vec::new();
        self.merge(a, b, &mut queue);
        let mut idx = 0;
        while idx < queue.len() {
            let e = queue[idx];
            idx += 1;
            for col in 0..self.columns {
                let f = self.table[e][col];
                if f == NONE {
                    continue;
                }
                if self.table[f][col ^ 1] == e {
                    self.table[f][col ^ 1] = NONE;
                }
                let (e1, f1) = (self.rep(e), self.rep(f));
                if self.table[e1][col] != NONE {
                    let x = self.table[e1][col];
                    self.merge(f1, x, &mut queue);
                } else if self.table[f1][col ^ 1] != NONE {
                    let x = self.table[f1][col ^ 1];
                    self.merge(e1, x, &mut queue);
                } else {
                    self.table[e1][col] = f1;
                    self.table[f1][col ^ 1] = e1;
                }
            }
        }
    }

    fn scan_and_fill(&mut self, c: usize, w: &[usize]) {
        if w.is_empty() {
            return;
        }
        let (mut f, mut b) = (c, c);
        let (mut i, mut j) = (0usize, w.len());
        loop {
            while i < j && self.table[f][w[i]] != NONE {
                f = self.table[f][w[i]];
                i += 1;
            }
            if i == j {
                if f != b {
                    self.coincidence(f, b);
                }
                return;
            }
            while j > i && self.table[b][w[j - 1] ^ 1] != NONE {
                b = self.table[b][w[j - 1] ^ 1];
                j -= 1;
            }
            if j == i {
                self.coincidence(f, b);
                return;
            }
            if j == i + 1 {
                self.table[f][w[i]] = b;
                self.table[b][w[i] ^ 1] = f;
                return;
            }
            self.define(f, w[i]);
        }
    }
}

/// HLT coset enumeration of the subgroup generated by `subgroup` in the group
/// presented by `p`. Stops with `Exhausted` once more than `max_rows` cosets
/// have been defined.
pub fn enumerate_cosets(p: &Presentation, subgroup: &[Word], max_rows: usize) -> Enumeration {
    let columns = 2 * p.generators;
    let mut en = Enumerator {
        columns,
        table: vec![vec![NONE; columns]],
        parent: vec![0],
    };
    let to_cols = |w: &Word| -> Vec<usize> { w.0.iter().map(|l| l.column()).collect() };
    let relators: Vec<Vec<usize>> = p.relators.iter().map(to_cols).collect();
    for h in subgroup {
        let cols = to_cols(&h.reduced());
        let start = en.rep(0);
        en.scan_and_fill(start, &cols);
    }
    let mut c = 0;
    while c < en.table.len() {
        for r in &relators {
            if !en.live(c) {
                break;
            }
            en.scan_and_fill(c, r);
            if en.table.len() > max_rows {
                return Enumeration::Exhausted { rows: en.table.len() };
            }
        }
        if en.live(c) {
            for col in 0..columns {
                if en.table[c][col] == NONE {
                    en.define(c, col);
                }
            }
        }
        if en.table.len() > max_rows {
            return Enumeration::Exhausted { rows: en.table.len() };
        }
        c += 1;
    }
    // compact live cosets in order of definition
    let mut index = vec![NONE; en.table.len()];
    let mut live = Vec::new();
    for (c, slot) in index.iter_mut().enumerate() {
        if en.live(c) {
            *slot = live.len();
            live.push(c);
        }
    }
    let mut table = Vec::with_capacity(live.len());
    for &c in &live {
        let row = (0..columns)
            .map(|col| {
                let t = en.table[c][col];
                let r = en.rep(t);
                index[r]
            })
            .collect();
        table.push(row);
    }
    let table = CosetTable {
        generators: p.generators,
        table,
    };
    debug_assert!(table.verify(p));
    Enumeration::Complete(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(letters: &[i32]) -> Word {
        Word(
            letters
                .iter()
                .map(|&x| Letter::new(x.unsigned_abs() as usize - 1, x < 0))
                .collect(),
        )
    }

    #[test]
    fn free_and_cyclic_reduction() {
        assert_eq!(w(&[1, 2, -2, -1]).reduced(), Word::empty());
        assert_eq!(w(&[-1, 2, 1]).cyclically_reduced(), w(&[2]));
        assert_eq!(w(&[1, 2]).inverse(), w(&[-2, -1]));
        assert_eq!(w(&[1, 1, -2]).exponent_sums(2), vec![BigInt::from(2), BigInt::from(-1)]);
    }

    #[test]
    fn cyclic_group_of_order_five() {
        let p = Presentation {
            generators: 1,
            relators: vec![w(&[1, 1, 1, 1, 1])],
        };
        let Enumeration::Complete(t) = enumerate_cosets(&p, &[], 1000) else {
            panic!("should complete");
        };
        assert_eq!(t.index(), 5);
        assert!(t.verify(&p));
    }

    #[test]
    fn symmetric_group_s3() {
        // <a, b | a^2, b^3, (ab)^2>
        let p = Presentation {
            generators: 2,
            relators: vec![w(&[1, 1]), w(&[2, 2, 2]), w(&[1, 2, 1, 2])],
        };
        let Enumeration::Complete(t) = enumerate_cosets(&p, &[], 1000) else {
            panic!("should complete");
        };
        assert_eq!(t.index(), 6);
        let Enumeration::Complete(t) = enumerate_cosets(&p, &[w(&[1])], 1000) else {
            panic!("should complete");
        };
        assert_eq!(t.index(), 3);
        assert!(t.verify(&p));
    }

    #[test]
    fn infinite_group_exhausts_budget() {
        let p = Presentation {
            generators: 1,
            relators: vec![],
        };
        assert!(matches!(enumerate_cosets(&p, &[], 50), Enumeration::Exhausted { .. }));
    }

    #[test]
    fn tietze_eliminates_to_trivial() {
        // <a, b | a b^-1, b> is trivial
        let p = Presentation {
            generators: 2,
            relators: vec![w(&[1, -2]), w(&[2])],
        };
        let s = tietze_simplify(&p, 10, 1000);
        assert_eq!(s.presentation.generators, 0);
        assert!(s.presentation.relators.is_empty());
        assert!(s.translate(&w(&[1, 2, 1])).is_empty());
    }

    #[test]
    fn tietze_preserves_infinite_cyclic() {
        // <a, b | a b a^-1 b^-1, b> = Z
        let p = Presentation {
            generators: 2,
            relators: vec![w(&[1, 2, -1, -2]), w(&[2])],
        };
        let s = tietze_simplify(&p, 10, 1000);
        assert_eq!(s.presentation.generators, 1);
        assert!(s.presentation.relators.is_empty());
        assert_eq!(s.translate(&w(&[1, 2])), w(&[1]));
    }
}
