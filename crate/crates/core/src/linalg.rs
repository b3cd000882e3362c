//! Exact integer matrices: Smith normal form with unimodular transforms,
//! column Hermite form, integer linear solving and finitely generated
//! abelian quotients.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Dense row-major matrix over the integers.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix{:?}", self.to_rows())
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_i64_rows(rows: usize, cols: usize, entries: &[Vec<i64>]) -> Self {
        assert_eq!(entries.len(), rows, "row count mismatch");
        let mut m = Self::zeros(rows, cols);
        for (i, row) in entries.iter().enumerate() {
            assert_eq!(row.len(), cols, "column count mismatch in row {i}");
            for (j, v) in row.iter().enumerate() {
                m.data[i * cols + j] = BigInt::from(*v);
            }
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, entries: Vec<Vec<BigInt>>) -> Self {
        assert_eq!(entries.len(), rows, "row count mismatch");
        let mut data = Vec::with_capacity(rows * cols);
        for row in entries {
            assert_eq!(row.len(), cols, "column count mismatch");
            data.extend(row);
        }
        IntMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in matrix-vector product");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows, "row mismatch in hcat");
        let cols = self.cols + other.cols;
        let mut out = Self::zeros(self.rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).clone());
            }
            for j in 0..other.cols {
                out.set(i, self.cols + j, other.get(i, j).clone());
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[target] += c * row[source]
    fn add_row(&mut self, target: usize, source: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let s = &self.data[source * self.cols + j];
            if !s.is_zero() {
                let delta = c * s;
                self.data[target * self.cols + j] += delta;
            }
        }
    }

    /// col[target] += c * col[source]
    fn add_col(&mut self, target: usize, source: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let s = &self.data[i * self.cols + source];
            if !s.is_zero() {
                let delta = c * s;
                self.data[i * self.cols + target] += delta;
            }
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -std::mem::take(&mut self.data[i * self.cols + j]);
            self.data[i * self.cols + j] = v;
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -std::mem::take(&mut self.data[i * self.cols + j]);
            self.data[i * self.cols + j] = v;
        }
    }
}

/// `p * a * q = diag(diag)` with `p`, `q` unimodular.
#[derive(Clone, Debug)]
pub struct Smith {
    /// Length `min(rows, cols)`; nonnegative, each entry divides the next,
    /// zeros trailing.
    pub diag: Vec<BigInt>,
    pub p: IntMatrix,
    pub p_inv: IntMatrix,
    pub q: IntMatrix,
    pub q_inv: IntMatrix,
}

impl Smith {
    pub fn rank(&self) -> usize {
        self.diag.iter().filter(|d| !d.is_zero()).count()
    }
}

struct SmithState {
    a: IntMatrix,
    p: IntMatrix,
    p_inv: IntMatrix,
    q: IntMatrix,
    q_inv: IntMatrix,
}

impl SmithState {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.a.swap_rows(i, j);
        self.p.swap_rows(i, j);
        self.p_inv.swap_cols(i, j);
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        self.a.swap_cols(i, j);
        self.q.swap_cols(i, j);
        self.q_inv.swap_rows(i, j);
    }

    fn add_row(&mut self, target: usize, source: usize, c: &BigInt) {
        self.a.add_row(target, source, c);
        self.p.add_row(target, source, c);
        self.p_inv.add_col(source, target, &-c);
    }

    fn add_col(&mut self, target: usize, source: usize, c: &BigInt) {
        self.a.add_col(target, source, c);
        self.q.add_col(target, source, c);
        self.q_inv.add_row(source, target, &-c);
    }

    fn negate_row(&mut self, i: usize) {
        self.a.negate_row(i);
        self.p.negate_row(i);
        self.p_inv.negate_col(i);
    }

    /// Smallest nonzero |entry| in the trailing block starting at (t, t).
    fn min_entry(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for i in t..self.a.rows {
            for j in t..self.a.cols {
                let v = self.a.get(i, j);
                if v.is_zero() {
                    continue;
                }
                match best {
                    Some((bi, bj)) if self.a.get(bi, bj).abs() <= v.abs() => {}
                    _ => best = Some((i, j)),
                }
            }
        }
        best
    }
}

/// Smith normal form by minimal-absolute-value pivoting.
pub fn smith_normal_form(a: &IntMatrix) -> Smith {
    let (m, n) = (a.rows, a.cols);
    let mut st = SmithState {
        a: a.clone(),
        p: IntMatrix::identity(m),
        p_inv: IntMatrix::identity(m),
        q: IntMatrix::identity(n),
        q_inv: IntMatrix::identity(n),
    };
    let steps = m.min(n);
    for t in 0..steps {
        let Some((pi, pj)) = st.min_entry(t) else {
            break;
        };
        st.swap_rows(t, pi);
        st.swap_cols(t, pj);
        loop {
            let pivot = st.a.get(t, t).clone();
            let mut dirty = false;
            for i in (t + 1)..m {
                let v = st.a.get(i, t).clone();
                if v.is_zero() {
                    continue;
                }
                let quot = v.div_floor(&pivot);
                st.add_row(i, t, &-quot);
                if !st.a.get(i, t).is_zero() {
                    dirty = true;
                }
            }
            for j in (t + 1)..n {
                let v = st.a.get(t, j).clone();
                if v.is_zero() {
                    continue;
                }
                let quot = v.div_floor(&pivot);
                st.add_col(j, t, &-quot);
                if !st.a.get(t, j).is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                // a remainder smaller than the pivot exists in row or column t
                let mut best = (t, t);
                for i in (t + 1)..m {
                    let v = st.a.get(i, t);
                    if !v.is_zero() && v.abs() < st.a.get(best.0, best.1).abs() {
                        best = (i, t);
                    }
                }
                for j in (t + 1)..n {
                    let v = st.a.get(t, j);
                    if !v.is_zero() && v.abs() < st.a.get(best.0, best.1).abs() {
                        best = (t, j);
                    }
                }
                st.swap_rows(t, best.0);
                st.swap_cols(t, best.1);
                continue;
            }
            let mut offender = None;
            'search: for i in (t + 1)..m {
                for j in (t + 1)..n {
                    if !st.a.get(i, j).is_multiple_of(&pivot) {
                        offender = Some(i);
                        break 'search;
                    }
                }
            }
            match offender {
                Some(i) => st.add_row(t, i, &BigInt::one()),
                None => break,
            }
        }
        if st.a.get(t, t).is_negative() {
            st.negate_row(t);
        }
    }
    let diag = (0..steps).map(|i| st.a.get(i, i).clone()).collect();
    Smith {
        diag,
        p: st.p,
        p_inv: st.p_inv,
        q: st.q,
        q_inv: st.q_inv,
    }
}

/// `a * u = h` with `u` unimodular and `h` in column echelon form: pivot rows
/// strictly increase with the pivot column, pivots are positive, every entry
/// of a pivot row to the right of its pivot is zero and every entry to the
/// left lies in `[0, pivot)`.
#[derive(Clone, Debug)]
pub struct ColumnHermite {
    pub h: IntMatrix,
    pub u: IntMatrix,
    /// `(row, column)` of each pivot, in column order.
    pub pivots: Vec<(usize, usize)>,
}

pub fn column_hermite_form(a: &IntMatrix) -> ColumnHermite {
    let (m, n) = (a.rows, a.cols);
    let mut h = a.clone();
    let mut u = IntMatrix::identity(n);
    let mut pivots = Vec::new();
    let mut col = 0;
    for row in 0..m {
        if col == n {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for j in col..n {
                let v = h.get(row, j);
                if v.is_zero() {
                    continue;
                }
                match best {
                    Some(b) if h.get(row, b).abs() <= v.abs() => {}
                    _ => best = Some(j),
                }
            }
            let Some(b) = best else {
                break;
            };
            h.swap_cols(col, b);
            u.swap_cols(col, b);
            let pivot = h.get(row, col).clone();
            let mut clean = true;
            for j in (col + 1)..n {
                let v = h.get(row, j).clone();
                if v.is_zero() {
                    continue;
                }
                let quot = -v.div_floor(&pivot);
                h.add_col(j, col, &quot);
                u.add_col(j, col, &quot);
                if !h.get(row, j).is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
        if h.get(row, col).is_zero() {
            continue;
        }
        if h.get(row, col).is_negative() {
            h.negate_col(col);
            u.negate_col(col);
        }
        let pivot = h.get(row, col).clone();
        for j in 0..col {
            let quot = -h.get(row, j).div_floor(&pivot);
            h.add_col(j, col, &quot);
            u.add_col(j, col, &quot);
        }
        pivots.push((row, col));
        col += 1;
    }
    ColumnHermite { h, u, pivots }
}

impl ColumnHermite {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Integer solution of `a x = b`, if one exists.
    pub fn solve(&self, b: &[BigInt]) -> Option<Vec<BigInt>> {
        assert_eq!(b.len(), self.h.rows, "right-hand side has wrong length");
        let mut residual = b.to_vec();
        let mut y = vec![BigInt::zero(); self.h.cols];
        for &(row, col) in &self.pivots {
            let pivot = self.h.get(row, col);
            let (quot, rem) = residual[row].div_rem(pivot);
            if !rem.is_zero() {
                return None;
            }
            if !quot.is_zero() {
                for (i, r) in residual.iter_mut().enumerate() {
                    let hv = self.h.get(i, col);
                    if !hv.is_zero() {
                        *r -= &quot * hv;
                    }
                }
            }
            y[col] = quot;
        }
        if residual.iter().any(|r| !r.is_zero()) {
            return None;
        }
        Some(self.u.mul_vec(&y))
    }

    /// Basis of the integer kernel of `a`.
    pub fn kernel_basis(&self) -> Vec<Vec<BigInt>> {
        (self.rank()..self.h.cols).map(|j| self.u.column(j)).collect()
    }
}

/// Invariants of a finitely generated abelian group: free rank plus torsion
/// coefficients `d_1 | d_2 | ...`, each at least 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianGroupInv {
    pub rank: usize,
    pub torsion: Vec<BigInt>,
}

impl AbelianGroupInv {
    pub fn trivial() -> Self {
        AbelianGroupInv {
            rank: 0,
            torsion: Vec::new(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    /// Number of coordinates used by [`AbelianQuotient::coordinates`].
    pub fn dimension(&self) -> usize {
        self.rank + self.torsion.len()
    }

    /// Moduli of the coordinates: torsion coefficients then zeros.
    pub fn moduli(&self) -> Vec<BigInt> {
        let mut m = self.torsion.clone();
        m.extend(std::iter::repeat_n(BigInt::zero(), self.rank));
        m
    }

    pub fn check_divisibility(&self) -> bool {
        self.torsion.iter().all(|d| *d >= BigInt::from(2))
            && self.torsion.windows(2).all(|w| w[1].is_multiple_of(&w[0]))
    }
}

impl fmt::Display for AbelianGroupInv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts: Vec<String> = self.torsion.iter().map(|d| format!("Z/{d}")).collect();
        match self.rank {
            0 => {}
            1 => parts.push("Z".into()),
            r => parts.push(format!("Z^{r}")),
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// The group `Z^n / span(relations)` together with the coordinate change
/// into its invariant-factor decomposition.
#[derive(Clone, Debug)]
pub struct AbelianQuotient {
    generators: usize,
    invariants: AbelianGroupInv,
    /// Rows of `p` kept as coordinates (those whose invariant factor is not 1).
    kept: Vec<usize>,
    moduli: Vec<BigInt>,
    p: IntMatrix,
    p_inv: IntMatrix,
}

impl AbelianQuotient {
    /// `relations` are row vectors of length `generators`.
    pub fn new(generators: usize, relations: &[Vec<BigInt>]) -> Self {
        let mut rel_t = IntMatrix::zeros(generators, relations.len());
        for (j, rel) in relations.iter().enumerate() {
            assert_eq!(rel.len(), generators, "relation has wrong length");
            for (i, v) in rel.iter().enumerate() {
                rel_t.set(i, j, v.clone());
            }
        }
        let snf = smith_normal_form(&rel_t);
        let mut kept = Vec::new();
        let mut moduli = Vec::new();
        let mut torsion = Vec::new();
        let mut rank = 0;
        for i in 0..generators {
            let d = snf.diag.get(i).cloned().unwrap_or_else(BigInt::zero);
            if d.is_one() {
                continue;
            }
            if d.is_zero() {
                rank += 1;
            } else {
                torsion.push(d.clone());
            }
            kept.push(i);
            moduli.push(d);
        }
        AbelianQuotient {
            generators,
            invariants: AbelianGroupInv { rank, torsion },
            kept,
            moduli,
            p: snf.p,
            p_inv: snf.p_inv,
        }
    }

    pub fn invariants(&self) -> &AbelianGroupInv {
        &self.invariants
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    /// Coordinates of the class of `v` (torsion coordinates reduced).
    pub fn coordinates(&self, v: &[BigInt]) -> Vec<BigInt> {
        let pv = self.p.mul_vec(v);
        self.kept
            .iter()
            .zip(&self.moduli)
            .map(|(&i, d)| reduce_mod(&pv[i], d))
            .collect()
    }

    /// A vector in `Z^n` representing the `k`-th invariant generator.
    pub fn representative(&self, k: usize) -> Vec<BigInt> {
        self.p_inv.column(self.kept[k])
    }
}

/// Canonical residue in `[0, d)` for `d > 0`; identity for `d = 0`.
pub fn reduce_mod(v: &BigInt, d: &BigInt) -> BigInt {
    if d.is_zero() {
        v.clone()
    } else {
        v.mod_floor(d)
    }
}

pub fn to_bigints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|x| BigInt::from(*x)).collect()
}

/// True iff `m` maps onto the group with the given coordinate moduli
/// (zero for a free coordinate).
pub fn is_surjective_onto(m: &IntMatrix, target_moduli: &[BigInt]) -> bool {
    assert_eq!(m.rows(), target_moduli.len());
    let mut rel = IntMatrix::zeros(m.rows(), target_moduli.len());
    for (i, d) in target_moduli.iter().enumerate() {
        rel.set(i, i, d.clone());
    }
    let s = smith_normal_form(&m.hcat(&rel));
    s.diag.len() == m.rows() && s.diag.iter().all(One::is_one)
}

/// `a` and `b` agree as homomorphisms into a group with these moduli.
pub fn maps_agree(a: &IntMatrix, b: &IntMatrix, target_moduli: &[BigInt]) -> bool {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return false;
    }
    (0..a.rows()).all(|i| {
        (0..a.cols()).all(|j| reduce_mod(a.get(i, j), &target_moduli[i]) == reduce_mod(b.get(i, j), &target_moduli[i]))
    })
}
