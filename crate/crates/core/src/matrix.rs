//! Dense matrices over arbitrary-precision integers.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Result, SandpileError};

/// A dense, row-major matrix of exact integers.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntegerMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntegerMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntegerMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from row vectors; every row must have the same length.
    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(SandpileError::DimensionMismatch {
                expected: cols,
                found: bad.len(),
            });
        }
        let entries = rows
            .iter()
            .flat_map(|r| r.iter().cloned().map(Into::into))
            .collect();
        Ok(IntegerMatrix {
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    /// True when every off-diagonal entry is zero.
    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| {
            self.row(i)
                .iter()
                .enumerate()
                .all(|(j, x)| i == j || x.is_zero())
        })
    }

    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)].clone())
            .collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|x| !x.is_zero()).count()
    }

    /// Matrix product; zero entries of `self` are skipped.
    pub fn mul(&self, other: &IntegerMatrix) -> Result<IntegerMatrix> {
        if self.cols != other.rows {
            return Err(SandpileError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = IntegerMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let brow = other.row(k);
                let base = i * other.cols;
                for (j, b) in brow.iter().enumerate() {
                    if !b.is_zero() {
                        out.entries[base + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        if v.len() != self.cols {
            return Err(SandpileError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let cols = self.cols;
        for j in 0..cols {
            self.entries.swap(a * cols + j, b * cols + j);
        }
    }

    pub(crate) fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let cols = self.cols;
        for i in 0..self.rows {
            self.entries.swap(i * cols + a, i * cols + b);
        }
    }

    /// row[target] += factor * row[source]
    pub(crate) fn add_row_multiple(&mut self, target: usize, source: usize, factor: &BigInt) {
        debug_assert_ne!(target, source);
        let cols = self.cols;
        for j in 0..cols {
            let s = &self.entries[source * cols + j];
            if s.is_zero() {
                continue;
            }
            let delta = factor * s;
            self.entries[target * cols + j] += delta;
        }
    }

    /// col[target] += factor * col[source]
    pub(crate) fn add_col_multiple(&mut self, target: usize, source: usize, factor: &BigInt) {
        debug_assert_ne!(target, source);
        let cols = self.cols;
        for i in 0..self.rows {
            let s = &self.entries[i * cols + source];
            if s.is_zero() {
                continue;
            }
            let delta = factor * s;
            self.entries[i * cols + target] += delta;
        }
    }

    pub(crate) fn negate_row(&mut self, i: usize) {
        let cols = self.cols;
        for x in &mut self.entries[i * cols..(i + 1) * cols] {
            *x = -std::mem::take(x);
        }
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    ///
    /// Rows are held sparsely and pivots are chosen by a Markowitz count, so
    /// tree-like Laplacians eliminate with no fill. A row that is not touched
    /// by a step is only implicitly rescaled: its stored values are multiplied
    /// by `current_pivot / stamp` when next materialized, which is an exact
    /// division because every live entry is a minor of the input.
    pub fn determinant(&self) -> Result<BigInt> {
        if !self.is_square() {
            return Err(SandpileError::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        Ok(SparseBareiss::new(self).run())
    }
}

type SparseRow = Vec<(usize, BigInt)>;

struct SparseBareiss {
    rows: Vec<Option<SparseRow>>,
    stamps: Vec<BigInt>,
    col_rows: Vec<BTreeSet<usize>>,
    n: usize,
}

impl SparseBareiss {
    fn new(m: &IntegerMatrix) -> Self {
        let n = m.rows;
        let mut col_rows = vec![BTreeSet::new(); n];
        let rows = (0..n)
            .map(|i| {
                let row: SparseRow = m
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(j, x)| (j, x.clone()))
                    .collect();
                for &(j, _) in &row {
                    col_rows[j].insert(i);
                }
                Some(row)
            })
            .collect();
        SparseBareiss {
            rows,
            stamps: vec![BigInt::one(); n],
            col_rows,
            n,
        }
    }

    fn materialize(&mut self, i: usize, pivot: &BigInt) {
        if &self.stamps[i] == pivot {
            return;
        }
        let stamp = std::mem::replace(&mut self.stamps[i], pivot.clone());
        if let Some(row) = self.rows[i].as_mut() {
            for (_, x) in row.iter_mut() {
                *x = &*x * pivot / &stamp;
            }
        }
    }

    fn run(mut self) -> BigInt {
        let n = self.n;
        let mut prev = BigInt::one();
        let mut row_order = Vec::with_capacity(n);
        let mut col_order = Vec::with_capacity(n);
        for _ in 0..n {
            let Some(r) = (0..n)
                .filter(|&i| self.rows[i].is_some())
                .min_by_key(|&i| (self.rows[i].as_ref().map_or(0, Vec::len), i))
            else {
                break;
            };
            let row_len = self.rows[r].as_ref().map_or(0, Vec::len);
            if row_len == 0 {
                return BigInt::zero();
            }
            let c = self.rows[r]
                .as_ref()
                .into_iter()
                .flatten()
                .map(|&(j, _)| j)
                .min_by_key(|&j| (self.col_rows[j].len(), j))
                .expect("row is nonempty");

            self.materialize(r, &prev);
            let pivot_row = self.rows[r].take().expect("active row");
            for &(j, _) in &pivot_row {
                self.col_rows[j].remove(&r);
            }
            let pivot = pivot_row
                .iter()
                .find(|(j, _)| *j == c)
                .map(|(_, x)| x.clone())
                .expect("pivot column present");

            let targets: Vec<usize> = self.col_rows[c].iter().copied().collect();
            for i in targets {
                self.materialize(i, &prev);
                let row = self.rows[i].take().expect("active row");
                let factor = row
                    .iter()
                    .find(|(j, _)| *j == c)
                    .map(|(_, x)| x.clone())
                    .expect("column entry present");
                for &(j, _) in &row {
                    self.col_rows[j].remove(&i);
                }
                let updated = combine(&row, &pivot, &pivot_row, &factor, &prev, c);
                for &(j, _) in &updated {
                    self.col_rows[j].insert(i);
                }
                self.rows[i] = Some(updated);
                self.stamps[i] = pivot.clone();
            }
            row_order.push(r);
            col_order.push(c);
            prev = pivot;
        }
        if row_order.len() < n {
            return BigInt::zero();
        }
        if permutation_is_odd(&row_order) != permutation_is_odd(&col_order) {
            -prev
        } else {
            prev
        }
    }
}

/// (pivot * row - factor * pivot_row) / prev, dropping column `skip`.
fn combine(
    row: &SparseRow,
    pivot: &BigInt,
    pivot_row: &SparseRow,
    factor: &BigInt,
    prev: &BigInt,
    skip: usize,
) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + pivot_row.len());
    let (mut a, mut b) = (0, 0);
    loop {
        let next = match (row.get(a), pivot_row.get(b)) {
            (None, None) => break,
            (Some((ja, xa)), None) => {
                a += 1;
                (*ja, pivot * xa)
            }
            (None, Some((jb, xb))) => {
                b += 1;
                (*jb, -(factor * xb))
            }
            (Some((ja, xa)), Some((jb, xb))) => {
                if ja < jb {
                    a += 1;
                    (*ja, pivot * xa)
                } else if jb < ja {
                    b += 1;
                    (*jb, -(factor * xb))
                } else {
                    a += 1;
                    b += 1;
                    (*ja, pivot * xa - factor * xb)
                }
            }
        };
        if next.0 == skip || next.1.is_zero() {
            continue;
        }
        debug_assert!((&next.1 % prev).is_zero(), "inexact Bareiss division");
        out.push((next.0, next.1 / prev));
    }
    out
}

fn permutation_is_odd(perm: &[usize]) -> bool {
    // `perm` lists distinct indices 0..len in some order.
    let mut seen = vec![false; perm.len()];
    let mut transpositions = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 1
}

impl Index<(usize, usize)> for IntegerMatrix {
    type Output = BigInt;

    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntegerMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Debug for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntegerMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Absolute value helper used by pivot searches.
pub(crate) fn magnitude(x: &BigInt) -> num_bigint::BigUint {
    x.abs().to_biguint().expect("absolute value is nonnegative")
}
