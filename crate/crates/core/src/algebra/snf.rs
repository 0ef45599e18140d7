//! Smith normal form over the integers, with transforms.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::matrix::{magnitude, IntegerMatrix};

/// `diagonal = left · m · right`, with `left` and `right` unimodular and the
/// diagonal a nonnegative divisibility chain.
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub diagonal: IntegerMatrix,
    pub left: IntegerMatrix,
    pub right: IntegerMatrix,
}

impl SmithForm {
    /// The diagonal entries, in order.
    pub fn invariants(&self) -> Vec<BigUint> {
        self.diagonal
            .diagonal()
            .iter()
            .map(|x| x.to_biguint().expect("diagonal is nonnegative"))
            .collect()
    }

    /// Checks reconstruction, the diagonal shape and divisibility chain, and
    /// that both transforms have determinant ±1.
    pub fn verify(&self, m: &IntegerMatrix) -> Result<(), String> {
        let rebuilt = self
            .left
            .mul(m)
            .and_then(|lm| lm.mul(&self.right))
            .map_err(|e| e.to_string())?;
        if rebuilt != self.diagonal {
            return Err("left · m · right differs from the diagonal form".into());
        }
        if !self.diagonal.is_diagonal() {
            return Err("result is not diagonal".into());
        }
        let diag = self.diagonal.diagonal();
        if diag.iter().any(Signed::is_negative) {
            return Err("negative diagonal entry".into());
        }
        for w in diag.windows(2) {
            let divides = if w[0].is_zero() {
                w[1].is_zero()
            } else {
                (&w[1] % &w[0]).is_zero()
            };
            if !divides {
                return Err(format!("{} does not divide {}", w[0], w[1]));
            }
        }
        for (name, t) in [("left", &self.left), ("right", &self.right)] {
            let det = t.determinant().map_err(|e| e.to_string())?;
            if !det.abs().is_one() {
                return Err(format!("{name} transform has determinant {det}"));
            }
        }
        Ok(())
    }
}

/// Smith normal form by repeated smallest-pivot row and column reduction.
///
/// # Panics
///
/// If the computed form fails [`SmithForm::verify`].
pub fn smith_normal_form(m: &IntegerMatrix) -> SmithForm {
    let form = reduce(m);
    if let Err(msg) = form.verify(m) {
        panic!("Smith normal form self-check failed: {msg}");
    }
    form
}

fn reduce(m: &IntegerMatrix) -> SmithForm {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut left = IntegerMatrix::identity(rows);
    let mut right = IntegerMatrix::identity(cols);

    for t in 0..rows.min(cols) {
        loop {
            let Some((pi, pj)) = choose_pivot(&a, t) else {
                // The remaining block is zero.
                return SmithForm {
                    diagonal: a,
                    left,
                    right,
                };
            };
            a.swap_rows(t, pi);
            left.swap_rows(t, pi);
            a.swap_cols(t, pj);
            right.swap_cols(t, pj);

            let pivot = a[(t, t)].clone();
            let mut clean = true;
            for i in t + 1..rows {
                if a[(i, t)].is_zero() {
                    continue;
                }
                let q = -a[(i, t)].div_floor(&pivot);
                a.add_row_multiple(i, t, &q);
                left.add_row_multiple(i, t, &q);
                clean &= a[(i, t)].is_zero();
            }
            for j in t + 1..cols {
                if a[(t, j)].is_zero() {
                    continue;
                }
                let q = -a[(t, j)].div_floor(&pivot);
                a.add_col_multiple(j, t, &q);
                right.add_col_multiple(j, t, &q);
                clean &= a[(t, j)].is_zero();
            }
            if !clean {
                // A smaller remainder is now available as pivot.
                continue;
            }
            if !pivot.abs().is_one() {
                if let Some(i) = (t + 1..rows).find(|&i| {
                    a.row(i)[t + 1..].iter().any(|x| !(x % &pivot).is_zero())
                }) {
                    let one = BigInt::one();
                    a.add_row_multiple(t, i, &one);
                    left.add_row_multiple(t, i, &one);
                    continue;
                }
            }
            if pivot.is_negative() {
                a.negate_row(t);
                left.negate_row(t);
            }
            break;
        }
    }
    SmithForm {
        diagonal: a,
        left,
        right,
    }
}

/// Nonzero entry of least magnitude in the block below and right of
/// `(t, t)`; ties go to the entry with the smallest Markowitz count, which
/// keeps tree Laplacians sparse while they are reduced.
fn choose_pivot(a: &IntegerMatrix, t: usize) -> Option<(usize, usize)> {
    let (rows, cols) = (a.rows(), a.cols());
    let mut row_nnz = vec![0usize; rows];
    let mut col_nnz = vec![0usize; cols];
    let mut best_mag: Option<BigUint> = None;
    for (i, nnz) in row_nnz.iter_mut().enumerate().skip(t) {
        for (j, x) in a.row(i).iter().enumerate().skip(t) {
            if x.is_zero() {
                continue;
            }
            *nnz += 1;
            col_nnz[j] += 1;
            let mag = magnitude(x);
            if best_mag.as_ref().is_none_or(|b| &mag < b) {
                best_mag = Some(mag);
            }
        }
    }
    let best_mag = best_mag?;
    let mut best: Option<((usize, usize), usize)> = None;
    for (i, &nnz) in row_nnz.iter().enumerate().skip(t) {
        if nnz == 0 {
            continue;
        }
        for (j, x) in a.row(i).iter().enumerate().skip(t) {
            if x.is_zero() || magnitude(x) != best_mag {
                continue;
            }
            let cost = (nnz - 1) * (col_nnz[j] - 1);
            if best.is_none_or(|(_, c)| cost < c) {
                best = Some(((i, j), cost));
            }
        }
    }
    best.map(|(pos, _)| pos)
}
