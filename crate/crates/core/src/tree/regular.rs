//! Wired regular trees: level vectors, the root subgroup and its cyclic
//! lexicographic order, the word automorphisms and symmetrization.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::chipfiring::{ChipConfig, Sandpile};
use crate::error::{Result, SandpileError};
use crate::graph;
use crate::tree::WiredTree;

/// A configuration that is constant on levels, written `(a_1, …, a_{n-1})`
/// with `a_1` at the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelVector {
    entries: Vec<u64>,
}

impl LevelVector {
    /// Every entry must lie in `0..d`.
    pub fn new(entries: Vec<u64>, d: usize) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|&&a| a >= d as u64) {
            return Err(SandpileError::InvalidParameter(format!(
                "level entry {bad} exceeds d - 1 = {}",
                d - 1
            )));
        }
        Ok(LevelVector { entries })
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The shape of a recurrent level configuration: a zero entry forces
    /// every level above it to hold `d - 1` chips.
    pub fn is_recurrent_form(&self, d: usize) -> bool {
        let full = d as u64 - 1;
        self.entries.iter().enumerate().all(|(i, &a)| {
            a <= full && (a != 0 || self.entries[..i].iter().all(|&b| b == full))
        })
    }
}

impl fmt::Display for LevelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// The next recurrent level vector in cyclic lexicographic order: what one
/// more chip at the root produces.
pub fn lex_successor(v: &LevelVector, d: usize) -> Result<LevelVector> {
    if d < 3 || v.is_empty() || !v.is_recurrent_form(d) {
        return Err(SandpileError::InvalidParameter(format!(
            "{v} is not a recurrent level vector for d = {d}"
        )));
    }
    let full = d as u64 - 1;
    let mut next = v.entries.clone();
    match next.iter().position(|&a| a < full) {
        Some(0) => next[0] += 1,
        Some(j) => {
            // The cascade empties level j-1 and drops a chip on level j.
            next[j - 1] = 0;
            next[j] += 1;
        }
        None => {
            let last = next.len() - 1;
            next[last] = 0;
        }
    }
    Ok(LevelVector { entries: next })
}

/// The wired `d`-regular tree of height `n`, with non-sink vertices indexed
/// by words of length at most `n - 2` over `1..=d-1`.
#[derive(Debug, Clone)]
pub struct RegularTree {
    d: usize,
    n: usize,
    tree: WiredTree,
    words: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    levels: Vec<Vec<usize>>,
}

impl RegularTree {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        graph::check_regular_params(d, n)?;
        let tree = WiredTree::regular(d, n)?;
        // Positions are breadth-first with children in letter order, so the
        // words can be regenerated in the same order.
        let mut words: Vec<Vec<u32>> = vec![Vec::new()];
        let mut start = 0;
        for _ in 1..n - 1 {
            let end = words.len();
            for i in start..end {
                for letter in 1..d as u32 {
                    let mut w = words[i].clone();
                    w.push(letter);
                    words.push(w);
                }
            }
            start = end;
        }
        assert_eq!(words.len(), tree.size());
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let mut levels = vec![Vec::new(); n - 1];
        for (p, w) in words.iter().enumerate() {
            levels[w.len()].push(p);
        }
        Ok(RegularTree {
            d,
            n,
            tree,
            words,
            index,
            levels,
        })
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn height(&self) -> usize {
        self.n
    }

    pub fn tree(&self) -> &WiredTree {
        &self.tree
    }

    pub fn word(&self, p: usize) -> &[u32] {
        &self.words[p]
    }

    pub fn position_of_word(&self, w: &[u32]) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Positions on each level, root level first.
    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn config_of(&self, v: &LevelVector) -> Result<ChipConfig> {
        if v.len() != self.n - 1 {
            return Err(SandpileError::DimensionMismatch {
                expected: self.n - 1,
                found: v.len(),
            });
        }
        let mut u = ChipConfig::zeros(self.tree.size());
        for (level, &a) in self.levels.iter().zip(&v.entries) {
            for &p in level {
                u.set(p, BigUint::from(a));
            }
        }
        Ok(u)
    }

    /// The level vector of `u` if it is stable and constant on levels.
    pub fn level_vector_of(&self, u: &ChipConfig) -> Option<LevelVector> {
        if u.len() != self.tree.size() {
            return None;
        }
        let entries = self
            .levels
            .iter()
            .map(|level| {
                let a = u.get(level[0]);
                level.iter().all(|&p| u.get(p) == a).then(|| a.to_u64()).flatten()
            })
            .collect::<Option<Vec<u64>>>()?;
        LevelVector::new(entries, self.d).ok()
    }

    /// `(k r̂)°` for `k = 1..=count`, by repeated addition of r̂.
    pub fn root_multiples(&self, count: usize) -> Result<Vec<ChipConfig>> {
        let sp = Sandpile::new(self.tree.graph());
        let root_hat = sp.vertex_rep(self.tree.root())?;
        let mut out = Vec::with_capacity(count);
        let mut acc = root_hat.clone();
        for _ in 0..count {
            out.push(acc.clone());
            acc = sp.add_and_stabilize(&acc, &root_hat)?;
        }
        Ok(out)
    }

    /// `count` vectors of the lexicographic orbit beginning at `start`.
    pub fn lex_orbit(&self, start: &LevelVector, count: usize) -> Result<Vec<LevelVector>> {
        if start.len() != self.n - 1 {
            return Err(SandpileError::DimensionMismatch {
                expected: self.n - 1,
                found: start.len(),
            });
        }
        let mut out = Vec::with_capacity(count);
        let mut v = start.clone();
        for _ in 0..count {
            let next = lex_successor(&v, self.d)?;
            out.push(std::mem::replace(&mut v, next));
        }
        Ok(out)
    }

    fn check_alpha(&self, alpha: &[u32]) -> Result<()> {
        if alpha.len() != self.n - 2 {
            return Err(SandpileError::DimensionMismatch {
                expected: self.n - 2,
                found: alpha.len(),
            });
        }
        Ok(())
    }

    /// σ_α applied to a word: letter `i` is shifted by `alpha[i]` modulo
    /// `d - 1`, backwards when `inverse` is set.
    fn shift_word(&self, w: &[u32], alpha: &[u32], inverse: bool) -> Vec<u32> {
        let m = self.d as u32 - 1;
        w.iter()
            .zip(alpha)
            .map(|(&letter, &a)| {
                let shift = if inverse { m - a % m } else { a % m };
                (letter - 1 + shift) % m + 1
            })
            .collect()
    }

    /// The vertex permutation of σ_α, as positions.
    pub fn automorphism(&self, alpha: &[u32]) -> Result<Vec<usize>> {
        self.check_alpha(alpha)?;
        Ok(self
            .words
            .iter()
            .map(|w| self.index[&self.shift_word(w, alpha, false)])
            .collect())
    }

    /// `(σ_α u)(x) = u(σ_α⁻¹ x)`.
    pub fn level_automorphism(&self, alpha: &[u32], u: &ChipConfig) -> Result<ChipConfig> {
        self.check_alpha(alpha)?;
        if u.len() != self.tree.size() {
            return Err(SandpileError::DimensionMismatch {
                expected: self.tree.size(),
                found: u.len(),
            });
        }
        Ok(ChipConfig::new(
            self.words
                .iter()
                .map(|w| u.get(self.index[&self.shift_word(w, alpha, true)]).clone())
                .collect(),
        ))
    }

    /// Every α: [n-2] → [d-1], with letters written as `0..d-1`.
    pub fn all_alphas(&self) -> Vec<Vec<u32>> {
        let m = self.d as u32 - 1;
        let mut out = vec![Vec::new()];
        for _ in 0..self.n - 2 {
            out = out
                .into_iter()
                .flat_map(|a| {
                    (0..m).map(move |x| {
                        let mut b = a.clone();
                        b.push(x);
                        b
                    })
                })
                .collect();
        }
        out
    }

    /// `p(u) = ((d-1)² Σ_α σ_α u)°`, a retraction of the sandpile group onto
    /// the root subgroup.
    pub fn symmetrize(&self, sp: &Sandpile<'_>, u: &ChipConfig) -> Result<ChipConfig> {
        if !sp.is_recurrent_burning(u)? {
            return Err(SandpileError::NotRecurrent);
        }
        let mut total = ChipConfig::zeros(self.tree.size());
        for alpha in self.all_alphas() {
            total = total.add(&self.level_automorphism(&alpha, u)?)?;
        }
        let coefficient = BigUint::from((self.d - 1) * (self.d - 1));
        sp.stable_part(&total.scale(&coefficient))
    }

    /// True when `u` is constant on every level.
    pub fn is_level_constant(&self, u: &ChipConfig) -> bool {
        u.len() == self.tree.size()
            && self
                .levels
                .iter()
                .all(|level| level.iter().all(|&p| u.get(p) == u.get(level[0])))
    }
}
