//! Finite abelian groups in invariant-factor form.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::snf::smith_normal_form;
use crate::chipfiring::big_number;
use crate::error::{Result, SandpileError};
use crate::graph::SinkedMultigraph;

/// Invariant factors `d_1 | d_2 | … | d_k`, all at least 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupDecomposition {
    invariant_factors: Vec<BigUint>,
    order: BigUint,
}

impl GroupDecomposition {
    /// Accepts any diagonal of a Smith form; entries equal to 1 are dropped.
    ///
    /// # Panics
    ///
    /// On a zero entry (infinite group) or a broken divisibility chain.
    pub fn from_smith_diagonal(diagonal: &[BigUint]) -> Self {
        let factors: Vec<BigUint> = diagonal.iter().filter(|d| !d.is_one()).cloned().collect();
        assert!(
            factors.iter().all(|d| !d.is_zero()),
            "group is infinite: zero invariant factor"
        );
        assert!(
            factors.windows(2).all(|w| (&w[1] % &w[0]).is_zero()),
            "invariant factors must form a divisibility chain"
        );
        let order = factors.iter().product();
        GroupDecomposition {
            invariant_factors: factors,
            order,
        }
    }

    pub fn trivial() -> Self {
        GroupDecomposition {
            invariant_factors: Vec::new(),
            order: BigUint::one(),
        }
    }

    pub fn invariant_factors(&self) -> &[BigUint] {
        &self.invariant_factors
    }

    pub fn order(&self) -> &BigUint {
        &self.order
    }

    /// Minimal number of generators.
    pub fn rank(&self) -> usize {
        self.invariant_factors.len()
    }

    pub fn exponent(&self) -> BigUint {
        self.invariant_factors.last().cloned().unwrap_or_else(BigUint::one)
    }

    pub fn is_cyclic(&self) -> bool {
        self.invariant_factors.len() <= 1
    }

    pub fn to_json(&self) -> GroupDecompositionJson {
        GroupDecompositionJson {
            invariant_factors: self.invariant_factors.iter().map(big_number).collect(),
            order: self.order.to_string(),
        }
    }
}

impl fmt::Display for GroupDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.invariant_factors.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .invariant_factors
            .iter()
            .map(|d| format!("Z/{d}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Serialized group: exact integer factors, order as a decimal string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDecompositionJson {
    pub invariant_factors: Vec<serde_json::Number>,
    pub order: String,
}

/// A direct sum of cyclic groups written as `(modulus, multiplicity)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CyclicSummandList {
    summands: Vec<(BigUint, u64)>,
}

impl CyclicSummandList {
    /// Zero multiplicities are dropped; moduli must be positive.
    pub fn new(summands: Vec<(BigUint, u64)>) -> Result<Self> {
        if summands.iter().any(|(q, _)| q.is_zero()) {
            return Err(SandpileError::InvalidParameter(
                "cyclic summand modulus must be positive".into(),
            ));
        }
        Ok(CyclicSummandList {
            summands: summands.into_iter().filter(|&(_, m)| m > 0).collect(),
        })
    }

    pub fn from_u64s(summands: &[(u64, u64)]) -> Result<Self> {
        Self::new(
            summands
                .iter()
                .map(|&(q, m)| (BigUint::from(q), m))
                .collect(),
        )
    }

    pub fn summands(&self) -> &[(BigUint, u64)] {
        &self.summands
    }

    pub fn order(&self) -> BigUint {
        self.summands
            .iter()
            .map(|(q, m)| num_traits::pow(q.clone(), *m as usize))
            .product()
    }

    /// Canonical invariant factors, by merging the prime-power
    /// decompositions of all summands.
    pub fn to_decomposition(&self) -> GroupDecomposition {
        // prime -> exponents of the prime-power cyclic parts, with multiplicity
        let mut powers: BTreeMap<BigUint, Vec<(u32, u64)>> = BTreeMap::new();
        for (q, mult) in &self.summands {
            for (p, e) in factorize(q) {
                powers.entry(p).or_default().push((e, *mult));
            }
        }
        let mut len: u64 = 0;
        for list in powers.values_mut() {
            list.sort_by_key(|&(e, _)| std::cmp::Reverse(e));
            len = len.max(list.iter().map(|&(_, m)| m).sum());
        }
        let len = usize::try_from(len).expect("summand count fits in memory");
        // factors[k] is the k-th largest invariant factor
        let mut factors = vec![BigUint::one(); len];
        for (p, list) in &powers {
            let mut k = 0;
            for &(e, m) in list {
                let pe = num_traits::pow(p.clone(), e as usize);
                for _ in 0..m {
                    factors[k] *= &pe;
                    k += 1;
                }
            }
        }
        factors.reverse();
        GroupDecomposition::from_smith_diagonal(&factors)
    }
}

impl fmt::Display for CyclicSummandList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .summands
            .iter()
            .map(|(q, m)| format!("Z_{q}^{m}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Prime factorization by trial division.
pub fn factorize(n: &BigUint) -> Vec<(BigUint, u32)> {
    let mut out = Vec::new();
    let mut rest = n.clone();
    let mut p = BigUint::from(2u32);
    while &p * &p <= rest {
        let mut e = 0;
        while (&rest % &p).is_zero() {
            rest /= &p;
            e += 1;
        }
        if e > 0 {
            out.push((p.clone(), e));
        }
        p += if p == BigUint::from(2u32) { 1u32 } else { 2u32 };
    }
    if rest > BigUint::one() {
        out.push((rest, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// True iff the group described by `summands` is isomorphic to `group`.
pub fn decomposition_equals(summands: &CyclicSummandList, group: &GroupDecomposition) -> bool {
    &summands.to_decomposition() == group
}

/// Number of invariant factors divisible by `p`.
pub fn sylow_rank(group: &GroupDecomposition, p: u64) -> Result<usize> {
    if !is_prime(p) {
        return Err(SandpileError::NotPrime(p));
    }
    Ok(group
        .invariant_factors
        .iter()
        .filter(|d| (*d % p).is_zero())
        .count())
}

/// The sandpile group of `g`, from the Smith form of its reduced Laplacian.
///
/// # Panics
///
/// If the group order differs from the spanning-tree count.
pub fn sandpile_group(g: &SinkedMultigraph) -> GroupDecomposition {
    let lap = g.reduced_laplacian();
    if lap.rows() == 0 {
        return GroupDecomposition::trivial();
    }
    let form = smith_normal_form(&lap);
    let group = GroupDecomposition::from_smith_diagonal(&form.invariants());
    assert_eq!(
        group.order(),
        &g.spanning_tree_count(),
        "group order disagrees with the spanning-tree count"
    );
    group
}

/// Sylow p-rank of a summand list without canonicalizing it.
pub fn summand_sylow_rank(summands: &CyclicSummandList, p: u64) -> u64 {
    summands
        .summands()
        .iter()
        .filter(|(q, _)| (q % p).is_zero())
        .map(|&(_, m)| m)
        .sum()
}

/// Least common multiple of a list; 1 for an empty list.
pub fn lcm_all<'a>(xs: impl IntoIterator<Item = &'a BigUint>) -> BigUint {
    xs.into_iter().fold(BigUint::one(), |acc, x| acc.lcm(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn dec(xs: &[u64]) -> GroupDecomposition {
        let v: Vec<BigUint> = xs.iter().map(|&x| BigUint::from(x)).collect();
        GroupDecomposition::from_smith_diagonal(&v)
    }

    #[test]
    fn summand_comparison() {
        let a = CyclicSummandList::from_u64s(&[(3, 2), (7, 1), (15, 1)]).unwrap();
        assert!(decomposition_equals(&a, &dec(&[3, 3, 105])));
        let b = CyclicSummandList::from_u64s(&[(3, 1)]).unwrap();
        assert!(decomposition_equals(&b, &dec(&[3])));
        assert!(!decomposition_equals(&b, &dec(&[9])));
    }

    #[test]
    fn unit_summands_vanish() {
        let a = CyclicSummandList::from_u64s(&[(1, 5), (4, 1), (6, 1)]).unwrap();
        assert_eq!(a.to_decomposition(), dec(&[2, 12]));
        assert_eq!(a.order(), BigUint::from(24u32));
        assert_eq!(
            CyclicSummandList::from_u64s(&[(1, 3)]).unwrap().to_decomposition(),
            GroupDecomposition::trivial()
        );
    }

    #[test]
    fn sylow_ranks() {
        assert_eq!(sylow_rank(&dec(&[3, 3, 105]), 7).unwrap(), 1);
        assert_eq!(sylow_rank(&dec(&[3, 3, 105]), 3).unwrap(), 3);
        assert_eq!(sylow_rank(&dec(&[40]), 5).unwrap(), 1);
        assert_eq!(sylow_rank(&dec(&[40]), 11).unwrap(), 0);
        assert!(matches!(sylow_rank(&dec(&[40]), 4), Err(SandpileError::NotPrime(4))));
        assert!(sylow_rank(&dec(&[40]), 1).is_err());
    }

    #[test]
    fn primes() {
        let small: Vec<u64> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn factorization() {
        let f = factorize(&BigUint::from(2u32 * 2 * 3 * 97 * 97));
        let f: Vec<(u64, u32)> = f.iter().map(|(p, e)| (p.to_u64().unwrap(), *e)).collect();
        assert_eq!(f, vec![(2, 2), (3, 1), (97, 2)]);
        assert!(factorize(&BigUint::one()).is_empty());
    }

    #[test]
    #[should_panic]
    fn broken_chain_panics() {
        dec(&[2, 3]);
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&dec(&[3, 3, 105]).to_json()).unwrap();
        assert_eq!(s, r#"{"invariant_factors":[3,3,105],"order":"945"}"#);
    }
}
