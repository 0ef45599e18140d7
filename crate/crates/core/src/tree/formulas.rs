//! Closed forms for wired regular trees and balls: spanning-tree counts,
//! root subgroup orders, cyclic decompositions and Sylow ranks.
//!
//! Throughout, `a = d - 1` and `q_k = 1 + a + … + a^(k-1)`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::algebra::{is_prime, CyclicSummandList};
use crate::error::{Result, SandpileError};
use crate::graph::{check_ball_params, check_regular_params};

/// `q_k = 1 + a + … + a^(k-1)`; `q_0 = 0`.
pub fn geometric_sum(a: u64, k: usize) -> BigUint {
    let a = BigUint::from(a);
    let mut term = BigUint::one();
    let mut total = BigUint::zero();
    for _ in 0..k {
        total += &term;
        term *= &a;
    }
    total
}

fn pow(base: u64, exp: usize) -> BigUint {
    num_traits::pow(BigUint::from(base), exp)
}

/// Order of the subgroup generated by r̂ on the wired regular tree:
/// `((d-1)^n - 1) / (d - 2)`.
pub fn root_subgroup_order(d: usize, n: usize) -> Result<BigUint> {
    check_regular_params(d, n)?;
    let numerator = pow(d as u64 - 1, n) - 1u32;
    let denominator = BigUint::from(d as u64 - 2);
    debug_assert!((&numerator % &denominator).is_zero());
    Ok(numerator / denominator)
}

/// `t_n = t_{n-1}^{d-2} (d t_{n-1} - (d-1) t_{n-2}^{d-1})`, valid for `n >= 4`.
pub fn spanning_tree_recurrence(
    d: usize,
    n: usize,
    t_prev: &BigUint,
    t_prev2: &BigUint,
) -> Result<BigUint> {
    check_regular_params(d, n)?;
    if n < 4 {
        return Err(SandpileError::InvalidParameter(format!(
            "the spanning-tree recurrence needs n >= 4, got {n}"
        )));
    }
    let inner = BigInt::from(d) * BigInt::from(t_prev.clone())
        - BigInt::from(d - 1) * BigInt::from(num_traits::pow(t_prev2.clone(), d - 1));
    if !inner.is_positive() {
        return Err(SandpileError::InvalidParameter(
            "inputs are not consecutive spanning-tree counts".into(),
        ));
    }
    let inner = inner.to_biguint().expect("positive");
    Ok(num_traits::pow(t_prev.clone(), d - 2) * inner)
}

/// `t_n = t_{n-1}^{d-1} + (d-1)^{n-1} Π_{k=1}^{n-1} t_k^{d-2}`, with
/// `lower[k-1] = t_k` for `k = 1..n-1`.
///
/// `t_1` is not a wired tree; pass 1, the value that makes `t_2 = d`.
pub fn spanning_tree_sum_form(d: usize, n: usize, lower: &[BigUint]) -> Result<BigUint> {
    check_regular_params(d, n)?;
    if lower.len() != n - 1 {
        return Err(SandpileError::DimensionMismatch {
            expected: n - 1,
            found: lower.len(),
        });
    }
    let last = &lower[n - 2];
    let product: BigUint = lower
        .iter()
        .map(|t| num_traits::pow(t.clone(), d - 2))
        .product();
    Ok(num_traits::pow(last.clone(), d - 1) + pow(d as u64 - 1, n - 1) * product)
}

/// `t_n = q_n Π_{k=1}^{n-2} q_{k+1}^{a^(n-2-k) (a-1)}`.
pub fn spanning_tree_product(d: usize, n: usize) -> Result<BigUint> {
    check_regular_params(d, n)?;
    let a = d as u64 - 1;
    let mut total = geometric_sum(a, n);
    for k in 1..=n - 2 {
        let exp = pow(a, n - 2 - k) * (a - 1);
        let exp = usize::try_from(exp).map_err(|_| {
            SandpileError::InvalidParameter("exponent too large".into())
        })?;
        total *= num_traits::pow(geometric_sum(a, k + 1), exp);
    }
    Ok(total)
}

/// The predicted cyclic decomposition of the sandpile group of the wired
/// `d`-regular tree of height `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedFormDecomposition {
    pub d: usize,
    pub n: usize,
    pub summands: CyclicSummandList,
}

/// `Z_{q_k}^{a^(n-1-k)(a-1)}` for `k = 2..n-1`, plus one `Z_{q_n}`.
pub fn theorem_decomposition(d: usize, n: usize) -> Result<ClosedFormDecomposition> {
    check_regular_params(d, n)?;
    let a = d as u64 - 1;
    let mut summands = Vec::new();
    for k in 2..n {
        let mult = a.checked_pow((n - 1 - k) as u32).and_then(|x| x.checked_mul(a - 1));
        let mult = mult.ok_or_else(|| {
            SandpileError::InvalidParameter("multiplicity overflows u64".into())
        })?;
        summands.push((geometric_sum(a, k), mult));
    }
    summands.push((geometric_sum(a, n), 1));
    Ok(ClosedFormDecomposition {
        d,
        n,
        summands: CyclicSummandList::new(summands)?,
    })
}

fn check_prime_for_degree(d: usize, p: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(SandpileError::NotPrime(p));
    }
    let product = (d as u64) * (d as u64 - 1);
    if product.is_multiple_of(p) {
        return Err(SandpileError::PrimeDividesDegree { p, product });
    }
    Ok(())
}

/// Least `k >= 1` with `p | q_k`. Computed by search and by the case
/// formula (`p` when `a ≡ 1 mod p`, else the order of `a` mod `p`); the two
/// must agree.
pub fn compute_tp(d: usize, p: u64) -> Result<u64> {
    if d < 3 {
        return Err(SandpileError::InvalidParameter(format!("degree must be >= 3, got {d}")));
    }
    check_prime_for_degree(d, p)?;
    let a = (d as u64 - 1) % p;
    let mut q = 0u64;
    let mut power = 1u64;
    let mut searched = None;
    for k in 1..=p {
        q = (q + power) % p;
        power = power * a % p;
        if q == 0 {
            searched = Some(k);
            break;
        }
    }
    let by_case = if a == 1 {
        p
    } else {
        let mut k = 1;
        let mut x = a;
        while x != 1 {
            x = x * a % p;
            k += 1;
        }
        k
    };
    let searched = searched.expect("p divides some q_k with k <= p");
    assert_eq!(searched, by_case, "t_p search and case formula disagree");
    Ok(searched)
}

/// Predicted Sylow `p`-rank of the sandpile group of the wired ball:
/// `d(d-2) Σ_{m<n, m ≡ n mod t_p} (d-1)^m`, plus `d - 1` when
/// `n ≡ -1 mod t_p`.
pub fn sylow_rank_ball_formula(d: usize, n: usize, p: u64) -> Result<BigUint> {
    check_ball_params(d, n)?;
    check_prime_for_degree(d, p)?;
    let tp = compute_tp(d, p)? as usize;
    let d64 = d as u64;
    let mut sum = BigUint::zero();
    for m in (0..n).filter(|m| m % tp == n % tp) {
        sum += pow(d64 - 1, m);
    }
    let mut rank = sum * (d64 * (d64 - 2));
    if (n + 1).is_multiple_of(tp) {
        rank += d64 - 1;
    }
    Ok(rank)
}

/// `|⟨r̂⟩| = d(d-1)^n` on the wired ball.
pub fn ball_root_subgroup_order(d: usize, n: usize) -> Result<BigUint> {
    check_ball_params(d, n)?;
    Ok(pow(d as u64 - 1, n) * d as u64)
}

/// The quotient of the ball's sandpile group by its root subgroup:
/// `Z_{q_{n+1}}^a ⊕ Z_{q_k}^{(a-1) a^(n-k) (a+1)}` for `k = n..2`.
pub fn ball_quotient_decomposition(d: usize, n: usize) -> Result<CyclicSummandList> {
    check_ball_params(d, n)?;
    let a = d as u64 - 1;
    let mut summands = vec![(geometric_sum(a, n + 1), a)];
    for k in (2..=n).rev() {
        let mult = a
            .checked_pow((n - k) as u32)
            .and_then(|x| x.checked_mul((a - 1) * (a + 1)))
            .ok_or_else(|| SandpileError::InvalidParameter("multiplicity overflows u64".into()))?;
        summands.push((geometric_sum(a, k), mult));
    }
    CyclicSummandList::new(summands)
}
