//! The branch map `(a; u_1, …, u_k) ↦ (u_1, …, u_k)` and the isomorphism it
//! induces between the quotient of SP(T̄) by the root subgroup and the
//! quotient of the branch groups by the diagonal root element.

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::chipfiring::{ChipConfig, Sandpile};
use crate::error::{Result, SandpileError};
use crate::tree::WiredTree;

pub const DEFAULT_HOMOMORPHISM_SAMPLES: usize = 200;

/// Everything checked about the induced map on quotients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchQuotientReport {
    pub group_order: u64,
    pub root_order: u64,
    pub quotient_order: u64,
    pub quotient_cosets: u64,
    pub branch_group_order: u64,
    pub diagonal_order: u64,
    pub branch_quotient_order: u64,
    pub images_recurrent: bool,
    pub well_defined: bool,
    pub homomorphism_samples: usize,
    pub homomorphism_holds: bool,
    pub injective: bool,
    pub surjective: bool,
}

impl BranchQuotientReport {
    pub fn orders_match(&self) -> bool {
        self.quotient_order == self.branch_quotient_order
            && self.quotient_cosets == self.quotient_order
    }

    pub fn passed(&self) -> bool {
        self.orders_match()
            && self.images_recurrent
            && self.well_defined
            && self.homomorphism_holds
            && self.injective
            && self.surjective
    }
}

/// Smallest element of the coset `{(u + j g)° : j >= 0}` of a cyclic
/// subgroup of known order.
fn coset_min(sp: &Sandpile<'_>, u: &ChipConfig, g: &ChipConfig, order: u64) -> Result<ChipConfig> {
    let mut best = u.clone();
    let mut x = u.clone();
    for _ in 1..order {
        x = sp.add_and_stabilize(&x, g)?;
        if x < best {
            best = x.clone();
        }
    }
    Ok(best)
}

struct BranchSide<'g> {
    sandpiles: Vec<Sandpile<'g>>,
    root_reps: Vec<ChipConfig>,
    diagonal_order: u64,
}

impl BranchSide<'_> {
    /// Canonical representative of the coset of a tuple modulo the diagonal
    /// element `(r̂_1, …, r̂_k)`.
    fn canonical(&self, tuple: &[ChipConfig]) -> Result<Vec<ChipConfig>> {
        let mut best = tuple.to_vec();
        let mut x = tuple.to_vec();
        for _ in 1..self.diagonal_order {
            for ((xi, sp), r) in x.iter_mut().zip(&self.sandpiles).zip(&self.root_reps) {
                *xi = sp.add_and_stabilize(xi, r)?;
            }
            if x < best {
                best = x.clone();
            }
        }
        Ok(best)
    }

    fn add(&self, a: &[ChipConfig], b: &[ChipConfig]) -> Result<Vec<ChipConfig>> {
        a.iter()
            .zip(b)
            .zip(&self.sandpiles)
            .map(|((x, y), sp)| sp.add_and_stabilize(x, y))
            .collect()
    }
}

fn small(x: &BigUint, what: &str) -> Result<u64> {
    x.to_u64()
        .ok_or_else(|| SandpileError::InvalidParameter(format!("{what} too large to enumerate")))
}

/// Builds the branch map and checks that it descends to an isomorphism of
/// quotients. Both sides are enumerated, so `bound` caps the stable
/// configurations scanned on the whole tree.
pub fn verify_branch_isomorphism(
    tree: &WiredTree,
    bound: u64,
    samples: usize,
    seed: u64,
) -> Result<BranchQuotientReport> {
    let sp = Sandpile::new(tree.graph());
    let recurrent = sp.enumerate_recurrent(bound)?;
    let group_order = recurrent.len() as u64;
    let root_hat = sp.vertex_rep(tree.root())?;
    let root_order = sp.element_order(&root_hat)?;

    let branches = tree.branches()?;
    let sandpiles: Vec<Sandpile<'_>> = branches.iter().map(|b| Sandpile::new(b.graph())).collect();
    let root_reps = branches
        .iter()
        .zip(&sandpiles)
        .map(|(b, s)| s.vertex_rep(b.root()))
        .collect::<Result<Vec<_>>>()?;
    let mut diagonal_order = 1u64;
    let mut branch_group_order = 1u64;
    for (s, r) in sandpiles.iter().zip(&root_reps) {
        diagonal_order = diagonal_order.lcm(&s.element_order(r)?);
        branch_group_order = branch_group_order
            .checked_mul(small(s.group_order(), "branch group")?)
            .ok_or_else(|| SandpileError::InvalidParameter("branch group too large".into()))?;
    }
    let side = BranchSide {
        sandpiles,
        root_reps,
        diagonal_order,
    };

    let phi = |u: &ChipConfig| -> Result<Vec<ChipConfig>> {
        Ok(tree.branch_split(u)?.branch_configs)
    };

    let mut images_recurrent = true;
    let mut well_defined = true;
    let mut coset_image: HashMap<ChipConfig, Vec<ChipConfig>> = HashMap::new();
    for u in &recurrent {
        let image = phi(u)?;
        for (x, s) in image.iter().zip(&side.sandpiles) {
            images_recurrent &= s.is_recurrent_burning(x)?;
        }
        let left = coset_min(&sp, u, &root_hat, root_order)?;
        let right = side.canonical(&image)?;
        match coset_image.get(&left) {
            Some(prev) => well_defined &= prev == &right,
            None => {
                coset_image.insert(left, right);
            }
        }
    }
    let quotient_cosets = coset_image.len() as u64;
    let images: HashSet<&Vec<ChipConfig>> = coset_image.values().collect();
    let injective = images.len() == coset_image.len();
    let branch_quotient_order = branch_group_order / diagonal_order;
    let surjective = images.len() as u64 == branch_quotient_order;

    let mut rng = StdRng::seed_from_u64(seed);
    let mut homomorphism_holds = true;
    for _ in 0..samples {
        let u = &recurrent[rng.gen_range(0..recurrent.len())];
        let v = &recurrent[rng.gen_range(0..recurrent.len())];
        let sum = sp.add_and_stabilize(u, v)?;
        let lhs = side.canonical(&phi(&sum)?)?;
        let rhs = side.canonical(&side.add(&phi(u)?, &phi(v)?)?)?;
        homomorphism_holds &= lhs == rhs;
    }

    Ok(BranchQuotientReport {
        group_order,
        root_order,
        quotient_order: group_order / root_order,
        quotient_cosets,
        branch_group_order,
        diagonal_order,
        branch_quotient_order,
        images_recurrent,
        well_defined,
        homomorphism_samples: samples,
        homomorphism_holds,
        injective,
        surjective,
    })
}

/// A witness that ⟨r̂⟩ is not a direct summand: a recurrent `x` with
/// `(m x)° = r̂`, where `m` is the index of ⟨r̂⟩. In a split group
/// `R ⊕ H` with `|H| = m`, `m x` lies in `m R`, which cannot contain a
/// generator of `R` when `gcd(m, |R|) > 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplittingObstruction {
    pub group_order: u64,
    pub root_order: u64,
    pub index: u64,
    pub witness: ChipConfig,
    pub witness_order: u64,
}

impl SplittingObstruction {
    pub fn rules_out_splitting(&self) -> bool {
        self.index.gcd(&self.root_order) > 1
    }
}

/// Searches the recurrent configurations for a [`SplittingObstruction`].
pub fn splitting_obstruction(tree: &WiredTree, bound: u64) -> Result<Option<SplittingObstruction>> {
    let sp = Sandpile::new(tree.graph());
    let recurrent = sp.enumerate_recurrent(bound)?;
    let group_order = recurrent.len() as u64;
    let root_hat = sp.vertex_rep(tree.root())?;
    let root_order = sp.element_order(&root_hat)?;
    let index = group_order / root_order;
    debug_assert!((group_order % root_order).is_zero());
    for x in recurrent {
        if sp.multiple(&x, index)? == root_hat {
            let witness_order = sp.element_order(&x)?;
            return Ok(Some(SplittingObstruction {
                group_order,
                root_order,
                index,
                witness: x,
                witness_order,
            }));
        }
    }
    Ok(None)
}
