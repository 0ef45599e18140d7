//! Exact Smith normal form and abelian group structure.

mod group;
mod snf;

pub use group::{
    decomposition_equals, factorize, is_prime, lcm_all, sandpile_group, summand_sylow_rank,
    sylow_rank, CyclicSummandList, GroupDecomposition, GroupDecompositionJson,
};
pub use snf::{smith_normal_form, SmithForm};
