//! Abelian sandpile groups on multigraphs with a sink, with special support
//! for wired trees: chip-firing, Smith normal forms, critical-vertex
//! recurrence tests and closed-form group decompositions.

pub mod algebra;
pub mod chipfiring;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod tree;
pub mod verify;

pub use algebra::{sandpile_group, smith_normal_form, CyclicSummandList, GroupDecomposition};
pub use chipfiring::{ChipConfig, Sandpile, StabilizationResult, DEFAULT_ENUMERATION_BOUND};
pub use error::{Result, SandpileError};
pub use graph::{
    build_wired_ball, build_wired_regular_tree, build_wired_tree, RootedTree, SinkedMultigraph,
};
pub use matrix::IntegerMatrix;
pub use tree::{LevelVector, RegularTree, WiredTree};
