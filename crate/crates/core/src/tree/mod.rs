//! Wired trees: criticality, the recurrence test built on it, and the split
//! of a configuration into root chips plus configurations on the principal
//! branches.

mod formulas;
mod quotient;
mod regular;

pub use formulas::{
    ball_quotient_decomposition, ball_root_subgroup_order, compute_tp, geometric_sum,
    root_subgroup_order, spanning_tree_product, spanning_tree_recurrence,
    spanning_tree_sum_form, sylow_rank_ball_formula, theorem_decomposition,
    ClosedFormDecomposition,
};
pub use quotient::{
    splitting_obstruction, verify_branch_isomorphism, BranchQuotientReport, SplittingObstruction,
    DEFAULT_HOMOMORPHISM_SAMPLES,
};
pub use regular::{lex_successor, LevelVector, RegularTree};

use std::collections::VecDeque;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::chipfiring::ChipConfig;
use crate::error::{Result, SandpileError};
use crate::graph::{self, RootedTree, SinkedMultigraph};

/// A wired tree: a graph whose non-sink vertices form a rooted tree.
///
/// All indices here are configuration positions, not graph vertex ids.
#[derive(Debug, Clone)]
pub struct WiredTree {
    graph: SinkedMultigraph,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    bottom_up: Vec<usize>,
}

/// `(a; u_1, …, u_k)`: chips at the root and one configuration per branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSplit {
    pub root_chips: BigUint,
    pub branch_configs: Vec<ChipConfig>,
}

impl WiredTree {
    /// Collapses the leaves of `tree` to a sink and joins the root to it.
    pub fn from_rooted(tree: &RootedTree) -> Result<Self> {
        let w = graph::wire(tree, true)?;
        Self::from_parts(w.graph, w.root, &w.parent)
    }

    /// The wired `d`-regular tree of height `n`.
    pub fn regular(d: usize, n: usize) -> Result<Self> {
        graph::check_regular_params(d, n)?;
        Self::from_rooted(&RootedTree::regular(d - 1, n)?)
    }

    /// The wired ball; the root has no sink edge.
    pub fn ball(d: usize, n: usize) -> Result<Self> {
        graph::check_ball_params(d, n)?;
        let w = graph::wire(&RootedTree::layered(d, d - 1, n + 2)?, false)?;
        Self::from_parts(w.graph, w.root, &w.parent)
    }

    /// Recovers the tree structure of `g` given its root vertex. The non-sink
    /// vertices must span a tree of single edges.
    pub fn from_graph(g: SinkedMultigraph, root_vertex: usize) -> Result<Self> {
        if root_vertex == g.sink() || root_vertex >= g.vertex_count() {
            return Err(SandpileError::NotATree(format!(
                "root {root_vertex} is not a non-sink vertex"
            )));
        }
        let mut parent = vec![None; g.vertex_count()];
        let mut seen = vec![false; g.vertex_count()];
        seen[root_vertex] = true;
        let mut queue = VecDeque::from([root_vertex]);
        let mut visited = 1;
        let mut internal_edges = 0u64;
        while let Some(x) = queue.pop_front() {
            for &(y, m) in g.neighbors(x) {
                if y == g.sink() {
                    continue;
                }
                if m != 1 {
                    return Err(SandpileError::NotATree(format!(
                        "edge ({x}, {y}) has multiplicity {m}"
                    )));
                }
                internal_edges += 1;
                if !seen[y] {
                    seen[y] = true;
                    visited += 1;
                    parent[y] = Some(x);
                    queue.push_back(y);
                }
            }
        }
        let n = g.nonsink_count();
        if visited != n {
            return Err(SandpileError::NotATree(
                "non-sink vertices are disconnected".into(),
            ));
        }
        // Each internal edge was seen from both ends.
        if internal_edges != 2 * (n as u64 - 1) {
            return Err(SandpileError::NotATree("non-sink vertices contain a cycle".into()));
        }
        Self::from_parts(g, root_vertex, &parent)
    }

    fn from_parts(
        graph: SinkedMultigraph,
        root_vertex: usize,
        vertex_parent: &[Option<usize>],
    ) -> Result<Self> {
        let n = graph.nonsink_count();
        let pos = |v: usize| graph.position_of(v).expect("tree vertex is not the sink");
        let root = pos(root_vertex);
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for (p, slot) in parent.iter_mut().enumerate() {
            let v = graph.vertex_at(p);
            if let Some(u) = vertex_parent[v] {
                *slot = Some(pos(u));
                children[pos(u)].push(p);
            }
        }
        let mut depth = vec![0; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            order.push(x);
            for &c in &children[x] {
                depth[c] = depth[x] + 1;
                queue.push_back(c);
            }
        }
        if order.len() != n {
            return Err(SandpileError::NotATree("parent map does not reach every vertex".into()));
        }
        order.reverse();
        Ok(WiredTree {
            graph,
            root,
            parent,
            children,
            depth,
            bottom_up: order,
        })
    }

    pub fn graph(&self) -> &SinkedMultigraph {
        &self.graph
    }

    pub fn into_graph(self) -> SinkedMultigraph {
        self.graph
    }

    pub fn size(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, p: usize) -> Option<usize> {
        self.parent[p]
    }

    pub fn children(&self, p: usize) -> &[usize] {
        &self.children[p]
    }

    pub fn depth(&self, p: usize) -> usize {
        self.depth[p]
    }

    fn check_stable(&self, u: &ChipConfig) -> Result<()> {
        if u.len() != self.size() {
            return Err(SandpileError::DimensionMismatch {
                expected: self.size(),
                found: u.len(),
            });
        }
        let stable = u
            .chips()
            .iter()
            .zip(self.graph.degrees())
            .all(|(c, &d)| c < &BigUint::from(d));
        if stable {
            Ok(())
        } else {
            Err(SandpileError::NotStable)
        }
    }

    /// Critical flags by position: a vertex is critical when its chip count
    /// is at most the number of its critical children. Evaluated in one pass
    /// from the deepest level up.
    pub fn critical_flags(&self, u: &ChipConfig) -> Result<Vec<bool>> {
        self.check_stable(u)?;
        Ok(self.critical_unchecked(u))
    }

    fn critical_unchecked(&self, u: &ChipConfig) -> Vec<bool> {
        let mut critical = vec![false; self.size()];
        for &x in &self.bottom_up {
            let count = self.critical_children(x, &critical);
            critical[x] = u.get(x).to_u64().is_some_and(|c| c <= count);
        }
        critical
    }

    fn critical_children(&self, x: usize, critical: &[bool]) -> u64 {
        self.children[x].iter().filter(|&&c| critical[c]).count() as u64
    }

    /// Positions of the critical vertices, ascending.
    pub fn critical_vertices(&self, u: &ChipConfig) -> Result<Vec<usize>> {
        Ok(self
            .critical_flags(u)?
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(p, _)| p)
            .collect())
    }

    /// A stable configuration is recurrent iff every critical vertex holds
    /// exactly as many chips as it has critical children.
    pub fn is_recurrent_critical(&self, u: &ChipConfig) -> Result<bool> {
        self.check_stable(u)?;
        let critical = self.critical_unchecked(u);
        Ok((0..self.size()).filter(|&x| critical[x]).all(|x| {
            u.get(x).to_u64() == Some(self.critical_children(x, &critical))
        }))
    }

    /// Positions belonging to each principal branch, in ascending order.
    pub fn branch_members(&self) -> Vec<Vec<usize>> {
        self.children[self.root]
            .iter()
            .map(|&top| {
                let mut members = Vec::new();
                let mut stack = vec![top];
                while let Some(x) = stack.pop() {
                    members.push(x);
                    stack.extend(self.children[x].iter().copied());
                }
                members.sort_unstable();
                members
            })
            .collect()
    }

    /// The wired principal branches. Each branch root trades its edge to the
    /// root for an edge to the sink, so its degree is unchanged.
    pub fn branches(&self) -> Result<Vec<WiredTree>> {
        self.branch_members()
            .iter()
            .map(|members| {
                let k = members.len();
                let local = |p: usize| members.binary_search(&p).expect("member of branch");
                let mut edges = Vec::new();
                for (i, &p) in members.iter().enumerate() {
                    let beta = self.graph.beta()[p];
                    let extra = u64::from(self.parent[p] == Some(self.root));
                    edges.push((i, k, beta + extra));
                    for &c in &self.children[p] {
                        edges.push((i, local(c), 1));
                    }
                }
                let g = SinkedMultigraph::new(k + 1, k, &edges, None)?;
                let mut parent = vec![None; k + 1];
                for (i, &p) in members.iter().enumerate() {
                    if self.parent[p] != Some(self.root) {
                        parent[i] = self.parent[p].map(local);
                    }
                }
                let top = members
                    .iter()
                    .position(|&p| self.parent[p] == Some(self.root))
                    .expect("branch has a top vertex");
                WiredTree::from_parts(g, top, &parent)
            })
            .collect()
    }

    /// Splits `u` into root chips and branch configurations.
    pub fn branch_split(&self, u: &ChipConfig) -> Result<BranchSplit> {
        if u.len() != self.size() {
            return Err(SandpileError::DimensionMismatch {
                expected: self.size(),
                found: u.len(),
            });
        }
        Ok(BranchSplit {
            root_chips: u.get(self.root).clone(),
            branch_configs: self
                .branch_members()
                .iter()
                .map(|m| ChipConfig::new(m.iter().map(|&p| u.get(p).clone()).collect()))
                .collect(),
        })
    }

    /// Inverse of [`WiredTree::branch_split`].
    pub fn branch_join(&self, split: &BranchSplit) -> Result<ChipConfig> {
        let members = self.branch_members();
        if split.branch_configs.len() != members.len() {
            return Err(SandpileError::DimensionMismatch {
                expected: members.len(),
                found: split.branch_configs.len(),
            });
        }
        let mut u = ChipConfig::zeros(self.size());
        u.set(self.root, split.root_chips.clone());
        for (m, c) in members.iter().zip(&split.branch_configs) {
            if c.len() != m.len() {
                return Err(SandpileError::DimensionMismatch {
                    expected: m.len(),
                    found: c.len(),
                });
            }
            for (&p, x) in m.iter().zip(c.chips()) {
                u.set(p, x.clone());
            }
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chipfiring::{Sandpile, DEFAULT_ENUMERATION_BOUND};
    use crate::graph::{build_wired_ball, build_wired_regular_tree};

    fn counterexample() -> WiredTree {
        let t = RootedTree::from_parents(
            vec![None, Some(0), Some(0), Some(1), Some(1), Some(1), Some(2), Some(2), Some(2)],
            None,
        )
        .unwrap();
        WiredTree::from_rooted(&t).unwrap()
    }

    #[test]
    fn leaf_adjacent_criticality() {
        let t = WiredTree::regular(3, 3).unwrap();
        // root 0 with children 1, 2 which only touch the sink below
        let u = ChipConfig::from_u64s(&[2, 0, 1]);
        let flags = t.critical_flags(&u).unwrap();
        assert!(flags[1]);
        assert!(!flags[2]);
        // root has one critical child and two chips
        assert!(!flags[0]);
    }

    #[test]
    fn criticality_needs_stable_input() {
        let t = WiredTree::regular(3, 3).unwrap();
        assert!(matches!(
            t.critical_flags(&ChipConfig::from_u64s(&[3, 0, 0])),
            Err(SandpileError::NotStable)
        ));
    }

    #[test]
    fn maximal_configuration_has_no_critical_vertices() {
        let t = WiredTree::regular(4, 4).unwrap();
        let sp = Sandpile::new(t.graph());
        let m = sp.max_stable();
        assert!(t.critical_vertices(&m).unwrap().is_empty());
        assert!(t.is_recurrent_critical(&m).unwrap());
        assert!(sp.is_recurrent_burning(&m).unwrap());
    }

    #[test]
    fn from_graph_recovers_structure() {
        let g = build_wired_regular_tree(3, 4).unwrap();
        let t = WiredTree::from_graph(g.clone(), 0).unwrap();
        let direct = WiredTree::regular(3, 4).unwrap();
        assert_eq!(t.children(0), direct.children(0));
        assert_eq!(t.parent(5), direct.parent(5));
        assert_eq!(t.depth(6), 2);
    }

    #[test]
    fn from_graph_rejects_non_trees() {
        // triangle among non-sink vertices
        let g = SinkedMultigraph::new(4, 3, &[(0, 1, 1), (1, 2, 1), (2, 0, 1), (0, 3, 1)], None)
            .unwrap();
        assert!(matches!(WiredTree::from_graph(g, 0), Err(SandpileError::NotATree(_))));
        let doubled = SinkedMultigraph::new(3, 2, &[(0, 1, 2), (1, 2, 1)], None).unwrap();
        assert!(WiredTree::from_graph(doubled, 0).is_err());
        let g = build_wired_regular_tree(3, 3).unwrap();
        assert!(WiredTree::from_graph(g, 3).is_err());
    }

    #[test]
    fn branches_of_regular_tree_are_smaller_regular_trees() {
        let t = WiredTree::regular(3, 5).unwrap();
        let smaller = build_wired_regular_tree(3, 4).unwrap();
        let branches = t.branches().unwrap();
        assert_eq!(branches.len(), 2);
        for b in &branches {
            assert_eq!(b.graph().edges(), smaller.edges());
        }
    }

    #[test]
    fn ball_branches_match_regular_tree() {
        let ball = WiredTree::ball(3, 2).unwrap();
        assert_eq!(ball.graph(), &build_wired_ball(3, 2).unwrap());
        let branches = ball.branches().unwrap();
        assert_eq!(branches.len(), 3);
        let expected = build_wired_regular_tree(3, 3).unwrap();
        for b in branches {
            assert_eq!(b.graph().edges(), expected.edges());
        }
    }

    #[test]
    fn counterexample_branches() {
        let t = counterexample();
        let branches = t.branches().unwrap();
        assert_eq!(branches.len(), 2);
        for b in branches {
            assert_eq!(b.size(), 1);
            assert_eq!(b.graph().degrees(), &[4]);
        }
    }

    #[test]
    fn split_and_join() {
        let t = WiredTree::regular(3, 4).unwrap();
        let u = ChipConfig::from_u64s(&[1, 2, 0, 1, 2, 0, 1]);
        let s = t.branch_split(&u).unwrap();
        assert_eq!(s.root_chips, BigUint::from(1u32));
        assert_eq!(s.branch_configs[0], ChipConfig::from_u64s(&[2, 1, 2]));
        assert_eq!(s.branch_configs[1], ChipConfig::from_u64s(&[0, 0, 1]));
        assert_eq!(t.branch_join(&s).unwrap(), u);
        let mut short = s.clone();
        short.branch_configs.pop();
        assert!(t.branch_join(&short).is_err());
    }

    #[test]
    fn critical_test_agrees_with_burning_exhaustively() {
        for t in [WiredTree::regular(3, 3).unwrap(), WiredTree::regular(4, 3).unwrap(), counterexample()] {
            let sp = Sandpile::new(t.graph());
            let mut recurrent = 0;
            let total = sp.stable_count().to_u64().unwrap();
            let degrees = t.graph().degrees().to_vec();
            for mut code in 0..total {
                let chips: Vec<u64> = degrees
                    .iter()
                    .map(|&d| {
                        let c = code % d;
                        code /= d;
                        c
                    })
                    .collect();
                let u = ChipConfig::from_u64s(&chips);
                let burning = sp.is_recurrent_burning(&u).unwrap();
                assert_eq!(burning, t.is_recurrent_critical(&u).unwrap(), "{u:?}");
                recurrent += usize::from(burning);
            }
            assert_eq!(
                recurrent,
                sp.enumerate_recurrent(DEFAULT_ENUMERATION_BOUND).unwrap().len()
            );
        }
    }
}
