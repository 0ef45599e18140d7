//! Sink-equipped multigraphs and the wired-tree builders.
//!
//! Vertices are plain indices. Chip configurations live on the non-sink
//! vertices, addressed by *position*: the rank of a vertex among the
//! non-sink vertices in index order. Every builder in this module puts the
//! sink last, so position and index coincide for trees built here.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::{BigInt, BigUint};
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SandpileError};
use crate::matrix::IntegerMatrix;

/// A finite loopless multigraph with a distinguished sink vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SinkedMultigraph {
    vertex_count: usize,
    sink: usize,
    adjacency: Vec<Vec<(usize, u64)>>,
    labels: Option<Vec<String>>,
    // Position-space view used by the chip-firing engine.
    position: Vec<Option<usize>>,
    vertex_at: Vec<usize>,
    pos_neighbors: Vec<Vec<(usize, u64)>>,
    pos_degree: Vec<u64>,
    pos_beta: Vec<u64>,
}

impl SinkedMultigraph {
    /// Builds a graph from an edge list. Repeated edges are merged by summing
    /// multiplicities; zero multiplicities are ignored.
    pub fn new(
        vertex_count: usize,
        sink: usize,
        edges: &[(usize, usize, u64)],
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if vertex_count == 0 {
            return Err(SandpileError::InvalidGraph("graph has no vertices".into()));
        }
        if sink >= vertex_count {
            return Err(SandpileError::InvalidGraph(format!(
                "sink {sink} out of range for {vertex_count} vertices"
            )));
        }
        if let Some(l) = &labels {
            if l.len() != vertex_count {
                return Err(SandpileError::InvalidGraph(format!(
                    "{} labels for {vertex_count} vertices",
                    l.len()
                )));
            }
        }
        let mut maps = vec![BTreeMap::<usize, u64>::new(); vertex_count];
        for &(u, v, m) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(SandpileError::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range"
                )));
            }
            if u == v {
                return Err(SandpileError::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if m == 0 {
                continue;
            }
            *maps[u].entry(v).or_insert(0) += m;
            *maps[v].entry(u).or_insert(0) += m;
        }
        let adjacency: Vec<Vec<(usize, u64)>> =
            maps.into_iter().map(|m| m.into_iter().collect()).collect();

        // Every vertex must reach the sink, otherwise stabilization diverges.
        let mut reached = vec![false; vertex_count];
        reached[sink] = true;
        let mut queue = VecDeque::from([sink]);
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &adjacency[x] {
                if !reached[y] {
                    reached[y] = true;
                    queue.push_back(y);
                }
            }
        }
        if let Some(lost) = reached.iter().position(|r| !r) {
            return Err(SandpileError::InvalidGraph(format!(
                "vertex {lost} has no path to the sink"
            )));
        }

        let vertex_at: Vec<usize> = (0..vertex_count).filter(|&v| v != sink).collect();
        let mut position = vec![None; vertex_count];
        for (p, &v) in vertex_at.iter().enumerate() {
            position[v] = Some(p);
        }
        let mut pos_neighbors = Vec::with_capacity(vertex_at.len());
        let mut pos_degree = Vec::with_capacity(vertex_at.len());
        let mut pos_beta = Vec::with_capacity(vertex_at.len());
        for &v in &vertex_at {
            let mut nbrs = Vec::new();
            let mut beta = 0;
            let mut degree = 0;
            for &(w, m) in &adjacency[v] {
                degree += m;
                match position[w] {
                    Some(p) => nbrs.push((p, m)),
                    None => beta += m,
                }
            }
            pos_neighbors.push(nbrs);
            pos_degree.push(degree);
            pos_beta.push(beta);
        }

        Ok(SinkedMultigraph {
            vertex_count,
            sink,
            adjacency,
            labels,
            position,
            vertex_at,
            pos_neighbors,
            pos_degree,
            pos_beta,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn nonsink_count(&self) -> usize {
        self.vertex_at.len()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, v: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[v].as_str())
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, u64)] {
        &self.adjacency[v]
    }

    pub fn multiplicity(&self, u: usize, v: usize) -> u64 {
        self.adjacency[u]
            .binary_search_by_key(&v, |&(w, _)| w)
            .map_or(0, |i| self.adjacency[u][i].1)
    }

    pub fn degree(&self, v: usize) -> u64 {
        self.adjacency[v].iter().map(|&(_, m)| m).sum()
    }

    /// Number of edges from `v` to the sink.
    pub fn sink_edges(&self, v: usize) -> u64 {
        self.multiplicity(v, self.sink)
    }

    /// Position of a non-sink vertex in configuration vectors.
    pub fn position_of(&self, v: usize) -> Option<usize> {
        self.position.get(v).copied().flatten()
    }

    pub fn vertex_at(&self, position: usize) -> usize {
        self.vertex_at[position]
    }

    pub fn nonsink_vertices(&self) -> &[usize] {
        &self.vertex_at
    }

    pub(crate) fn pos_neighbors(&self, p: usize) -> &[(usize, u64)] {
        &self.pos_neighbors[p]
    }

    /// Degrees of the non-sink vertices, by position.
    pub fn degrees(&self) -> &[u64] {
        &self.pos_degree
    }

    /// β: edges to the sink for each non-sink vertex, by position.
    pub fn beta(&self) -> &[u64] {
        &self.pos_beta
    }

    /// Canonical edge list: `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, u64)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| {
                nbrs.iter()
                    .filter(move |&&(v, _)| u < v)
                    .map(move |&(v, m)| (u, v, m))
            })
            .collect()
    }

    /// Reduced Laplacian with the negative-diagonal convention: column `i` is
    /// the change in chips caused by toppling the vertex at position `i`.
    pub fn reduced_laplacian(&self) -> IntegerMatrix {
        let n = self.nonsink_count();
        let mut m = IntegerMatrix::zeros(n, n);
        for p in 0..n {
            m[(p, p)] = -BigInt::from(self.pos_degree[p]);
            for &(q, mult) in &self.pos_neighbors[p] {
                m[(p, q)] = BigInt::from(mult);
            }
        }
        m
    }

    /// Number of spanning trees, as |det| of the reduced Laplacian.
    pub fn spanning_tree_count(&self) -> BigUint {
        let det = self
            .reduced_laplacian()
            .determinant()
            .expect("reduced Laplacian is square");
        det.abs().to_biguint().expect("absolute value")
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.vertex_count,
            sink: self.sink,
            edges: self
                .edges()
                .into_iter()
                .map(|(u, v, m)| [u as u64, v as u64, m])
                .collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("graph serializes")
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let edges: Vec<(usize, usize, u64)> = json
            .edges
            .iter()
            .map(|&[u, v, m]| (u as usize, v as usize, m))
            .collect();
        Self::new(json.vertices, json.sink, &edges, json.labels.clone())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let json: GraphJson = serde_json::from_str(s)?;
        Self::from_json(&json)
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json_string().as_bytes()))
    }
}

/// Serialized form of a [`SinkedMultigraph`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: usize,
    pub sink: usize,
    pub edges: Vec<[u64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// A finite rooted tree given by its parent map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    parent: Vec<Option<usize>>,
    root: usize,
    children: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
}

impl RootedTree {
    /// `parent[v]` is `None` for exactly one vertex, the root.
    pub fn from_parents(parent: Vec<Option<usize>>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(SandpileError::NotATree("empty tree".into()));
        }
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v].is_none()).collect();
        let [root] = roots[..] else {
            return Err(SandpileError::NotATree(format!(
                "expected one root, found {}",
                roots.len()
            )));
        };
        let mut children = vec![Vec::new(); n];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n {
                    return Err(SandpileError::NotATree(format!("parent {p} out of range")));
                }
                if p == v {
                    return Err(SandpileError::NotATree(format!("vertex {v} is its own parent")));
                }
                children[p].push(v);
            }
        }
        // Every vertex must reach the root.
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &c in &children[x] {
                if !seen[c] {
                    seen[c] = true;
                    count += 1;
                    queue.push_back(c);
                }
            }
        }
        if count != n {
            return Err(SandpileError::NotATree("parent map has a cycle".into()));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(SandpileError::NotATree(format!(
                    "{} labels for {n} vertices",
                    l.len()
                )));
            }
        }
        Ok(RootedTree {
            parent,
            root,
            children,
            labels,
        })
    }

    /// The tree in which every vertex above the leaves has `branching`
    /// children and every leaf is `height - 1` edges below the root.
    /// Vertices are numbered breadth-first, children in letter order.
    pub fn regular(branching: usize, height: usize) -> Result<Self> {
        Self::layered(branching, branching, height)
    }

    /// Root with `root_children` children, every other internal vertex with
    /// `branching` children, leaves at depth `height - 1`.
    pub(crate) fn layered(root_children: usize, branching: usize, height: usize) -> Result<Self> {
        if height < 1 || root_children == 0 || branching == 0 {
            return Err(SandpileError::InvalidParameter(
                "layered tree needs height >= 1 and positive branching".into(),
            ));
        }
        let mut parent = vec![None];
        let mut words: Vec<Vec<u32>> = vec![Vec::new()];
        let mut frontier = vec![0usize];
        for depth in 1..height {
            let fan = if depth == 1 { root_children } else { branching };
            let mut next = Vec::with_capacity(frontier.len() * fan);
            for &p in &frontier {
                for letter in 1..=fan {
                    let v = parent.len();
                    parent.push(Some(p));
                    let mut w = words[p].clone();
                    w.push(letter as u32);
                    words.push(w);
                    next.push(v);
                }
            }
            frontier = next;
        }
        let wide = root_children.max(branching) > 9;
        let labels = words.iter().map(|w| word_label(w, wide)).collect();
        Self::from_parents(parent, Some(labels))
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        v != self.root && self.children[v].is_empty()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let json: RootedTreeJson = serde_json::from_str(s)?;
        Self::from_parents(json.parents, json.labels)
    }

    pub fn to_json(&self) -> RootedTreeJson {
        RootedTreeJson {
            parents: self.parent.clone(),
            labels: self.labels.clone(),
        }
    }
}

/// Serialized form of a [`RootedTree`]: `null` marks the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootedTreeJson {
    pub parents: Vec<Option<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

pub(crate) fn word_label(word: &[u32], separated: bool) -> String {
    let parts: Vec<String> = word.iter().map(u32::to_string).collect();
    if separated {
        parts.join(".")
    } else {
        parts.concat()
    }
}

/// A wired graph together with the tree structure it came from, in graph
/// vertex indices (`None` parents for the root and the sink).
pub(crate) struct Wiring {
    pub graph: SinkedMultigraph,
    pub parent: Vec<Option<usize>>,
    pub root: usize,
}

/// Collapses the leaves of `tree` into a sink placed after the non-leaf
/// vertices, which keep their breadth-first order (root first).
pub(crate) fn wire(tree: &RootedTree, root_sink_edge: bool) -> Result<Wiring> {
    if tree.vertex_count() < 2 {
        return Err(SandpileError::NotATree(
            "a single-vertex tree has no wired form".into(),
        ));
    }
    let mut order = Vec::new();
    let mut queue = VecDeque::from([tree.root()]);
    while let Some(x) = queue.pop_front() {
        if !tree.is_leaf(x) {
            order.push(x);
            queue.extend(tree.children(x).iter().copied());
        }
    }
    let internal = order.len();
    let sink = internal;
    let mut index = vec![sink; tree.vertex_count()];
    for (i, &v) in order.iter().enumerate() {
        index[v] = i;
    }
    let mut edges = Vec::new();
    let mut parent = vec![None; internal + 1];
    for &v in &order {
        for &c in tree.children(v) {
            edges.push((index[v], index[c], 1));
            if !tree.is_leaf(c) {
                parent[index[c]] = Some(index[v]);
            }
        }
    }
    if root_sink_edge {
        edges.push((index[tree.root()], sink, 1));
    }
    let labels = tree.labels().map(|l| {
        let mut out: Vec<String> = order.iter().map(|&v| l[v].clone()).collect();
        out.push("s".into());
        out
    });
    let graph = SinkedMultigraph::new(internal + 1, sink, &edges, labels)?;
    Ok(Wiring {
        graph,
        parent,
        root: index[tree.root()],
    })
}

/// The wired `d`-regular tree of height `n`.
pub fn build_wired_regular_tree(d: usize, n: usize) -> Result<SinkedMultigraph> {
    check_regular_params(d, n)?;
    let tree = RootedTree::regular(d - 1, n)?;
    Ok(wire(&tree, true)?.graph)
}

/// Collapses the leaves of `tree` to a sink and joins the root to it.
pub fn build_wired_tree(tree: &RootedTree) -> Result<SinkedMultigraph> {
    Ok(wire(tree, true)?.graph)
}

/// The wired ball: a root of degree `d` whose `d` branches each look like
/// the principal branch structure of the wired regular tree of height
/// `n + 1`, and no edge from the root to the sink.
pub fn build_wired_ball(d: usize, n: usize) -> Result<SinkedMultigraph> {
    check_ball_params(d, n)?;
    let tree = RootedTree::layered(d, d - 1, n + 2)?;
    Ok(wire(&tree, false)?.graph)
}

pub(crate) fn check_regular_params(d: usize, n: usize) -> Result<()> {
    if d < 3 {
        return Err(SandpileError::InvalidParameter(format!("degree must be >= 3, got {d}")));
    }
    if n < 2 {
        return Err(SandpileError::InvalidParameter(format!("height must be >= 2, got {n}")));
    }
    Ok(())
}

pub(crate) fn check_ball_params(d: usize, n: usize) -> Result<()> {
    if d < 3 {
        return Err(SandpileError::InvalidParameter(format!("degree must be >= 3, got {d}")));
    }
    if n < 1 {
        return Err(SandpileError::InvalidParameter(format!("ball index must be >= 1, got {n}")));
    }
    Ok(())
}
