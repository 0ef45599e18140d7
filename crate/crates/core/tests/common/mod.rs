//! Helpers shared by the integration tests. Each test binary uses a
//! different subset.
#![allow(dead_code)]

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::Rng;
use sandpile_core::{ChipConfig, RootedTree, SinkedMultigraph, WiredTree};

/// Root with two children, each carrying three leaves.
pub fn two_by_three_tree() -> RootedTree {
    RootedTree::from_parents(
        vec![None, Some(0), Some(0), Some(1), Some(1), Some(1), Some(2), Some(2), Some(2)],
        None,
    )
    .unwrap()
}

pub fn two_by_three_wired() -> WiredTree {
    WiredTree::from_rooted(&two_by_three_tree()).unwrap()
}

/// A connected multigraph on `nonsink + 1` vertices. Each non-sink vertex is
/// hooked to the sink or to an earlier vertex, then extra edges are sprinkled
/// on top, so the sink is always reachable.
pub fn multigraph(max_nonsink: usize, max_mult: u64) -> impl Strategy<Value = SinkedMultigraph> {
    (1..=max_nonsink)
        .prop_flat_map(move |k| {
            let total = k + 1;
            let hooks = proptest::collection::vec(any::<prop::sample::Index>(), k);
            let extra = proptest::collection::vec(0..=max_mult, total * (total - 1) / 2);
            (Just(k), hooks, extra, 0..total)
        })
        .prop_map(|(k, hooks, extra, sink)| {
            // vertex k is the sink before relabelling
            let mut edges = Vec::new();
            for (i, h) in hooks.iter().enumerate() {
                let j = h.index(i + 1);
                let target = if j == 0 { k } else { j - 1 };
                edges.push((i, target, 1));
            }
            let mut idx = 0;
            for u in 0..=k {
                for v in u + 1..=k {
                    if extra[idx] > 0 {
                        edges.push((u, v, extra[idx]));
                    }
                    idx += 1;
                }
            }
            // swap the roles of vertex k and vertex `sink`
            let relabel = |x: usize| {
                if x == k {
                    sink
                } else if x == sink {
                    k
                } else {
                    x
                }
            };
            let edges: Vec<_> = edges.into_iter().map(|(u, v, m)| (relabel(u), relabel(v), m)).collect();
            SinkedMultigraph::new(k + 1, sink, &edges, None).unwrap()
        })
}

/// Random chip counts, one per non-sink vertex.
pub fn chips_for(g: &SinkedMultigraph, max: u64) -> impl Strategy<Value = ChipConfig> {
    proptest::collection::vec(0..=max, g.nonsink_count()).prop_map(|v| ChipConfig::from_u64s(&v))
}

/// Stabilizes by toppling one randomly chosen unstable vertex at a time.
/// Returns the stable configuration and the odometer, both by position.
pub fn stabilize_randomly(g: &SinkedMultigraph, chips: &[u64], rng: &mut impl Rng) -> (Vec<u64>, Vec<u64>) {
    let mut c = chips.to_vec();
    let mut odo = vec![0u64; c.len()];
    let degree = g.degrees();
    loop {
        let unstable: Vec<usize> = (0..c.len()).filter(|&p| c[p] >= degree[p]).collect();
        if unstable.is_empty() {
            return (c, odo);
        }
        let p = unstable[rng.gen_range(0..unstable.len())];
        let v = g.vertex_at(p);
        c[p] -= degree[p];
        odo[p] += 1;
        for &(w, m) in g.neighbors(v) {
            if let Some(q) = g.position_of(w) {
                c[q] += m;
            }
        }
    }
}

/// Counts spanning trees by trying every subset of `|V| - 1` edges
/// (parallel edges counted separately) and keeping the acyclic ones.
pub fn brute_force_spanning_trees(g: &SinkedMultigraph) -> BigUint {
    let n = g.vertex_count();
    let edges: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .flat_map(|(u, v, m)| std::iter::repeat_n((u, v), m as usize))
        .collect();
    let need = n - 1;
    let mut count = 0u64;
    let mut chosen = Vec::with_capacity(need);
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        r
    }
    fn rec(
        edges: &[(usize, usize)],
        start: usize,
        need: usize,
        n: usize,
        chosen: &mut Vec<usize>,
        count: &mut u64,
    ) {
        if chosen.len() == need {
            let mut parent: Vec<usize> = (0..n).collect();
            for &e in chosen.iter() {
                let (a, b) = edges[e];
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra == rb {
                    return;
                }
                parent[ra] = rb;
            }
            *count += 1;
            return;
        }
        for e in start..edges.len() {
            if edges.len() - e < need - chosen.len() {
                break;
            }
            chosen.push(e);
            rec(edges, e + 1, need, n, chosen, count);
            chosen.pop();
        }
    }
    rec(&edges, 0, need, n, &mut chosen, &mut count);
    BigUint::from(count)
}

/// Every stable configuration of `g`, lexicographically.
pub fn all_stable(g: &SinkedMultigraph) -> Vec<ChipConfig> {
    let degree = g.degrees();
    let mut out = vec![Vec::<u64>::new()];
    for &d in degree {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..d).map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out.iter().map(|v| ChipConfig::from_u64s(v)).collect()
}

/// Orbit of `(k g)°` under repeated addition, ending at the identity.
pub fn order_by_iteration(sp: &sandpile_core::Sandpile<'_>, g: &ChipConfig) -> u64 {
    let e = sp.identity().clone();
    let mut x = g.clone();
    let mut k = 1;
    while x != e {
        x = sp.add_and_stabilize(&x, g).unwrap();
        k += 1;
    }
    k
}
