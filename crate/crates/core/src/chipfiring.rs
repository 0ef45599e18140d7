//! Toppling, stabilization and the sandpile group on recurrent configurations.

use std::cell::OnceCell;
use std::collections::VecDeque;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SandpileError};
use crate::graph::SinkedMultigraph;

/// Chips on the non-sink vertices of a graph, indexed by position.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChipConfig {
    chips: Vec<BigUint>,
}

impl ChipConfig {
    pub fn new(chips: Vec<BigUint>) -> Self {
        ChipConfig { chips }
    }

    pub fn zeros(len: usize) -> Self {
        ChipConfig {
            chips: vec![BigUint::zero(); len],
        }
    }

    pub fn from_u64s(chips: &[u64]) -> Self {
        ChipConfig {
            chips: chips.iter().map(|&c| BigUint::from(c)).collect(),
        }
    }

    /// One chip at `position`.
    pub fn unit(len: usize, position: usize) -> Self {
        let mut c = Self::zeros(len);
        c.chips[position] = BigUint::one();
        c
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn chips(&self) -> &[BigUint] {
        &self.chips
    }

    pub fn get(&self, position: usize) -> &BigUint {
        &self.chips[position]
    }

    pub fn set(&mut self, position: usize, value: BigUint) {
        self.chips[position] = value;
    }

    pub fn total(&self) -> BigUint {
        self.chips.iter().sum()
    }

    /// Entries as `u64`, if they all fit.
    pub fn to_u64s(&self) -> Option<Vec<u64>> {
        self.chips.iter().map(ToPrimitive::to_u64).collect()
    }

    pub fn add(&self, other: &ChipConfig) -> Result<ChipConfig> {
        check_len(self.len(), other.len())?;
        Ok(ChipConfig {
            chips: self.chips.iter().zip(&other.chips).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, k: &BigUint) -> ChipConfig {
        ChipConfig {
            chips: self.chips.iter().map(|c| c * k).collect(),
        }
    }

    pub fn to_json(&self, graph: &SinkedMultigraph) -> ChipConfigJson {
        ChipConfigJson {
            graph_hash: graph.fingerprint(),
            chips: self.chips.iter().map(big_number).collect(),
        }
    }

    /// Parses `{"graph_hash": ..., "chips": [...]}`; the hash is checked
    /// against `graph` when present.
    pub fn from_json(json: &ChipConfigJson, graph: &SinkedMultigraph) -> Result<ChipConfig> {
        if !json.graph_hash.is_empty() && json.graph_hash != graph.fingerprint() {
            return Err(SandpileError::InvalidGraph(
                "configuration was recorded on a different graph".into(),
            ));
        }
        let chips = json
            .chips
            .iter()
            .map(|n| {
                n.to_string().parse::<BigUint>().map_err(|_| {
                    SandpileError::InvalidParameter(format!(
                        "chip counts must be nonnegative integers, got {n}"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        check_len(graph.nonsink_count(), chips.len())?;
        Ok(ChipConfig { chips })
    }
}

impl fmt::Debug for ChipConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.chips.iter().map(ToString::to_string).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Serialized chip configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipConfigJson {
    #[serde(default)]
    pub graph_hash: String,
    pub chips: Vec<serde_json::Number>,
}

/// Exact JSON number token for an unbounded integer.
pub fn big_number(x: &BigUint) -> serde_json::Number {
    x.to_string().parse().expect("decimal digits form a JSON number")
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(SandpileError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Outcome of stabilizing a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizationResult {
    pub stable: ChipConfig,
    /// Topplings per vertex.
    pub odometer: Vec<BigUint>,
}

/// Default cap on the number of stable configurations scanned by
/// [`Sandpile::enumerate_recurrent`].
pub const DEFAULT_ENUMERATION_BOUND: u64 = 1_000_000;

/// Chip-firing on a fixed graph. Caches the identity element and the group
/// order once computed.
pub struct Sandpile<'g> {
    graph: &'g SinkedMultigraph,
    degrees: Vec<BigUint>,
    identity: OnceCell<ChipConfig>,
    order: OnceCell<BigUint>,
}

impl<'g> Sandpile<'g> {
    pub fn new(graph: &'g SinkedMultigraph) -> Self {
        Sandpile {
            graph,
            degrees: graph.degrees().iter().map(|&d| BigUint::from(d)).collect(),
            identity: OnceCell::new(),
            order: OnceCell::new(),
        }
    }

    pub fn graph(&self) -> &'g SinkedMultigraph {
        self.graph
    }

    pub fn size(&self) -> usize {
        self.graph.nonsink_count()
    }

    pub fn zero(&self) -> ChipConfig {
        ChipConfig::zeros(self.size())
    }

    /// The configuration with `d_i - 1` chips everywhere.
    pub fn max_stable(&self) -> ChipConfig {
        ChipConfig::new(self.degrees.iter().map(|d| d - 1u32).collect())
    }

    /// β as a configuration.
    pub fn beta(&self) -> ChipConfig {
        ChipConfig::from_u64s(self.graph.beta())
    }

    pub fn is_stable(&self, u: &ChipConfig) -> bool {
        u.chips.iter().zip(&self.degrees).all(|(c, d)| c < d)
    }

    fn check(&self, u: &ChipConfig) -> Result<()> {
        check_len(self.size(), u.len())
    }

    /// Topples unstable vertices until none remain.
    ///
    /// Vertices wait in a FIFO queue; a dequeued vertex fires
    /// `floor(chips / degree)` times in one step.
    pub fn stabilize(&self, u: &ChipConfig) -> Result<StabilizationResult> {
        self.check(u)?;
        let n = self.size();
        let mut chips = u.chips.clone();
        let mut odometer = vec![BigUint::zero(); n];
        let mut queued = vec![false; n];
        let mut queue = VecDeque::new();
        for i in 0..n {
            if chips[i] >= self.degrees[i] {
                queued[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            let fires = &chips[i] / &self.degrees[i];
            if fires.is_zero() {
                continue;
            }
            chips[i] -= &fires * &self.degrees[i];
            for &(j, m) in self.graph.pos_neighbors(i) {
                chips[j] += &fires * m;
                if !queued[j] && chips[j] >= self.degrees[j] {
                    queued[j] = true;
                    queue.push_back(j);
                }
            }
            odometer[i] += fires;
        }
        let result = StabilizationResult {
            stable: ChipConfig { chips },
            odometer,
        };
        if cfg!(debug_assertions) {
            assert!(
                self.satisfies_odometer_identity(u, &result),
                "stabilization broke u° = u + Δ·odometer"
            );
        }
        Ok(result)
    }

    /// Checks `stable = u + Δ·odometer` exactly.
    pub fn satisfies_odometer_identity(&self, u: &ChipConfig, r: &StabilizationResult) -> bool {
        let n = self.size();
        if u.len() != n || r.stable.len() != n || r.odometer.len() != n {
            return false;
        }
        (0..n).all(|i| {
            let mut value = BigInt::from(u.chips[i].clone())
                - BigInt::from(&self.degrees[i] * &r.odometer[i]);
            for &(j, m) in self.graph.pos_neighbors(i) {
                value += BigInt::from(&r.odometer[j] * m);
            }
            value == BigInt::from(r.stable.chips[i].clone())
        })
    }

    pub fn stable_part(&self, u: &ChipConfig) -> Result<ChipConfig> {
        Ok(self.stabilize(u)?.stable)
    }

    /// (u + v)°
    pub fn add_and_stabilize(&self, u: &ChipConfig, v: &ChipConfig) -> Result<ChipConfig> {
        self.check(u)?;
        self.check(v)?;
        self.stable_part(&u.add(v)?)
    }

    /// (k·u)°, stabilized in one pass.
    pub fn multiple(&self, u: &ChipConfig, k: u64) -> Result<ChipConfig> {
        self.stable_part(&u.scale(&BigUint::from(k)))
    }

    /// Burning test: `u` is recurrent iff stabilizing `u + β` fires every
    /// vertex exactly once.
    pub fn is_recurrent_burning(&self, u: &ChipConfig) -> Result<bool> {
        self.check(u)?;
        if !self.is_stable(u) {
            return Err(SandpileError::NotStable);
        }
        let burned = self.stabilize(&u.add(&self.beta())?)?;
        let recurrent = burned.odometer.iter().all(One::is_one);
        if recurrent {
            debug_assert_eq!(&burned.stable, u);
        }
        Ok(recurrent)
    }

    /// The identity element e of the sandpile group, computed as
    /// `(2m - (2m)°)°` with `m` the maximal stable configuration.
    ///
    /// # Panics
    ///
    /// If the result fails the burning test or `e + e ≠ e`; either means the
    /// engine is broken.
    pub fn identity(&self) -> &ChipConfig {
        self.identity.get_or_init(|| {
            let two_m = self.max_stable().scale(&BigUint::from(2u32));
            let settled = self.stable_part(&two_m).expect("length checked");
            let diff = ChipConfig::new(
                two_m
                    .chips
                    .iter()
                    .zip(&settled.chips)
                    .map(|(a, b)| a - b)
                    .collect(),
            );
            let e = self.stable_part(&diff).expect("length checked");
            assert!(
                self.is_recurrent_burning(&e).expect("stable"),
                "identity candidate is not recurrent"
            );
            assert_eq!(
                self.add_and_stabilize(&e, &e).expect("length checked"),
                e,
                "identity candidate is not idempotent"
            );
            e
        })
    }

    /// v̂ = (v + e)°
    pub fn recurrent_rep(&self, v: &ChipConfig) -> Result<ChipConfig> {
        self.add_and_stabilize(v, self.identity())
    }

    /// Recurrent form of one chip at `position`.
    pub fn vertex_rep(&self, position: usize) -> Result<ChipConfig> {
        if position >= self.size() {
            return Err(SandpileError::InvalidParameter(format!(
                "position {position} out of range"
            )));
        }
        self.recurrent_rep(&ChipConfig::unit(self.size(), position))
    }

    /// |SP(G)| via the matrix-tree theorem.
    pub fn group_order(&self) -> &BigUint {
        self.order.get_or_init(|| self.graph.spanning_tree_count())
    }

    /// Least k ≥ 1 with (k·u)° = e, by repeated addition.
    pub fn element_order(&self, u: &ChipConfig) -> Result<u64> {
        if !self.is_recurrent_burning(u)? {
            return Err(SandpileError::NotRecurrent);
        }
        let e = self.identity();
        let limit = self.group_order().clone();
        let mut acc = u.clone();
        let mut k: u64 = 1;
        while &acc != e {
            acc = self.add_and_stabilize(&acc, u)?;
            k += 1;
            assert!(
                BigUint::from(k) <= limit,
                "element order exceeds the group order"
            );
        }
        Ok(k)
    }

    /// Number of stable configurations, i.e. the product of the degrees.
    pub fn stable_count(&self) -> BigUint {
        self.degrees.iter().product()
    }

    /// All recurrent configurations in lexicographic order (first position
    /// most significant). Fails when there are more than `bound` stable
    /// configurations to scan.
    pub fn enumerate_recurrent(&self, bound: u64) -> Result<Vec<ChipConfig>> {
        let total = self.stable_count();
        if total > BigUint::from(bound) {
            return Err(SandpileError::BoundExceeded {
                bound,
                required: total.to_string(),
            });
        }
        let degrees: Vec<u64> = self.graph.degrees().to_vec();
        let n = degrees.len();
        let mut digits = vec![0u64; n];
        let mut out = Vec::new();
        loop {
            let u = ChipConfig::from_u64s(&digits);
            if self.is_recurrent_burning(&u)? {
                out.push(u);
            }
            // Odometer-style increment, last position fastest.
            let mut i = n;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < degrees[i] {
                    break;
                }
                digits[i] = 0;
            }
        }
    }
}
