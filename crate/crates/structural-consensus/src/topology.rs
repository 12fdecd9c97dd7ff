//! Directed leader-following topologies and admissible weight schedules.
//!
//! An edge `j → i` means agent `i` exploits agent `j`'s state; its base weight
//! `a_ij[0]` is the center of the structural interval
//! `[a_ij[0] − δ, a_ij[0] + δ]` from which every realized weight `a_ij[k]` is
//! drawn. Zero weights (non-edges) stay zero at all times; that restriction
//! is what makes the consensus notion *structural*. The leader has no
//! in-edges, so its control input is identically zero and its row of every
//! Laplacian realization is zero.
//!
//! Weight randomness is organized as one independent deterministic stream per
//! edge, all derived from a single run seed. The encrypted protocol draws from
//! the same per-edge streams, so a plaintext reference run and an encrypted
//! run under one seed realize byte-identical weights, the basis of every
//! equivalence check in this crate.

use crate::linalg::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("topology must have at least one agent")]
    NoAgents,
    #[error("edge list is empty")]
    NoEdges,
    #[error("agent index {0} out of range for {1} agents")]
    BadAgentIndex(usize, usize),
    #[error("self-loop on agent {0} is not allowed")]
    SelfLoop(usize),
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: usize, to: usize },
    #[error("delta must be positive, got {0}")]
    BadDelta(f64),
    #[error("delta {delta} must be strictly below base weight {weight} on edge {from} -> {to}")]
    DeltaTooLarge { from: usize, to: usize, weight: f64, delta: f64 },
    #[error("leader {leader} has an incoming edge from {from}")]
    LeaderHasInEdge { leader: usize, from: usize },
    #[error("no directed spanning tree rooted at the leader ({unreached} agents unreachable)")]
    NoSpanningTree { unreached: usize },
}

/// One directed edge `from → to`: `to` exploits `from`'s state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// JSON-facing description of a topology: `{agents, leader, edges, delta}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub agents: usize,
    pub leader: usize,
    pub edges: Vec<Edge>,
    pub delta: f64,
}

/// Validated directed leader-following graph.
///
/// Construction via [`build_topology`] enforces every structural invariant:
/// no self-loops or duplicate edges, `0 < δ < a_ij[0]` on every edge, a
/// leader without in-edges, and a directed spanning tree rooted at it.
#[derive(Clone, Debug)]
pub struct Topology {
    n_agents: usize,
    leader: usize,
    edges: Vec<Edge>,
    delta: f64,
    /// Edge indices grouped by receiving agent (`to`).
    in_edges: Vec<Vec<usize>>,
    /// Edge indices grouped by sending agent (`from`).
    out_edges: Vec<Vec<usize>>,
}

impl Topology {
    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn leader(&self) -> usize {
        self.leader
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Indices into [`Self::edges`] of the edges feeding agent `i`.
    pub fn in_edges(&self, i: usize) -> &[usize] {
        &self.in_edges[i]
    }

    /// Indices into [`Self::edges`] of the edges reading from agent `j`.
    pub fn out_edges(&self, j: usize) -> &[usize] {
        &self.out_edges[j]
    }

    /// Closed structural interval for one edge.
    pub fn weight_interval(&self, edge_index: usize) -> (f64, f64) {
        let w = self.edges[edge_index].weight;
        (w - self.delta, w + self.delta)
    }

    pub fn spec(&self) -> TopologySpec {
        TopologySpec {
            agents: self.n_agents,
            leader: self.leader,
            edges: self.edges.clone(),
            delta: self.delta,
        }
    }
}

/// Validates and builds a [`Topology`] from its raw description.
pub fn build_topology(spec: &TopologySpec) -> Result<Topology, TopologyError> {
    let n = spec.agents;
    if n == 0 {
        return Err(TopologyError::NoAgents);
    }
    if spec.leader >= n {
        return Err(TopologyError::BadAgentIndex(spec.leader, n));
    }
    if spec.edges.is_empty() {
        return Err(TopologyError::NoEdges);
    }
    if !(spec.delta > 0.0) {
        return Err(TopologyError::BadDelta(spec.delta));
    }
    let mut in_edges = vec![Vec::new(); n];
    let mut out_edges = vec![Vec::new(); n];
    for (idx, e) in spec.edges.iter().enumerate() {
        if e.from >= n {
            return Err(TopologyError::BadAgentIndex(e.from, n));
        }
        if e.to >= n {
            return Err(TopologyError::BadAgentIndex(e.to, n));
        }
        if e.from == e.to {
            return Err(TopologyError::SelfLoop(e.from));
        }
        if spec.edges[..idx].iter().any(|o| o.from == e.from && o.to == e.to) {
            return Err(TopologyError::DuplicateEdge { from: e.from, to: e.to });
        }
        if !(e.weight > spec.delta) {
            return Err(TopologyError::DeltaTooLarge {
                from: e.from,
                to: e.to,
                weight: e.weight,
                delta: spec.delta,
            });
        }
        if e.to == spec.leader {
            return Err(TopologyError::LeaderHasInEdge { leader: spec.leader, from: e.from });
        }
        in_edges[e.to].push(idx);
        out_edges[e.from].push(idx);
    }
    let topo = Topology {
        n_agents: n,
        leader: spec.leader,
        edges: spec.edges.clone(),
        delta: spec.delta,
        in_edges,
        out_edges,
    };
    if !has_spanning_tree(&topo) {
        let unreached = n - reachable_count(&topo);
        return Err(TopologyError::NoSpanningTree { unreached });
    }
    Ok(topo)
}

/// True iff every agent is reachable from the leader by a directed path.
pub fn has_spanning_tree(topology: &Topology) -> bool {
    reachable_count(topology) == topology.n_agents
}

fn reachable_count(topology: &Topology) -> usize {
    let mut seen = vec![false; topology.n_agents];
    let mut stack = vec![topology.leader];
    seen[topology.leader] = true;
    let mut count = 0;
    while let Some(j) = stack.pop() {
        count += 1;
        for &idx in &topology.out_edges[j] {
            let i = topology.edges[idx].to;
            if !seen[i] {
                seen[i] = true;
                stack.push(i);
            }
        }
    }
    count
}

/// Deterministic per-edge weight source.
///
/// Each edge owns an independent ChaCha stream derived from the run seed, so
/// draws on one edge never perturb another and any holder of the seed can
/// replay exactly the weights a particular edge realized.
pub struct WeightStream {
    kind: StreamKind,
}

enum StreamKind {
    Random { rng: ChaCha8Rng, lo: f64, hi: f64 },
    Constant(f64),
}

impl WeightStream {
    /// Randomized stream for one edge of a topology.
    pub fn randomized(topology: &Topology, edge_index: usize, seed: u64) -> Self {
        let (lo, hi) = topology.weight_interval(edge_index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 + edge_index as u64);
        WeightStream { kind: StreamKind::Random { rng, lo, hi } }
    }

    /// Degenerate stream that always returns the base weight (the
    /// unprotected protocol the constant-weight attack assumes).
    pub fn constant(topology: &Topology, edge_index: usize) -> Self {
        WeightStream { kind: StreamKind::Constant(topology.edges()[edge_index].weight) }
    }

    /// The weight for the next step; draws are uniform on the closed
    /// structural interval.
    pub fn next_weight(&mut self) -> f64 {
        match &mut self.kind {
            StreamKind::Random { rng, lo, hi } => *lo + rng.gen::<f64>() * (*hi - *lo),
            StreamKind::Constant(w) => *w,
        }
    }
}

/// Realized weights for every edge at every step of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSchedule {
    /// `steps[k][e]` is the weight of edge `e` at step `k`.
    steps: Vec<Vec<f64>>,
    /// Seed the schedule was drawn from; `None` for constant schedules.
    seed: Option<u64>,
}

impl WeightSchedule {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Weights of all edges at step `k`, aligned with `topology.edges()`.
    pub fn step(&self, k: usize) -> &[f64] {
        &self.steps[k]
    }
}

/// Draws a schedule of independent uniform weights, one per edge per step,
/// from the closed structural interval. Deterministic in the seed.
pub fn sample_weights(topology: &Topology, horizon: usize, seed: u64) -> WeightSchedule {
    let mut streams: Vec<WeightStream> = (0..topology.edges().len())
        .map(|e| WeightStream::randomized(topology, e, seed))
        .collect();
    let steps = (0..horizon)
        .map(|_| streams.iter_mut().map(WeightStream::next_weight).collect())
        .collect();
    WeightSchedule { steps, seed: Some(seed) }
}

/// Schedule that pins every edge at its base weight for the whole run.
pub fn constant_schedule(topology: &Topology, horizon: usize) -> WeightSchedule {
    let base: Vec<f64> = topology.edges().iter().map(|e| e.weight).collect();
    WeightSchedule { steps: vec![base; horizon], seed: None }
}

/// Graph Laplacian of one weight realization: `l_ij = −a_ij` for `i ≠ j`,
/// `l_ii = Σ_j a_ij`. Rows sum to zero and the leader's row is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian {
    entries: Matrix,
    leader: usize,
}

impl Laplacian {
    /// Wraps an explicit matrix, validating the Laplacian invariants. Mostly
    /// useful for degenerate cases in tests; simulation code goes through
    /// [`laplacian`].
    pub fn new(entries: Matrix, leader: usize) -> Result<Self, TopologyError> {
        let n = entries.rows();
        assert!(entries.is_square(), "Laplacian must be square");
        if leader >= n {
            return Err(TopologyError::BadAgentIndex(leader, n));
        }
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| entries[(i, j)]).sum();
            assert!(row_sum.abs() <= 1e-9, "Laplacian row {i} sums to {row_sum}");
            for j in 0..n {
                if i != j {
                    assert!(entries[(i, j)] <= 0.0, "positive off-diagonal at ({i},{j})");
                }
                if i == leader {
                    assert!(entries[(i, j)] == 0.0, "leader row must be zero");
                }
            }
        }
        Ok(Laplacian { entries, leader })
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn leader(&self) -> usize {
        self.leader
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    /// The follower-grounded block: leader row and column removed.
    ///
    /// With the leader ordered first the full Laplacian is block
    /// lower-triangular `[[0, 0], [·, L_f]]`, so its spectrum is exactly
    /// `{0} ∪ spec(L_f)`; the grounded block carries every nonzero
    /// eigenvalue.
    pub fn grounded(&self) -> Matrix {
        let keep: Vec<usize> = (0..self.n()).filter(|&i| i != self.leader).collect();
        self.entries.submatrix(&keep)
    }
}

/// Builds the Laplacian for one step of realized weights (aligned with
/// `topology.edges()`).
pub fn laplacian(topology: &Topology, weights: &[f64]) -> Laplacian {
    assert_eq!(weights.len(), topology.edges().len(), "one weight per edge");
    for (idx, &w) in weights.iter().enumerate() {
        let (lo, hi) = topology.weight_interval(idx);
        assert!(
            (lo..=hi).contains(&w),
            "weight {w} outside structural interval [{lo}, {hi}] on edge {idx}"
        );
    }
    let n = topology.n_agents();
    let mut m = Matrix::zeros(n, n);
    for (idx, e) in topology.edges().iter().enumerate() {
        let w = weights[idx];
        m[(e.to, e.from)] -= w;
        m[(e.to, e.to)] += w;
    }
    Laplacian { entries: m, leader: topology.leader() }
}

/// The canonical four-agent reproduction topology: leader `L = 0` feeding
/// `A = 1`, the pair `A ↔ B = 2`, and `C = 3` reading from `A`; all base
/// weights 1, δ = 0.5.
pub fn canonical_four_agent() -> Topology {
    build_topology(&TopologySpec {
        agents: 4,
        leader: 0,
        edges: vec![
            Edge { from: 0, to: 1, weight: 1.0 },
            Edge { from: 2, to: 1, weight: 1.0 },
            Edge { from: 1, to: 2, weight: 1.0 },
            Edge { from: 1, to: 3, weight: 1.0 },
        ],
        delta: 0.5,
    })
    .expect("canonical topology is valid")
}

/// The five-agent second-order topology: a spanning tree `L → A`,
/// `A → {B, C, D}`, all base weights 1, δ = 0.5. A tree keeps the sampled
/// Laplacian spectrum real inside `[0.5, 1.5]`, which the second-order
/// boundary-curve containment property requires.
pub fn five_agent_tree() -> Topology {
    build_topology(&TopologySpec {
        agents: 5,
        leader: 0,
        edges: vec![
            Edge { from: 0, to: 1, weight: 1.0 },
            Edge { from: 1, to: 2, weight: 1.0 },
            Edge { from: 1, to: 3, weight: 1.0 },
            Edge { from: 1, to: 4, weight: 1.0 },
        ],
        delta: 0.5,
    })
    .expect("five-agent tree is valid")
}

/// Random leader-rooted topology for stress tests: a spanning tree over
/// `n_agents` agents plus occasional feedback edges between followers, so the
/// grounded spectrum can have genuinely complex eigenvalues. Deterministic in
/// the seed.
pub fn random_topology(n_agents: usize, seed: u64) -> Topology {
    assert!(n_agents >= 2, "need a leader and at least one follower");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0xF0);
    let mut edges = Vec::new();
    for i in 1..n_agents {
        let parent = rng.gen_range(0..i);
        edges.push(Edge { from: parent, to: i, weight: 1.0 + rng.gen::<f64>() });
    }
    // Back edges (higher index to lower) can close follower cycles; forward
    // duplicates of tree edges are impossible this way.
    for i in 1..n_agents {
        for j in (i + 1)..n_agents {
            if rng.gen::<f64>() < 0.15 {
                edges.push(Edge { from: j, to: i, weight: 1.0 + rng.gen::<f64>() });
            }
        }
    }
    let min_w = edges.iter().map(|e| e.weight).fold(f64::INFINITY, f64::min);
    let delta = min_w * (0.25 + 0.2 * rng.gen::<f64>());
    build_topology(&TopologySpec { agents: n_agents, leader: 0, edges, delta })
        .expect("generated topology is valid by construction")
}
