//! Round-based encrypted message protocol executing the consensus control
//! law without revealing states or weights.
//!
//! Terminology follows the pairwise exchange: for a directed edge `j → i`,
//! agent `i` ("Alice") exploits agent `j`'s state. Alice owns the keypair and
//! decrypts; Bob (`j`) draws the randomized edge weight, which never leaves
//! his node. One first-order exchange is two messages:
//!
//! 1. Alice sends `E_A(−x_A)`.
//! 2. Bob replies `(E_A(x_B) · E_A(−x_A))^enc(a) = E_A(a·(x_B − x_A))`.
//!
//! Alice decrypts to `u_AB = a·(x_B − x_A)` and applies the public step gain
//! `ε` locally. The second-order exchange is three messages: position and
//! velocity ciphertexts out, one combined reply back; Bob multiplies the
//! position difference by `enc(γ₁a)` and the velocity difference by
//! `enc(γ₂a)` and merges the two homomorphically before transmission, so
//! Alice sees only the already-mixed input `γ₁a(p_B−p_A) + γ₂a(v_B−v_A)`.
//!
//! Rounds are barrier-synchronized: all Step-1 messages, then all Step-2
//! replies, then all decryptions, then every agent steps its dynamics. Any
//! execution order inside a phase yields identical results.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{State, Trajectory};
use crate::paillier::{
    decrypt, encrypt, hom_add, hom_scale, keygen, Ciphertext, FixedPointCodec, PaillierError,
    PaillierPrivateKey, PaillierPublicKey,
};
use crate::spectral::{Gains, Order};
use crate::topology::{constant_schedule, sample_weights, Topology, WeightStream};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("key setup failed: {0}")]
    KeySetup(#[source] PaillierError),
    #[error("state or scaled weight left the codec range: {0}")]
    CodecOverflow(#[source] PaillierError),
    #[error("decryption failed: {0}")]
    DecryptFailed(#[source] PaillierError),
}

/// Which half of a pairwise exchange a message belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Step1,
    Step2,
}

/// One message on the simulated network. Payload ciphertexts are always
/// under the RECEIVING decryptor's public key (Alice's, in both directions);
/// no plaintext state or weight field exists by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub from: usize,
    pub to: usize,
    pub step: usize,
    pub phase: Phase,
    pub payload: Vec<Ciphertext>,
}

/// What one agent legitimately observes over a run: its own states and the
/// decrypted neighbor inputs, step by step.
#[derive(Clone, Debug, Default)]
pub struct AgentLog {
    states: Vec<Vec<f64>>,
    inputs: Vec<BTreeMap<usize, f64>>,
}

impl AgentLog {
    /// Own state snapshots; entry `k` is the state after `k` rounds.
    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// Decrypted `u` values per round, keyed by sending neighbor.
    pub fn inputs(&self) -> &[BTreeMap<usize, f64>] {
        &self.inputs
    }
}

/// Append-only record of a run: every wire message in transmission order
/// plus each agent's private observations.
#[derive(Clone, Debug, Default)]
pub struct Transcript {
    messages: Vec<WireMessage>,
    logs: BTreeMap<usize, AgentLog>,
    gains: Option<Gains>,
}

impl Transcript {
    pub fn new() -> Self {
        Transcript::default()
    }

    pub fn messages(&self) -> &[WireMessage] {
        &self.messages
    }

    /// The run's public gains; recorded because every adversary knows them.
    pub fn gains(&self) -> Option<Gains> {
        self.gains
    }

    pub fn log(&self, agent: usize) -> Option<&AgentLog> {
        self.logs.get(&agent)
    }

    /// JSON-lines export, one wire message per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&serde_json::to_string(m).expect("wire messages serialize"));
            out.push('\n');
        }
        out
    }

    fn log_mut(&mut self, agent: usize) -> &mut AgentLog {
        self.logs.entry(agent).or_default()
    }

    fn record_state(&mut self, agent: usize, state: Vec<f64>) {
        self.log_mut(agent).states.push(state);
    }

    fn begin_round(&mut self, agent: usize, k: usize) {
        let inputs = &mut self.log_mut(agent).inputs;
        assert_eq!(inputs.len(), k, "rounds are recorded in order");
        inputs.push(BTreeMap::new());
    }

    fn record_input(&mut self, agent: usize, neighbor: usize, u: f64) {
        self.log_mut(agent)
            .inputs
            .last_mut()
            .expect("begin_round precedes record_input")
            .insert(neighbor, u);
    }
}

#[derive(Clone, Copy, Debug)]
enum OwnState {
    First { x: f64 },
    Second { p: f64, v: f64 },
}

/// One agent of the encrypted network: its keypair, scalar state, public
/// gains, and the weight streams for every edge it SENDS along. A weight
/// exists only here, in the sending node, and the private key never enters
/// any message.
pub struct AgentNode {
    id: usize,
    leader: bool,
    public: PaillierPublicKey,
    private: PaillierPrivateKey,
    frac_bits: u32,
    gains: Gains,
    state: OwnState,
    out_weights: BTreeMap<usize, WeightStream>,
}

impl AgentNode {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn is_leader(&self) -> bool {
        self.leader
    }

    pub fn public_key(&self) -> &PaillierPublicKey {
        &self.public
    }

    pub fn gains(&self) -> Gains {
        self.gains
    }

    /// Own state as `[x]` or `[p, v]`.
    pub fn state_vec(&self) -> Vec<f64> {
        match self.state {
            OwnState::First { x } => vec![x],
            OwnState::Second { p, v } => vec![p, v],
        }
    }

    fn codec(&self) -> FixedPointCodec {
        FixedPointCodec::new(self.frac_bits, &self.public)
    }

    /// Alice's half-step: encrypt the negated own state toward one
    /// in-neighbor. One message first order, two (position, velocity)
    /// second order.
    fn emit_step1(
        &self,
        to: usize,
        step: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<WireMessage>, ProtocolError> {
        let codec = self.codec();
        let enc = |value: f64, rng: &mut ChaCha8Rng| {
            let m = codec.encode(value).map_err(ProtocolError::CodecOverflow)?;
            encrypt(&self.public, &m, rng).map_err(ProtocolError::CodecOverflow)
        };
        let payloads = match self.state {
            OwnState::First { x } => vec![enc(-x, rng)?],
            OwnState::Second { p, v } => vec![enc(-p, rng)?, enc(-v, rng)?],
        };
        Ok(payloads
            .into_iter()
            .map(|c| WireMessage {
                from: self.id,
                to,
                step,
                phase: Phase::Step1,
                payload: vec![c],
            })
            .collect())
    }

    /// Bob's half-step: draw the fresh edge weight, form the scaled state
    /// difference under the reader's key, and combine terms before replying.
    fn process_step1(
        &mut self,
        msgs: &[WireMessage],
        reader_key: &PaillierPublicKey,
        rng: &mut ChaCha8Rng,
    ) -> Result<WireMessage, ProtocolError> {
        let reader = msgs[0].from;
        let step = msgs[0].step;
        let codec = FixedPointCodec::new(self.frac_bits, reader_key);
        let a = self
            .out_weights
            .get_mut(&reader)
            .expect("step-1 messages arrive only along real edges")
            .next_weight();
        let enc = |value: f64, rng: &mut ChaCha8Rng| {
            let m = codec.encode(value).map_err(ProtocolError::CodecOverflow)?;
            encrypt(reader_key, &m, rng).map_err(ProtocolError::CodecOverflow)
        };
        let scale = |c: &Ciphertext, factor: f64| {
            let f = codec.encode(factor).map_err(ProtocolError::CodecOverflow)?;
            Ok(hom_scale(reader_key, c, &f))
        };
        let combined = match (self.state, self.gains) {
            (OwnState::First { x }, Gains::First { .. }) => {
                // ε is applied by Alice after decryption; the reply carries
                // the bare a·(x_B − x_A).
                let diff = hom_add(reader_key, &enc(x, rng)?, &msgs[0].payload[0]);
                scale(&diff, a)?
            }
            (OwnState::Second { p, v }, Gains::Second { gamma1, gamma2 }) => {
                let p_diff = hom_add(reader_key, &enc(p, rng)?, &msgs[0].payload[0]);
                let v_diff = hom_add(reader_key, &enc(v, rng)?, &msgs[1].payload[0]);
                hom_add(reader_key, &scale(&p_diff, gamma1 * a)?, &scale(&v_diff, gamma2 * a)?)
            }
            _ => unreachable!("state and gains orders agree by construction"),
        };
        Ok(WireMessage {
            from: self.id,
            to: reader,
            step,
            phase: Phase::Step2,
            payload: vec![combined],
        })
    }

    /// Alice's final half-step: decrypt the combined reply to the real input
    /// `u_AB` (two accumulated fixed-point levels: weight times difference).
    fn decrypt_step2(&self, msg: &WireMessage) -> Result<f64, ProtocolError> {
        debug_assert_eq!(msg.to, self.id);
        let m = decrypt(&self.private, &self.public, &msg.payload[0])
            .map_err(ProtocolError::DecryptFailed)?;
        Ok(self.codec().decode(&m, 2))
    }

    /// Barrier update once all of this round's inputs are summed. The gain
    /// structure makes the leader's input sum empty, so it passes through
    /// (first order) or integrates its own velocity (second order).
    fn apply_input(&mut self, u: f64) {
        match (&mut self.state, self.gains) {
            (OwnState::First { x }, Gains::First { epsilon }) => *x += epsilon * u,
            (OwnState::Second { p, v }, Gains::Second { .. }) => {
                *p += *v;
                *v += u;
            }
            _ => unreachable!("state and gains orders agree by construction"),
        }
    }
}

/// One full first-order pairwise exchange at step `k`; returns Alice's
/// decrypted `u_AB` and the two transmitted messages.
pub fn pair_exchange_first(
    alice: &AgentNode,
    bob: &mut AgentNode,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<WireMessage>), ProtocolError> {
    assert!(matches!(alice.gains, Gains::First { .. }), "first-order exchange needs ε gains");
    let mut msgs = alice.emit_step1(bob.id, k, rng)?;
    let reply = bob.process_step1(&msgs, &alice.public, rng)?;
    let u = alice.decrypt_step2(&reply)?;
    msgs.push(reply);
    Ok((u, msgs))
}

/// One full second-order pairwise exchange at step `k`; returns the combined
/// `γ₁a(p_B−p_A) + γ₂a(v_B−v_A)` and the three transmitted messages.
pub fn pair_exchange_second(
    alice: &AgentNode,
    bob: &mut AgentNode,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<WireMessage>), ProtocolError> {
    assert!(matches!(alice.gains, Gains::Second { .. }), "second-order exchange needs γ gains");
    let mut msgs = alice.emit_step1(bob.id, k, rng)?;
    let reply = bob.process_step1(&msgs, &alice.public, rng)?;
    let u = alice.decrypt_step2(&reply)?;
    msgs.push(reply);
    Ok((u, msgs))
}

/// Knobs for the encrypted execution. Defaults match the simulation scale;
/// tests shrink the key to keep modular exponentiation cheap.
#[derive(Clone, Copy, Debug)]
pub struct EncryptionOptions {
    pub prime_bits: u64,
    pub frac_bits: u32,
    /// Pin every weight at its base value: the unprotected variant the
    /// constant-weight attack exploits.
    pub constant_weights: bool,
}

impl Default for EncryptionOptions {
    fn default() -> Self {
        EncryptionOptions { prime_bits: 512, frac_bits: 32, constant_weights: false }
    }
}

/// The simulated network: all agent nodes plus the shared round counter and
/// the encryption-randomness source.
pub struct Network {
    topology: Topology,
    nodes: Vec<AgentNode>,
    enc_rng: ChaCha8Rng,
    step: usize,
}

fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Network {
    /// Builds the network: one keypair per agent, weight streams placed in
    /// the sending node of each edge. The streams are the same ones a
    /// plaintext run with this seed would sample, so both executions realize
    /// identical weights.
    pub fn new(
        topology: &Topology,
        initial: &State,
        gains: &Gains,
        seed: u64,
        options: &EncryptionOptions,
    ) -> Result<Self, ProtocolError> {
        assert_eq!(initial.n_agents(), topology.n_agents());
        let order_matches = matches!(
            (initial.order(), gains),
            (Order::First, Gains::First { .. }) | (Order::Second, Gains::Second { .. })
        );
        assert!(order_matches, "gains must match the initial state's order");
        let n = topology.n_agents();
        let stacked = initial.stacked();
        let mut nodes = Vec::with_capacity(n);
        for id in 0..n {
            let (public, private) = keygen(options.prime_bits, derive_seed(seed, id as u64))
                .map_err(ProtocolError::KeySetup)?;
            let state = match initial.order() {
                Order::First => OwnState::First { x: stacked[id] },
                Order::Second => OwnState::Second { p: stacked[id], v: stacked[n + id] },
            };
            let mut out_weights = BTreeMap::new();
            for &e in topology.out_edges(id) {
                let reader = topology.edges()[e].to;
                let stream = if options.constant_weights {
                    WeightStream::constant(topology, e)
                } else {
                    WeightStream::randomized(topology, e, seed)
                };
                out_weights.insert(reader, stream);
            }
            nodes.push(AgentNode {
                id,
                leader: id == topology.leader(),
                public,
                private,
                frac_bits: options.frac_bits,
                gains: *gains,
                state,
                out_weights,
            });
        }
        let mut enc_rng = ChaCha8Rng::seed_from_u64(seed);
        enc_rng.set_stream(0xEC);
        Ok(Network { topology: topology.clone(), nodes, enc_rng, step: 0 })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn node(&self, id: usize) -> &AgentNode {
        &self.nodes[id]
    }

    pub fn current_step(&self) -> usize {
        self.step
    }

    /// All agent states stacked the way the plaintext simulator does it.
    pub fn stacked_state(&self) -> Vec<f64> {
        let n = self.nodes.len();
        match self.nodes[0].state {
            OwnState::First { .. } => {
                self.nodes
                    .iter()
                    .map(|node| match node.state {
                        OwnState::First { x } => x,
                        OwnState::Second { .. } => unreachable!("orders are homogeneous"),
                    })
                    .collect()
            }
            OwnState::Second { .. } => {
                let mut out = vec![0.0; 2 * n];
                for (i, node) in self.nodes.iter().enumerate() {
                    match node.state {
                        OwnState::Second { p, v } => {
                            out[i] = p;
                            out[n + i] = v;
                        }
                        OwnState::First { .. } => unreachable!("orders are homogeneous"),
                    }
                }
                out
            }
        }
    }

    /// Runs one standalone pairwise exchange on an edge at the current step
    /// without advancing any state; demo and test hook.
    pub fn exchange_on_edge(
        &mut self,
        edge_index: usize,
    ) -> Result<(f64, Vec<WireMessage>), ProtocolError> {
        let edge = self.topology.edges()[edge_index];
        let k = self.step;
        let Network { nodes, enc_rng, .. } = self;
        let (alice, bob) = disjoint_pair(nodes, edge.to, edge.from);
        match alice.gains {
            Gains::First { .. } => pair_exchange_first(alice, bob, k, enc_rng),
            Gains::Second { .. } => pair_exchange_second(alice, bob, k, enc_rng),
        }
    }
}

fn disjoint_pair(nodes: &mut [AgentNode], alice: usize, bob: usize) -> (&AgentNode, &mut AgentNode) {
    assert_ne!(alice, bob);
    if alice < bob {
        let (left, right) = nodes.split_at_mut(bob);
        (&left[alice], &mut right[0])
    } else {
        let (left, right) = nodes.split_at_mut(alice);
        (&right[0], &mut left[bob])
    }
}

/// Executes one synchronous round: every pair runs its exchange with phase
/// barriers (all Step-1 sends, all Step-2 replies, all decryptions), then
/// every agent applies its summed input and steps. Appends the round's
/// messages, inputs, and resulting states to the transcript.
pub fn run_round(net: &mut Network, transcript: &mut Transcript) -> Result<(), ProtocolError> {
    let k = net.step;
    let n = net.nodes.len();
    if k == 0 {
        transcript.gains.get_or_insert(net.nodes[0].gains);
        for node in &net.nodes {
            transcript.record_state(node.id, node.state_vec());
        }
    }
    let edges = net.topology.edges().to_vec();

    let mut step1: Vec<Vec<WireMessage>> = Vec::with_capacity(edges.len());
    {
        let Network { nodes, enc_rng, .. } = &mut *net;
        for e in &edges {
            step1.push(nodes[e.to].emit_step1(e.from, k, enc_rng)?);
        }
    }

    let mut replies = Vec::with_capacity(edges.len());
    for (idx, e) in edges.iter().enumerate() {
        let reader_key = net.nodes[e.to].public.clone();
        let Network { nodes, enc_rng, .. } = &mut *net;
        replies.push(nodes[e.from].process_step1(&step1[idx], &reader_key, enc_rng)?);
    }

    for agent in 0..n {
        transcript.begin_round(agent, k);
    }
    let mut inputs = vec![0.0; n];
    for (idx, e) in edges.iter().enumerate() {
        let u = net.nodes[e.to].decrypt_step2(&replies[idx])?;
        inputs[e.to] += u;
        transcript.record_input(e.to, e.from, u);
    }

    for node in &mut net.nodes {
        node.apply_input(inputs[node.id]);
    }
    for node in &net.nodes {
        transcript.record_state(node.id, node.state_vec());
    }
    transcript.messages.extend(step1.into_iter().flatten());
    transcript.messages.extend(replies);
    net.step += 1;
    Ok(())
}

/// Full encrypted run with the given options; deterministic in the seed.
/// The returned trajectory realizes exactly the weights a plaintext run
/// with the same seed samples, so the two agree within codec error.
pub fn run_encrypted_simulation_with(
    topology: &Topology,
    initial: &State,
    gains: &Gains,
    horizon: usize,
    seed: u64,
    options: &EncryptionOptions,
) -> Result<(Trajectory, Transcript), ProtocolError> {
    let mut net = Network::new(topology, initial, gains, seed, options)?;
    let mut transcript = Transcript::new();
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(initial.stacked());
    for _ in 0..horizon {
        run_round(&mut net, &mut transcript)?;
        states.push(net.stacked_state());
    }
    let schedule = if options.constant_weights {
        constant_schedule(topology, horizon)
    } else {
        sample_weights(topology, horizon, seed)
    };
    let trajectory = Trajectory::from_parts(
        initial.order(),
        topology.n_agents(),
        topology.leader(),
        states,
        schedule,
        *gains,
    );
    Ok((trajectory, transcript))
}

/// Full encrypted run at default key size and codec precision.
pub fn run_encrypted_simulation(
    topology: &Topology,
    initial: &State,
    gains: &Gains,
    horizon: usize,
    seed: u64,
) -> Result<(Trajectory, Transcript), ProtocolError> {
    run_encrypted_simulation_with(
        topology,
        initial,
        gains,
        horizon,
        seed,
        &EncryptionOptions::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::simulate;
    use crate::topology::{build_topology, canonical_four_agent, five_agent_tree, Edge, TopologySpec};

    fn test_options() -> EncryptionOptions {
        EncryptionOptions { prime_bits: 64, frac_bits: 24, constant_weights: false }
    }

    fn two_agent_chain() -> Topology {
        build_topology(&TopologySpec {
            agents: 2,
            leader: 0,
            edges: vec![Edge { from: 0, to: 1, weight: 1.0 }],
            delta: 0.5,
        })
        .unwrap()
    }

    fn first_net(topology: &Topology, x: Vec<f64>, constant: bool) -> Network {
        let options = EncryptionOptions { constant_weights: constant, ..test_options() };
        Network::new(
            topology,
            &State::first(x),
            &Gains::First { epsilon: 0.3 },
            7,
            &options,
        )
        .unwrap()
    }

    #[test]
    fn first_order_exchange_matches_plaintext_oracle() {
        // Constant weight a = 1: u = a·(x_B − x_A) = 30 − 40.
        let mut net = first_net(&two_agent_chain(), vec![30.0, 40.0], true);
        let (u, msgs) = net.exchange_on_edge(0).unwrap();
        assert!((u - -10.0).abs() < 1e-6, "u {u}");
        assert_eq!(msgs.len(), 2);
        assert_eq!((msgs[0].from, msgs[0].to, msgs[0].phase), (1, 0, Phase::Step1));
        assert_eq!((msgs[1].from, msgs[1].to, msgs[1].phase), (0, 1, Phase::Step2));
        assert!(msgs.iter().all(|m| m.payload.len() == 1));
    }

    #[test]
    fn equal_states_give_exactly_zero_input() {
        let mut net = first_net(&two_agent_chain(), vec![12.5, 12.5], false);
        let (u, _) = net.exchange_on_edge(0).unwrap();
        assert_eq!(u, 0.0);
    }

    #[test]
    fn second_order_exchange_matches_control_law() {
        // p_A=10, p_B=0, v_A=0, v_B=1, a=1: u = 0.3(0−10) + 0.75(1−0) = −2.25.
        let topology = two_agent_chain();
        let options = EncryptionOptions { constant_weights: true, ..test_options() };
        let mut net = Network::new(
            &topology,
            &State::second(vec![0.0, 10.0], vec![1.0, 0.0]),
            &Gains::Second { gamma1: 0.3, gamma2: 0.75 },
            7,
            &options,
        )
        .unwrap();
        let (u, msgs) = net.exchange_on_edge(0).unwrap();
        assert!((u - -2.25).abs() < 1e-5, "u {u}");
        assert_eq!(msgs.len(), 3);
        assert_eq!(msgs.iter().filter(|m| m.phase == Phase::Step1).count(), 2);
        assert_eq!(msgs.iter().filter(|m| m.phase == Phase::Step2).count(), 1);
        assert!(msgs.iter().all(|m| m.payload.len() == 1));
    }

    #[test]
    fn encrypted_first_order_tracks_plaintext_within_codec_bound() {
        let topology = canonical_four_agent();
        let initial = State::first(vec![30.0, 40.0, 50.0, -20.0]);
        let gains = Gains::First { epsilon: 0.3 };
        let horizon = 50;
        let seed = 11;
        let (enc, transcript) =
            run_encrypted_simulation_with(&topology, &initial, &gains, horizon, seed, &test_options())
                .unwrap();
        let plain = simulate(&topology, &initial, &gains, horizon, seed);
        assert_eq!(enc.schedule(), plain.schedule(), "identical realized weights");
        let max_state = 50.0;
        let bound = horizon as f64 * 4.0 * (-22.0f64).exp2() * max_state;
        for k in 0..=horizon {
            let worst = enc
                .state(k)
                .iter()
                .zip(plain.state(k))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(worst <= bound, "step {k}: deviation {worst} above {bound}");
        }
        assert_eq!(transcript.messages().len(), horizon * topology.edges().len() * 2);
    }

    #[test]
    fn encrypted_second_order_tracks_plaintext_within_codec_bound() {
        let topology = five_agent_tree();
        let initial =
            State::second(vec![30.0, 40.0, 50.0, -20.0, 10.0], vec![2.0, 0.0, -1.0, 1.0, 0.0]);
        let gains = Gains::Second { gamma1: 0.3, gamma2: 0.75 };
        let horizon = 60;
        let seed = 12;
        let (enc, transcript) =
            run_encrypted_simulation_with(&topology, &initial, &gains, horizon, seed, &test_options())
                .unwrap();
        let plain = simulate(&topology, &initial, &gains, horizon, seed);
        assert_eq!(enc.schedule(), plain.schedule());
        let bound = horizon as f64 * 5.0 * (-22.0f64).exp2() * 170.0;
        for k in 0..=horizon {
            let worst = enc
                .state(k)
                .iter()
                .zip(plain.state(k))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(worst <= bound, "step {k}: deviation {worst} above {bound}");
        }
        assert_eq!(transcript.messages().len(), horizon * topology.edges().len() * 3);
    }

    #[test]
    fn rounds_keep_phase_barriers_in_message_order() {
        let topology = canonical_four_agent();
        let initial = State::first(vec![1.0, 2.0, 3.0, 4.0]);
        let gains = Gains::First { epsilon: 0.3 };
        let (_, transcript) =
            run_encrypted_simulation_with(&topology, &initial, &gains, 3, 5, &test_options())
                .unwrap();
        let per_round = topology.edges().len() * 2;
        for k in 0..3 {
            let round = &transcript.messages()[k * per_round..(k + 1) * per_round];
            assert!(round.iter().all(|m| m.step == k));
            let first_step2 = round.iter().position(|m| m.phase == Phase::Step2).unwrap();
            assert!(round[..first_step2].iter().all(|m| m.phase == Phase::Step1));
            assert!(round[first_step2..].iter().all(|m| m.phase == Phase::Step2));
        }
    }

    #[test]
    fn bob_receives_one_and_sends_one_per_first_order_exchange() {
        let mut net = first_net(&two_agent_chain(), vec![3.0, 9.0], false);
        let (_, msgs) = net.exchange_on_edge(0).unwrap();
        let to_bob = msgs.iter().filter(|m| m.to == 0).count();
        let from_bob = msgs.iter().filter(|m| m.from == 0).count();
        assert_eq!((to_bob, from_bob), (1, 1));
        let ciphertexts: usize = msgs.iter().filter(|m| m.to == 0).map(|m| m.payload.len()).sum();
        assert_eq!(ciphertexts, 1);
    }

    #[test]
    fn transcript_jsonl_carries_no_secret_material() {
        let topology = canonical_four_agent();
        let initial = State::first(vec![30.0, 40.0, 50.0, -20.0]);
        let gains = Gains::First { epsilon: 0.3 };
        let seed = 21;
        let options = test_options();
        let mut net = Network::new(&topology, &initial, &gains, seed, &options).unwrap();
        let mut transcript = Transcript::new();
        for _ in 0..4 {
            run_round(&mut net, &mut transcript).unwrap();
        }
        let jsonl = transcript.to_jsonl();
        // Hex ciphertext payloads only: no floats anywhere on the wire.
        assert!(!jsonl.contains('.'));
        for line in jsonl.lines() {
            let msg: WireMessage = serde_json::from_str(line).unwrap();
            assert!(!msg.payload.is_empty() && msg.payload.len() <= 2);
        }
        // Private key material stays out of every serialization.
        for node in &net.nodes {
            let private = serde_json::to_value(&node.private).unwrap();
            for hex in [&private["lambda"], &private["mu"]] {
                let hex = hex.as_str().unwrap();
                assert!(!jsonl.contains(hex), "private key hex leaked to the wire");
            }
        }
        // The realized weights live only in sender nodes; the wire format
        // has no field that could carry them.
        let schedule = sample_weights(&topology, 4, seed);
        for k in 0..4 {
            for w in schedule.step(k) {
                assert!(!jsonl.contains(&format!("{w}")));
            }
        }
    }

    #[test]
    fn repeated_plaintexts_encrypt_to_distinct_ciphertexts() {
        // The leader's state never changes, yet its step-1 ciphertexts must
        // never repeat across rounds.
        let topology = two_agent_chain();
        let initial = State::first(vec![5.0, 5.0]);
        let gains = Gains::First { epsilon: 0.3 };
        let (_, transcript) =
            run_encrypted_simulation_with(&topology, &initial, &gains, 8, 3, &test_options())
                .unwrap();
        let mut seen = std::collections::HashSet::new();
        for m in transcript.messages() {
            for c in &m.payload {
                assert!(seen.insert(c.to_hex()), "ciphertext repeated on the wire");
            }
        }
    }

    #[test]
    fn leader_first_order_state_is_bitwise_constant() {
        let topology = canonical_four_agent();
        let initial = State::first(vec![30.0, 40.0, 50.0, -20.0]);
        let gains = Gains::First { epsilon: 0.3 };
        let (enc, transcript) =
            run_encrypted_simulation_with(&topology, &initial, &gains, 20, 9, &test_options())
                .unwrap();
        for k in 0..=20 {
            assert_eq!(enc.state(k)[0], 30.0);
        }
        let log = transcript.log(0).unwrap();
        assert!(log.states().iter().all(|s| s == &vec![30.0]));
        assert!(log.inputs().iter().all(|m| m.is_empty()));
    }

    #[test]
    fn leader_second_order_integrates_exactly() {
        let topology = five_agent_tree();
        let initial = State::second(vec![30.0, 0.0, 0.0, 0.0, 0.0], vec![2.0, 0.0, 0.0, 0.0, 0.0]);
        let gains = Gains::Second { gamma1: 0.3, gamma2: 0.75 };
        let (enc, _) =
            run_encrypted_simulation_with(&topology, &initial, &gains, 15, 2, &test_options())
                .unwrap();
        for k in 0..=15 {
            assert_eq!(enc.state(k)[0], 30.0 + 2.0 * k as f64);
            assert_eq!(enc.state(k)[5], 2.0);
        }
    }

    #[test]
    fn paired_directed_inputs_are_not_antisymmetric() {
        // Edges 1→2 and 2→1 carry independent weights, so u_12 ≠ −u_21;
        // the undirected sole-neighbor disclosure argument has no analog
        // here.
        let topology = build_topology(&TopologySpec {
            agents: 3,
            leader: 0,
            edges: vec![
                Edge { from: 0, to: 1, weight: 1.0 },
                Edge { from: 1, to: 2, weight: 1.0 },
                Edge { from: 2, to: 1, weight: 1.0 },
            ],
            delta: 0.5,
        })
        .unwrap();
        let initial = State::first(vec![0.0, 7.0, -3.0]);
        let gains = Gains::First { epsilon: 0.2 };
        let (_, transcript) =
            run_encrypted_simulation_with(&topology, &initial, &gains, 1, 13, &test_options())
                .unwrap();
        let u_12 = transcript.log(1).unwrap().inputs()[0][&2];
        let u_21 = transcript.log(2).unwrap().inputs()[0][&1];
        assert!((u_12 + u_21).abs() > 1e-3, "u_12 {u_12} u_21 {u_21}");
    }

    #[test]
    fn constant_mode_realizes_base_weights() {
        let topology = canonical_four_agent();
        let initial = State::first(vec![1.0, 2.0, 3.0, 4.0]);
        let gains = Gains::First { epsilon: 0.3 };
        let options = EncryptionOptions { constant_weights: true, ..test_options() };
        let (enc, _) =
            run_encrypted_simulation_with(&topology, &initial, &gains, 5, 17, &options).unwrap();
        assert_eq!(enc.schedule(), &constant_schedule(&topology, 5));
    }

    #[test]
    fn runs_are_deterministic_in_the_seed() {
        let topology = two_agent_chain();
        let initial = State::first(vec![4.0, -6.0]);
        let gains = Gains::First { epsilon: 0.25 };
        let (ta, a) =
            run_encrypted_simulation_with(&topology, &initial, &gains, 6, 99, &test_options())
                .unwrap();
        let (tb, b) =
            run_encrypted_simulation_with(&topology, &initial, &gains, 6, 99, &test_options())
                .unwrap();
        assert_eq!(ta.states(), tb.states());
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }
}
