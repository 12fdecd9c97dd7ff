//! Threat-model harness: what the protocol's two adversaries can and cannot
//! learn from a run.
//!
//! A passive eavesdropper sees every wire message but holds no private key;
//! its view is ciphertexts only. A malicious (honest-but-curious) neighbor
//! follows the protocol and records everything it legitimately observes: its
//! own states, each decrypted input `u_AB[k]`, and the public model (gains,
//! dynamics, structural weight interval). The privacy claim is
//! non-identifiability: over `k_c + 1` collected equations the neighbor
//! always holds strictly more unknowns, and this module builds explicit
//! distinct hypotheses that all reproduce the observations.
//!
//! The failure mode is also here: with constant weights the edge weight
//! equals the public base weight, and a ratio condition on the attacker's
//! own data confirms constancy, after which every victim state falls out
//! exactly. Randomized weights break the detector on the same data.

use std::collections::{BTreeMap, HashSet};

use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::paillier::{keygen, raw_decrypt, FixedPointCodec, PaillierPublicKey};
use crate::protocol::{Phase, Transcript, WireMessage};
use crate::spectral::{Gains, Order};
use crate::topology::Topology;

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("agent {victim} is not an in-neighbor of agent {attacker}")]
    NotNeighbors { attacker: usize, victim: usize },
    #[error("the run covers {have} rounds but the view needs {need}")]
    HorizonTooShort { have: usize, need: usize },
    #[error("the structural interval admits no second weight hypothesis")]
    InfeasibleWitness,
}

#[derive(Clone, Debug)]
struct MaliciousView {
    attacker: usize,
    victim: usize,
    order: Order,
    gains: Gains,
    /// Attacker's own states per step, `[x]` or `[p, v]`; length `k_c + 2`
    /// is not needed; equations use steps `0..=k_c`.
    own_states: Vec<Vec<f64>>,
    /// Decrypted `u_AB[k]` for `k = 0..=k_c`.
    inputs: Vec<f64>,
    /// Public structural data for the exploited edge.
    weight_interval: (f64, f64),
    base_weight: f64,
}

/// Everything one adversary observes; constructed only through the builders
/// so it cannot hold more than the threat model grants.
#[derive(Clone, Debug)]
pub struct AdversaryView {
    kind: ViewKind,
}

#[derive(Clone, Debug)]
enum ViewKind {
    Malicious(MaliciousView),
    Eavesdropper { messages: Vec<WireMessage> },
}

/// Restricts a transcript to what a curious neighbor (the receiving side of
/// one edge) saw over steps `0..=k_c`.
pub fn build_malicious_view(
    transcript: &Transcript,
    topology: &Topology,
    attacker: usize,
    victim: usize,
    k_c: usize,
) -> Result<AdversaryView, AdversaryError> {
    let edge = topology
        .in_edges(attacker)
        .iter()
        .map(|&e| topology.edges()[e])
        .find(|e| e.from == victim && attacker != victim)
        .ok_or(AdversaryError::NotNeighbors { attacker, victim })?;
    let log = transcript
        .log(attacker)
        .ok_or(AdversaryError::NotNeighbors { attacker, victim })?;
    if log.inputs().len() < k_c + 1 {
        return Err(AdversaryError::HorizonTooShort { have: log.inputs().len(), need: k_c + 1 });
    }
    let inputs = log.inputs()[..=k_c]
        .iter()
        .map(|round| round[&victim])
        .collect::<Vec<f64>>();
    let own_states = log.states()[..=k_c].to_vec();
    let order =
        if own_states[0].len() == 1 { Order::First } else { Order::Second };
    let gains = transcript.gains().expect("a recorded run carries its public gains");
    let lo = edge.weight - topology.delta();
    let hi = edge.weight + topology.delta();
    Ok(AdversaryView {
        kind: ViewKind::Malicious(MaliciousView {
            attacker,
            victim,
            order,
            gains,
            own_states,
            inputs,
            weight_interval: (lo, hi),
            base_weight: edge.weight,
        }),
    })
}

/// Restricts a transcript to the wire: ciphertext messages only.
pub fn build_eavesdropper_view(transcript: &Transcript) -> AdversaryView {
    AdversaryView { kind: ViewKind::Eavesdropper { messages: transcript.messages().to_vec() } }
}

impl AdversaryView {
    pub fn is_malicious(&self) -> bool {
        matches!(self.kind, ViewKind::Malicious(_))
    }

    /// The attacking agent of a malicious view; `None` for an eavesdropper.
    pub fn attacker(&self) -> Option<usize> {
        match &self.kind {
            ViewKind::Malicious(m) => Some(m.attacker),
            ViewKind::Eavesdropper { .. } => None,
        }
    }

    /// The observed neighbor of a malicious view; `None` for an eavesdropper.
    pub fn victim(&self) -> Option<usize> {
        match &self.kind {
            ViewKind::Malicious(m) => Some(m.victim),
            ViewKind::Eavesdropper { .. } => None,
        }
    }

    fn malicious(&self) -> &MaliciousView {
        match &self.kind {
            ViewKind::Malicious(m) => m,
            ViewKind::Eavesdropper { .. } => {
                panic!("this analysis applies to a malicious-neighbor view")
            }
        }
    }

    /// Number of plaintext equations the adversary holds; zero for an
    /// eavesdropper, who cannot decrypt anything.
    pub fn plaintext_equations(&self) -> usize {
        match &self.kind {
            ViewKind::Malicious(m) => m.inputs.len(),
            ViewKind::Eavesdropper { .. } => 0,
        }
    }

    /// The collected equation system of a malicious view.
    pub fn equation_system(&self) -> EquationSystem {
        let m = self.malicious();
        EquationSystem {
            order: m.order,
            gains: m.gains,
            own_states: m.own_states.clone(),
            inputs: m.inputs.clone(),
        }
    }
}

/// The equations `u_AB[k] = a_AB[k]·(x_B[k] − x_A[k])` (first order) or
/// `u_AB[k] = γ₁a_AB[k](p_B−p_A) + γ₂a_AB[k](v_B−v_A)` collected over
/// `k = 0..=k_c`, with the attacker-side quantities filled in.
#[derive(Clone, Debug)]
pub struct EquationSystem {
    order: Order,
    gains: Gains,
    own_states: Vec<Vec<f64>>,
    inputs: Vec<f64>,
}

impl EquationSystem {
    pub fn order(&self) -> Order {
        self.order
    }

    pub fn equations(&self) -> usize {
        self.inputs.len()
    }

    /// Unknowns registered per step: `{a_AB[k], x_B[k]}` first order,
    /// `{a_AB[k], p_B[k], v_B[k]}` second order.
    pub fn unknowns(&self) -> usize {
        let per_step = match self.order {
            Order::First => 2,
            Order::Second => 3,
        };
        per_step * self.inputs.len()
    }

    /// Worst equation residual of a hypothesis, the verification metric for
    /// constructed witnesses.
    pub fn max_residual(&self, hypothesis: &Hypothesis) -> f64 {
        assert_eq!(hypothesis.weights.len(), self.equations());
        assert_eq!(hypothesis.victim_states.len(), self.equations());
        let mut worst = 0.0f64;
        for k in 0..self.equations() {
            let a = hypothesis.weights[k];
            let predicted = match (self.order, self.gains) {
                (Order::First, _) => a * (hypothesis.victim_states[k][0] - self.own_states[k][0]),
                (Order::Second, Gains::Second { gamma1, gamma2 }) => {
                    gamma1 * a * (hypothesis.victim_states[k][0] - self.own_states[k][0])
                        + gamma2 * a * (hypothesis.victim_states[k][1] - self.own_states[k][1])
                }
                (Order::Second, Gains::First { .. }) => {
                    unreachable!("gains order matches the view order")
                }
            };
            worst = worst.max((self.inputs[k] - predicted).abs());
        }
        worst
    }
}

/// One complete assignment of the unknowns: a weight and a victim state
/// (`[x]` or `[p, v]`) per collected step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hypothesis {
    pub weights: Vec<f64>,
    pub victim_states: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct UnderdeterminationReport {
    pub equations: usize,
    pub unknowns: usize,
    pub deficiency: usize,
}

/// Counts the adversary's equations against its unknowns. The deficiency is
/// `k_c + 1` for first order and `2(k_c + 1)` for second order, always
/// positive, so no unique solution exists.
pub fn underdetermination_report(view: &AdversaryView) -> UnderdeterminationReport {
    let sys = view.equation_system();
    UnderdeterminationReport {
        equations: sys.equations(),
        unknowns: sys.unknowns(),
        deficiency: sys.unknowns() - sys.equations(),
    }
}

/// The same count aggregated over every victim the attacker reads from; the
/// per-pair structure carries over verbatim, so the deficiency stays
/// proportional. No stronger multi-victim claim is made.
pub fn multi_victim_report(
    transcript: &Transcript,
    topology: &Topology,
    attacker: usize,
    k_c: usize,
) -> Result<UnderdeterminationReport, AdversaryError> {
    let victims: Vec<usize> =
        topology.in_edges(attacker).iter().map(|&e| topology.edges()[e].from).collect();
    let mut equations = 0;
    let mut unknowns = 0;
    for victim in victims {
        let view = build_malicious_view(transcript, topology, attacker, victim, k_c)?;
        let report = underdetermination_report(&view);
        equations += report.equations;
        unknowns += report.unknowns;
    }
    Ok(UnderdeterminationReport { equations, unknowns, deficiency: unknowns - equations })
}

/// Builds at least `count` distinct hypotheses that each satisfy every
/// collected equation to 1e−9 with weights inside the public structural
/// interval: the constructive witness of non-identifiability.
///
/// Construction: constant weight candidates `c·a_base` with `c` bisected
/// from 1 toward the interval's upper end; each choice determines victim
/// states that reproduce the observed inputs exactly. A degenerate interval
/// (δ = 0) admits only `c = 1` and the construction reports infeasibility.
pub fn enumerate_consistent_hypotheses(
    view: &AdversaryView,
    count: usize,
) -> Result<Vec<Hypothesis>, AdversaryError> {
    let m = view.malicious();
    let sys = view.equation_system();
    let (_, hi) = m.weight_interval;
    let c_max = hi / m.base_weight;
    let mut scales = vec![1.0f64];
    let mut offset = c_max - 1.0;
    while scales.len() < count && offset > 16.0 * f64::EPSILON {
        scales.push(1.0 + offset);
        offset /= 2.0;
    }
    if scales.len() < count {
        return Err(AdversaryError::InfeasibleWitness);
    }
    let mut hypotheses = Vec::with_capacity(count);
    for c in scales {
        let a = c * m.base_weight;
        let weights = vec![a; sys.equations()];
        let victim_states = (0..sys.equations())
            .map(|k| match (m.order, m.gains) {
                (Order::First, _) => vec![m.own_states[k][0] + m.inputs[k] / a],
                (Order::Second, Gains::Second { gamma1, gamma2 }) => {
                    // Split the input evenly between the two channels.
                    let half = m.inputs[k] / 2.0;
                    vec![
                        m.own_states[k][0] + half / (gamma1 * a),
                        m.own_states[k][1] + half / (gamma2 * a),
                    ]
                }
                (Order::Second, Gains::First { .. }) => {
                    unreachable!("gains order matches the view order")
                }
            })
            .collect();
        let hypothesis = Hypothesis { weights, victim_states };
        assert!(
            sys.max_residual(&hypothesis) <= 1e-9,
            "constructed hypothesis must reproduce the observations"
        );
        hypotheses.push(hypothesis);
    }
    Ok(hypotheses)
}

/// What the constant-weight attack concluded.
#[derive(Clone, Debug, Serialize)]
pub enum AttackOutcome {
    /// The ratio condition held at `ratio_step`; the victim's states follow
    /// from the public base weight.
    Recovered { beta: f64, ratio_step: usize, victim_states: Vec<f64> },
    NotApplicable { reason: String },
}

const RATIO_TOL: f64 = 1e-9;

/// The constant-weight failure mode on a first-order view: scan for a step
/// `T` with `u_AB[T]/u_AB[0] = x_A[T]/x_A[0] = β`. Such a step certifies the
/// weight never moved, the constant weight is the public base weight, and
/// `x̂_B[k] = x_A[k] + u_AB[k]/a_base` recovers every collected victim state
/// (in particular `x_B[T] = β·x_B[0]`). Randomized weights break the ratio
/// equality and the attack reports NotApplicable.
pub fn constant_weight_attack(view: &AdversaryView) -> AttackOutcome {
    let m = view.malicious();
    if m.order != Order::First {
        return AttackOutcome::NotApplicable {
            reason: "the ratio detector is defined for first-order runs".into(),
        };
    }
    let u0 = m.inputs[0];
    let x0 = m.own_states[0][0];
    if u0.abs() < 1e-12 || x0.abs() < 1e-12 {
        return AttackOutcome::NotApplicable {
            reason: "degenerate initial data: the ratio condition divides by zero".into(),
        };
    }
    let ratio_step = (1..m.inputs.len()).find(|&t| {
        let beta_u = m.inputs[t] / u0;
        let beta_x = m.own_states[t][0] / x0;
        (beta_u - beta_x).abs() <= RATIO_TOL
    });
    match ratio_step {
        None => AttackOutcome::NotApplicable {
            reason: "no step satisfies the ratio condition: weights look time-varying".into(),
        },
        Some(t) => {
            let victim_states = (0..m.inputs.len())
                .map(|k| m.own_states[k][0] + m.inputs[k] / m.base_weight)
                .collect();
            AttackOutcome::Recovered {
                beta: m.own_states[t][0] / x0,
                ratio_step: t,
                victim_states,
            }
        }
    }
}

/// Statistics over a ciphertext-only view.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EavesdropperReport {
    pub message_count: usize,
    pub ciphertext_count: usize,
    /// Exact wire-level collisions; randomized encryption keeps this at 0.
    pub duplicate_ciphertexts: usize,
    /// Plaintext equations available without a private key.
    pub plaintext_equations: usize,
    /// Ciphertext values normalized to `[0, 1)` over their key's `Z_{n²}`;
    /// indistinguishable-from-random residues sit near mean 0.5.
    pub mean_residue: f64,
    pub min_residue: f64,
    pub max_residue: f64,
    /// Pearson correlation between wrong-key decryptions and the true
    /// states, when a reference trajectory is supplied; ≈ 0 expected.
    pub wrong_key_correlation: Option<f64>,
}

fn residue_ratio(value: &num_bigint::BigUint, modulus: &num_bigint::BigUint) -> f64 {
    let shift = modulus.bits().saturating_sub(53);
    let num = (value >> shift).to_f64().unwrap_or(0.0);
    let den = (modulus >> shift).to_f64().unwrap_or(f64::INFINITY);
    num / den
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let (va, vb): (f64, f64) = (
        a.iter().map(|x| (x - ma).powi(2)).sum(),
        b.iter().map(|y| (y - mb).powi(2)).sum(),
    );
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va.sqrt() * vb.sqrt())
    }
}

/// What an eavesdropper can actually compute: residue statistics, collision
/// counts, and a wrong-key decryption attempt correlated against the true
/// trajectory when one is supplied for the study. Public keys are public by
/// the protocol's own preparation step. An empty transcript yields the empty
/// report.
pub fn eavesdropper_analysis(
    view: &AdversaryView,
    public_keys: &BTreeMap<usize, PaillierPublicKey>,
    truth: Option<&Trajectory>,
) -> EavesdropperReport {
    let messages = match &view.kind {
        ViewKind::Eavesdropper { messages } => messages,
        ViewKind::Malicious(_) => panic!("this analysis applies to an eavesdropper view"),
    };
    let mut report = EavesdropperReport {
        message_count: messages.len(),
        plaintext_equations: view.plaintext_equations(),
        min_residue: f64::INFINITY,
        ..EavesdropperReport::default()
    };
    if messages.is_empty() {
        report.min_residue = 0.0;
        return report;
    }
    let mut seen = HashSet::new();
    let mut residue_sum = 0.0;
    for msg in messages {
        // Ciphertexts ride under the decryptor's key: the Step-1 sender
        // encrypts to itself, the Step-2 reply returns to that same key.
        let owner = match msg.phase {
            Phase::Step1 => msg.from,
            Phase::Step2 => msg.to,
        };
        let key = &public_keys[&owner];
        for c in &msg.payload {
            report.ciphertext_count += 1;
            if !seen.insert(c.to_hex()) {
                report.duplicate_ciphertexts += 1;
            }
            let r = residue_ratio(c.value(), key.n_squared());
            residue_sum += r;
            report.min_residue = report.min_residue.min(r);
            report.max_residue = report.max_residue.max(r);
        }
    }
    report.mean_residue = residue_sum / report.ciphertext_count as f64;

    if let Some(truth) = truth {
        // The eavesdropper invents a key of plausible size and forces it
        // onto one observed reply per round.
        let bits = public_keys.values().map(|k| k.n().bits()).max().unwrap_or(32) / 2;
        let (wrong_pub, wrong_prv) =
            keygen(bits.max(16), 0xEAE5).expect("wrong-key generation succeeds");
        let codec = FixedPointCodec::new(32, &wrong_pub);
        let mut guesses = Vec::new();
        let mut actual = Vec::new();
        for k in 0..truth.horizon() {
            let reply = messages.iter().find(|m| m.step == k && m.phase == Phase::Step2);
            if let Some(msg) = reply {
                let m = raw_decrypt(&wrong_prv, &wrong_pub, msg.payload[0].value());
                guesses.push(codec.decode(&m, 2));
                actual.push(truth.state(k)[msg.to]);
            }
        }
        if guesses.len() >= 3 {
            report.wrong_key_correlation = Some(pearson(&guesses, &actual));
        }
    }
    report
}
