//! What each adversary can and cannot learn from an encrypted run: the
//! honest-but-curious neighbor's underdetermined equation system, two
//! constructed state hypotheses it cannot tell apart, the constant-weight
//! ratio attack that randomized weights defeat, and the eavesdropper's view.

use std::collections::BTreeMap;

use structural_consensus::adversary::{
    build_eavesdropper_view, build_malicious_view, constant_weight_attack,
    eavesdropper_analysis, enumerate_consistent_hypotheses, underdetermination_report,
    AttackOutcome,
};
use structural_consensus::dynamics::State;
use structural_consensus::protocol::{run_encrypted_simulation_with, EncryptionOptions, Network};
use structural_consensus::spectral::Gains;
use structural_consensus::topology::{build_topology, Edge, TopologySpec};

fn main() {
    // Two agents, one edge: the follower (agent 1) attacks the leader it
    // reads from. The leader sits at zero, the worst case for the ratio
    // attack's victim.
    let topology = build_topology(&TopologySpec {
        agents: 2,
        leader: 0,
        delta: 0.5,
        edges: vec![Edge { from: 0, to: 1, weight: 1.5 }],
    })
    .expect("valid topology");
    let initial = State::first(vec![0.0, 40.0]);
    let gains = Gains::First { epsilon: 0.3 };
    let (horizon, seed, k_c) = (12, 31, 10);

    for constant_weights in [true, false] {
        let regime = if constant_weights { "constant" } else { "randomized" };
        println!("--- {regime} weights ---");
        let options = EncryptionOptions { prime_bits: 64, frac_bits: 32, constant_weights };
        let (trajectory, transcript) =
            run_encrypted_simulation_with(&topology, &initial, &gains, horizon, seed, &options)
                .expect("encrypted run succeeds");

        let view =
            build_malicious_view(&transcript, &topology, 1, 0, k_c).expect("neighbors");
        let counts = underdetermination_report(&view);
        println!(
            "attacker holds {} equations against {} unknowns (deficiency {})",
            counts.equations, counts.unknowns, counts.deficiency
        );

        // Two different weight/state stories reproduce every observation.
        let hypotheses = enumerate_consistent_hypotheses(&view, 2).expect("delta > 0");
        for (i, h) in hypotheses.iter().enumerate() {
            println!(
                "hypothesis {i}: weight {:.4}, victim x[0] guess {:.4}",
                h.weights[0], h.victim_states[0][0]
            );
        }

        match constant_weight_attack(&view) {
            AttackOutcome::Recovered { beta, ratio_step, victim_states } => {
                println!("ratio attack succeeds (beta {beta:.4} at step {ratio_step}):");
                for (k, guess) in victim_states.iter().enumerate().take(3) {
                    println!("  k={k}: recovered {guess:.6}, actual {}", trajectory.state(k)[0]);
                }
            }
            AttackOutcome::NotApplicable { reason } => {
                println!("ratio attack defeated: {reason}");
            }
        }

        // The eavesdropper sees ciphertexts only. Key generation is
        // deterministic in the seed, so rebuilding the network recovers the
        // public keys the wire traffic rode under. The wrong-key correlation
        // is a statistical null check: near zero over long runs, noisy over
        // the 12 steps sampled here.
        let net = Network::new(&topology, &initial, &gains, seed, &options)
            .expect("network builds");
        let keys: BTreeMap<_, _> =
            (0..2).map(|i| (i, net.node(i).public_key().clone())).collect();
        let report =
            eavesdropper_analysis(&build_eavesdropper_view(&transcript), &keys, Some(&trajectory));
        println!(
            "eavesdropper: {} ciphertexts, {} duplicates, 0 plaintext equations, wrong-key correlation {:?}",
            report.ciphertext_count, report.duplicate_ciphertexts, report.wrong_key_correlation
        );
    }
}
