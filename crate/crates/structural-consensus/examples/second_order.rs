//! Second-order run: followers track the leader's linearly growing
//! position at its constant velocity.

use structural_consensus::dynamics::{
    consensus_target, simulate, structural_consensus_check, ConsensusTarget, State,
};
use structural_consensus::spectral::Gains;
use structural_consensus::topology::five_agent_tree;

fn main() {
    let topology = five_agent_tree();
    let gains = Gains::Second { gamma1: 0.3, gamma2: 0.75 };
    let initial = State::second(
        vec![30.0, 40.0, 50.0, -20.0, 10.0],
        vec![2.0, 0.0, -1.0, 1.0, 0.0],
    );
    let trajectory = simulate(&topology, &initial, &gains, 1000, 7);

    // The target is a ramp: position p_L[0] + k * v_L[0], velocity v_L[0].
    let n = topology.n_agents();
    for k in [0, 100, 400, 1000] {
        let ConsensusTarget::Second { position, velocity } =
            consensus_target(&topology, &initial, k)
        else {
            unreachable!("second-order initial state");
        };
        let s = trajectory.state(k);
        println!(
            "k={k:4}  target ({position}, {velocity})  follower 4 at ({}, {})",
            s[4],
            s[n + 4]
        );
    }

    let report = structural_consensus_check(&trajectory, 1e-6);
    println!(
        "converged: {} (final deviation {:e}, settled at step {:?})",
        report.converged, report.final_deviation, report.settled_step
    );
}
