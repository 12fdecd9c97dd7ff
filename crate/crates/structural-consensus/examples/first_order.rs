//! First-order leader-following run over randomized weights, checked
//! against the leader's initial state.

use structural_consensus::dynamics::{simulate, structural_consensus_check, State};
use structural_consensus::spectral::{epsilon_bound, Gains};
use structural_consensus::topology::canonical_four_agent;

fn main() {
    let topology = canonical_four_agent();
    // Any epsilon strictly below the bound certifies consensus for every
    // admissible weight realization, not just the sampled one.
    let bound = epsilon_bound(&topology);
    let epsilon = 0.3;
    println!("epsilon bound {bound}, running with epsilon {epsilon}");

    let initial = State::first(vec![30.0, 40.0, 50.0, -20.0]);
    let gains = Gains::First { epsilon };
    let trajectory = simulate(&topology, &initial, &gains, 500, 42);
    for k in [0, 25, 100, 500] {
        println!("k={k:3}  x = {:?}", trajectory.state(k));
    }

    let report = structural_consensus_check(&trajectory, 1e-6);
    println!(
        "converged: {} (final deviation {:e}, settled at step {:?})",
        report.converged, report.final_deviation, report.settled_step
    );
}
