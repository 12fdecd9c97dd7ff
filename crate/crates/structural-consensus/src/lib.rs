//! Structural consensus for directed leader-following multi-agent systems.
//!
//! A network of agents, one of them a leader with no in-edges, repeatedly
//! averages neighbor states under coupling weights that are re-randomized at
//! every step inside a fixed interval `[a_ij[0] - delta, a_ij[0] + delta]`.
//! *Structural* consensus means the followers converge to the leader for
//! **every** admissible weight realization, not just a particular one. The
//! randomization is not an artifact of a noisy channel: it is a privacy
//! mechanism, and this crate implements both sides of that story.
//!
//! What lives here:
//!
//! * [`topology`]: directed weighted graphs with a designated leader,
//!   spanning-tree validation, Laplacians, and admissible weight schedules.
//! * [`linalg`]: a small dense matrix type and a Hessenberg + shifted-QR
//!   eigensolver for nonsymmetric real matrices (the spectra here are small
//!   and dense; no external solver is pulled in).
//! * [`spectral`]: certified gain selection. The first-order bound on
//!   `epsilon`, Monte-Carlo spectral boxes, the `(varrho, kappa, rho)`
//!   construction of second-order gains `(gamma1, gamma2)`, the closed
//!   boundary curve containing the admissible Laplacian spectrum, and
//!   spectral-radius checks of the closed-loop iteration matrix.
//! * [`dynamics`]: plaintext reference simulation of the first- and
//!   second-order closed loops and the consensus verdict against the
//!   closed-form target.
//! * [`paillier`]: the Paillier cryptosystem (additively homomorphic) plus a
//!   fixed-point codec mapping signed reals into the plaintext ring.
//! * [`protocol`]: the encrypted pairwise exchange. Each receiver learns only
//!   the already-weighted state difference, never the neighbor's state or the
//!   weight; produces full wire transcripts.
//! * [`adversary`]: the attacker's side. An honest-but-curious neighbor counting
//!   equations against unknowns, constructive non-identifiability witnesses,
//!   the constant-weight ratio attack that motivates randomized weights, and
//!   an eavesdropper report.
//! * [`cli`]: configuration loading and the command implementations behind
//!   the thin `structural-consensus` binary (`simulate`, `certify`, `attack`,
//!   `bench`, `boundary`).
//!
//! # Examples
//!
//! The `examples/` directory is the front door; each file is a runnable tour
//! of one capability:
//!
//! ```text
//! examples/
//! ├── first_order.rs         First-order plaintext consensus run + verdict
//! ├── second_order.rs        Second-order run tracking the ramp target
//! ├── certify_gains.rs       epsilon bound + automatic (gamma1, gamma2) selection
//! ├── boundary_curve.rs      Closed spectral boundary + sampled eigenvalues
//! ├── paillier_roundtrip.rs  Keygen, homomorphic ops, fixed-point codec
//! ├── encrypted_run.rs       Encrypted vs plaintext trajectory comparison
//! └── privacy_attacks.rs     Underdetermination, witnesses, constant-weight attack
//! ```
//!
//! Run one with:
//!
//! ```text
//! cargo run --example first_order
//! cargo run --example encrypted_run
//! ```
//!
//! The same functionality is scriptable through the binary:
//!
//! ```text
//! cargo run -- simulate --config configs/first_order.json --mode both --out out/
//! cargo run -- certify  --config configs/second_order.json
//! ```
//!
//! Set `CONSENSUS_LOG=debug` for verbose logging from the binary.

pub mod adversary;
pub mod cli;
pub mod dynamics;
pub mod linalg;
pub mod paillier;
pub mod protocol;
pub mod spectral;
pub mod topology;

pub use adversary::{
    build_eavesdropper_view, build_malicious_view, constant_weight_attack,
    eavesdropper_analysis, enumerate_consistent_hypotheses, underdetermination_report,
    AdversaryView, AttackOutcome,
};
pub use dynamics::{simulate, structural_consensus_check, State, Trajectory};
pub use paillier::{keygen, FixedPointCodec, PaillierPrivateKey, PaillierPublicKey};
pub use protocol::{
    run_encrypted_simulation, run_encrypted_simulation_with, EncryptionOptions, Network,
    Transcript,
};
pub use spectral::{epsilon_bound, select_gamma, Gains, SecondOrderGains};
pub use topology::{build_topology, Topology, TopologySpec};
