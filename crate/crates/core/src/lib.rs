//! Simulation laboratory for the dual graph radio network model: a seeded
//! synchronous round engine with adversarial unreliable links, structure
//! verifiers, guessing-game referees, and the simulation-driven network
//! constructions used to probe MIS/CDS hardness at desk scale.

pub mod adversary;
pub mod algorithms;
pub mod engine;
pub mod games;
pub mod graph;
pub mod harness;
pub mod linial;
pub mod reductions;
pub mod seed;
pub mod structures;

pub use adversary::{Adversary, AdversaryConfig, ThresholdStrategy};
pub use algorithms::{AlgorithmConfig, DecayCds, DecayMis, DecayParams};
pub use engine::{
    resolve_round, run_execution, Algorithm, EdgeChoice, ExecutionResult, NodeProcess,
    OutFunction, Reception, ReceivedMessage, RoundTranscript,
};
pub use graph::{DualGraph, KnowledgeMode, NodeId, Payload};
// pub use harness::{run_experiment, ExperimentConfig};
pub use seed::derive_seed;
pub use structures::{verify_cds, verify_mis, StructureReport};
