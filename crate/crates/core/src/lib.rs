//! Cooperative perception for CAV pairs: per-slot mode selection and joint
//! CPU-frequency / bandwidth allocation, with the simulation and learning
//! machinery around it.

pub mod allocator;
pub mod baselines;
pub mod channel;
pub mod env;
pub mod error;
pub mod harness;
pub mod learner;
pub mod model;
pub mod perception;
pub mod scenario;
pub mod seeds;
pub mod units;

pub use error::{Error, Result};
pub use model::SystemModel;
pub use allocator::{allocate, AllocationResult, PairInput, SolveOptions, Verdict};
pub use baselines::PolicyKind;
pub use env::{AgentObservation, CoopEnv, EnvParams, StepOutcome};
pub use harness::{ExperimentConfig, MetricsSummary};
pub use learner::{ActorSet, LearnerConfig, Maddpg};
pub use scenario::{EpisodeTrace, ScenarioConfig};
