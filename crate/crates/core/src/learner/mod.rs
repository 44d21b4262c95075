//! Multi-agent actor-critic learning of per-pair cooperation bits.

mod checkpoint;
mod maddpg;
pub mod nn;
pub mod replay;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use maddpg::{ActorSet, EpisodeLog, Maddpg, TrainDiag, TrainingLog};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub gamma: f64,
    /// Soft target update rate ξ.
    pub xi: f64,
    pub lr_critic: f64,
    pub lr_actor: f64,
    pub batch: usize,
    pub buffer_capacity: usize,
    pub gumbel_temperature: f64,
    /// Per-episode multiplicative temperature decay; 1 keeps it fixed.
    pub temperature_decay: f64,
    pub temperature_floor: f64,
    pub episodes: usize,
    pub seed: u64,
    pub hidden: Vec<usize>,
    /// Environment steps between gradient updates.
    pub train_every: usize,
    /// Global gradient-norm clip, 0 disables.
    pub grad_clip: f64,
    /// Weight of the squared-logit penalty in the actor loss.
    pub logit_reg: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            xi: 0.01,
            lr_critic: 1e-2,
            lr_actor: 1e-3,
            batch: 1024,
            buffer_capacity: 100_000,
            gumbel_temperature: 1.0,
            temperature_decay: 1.0,
            temperature_floor: 0.1,
            episodes: 15_000,
            seed: 0,
            hidden: vec![64, 64],
            train_every: 1,
            grad_clip: 0.5,
            logit_reg: 1e-3,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(format!("learner: {m}")));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return bad("xi must lie in (0, 1]");
        }
        if !(self.lr_critic > 0.0 && self.lr_actor > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.batch == 0 || self.buffer_capacity < self.batch {
            return bad("batch must be positive and fit in the buffer");
        }
        if !(self.gumbel_temperature > 0.0 && self.temperature_floor > 0.0 && self.temperature_decay > 0.0) {
            return bad("temperatures must be positive");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if self.train_every == 0 {
            return bad("train_every must be at least 1");
        }
        if !(self.grad_clip >= 0.0 && self.logit_reg >= 0.0) {
            return bad("grad_clip and logit_reg must be non-negative");
        }
        Ok(())
    }
}
