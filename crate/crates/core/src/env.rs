//! Per-slot cooperation game: agents are CAV pairs choosing SP (0) or CP (1).

use serde::{Deserialize, Serialize};

use crate::allocator::{allocate, PairInput, SolveOptions};
use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::scenario::{EpisodeTrace, SlotState};

/// Per-agent observation length fed to the networks.
pub const OBS_DIM: usize = 6;
const WORKLOAD_SCALE: f64 = 8.0;
const DISTANCE_SCALE_M: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvParams {
    /// Weight ω̃ of the switching cost.
    pub omega_tilde: f64,
    /// Training reward P of an infeasible joint action.
    pub penalty: f64,
    /// Replace infeasible joint actions by all-SP when applying them.
    pub refinement_enabled: bool,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            omega_tilde: 0.4,
            penalty: -10.0,
            refinement_enabled: true,
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_tilde >= 0.0) || !self.penalty.is_finite() {
            return Err(Error::ConfigInvalid(format!("env params {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentObservation {
    pub available_hz: f64,
    pub workload: f64,
    pub distance_m: f64,
    pub x_prev: u8,
    pub avg_workload: f64,
    pub avg_distance_m: f64,
}

impl AgentObservation {
    /// Scaled features for the learner: B/B_total, W/8, D/100, x_prev and the averages likewise.
    pub fn features(&self, total_hz: f64) -> [f64; OBS_DIM] {
        [
            self.available_hz / total_hz,
            self.workload / WORKLOAD_SCALE,
            self.distance_m / DISTANCE_SCALE_M,
            f64::from(self.x_prev),
            self.avg_workload / WORKLOAD_SCALE,
            self.avg_distance_m / DISTANCE_SCALE_M,
        ]
    }
}

pub fn observe(slot: &SlotState, x_prev: &[u8]) -> Vec<AgentObservation> {
    let k = slot.pairs.len();
    let n = k.max(1) as f64;
    let avg_w = slot.pairs.iter().map(|p| f64::from(p.workload)).sum::<f64>() / n;
    let avg_d = slot.pairs.iter().map(|p| p.distance_m).sum::<f64>() / n;
    slot.pairs
        .iter()
        .zip(x_prev)
        .map(|(p, &x)| AgentObservation {
            available_hz: slot.available_hz,
            workload: f64::from(p.workload),
            distance_m: p.distance_m,
            x_prev: x,
            avg_workload: avg_w,
            avg_distance_m: avg_d,
        })
        .collect()
}

pub fn switching_cost(x_prev: &[u8], x: &[u8]) -> Result<u32> {
    if x_prev.len() != x.len() {
        return Err(Error::LengthMismatch { expected: x_prev.len(), got: x.len() });
    }
    Ok(x_prev.iter().zip(x).map(|(&a, &b)| u32::from(a != b)).sum())
}

/// Optimal gain of one cooperative set in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetValue {
    pub feasible: bool,
    pub gain: f64,
    pub iterations: usize,
}

/// Solve the allocation for the pairs with `x_k = 1`. The empty set is feasible with zero gain.
pub fn set_value(slot: &SlotState, x: &[u8], model: &SystemModel, opts: &SolveOptions) -> Result<SetValue> {
    if x.len() != slot.pairs.len() {
        return Err(Error::LengthMismatch { expected: slot.pairs.len(), got: x.len() });
    }
    let pairs: Vec<PairInput> = slot
        .pairs
        .iter()
        .zip(x)
        .filter(|(_, &b)| b == 1)
        .map(|(p, _)| PairInput { workload: f64::from(p.workload), distance_m: p.distance_m })
        .collect();
    if pairs.is_empty() {
        return Ok(SetValue { feasible: true, gain: 0.0, iterations: 0 });
    }
    match allocate(&pairs, slot.available_hz, model, opts) {
        Ok(r) => Ok(SetValue {
            feasible: r.is_feasible(),
            gain: r.gain_total,
            iterations: r.iterations,
        }),
        Err(Error::ZeroBandwidth(_)) => Ok(SetValue { feasible: false, gain: 0.0, iterations: 0 }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub reward_train: f64,
    pub reward_exec: f64,
    pub feasible: bool,
    /// Optimal total gain of the requested set, zero when infeasible.
    pub g_star: f64,
    /// Switching count of the applied action.
    pub switching: u32,
    pub x_applied: Vec<u8>,
    /// Empty once the episode is done.
    pub next_obs: Vec<AgentObservation>,
    pub done: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct CoopEnv {
    model: SystemModel,
    params: EnvParams,
    opts: SolveOptions,
    trace: EpisodeTrace,
    slot: usize,
    x_prev: Vec<u8>,
}

impl CoopEnv {
    pub fn new(model: SystemModel, params: EnvParams) -> Self {
        Self {
            model,
            params,
            opts: SolveOptions::default(),
            trace: EpisodeTrace { slots: Vec::new() },
            slot: 0,
            x_prev: Vec::new(),
        }
    }

    pub fn with_solve_options(mut self, opts: SolveOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn solve_options(&self) -> &SolveOptions {
        &self.opts
    }

    pub fn reset(&mut self, trace: EpisodeTrace) -> Result<Vec<AgentObservation>> {
        if trace.is_empty() {
            return Err(Error::EmptyTrace);
        }
        self.x_prev = vec![0; trace.pair_count()];
        self.trace = trace;
        self.slot = 0;
        Ok(self.observations())
    }

    pub fn observations(&self) -> Vec<AgentObservation> {
        observe(&self.trace.slots[self.slot], &self.x_prev)
    }

    pub fn agents(&self) -> usize {
        self.x_prev.len()
    }

    pub fn slot_index(&self) -> usize {
        self.slot
    }

    pub fn is_done(&self) -> bool {
        self.slot >= self.trace.len()
    }

    /// Current slot, if the episode is still running.
    pub fn current_slot(&self) -> Option<&SlotState> {
        self.trace.slots.get(self.slot)
    }

    pub fn x_prev(&self) -> &[u8] {
        &self.x_prev
    }

    pub fn step(&mut self, x: &[u8]) -> Result<StepOutcome> {
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        let slot = &self.trace.slots[self.slot];
        let c_requested = switching_cost(&self.x_prev, x)?;
        let value = set_value(slot, x, &self.model, &self.opts)?;
        let w = self.params.omega_tilde;
        let (reward_train, reward_exec, x_applied, switching, g_star) = if value.feasible {
            let r = value.gain - w * f64::from(c_requested);
            (r, r, x.to_vec(), c_requested, value.gain)
        } else if self.params.refinement_enabled {
            let all_sp = vec![0; x.len()];
            let c = switching_cost(&self.x_prev, &all_sp)?;
            (self.params.penalty, -w * f64::from(c), all_sp, c, 0.0)
        } else {
            (self.params.penalty, self.params.penalty, x.to_vec(), c_requested, 0.0)
        };
        self.x_prev.clone_from(&x_applied);
        self.slot += 1;
        let done = self.is_done();
        Ok(StepOutcome {
            reward_train,
            reward_exec,
            feasible: value.feasible,
            g_star,
            switching,
            x_applied,
            next_obs: if done { Vec::new() } else { self.observations() },
            done,
            iterations: value.iterations,
        })
    }
}

/// One executed slot, as written to the per-slot CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub available_hz: f64,
    /// Requested action.
    pub action: Vec<u8>,
    pub feasible: bool,
    pub g_star: f64,
    pub switching: u32,
    pub reward_train: f64,
    pub reward_exec: f64,
    pub iterations: usize,
}

/// Slot averages of one episode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub gain: f64,
    pub cost: f64,
    pub reward_exec: f64,
    pub reward_train: f64,
    pub penalty_rate: f64,
    pub iterations: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub slots: Vec<SlotRecord>,
}

impl EpisodeRecord {
    pub fn stats(&self) -> EpisodeStats {
        let n = self.slots.len();
        if n == 0 {
            return EpisodeStats::default();
        }
        let mean = |f: &dyn Fn(&SlotRecord) -> f64| self.slots.iter().map(f).sum::<f64>() / n as f64;
        EpisodeStats {
            gain: mean(&|s| s.g_star),
            cost: mean(&|s| f64::from(s.switching)),
            reward_exec: mean(&|s| s.reward_exec),
            reward_train: mean(&|s| s.reward_train),
            penalty_rate: mean(&|s| if s.feasible { 0.0 } else { 1.0 }),
            iterations: mean(&|s| s.iterations as f64),
        }
    }
}

/// Run `trace` to completion, asking `policy` for each slot's bits.
pub fn run_episode<P>(env: &mut CoopEnv, trace: EpisodeTrace, mut policy: P) -> Result<EpisodeRecord>
where
    P: FnMut(&CoopEnv, &[AgentObservation]) -> Result<Vec<u8>>,
{
    let mut obs = env.reset(trace)?;
    let mut slots = Vec::new();
    loop {
        let slot = env.slot_index();
        let available_hz = env.current_slot().map_or(0.0, |s| s.available_hz);
        let action = policy(env, &obs)?;
        let out = env.step(&action)?;
        slots.push(SlotRecord {
            slot,
            available_hz,
            action,
            feasible: out.feasible,
            g_star: out.g_star,
            switching: out.switching,
            reward_train: out.reward_train,
            reward_exec: out.reward_exec,
            iterations: out.iterations,
        });
        if out.done {
            break;
        }
        obs = out.next_obs;
    }
    Ok(EpisodeRecord { slots })
}
