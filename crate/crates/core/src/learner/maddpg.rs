use ndarray::{concatenate, s, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::nn::{gumbel, softmax_backward, softmax_rows, Adam, Mlp};
use super::replay::{Batch, ReplayBuffer, Transition};
use super::LearnerConfig;
use crate::env::{run_episode, AgentObservation, CoopEnv, EpisodeRecord, OBS_DIM};
use crate::error::{Error, Result};
use crate::scenario::EpisodeTrace;
use crate::seeds::{self, SimRng};

/// Two action components per agent; component j stands for x = j.
pub const ACTION_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainDiag {
    pub critic_loss: f64,
    pub actor_objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    /// Slot means over the training episode.
    pub reward_train: f64,
    pub reward_exec: f64,
    pub penalty_rate: f64,
    pub gain: f64,
    pub cost: f64,
    /// Means over the episode's updates; NaN before learning starts.
    pub critic_loss: f64,
    pub actor_objective: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingLog {
    pub fn rewards(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.reward_train).collect()
    }
}

/// Trained actors: everything execution needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorSet {
    pub actors: Vec<Mlp>,
    /// Bandwidth used to scale the B feature.
    pub total_hz: f64,
    pub seed: u64,
}

fn argmax_bit(row: ndarray::ArrayView1<f64>) -> u8 {
    u8::from(row[1] > row[0])
}

impl ActorSet {
    pub fn agents(&self) -> usize {
        self.actors.len()
    }

    pub fn logits(&self, obs: &[AgentObservation]) -> Result<Array2<f64>> {
        if obs.len() != self.actors.len() {
            return Err(Error::LengthMismatch { expected: self.actors.len(), got: obs.len() });
        }
        let mut out = Array2::zeros((obs.len(), ACTION_DIM));
        for (k, (actor, o)) in self.actors.iter().zip(obs).enumerate() {
            let x = Array2::from_shape_vec((1, OBS_DIM), o.features(self.total_hz).to_vec()).expect("shape");
            out.row_mut(k).assign(&actor.forward(&x)?.row(0));
        }
        Ok(out)
    }

    /// Plain softmax per agent, one row each.
    pub fn probabilities(&self, obs: &[AgentObservation]) -> Result<Array2<f64>> {
        Ok(softmax_rows(&self.logits(obs)?, 1.0))
    }

    /// Deterministic execution: argmax of each agent's own actor.
    pub fn decide(&self, obs: &[AgentObservation]) -> Result<Vec<u8>> {
        let p = self.logits(obs)?;
        Ok(p.rows().into_iter().map(argmax_bit).collect())
    }

    pub fn execute(&self, env: &mut CoopEnv, trace: EpisodeTrace) -> Result<EpisodeRecord> {
        run_episode(env, trace, |_, obs| self.decide(obs))
    }
}

#[derive(Debug, Clone)]
struct Agent {
    actor: Mlp,
    critic: Mlp,
    target_actor: Mlp,
    target_critic: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
}

#[derive(Debug, Clone)]
pub struct Maddpg {
    config: LearnerConfig,
    total_hz: f64,
    agents: Vec<Agent>,
    buffer: ReplayBuffer,
    learn_rng: SimRng,
    explore_rng: SimRng,
    temperature: f64,
    env_steps: u64,
}

fn features(obs: &[AgentObservation], total_hz: f64) -> Vec<f64> {
    obs.iter().flat_map(|o| o.features(total_hz)).collect()
}

impl Maddpg {
    pub fn new(agents: usize, total_hz: f64, config: LearnerConfig) -> Result<Self> {
        config.validate()?;
        if agents == 0 {
            return Err(Error::ConfigInvalid("learner needs at least one agent".into()));
        }
        let mut init = seeds::rng(config.seed, "learner-init", 0);
        let state_dim = agents * OBS_DIM;
        let joint_dim = state_dim + agents * ACTION_DIM;
        let sizes = |input: usize, output: usize| {
            let mut s = vec![input];
            s.extend(&config.hidden);
            s.push(output);
            s
        };
        let agents_v = (0..agents)
            .map(|_| {
                let actor = Mlp::new(&sizes(OBS_DIM, ACTION_DIM), &mut init);
                let critic = Mlp::new(&sizes(joint_dim, 1), &mut init);
                Agent {
                    actor_opt: Adam::new(&actor, config.lr_actor),
                    critic_opt: Adam::new(&critic, config.lr_critic),
                    target_actor: actor.clone(),
                    target_critic: critic.clone(),
                    actor,
                    critic,
                }
            })
            .collect();
        Ok(Self {
            buffer: ReplayBuffer::new(config.buffer_capacity, state_dim, agents * ACTION_DIM),
            learn_rng: seeds::rng(config.seed, "learner", 0),
            explore_rng: seeds::rng(config.seed, "explore", 0),
            temperature: config.gumbel_temperature,
            env_steps: 0,
            agents: agents_v,
            total_hz,
            config,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn agents(&self) -> usize {
        self.agents.len()
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn buffer_mut(&mut self) -> &mut ReplayBuffer {
        &mut self.buffer
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn actors(&self) -> ActorSet {
        ActorSet {
            actors: self.agents.iter().map(|a| a.actor.clone()).collect(),
            total_hz: self.total_hz,
            seed: self.config.seed,
        }
    }

    pub fn actor(&self, k: usize) -> &Mlp {
        &self.agents[k].actor
    }

    pub fn critic(&self, k: usize) -> &Mlp {
        &self.agents[k].critic
    }

    pub fn target_actor(&self, k: usize) -> &Mlp {
        &self.agents[k].target_actor
    }

    pub fn target_critic(&self, k: usize) -> &Mlp {
        &self.agents[k].target_critic
    }

    /// Exploratory actions: Gumbel-perturbed softmax per agent, with the discretized bits.
    pub fn act_explore(&mut self, obs: &[AgentObservation]) -> Result<(Array2<f64>, Vec<u8>)> {
        let logits = self.actors_logits(obs)?;
        let noise = gumbel(logits.nrows(), ACTION_DIM, &mut self.explore_rng);
        let y = softmax_rows(&(logits + noise), self.temperature);
        let bits = y.rows().into_iter().map(argmax_bit).collect();
        Ok((y, bits))
    }

    fn actors_logits(&self, obs: &[AgentObservation]) -> Result<Array2<f64>> {
        if obs.len() != self.agents.len() {
            return Err(Error::LengthMismatch { expected: self.agents.len(), got: obs.len() });
        }
        let mut out = Array2::zeros((obs.len(), ACTION_DIM));
        for (k, (a, o)) in self.agents.iter().zip(obs).enumerate() {
            let x = Array2::from_shape_vec((1, OBS_DIM), o.features(self.total_hz).to_vec()).expect("shape");
            out.row_mut(k).assign(&a.actor.forward(&x)?.row(0));
        }
        Ok(out)
    }

    fn agent_obs(&self, state: &Array2<f64>, k: usize) -> Array2<f64> {
        state.slice(s![.., k * OBS_DIM..(k + 1) * OBS_DIM]).to_owned()
    }

    /// Gumbel-softmax samples of every target actor at the batch's next states.
    pub fn target_actions(&mut self, batch: &Batch) -> Result<Array2<f64>> {
        let mut parts = Vec::with_capacity(self.agents.len());
        for k in 0..self.agents.len() {
            let logits = self.agents[k].target_actor.forward(&self.agent_obs(&batch.next_state, k))?;
            let noise = gumbel(batch.len(), ACTION_DIM, &mut self.learn_rng);
            parts.push(softmax_rows(&(logits + noise), self.temperature));
        }
        let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
        Ok(concatenate(Axis(1), &views).expect("equal rows"))
    }

    /// One critic and one actor update of agent `k` on `batch`.
    pub fn train_step(&mut self, batch: &Batch, k: usize) -> Result<TrainDiag> {
        if batch.is_empty() {
            return Err(Error::BufferUnderflow { have: 0, need: 1 });
        }
        let next = self.target_actions(batch)?;
        self.train_step_with(batch, &next, k)
    }

    fn train_step_with(&mut self, batch: &Batch, next_actions: &Array2<f64>, k: usize) -> Result<TrainDiag> {
        let n = batch.len() as f64;
        let state_dim = self.agents.len() * OBS_DIM;
        let tau = self.temperature;
        let clip = self.config.grad_clip;
        let gamma = self.config.gamma;
        let reg = self.config.logit_reg;
        let obs_k = self.agent_obs(&batch.state, k);
        let noise = gumbel(batch.len(), ACTION_DIM, &mut self.learn_rng);
        let agent = &mut self.agents[k];

        // Critic: regress Q(s, a) onto r + γ Q̂(s', â').
        let x_next = concatenate![Axis(1), batch.next_state, *next_actions];
        let q_next = agent.target_critic.forward(&x_next)?.column(0).to_owned();
        let y = &batch.reward + &(q_next * gamma);
        let x = concatenate![Axis(1), batch.state, batch.action];
        let (q, cache) = agent.critic.forward_cached(&x)?;
        let err = &q.column(0) - &y;
        let critic_loss = err.mapv(|e| e * e).mean().unwrap_or(0.0);
        let grad_q = (err * (2.0 / n)).insert_axis(Axis(1));
        let (mut g, _) = agent.critic.backward(&cache, &grad_q);
        if clip > 0.0 {
            g.clip(clip);
        }
        agent.critic_opt.step(&mut agent.critic, &g);

        // Actor: ascend Q with this agent's action replaced by its relaxed policy output.
        let (logits, acache) = agent.actor.forward_cached(&obs_k)?;
        let a_k = softmax_rows(&(&logits + &noise), tau);
        let mut joint = batch.action.clone();
        let col = state_dim + k * ACTION_DIM;
        joint.slice_mut(s![.., k * ACTION_DIM..(k + 1) * ACTION_DIM]).assign(&a_k);
        let x = concatenate![Axis(1), batch.state, joint];
        let (q, ccache) = agent.critic.forward_cached(&x)?;
        let actor_objective = q.mean().unwrap_or(0.0);
        let dq = Array2::from_elem((batch.len(), 1), -1.0 / n);
        let (_, dx) = agent.critic.backward(&ccache, &dq);
        let da = dx.slice(s![.., col..col + ACTION_DIM]).to_owned();
        let mut dlogits = softmax_backward(&a_k, &da, tau);
        if reg > 0.0 {
            dlogits = dlogits + &logits * (2.0 * reg / (n * ACTION_DIM as f64));
        }
        let (mut ga, _) = agent.actor.backward(&acache, &dlogits);
        if clip > 0.0 {
            ga.clip(clip);
        }
        agent.actor_opt.step(&mut agent.actor, &ga);
        Ok(TrainDiag { critic_loss, actor_objective })
    }

    pub fn soft_update_targets(&mut self) -> Result<()> {
        let xi = self.config.xi;
        for a in &mut self.agents {
            a.target_actor.soft_update_from(&a.actor, xi)?;
            a.target_critic.soft_update_from(&a.critic, xi)?;
        }
        Ok(())
    }

    /// One learning step: a shared batch, an update per agent, then target updates.
    pub fn update(&mut self) -> Result<Vec<TrainDiag>> {
        let batch = self.buffer.sample(self.config.batch, &mut self.learn_rng)?;
        let next = self.target_actions(&batch)?;
        let mut diags = Vec::with_capacity(self.agents.len());
        for k in 0..self.agents.len() {
            diags.push(self.train_step_with(&batch, &next, k)?);
        }
        self.soft_update_targets()?;
        Ok(diags)
    }

    /// One training episode on `trace`.
    pub fn train_episode(&mut self, env: &mut CoopEnv, trace: EpisodeTrace, episode: usize) -> Result<EpisodeLog> {
        let mut obs = env.reset(trace)?;
        if obs.len() != self.agents.len() {
            return Err(Error::LengthMismatch { expected: self.agents.len(), got: obs.len() });
        }
        let (mut r_train, mut r_exec, mut pen, mut gain, mut cost, mut slots) = (0.0, 0.0, 0.0, 0.0, 0.0, 0usize);
        let (mut closs, mut aobj, mut updates) = (0.0, 0.0, 0usize);
        loop {
            let (y, bits) = self.act_explore(&obs)?;
            let out = env.step(&bits)?;
            slots += 1;
            r_train += out.reward_train;
            r_exec += out.reward_exec;
            gain += out.g_star;
            cost += f64::from(out.switching);
            pen += f64::from(u8::from(!out.feasible));
            // The horizon is a time limit, so the final slot has no successor to learn from.
            if !out.done {
                self.buffer.push(Transition {
                    state: features(&obs, self.total_hz),
                    action: y.iter().copied().collect(),
                    reward: out.reward_train,
                    next_state: features(&out.next_obs, self.total_hz),
                })?;
            }
            self.env_steps += 1;
            if self.buffer.len() >= self.config.batch && self.env_steps.is_multiple_of(self.config.train_every as u64) {
                for d in self.update()? {
                    closs += d.critic_loss;
                    aobj += d.actor_objective;
                    updates += 1;
                }
            }
            if out.done {
                break;
            }
            obs = out.next_obs;
        }
        let m = slots as f64;
        let u = if updates == 0 { f64::NAN } else { updates as f64 };
        let log = EpisodeLog {
            episode,
            reward_train: r_train / m,
            reward_exec: r_exec / m,
            penalty_rate: pen / m,
            gain: gain / m,
            cost: cost / m,
            critic_loss: closs / u,
            actor_objective: aobj / u,
            temperature: self.temperature,
        };
        self.temperature = (self.temperature * self.config.temperature_decay).max(self.config.temperature_floor);
        Ok(log)
    }

    /// Train for `config.episodes` episodes, drawing traces from `traces`.
    pub fn train<F>(&mut self, env: &mut CoopEnv, mut traces: F) -> Result<TrainingLog>
    where
        F: FnMut(usize) -> Result<EpisodeTrace>,
    {
        let mut log = TrainingLog::default();
        for e in 0..self.config.episodes {
            let entry = self.train_episode(env, traces(e)?, e)?;
            if e % 100 == 0 {
                log::debug!(
                    "episode {e}: reward {:.4}, penalty rate {:.3}, critic loss {:.4}",
                    entry.reward_train,
                    entry.penalty_rate,
                    entry.critic_loss
                );
            }
            log.episodes.push(entry);
        }
        Ok(log)
    }
}
