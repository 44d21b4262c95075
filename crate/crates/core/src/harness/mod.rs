//! Experiment orchestration: configs, seeded runs, sweeps and file output.

pub mod metrics;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{aggregate, aggregate_csv, percentile, MetricsSummary, Quartiles, SLOT_HEADER};

use crate::allocator::SolveOptions;
use crate::baselines::{always_cooperate_policy, random_policy, GainTable, PolicyKind};
use crate::channel::RadioParams;
use crate::env::{run_episode, CoopEnv, EnvParams, EpisodeRecord};
use crate::error::{Error, Result};
use crate::learner::{load_checkpoint, save_checkpoint, ActorSet, LearnerConfig, Maddpg, TrainingLog};
use crate::model::SystemModel;
use crate::perception::{classify_region, frequencies_and_thresholds, DnnProfile, PerceptionParams, Region, Thresholds};
use crate::scenario::{generate_episode, EpisodeTrace, ScenarioConfig};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream derives from it.
    pub seed: u64,
    /// Evaluation episodes per run.
    pub episodes: usize,
    pub policy: PolicyKind,
    pub output_dir: PathBuf,
    pub scenario: ScenarioConfig,
    pub env: EnvParams,
    pub learner: LearnerConfig,
    pub profile: DnnProfile,
    pub perception: PerceptionParams,
    pub radio: RadioParams,
    pub solver: SolveOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            episodes: 100,
            policy: PolicyKind::BruteForce,
            output_dir: PathBuf::from("out"),
            scenario: ScenarioConfig::default(),
            env: EnvParams::default(),
            learner: LearnerConfig::default(),
            profile: DnnProfile::default(),
            perception: PerceptionParams::default(),
            radio: RadioParams::default(),
            solver: SolveOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.env.validate()?;
        self.learner.validate()?;
        let model = self.model()?;
        let cap = model.workload_cap();
        if let Some(&w) = self.scenario.workload_states.iter().max() {
            if f64::from(w) > cap {
                return Err(Error::ConfigInvalid(format!("workload state {w} exceeds the cap W_M = {cap:.3}")));
            }
        }
        if !(self.solver.stop_band > 0.0 && self.solver.max_iterations > 0 && self.solver.root_rel_tol > 0.0) {
            return Err(Error::ConfigInvalid(format!("solver options {:?}", self.solver)));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<SystemModel> {
        SystemModel::new(self.profile, self.perception, self.radio)
    }

    pub fn env(&self) -> Result<CoopEnv> {
        Ok(CoopEnv::new(self.model()?, self.env).with_solve_options(self.solver))
    }

    /// Evaluation trace `episode`; identical across policies for paired comparisons.
    pub fn eval_trace(&self, episode: usize) -> Result<EpisodeTrace> {
        generate_episode(&self.scenario, &mut seeds::rng(self.seed, "scenario", episode as u64))
    }

    /// Training traces come from a separate stream so evaluation is out of sample.
    pub fn train_trace(&self, episode: usize) -> Result<EpisodeTrace> {
        generate_episode(&self.scenario, &mut seeds::rng(self.seed, "train-scenario", episode as u64))
    }

    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig { seed: seeds::derive(self.seed, "learner", 0), ..self.learner.clone() }
    }
}

/// Per-slot gain tables of one episode, reusable across ω̃ values.
pub type EpisodeTables = Vec<GainTable>;

pub fn gain_tables(config: &ExperimentConfig, trace: &EpisodeTrace) -> Result<EpisodeTables> {
    let model = config.model()?;
    trace.slots.iter().map(|s| GainTable::build(s, &model, &config.solver)).collect()
}

enum Resolved {
    Random,
    AllCp,
    Brute,
    Learned(ActorSet),
}

fn resolve(config: &ExperimentConfig, policy: &PolicyKind) -> Result<Resolved> {
    Ok(match policy {
        PolicyKind::Random => Resolved::Random,
        PolicyKind::AlwaysCooperate => Resolved::AllCp,
        PolicyKind::BruteForce => Resolved::Brute,
        PolicyKind::Learned(path) => {
            let actors = load_checkpoint(path)?;
            if actors.agents() != config.scenario.pairs {
                return Err(Error::ConfigInvalid(format!(
                    "checkpoint has {} agents, scenario has {} pairs",
                    actors.agents(),
                    config.scenario.pairs
                )));
            }
            Resolved::Learned(actors)
        }
    })
}

/// Run one evaluation episode under `policy`.
pub fn simulate_episode(
    config: &ExperimentConfig,
    policy: &PolicyKind,
    episode: usize,
    tables: Option<&EpisodeTables>,
) -> Result<EpisodeRecord> {
    let resolved = resolve(config, policy)?;
    episode_with(config, &resolved, episode, tables)
}

fn episode_with(
    config: &ExperimentConfig,
    policy: &Resolved,
    episode: usize,
    tables: Option<&EpisodeTables>,
) -> Result<EpisodeRecord> {
    let trace = config.eval_trace(episode)?;
    let mut env = config.env()?;
    let k = trace.pair_count();
    match policy {
        Resolved::Random => {
            let mut rng = seeds::rng(config.seed, "policy", episode as u64);
            run_episode(&mut env, trace, |_, _| Ok(random_policy(k, &mut rng)))
        }
        Resolved::AllCp => run_episode(&mut env, trace, |_, _| Ok(always_cooperate_policy(k))),
        Resolved::Brute => {
            let owned;
            let tables = match tables {
                Some(t) => t,
                None => {
                    owned = gain_tables(config, &trace)?;
                    &owned
                }
            };
            let omega = config.env.omega_tilde;
            run_episode(&mut env, trace, |e, _| Ok(tables[e.slot_index()].best(e.x_prev(), omega)?.0))
        }
        Resolved::Learned(actors) => run_episode(&mut env, trace, |_, obs| actors.decide(obs)),
    }
}

/// All evaluation episodes of `config` under `policy`, in episode order.
pub fn simulate(
    config: &ExperimentConfig,
    policy: &PolicyKind,
    tables: Option<&[EpisodeTables]>,
) -> Result<Vec<EpisodeRecord>> {
    let resolved = resolve(config, policy)?;
    (0..config.episodes)
        .into_par_iter()
        .map(|e| episode_with(config, &resolved, e, tables.map(|t| &t[e])))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: MetricsSummary,
    pub records: Vec<EpisodeRecord>,
}

fn summarize(records: &[EpisodeRecord]) -> MetricsSummary {
    if records.is_empty() {
        MetricsSummary::no_data()
    } else {
        aggregate(records).expect("nonempty")
    }
}

/// Simulate `config.policy` and write `episode_NNNN.csv` files plus `summary.json`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let records = simulate(config, &config.policy, None)?;
    let summary = summarize(&records);
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    for (e, r) in records.iter().enumerate() {
        let f = fs::File::create(dir.join(format!("episode_{e:04}.csv")))?;
        metrics::write_slot_csv(r, BufWriter::new(f))?;
    }
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(RunOutput { summary, records })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "omega_tilde")]
    OmegaTilde,
    #[serde(rename = "K")]
    Pairs,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::OmegaTilde => "omega_tilde",
            SweepParam::Pairs => "K",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega_tilde" | "omega" => Ok(SweepParam::OmegaTilde),
            "K" | "k" | "pairs" => Ok(SweepParam::Pairs),
            _ => Err(Error::ConfigInvalid(format!("unknown sweep parameter `{s}` (omega_tilde or K)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: MetricsSummary,
}

/// One run per value with shared seeds. Brute-force ω̃ sweeps reuse the per-slot gain tables.
pub fn sweep_points(config: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::ConfigInvalid("sweep needs at least one value".into()));
    }
    let mut configs = Vec::with_capacity(values.len());
    for &v in values {
        let mut c = config.clone();
        match param {
            SweepParam::OmegaTilde => c.env.omega_tilde = v,
            SweepParam::Pairs => {
                if !(v >= 1.0 && v.fract() == 0.0) {
                    return Err(Error::ConfigInvalid(format!("K must be a positive integer, got {v}")));
                }
                c.scenario.pairs = v as usize;
            }
        }
        c.validate()?;
        configs.push(c);
    }
    let shared_tables = if param == SweepParam::OmegaTilde && config.policy == PolicyKind::BruteForce {
        Some(
            (0..config.episodes)
                .into_par_iter()
                .map(|e| gain_tables(config, &config.eval_trace(e)?))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    configs
        .iter()
        .zip(values)
        .map(|(c, &value)| {
            let records = simulate(c, &c.policy, shared_tables.as_deref())?;
            Ok(SweepPoint { value, summary: summarize(&records) })
        })
        .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(param: SweepParam, points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["param", "value", "metric", "mean", "p25", "p50", "p75"])?;
    for p in points {
        for (name, q) in p.summary.metrics() {
            w.write_record([
                param.name().to_string(),
                p.value.to_string(),
                name.to_string(),
                q.mean.to_string(),
                q.p25.to_string(),
                q.p50.to_string(),
                q.p75.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Sweep and write `sweep.csv` and `sweep.json` to the output directory.
pub fn sweep(config: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let points = sweep_points(config, param, values)?;
    fs::create_dir_all(&config.output_dir)?;
    let f = fs::File::create(config.output_dir.join("sweep.csv"))?;
    write_sweep_csv(param, &points, BufWriter::new(f))?;
    write_json(&config.output_dir.join("sweep.json"), &points)?;
    Ok(points)
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub actors: ActorSet,
    pub log: TrainingLog,
}

/// Train on `learner.episodes` episodes without writing anything.
pub fn train_policies(config: &ExperimentConfig) -> Result<TrainOutput> {
    config.validate()?;
    let mut learner = Maddpg::new(config.scenario.pairs, config.scenario.bandwidth_hz, config.learner_config())?;
    let mut env = config.env()?;
    let log = learner.train(&mut env, |e| config.train_trace(e))?;
    Ok(TrainOutput { actors: learner.actors(), log })
}

pub const TRAINING_LOG_HEADER: [&str; 9] = [
    "episode",
    "reward_train",
    "reward_exec",
    "penalty_rate",
    "gain_J",
    "switching_cost",
    "critic_loss",
    "actor_objective",
    "temperature",
];

pub fn write_training_log<W: std::io::Write>(log: &TrainingLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAINING_LOG_HEADER)?;
    for e in &log.episodes {
        w.write_record([
            e.episode.to_string(),
            e.reward_train.to_string(),
            e.reward_exec.to_string(),
            e.penalty_rate.to_string(),
            e.gain.to_string(),
            e.cost.to_string(),
            e.critic_loss.to_string(),
            e.actor_objective.to_string(),
            e.temperature.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Train and write `actors.ckpt` and `training_log.csv`. Returns the checkpoint path.
pub fn train(config: &ExperimentConfig) -> Result<(PathBuf, TrainOutput)> {
    let out = train_policies(config)?;
    fs::create_dir_all(&config.output_dir)?;
    let ckpt = config.output_dir.join("actors.ckpt");
    save_checkpoint(&out.actors, &ckpt)?;
    let f = fs::File::create(config.output_dir.join("training_log.csv"))?;
    write_training_log(&out.log, BufWriter::new(f))?;
    Ok((ckpt, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub rate_bps: f64,
    pub freq_hz: f64,
    pub region: Region,
}

/// Thresholds plus a log-rate × linear-frequency grid of region labels for one workload.
pub fn region_grid(model: &SystemModel, workload: f64, n: usize) -> Result<(Thresholds, Vec<RegionCell>)> {
    let t = frequencies_and_thresholds(workload, &model.costs, &model.perception)?;
    let n = n.max(2);
    let (r_lo, r_hi) = (0.5 * t.r_m.min(t.r_p).min(t.r_d), 2.0 * t.r_m.max(t.r_p).max(t.r_d));
    let (f_lo, f_hi) = (0.5 * t.f_d, 1.2 * model.perception.f_max_hz.max(t.f_p));
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        let rate_bps = r_lo * (r_hi / r_lo).powf(i as f64 / (n - 1) as f64);
        for j in 0..n {
            let freq_hz = f_lo + (f_hi - f_lo) * j as f64 / (n - 1) as f64;
            let region = classify_region(rate_bps, freq_hz, workload, &model.costs, &model.perception)?;
            cells.push(RegionCell { rate_bps, freq_hz, region });
        }
    }
    Ok((t, cells))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path, policy: PolicyKind) -> ExperimentConfig {
        ExperimentConfig {
            seed: 4,
            episodes: 3,
            policy,
            output_dir: dir.to_path_buf(),
            scenario: ScenarioConfig { pairs: 3, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn three_line_config() {
        let c = ExperimentConfig::from_toml("seed = 7\npolicy = \"allcp\"\n[scenario]\npairs = 6\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.policy, PolicyKind::AlwaysCooperate);
        assert_eq!(c.scenario.pairs, 6);
        assert_eq!(c.env.omega_tilde, 0.4);
        assert_eq!(c.learner.batch, 1024);
    }

    #[test]
    fn config_errors() {
        for bad in [
            "sede = 1",
            "[scenario]\nrsu_radius_m = 1.0",
            "policy = \"greedy\"",
            "[learner]\ngamma = 1.5",
            "[scenario]\nworkload_states = [4, 20]",
        ] {
            let e = ExperimentConfig::from_toml(bad).unwrap_err();
            assert!(e.is_config_error(), "{bad}: {e}");
        }
    }

    #[test]
    fn run_writes_files_deterministically() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run(&small(a.path(), PolicyKind::Random)).unwrap();
        run(&small(b.path(), PolicyKind::Random)).unwrap();
        for name in ["episode_0000.csv", "episode_0002.csv", "summary.json"] {
            assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
        }
        assert_eq!(ra.summary.episodes, 3);
        let paths: Vec<_> = (0..3).map(|e| a.path().join(format!("episode_{e:04}.csv"))).collect();
        assert_eq!(aggregate_csv(&paths).unwrap().gain_j, ra.summary.gain_j);
    }

    #[test]
    fn zero_episodes_flags_no_data() {
        let d = tempfile::tempdir().unwrap();
        let c = ExperimentConfig { episodes: 0, ..small(d.path(), PolicyKind::Random) };
        let out = run(&c).unwrap();
        assert!(out.summary.no_data);
        let text = fs::read_to_string(d.path().join("summary.json")).unwrap();
        assert!(text.contains("\"no_data\": true") && !text.contains("NaN"));
    }

    #[test]
    fn policies_share_traces() {
        let d = tempfile::tempdir().unwrap();
        let c = small(d.path(), PolicyKind::Random);
        let r = simulate(&c, &PolicyKind::Random, None).unwrap();
        let b = simulate(&c, &PolicyKind::BruteForce, None).unwrap();
        for (x, y) in r.iter().zip(&b) {
            assert_eq!(x.slots.len(), y.slots.len());
            for (s, t) in x.slots.iter().zip(&y.slots) {
                assert_eq!(s.available_hz, t.available_hz);
            }
        }
        // Brute force maximizes the instantaneous reward, so it dominates on average.
        let mean = |v: &[EpisodeRecord]| v.iter().map(|e| e.stats().reward_exec).sum::<f64>();
        assert!(mean(&b) >= mean(&r));
    }

    #[test]
    fn single_value_sweep_matches_run() {
        let d = tempfile::tempdir().unwrap();
        let c = small(d.path(), PolicyKind::BruteForce);
        let pts = sweep(&c, SweepParam::OmegaTilde, &[0.4]).unwrap();
        let r = run(&c).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].summary, r.summary);
        let csv = fs::read_to_string(d.path().join("sweep.csv")).unwrap();
        assert!(csv.starts_with("param,value,metric,mean,p25,p50,p75\n"));
        assert!(csv.contains("omega_tilde,0.4,gain_J,"));
    }

    #[test]
    fn learned_policy_round_trip() {
        let d = tempfile::tempdir().unwrap();
        let mut c = small(d.path(), PolicyKind::Random);
        c.learner = LearnerConfig { episodes: 2, batch: 32, hidden: vec![8, 8], ..Default::default() };
        let (ckpt, out) = train(&c).unwrap();
        assert_eq!(out.log.episodes.len(), 2);
        assert!(d.path().join("training_log.csv").exists());
        let rec = simulate(&c, &PolicyKind::Learned(ckpt.clone()), None).unwrap();
        assert_eq!(rec.len(), 3);
        c.scenario.pairs = 2;
        assert!(simulate(&c, &PolicyKind::Learned(ckpt), None).unwrap_err().is_config_error());
    }

    #[test]
    fn region_grid_covers_regions() {
        let m = SystemModel::reference();
        let (t, cells) = region_grid(&m, 6.0, 40).unwrap();
        assert_eq!(cells.len(), 1600);
        assert_eq!(t.regime, crate::perception::Regime::Low);
        for r in [Region::R1, Region::R2, Region::R3, Region::R4, Region::R5] {
            assert!(cells.iter().any(|c| c.region == r), "{r:?}");
        }
    }
}
