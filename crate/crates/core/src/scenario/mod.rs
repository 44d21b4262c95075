//! Episode dynamics: a vehicle cluster crossing one RSU's coverage.
//!
//! Mobility is synthetic. Every vehicle keeps a constant base speed, pair
//! members share theirs and the receiver jitters around it so the pair
//! distance wanders inside fixed bounds.

mod trace;

pub use trace::{export_trace, ingest_trace, TRACE_HEADER};

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::SimRng;

pub const LANE_WIDTH_M: f64 = 3.5;
const HEADWAY_M: f64 = 25.0;
const HEADWAY_JITTER_M: f64 = 5.0;
const INITIAL_GAP_M: (f64, f64) = (5.0, 25.0);
const FOLLOWER_JITTER_MPS: f64 = 0.5;
const INDIVIDUAL_MAX: u32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of CAV pairs K.
    pub pairs: usize,
    /// Number of HDVs M.
    pub hdvs: usize,
    pub lanes: u32,
    pub segment_len_m: f64,
    pub rsu_x_m: f64,
    /// Perpendicular distance from the RSU to the road.
    pub rsu_offset_m: f64,
    pub rsu_radius_m: f64,
    pub speed_range_mps: [f64; 2],
    pub slot_len_s: f64,
    pub travel_dist_m: f64,
    pub bandwidth_hz: f64,
    pub hdv_request_prob: f64,
    pub hdv_bw_hz: f64,
    pub workload_states: Vec<u32>,
    /// Row-stochastic over `workload_states`. `None` selects the lazy reflecting walk.
    pub workload_transition: Option<Vec<Vec<f64>>>,
    pub pair_distance_bounds_m: [f64; 2],
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            pairs: 2,
            hdvs: 10,
            lanes: 4,
            segment_len_m: 1500.0,
            rsu_x_m: 750.0,
            rsu_offset_m: 10.0,
            rsu_radius_m: 250.0,
            speed_range_mps: [23.0, 27.0],
            slot_len_s: 0.5,
            travel_dist_m: 1000.0,
            bandwidth_hz: 10.5e6,
            hdv_request_prob: 0.5,
            hdv_bw_hz: 0.5e6,
            workload_states: (4..=8).collect(),
            workload_transition: None,
            pair_distance_bounds_m: [5.0, 60.0],
        }
    }
}

/// Stay with 0.4, step ±1 with 0.3 each, reflecting at both ends.
pub fn lazy_walk(n: usize) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; n]; n];
    if n == 1 {
        p[0][0] = 1.0;
        return p;
    }
    for i in 0..n {
        p[i][i] = 0.4;
        if i == 0 {
            p[i][1] = 0.6;
        } else if i == n - 1 {
            p[i][n - 2] = 0.6;
        } else {
            p[i][i - 1] = 0.3;
            p[i][i + 1] = 0.3;
        }
    }
    p
}

impl ScenarioConfig {
    pub fn transition(&self) -> Vec<Vec<f64>> {
        self.workload_transition
            .clone()
            .unwrap_or_else(|| lazy_walk(self.workload_states.len()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.lanes == 0 {
            return bad("lanes must be at least 1".into());
        }
        let [lo, hi] = self.speed_range_mps;
        if !(lo > 0.0 && hi >= lo) {
            return bad(format!("speed range {lo}..{hi} m/s"));
        }
        if !(self.slot_len_s > 0.0 && self.travel_dist_m > 0.0) {
            return bad("slot length and travel distance must be positive".into());
        }
        if !(self.rsu_radius_m > self.rsu_offset_m && self.rsu_offset_m >= 0.0) {
            return bad(format!(
                "rsu radius {} must exceed offset {}",
                self.rsu_radius_m, self.rsu_offset_m
            ));
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad("total bandwidth must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.hdv_request_prob) {
            return bad(format!("hdv request probability {}", self.hdv_request_prob));
        }
        if !(self.hdv_bw_hz >= 0.0) || self.hdv_bw_hz * self.hdvs as f64 > self.bandwidth_hz {
            return bad(format!(
                "{} HDVs at {} Hz each exhaust the {} Hz band",
                self.hdvs, self.hdv_bw_hz, self.bandwidth_hz
            ));
        }
        let [dlo, dhi] = self.pair_distance_bounds_m;
        if !(dlo > 0.0 && dhi > dlo) {
            return bad(format!("pair distance bounds {dlo}..{dhi}"));
        }
        if self.lanes > 1 && dhi <= LANE_WIDTH_M {
            return bad(format!("pair distance upper bound {dhi} does not span one lane"));
        }
        if self.workload_states.is_empty() || self.workload_states.contains(&0) {
            return bad("workload states must be a nonempty set of positive integers".into());
        }
        let p = self.transition();
        let n = self.workload_states.len();
        if p.len() != n || p.iter().any(|r| r.len() != n) {
            return bad(format!("workload transition must be {n}x{n}"));
        }
        for (i, row) in p.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if row.iter().any(|&v| !(v >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                return bad(format!("workload transition row {i} is not a distribution"));
            }
        }
        Ok(())
    }

    /// First x on the road inside coverage.
    pub fn coverage_entry_x(&self) -> f64 {
        self.rsu_x_m - self.half_chord()
    }

    fn half_chord(&self) -> f64 {
        (self.rsu_radius_m.powi(2) - self.rsu_offset_m.powi(2)).sqrt()
    }

    pub fn available_hz(&self, requesting: u32) -> f64 {
        self.bandwidth_hz - self.hdv_bw_hz * f64::from(requesting)
    }
}

pub fn coverage(x_m: f64, config: &ScenarioConfig) -> bool {
    ((x_m - config.rsu_x_m).powi(2) + config.rsu_offset_m.powi(2)).sqrt() <= config.rsu_radius_m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleKind {
    Cav,
    Hdv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairRole {
    Tx,
    Rx,
    Na,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleSnapshot {
    pub id: u32,
    pub kind: VehicleKind,
    pub lane: u32,
    pub x_m: f64,
    pub speed_mps: f64,
    pub requesting: bool,
    pub pair_id: Option<u32>,
    pub role: PairRole,
}

/// Per-pair state in one slot. The previous cooperation bit lives in the env.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSlotState {
    pub workload: u32,
    pub w_tx: u32,
    pub w_rx: u32,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotState {
    pub pairs: Vec<PairSlotState>,
    pub available_hz: f64,
    pub requesting: u32,
    pub cluster_x_m: f64,
    /// Indexed like `vehicles`.
    pub coverage: Vec<bool>,
    pub vehicles: Vec<VehicleSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub slots: Vec<SlotState>,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn pair_count(&self) -> usize {
        self.slots.first().map_or(0, |s| s.pairs.len())
    }
}

pub fn pair_distance(tx: &VehicleSnapshot, rx: &VehicleSnapshot) -> f64 {
    let dy = (f64::from(tx.lane) - f64::from(rx.lane)) * LANE_WIDTH_M;
    (tx.x_m - rx.x_m).hypot(dy)
}

/// Longitudinal gap range that keeps the pair distance in bounds for a lateral offset `dy`.
fn gap_bounds(dy: f64, bounds: [f64; 2]) -> (f64, f64) {
    let lo = (bounds[0].powi(2) - dy * dy).max(0.0).sqrt();
    let hi = (bounds[1].powi(2) - dy * dy).sqrt();
    (lo, hi)
}

fn reflect(mut g: f64, lo: f64, hi: f64) -> f64 {
    // The jitter step is far smaller than the interval, so one pass suffices in practice.
    for _ in 0..4 {
        if g < lo {
            g = 2.0 * lo - g;
        } else if g > hi {
            g = 2.0 * hi - g;
        } else {
            return g;
        }
    }
    g.clamp(lo, hi)
}

fn sample_row(row: &[f64], rng: &mut SimRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Workload index chain driven by `transition`, for `steps` steps from `start`.
pub fn workload_chain(transition: &[Vec<f64>], start: usize, steps: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut out = Vec::with_capacity(steps);
    let mut s = start;
    for _ in 0..steps {
        out.push(s);
        s = sample_row(&transition[s], rng);
    }
    out
}

struct Unit {
    lane: u32,
    x: f64,
    speed: f64,
    /// Receiver lane and gap behind the transmitter for pair units.
    rx: Option<(u32, f64)>,
}

pub fn generate_episode(config: &ScenarioConfig, rng: &mut SimRng) -> Result<EpisodeTrace> {
    config.validate()?;
    let k = config.pairs;
    let m = config.hdvs;
    let [vlo, vhi] = config.speed_range_mps;
    let speed = Uniform::new_inclusive(vlo, vhi).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    let jitter = Uniform::new_inclusive(-HEADWAY_JITTER_M, HEADWAY_JITTER_M).expect("static range");
    let follower = Uniform::new_inclusive(-FOLLOWER_JITTER_MPS, FOLLOWER_JITTER_MPS).expect("static range");
    let indiv = Uniform::new_inclusive(0, INDIVIDUAL_MAX).expect("static range");

    // Unit order along the road is shuffled so HDVs interleave with pairs.
    let mut order: Vec<usize> = (0..k + m).collect();
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut units: Vec<Unit> = (0..k + m)
        .map(|_| Unit { lane: 0, x: 0.0, speed: 0.0, rx: None })
        .collect();
    for (slot, &u) in order.iter().enumerate() {
        let unit = &mut units[u];
        unit.lane = slot as u32 % config.lanes;
        unit.x = -HEADWAY_M * slot as f64 + jitter.sample(rng);
        unit.speed = speed.sample(rng);
        if u < k {
            let adjacent = config.lanes > 1 && rng.random_bool(0.5);
            let rx_lane = if !adjacent {
                unit.lane
            } else if unit.lane + 1 < config.lanes {
                unit.lane + 1
            } else {
                unit.lane - 1
            };
            let dy = (f64::from(unit.lane) - f64::from(rx_lane)) * LANE_WIDTH_M;
            let (glo, ghi) = gap_bounds(dy, config.pair_distance_bounds_m);
            let lo = INITIAL_GAP_M.0.max(glo);
            let hi = INITIAL_GAP_M.1.min(ghi).max(lo);
            let gap = rng.random_range(lo..=hi);
            unit.rx = Some((rx_lane, gap));
        }
    }

    // Leading vehicle sits at the coverage entry.
    let front = units.iter().map(|u| u.x).fold(f64::NEG_INFINITY, f64::max);
    let shift = config.coverage_entry_x() - front;
    let head_speed = units.iter().max_by(|a, b| a.x.total_cmp(&b.x)).map_or(vlo, |u| u.speed);
    for u in &mut units {
        u.x += shift;
    }
    let slots = (config.travel_dist_m / (head_speed * config.slot_len_s)).ceil() as usize;

    let transition = config.transition();
    let n_states = config.workload_states.len();
    let mut workload_idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..n_states)).collect();
    let mut out = Vec::with_capacity(slots);

    for _ in 0..slots {
        let mut vehicles = Vec::with_capacity(2 * k + m);
        let mut pairs = Vec::with_capacity(k);
        let mut rx_speed = Vec::with_capacity(k);
        for (p, u) in units.iter().enumerate().take(k) {
            let (rx_lane, gap) = u.rx.expect("pair unit");
            let v_rx = u.speed + follower.sample(rng);
            rx_speed.push(v_rx);
            let tx = VehicleSnapshot {
                id: 2 * p as u32,
                kind: VehicleKind::Cav,
                lane: u.lane,
                x_m: u.x,
                speed_mps: u.speed,
                requesting: false,
                pair_id: Some(p as u32),
                role: PairRole::Tx,
            };
            let rx = VehicleSnapshot {
                id: 2 * p as u32 + 1,
                lane: rx_lane,
                x_m: u.x - gap,
                speed_mps: v_rx,
                role: PairRole::Rx,
                ..tx
            };
            pairs.push(PairSlotState {
                workload: config.workload_states[workload_idx[p]],
                w_tx: indiv.sample(rng),
                w_rx: indiv.sample(rng),
                distance_m: pair_distance(&tx, &rx),
            });
            vehicles.push(tx);
            vehicles.push(rx);
        }
        let mut requesting = 0;
        for (h, u) in units.iter().enumerate().skip(k) {
            let req = coverage(u.x, config) && rng.random_bool(config.hdv_request_prob);
            requesting += u32::from(req);
            vehicles.push(VehicleSnapshot {
                id: (2 * k + h - k) as u32,
                kind: VehicleKind::Hdv,
                lane: u.lane,
                x_m: u.x,
                speed_mps: u.speed,
                requesting: req,
                pair_id: None,
                role: PairRole::Na,
            });
        }
        out.push(SlotState {
            pairs,
            available_hz: config.available_hz(requesting),
            requesting,
            cluster_x_m: vehicles.iter().map(|v| v.x_m).fold(f64::NEG_INFINITY, f64::max),
            coverage: vehicles.iter().map(|v| coverage(v.x_m, config)).collect(),
            vehicles,
        });

        // Advance to the next slot.
        for (p, u) in units.iter_mut().enumerate() {
            let dx = u.speed * config.slot_len_s;
            u.x += dx;
            if let Some((rx_lane, gap)) = u.rx.as_mut() {
                let dy = (f64::from(u.lane) - f64::from(*rx_lane)) * LANE_WIDTH_M;
                let (glo, ghi) = gap_bounds(dy, config.pair_distance_bounds_m);
                *gap = reflect(*gap + dx - rx_speed[p] * config.slot_len_s, glo, ghi);
            }
        }
        for w in &mut workload_idx {
            *w = sample_row(&transition[*w], rng);
        }
    }
    Ok(EpisodeTrace { slots: out })
}

/// Stationary distribution by power iteration.
pub fn stationary(transition: &[Vec<f64>]) -> Vec<f64> {
    let n = transition.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let mut next = vec![0.0; n];
        for (i, row) in transition.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                next[j] += pi[i] * p;
            }
        }
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff < 1e-15 {
            break;
        }
    }
    pi
}
