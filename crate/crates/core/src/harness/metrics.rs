//! Per-slot CSV records and across-episode summaries.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{EpisodeRecord, EpisodeStats, SlotRecord};
use crate::error::{Error, Result};
use crate::units::hz_to_mhz;

pub const SLOT_HEADER: [&str; 8] =
    ["slot", "B_MHz", "action_bits", "feasible", "G_star_J", "C", "reward_train", "reward_exec"];

/// Linear-interpolation percentile over sorted data, inclusive of both ends:
/// position q·(n−1) between the neighbouring order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub mean: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            p25: percentile(&v, 0.25),
            p50: percentile(&v, 0.5),
            p75: percentile(&v, 0.75),
        }
    }
}

/// Slot averages per episode, then quartiles across episodes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub episodes: usize,
    pub no_data: bool,
    pub gain_j: Quartiles,
    pub switching_cost: Quartiles,
    pub reward_exec: Quartiles,
    pub reward_train: Quartiles,
    pub penalty_rate: Quartiles,
    /// Absent when summarizing CSV files, which do not carry it.
    pub allocator_iterations: Option<Quartiles>,
}

impl MetricsSummary {
    pub fn no_data() -> Self {
        Self { no_data: true, allocator_iterations: Some(Quartiles::default()), ..Default::default() }
    }

    pub fn from_stats(stats: &[EpisodeStats], with_iterations: bool) -> Self {
        if stats.is_empty() {
            return Self::no_data();
        }
        let q = |f: fn(&EpisodeStats) -> f64| Quartiles::of(&stats.iter().map(f).collect::<Vec<_>>());
        Self {
            episodes: stats.len(),
            no_data: false,
            gain_j: q(|s| s.gain),
            switching_cost: q(|s| s.cost),
            reward_exec: q(|s| s.reward_exec),
            reward_train: q(|s| s.reward_train),
            penalty_rate: q(|s| s.penalty_rate),
            allocator_iterations: with_iterations.then(|| q(|s| s.iterations)),
        }
    }

    /// (name, quartiles) in a fixed order.
    pub fn metrics(&self) -> Vec<(&'static str, Quartiles)> {
        let mut m = vec![
            ("gain_J", self.gain_j),
            ("switching_cost", self.switching_cost),
            ("reward_exec", self.reward_exec),
            ("reward_train", self.reward_train),
            ("penalty_rate", self.penalty_rate),
        ];
        if let Some(it) = self.allocator_iterations {
            m.push(("allocator_iterations", it));
        }
        m
    }
}

pub fn aggregate(records: &[EpisodeRecord]) -> Result<MetricsSummary> {
    if records.is_empty() {
        return Err(Error::NoData);
    }
    let stats: Vec<EpisodeStats> = records.iter().map(EpisodeRecord::stats).collect();
    Ok(MetricsSummary::from_stats(&stats, true))
}

/// Summarize per-slot CSV files, one episode each.
pub fn aggregate_csv<P: AsRef<Path>>(paths: &[P]) -> Result<MetricsSummary> {
    if paths.is_empty() {
        return Err(Error::NoData);
    }
    let mut stats = Vec::with_capacity(paths.len());
    for p in paths {
        let rec = read_slot_csv(std::fs::File::open(p.as_ref())?, p.as_ref())?;
        stats.push(rec.stats());
    }
    Ok(MetricsSummary::from_stats(&stats, false))
}

fn bits_string(bits: &[u8]) -> String {
    bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
}

pub fn write_slot_csv<W: Write>(record: &EpisodeRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SLOT_HEADER)?;
    for s in &record.slots {
        w.write_record([
            s.slot.to_string(),
            hz_to_mhz(s.available_hz).to_string(),
            bits_string(&s.action),
            u8::from(s.feasible).to_string(),
            s.g_star.to_string(),
            s.switching.to_string(),
            s.reward_train.to_string(),
            s.reward_exec.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_slot_csv<R: Read>(input: R, path: &Path) -> Result<EpisodeRecord> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(SLOT_HEADER.iter().copied()) {
        return Err(Error::SchemaMismatch(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            SLOT_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut slots = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let err = |col: &str| Error::Parse { path: path.into(), row: i + 2, msg: format!("column `{col}`") };
        let f = |j: usize, col: &str| rec[j].parse::<f64>().map_err(|_| err(col));
        let action = rec[2]
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(err("action_bits")),
            })
            .collect::<Result<Vec<u8>>>()?;
        slots.push(SlotRecord {
            slot: rec[0].parse().map_err(|_| err("slot"))?,
            available_hz: f(1, "B_MHz")? * 1e6,
            action,
            feasible: match &rec[3] {
                "1" => true,
                "0" => false,
                _ => return Err(err("feasible")),
            },
            g_star: f(4, "G_star_J")?,
            switching: rec[5].parse().map_err(|_| err("C"))?,
            reward_train: f(6, "reward_train")?,
            reward_exec: f(7, "reward_exec")?,
            iterations: 0,
        });
    }
    Ok(EpisodeRecord { slots })
}
