//! Per-vehicle CSV trace format, one row per vehicle per slot.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{
    coverage, pair_distance, EpisodeTrace, PairRole, PairSlotState, ScenarioConfig, SlotState, VehicleKind,
    VehicleSnapshot,
};
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 12] = [
    "slot", "vehicle_id", "kind", "lane", "x_m", "speed_mps", "requesting", "W_shared", "W_T", "W_R", "pair_id",
    "pair_role",
];

pub fn export_trace<W: Write>(trace: &EpisodeTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for (n, slot) in trace.slots.iter().enumerate() {
        for v in &slot.vehicles {
            let pair = v.pair_id.map(|p| slot.pairs[p as usize]);
            let opt = |f: fn(&PairSlotState) -> u32| pair.as_ref().map(f).map_or(String::new(), |x| x.to_string());
            w.write_record([
                n.to_string(),
                v.id.to_string(),
                match v.kind {
                    VehicleKind::Cav => "cav",
                    VehicleKind::Hdv => "hdv",
                }
                .to_string(),
                v.lane.to_string(),
                v.x_m.to_string(),
                v.speed_mps.to_string(),
                u8::from(v.requesting).to_string(),
                opt(|p| p.workload),
                opt(|p| p.w_tx),
                opt(|p| p.w_rx),
                v.pair_id.map_or(String::new(), |p| p.to_string()),
                match v.role {
                    PairRole::Tx => "tx",
                    PairRole::Rx => "rx",
                    PairRole::Na => "na",
                }
                .to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn ingest_trace(path: &Path, config: &ScenarioConfig) -> Result<EpisodeTrace> {
    let file = std::fs::File::open(path)?;
    read_trace(file, path, config)
}

struct Row {
    slot: usize,
    vehicle: VehicleSnapshot,
    workloads: Option<(u32, u32, u32)>,
    line: usize,
}

pub(crate) fn read_trace<R: Read>(input: R, path: &Path, config: &ScenarioConfig) -> Result<EpisodeTrace> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let mut col = HashMap::new();
    for name in TRACE_HEADER {
        let idx = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::SchemaMismatch(format!("missing column `{name}`")))?;
        col.insert(name, idx);
    }

    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let err = |msg: String| Error::Parse { path: PathBuf::from(path), row: line, msg };
        let field = |name: &str| rec.get(col[name]).unwrap_or("");
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("column `{name}`: cannot parse `{s}`"))
        }
        let parse = || -> std::result::Result<Row, String> {
            let kind = match field("kind") {
                "cav" => VehicleKind::Cav,
                "hdv" => VehicleKind::Hdv,
                other => return Err(format!("column `kind`: unknown value `{other}`")),
            };
            let role = match field("pair_role") {
                "tx" => PairRole::Tx,
                "rx" => PairRole::Rx,
                "na" => PairRole::Na,
                other => return Err(format!("column `pair_role`: unknown value `{other}`")),
            };
            let requesting = match field("requesting") {
                "0" => false,
                "1" => true,
                other => return Err(format!("column `requesting`: expected 0 or 1, got `{other}`")),
            };
            let x_m: f64 = num(field("x_m"), "x_m")?;
            let speed_mps: f64 = num(field("speed_mps"), "speed_mps")?;
            if !x_m.is_finite() || !speed_mps.is_finite() {
                return Err("position and speed must be finite".into());
            }
            let (pair_id, workloads) = match (kind, role) {
                (VehicleKind::Cav, PairRole::Tx | PairRole::Rx) => {
                    let w: u32 = num(field("W_shared"), "W_shared")?;
                    if !config.workload_states.contains(&w) {
                        return Err(format!("column `W_shared`: {w} is not a workload state"));
                    }
                    (
                        Some(num(field("pair_id"), "pair_id")?),
                        Some((w, num(field("W_T"), "W_T")?, num(field("W_R"), "W_R")?)),
                    )
                }
                (VehicleKind::Hdv, PairRole::Na) => (None, None),
                _ => return Err("CAVs must be tx or rx, HDVs must be na".into()),
            };
            if requesting && kind == VehicleKind::Cav {
                return Err("only HDVs request bandwidth".into());
            }
            Ok(Row {
                slot: num(field("slot"), "slot")?,
                vehicle: VehicleSnapshot {
                    id: num(field("vehicle_id"), "vehicle_id")?,
                    kind,
                    lane: num(field("lane"), "lane")?,
                    x_m,
                    speed_mps,
                    requesting,
                    pair_id,
                    role,
                },
                workloads,
                line,
            })
        };
        rows.push(parse().map_err(err)?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyTrace);
    }

    let mut groups: Vec<Vec<Row>> = Vec::new();
    for row in rows {
        match groups.last() {
            Some(g) if g[0].slot == row.slot => {}
            Some(g) if row.slot < g[0].slot => return Err(Error::NonMonotoneTime { row: row.line }),
            prev => {
                let expect = prev.map_or(0, |g| g[0].slot + 1);
                if row.slot != expect {
                    return Err(Error::Parse {
                        path: path.into(),
                        row: row.line,
                        msg: format!("slot {} follows slot {}", row.slot, expect as i64 - 1),
                    });
                }
                groups.push(Vec::new());
            }
        }
        groups.last_mut().expect("just pushed").push(row);
    }

    let mut slots = Vec::with_capacity(groups.len());
    let mut pair_count = None;
    for group in groups {
        let line = group[0].line;
        let perr = |row: usize, msg: String| Error::Parse { path: path.into(), row, msg };
        let k = group.iter().filter(|r| r.vehicle.role == PairRole::Tx).count();
        if *pair_count.get_or_insert(k) != k {
            return Err(perr(line, format!("slot has {k} pairs, earlier slots have {}", pair_count.unwrap())));
        }
        let mut tx: Vec<Option<&Row>> = vec![None; k];
        let mut rx: Vec<Option<&Row>> = vec![None; k];
        for r in &group {
            if let Some(p) = r.vehicle.pair_id {
                let p = p as usize;
                let side = if r.vehicle.role == PairRole::Tx { &mut tx } else { &mut rx };
                match side.get_mut(p) {
                    Some(s @ None) => *s = Some(r),
                    Some(Some(_)) => return Err(perr(r.line, format!("pair {p} has two members in one role"))),
                    None => return Err(perr(r.line, format!("pair id {p} out of range 0..{k}"))),
                }
            }
        }
        let mut pairs = Vec::with_capacity(k);
        for p in 0..k {
            let (Some(t), Some(r)) = (tx[p], rx[p]) else {
                return Err(perr(line, format!("pair {p} is missing a member")));
            };
            let (workload, w_tx, w_rx) = t.workloads.expect("tx rows carry workloads");
            let distance_m = pair_distance(&t.vehicle, &r.vehicle);
            if !(distance_m > 0.0) {
                return Err(perr(r.line, format!("pair {p} distance is {distance_m} m, must be > 0")));
            }
            pairs.push(PairSlotState { workload, w_tx, w_rx, distance_m });
        }
        let vehicles: Vec<VehicleSnapshot> = group.iter().map(|r| r.vehicle).collect();
        let requesting = vehicles.iter().filter(|v| v.requesting).count() as u32;
        slots.push(SlotState {
            pairs,
            available_hz: config.available_hz(requesting),
            requesting,
            cluster_x_m: vehicles.iter().map(|v| v.x_m).fold(f64::NEG_INFINITY, f64::max),
            coverage: vehicles.iter().map(|v| coverage(v.x_m, config)).collect(),
            vehicles,
        });
    }
    Ok(EpisodeTrace { slots })
}
