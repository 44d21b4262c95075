//! Benchmark cooperation policies.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::allocator::SolveOptions;
use crate::env::{set_value, switching_cost, EnvParams, SetValue};
use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::scenario::SlotState;

pub const MAX_BRUTE_FORCE_PAIRS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyKind {
    Random,
    AlwaysCooperate,
    BruteForce,
    Learned(PathBuf),
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Random => f.write_str("random"),
            PolicyKind::AlwaysCooperate => f.write_str("allcp"),
            PolicyKind::BruteForce => f.write_str("brute"),
            PolicyKind::Learned(p) => write!(f, "learned:{}", p.display()),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PolicyKind::Random),
            "allcp" => Ok(PolicyKind::AlwaysCooperate),
            "brute" => Ok(PolicyKind::BruteForce),
            _ => match s.strip_prefix("learned:") {
                Some(p) if !p.is_empty() => Ok(PolicyKind::Learned(PathBuf::from(p))),
                _ => Err(Error::ConfigInvalid(format!(
                    "unknown policy `{s}` (expected random, allcp, brute or learned:<checkpoint>)"
                ))),
            },
        }
    }
}

impl Serialize for PolicyKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PolicyKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn random_policy<R: Rng>(k: usize, rng: &mut R) -> Vec<u8> {
    (0..k).map(|_| u8::from(rng.random_bool(0.5))).collect()
}

pub fn always_cooperate_policy(k: usize) -> Vec<u8> {
    vec![1; k]
}

fn bits_of(mask: usize, k: usize) -> Vec<u8> {
    (0..k).map(|i| ((mask >> i) & 1) as u8).collect()
}

/// Optimal gain of every cooperative subset of one slot, indexed by bitmask (bit k = pair k).
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    k: usize,
    values: Vec<SetValue>,
}

impl GainTable {
    pub fn build(slot: &SlotState, model: &SystemModel, opts: &SolveOptions) -> Result<Self> {
        let k = slot.pairs.len();
        if k > MAX_BRUTE_FORCE_PAIRS {
            return Err(Error::TooManyPairs(k));
        }
        let values = (0..1usize << k)
            .into_par_iter()
            .map(|mask| set_value(slot, &bits_of(mask, k), model, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { k, values })
    }

    pub fn pairs(&self) -> usize {
        self.k
    }

    pub fn value(&self, x: &[u8]) -> SetValue {
        let mask = x.iter().enumerate().fold(0usize, |m, (i, &b)| m | (usize::from(b) << i));
        self.values[mask]
    }

    /// Highest instantaneous reward G* − ω̃·C over feasible candidates.
    /// Ties go to fewer cooperating pairs, then the lexicographically smallest vector.
    pub fn best(&self, x_prev: &[u8], omega_tilde: f64) -> Result<(Vec<u8>, f64)> {
        if x_prev.len() != self.k {
            return Err(Error::LengthMismatch { expected: self.k, got: x_prev.len() });
        }
        let mut order: Vec<Vec<u8>> = (0..1usize << self.k).map(|m| bits_of(m, self.k)).collect();
        order.sort_by(|a, b| {
            let ca = a.iter().filter(|&&v| v == 1).count();
            let cb = b.iter().filter(|&&v| v == 1).count();
            ca.cmp(&cb).then_with(|| a.cmp(b))
        });
        let mut best: Option<(Vec<u8>, f64)> = None;
        for x in order {
            let v = self.value(&x);
            if !v.feasible {
                continue;
            }
            let r = v.gain - omega_tilde * f64::from(switching_cost(x_prev, &x)?);
            if best.as_ref().is_none_or(|(_, b)| r > *b) {
                best = Some((x, r));
            }
        }
        Ok(best.expect("the all-SP vector is always feasible"))
    }
}

/// Step-wise exhaustive search for the best instantaneous reward.
pub fn brute_force_policy(
    slot: &SlotState,
    x_prev: &[u8],
    params: &EnvParams,
    model: &SystemModel,
    opts: &SolveOptions,
) -> Result<Vec<u8>> {
    let table = GainTable::build(slot, model, opts)?;
    Ok(table.best(x_prev, params.omega_tilde)?.0)
}
