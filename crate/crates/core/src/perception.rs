//! Per-object DNN cost model, CPU frequency thresholds, computing energy and
//! the rate-frequency performance regions of a cooperative pair.
//!
//! Workloads are real-valued here even though the dynamics only produce
//! integers: the region analysis treats `W` continuously.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-object DNN computing constants.
///
/// `delta1..delta4` are the cycle counts of feature extraction, feature
/// fusion, fast inference and full inference. `rho` / `rho_tilde` are the
/// early-exit probabilities of the default and the feature-fusion model, and
/// `feature_bits` is the size of the transmitted feature data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnnProfile {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub rho: f64,
    pub rho_tilde: f64,
    pub feature_bits: f64,
}

impl Default for DnnProfile {
    fn default() -> Self {
        Self {
            delta1: 4e6,
            delta2: 1e3,
            delta3: 3.1e5,
            delta4: 7.7e7,
            rho: 0.3,
            rho_tilde: 0.6,
            feature_bits: 0.29e6,
        }
    }
}

/// Aggregates derived from a [`DnnProfile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCosts {
    /// Average cycles per object with the default model (δ).
    pub delta: f64,
    /// Average cycles per object with the feature-fusion model, both vehicles (δ̃).
    pub delta_tilde: f64,
    /// Cycles on the delay-critical path of a fused object (ĥ).
    pub h_hat: f64,
    /// Rate constant φ = sqrt(2δ³ / (ĥ² δ̃)).
    pub phi: f64,
    /// Cycles saved per shared object by cooperating, 2δ − δ̃.
    pub savings_per_object: f64,
    /// Copy of the feature size so downstream code needs only the costs.
    pub feature_bits: f64,
    /// Cycles of the early-exit difference (ρ̃ − ρ)δ₄ − δ₂ = δ − ĥ.
    pub exit_gain: f64,
}

impl DerivedCosts {
    /// sqrt(2δ/δ̃), the ratio f_P / f_D.
    pub fn zero_gain_ratio(&self) -> f64 {
        (2.0 * self.delta / self.delta_tilde).sqrt()
    }
}

/// Per-slot deadline, DVFS cap and energy coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionParams {
    /// Classification deadline Δ in seconds.
    pub deadline_s: f64,
    /// Maximum CPU frequency f_M in Hz.
    pub f_max_hz: f64,
    /// Energy coefficient κ (J per cycle per Hz²).
    pub kappa: f64,
}

impl Default for PerceptionParams {
    fn default() -> Self {
        Self {
            deadline_s: 0.1,
            f_max_hz: 8e9,
            kappa: 1e-28,
        }
    }
}

impl PerceptionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.deadline_s > 0.0 && self.f_max_hz > 0.0 && self.kappa > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "perception parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Continuous workload cap W_M = f_M Δ / δ.
    pub fn workload_cap(&self, costs: &DerivedCosts) -> f64 {
        self.f_max_hz * self.deadline_s / costs.delta
    }

    /// Workload at which f_P reaches f_M; above it the pair is in the high regime.
    pub fn regime_boundary(&self, costs: &DerivedCosts) -> f64 {
        self.workload_cap(costs) / costs.zero_gain_ratio()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// Delay violated.
    R1,
    /// Delay met but f > f_M.
    R2,
    /// Feasible scale-up with negative gain (low regime only).
    R3,
    /// Feasible scale-up with non-negative gain.
    R4,
    /// Default frequency or scale-down, positive gain.
    R5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Standalone,
    Cooperative,
}

/// Frequencies and minimum rates of one pair at a given shared workload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub workload: f64,
    pub f_d: f64,
    pub f_p: f64,
    pub f_0: f64,
    pub regime: Regime,
    pub r_m: f64,
    pub r_p: f64,
    pub r_d: f64,
}

pub fn derive_costs(profile: &DnnProfile) -> Result<DerivedCosts> {
    let p = profile;
    for (name, v) in [
        ("delta1", p.delta1),
        ("delta2", p.delta2),
        ("delta3", p.delta3),
        ("delta4", p.delta4),
    ] {
        if !(v > 0.0) {
            return Err(Error::DegenerateProfile(format!("{name} = {v} must be > 0")));
        }
    }
    if !(p.feature_bits > 0.0) {
        return Err(Error::DegenerateProfile(format!(
            "feature_bits = {} must be > 0",
            p.feature_bits
        )));
    }
    if !(0.0 < p.rho && p.rho < p.rho_tilde && p.rho_tilde < 1.0) {
        return Err(Error::DegenerateProfile(format!(
            "need 0 < rho ({}) < rho_tilde ({}) < 1",
            p.rho, p.rho_tilde
        )));
    }
    if p.delta2 >= p.delta3.min(p.delta4) {
        warn!(
            "feature fusion cost delta2 = {} is not small against delta3/delta4",
            p.delta2
        );
    }

    let delta = p.delta1 + p.delta3 + (1.0 - p.rho) * p.delta4;
    let delta_tilde = 2.0 * p.delta1 + p.delta2 + p.delta3 + (1.0 - p.rho_tilde) * p.delta4;
    let h_hat = p.delta1 + p.delta2 + p.delta3 + (1.0 - p.rho_tilde) * p.delta4;
    let savings = p.delta3 + (1.0 + p.rho_tilde - 2.0 * p.rho) * p.delta4 - p.delta2;
    if !(savings > 0.0) {
        return Err(Error::NonPositiveSavings(savings));
    }
    let phi = (2.0 * delta.powi(3) / (h_hat * h_hat * delta_tilde)).sqrt();
    if !(phi > 1.0) {
        return Err(Error::DegenerateProfile(format!("phi = {phi} must exceed 1")));
    }
    Ok(DerivedCosts {
        delta,
        delta_tilde,
        h_hat,
        phi,
        savings_per_object: savings,
        feature_bits: p.feature_bits,
        exit_gain: (p.rho_tilde - p.rho) * p.delta4 - p.delta2,
    })
}

/// Default-mode frequency f_D = δW/Δ for any workload (shared or individual).
pub fn default_frequency(workload: f64, costs: &DerivedCosts, params: &PerceptionParams) -> f64 {
    costs.delta * workload / params.deadline_s
}

pub fn frequencies_and_thresholds(
    workload: f64,
    costs: &DerivedCosts,
    params: &PerceptionParams,
) -> Result<Thresholds> {
    let cap = params.workload_cap(costs);
    if !(workload > 0.0) || workload > cap {
        return Err(Error::WorkloadExceedsCap { workload, cap });
    }
    let dl = params.deadline_s;
    let w = costs.feature_bits;
    let f_d = default_frequency(workload, costs, params);
    let f_p = costs.zero_gain_ratio() * f_d;
    let regime = if workload <= params.regime_boundary(costs) {
        Regime::Low
    } else {
        Regime::High
    };
    let phi = costs.phi;
    Ok(Thresholds {
        workload,
        f_d,
        f_p,
        f_0: f_p.min(params.f_max_hz),
        regime,
        r_m: w / (dl / workload - costs.h_hat / params.f_max_hz),
        r_p: workload * w * phi / ((phi - 1.0) * dl),
        r_d: workload * w * costs.delta / (costs.exit_gain * dl),
    })
}

/// Energy saved by processing `workload` shared objects cooperatively at
/// frequency `freq` instead of stand-alone at f_D. Negative above f_P.
pub fn computing_gain(
    workload: f64,
    freq: f64,
    costs: &DerivedCosts,
    params: &PerceptionParams,
) -> f64 {
    let f_d = default_frequency(workload, costs, params);
    params.kappa * workload * (2.0 * costs.delta * f_d * f_d - costs.delta_tilde * freq * freq)
}

/// Individual workloads of the two pair members.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IndividualLoad {
    pub tx: f64,
    pub rx: f64,
}

/// Total computing energy of all four CPU cores of a pair.
///
/// `freq` is the shared-object frequency in cooperative mode and is ignored
/// in stand-alone mode, where the shared core runs at f_D.
pub fn pair_energy(
    workload: f64,
    individual: IndividualLoad,
    freq: f64,
    mode: Mode,
    costs: &DerivedCosts,
    params: &PerceptionParams,
) -> f64 {
    let k = params.kappa;
    let shared = match mode {
        Mode::Cooperative => freq * freq * costs.delta_tilde * workload,
        Mode::Standalone => {
            let f_d = default_frequency(workload, costs, params);
            f_d * f_d * 2.0 * costs.delta * workload
        }
    };
    let own = |load: f64| {
        let f = default_frequency(load, costs, params);
        f * f * costs.delta * load
    };
    k * (shared + own(individual.tx) + own(individual.rx))
}

/// Per-object delay of a fused object at rate `rate` and frequency `freq`.
pub fn fused_delay(rate: f64, freq: f64, costs: &DerivedCosts) -> f64 {
    costs.feature_bits / rate + costs.h_hat / freq
}

pub fn classify_region(
    rate: f64,
    freq: f64,
    workload: f64,
    costs: &DerivedCosts,
    params: &PerceptionParams,
) -> Result<Region> {
    let t = frequencies_and_thresholds(workload, costs, params)?;
    // Points computed to lie on the delay curve may land a few ulps above it.
    let region = if fused_delay(rate, freq, costs) > params.deadline_s / workload * (1.0 + 1e-12) {
        Region::R1
    } else if freq > params.f_max_hz {
        Region::R2
    } else if freq > t.f_p {
        Region::R3
    } else if freq > t.f_d {
        Region::R4
    } else {
        Region::R5
    };
    Ok(region)
}
