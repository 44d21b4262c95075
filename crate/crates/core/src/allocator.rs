//! Per-slot optimal bandwidth/CPU allocation for a set of cooperative pairs.
//!
//! Maximizing the total computing gain with every pair on its delay curve
//! reduces to
//!
//! ```text
//! min Σ W_k f_k²   s.t.  f_k ≤ f0_k,   h(f) = Σ c_k / (b_k − ĥ/f_k) − 1 ≤ 0
//! ```
//!
//! with `b_k = Δ/W_k` and `c_k = w / (B log2(1 + SNR_k))`. The problem is
//! convex and the bandwidth constraint is active at the optimum, so the
//! solver bisects on its single multiplier ν. For a candidate ν each pair
//! takes the root of `S(f, ν) = ν c ĥ / (b f − ĥ)² − 2 W f`, clamped to its cap.

use serde::{Deserialize, Serialize};

use crate::channel::LinkState;
use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::perception::{computing_gain, frequencies_and_thresholds};

/// Slot-level inputs of one cooperating pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairInput {
    #[serde(rename = "W")]
    pub workload: f64,
    #[serde(rename = "D_m")]
    pub distance_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCoefficients {
    /// Per-object delay budget Δ/W (s).
    pub b: f64,
    /// Transmission time of one feature at full bandwidth (s).
    pub c: f64,
    pub workload: f64,
    /// Frequency cap min(f_P, f_M) (Hz).
    pub f0: f64,
    /// Domain floor ĥ/b (Hz); the rate is infinite there.
    pub h_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Optimal,
    TightAtCap,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub verdict: Verdict,
    pub f_star: Vec<f64>,
    pub beta_star: Vec<f64>,
    pub rate_star: Vec<f64>,
    pub gain_total: f64,
    pub gain_per_pair: Vec<f64>,
    pub nu_star: f64,
    pub lambda_star: Vec<f64>,
    pub iterations: usize,
    /// h at the returned point (h(f⁰) when infeasible).
    pub h_residual: f64,
}

impl AllocationResult {
    pub fn is_feasible(&self) -> bool {
        self.verdict != Verdict::Infeasible
    }

    fn infeasible(h_residual: f64) -> Self {
        Self {
            verdict: Verdict::Infeasible,
            f_star: Vec::new(),
            beta_star: Vec::new(),
            rate_star: Vec::new(),
            gain_total: 0.0,
            gain_per_pair: Vec::new(),
            nu_star: 0.0,
            lambda_star: Vec::new(),
            iterations: 0,
            h_residual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Bisection stops once −stop_band < h ≤ 0.
    pub stop_band: f64,
    /// |h(f⁰)| at or below this counts as tight at the caps.
    pub tight_tol: f64,
    pub max_iterations: usize,
    /// Relative tolerance of the per-pair root search.
    pub root_rel_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            stop_band: 1e-4,
            tight_tol: 1e-12,
            max_iterations: 200,
            root_rel_tol: 1e-10,
        }
    }
}

pub fn build_coefficients(
    pairs: &[PairInput],
    available_hz: f64,
    model: &SystemModel,
) -> Result<Vec<PairCoefficients>> {
    if !(available_hz > 0.0) {
        return Err(Error::ZeroBandwidth(available_hz));
    }
    let h_hat = model.costs.h_hat;
    pairs
        .iter()
        .map(|p| {
            let t = frequencies_and_thresholds(p.workload, &model.costs, &model.perception)?;
            let link = LinkState::new(p.distance_m, &model.radio)?;
            let b = model.perception.deadline_s / p.workload;
            let c = model.costs.feature_bits
                / (available_hz * model.radio.spectral_efficiency(&link));
            Ok(PairCoefficients {
                b,
                c,
                workload: p.workload,
                f0: t.f_0,
                h_floor: h_hat / b,
            })
        })
        .collect()
}

/// Bandwidth share a pair needs to sit on its delay curve at frequency `f`.
pub fn required_share(f: f64, coeff: &PairCoefficients, h_hat: f64) -> f64 {
    coeff.c / (coeff.b - h_hat / f)
}

pub fn constraint_h(f: &[f64], coeffs: &[PairCoefficients], h_hat: f64) -> Result<f64> {
    if f.len() != coeffs.len() {
        return Err(Error::LengthMismatch {
            expected: coeffs.len(),
            got: f.len(),
        });
    }
    let mut sum = 0.0;
    for (k, (&fk, ck)) in f.iter().zip(coeffs).enumerate() {
        if !(fk > ck.h_floor) {
            return Err(Error::DomainViolation {
                pair: k,
                freq: fk,
                floor: ck.h_floor,
            });
        }
        sum += required_share(fk, ck, h_hat);
    }
    Ok(sum - 1.0)
}

/// S(f, ν) = ν c ĥ / (b f − ĥ)² − 2 W f, decreasing in f on f > ĥ/b.
pub fn s_function(f: f64, nu: f64, coeff: &PairCoefficients, h_hat: f64) -> f64 {
    let gap = coeff.b * f - h_hat;
    nu * coeff.c * h_hat / (gap * gap) - 2.0 * coeff.workload * f
}

/// Multiplier at which the root of S sits exactly at frequency `f`.
pub fn nu_for_root(f: f64, coeff: &PairCoefficients, h_hat: f64) -> f64 {
    let gap = coeff.b * f - h_hat;
    2.0 * coeff.workload * f * gap * gap / (coeff.c * h_hat)
}

/// Root f¹(ν) of S on the open domain, by bisection. ν = 0 gives the floor.
pub fn s_root(nu: f64, coeff: &PairCoefficients, h_hat: f64) -> f64 {
    s_root_tol(nu, coeff, h_hat, SolveOptions::default().root_rel_tol)
}

fn s_root_tol(nu: f64, coeff: &PairCoefficients, h_hat: f64, rel_tol: f64) -> f64 {
    let floor = coeff.h_floor;
    if nu <= 0.0 {
        return floor;
    }
    let mut lo = floor * (1.0 + 1e-12);
    if s_function(lo, nu, coeff, h_hat) <= 0.0 {
        return lo;
    }
    let mut hi = 2.0 * floor;
    for _ in 0..1100 {
        if s_function(hi, nu, coeff, h_hat) < 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    // Tolerance is relative to the distance from the pole, which S is sensitive to.
    for _ in 0..200 {
        if hi - lo <= rel_tol * (lo - floor) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if s_function(mid, nu, coeff, h_hat) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn objective(f: &[f64], coeffs: &[PairCoefficients]) -> f64 {
    f.iter().zip(coeffs).map(|(fk, c)| c.workload * fk * fk).sum()
}

/// L(f, λ, ν) = Σ W f² + Σ λ (f − f0) + ν h(f).
pub fn lagrangian(
    f: &[f64],
    lambda: &[f64],
    nu: f64,
    coeffs: &[PairCoefficients],
    h_hat: f64,
) -> Result<f64> {
    let h = constraint_h(f, coeffs, h_hat)?;
    let slack: f64 = f
        .iter()
        .zip(lambda)
        .zip(coeffs)
        .map(|((fk, lk), c)| lk * (fk - c.f0))
        .sum();
    Ok(objective(f, coeffs) + slack + nu * h)
}

pub fn solve(
    coeffs: &[PairCoefficients],
    model: &SystemModel,
    opts: &SolveOptions,
) -> Result<AllocationResult> {
    if coeffs.is_empty() {
        return Err(Error::EmptyCooperativeSet);
    }
    let h_hat = model.costs.h_hat;
    if coeffs.iter().any(|c| !(c.f0 > c.h_floor)) {
        return Ok(AllocationResult::infeasible(f64::INFINITY));
    }
    let f0: Vec<f64> = coeffs.iter().map(|c| c.f0).collect();
    let h0 = constraint_h(&f0, coeffs, h_hat)?;
    if h0 > opts.tight_tol {
        return Ok(AllocationResult::infeasible(h0));
    }
    if h0.abs() <= opts.tight_tol {
        // Every cap binds; any ν making all roots exceed their caps works.
        let nu = coeffs
            .iter()
            .map(|c| nu_for_root(c.f0, c, h_hat))
            .fold(0.0, f64::max);
        return Ok(finish(Verdict::TightAtCap, f0, nu, 0, h0, coeffs, model, h_hat));
    }

    let mut nu_lo = 0.0;
    let mut nu_hi = coeffs
        .iter()
        .map(|c| nu_for_root(c.f0, c, h_hat))
        .fold(0.0, f64::max);
    let mut f = vec![0.0; coeffs.len()];
    let mut last_h = h0;
    for it in 1..=opts.max_iterations {
        let nu = 0.5 * (nu_lo + nu_hi);
        for (fk, c) in f.iter_mut().zip(coeffs) {
            *fk = s_root_tol(nu, c, h_hat, opts.root_rel_tol).min(c.f0);
        }
        let h = match constraint_h(&f, coeffs, h_hat) {
            Ok(h) => h,
            // Roots pinned to the floor: far too little bandwidth at this ν.
            Err(Error::DomainViolation { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        last_h = h;
        if h <= 0.0 && h > -opts.stop_band {
            return Ok(finish(Verdict::Optimal, f, nu, it, h, coeffs, model, h_hat));
        }
        if h > 0.0 {
            nu_lo = nu;
        } else {
            nu_hi = nu;
        }
        if nu_hi - nu_lo <= f64::EPSILON * nu_hi {
            break;
        }
    }
    Err(Error::BisectionStall {
        iterations: opts.max_iterations,
        h: last_h,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    verdict: Verdict,
    f: Vec<f64>,
    nu: f64,
    iterations: usize,
    h: f64,
    coeffs: &[PairCoefficients],
    model: &SystemModel,
    h_hat: f64,
) -> AllocationResult {
    let beta: Vec<f64> = f
        .iter()
        .zip(coeffs)
        .map(|(&fk, c)| required_share(fk, c, h_hat))
        .collect();
    let rate = f
        .iter()
        .zip(coeffs)
        .map(|(&fk, c)| model.costs.feature_bits / (c.b - h_hat / fk))
        .collect();
    let gains: Vec<f64> = f
        .iter()
        .zip(coeffs)
        .map(|(&fk, c)| computing_gain(c.workload, fk, &model.costs, &model.perception))
        .collect();
    // λ_k is positive only for pairs pinned at their cap.
    let lambda = f
        .iter()
        .zip(coeffs)
        .map(|(&fk, c)| {
            if fk >= c.f0 {
                s_function(fk, nu, c, h_hat).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    AllocationResult {
        verdict,
        gain_total: gains.iter().sum(),
        gain_per_pair: gains,
        f_star: f,
        beta_star: beta,
        rate_star: rate,
        nu_star: nu,
        lambda_star: lambda,
        iterations,
        h_residual: h,
    }
}

/// Coefficients plus solve for one cooperative set.
pub fn allocate(
    pairs: &[PairInput],
    available_hz: f64,
    model: &SystemModel,
    opts: &SolveOptions,
) -> Result<AllocationResult> {
    let coeffs = build_coefficients(pairs, available_hz, model)?;
    solve(&coeffs, model, opts)
}
