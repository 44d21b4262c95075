//! V2V sidelink: highway path loss and achievable rate. Large-scale fading only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_linear, dbm_to_watt, log2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    /// Center frequency in GHz.
    pub fc_ghz: f64,
    /// Transmit power in dBm.
    pub p_tx_dbm: f64,
    /// Received noise power in dBm.
    pub noise_dbm: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            fc_ghz: 6.0,
            p_tx_dbm: 23.0,
            noise_dbm: -104.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.fc_ghz > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "radio center frequency must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn snr(&self, link: &LinkState) -> f64 {
        dbm_to_watt(self.p_tx_dbm) * link.gain / dbm_to_watt(self.noise_dbm)
    }

    /// Bits per second per Hz at full allocation, log2(1 + p g / σ²).
    pub fn spectral_efficiency(&self, link: &LinkState) -> f64 {
        log2(1.0 + self.snr(link))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub distance_m: f64,
    /// Linear channel power gain.
    pub gain: f64,
}

impl LinkState {
    pub fn new(distance_m: f64, radio: &RadioParams) -> Result<Self> {
        let loss = path_loss_db(distance_m, radio.fc_ghz)?;
        Ok(Self {
            distance_m,
            gain: db_to_linear(-loss),
        })
    }
}

/// 3GPP highway V2V path loss: 32.4 + 20 log10(D) + 20 log10(f_c).
pub fn path_loss_db(distance_m: f64, fc_ghz: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::NonPositiveDistance(distance_m));
    }
    if !(fc_ghz > 0.0) {
        return Err(Error::ConfigInvalid(format!("center frequency {fc_ghz} GHz")));
    }
    Ok(32.4 + 20.0 * distance_m.log10() + 20.0 * fc_ghz.log10())
}

/// Average rate of a pair holding fraction `beta` of `available_hz`.
pub fn link_rate(beta: f64, available_hz: f64, link: &LinkState, radio: &RadioParams) -> f64 {
    beta * available_hz * radio.spectral_efficiency(link)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn path_loss_examples() {
        assert!((path_loss_db(20.0, 6.0).unwrap() - 73.984).abs() < 1e-3);
        assert_relative_eq!(path_loss_db(1.0, 1.0).unwrap(), 32.4, max_relative = 1e-15);
        assert!((path_loss_db(100.0, 6.0).unwrap() - 87.963).abs() < 1e-3);
        assert!(matches!(path_loss_db(0.0, 6.0), Err(Error::NonPositiveDistance(_))));
        assert!(matches!(path_loss_db(-3.0, 6.0), Err(Error::NonPositiveDistance(_))));
    }

    #[test]
    fn rate_at_20m() {
        let radio = RadioParams::default();
        let link = LinkState::new(20.0, &radio).unwrap();
        // Step by step in watts: 23 dBm ≈ 0.1995 W, -104 dBm ≈ 3.981e-14 W.
        let loss_lin = 10f64.powf(-(32.4 + 20.0 * 20f64.log10() + 20.0 * 6f64.log10()) / 10.0);
        let snr = 0.199_526_231_5 * loss_lin / 3.981_071_706e-14;
        assert!((snr - 2.003e5).abs() < 0.001e5, "snr = {snr}");
        assert_relative_eq!(radio.snr(&link), snr, max_relative = 1e-9);
        assert!((radio.spectral_efficiency(&link) - 17.61).abs() < 0.005);
        let r = link_rate(1.0, 10.5e6, &link, &radio);
        assert!((r - 184.9e6).abs() < 0.1e6, "rate = {r}");
        assert_eq!(link_rate(0.0, 10.5e6, &link, &radio), 0.0);
        assert_relative_eq!(link_rate(0.5, 10.5e6, &link, &radio), r / 2.0, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn rate_decreases_with_distance(d in 1.0f64..500.0, dd in 0.01f64..100.0, beta in 0.01f64..1.0) {
            let radio = RadioParams::default();
            let near = LinkState::new(d, &radio).unwrap();
            let far = LinkState::new(d + dd, &radio).unwrap();
            prop_assert!(link_rate(beta, 1e7, &near, &radio) > link_rate(beta, 1e7, &far, &radio));
        }

        #[test]
        fn rate_linear_in_beta_and_bandwidth(d in 1.0f64..500.0, beta in 0.0f64..1.0, b in 1e5f64..2e7, s in 0.1f64..3.0) {
            let radio = RadioParams::default();
            let link = LinkState::new(d, &radio).unwrap();
            let r = link_rate(beta, b, &link, &radio);
            prop_assert!((link_rate(beta, b * s, &link, &radio) - s * r).abs() <= 1e-12 * (s * r).max(1.0));
            prop_assert!((link_rate(beta * s.min(1.0), b, &link, &radio) - s.min(1.0) * r).abs() <= 1e-12 * r.max(1.0));
        }
    }
}
