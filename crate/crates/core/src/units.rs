//! Unit conversions. Everything past the config boundary is SI.

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * watt.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn mhz_to_hz(mhz: f64) -> f64 {
    mhz * 1e6
}

pub fn hz_to_mhz(hz: f64) -> f64 {
    hz / 1e6
}

pub fn ghz_to_hz(ghz: f64) -> f64 {
    ghz * 1e9
}

pub fn log2(x: f64) -> f64 {
    x.ln() / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_points() {
        assert!((dbm_to_watt(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watt(23.0) - 0.199_526_231_496_887_9).abs() < 1e-15);
        assert!((dbm_to_watt(-104.0) - 3.981_071_705_534_97e-14).abs() < 1e-26);
        assert_eq!(mhz_to_hz(10.5), 10.5e6);
        assert!((log2(8.0) - 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn dbm_round_trip(dbm in -150.0f64..60.0) {
            let back = watt_to_dbm(dbm_to_watt(dbm));
            prop_assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
    }
}
