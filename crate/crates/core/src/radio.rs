//! Free-space link budget arithmetic and the 802.11ac MCS table.
//!
//! Every link in a flying network is modelled as a line-of-sight free-space
//! channel. With a constant noise floor the whole budget folds into a single
//! constant `K` (dB), so that the SNR at distance `d` is
//!
//! ```text
//! SNR(d) = K + P_T - 20 log10(d)
//! ```
//!
//! and the largest distance that still supports a required SNR is
//! `10^((K + P_T - SNR) / 20)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ParseError, RadioError};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One row of the MCS table: selecting `index` needs at least `min_snr_db`
/// and yields `rate_bps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub index: u8,
    pub min_snr_db: f64,
    pub rate_bps: u64,
}

impl McsEntry {
    pub const fn new(index: u8, min_snr_db: f64, rate_bps: u64) -> Self {
        Self { index, min_snr_db, rate_bps }
    }
}

/// Single spatial stream, 160 MHz channel, 800 ns guard interval.
pub const DEFAULT_MCS_TABLE: [McsEntry; 10] = [
    McsEntry::new(0, 11.0, 58_500_000),
    McsEntry::new(1, 14.0, 117_000_000),
    McsEntry::new(2, 17.0, 175_500_000),
    McsEntry::new(3, 20.0, 234_000_000),
    McsEntry::new(4, 23.0, 351_000_000),
    McsEntry::new(5, 27.0, 468_000_000),
    McsEntry::new(6, 30.0, 526_500_000),
    McsEntry::new(7, 33.0, 585_000_000),
    McsEntry::new(8, 37.0, 702_000_000),
    McsEntry::new(9, 40.0, 780_000_000),
];

/// Channel 50: 160 MHz wide, centred on 5250 MHz.
pub const DEFAULT_FREQUENCY_HZ: f64 = 5.25e9;
pub const DEFAULT_NOISE_POWER_DBM: f64 = -85.0;
pub const DEFAULT_P_MAX_DBM: f64 = 30.0;
pub const DEFAULT_D_MIN_M: f64 = 1.0;

/// Physical-layer parameters shared by every link of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub frequency_hz: f64,
    pub noise_power_dbm: f64,
    pub p_max_dbm: f64,
    pub c_max_bps: u64,
    pub mcs_table: Vec<McsEntry>,
    /// Smallest admissible FAP-FGW separation; the far-field model is not
    /// trusted below it.
    pub d_min_m: f64,
    /// Extra loss added to every link, e.g. for the worse direction of an
    /// asymmetric channel.
    #[serde(default)]
    pub loss_offset_db: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            frequency_hz: DEFAULT_FREQUENCY_HZ,
            noise_power_dbm: DEFAULT_NOISE_POWER_DBM,
            p_max_dbm: DEFAULT_P_MAX_DBM,
            c_max_bps: DEFAULT_MCS_TABLE[9].rate_bps,
            mcs_table: DEFAULT_MCS_TABLE.to_vec(),
            d_min_m: DEFAULT_D_MIN_M,
            loss_offset_db: 0.0,
        }
    }
}

impl RadioConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ParseError> {
        crate::scenario::parse_document(text, origin)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("radio config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), RadioError> {
        let bad = |msg: String| Err(RadioError::InvalidConfig(msg));
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return bad(format!("frequency_hz must be positive, got {}", self.frequency_hz));
        }
        if !(self.p_max_dbm.is_finite() && self.p_max_dbm >= 0.0) {
            return bad(format!("p_max_dbm must be >= 0, got {}", self.p_max_dbm));
        }
        if !self.noise_power_dbm.is_finite() || !self.loss_offset_db.is_finite() {
            return bad("noise_power_dbm and loss_offset_db must be finite".into());
        }
        if !(self.d_min_m.is_finite() && self.d_min_m > 0.0) {
            return bad(format!("d_min_m must be positive, got {}", self.d_min_m));
        }
        let Some(top) = self.mcs_table.last() else {
            return bad("mcs_table is empty".into());
        };
        for pair in self.mcs_table.windows(2) {
            if !(pair[1].min_snr_db > pair[0].min_snr_db && pair[1].rate_bps > pair[0].rate_bps) {
                return bad(format!(
                    "mcs_table must be strictly increasing (index {} -> {})",
                    pair[0].index, pair[1].index
                ));
            }
        }
        if self.c_max_bps != top.rate_bps {
            return bad(format!(
                "c_max_bps ({}) must equal the top MCS rate ({})",
                self.c_max_bps, top.rate_bps
            ));
        }
        Ok(())
    }

    /// The link budget constant `K` with the configured loss offset folded in.
    pub fn effective_k_db(&self) -> f64 {
        link_budget_constant(self) - self.loss_offset_db
    }

    pub fn lowest_snr_db(&self) -> f64 {
        self.mcs_table.first().map_or(f64::NAN, |e| e.min_snr_db)
    }

    pub fn highest_snr_db(&self) -> f64 {
        self.mcs_table.last().map_or(f64::NAN, |e| e.min_snr_db)
    }
}

/// Free-space path loss in dB at distance `d` (m) and carrier `f` (Hz).
pub fn path_loss_db(d: f64, f: f64) -> Result<f64, RadioError> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(RadioError::Domain { what: "distance", value: d });
    }
    if !(f > 0.0) || !f.is_finite() {
        return Err(RadioError::Domain { what: "frequency", value: f });
    }
    Ok(20.0 * d.log10() + 20.0 * f.log10() + 20.0 * (4.0 * PI / SPEED_OF_LIGHT).log10())
}

/// `K = -20 log10(f) - 20 log10(4π/c) - P_noise`, without any loss offset.
pub fn link_budget_constant(config: &RadioConfig) -> f64 {
    -20.0 * config.frequency_hz.log10()
        - 20.0 * (4.0 * PI / SPEED_OF_LIGHT).log10()
        - config.noise_power_dbm
}

/// Radius of the ball around a FAP inside which its link still reaches
/// `snr_req_db` at power `p_t_dbm`.
pub fn max_link_distance(p_t_dbm: f64, snr_req_db: f64, k_db: f64) -> f64 {
    10f64.powf((k_db + p_t_dbm - snr_req_db) / 20.0)
}

/// Lowest MCS whose rate, shared fairly among `n_faps`, still covers
/// `demand_bps`.
pub fn required_snr_for_demand(
    demand_bps: f64,
    n_faps: usize,
    table: &[McsEntry],
) -> Result<(McsEntry, f64), RadioError> {
    if !(demand_bps > 0.0) {
        return Err(RadioError::Domain { what: "demand_bps", value: demand_bps });
    }
    if n_faps == 0 {
        return Err(RadioError::Domain { what: "n_faps", value: 0.0 });
    }
    let needed = demand_bps * n_faps as f64;
    table
        .iter()
        .find(|e| e.rate_bps as f64 >= needed)
        .map(|e| (*e, e.min_snr_db))
        .ok_or(RadioError::InfeasibleDemand {
            needed_bps: needed,
            top_rate_bps: table.last().map_or(0, |e| e.rate_bps),
        })
}

/// Highest MCS entry supported at `snr_db`, if any.
pub fn mcs_for_snr(snr_db: f64, table: &[McsEntry]) -> Option<McsEntry> {
    table.iter().rev().find(|e| e.min_snr_db <= snr_db).copied()
}

/// Data rate at `snr_db`; zero below the lowest threshold.
pub fn rate_for_snr(snr_db: f64, table: &[McsEntry]) -> u64 {
    mcs_for_snr(snr_db, table).map_or(0, |e| e.rate_bps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Friis in linear form, as an independent route to the dB expression.
    fn friis_loss_db(d: f64, f: f64) -> f64 {
        let ratio = 4.0 * PI * d * f / SPEED_OF_LIGHT;
        10.0 * (ratio * ratio).log10()
    }

    #[test]
    fn path_loss_cancels_at_unit_wavenumber() {
        let f = SPEED_OF_LIGHT / (4.0 * PI);
        assert_abs_diff_eq!(path_loss_db(1.0, f).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn path_loss_reference_values() {
        // 40.05 dB at 2.4 GHz / 1 m, plus the frequency ratio.
        let at_24 = friis_loss_db(1.0, 2.4e9);
        assert_abs_diff_eq!(at_24, 40.05, epsilon = 0.01);
        let expected = at_24 + 20.0 * (5.25f64 / 2.4).log10();
        assert_abs_diff_eq!(path_loss_db(1.0, 5.25e9).unwrap(), expected, epsilon = 1e-9);
        assert_abs_diff_eq!(path_loss_db(1.0, 5.25e9).unwrap(), 46.85, epsilon = 0.01);
        assert_abs_diff_eq!(path_loss_db(10.0, 5.25e9).unwrap(), 66.85, epsilon = 0.01);
    }

    #[test]
    fn path_loss_rejects_non_positive_inputs() {
        assert!(matches!(path_loss_db(0.0, 5e9), Err(RadioError::Domain { what: "distance", .. })));
        assert!(matches!(path_loss_db(1.0, -1.0), Err(RadioError::Domain { what: "frequency", .. })));
    }

    #[test]
    fn link_budget_constant_examples() {
        let mut cfg = RadioConfig::default();
        assert_abs_diff_eq!(link_budget_constant(&cfg), 38.15, epsilon = 0.01);
        let thermal = -174.0 + 10.0 * 160e6f64.log10();
        assert_abs_diff_eq!(thermal, -91.96, epsilon = 0.01);
        cfg.noise_power_dbm = thermal;
        assert_abs_diff_eq!(link_budget_constant(&cfg), 45.11, epsilon = 0.01);
        cfg.frequency_hz = SPEED_OF_LIGHT / (4.0 * PI);
        cfg.noise_power_dbm = 0.0;
        assert_abs_diff_eq!(link_budget_constant(&cfg), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn max_link_distance_examples() {
        assert_abs_diff_eq!(max_link_distance(0.0, 11.0, 38.15), 22.78, epsilon = 0.01);
        assert_abs_diff_eq!(max_link_distance(11.0 - 38.15, 11.0, 38.15), 1.0, epsilon = 1e-12);
        let r = max_link_distance(0.0, 40.0, 38.15);
        assert_abs_diff_eq!(r, 0.808, epsilon = 1e-3);
        assert!(r < DEFAULT_D_MIN_M);
    }

    #[test]
    fn demand_to_mcs() {
        let t = &DEFAULT_MCS_TABLE;
        let (e, snr) = required_snr_for_demand(58.5e6, 1, t).unwrap();
        assert_eq!((e.index, snr), (0, 11.0));
        let (e, snr) = required_snr_for_demand(100e6, 4, t).unwrap();
        assert_eq!((e.index, e.rate_bps, snr), (5, 468_000_000, 27.0));
        assert!(matches!(
            required_snr_for_demand(200e6, 4, t),
            Err(RadioError::InfeasibleDemand { .. })
        ));
        assert!(required_snr_for_demand(0.0, 4, t).is_err());
        assert!(required_snr_for_demand(1.0, 0, t).is_err());
    }

    #[test]
    fn snr_to_rate() {
        let t = &DEFAULT_MCS_TABLE;
        assert_eq!(rate_for_snr(40.0, t), 780_000_000);
        assert_eq!(rate_for_snr(10.99, t), 0);
        assert_eq!(rate_for_snr(27.5, t), 468_000_000);
        for e in t {
            assert_eq!(rate_for_snr(e.min_snr_db, t), e.rate_bps);
        }
    }

    #[test]
    fn default_config_is_valid() {
        RadioConfig::default().validate().unwrap();
        let mut cfg = RadioConfig::default();
        cfg.c_max_bps = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = RadioConfig::default();
        cfg.mcs_table.swap(2, 3);
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn link_budget_formulations_agree(d in 0.01f64..5000.0, p_t in -20.0f64..40.0,
                                          f in 1e8f64..1e11, noise in -110.0f64..-60.0) {
            let cfg = RadioConfig { frequency_hz: f, noise_power_dbm: noise, ..RadioConfig::default() };
            let snr_chain = p_t - path_loss_db(d, f).unwrap() - noise;
            let snr_k = link_budget_constant(&cfg) + p_t - 20.0 * d.log10();
            prop_assert!((snr_chain - snr_k).abs() <= 1e-9);
        }

        #[test]
        fn path_loss_monotone_and_20db_per_decade(d in 0.01f64..1000.0, f in 1e8f64..1e11) {
            let a = path_loss_db(d, f).unwrap();
            prop_assert!(path_loss_db(d * 1.001, f).unwrap() > a);
            prop_assert!(path_loss_db(d, f * 1.001).unwrap() > a);
            prop_assert!((path_loss_db(d * 10.0, f).unwrap() - a - 20.0).abs() < 1e-9);
        }

        #[test]
        fn twenty_db_scales_radius_tenfold(p in -50.0f64..50.0, s in 0.0f64..50.0, k in 0.0f64..60.0) {
            let r = max_link_distance(p, s, k);
            let r20 = max_link_distance(p + 20.0, s, k);
            prop_assert!((r20 / r - 10.0).abs() < 1e-9);
        }

        #[test]
        fn rate_is_monotone_step(a in 0.0f64..50.0, b in 0.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(rate_for_snr(lo, &DEFAULT_MCS_TABLE) <= rate_for_snr(hi, &DEFAULT_MCS_TABLE));
        }

        #[test]
        fn demand_round_trip_covers_demand(demand in 1.0f64..780e6, n in 1usize..25) {
            if let Ok((e, snr)) = required_snr_for_demand(demand, n, &DEFAULT_MCS_TABLE) {
                prop_assert_eq!(rate_for_snr(snr, &DEFAULT_MCS_TABLE), e.rate_bps);
                prop_assert!(e.rate_bps as f64 >= demand * n as f64);
            } else {
                prop_assert!(demand * n as f64 > 780e6);
            }
        }
    }
}
