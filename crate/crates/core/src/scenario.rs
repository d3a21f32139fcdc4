//! Venues, FAP sets, reproducible random generation and the JSON file format.
//!
//! # Generation algorithm
//!
//! [`generate`] is fully determined by `(n_faps, seed, venue, radio)`:
//!
//! 1. A ChaCha8 stream is seeded with `ChaCha8Rng::seed_from_u64(seed)`.
//! 2. FAP positions are drawn one at a time. Each candidate takes three
//!    uniform `f64` draws in `[0, 1)` (x, then y, then z) scaled onto the
//!    venue box. A candidate closer than `d_min_m` to an already accepted FAP
//!    is rejected; 10 000 consecutive rejections abort with
//!    [`ScenarioError::PlacementExhausted`].
//! 3. Once all positions are fixed, each FAP in id order draws an MCS entry
//!    uniformly from the radio table with `gen_range(0..len)`. Its required
//!    SNR is the entry's threshold and its demand is the fair share
//!    `floor(rate / n_faps)`.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ParseError, ScenarioError};
use crate::geometry::{BoundingBox, Point3};
use crate::radio::RadioConfig;

pub const MAX_CONSECUTIVE_REJECTIONS: usize = 10_000;

/// Venue dimensions in metres; coordinates span `[-X/2, X/2]` on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Venue {
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
}

impl Venue {
    pub const fn new(x_m: f64, y_m: f64, z_m: f64) -> Self {
        Self { x_m, y_m, z_m }
    }

    pub fn bounds(&self) -> BoundingBox {
        BoundingBox::centered(self.x_m, self.y_m, self.z_m)
    }

    fn check(&self) -> Result<(), Axis> {
        for (axis, v) in [(Axis::X, self.x_m), (Axis::Y, self.y_m), (Axis::Z, self.z_m)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(axis);
            }
        }
        Ok(())
    }
}

impl Default for Venue {
    /// 15 m long and wide, 20 m high.
    fn default() -> Self {
        Self::new(15.0, 15.0, 20.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// A flying access point and the traffic it pushes towards the gateway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fap {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub demand_bps: u64,
    pub required_snr_db: f64,
}

impl Fap {
    pub fn position(&self) -> Point3 {
        Point3::new(self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub venue: Venue,
    pub radio: RadioConfig,
    pub seed: u64,
    pub snapshot_id: u64,
    pub faps: Vec<Fap>,
}

/// A broken scenario invariant. Each invariant maps to exactly one variant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvalidVenue { axis: Axis },
    InvalidRadio { reason: String },
    NoFaps,
    DuplicateId { id: u32 },
    BoundsViolation { fap: u32, axis: Axis },
    NonPositiveDemand { fap: u32 },
    SnrOutOfRange { fap: u32, snr_db: f64 },
    SeparationViolation { a: u32, b: u32, distance_m: f64 },
    AggregateCapacityViolation { total_bps: u128, c_max_bps: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidVenue { axis } => write!(f, "venue dimension {axis} must be positive"),
            Violation::InvalidRadio { reason } => write!(f, "radio: {reason}"),
            Violation::NoFaps => write!(f, "scenario has no FAPs"),
            Violation::DuplicateId { id } => write!(f, "FAP id {id} is used more than once"),
            Violation::BoundsViolation { fap, axis } => write!(f, "FAP {fap} lies outside the venue on {axis}"),
            Violation::NonPositiveDemand { fap } => write!(f, "FAP {fap} has zero demand"),
            Violation::SnrOutOfRange { fap, snr_db } => {
                write!(f, "FAP {fap} required SNR {snr_db} dB is outside the MCS table range")
            }
            Violation::SeparationViolation { a, b, distance_m } => {
                write!(f, "FAPs {a} and {b} are only {distance_m} m apart")
            }
            Violation::AggregateCapacityViolation { total_bps, c_max_bps } => {
                write!(f, "aggregate demand {total_bps} bit/s exceeds capacity {c_max_bps} bit/s")
            }
        }
    }
}

/// Draws a random scenario; see the module docs for the exact algorithm.
pub fn generate(n_faps: usize, seed: u64, venue: Venue, radio: RadioConfig) -> Result<Scenario, ScenarioError> {
    if n_faps == 0 {
        return Err(ScenarioError::NoFaps);
    }
    venue.check().map_err(|axis| ScenarioError::InvalidVenue(format!("dimension {axis} must be positive")))?;
    radio.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = venue.bounds();
    let extent = bounds.extent();
    let mut positions: Vec<Point3> = Vec::with_capacity(n_faps);
    while positions.len() < n_faps {
        let mut rejections = 0;
        loop {
            let u: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let candidate = Point3::new(
                bounds.min.x + extent.x * u[0],
                bounds.min.y + extent.y * u[1],
                bounds.min.z + extent.z * u[2],
            );
            if positions.iter().all(|p| p.distance(candidate) >= radio.d_min_m) {
                positions.push(candidate);
                break;
            }
            rejections += 1;
            if rejections >= MAX_CONSECUTIVE_REJECTIONS {
                return Err(ScenarioError::PlacementExhausted {
                    placed_so_far: positions.len(),
                    attempts: rejections,
                });
            }
        }
    }

    let faps = positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let entry = radio.mcs_table[rng.gen_range(0..radio.mcs_table.len())];
            Fap {
                id: i as u32,
                x: p.x,
                y: p.y,
                z: p.z,
                demand_bps: (entry.rate_bps / n_faps as u64).max(1),
                required_snr_db: entry.min_snr_db,
            }
        })
        .collect();

    Ok(Scenario { venue, radio, seed, snapshot_id: 0, faps })
}

/// Lists every broken invariant; empty means the scenario is valid.
pub fn validate(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Err(axis) = s.venue.check() {
        out.push(Violation::InvalidVenue { axis });
    }
    if let Err(e) = s.radio.validate() {
        out.push(Violation::InvalidRadio { reason: e.to_string() });
    }
    if s.faps.is_empty() {
        out.push(Violation::NoFaps);
    }

    let mut seen = std::collections::BTreeSet::new();
    for fap in &s.faps {
        if !seen.insert(fap.id) {
            out.push(Violation::DuplicateId { id: fap.id });
        }
    }

    let bounds = s.venue.bounds();
    let (lo_snr, hi_snr) = (s.radio.lowest_snr_db(), s.radio.highest_snr_db());
    for fap in &s.faps {
        let p = fap.position();
        for (k, axis) in [Axis::X, Axis::Y, Axis::Z].into_iter().enumerate() {
            if !(p[k] >= bounds.min[k] && p[k] <= bounds.max[k]) {
                out.push(Violation::BoundsViolation { fap: fap.id, axis });
            }
        }
        if fap.demand_bps == 0 {
            out.push(Violation::NonPositiveDemand { fap: fap.id });
        }
        if !(fap.required_snr_db >= lo_snr && fap.required_snr_db <= hi_snr) {
            out.push(Violation::SnrOutOfRange { fap: fap.id, snr_db: fap.required_snr_db });
        }
    }

    for (i, a) in s.faps.iter().enumerate() {
        for b in &s.faps[i + 1..] {
            let d = a.position().distance(b.position());
            if !(d >= s.radio.d_min_m) {
                out.push(Violation::SeparationViolation { a: a.id, b: b.id, distance_m: d });
            }
        }
    }

    let total: u128 = s.faps.iter().map(|f| f.demand_bps as u128).sum();
    if total > s.radio.c_max_bps as u128 {
        out.push(Violation::AggregateCapacityViolation { total_bps: total, c_max_bps: s.radio.c_max_bps });
    }
    out
}

impl Scenario {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Scenario, ParseError> {
        parse_document(text, origin)
    }

    pub fn total_demand_bps(&self) -> u64 {
        self.faps.iter().map(|f| f.demand_bps).sum()
    }
}

pub fn save(s: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    std::fs::write(path, s.to_json()).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })
}

pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    Ok(Scenario::from_json(&text, &path.display().to_string())?)
}

/// Deserializes a JSON document, reporting the offending field path on error.
pub(crate) fn parse_document<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T, ParseError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let result: Result<T, _> = serde_path_to_error::deserialize(&mut de);
    let value = match result {
        Ok(v) => v,
        Err(err) => {
            let inner = err.inner();
            let mut field = err.path().to_string();
            let message = inner.to_string();
            // serde reports a missing key against its parent; name the key itself.
            if let Some(rest) = message.strip_prefix("missing field `") {
                if let Some(name) = rest.split('`').next() {
                    field = if field == "." { name.to_string() } else { format!("{field}.{name}") };
                }
            }
            return Err(ParseError {
                path: origin.to_string(),
                field,
                line: inner.line(),
                column: inner.column(),
                message,
            });
        }
    };
    de.end().map_err(|e| ParseError {
        path: origin.to_string(),
        field: ".".into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn experiment_matrix() -> impl Iterator<Item = (usize, u64)> {
        [2usize, 4, 6, 8, 10, 15, 20].into_iter().flat_map(|n| (0..10).map(move |s| (n, s)))
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(2, 42, Venue::default(), RadioConfig::default()).unwrap();
        let b = generate(2, 42, Venue::default(), RadioConfig::default()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = generate(2, 43, Venue::default(), RadioConfig::default()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn twenty_faps_respect_bounds_and_separation() {
        let s = generate(20, 7, Venue::default(), RadioConfig::default()).unwrap();
        assert_eq!(s.faps.len(), 20);
        for f in &s.faps {
            assert!(f.x.abs() <= 7.5 && f.y.abs() <= 7.5 && f.z.abs() <= 10.0);
        }
        for (i, a) in s.faps.iter().enumerate() {
            for b in &s.faps[i + 1..] {
                assert!(a.position().distance(b.position()) >= 1.0);
            }
        }
        assert!(validate(&s).is_empty());
    }

    #[test]
    fn overpacked_venue_exhausts_placement() {
        let err = generate(5000, 1, Venue::new(2.0, 2.0, 2.0), RadioConfig::default()).unwrap_err();
        assert!(matches!(err, ScenarioError::PlacementExhausted { .. }));
    }

    #[test]
    fn zero_faps_rejected() {
        assert!(matches!(
            generate(0, 1, Venue::default(), RadioConfig::default()),
            Err(ScenarioError::NoFaps)
        ));
    }

    #[test]
    fn generated_matrix_respects_aggregate_capacity() {
        for (n, seed) in experiment_matrix() {
            let s = generate(n, seed, Venue::default(), RadioConfig::default()).unwrap();
            assert!(s.total_demand_bps() <= s.radio.c_max_bps, "n={n} seed={seed}");
            assert!(validate(&s).is_empty(), "n={n} seed={seed}: {:?}", validate(&s));
            for f in &s.faps {
                let (entry, snr) =
                    crate::radio::required_snr_for_demand(f.demand_bps as f64, n, &s.radio.mcs_table).unwrap();
                assert_eq!(snr, f.required_snr_db);
                assert!(entry.rate_bps / n as u64 == f.demand_bps);
            }
        }
    }

    fn small() -> Scenario {
        generate(3, 5, Venue::default(), RadioConfig::default()).unwrap()
    }

    #[test]
    fn out_of_bounds_fap_is_reported() {
        let mut s = small();
        s.faps[1].x = 8.0;
        assert_eq!(validate(&s), vec![Violation::BoundsViolation { fap: s.faps[1].id, axis: Axis::X }]);
    }

    #[test]
    fn aggregate_capacity_violation() {
        let mut s = small();
        s.faps.truncate(2);
        for f in &mut s.faps {
            f.demand_bps = 400_000_000;
        }
        assert_eq!(
            validate(&s),
            vec![Violation::AggregateCapacityViolation { total_bps: 800_000_000, c_max_bps: 780_000_000 }]
        );
    }

    #[test]
    fn each_invariant_has_its_own_code() {
        let mut s = small();
        s.faps[0].demand_bps = 0;
        s.faps[1].required_snr_db = 45.0;
        s.faps[2].id = s.faps[0].id;
        s.faps[2].x = s.faps[0].x + 0.1;
        s.faps[2].y = s.faps[0].y;
        s.faps[2].z = s.faps[0].z;
        let v = validate(&s);
        assert!(v.contains(&Violation::NonPositiveDemand { fap: s.faps[0].id }));
        assert!(v.iter().any(|x| matches!(x, Violation::SnrOutOfRange { .. })));
        assert!(v.contains(&Violation::DuplicateId { id: s.faps[0].id }));
        assert!(v.iter().any(|x| matches!(x, Violation::SeparationViolation { .. })));

        let empty = Scenario { faps: vec![], ..small() };
        assert_eq!(validate(&empty), vec![Violation::NoFaps]);

        let mut bad_venue = small();
        bad_venue.venue.z_m = 0.0;
        assert!(validate(&bad_venue).contains(&Violation::InvalidVenue { axis: Axis::Z }));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = generate(10, 3, Venue::default(), RadioConfig::default()).unwrap();
        save(&s, &path).unwrap();
        assert_eq!(load(&path).unwrap(), s);
    }

    #[test]
    fn negative_demand_is_a_parse_error() {
        let s = small();
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        v["faps"][1]["demand_bps"] = serde_json::json!(-5);
        let err = Scenario::from_json(&serde_json::to_string_pretty(&v).unwrap(), "mem").unwrap_err();
        assert_eq!(err.field, "faps[1].demand_bps");
        assert!(err.line > 0);
    }

    #[test]
    fn missing_radio_is_a_parse_error() {
        let s = small();
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        v.as_object_mut().unwrap().remove("radio");
        let err = Scenario::from_json(&v.to_string(), "mem").unwrap_err();
        assert_eq!(err.field, "radio");
    }

    #[test]
    fn missing_nested_field_names_full_path() {
        let s = small();
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        v["venue"].as_object_mut().unwrap().remove("y_m");
        let err = Scenario::from_json(&v.to_string(), "mem").unwrap_err();
        assert_eq!(err.field, "venue.y_m");
    }
}
