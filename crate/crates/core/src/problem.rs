//! The solver-facing placement instance and the pieces every solver shares:
//! the required-power field `g(x)`, the feasibility predicate and the
//! fixed-power ball-intersection test.

use std::f64::consts::PI;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::convex::{self, HalfSpace};
use crate::error::ParseError;
use crate::format::sig9;
use crate::geometry::{BoundingBox, Point3};
use crate::radio::{self, RadioConfig, SPEED_OF_LIGHT};
use crate::scenario::{Scenario, Venue};

/// Tolerance for public feasibility checks: metres for distances and box
/// faces, dB for the power bounds.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Largest excess `min h` still accepted as "the balls touch".
const INTERSECTION_TOL_M: f64 = 1e-9;

/// Free-space link parameters needed to rebuild the budget from first
/// principles. `k_db()` folds them into the link-budget constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub frequency_hz: f64,
    pub noise_power_dbm: f64,
    pub loss_offset_db: f64,
}

impl LinkSpec {
    /// A link whose budget constant is exactly `k_db`: carrier `c / 4π`
    /// (path loss reduces to `20 log10 d`) and noise `-k_db`.
    pub fn from_k_db(k_db: f64) -> Self {
        Self { frequency_hz: SPEED_OF_LIGHT / (4.0 * PI), noise_power_dbm: -k_db, loss_offset_db: 0.0 }
    }

    pub fn from_radio(radio: &RadioConfig) -> Self {
        Self {
            frequency_hz: radio.frequency_hz,
            noise_power_dbm: radio.noise_power_dbm,
            loss_offset_db: radio.loss_offset_db,
        }
    }

    pub fn k_db(&self) -> f64 {
        -20.0 * self.frequency_hz.log10() - 20.0 * (4.0 * PI / SPEED_OF_LIGHT).log10()
            - self.noise_power_dbm
            - self.loss_offset_db
    }
}

/// One gateway-placement instance: FAP positions with their required SNRs.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementProblem {
    pub fap_ids: Vec<u32>,
    pub fap_positions: Vec<Point3>,
    pub required_snrs: Vec<f64>,
    pub link: LinkSpec,
    /// Link-budget constant, cached from `link`.
    pub k_db: f64,
    pub bounds: BoundingBox,
    pub p_max_dbm: f64,
    pub d_min_m: f64,
}

impl PlacementProblem {
    /// Builds an instance with default radio limits (`p_max` 30 dBm,
    /// `d_min` 1 m). Panics on empty or mismatched inputs.
    pub fn new(fap_positions: Vec<Point3>, required_snrs: Vec<f64>, k_db: f64, venue: Venue) -> Self {
        assert!(!fap_positions.is_empty(), "a placement problem needs at least one FAP");
        assert_eq!(fap_positions.len(), required_snrs.len(), "one required SNR per FAP");
        let link = LinkSpec::from_k_db(k_db);
        Self {
            fap_ids: (0..fap_positions.len() as u32).collect(),
            fap_positions,
            required_snrs,
            link,
            k_db: link.k_db(),
            bounds: venue.bounds(),
            p_max_dbm: radio::DEFAULT_P_MAX_DBM,
            d_min_m: radio::DEFAULT_D_MIN_M,
        }
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let link = LinkSpec::from_radio(&s.radio);
        Self {
            fap_ids: s.faps.iter().map(|f| f.id).collect(),
            fap_positions: s.faps.iter().map(|f| f.position()).collect(),
            required_snrs: s.faps.iter().map(|f| f.required_snr_db).collect(),
            link,
            k_db: link.k_db(),
            bounds: s.venue.bounds(),
            p_max_dbm: s.radio.p_max_dbm,
            d_min_m: s.radio.d_min_m,
        }
    }

    pub fn with_p_max(mut self, p_max_dbm: f64) -> Self {
        self.p_max_dbm = p_max_dbm;
        self
    }

    pub fn with_d_min(mut self, d_min_m: f64) -> Self {
        self.d_min_m = d_min_m;
        self
    }

    pub fn with_bounds(mut self, bounds: BoundingBox) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_link(mut self, link: LinkSpec) -> Self {
        self.link = link;
        self.k_db = link.k_db();
        self
    }

    pub fn len(&self) -> usize {
        self.fap_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fap_positions.is_empty()
    }

    /// Translates FAPs and venue by `v`.
    pub fn translated(&self, v: Point3) -> Self {
        let mut out = self.clone();
        out.fap_positions.iter_mut().for_each(|p| *p = *p + v);
        out.bounds = out.bounds.translated(v);
        out
    }

    pub fn radii_at(&self, p_t_dbm: f64) -> Vec<f64> {
        self.required_snrs.iter().map(|s| radio::max_link_distance(p_t_dbm, *s, self.k_db)).collect()
    }

    pub fn fap_centroid(&self) -> Point3 {
        Point3::centroid(&self.fap_positions)
    }
}

/// Smallest transmission power satisfying every link at `x` (may be
/// negative). Distances are clamped at `d_min`, so this stays finite at a FAP.
pub fn required_power_at(x: Point3, prob: &PlacementProblem) -> f64 {
    prob.fap_positions
        .iter()
        .zip(&prob.required_snrs)
        .map(|(p, snr)| snr - prob.k_db + 20.0 * x.distance(*p).max(prob.d_min_m).log10())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `radius - distance` per FAP, metres.
    pub margins_m: Vec<f64>,
    pub in_venue: bool,
    pub power_in_range: bool,
    /// Every FAP is at least `d_min` away.
    pub separated: bool,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn min_margin_m(&self) -> f64 {
        self.margins_m.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Checks every decision-variable constraint at `(x, p_t)`, within
/// [`FEASIBILITY_TOL`].
pub fn feasible_at(x: Point3, p_t_dbm: f64, prob: &PlacementProblem) -> FeasibilityReport {
    let in_venue = x.is_finite() && prob.bounds.contains(x, FEASIBILITY_TOL);
    let power_in_range = p_t_dbm >= -FEASIBILITY_TOL && p_t_dbm <= prob.p_max_dbm + FEASIBILITY_TOL;
    let mut separated = true;
    let margins_m: Vec<f64> = prob
        .fap_positions
        .iter()
        .zip(&prob.required_snrs)
        .map(|(p, snr)| {
            let d = x.distance(*p);
            if !(d >= prob.d_min_m - FEASIBILITY_TOL) {
                separated = false;
            }
            radio::max_link_distance(p_t_dbm, *snr, prob.k_db) - d
        })
        .collect();
    let links_ok = margins_m.iter().all(|m| *m >= -FEASIBILITY_TOL);
    FeasibilityReport {
        feasible: in_venue && power_in_range && separated && links_ok,
        margins_m,
        in_venue,
        power_in_range,
        separated,
    }
}

/// A point of the venue inside every FAP's ball at power `p_t` and at least
/// `d_min` from every FAP, if one is found.
///
/// The ball intersection itself is decided exactly by minimising
/// `h(x) = max_i (|x - P_i| - r_i)` over the venue. When the minimiser lies
/// within `d_min` of a FAP, the search is repeated on half-spaces tangent to
/// that FAP's exclusion ball; this last step is a heuristic, since the region
/// with the exclusion balls removed is not convex.
pub fn ball_intersection_point(p_t_dbm: f64, prob: &PlacementProblem) -> Option<Point3> {
    ball_intersection_search(p_t_dbm, prob).point
}

/// What [`ball_intersection_point`] found, plus the Newton work it took.
#[derive(Debug, Clone, Copy)]
pub struct IntersectionSearch {
    pub point: Option<Point3>,
    pub newton_steps: usize,
}

pub fn ball_intersection_search(p_t_dbm: f64, prob: &PlacementProblem) -> IntersectionSearch {
    let radii = prob.radii_at(p_t_dbm);
    let mut steps = 0;
    if radii.iter().any(|r| !(*r >= prob.d_min_m)) {
        return IntersectionSearch { point: None, newton_steps: 0 };
    }
    let start = prob.bounds.project(prob.fap_centroid());
    let Some(deepest) = convex::minimize_excess(&prob.fap_positions, &radii, &prob.bounds, &[], start) else {
        return IntersectionSearch { point: None, newton_steps: 0 };
    };
    steps += deepest.newton_steps;
    if deepest.value > INTERSECTION_TOL_M {
        return IntersectionSearch { point: None, newton_steps: steps };
    }
    let Some(j) = closest_intruder(deepest.point, prob) else {
        return IntersectionSearch { point: Some(deepest.point), newton_steps: steps };
    };

    let center = prob.fap_positions[j];
    for u in escape_directions(deepest.point - center) {
        // u . (x - center) >= d_min, written as (-u) . x <= -(u . center) - d_min
        let face = HalfSpace { normal: u * -1.0, offset: -u.dot(center) - prob.d_min_m };
        let start = escape_start(prob, center, u);
        let Some(m) = convex::minimize_excess(&prob.fap_positions, &radii, &prob.bounds, &[face], start) else {
            continue;
        };
        steps += m.newton_steps;
        if m.value <= INTERSECTION_TOL_M && closest_intruder(m.point, prob).is_none() {
            return IntersectionSearch { point: Some(m.point), newton_steps: steps };
        }
    }
    IntersectionSearch { point: None, newton_steps: steps }
}

/// Index of the nearest FAP closer than `d_min` to `x`.
fn closest_intruder(x: Point3, prob: &PlacementProblem) -> Option<usize> {
    prob.fap_positions
        .iter()
        .enumerate()
        .map(|(i, p)| (i, x.distance(*p)))
        .filter(|(_, d)| *d < prob.d_min_m)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// The radial direction first, then the 26 lattice directions ordered by
/// alignment with it.
fn escape_directions(radial: Point3) -> Vec<Point3> {
    let mut dirs = Vec::with_capacity(27);
    let n = radial.norm();
    let r = if n > 1e-12 { radial * (1.0 / n) } else { Point3::new(1.0, 0.0, 0.0) };
    if n > 1e-12 {
        dirs.push(r);
    }
    let mut lattice = Vec::with_capacity(26);
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if (i, j, k) != (0, 0, 0) {
                    let v = Point3::new(i as f64, j as f64, k as f64);
                    lattice.push(v * (1.0 / v.norm()));
                }
            }
        }
    }
    lattice.sort_by(|a, b| b.dot(r).total_cmp(&a.dot(r)));
    dirs.extend(lattice);
    dirs
}

/// A strictly interior start for the half-space `u . (x - center) >= d_min`.
fn escape_start(prob: &PlacementProblem, center: Point3, u: Point3) -> Point3 {
    let near = convex::interior_point(&prob.bounds, center + u * (1.5 * prob.d_min_m));
    if u.dot(near - center) > prob.d_min_m {
        return near;
    }
    let b = &prob.bounds;
    let pick = |uk: f64, lo: f64, hi: f64| if uk > 0.0 { hi } else if uk < 0.0 { lo } else { 0.5 * (lo + hi) };
    convex::interior_point(
        b,
        Point3::new(pick(u.x, b.min.x, b.max.x), pick(u.y, b.min.y, b.max.y), pick(u.z, b.min.z, b.max.z)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverStatus::Optimal => "Optimal",
            SolverStatus::Infeasible => "Infeasible",
            SolverStatus::MaxIterations => "MaxIterations",
        })
    }
}

/// Per-FAP backhaul link at the returned placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub fap_id: u32,
    #[serde(serialize_with = "sig9::serialize")]
    pub distance_m: f64,
    /// Maximum admissible distance at the returned power.
    #[serde(serialize_with = "sig9::serialize")]
    pub radius_m: f64,
    /// Achieved minus required SNR, `20 log10(radius / distance)`.
    #[serde(serialize_with = "sig9::serialize")]
    pub margin_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementSolution {
    pub fgw_position: Point3,
    /// Power used at `fgw_position`. For `Infeasible` results this is the
    /// power the returned position would need, which exceeds `p_max`.
    pub p_t_dbm: f64,
    pub links: Vec<LinkRecord>,
    pub status: SolverStatus,
    pub iterations: usize,
    pub elapsed: Duration,
}

impl PlacementSolution {
    pub fn assemble(
        prob: &PlacementProblem,
        fgw_position: Point3,
        p_t_dbm: f64,
        status: SolverStatus,
        iterations: usize,
        elapsed: Duration,
    ) -> Self {
        let links = prob
            .fap_ids
            .iter()
            .zip(&prob.fap_positions)
            .zip(&prob.required_snrs)
            .map(|((id, p), snr)| {
                let distance_m = fgw_position.distance(*p);
                let radius_m = radio::max_link_distance(p_t_dbm, *snr, prob.k_db);
                LinkRecord { fap_id: *id, distance_m, radius_m, margin_db: 20.0 * (radius_m / distance_m).log10() }
            })
            .collect();
        Self { fgw_position, p_t_dbm, links, status, iterations, elapsed }
    }

    /// The deepest point of the ball configuration at `p_max` and the power
    /// it would need.
    pub fn infeasible(prob: &PlacementProblem, iterations: usize, elapsed: Duration) -> Self {
        let start = prob.bounds.project(prob.fap_centroid());
        let x = convex::minimize_excess(&prob.fap_positions, &prob.radii_at(prob.p_max_dbm), &prob.bounds, &[], start)
            .map_or(start, |m| m.point);
        let needed = required_power_at(x, prob).max(prob.p_max_dbm);
        Self::assemble(prob, x, needed, SolverStatus::Infeasible, iterations, elapsed)
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }

    pub fn to_json(&self) -> String {
        let doc = SolutionDocument {
            fgw: PointDocument { x: self.fgw_position.x, y: self.fgw_position.y, z: self.fgw_position.z },
            p_t_dbm: self.p_t_dbm,
            status: self.status,
            iterations: self.iterations,
            elapsed_s: self.elapsed.as_secs_f64(),
            links: self.links.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("solution serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, ParseError> {
        let doc: SolutionDocument = crate::scenario::parse_document(text, origin)?;
        Ok(Self {
            fgw_position: Point3::new(doc.fgw.x, doc.fgw.y, doc.fgw.z),
            p_t_dbm: doc.p_t_dbm,
            links: doc.links,
            status: doc.status,
            iterations: doc.iterations,
            elapsed: Duration::from_secs_f64(doc.elapsed_s.max(0.0)),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PointDocument {
    #[serde(serialize_with = "sig9::serialize")]
    x: f64,
    #[serde(serialize_with = "sig9::serialize")]
    y: f64,
    #[serde(serialize_with = "sig9::serialize")]
    z: f64,
}

#[derive(Serialize, Deserialize)]
struct SolutionDocument {
    fgw: PointDocument,
    #[serde(serialize_with = "sig9::serialize")]
    p_t_dbm: f64,
    status: SolverStatus,
    iterations: usize,
    #[serde(serialize_with = "sig9::serialize")]
    elapsed_s: f64,
    links: Vec<LinkRecord>,
}
