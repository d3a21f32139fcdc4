//! Brute-force reference solver for validating the placement algorithms.
//!
//! Nothing here touches the SQP or ball-intersection code. The required power
//! at a point is rebuilt from the free-space path loss, noise floor and loss
//! offset, evaluated on a regular grid over the venue (points closer than
//! `d_min` to a FAP are skipped), and the grid minimum is optionally polished.
//!
//! The polish is a nested coordinate line search: golden-section over `x`,
//! whose objective is the golden-section minimum over `y`, whose objective in
//! turn is the minimum over `z`. The required-power field is quasiconvex
//! (its sublevel sets are ball intersections), and so are its partial minima,
//! which makes the nested search exact where the separation balls do not
//! bind. Where they do, a shrinking lattice search around the grid minimum
//! that honours the separation is used instead.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::OracleError;
use crate::geometry::{BoundingBox, Point3};
use crate::problem::{PlacementProblem, PlacementSolution, SolverStatus};
use crate::radio::path_loss_db;

pub const MAX_GRID_POINTS: u128 = 100_000_000;
const GOLDEN_TOL_M: f64 = 1e-7;
const MAX_LATTICE_WALK: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub grid_step_m: f64,
    /// Target accuracy of the polished power.
    pub p_t_tol_db: f64,
    pub polish: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { grid_step_m: 0.25, p_t_tol_db: 0.01, polish: true }
    }
}

impl OracleConfig {
    pub fn grid_only(grid_step_m: f64) -> Self {
        Self { grid_step_m, polish: false, ..Self::default() }
    }
}

/// Required power per link, assembled from path-loss primitives.
struct PowerField<'a> {
    prob: &'a PlacementProblem,
    /// `SNR_i + P_noise + loss offset + path loss at 1 m`, per FAP.
    offsets: Vec<f64>,
}

impl<'a> PowerField<'a> {
    fn new(prob: &'a PlacementProblem) -> Self {
        let one_metre = path_loss_db(1.0, prob.link.frequency_hz).expect("positive carrier frequency");
        let base = prob.link.noise_power_dbm + prob.link.loss_offset_db + one_metre;
        Self { prob, offsets: prob.required_snrs.iter().map(|s| s + base).collect() }
    }

    /// Power needed at `x`, with distances clamped at `d_min`.
    fn at(&self, x: Point3) -> f64 {
        let d_min = self.prob.d_min_m;
        self.prob
            .fap_positions
            .iter()
            .zip(&self.offsets)
            .map(|(p, off)| off + 20.0 * x.distance(*p).max(d_min).log10())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn separated(&self, x: Point3) -> bool {
        self.prob.fap_positions.iter().all(|p| x.distance(*p) >= self.prob.d_min_m)
    }
}

fn axis_count(lo: f64, hi: f64, step: f64) -> usize {
    ((hi - lo) / step + 1e-9).floor() as usize + 1
}

pub fn grid_points(bounds: &BoundingBox, step: f64) -> u128 {
    (0..3).map(|k| axis_count(bounds.min[k], bounds.max[k], step) as u128).product()
}

pub fn oracle_solve(prob: &PlacementProblem, cfg: &OracleConfig) -> Result<PlacementSolution, OracleError> {
    if !(cfg.grid_step_m > 0.0) || !cfg.grid_step_m.is_finite() {
        return Err(OracleError::InvalidConfig(format!("grid_step_m must be positive, got {}", cfg.grid_step_m)));
    }
    if !(cfg.p_t_tol_db > 0.0) {
        return Err(OracleError::InvalidConfig(format!("p_t_tol_db must be positive, got {}", cfg.p_t_tol_db)));
    }
    let started = Instant::now();
    let b = prob.bounds;
    let step = cfg.grid_step_m;
    let points = grid_points(&b, step);
    if points > MAX_GRID_POINTS {
        return Err(OracleError::GridTooLarge { points, limit: MAX_GRID_POINTS });
    }
    let (nx, ny, nz) = (
        axis_count(b.min.x, b.max.x, step),
        axis_count(b.min.y, b.max.y, step),
        axis_count(b.min.z, b.max.z, step),
    );
    let field = PowerField::new(prob);
    let at = |i: usize, j: usize, k: usize| {
        Point3::new(b.min.x + i as f64 * step, b.min.y + j as f64 * step, b.min.z + k as f64 * step)
    };

    // (power, i, j, k): ties go to the lexicographically smallest index
    let best = (0..nx)
        .into_par_iter()
        .filter_map(|i| {
            let mut local: Option<(f64, usize, usize, usize)> = None;
            for j in 0..ny {
                for k in 0..nz {
                    let x = at(i, j, k);
                    if !field.separated(x) {
                        continue;
                    }
                    let g = field.at(x);
                    if local.is_none_or(|(bg, ..)| g < bg) {
                        local = Some((g, i, j, k));
                    }
                }
            }
            local
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3))));

    let (mut power, mut point) = match best {
        Some((g, i, j, k)) => (g, at(i, j, k)),
        // every grid point is inside a separation ball; fall back to the venue centre
        None => (f64::INFINITY, b.center()),
    };

    if cfg.polish {
        let start = if power.is_finite() { point } else { b.center() };
        let (x, g) = polish(&field, &b, start, step, cfg.p_t_tol_db);
        if g < power {
            power = g;
            point = x;
        }
    }

    let evaluated = points as usize;
    let p_t = power.max(0.0);
    let status = if p_t <= prob.p_max_dbm { SolverStatus::Optimal } else { SolverStatus::Infeasible };
    Ok(PlacementSolution::assemble(prob, point, p_t, status, evaluated, started.elapsed()))
}

fn golden_min(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL_M {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // the bracket ends are candidates too (minimiser on a face)
    [(a, f(a)), (b, f(b)), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("non-empty")
}

/// Returns the best point found and its power; never worse than `start`.
fn polish(field: &PowerField, b: &BoundingBox, start: Point3, step: f64, tol_db: f64) -> (Point3, f64) {
    let nested = |x: f64| {
        golden_min(b.min.y, b.max.y, |y| golden_min(b.min.z, b.max.z, |z| field.at(Point3::new(x, y, z))).1).1
    };
    let (x, _) = golden_min(b.min.x, b.max.x, nested);
    let (y, _) = golden_min(b.min.y, b.max.y, |y| golden_min(b.min.z, b.max.z, |z| field.at(Point3::new(x, y, z))).1);
    let (z, _) = golden_min(b.min.z, b.max.z, |z| field.at(Point3::new(x, y, z)));
    let candidate = Point3::new(x, y, z);

    let start_power = if field.separated(start) { field.at(start) } else { f64::INFINITY };
    if field.separated(candidate) {
        let g = field.at(candidate);
        if g <= start_power {
            return (candidate, g);
        }
        return (start, start_power);
    }
    // the unconstrained minimum sits inside a separation ball, so the
    // constrained one lies on that ball's surface (or elsewhere on the grid)
    let lattice = lattice_polish(field, b, start, start_power, step, tol_db);
    let intruder = field
        .prob
        .fap_positions
        .iter()
        .copied()
        .min_by(|p, q| p.distance(candidate).total_cmp(&q.distance(candidate)))
        .expect("at least one FAP");
    let sphere = sphere_polish(field, b, intruder);
    if sphere.1 < lattice.1 { sphere } else { lattice }
}

/// Minimum of the field over the separation sphere around `center`: a
/// one-degree scan in spherical angles, then nested golden-section searches
/// in a window around the best scan point.
fn sphere_polish(field: &PowerField, b: &BoundingBox, center: Point3) -> (Point3, f64) {
    const SCAN_DEG: f64 = 1.0;
    let radius = field.prob.d_min_m * (1.0 + 1e-12);
    let point = |theta: f64, phi: f64| {
        center + Point3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * radius
    };
    let value = |theta: f64, phi: f64| {
        let x = point(theta, phi);
        if b.contains(x, 0.0) && field.separated(x) {
            field.at(x)
        } else {
            f64::INFINITY
        }
    };
    let step = SCAN_DEG.to_radians();
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..=180 {
        for j in 0..360 {
            let (theta, phi) = (i as f64 * step, j as f64 * step);
            let g = value(theta, phi);
            if g < best.2 {
                best = (theta, phi, g);
            }
        }
    }
    if !best.2.is_finite() {
        return (center, f64::INFINITY);
    }
    let (t0, p0) = (best.0, best.1);
    let window = 1.5 * step;
    let (theta, _) = golden_min((t0 - window).max(0.0), (t0 + window).min(std::f64::consts::PI), |t| {
        golden_min(p0 - window, p0 + window, |p| value(t, p)).1
    });
    let (phi, g) = golden_min(p0 - window, p0 + window, |p| value(theta, p));
    if g < best.2 {
        (point(theta, phi), g)
    } else {
        (point(t0, p0), best.2)
    }
}

/// Shrinking 5x5x5 lattice search that only visits separated points.
fn lattice_polish(
    field: &PowerField,
    b: &BoundingBox,
    start: Point3,
    start_power: f64,
    grid_step: f64,
    tol_db: f64,
) -> (Point3, f64) {
    // steepest admissible slope of 20 log10(d) is at d = d_min
    let slope = 20.0 / (std::f64::consts::LN_10 * field.prob.d_min_m);
    let final_step = (grid_step / 100.0).min(tol_db / (10.0 * slope));
    let (mut best, mut best_g) = (start, start_power);
    let mut h = grid_step;
    while h >= final_step {
        for _ in 0..MAX_LATTICE_WALK {
            let mut improved: Option<(Point3, f64, bool)> = None;
            for i in -2i32..=2 {
                for j in -2i32..=2 {
                    for k in -2i32..=2 {
                        let x = best + Point3::new(i as f64, j as f64, k as f64) * h;
                        if !b.contains(x, 0.0) || !field.separated(x) {
                            continue;
                        }
                        let g = field.at(x);
                        if g < improved.map_or(best_g, |c| c.1) {
                            let edge = i.abs() == 2 || j.abs() == 2 || k.abs() == 2;
                            improved = Some((x, g, edge));
                        }
                    }
                }
            }
            match improved {
                Some((x, g, edge)) => {
                    best = x;
                    best_g = g;
                    if !edge {
                        break;
                    }
                }
                None => break,
            }
        }
        h *= 0.5;
    }
    (best, best_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{feasible_at, required_power_at};
    use crate::scenario::Venue;
    use approx::assert_abs_diff_eq;

    fn pair(a: f64, b: f64, snr: [f64; 2]) -> PlacementProblem {
        PlacementProblem::new(
            vec![Point3::new(a, 0.0, 0.0), Point3::new(b, 0.0, 0.0)],
            snr.to_vec(),
            38.15,
            Venue::default(),
        )
    }

    #[test]
    fn symmetric_pair_is_clamped() {
        let sol = oracle_solve(&pair(-5.0, 5.0, [20.0, 20.0]), &OracleConfig::default()).unwrap();
        assert_eq!(sol.p_t_dbm, 0.0);
        assert_eq!(sol.status, SolverStatus::Optimal);
    }

    #[test]
    fn asymmetric_pair_with_polish() {
        let p = pair(-6.0, 6.0, [30.0, 20.0]);
        let sol = oracle_solve(&p, &OracleConfig::default()).unwrap();
        assert_abs_diff_eq!(sol.p_t_dbm, 1.046, epsilon = 0.01);
        let coarse = oracle_solve(&p, &OracleConfig::grid_only(0.25)).unwrap();
        assert!(coarse.p_t_dbm >= sol.p_t_dbm);
        assert!(coarse.p_t_dbm - sol.p_t_dbm < 0.5);
    }

    #[test]
    fn field_matches_link_constant_form() {
        let radio = crate::radio::RadioConfig { loss_offset_db: 2.5, ..Default::default() };
        let s = crate::scenario::generate(6, 4, Venue::default(), radio).unwrap();
        let p = PlacementProblem::from_scenario(&s);
        let field = PowerField::new(&p);
        for x in [Point3::ORIGIN, Point3::new(3.0, -2.0, 7.0), p.fap_positions[0]] {
            assert_abs_diff_eq!(field.at(x), required_power_at(x, &p), epsilon = 1e-9);
        }
    }

    #[test]
    fn returned_point_is_feasible() {
        let p = pair(-6.0, 6.0, [30.0, 20.0]);
        for cfg in [OracleConfig::default(), OracleConfig::grid_only(0.5)] {
            let sol = oracle_solve(&p, &cfg).unwrap();
            assert!(feasible_at(sol.fgw_position, sol.p_t_dbm + 1e-6, &p).feasible);
        }
    }

    #[test]
    fn oversized_grid_is_rejected() {
        let p = pair(-6.0, 6.0, [30.0, 20.0]);
        let err = oracle_solve(&p, &OracleConfig::grid_only(0.001)).unwrap_err();
        assert!(matches!(err, OracleError::GridTooLarge { .. }));
        assert!(oracle_solve(&p, &OracleConfig::grid_only(0.0)).is_err());
    }

    #[test]
    fn single_fap_polish_respects_separation() {
        let p = PlacementProblem::new(vec![Point3::new(0.1, 0.1, 0.1)], vec![40.0], 38.15, Venue::default());
        let sol = oracle_solve(&p, &OracleConfig::default()).unwrap();
        assert!(sol.links[0].distance_m >= 1.0);
        assert_abs_diff_eq!(sol.p_t_dbm, 1.85, epsilon = 0.01);
    }
}
