//! Fast gateway placement: one constrained minimisation of the transmission
//! power over the gateway position and the power jointly.
//!
//! The public entry point [`solve_fgwp`] runs the SQP route ([`sqp`]) from
//! the FAP centroid at 1 dBm. If that route does not converge to a feasible
//! point, it falls back to [`solve_by_bisection`], which bisects on the power
//! and decides each level with the convex ball-intersection test. Because the
//! feasible set at fixed power is an intersection of balls and grows with the
//! power, the bisection is globally correct up to the separation heuristic.

mod qp;
pub mod sqp;

use std::time::Instant;

use crate::geometry::Point3;
use crate::problem::{
    ball_intersection_point, required_power_at, PlacementProblem, PlacementSolution, SolverStatus, FEASIBILITY_TOL,
};

pub use sqp::{SqpOutcome, SqpResult};

pub const INITIAL_POWER_DBM: f64 = 1.0;
pub const MAX_MAJOR_ITERATIONS: usize = 500;
pub const BISECTION_TOL_DB: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgwpOptions {
    pub initial_power_dbm: f64,
    /// Defaults to the FAP centroid projected into the venue.
    pub initial_position: Option<Point3>,
    pub max_iterations: usize,
    /// Fall back to bisection when the SQP route fails.
    pub fallback: bool,
}

impl Default for FgwpOptions {
    fn default() -> Self {
        Self { initial_power_dbm: INITIAL_POWER_DBM, initial_position: None, max_iterations: MAX_MAJOR_ITERATIONS, fallback: true }
    }
}

pub fn solve_fgwp(prob: &PlacementProblem) -> PlacementSolution {
    solve_fgwp_with(prob, &FgwpOptions::default())
}

pub fn solve_fgwp_with(prob: &PlacementProblem, opts: &FgwpOptions) -> PlacementSolution {
    let started = Instant::now();
    let start = initial_position(prob, opts.initial_position);
    let result = sqp::minimize(prob, start, opts.initial_power_dbm, opts.max_iterations);

    if result.outcome == SqpOutcome::Converged {
        if let Some(p_t) = certified_power(prob, result.position) {
            // at the 0 dBm floor any point of the balls' intersection is optimal;
            // prefer one with slack over the SQP iterate on a link boundary
            let (x, p_t) = match p_t < sqp::POWER_STEP_TOL_DB {
                true => ball_intersection_point(0.0, prob).map_or((result.position, p_t), |x| (x, 0.0)),
                false => (result.position, p_t),
            };
            return PlacementSolution::assemble(prob, x, p_t, SolverStatus::Optimal, result.iterations, started.elapsed());
        }
    }
    if !opts.fallback {
        let status = match result.outcome {
            SqpOutcome::MaxIterations => SolverStatus::MaxIterations,
            _ => SolverStatus::Infeasible,
        };
        let p_t = required_power_at(result.position, prob).max(result.p_t_dbm);
        return PlacementSolution::assemble(prob, result.position, p_t, status, result.iterations, started.elapsed());
    }
    let mut sol = solve_by_bisection(prob);
    sol.iterations += result.iterations;
    sol.elapsed = started.elapsed();
    sol
}

/// Lowest power that makes `x` feasible, if `x` is a valid gateway spot
/// within `[0, p_max]`.
fn certified_power(prob: &PlacementProblem, x: Point3) -> Option<f64> {
    let separated = prob.fap_positions.iter().all(|p| x.distance(*p) >= prob.d_min_m - FEASIBILITY_TOL);
    if !separated || !prob.bounds.contains(x, FEASIBILITY_TOL) {
        return None;
    }
    let p = required_power_at(x, prob).max(0.0);
    (p <= prob.p_max_dbm + FEASIBILITY_TOL).then(|| p.min(prob.p_max_dbm))
}

/// The centroid projected into the venue, nudged out to `d_min` if it sits
/// on top of a FAP (the separation constraint has no usable gradient there).
fn initial_position(prob: &PlacementProblem, requested: Option<Point3>) -> Point3 {
    let x = prob.bounds.project(requested.unwrap_or_else(|| prob.fap_centroid()));
    let clear = |y: Point3| prob.fap_positions.iter().all(|p| y.distance(*p) >= prob.d_min_m);
    let Some(near) = prob.fap_positions.iter().find(|p| x.distance(**p) < prob.d_min_m) else {
        return x;
    };
    let radial = x - *near;
    let axes = [
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(-1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, -1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(0.0, 0.0, -1.0),
    ];
    let radial_dir = (radial.norm() > 1e-9).then(|| radial * (1.0 / radial.norm()));
    radial_dir
        .into_iter()
        .chain(axes)
        .map(|u| *near + u * (1.001 * prob.d_min_m))
        .find(|y| prob.bounds.contains(*y, 0.0) && clear(*y))
        .unwrap_or(x)
}

/// Certified-global route: bisection on the power with the convex
/// ball-intersection test at each level.
pub fn solve_by_bisection(prob: &PlacementProblem) -> PlacementSolution {
    let started = Instant::now();
    let mut steps = 1;
    if let Some(x) = ball_intersection_point(0.0, prob) {
        return PlacementSolution::assemble(prob, x, 0.0, SolverStatus::Optimal, steps, started.elapsed());
    }
    steps += 1;
    let Some(mut best) = ball_intersection_point(prob.p_max_dbm, prob) else {
        return PlacementSolution::infeasible(prob, steps, started.elapsed());
    };
    let (mut lo, mut hi) = (0.0, prob.p_max_dbm);
    while hi - lo > BISECTION_TOL_DB {
        let mid = 0.5 * (lo + hi);
        steps += 1;
        match ball_intersection_point(mid, prob) {
            Some(x) => {
                hi = mid;
                best = x;
            }
            None => lo = mid,
        }
    }
    let p_t = required_power_at(best, prob).clamp(0.0, hi);
    PlacementSolution::assemble(prob, best, p_t, SolverStatus::Optimal, steps, started.elapsed())
}
