//! Baseline iterative gateway placement: raise the power 1 dBm at a time from
//! 0 dBm until the FAP balls intersect.

use std::time::Instant;

use crate::problem::{ball_intersection_search, PlacementProblem, PlacementSolution, SolverStatus};

pub const POWER_STEP_DB: f64 = 1.0;

/// Power levels tried by the sweep: `0, 1, ..., floor(p_max)`, then `p_max`
/// itself when it is fractional.
pub fn power_levels(p_max_dbm: f64) -> Vec<f64> {
    let mut levels: Vec<f64> = (0..=p_max_dbm.floor().max(0.0) as i64).map(|k| k as f64 * POWER_STEP_DB).collect();
    if p_max_dbm.fract() != 0.0 && p_max_dbm > 0.0 {
        levels.push(p_max_dbm);
    }
    levels
}

pub fn solve_gwp(prob: &PlacementProblem) -> PlacementSolution {
    let started = Instant::now();
    let levels = power_levels(prob.p_max_dbm);
    for (tried, p_t) in levels.iter().enumerate() {
        if let Some(x) = ball_intersection_search(*p_t, prob).point {
            return PlacementSolution::assemble(prob, x, *p_t, SolverStatus::Optimal, tried + 1, started.elapsed());
        }
    }
    PlacementSolution::infeasible(prob, levels.len(), started.elapsed())
}
