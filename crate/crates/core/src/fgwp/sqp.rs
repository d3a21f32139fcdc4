//! Sequential quadratic programming over `v = (x, y, z, P_T)`.
//!
//! Link constraints are kept in the squared-distance form
//!
//! ```text
//! c_i(v) = 10^((K + P_T - SNR_i) / 10) - |x - P_i|^2 >= 0
//! ```
//!
//! and separation as `|x - P_i|^2 - d_min^2 >= 0`. Each major iteration
//! solves an elastic QP (one shared slack `t` with a large linear cost keeps
//! the linearisation feasible far from the solution), then runs a
//! backtracking line search on the L1 merit `P_T + sum_i mu_i max(0, -c_i)`
//! with a second-order correction against the Maratos effect. The model
//! Hessian is the exact Lagrangian Hessian, made positive definite.

use super::qp::{solve_qp, QpError};
use crate::geometry::Point3;
use crate::problem::PlacementProblem;

const LN10_OVER_10: f64 = std::f64::consts::LN_10 / 10.0;
const ELASTIC_COST: f64 = 1e4;
const ELASTIC_CURVATURE: f64 = 1.0;
const ARMIJO: f64 = 1e-4;
const CURVATURE_FLOOR: f64 = 1e-2;

pub const POWER_STEP_TOL_DB: f64 = 1e-8;
pub const POSITION_STEP_TOL_M: f64 = 1e-6;
/// Metres.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Accepted violation (metres) when the line search can no longer make
/// progress on a step below the step tolerances.
const STALL_VIOLATION_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqpOutcome {
    Converged,
    MaxIterations,
    /// The QP subproblem could not be solved.
    Breakdown,
}

#[derive(Debug, Clone, Copy)]
pub struct SqpResult {
    pub position: Point3,
    pub p_t_dbm: f64,
    pub iterations: usize,
    pub outcome: SqpOutcome,
    /// Largest constraint violation at the final iterate, metres.
    pub violation: f64,
}

type Vec4 = [f64; 4];

struct Model<'a> {
    prob: &'a PlacementProblem,
    d_min_sq: f64,
}

impl Model<'_> {
    fn n(&self) -> usize {
        self.prob.len()
    }

    /// Constraint values: links first, then separations.
    fn constraints(&self, v: &Vec4, out: &mut Vec<f64>) {
        out.clear();
        let x = Point3::new(v[0], v[1], v[2]);
        for (p, snr) in self.prob.fap_positions.iter().zip(&self.prob.required_snrs) {
            let r2 = 10f64.powf((self.prob.k_db + v[3] - snr) / 10.0);
            out.push(r2 - (x - *p).norm_squared());
        }
        for p in &self.prob.fap_positions {
            out.push((x - *p).norm_squared() - self.d_min_sq);
        }
    }

    fn jacobian(&self, v: &Vec4, out: &mut Vec<Vec4>) {
        out.clear();
        let x = Point3::new(v[0], v[1], v[2]);
        for (p, snr) in self.prob.fap_positions.iter().zip(&self.prob.required_snrs) {
            let r2 = 10f64.powf((self.prob.k_db + v[3] - snr) / 10.0);
            let u = x - *p;
            out.push([-2.0 * u.x, -2.0 * u.y, -2.0 * u.z, LN10_OVER_10 * r2]);
        }
        for p in &self.prob.fap_positions {
            let u = x - *p;
            out.push([2.0 * u.x, 2.0 * u.y, 2.0 * u.z, 0.0]);
        }
    }

    fn lower(&self) -> Vec4 {
        let b = &self.prob.bounds;
        [b.min.x, b.min.y, b.min.z, 0.0]
    }

    fn upper(&self) -> Vec4 {
        let b = &self.prob.bounds;
        [b.max.x, b.max.y, b.max.z, self.prob.p_max_dbm]
    }
}

fn l1_violation(c: &[f64], weights: &[f64]) -> f64 {
    c.iter().zip(weights).map(|(ci, w)| w * (-ci).max(0.0)).sum()
}

/// Largest violation in metres: `d_i - r_i` for links, `d_min - d_i` for
/// separations.
fn max_violation(model: &Model, v: &Vec4) -> f64 {
    let x = Point3::new(v[0], v[1], v[2]);
    let radii = model.prob.radii_at(v[3]);
    model.prob.fap_positions.iter().zip(radii).fold(0.0, |m, (p, r)| {
        let d = x.distance(*p);
        m.max(d - r).max(model.prob.d_min_m - d)
    })
}

struct Step {
    d: Vec4,
    multipliers: Vec<f64>,
}

/// Solves the elastic QP at `v`. `values` are the constraint values used
/// as right-hand sides, which differ from `c(v)` for the correction step.
fn qp_step(model: &Model, b: &[[f64; 4]; 4], v: &Vec4, values: &[f64], jac: &[Vec4]) -> Result<Step, QpError> {
    let m = values.len();
    let mut g = [[0.0; 5]; 5];
    for i in 0..4 {
        g[i][..4].copy_from_slice(&b[i]);
    }
    g[4][4] = ELASTIC_CURVATURE;
    let a = [0.0, 0.0, 0.0, 1.0, ELASTIC_COST];

    let mut rows: Vec<[f64; 5]> = Vec::with_capacity(m + 9);
    let mut rhs: Vec<f64> = Vec::with_capacity(m + 9);
    for (j, c) in jac.iter().zip(values) {
        rows.push([j[0], j[1], j[2], j[3], 1.0]);
        rhs.push(-c);
    }
    rows.push([0.0, 0.0, 0.0, 0.0, 1.0]);
    rhs.push(0.0);
    let (lo, hi) = (model.lower(), model.upper());
    for k in 0..4 {
        let mut e = [0.0; 5];
        e[k] = 1.0;
        rows.push(e);
        rhs.push(lo[k] - v[k]);
        e[k] = -1.0;
        rows.push(e);
        rhs.push(v[k] - hi[k]);
    }
    let sol = solve_qp(&g, &a, &rows, &rhs)?;
    Ok(Step {
        d: [sol.z[0], sol.z[1], sol.z[2], sol.z[3]],
        multipliers: sol.multipliers[..m].to_vec(),
    })
}

fn clamp_to_box(model: &Model, v: &mut Vec4) {
    let (lo, hi) = (model.lower(), model.upper());
    for k in 0..4 {
        v[k] = v[k].clamp(lo[k], hi[k]);
    }
}

fn add_scaled(v: &Vec4, d: &Vec4, alpha: f64) -> Vec4 {
    [v[0] + alpha * d[0], v[1] + alpha * d[1], v[2] + alpha * d[2], v[3] + alpha * d[3]]
}

/// Hessian of the Lagrangian at `v`, convexified: the position block is
/// `2 (sum of link multipliers - sum of separation multipliers) I`, floored,
/// and the power entry (negative in the true Hessian) is taken in magnitude.
fn lagrangian_hessian(model: &Model, v: &Vec4, lambda: &[f64]) -> [[f64; 4]; 4] {
    let n = model.n();
    let link: f64 = lambda[..n].iter().sum();
    let sep: f64 = lambda[n..].iter().sum();
    let xx = (2.0 * (link - sep)).max(CURVATURE_FLOOR);
    let pp: f64 = model
        .prob
        .required_snrs
        .iter()
        .zip(&lambda[..n])
        .map(|(snr, l)| l * LN10_OVER_10 * LN10_OVER_10 * 10f64.powf((model.prob.k_db + v[3] - snr) / 10.0))
        .sum();
    let pp = pp.max(CURVATURE_FLOOR);
    let mut h = [[0.0; 4]; 4];
    h[0][0] = xx;
    h[1][1] = xx;
    h[2][2] = xx;
    h[3][3] = pp;
    h
}

fn identity() -> [[f64; 4]; 4] {
    let mut b = [[0.0; 4]; 4];
    for (i, row) in b.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    b
}

pub fn minimize(prob: &PlacementProblem, start: Point3, p_start_dbm: f64, max_iterations: usize) -> SqpResult {
    let model = Model { prob, d_min_sq: prob.d_min_m * prob.d_min_m };
    let m = 2 * model.n();
    let mut v: Vec4 = [start.x, start.y, start.z, p_start_dbm];
    clamp_to_box(&model, &mut v);

    let mut b = identity();
    let mut weights = vec![0.0; m];
    let (mut c, mut jac) = (Vec::with_capacity(m), Vec::with_capacity(m));
    let (mut c_trial, mut jac_trial) = (Vec::with_capacity(m), Vec::with_capacity(m));
    model.constraints(&v, &mut c);
    model.jacobian(&v, &mut jac);

    let finish = |v: &Vec4, iterations, outcome| SqpResult {
        position: Point3::new(v[0], v[1], v[2]),
        p_t_dbm: v[3],
        iterations,
        outcome,
        violation: max_violation(&model, v),
    };
    let mut stalled = false;

    for iter in 0..max_iterations {
        let step = match qp_step(&model, &b, &v, &c, &jac) {
            Ok(s) => s,
            Err(QpError::NotPositiveDefinite) => {
                b = identity();
                continue;
            }
            Err(_) => return finish(&v, iter, SqpOutcome::Breakdown),
        };
        let d = step.d;
        let dx = d[0].abs().max(d[1].abs()).max(d[2].abs());
        let small_step = d[3].abs() < POWER_STEP_TOL_DB && dx < POSITION_STEP_TOL_M;
        if small_step && max_violation(&model, &v) < VIOLATION_TOL {
            return finish(&v, iter + 1, SqpOutcome::Converged);
        }

        for (w, l) in weights.iter_mut().zip(&step.multipliers) {
            *w = l.max(0.5 * (*w + l));
        }
        let merit = |v: &Vec4, c: &[f64]| v[3] + l1_violation(c, &weights);
        let phi0 = merit(&v, &c);
        let linear_violation: f64 = c
            .iter()
            .zip(&jac)
            .zip(&weights)
            .map(|((ci, j), w)| w * (-(ci + j[0] * d[0] + j[1] * d[1] + j[2] * d[2] + j[3] * d[3])).max(0.0))
            .sum();
        let predicted = (l1_violation(&c, &weights) - linear_violation - d[3]).max(0.0);

        let mut accepted: Option<Vec4> = None;
        let mut alpha = 1.0;
        while alpha > 1e-10 {
            let mut trial = add_scaled(&v, &d, alpha);
            clamp_to_box(&model, &mut trial);
            model.constraints(&trial, &mut c_trial);
            if merit(&trial, &c_trial) <= phi0 - ARMIJO * alpha * predicted {
                accepted = Some(trial);
                break;
            }
            if alpha == 1.0 {
                // second-order correction: re-linearise the constraint values at v + d
                let corrected: Vec<f64> = c_trial
                    .iter()
                    .zip(&jac)
                    .map(|(ct, j)| ct - (j[0] * d[0] + j[1] * d[1] + j[2] * d[2] + j[3] * d[3]))
                    .collect();
                if let Ok(soc) = qp_step(&model, &b, &v, &corrected, &jac) {
                    let mut trial = add_scaled(&v, &soc.d, 1.0);
                    clamp_to_box(&model, &mut trial);
                    model.constraints(&trial, &mut c_trial);
                    if merit(&trial, &c_trial) <= phi0 - ARMIJO * predicted {
                        accepted = Some(trial);
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }

        let Some(next) = accepted else {
            // no merit decrease along d: the merit is flat to rounding at a
            // tiny step, or else fall back to the identity model once
            if small_step && max_violation(&model, &v) < STALL_VIOLATION_TOL {
                return finish(&v, iter + 1, SqpOutcome::Converged);
            }
            if stalled {
                return finish(&v, iter + 1, SqpOutcome::Breakdown);
            }
            stalled = true;
            b = identity();
            continue;
        };
        stalled = false;

        model.constraints(&next, &mut c_trial);
        model.jacobian(&next, &mut jac_trial);
        b = lagrangian_hessian(&model, &next, &step.multipliers);

        v = next;
        std::mem::swap(&mut c, &mut c_trial);
        std::mem::swap(&mut jac, &mut jac_trial);
    }
    finish(&v, max_iterations, SqpOutcome::MaxIterations)
}
