//! Dense strictly convex QP via the Goldfarb-Idnani dual active-set method:
//!
//! ```text
//! minimize   1/2 z'Gz + a'z
//! subject to c_j'z >= b_j
//! ```
//!
//! Sized for the SQP subproblems (five variables, a few dozen rows), so the
//! active-set projections are rebuilt from scratch with dense solves.

use crate::linalg::{lu_solve, spd_inverse};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum QpError {
    NotPositiveDefinite,
    Infeasible,
    Singular,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct QpSolution<const N: usize> {
    pub z: [f64; N],
    /// One multiplier per row, zero for inactive rows.
    pub multipliers: Vec<f64>,
}

fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec<const N: usize>(m: &[[f64; N]; N], v: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = dot(&m[i], v);
    }
    out
}

pub(crate) fn solve_qp<const N: usize>(
    g: &[[f64; N]; N],
    a: &[f64; N],
    rows: &[[f64; N]],
    rhs: &[f64],
) -> Result<QpSolution<N>, QpError> {
    debug_assert_eq!(rows.len(), rhs.len());
    let ginv = spd_inverse(g).ok_or(QpError::NotPositiveDefinite)?;
    let ginv_rows: Vec<[f64; N]> = rows.iter().map(|r| mat_vec(&ginv, r)).collect();

    let mut z = mat_vec(&ginv, a).map(|v| -v);
    let mut active: Vec<usize> = Vec::with_capacity(N);
    let mut lambda: Vec<f64> = Vec::with_capacity(N);
    let slack = |z: &[f64; N], j: usize| dot(&rows[j], z) - rhs[j];
    let scale: Vec<f64> = rows.iter().zip(rhs).map(|(r, b)| 1.0 + dot(r, r).sqrt() + b.abs()).collect();

    let max_steps = 20 * (rows.len() + N) + 50;
    let mut steps = 0;
    loop {
        // most violated inactive row, relative to its scale
        let mut pick: Option<(usize, f64)> = None;
        for j in 0..rows.len() {
            if active.contains(&j) {
                continue;
            }
            let s = slack(&z, j) / scale[j];
            if s < -1e-13 && pick.is_none_or(|(_, best)| s < best) {
                pick = Some((j, s));
            }
        }
        let Some((p, _)) = pick else { break };
        let mut lambda_p = 0.0;

        loop {
            steps += 1;
            if steps > max_steps {
                return Err(QpError::IterationLimit);
            }
            let np = &rows[p];
            let u = ginv_rows[p];
            let q = active.len();
            let r: Vec<f64> = if q == 0 {
                Vec::new()
            } else {
                let mut m = vec![0.0; q * q];
                for (i, &ai) in active.iter().enumerate() {
                    for (k, &ak) in active.iter().enumerate() {
                        m[i * q + k] = dot(&rows[ai], &ginv_rows[ak]);
                    }
                }
                let b: Vec<f64> = active.iter().map(|&ai| dot(&rows[ai], &u)).collect();
                lu_solve(m, b, q).ok_or(QpError::Singular)?
            };
            let mut dir = u;
            for (k, &ak) in active.iter().enumerate() {
                for i in 0..N {
                    dir[i] -= r[k] * ginv_rows[ak][i];
                }
            }

            let mut partial = f64::INFINITY;
            let mut drop_at = None;
            for (k, rk) in r.iter().enumerate() {
                if *rk > 1e-14 {
                    let t = lambda[k] / rk;
                    if t < partial {
                        partial = t;
                        drop_at = Some(k);
                    }
                }
            }
            let curvature = dot(&dir, np);
            let full = if curvature > 1e-14 * dot(np, &u).max(1e-300) {
                -slack(&z, p) / curvature
            } else {
                f64::INFINITY
            };

            if full.is_infinite() && partial.is_infinite() {
                return Err(QpError::Infeasible);
            }
            let t = full.min(partial);
            if full.is_finite() {
                for i in 0..N {
                    z[i] += t * dir[i];
                }
            }
            for (k, rk) in r.iter().enumerate() {
                lambda[k] -= t * rk;
            }
            lambda_p += t;

            if full <= partial {
                active.push(p);
                lambda.push(lambda_p);
                break;
            }
            let k = drop_at.expect("partial step has a blocking row");
            active.remove(k);
            lambda.remove(k);
        }
    }

    let mut multipliers = vec![0.0; rows.len()];
    for (k, &j) in active.iter().enumerate() {
        multipliers[j] = lambda[k].max(0.0);
    }
    Ok(QpSolution { z, multipliers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_minimum_when_nothing_binds() {
        let g = [[2.0, 0.0], [0.0, 2.0]];
        let sol = solve_qp(&g, &[-2.0, -4.0], &[[1.0, 0.0]], &[-10.0]).unwrap();
        assert!((sol.z[0] - 1.0).abs() < 1e-12 && (sol.z[1] - 2.0).abs() < 1e-12);
        assert_eq!(sol.multipliers, vec![0.0]);
    }

    #[test]
    fn matches_textbook_example() {
        // minimize 1/2 x^2 + 1/2 y^2 + x  s.t.  x + 2y >= 1  ->  (-0.6, 0.8)
        let g = [[1.0, 0.0], [0.0, 1.0]];
        let sol = solve_qp(&g, &[1.0, 0.0], &[[1.0, 2.0]], &[1.0]).unwrap();
        assert!((sol.z[0] + 0.6).abs() < 1e-12 && (sol.z[1] - 0.8).abs() < 1e-12);
        assert!((sol.multipliers[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn drops_constraints_that_stop_binding() {
        // minimize (x-3)^2 + (y-3)^2 within x <= 1, y <= 1, x + y >= 0
        let g = [[2.0, 0.0], [0.0, 2.0]];
        let rows = [[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]];
        let sol = solve_qp(&g, &[-6.0, -6.0], &rows, &[-1.0, -1.0, 0.0]).unwrap();
        assert!((sol.z[0] - 1.0).abs() < 1e-12 && (sol.z[1] - 1.0).abs() < 1e-12);
        assert!((sol.multipliers[0] - 4.0).abs() < 1e-12);
        assert_eq!(sol.multipliers[2], 0.0);
    }

    #[test]
    fn detects_infeasibility() {
        let g = [[1.0]];
        let err = solve_qp(&g, &[0.0], &[[1.0], [-1.0]], &[1.0, 0.0]).unwrap_err();
        assert_eq!(err, QpError::Infeasible);
    }

    #[test]
    fn kkt_holds_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let mut l = [[0.0; 3]; 3];
            for (i, row) in l.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate().take(i + 1) {
                    *v = rng.gen_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 };
                }
            }
            let mut g = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] = (0..3).map(|k| l[i][k] * l[j][k]).sum();
                }
            }
            let a: [f64; 3] = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let m = rng.gen_range(1..8);
            let rows: Vec<[f64; 3]> =
                (0..m).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            // rhs chosen so z = 0 is feasible
            let rhs: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..0.0)).collect();
            let sol = solve_qp(&g, &a, &rows, &rhs).unwrap();
            let grad = {
                let mut v = a;
                for i in 0..3 {
                    v[i] += dot(&g[i], &sol.z);
                }
                v
            };
            for j in 0..m {
                let s = dot(&rows[j], &sol.z) - rhs[j];
                assert!(s > -1e-9);
                assert!(sol.multipliers[j] * s.abs() < 1e-8);
            }
            for i in 0..3 {
                let stat: f64 = grad[i] - (0..m).map(|j| sol.multipliers[j] * rows[j][i]).sum::<f64>();
                assert!(stat.abs() < 1e-8, "stationarity {stat}");
            }
        }
    }
}
