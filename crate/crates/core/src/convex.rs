//! Box-constrained minimisation of the ball-excess function
//!
//! ```text
//! h(x) = max_i ( |x - c_i| - r_i )
//! ```
//!
//! `h(x) <= 0` exactly when `x` lies in every closed ball `B(c_i, r_i)`, so
//! the sign of `min h` decides whether the balls intersect inside the box.
//!
//! The epigraph form `min s  s.t.  |x - c_i| <= r_i + s` is a small
//! second-order cone program in `(x, s)`. It is solved with a log-barrier
//! path-following method: each cone contributes `-ln((r_i + s)^2 - |x - c_i|^2)`
//! and each linear face `a.x <= b` contributes `-ln(b - a.x)`. Newton steps on
//! the 4x4 system follow the central path until the duality gap bound
//! `nu / tau` drops below [`GAP_TOLERANCE`].

use crate::geometry::{BoundingBox, Point3};
use crate::linalg::cholesky_solve;

pub const GAP_TOLERANCE: f64 = 1e-10;
const TAU_GROWTH: f64 = 12.0;
const MAX_NEWTON_STEPS: usize = 80;

/// Linear constraint `normal . x <= offset`.
#[derive(Debug, Clone, Copy)]
pub struct HalfSpace {
    pub normal: Point3,
    pub offset: f64,
}

impl HalfSpace {
    fn slack(&self, x: Point3) -> f64 {
        self.offset - self.normal.dot(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessMinimum {
    pub point: Point3,
    /// `h(point)`.
    pub value: f64,
    pub newton_steps: usize,
}

/// `h(x)` evaluated directly.
pub fn excess(x: Point3, centers: &[Point3], radii: &[f64]) -> f64 {
    centers
        .iter()
        .zip(radii)
        .map(|(c, r)| x.distance(*c) - r)
        .fold(f64::NEG_INFINITY, f64::max)
}

struct Barrier<'a> {
    centers: &'a [Point3],
    radii: &'a [f64],
    faces: Vec<HalfSpace>,
}

impl Barrier<'_> {
    fn nu(&self) -> f64 {
        2.0 * self.centers.len() as f64 + self.faces.len() as f64
    }

    /// Barrier value, or `None` outside the strict interior.
    fn value(&self, x: Point3, s: f64) -> Option<f64> {
        let mut total = 0.0;
        for (c, r) in self.centers.iter().zip(self.radii) {
            let t = r + s;
            let u2 = (x - *c).norm_squared();
            if !(t > 0.0 && t * t > u2) {
                return None;
            }
            total -= (t * t - u2).ln();
        }
        for f in &self.faces {
            let sl = f.slack(x);
            if !(sl > 0.0) {
                return None;
            }
            total -= sl.ln();
        }
        Some(total)
    }

    fn grad_hess(&self, x: Point3, s: f64) -> ([f64; 4], [[f64; 4]; 4]) {
        let mut g = [0.0; 4];
        let mut h = [[0.0; 4]; 4];
        for (c, r) in self.centers.iter().zip(self.radii) {
            let t = r + s;
            let u = x - *c;
            let w = t * t - u.norm_squared();
            // d(ln w) components: dw = (-2u, 2t)
            let dw = [-2.0 * u.x, -2.0 * u.y, -2.0 * u.z, 2.0 * t];
            for i in 0..4 {
                g[i] -= dw[i] / w;
                for j in 0..4 {
                    h[i][j] += dw[i] * dw[j] / (w * w);
                }
            }
            for i in 0..3 {
                h[i][i] += 2.0 / w;
            }
            h[3][3] -= 2.0 / w;
        }
        for f in &self.faces {
            let sl = f.slack(x);
            let a = [f.normal.x, f.normal.y, f.normal.z];
            for i in 0..3 {
                g[i] += a[i] / sl;
                for j in 0..3 {
                    h[i][j] += a[i] * a[j] / (sl * sl);
                }
            }
        }
        (g, h)
    }
}

fn box_faces(bounds: &BoundingBox) -> [HalfSpace; 6] {
    let axes = [Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(0.0, 0.0, 1.0)];
    let mut out = [HalfSpace { normal: Point3::ORIGIN, offset: 0.0 }; 6];
    for k in 0..3 {
        out[2 * k] = HalfSpace { normal: axes[k], offset: bounds.max[k] };
        out[2 * k + 1] = HalfSpace { normal: axes[k] * -1.0, offset: -bounds.min[k] };
    }
    out
}

/// Pulls `p` strictly inside the box by a small fraction of each extent.
pub fn interior_point(bounds: &BoundingBox, p: Point3) -> Point3 {
    let e = bounds.extent();
    let shrink = |v: f64, lo: f64, hi: f64, ext: f64| {
        let m = 1e-3 * ext;
        v.clamp(lo + m, hi - m)
    };
    Point3::new(
        shrink(p.x, bounds.min.x, bounds.max.x, e.x),
        shrink(p.y, bounds.min.y, bounds.max.y, e.y),
        shrink(p.z, bounds.min.z, bounds.max.z, e.z),
    )
}

/// Minimises `h` over `bounds` intersected with `extra` half-spaces,
/// starting from `start`. Returns `None` when `start` (pulled into the box)
/// violates one of `extra`, since the method needs a strictly interior start.
pub fn minimize_excess(
    centers: &[Point3],
    radii: &[f64],
    bounds: &BoundingBox,
    extra: &[HalfSpace],
    start: Point3,
) -> Option<ExcessMinimum> {
    debug_assert_eq!(centers.len(), radii.len());
    let mut faces = box_faces(bounds).to_vec();
    faces.extend_from_slice(extra);
    let barrier = Barrier { centers, radii, faces };

    let mut x = interior_point(bounds, start);
    if barrier.faces.iter().any(|f| !(f.slack(x) > 0.0)) {
        return None;
    }
    let mut s = excess(x, centers, radii) + 1.0;
    let nu = barrier.nu();
    let mut tau = 1.0;
    let mut steps = 0;

    let objective = |x: Point3, s: f64, tau: f64| barrier.value(x, s).map(|b| tau * s + b);

    loop {
        for _ in 0..MAX_NEWTON_STEPS {
            let (mut g, h) = barrier.grad_hess(x, s);
            g[3] += tau;
            let neg_g = [-g[0], -g[1], -g[2], -g[3]];
            let Some(dir) = solve_regularized(&h, &neg_g) else { break };
            let decrement = -(g[0] * dir[0] + g[1] * dir[1] + g[2] * dir[2] + g[3] * dir[3]);
            if !(decrement > 1e-14) {
                break;
            }
            steps += 1;
            let f0 = objective(x, s, tau).expect("iterate stays interior");
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-12 {
                let xn = x + Point3::new(dir[0], dir[1], dir[2]) * alpha;
                let sn = s + dir[3] * alpha;
                if let Some(f1) = objective(xn, sn, tau) {
                    if f1 <= f0 - 0.25 * alpha * decrement {
                        x = xn;
                        s = sn;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved || decrement < 1e-11 {
                break;
            }
        }
        if nu / tau < GAP_TOLERANCE {
            break;
        }
        tau *= TAU_GROWTH;
    }

    Some(ExcessMinimum { point: x, value: excess(x, centers, radii), newton_steps: steps })
}

fn solve_regularized(h: &[[f64; 4]; 4], b: &[f64; 4]) -> Option<[f64; 4]> {
    if let Some(x) = cholesky_solve(h, b) {
        return Some(x);
    }
    let scale = (0..4).map(|i| h[i][i].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = *h;
    for (i, row) in reg.iter_mut().enumerate() {
        row[i] += 1e-12 * scale;
    }
    cholesky_solve(&reg, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn venue() -> BoundingBox {
        BoundingBox::centered(15.0, 15.0, 20.0)
    }

    #[test]
    fn single_ball_minimum_is_its_center() {
        let c = [Point3::new(1.0, 2.0, -3.0)];
        let m = minimize_excess(&c, &[4.0], &venue(), &[], Point3::new(6.0, 6.0, 9.0)).unwrap();
        assert!(m.point.distance(c[0]) < 1e-6, "{:?}", m);
        assert!((m.value + 4.0).abs() < 1e-6);
    }

    #[test]
    fn two_balls_balance_on_the_segment() {
        // max(|x-a| - 1, |x-b| - 3) with |a-b| = 10 balances at distance 4 from a
        let c = [Point3::new(-5.0, 0.0, 0.0), Point3::new(5.0, 0.0, 0.0)];
        let m = minimize_excess(&c, &[1.0, 3.0], &venue(), &[], Point3::ORIGIN).unwrap();
        assert!(m.point.distance(Point3::new(-1.0, 0.0, 0.0)) < 1e-6, "{:?}", m);
        assert!((m.value - 3.0).abs() < 1e-8);
    }

    #[test]
    fn box_constraint_is_respected() {
        let c = [Point3::new(20.0, 0.0, 0.0)];
        let m = minimize_excess(&c, &[1.0], &venue(), &[], Point3::ORIGIN).unwrap();
        assert!((m.point.x - 7.5).abs() < 1e-6 && m.point.x <= 7.5);
        assert!((m.value - 11.5).abs() < 1e-6);
    }

    #[test]
    fn half_space_pushes_minimiser_out() {
        let c = [Point3::ORIGIN];
        let hs = HalfSpace { normal: Point3::new(-1.0, 0.0, 0.0), offset: -1.0 }; // x >= 1
        let m = minimize_excess(&c, &[3.0], &venue(), &[hs], Point3::new(5.0, 0.0, 0.0)).unwrap();
        assert!((m.point.x - 1.0).abs() < 1e-6 && m.point.x > 1.0);
        assert!(minimize_excess(&c, &[3.0], &venue(), &[hs], Point3::ORIGIN).is_none());
    }
}
