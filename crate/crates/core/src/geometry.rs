//! Small fixed-size 3-D vector and axis-aligned box helpers.

use std::ops::{Add, Index, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A point (or displacement) in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Componentwise maximum absolute difference.
    pub fn max_abs_diff(self, other: Point3) -> f64 {
        let d = self - other;
        d.x.abs().max(d.y.abs()).max(d.z.abs())
    }

    /// Arithmetic mean of a non-empty set of points.
    pub fn centroid(points: &[Point3]) -> Point3 {
        let n = points.len() as f64;
        let sum = points.iter().fold(Point3::ORIGIN, |acc, p| acc + *p);
        sum * (1.0 / n)
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Index<usize> for Point3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Point3 index {i} out of range"),
        }
    }
}

/// Closed axis-aligned box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point3,
    pub max: Point3,
}

impl BoundingBox {
    pub fn new(min: Point3, max: Point3) -> Self {
        Self { min, max }
    }

    /// Box of the given dimensions centred on the origin.
    pub fn centered(x: f64, y: f64, z: f64) -> Self {
        Self::new(Point3::new(-x / 2.0, -y / 2.0, -z / 2.0), Point3::new(x / 2.0, y / 2.0, z / 2.0))
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn contains(&self, p: Point3, tol: f64) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] - tol && p[k] <= self.max[k] + tol)
    }

    pub fn project(&self, p: Point3) -> Point3 {
        Point3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }

    pub fn translated(&self, v: Point3) -> Self {
        Self::new(self.min + v, self.max + v)
    }

    /// The eight corners, in binary order of (x, y, z) high bits.
    pub fn corners(&self) -> [Point3; 8] {
        let mut out = [Point3::ORIGIN; 8];
        for (bits, c) in out.iter_mut().enumerate() {
            *c = Point3::new(
                if bits & 1 == 0 { self.min.x } else { self.max.x },
                if bits & 2 == 0 { self.min.y } else { self.max.y },
                if bits & 4 == 0 { self.min.z } else { self.max.z },
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_clamps_each_axis() {
        let b = BoundingBox::centered(15.0, 15.0, 20.0);
        let p = b.project(Point3::new(9.0, -1.0, -12.0));
        assert_eq!(p, Point3::new(7.5, -1.0, -10.0));
        assert!(b.contains(p, 0.0));
    }

    #[test]
    fn centroid_of_symmetric_pair_is_midpoint() {
        let c = Point3::centroid(&[Point3::new(-5.0, 0.0, 0.0), Point3::new(5.0, 2.0, 0.0)]);
        assert_eq!(c, Point3::new(0.0, 1.0, 0.0));
    }
}
