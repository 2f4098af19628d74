use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Planar point or direction in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum AngleError {
    #[error("angle is undefined for a zero-length vector")]
    ZeroVector,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_zero(self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n == 0.0 {
            None
        } else {
            Some(Vec2::new(self.x / n, self.y / n))
        }
    }

    pub fn from_angle(radians: f64) -> Vec2 {
        Vec2::new(radians.cos(), radians.sin())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Euclidean distance between two points.
pub fn distance(a: Vec2, b: Vec2) -> f64 {
    (b - a).norm()
}

/// Unsigned angle between two non-zero vectors, in [0, pi].
///
/// Computed from the normalized dot product; callers must exclude
/// zero-length vectors (e.g. a neighbor co-located with the sender).
pub fn angle_between(v1: Vec2, v2: Vec2) -> Result<f64, AngleError> {
    let n1 = v1.norm();
    let n2 = v2.norm();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(AngleError::ZeroVector);
    }
    let cos = (v1.dot(v2) / (n1 * n2)).clamp(-1.0, 1.0);
    Ok(cos.acos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn orthogonal_vectors_are_half_pi_apart() {
        let a = angle_between(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)).unwrap();
        assert!((a - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn collinear_vectors_have_zero_angle_regardless_of_scale() {
        let a = angle_between(Vec2::new(1.0, 0.0), Vec2::new(3.0, 0.0)).unwrap();
        assert_eq!(a, 0.0);
    }

    #[test]
    fn nine_degree_offset() {
        let theta = 9.0_f64.to_radians();
        let a = angle_between(Vec2::new(1.0, 0.0), Vec2::from_angle(theta)).unwrap();
        assert!((a - 0.157_079_6).abs() < 1e-6, "got {a}");
    }

    #[test]
    fn opposite_vectors_are_pi_apart() {
        let a = angle_between(Vec2::new(2.0, 0.0), Vec2::new(-1.0, 0.0)).unwrap();
        assert!((a - PI).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_is_an_error() {
        assert_eq!(
            angle_between(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)),
            Err(AngleError::ZeroVector)
        );
    }

    #[test]
    fn distances() {
        assert_eq!(distance(Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0)), 0.0);
        assert_eq!(distance(Vec2::new(0.0, 0.0), Vec2::new(3.0, 4.0)), 5.0);
        assert_eq!(distance(Vec2::new(10.0, 10.0), Vec2::new(376.0, 10.0)), 366.0);
    }
}
