//! Planar vectors, poses and field geometry.
//!
//! All lengths are millimeters in a field-centered frame: +x runs along the
//! field length, +y along its width.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("zero-length vector has no direction")]
    Degenerate,
    #[error("point ({x}, {y}) lies outside the field")]
    OutsideField { x: f64, y: f64 },
    #[error("field extents must be positive, got {length} x {width}")]
    InvalidField { length: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians from +x.
    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn normalized(self) -> Result<Vec2, GeomError> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(GeomError::Degenerate);
        }
        Ok(self / n)
    }

    /// Heading of the vector in (−π, π].
    pub fn angle(self) -> f64 {
        normalize_angle(self.y.atan2(self.x))
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Vec2, t: f64) -> Vec2 {
        self + (other - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, k: f64) -> Vec2 {
        Vec2::new(self.x / k, self.y / k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub pos: Vec2,
    theta: f64,
}

impl Pose {
    pub fn new(pos: Vec2, theta: f64) -> Self {
        Self {
            pos,
            theta: normalize_angle(theta),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn set_theta(&mut self, theta: f64) {
        self.theta = normalize_angle(theta);
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }
}

/// Unsigned angle between two directions, in [0, π].
pub fn angle_between(a: Vec2, b: Vec2) -> Result<f64, GeomError> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(GeomError::Degenerate);
    }
    Ok(a.cross(b).abs().atan2(a.dot(b)))
}

/// Rectangular playing area centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGeometry {
    /// Extent along x, mm.
    pub length: f64,
    /// Extent along y, mm.
    pub width: f64,
}

impl Default for FieldGeometry {
    fn default() -> Self {
        Self {
            length: 12_000.0,
            width: 9_000.0,
        }
    }
}

impl FieldGeometry {
    pub fn new(length: f64, width: f64) -> Result<Self, GeomError> {
        if !(length > 0.0 && width > 0.0 && length.is_finite() && width.is_finite()) {
            return Err(GeomError::InvalidField { length, width });
        }
        Ok(Self { length, width })
    }

    pub fn half_length(&self) -> f64 {
        self.length / 2.0
    }

    pub fn half_width(&self) -> f64 {
        self.width / 2.0
    }

    /// Boundary points count as inside.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x.abs() <= self.half_length() && p.y.abs() <= self.half_width()
    }

    /// Converts a point measured from the (−x, −y) corner into field-centered
    /// coordinates.
    pub fn from_corner(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x - self.half_length(), p.y - self.half_width())
    }

    pub fn to_corner(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x + self.half_length(), p.y + self.half_width())
    }
}

/// First point where the ray from `origin` along `direction` meets the field
/// boundary.
pub fn ray_field_exit(
    origin: Vec2,
    direction: Vec2,
    field: &FieldGeometry,
) -> Result<Vec2, GeomError> {
    if !field.contains(origin) {
        return Err(GeomError::OutsideField {
            x: origin.x,
            y: origin.y,
        });
    }
    let dir = direction.normalized()?;
    let hl = field.half_length();
    let hw = field.half_width();

    let mut t_min = f64::INFINITY;
    let mut hit_x = None;
    if dir.x != 0.0 {
        let bound = hl.copysign(dir.x);
        let t = (bound - origin.x) / dir.x;
        if t < t_min {
            t_min = t;
            hit_x = Some(bound);
        }
    }
    let mut hit_y = None;
    if dir.y != 0.0 {
        let bound = hw.copysign(dir.y);
        let t = (bound - origin.y) / dir.y;
        if t < t_min {
            t_min = t;
            hit_x = None;
            hit_y = Some(bound);
        }
    }
    let t = t_min.max(0.0);
    let mut exit = origin + dir * t;
    // Pin the crossed coordinate exactly onto the boundary line.
    if let Some(x) = hit_x {
        exit.x = x;
        exit.y = exit.y.clamp(-hw, hw);
    } else if let Some(y) = hit_y {
        exit.y = y;
        exit.x = exit.x.clamp(-hl, hl);
    }
    Ok(exit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn angle_between_examples() {
        assert_eq!(angle_between(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            angle_between(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)).unwrap(),
            PI / 2.0,
            epsilon = 1e-15
        );
        // acos of the normalized dot product
        let a = Vec2::new(1.0, 0.0);
        let b = Vec2::new(-1.0, 1.0);
        let oracle = (a.dot(b) / (a.norm() * b.norm())).acos();
        assert_abs_diff_eq!(oracle, 3.0 * PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(angle_between(a, b).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn angle_between_rejects_zero() {
        assert_eq!(
            angle_between(Vec2::ZERO, Vec2::new(1.0, 0.0)),
            Err(GeomError::Degenerate)
        );
        assert!(angle_between(Vec2::new(1.0, 2.0), Vec2::ZERO).is_err());
    }

    #[test]
    fn ray_exit_examples() {
        let f = FieldGeometry::default();
        assert_eq!(
            ray_field_exit(Vec2::ZERO, Vec2::new(1.0, 0.0), &f).unwrap(),
            Vec2::new(6000.0, 0.0)
        );
        assert_eq!(
            ray_field_exit(Vec2::ZERO, Vec2::new(0.0, -1.0), &f).unwrap(),
            Vec2::new(0.0, -4500.0)
        );
        // x-line at t = 3000·√2, y-line at t = 2500·√2; the y-line wins.
        let p = ray_field_exit(Vec2::new(3000.0, 2000.0), Vec2::new(1.0, 1.0), &f).unwrap();
        assert_abs_diff_eq!(p.x, 5500.0, epsilon = 1e-9);
        assert_eq!(p.y, 4500.0);
    }

    #[test]
    fn ray_exit_errors() {
        let f = FieldGeometry::default();
        assert!(matches!(
            ray_field_exit(Vec2::new(7000.0, 0.0), Vec2::new(1.0, 0.0), &f),
            Err(GeomError::OutsideField { .. })
        ));
        assert_eq!(
            ray_field_exit(Vec2::ZERO, Vec2::ZERO, &f),
            Err(GeomError::Degenerate)
        );
    }

    #[test]
    fn ray_from_boundary_heads_inward() {
        let f = FieldGeometry::default();
        let p = ray_field_exit(Vec2::new(-6000.0, 0.0), Vec2::new(1.0, 0.0), &f).unwrap();
        assert_eq!(p, Vec2::new(6000.0, 0.0));
    }

    #[test]
    fn pose_normalizes() {
        let p = Pose::new(Vec2::ZERO, 3.0 * PI);
        assert_abs_diff_eq!(p.theta(), PI, epsilon = 1e-12);
        let p = Pose::new(Vec2::ZERO, -PI);
        assert_eq!(p.theta(), PI);
        assert!(FieldGeometry::new(0.0, 1.0).is_err());
    }

    fn nonzero() -> impl Strategy<Value = Vec2> {
        (-1e4..1e4f64, -1e4..1e4f64)
            .prop_filter("nonzero", |(x, y)| x.hypot(*y) > 1e-3)
            .prop_map(|(x, y)| Vec2::new(x, y))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn angle_symmetric(a in nonzero(), b in nonzero()) {
            let ab = angle_between(a, b).unwrap();
            prop_assert_eq!(ab, angle_between(b, a).unwrap());
            prop_assert!((0.0..=PI).contains(&ab));
        }

        #[test]
        fn angle_scale_invariant(a in nonzero(), b in nonzero(), k in 1e-3..1e3f64) {
            let d = angle_between(a * k, b).unwrap() - angle_between(a, b).unwrap();
            prop_assert!(d.abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn ray_exit_on_boundary(
            ox in -6000.0..6000.0f64,
            oy in -4500.0..4500.0f64,
            d in nonzero(),
        ) {
            let f = FieldGeometry::default();
            let p = ray_field_exit(Vec2::new(ox, oy), d, &f).unwrap();
            let on_x = (p.x.abs() - 6000.0).abs() < 1e-6 && p.y.abs() <= 4500.0 + 1e-6;
            let on_y = (p.y.abs() - 4500.0).abs() < 1e-6 && p.x.abs() <= 6000.0 + 1e-6;
            prop_assert!(on_x || on_y);
        }

        #[test]
        fn normalize_angle_range(a in -100.0..100.0f64) {
            let n = normalize_angle(a);
            prop_assert!(n > -PI && n <= PI);
            prop_assert!(((a - n) / (2.0 * PI)).fract().abs() < 1e-9
                || (1.0 - ((a - n) / (2.0 * PI)).fract().abs()) < 1e-9);
        }
    }
}
