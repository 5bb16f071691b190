use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FusionError {
    #[error("no detections to fuse")]
    Empty,
}

/// Ground-plane footprint of one camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub id: u32,
    /// Projection of the camera onto the field, mm.
    pub center: Vec2,
    /// Radius of the covered disc, mm.
    pub coverage_radius: f64,
    /// Detections folded into `center` so far.
    #[serde(default)]
    pub observations: u64,
}

impl CameraModel {
    pub fn new(id: u32, center: Vec2, coverage_radius: f64) -> Self {
        Self {
            id,
            center,
            coverage_radius,
            observations: 0,
        }
    }

    pub fn covers(&self, p: Vec2, tolerance: f64) -> bool {
        p.distance(self.center) <= self.coverage_radius * (1.0 + tolerance)
    }

    /// Folds one detection into the running centroid and grows the coverage
    /// radius to include it.
    pub fn refine(&self, position: Vec2) -> CameraModel {
        let n = self.observations as f64;
        let center = (self.center * n + position) / (n + 1.0);
        CameraModel {
            id: self.id,
            center,
            coverage_radius: self.coverage_radius.max(position.distance(self.center)),
            observations: self.observations + 1,
        }
    }

    /// Grows the coverage radius only; the center is held fixed.
    pub fn extend(&self, position: Vec2) -> CameraModel {
        CameraModel {
            coverage_radius: self.coverage_radius.max(position.distance(self.center)),
            observations: self.observations + 1,
            ..*self
        }
    }
}

/// How each camera's detection is weighted when one object is seen by
/// several cameras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionWeighting {
    /// `|r − c| / R`: grows toward the edge of the camera's view.
    #[default]
    Distance,
    /// `max(1 − |r − c| / R, 0)`: favors detections near the camera center.
    InverseDistance,
}

impl FusionWeighting {
    pub fn weight(self, position: Vec2, camera: &CameraModel) -> f64 {
        let ratio = position.distance(camera.center) / camera.coverage_radius;
        match self {
            FusionWeighting::Distance => ratio,
            FusionWeighting::InverseDistance => (1.0 - ratio).max(0.0),
        }
    }
}

/// Weighted mean of one object's detections across cameras. Falls back to the
/// plain mean when every weight is zero.
pub fn fuse_detections(
    detections: &[(Vec2, &CameraModel)],
    weighting: FusionWeighting,
) -> Result<Vec2, FusionError> {
    if detections.is_empty() {
        return Err(FusionError::Empty);
    }
    let mut sum = Vec2::ZERO;
    let mut total = 0.0;
    for &(p, cam) in detections {
        let w = weighting.weight(p, cam);
        sum += p * w;
        total += w;
    }
    if total > 0.0 && total.is_finite() {
        return Ok(sum / total);
    }
    let n = detections.len() as f64;
    Ok(detections.iter().fold(Vec2::ZERO, |acc, (p, _)| acc + *p) / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_camera_is_identity() {
        let cam = CameraModel::new(0, Vec2::ZERO, 4000.0);
        let p = Vec2::new(1000.0, 500.0);
        assert_eq!(fuse_detections(&[(p, &cam)], FusionWeighting::Distance).unwrap(), p);
    }

    #[test]
    fn symmetric_pair_gives_midpoint() {
        let a = CameraModel::new(0, Vec2::new(-1000.0, 0.0), 4000.0);
        let b = CameraModel::new(1, Vec2::new(3000.0, 0.0), 4000.0);
        let out = fuse_detections(
            &[(Vec2::new(990.0, 0.0), &a), (Vec2::new(1010.0, 0.0), &b)],
            FusionWeighting::Distance,
        )
        .unwrap();
        assert_abs_diff_eq!(out.x, 1000.0, epsilon = 1e-9);
        assert_eq!(out.y, 0.0);
    }

    #[test]
    fn weighted_example() {
        let a = CameraModel::new(0, Vec2::ZERO, 4000.0);
        let b = CameraModel::new(1, Vec2::new(4000.0, 0.0), 4000.0);
        let (pa, pb) = (Vec2::new(2000.0, 0.0), Vec2::new(2100.0, 0.0));
        // weights 2000/4000 = 0.5 and 1900/4000 = 0.475
        let expected = (0.5 * 2000.0 + 0.475 * 2100.0) / (0.5 + 0.475);
        let out = fuse_detections(&[(pa, &a), (pb, &b)], FusionWeighting::Distance).unwrap();
        assert_abs_diff_eq!(out.x, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(out.x, 2048.72, epsilon = 0.01);

        // Inverse weighting: 0.5 and 0.525.
        let inv = fuse_detections(&[(pa, &a), (pb, &b)], FusionWeighting::InverseDistance).unwrap();
        assert_abs_diff_eq!(inv.x, (0.5 * 2000.0 + 0.525 * 2100.0) / 1.025, epsilon = 1e-9);
    }

    #[test]
    fn zero_weights_fall_back_to_mean() {
        let a = CameraModel::new(0, Vec2::new(100.0, 0.0), 4000.0);
        let b = CameraModel::new(1, Vec2::new(200.0, 0.0), 4000.0);
        let out = fuse_detections(
            &[(Vec2::new(100.0, 0.0), &a), (Vec2::new(200.0, 0.0), &b)],
            FusionWeighting::Distance,
        )
        .unwrap();
        assert_eq!(out, Vec2::new(150.0, 0.0));
        assert_eq!(fuse_detections(&[], FusionWeighting::Distance), Err(FusionError::Empty));
    }

    #[test]
    fn refine_examples() {
        let cam = CameraModel::new(0, Vec2::ZERO, 3000.0);
        assert_eq!(cam.refine(Vec2::new(3500.0, 0.0)).coverage_radius, 3500.0);
        assert_eq!(cam.refine(Vec2::new(100.0, 0.0)).coverage_radius, 3000.0);
        let seen_once = CameraModel {
            observations: 1,
            ..cam
        };
        assert_eq!(seen_once.refine(Vec2::new(100.0, 0.0)).center, Vec2::new(50.0, 0.0));
        let fixed = cam.extend(Vec2::new(0.0, 3200.0));
        assert_eq!(fixed.center, Vec2::ZERO);
        assert_eq!(fixed.coverage_radius, 3200.0);
    }
}
