use serde::{Deserialize, Serialize};

use super::TacticsError;
use crate::geom::{GeomError, Vec2};
use crate::interception::InterceptSetup;

/// A pass from `ball` toward the opponent receiver at `receiver`, defended in
/// front of the goal at `goal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkingInput {
    pub ball: Vec2,
    pub receiver: Vec2,
    pub goal: Vec2,
    /// Fastest pass the opponent can play, mm/s.
    pub ball_speed_max: f64,
    /// Fraction of the way from the circle edge back toward its center.
    pub lambda: f64,
}

impl MarkingInput {
    pub const DEFAULT_BALL_SPEED: f64 = 6500.0;
    pub const DEFAULT_LAMBDA: f64 = 0.15;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkingPoint {
    /// Where our defender should stand.
    pub mark: Vec2,
    /// The receiver's best interception point.
    pub center: Vec2,
    /// |center − receiver|.
    pub radius: f64,
    /// Where the segment center→goal leaves the circle (or the goal itself).
    pub edge: Vec2,
}

/// Places the mark on segment `center`→`goal`: first the point where it
/// crosses the circle (or `goal` if that lies inside), then a `lambda` step
/// back toward `center`.
pub fn mark_on_circle(center: Vec2, radius: f64, goal: Vec2, lambda: f64) -> (Vec2, Vec2) {
    let to_goal = goal - center;
    let d = to_goal.norm();
    let edge = if d <= radius { goal } else { center + to_goal * (radius / d) };
    (edge + (center - edge) * lambda, edge)
}

/// Marking position against a receiver standing still. `setup.limits` are
/// the opponent's limits; our robot is assumed to be equally capable.
pub fn marking_point(input: &MarkingInput, setup: &InterceptSetup) -> Result<MarkingPoint, TacticsError> {
    if !(0.0..=1.0).contains(&input.lambda) {
        return Err(TacticsError::Lambda(input.lambda));
    }
    let dir = (input.receiver - input.ball)
        .normalized()
        .map_err(|_| TacticsError::Geom(GeomError::Degenerate))?;
    let pass = dir * input.ball_speed_max;
    let o = setup.intercept(input.ball, pass, input.receiver, Vec2::ZERO)?.p_best;
    let radius = o.distance(input.receiver);
    let (mark, edge) = mark_on_circle(o, radius, input.goal, input.lambda);
    Ok(MarkingPoint {
        mark,
        center: o,
        radius,
        edge,
    })
}
