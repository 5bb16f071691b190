use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::TacticsError;
use crate::geom::{angle_between, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Skill {
    /// Run after the ball and kick it on toward the target.
    Chase,
    /// Stop the ball, turn, then shoot.
    Intercept,
    /// Meet the ball and redirect it straight to the target.
    Touch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillChoice {
    pub skill: Skill,
    /// Angle between robot→ball and ball→target, rad.
    pub theta: f64,
}

pub const CHASE_BELOW: f64 = PI / 4.0;
pub const TOUCH_ABOVE: f64 = 2.0 * PI / 3.0;

impl SkillChoice {
    /// 45° and 120° themselves belong to `Intercept`.
    pub fn from_angle(theta: f64) -> Self {
        let skill = if theta < CHASE_BELOW {
            Skill::Chase
        } else if theta <= TOUCH_ABOVE {
            Skill::Intercept
        } else {
            Skill::Touch
        };
        Self { skill, theta }
    }
}

/// Picks an interception skill for a robot at `robot` receiving at
/// `intercept_point` and playing on to `kick_target`.
pub fn select_skill(
    robot: Vec2,
    intercept_point: Vec2,
    kick_target: Vec2,
) -> Result<SkillChoice, TacticsError> {
    let theta = angle_between(intercept_point - robot, kick_target - intercept_point)?;
    Ok(SkillChoice::from_angle(theta))
}
