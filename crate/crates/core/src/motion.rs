//! Time-optimal trapezoidal velocity planning.
//!
//! A 2-D move is split into three independent 1-D problems: translation
//! along the start→target axis, lateral velocity kill, and rotation. The
//! arrival time is the slowest of the three.

use serde::{Deserialize, Serialize};

use crate::geom::{normalize_angle, Pose, Vec2};

/// Kinematic caps. Translational values are mm/s and mm/s², rotational
/// values rad/s and rad/s².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionLimits {
    pub v_max: f64,
    pub a_acc: f64,
    pub a_dec: f64,
    pub w_max: f64,
    pub aw: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self {
            v_max: 3000.0,
            a_acc: 3000.0,
            a_dec: 4000.0,
            w_max: 10.0,
            aw: 30.0,
        }
    }
}

impl MotionLimits {
    /// Translational limits with symmetric acceleration.
    pub fn symmetric(v_max: f64, a: f64) -> Self {
        Self {
            v_max,
            a_acc: a,
            a_dec: a,
            ..Self::default()
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.v_max, self.a_acc, self.a_dec, self.w_max, self.aw]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite())
    }

    /// The rotational axis viewed as a 1-D translational problem.
    fn rotational(&self) -> MotionLimits {
        MotionLimits {
            v_max: self.w_max,
            a_acc: self.aw,
            a_dec: self.aw,
            ..*self
        }
    }
}

/// Whether the robot must be at rest on arrival or may pass through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalMode {
    #[default]
    Stop,
    FlyThrough,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub duration: f64,
    pub accel: f64,
}

/// Piecewise constant-acceleration profile starting at position 0 with
/// velocity `v0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeProfile {
    pub v0: f64,
    pub phases: Vec<Phase>,
    pub total_time: f64,
}

impl TimeProfile {
    /// Position and velocity at time `t`, holding the terminal state past the end.
    pub fn state_at(&self, t: f64) -> (f64, f64) {
        let mut pos = 0.0;
        let mut vel = self.v0;
        let mut remaining = t.max(0.0);
        for phase in &self.phases {
            let dt = remaining.min(phase.duration);
            pos += vel * dt + 0.5 * phase.accel * dt * dt;
            vel += phase.accel * dt;
            remaining -= dt;
            if remaining <= 0.0 {
                break;
            }
        }
        (pos, vel)
    }

    pub fn displacement(&self) -> f64 {
        self.state_at(self.total_time).0
    }

    pub fn final_velocity(&self) -> f64 {
        self.state_at(self.total_time).1
    }
}

/// Plans a rest-to-rest (or moving-to-rest) move of `distance` mm starting
/// at velocity `v0`. Speeding up is capped by `a_acc`, slowing down by
/// `a_dec`, speed by `v_max`.
pub fn plan_1d(distance: f64, v0: f64, limits: &MotionLimits) -> TimeProfile {
    let mut phases = Vec::with_capacity(4);
    plan_into(distance, v0, limits, &mut phases);
    let total_time = phases.iter().map(|p| p.duration).sum();
    TimeProfile {
        v0,
        phases,
        total_time,
    }
}

fn push(phases: &mut Vec<Phase>, duration: f64, accel: f64) {
    if duration > 0.0 {
        phases.push(Phase { duration, accel });
    }
}

fn plan_into(d: f64, v: f64, lim: &MotionLimits, phases: &mut Vec<Phase>) {
    if d < 0.0 || (d == 0.0 && v < 0.0) {
        let start = phases.len();
        plan_into(-d, -v, lim, phases);
        for p in &mut phases[start..] {
            p.accel = -p.accel;
        }
        return;
    }

    let (a_acc, a_dec, v_max) = (lim.a_acc, lim.a_dec, lim.v_max);

    if v < 0.0 {
        // Moving away from the target: stop first.
        push(phases, -v / a_dec, a_dec);
        plan_into(d + v * v / (2.0 * a_dec), 0.0, lim, phases);
        return;
    }

    let stop_dist = v * v / (2.0 * a_dec);
    if stop_dist > d {
        // Cannot stop in time: brake fully, then come back.
        push(phases, v / a_dec, -a_dec);
        plan_into(d - stop_dist, 0.0, lim, phases);
        return;
    }

    if v > v_max {
        let slow = (v * v - v_max * v_max) / (2.0 * a_dec);
        let brake = v_max * v_max / (2.0 * a_dec);
        push(phases, (v - v_max) / a_dec, -a_dec);
        push(phases, ((d - slow - brake) / v_max).max(0.0), 0.0);
        push(phases, v_max / a_dec, -a_dec);
        return;
    }

    let peak_sq = (d + v * v / (2.0 * a_acc)) / (1.0 / (2.0 * a_acc) + 1.0 / (2.0 * a_dec));
    let peak = peak_sq.sqrt().max(v);
    if peak <= v_max {
        push(phases, (peak - v) / a_acc, a_acc);
        push(phases, peak / a_dec, -a_dec);
    } else {
        let ramp = (v_max * v_max - v * v) / (2.0 * a_acc);
        let brake = v_max * v_max / (2.0 * a_dec);
        push(phases, (v_max - v) / a_acc, a_acc);
        push(phases, ((d - ramp - brake) / v_max).max(0.0), 0.0);
        push(phases, v_max / a_dec, -a_dec);
    }
}

/// Minimum time to first reach `distance` without a terminal velocity
/// constraint.
pub fn fly_through_time(distance: f64, v0: f64, limits: &MotionLimits) -> f64 {
    let (d, mut v) = if distance < 0.0 {
        (-distance, -v0)
    } else {
        (distance, v0)
    };
    let (a_acc, a_dec, v_max) = (limits.a_acc, limits.a_dec, limits.v_max);
    let mut t = 0.0;
    let mut d = d;
    if v < 0.0 {
        t += -v / a_dec;
        d += v * v / (2.0 * a_dec);
        v = 0.0;
    }
    if d <= 0.0 {
        return t;
    }
    if v > v_max {
        let slow = (v * v - v_max * v_max) / (2.0 * a_dec);
        if slow >= d {
            return t + (v - (v * v - 2.0 * a_dec * d).sqrt()) / a_dec;
        }
        return t + (v - v_max) / a_dec + (d - slow) / v_max;
    }
    let ramp = (v_max * v_max - v * v) / (2.0 * a_acc);
    if ramp >= d {
        t + ((v * v + 2.0 * a_acc * d).sqrt() - v) / a_acc
    } else {
        t + (v_max - v) / a_acc + (d - ramp) / v_max
    }
}

/// Time for an omnidirectional robot to reach `target` (and optionally the
/// heading `target_theta`) from `start` moving at `v_start`.
pub fn arrival_time(
    start: Pose,
    v_start: Vec2,
    target: Vec2,
    target_theta: Option<f64>,
    limits: &MotionLimits,
) -> f64 {
    arrival_time_with(ArrivalMode::Stop, start, v_start, target, target_theta, limits)
}

pub fn arrival_time_with(
    mode: ArrivalMode,
    start: Pose,
    v_start: Vec2,
    target: Vec2,
    target_theta: Option<f64>,
    limits: &MotionLimits,
) -> f64 {
    let delta = target - start.pos;
    let distance = delta.norm();
    let axis = if distance > 0.0 {
        delta / distance
    } else {
        Vec2::new(1.0, 0.0)
    };
    let v_along = v_start.dot(axis);
    let v_lateral = v_start.cross(axis);

    let t_along = match mode {
        ArrivalMode::Stop => plan_1d(distance, v_along, limits).total_time,
        ArrivalMode::FlyThrough => fly_through_time(distance, v_along, limits),
    };
    // Lateral velocity is only driven to zero.
    let t_lateral = v_lateral.abs() / limits.a_dec;
    let t_rot = target_theta
        .map(|theta| {
            let turn = normalize_angle(theta - start.theta());
            plan_1d(turn, 0.0, &limits.rotational()).total_time
        })
        .unwrap_or(0.0);

    t_along.max(t_lateral).max(t_rot)
}

/// Arrival time to a point with unconstrained final heading.
pub fn predict_robot_arrival_time(
    robot_pos: Vec2,
    robot_vel: Vec2,
    point: Vec2,
    limits: &MotionLimits,
) -> f64 {
    arrival_time(Pose::new(robot_pos, 0.0), robot_vel, point, None, limits)
}
