//! Deterministic kinematic soccer simulator with noisy, lossy vision.
//!
//! Robots follow their commanded velocities subject to acceleration and
//! speed caps; the ball rolls under constant friction. Vision frames are the
//! ground truth plus Gaussian noise, and whole frames are dropped with the
//! configured probability. All randomness comes from the state's own
//! generator, so a run is reproducible from its seed. A ball touching a
//! robot is caught if it arrives from the front and stopped dead otherwise.

mod pass;

pub use pass::{
    pass_success_rate, run_pass_trial, sweep, Ending, PassExperiment, PassScenario, SweepParam,
    SweepPoint, TrialOutcome,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geom::{normalize_angle, FieldGeometry, Pose, Vec2};
use crate::interception::BallModel;
use crate::motion::MotionLimits;
use crate::radio::RobotCommand;
use crate::tracker::{Detection, DetectionFrame, ObjectKind, Team};

pub const BALL_RADIUS: f64 = 21.5;
/// Ball center distance from the robot center while held.
pub const DRIBBLER_OFFSET: f64 = 90.0;
/// A robot ignores the ball it just kicked for this long, s.
const KICK_COOLDOWN: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Tick, s.
    pub dt: f64,
    /// Per-axis position noise, mm.
    pub sigma_xy: f64,
    /// Orientation noise, rad.
    pub sigma_theta: f64,
    /// Probability a vision frame is dropped.
    pub packet_loss: f64,
    pub seed: u64,
    pub field: FieldGeometry,
    pub limits: MotionLimits,
    pub ball_model: BallModel,
    /// Robot center to ball center distance within which the ball is caught, mm.
    pub catch_radius: f64,
    /// Half-angle of the catching cone in front of the robot, rad.
    pub facing_cone: f64,
    /// Ball speed at full kick power, mm/s.
    pub kick_speed_max: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 60.0,
            sigma_xy: 0.0,
            sigma_theta: 0.0,
            packet_loss: 0.0,
            seed: 1,
            field: FieldGeometry::default(),
            limits: MotionLimits::default(),
            ball_model: BallModel::default(),
            catch_radius: 90.0 + BALL_RADIUS,
            facing_cone: 30f64.to_radians(),
            kick_speed_max: 6500.0,
        }
    }
}

impl SimConfig {
    pub fn is_valid(&self) -> bool {
        self.dt > 0.0
            && self.sigma_xy >= 0.0
            && self.sigma_theta >= 0.0
            && (0.0..=1.0).contains(&self.packet_loss)
            && self.limits.is_valid()
            && self.ball_model.decel > 0.0
    }

    pub fn kick_speed(&self, power: u8) -> f64 {
        power.min(RobotCommand::KICK_MAX) as f64 / RobotCommand::KICK_MAX as f64 * self.kick_speed_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimBall {
    pub pos: Vec2,
    pub vel: Vec2,
    pub holder: Option<usize>,
    /// Set once the ball crosses the field boundary; it is then frozen.
    pub out: bool,
    last_kick: Option<(usize, f64)>,
}

impl SimBall {
    pub fn free(pos: Vec2, vel: Vec2) -> Self {
        Self {
            pos,
            vel,
            holder: None,
            out: false,
            last_kick: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRobot {
    pub team: Team,
    pub number: u8,
    pub pose: Pose,
    /// World frame, mm/s.
    pub vel: Vec2,
    /// rad/s
    pub omega: f64,
}

impl SimRobot {
    pub fn at_rest(team: Team, number: u8, pose: Pose) -> Self {
        Self {
            team,
            number,
            pose,
            vel: Vec2::ZERO,
            omega: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub ball: SimBall,
    pub robots: Vec<SimRobot>,
    rng: ChaCha8Rng,
}

impl PartialEq for SimState {
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t && self.ball == other.ball && self.robots == other.robots
    }
}

/// Moves `current` toward `target` by at most the allowed change; speeding
/// up is capped by `acc`, slowing down by `dec`.
fn ramp(current: f64, target: f64, acc: f64, dec: f64) -> f64 {
    let slowing = target.abs() < current.abs() || target.signum() != current.signum();
    let cap = if slowing { dec } else { acc };
    current + (target - current).clamp(-cap, cap)
}

/// Closest point to `p` on segment `a`→`b`.
fn closest_on_segment(a: Vec2, b: Vec2, p: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    a + ab * ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
}

impl SimState {
    pub fn new(seed: u64, ball: SimBall, robots: Vec<SimRobot>) -> Self {
        Self {
            t: 0.0,
            ball,
            robots,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uses an explicit generator, e.g. one stream of a shared seed.
    pub fn with_rng(rng: ChaCha8Rng, ball: SimBall, robots: Vec<SimRobot>) -> Self {
        Self {
            t: 0.0,
            ball,
            robots,
            rng,
        }
    }

    pub fn ball_speed(&self) -> f64 {
        self.ball.vel.norm()
    }

    /// Advances one tick. `commands[i]` drives robot `i`; a missing command
    /// means stop.
    pub fn step(&mut self, cfg: &SimConfig, commands: &[Option<RobotCommand>]) {
        let dt = cfg.dt;
        let lim = &cfg.limits;

        let mut kicks = Vec::new();
        for (i, robot) in self.robots.iter_mut().enumerate() {
            let cmd = commands.get(i).copied().flatten().unwrap_or_default();
            let body = Vec2::new(cmd.vx as f64, cmd.vy as f64);
            let mut want = body.rotated(robot.pose.theta());
            let speed = want.norm();
            if speed > lim.v_max {
                want = want * (lim.v_max / speed);
            }
            let old = robot.vel;
            robot.vel = Vec2::new(
                ramp(old.x, want.x, lim.a_acc * dt, lim.a_dec * dt),
                ramp(old.y, want.y, lim.a_acc * dt, lim.a_dec * dt),
            );
            let mut pos = robot.pose.pos + (old + robot.vel) * (0.5 * dt);
            pos.x = pos.x.clamp(-cfg.field.half_length(), cfg.field.half_length());
            pos.y = pos.y.clamp(-cfg.field.half_width(), cfg.field.half_width());

            let want_w = (cmd.w as f64 / 100.0).clamp(-lim.w_max, lim.w_max);
            let old_w = robot.omega;
            robot.omega = ramp(old_w, want_w, lim.aw * dt, lim.aw * dt);
            let theta = robot.pose.theta() + (old_w + robot.omega) * 0.5 * dt;
            robot.pose = Pose::new(pos, theta);

            if cmd.kick_power > 0 && self.ball.holder == Some(i) {
                kicks.push((i, cfg.kick_speed(cmd.kick_power)));
            }
        }

        let ball = &mut self.ball;
        if let Some(h) = ball.holder {
            let r = &self.robots[h];
            ball.pos = r.pose.pos + r.pose.heading() * DRIBBLER_OFFSET;
            ball.vel = r.vel;
            if let Some(&(i, speed)) = kicks.iter().find(|k| k.0 == h) {
                ball.holder = None;
                ball.vel = r.pose.heading() * speed;
                ball.last_kick = Some((i, self.t));
            }
        } else if !ball.out {
            let start = ball.pos;
            let speed = ball.vel.norm();
            if speed > 0.0 {
                let decel = cfg.ball_model.decel;
                let moving = dt.min(speed / decel);
                let travelled = speed * moving - 0.5 * decel * moving * moving;
                let next_speed = (speed - decel * dt).max(0.0);
                ball.pos += ball.vel * (travelled / speed);
                ball.vel = ball.vel * (next_speed / speed);
            }
            if !cfg.field.contains(ball.pos) {
                ball.out = true;
                ball.vel = Vec2::ZERO;
            } else {
                for (i, r) in self.robots.iter().enumerate() {
                    if let Some((kicker, at)) = ball.last_kick {
                        if kicker == i && self.t - at < KICK_COOLDOWN {
                            continue;
                        }
                    }
                    let near = closest_on_segment(start, ball.pos, r.pose.pos);
                    if near.distance(r.pose.pos) > cfg.catch_radius {
                        continue;
                    }
                    // Bearing of the approach; the swept segment may pass
                    // through the center itself.
                    let from = if near == r.pose.pos { start } else { near };
                    let bearing = normalize_angle((from - r.pose.pos).angle() - r.pose.theta()).abs();
                    if bearing < cfg.facing_cone {
                        ball.holder = Some(i);
                        ball.pos = r.pose.pos + r.pose.heading() * DRIBBLER_OFFSET;
                        ball.vel = r.vel;
                    } else {
                        // Hit the body outside the dribbler: the ball dies there.
                        ball.pos = near;
                        ball.vel = Vec2::ZERO;
                    }
                    break;
                }
            }
        }

        self.t += dt;
    }

    /// One vision frame, or `None` when the frame is lost.
    pub fn observe(&mut self, cfg: &SimConfig) -> Option<DetectionFrame> {
        // Draw the same number of samples whatever the configuration so that
        // runs differing only in noise level share their random stream.
        let lost = self.rng.random::<f64>() < cfg.packet_loss;
        let mut gauss = || self.rng.sample::<f64, _>(StandardNormal);

        let mut detections = Vec::with_capacity(self.robots.len() + 1);
        let (bx, by) = (gauss(), gauss());
        if !self.ball.out {
            detections.push(Detection {
                camera_id: 0,
                kind: ObjectKind::Ball,
                position: self.ball.pos + Vec2::new(bx, by) * cfg.sigma_xy,
                orientation: None,
            });
        }
        for r in &self.robots {
            let (nx, ny, nt) = (gauss(), gauss(), gauss());
            detections.push(Detection {
                camera_id: 0,
                kind: ObjectKind::Robot {
                    team: r.team,
                    number: r.number,
                },
                position: r.pose.pos + Vec2::new(nx, ny) * cfg.sigma_xy,
                orientation: Some(normalize_angle(r.pose.theta() + nt * cfg.sigma_theta)),
            });
        }
        if lost {
            return None;
        }
        Some(DetectionFrame {
            t: self.t,
            camera_id: 0,
            detections,
        })
    }
}
