//! Closed-loop pass reception experiment.
//!
//! A passer kicks toward a point down the field while a receiver stands off
//! the pass line. The receiver sees the world only through the simulated
//! vision, runs the tracker, plans an interception from its estimates and
//! drives there with a simple bang-bang position controller.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SimBall, SimConfig, SimRobot, SimState, DRIBBLER_OFFSET};
use crate::exec::Execution;
use crate::geom::{normalize_angle, Pose, Vec2};
use crate::interception::{InterceptParams, InterceptSetup};
use crate::radio::RobotCommand;
use crate::tactics::{select_skill, Skill};
use crate::tracker::{Team, Tracker, TrackerConfig};

const RECEIVER: usize = 0;
const PASSER: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PassScenario {
    pub passer: Vec2,
    /// Point the pass is aimed at.
    pub aim: Vec2,
    pub pass_speed: f64,
    /// Receiver distance from the pass line, mm.
    pub receiver_offset: f64,
    /// Receiver position along the line, as a fraction of passer→aim.
    pub receiver_along: f64,
    /// Uniform jitter of the receiver position along the line, mm.
    pub receiver_jitter: f64,
    /// Uniform jitter of the pass direction, rad.
    pub aim_jitter: f64,
    /// Where the receiver wants to play the ball next.
    pub kick_target: Vec2,
    /// Give up after this long, s.
    pub max_duration: f64,
}

impl Default for PassScenario {
    fn default() -> Self {
        Self {
            passer: Vec2::new(-4000.0, 0.0),
            aim: Vec2::new(4000.0, 0.0),
            pass_speed: 3500.0,
            receiver_offset: 3000.0,
            receiver_along: 0.5,
            receiver_jitter: 1000.0,
            aim_jitter: 3f64.to_radians(),
            kick_target: Vec2::new(6000.0, 0.0),
            max_duration: 8.0,
        }
    }
}

/// Full description of a pass-rate run; loadable from TOML.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PassExperiment {
    pub sim: SimConfig,
    pub scenario: PassScenario,
    pub tracker: TrackerConfig,
    pub intercept: InterceptParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ending {
    Caught,
    Exited,
    Stopped,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub ending: Ending,
    pub time: f64,
    /// Skill chosen on the last planning cycle, if any.
    pub skill: Option<Skill>,
}

impl TrialOutcome {
    pub fn success(&self) -> bool {
        self.ending == Ending::Caught
    }
}

fn trial_rng(seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial * 2 + stream);
    rng
}

fn initial_state(exp: &PassExperiment, trial: u64) -> (SimState, u8) {
    let sc = &exp.scenario;
    let mut rng = trial_rng(exp.sim.seed, trial, 0);
    let line = sc.aim - sc.passer;
    let base = line.angle();
    let dir = base + rng.random_range(-1.0..=1.0) * sc.aim_jitter;
    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let along = rng.random_range(-1.0..=1.0) * sc.receiver_jitter;
    let unit = Vec2::from_angle(base);
    let normal = unit.rotated(PI / 2.0) * side;
    let rpos = sc.passer + line * sc.receiver_along + unit * along + normal * sc.receiver_offset;
    let facing = (sc.passer - rpos).angle() + rng.random_range(-0.5..=0.5);

    let passer = SimRobot::at_rest(Team::Blue, 1, Pose::new(sc.passer, dir));
    let receiver = SimRobot::at_rest(Team::Blue, 0, Pose::new(rpos, facing));
    let ball = SimBall {
        pos: sc.passer + Vec2::from_angle(dir) * DRIBBLER_OFFSET,
        vel: Vec2::ZERO,
        holder: Some(PASSER),
        out: false,
        last_kick: None,
    };
    let power = (sc.pass_speed / exp.sim.kick_speed_max * RobotCommand::KICK_MAX as f64)
        .round()
        .clamp(1.0, RobotCommand::KICK_MAX as f64) as u8;
    let state = SimState::with_rng(trial_rng(exp.sim.seed, trial, 1), ball, vec![receiver, passer]);
    (state, power)
}

/// Velocity and turn-rate command that drives the robot to `target` facing `face`.
fn go_to(pos: Vec2, theta: f64, target: Vec2, face: f64, exp: &PassExperiment) -> RobotCommand {
    let lim = &exp.sim.limits;
    let err = target - pos;
    let dist = err.norm();
    let world = if dist < 1.0 {
        Vec2::ZERO
    } else {
        let speed = lim
            .v_max
            .min((2.0 * lim.a_dec * 0.8 * dist).sqrt())
            .min(6.0 * dist);
        err * (speed / dist)
    };
    let body = world.rotated(-theta);
    let dth = normalize_angle(face - theta);
    let w = dth.signum() * lim.w_max.min((2.0 * lim.aw * 0.8 * dth.abs()).sqrt()).min(8.0 * dth.abs());
    RobotCommand::saturating(body.x, body.y, w)
}

/// Runs one reception attempt. Deterministic in `(exp.sim.seed, trial)`.
pub fn run_pass_trial(exp: &PassExperiment, trial: u64) -> TrialOutcome {
    let cfg = &exp.sim;
    let (mut sim, power) = initial_state(exp, trial);
    let mut tracker = Tracker::new(exp.tracker);
    let setup = InterceptSetup {
        limits: cfg.limits,
        ball: cfg.ball_model,
        params: exp.intercept,
        field: cfg.field,
    };
    let clamp = |p: Vec2| {
        Vec2::new(
            p.x.clamp(-cfg.field.half_length(), cfg.field.half_length()),
            p.y.clamp(-cfg.field.half_width(), cfg.field.half_width()),
        )
    };

    let kick = RobotCommand {
        kick_power: power,
        ..RobotCommand::default()
    };
    sim.step(cfg, &[None, Some(kick)]);

    let mut skill = None;
    let mut target: Option<Vec2> = None;
    loop {
        if let Some(frame) = sim.observe(cfg) {
            // Frames are produced in order, so ingestion cannot fail.
            let _ = tracker.ingest_frame(&frame);
        }
        let snap = tracker.snapshot();
        let mut cmd = None;
        if let (Some(ball), Some(me)) = (snap.ball(), snap.robot(Team::Blue, RECEIVER as u8)) {
            let bp = clamp(ball.position);
            let mp = clamp(me.position);
            if let Ok(res) = setup.intercept(bp, ball.velocity, mp, me.velocity) {
                target = Some(res.p_best);
                skill = select_skill(mp, res.p_best, exp.scenario.kick_target)
                    .ok()
                    .map(|c| c.skill);
            }
            if let (Some(goal), Some(theta)) = (target, me.theta) {
                let face = (bp - mp).angle();
                cmd = Some(go_to(mp, theta, goal, face, exp));
            }
        }
        sim.step(cfg, &[cmd, None]);

        let ending = if sim.ball.holder == Some(RECEIVER) {
            Some(Ending::Caught)
        } else if sim.ball.out {
            Some(Ending::Exited)
        } else if sim.ball.holder.is_none() && sim.ball.vel == Vec2::ZERO {
            Some(Ending::Stopped)
        } else if sim.t >= exp.scenario.max_duration {
            Some(Ending::Timeout)
        } else {
            None
        };
        if let Some(ending) = ending {
            return TrialOutcome {
                ending,
                time: sim.t,
                skill,
            };
        }
    }
}

/// Fraction of `n_trials` passes the receiver controls.
pub fn pass_success_rate(exp: &PassExperiment, n_trials: usize, exec: Execution) -> f64 {
    if n_trials == 0 {
        return 0.0;
    }
    let wins = exec
        .map_range(n_trials, |i| run_pass_trial(exp, i as u64).success())
        .into_iter()
        .filter(|&s| s)
        .count();
    wins as f64 / n_trials as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    SigmaXy,
    SigmaTheta,
    Loss,
}

impl SweepParam {
    pub fn apply(self, cfg: &mut SimConfig, value: f64) {
        match self {
            SweepParam::SigmaXy => cfg.sigma_xy = value,
            SweepParam::SigmaTheta => cfg.sigma_theta = value,
            SweepParam::Loss => cfg.packet_loss = value,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::SigmaXy => "sigma_xy",
            SweepParam::SigmaTheta => "sigma_theta",
            SweepParam::Loss => "loss",
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sigma_xy" => Ok(SweepParam::SigmaXy),
            "sigma_theta" => Ok(SweepParam::SigmaTheta),
            "loss" | "packet_loss" => Ok(SweepParam::Loss),
            other => Err(format!(
                "unknown sweep parameter `{other}` (expected sigma_xy, sigma_theta or loss)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub success_rate: f64,
}

/// Success rate at each value of one parameter, all else fixed. Every point
/// replays the same trial seeds.
pub fn sweep(
    exp: &PassExperiment,
    param: SweepParam,
    values: &[f64],
    n_trials: usize,
    exec: Execution,
) -> Vec<SweepPoint> {
    values
        .iter()
        .map(|&value| {
            let mut e = *exp;
            param.apply(&mut e.sim, value);
            SweepPoint {
                value,
                success_rate: pass_success_rate(&e, n_trials, exec),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_passes_are_received() {
        let exp = PassExperiment::default();
        let rate = pass_success_rate(&exp, 20, Execution::Sequential);
        assert!(rate >= 0.95, "rate {rate}");
    }

    #[test]
    fn blind_receiver_never_catches() {
        let mut exp = PassExperiment::default();
        exp.sim.packet_loss = 1.0;
        assert_eq!(pass_success_rate(&exp, 5, Execution::Sequential), 0.0);
    }

    #[test]
    fn trials_are_reproducible() {
        let mut exp = PassExperiment::default();
        exp.sim.sigma_xy = 40.0;
        exp.sim.packet_loss = 0.2;
        for i in 0..3 {
            assert_eq!(run_pass_trial(&exp, i), run_pass_trial(&exp, i));
        }
    }

    #[test]
    fn execution_modes_agree() {
        let mut exp = PassExperiment::default();
        exp.sim.sigma_xy = 60.0;
        let a = pass_success_rate(&exp, 6, Execution::Sequential);
        let b = pass_success_rate(&exp, 6, Execution::Parallel);
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_param_names_round_trip() {
        for p in [SweepParam::SigmaXy, SweepParam::SigmaTheta, SweepParam::Loss] {
            assert_eq!(p.name().parse::<SweepParam>().unwrap(), p);
        }
        assert!("speed".parse::<SweepParam>().is_err());
    }
}
