//! Search-based ball interception.
//!
//! The ball rolls in a straight line with constant friction deceleration.
//! Future ball positions are sampled at fixed intervals; the first sample
//! the robot can reach in time is the interception point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::geom::{ray_field_exit, FieldGeometry, GeomError, Pose, Vec2};
use crate::motion::{arrival_time_with, ArrivalMode, MotionLimits};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterceptError {
    #[error("{what} at ({x}, {y}) is outside the field")]
    OutsideField { what: &'static str, x: f64, y: f64 },
    #[error("no interception within the {horizon} s horizon")]
    HorizonExhausted { horizon: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Rolling-friction model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallModel {
    /// Magnitude of the friction deceleration, mm/s².
    pub decel: f64,
}

impl Default for BallModel {
    fn default() -> Self {
        Self { decel: 500.0 }
    }
}

impl BallModel {
    pub fn stop_time(&self, v0: Vec2) -> f64 {
        v0.norm() / self.decel
    }

    pub fn speed_at(&self, v0: Vec2, t: f64) -> f64 {
        (v0.norm() - self.decel * t).max(0.0)
    }

    pub fn velocity_at(&self, v0: Vec2, t: f64) -> Vec2 {
        let speed = v0.norm();
        if speed == 0.0 {
            return Vec2::ZERO;
        }
        v0 * (self.speed_at(v0, t) / speed)
    }

    pub fn stop_point(&self, p0: Vec2, v0: Vec2) -> Vec2 {
        let speed = v0.norm();
        if speed == 0.0 {
            return p0;
        }
        p0 + v0 * (speed / (2.0 * self.decel))
    }
}

/// Ball position after `t` seconds of free rolling.
pub fn predict_ball_position(p0: Vec2, v0: Vec2, t: f64, model: &BallModel) -> Vec2 {
    let speed = v0.norm();
    if speed == 0.0 {
        return p0;
    }
    let t = t.clamp(0.0, speed / model.decel);
    let travelled = speed * t - 0.5 * model.decel * t * t;
    p0 + v0 * (travelled / speed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterceptParams {
    /// Search interval, s.
    pub dt: f64,
    /// Conservative margin added to every arrival time, s.
    pub t_margin: f64,
    /// Longest look-ahead before giving up, s.
    pub max_horizon: f64,
    pub arrival_mode: ArrivalMode,
}

impl Default for InterceptParams {
    fn default() -> Self {
        Self {
            dt: 1.0 / 60.0,
            t_margin: 0.1,
            max_horizon: 15.0,
            arrival_mode: ArrivalMode::Stop,
        }
    }
}

impl InterceptParams {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<(), InterceptError> {
        if !(self.dt > 0.0) {
            return Err(InterceptError::InvalidParameter("dt must be positive"));
        }
        if !(self.t_margin >= 0.0) {
            return Err(InterceptError::InvalidParameter("t_margin must be non-negative"));
        }
        if !(self.max_horizon > 0.0) {
            return Err(InterceptError::InvalidParameter("max_horizon must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterceptKind {
    Normal,
    BallStopped,
    OutOfField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterceptResult {
    pub p_best: Vec2,
    pub t_best: f64,
    pub kind: InterceptKind,
    /// Index of the sample that terminated the search.
    pub steps: usize,
}

/// Everything `intercept` needs besides the two bodies.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InterceptSetup {
    pub limits: MotionLimits,
    pub ball: BallModel,
    pub params: InterceptParams,
    pub field: FieldGeometry,
}

impl InterceptSetup {
    pub fn intercept(
        &self,
        ball_p: Vec2,
        ball_v: Vec2,
        robot_p: Vec2,
        robot_v: Vec2,
    ) -> Result<InterceptResult, InterceptError> {
        intercept(
            ball_p,
            ball_v,
            robot_p,
            robot_v,
            &self.limits,
            &self.ball,
            &self.params,
            &self.field,
        )
    }
}

#[allow(clippy::too_many_arguments, clippy::neg_cmp_op_on_partial_ord)]
pub fn intercept(
    ball_p: Vec2,
    ball_v: Vec2,
    robot_p: Vec2,
    robot_v: Vec2,
    limits: &MotionLimits,
    model: &BallModel,
    params: &InterceptParams,
    field: &FieldGeometry,
) -> Result<InterceptResult, InterceptError> {
    params.validate()?;
    if !(model.decel > 0.0) {
        return Err(InterceptError::InvalidParameter("ball decel must be positive"));
    }
    for (what, p) in [("ball", ball_p), ("robot", robot_p)] {
        if !field.contains(p) {
            return Err(InterceptError::OutsideField { what, x: p.x, y: p.y });
        }
    }

    let robot = Pose::new(robot_p, 0.0);
    let arrival = |target: Vec2| {
        arrival_time_with(params.arrival_mode, robot, robot_v, target, None, limits)
            + params.t_margin
    };
    let stop_time = model.stop_time(ball_v);

    let mut k = 0usize;
    loop {
        let t = k as f64 * params.dt;
        if t > params.max_horizon {
            return Err(InterceptError::HorizonExhausted {
                horizon: params.max_horizon,
            });
        }
        let p = predict_ball_position(ball_p, ball_v, t, model);
        let t_robot = arrival(p);
        if t_robot <= t && field.contains(p) {
            return Ok(InterceptResult {
                p_best: p,
                t_best: t_robot,
                kind: InterceptKind::Normal,
                steps: k,
            });
        }
        if t >= stop_time && field.contains(p) {
            return Ok(InterceptResult {
                p_best: p,
                t_best: t_robot,
                kind: InterceptKind::BallStopped,
                steps: k,
            });
        }
        if !field.contains(p) {
            let exit = ray_field_exit(ball_p, ball_v, field)?;
            return Ok(InterceptResult {
                p_best: exit,
                t_best: arrival(exit),
                kind: InterceptKind::OutOfField,
                steps: k,
            });
        }
        k += 1;
    }
}

/// Interception times for a robot at rest at each cell center of a grid
/// laid over the field. Cells are stored row-major with row 0 at −y.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    pub nx: usize,
    pub ny: usize,
    pub field: FieldGeometry,
    pub cells: Vec<InterceptResult>,
}

impl HeatMap {
    pub fn cell_center(&self, col: usize, row: usize) -> Vec2 {
        cell_center(&self.field, self.nx, self.ny, col, row)
    }

    pub fn get(&self, col: usize, row: usize) -> &InterceptResult {
        &self.cells[row * self.nx + col]
    }

    /// Largest `t_best` among cells that were not flagged out-of-field.
    pub fn max_reachable_time(&self) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| c.kind != InterceptKind::OutOfField && c.t_best.is_finite())
            .map(|c| c.t_best)
            .reduce(f64::max)
    }

    /// Long-format CSV, one line per cell in row-major order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,x_mm,y_mm,t_best_s,kind\n");
        for row in 0..self.ny {
            for col in 0..self.nx {
                let c = self.get(col, row);
                let p = self.cell_center(col, row);
                let kind = match c.kind {
                    InterceptKind::Normal => "normal",
                    InterceptKind::BallStopped => "ball_stopped",
                    InterceptKind::OutOfField => "out_of_field",
                };
                out.push_str(&format!(
                    "{row},{col},{:.1},{:.1},{:.6},{kind}\n",
                    p.x, p.y, c.t_best
                ));
            }
        }
        out
    }

    /// Binary 8-bit PGM. Darker is faster; out-of-field cells are white.
    /// The top image row is +y.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.nx, self.ny).into_bytes();
        let max = self.max_reachable_time().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        for row in (0..self.ny).rev() {
            for col in 0..self.nx {
                let c = self.get(col, row);
                let level = if c.kind == InterceptKind::OutOfField {
                    255
                } else {
                    ((c.t_best / max).clamp(0.0, 1.0) * 254.0).round() as u8
                };
                out.push(level);
            }
        }
        out
    }
}

fn cell_center(field: &FieldGeometry, nx: usize, ny: usize, col: usize, row: usize) -> Vec2 {
    Vec2::new(
        -field.half_length() + (col as f64 + 0.5) * field.length / nx as f64,
        -field.half_width() + (row as f64 + 0.5) * field.width / ny as f64,
    )
}

pub fn intercept_heatmap(
    ball_p: Vec2,
    ball_v: Vec2,
    nx: usize,
    ny: usize,
    setup: &InterceptSetup,
    exec: Execution,
) -> Result<HeatMap, InterceptError> {
    if nx < 2 || ny < 2 {
        return Err(InterceptError::InvalidParameter("grid must be at least 2x2"));
    }
    let field = setup.field;
    let cells = exec.map_range(nx * ny, |i| {
        let p = cell_center(&field, nx, ny, i % nx, i / nx);
        setup.intercept(ball_p, ball_v, p, Vec2::ZERO)
    });
    let cells = cells.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(HeatMap {
        nx,
        ny,
        field,
        cells,
    })
}
