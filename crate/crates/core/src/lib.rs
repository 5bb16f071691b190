//! Perception and planning toolkit for small-size robot soccer.
//!
//! * [`tracker`]: Kalman filtering, confidence gating and multi-camera fusion
//!   of vision detections.
//! * [`motion`]: time-optimal trapezoidal planning and arrival-time prediction.
//! * [`interception`]: search-based interception prediction and heat maps.
//! * [`tactics`]: interception skill selection, marking and role assignment.
//! * [`radio`]: the compact multi-robot command packet.
//! * [`simworld`]: a deterministic kinematic simulator for closed-loop
//!   pass experiments.

pub mod exec;
pub mod formats;
pub mod geom;
pub mod interception;
pub mod motion;
pub mod radio;
pub mod simworld;
pub mod tactics;
pub mod tracker;

pub use exec::Execution;
pub use geom::{angle_between, ray_field_exit, FieldGeometry, Pose, Vec2};
pub use interception::{
    intercept, intercept_heatmap, predict_ball_position, BallModel, HeatMap, InterceptKind,
    InterceptParams, InterceptResult, InterceptSetup,
};
pub use motion::{arrival_time, plan_1d, predict_robot_arrival_time, MotionLimits, TimeProfile};
