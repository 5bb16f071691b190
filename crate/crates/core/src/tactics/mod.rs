//! Interception skill selection, marking and role assignment.

mod assign;
mod marking;
mod skill;

pub use assign::{assign_roles, hungarian, Assignment, CostMode, RoleTarget};
pub use marking::{mark_on_circle, marking_point, MarkingInput, MarkingPoint};
pub use skill::{select_skill, Skill, SkillChoice};

use thiserror::Error;

use crate::geom::GeomError;
use crate::interception::InterceptError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TacticsError {
    #[error("{robots} robots cannot be matched to {targets} targets")]
    SizeMismatch { robots: usize, targets: usize },
    #[error("at most {max} roles can be assigned, got {got}")]
    TooMany { max: usize, got: usize },
    #[error("lambda must lie in [0, 1], got {0}")]
    Lambda(f64),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Intercept(#[from] InterceptError),
}
