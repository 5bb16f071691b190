use serde::{Deserialize, Serialize};

/// Per-frame confidence increments and the validity threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConfidenceParams {
    pub p_seen: f64,
    pub p_lost: f64,
    pub p_valid: f64,
}

impl Default for ConfidenceParams {
    fn default() -> Self {
        Self {
            p_seen: 0.2,
            p_lost: 0.1,
            p_valid: 0.8,
        }
    }
}

impl ConfidenceParams {
    pub fn is_valid_params(&self) -> bool {
        self.p_seen > 0.0 && self.p_lost > 0.0 && self.p_valid > 0.0 && self.p_valid < 1.0
    }
}

pub fn confidence_step(c: f64, seen: bool, params: &ConfidenceParams) -> f64 {
    let next = if seen {
        c + params.p_seen
    } else {
        c - params.p_lost
    };
    next.clamp(0.0, 1.0)
}

/// Strictly above the threshold; a confidence equal to `p_valid` is invalid.
pub fn is_valid(c: f64, params: &ConfidenceParams) -> bool {
    c > params.p_valid
}
