//! Shaped lifting reward.
//!
//! ```text
//! r_sdf = 1 / (Σᵢ max(dᵢ, 0) + ε_sdf)
//! r     = c₁ / (|h̄ − Δh| + ε_h) + c₂·[Δh ≥ h̄] + c₃·r_sdf
//! ```
//!
//! `dᵢ` are the signed fingertip distances to the object surface and `Δh`
//! is the height the object has been lifted from its start.

mod trace;

use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use trace::{evaluate_trace, TraceError};

pub const FINGER_COUNT: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("{0} must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
}

/// How fingertip distances enter the surface term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Penetrating fingertips count as touching: `max(dᵢ, 0)`.
    #[default]
    Clamped,
    /// Raw signed sum. Singular where the sum reaches `-eps_sdf`.
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Lift-term smoothing (m).
    pub eps_h: f64,
    /// Surface-term smoothing (m).
    pub eps_sdf: f64,
    /// Target lift height (m).
    pub h_bar: f64,
    pub distance_mode: DistanceMode,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            c1: 0.5,
            c2: 5000.0,
            c3: 1.0,
            eps_h: 0.02,
            eps_sdf: 0.025,
            h_bar: 0.2,
            distance_mode: DistanceMode::Clamped,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3)] {
            if !v.is_finite() {
                return Err(RewardError::NonFinite(name));
            }
        }
        for (name, v) in [
            ("eps_h", self.eps_h),
            ("eps_sdf", self.eps_sdf),
            ("h_bar", self.h_bar),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RewardError::NonPositive(name, v));
            }
        }
        Ok(())
    }
}

/// Per-step inputs: lift height and the five fingertip distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSignal {
    pub delta_h: f64,
    pub fingertip_d: [f64; FINGER_COUNT],
}

impl StepSignal {
    pub fn new(delta_h: f64, fingertip_d: [f64; FINGER_COUNT]) -> Result<Self, RewardError> {
        if !delta_h.is_finite() {
            return Err(RewardError::NonFinite("delta_h"));
        }
        if fingertip_d.iter().any(|d| !d.is_finite()) {
            return Err(RewardError::NonFinite("fingertip distance"));
        }
        Ok(Self {
            delta_h,
            fingertip_d,
        })
    }
}

/// Every term of one step's reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardBreakdown {
    pub r_sdf: f64,
    pub lift: f64,
    pub total: f64,
    pub success: bool,
}

/// Surface term with clamped distances, in `(0, 1/eps_sdf]`.
pub fn sdf_reward(fingertip_d: &[f64; FINGER_COUNT], eps_sdf: f64) -> f64 {
    sdf_reward_with(fingertip_d, eps_sdf, DistanceMode::Clamped)
}

pub fn sdf_reward_with(fingertip_d: &[f64; FINGER_COUNT], eps_sdf: f64, mode: DistanceMode) -> f64 {
    let d_t: f64 = match mode {
        DistanceMode::Clamped => fingertip_d.iter().map(|d| d.max(0.0)).sum(),
        DistanceMode::Signed => fingertip_d.iter().sum(),
    };
    1.0 / (d_t + eps_sdf)
}

pub fn lift_reward(delta_h: f64, config: &RewardConfig) -> f64 {
    let bonus = if is_success(delta_h, config.h_bar) {
        config.c2
    } else {
        0.0
    };
    config.c1 / ((config.h_bar - delta_h).abs() + config.eps_h) + bonus
}

pub fn total_reward(signal: &StepSignal, config: &RewardConfig) -> f64 {
    evaluate(signal, config).total
}

/// Ablation baseline: fingertip distances to the center of mass instead of
/// to the surface.
pub fn com_shaping_reward(
    fingertips: &[Point3<f64>; FINGER_COUNT],
    com: &Point3<f64>,
    eps_sdf: f64,
) -> f64 {
    let d_t: f64 = fingertips.iter().map(|f| (f - com).norm()).sum();
    1.0 / (d_t + eps_sdf)
}

/// Inclusive: lifting exactly to `h_bar` succeeds.
pub fn is_success(delta_h: f64, h_bar: f64) -> bool {
    delta_h >= h_bar
}

pub fn evaluate(signal: &StepSignal, config: &RewardConfig) -> RewardBreakdown {
    let r_sdf = sdf_reward_with(&signal.fingertip_d, config.eps_sdf, config.distance_mode);
    let lift = lift_reward(signal.delta_h, config);
    RewardBreakdown {
        r_sdf,
        lift,
        total: lift + config.c3 * r_sdf,
        success: is_success(signal.delta_h, config.h_bar),
    }
}

/// Evaluates many environments at once, preserving order.
pub fn evaluate_batch(signals: &[StepSignal], config: &RewardConfig) -> Vec<RewardBreakdown> {
    signals.par_iter().map(|s| evaluate(s, config)).collect()
}

pub fn total_reward_batch(signals: &[StepSignal], config: &RewardConfig) -> Vec<f64> {
    signals
        .par_iter()
        .map(|s| total_reward(s, config))
        .collect()
}
