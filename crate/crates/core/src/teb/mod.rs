//! Timed elastic band planner: residual terms, band optimization, homotopy
//! candidates and global band selection.

mod band;
mod homotopy;
pub mod residuals;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ObstacleShape, TimedBand};

pub use band::{extract_control, init_band, resize_band, seed_band};
pub use homotopy::{
    band_crosses_statics, band_signature, generate_candidates, seed_candidates, select_best, BandCandidate,
    CandidateRequest, MovingObstacle, ObstacleMotion, Side, Signature,
};
pub use residuals::{residual_acceleration, residual_clearance, residual_kinematics, residual_velocity};
pub use solver::{
    optimize_band, optimize_band_traced, BandProblem, BoundaryVelocities, CostBreakdown, OptimizationReport, PoseCost,
    PoseCostTerm,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TebParams {
    /// Reference time interval between poses (s).
    pub dt_ref: f64,
    pub dt_hysteresis: f64,
    /// Upper bound on any interval (s).
    pub dt_max: f64,
    /// Minimum clearance from obstacles (m).
    pub d_min: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub a_max: f64,
    pub alpha_max: f64,
    pub weight_kinematics: f64,
    pub weight_velocity: f64,
    pub weight_obstacle: f64,
    pub weight_acceleration: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub max_poses: usize,
    /// Relative objective improvement below which optimization stops.
    pub tolerance: f64,
    /// Number of nearest moving obstacles explored for homotopy classes.
    pub homotopy_obstacles: usize,
    /// Robot disc radius used to detect a blocked start (m).
    pub robot_radius: f64,
}

impl Default for TebParams {
    fn default() -> Self {
        Self {
            dt_ref: 0.3,
            dt_hysteresis: 0.1,
            dt_max: 10.0,
            d_min: 0.5,
            v_max: 1.0,
            omega_max: 0.5,
            a_max: 0.5,
            alpha_max: 0.5,
            weight_kinematics: 1000.0,
            weight_velocity: 2.0,
            weight_obstacle: 50.0,
            weight_acceleration: 1.0,
            outer_iterations: 4,
            inner_iterations: 6,
            max_poses: 100,
            tolerance: 1e-6,
            homotopy_obstacles: 3,
            robot_radius: 0.25,
        }
    }
}

impl TebParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_ref", self.dt_ref),
            ("dt_hysteresis", self.dt_hysteresis),
            ("dt_max", self.dt_max),
            ("d_min", self.d_min),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
            ("a_max", self.a_max),
            ("alpha_max", self.alpha_max),
            ("weight_kinematics", self.weight_kinematics),
            ("weight_velocity", self.weight_velocity),
            ("weight_obstacle", self.weight_obstacle),
            ("weight_acceleration", self.weight_acceleration),
            ("tolerance", self.tolerance),
            ("robot_radius", self.robot_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("teb.{name} must be positive, got {v}")));
            }
        }
        if self.dt_hysteresis >= self.dt_ref {
            return Err(Error::invalid("teb.dt_hysteresis must be below dt_ref"));
        }
        if self.max_poses < 2 || self.outer_iterations == 0 || self.inner_iterations == 0 {
            return Err(Error::invalid("teb iteration counts must be >= 1 and max_poses >= 2"));
        }
        if self.homotopy_obstacles > 3 {
            return Err(Error::invalid("teb.homotopy_obstacles is capped at 3"));
        }
        Ok(())
    }
}

/// Classic band objective: squared intervals plus weighted squared kinematic,
/// velocity, clearance and acceleration violations.
pub fn objective(band: &TimedBand, obstacles: &[ObstacleShape], params: &TebParams) -> f64 {
    BandProblem::new(params, obstacles).evaluate(band)
}
