//! Social navigation planning and benchmarking.
//!
//! The crate provides a timed-elastic-band local planner, its
//! prediction-aware social variant, a dynamic-window baseline, a
//! deterministic differential-drive simulator with scripted pedestrians, and
//! the batch evaluation used to compare the three planners.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dwa;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod mpteb;
pub mod perception;
pub mod planning;
pub mod prediction;
pub mod sim;
pub mod teb;

pub use error::{Error, Result};
pub use geometry::{ObstacleShape, Point2, Pose2, Shape, TimedBand, Twist};
pub use perception::AgentId;
pub use planning::{PersonObservation, PlanOutcome, PlanRequest, PlanStatus};
pub use prediction::{PredictedTrajectory, PredictorKind};
