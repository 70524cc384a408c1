//! Deterministic discrete-time world with a differential-drive robot and
//! scripted pedestrians.

mod robot;
mod run;
mod world;

pub use robot::{body_twist, integrate, step_robot, step_unicycle, wheel_speeds, RobotModel, WheelSpeeds};
pub use run::{run_scenario, AgentSnapshot, PlannerKind, RunOutcome, RunTrace, TickRecord, TraceHeader, VIA_REACHED};
pub use world::{
    check_collision, step_agents, AgentScript, AgentState, CollisionCheck, WorldState, AGENT_RADIUS, WAYPOINT_REACHED,
};
