//! Scripted pedestrians, world state and collision checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist_to_obstacle, ObstacleShape, Point2, Pose2, Twist};
use crate::perception::AgentId;
use crate::prediction::{clamp_speed, InteractionParams, HUMAN_MAX_SPEED};

use super::robot::RobotModel;

/// Radius of every simulated person (m).
pub const AGENT_RADIUS: f64 = 0.3;
/// Distance at which an agent switches to its next waypoint (m).
pub const WAYPOINT_REACHED: f64 = 0.3;
/// Time scale applied to the social force when reacting (s).
const REACTION_TIME: f64 = 0.5;
/// Look-ahead distance within which a reactive agent sidesteps (m).
const SIDESTEP_RANGE: f64 = 3.0;
/// Lateral offset below which something counts as blocking the path (m).
const SIDESTEP_WIDTH: f64 = 0.9;

/// Lateral velocity that moves an agent heading along `dir` out of the way
/// of `others`. Agents keep right unless the blocker is clearly on their
/// right already.
fn sidestep(p: Point2, dir: Point2, speed: f64, others: impl IntoIterator<Item = Point2>) -> Point2 {
    let right = Point2::new(dir.y, -dir.x);
    let mut out = Point2::ZERO;
    for q in others {
        let rel = q - p;
        let ahead = rel.dot(dir);
        let lateral = rel.dot(right);
        if ahead <= 0.0 || ahead > SIDESTEP_RANGE || lateral.abs() > SIDESTEP_WIDTH {
            continue;
        }
        let away = if lateral > 0.1 { -1.0 } else { 1.0 };
        let urgency = (1.0 - ahead / SIDESTEP_RANGE) * (1.0 - lateral.abs() / SIDESTEP_WIDTH);
        out = out + right * (away * speed * urgency);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentScript {
    pub id: u32,
    pub start: Point2,
    pub waypoints: Vec<Point2>,
    pub preferred_speed: f64,
    #[serde(default)]
    pub start_delay: f64,
    #[serde(default)]
    pub reactive: bool,
}

impl AgentScript {
    pub fn validate(&self) -> Result<()> {
        if !(self.preferred_speed > 0.0 && self.preferred_speed <= HUMAN_MAX_SPEED) {
            return Err(Error::Invalid(format!(
                "agent {}: preferred_speed must be in (0, {HUMAN_MAX_SPEED}], got {}",
                self.id, self.preferred_speed
            )));
        }
        if self.waypoints.is_empty() {
            return Err(Error::Invalid(format!(
                "agent {}: needs at least one waypoint",
                self.id
            )));
        }
        if !(self.start_delay >= 0.0) || !self.start.is_finite() || self.waypoints.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid(format!(
                "agent {}: non-finite or negative values",
                self.id
            )));
        }
        if self.id == AgentId::ROBOT.0 {
            return Err(Error::Invalid(format!("agent id {} is reserved", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub position: Point2,
    pub velocity: Point2,
    /// Index of the waypoint currently targeted; equals the waypoint count once done.
    pub target: usize,
    pub start_delay: f64,
}

impl AgentState {
    pub fn from_script(s: &AgentScript) -> Self {
        Self {
            id: AgentId(s.id),
            position: s.start,
            velocity: Point2::ZERO,
            target: 0,
            start_delay: s.start_delay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub tick: u64,
    pub robot: Pose2,
    pub robot_velocity: Twist,
    pub agents: Vec<AgentState>,
    pub statics: Vec<ObstacleShape>,
}

impl WorldState {
    /// Simulation time, derived from the tick counter.
    pub fn time(&self, d_t: f64) -> f64 {
        self.tick as f64 * d_t
    }
}

/// Moves every agent one period toward its waypoint. Reactive agents also
/// feel the social force of the robot and of the other agents.
pub fn step_agents(state: &WorldState, scripts: &[AgentScript], d_t: f64, social: &InteractionParams) -> WorldState {
    let now = state.time(d_t);
    let mut next = state.clone();
    for (i, (agent, script)) in state.agents.iter().zip(scripts).enumerate() {
        let out = &mut next.agents[i];
        if now < agent.start_delay {
            out.velocity = Point2::ZERO;
            continue;
        }
        let mut target = agent.target;
        while target < script.waypoints.len() && agent.position.distance(script.waypoints[target]) < WAYPOINT_REACHED {
            target += 1;
        }
        out.target = target;
        let Some(&goal) = script.waypoints.get(target) else {
            out.velocity = Point2::ZERO;
            continue;
        };
        let to_goal = goal - agent.position;
        let mut v = to_goal
            .normalized()
            .map_or(Point2::ZERO, |d| d * script.preferred_speed);
        if script.reactive {
            let others = state
                .agents
                .iter()
                .enumerate()
                .filter(|&(j, a)| j != i && now >= a.start_delay)
                .map(|(_, a)| a.position)
                .chain(std::iter::once(state.robot.position()));
            let others: Vec<Point2> = others.collect();
            let f = social.force(agent.position, others.iter().copied(), &state.statics);
            if let Some(dir) = to_goal.normalized() {
                v = v + sidestep(agent.position, dir, script.preferred_speed, others.iter().copied());
            }
            v = clamp_speed(v + f * REACTION_TIME, social.max_speed);
        }
        out.velocity = v;
        out.position = agent.position + v * d_t;
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionCheck {
    pub collided: bool,
    /// Smallest robot-to-person center distance; infinite without people.
    pub min_hr_distance: f64,
    /// Smallest gap between the robot disc and any person disc.
    pub min_margin: f64,
}

/// Robot disc against person discs and static shapes.
pub fn check_collision(state: &WorldState, model: &RobotModel) -> CollisionCheck {
    let p = state.robot.position();
    let min_hr_distance = state
        .agents
        .iter()
        .map(|a| a.position.distance(p))
        .fold(f64::INFINITY, f64::min);
    let min_margin = min_hr_distance - (model.radius + AGENT_RADIUS);
    let hits_static = state.statics.iter().any(|o| dist_to_obstacle(p, o) < model.radius);
    CollisionCheck {
        collided: min_margin < 0.0 || hits_static,
        min_hr_distance,
        min_margin,
    }
}
