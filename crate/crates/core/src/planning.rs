//! Planning cycle shared by the classic and social band planners.

use serde::{Deserialize, Serialize};

use crate::geometry::{dist_to_obstacle, ObstacleShape, Point2, Pose2, TimedBand, Twist};
use crate::mpteb::SocialBreakdown;
use crate::perception::AgentId;
use crate::prediction::PredictedTrajectory;
use crate::teb::{
    extract_control, generate_candidates, select_best, BandCandidate, BandProblem, BoundaryVelocities,
    CandidateRequest, CostBreakdown, MovingObstacle, PoseCost, TebParams,
};

/// Distance to the goal below which the robot counts as arrived (m).
pub const GOAL_TOLERANCE: f64 = 0.2;

/// A person currently perceived around the robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonObservation {
    pub id: AgentId,
    pub position: Point2,
    pub velocity: Point2,
}

/// Inputs of one planning cycle.
#[derive(Debug, Clone)]
pub struct PlanRequest<'a> {
    pub now: f64,
    pub robot: Pose2,
    pub velocity: Twist,
    pub goal: Pose2,
    /// Remaining route points toward the goal.
    pub via: &'a [Point2],
    pub statics: &'a [ObstacleShape],
    pub people: &'a [PersonObservation],
    pub person_radius: f64,
    pub warm_start: Option<&'a TimedBand>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Planned,
    Arrived,
    Blocked,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanDiagnostics {
    pub candidates: usize,
    pub breakdown: Option<CostBreakdown>,
    pub social: Option<SocialBreakdown>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub twist: Twist,
    pub status: PlanStatus,
    pub selected: Option<BandCandidate>,
    pub diagnostics: PlanDiagnostics,
    pub predictions: Vec<PredictedTrajectory>,
    pub self_prediction: Option<PredictedTrajectory>,
}

impl PlanOutcome {
    fn stopped(status: PlanStatus) -> Self {
        Self {
            twist: Twist::ZERO,
            status,
            selected: None,
            diagnostics: PlanDiagnostics::default(),
            predictions: Vec::new(),
            self_prediction: None,
        }
    }
}

/// True when the first band step puts the robot inside a wall or a person.
fn first_step_collides(
    band: &TimedBand,
    statics: &[ObstacleShape],
    movers: &[MovingObstacle],
    robot_radius: f64,
) -> bool {
    let p = band.poses[1].position();
    let t = band.dts[0];
    statics.iter().any(|o| dist_to_obstacle(p, o) < robot_radius)
        || movers
            .iter()
            .any(|m| p.distance(m.position_at(t)) < robot_radius + m.radius)
}

/// Candidate generation, selection and command extraction for a prepared
/// problem. `clearance` feeds the hard clearance term, `movers` the
/// homotopy exploration.
pub fn plan_band(
    req: &PlanRequest<'_>,
    params: &TebParams,
    clearance: &[ObstacleShape],
    movers: &[MovingObstacle],
    extra: Option<&dyn PoseCost>,
) -> PlanOutcome {
    if req.robot.position().distance(req.goal.position()) < GOAL_TOLERANCE {
        return PlanOutcome::stopped(PlanStatus::Arrived);
    }
    let mut problem = BandProblem::new(params, clearance).with_boundary(BoundaryVelocities {
        start: Some(req.velocity),
        goal: Some(Twist::ZERO),
    });
    if let Some(extra) = extra {
        problem = problem.with_extra(extra);
    }
    let creq = CandidateRequest {
        start: req.robot,
        via: req.via,
        goal: req.goal,
        movers,
        statics: req.statics,
        warm_start: req.warm_start,
    };
    let all = generate_candidates(&creq, &problem);
    let count = all.len();
    for c in &all {
        log::debug!(
            "t={:.1} sig={:?} cost={:.3} poses={} time={:.2}",
            req.now,
            c.homotopy_signature,
            c.cost,
            c.band.len(),
            c.band.total_time()
        );
    }
    let feasible: Vec<BandCandidate> = all
        .into_iter()
        .filter(|c| !first_step_collides(&c.band, req.statics, movers, params.robot_radius))
        .collect();
    let Ok(best) = select_best(&feasible) else {
        let mut out = PlanOutcome::stopped(PlanStatus::Blocked);
        out.diagnostics.candidates = count;
        return out;
    };
    let selected = feasible.into_iter().nth(best).expect("index from select_best");
    PlanOutcome {
        twist: extract_control(&selected.band, params),
        status: PlanStatus::Planned,
        diagnostics: PlanDiagnostics {
            candidates: count,
            breakdown: Some(problem.breakdown(&selected.band)),
            social: None,
        },
        selected: Some(selected),
        predictions: Vec::new(),
        self_prediction: None,
    }
}

/// Classic band planner: people are static discs at their current positions.
pub fn plan_teb(req: &PlanRequest<'_>, params: &TebParams) -> PlanOutcome {
    let mut clearance = req.statics.to_vec();
    clearance.extend(
        req.people
            .iter()
            .map(|p| ObstacleShape::circle(p.position, req.person_radius)),
    );
    let movers: Vec<MovingObstacle> = req
        .people
        .iter()
        .map(|p| MovingObstacle::linear(p.id, p.position, Point2::ZERO, req.person_radius))
        .collect();
    plan_band(req, params, &clearance, &movers, None)
}
