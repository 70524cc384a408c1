//! Motion-prediction augmented elastic band.
//!
//! Three social terms are added to every interior band pose, evaluated at
//! the pose's cumulative band time `t`:
//!
//! * human-like: `w1 · ‖p − p_self(t)‖`, pulling the band toward the
//!   forecast of the robot's own motion;
//! * dynamic obstacle: `w2 · max(0, d_social − ‖p − p_obs(t)‖)²` for every
//!   forecast person and every untracked moving shape (`p_obs + v_obs · t`);
//! * priority: `−clamp(e, ±saturation)` for people within range, where
//!   `e = cosθ (y_obs − y) − sinθ (x_obs − x)` is positive when the person is
//!   on the robot's left.
//!
//! The weighted sum is scaled by `delta_mp` and added to the classic objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist_to_obstacle_with_grad, ObstacleShape, Point2, Pose2, TimedBand};
use crate::perception::{AgentTrack, TrackSet, HISTORY_LEN};
use crate::planning::{plan_band, PlanOutcome, PlanRequest};
use crate::prediction::{predict_all, PredictedTrajectory, PredictorKind};
use crate::teb::{BandProblem, MovingObstacle, PoseCost, PoseCostTerm, TebParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SocialParams {
    /// Weight of the human-like term.
    pub w1: f64,
    /// Weight of the dynamic-obstacle term.
    pub w2: f64,
    /// Normalization factor applied to the sum of social terms.
    pub delta_mp: f64,
    /// Preferred center distance to people (m).
    pub d_social: f64,
    /// Bound on the magnitude of the priority term (m).
    pub pri_saturation: f64,
    /// People farther than this do not contribute to the priority term (m).
    pub priority_range: f64,
}

impl Default for SocialParams {
    fn default() -> Self {
        Self {
            w1: 0.5,
            w2: 5.0,
            delta_mp: 1.0,
            d_social: 0.8,
            pri_saturation: 1.0,
            priority_range: 2.0,
        }
    }
}

impl SocialParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("w1", self.w1),
            ("w2", self.w2),
            ("delta_mp", self.delta_mp),
            ("d_social", self.d_social),
            ("pri_saturation", self.pri_saturation),
            ("priority_range", self.priority_range),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("social.{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Snapshot of everything the social terms look at during one planning cycle.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SocialContext {
    /// Planning instant; band time `t` maps to absolute time `now + t`.
    pub now: f64,
    pub human_predictions: Vec<PredictedTrajectory>,
    pub robot_self_prediction: Option<PredictedTrajectory>,
    /// Moving shapes without a forecast, extrapolated at constant velocity.
    pub dynamic_obstacles: Vec<ObstacleShape>,
}

impl SocialContext {
    pub fn is_empty(&self) -> bool {
        self.human_predictions.is_empty() && self.robot_self_prediction.is_none() && self.dynamic_obstacles.is_empty()
    }

    /// Positions of every person and moving shape at band time `t`.
    pub fn positions_at(&self, t: f64) -> impl Iterator<Item = Point2> + '_ {
        self.human_predictions
            .iter()
            .map(move |p| p.position_at(self.now + t))
            .chain(self.dynamic_obstacles.iter().map(move |o| o.advanced(t).anchor()))
    }
}

/// Side of the robot on which `obstacle` lies: positive on the left
/// (non-priority side), negative on the right (priority side).
pub fn side_indicator(robot: &Pose2, obstacle: Point2) -> f64 {
    let (s, c) = robot.theta.sin_cos();
    c * (obstacle.y - robot.y) - s * (obstacle.x - robot.x)
}

fn side_indicator_grad(robot: &Pose2, obstacle: Point2) -> [f64; 3] {
    let (s, c) = robot.theta.sin_cos();
    [s, -c, -s * (obstacle.y - robot.y) - c * (obstacle.x - robot.x)]
}

pub fn human_like_term(pose: &Pose2, t: f64, ctx: &SocialContext, sp: &SocialParams) -> PoseCostTerm {
    let mut term = PoseCostTerm::default();
    let Some(own) = &ctx.robot_self_prediction else {
        return term;
    };
    let d = pose.position() - own.position_at(ctx.now + t);
    let n = d.norm();
    term.value = sp.w1 * n;
    if n > 0.0 {
        term.grad = [sp.w1 * d.x / n, sp.w1 * d.y / n, 0.0];
    }
    // curvature of the quadratic majorizer at the current distance
    let k = sp.w1 / n.max(0.1);
    term.hess[0][0] = k;
    term.hess[1][1] = k;
    term
}

pub fn cost_human_like(pose: &Pose2, t: f64, ctx: &SocialContext, sp: &SocialParams) -> f64 {
    human_like_term(pose, t, ctx, sp).value
}

pub fn dynamic_obstacle_term(pose: &Pose2, t: f64, ctx: &SocialContext, sp: &SocialParams) -> PoseCostTerm {
    let mut term = PoseCostTerm::default();
    let p = pose.position();
    let fallback = pose.heading().perp();
    let root = sp.w2.sqrt();
    let mut add = |d: f64, g: Point2| {
        if d < sp.d_social {
            term.add_squared(root * (sp.d_social - d), [-root * g.x, -root * g.y, 0.0]);
        }
    };
    for pred in &ctx.human_predictions {
        let q = pred.position_at(ctx.now + t);
        let v = p - q;
        let d = v.norm();
        let g = if d > 1e-12 { v * (1.0 / d) } else { fallback };
        add(d, g);
    }
    for o in &ctx.dynamic_obstacles {
        let (d, g) = dist_to_obstacle_with_grad(p, &o.advanced(t), fallback);
        add(d, g);
    }
    term
}

pub fn cost_dynamic_obstacle(pose: &Pose2, t: f64, ctx: &SocialContext, sp: &SocialParams) -> f64 {
    dynamic_obstacle_term(pose, t, ctx, sp).value
}

pub fn priority_term(pose: &Pose2, t: f64, ctx: &SocialContext, sp: &SocialParams) -> PoseCostTerm {
    let mut term = PoseCostTerm::default();
    let p = pose.position();
    for q in ctx.positions_at(t) {
        if p.distance(q) > sp.priority_range {
            continue;
        }
        let e = side_indicator(pose, q);
        let clamped = e.clamp(-sp.pri_saturation, sp.pri_saturation);
        term.value -= clamped;
        if e.abs() < sp.pri_saturation {
            let g = side_indicator_grad(pose, q);
            for a in 0..3 {
                term.grad[a] -= g[a];
            }
        }
    }
    term
}

pub fn cost_priority(pose: &Pose2, t: f64, ctx: &SocialContext, sp: &SocialParams) -> f64 {
    priority_term(pose, t, ctx, sp).value
}

/// Social terms as a per-pose cost for the band optimizer.
pub struct SocialCost<'a> {
    pub ctx: &'a SocialContext,
    pub params: &'a SocialParams,
}

impl PoseCost for SocialCost<'_> {
    fn pose_cost(&self, pose: &Pose2, t: f64) -> PoseCostTerm {
        let mut term = human_like_term(pose, t, self.ctx, self.params);
        term.add(&dynamic_obstacle_term(pose, t, self.ctx, self.params));
        term.add(&priority_term(pose, t, self.ctx, self.params));
        term.scaled(self.params.delta_mp)
    }
}

/// Per-term social cost of a band.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SocialBreakdown {
    pub human_like: f64,
    pub dynamic_obstacle: f64,
    pub priority: f64,
}

pub fn social_breakdown(band: &TimedBand, ctx: &SocialContext, sp: &SocialParams) -> SocialBreakdown {
    let mut out = SocialBreakdown::default();
    let mut t = 0.0;
    for k in 1..band.len().saturating_sub(1) {
        t += band.dts[k - 1];
        let pose = &band.poses[k];
        out.human_like += sp.delta_mp * cost_human_like(pose, t, ctx, sp);
        out.dynamic_obstacle += sp.delta_mp * cost_dynamic_obstacle(pose, t, ctx, sp);
        out.priority += sp.delta_mp * cost_priority(pose, t, ctx, sp);
    }
    out
}

/// Classic objective plus the scaled social terms of every interior pose.
pub fn objective_mp(
    band: &TimedBand,
    obstacles: &[ObstacleShape],
    ctx: &SocialContext,
    params: &TebParams,
    sp: &SocialParams,
) -> f64 {
    let social = SocialCost { ctx, params: sp };
    BandProblem::new(params, obstacles).with_extra(&social).evaluate(band)
}

/// Forecast displacement below which the robot counts as standing still (m).
pub const SELF_PREDICTION_MIN_TRAVEL: f64 = 0.5;

/// Builds the social context for one planning cycle. The robot's own
/// forecast is used only once its track holds a full history, and only while
/// it actually goes somewhere: a forecast of standing still would pin the
/// band to the current position.
pub fn build_context(
    now: f64,
    tracks: &TrackSet,
    robot_track: &AgentTrack,
    kind: &PredictorKind,
    statics: &[ObstacleShape],
    untracked: &[ObstacleShape],
) -> SocialContext {
    let preds = predict_all(tracks, robot_track, kind, statics);
    SocialContext {
        now,
        human_predictions: preds.humans,
        robot_self_prediction: preds.robot.filter(|p| {
            robot_track.history.len() == HISTORY_LEN && p.final_point().distance(p.origin) >= SELF_PREDICTION_MIN_TRAVEL
        }),
        dynamic_obstacles: untracked.to_vec(),
    }
}

/// Full planning cycle: forecast → candidate bands → social optimization →
/// selection → velocity command.
pub fn plan_mpteb(
    req: &PlanRequest<'_>,
    tracks: &TrackSet,
    robot_track: &AgentTrack,
    params: &TebParams,
    sp: &SocialParams,
    kind: &PredictorKind,
) -> PlanOutcome {
    let tracked: Vec<_> = tracks.values().filter(|t| t.history.len() >= 2).map(|t| t.id).collect();
    let untracked: Vec<ObstacleShape> = req
        .people
        .iter()
        .filter(|p| !tracked.contains(&p.id))
        .map(|p| ObstacleShape::point(p.position).with_velocity(p.velocity))
        .collect();
    let ctx = build_context(req.now, tracks, robot_track, kind, req.statics, &untracked);

    let mut movers: Vec<MovingObstacle> = ctx
        .human_predictions
        .iter()
        .map(|p| MovingObstacle::predicted(p.clone(), req.now, req.person_radius))
        .collect();
    movers.extend(
        req.people
            .iter()
            .filter(|p| !tracked.contains(&p.id))
            .map(|p| MovingObstacle::linear(p.id, p.position, p.velocity, req.person_radius)),
    );
    let social = SocialCost { ctx: &ctx, params: sp };
    let mut outcome = plan_band(req, params, req.statics, &movers, Some(&social));
    if let Some(sel) = &outcome.selected {
        outcome.diagnostics.social = Some(social_breakdown(&sel.band, &ctx, sp));
    }
    outcome.predictions = ctx.human_predictions.clone();
    outcome.self_prediction = ctx.robot_self_prediction.clone();
    outcome
}
