//! Fixed-horizon trajectory predictors.
//!
//! Every predictor consumes up to eight observed positions sampled every
//! 0.5 s and emits twelve positions at 0.5 s spacing, i.e. a 6 s forecast.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{closest_point, interpolate_timed, ObstacleShape, Point2, TimedPath};
use crate::perception::{AgentId, AgentTrack, TrackSet};

pub const PREDICTION_STEPS: usize = 12;
pub const PREDICTION_DT: f64 = 0.5;
pub const PREDICTION_HORIZON: f64 = PREDICTION_STEPS as f64 * PREDICTION_DT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedTrajectory {
    pub agent_id: AgentId,
    /// Time of the last observation.
    pub t0: f64,
    /// Last observed position.
    pub origin: Point2,
    /// Forecast positions at `t0 + 0.5 k`, `k = 1..=12`.
    pub points: [Point2; PREDICTION_STEPS],
}

impl PredictedTrajectory {
    /// Forecast position at absolute time `t`; held before `t0` and after the horizon.
    pub fn position_at(&self, t: f64) -> Point2 {
        interpolate_timed(self, t - self.t0).expect("prediction is never empty")
    }

    pub fn final_point(&self) -> Point2 {
        self.points[PREDICTION_STEPS - 1]
    }
}

impl TimedPath for PredictedTrajectory {
    fn sample_count(&self) -> usize {
        PREDICTION_STEPS + 1
    }

    fn sample(&self, i: usize) -> (f64, Point2) {
        if i == 0 {
            (0.0, self.origin)
        } else {
            (i as f64 * PREDICTION_DT, self.points[i - 1])
        }
    }
}

/// Gains of the social-force rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InteractionParams {
    /// Agent-agent repulsion strength (m/s²).
    pub agent_gain: f64,
    /// Agent-agent repulsion range (m).
    pub agent_range: f64,
    /// Sum of the radii of two interacting agents (m).
    pub interaction_radius: f64,
    pub static_gain: f64,
    pub static_range: f64,
    /// Agent radius used against static geometry (m).
    pub static_radius: f64,
    pub max_speed: f64,
}

impl Default for InteractionParams {
    fn default() -> Self {
        Self {
            agent_gain: 2.0,
            agent_range: 0.35,
            interaction_radius: 0.6,
            static_gain: 2.0,
            static_range: 0.35,
            static_radius: 0.3,
            max_speed: HUMAN_MAX_SPEED,
        }
    }
}

impl InteractionParams {
    pub fn without_interaction(self) -> Self {
        Self {
            agent_gain: 0.0,
            static_gain: 0.0,
            ..self
        }
    }

    /// Repulsive acceleration on an agent at `p` from agents at `others`
    /// and from the static geometry.
    pub fn force(&self, p: Point2, others: impl IntoIterator<Item = Point2>, statics: &[ObstacleShape]) -> Point2 {
        let mut f = Point2::ZERO;
        if self.agent_gain != 0.0 {
            for q in others {
                let d = p - q;
                let n = d.norm();
                if n > 1e-9 {
                    let mag = self.agent_gain * ((self.interaction_radius - n) / self.agent_range).exp();
                    f = f + d * (mag / n);
                }
            }
        }
        if self.static_gain != 0.0 {
            for o in statics {
                let d = p - closest_point(p, o);
                let n = d.norm();
                if n > 1e-9 {
                    let mag = self.static_gain * ((self.static_radius - n) / self.static_range).exp();
                    f = f + d * (mag / n);
                }
            }
        }
        f
    }
}

/// Upper bound on human walking speed used by every predictor.
pub const HUMAN_MAX_SPEED: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorKind {
    ConstantVelocity,
    InteractionAware(InteractionParams),
}

impl Default for PredictorKind {
    fn default() -> Self {
        PredictorKind::InteractionAware(InteractionParams::default())
    }
}

pub fn clamp_speed(v: Point2, max_speed: f64) -> Point2 {
    let s = v.norm();
    if s > max_speed {
        v * (max_speed / s)
    } else {
        v
    }
}

/// Least-squares velocity over the track history (zero for a single sample).
pub fn fit_velocity(track: &AgentTrack) -> Point2 {
    let n = track.history.len();
    if n < 2 {
        return Point2::ZERO;
    }
    let inv = 1.0 / n as f64;
    let (mut mt, mut mp) = (0.0, Point2::ZERO);
    for &(t, p) in &track.history {
        mt += t;
        mp = mp + p;
    }
    mt *= inv;
    mp = mp * inv;
    let (mut stt, mut stp) = (0.0, Point2::ZERO);
    for &(t, p) in &track.history {
        let dt = t - mt;
        stt += dt * dt;
        stp = stp + (p - mp) * dt;
    }
    if stt <= 0.0 {
        Point2::ZERO
    } else {
        stp * (1.0 / stt)
    }
}

fn require_history(track: &AgentTrack) -> Result<()> {
    if track.history.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            have: track.history.len(),
        });
    }
    Ok(())
}

fn last_sample(track: &AgentTrack) -> (f64, Point2) {
    *track.history.back().expect("history checked non-empty")
}

/// Extrapolates the fitted velocity (speed capped at [`HUMAN_MAX_SPEED`]).
pub fn predict_constant_velocity(track: &AgentTrack) -> Result<PredictedTrajectory> {
    require_history(track)?;
    let v = clamp_speed(fit_velocity(track), HUMAN_MAX_SPEED);
    let (t0, origin) = last_sample(track);
    let mut points = [Point2::ZERO; PREDICTION_STEPS];
    let mut p = origin;
    for slot in points.iter_mut() {
        p = p + v * PREDICTION_DT;
        *slot = p;
    }
    Ok(PredictedTrajectory {
        agent_id: track.id,
        t0,
        origin,
        points,
    })
}

struct RolloutAgent {
    pos: Point2,
    preferred: Point2,
}

fn rollout(
    agents: &mut [RolloutAgent],
    statics: &[ObstacleShape],
    params: &InteractionParams,
) -> Vec<[Point2; PREDICTION_STEPS]> {
    let mut out = vec![[Point2::ZERO; PREDICTION_STEPS]; agents.len()];
    let mut next = vec![Point2::ZERO; agents.len()];
    for k in 0..PREDICTION_STEPS {
        for (i, a) in agents.iter().enumerate() {
            let others = agents.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, b)| b.pos);
            let f = params.force(a.pos, others, statics);
            let v = clamp_speed(a.preferred + f * PREDICTION_DT, params.max_speed);
            next[i] = a.pos + v * PREDICTION_DT;
        }
        for (i, a) in agents.iter_mut().enumerate() {
            a.pos = next[i];
            out[i][k] = next[i];
        }
    }
    out
}

/// Social-force rollout: every agent walks at its fitted velocity while being
/// pushed away from the others' concurrently rolled-out positions and from
/// static geometry.
pub fn predict_interaction(
    track: &AgentTrack,
    neighbors: &[&AgentTrack],
    robot_track: Option<&AgentTrack>,
    statics: &[ObstacleShape],
    params: &InteractionParams,
) -> Result<PredictedTrajectory> {
    require_history(track)?;
    let (t0, origin) = last_sample(track);
    let mut agents = vec![RolloutAgent {
        pos: origin,
        preferred: fit_velocity(track),
    }];
    for other in neighbors.iter().copied().chain(robot_track) {
        if other.id == track.id {
            continue;
        }
        if let Some(pos) = other.last_position() {
            agents.push(RolloutAgent {
                pos,
                preferred: fit_velocity(other),
            });
        }
    }
    let paths = rollout(&mut agents, statics, params);
    Ok(PredictedTrajectory {
        agent_id: track.id,
        t0,
        origin,
        points: paths[0],
    })
}

/// Result of [`predict_all`]: one forecast per eligible track plus the
/// robot's own forecast last, and the ids skipped for lack of history.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionSet {
    pub humans: Vec<PredictedTrajectory>,
    pub robot: Option<PredictedTrajectory>,
    pub skipped: Vec<AgentId>,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.humans.len() + usize::from(self.robot.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &PredictedTrajectory> {
        self.humans.iter().chain(self.robot.as_ref())
    }
}

fn predict_one(
    track: &AgentTrack,
    others: &[&AgentTrack],
    robot: Option<&AgentTrack>,
    kind: &PredictorKind,
    statics: &[ObstacleShape],
) -> Result<PredictedTrajectory> {
    match kind {
        PredictorKind::ConstantVelocity => predict_constant_velocity(track),
        PredictorKind::InteractionAware(p) => predict_interaction(track, others, robot, statics, p),
    }
}

/// Forecasts every track with at least two samples, and the robot itself.
pub fn predict_all(
    tracks: &TrackSet,
    robot_track: &AgentTrack,
    kind: &PredictorKind,
    statics: &[ObstacleShape],
) -> PredictionSet {
    let all: Vec<&AgentTrack> = tracks.values().collect();
    let mut set = PredictionSet::default();
    for track in &all {
        match predict_one(track, &all, Some(robot_track), kind, statics) {
            Ok(p) => set.humans.push(p),
            Err(_) => set.skipped.push(track.id),
        }
    }
    set.robot = predict_one(robot_track, &all, None, kind, statics).ok();
    set
}
