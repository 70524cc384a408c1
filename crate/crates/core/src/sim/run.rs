//! Closed-loop runs: sense, predict, plan, act, repeat.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dwa::{select_velocity, DwaObstacle, Scene};
use crate::error::{Error, Result};
use crate::eval::Scenario;
use crate::geometry::{ObstacleShape, Point2, Pose2, TimedBand, Twist};
use crate::mpteb::plan_mpteb;
use crate::perception::{
    camera_to_world, detection_to_position, line_of_sight_blocked, project_human_to_detection, raycast_lidar,
    update_tracks, AgentId, AgentTrack, TrackSet, SAMPLE_PERIOD,
};
use crate::planning::{plan_teb, PersonObservation, PlanOutcome, PlanRequest, PlanStatus, GOAL_TOLERANCE};
use crate::prediction::InteractionParams;

use super::robot::step_robot;
use super::world::{check_collision, step_agents, AgentState, WorldState, AGENT_RADIUS};

/// Route points closer than this to the robot are considered passed (m).
pub const VIA_REACHED: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Dwa,
    Teb,
    Mpteb,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Dwa, PlannerKind::Teb, PlannerKind::Mpteb];

    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerKind::Dwa => "dwa",
            PlannerKind::Teb => "teb",
            PlannerKind::Mpteb => "mpteb",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dwa" => Ok(PlannerKind::Dwa),
            "teb" => Ok(PlannerKind::Teb),
            "mpteb" | "mp-teb" => Ok(PlannerKind::Mpteb),
            other => Err(Error::Invalid(format!(
                "unknown planner `{other}` (expected dwa, teb or mpteb)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub scenario: String,
    pub planner: PlannerKind,
    pub seed: u64,
    pub d_t: f64,
    pub start: Pose2,
    pub goal: Pose2,
    pub robot_radius: f64,
    pub statics: Vec<ObstacleShape>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub id: AgentId,
    pub position: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub time: f64,
    pub robot: Pose2,
    pub velocity: Twist,
    /// Command applied during the following period.
    pub command: Twist,
    pub status: PlanStatus,
    pub agents: Vec<AgentSnapshot>,
    /// Smallest robot-to-person center distance at this tick.
    pub min_hr_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub band: Vec<Point2>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predictions: Vec<Vec<Point2>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub arrived: bool,
    pub collided: bool,
    pub timed_out: bool,
    /// Tick at which the run ended.
    pub final_tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TraceRecord {
    Header(TraceHeader),
    Tick(TickRecord),
    Summary(RunOutcome),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub header: TraceHeader,
    pub ticks: Vec<TickRecord>,
    pub outcome: RunOutcome,
}

impl RunTrace {
    /// One JSON record per line: header, ticks, summary.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let mut line = |rec: &TraceRecord| -> Result<()> {
            serde_json::to_writer(&mut w, rec).map_err(|e| Error::Trace(e.to_string()))?;
            w.write_all(b"\n").map_err(|e| Error::Trace(e.to_string()))
        };
        line(&TraceRecord::Header(self.header.clone()))?;
        for t in &self.ticks {
            line(&TraceRecord::Tick(t.clone()))?;
        }
        line(&TraceRecord::Summary(self.outcome))
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut header = None;
        let mut ticks = Vec::new();
        let mut outcome = None;
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Trace(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TraceRecord =
                serde_json::from_str(&line).map_err(|e| Error::Trace(format!("line {}: {e}", n + 1)))?;
            match rec {
                TraceRecord::Header(h) => header = Some(h),
                TraceRecord::Tick(t) => ticks.push(t),
                TraceRecord::Summary(o) => outcome = Some(o),
            }
        }
        Ok(RunTrace {
            header: header.ok_or_else(|| Error::Trace("missing header record".into()))?,
            ticks,
            outcome: outcome.ok_or_else(|| Error::Trace("missing summary record".into()))?,
        })
    }
}

/// Poses closer than this to the robot are dropped when re-anchoring (m).
const TRIM_MIN_STEP: f64 = 0.05;

/// Drops the band poses already behind the robot and re-anchors the band
/// at the current pose.
fn trim_band(band: &TimedBand, robot: &Pose2) -> Option<TimedBand> {
    let p = robot.position();
    let look = band.len().min(10);
    let k = (0..look)
        .min_by(|&a, &b| {
            band.poses[a]
                .position()
                .distance(p)
                .total_cmp(&band.poses[b].position().distance(p))
        })
        .unwrap_or(0);
    // a pose on top of the robot would pin the first step to zero length
    let mut k = k;
    while k + 2 < band.len() && band.poses[k + 1].position().distance(p) < TRIM_MIN_STEP {
        k += 1;
    }
    let mut poses = vec![*robot];
    poses.extend_from_slice(&band.poses[k + 1..]);
    let dts = band.dts[k..].to_vec();
    (poses.len() >= 3).then_some(TimedBand { poses, dts })
}

struct Sensed {
    /// Camera detections mapped to the world frame.
    detections: Vec<(AgentId, Point2)>,
    people: Vec<PersonObservation>,
}

fn sense(
    scenario: &Scenario,
    state: &WorldState,
    previous: &BTreeMap<AgentId, Point2>,
    rng: &mut ChaCha8Rng,
    pixel_noise: Option<Normal<f64>>,
) -> Sensed {
    let cam = scenario.camera.model();
    let robot = state.robot;
    let mut detections = Vec::new();
    let mut people = Vec::new();
    let mut geometry = scenario.statics.clone();
    geometry.extend(
        state
            .agents
            .iter()
            .map(|a| ObstacleShape::circle(a.position, AGENT_RADIUS)),
    );
    let scan = raycast_lidar(&robot, &geometry, &scenario.lidar);
    for a in &state.agents {
        let mut seen = None;
        if let Some(mut det) =
            project_human_to_detection(&robot, &cam, a.id, a.position, AGENT_RADIUS, &scenario.statics)
        {
            if let Some(noise) = pixel_noise {
                det.x_min += noise.sample(rng);
                det.x_max += noise.sample(rng);
            }
            if let Ok(p_cam) = detection_to_position(&det, &cam) {
                let p = camera_to_world(p_cam, &robot);
                detections.push((a.id, p));
                seen = Some(p);
            }
        }
        if seen.is_none() {
            let d = a.position.distance(robot.position());
            let visible =
                d <= scan.max_range && !line_of_sight_blocked(robot.position(), a.position, &scenario.statics);
            if visible {
                seen = Some(a.position);
            }
        }
        if let Some(p) = seen {
            let velocity = previous
                .get(&a.id)
                .map_or(Point2::ZERO, |&q| (p - q) * (1.0 / scenario.robot.d_t));
            people.push(PersonObservation {
                id: a.id,
                position: p,
                velocity,
            });
        }
    }
    Sensed { detections, people }
}

/// Simulates one run of `planner` on `scenario` with the given seed.
pub fn run_scenario(scenario: &Scenario, planner: PlannerKind, seed: u64) -> Result<RunTrace> {
    scenario.validate()?;
    let model = scenario.robot;
    let d_t = model.d_t;
    let teb = scenario.teb_params();
    let dwa = scenario.dwa_params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let scripts = scenario.agents.clone();
    let start_noise =
        Normal::new(0.0, scenario.noise.start_position_std.max(0.0)).map_err(|e| Error::Invalid(e.to_string()))?;
    let pixel_noise = (scenario.noise.detection_pixel_std > 0.0)
        .then(|| Normal::new(0.0, scenario.noise.detection_pixel_std))
        .transpose()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let agents: Vec<AgentState> = scripts
        .iter()
        .map(|s| {
            let mut a = AgentState::from_script(s);
            a.position = a.position + Point2::new(start_noise.sample(&mut rng), start_noise.sample(&mut rng));
            a.start_delay += rng.gen::<f64>() * scenario.noise.start_delay_jitter;
            a
        })
        .collect();

    let mut state = WorldState {
        tick: 0,
        robot: scenario.robot_start,
        robot_velocity: Twist::ZERO,
        agents,
        statics: scenario.statics.clone(),
    };
    let social_agents = InteractionParams::default();
    let refresh_every = (SAMPLE_PERIOD / d_t).round().max(1.0) as u64;
    let max_ticks = (scenario.timeout / d_t).round() as u64;

    let mut via: VecDeque<Point2> = scenario.route.iter().copied().collect();
    let mut tracks = TrackSet::new();
    let mut robot_track = AgentTrack::new(AgentId::ROBOT);
    let mut previous: BTreeMap<AgentId, Point2> = BTreeMap::new();
    let mut warm: Option<TimedBand> = None;
    let mut ticks = Vec::new();

    let header = TraceHeader {
        scenario: scenario.name.clone(),
        planner,
        seed,
        d_t,
        start: scenario.robot_start,
        goal: scenario.goal,
        robot_radius: model.radius,
        statics: scenario.statics.clone(),
    };

    let outcome = loop {
        let tick = state.tick;
        let now = tick as f64 * d_t;
        let check = check_collision(&state, &model);
        let snapshot: Vec<AgentSnapshot> = state
            .agents
            .iter()
            .map(|a| AgentSnapshot {
                id: a.id,
                position: a.position,
            })
            .collect();
        let min_hr = check.min_hr_distance.is_finite().then_some(check.min_hr_distance);
        let mut record = TickRecord {
            tick,
            time: now,
            robot: state.robot,
            velocity: state.robot_velocity,
            command: Twist::ZERO,
            status: PlanStatus::Planned,
            agents: snapshot,
            min_hr_distance: min_hr,
            band: vec![],
            predictions: vec![],
        };
        let arrived = state.robot.position().distance(scenario.goal.position()) < GOAL_TOLERANCE;
        if check.collided || arrived || tick >= max_ticks {
            if arrived {
                record.status = PlanStatus::Arrived;
            }
            ticks.push(record);
            break RunOutcome {
                arrived: arrived && !check.collided,
                collided: check.collided,
                timed_out: !arrived && !check.collided,
                final_tick: tick,
            };
        }

        let sensed = sense(scenario, &state, &previous, &mut rng, pixel_noise);
        previous = sensed.people.iter().map(|p| (p.id, p.position)).collect();
        if tick.is_multiple_of(refresh_every) {
            update_tracks(&mut tracks, &sensed.detections, now);
            robot_track.observe(now, state.robot.position());
        }
        while via
            .front()
            .is_some_and(|v| v.distance(state.robot.position()) < VIA_REACHED)
        {
            via.pop_front();
        }
        let via_slice: Vec<Point2> = via.iter().copied().collect();

        let command = match planner {
            PlannerKind::Dwa => {
                let movers: Vec<DwaObstacle> = sensed
                    .people
                    .iter()
                    .map(|p| DwaObstacle {
                        position: p.position,
                        velocity: Point2::ZERO,
                        radius: AGENT_RADIUS,
                    })
                    .collect();
                let scene = Scene {
                    statics: &scenario.statics,
                    movers: &movers,
                };
                let local_goal = via_slice.first().copied().unwrap_or(scenario.goal.position());
                select_velocity(&state.robot, state.robot_velocity, local_goal, &scene, &dwa)
            }
            PlannerKind::Teb | PlannerKind::Mpteb => {
                let trimmed = warm.as_ref().and_then(|b| trim_band(b, &state.robot));
                let req = PlanRequest {
                    now,
                    robot: state.robot,
                    velocity: state.robot_velocity,
                    goal: scenario.goal,
                    via: &via_slice,
                    statics: &scenario.statics,
                    people: &sensed.people,
                    person_radius: AGENT_RADIUS,
                    warm_start: trimmed.as_ref(),
                };
                let out: PlanOutcome = if planner == PlannerKind::Teb {
                    plan_teb(&req, &teb)
                } else {
                    plan_mpteb(&req, &tracks, &robot_track, &teb, &scenario.social, &scenario.predictor)
                };
                record.status = out.status;
                record.predictions = out.predictions.iter().map(|p| p.points.to_vec()).collect();
                if let Some(own) = &out.self_prediction {
                    record.predictions.push(own.points.to_vec());
                }
                warm = out.selected.as_ref().map(|c| c.band.clone());
                if let Some(c) = &out.selected {
                    record.band = c.band.poses.iter().map(|p| p.position()).collect();
                    log::trace!(
                        "t={now:.1} candidates={} cost={:.3}",
                        out.diagnostics.candidates,
                        c.cost
                    );
                }
                out.twist
            }
        };
        let command = model.rate_limit(state.robot_velocity, command);
        record.command = command;
        ticks.push(record);

        let mut next = step_agents(&state, &scripts, d_t, &social_agents);
        next.robot = step_robot(&state.robot, command, &model);
        next.robot_velocity = command;
        next.tick = tick + 1;
        state = next;
    };

    Ok(RunTrace { header, ticks, outcome })
}
