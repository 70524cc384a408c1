//! Homotopy-class exploration: seed one band per left/right assignment of the
//! nearest moving obstacles, optimize each, keep the cheapest.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ObstacleShape, Point2, Pose2, Shape, TimedBand};
use crate::mpteb::side_indicator;
use crate::perception::AgentId;
use crate::prediction::PredictedTrajectory;

use super::band::seed_band;
use super::solver::{optimize_band, BandProblem};
use super::TebParams;

/// Side of the robot on which an obstacle is passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

pub type Signature = Vec<(AgentId, Side)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandCandidate {
    pub band: TimedBand,
    pub homotopy_signature: Signature,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleMotion {
    /// Forecast trajectory; `now` is the planning instant.
    Predicted {
        trajectory: PredictedTrajectory,
        now: f64,
    },
    Linear {
        position: Point2,
        velocity: Point2,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingObstacle {
    pub id: AgentId,
    pub radius: f64,
    pub motion: ObstacleMotion,
}

impl MovingObstacle {
    pub fn predicted(trajectory: PredictedTrajectory, now: f64, radius: f64) -> Self {
        Self {
            id: trajectory.agent_id,
            radius,
            motion: ObstacleMotion::Predicted { trajectory, now },
        }
    }

    pub fn linear(id: AgentId, position: Point2, velocity: Point2, radius: f64) -> Self {
        Self {
            id,
            radius,
            motion: ObstacleMotion::Linear { position, velocity },
        }
    }

    /// Position `t` seconds after the planning instant.
    pub fn position_at(&self, t: f64) -> Point2 {
        match &self.motion {
            ObstacleMotion::Predicted { trajectory, now } => trajectory.position_at(now + t),
            ObstacleMotion::Linear { position, velocity } => *position + *velocity * t,
        }
    }
}

/// Pose index and band time at which the robot is closest to `m`.
fn closest_approach(band: &TimedBand, m: &MovingObstacle) -> usize {
    let mut t = 0.0;
    let mut best = (f64::INFINITY, 0);
    for (k, p) in band.poses.iter().enumerate() {
        if k > 0 {
            t += band.dts[k - 1];
        }
        let d = p.position().distance(m.position_at(t));
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

/// Side on which each obstacle lies at the band's closest approach to it.
pub fn band_signature(band: &TimedBand, movers: &[&MovingObstacle]) -> Signature {
    let times = band.timestamps();
    movers
        .iter()
        .map(|m| {
            let k = closest_approach(band, m);
            let pose = band.poses[k];
            let dir = if k + 1 < band.len() {
                band.poses[k + 1].position() - pose.position()
            } else if k > 0 {
                pose.position() - band.poses[k - 1].position()
            } else {
                pose.heading()
            };
            let heading = if dir.norm() > 1e-9 {
                dir.y.atan2(dir.x)
            } else {
                pose.theta
            };
            let probe = Pose2::new(pose.x, pose.y, heading);
            let side = if side_indicator(&probe, m.position_at(times[k])) > 0.0 {
                Side::Left
            } else {
                Side::Right
            };
            (m.id, side)
        })
        .collect()
}

fn segments_intersect(p: Point2, q: Point2, a: Point2, b: Point2) -> bool {
    let r = q - p;
    let s = b - a;
    let denom = r.cross(s);
    if denom.abs() < 1e-15 {
        return false;
    }
    let t = (a - p).cross(s) / denom;
    let u = (a - p).cross(r) / denom;
    (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)
}

/// True when any band segment passes through a static wall or circle.
pub fn band_crosses_statics(band: &TimedBand, statics: &[ObstacleShape]) -> bool {
    band.poses.windows(2).any(|w| {
        let (p, q) = (w[0].position(), w[1].position());
        statics.iter().any(|o| match o.shape {
            Shape::Segment { a, b } => segments_intersect(p, q, a, b),
            Shape::Circle { center, radius } => {
                crate::geometry::closest_point_on_segment(center, p, q).distance(center) < radius
            }
            Shape::Point { .. } => false,
        })
    })
}

/// Planning problem shared by all candidates of one cycle.
pub struct CandidateRequest<'a> {
    pub start: Pose2,
    /// Intermediate route points between start and goal.
    pub via: &'a [Point2],
    pub goal: Pose2,
    pub movers: &'a [MovingObstacle],
    /// Static geometry, used to discard bands that cut through walls.
    pub statics: &'a [ObstacleShape],
    pub warm_start: Option<&'a TimedBand>,
}

struct Crossing<'m> {
    mover: &'m MovingObstacle,
    arc: f64,
    point: Point2,
    normal: Point2,
}

fn polyline(start: Point2, via: &[Point2], goal: Point2) -> Vec<Point2> {
    let mut v = vec![start];
    v.extend_from_slice(via);
    v.push(goal);
    v
}

/// Point and unit direction at arc length `s` along `pts`.
fn along(pts: &[Point2], s: f64) -> (Point2, Point2) {
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let len = w[0].distance(w[1]);
        if len > 0.0 && s <= acc + len {
            let dir = (w[1] - w[0]) * (1.0 / len);
            return (w[0] + dir * (s - acc), dir);
        }
        acc += len;
    }
    let n = pts.len();
    let dir = (pts[n - 1] - pts[n - 2]).normalized().unwrap_or(Point2::new(1.0, 0.0));
    (pts[n - 1], dir)
}

fn arc_length(pts: &[Point2]) -> f64 {
    pts.windows(2).map(|w| w[0].distance(w[1])).sum()
}

fn find_crossings<'m>(req: &CandidateRequest<'m>, params: &TebParams) -> Vec<Crossing<'m>> {
    let pts = polyline(req.start.position(), req.via, req.goal.position());
    let total = arc_length(&pts);
    let horizon = total / params.v_max + 0.5;
    let threshold = 2.0 * params.d_min;
    let mut found: Vec<(f64, Crossing<'m>)> = Vec::new();
    for m in req.movers {
        let mut best = (f64::INFINITY, 0.0);
        let steps = (horizon / 0.1).ceil() as usize;
        for i in 0..=steps {
            let t = i as f64 * 0.1;
            let s = (params.v_max * t).min(total);
            let (p, _) = along(&pts, s);
            let d = p.distance(m.position_at(t));
            if d < best.0 {
                best = (d, t);
            }
        }
        if best.0 < threshold + m.radius {
            let arc = (params.v_max * best.1).min(total);
            let (_, dir) = along(&pts, arc);
            let dist_now = m.position_at(0.0).distance(req.start.position());
            found.push((
                dist_now,
                Crossing {
                    mover: m,
                    arc,
                    point: m.position_at(best.1),
                    normal: dir.perp(),
                },
            ));
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.mover.id.cmp(&b.1.mover.id)));
    found.truncate(params.homotopy_obstacles);
    found.into_iter().map(|(_, c)| c).collect()
}

/// Seed bands: the warm start, if any, then one fresh seed per distinct
/// signature over the nearest crossing obstacles. The straight reference
/// seed comes last among the fresh ones.
pub fn seed_candidates(req: &CandidateRequest<'_>, params: &TebParams) -> Vec<(TimedBand, Signature)> {
    let crossings = find_crossings(req, params);
    let considered: Vec<&MovingObstacle> = crossings.iter().map(|c| c.mover).collect();
    let route = polyline(req.start.position(), req.via, req.goal.position());
    let route_arcs: Vec<f64> = {
        let mut acc = 0.0;
        let mut arcs = vec![];
        for w in route.windows(2) {
            acc += w[0].distance(w[1]);
            arcs.push(acc);
        }
        arcs
    };

    let mut seeds = Vec::new();
    let reference = seed_band(&req.start, req.via, &req.goal, params);
    let offset = 2.0 * params.d_min;
    for mask in 0..(1usize << crossings.len()) {
        let mut points: Vec<(f64, Point2)> = req.via.iter().zip(&route_arcs).map(|(&p, &a)| (a, p)).collect();
        for (j, c) in crossings.iter().enumerate() {
            // bit set: obstacle kept on the robot's left, so pass on its right
            let sign = if mask & (1 << j) != 0 { -1.0 } else { 1.0 };
            points.push((c.arc, c.point + c.normal * (sign * offset)));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let via: Vec<Point2> = points.into_iter().map(|(_, p)| p).collect();
        seeds.push(seed_band(&req.start, &via, &req.goal, params));
    }
    // the reference seed only fills a class no detour reached
    seeds.push(reference);

    let mut seen = HashSet::new();
    let fresh = seeds.into_iter().filter_map(|band| {
        let sig = band_signature(&band, &considered);
        seen.insert(sig.clone()).then_some((band, sig))
    });
    // the warm start never displaces a fresh seed, so a band stuck in a poor
    // local minimum still competes against a clean one of its class
    req.warm_start
        .map(|w| (w.clone(), band_signature(w, &considered)))
        .into_iter()
        .chain(fresh)
        .collect()
}

/// Seeds, optimizes and scores one band per homotopy class.
pub fn generate_candidates(req: &CandidateRequest<'_>, problem: &BandProblem<'_>) -> Vec<BandCandidate> {
    let params = problem.params;
    let crossings = find_crossings(req, params);
    let considered: Vec<&MovingObstacle> = crossings.iter().map(|c| c.mover).collect();
    let seeds = seed_candidates(req, params);
    let optimized: Vec<BandCandidate> = seeds
        .par_iter()
        .map(|(band, _)| {
            let band = optimize_band(band, problem);
            let cost = problem.evaluate(&band);
            let homotopy_signature = band_signature(&band, &considered);
            BandCandidate {
                band,
                homotopy_signature,
                cost,
            }
        })
        .collect();

    let (clear, crossing): (Vec<_>, Vec<_>) = optimized
        .into_iter()
        .partition(|c| !band_crosses_statics(&c.band, req.statics));
    let pool = if clear.is_empty() { crossing } else { clear };

    let mut out: Vec<BandCandidate> = Vec::with_capacity(pool.len());
    for cand in pool {
        match out.iter_mut().find(|c| c.homotopy_signature == cand.homotopy_signature) {
            Some(existing) if cand.cost < existing.cost => *existing = cand,
            Some(_) => {}
            None => out.push(cand),
        }
    }
    out
}

/// Index of the cheapest candidate; ties go to fewer poses, then to the
/// lexicographically smaller signature.
pub fn select_best(candidates: &[BandCandidate]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let b = &candidates[best];
        let better = c
            .cost
            .total_cmp(&b.cost)
            .then(c.band.len().cmp(&b.band.len()))
            .then(c.homotopy_signature.cmp(&b.homotopy_signature))
            .is_lt();
        if better {
            best = i;
        }
    }
    Ok(best)
}
