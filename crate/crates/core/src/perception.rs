//! Simulated RGB-D person detection, LiDAR ray casting and per-person tracks.
//!
//! The camera sits at the robot origin looking along the robot heading. Its
//! 2D frame has `x` pointing to the robot's right and `y` (depth) forward, so
//! that a detection box recovers a camera-frame position as
//!
//! ```text
//! x = (x_min + (x_max - x_min) / 2 - cx) * d / fy
//! y = d
//! ```

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ObstacleShape, Point2, Pose2, Shape};

/// Number of observed positions kept per track.
pub const HISTORY_LEN: usize = 8;
/// Spacing of track samples in seconds.
pub const SAMPLE_PERIOD: f64 = 0.5;
/// Tracks not refreshed for longer than this are dropped.
pub const STALE_AFTER: f64 = 3.0;
const GRID_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl AgentId {
    /// Identifier reserved for the robot's own track.
    pub const ROBOT: AgentId = AgentId(u32::MAX);
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == AgentId::ROBOT {
            f.write_str("robot")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    /// Principal point column in pixels.
    pub cx: f64,
    /// Focal length in pixels. The model uses the same value horizontally.
    pub fy: f64,
    pub image_width: f64,
    /// Horizontal field of view in degrees.
    pub hfov: f64,
    pub max_depth: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self::from_fov(640.0, 87.0, 8.0)
    }
}

impl CameraModel {
    /// Pinhole camera whose focal length matches the given field of view.
    pub fn from_fov(image_width: f64, hfov_deg: f64, max_depth: f64) -> Self {
        let half = 0.5 * hfov_deg.to_radians();
        Self {
            cx: 0.5 * image_width,
            fy: 0.5 * image_width / half.tan(),
            image_width,
            hfov: hfov_deg,
            max_depth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fy > 0.0) {
            return Err(Error::invalid("camera fy must be positive"));
        }
        if !(self.cx > 0.0 && self.cx < self.image_width) {
            return Err(Error::invalid("camera cx must lie inside the image"));
        }
        if !(self.hfov > 0.0 && self.hfov < 180.0) {
            return Err(Error::invalid("camera hfov must be in (0, 180) degrees"));
        }
        if !(self.max_depth > 0.0) {
            return Err(Error::invalid("camera max_depth must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionBox {
    pub x_min: f64,
    pub x_max: f64,
    pub depth: f64,
    pub agent_id: AgentId,
}

/// World point expressed in the camera frame of `robot`.
pub fn world_to_camera(p: Point2, robot: &Pose2) -> Point2 {
    let local = robot.inverse_transform_point(p);
    Point2::new(-local.y, local.x)
}

/// Rigid transform of a camera-frame point into the world frame.
pub fn camera_to_world(p_cam: Point2, robot: &Pose2) -> Point2 {
    robot.transform_point(Point2::new(p_cam.y, -p_cam.x))
}

fn segment_hits_segment(p: Point2, q: Point2, a: Point2, b: Point2) -> bool {
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

/// True when a static segment blocks the line of sight from `from` to `to`.
pub fn line_of_sight_blocked(from: Point2, to: Point2, statics: &[ObstacleShape]) -> bool {
    statics.iter().any(|o| match o.shape {
        Shape::Segment { a, b } => segment_hits_segment(from, to, a, b),
        _ => false,
    })
}

/// Synthesizes the detection box a camera at `robot` would report for a
/// person of radius `human_radius` standing at `human`.
pub fn project_human_to_detection(
    robot: &Pose2,
    cam: &CameraModel,
    agent_id: AgentId,
    human: Point2,
    human_radius: f64,
    occluders: &[ObstacleShape],
) -> Option<DetectionBox> {
    let p_cam = world_to_camera(human, robot);
    let depth = p_cam.y;
    if !(depth > 0.0) || depth > cam.max_depth {
        return None;
    }
    let bearing = p_cam.x.atan2(depth);
    if bearing.abs() > 0.5 * cam.hfov.to_radians() {
        return None;
    }
    if line_of_sight_blocked(robot.position(), human, occluders) {
        return None;
    }
    let center = cam.cx + cam.fy * p_cam.x / depth;
    let half_width = cam.fy * human_radius.max(1e-3) / depth;
    Some(DetectionBox {
        x_min: center - half_width,
        x_max: center + half_width,
        depth,
        agent_id,
    })
}

/// Recovers the camera-frame position of a detected person from its box.
pub fn detection_to_position(det: &DetectionBox, cam: &CameraModel) -> Result<Point2> {
    if !(det.depth > 0.0) {
        return Err(Error::invalid("detection depth must be positive"));
    }
    let x = (det.x_min + (det.x_max - det.x_min) / 2.0 - cam.cx) * det.depth / cam.fy;
    Ok(Point2::new(x, det.depth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LidarConfig {
    pub beams: usize,
    pub max_range: f64,
    /// Angular coverage in radians, centred on the heading.
    pub fov: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            beams: 360,
            max_range: 8.0,
            fov: std::f64::consts::TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarScan {
    pub ranges: Vec<f64>,
    pub angle_min: f64,
    pub angle_max: f64,
    pub angle_increment: f64,
    pub max_range: f64,
}

impl LidarScan {
    pub fn beam_angle(&self, i: usize) -> f64 {
        self.angle_min + i as f64 * self.angle_increment
    }

    pub fn min_range(&self) -> f64 {
        self.ranges.iter().copied().fold(self.max_range, f64::min)
    }
}

fn ray_hit(origin: Point2, dir: Point2, o: &ObstacleShape) -> Option<f64> {
    match o.shape {
        Shape::Point { .. } => None,
        Shape::Segment { a, b } => {
            let s = b - a;
            let denom = dir.cross(s);
            if denom.abs() < 1e-15 {
                return None;
            }
            let t = (a - origin).cross(s) / denom;
            let u = (a - origin).cross(dir) / denom;
            (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
        }
        Shape::Circle { center, radius } => {
            // |origin + t dir - center|^2 = r^2 with |dir| = 1
            let oc = origin - center;
            let b = oc.dot(dir);
            let c = oc.norm_squared() - radius * radius;
            if c <= 0.0 {
                return Some(0.0);
            }
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let t = -b - disc.sqrt();
            (t >= 0.0).then_some(t)
        }
    }
}

/// Casts `config.beams` rays from the robot and returns the nearest hit per
/// beam, clamped to the sensor range. Beam `floor(n/2)` points along the heading.
pub fn raycast_lidar(robot: &Pose2, geometry: &[ObstacleShape], config: &LidarConfig) -> LidarScan {
    let n = config.beams.max(1);
    let inc = config.fov / n as f64;
    let angle_min = -((n / 2) as f64) * inc;
    let origin = robot.position();
    let ranges = (0..n)
        .map(|i| {
            let a = robot.theta + angle_min + i as f64 * inc;
            let dir = Point2::new(a.cos(), a.sin());
            geometry
                .iter()
                .filter_map(|o| ray_hit(origin, dir, o))
                .fold(config.max_range, f64::min)
                .max(1e-6)
        })
        .collect();
    LidarScan {
        ranges,
        angle_min,
        angle_max: angle_min + (n - 1) as f64 * inc,
        angle_increment: inc,
        max_range: config.max_range,
    }
}

/// Observed history of one agent, resampled on a 0.5 s grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrack {
    pub id: AgentId,
    pub history: VecDeque<(f64, Point2)>,
    pub last_seen: f64,
}

impl AgentTrack {
    pub fn new(id: AgentId) -> Self {
        Self {
            id,
            history: VecDeque::with_capacity(HISTORY_LEN),
            last_seen: f64::NEG_INFINITY,
        }
    }

    /// Builds a track from samples, keeping the latest [`HISTORY_LEN`].
    pub fn from_samples(id: AgentId, samples: impl IntoIterator<Item = (f64, Point2)>) -> Self {
        let mut track = Self::new(id);
        for (t, p) in samples {
            track.observe(t, p);
        }
        track
    }

    pub fn last_position(&self) -> Option<Point2> {
        self.history.back().map(|&(_, p)| p)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.history.back().map(|&(t, _)| t)
    }

    pub fn is_full(&self) -> bool {
        self.history.len() == HISTORY_LEN
    }

    /// Records a sighting. A sample is stored only once a full period has
    /// elapsed; a longer gap restarts the history so it stays on the grid.
    pub fn observe(&mut self, now: f64, p: Point2) {
        self.last_seen = now;
        match self.last_time() {
            None => self.history.push_back((now, p)),
            Some(last) => {
                let dt = now - last;
                if dt < SAMPLE_PERIOD - GRID_TOL {
                    return;
                }
                if dt > SAMPLE_PERIOD + GRID_TOL {
                    self.history.clear();
                }
                if self.history.len() == HISTORY_LEN {
                    self.history.pop_front();
                }
                self.history.push_back((now, p));
            }
        }
    }
}

pub type TrackSet = BTreeMap<AgentId, AgentTrack>;

/// Folds the current detections into the track set and drops stale tracks.
pub fn update_tracks(tracks: &mut TrackSet, detections: &[(AgentId, Point2)], now: f64) {
    for &(id, p) in detections {
        tracks.entry(id).or_insert_with(|| AgentTrack::new(id)).observe(now, p);
    }
    tracks.retain(|_, t| now - t.last_seen <= STALE_AFTER);
}
