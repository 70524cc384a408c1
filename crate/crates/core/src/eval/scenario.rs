//! Scenario files.
//!
//! A scenario is a TOML document. Only `name`, `robot_start` and `goal` are
//! required; every other section falls back to defaults.
//!
//! ```toml
//! name = "example"
//! robot_start = { x = 0.0, y = 0.0, theta = 0.0 }
//! goal = { x = 6.5, y = 0.0, theta = 0.0 }
//! route = [{ x = 3.0, y = 0.0 }]          # optional coarse route
//!
//! [[statics]]
//! shape = { type = "segment", a = { x = -1.0, y = 1.5 }, b = { x = 8.0, y = 1.5 } }
//!
//! [[agents]]
//! id = 1
//! start = { x = 7.0, y = 0.0 }
//! waypoints = [{ x = -1.0, y = 0.0 }]
//! preferred_speed = 0.8
//!
//! [robot]        # RobotModel; its limits also bound every planner
//! [teb]          # TebParams
//! [social]       # SocialParams
//! [dwa]          # DwaParams
//! [predictor]    # kind = "constant_velocity" | "interaction_aware"
//! [camera]       # image_width, hfov_deg, max_depth
//! [lidar]        # beams, max_range, fov
//! [noise]        # seeded per-run jitter
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dwa::DwaParams;
use crate::error::{Error, Result};
use crate::geometry::{dist_to_obstacle, ObstacleShape, Point2, Pose2};
use crate::mpteb::SocialParams;
use crate::perception::{CameraModel, LidarConfig};
use crate::prediction::PredictorKind;
use crate::sim::{AgentScript, RobotModel};
use crate::teb::TebParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSettings {
    pub image_width: f64,
    pub hfov_deg: f64,
    pub max_depth: f64,
}

impl Default for CameraSettings {
    fn default() -> Self {
        Self {
            image_width: 640.0,
            hfov_deg: 87.0,
            max_depth: 8.0,
        }
    }
}

impl CameraSettings {
    pub fn model(&self) -> CameraModel {
        CameraModel::from_fov(self.image_width, self.hfov_deg, self.max_depth)
    }
}

/// Per-run randomization drawn from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseParams {
    /// Standard deviation of each agent's start position (m).
    pub start_position_std: f64,
    /// Agents start after an extra uniform delay in `[0, start_delay_jitter]` (s).
    pub start_delay_jitter: f64,
    /// Standard deviation of detection box edges (px).
    pub detection_pixel_std: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            start_position_std: 0.05,
            start_delay_jitter: 0.3,
            detection_pixel_std: 0.5,
        }
    }
}

fn default_seed() -> u64 {
    1
}

fn default_repeats() -> usize {
    10
}

fn default_timeout() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub robot_start: Pose2,
    pub goal: Pose2,
    #[serde(default)]
    pub route: Vec<Point2>,
    #[serde(default)]
    pub statics: Vec<ObstacleShape>,
    #[serde(default)]
    pub agents: Vec<AgentScript>,
    #[serde(default)]
    pub robot: RobotModel,
    #[serde(default)]
    pub teb: TebParams,
    #[serde(default)]
    pub social: SocialParams,
    #[serde(default)]
    pub dwa: DwaParams,
    #[serde(default)]
    pub predictor: PredictorKind,
    #[serde(default)]
    pub camera: CameraSettings,
    #[serde(default)]
    pub lidar: LidarConfig,
    #[serde(default)]
    pub noise: NoiseParams,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Runs not arrived after this long count as failed (s).
    #[serde(default = "default_timeout")]
    pub timeout: f64,
}

impl Scenario {
    /// Minimal scenario with all defaults.
    pub fn new(name: impl Into<String>, robot_start: Pose2, goal: Pose2) -> Self {
        Self {
            name: name.into(),
            description: String::new(),
            robot_start,
            goal,
            route: vec![],
            statics: vec![],
            agents: vec![],
            robot: RobotModel::default(),
            teb: TebParams::default(),
            social: SocialParams::default(),
            dwa: DwaParams::default(),
            predictor: PredictorKind::default(),
            camera: CameraSettings::default(),
            lidar: LidarConfig::default(),
            noise: NoiseParams::default(),
            seed: default_seed(),
            repeats: default_repeats(),
            timeout: default_timeout(),
        }
    }

    /// Band planner parameters bounded by the robot's limits.
    pub fn teb_params(&self) -> TebParams {
        TebParams {
            v_max: self.robot.v_max,
            omega_max: self.robot.omega_max,
            a_max: self.robot.a_max,
            alpha_max: self.robot.alpha_max,
            robot_radius: self.robot.radius,
            ..self.teb
        }
    }

    pub fn dwa_params(&self) -> DwaParams {
        DwaParams {
            v_max: self.robot.v_max,
            omega_max: self.robot.omega_max,
            a_max: self.robot.a_max,
            alpha_max: self.robot.alpha_max,
            robot_radius: self.robot.radius,
            control_period: self.robot.d_t,
            ..self.dwa
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        self.teb.validate()?;
        self.social.validate()?;
        self.dwa.validate()?;
        self.camera.model().validate()?;
        if self.name.trim().is_empty() {
            return Err(Error::invalid("name must not be empty"));
        }
        if !self.robot_start.is_finite() || !self.goal.is_finite() || self.route.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("start, goal and route must be finite"));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be >= 1"));
        }
        if !(self.timeout > 0.0) || !self.timeout.is_finite() {
            return Err(Error::invalid("timeout must be positive"));
        }
        if self.lidar.beams == 0 || !(self.lidar.max_range > 0.0) {
            return Err(Error::invalid("lidar needs at least one beam and a positive range"));
        }
        for o in &self.statics {
            o.validate()?;
        }
        for (what, p) in [
            ("robot_start", self.robot_start.position()),
            ("goal", self.goal.position()),
        ] {
            if self.statics.iter().any(|o| dist_to_obstacle(p, o) < self.robot.radius) {
                return Err(Error::Invalid(format!("{what} is not in free space")));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for a in &self.agents {
            a.validate()?;
            if !ids.insert(a.id) {
                return Err(Error::Invalid(format!("duplicate agent id {}", a.id)));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| {
            let message = match e.span() {
                Some(span) => {
                    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                    format!("line {line}: {}", e.message())
                }
                None => e.message().to_string(),
            };
            Error::Scenario {
                path: origin.to_string(),
                message,
            }
        })?;
        scenario.validate().map_err(|e| Error::Scenario {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Invalid(e.to_string()))
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scenario::from_toml_str(&text, &path.display().to_string())
}

/// Every `*.toml` scenario in `dir`, ordered by file name.
pub fn load_scenario_dir(dir: impl AsRef<Path>) -> Result<Vec<Scenario>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths.iter().map(load_scenario).collect()
}
