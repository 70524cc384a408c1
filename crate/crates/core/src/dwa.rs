//! Dynamic window baseline: sample reachable commands, roll each out at
//! constant velocity, score goal approach, clearance and speed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist_to_obstacle, wrap_angle, ObstacleShape, Point2, Pose2, Twist};
use crate::sim::integrate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DwaParams {
    pub v_samples: usize,
    pub omega_samples: usize,
    /// Rollout length (s).
    pub sim_horizon: f64,
    pub sim_dt: f64,
    pub heading_weight: f64,
    pub clearance_weight: f64,
    pub velocity_weight: f64,
    /// Clearance beyond this distance scores the same (m).
    pub clearance_cap: f64,
    /// Period over which the window is reachable (s).
    pub control_period: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub a_max: f64,
    pub alpha_max: f64,
    pub robot_radius: f64,
}

impl Default for DwaParams {
    fn default() -> Self {
        Self {
            v_samples: 11,
            omega_samples: 21,
            sim_horizon: 2.0,
            sim_dt: 0.1,
            heading_weight: 0.8,
            clearance_weight: 0.2,
            velocity_weight: 0.1,
            clearance_cap: 1.0,
            control_period: 0.1,
            v_max: 1.0,
            omega_max: 0.5,
            a_max: 0.5,
            alpha_max: 0.5,
            robot_radius: 0.25,
        }
    }
}

impl DwaParams {
    pub fn validate(&self) -> Result<()> {
        if self.v_samples < 2 || self.omega_samples < 2 {
            return Err(Error::invalid("dwa sample counts must be >= 2"));
        }
        for (name, v) in [
            ("sim_horizon", self.sim_horizon),
            ("sim_dt", self.sim_dt),
            ("clearance_cap", self.clearance_cap),
            ("control_period", self.control_period),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("dwa.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("heading_weight", self.heading_weight),
            ("clearance_weight", self.clearance_weight),
            ("velocity_weight", self.velocity_weight),
            ("a_max", self.a_max),
            ("alpha_max", self.alpha_max),
            ("robot_radius", self.robot_radius),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("dwa.{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// A disc obstacle moving at constant velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwaObstacle {
    pub position: Point2,
    pub velocity: Point2,
    pub radius: f64,
}

impl DwaObstacle {
    pub fn at(&self, t: f64) -> Point2 {
        self.position + self.velocity * t
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Scene<'a> {
    pub statics: &'a [ObstacleShape],
    pub movers: &'a [DwaObstacle],
}

/// Velocities reachable within one control period, intersected with the
/// absolute limits `[−0.2 v_max, v_max] × [−ω_max, ω_max]`.
pub fn admissible_window(current: Twist, params: &DwaParams) -> ((f64, f64), (f64, f64)) {
    let dv = params.a_max * params.control_period;
    let dw = params.alpha_max * params.control_period;
    let clip = |lo: f64, hi: f64, min: f64, max: f64, cur: f64| {
        let (a, b) = (lo.max(min), hi.min(max));
        if a <= b {
            (a, b)
        } else {
            // current command already outside the limits
            let c = cur.clamp(min, max);
            (c, c)
        }
    };
    (
        clip(
            current.v - dv,
            current.v + dv,
            -0.2 * params.v_max,
            params.v_max,
            current.v,
        ),
        clip(
            current.omega - dw,
            current.omega + dw,
            -params.omega_max,
            params.omega_max,
            current.omega,
        ),
    )
}

/// Poses visited under a constant command, starting with `pose`.
pub fn rollout(pose: &Pose2, cmd: Twist, params: &DwaParams) -> Vec<Pose2> {
    let steps = (params.sim_horizon / params.sim_dt).round().max(1.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut p = *pose;
    out.push(p);
    for _ in 0..steps {
        p = integrate(&p, cmd.v, cmd.omega, params.sim_dt);
        out.push(p);
    }
    out
}

/// Weighted sum of goal approach, clearance and speed, each in `[0, 1]`;
/// `None` when the rollout hits something or cannot stop in time.
pub fn score(traj: &[Pose2], cmd: Twist, goal: Point2, scene: &Scene<'_>, params: &DwaParams) -> Option<f64> {
    let mut clearance = f64::INFINITY;
    for (k, p) in traj.iter().enumerate() {
        let t = k as f64 * params.sim_dt;
        let q = p.position();
        for o in scene.statics {
            clearance = clearance.min(dist_to_obstacle(q, o) - params.robot_radius);
        }
        for m in scene.movers {
            clearance = clearance.min(q.distance(m.at(t)) - params.robot_radius - m.radius);
        }
    }
    if clearance <= 0.0 {
        return None;
    }
    if cmd.v > 0.0 && cmd.v * cmd.v > 2.0 * params.a_max * clearance {
        return None;
    }

    let start = traj[0].position();
    let end = traj[traj.len() - 1];
    let to_goal = goal - end.position();
    let bearing = if to_goal.norm() > 1e-9 {
        wrap_angle(to_goal.y.atan2(to_goal.x) - end.theta).abs()
    } else {
        0.0
    };
    let align = (PI - bearing) / PI;
    let reach = start.distance(goal) + params.v_max * params.sim_horizon;
    let progress = 1.0 - to_goal.norm() / reach;
    let heading = 0.5 * (align + progress);
    let clear = clearance.min(params.clearance_cap) / params.clearance_cap;
    let speed = (cmd.v / params.v_max).max(0.0);
    Some(params.heading_weight * heading + params.clearance_weight * clear + params.velocity_weight * speed)
}

/// Evenly spaced samples over `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    })
}

/// Command that brakes toward rest as hard as the limits allow.
pub fn stop_command(current: Twist, params: &DwaParams) -> Twist {
    let toward_zero = |x: f64, step: f64| {
        if x > 0.0 {
            (x - step).max(0.0)
        } else {
            (x + step).min(0.0)
        }
    };
    Twist::new(
        toward_zero(current.v, params.a_max * params.control_period),
        toward_zero(current.omega, params.alpha_max * params.control_period),
    )
}

/// Best-scoring command of the window grid; ties prefer smaller `|ω|`,
/// then smaller `v`.
pub fn select_velocity(pose: &Pose2, current: Twist, goal: Point2, scene: &Scene<'_>, params: &DwaParams) -> Twist {
    let ((v_lo, v_hi), (w_lo, w_hi)) = admissible_window(current, params);
    let mut best: Option<(f64, Twist)> = None;
    for v in grid(v_lo, v_hi, params.v_samples) {
        for w in grid(w_lo, w_hi, params.omega_samples) {
            let cmd = Twist::new(v, w);
            let Some(s) = score(&rollout(pose, cmd, params), cmd, goal, scene, params) else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bs, bc)) => {
                    s > bs || (s == bs && (w.abs() < bc.omega.abs() || (w.abs() == bc.omega.abs() && v < bc.v)))
                }
            };
            if better {
                best = Some((s, cmd));
            }
        }
    }
    best.map_or_else(|| stop_command(current, params), |(_, c)| c)
}
