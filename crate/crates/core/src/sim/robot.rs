//! Differential-drive kinematics.
//!
//! A command `(v, ω)` maps to wheel speeds `v ± L ω / 2`; the body moves at
//! their mean along its heading and turns at their difference over `L`.
//! Wheel speeds keep the rounding residual of that split, so the mean and
//! difference recover the commanded `(v, ω)` exactly and the wheel form
//! integrates bit-for-bit like the unicycle form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2, Twist};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotModel {
    /// Distance between the wheels (m).
    pub wheelbase: f64,
    pub radius: f64,
    pub v_max: f64,
    pub omega_max: f64,
    /// Linear acceleration limit applied to commands (m/s²).
    pub a_max: f64,
    /// Angular acceleration limit applied to commands (rad/s²).
    pub alpha_max: f64,
    /// Control period (s).
    pub d_t: f64,
}

impl Default for RobotModel {
    fn default() -> Self {
        Self {
            wheelbase: 0.4,
            radius: 0.25,
            v_max: 1.0,
            omega_max: 0.5,
            a_max: 0.5,
            alpha_max: 0.5,
            d_t: 0.1,
        }
    }
}

impl RobotModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wheelbase", self.wheelbase),
            ("radius", self.radius),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
            ("a_max", self.a_max),
            ("alpha_max", self.alpha_max),
            ("d_t", self.d_t),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("robot.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Moves `current` toward `target` within one period of acceleration,
    /// then clamps to the velocity limits.
    pub fn rate_limit(&self, current: Twist, target: Twist) -> Twist {
        let dv = self.a_max * self.d_t;
        let dw = self.alpha_max * self.d_t;
        Twist::new(
            target.v.clamp(current.v - dv, current.v + dv),
            target.omega.clamp(current.omega - dw, current.omega + dw),
        )
        .clamped(self.v_max, self.omega_max)
    }
}

/// Wheel speeds with the exact rounding residuals of the split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelSpeeds {
    pub right: f64,
    pub left: f64,
    right_residual: f64,
    left_residual: f64,
    /// `L ω / 2 − fl(L ω / 2)`.
    half_residual: f64,
}

/// `(s, e)` with `s = fl(a + b)` and `s + e = a + b` exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

pub fn wheel_speeds(cmd: Twist, wheelbase: f64) -> WheelSpeeds {
    let half_base = 0.5 * wheelbase;
    let half = half_base * cmd.omega;
    let half_residual = half_base.mul_add(cmd.omega, -half);
    let (right, right_residual) = two_sum(cmd.v, half);
    let (left, left_residual) = two_sum(cmd.v, -half);
    WheelSpeeds {
        right,
        left,
        right_residual,
        left_residual,
        half_residual,
    }
}

/// Body twist `((v_r + v_l) / 2, (v_r − v_l) / L)`.
pub fn body_twist(w: &WheelSpeeds, wheelbase: f64) -> Twist {
    let (s, es) = two_sum(w.right, w.left);
    let v = 0.5 * (s + (es + w.right_residual + w.left_residual));

    let (d, ed) = two_sum(w.right, -w.left);
    let lo = ed + (w.right_residual - w.left_residual) + 2.0 * w.half_residual;
    let q = d / wheelbase;
    let rem = (-q).mul_add(wheelbase, d);
    let omega = q + (rem + lo) / wheelbase;
    Twist::new(v, omega)
}

/// One explicit Euler step of the unicycle model.
pub fn integrate(pose: &Pose2, v: f64, omega: f64, dt: f64) -> Pose2 {
    let (s, c) = pose.theta.sin_cos();
    Pose2 {
        x: pose.x + v * c * dt,
        y: pose.y + v * s * dt,
        theta: wrap_angle(pose.theta + omega * dt),
    }
}

/// Advances the robot one control period using its wheel speeds.
pub fn step_robot(pose: &Pose2, cmd: Twist, model: &RobotModel) -> Pose2 {
    let w = wheel_speeds(cmd, model.wheelbase);
    let body = body_twist(&w, model.wheelbase);
    integrate(pose, body.v, body.omega, model.d_t)
}

/// Advances the robot one period from `(v, ω)` directly.
pub fn step_unicycle(pose: &Pose2, cmd: Twist, d_t: f64) -> Pose2 {
    integrate(pose, cmd.v, cmd.omega, d_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn straight_and_rotation() {
        let m = RobotModel::default();
        let p = step_robot(&Pose2::default(), Twist::new(1.0, 0.0), &m);
        assert_eq!(p, Pose2::new(0.1, 0.0, 0.0));
        let p = step_robot(&Pose2::default(), Twist::new(0.0, 0.5), &m);
        assert_eq!((p.x, p.y), (0.0, 0.0));
        assert_abs_diff_eq!(p.theta, 0.05, epsilon = 1e-15);
        let w = wheel_speeds(Twist::new(0.0, 0.5), m.wheelbase);
        assert_abs_diff_eq!(w.right, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(w.left, -0.1, epsilon = 1e-15);
    }

    #[test]
    fn circle_of_radius_two() {
        let m = RobotModel::default();
        let mut p = Pose2::default();
        for _ in 0..100 {
            p = step_robot(&p, Twist::new(1.0, 0.5), &m);
        }
        // center of the arc is (0, 2)
        let r = ((p.x).powi(2) + (p.y - 2.0).powi(2)).sqrt();
        assert_abs_diff_eq!(r, 2.0, epsilon = 0.05);
    }

    #[test]
    fn rate_limit_bounds() {
        let m = RobotModel::default();
        let u = m.rate_limit(Twist::ZERO, Twist::new(1.0, -0.5));
        assert_abs_diff_eq!(u.v, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(u.omega, -0.05, epsilon = 1e-15);
        let u = m.rate_limit(Twist::new(0.98, 0.0), Twist::new(2.0, 0.0));
        assert_eq!(u.v, 1.0);
    }

    proptest! {
        #[test]
        fn wheel_form_recovers_command(v in -1.0f64..1.0, w in -0.5f64..0.5, l in 0.1f64..1.0) {
            let t = body_twist(&wheel_speeds(Twist::new(v, w), l), l);
            prop_assert_eq!(t.v.to_bits(), v.to_bits());
            prop_assert_eq!(t.omega.to_bits(), w.to_bits());
        }

        #[test]
        fn zero_turn_keeps_heading(x in -5.0f64..5.0, th in -3.0f64..3.0, v in -1.0f64..1.0) {
            let m = RobotModel::default();
            let p = step_robot(&Pose2::new(x, 0.0, th), Twist::new(v, 0.0), &m);
            prop_assert_eq!(p.theta, Pose2::new(x, 0.0, th).theta);
        }
    }
}
