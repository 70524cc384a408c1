//! Residual terms of the elastic band objective and their analytic gradients.
//!
//! Inequality constraints are one-sided: a term is zero while the constraint
//! holds and grows linearly with the violation otherwise. Gradients are
//! returned in a fixed local layout documented on each function.

use crate::geometry::{dist_to_obstacle_with_grad, wrap_angle, ObstacleShape, Point2, Pose2, Twist};

use super::TebParams;

#[inline]
fn hinge(x: f64) -> f64 {
    x.max(0.0)
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Non-holonomic residual: z-component of
/// `[cosθi + cosθj, sinθi + sinθj, 0] × [xj − xi, yj − yi, 0]`.
pub fn residual_kinematics(si: &Pose2, sj: &Pose2) -> f64 {
    kinematics_with_grad(si, sj).0
}

/// Kinematics residual and its gradient w.r.t. `[xi, yi, θi, xj, yj, θj]`.
pub fn kinematics_with_grad(si: &Pose2, sj: &Pose2) -> (f64, [f64; 6]) {
    let (si_s, si_c) = si.theta.sin_cos();
    let (sj_s, sj_c) = sj.theta.sin_cos();
    let (ax, ay) = (si_c + sj_c, si_s + sj_s);
    let (dx, dy) = (sj.x - si.x, sj.y - si.y);
    let h = ax * dy - ay * dx;
    let grad = [ay, -ax, -si_s * dy - si_c * dx, -ay, ax, -sj_s * dy - sj_c * dx];
    (h, grad)
}

/// Linear and angular velocity limit excesses of one band segment.
pub fn residual_velocity(si: &Pose2, sj: &Pose2, dt: f64, params: &TebParams) -> (f64, f64) {
    let (v, w) = velocity_with_grad(si, sj, dt, params);
    (v.0, w.0)
}

/// Velocity excesses with gradients w.r.t. `[xi, yi, θi, xj, yj, θj, dt]`.
pub fn velocity_with_grad(si: &Pose2, sj: &Pose2, dt: f64, params: &TebParams) -> ((f64, [f64; 7]), (f64, [f64; 7])) {
    let d = sj.position() - si.position();
    let dist = d.norm();
    let v = dist / dt;
    let mut gv = [0.0; 7];
    let v_exc = hinge(v - params.v_max);
    if v_exc > 0.0 && dist > 0.0 {
        let u = d * (1.0 / (dist * dt));
        gv[0] = -u.x;
        gv[1] = -u.y;
        gv[3] = u.x;
        gv[4] = u.y;
        gv[6] = -v / dt;
    }
    let dtheta = wrap_angle(sj.theta - si.theta);
    let w = dtheta / dt;
    let mut gw = [0.0; 7];
    let w_exc = hinge(w.abs() - params.omega_max);
    if w_exc > 0.0 {
        let s = sgn(w);
        gw[2] = -s / dt;
        gw[5] = s / dt;
        gw[6] = -w.abs() / dt;
    }
    ((v_exc, gv), (w_exc, gw))
}

/// Signed segment speed (sign from projecting the displacement on the
/// heading of the first pose) and its gradient w.r.t. `[xi, yi, xj, yj, dt]`.
fn signed_speed(si: &Pose2, sj: &Pose2, dt: f64) -> (f64, [f64; 5]) {
    let d = sj.position() - si.position();
    let dist = d.norm();
    let s = sgn(si.heading().dot(d));
    let v = s * dist / dt;
    if dist == 0.0 {
        return (0.0, [0.0; 5]);
    }
    let u = d * (s / (dist * dt));
    (v, [-u.x, -u.y, u.x, u.y, -v / dt])
}

/// Angular rate of a segment and its gradient w.r.t. `[θi, θj, dt]`.
fn turn_rate(si: &Pose2, sj: &Pose2, dt: f64) -> (f64, [f64; 3]) {
    let w = wrap_angle(sj.theta - si.theta) / dt;
    (w, [-1.0 / dt, 1.0 / dt, -w / dt])
}

/// Acceleration limit excess at `si` given its neighbours: the larger of the
/// translational and rotational excesses.
pub fn residual_acceleration(
    s_prev: &Pose2,
    si: &Pose2,
    s_next: &Pose2,
    dt_prev: f64,
    dt_next: f64,
    params: &TebParams,
) -> f64 {
    acceleration_with_grad(s_prev, si, s_next, dt_prev, dt_next, params).0
}

/// Acceleration excess with gradient w.r.t.
/// `[x_prev, y_prev, θ_prev, xi, yi, θi, x_next, y_next, θ_next, dt_prev, dt_next]`.
pub fn acceleration_with_grad(
    s_prev: &Pose2,
    si: &Pose2,
    s_next: &Pose2,
    dt_prev: f64,
    dt_next: f64,
    params: &TebParams,
) -> (f64, [f64; 11]) {
    let sum = dt_prev + dt_next;

    let (v1, g1) = signed_speed(s_prev, si, dt_prev);
    let (v2, g2) = signed_speed(si, s_next, dt_next);
    let a = 2.0 * (v2 - v1) / sum;
    let lin = hinge(a.abs() - params.a_max);

    let (w1, h1) = turn_rate(s_prev, si, dt_prev);
    let (w2, h2) = turn_rate(si, s_next, dt_next);
    let alpha = 2.0 * (w2 - w1) / sum;
    let rot = hinge(alpha.abs() - params.alpha_max);

    let mut grad = [0.0; 11];
    if lin <= 0.0 && rot <= 0.0 {
        return (0.0, grad);
    }
    if lin >= rot {
        let s = sgn(a);
        let k = 2.0 / sum;
        let da_dsum = -a / sum;
        // dv1 terms
        grad[0] -= s * k * g1[0];
        grad[1] -= s * k * g1[1];
        grad[3] -= s * k * g1[2];
        grad[4] -= s * k * g1[3];
        // dv2 terms
        grad[3] += s * k * g2[0];
        grad[4] += s * k * g2[1];
        grad[6] += s * k * g2[2];
        grad[7] += s * k * g2[3];
        grad[9] = s * (-k * g1[4] + da_dsum);
        grad[10] = s * (k * g2[4] + da_dsum);
        (lin, grad)
    } else {
        let s = sgn(alpha);
        let k = 2.0 / sum;
        let da_dsum = -alpha / sum;
        grad[2] -= s * k * h1[0];
        grad[5] -= s * k * h1[1];
        grad[5] += s * k * h2[0];
        grad[8] += s * k * h2[1];
        grad[9] = s * (-k * h1[2] + da_dsum);
        grad[10] = s * (k * h2[2] + da_dsum);
        (rot, grad)
    }
}

/// Acceleration excess of the first segment relative to the robot's current
/// velocity. Gradient w.r.t. `[x0, y0, θ0, x1, y1, θ1, dt0]`.
pub fn start_acceleration_with_grad(
    s0: &Pose2,
    s1: &Pose2,
    dt: f64,
    current: Twist,
    params: &TebParams,
) -> (f64, [f64; 7]) {
    let (v, g) = signed_speed(s0, s1, dt);
    let a = (v - current.v) / dt;
    let lin = hinge(a.abs() - params.a_max);
    let (w, h) = turn_rate(s0, s1, dt);
    let alpha = (w - current.omega) / dt;
    let rot = hinge(alpha.abs() - params.alpha_max);
    let mut grad = [0.0; 7];
    if lin <= 0.0 && rot <= 0.0 {
        return (0.0, grad);
    }
    if lin >= rot {
        let s = sgn(a);
        grad[0] = s * g[0] / dt;
        grad[1] = s * g[1] / dt;
        grad[3] = s * g[2] / dt;
        grad[4] = s * g[3] / dt;
        grad[6] = s * (g[4] / dt - a / dt);
        (lin, grad)
    } else {
        let s = sgn(alpha);
        grad[2] = s * h[0] / dt;
        grad[5] = s * h[1] / dt;
        grad[6] = s * (h[2] / dt - alpha / dt);
        (rot, grad)
    }
}

/// Acceleration excess of the last segment relative to the desired final
/// velocity. Gradient w.r.t. `[x_{n-1}, y_{n-1}, θ_{n-1}, x_n, y_n, θ_n, dt]`.
pub fn goal_acceleration_with_grad(
    s0: &Pose2,
    s1: &Pose2,
    dt: f64,
    target: Twist,
    params: &TebParams,
) -> (f64, [f64; 7]) {
    let (v, g) = signed_speed(s0, s1, dt);
    let a = (target.v - v) / dt;
    let lin = hinge(a.abs() - params.a_max);
    let (w, h) = turn_rate(s0, s1, dt);
    let alpha = (target.omega - w) / dt;
    let rot = hinge(alpha.abs() - params.alpha_max);
    let mut grad = [0.0; 7];
    if lin <= 0.0 && rot <= 0.0 {
        return (0.0, grad);
    }
    if lin >= rot {
        let s = sgn(a);
        grad[0] = -s * g[0] / dt;
        grad[1] = -s * g[1] / dt;
        grad[3] = -s * g[2] / dt;
        grad[4] = -s * g[3] / dt;
        grad[6] = s * (-g[4] / dt - a / dt);
        (lin, grad)
    } else {
        let s = sgn(alpha);
        grad[2] = -s * h[0] / dt;
        grad[5] = -s * h[1] / dt;
        grad[6] = s * (-h[2] / dt - alpha / dt);
        (rot, grad)
    }
}

/// Clearance violation `max(0, d_min − nearest distance)`; only obstacles
/// within `3·d_min` are associated with the pose.
pub fn residual_clearance(s: &Pose2, obstacles: &[ObstacleShape], params: &TebParams) -> f64 {
    clearance_with_grad(s, obstacles, params).0
}

/// Clearance violation with gradient w.r.t. `[x, y, θ]`.
pub fn clearance_with_grad(s: &Pose2, obstacles: &[ObstacleShape], params: &TebParams) -> (f64, [f64; 3]) {
    let p = s.position();
    let cutoff = 3.0 * params.d_min;
    let fallback = s.heading().perp();
    let mut best: Option<(f64, Point2)> = None;
    for o in obstacles {
        let (d, g) = dist_to_obstacle_with_grad(p, o, fallback);
        if d <= cutoff && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, g));
        }
    }
    match best {
        Some((d, g)) if d < params.d_min => (params.d_min - d, [-g.x, -g.y, 0.0]),
        _ => (0.0, [0.0; 3]),
    }
}
