//! Planar geometry shared by every planner: poses, points, obstacle shapes,
//! timed bands and the interpolation used to look them up in time.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound on every band time interval.
pub const MIN_DT: f64 = 1e-3;

/// Wraps an angle into `(-π, π]` without validating it.
///
/// Values already in range are returned untouched, which makes the
/// operation idempotent bit-for-bit.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        PI
    } else {
        r
    }
}

/// Checked variant of [`wrap_angle`]: rejects NaN and infinities.
pub fn normalize_angle(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFinite("angle"));
    }
    Ok(wrap_angle(a))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by `angle`.
    #[inline]
    pub fn rotated(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Left-hand normal (rotated by +90°).
    #[inline]
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    /// Unit vector or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        (n > 1e-12).then(|| self * (1.0 / n))
    }

    pub fn lerp(self, o: Point2, s: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * s, self.y + (o.y - self.y) * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Robot configuration in the world frame. `theta` is kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    #[inline]
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    #[inline]
    pub fn heading(&self) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(c, s)
    }

    pub fn set_theta(&mut self, theta: f64) {
        self.theta = wrap_angle(theta);
    }

    /// Maps a point expressed in this pose's frame into the world frame.
    pub fn transform_point(&self, local: Point2) -> Point2 {
        self.position() + local.rotated(self.theta)
    }

    /// Maps a world point into this pose's frame.
    pub fn inverse_transform_point(&self, world: Point2) -> Point2 {
        (world - self.position()).rotated(-self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Euclidean distance between the positions of two poses; heading is ignored.
#[inline]
pub fn pose_distance(a: &Pose2, b: &Pose2) -> f64 {
    a.position().distance(b.position())
}

/// Linear and angular velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub v: f64,
    pub omega: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist { v: 0.0, omega: 0.0 };

    pub const fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn clamped(self, v_max: f64, omega_max: f64) -> Twist {
        Twist::new(self.v.clamp(-v_max, v_max), self.omega.clamp(-omega_max, omega_max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Point { at: Point2 },
    Circle { center: Point2, radius: f64 },
    Segment { a: Point2, b: Point2 },
}

/// An obstacle outline plus its velocity (zero for static geometry).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleShape {
    pub shape: Shape,
    #[serde(default)]
    pub velocity: Point2,
}

impl ObstacleShape {
    pub fn point(at: Point2) -> Self {
        Self {
            shape: Shape::Point { at },
            velocity: Point2::ZERO,
        }
    }

    pub fn circle(center: Point2, radius: f64) -> Self {
        Self {
            shape: Shape::Circle { center, radius },
            velocity: Point2::ZERO,
        }
    }

    pub fn segment(a: Point2, b: Point2) -> Self {
        Self {
            shape: Shape::Segment { a, b },
            velocity: Point2::ZERO,
        }
    }

    pub fn with_velocity(mut self, velocity: Point2) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.shape {
            Shape::Point { at } if !at.is_finite() => Err(Error::invalid("point must be finite")),
            Shape::Circle { center, radius } => {
                if !center.is_finite() || !radius.is_finite() || radius < 0.0 {
                    Err(Error::invalid("circle needs a finite center and radius >= 0"))
                } else {
                    Ok(())
                }
            }
            Shape::Segment { a, b } => {
                if !a.is_finite() || !b.is_finite() || a == b {
                    Err(Error::invalid("segment endpoints must be finite and distinct"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Reference point of the shape (center for circles, midpoint for segments).
    pub fn anchor(&self) -> Point2 {
        match self.shape {
            Shape::Point { at } => at,
            Shape::Circle { center, .. } => center,
            Shape::Segment { a, b } => a.lerp(b, 0.5),
        }
    }

    /// The same shape translated along its velocity for `t` seconds.
    pub fn advanced(&self, t: f64) -> ObstacleShape {
        let d = self.velocity * t;
        let shape = match self.shape {
            Shape::Point { at } => Shape::Point { at: at + d },
            Shape::Circle { center, radius } => Shape::Circle {
                center: center + d,
                radius,
            },
            Shape::Segment { a, b } => Shape::Segment { a: a + d, b: b + d },
        };
        ObstacleShape {
            shape,
            velocity: self.velocity,
        }
    }
}

/// Closest point on segment `ab` to `p`.
pub fn closest_point_on_segment(p: Point2, a: Point2, b: Point2) -> Point2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let s = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * s
}

/// Closest point of the obstacle outline to `p`. For a circle that contains
/// `p` the point itself is returned.
pub fn closest_point(p: Point2, o: &ObstacleShape) -> Point2 {
    match o.shape {
        Shape::Point { at } => at,
        Shape::Circle { center, radius } => {
            let d = p - center;
            let n = d.norm();
            if n <= radius {
                p
            } else {
                center + d * (radius / n)
            }
        }
        Shape::Segment { a, b } => closest_point_on_segment(p, a, b),
    }
}

/// Euclidean distance from `p` to the obstacle; zero inside a circle.
pub fn dist_to_obstacle(p: Point2, o: &ObstacleShape) -> f64 {
    match o.shape {
        Shape::Point { at } => p.distance(at),
        Shape::Circle { center, radius } => (p.distance(center) - radius).max(0.0),
        Shape::Segment { a, b } => p.distance(closest_point_on_segment(p, a, b)),
    }
}

/// Distance to the obstacle together with its gradient with respect to `p`.
///
/// When `p` coincides with the closest point the gradient is undefined;
/// `fallback` is then used as the push-out direction.
pub fn dist_to_obstacle_with_grad(p: Point2, o: &ObstacleShape, fallback: Point2) -> (f64, Point2) {
    let (d, dir) = match o.shape {
        Shape::Circle { center, radius } => {
            let v = p - center;
            let n = v.norm();
            if n <= radius {
                return (0.0, Point2::ZERO);
            }
            (n - radius, v * (1.0 / n))
        }
        _ => {
            let c = closest_point(p, o);
            let v = p - c;
            let n = v.norm();
            if n < 1e-12 {
                (n, fallback)
            } else {
                (n, v * (1.0 / n))
            }
        }
    };
    (d, dir)
}

/// A sequence of poses interleaved with strictly positive time intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedBand {
    pub poses: Vec<Pose2>,
    pub dts: Vec<f64>,
}

impl TimedBand {
    pub fn new(poses: Vec<Pose2>, dts: Vec<f64>) -> Result<Self> {
        let band = Self { poses, dts };
        band.validate(f64::INFINITY)?;
        Ok(band)
    }

    pub fn validate(&self, dt_max: f64) -> Result<()> {
        if self.poses.len() < 2 {
            return Err(Error::invalid("band needs at least two poses"));
        }
        if self.dts.len() + 1 != self.poses.len() {
            return Err(Error::invalid("band needs exactly one dt per segment"));
        }
        if self.poses.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("band pose"));
        }
        if self.dts.iter().any(|&dt| !(dt >= MIN_DT && dt <= dt_max)) {
            return Err(Error::invalid("band dt outside [1e-3, dt_max]"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn start(&self) -> &Pose2 {
        &self.poses[0]
    }

    pub fn goal(&self) -> &Pose2 {
        self.poses.last().expect("band is never empty")
    }

    pub fn total_time(&self) -> f64 {
        self.dts.iter().sum()
    }

    pub fn path_length(&self) -> f64 {
        self.poses.windows(2).map(|w| pose_distance(&w[0], &w[1])).sum()
    }

    /// Cumulative time of each pose, starting at zero.
    pub fn timestamps(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.poses.len());
        let mut t = 0.0;
        out.push(t);
        for dt in &self.dts {
            t += dt;
            out.push(t);
        }
        out
    }
}

/// A path whose samples carry timestamps relative to the first sample.
pub trait TimedPath {
    fn sample_count(&self) -> usize;
    /// `(time, position)` of sample `i`; times are non-decreasing and start at 0.
    fn sample(&self, i: usize) -> (f64, Point2);
}

impl TimedPath for TimedBand {
    fn sample_count(&self) -> usize {
        self.poses.len()
    }

    fn sample(&self, i: usize) -> (f64, Point2) {
        let t: f64 = self.dts[..i].iter().sum();
        (t, self.poses[i].position())
    }
}

impl TimedPath for [(f64, Point2)] {
    fn sample_count(&self) -> usize {
        self.len()
    }

    fn sample(&self, i: usize) -> (f64, Point2) {
        self[i]
    }
}

/// Position along a timed path at time `t`, linearly interpolated between
/// bracketing samples and held at the ends.
pub fn interpolate_timed<P: TimedPath + ?Sized>(path: &P, t: f64) -> Result<Point2> {
    let n = path.sample_count();
    if n == 0 {
        return Err(Error::invalid("cannot interpolate an empty path"));
    }
    let (t0, p0) = path.sample(0);
    if !(t > t0) {
        return Ok(p0);
    }
    let (mut prev_t, mut prev_p) = (t0, p0);
    for i in 1..n {
        let (ti, pi) = path.sample(i);
        if t < ti {
            let span = ti - prev_t;
            if span <= 0.0 {
                return Ok(pi);
            }
            return Ok(prev_p.lerp(pi, (t - prev_t) / span));
        }
        prev_t = ti;
        prev_p = pi;
    }
    Ok(prev_p)
}
