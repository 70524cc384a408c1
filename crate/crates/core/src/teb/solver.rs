//! Damped least-squares optimization of a timed band.
//!
//! Free variables are the interior poses and every time interval, laid out
//! as `[dt0, x1, y1, θ1, dt1, x2, y2, θ2, dt2, …]`. With this ordering every
//! term couples variables at most ten positions apart, so the normal
//! equations are banded and solved with a banded Cholesky factorization.

use log::trace;
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, ObstacleShape, Pose2, TimedBand, Twist, MIN_DT};

use super::band::resize_band;
use super::residuals::{
    acceleration_with_grad, clearance_with_grad, goal_acceleration_with_grad, kinematics_with_grad,
    start_acceleration_with_grad, velocity_with_grad,
};
use super::TebParams;

const HALF_BANDWIDTH: usize = 10;
const DT_FLOOR: f64 = MIN_DT * (1.0 + 1e-6);

/// Local quadratic model of a cost attached to a single pose: value,
/// gradient w.r.t. `[x, y, θ]` and a positive semi-definite curvature estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PoseCostTerm {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

impl PoseCostTerm {
    /// Adds the squared residual `r²` given `∇r`.
    pub fn add_squared(&mut self, r: f64, dr: [f64; 3]) {
        self.value += r * r;
        for a in 0..3 {
            self.grad[a] += 2.0 * r * dr[a];
            for b in 0..3 {
                self.hess[a][b] += 2.0 * dr[a] * dr[b];
            }
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.value *= s;
        for a in 0..3 {
            self.grad[a] *= s;
            for b in 0..3 {
                self.hess[a][b] *= s;
            }
        }
        self
    }

    pub fn add(&mut self, o: &PoseCostTerm) {
        self.value += o.value;
        for a in 0..3 {
            self.grad[a] += o.grad[a];
            for b in 0..3 {
                self.hess[a][b] += o.hess[a][b];
            }
        }
    }
}

/// Additional per-pose cost evaluated at the pose's cumulative band time.
pub trait PoseCost: Sync {
    fn pose_cost(&self, pose: &Pose2, t: f64) -> PoseCostTerm;
}

/// Velocities the band must connect to at its ends.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVelocities {
    pub start: Option<Twist>,
    pub goal: Option<Twist>,
}

/// Everything the objective depends on besides the band itself.
#[derive(Clone, Copy)]
pub struct BandProblem<'a> {
    pub params: &'a TebParams,
    pub obstacles: &'a [ObstacleShape],
    pub boundary: BoundaryVelocities,
    pub extra: Option<&'a dyn PoseCost>,
}

impl<'a> BandProblem<'a> {
    pub fn new(params: &'a TebParams, obstacles: &'a [ObstacleShape]) -> Self {
        Self {
            params,
            obstacles,
            boundary: BoundaryVelocities::default(),
            extra: None,
        }
    }

    pub fn with_boundary(mut self, boundary: BoundaryVelocities) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_extra(mut self, extra: &'a dyn PoseCost) -> Self {
        self.extra = Some(extra);
        self
    }

    /// Objective value of `band`.
    pub fn evaluate(&self, band: &TimedBand) -> f64 {
        let mut sink = ValueOnly;
        accumulate(self, band, &mut sink)
    }

    /// Objective value split into its terms.
    pub fn breakdown(&self, band: &TimedBand) -> CostBreakdown {
        let mut sink = Breakdown::default();
        accumulate(self, band, &mut sink);
        sink.0
    }

    fn linearize(&self, band: &TimedBand) -> (f64, Vec<f64>, BandMatrix) {
        let n = variable_count(band);
        let mut sink = Normal {
            grad: vec![0.0; n],
            hess: BandMatrix::zeros(n, HALF_BANDWIDTH),
        };
        let value = accumulate(self, band, &mut sink);
        (value, sink.grad, sink.hess)
    }
}

/// Per-term objective contributions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub time: f64,
    pub kinematics: f64,
    pub velocity: f64,
    pub clearance: f64,
    pub acceleration: f64,
    pub extra: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.time + self.kinematics + self.velocity + self.clearance + self.acceleration + self.extra
    }
}

#[derive(Clone, Copy)]
enum Term {
    Time,
    Kinematics,
    Velocity,
    Clearance,
    Acceleration,
    Extra,
}

fn variable_count(band: &TimedBand) -> usize {
    4 * band.len() - 7
}

fn pose_var(n_poses: usize, k: usize, c: usize) -> Option<usize> {
    (k > 0 && k + 1 < n_poses).then(|| 4 * (k - 1) + 1 + c)
}

fn dt_var(i: usize) -> usize {
    4 * i
}

trait Sink {
    /// Squared residual `w·r²` with `∇r` over `vars`.
    fn residual(&mut self, term: Term, weight: f64, r: f64, vars: &[Option<usize>], jac: &[f64]);
    /// Arbitrary pose cost with its local model.
    fn pose_term(&mut self, term: Term, vars: [Option<usize>; 3], t: &PoseCostTerm);
}

struct ValueOnly;

impl Sink for ValueOnly {
    fn residual(&mut self, _: Term, _: f64, _: f64, _: &[Option<usize>], _: &[f64]) {}
    fn pose_term(&mut self, _: Term, _: [Option<usize>; 3], _: &PoseCostTerm) {}
}

#[derive(Default)]
struct Breakdown(CostBreakdown);

impl Sink for Breakdown {
    fn residual(&mut self, term: Term, weight: f64, r: f64, _: &[Option<usize>], _: &[f64]) {
        let v = weight * r * r;
        let b = &mut self.0;
        match term {
            Term::Time => b.time += v,
            Term::Kinematics => b.kinematics += v,
            Term::Velocity => b.velocity += v,
            Term::Clearance => b.clearance += v,
            Term::Acceleration => b.acceleration += v,
            Term::Extra => b.extra += v,
        }
    }

    fn pose_term(&mut self, _: Term, _: [Option<usize>; 3], t: &PoseCostTerm) {
        self.0.extra += t.value;
    }
}

struct Normal {
    grad: Vec<f64>,
    hess: BandMatrix,
}

impl Sink for Normal {
    fn residual(&mut self, _: Term, weight: f64, r: f64, vars: &[Option<usize>], jac: &[f64]) {
        if r == 0.0 && jac.iter().all(|&j| j == 0.0) {
            return;
        }
        for (a, va) in vars.iter().enumerate() {
            let Some(ia) = *va else { continue };
            self.grad[ia] += 2.0 * weight * r * jac[a];
            for (b, vb) in vars.iter().enumerate() {
                let Some(ib) = *vb else { continue };
                if ib <= ia {
                    self.hess.add(ia, ib, 2.0 * weight * jac[a] * jac[b]);
                }
            }
        }
    }

    fn pose_term(&mut self, _: Term, vars: [Option<usize>; 3], t: &PoseCostTerm) {
        for a in 0..3 {
            let Some(ia) = vars[a] else { continue };
            self.grad[ia] += t.grad[a];
            for b in 0..3 {
                let Some(ib) = vars[b] else { continue };
                if ib <= ia {
                    self.hess.add(ia, ib, t.hess[a][b]);
                }
            }
        }
    }
}

/// Walks every term of the objective, reports it to `sink` and returns the
/// total value. Terms are visited in a fixed order so the value is
/// reproducible bit-for-bit.
fn accumulate<S: Sink>(problem: &BandProblem<'_>, band: &TimedBand, sink: &mut S) -> f64 {
    let prm = problem.params;
    let poses = &band.poses;
    let dts = &band.dts;
    let n = poses.len();
    let pv = |k: usize| [pose_var(n, k, 0), pose_var(n, k, 1), pose_var(n, k, 2)];
    let mut total = 0.0;

    for i in 0..n - 1 {
        let (si, sj, dt) = (&poses[i], &poses[i + 1], dts[i]);
        let dv = Some(dt_var(i));
        let [xi, yi, ti] = pv(i);
        let [xj, yj, tj] = pv(i + 1);

        // time
        total += dt * dt;
        sink.residual(Term::Time, 1.0, dt, &[dv], &[1.0]);

        // non-holonomic kinematics
        let (h, gh) = kinematics_with_grad(si, sj);
        total += prm.weight_kinematics * h * h;
        sink.residual(
            Term::Kinematics,
            prm.weight_kinematics,
            h,
            &[xi, yi, ti, xj, yj, tj],
            &gh,
        );

        // velocity limits
        let ((ve, gv), (we, gw)) = velocity_with_grad(si, sj, dt, prm);
        let vars7 = [xi, yi, ti, xj, yj, tj, dv];
        total += prm.weight_velocity * (ve * ve + we * we);
        sink.residual(Term::Velocity, prm.weight_velocity, ve, &vars7, &gv);
        sink.residual(Term::Velocity, prm.weight_velocity, we, &vars7, &gw);

        // clearance of pose i
        let (o, go) = clearance_with_grad(si, problem.obstacles, prm);
        total += prm.weight_obstacle * o * o;
        sink.residual(Term::Clearance, prm.weight_obstacle, o, &[xi, yi, ti], &go);

        // acceleration at pose i
        if i > 0 {
            let (a, ga) = acceleration_with_grad(&poses[i - 1], si, sj, dts[i - 1], dt, prm);
            total += prm.weight_acceleration * a * a;
            let [xp, yp, tp] = pv(i - 1);
            let vars = [xp, yp, tp, xi, yi, ti, xj, yj, tj, Some(dt_var(i - 1)), dv];
            sink.residual(Term::Acceleration, prm.weight_acceleration, a, &vars, &ga);
        }
    }

    if let Some(v0) = problem.boundary.start {
        let (a, ga) = start_acceleration_with_grad(&poses[0], &poses[1], dts[0], v0, prm);
        total += prm.weight_acceleration * a * a;
        let [x0, y0, t0] = pv(0);
        let [x1, y1, t1] = pv(1);
        sink.residual(
            Term::Acceleration,
            prm.weight_acceleration,
            a,
            &[x0, y0, t0, x1, y1, t1, Some(dt_var(0))],
            &ga,
        );
    }
    if let Some(vg) = problem.boundary.goal {
        let i = n - 2;
        let (a, ga) = goal_acceleration_with_grad(&poses[i], &poses[i + 1], dts[i], vg, prm);
        total += prm.weight_acceleration * a * a;
        let [x0, y0, t0] = pv(i);
        let [x1, y1, t1] = pv(i + 1);
        sink.residual(
            Term::Acceleration,
            prm.weight_acceleration,
            a,
            &[x0, y0, t0, x1, y1, t1, Some(dt_var(i))],
            &ga,
        );
    }

    if let Some(extra) = problem.extra {
        let mut t = 0.0;
        for k in 1..n - 1 {
            t += dts[k - 1];
            let term = extra.pose_cost(&poses[k], t);
            total += term.value;
            sink.pose_term(Term::Extra, pv(k), &term);
        }
    }
    total
}

/// Symmetric banded matrix storing the lower triangle.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    kd: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn zeros(n: usize, kd: usize) -> Self {
        Self {
            n,
            kd,
            data: vec![0.0; n * (kd + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.kd, "entry ({i}, {j}) outside band");
        i * (self.kd + 1) + (self.kd + j - i)
    }

    /// Adds `v` at `(i, j)` with `j <= i`.
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.kd {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Solves `A x = b` by an in-place Cholesky factorization. Returns `None`
    /// when the matrix is not positive definite.
    pub(crate) fn solve(mut self, b: &[f64]) -> Option<Vec<f64>> {
        let (n, kd) = (self.n, self.kd);
        for j in 0..n {
            let lo = j.saturating_sub(kd);
            let mut d = self.data[self.idx(j, j)];
            for k in lo..j {
                let l = self.data[self.idx(j, k)];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            let jj = self.idx(j, j);
            self.data[jj] = d;
            for i in j + 1..(j + kd + 1).min(n) {
                let lo_i = i.saturating_sub(kd);
                let mut s = self.data[self.idx(i, j)];
                for k in lo_i.max(lo)..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                let ij = self.idx(i, j);
                self.data[ij] = s / d;
            }
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(kd);
            let mut s = y[i];
            for k in lo..i {
                s -= self.data[self.idx(i, k)] * y[k];
            }
            y[i] = s / self.data[self.idx(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + kd + 1).min(n);
            let mut s = y[i];
            for k in i + 1..hi {
                s -= self.data[self.idx(k, i)] * y[k];
            }
            y[i] = s / self.data[self.idx(i, i)];
        }
        Some(y)
    }
}

fn apply_step(band: &TimedBand, step: &[f64], dt_max: f64) -> TimedBand {
    let mut out = band.clone();
    let n = out.poses.len();
    for i in 0..n - 1 {
        out.dts[i] = (out.dts[i] + step[dt_var(i)]).clamp(DT_FLOOR, dt_max);
    }
    for k in 1..n - 1 {
        let base = 4 * (k - 1) + 1;
        let p = &mut out.poses[k];
        p.x += step[base];
        p.y += step[base + 1];
        p.theta = wrap_angle(p.theta + step[base + 2]);
    }
    out
}

/// Outcome of [`optimize_band_traced`].
#[derive(Debug, Clone)]
pub struct OptimizationReport {
    pub band: TimedBand,
    pub objective: f64,
    /// Objective after every accepted step, tagged with its outer iteration.
    pub accepted: Vec<(usize, f64)>,
    pub diverged: bool,
}

/// Optimizes the free variables of `band` (interior poses, all intervals).
pub fn optimize_band(band: &TimedBand, problem: &BandProblem<'_>) -> TimedBand {
    optimize_band_traced(band, problem).band
}

/// Same as [`optimize_band`] but also reports the accepted-step history.
pub fn optimize_band_traced(band: &TimedBand, problem: &BandProblem<'_>) -> OptimizationReport {
    let prm = problem.params;
    let mut current = band.clone();
    for dt in &mut current.dts {
        *dt = dt.clamp(DT_FLOOR, prm.dt_max);
    }
    let mut accepted = Vec::new();
    let mut diverged = false;
    let mut value = problem.evaluate(&current);
    if !value.is_finite() {
        return OptimizationReport {
            band: current,
            objective: value,
            accepted,
            diverged: true,
        };
    }

    'outer: for outer in 0..prm.outer_iterations {
        let resized = resize_band(&current, prm);
        if resized.len() != current.len() {
            let v = problem.evaluate(&resized);
            if v.is_finite() {
                current = resized;
                value = v;
            }
        }
        let mut lambda = 1e-4;
        for _ in 0..prm.inner_iterations {
            let (v0, grad, hess) = problem.linearize(&current);
            debug_assert_eq!(v0.to_bits(), value.to_bits());
            let mut improved = false;
            for _ in 0..12 {
                let mut damped = hess.clone();
                for i in 0..grad.len() {
                    let d = damped.get(i, i);
                    damped.add(i, i, lambda * d.max(1e-6) + 1e-9);
                }
                let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
                let Some(step) = damped.solve(&rhs) else {
                    lambda *= 10.0;
                    continue;
                };
                let candidate = apply_step(&current, &step, prm.dt_max);
                let v = problem.evaluate(&candidate);
                if !v.is_finite() {
                    diverged = true;
                    break 'outer;
                }
                if v < value {
                    let rel = (value - v) / value.abs().max(1e-12);
                    current = candidate;
                    value = v;
                    accepted.push((outer, v));
                    lambda = (lambda / 4.0).max(1e-9);
                    improved = true;
                    if rel < prm.tolerance {
                        break 'outer;
                    }
                    break;
                }
                lambda *= 8.0;
                if lambda > 1e10 {
                    break;
                }
            }
            if !improved {
                break;
            }
        }
    }
    trace!("band optimized: {} poses, objective {value:.4}", current.len());
    OptimizationReport {
        band: current,
        objective: value,
        accepted,
        diverged,
    }
}
