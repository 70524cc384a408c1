//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use socnav::dwa::{admissible_window, rollout, score, select_velocity, DwaObstacle, DwaParams, Scene};
use socnav::eval::{aggregate, load_scenario_dir, run_suite, write_csv, RunRecord, Scenario};
use socnav::mpteb::{
    dynamic_obstacle_term, human_like_term, objective_mp, priority_term, side_indicator, SocialContext, SocialParams,
};
use socnav::perception::{camera_to_world, detection_to_position, project_human_to_detection, AgentTrack, CameraModel};
use socnav::prediction::{predict_constant_velocity, predict_interaction, InteractionParams, PREDICTION_STEPS};
use socnav::sim::{
    body_twist, integrate, run_scenario, step_robot, step_unicycle, wheel_speeds, PlannerKind, RobotModel,
};
use socnav::teb::residuals::{
    acceleration_with_grad, clearance_with_grad, goal_acceleration_with_grad, kinematics_with_grad,
    start_acceleration_with_grad, velocity_with_grad,
};
use socnav::teb::{init_band, objective, optimize_band, BandProblem, BoundaryVelocities, TebParams};
use socnav::{AgentId, ObstacleShape, Point2, Pose2, PredictedTrajectory, TimedBand, Twist};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// 1. gradients

const FD_STEP: f64 = 1e-6;
const FD_REL_TOL: f64 = 1e-4;
/// Gradients smaller than this are compared in absolute terms.
const FD_FLOOR: f64 = 1e-3;

#[derive(Default)]
struct GradStats {
    checked: usize,
    skipped: usize,
    failures: Vec<String>,
}

impl GradStats {
    /// Compares `analytic` with central differences of `f` around `x`.
    /// Components where `f` has a kink or jump within one step are skipped:
    /// the derivative does not exist there.
    fn check(&mut self, label: &str, x: &[f64], analytic: &[f64], f: &dyn Fn(&[f64]) -> f64) {
        let f0 = f(x);
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += FD_STEP;
            xm[i] -= FD_STEP;
            let (fp, fm) = (f(&xp), f(&xm));
            let numeric = (fp - fm) / (2.0 * FD_STEP);
            let a = analytic[i];
            let allowed = FD_REL_TOL * a.abs().max(numeric.abs()).max(FD_FLOOR);
            self.checked += 1;
            if (a - numeric).abs() <= allowed {
                continue;
            }
            let forward = (fp - f0) / FD_STEP;
            let backward = (f0 - fm) / FD_STEP;
            if (forward - backward).abs() > 10.0 * allowed {
                self.skipped += 1;
                continue;
            }
            if self.failures.len() < 5 {
                self.failures
                    .push(format!("{label}[{i}]: analytic {a:.9e} numeric {numeric:.9e}"));
            }
        }
    }
}

fn pose_of(v: &[f64]) -> Pose2 {
    Pose2 {
        x: v[0],
        y: v[1],
        theta: v[2],
    }
}

fn pose_vars(p: &Pose2) -> [f64; 3] {
    [p.x, p.y, p.theta]
}

fn random_band(rng: &mut ChaCha8Rng) -> TimedBand {
    let n = rng.gen_range(4..16);
    let mut poses = Vec::with_capacity(n);
    let mut p = Pose2::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-PI..PI),
    );
    for _ in 0..n {
        poses.push(p);
        let step = rng.gen_range(0.02..0.6);
        let dir = p.theta + rng.gen_range(-0.6..0.6);
        p = Pose2::new(
            p.x + step * dir.cos(),
            p.y + step * dir.sin(),
            (p.theta + rng.gen_range(-0.5..0.5)).rem_euclid(2.0 * PI) - PI,
        );
    }
    let dts = (0..n - 1).map(|_| rng.gen_range(0.1..0.6)).collect();
    TimedBand { poses, dts }
}

fn random_obstacles(rng: &mut ChaCha8Rng, band: &TimedBand) -> Vec<ObstacleShape> {
    let mut out = Vec::new();
    for _ in 0..rng.gen_range(1..5) {
        let anchor = band.poses[rng.gen_range(0..band.len())].position();
        let c = anchor + Point2::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
        out.push(match rng.gen_range(0..3) {
            0 => ObstacleShape::point(c),
            1 => ObstacleShape::circle(c, rng.gen_range(0.05..0.4)),
            _ => {
                let d = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                ObstacleShape::segment(c - d, c + d)
            }
        });
    }
    out
}

fn random_prediction(rng: &mut ChaCha8Rng, id: u32, near: Point2) -> PredictedTrajectory {
    let origin = near + Point2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
    let v = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut points = [Point2::ZERO; PREDICTION_STEPS];
    for (k, p) in points.iter_mut().enumerate() {
        *p = origin + v * (0.5 * (k + 1) as f64);
    }
    PredictedTrajectory {
        agent_id: AgentId(id),
        t0: 0.0,
        origin,
        points,
    }
}

fn criterion_gradients() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut stats = GradStats::default();
    let sp = SocialParams::default();
    for _ in 0..100 {
        let band = random_band(&mut rng);
        let obstacles = random_obstacles(&mut rng, &band);
        let params = TebParams {
            v_max: rng.gen_range(0.2..1.0),
            omega_max: rng.gen_range(0.2..1.0),
            a_max: rng.gen_range(0.2..1.0),
            alpha_max: rng.gen_range(0.2..1.0),
            ..TebParams::default()
        };
        let prm = &params;
        let n = band.len();

        for i in 0..n - 1 {
            let (si, sj, dt) = (band.poses[i], band.poses[i + 1], band.dts[i]);
            let mut x = pose_vars(&si).to_vec();
            x.extend(pose_vars(&sj));
            let (_, g) = kinematics_with_grad(&si, &sj);
            stats.check("kinematics", &x, &g, &|v| {
                kinematics_with_grad(&pose_of(&v[0..3]), &pose_of(&v[3..6])).0
            });

            x.push(dt);
            let ((_, gv), (_, gw)) = velocity_with_grad(&si, &sj, dt, prm);
            stats.check("velocity", &x, &gv, &|v| {
                velocity_with_grad(&pose_of(&v[0..3]), &pose_of(&v[3..6]), v[6], prm)
                    .0
                     .0
            });
            stats.check("turn rate", &x, &gw, &|v| {
                velocity_with_grad(&pose_of(&v[0..3]), &pose_of(&v[3..6]), v[6], prm)
                    .1
                     .0
            });

            let (_, gc) = clearance_with_grad(&si, &obstacles, prm);
            stats.check("clearance", &pose_vars(&si), &gc, &|v| {
                clearance_with_grad(&pose_of(v), &obstacles, prm).0
            });

            if i > 0 {
                let sp_ = band.poses[i - 1];
                let mut x = pose_vars(&sp_).to_vec();
                x.extend(pose_vars(&si));
                x.extend(pose_vars(&sj));
                x.push(band.dts[i - 1]);
                x.push(dt);
                let (_, ga) = acceleration_with_grad(&sp_, &si, &sj, band.dts[i - 1], dt, prm);
                stats.check("acceleration", &x, &ga, &|v| {
                    acceleration_with_grad(
                        &pose_of(&v[0..3]),
                        &pose_of(&v[3..6]),
                        &pose_of(&v[6..9]),
                        v[9],
                        v[10],
                        prm,
                    )
                    .0
                });
            }
        }

        let twist = Twist::new(rng.gen_range(-0.2..1.0), rng.gen_range(-1.0..1.0));
        for (k, goal_side) in [(0, false), (n - 2, true)] {
            let (a, b, dt) = (band.poses[k], band.poses[k + 1], band.dts[k]);
            let mut x = pose_vars(&a).to_vec();
            x.extend(pose_vars(&b));
            x.push(dt);
            if goal_side {
                let (_, g) = goal_acceleration_with_grad(&a, &b, dt, twist, prm);
                stats.check("goal acceleration", &x, &g, &|v| {
                    goal_acceleration_with_grad(&pose_of(&v[0..3]), &pose_of(&v[3..6]), v[6], twist, prm).0
                });
            } else {
                let (_, g) = start_acceleration_with_grad(&a, &b, dt, twist, prm);
                stats.check("start acceleration", &x, &g, &|v| {
                    start_acceleration_with_grad(&pose_of(&v[0..3]), &pose_of(&v[3..6]), v[6], twist, prm).0
                });
            }
        }

        let mid = band.poses[n / 2].position();
        let ctx = SocialContext {
            now: 0.0,
            human_predictions: (0..rng.gen_range(1..4))
                .map(|k| random_prediction(&mut rng, k, mid))
                .collect(),
            robot_self_prediction: Some(random_prediction(&mut rng, AgentId::ROBOT.0, mid)),
            dynamic_obstacles: vec![ObstacleShape::circle(
                mid + Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                0.3,
            )
            .with_velocity(Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))],
        };
        let mut t = 0.0;
        for k in 1..n - 1 {
            t += band.dts[k - 1];
            let pose = band.poses[k];
            let x = pose_vars(&pose);
            let g = human_like_term(&pose, t, &ctx, &sp).grad;
            stats.check("human-like", &x, &g, &|v| {
                human_like_term(&pose_of(v), t, &ctx, &sp).value
            });
            let g = dynamic_obstacle_term(&pose, t, &ctx, &sp).grad;
            stats.check("dynamic obstacle", &x, &g, &|v| {
                dynamic_obstacle_term(&pose_of(v), t, &ctx, &sp).value
            });
            let g = priority_term(&pose, t, &ctx, &sp).grad;
            stats.check("priority", &x, &g, &|v| priority_term(&pose_of(v), t, &ctx, &sp).value);
        }
    }
    let elapsed = start.elapsed();
    let skip_ok = stats.skipped * 1000 <= stats.checked;
    let pass = stats.failures.is_empty() && skip_ok && elapsed < Duration::from_secs(10);
    let mut detail = format!(
        "{} components, {} skipped at kinks, {:.2} s",
        stats.checked,
        stats.skipped,
        elapsed.as_secs_f64()
    );
    for f in &stats.failures {
        detail.push_str(&format!("; {f}"));
    }
    Verdict::new(pass, detail)
}

// ---------------------------------------------------------------------------
// 2. kinematics

fn criterion_kinematics() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let model = RobotModel::default();

    let mut rotation_ok = true;
    for _ in 0..1000 {
        let mut p = Pose2::new(
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-PI..PI),
        );
        let (x0, y0) = (p.x, p.y);
        let w = rng.gen_range(-model.omega_max..model.omega_max);
        for _ in 0..100 {
            p = step_robot(&p, Twist::new(0.0, w), &model);
        }
        rotation_ok &= p.x == x0 && p.y == y0;
    }

    let d_t = 0.01;
    let (v, w) = (1.0, 0.5);
    let period = 2.0 * PI / w;
    let steps = (period / d_t).round() as usize;
    let mut p = Pose2::default();
    for _ in 0..steps {
        p = integrate(&p, v, w, d_t);
    }
    let t = steps as f64 * d_t;
    let r = v / w;
    let exact = Point2::new(r * (w * t).sin(), r * (1.0 - (w * t).cos()));
    let closure = p.position().distance(exact);

    let mut identical = true;
    let mut recovered = true;
    for _ in 0..10_000 {
        let pose = Pose2::new(
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-PI..PI),
        );
        let cmd = Twist::new(rng.gen_range(-0.2..1.0), rng.gen_range(-0.5..0.5));
        let a = step_robot(&pose, cmd, &model);
        let b = step_unicycle(&pose, cmd, model.d_t);
        identical &=
            a.x.to_bits() == b.x.to_bits() && a.y.to_bits() == b.y.to_bits() && a.theta.to_bits() == b.theta.to_bits();
        let back = body_twist(&wheel_speeds(cmd, model.wheelbase), model.wheelbase);
        recovered &= back.v.to_bits() == cmd.v.to_bits() && back.omega.to_bits() == cmd.omega.to_bits();
    }
    Verdict::new(
        rotation_ok && closure < 0.05 && identical && recovered,
        format!(
            "rotation drift zero: {rotation_ok}, circle closure {closure:.4} m, wheel/unicycle identical: {identical}, twist recovered: {recovered}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. camera round trip

fn criterion_round_trip() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let cam = CameraModel::default();
    let half_fov = 0.5 * cam.hfov.to_radians();
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    for k in 0..1000 {
        let robot = Pose2::new(
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-PI..PI),
        );
        let depth = rng.gen_range(0.3..cam.max_depth);
        let bearing = rng.gen_range(-0.95 * half_fov..0.95 * half_fov);
        let human = robot.transform_point(Point2::new(depth, -depth * bearing.tan()));
        let Some(det) = project_human_to_detection(&robot, &cam, AgentId(k), human, 0.3, &[]) else {
            missing += 1;
            continue;
        };
        match detection_to_position(&det, &cam) {
            Ok(p_cam) => worst = worst.max(camera_to_world(p_cam, &robot).distance(human)),
            Err(_) => missing += 1,
        }
    }
    Verdict::new(
        missing == 0 && worst < 1e-9,
        format!("max error {worst:.3e} m over 1000 people, {missing} not detected"),
    )
}

// ---------------------------------------------------------------------------
// 4. DWA brute force

fn brute_force(pose: &Pose2, current: Twist, goal: Point2, scene: &Scene<'_>, p: &DwaParams) -> Twist {
    let ((v_lo, v_hi), (w_lo, w_hi)) = admissible_window(current, p);
    let samples = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    };
    let mut scored = Vec::new();
    for &v in &samples(v_lo, v_hi, p.v_samples) {
        for &w in &samples(w_lo, w_hi, p.omega_samples) {
            let cmd = Twist::new(v, w);
            if let Some(s) = score(&rollout(pose, cmd, p), cmd, goal, scene, p) {
                scored.push((s, cmd));
            }
        }
    }
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.omega.abs().total_cmp(&b.1.omega.abs()))
            .then(a.1.v.total_cmp(&b.1.v))
    });
    scored.first().map(|s| s.1).unwrap_or_else(|| {
        let toward = |x: f64, step: f64| {
            if x > 0.0 {
                (x - step).max(0.0)
            } else {
                (x + step).min(0.0)
            }
        };
        Twist::new(
            toward(current.v, p.a_max * p.control_period),
            toward(current.omega, p.alpha_max * p.control_period),
        )
    })
}

fn criterion_dwa_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let params = DwaParams::default();
    let mut mismatches = Vec::new();
    let mut ties = 0;
    for k in 0..200 {
        let symmetric = k % 4 == 0;
        let (pose, goal, statics, movers) = if symmetric {
            // mirror-symmetric scene around the heading axis exercises ties
            let pose = Pose2::new(0.0, 0.0, 0.0);
            let goal = Point2::new(rng.gen_range(1.0..6.0), 0.0);
            let y = rng.gen_range(0.4..1.5);
            let x = rng.gen_range(0.5..3.0);
            let statics = vec![
                ObstacleShape::circle(Point2::new(x, y), 0.2),
                ObstacleShape::circle(Point2::new(x, -y), 0.2),
            ];
            (pose, goal, statics, vec![])
        } else {
            let pose = Pose2::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-PI..PI),
            );
            let goal = Point2::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            let statics = (0..rng.gen_range(0..4))
                .map(|_| {
                    let c = pose.position() + Point2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                    if rng.gen_bool(0.5) {
                        ObstacleShape::circle(c, rng.gen_range(0.1..0.5))
                    } else {
                        ObstacleShape::segment(c, c + Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                    }
                })
                .collect();
            let movers = (0..rng.gen_range(0..3))
                .map(|_| DwaObstacle {
                    position: pose.position() + Point2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)),
                    velocity: Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    radius: 0.3,
                })
                .collect();
            (pose, goal, statics, movers)
        };
        let current = if symmetric {
            Twist::new(rng.gen_range(0.0..1.0), 0.0)
        } else {
            Twist::new(rng.gen_range(-0.2..1.0), rng.gen_range(-0.5..0.5))
        };
        let scene = Scene {
            statics: &statics,
            movers: &movers,
        };
        let got = select_velocity(&pose, current, goal, &scene, &params);
        let want = brute_force(&pose, current, goal, &scene, &params);
        if got.omega == 0.0 && symmetric {
            ties += 1;
        }
        if got.v.to_bits() != want.v.to_bits() || got.omega.to_bits() != want.omega.to_bits() {
            mismatches.push(format!("scene {k}: {got:?} vs {want:?}"));
        }
    }
    Verdict::new(
        mismatches.is_empty(),
        format!(
            "{} of 200 scenes differ, {ties} symmetric scenes resolved to zero turn rate{}",
            mismatches.len(),
            mismatches.first().map(|m| format!("; {m}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. reductions

fn random_track(rng: &mut ChaCha8Rng, id: u32) -> AgentTrack {
    let n = rng.gen_range(2..=8);
    let start = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let v = Point2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
    AgentTrack::from_samples(
        AgentId(id),
        (0..n).map(|k| {
            let t = 0.5 * k as f64;
            let noise = Point2::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
            (t, start + v * t + noise)
        }),
    )
}

fn criterion_reductions() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let params = TebParams::default();
    let mut objective_ok = true;
    for _ in 0..200 {
        let band = random_band(&mut rng);
        let obstacles = random_obstacles(&mut rng, &band);
        let classic = objective(&band, &obstacles, &params);
        let empty = SocialContext {
            now: 0.0,
            human_predictions: vec![],
            robot_self_prediction: None,
            dynamic_obstacles: vec![],
        };
        let reduced = objective_mp(&band, &obstacles, &empty, &params, &SocialParams::default());
        objective_ok &= reduced.to_bits() == classic.to_bits();

        let mid = band.poses[band.len() / 2].position();
        let busy = SocialContext {
            now: 0.0,
            human_predictions: vec![random_prediction(&mut rng, 1, mid)],
            robot_self_prediction: Some(random_prediction(&mut rng, AgentId::ROBOT.0, mid)),
            dynamic_obstacles: vec![],
        };
        let off = SocialParams {
            delta_mp: 0.0,
            ..SocialParams::default()
        };
        let scaled_out = objective_mp(&band, &obstacles, &busy, &params, &off);
        objective_ok &= scaled_out.to_bits() == classic.to_bits();
    }

    let mut prediction_ok = true;
    let quiet = InteractionParams::default().without_interaction();
    for _ in 0..200 {
        let track = random_track(&mut rng, 1);
        let others: Vec<AgentTrack> = (2..rng.gen_range(2..6)).map(|id| random_track(&mut rng, id)).collect();
        let neighbors: Vec<&AgentTrack> = others.iter().collect();
        let robot = random_track(&mut rng, AgentId::ROBOT.0);
        let statics = vec![ObstacleShape::segment(Point2::new(-5.0, 1.0), Point2::new(5.0, 1.0))];
        let cv = predict_constant_velocity(&track).expect("track has history");
        let ia = predict_interaction(&track, &neighbors, Some(&robot), &statics, &quiet).expect("track has history");
        prediction_ok &= cv.t0 == ia.t0
            && cv.origin == ia.origin
            && cv
                .points
                .iter()
                .zip(&ia.points)
                .all(|(a, b)| a.x.to_bits() == b.x.to_bits() && a.y.to_bits() == b.y.to_bits());
    }
    Verdict::new(
        objective_ok && prediction_ok,
        format!(
            "social objective reduces exactly: {objective_ok}, interaction predictor reduces exactly: {prediction_ok}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. empty world

fn criterion_empty_world() -> Verdict {
    let params = TebParams::default();
    let start = Pose2::new(0.0, 0.0, 0.0);
    let goal = Pose2::new(8.0, 0.0, 0.0);
    let distance = 8.0;
    let problem = BandProblem::new(&params, &[]).with_boundary(BoundaryVelocities {
        start: Some(Twist::ZERO),
        goal: Some(Twist::ZERO),
    });
    let band = optimize_band(&init_band(&start, &goal, &params), &problem);
    let length = band.path_length();
    // accelerating to v_max and braking back to rest each cost v / (2a)
    let reference = distance / params.v_max + params.v_max / params.a_max;
    let time = band.total_time();
    let band_ok = (length - distance).abs() <= 0.01 * distance && (time - reference).abs() <= 0.15 * reference;

    let scenario = Scenario::new("empty", start, goal);
    let closed = run_scenario(&scenario, PlannerKind::Teb, 1);
    let (loop_ok, loop_detail) = match closed {
        Ok(trace) => {
            let last = trace.ticks.last().expect("trace has ticks").robot;
            let travelled: f64 = trace
                .ticks
                .windows(2)
                .map(|w| w[0].robot.position().distance(w[1].robot.position()))
                .sum();
            let straight = start.position().distance(last.position());
            let t = trace.outcome.final_tick as f64 * trace.header.d_t;
            let ok = trace.outcome.arrived
                && (travelled - straight).abs() <= 0.01 * straight
                && (t - reference).abs() <= 0.15 * reference;
            (ok, format!("closed loop {travelled:.3} m in {t:.1} s"))
        }
        Err(e) => (false, format!("closed loop error: {e}")),
    };
    Verdict::new(
        band_ok && loop_ok,
        format!("band {length:.3} m in {time:.2} s (reference {distance:.1} m, {reference:.1} s); {loop_detail}"),
    )
}

// ---------------------------------------------------------------------------
// 7 and 8. scenario suite

/// Reference path lengths per scenario for DWA, TEB and MP-TEB (m).
const REFERENCE_PATH_LENGTH: [(&str, [f64; 3]); 4] = [
    ("reverse_direction", [8.01, 7.89, 7.23]),
    ("multi_person", [8.11, 7.57, 6.73]),
    ("corridor_door", [7.75, 6.95, 7.11]),
    ("turn_right", [6.97, 7.07, 6.54]),
];

fn scenarios_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn criterion_suite(records: &[RunRecord], elapsed: Duration) -> Verdict {
    let mut problems = Vec::new();
    let mut scenarios: Vec<&str> = records.iter().map(|r| r.scenario.as_str()).collect();
    scenarios.dedup();
    for r in records.iter().filter(|r| r.planner == PlannerKind::Mpteb) {
        let m = &r.metrics;
        let close = m.min_hr_distance.is_some_and(|d| d < 0.3);
        if !m.arrived || m.collided || close {
            problems.push(format!(
                "{} seed {}: arrived {}, collided {}, min H-R {:?}",
                r.scenario, r.seed, m.arrived, m.collided, m.min_hr_distance
            ));
        }
    }
    let runs = records.iter().filter(|r| r.planner == PlannerKind::Mpteb).count();
    let pass = scenarios.len() == 4 && runs == 40 && problems.is_empty() && elapsed < Duration::from_secs(300);
    Verdict::new(
        pass,
        format!(
            "{} scenarios, {} runs in {:.1} s, {runs} social-planner runs, {} failing{}",
            scenarios.len(),
            records.len(),
            elapsed.as_secs_f64(),
            problems.len(),
            problems.first().map(|p| format!("; {p}")).unwrap_or_default()
        ),
    )
}

fn criterion_ordering(records: &[RunRecord]) -> Verdict {
    let stats = aggregate(records);
    let row = |s: &str, p: PlannerKind| {
        stats
            .iter()
            .find(|x| x.row.scenario == s && x.row.planner == p)
            .map(|x| &x.row)
    };
    let mut problems = Vec::new();
    let mut notes = Vec::new();

    for s in ["reverse_direction", "turn_right"] {
        let d = |p| row(s, p).and_then(|r| r.min_hr_dist_m);
        match (d(PlannerKind::Mpteb), d(PlannerKind::Teb), d(PlannerKind::Dwa)) {
            (Some(m), Some(t), Some(w)) => {
                notes.push(format!("{s} min H-R {m:.2}/{t:.2}/{w:.2}"));
                if !(m > t && m > w) {
                    problems.push(format!("{s}: min H-R not highest"));
                }
            }
            _ => problems.push(format!("{s}: missing min H-R")),
        }
    }
    for s in ["reverse_direction", "multi_person", "turn_right"] {
        let t = |p| row(s, p).and_then(|r| r.total_time_s);
        match (t(PlannerKind::Mpteb), t(PlannerKind::Dwa)) {
            (Some(m), Some(w)) => {
                notes.push(format!("{s} time {m:.1}/{w:.1}"));
                if m.partial_cmp(&w) != Some(std::cmp::Ordering::Less) {
                    problems.push(format!("{s}: time not below DWA"));
                }
            }
            _ => problems.push(format!("{s}: missing time")),
        }
    }
    let mut worst: f64 = 0.0;
    for (s, refs) in REFERENCE_PATH_LENGTH {
        for (p, reference) in [PlannerKind::Dwa, PlannerKind::Teb, PlannerKind::Mpteb]
            .into_iter()
            .zip(refs)
        {
            match row(s, p).and_then(|r| r.path_length_m) {
                Some(len) => {
                    let dev = (len - reference).abs() / reference;
                    worst = worst.max(dev);
                    if dev > 0.25 {
                        problems.push(format!("{s} {p}: path {len:.2} vs {reference:.2}"));
                    }
                }
                None => problems.push(format!("{s} {p}: missing path length")),
            }
        }
    }
    notes.push(format!("worst path deviation {:.0}%", worst * 100.0));
    let mut detail = notes.join(", ");
    for p in &problems {
        detail.push_str(&format!("; {p}"));
    }
    Verdict::new(problems.is_empty(), detail)
}

// ---------------------------------------------------------------------------
// 9. determinism

fn csv_bytes(records: &[RunRecord]) -> Vec<u8> {
    let rows: Vec<_> = aggregate(records).into_iter().map(|s| s.row).collect();
    let mut out = Vec::new();
    write_csv(&rows, &mut out).expect("in-memory csv");
    out
}

fn criterion_determinism(scenarios: &[Scenario], first: &[RunRecord]) -> Verdict {
    match run_suite(scenarios, &PlannerKind::ALL, Some(10)) {
        Ok(second) => {
            let (a, b) = (csv_bytes(first), csv_bytes(&second));
            Verdict::new(
                a == b && !a.is_empty(),
                format!("{} csv bytes, identical: {}", a.len(), a == b),
            )
        }
        Err(e) => Verdict::new(false, format!("second batch failed: {e}")),
    }
}

// ---------------------------------------------------------------------------
// 10. side indicator

fn criterion_side_indicator() -> Verdict {
    let left = side_indicator(&Pose2::new(0.0, 0.0, 0.0), Point2::new(1.0, 0.5));
    let right = side_indicator(&Pose2::new(0.0, 0.0, PI / 2.0), Point2::new(1.0, 0.0));
    let ahead = side_indicator(
        &Pose2::new(1.0, 2.0, 0.7),
        Point2::new(1.0 + 3.0 * 0.7f64.cos(), 2.0 + 3.0 * 0.7f64.sin()),
    );
    let cases_ok = (left - 0.5).abs() < 1e-12 && (right + 1.0).abs() < 1e-12 && ahead.abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let robot = Pose2::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-PI..PI),
        );
        let obstacle = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let base = side_indicator(&robot, obstacle);
        let shift = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let phi = rng.gen_range(-PI..PI);
        let moved = Pose2::new(robot.x + shift.x, robot.y + shift.y, robot.theta);
        worst = worst.max((side_indicator(&moved, obstacle + shift) - base).abs());
        let rp = robot.position().rotated(phi);
        let turned = Pose2::new(rp.x, rp.y, robot.theta + phi);
        worst = worst.max((side_indicator(&turned, obstacle.rotated(phi)) - base).abs());
    }
    Verdict::new(
        cases_ok && worst < 1e-12,
        format!("examples {left:.3}/{right:.3}/{ahead:.1e}, worst invariance error {worst:.2e}"),
    )
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Verdict)> = vec![
        (1, "gradient checks", criterion_gradients()),
        (2, "robot kinematics", criterion_kinematics()),
        (3, "camera round trip", criterion_round_trip()),
        (4, "window planner brute force", criterion_dwa_oracle()),
        (5, "reduction identities", criterion_reductions()),
        (6, "empty world band", criterion_empty_world()),
    ];

    let scenarios = load_scenario_dir(scenarios_dir()).unwrap_or_default();
    let start = Instant::now();
    let suite = run_suite(&scenarios, &PlannerKind::ALL, Some(10));
    let elapsed = start.elapsed();
    match &suite {
        Ok(records) => {
            results.push((7, "scenario suite", criterion_suite(records, elapsed)));
            results.push((8, "planner ordering", criterion_ordering(records)));
            results.push((9, "determinism", criterion_determinism(&scenarios, records)));
        }
        Err(e) => {
            for (k, name) in [(7, "scenario suite"), (8, "planner ordering"), (9, "determinism")] {
                results.push((k, name, Verdict::new(false, format!("batch failed: {e}"))));
            }
        }
    }
    results.push((10, "side indicator", criterion_side_indicator()));

    let mut failed = 0;
    for (k, name, v) in &results {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} {k:>2} {name}: {}", v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
