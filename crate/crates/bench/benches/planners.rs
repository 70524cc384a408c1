use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use socnav::dwa::{select_velocity, DwaObstacle, DwaParams, Scene};
use socnav::geometry::{Point2, Pose2, Twist};
use socnav::mpteb::{plan_mpteb, SocialParams};
use socnav::planning::plan_teb;
use socnav::prediction::{predict_all, PredictorKind};
use socnav::teb::{init_band, optimize_band, BandProblem, TebParams};
use socnav_bench::{corridor, oncoming, request, robot_track};

fn optimizer(c: &mut Criterion) {
    let params = TebParams::default();
    let statics = corridor();
    let band = init_band(&Pose2::new(0.0, 0.0, 0.0), &Pose2::new(7.0, 0.5, 0.0), &params);
    let problem = BandProblem::new(&params, &statics);
    c.bench_function("optimize_band/corridor", |b| {
        b.iter(|| optimize_band(black_box(&band), &problem))
    });
}

fn planners(c: &mut Criterion) {
    let params = TebParams::default();
    let social = SocialParams::default();
    let statics = corridor();
    let (people, tracks) = oncoming();
    let own = robot_track();
    let req = request(&statics, &people);
    c.bench_function("plan_teb/oncoming", |b| b.iter(|| plan_teb(black_box(&req), &params)));
    c.bench_function("plan_mpteb/oncoming", |b| {
        b.iter(|| {
            plan_mpteb(
                black_box(&req),
                &tracks,
                &own,
                &params,
                &social,
                &PredictorKind::default(),
            )
        })
    });
    let dwa = DwaParams::default();
    let movers: Vec<DwaObstacle> = people
        .iter()
        .map(|p| DwaObstacle {
            position: p.position,
            velocity: Point2::ZERO,
            radius: 0.3,
        })
        .collect();
    let scene = Scene {
        statics: &statics,
        movers: &movers,
    };
    c.bench_function("dwa/select_velocity", |b| {
        b.iter(|| {
            select_velocity(
                black_box(&req.robot),
                Twist::new(0.5, 0.0),
                Point2::new(7.0, 0.0),
                &scene,
                &dwa,
            )
        })
    });
}

fn prediction(c: &mut Criterion) {
    let (_, tracks) = oncoming();
    let own = robot_track();
    let statics = corridor();
    for (name, kind) in [
        ("predict_all/constant_velocity", PredictorKind::ConstantVelocity),
        ("predict_all/interaction", PredictorKind::default()),
    ] {
        c.bench_function(name, |b| {
            b.iter(|| predict_all(black_box(&tracks), &own, &kind, &statics))
        });
    }
}

criterion_group!(benches, optimizer, planners, prediction);
criterion_main!(benches);
