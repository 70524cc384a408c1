//! Shared fixtures for the planner benchmarks.

use socnav::geometry::{ObstacleShape, Point2, Pose2, Twist};
use socnav::perception::{AgentId, AgentTrack, TrackSet};
use socnav::planning::{PersonObservation, PlanRequest};

/// Corridor walls 3 m apart along the x axis.
pub fn corridor() -> Vec<ObstacleShape> {
    vec![
        ObstacleShape::segment(Point2::new(-1.0, 1.5), Point2::new(9.0, 1.5)),
        ObstacleShape::segment(Point2::new(-1.0, -1.5), Point2::new(9.0, -1.5)),
    ]
}

/// One person walking toward the robot, observed for four seconds.
pub fn oncoming() -> (Vec<PersonObservation>, TrackSet) {
    let id = AgentId(1);
    let track = AgentTrack::from_samples(
        id,
        (0..8).map(|k| (k as f64 * 0.5, Point2::new(7.5 - 0.4 * k as f64, 0.1))),
    );
    let position = track.last_position().unwrap_or(Point2::ZERO);
    let people = vec![PersonObservation {
        id,
        position,
        velocity: Point2::new(-0.8, 0.0),
    }];
    let mut tracks = TrackSet::new();
    tracks.insert(id, track);
    (people, tracks)
}

pub fn robot_track() -> AgentTrack {
    AgentTrack::from_samples(
        AgentId::ROBOT,
        (0..8).map(|k| (k as f64 * 0.5, Point2::new(0.05 * k as f64, 0.0))),
    )
}

pub fn request<'a>(statics: &'a [ObstacleShape], people: &'a [PersonObservation]) -> PlanRequest<'a> {
    PlanRequest {
        now: 3.5,
        robot: Pose2::new(0.4, 0.0, 0.0),
        velocity: Twist::new(0.5, 0.0),
        goal: Pose2::new(7.0, 0.0, 0.0),
        via: &[],
        statics,
        people,
        person_radius: 0.3,
        warm_start: None,
    }
}
