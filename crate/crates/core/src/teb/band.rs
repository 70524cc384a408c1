//! Band construction, resizing and command extraction.

use crate::geometry::{pose_distance, wrap_angle, Point2, Pose2, TimedBand, Twist};

use super::TebParams;

/// Straight band from `start` to `goal` with poses spaced about
/// `v_max · dt_ref` apart. Interior poses face the goal.
pub fn init_band(start: &Pose2, goal: &Pose2, params: &TebParams) -> TimedBand {
    seed_band(start, &[], goal, params)
}

/// Number of segments needed to cover `length` at the reference spacing.
fn segment_count(length: f64, spacing: f64) -> usize {
    ((length / spacing) - 1e-9).ceil().max(1.0) as usize
}

/// Band through a polyline `start → via… → goal`, resampled uniformly by arc
/// length. Interior headings follow the polyline direction.
pub fn seed_band(start: &Pose2, via: &[Point2], goal: &Pose2, params: &TebParams) -> TimedBand {
    let mut vertices = Vec::with_capacity(via.len() + 2);
    vertices.push(start.position());
    for &v in via {
        if vertices.last().is_none_or(|&l: &Point2| l.distance(v) > 1e-9) {
            vertices.push(v);
        }
    }
    if vertices.last().is_none_or(|&l| l.distance(goal.position()) > 1e-9) {
        vertices.push(goal.position());
    }
    if vertices.len() < 2 {
        return TimedBand {
            poses: vec![*start, *goal],
            dts: vec![params.dt_ref],
        };
    }

    let seg_len: Vec<f64> = vertices.windows(2).map(|w| w[0].distance(w[1])).collect();
    let total: f64 = seg_len.iter().sum();
    let spacing = params.v_max * params.dt_ref;
    let n_seg = segment_count(total, spacing).min(params.max_poses.max(2) - 1);

    let mut poses = Vec::with_capacity(n_seg + 1);
    poses.push(*start);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 1..n_seg {
        let s = total * k as f64 / n_seg as f64;
        while seg + 1 < seg_len.len() && s > seg_start + seg_len[seg] {
            seg_start += seg_len[seg];
            seg += 1;
        }
        let (a, b) = (vertices[seg], vertices[seg + 1]);
        let frac = if seg_len[seg] > 0.0 {
            (s - seg_start) / seg_len[seg]
        } else {
            0.0
        };
        let q = a.lerp(b, frac);
        let dir = b - a;
        poses.push(Pose2::new(q.x, q.y, dir.y.atan2(dir.x)));
    }
    poses.push(*goal);
    let dts = vec![params.dt_ref; poses.len() - 1];
    TimedBand { poses, dts }
}

/// Inserts a midpoint where an interval is too long and removes a pose where
/// one is too short, keeping the band within `max_poses`.
pub fn resize_band(band: &TimedBand, params: &TebParams) -> TimedBand {
    let upper = params.dt_ref + params.dt_hysteresis;
    let lower = params.dt_ref - params.dt_hysteresis;
    let mut poses = band.poses.clone();
    let mut dts = band.dts.clone();
    let mut i = 0;
    while i < dts.len() {
        let dt = dts[i];
        if dt > upper && poses.len() < params.max_poses {
            let (a, b) = (poses[i], poses[i + 1]);
            let mid = Pose2::new(
                0.5 * (a.x + b.x),
                0.5 * (a.y + b.y),
                a.theta + 0.5 * wrap_angle(b.theta - a.theta),
            );
            poses.insert(i + 1, mid);
            dts[i] = 0.5 * dt;
            dts.insert(i + 1, 0.5 * dt);
            i += 2;
        } else if dt < lower && poses.len() > 2 {
            if i + 2 < poses.len() {
                // drop the pose ending this interval and merge with the next
                poses.remove(i + 1);
                let merged = dts[i] + dts[i + 1];
                dts[i] = merged;
                dts.remove(i + 1);
            } else if i > 0 {
                // last interval: drop its first pose instead of the goal
                poses.remove(i);
                let merged = dts[i - 1] + dts[i];
                dts[i - 1] = merged;
                dts.remove(i);
            }
            i += 1;
        } else {
            i += 1;
        }
    }
    TimedBand { poses, dts }
}

/// Velocity command that realizes the first band segment, clamped to limits.
pub fn extract_control(band: &TimedBand, params: &TebParams) -> Twist {
    let (a, b) = (&band.poses[0], &band.poses[1]);
    let dt = band.dts[0];
    let dist = pose_distance(a, b);
    let sign = if a.heading().dot(b.position() - a.position()) < 0.0 {
        -1.0
    } else {
        1.0
    };
    let v = sign * dist / dt;
    let omega = wrap_angle(b.theta - a.theta) / dt;
    Twist::new(v, omega).clamped(params.v_max, params.omega_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn init_band_spacing() {
        let prm = TebParams::default();
        let band = init_band(&Pose2::new(0.0, 0.0, 0.0), &Pose2::new(3.0, 0.0, 0.0), &prm);
        assert_eq!(band.len(), 11);
        for (k, p) in band.poses.iter().enumerate() {
            assert_abs_diff_eq!(p.x, 0.3 * k as f64, epsilon = 1e-12);
        }
        assert!(band.dts.iter().all(|&dt| dt == 0.3));
    }

    #[test]
    fn init_band_degenerate_and_reversed() {
        let prm = TebParams::default();
        let band = init_band(&Pose2::new(1.0, 1.0, 0.0), &Pose2::new(1.0, 1.0, 2.0), &prm);
        assert_eq!(band.len(), 2);
        let band = init_band(&Pose2::new(0.0, 0.0, 0.0), &Pose2::new(-2.0, 0.0, 0.0), &prm);
        assert!(band.poses[1..band.len() - 1]
            .iter()
            .all(|p| (p.theta - PI).abs() < 1e-12));
        assert_eq!(band.poses[0], Pose2::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn seed_band_follows_polyline() {
        let prm = TebParams::default();
        let band = seed_band(
            &Pose2::new(0.0, 0.0, 0.0),
            &[Point2::new(3.0, 0.0)],
            &Pose2::new(3.0, 3.0, PI / 2.0),
            &prm,
        );
        assert_abs_diff_eq!(band.path_length(), 6.0, epsilon = 1e-9);
        assert!(band
            .poses
            .iter()
            .any(|p| p.position().distance(Point2::new(3.0, 0.0)) < 1e-9));
    }

    #[test]
    fn resize_rules() {
        let prm = TebParams::default();
        let band = init_band(&Pose2::new(0.0, 0.0, 0.0), &Pose2::new(3.0, 0.0, 0.0), &prm);
        assert_eq!(resize_band(&band, &prm), band);

        let mut long = band.clone();
        long.dts[3] = 1.0;
        let r = resize_band(&long, &prm);
        assert_eq!(r.len(), band.len() + 1);
        assert_eq!((r.dts[3], r.dts[4]), (0.5, 0.5));
        assert_abs_diff_eq!(r.poses[4].x, 1.05, epsilon = 1e-12);

        let mut short = band.clone();
        short.dts[3] = 0.1;
        let r = resize_band(&short, &prm);
        assert_eq!(r.len(), band.len() - 1);
        assert_abs_diff_eq!(r.total_time(), short.total_time(), epsilon = 1e-12);
        assert_eq!(r.poses[0], band.poses[0]);
        assert_eq!(r.goal(), band.goal());
    }

    #[test]
    fn resize_respects_max_poses() {
        let prm = TebParams {
            max_poses: 5,
            ..TebParams::default()
        };
        let band = TimedBand {
            poses: (0..5).map(|k| Pose2::new(k as f64, 0.0, 0.0)).collect(),
            dts: vec![2.0; 4],
        };
        assert_eq!(resize_band(&band, &prm).len(), 5);
    }

    #[test]
    fn control_examples() {
        let prm = TebParams::default();
        let band = TimedBand {
            poses: vec![Pose2::new(0.0, 0.0, 0.0), Pose2::new(0.3, 0.0, 0.0)],
            dts: vec![0.3],
        };
        let u = extract_control(&band, &prm);
        assert_abs_diff_eq!(u.v, 1.0, epsilon = 1e-12);
        assert!(u.v <= prm.v_max);
        assert_eq!(u.omega, 0.0);

        let still = TimedBand {
            poses: vec![Pose2::new(1.0, 1.0, 0.2); 2],
            dts: vec![0.3],
        };
        assert_eq!(extract_control(&still, &prm), Twist::ZERO);

        let turn = TimedBand {
            poses: vec![Pose2::new(0.0, 0.0, 0.0), Pose2::new(0.0, 0.0, 0.2)],
            dts: vec![0.5],
        };
        assert_abs_diff_eq!(extract_control(&turn, &prm).omega, 0.4, epsilon = 1e-12);

        let back = TimedBand {
            poses: vec![Pose2::new(0.0, 0.0, 0.0), Pose2::new(-0.1, 0.0, 0.0)],
            dts: vec![0.5],
        };
        assert_abs_diff_eq!(extract_control(&back, &prm).v, -0.2, epsilon = 1e-12);
    }
}
