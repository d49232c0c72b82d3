use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::player::GoalWaypoint;

pub const PATTERN_NAMES: [&str; 5] = ["circular_acceleration", "linear_acceleration", "hop", "throw_up", "swing"];

const DIRECTION_WEIGHT: f64 = 0.1;

/// Goal waypoints for a named high-level motion.
///
/// - `circular_acceleration`: four points at 0°, 90°, 180° and 270° on a
///   vertical circle of radius `scale` in the `y`-`z` plane, each with the
///   counter-clockwise tangent as direction goal.
/// - `linear_acceleration`: `center - scale·y` moving `+y`, then
///   `center + scale·y` moving `-y`.
/// - `hop`: `center + scale·z`.
/// - `throw_up`: upward direction with the launch speed that reaches a
///   height of `scale` (no position goal).
/// - `swing`: `center + scale·x`, then `center - scale·x`.
pub fn goal_pattern(name: &str, center: &Vec3, scale: f64) -> Result<Vec<GoalWaypoint>> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Config(format!("pattern scale must be positive, got {scale}")));
    }
    let wp = |offset: Vec3| GoalWaypoint::at(center + offset);
    Ok(match name {
        "circular_acceleration" => (0..4)
            .map(|k| {
                let angle = k as f64 * FRAC_PI_2;
                let (s, c) = angle.sin_cos();
                wp(Vec3::new(0.0, scale * c, scale * s)).with_direction(Vec3::new(0.0, -s, c), DIRECTION_WEIGHT)
            })
            .collect(),
        "linear_acceleration" => vec![
            wp(Vec3::new(0.0, -scale, 0.0)).with_direction(Vec3::y(), DIRECTION_WEIGHT),
            wp(Vec3::new(0.0, scale, 0.0)).with_direction(-Vec3::y(), DIRECTION_WEIGHT),
        ],
        "hop" => vec![wp(Vec3::new(0.0, 0.0, scale))],
        "throw_up" => vec![GoalWaypoint {
            position: None,
            speed: Some((2.0 * 9.81 * scale).sqrt()),
            direction: Some(Vec3::z()),
            w_pos: 0.0,
            w_vel: 0.1,
            w_dir: 1.0,
        }],
        "swing" => vec![wp(Vec3::new(scale, 0.0, 0.0)), wp(Vec3::new(-scale, 0.0, 0.0))],
        other => return Err(Error::UnknownPattern(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_geometry() {
        let c = Vec3::new(0.1, 0.0, 0.7);
        let wps = goal_pattern("circular_acceleration", &c, 0.3).unwrap();
        assert_eq!(wps.len(), 4);
        let pos: Vec<Vec3> = wps.iter().map(|w| w.position.unwrap()).collect();
        for (k, p) in pos.iter().enumerate() {
            assert!(((p - c).norm() - 0.3).abs() < 1e-12);
            let next = &pos[(k + 1) % 4];
            assert!(((next - p).norm() - 2f64.sqrt() * 0.3).abs() < 1e-12);
            // Tangential direction.
            assert!(wps[k].direction.unwrap().dot(&(p - c)).abs() < 1e-12);
        }
        assert!((pos[0] - (c + Vec3::new(0.0, 0.3, 0.0))).norm() < 1e-12);
        assert!((pos[1] - (c + Vec3::new(0.0, 0.0, 0.3))).norm() < 1e-12);
    }

    #[test]
    fn throw_up_points_up() {
        let wps = goal_pattern("throw_up", &Vec3::zeros(), 1.0).unwrap();
        assert_eq!(wps.len(), 1);
        assert_eq!(wps[0].direction, Some(Vec3::new(0.0, 0.0, 1.0)));
        assert!(wps[0].position.is_none());
    }

    #[test]
    fn every_pattern_validates() {
        for name in PATTERN_NAMES {
            for wp in goal_pattern(name, &Vec3::zeros(), 0.2).unwrap() {
                wp.validated().unwrap();
            }
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            goal_pattern("figure_eight", &Vec3::zeros(), 0.2),
            Err(Error::UnknownPattern(_))
        ));
    }
}
