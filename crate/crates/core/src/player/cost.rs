use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::predictor::DiaboloState;

/// Speeds below this leave the velocity direction undefined.
pub const MIN_DIRECTION_SPEED: f64 = 1e-9;

/// Target diabolo state with one weight per cost term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalWaypoint {
    #[serde(default)]
    pub position: Option<Vec3>,
    #[serde(default)]
    pub speed: Option<f64>,
    #[serde(default)]
    pub direction: Option<Vec3>,
    #[serde(default)]
    pub w_pos: f64,
    #[serde(default)]
    pub w_vel: f64,
    #[serde(default)]
    pub w_dir: f64,
}

impl GoalWaypoint {
    pub fn at(position: Vec3) -> Self {
        Self {
            position: Some(position),
            speed: None,
            direction: None,
            w_pos: 1.0,
            w_vel: 0.0,
            w_dir: 0.0,
        }
    }

    pub fn with_speed(mut self, speed: f64, weight: f64) -> Self {
        self.speed = Some(speed);
        self.w_vel = weight;
        self
    }

    pub fn with_direction(mut self, direction: Vec3, weight: f64) -> Self {
        self.direction = Some(direction);
        self.w_dir = weight;
        self
    }

    /// Checks the goal terms and returns a copy with a unit direction and
    /// zero weights for absent terms.
    pub fn validated(&self) -> Result<Self> {
        if self.position.is_none() && self.speed.is_none() && self.direction.is_none() {
            return Err(Error::Config("waypoint needs a position, speed or direction goal".into()));
        }
        for w in [self.w_pos, self.w_vel, self.w_dir] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config(format!("waypoint weights must be non-negative, got {w}")));
            }
        }
        let mut out = *self;
        if let Some(p) = self.position {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::Config("waypoint position must be finite".into()));
            }
        } else {
            out.w_pos = 0.0;
        }
        match self.speed {
            Some(s) if !(s.is_finite() && s >= 0.0) => {
                return Err(Error::Config(format!("waypoint speed must be non-negative, got {s}")))
            }
            None => out.w_vel = 0.0,
            _ => {}
        }
        match self.direction {
            Some(d) => {
                let n = d.norm();
                if !(n.is_finite() && n > 0.0) {
                    return Err(Error::Config("waypoint direction must be a non-zero vector".into()));
                }
                out.direction = Some(d / n);
            }
            None => out.w_dir = 0.0,
        }
        Ok(out)
    }
}

/// Angle in `[0, π]` between the velocity and `direction`; `π` when the
/// velocity is too small to have a direction.
fn direction_error(velocity: &Vec3, direction: &Vec3) -> f64 {
    let speed = velocity.norm();
    let dn = direction.norm();
    if speed < MIN_DIRECTION_SPEED || dn == 0.0 {
        return PI;
    }
    (velocity.dot(direction) / (speed * dn)).clamp(-1.0, 1.0).acos()
}

/// Weighted sum of the position, speed and direction residuals.
pub fn waypoint_cost(state: &DiaboloState, wp: &GoalWaypoint) -> f64 {
    let mut cost = 0.0;
    if let Some(p) = wp.position {
        cost += wp.w_pos * (state.position - p).norm();
    }
    if let Some(s) = wp.speed {
        cost += wp.w_vel * (state.velocity.norm() - s).abs();
    }
    if let Some(d) = wp.direction {
        cost += wp.w_dir * direction_error(&state.velocity, &d);
    }
    cost
}

/// How close a state is to a waypoint for matching purposes: Euclidean
/// distance when the waypoint has a position, its cost otherwise.
fn match_distance(state: &DiaboloState, wp: &GoalWaypoint) -> f64 {
    match wp.position {
        Some(p) => (state.position - p).norm(),
        None => waypoint_cost(state, wp),
    }
}

/// Indices of the rollout states matched to each waypoint.
///
/// The first waypoint is matched over the whole rollout, every later one
/// only after the previous match. Ties go to the earliest state.
pub fn match_waypoint_indices(rollout: &[DiaboloState], waypoints: &[GoalWaypoint]) -> Result<Vec<usize>> {
    if rollout.is_empty() {
        return Err(Error::Empty("rollout has no states".into()));
    }
    let mut out = Vec::with_capacity(waypoints.len());
    let mut from = 0;
    for (index, wp) in waypoints.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (i, state) in rollout.iter().enumerate().skip(from) {
            let d = match_distance(state, wp);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.ok_or(Error::Match { index })?;
        out.push(i);
        from = i + 1;
    }
    Ok(out)
}

/// Times of the rollout states matched to each waypoint.
pub fn match_waypoints(rollout: &[DiaboloState], waypoints: &[GoalWaypoint]) -> Result<Vec<f64>> {
    Ok(match_waypoint_indices(rollout, waypoints)?
        .into_iter()
        .map(|i| rollout[i].time)
        .collect())
}

/// Sum of matched waypoint costs over a rollout.
pub fn rollout_residual(rollout: &[DiaboloState], waypoints: &[GoalWaypoint]) -> Result<f64> {
    let idx = match_waypoint_indices(rollout, waypoints)?;
    Ok(idx
        .iter()
        .zip(waypoints)
        .map(|(&i, wp)| waypoint_cost(&rollout[i], wp))
        .sum())
}
