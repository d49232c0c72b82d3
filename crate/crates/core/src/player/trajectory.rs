use serde::{Deserialize, Serialize};

use super::spline::CubicSpline;
use crate::error::{Error, Result};
use crate::geometry::{StickPair, Vec3};
use crate::params::ModelParams;
use crate::predictor::{self, DiaboloState};

/// Stick separations above the string length are pulled back to this much below it.
pub const REPAIR_MARGIN: f64 = 1e-3;

/// Timed stick-tip positions the trajectory passes through.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub t: f64,
    pub left: Vec3,
    pub right: Vec3,
}

impl ControlPoint {
    pub fn new(t: f64, sticks: StickPair) -> Self {
        Self {
            t,
            left: sticks.left,
            right: sticks.right,
        }
    }

    pub fn sticks(&self) -> StickPair {
        StickPair::new(self.left, self.right)
    }
}

/// Piece-wise cubic stick trajectory, one clamped spline per tip coordinate.
///
/// The start slope is the current stick velocity, the end slope is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StickTrajectory {
    points: Vec<ControlPoint>,
    start_velocity: StickPair,
    splines: Vec<CubicSpline>,
}

impl StickTrajectory {
    pub fn new(points: Vec<ControlPoint>, start_velocity: StickPair) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Input("trajectory needs at least one control point".into()));
        }
        if points.iter().any(|p| !p.t.is_finite() || !p.sticks().is_finite()) {
            return Err(Error::Input("control points must be finite".into()));
        }
        if !start_velocity.is_finite() {
            return Err(Error::Input("start velocity must be finite".into()));
        }
        let knots: Vec<f64> = points.iter().map(|p| p.t).collect();
        let splines = (0..6)
            .map(|axis| {
                let coord = |s: &StickPair| if axis < 3 { s.left[axis] } else { s.right[axis - 3] };
                let values: Vec<f64> = points.iter().map(|p| coord(&p.sticks())).collect();
                CubicSpline::clamped(&knots, &values, coord(&start_velocity), 0.0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            points,
            start_velocity,
            splines,
        })
    }

    /// Trajectory starting from rest.
    pub fn from_rest(points: Vec<ControlPoint>) -> Result<Self> {
        Self::new(points, StickPair::new(Vec3::zeros(), Vec3::zeros()))
    }

    pub fn points(&self) -> &[ControlPoint] {
        &self.points
    }

    pub fn start_velocity(&self) -> &StickPair {
        &self.start_velocity
    }

    pub fn t_start(&self) -> f64 {
        self.points[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.points[self.points.len() - 1].t
    }

    /// Stick positions at time `t`.
    pub fn sample(&self, t: f64) -> Result<StickPair> {
        let (start, end) = (self.t_start(), self.t_end());
        if !(t >= start && t <= end) {
            return Err(Error::Range { t, start, end });
        }
        let v: Vec<f64> = self.splines.iter().map(|s| s.eval(t)).collect();
        Ok(StickPair::new(
            Vec3::new(v[0], v[1], v[2]),
            Vec3::new(v[3], v[4], v[5]),
        ))
    }

    /// Stick tip velocities at time `t`.
    pub fn velocity(&self, t: f64) -> Result<StickPair> {
        let (start, end) = (self.t_start(), self.t_end());
        if !(t >= start && t <= end) {
            return Err(Error::Range { t, start, end });
        }
        let v: Vec<f64> = self.splines.iter().map(|s| s.derivative(t)).collect();
        Ok(StickPair::new(
            Vec3::new(v[0], v[1], v[2]),
            Vec3::new(v[3], v[4], v[5]),
        ))
    }

    /// Number of predictor steps covering the span at step `dt`.
    pub fn step_count(&self, dt: f64) -> usize {
        ((self.t_end() - self.t_start()) / dt + 1e-9).floor() as usize
    }

    /// Stick pairs at every `dt` from the first control point, with string-length
    /// violations repaired.
    pub fn discretize(&self, params: &ModelParams) -> Result<Vec<StickPair>> {
        let t0 = self.t_start();
        (0..=self.step_count(params.dt))
            .map(|k| {
                let t = (t0 + k as f64 * params.dt).min(self.t_end());
                let sticks = self.sample(t)?;
                if sticks.distance() > params.l_string {
                    Ok(sticks.shrunk_to(params.l_string - REPAIR_MARGIN).unwrap_or(sticks))
                } else {
                    Ok(sticks)
                }
            })
            .collect()
    }
}

/// Free-function form of [`StickTrajectory::sample`].
pub fn sample_trajectory(traj: &StickTrajectory, t: f64) -> Result<StickPair> {
    traj.sample(t)
}

/// Steps the predictor along a stick sequence; returns `sticks.len()` states.
pub fn rollout_sticks(
    initial: &DiaboloState,
    sticks: &[StickPair],
    params: &ModelParams,
) -> Result<Vec<DiaboloState>> {
    let mut states = Vec::with_capacity(sticks.len().max(1));
    states.push(*initial);
    let mut state = *initial;
    for pair in sticks.windows(2) {
        state = predictor::step(&state, &pair[0], &pair[1], params)?.0;
        states.push(state);
    }
    Ok(states)
}

/// Predicted diabolo states at every `dt` over the trajectory's span.
pub fn rollout(
    initial: &DiaboloState,
    traj: &StickTrajectory,
    params: &ModelParams,
) -> Result<Vec<DiaboloState>> {
    rollout_sticks(initial, &traj.discretize(params)?, params)
}
