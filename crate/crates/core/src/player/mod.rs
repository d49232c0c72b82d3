//! Stick-trajectory search.
//!
//! Trajectories are clamped cubic splines through timed control points. A
//! candidate is scored by rolling the predictor out along it, matching each
//! goal waypoint to a rollout state in order, and summing the weighted
//! position / speed / direction residuals.

mod cost;
mod optimize;
pub mod spline;
mod trajectory;

pub use cost::{
    match_waypoint_indices, match_waypoints, rollout_residual, waypoint_cost, GoalWaypoint,
    MIN_DIRECTION_SPEED,
};
pub use optimize::{optimize, trajectory_residual, OptimizeOutcome, OptimizerConfig};
pub use trajectory::{
    rollout, rollout_sticks, sample_trajectory, ControlPoint, StickTrajectory, REPAIR_MARGIN,
};
