use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::cost::{rollout_residual, GoalWaypoint};
use super::trajectory::{rollout, ControlPoint, StickTrajectory};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::params::ModelParams;
use crate::predictor::DiaboloState;

/// Attempts at drawing an order-preserving time perturbation before the
/// control point keeps its time.
const TIME_RESAMPLE_ATTEMPTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub iterations: usize,
    /// Standard deviation of control-point position perturbations (m).
    pub step_scale_pos: f64,
    /// Standard deviation of control-point time perturbations (s).
    pub step_scale_time: f64,
    pub seed: u64,
    /// Rollout states considered when matching waypoints; 0 uses every step.
    pub samples_per_rollout: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            step_scale_pos: 0.02,
            step_scale_time: 0.02,
            seed: 0,
            samples_per_rollout: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("optimizer needs at least one iteration".into()));
        }
        if !(self.step_scale_pos.is_finite() && self.step_scale_pos > 0.0) {
            return Err(Error::Config("step_scale_pos must be positive".into()));
        }
        if !(self.step_scale_time.is_finite() && self.step_scale_time > 0.0) {
            return Err(Error::Config("step_scale_time must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub trajectory: StickTrajectory,
    pub residual: f64,
    /// Best residual before the first iteration and after each one.
    pub history: Vec<f64>,
    pub accepted: usize,
}

/// Evenly thins a rollout to about `samples` states, always keeping the last one.
fn thin(states: Vec<DiaboloState>, samples: usize) -> Vec<DiaboloState> {
    if samples == 0 || states.len() <= samples {
        return states;
    }
    let stride = states.len().div_ceil(samples);
    let last = states.len() - 1;
    let mut out: Vec<_> = states.iter().step_by(stride).copied().collect();
    if !last.is_multiple_of(stride) {
        out.push(states[last]);
    }
    out
}

/// Residual of a stick trajectory: sum of matched waypoint costs, or `+∞`
/// when the rollout fails or a waypoint cannot be matched.
pub fn trajectory_residual(
    initial: &DiaboloState,
    traj: &StickTrajectory,
    waypoints: &[GoalWaypoint],
    params: &ModelParams,
    samples_per_rollout: usize,
) -> f64 {
    rollout(initial, traj, params)
        .and_then(|states| rollout_residual(&thin(states, samples_per_rollout), waypoints))
        .unwrap_or(f64::INFINITY)
}

fn propose(
    traj: &StickTrajectory,
    rng: &mut ChaCha8Rng,
    pos_noise: &Normal<f64>,
    time_noise: &Normal<f64>,
) -> Result<StickTrajectory> {
    let mut points: Vec<ControlPoint> = traj.points().to_vec();
    let i = rng.random_range(1..points.len());
    let mut jitter = || Vec3::new(pos_noise.sample(rng), pos_noise.sample(rng), pos_noise.sample(rng));
    points[i].left += jitter();
    points[i].right += jitter();

    let lo = points[i - 1].t;
    let hi = points.get(i + 1).map_or(f64::INFINITY, |p| p.t);
    for _ in 0..TIME_RESAMPLE_ATTEMPTS {
        let t = points[i].t + time_noise.sample(rng);
        if t > lo && t < hi {
            points[i].t = t;
            break;
        }
    }
    StickTrajectory::new(points, *traj.start_velocity())
}

/// Random-walk search over control-point positions and times.
///
/// Each iteration perturbs one control point (never the first, which is the
/// current stick state) and keeps the candidate only if its residual is
/// strictly lower than the best so far.
pub fn optimize(
    initial: &DiaboloState,
    seed_traj: &StickTrajectory,
    waypoints: &[GoalWaypoint],
    params: &ModelParams,
    cfg: &OptimizerConfig,
) -> Result<OptimizeOutcome> {
    cfg.validate()?;
    params.validate()?;
    if waypoints.is_empty() {
        return Err(Error::Config("optimizer needs at least one waypoint".into()));
    }
    let waypoints = waypoints
        .iter()
        .map(GoalWaypoint::validated)
        .collect::<Result<Vec<_>>>()?;
    // Surface predictor input errors on the seed itself.
    rollout(initial, seed_traj, params)?;

    let residual_of =
        |traj: &StickTrajectory| trajectory_residual(initial, traj, &waypoints, params, cfg.samples_per_rollout);

    let mut best = seed_traj.clone();
    let mut best_residual = residual_of(&best);
    let mut history = vec![best_residual];
    let mut accepted = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pos_noise = Normal::new(0.0, cfg.step_scale_pos).expect("validated scale");
    let time_noise = Normal::new(0.0, cfg.step_scale_time).expect("validated scale");

    if best.points().len() > 1 {
        for _ in 0..cfg.iterations {
            if best_residual == 0.0 {
                break;
            }
            let candidate = propose(&best, &mut rng, &pos_noise, &time_noise)?;
            let r = residual_of(&candidate);
            if r < best_residual {
                best = candidate;
                best_residual = r;
                accepted += 1;
            }
            history.push(best_residual);
        }
    }

    Ok(OptimizeOutcome {
        trajectory: best,
        residual: best_residual,
        history,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_endpoints() {
        let states: Vec<_> = (0..10)
            .map(|i| DiaboloState {
                position: Vec3::zeros(),
                velocity: Vec3::zeros(),
                omega: 0.0,
                status: crate::predictor::ContactStatus::Flying,
                time: i as f64,
            })
            .collect();
        let t: Vec<f64> = thin(states.clone(), 3).iter().map(|s| s.time).collect();
        assert_eq!(t, vec![0.0, 4.0, 8.0, 9.0]);
        assert_eq!(thin(states.clone(), 0).len(), 10);
        assert_eq!(thin(states, 20).len(), 10);
    }

    #[test]
    fn zero_iterations_is_a_config_error() {
        let cfg = OptimizerConfig { iterations: 0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
