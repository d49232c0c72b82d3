//! Fitting model constants to recorded traces.
//!
//! The objective replays every trace from start instants spaced `stride`
//! apart, predicts `horizon` seconds ahead with the recorded sticks and
//! averages the position error over all predicted steps. Rotation speed does
//! not feed back into position, so the spin factors are only visible to the
//! objective through `omega_weight`, which adds the mean rotation-speed
//! error (rad/s) of traces that record it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{error_sums, Accumulator, Trace, DEFAULT_HORIZON, DEFAULT_STRIDE};
use crate::error::{Error, Result};
use crate::params::{ModelParams, Param};
use crate::player::OptimizerConfig;

/// Search interval of one free parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBound {
    pub param: Param,
    pub lo: f64,
    pub hi: f64,
}

impl ParamBound {
    pub fn new(param: Param, lo: f64, hi: f64) -> Self {
        Self { param, lo, hi }
    }

    /// A generous range for each fittable constant.
    pub fn default_for(param: Param) -> Self {
        let (lo, hi) = match param {
            Param::MuAcc => (0.0, 1000.0),
            Param::MuDec => (0.0, 500.0),
            Param::DampPullPre | Param::DampPullPost => (0.05, 1.0),
            Param::DampOnString => (0.99, 1.0),
            Param::CL => (0.0, 0.05),
            Param::CF => (0.01, 0.2),
            Param::ThrowGap => (0.0, 0.2),
            Param::LString => (0.5, 2.5),
            Param::Gravity => (9.0, 10.5),
            Param::Dt => (1e-4, 1e-2),
        };
        Self { param, lo, hi }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationProblem {
    pub traces: Vec<Trace>,
    /// Values of every parameter that is not free.
    pub base: ModelParams,
    pub free: Vec<ParamBound>,
    pub horizon: f64,
    pub stride: f64,
    pub omega_weight: f64,
}

impl CalibrationProblem {
    pub fn new(traces: Vec<Trace>, base: ModelParams, free: Vec<ParamBound>) -> Self {
        Self {
            traces,
            base,
            free,
            horizon: DEFAULT_HORIZON,
            stride: DEFAULT_STRIDE,
            omega_weight: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.traces.is_empty() {
            return Err(Error::Data("calibration needs at least one trace".into()));
        }
        for (i, b) in self.free.iter().enumerate() {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo < b.hi) {
                return Err(Error::Config(format!("bounds of {} must be finite with lo < hi", b.param)));
            }
            if self.free[..i].iter().any(|o| o.param == b.param) {
                return Err(Error::Config(format!("{} is listed twice", b.param)));
            }
            if b.param == Param::Dt {
                return Err(Error::Config("dt is fixed by the traces and cannot be fitted".into()));
            }
        }
        if !(self.horizon.is_finite() && self.horizon >= self.base.dt) {
            return Err(Error::Config(format!("horizon must be at least dt, got {}", self.horizon)));
        }
        if !(self.stride.is_finite() && self.stride > 0.0) {
            return Err(Error::Config(format!("stride must be positive, got {}", self.stride)));
        }
        if !(self.omega_weight.is_finite() && self.omega_weight >= 0.0) {
            return Err(Error::Config(format!("omega_weight must be non-negative, got {}", self.omega_weight)));
        }
        Ok(())
    }

    fn with_values(&self, values: &[f64]) -> ModelParams {
        self.free
            .iter()
            .zip(values)
            .fold(self.base, |p, (b, &v)| p.with(b.param, v))
    }
}

/// Mean position error (m) over all start instants and predicted steps of
/// every trace, plus `omega_weight` times the mean rotation-speed error.
pub fn objective(params: &ModelParams, problem: &CalibrationProblem) -> Result<f64> {
    let mut pos = Accumulator::default();
    let mut omega = Accumulator::default();
    let (mut pos_count, mut omega_count) = (0usize, 0usize);
    for trace in &problem.traces {
        let sums = error_sums(trace, params, problem.horizon, problem.stride)?;
        let steps = sums.position.len() - 1;
        sums.position[1..].iter().for_each(|a| pos.add(a.total()));
        pos_count += sums.starts * steps;
        if let Some(w) = &sums.omega {
            w[1..].iter().for_each(|a| omega.add(a.total()));
            omega_count += sums.starts * steps;
        }
    }
    if pos_count == 0 {
        return Err(Error::Data("traces are too short for the horizon".into()));
    }
    let mut value = pos.total() / pos_count as f64;
    if problem.omega_weight > 0.0 && omega_count > 0 {
        value += problem.omega_weight * omega.total() / omega_count as f64;
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub params: ModelParams,
    pub objective: f64,
    /// Best objective after the midpoint evaluation and after each iteration.
    pub history: Vec<f64>,
    pub accepted: usize,
}

/// Chance of a proposal drawn uniformly from the whole interval instead of
/// near the current value.
const GLOBAL_PROPOSAL: f64 = 0.2;

/// Seeded coordinate random search starting at the bounds' midpoint.
///
/// Iteration `i` perturbs free parameter `i mod n`: with probability 0.2 by
/// a uniform draw over its interval, otherwise by a normal step of
/// `step_scale_pos` times the interval width, clipped to the bounds. Strict
/// improvements are kept. With no free parameters the base parameters and
/// their objective are returned unchanged.
pub fn fit(problem: &CalibrationProblem, cfg: &OptimizerConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    problem.validate()?;
    if problem.free.is_empty() {
        let value = objective(&problem.base, problem)?;
        return Ok(FitOutcome {
            params: problem.base,
            objective: value,
            history: vec![value],
            accepted: 0,
        });
    }
    let evaluate = |values: &[f64]| -> Result<f64> {
        let p = problem.with_values(values);
        if p.validate().is_err() {
            return Ok(f64::INFINITY);
        }
        match objective(&p, problem) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) | Err(Error::DegenerateGeometry(_)) | Err(Error::Input(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut best: Vec<f64> = problem.free.iter().map(ParamBound::midpoint).collect();
    let mut best_value = evaluate(&best)?;
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    history.push(best_value);
    let mut accepted = 0;
    for i in 0..cfg.iterations {
        let k = i % problem.free.len();
        let b = &problem.free[k];
        let mut candidate = best.clone();
        candidate[k] = if rng.random::<f64>() < GLOBAL_PROPOSAL {
            rng.random_range(b.lo..=b.hi)
        } else {
            (best[k] + unit.sample(&mut rng) * cfg.step_scale_pos * (b.hi - b.lo)).clamp(b.lo, b.hi)
        };
        let value = evaluate(&candidate)?;
        if value < best_value {
            best = candidate;
            best_value = value;
            accepted += 1;
        }
        history.push(best_value);
    }
    Ok(FitOutcome {
        params: problem.with_values(&best),
        objective: best_value,
        history,
        accepted,
    })
}
