//! Prediction-error metrics against recorded traces.
//!
//! From every start instant (one per stride) the predictor is initialized
//! with the recorded diabolo state and driven by the recorded sticks; the
//! position error is averaged across start instants for each horizon offset.

use std::collections::BTreeMap;
use std::io::Write;

use crate::data::synthetic::trace_from_states;
use crate::data::trace::{resample, Trace};
use crate::error::{Error, Result};
use crate::geometry::{build_spheroid, StickPair, Vec3};
use crate::params::ModelParams;
use crate::player::{rollout_sticks, REPAIR_MARGIN};
use crate::predictor::{ContactStatus, DiaboloState};

/// Default prediction window per start instant (s).
pub const DEFAULT_HORIZON: f64 = 2.0;
/// Default spacing of start instants (s).
pub const DEFAULT_STRIDE: f64 = 0.5;

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    compensation: f64,
}

impl Accumulator {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Mean position error as a function of prediction horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub horizons: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub start_count: usize,
}

impl ErrorCurve {
    /// Mean of the curve over all positive horizons (0 for a horizon of 0).
    pub fn mean_over_horizon(&self) -> f64 {
        if self.mean_error.len() <= 1 {
            return 0.0;
        }
        let mut acc = Accumulator::default();
        self.mean_error[1..].iter().for_each(|&e| acc.add(e));
        acc.total() / (self.mean_error.len() - 1) as f64
    }

    pub fn terminal_error(&self) -> f64 {
        self.mean_error.last().copied().unwrap_or(0.0)
    }
}

/// Raw per-horizon error sums, shared by the curve and the calibration objective.
#[derive(Debug, Clone)]
pub(crate) struct ErrorSums {
    pub dt: f64,
    pub position: Vec<Accumulator>,
    /// Present when the trace records rotation speed.
    pub omega: Option<Vec<Accumulator>>,
    pub starts: usize,
}

/// Stick pairs of a trace with string-length violations pulled back inside.
fn feasible_sticks(trace: &Trace, params: &ModelParams) -> Vec<StickPair> {
    trace
        .samples
        .iter()
        .map(|s| {
            let sticks = s.sticks();
            if sticks.distance() > params.l_string {
                sticks.shrunk_to(params.l_string - REPAIR_MARGIN).unwrap_or(sticks)
            } else {
                sticks
            }
        })
        .collect()
}

/// Contact status implied by a recorded position when none is recorded.
fn infer_status(diabolo: &Vec3, sticks: &StickPair, params: &ModelParams) -> ContactStatus {
    let Ok(sph) = build_spheroid(sticks, params.l_string) else {
        return ContactStatus::OnString;
    };
    let s = sph.signed_distance(diabolo);
    if s <= params.c_l {
        ContactStatus::OnString
    } else if s > params.c_f {
        ContactStatus::Flying
    } else {
        ContactStatus::OffStringLoose
    }
}

/// Predictor state at sample `k`: recorded position and spin, recorded
/// velocity and status when the trace carries them, otherwise a finite
/// difference (backward where possible) and the status implied by the
/// signed distance.
pub fn initial_state(trace: &Trace, sticks: &[StickPair], k: usize, params: &ModelParams) -> DiaboloState {
    let s = &trace.samples;
    let sample = &s[k];
    let velocity = sample.velocity.unwrap_or_else(|| {
        let (a, b) = if k > 0 { (k - 1, k) } else { (0, 1.min(s.len() - 1)) };
        if a == b {
            Vec3::zeros()
        } else {
            (s[b].diabolo - s[a].diabolo) / (s[b].t - s[a].t)
        }
    });
    DiaboloState {
        position: sample.diabolo,
        velocity,
        omega: sample.omega.unwrap_or(0.0).max(0.0),
        status: sample
            .status
            .unwrap_or_else(|| infer_status(&sample.diabolo, &sticks[k], params)),
        time: sample.t,
    }
}

/// Brings a trace onto the predictor's step unless it is already there.
pub(crate) fn at_model_rate<'a>(trace: &'a Trace, params: &ModelParams) -> Result<std::borrow::Cow<'a, Trace>> {
    let h = trace
        .mean_interval()
        .ok_or_else(|| Error::Data("trace needs at least two samples".into()))?;
    if ((h - params.dt) / params.dt).abs() <= 1e-6 {
        Ok(std::borrow::Cow::Borrowed(trace))
    } else {
        Ok(std::borrow::Cow::Owned(resample(trace, params.dt)?))
    }
}

pub(crate) fn error_sums(trace: &Trace, params: &ModelParams, horizon: f64, stride: f64) -> Result<ErrorSums> {
    params.validate()?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::Input(format!("horizon must be non-negative, got {horizon}")));
    }
    if !(stride.is_finite() && stride > 0.0) {
        return Err(Error::Input(format!("stride must be positive, got {stride}")));
    }
    let trace = at_model_rate(trace, params)?;
    let dt = params.dt;
    let n = trace.len();
    let steps = (horizon / dt).round() as usize;
    let stride_steps = ((stride / dt).round() as usize).max(1);
    if steps + 1 > n {
        return Err(Error::Data(format!(
            "trace spans {:.3} s, shorter than the {horizon} s horizon",
            trace.duration()
        )));
    }
    let sticks = feasible_sticks(&trace, params);
    let with_omega = trace.has_omega();

    let mut position = vec![Accumulator::default(); steps + 1];
    let mut omega = with_omega.then(|| vec![Accumulator::default(); steps + 1]);
    let mut starts = 0;
    for k in (0..n - steps).step_by(stride_steps) {
        let init = initial_state(&trace, &sticks, k, params);
        let predicted = rollout_sticks(&init, &sticks[k..=k + steps], params)?;
        for (j, state) in predicted.iter().enumerate().skip(1) {
            let recorded = &trace.samples[k + j];
            position[j].add((state.position - recorded.diabolo).norm());
            if let Some(acc) = omega.as_mut() {
                acc[j].add((state.omega - recorded.omega.unwrap_or(0.0)).abs());
            }
        }
        starts += 1;
    }
    Ok(ErrorSums {
        dt,
        position,
        omega,
        starts,
    })
}

/// Average position error versus horizon over start instants every `stride`.
pub fn error_evolution(trace: &Trace, params: &ModelParams, horizon: f64, stride: f64) -> Result<ErrorCurve> {
    let sums = error_sums(trace, params, horizon, stride)?;
    let count = sums.starts as f64;
    Ok(ErrorCurve {
        horizons: (0..sums.position.len()).map(|j| j as f64 * sums.dt).collect(),
        mean_error: sums.position.iter().map(|a| a.total() / count).collect(),
        start_count: sums.starts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassError {
    pub class: String,
    pub mean_error: f64,
    pub traces: usize,
}

/// Per motion class, the mean over traces of each trace's error curve
/// averaged over the full horizon. Classes are sorted by name.
pub fn motion_class_report(
    traces: &[Trace],
    params: &ModelParams,
    horizon: f64,
    stride: f64,
) -> Result<Vec<ClassError>> {
    let curves = traces
        .iter()
        .map(|t| Ok((t.motion_class().to_string(), error_evolution(t, params, horizon, stride)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_classes(curves.iter().map(|(c, e)| (c.as_str(), e))))
}

/// Groups already computed `(class, curve)` pairs into a class report.
pub fn summarize_classes<'a>(curves: impl IntoIterator<Item = (&'a str, &'a ErrorCurve)>) -> Vec<ClassError> {
    let mut classes: BTreeMap<String, (Accumulator, usize)> = BTreeMap::new();
    for (class, curve) in curves {
        let entry = classes.entry(class.to_string()).or_default();
        entry.0.add(curve.mean_over_horizon());
        entry.1 += 1;
    }
    classes
        .into_iter()
        .map(|(class, (acc, n))| ClassError {
            class,
            mean_error: acc.total() / n as f64,
            traces: n,
        })
        .collect()
}

/// Open-loop prediction over a whole trace: the predictor starts from the
/// first recorded state and follows the recorded sticks to the end.
pub fn replay_trace(trace: &Trace, params: &ModelParams) -> Result<Trace> {
    params.validate()?;
    let trace = at_model_rate(trace, params)?;
    let sticks = feasible_sticks(&trace, params);
    let initial = initial_state(&trace, &sticks, 0, params);
    let states = rollout_sticks(&initial, &sticks, params)?;
    let mut meta = trace.meta.clone();
    meta.sample_rate = Some(1.0 / params.dt);
    meta.string_length = Some(params.l_string);
    Ok(trace_from_states(meta, &sticks, &states))
}

/// `class,mean_error,traces` table.
pub fn write_class_report<W: Write>(report: &[ClassError], mut out: W) -> Result<()> {
    writeln!(out, "class,mean_error,traces")?;
    for row in report {
        writeln!(out, "{},{},{}", row.class, row.mean_error, row.traces)?;
    }
    Ok(())
}

/// Long-format `trace,horizon,error` rows for external plotting.
pub fn write_error_curves<W: Write>(curves: &[(String, ErrorCurve)], mut out: W) -> Result<()> {
    writeln!(out, "trace,horizon,error")?;
    for (name, curve) in curves {
        for (h, e) in curve.horizons.iter().zip(&curve.mean_error) {
            writeln!(out, "{name},{h},{e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = Accumulator::default();
        acc.add(1e16);
        for _ in 0..10 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.total(), 10.0);
    }

    #[test]
    fn curve_summaries() {
        let c = ErrorCurve {
            horizons: vec![0.0, 0.1, 0.2],
            mean_error: vec![0.0, 1.0, 3.0],
            start_count: 1,
        };
        assert_eq!(c.mean_over_horizon(), 2.0);
        assert_eq!(c.terminal_error(), 3.0);
    }
}
