//! Recorded and synthetic traces, and prediction-error metrics over them.

mod metrics;
mod synthetic;
mod trace;

pub use metrics::{
    error_evolution, initial_state, motion_class_report, replay_trace, summarize_classes, write_class_report, write_error_curves, ClassError,
    ErrorCurve, DEFAULT_HORIZON, DEFAULT_STRIDE,
};
pub(crate) use metrics::{error_sums, Accumulator};
pub use synthetic::{generate_synthetic, synthesize, synthesize_from, trace_from_states, SyntheticRun, SYNTHETIC_KNOT_SPACING};
pub use trace::{
    load_trace, moving_average, read_trace, resample, trace_to_string, write_trace, LoadReport, Trace, TraceMeta,
    TraceSample, RATE_JITTER, REQUIRED_COLUMNS, STRETCH_TOLERANCE,
};
