//! Analytical diabolo–string simulator.
//!
//! The diabolo is a point mass hanging in a string between two stick tips.
//! With the string taut it can only sit on the spheroid whose focal points
//! are the tips, so the model is a forward-Euler integrator with a
//! projection onto that spheroid and a three-state contact machine.
//!
//! On top of the one-step [`predictor`] sit:
//!
//! - [`player`]: spline stick trajectories and a random-walk search for
//!   trajectories whose rollout meets goal waypoints;
//! - [`data`]: the trace file format, resampling, synthetic traces and
//!   prediction-error metrics;
//! - [`calibration`]: fitting model constants to recorded traces;
//! - [`env`]: a reset/step environment, motion templates and goal patterns.

pub mod calibration;
pub mod data;
pub mod env;
pub mod error;
pub mod geometry;
pub mod params;
pub mod player;
pub mod predictor;

pub use error::{Error, Result};
pub use geometry::{build_spheroid, project_to_surface, signed_distance, Spheroid, StickPair, Vec3};
pub use params::{ModelParams, Param};
pub use predictor::{ContactStatus, DiaboloState, StepDiagnostics};
