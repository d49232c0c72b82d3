use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::patterns::goal_pattern;
use crate::error::{Error, Result};
use crate::geometry::{StickPair, Vec3};
use crate::params::ModelParams;
use crate::player::{ControlPoint, GoalWaypoint, StickTrajectory};

/// Stick motions that produce a stable diabolo behavior; used as optimizer
/// seeds and for synthetic traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotionTemplate {
    StaticHang,
    Swing,
    LinearAcceleration,
    CircularAcceleration,
    Hop,
    Throw,
}

/// Random variation of a template's amplitude and tempo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateShape {
    pub amplitude: f64,
    pub tempo: f64,
}

impl Default for TemplateShape {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            tempo: 1.0,
        }
    }
}

impl TemplateShape {
    /// Amplitude and tempo each varied by up to ±5%.
    pub fn jittered<R: Rng>(rng: &mut R) -> Self {
        Self {
            amplitude: 1.0 + rng.random_range(-0.05..=0.05),
            tempo: 1.0 + rng.random_range(-0.05..=0.05),
        }
    }
}

/// `sin²` pulse of unit height lasting `width` seconds from `start`.
fn pulse(t: f64, start: f64, width: f64) -> f64 {
    let u = t - start;
    if u <= 0.0 || u >= width {
        0.0
    } else {
        (PI * u / width).sin().powi(2)
    }
}

impl MotionTemplate {
    pub const ALL: [MotionTemplate; 6] = [
        MotionTemplate::StaticHang,
        MotionTemplate::Swing,
        MotionTemplate::LinearAcceleration,
        MotionTemplate::CircularAcceleration,
        MotionTemplate::Hop,
        MotionTemplate::Throw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotionTemplate::StaticHang => "static_hang",
            MotionTemplate::Swing => "swing",
            MotionTemplate::LinearAcceleration => "linear_acceleration",
            MotionTemplate::CircularAcceleration => "circular_acceleration",
            MotionTemplate::Hop => "hop",
            MotionTemplate::Throw => "throw",
        }
    }

    /// Label used for per-class error reports.
    pub fn motion_class(self) -> &'static str {
        match self {
            MotionTemplate::StaticHang => "static",
            MotionTemplate::Swing => "swinging",
            MotionTemplate::LinearAcceleration => "linear_acceleration",
            MotionTemplate::CircularAcceleration => "circular_acceleration",
            MotionTemplate::Hop => "hop",
            MotionTemplate::Throw => "throw",
        }
    }

    /// Offsets of the left and right tips from their start positions at time `t`.
    fn offsets(self, t: f64, sticks: &StickPair, params: &ModelParams, shape: &TemplateShape) -> (Vec3, Vec3) {
        let amp = shape.amplitude;
        let w = |f: f64| 2.0 * PI * f * shape.tempo;
        let axis = {
            let d = sticks.right - sticks.left;
            let n = d.norm();
            if n > 0.0 {
                d / n
            } else {
                Vec3::y()
            }
        };
        // Separation increase reaching `target` distance at the pulse peak.
        let spread = |target: f64, s: f64| {
            let extra = (target - sticks.distance()).max(0.0) * s;
            (-axis * (0.5 * extra), axis * (0.5 * extra))
        };
        match self {
            MotionTemplate::StaticHang => (Vec3::zeros(), Vec3::zeros()),
            MotionTemplate::Swing => {
                let x = 0.12 * amp * (w(1.0) * t).sin();
                (Vec3::new(x, 0.0, 0.0), Vec3::new(x, 0.0, 0.0))
            }
            MotionTemplate::LinearAcceleration => {
                let z = 0.08 * amp * (w(2.0) * t).sin();
                (Vec3::new(0.0, 0.0, -z), Vec3::new(0.0, 0.0, z))
            }
            MotionTemplate::CircularAcceleration => {
                let r = 0.1 * amp;
                let phase = w(1.5) * t;
                let o = Vec3::new(0.0, r * phase.sin(), r * (1.0 - phase.cos()));
                (o, o)
            }
            MotionTemplate::Hop => {
                let period = 1.0 / shape.tempo;
                let u = t.rem_euclid(period);
                let s = pulse(u, 0.2 * period, 0.25 / shape.tempo);
                spread((params.l_string - 0.15).min(params.l_string - params.throw_gap), s * amp.min(1.0))
            }
            MotionTemplate::Throw => {
                let s = pulse(t, 0.3, 0.24 / shape.tempo);
                spread(params.l_string - 0.01, s * amp.min(1.0))
            }
        }
    }

    /// Stick pair of the template at time `t`.
    pub fn sticks_at(self, t: f64, sticks: &StickPair, params: &ModelParams, shape: &TemplateShape) -> StickPair {
        let (l, r) = self.offsets(t, sticks, params, shape);
        StickPair::new(sticks.left + l, sticks.right + r)
    }

    /// Spline trajectory through the template's stick positions every
    /// `knot_spacing` seconds over `[0, duration]`.
    pub fn seed_trajectory(
        self,
        sticks: &StickPair,
        params: &ModelParams,
        duration: f64,
        knot_spacing: f64,
        shape: &TemplateShape,
    ) -> Result<StickTrajectory> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::Input(format!("duration must be non-negative, got {duration}")));
        }
        if !(knot_spacing.is_finite() && knot_spacing > 0.0) {
            return Err(Error::Input(format!("knot spacing must be positive, got {knot_spacing}")));
        }
        let knots = (duration / knot_spacing).ceil().max(if duration > 0.0 { 1.0 } else { 0.0 }) as usize;
        let points = (0..=knots)
            .map(|k| {
                let t = (k as f64 * knot_spacing).min(duration);
                ControlPoint::new(t, self.sticks_at(t, sticks, params, shape))
            })
            .collect::<Vec<_>>();
        let h = 1e-6;
        let ahead = self.sticks_at(h, sticks, params, shape);
        let start_velocity = StickPair::new((ahead.left - sticks.left) / h, (ahead.right - sticks.right) / h);
        StickTrajectory::new(points, start_velocity)
    }

    /// Goal waypoints this motion is meant to achieve, placed relative to the
    /// diabolo's hanging position.
    pub fn default_goals(self, hang: &Vec3) -> Vec<GoalWaypoint> {
        let up = |dz: f64| hang + Vec3::new(0.0, 0.0, dz);
        let pattern = match self {
            MotionTemplate::StaticHang => return vec![GoalWaypoint::at(*hang)],
            MotionTemplate::Swing => goal_pattern("swing", &up(0.0), 0.1),
            MotionTemplate::LinearAcceleration => goal_pattern("linear_acceleration", &up(0.0), 0.1),
            MotionTemplate::CircularAcceleration => goal_pattern("circular_acceleration", &up(0.15), 0.15),
            MotionTemplate::Hop => goal_pattern("hop", hang, 0.2),
            MotionTemplate::Throw => goal_pattern("throw_up", hang, 1.0),
        };
        pattern.expect("built-in pattern names are known")
    }
}

impl fmt::Display for MotionTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MotionTemplate::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown motion template `{s}`")))
    }
}
