use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and numerical constants of the analytical model.
///
/// Damping factors are applied once per step, so fitted values are only
/// meaningful together with the `dt` they were fitted at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// String length between the stick tips (m).
    pub l_string: f64,
    /// Spin gained per meter of string passing over the axle while pulling (rad/m).
    pub mu_acc: f64,
    /// Spin lost per meter of string passing the other way (rad/m).
    pub mu_dec: f64,
    /// Factor on the pull velocity before capping.
    pub damp_pull_pre: f64,
    /// Factor on the pull velocity after capping.
    pub damp_pull_post: f64,
    /// Per-step velocity factor while on the string.
    pub damp_on_string: f64,
    /// Loose-string threshold on the signed distance (m).
    pub c_l: f64,
    /// Flying threshold on the signed distance (m).
    pub c_f: f64,
    /// Cut-plane mode engages when the sticks are closer than this to a taut string (m).
    pub throw_gap: f64,
    /// Integration step (s).
    pub dt: f64,
    /// Gravitational acceleration magnitude (m/s²), acting along world `-z`.
    pub gravity: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            l_string: 1.45,
            mu_acc: 200.0,
            mu_dec: 50.0,
            damp_pull_pre: 0.5,
            damp_pull_post: 0.5,
            damp_on_string: 0.9999,
            c_l: 0.01,
            c_f: 0.05,
            throw_gap: 0.05,
            dt: 0.001,
            gravity: 9.81,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        for p in Param::ALL {
            let v = self.get(p);
            if !v.is_finite() {
                return Err(Error::Config(format!("{p} must be finite, got {v}")));
            }
        }
        if self.l_string <= 0.0 {
            return Err(Error::Config(format!("l_string must be positive, got {}", self.l_string)));
        }
        if self.dt <= 0.0 {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.mu_acc < 0.0 || self.mu_dec < 0.0 {
            return Err(Error::Config("friction factors must be non-negative".into()));
        }
        for p in [Param::DampPullPre, Param::DampPullPost, Param::DampOnString] {
            let v = self.get(p);
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{p} must lie in (0, 1], got {v}")));
            }
        }
        if self.c_l < 0.0 || self.c_l.partial_cmp(&self.c_f) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Config(format!(
                "need 0 <= c_l < c_f, got c_l = {} and c_f = {}",
                self.c_l, self.c_f
            )));
        }
        if self.throw_gap < 0.0 || self.throw_gap >= self.l_string {
            return Err(Error::Config(format!(
                "throw_gap must lie in [0, l_string), got {}",
                self.throw_gap
            )));
        }
        if self.gravity < 0.0 {
            return Err(Error::Config("gravity must be non-negative".into()));
        }
        Ok(())
    }

    pub fn get(&self, param: Param) -> f64 {
        match param {
            Param::LString => self.l_string,
            Param::MuAcc => self.mu_acc,
            Param::MuDec => self.mu_dec,
            Param::DampPullPre => self.damp_pull_pre,
            Param::DampPullPost => self.damp_pull_post,
            Param::DampOnString => self.damp_on_string,
            Param::CL => self.c_l,
            Param::CF => self.c_f,
            Param::ThrowGap => self.throw_gap,
            Param::Dt => self.dt,
            Param::Gravity => self.gravity,
        }
    }

    pub fn set(&mut self, param: Param, value: f64) {
        let slot = match param {
            Param::LString => &mut self.l_string,
            Param::MuAcc => &mut self.mu_acc,
            Param::MuDec => &mut self.mu_dec,
            Param::DampPullPre => &mut self.damp_pull_pre,
            Param::DampPullPost => &mut self.damp_pull_post,
            Param::DampOnString => &mut self.damp_on_string,
            Param::CL => &mut self.c_l,
            Param::CF => &mut self.c_f,
            Param::ThrowGap => &mut self.throw_gap,
            Param::Dt => &mut self.dt,
            Param::Gravity => &mut self.gravity,
        };
        *slot = value;
    }

    pub fn with(mut self, param: Param, value: f64) -> Self {
        self.set(param, value);
        self
    }
}

/// Names of the individual [`ModelParams`] fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    LString,
    MuAcc,
    MuDec,
    DampPullPre,
    DampPullPost,
    DampOnString,
    #[serde(rename = "c_l")]
    CL,
    #[serde(rename = "c_f")]
    CF,
    ThrowGap,
    Dt,
    Gravity,
}

impl Param {
    pub const ALL: [Param; 11] = [
        Param::LString,
        Param::MuAcc,
        Param::MuDec,
        Param::DampPullPre,
        Param::DampPullPost,
        Param::DampOnString,
        Param::CL,
        Param::CF,
        Param::ThrowGap,
        Param::Dt,
        Param::Gravity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::LString => "l_string",
            Param::MuAcc => "mu_acc",
            Param::MuDec => "mu_dec",
            Param::DampPullPre => "damp_pull_pre",
            Param::DampPullPost => "damp_pull_post",
            Param::DampOnString => "damp_on_string",
            Param::CL => "c_l",
            Param::CF => "c_f",
            Param::ThrowGap => "throw_gap",
            Param::Dt => "dt",
            Param::Gravity => "gravity",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model parameter `{s}`")))
    }
}
