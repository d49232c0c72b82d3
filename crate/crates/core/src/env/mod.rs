//! Reset/step interface over the predictor for learning agents, plus the
//! motion templates and goal patterns used to seed trajectory search.

mod patterns;
mod templates;

pub use patterns::{goal_pattern, PATTERN_NAMES};
pub use templates::{MotionTemplate, TemplateShape};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{trace_from_states, Trace, TraceMeta};
use crate::error::{Error, Result};
use crate::geometry::{StickPair, Vec3};
use crate::params::ModelParams;
use crate::player::REPAIR_MARGIN;
use crate::predictor::{self, ContactStatus, DiaboloState, StepDiagnostics};

/// Stick tips 0.6 m apart, 1.2 m above the floor.
pub fn default_sticks() -> StickPair {
    StickPair::new(Vec3::new(0.0, -0.3, 1.2), Vec3::new(0.0, 0.3, 1.2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    /// Actions are the stick tip positions themselves.
    Absolute,
    /// Actions are stick tip velocities, integrated over one step.
    #[default]
    VelocityDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub params: ModelParams,
    pub sticks_init: StickPair,
    /// Starting state; `None` hangs the diabolo below the initial sticks.
    pub initial: Option<DiaboloState>,
    pub action_mode: ActionMode,
    /// Per-axis bound: m/s in velocity mode, m of displacement from the
    /// initial sticks in absolute mode.
    pub action_bounds: f64,
    pub episode_horizon: usize,
    /// Uniform per-coordinate jitter (m) applied to the initial sticks on reset.
    pub init_noise: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            sticks_init: default_sticks(),
            initial: None,
            action_mode: ActionMode::VelocityDelta,
            action_bounds: 1.5,
            episode_horizon: 2000,
            init_noise: 0.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !self.sticks_init.is_finite() {
            return Err(Error::Config("initial sticks must be finite".into()));
        }
        if self.sticks_init.distance() > self.params.l_string {
            return Err(Error::Config(format!(
                "initial sticks are {} m apart, more than the {} m string",
                self.sticks_init.distance(),
                self.params.l_string
            )));
        }
        if !(self.action_bounds.is_finite() && self.action_bounds > 0.0) {
            return Err(Error::Config(format!("action_bounds must be positive, got {}", self.action_bounds)));
        }
        if self.episode_horizon == 0 {
            return Err(Error::Config("episode_horizon must be at least one step".into()));
        }
        if !(self.init_noise.is_finite() && self.init_noise >= 0.0) {
            return Err(Error::Config(format!("init_noise must be non-negative, got {}", self.init_noise)));
        }
        if let Some(s) = &self.initial {
            if !(s.position.iter().chain(s.velocity.iter()).all(|x| x.is_finite()) && s.omega.is_finite()) {
                return Err(Error::Config("initial state must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub position: Vec3,
    pub velocity: Vec3,
    pub omega: f64,
    pub status: ContactStatus,
    pub sticks: StickPair,
    /// Steps taken divided by the episode horizon.
    pub progress: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub info: StepDiagnostics,
    /// The action was outside its bounds or would have overstretched the string.
    pub clamped: bool,
    pub done: bool,
    /// Value of the reward hook, if one is installed.
    pub reward: Option<f64>,
}

pub type RewardHook = Box<dyn Fn(&Observation, &StepDiagnostics) -> f64 + Send + Sync>;

struct Episode {
    sticks_origin: StickPair,
    sticks: Vec<StickPair>,
    states: Vec<DiaboloState>,
}

/// One episode at a time; instances share nothing.
pub struct DiaboloEnv {
    config: EnvConfig,
    reward: Option<RewardHook>,
    episode: Option<Episode>,
}

impl std::fmt::Debug for DiaboloEnv {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiaboloEnv")
            .field("config", &self.config)
            .field("reward", &self.reward.is_some())
            .field("steps", &self.steps_taken())
            .finish()
    }
}

impl DiaboloEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            reward: None,
            episode: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn set_reward_hook(&mut self, hook: RewardHook) {
        self.reward = Some(hook);
    }

    pub fn steps_taken(&self) -> usize {
        self.episode.as_ref().map_or(0, |e| e.states.len() - 1)
    }

    pub fn reset(&mut self, seed: u64) -> Result<Observation> {
        let cfg = &self.config;
        let mut sticks = cfg.sticks_init;
        if cfg.init_noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut jitter = || Vec3::from_fn(|_, _| rng.random_range(-cfg.init_noise..=cfg.init_noise));
            sticks = StickPair::new(sticks.left + jitter(), sticks.right + jitter());
            if sticks.distance() > cfg.params.l_string {
                sticks = sticks.shrunk_to(cfg.params.l_string - REPAIR_MARGIN).unwrap_or(cfg.sticks_init);
            }
        }
        let state = match cfg.initial {
            Some(s) => s,
            None => DiaboloState::hanging(&sticks, &cfg.params).map_err(|e| Error::Config(e.to_string()))?,
        };
        self.episode = Some(Episode {
            sticks_origin: sticks,
            sticks: vec![sticks],
            states: vec![state],
        });
        Ok(self.observe())
    }

    fn observe(&self) -> Observation {
        let ep = self.episode.as_ref().expect("observe after reset");
        let s = ep.states.last().expect("episode has a state");
        Observation {
            position: s.position,
            velocity: s.velocity,
            omega: s.omega,
            status: s.status,
            sticks: *ep.sticks.last().expect("episode has sticks"),
            progress: (ep.states.len() - 1) as f64 / self.config.episode_horizon as f64,
        }
    }

    /// Applies one action (left and right tip vectors) and advances the predictor by `dt`.
    pub fn step(&mut self, action: &StickPair) -> Result<StepOutcome> {
        let cfg = &self.config;
        let ep = self
            .episode
            .as_mut()
            .ok_or_else(|| Error::NotReset("call reset before step".into()))?;
        let taken = ep.states.len() - 1;
        if taken >= cfg.episode_horizon {
            return Err(Error::NotReset("episode finished; call reset".into()));
        }
        if !action.is_finite() {
            return Err(Error::Input("action must be finite".into()));
        }
        let bound = cfg.action_bounds;
        let clamp = |v: &Vec3| v.map(|x| x.clamp(-bound, bound));
        let prev = *ep.sticks.last().expect("episode has sticks");
        let (now, mut clamped) = match cfg.action_mode {
            ActionMode::VelocityDelta => {
                let (l, r) = (clamp(&action.left), clamp(&action.right));
                let c = l != action.left || r != action.right;
                let dt = cfg.params.dt;
                (StickPair::new(prev.left + l * dt, prev.right + r * dt), c)
            }
            ActionMode::Absolute => {
                let o = &ep.sticks_origin;
                let l = o.left + clamp(&(action.left - o.left));
                let r = o.right + clamp(&(action.right - o.right));
                let c = l != action.left || r != action.right;
                (StickPair::new(l, r), c)
            }
        };
        let now = if now.distance() > cfg.params.l_string {
            clamped = true;
            now.shrunk_to(cfg.params.l_string - REPAIR_MARGIN).unwrap_or(prev)
        } else {
            now
        };
        let state = *ep.states.last().expect("episode has a state");
        let (next, info) = predictor::step(&state, &prev, &now, &cfg.params)?;
        ep.sticks.push(now);
        ep.states.push(next);
        let observation = self.observe();
        let reward = self.reward.as_ref().map(|hook| hook(&observation, &info));
        Ok(StepOutcome {
            observation,
            info,
            clamped,
            done: taken + 1 >= self.config.episode_horizon,
            reward,
        })
    }

    /// Sticks and states of the current episode.
    pub fn history(&self) -> Option<(&[StickPair], &[DiaboloState])> {
        self.episode.as_ref().map(|e| (e.sticks.as_slice(), e.states.as_slice()))
    }

    /// The episode so far as a trace with ground-truth columns.
    pub fn recording(&self, meta: TraceMeta) -> Result<Trace> {
        let (sticks, states) = self
            .history()
            .ok_or_else(|| Error::NotReset("no episode recorded".into()))?;
        Ok(trace_from_states(meta, sticks, states))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_spheroid;

    #[test]
    fn default_reset_hangs_at_spheroid_bottom() {
        let mut env = DiaboloEnv::new(EnvConfig::default()).unwrap();
        let obs = env.reset(0).unwrap();
        assert_eq!(obs.status, ContactStatus::OnString);
        let sph = build_spheroid(&default_sticks(), 1.45).unwrap();
        let bottom = sph.center - Vec3::z() * sph.b;
        assert!((obs.position - bottom).norm() < 1e-12);
        assert_eq!(obs.progress, 0.0);
    }

    #[test]
    fn same_seed_same_observation() {
        let cfg = EnvConfig {
            init_noise: 0.01,
            ..EnvConfig::default()
        };
        let mut a = DiaboloEnv::new(cfg.clone()).unwrap();
        let mut b = DiaboloEnv::new(cfg).unwrap();
        assert_eq!(a.reset(9).unwrap(), b.reset(9).unwrap());
        assert_ne!(a.reset(9).unwrap(), a.reset(10).unwrap());
    }

    #[test]
    fn overstretched_initial_sticks_rejected() {
        let cfg = EnvConfig {
            sticks_init: StickPair::new(Vec3::new(0.0, -1.0, 1.0), Vec3::new(0.0, 1.0, 1.0)),
            ..EnvConfig::default()
        };
        assert!(matches!(DiaboloEnv::new(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn step_before_reset() {
        let mut env = DiaboloEnv::new(EnvConfig::default()).unwrap();
        let zero = StickPair::new(Vec3::zeros(), Vec3::zeros());
        assert!(matches!(env.step(&zero), Err(Error::NotReset(_))));
    }

    #[test]
    fn zero_velocity_action_keeps_sticks() {
        let mut env = DiaboloEnv::new(EnvConfig::default()).unwrap();
        let start = env.reset(0).unwrap();
        let zero = StickPair::new(Vec3::zeros(), Vec3::zeros());
        let out = env.step(&zero).unwrap();
        assert_eq!(out.observation.sticks, start.sticks);
        assert!(!out.clamped);
        assert!(out.reward.is_none());
    }

    #[test]
    fn oversized_action_is_clamped() {
        let mut env = DiaboloEnv::new(EnvConfig::default()).unwrap();
        let start = env.reset(0).unwrap();
        let big = StickPair::new(Vec3::new(0.0, 0.0, 10.0), Vec3::zeros());
        let out = env.step(&big).unwrap();
        assert!(out.clamped);
        let moved = out.observation.sticks.left - start.sticks.left;
        assert!((moved.z - 1.5 * 0.001).abs() < 1e-15);
    }

    #[test]
    fn absolute_mode_never_overstretches() {
        let cfg = EnvConfig {
            action_mode: ActionMode::Absolute,
            ..EnvConfig::default()
        };
        let mut env = DiaboloEnv::new(cfg).unwrap();
        env.reset(0).unwrap();
        let wide = StickPair::new(Vec3::new(0.0, -1.3, 1.2), Vec3::new(0.0, 1.3, 1.2));
        let out = env.step(&wide).unwrap();
        assert!(out.clamped);
        assert!(out.observation.sticks.distance() <= 1.45);
    }

    #[test]
    fn done_on_horizon_step() {
        let cfg = EnvConfig {
            episode_horizon: 3,
            ..EnvConfig::default()
        };
        let mut env = DiaboloEnv::new(cfg).unwrap();
        env.reset(0).unwrap();
        let zero = StickPair::new(Vec3::zeros(), Vec3::zeros());
        assert!(!env.step(&zero).unwrap().done);
        assert!(!env.step(&zero).unwrap().done);
        let last = env.step(&zero).unwrap();
        assert!(last.done);
        assert_eq!(last.observation.progress, 1.0);
        assert!(env.step(&zero).is_err());
    }

    #[test]
    fn reward_hook_sees_each_step() {
        let mut env = DiaboloEnv::new(EnvConfig::default()).unwrap();
        env.set_reward_hook(Box::new(|obs, _| obs.position.z));
        env.reset(0).unwrap();
        let out = env.step(&StickPair::new(Vec3::zeros(), Vec3::zeros())).unwrap();
        assert_eq!(out.reward, Some(out.observation.position.z));
    }
}
