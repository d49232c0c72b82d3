//! One-step analytical model of the diabolo on its string.
//!
//! Each step runs, in order:
//!
//! 1. spin update from the string length that passed over the axle (on-string only);
//! 2. forward-Euler extrapolation under gravity and a rebuild of the spheroid;
//! 3. contact-status transition from the signed distance of the extrapolated position;
//! 4. if the string is engaged and the position left the spheroid: projection back
//!    onto the surface, removal of the outward velocity component, and a damped,
//!    capped pull velocity;
//!
//! followed by the on-string dissipation factor. When the sticks are nearly a
//! string length apart the spheroid is too thin for reliable normals, so the
//! pull is applied only along the normal of the vertical cut plane through the
//! stick tips.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    build_spheroid, ensure_finite, ensure_finite_scalar, Spheroid, StickPair, Vec3, MIN_SEMI_MINOR,
};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ContactStatus {
    /// Taut string; the diabolo is constrained to the spheroid.
    OnString,
    /// String engaged between the cups but slack; the diabolo moves freely.
    OffStringLoose,
    /// String disengaged.
    Flying,
}

impl ContactStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ContactStatus::OnString => "ON_STRING",
            ContactStatus::OffStringLoose => "OFF_STRING_LOOSE",
            ContactStatus::Flying => "FLYING",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ON_STRING" => Some(ContactStatus::OnString),
            "OFF_STRING_LOOSE" => Some(ContactStatus::OffStringLoose),
            "FLYING" => Some(ContactStatus::Flying),
            _ => None,
        }
    }

    /// Whether `self -> next` is an edge of the transition table (self-loops included).
    pub fn can_transition_to(self, next: ContactStatus) -> bool {
        use ContactStatus::*;
        self == next
            || matches!(
                (self, next),
                (OnString, OffStringLoose)
                    | (OffStringLoose, Flying)
                    | (OffStringLoose, OnString)
                    | (Flying, OnString)
            )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiaboloState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Rotation speed (rad/s), never negative.
    pub omega: f64,
    pub status: ContactStatus,
    pub time: f64,
}

impl DiaboloState {
    /// Diabolo at rest directly below the stick midpoint on the spheroid surface.
    pub fn hanging(sticks: &StickPair, params: &ModelParams) -> Result<Self> {
        let sph = build_spheroid(sticks, params.l_string)?;
        let position = sph
            .surface_point(&(sph.center - Vec3::z()))
            .expect("ray from center is well defined");
        Ok(Self {
            position,
            velocity: Vec3::zeros(),
            omega: 0.0,
            status: ContactStatus::OnString,
            time: 0.0,
        })
    }

    fn validate(&self) -> Result<()> {
        ensure_finite(&self.position, "diabolo position")?;
        ensure_finite(&self.velocity, "diabolo velocity")?;
        ensure_finite_scalar(self.omega, "rotation speed")?;
        ensure_finite_scalar(self.time, "time")
    }
}

/// Intermediate quantities of one step, for inspection and testing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Pull velocity before damping and capping.
    pub v_pull: Vec3,
    /// Pull velocity after the pre-cap damping and the cap.
    pub v_pull_capped: Vec3,
    /// Velocity change actually added by the pull (after post-cap damping).
    pub dv_pull: Vec3,
    pub v_ellipse_origin: Vec3,
    pub v_ellipse_edge: Vec3,
    /// Signed distance of the extrapolated position (positive inside).
    pub s: f64,
    pub cut_plane_active: bool,
    /// True when the position was projected back onto the spheroid.
    pub constrained: bool,
    /// True when the cap reduced the pull magnitude.
    pub capped: bool,
    pub delta_string: f64,
}

impl StepDiagnostics {
    /// Magnitude limit the cap imposed this step.
    pub fn cap_magnitude(&self) -> f64 {
        (self.v_ellipse_origin + self.v_ellipse_edge).norm()
    }
}

/// Change of the right-tip-to-diabolo distance between the two stick samples.
pub fn string_delta(diabolo: &Vec3, sticks_prev: &StickPair, sticks_now: &StickPair) -> f64 {
    (sticks_now.right - diabolo).norm() - (sticks_prev.right - diabolo).norm()
}

/// New rotation speed after the string passed over the axle.
///
/// Both distances are measured from the diabolo position at the start of the step.
pub fn update_rotation(
    state: &DiaboloState,
    sticks_prev: &StickPair,
    sticks_now: &StickPair,
    params: &ModelParams,
) -> f64 {
    let delta = string_delta(&state.position, sticks_prev, sticks_now);
    spin_after(state.omega, delta, params)
}

fn spin_after(omega: f64, delta: f64, params: &ModelParams) -> f64 {
    let mu = if delta > 0.0 { params.mu_acc } else { params.mu_dec };
    (omega + mu * delta).max(0.0)
}

struct PullCap {
    capped: Vec3,
    origin: Vec3,
    edge: Vec3,
    limited: bool,
}

fn cap_pull(v_pull: &Vec3, sph_prev: &Spheroid, sph_now: &Spheroid, dt: f64) -> PullCap {
    let origin = (sph_now.center - sph_prev.center) / dt;
    let speed = v_pull.norm();
    let dir = if speed > 0.0 { v_pull / speed } else { Vec3::zeros() };
    let edge = dir * ((sph_prev.b - sph_now.b).max(0.0) / dt);
    let limit = (origin + edge).norm();
    let limited = speed > limit;
    PullCap {
        capped: if limited { dir * limit } else { *v_pull },
        origin,
        edge,
        limited,
    }
}

/// Limits the pull velocity by the speed at which the spheroid's origin moves
/// plus the rate at which its semi-minor axis shrinks.
pub fn cap_pull_velocity(v_pull: &Vec3, sph_prev: &Spheroid, sph_now: &Spheroid, dt: f64) -> Vec3 {
    cap_pull(v_pull, sph_prev, sph_now, dt).capped
}

/// Plane through the stick midpoint containing the world `x` axis and the
/// stick axis, with its normal pointing up.
pub fn cut_plane(sticks: &StickPair) -> Result<(Vec3, Vec3)> {
    let point = sticks.midpoint();
    let n = Vec3::x().cross(&(sticks.left - sticks.right));
    let len = n.norm();
    if len.is_nan() || len <= 1e-12 {
        return Err(Error::DegenerateGeometry(
            "stick axis parallel to world x; cut plane undefined".into(),
        ));
    }
    let n = n / len;
    Ok((point, if n.z < 0.0 { -n } else { n }))
}

/// Contact-status transition for signed distance `s`.
pub fn transition(status: ContactStatus, s: f64, params: &ModelParams) -> ContactStatus {
    use ContactStatus::*;
    match status {
        OnString if s > params.c_l => OffStringLoose,
        OnString => OnString,
        OffStringLoose if s > params.c_f => Flying,
        OffStringLoose if s <= params.c_l => OnString,
        OffStringLoose => OffStringLoose,
        Flying if s <= 0.0 => OnString,
        Flying => Flying,
    }
}

/// Advances `state` by one step while the sticks move from `sticks_prev` to `sticks_now`.
pub fn step(
    state: &DiaboloState,
    sticks_prev: &StickPair,
    sticks_now: &StickPair,
    params: &ModelParams,
) -> Result<(DiaboloState, StepDiagnostics)> {
    state.validate()?;
    let sph_prev = build_spheroid(sticks_prev, params.l_string)?;
    let sph_now = build_spheroid(sticks_now, params.l_string)?;
    let dt = params.dt;
    let mut diag = StepDiagnostics::default();

    let mut omega = state.omega;
    if state.status == ContactStatus::OnString {
        diag.delta_string = string_delta(&state.position, sticks_prev, sticks_now);
        omega = spin_after(omega, diag.delta_string, params);
    }

    let gravity = Vec3::new(0.0, 0.0, -params.gravity);
    let mut position = state.position + state.velocity * dt;
    let mut velocity = state.velocity + gravity * dt;

    let s = sph_now.signed_distance(&position);
    diag.s = s;
    let mut status = transition(state.status, s, params);
    // A flying diabolo is only caught by the string below the stick tips;
    // leaving the spheroid upwards does not re-engage it.
    if state.status == ContactStatus::Flying
        && status == ContactStatus::OnString
        && position.z > sph_now.center.z
    {
        status = ContactStatus::Flying;
    }

    if status != ContactStatus::Flying && s < 0.0 {
        let throwing = sticks_now.distance() > params.l_string - params.throw_gap
            || sph_now.b < MIN_SEMI_MINOR;
        let target = sph_now
            .surface_point(&position)
            .expect("outside points are never the center");
        let displacement = target - position;

        let spheroid_normal = if throwing {
            None
        } else {
            sph_now.project_to_surface(&position).ok().map(|(_, n)| n)
        };
        let (push_dir, pull_speed) = match spheroid_normal {
            Some(outward) => (-outward, displacement.norm() / dt),
            None => {
                diag.cut_plane_active = true;
                let normal = cut_plane(sticks_now).map(|(_, n)| n).unwrap_or_else(|_| Vec3::z());
                let along = displacement.dot(&normal);
                let dir = if along < 0.0 { -normal } else { normal };
                (dir, along.abs() / dt)
            }
        };

        let inward = velocity.dot(&push_dir);
        if inward < 0.0 {
            velocity -= push_dir * inward;
        }

        diag.v_pull = push_dir * pull_speed;
        let cap = cap_pull(&(diag.v_pull * params.damp_pull_pre), &sph_prev, &sph_now, dt);
        diag.v_pull_capped = cap.capped;
        diag.v_ellipse_origin = cap.origin;
        diag.v_ellipse_edge = cap.edge;
        diag.capped = cap.limited;
        diag.dv_pull = cap.capped * params.damp_pull_post;
        diag.constrained = true;

        velocity += diag.dv_pull;
        position = target;
    }

    if status == ContactStatus::OnString {
        velocity *= params.damp_on_string;
    }

    Ok((
        DiaboloState {
            position,
            velocity,
            omega,
            status,
            time: state.time + dt,
        },
        diag,
    ))
}
