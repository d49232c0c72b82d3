//! Stick pairs and the auxiliary spheroid spanned by a taut string.
//!
//! The string of length `l` between the two stick tips bounds the region the
//! diabolo can reach: every point whose distances to the two tips sum to `l`
//! lies on a spheroid (ellipsoid of rotation) with the tips as focal points.
//!
//! Closest-point projection onto a spheroid has no closed form. Projection
//! here is radial in the spheroid's scaled frame: scale the axes so that the
//! spheroid becomes the unit sphere, project along the ray from the center,
//! and scale back. The signed distance uses the same construction so that a
//! projected point always reports `s = 0`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// World-frame vector in meters (or m/s). `x` points forward, `z` up.
pub type Vec3 = Vector3<f64>;

/// Below this semi-minor axis the surface normal is considered ill-conditioned.
pub const MIN_SEMI_MINOR: f64 = 1e-4;

pub(crate) fn ensure_finite(v: &Vec3, what: &str) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input(format!("{what} is not finite: {v:?}")))
    }
}

pub(crate) fn ensure_finite_scalar(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("{what} is not finite: {v}")))
    }
}

/// Positions of the two stick tips at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StickPair {
    pub left: Vec3,
    pub right: Vec3,
}

impl StickPair {
    pub fn new(left: Vec3, right: Vec3) -> Self {
        Self { left, right }
    }

    pub fn distance(&self) -> f64 {
        (self.right - self.left).norm()
    }

    pub fn midpoint(&self) -> Vec3 {
        (self.left + self.right) * 0.5
    }

    pub fn translated(&self, offset: &Vec3) -> Self {
        Self::new(self.left + offset, self.right + offset)
    }

    pub fn is_finite(&self) -> bool {
        self.left.iter().chain(self.right.iter()).all(|c| c.is_finite())
    }

    /// Pulls the tips toward their midpoint so that their distance is at most
    /// `max_distance`. Returns `None` when no change was needed.
    pub fn shrunk_to(&self, max_distance: f64) -> Option<Self> {
        let d = self.distance();
        if d <= max_distance {
            return None;
        }
        let mid = self.midpoint();
        let scale = max_distance / d;
        Some(Self::new(
            mid + (self.left - mid) * scale,
            mid + (self.right - mid) * scale,
        ))
    }
}

/// Spheroid of rotation with focal points at the stick tips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spheroid {
    pub center: Vec3,
    /// Unit major-axis direction, pointing from the left tip to the right tip.
    pub axis_dir: Vec3,
    /// Semi-major axis, always half the string length.
    pub a: f64,
    /// Semi-minor axis.
    pub b: f64,
}

/// Builds the reachable-set spheroid for `sticks` and a string of `l_string`.
///
/// `a = l/2` and `b = sqrt(a² - (d/2)²)` where `d` is the tip distance. When
/// the tips coincide the axis defaults to world `+y`.
pub fn build_spheroid(sticks: &StickPair, l_string: f64) -> Result<Spheroid> {
    ensure_finite(&sticks.left, "left stick")?;
    ensure_finite(&sticks.right, "right stick")?;
    if !(l_string.is_finite() && l_string > 0.0) {
        return Err(Error::Input(format!("string length must be positive, got {l_string}")));
    }
    let delta = sticks.right - sticks.left;
    let d = delta.norm();
    if d > l_string {
        return Err(Error::Input(format!(
            "stick distance {d:.6} m exceeds string length {l_string:.6} m"
        )));
    }
    let a = 0.5 * l_string;
    let half_d = 0.5 * d;
    let b = (a * a - half_d * half_d).max(0.0).sqrt();
    let axis_dir = if d > 0.0 { delta / d } else { Vec3::y() };
    Ok(Spheroid {
        center: sticks.midpoint(),
        axis_dir,
        a,
        b,
    })
}

impl Spheroid {
    /// Splits `p - center` into the axial coordinate and the perpendicular offset.
    fn local(&self, p: &Vec3) -> (f64, Vec3) {
        let rel = p - self.center;
        let u = rel.dot(&self.axis_dir);
        (u, rel - self.axis_dir * u)
    }

    /// Radial scale factor `k` such that `center + (p - center) / k` lies on the surface.
    /// `k < 1` inside, `k > 1` outside.
    fn radial_scale(&self, p: &Vec3) -> f64 {
        let (u, perp) = self.local(p);
        let along = u / self.a;
        if self.b > 0.0 {
            let across = perp.norm() / self.b;
            (along * along + across * across).sqrt()
        } else {
            f64::INFINITY
        }
    }

    /// Implicit function `(u/a)² + (r/b)² - 1`; negative inside.
    pub fn implicit(&self, p: &Vec3) -> f64 {
        let (u, perp) = self.local(p);
        (u / self.a).powi(2) + perp.norm_squared() / (self.b * self.b) - 1.0
    }

    /// Outward unit normal of the level set through `p` (gradient of the implicit function).
    pub fn outward_normal(&self, p: &Vec3) -> Option<Vec3> {
        let (u, perp) = self.local(p);
        let grad = self.axis_dir * (u / (self.a * self.a)) + perp / (self.b * self.b);
        let n = grad.norm();
        (n.is_finite() && n > 0.0).then(|| grad / n)
    }

    /// Closest point on the focal segment, used when the spheroid has collapsed.
    fn segment_point(&self, p: &Vec3) -> Vec3 {
        let (u, _) = self.local(p);
        let half = (self.a * self.a - self.b * self.b).max(0.0).sqrt();
        self.center + self.axis_dir * u.clamp(-half, half)
    }

    /// Surface point obtained by the scaled radial projection. `None` at the center,
    /// where the ray is undefined.
    pub fn surface_point(&self, p: &Vec3) -> Option<Vec3> {
        let rel = p - self.center;
        if rel.norm_squared() == 0.0 {
            return None;
        }
        let k = self.radial_scale(p);
        if k.is_finite() {
            Some(self.center + rel / k)
        } else {
            Some(self.segment_point(p))
        }
    }

    /// Signed distance of `p` from the surface, positive inside.
    ///
    /// Measured along the projection ray (not the exact Euclidean distance);
    /// zero on the surface and monotone along each ray. At the exact center
    /// the value is `b`, the distance to the nearest surface point.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        let Some(q) = self.surface_point(p) else {
            return self.b;
        };
        let dist = (p - q).norm();
        if self.radial_scale(p) < 1.0 {
            dist
        } else {
            -dist
        }
    }

    /// Projects an outside point onto the surface and returns it together with
    /// the outward unit normal there.
    pub fn project_to_surface(&self, p: &Vec3) -> Result<(Vec3, Vec3)> {
        ensure_finite(p, "point")?;
        if self.b < MIN_SEMI_MINOR {
            return Err(Error::DegenerateGeometry(format!(
                "semi-minor axis {:.3e} m below {MIN_SEMI_MINOR:.0e} m",
                self.b
            )));
        }
        let point = self
            .surface_point(p)
            .ok_or_else(|| Error::DegenerateGeometry("projection ray undefined at center".into()))?;
        let normal = self
            .outward_normal(&point)
            .ok_or_else(|| Error::DegenerateGeometry("vanishing surface gradient".into()))?;
        Ok((point, normal))
    }
}

/// Free-function form of [`Spheroid::signed_distance`].
pub fn signed_distance(sph: &Spheroid, p: &Vec3) -> f64 {
    sph.signed_distance(p)
}

/// Free-function form of [`Spheroid::project_to_surface`].
pub fn project_to_surface(sph: &Spheroid, p: &Vec3) -> Result<(Vec3, Vec3)> {
    sph.project_to_surface(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(l: [f64; 3], r: [f64; 3]) -> StickPair {
        StickPair::new(Vec3::from(l), Vec3::from(r))
    }

    #[test]
    fn axes_for_horizontal_sticks() {
        let sph = build_spheroid(&pair([0.0, 0.5, 1.0], [0.0, -0.5, 1.0]), 1.45).unwrap();
        assert_eq!(sph.a, 0.725);
        // sqrt(0.725² - 0.5²) = sqrt(0.275625)
        assert!((sph.b - 0.275625f64.sqrt()).abs() < 1e-12);
        assert!((sph.b - 0.525_0).abs() < 1e-12);
        assert_eq!(sph.center, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(sph.axis_dir, Vec3::new(0.0, -1.0, 0.0));
    }

    #[test]
    fn coincident_tips_give_sphere_along_y() {
        let sph = build_spheroid(&pair([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]), 1.45).unwrap();
        assert_eq!(sph.a, 0.725);
        assert_eq!(sph.b, 0.725);
        assert_eq!(sph.axis_dir, Vec3::y());
    }

    #[test]
    fn taut_string_collapses_minor_axis() {
        let sph = build_spheroid(&pair([0.0, -0.725, 1.0], [0.0, 0.725, 1.0]), 1.45).unwrap();
        assert_eq!(sph.b, 0.0);
        // Points on the focal segment are on the surface, everything else is outside.
        assert_eq!(sph.signed_distance(&Vec3::new(0.0, 0.3, 1.0)), 0.0);
        assert!((sph.signed_distance(&Vec3::new(0.0, 0.3, 0.9)) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn unreachable_or_non_finite_sticks_are_rejected() {
        assert!(matches!(
            build_spheroid(&pair([0.0, -1.0, 1.0], [0.0, 1.0, 1.0]), 1.45),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            build_spheroid(&pair([f64::NAN, 0.0, 1.0], [0.0, 1.0, 1.0]), 1.45),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn sphere_signed_distances() {
        let r = 0.725;
        let sph = build_spheroid(&pair([0.0; 3], [0.0; 3]), 2.0 * r).unwrap();
        assert_eq!(sph.signed_distance(&Vec3::zeros()), r);
        assert!(sph.signed_distance(&Vec3::new(0.0, 0.0, r)).abs() < 1e-12);
        assert!((sph.signed_distance(&Vec3::new(0.0, 2.0 * r, 0.0)) + r).abs() < 1e-12);
    }

    #[test]
    fn sphere_projection_along_z() {
        let r = 0.725;
        let sph = build_spheroid(&pair([0.0; 3], [0.0; 3]), 2.0 * r).unwrap();
        let (p, n) = sph.project_to_surface(&Vec3::new(0.0, 0.0, 2.0 * r)).unwrap();
        assert!((p - Vec3::new(0.0, 0.0, r)).norm() < 1e-12);
        assert!((n - Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn projection_beyond_axis_tip_lands_on_tip() {
        // d chosen so that b = 0.5 for a = 0.725.
        let half_d = (0.725f64 * 0.725 - 0.25).sqrt();
        let sph = build_spheroid(&pair([0.0, -half_d, 0.0], [0.0, half_d, 0.0]), 1.45).unwrap();
        assert!((sph.b - 0.5).abs() < 1e-12);
        let (p, n) = sph.project_to_surface(&Vec3::new(0.0, 1.2, 0.0)).unwrap();
        assert!((p - Vec3::new(0.0, 0.725, 0.0)).norm() < 1e-12);
        assert!((n - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent_on_surface() {
        let sph = build_spheroid(&pair([0.1, -0.4, 1.0], [-0.1, 0.45, 1.2]), 1.45).unwrap();
        let on = sph.surface_point(&Vec3::new(0.3, 0.2, 0.1)).unwrap();
        let (p, _) = sph.project_to_surface(&on).unwrap();
        assert!((p - on).norm() < 1e-9);
        assert!(sph.implicit(&p).abs() < 1e-9);
    }

    #[test]
    fn thin_spheroid_projection_is_degenerate() {
        let sph = build_spheroid(&pair([0.0, -0.725, 1.0], [0.0, 0.725, 1.0]), 1.45).unwrap();
        assert!(matches!(
            sph.project_to_surface(&Vec3::new(0.0, 0.0, 0.0)),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn shrink_keeps_midpoint() {
        let s = pair([0.0, -1.0, 1.0], [0.0, 1.0, 1.0]);
        let fixed = s.shrunk_to(1.449).unwrap();
        assert!((fixed.distance() - 1.449).abs() < 1e-12);
        assert_eq!(fixed.midpoint(), s.midpoint());
        assert!(fixed.shrunk_to(1.45).is_none());
    }
}
