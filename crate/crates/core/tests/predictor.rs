use std::time::Instant;

use diabolo::predictor::step;
use diabolo::{build_spheroid, ContactStatus, DiaboloState, ModelParams, StickPair, Vec3};
use nalgebra::Rotation3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sticks() -> StickPair {
    StickPair::new(Vec3::new(0.0, -0.3, 1.2), Vec3::new(0.0, 0.3, 1.2))
}

fn flying(position: Vec3, velocity: Vec3) -> DiaboloState {
    DiaboloState {
        position,
        velocity,
        omega: 12.0,
        status: ContactStatus::Flying,
        time: 0.0,
    }
}

/// Closed form of n explicit-Euler steps under constant acceleration.
fn euler_closed_form(x0: f64, v0: f64, g: f64, dt: f64, n: usize) -> (f64, f64) {
    let n = n as f64;
    (x0 + n * v0 * dt + g * dt * dt * n * (n - 1.0) / 2.0, v0 + n * g * dt)
}

fn assert_rel(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn flying_rollout_matches_discrete_recurrence() {
    for gravity in [9.81, 3.7, 0.0] {
        let params = ModelParams { gravity, ..ModelParams::default() };
        let x0 = Vec3::new(0.4, -0.2, 6.2);
        let v0 = Vec3::new(0.3, -0.2, 0.5);
        let mut state = flying(x0, v0);
        let start = Instant::now();
        for _ in 0..1000 {
            state = step(&state, &sticks(), &sticks(), &params).unwrap().0;
        }
        assert!(start.elapsed().as_secs_f64() < 0.1 || cfg!(debug_assertions));
        assert_eq!(state.status, ContactStatus::Flying);
        assert_eq!(state.omega, 12.0);
        for axis in 0..3 {
            let g = if axis == 2 { -gravity } else { 0.0 };
            let (x, v) = euler_closed_form(x0[axis], v0[axis], g, params.dt, 1000);
            assert_rel(state.position[axis], x, 1e-12);
            assert_rel(state.velocity[axis], v, 1e-12);
        }
    }
}

#[test]
fn wrong_gravity_is_detected_by_the_recurrence() {
    let params = ModelParams::default();
    let x0 = Vec3::new(0.0, 0.0, 6.2);
    let mut state = flying(x0, Vec3::zeros());
    for _ in 0..1000 {
        state = step(&state, &sticks(), &sticks(), &params).unwrap().0;
    }
    let (wrong, _) = euler_closed_form(x0.z, 0.0, -9.80, params.dt, 1000);
    assert!((state.position.z - wrong).abs() > 1e-3);
}

#[test]
fn hanging_is_an_equilibrium() {
    let params = ModelParams::default();
    let mut state = DiaboloState::hanging(&sticks(), &params).unwrap();
    let start = state.position;
    for _ in 0..2000 {
        state = step(&state, &sticks(), &sticks(), &params).unwrap().0;
        assert_eq!(state.status, ContactStatus::OnString);
    }
    assert!((state.position - start).norm() < 1e-4);
    assert!(state.velocity.norm() < 1e-2);
}

/// Stick tips with persistent random velocities plus occasional fast
/// spreads to near full extension and back.
#[derive(Default)]
struct StickWalk {
    left: Vec3,
    right: Vec3,
    spread: usize,
}

impl StickWalk {
    fn next(&mut self, rng: &mut ChaCha8Rng, prev: &StickPair, params: &ModelParams) -> StickPair {
        let mut noise = || Vec3::from_fn(|_, _| rng.random_range(-0.3..0.3));
        self.left = self.left * 0.98 + noise();
        self.right = self.right * 0.98 + noise();
        if self.spread == 0 && rng.random::<f64>() < 0.002 {
            self.spread = 150;
        }
        let axis = (prev.right - prev.left).normalize();
        let (mut vl, mut vr) = (self.left, self.right);
        if self.spread > 0 {
            self.spread -= 1;
            let speed = if self.spread > 75 { 2.5 } else { -2.5 };
            vl -= axis * speed;
            vr += axis * speed;
        }
        let mut now = StickPair::new(prev.left + vl * params.dt, prev.right + vr * params.dt);
        if now.distance() > params.l_string {
            now = now.shrunk_to(params.l_string - 1e-3).unwrap();
        }
        if now.distance() < 0.2 {
            self.left = Vec3::zeros();
            self.right = Vec3::zeros();
            now = *prev;
        }
        now
    }
}

#[test]
fn fuzzed_steps_stay_inside_and_respect_the_cap() {
    let params = ModelParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut prev = sticks();
    let mut state = DiaboloState::hanging(&prev, &params).unwrap();
    let (mut capped, mut cut_plane, mut flying) = (0, 0, 0);
    let mut walk = StickWalk::default();
    let mut flight = 0;
    for _ in 0..10_000 {
        let now = walk.next(&mut rng, &prev, &params);
        let (next, diag) = step(&state, &prev, &now, &params).unwrap();
        assert!(state.status.can_transition_to(next.status), "{:?} -> {:?}", state.status, next.status);
        if next.status != ContactStatus::Flying {
            let s = build_spheroid(&now, params.l_string).unwrap().signed_distance(&next.position);
            assert!(s >= -1e-6, "outside by {s}");
        }
        if diag.capped {
            capped += 1;
            assert!(diag.v_pull_capped.norm() <= diag.cap_magnitude() + 1e-9);
            assert!(diag.dv_pull.norm() <= diag.cap_magnitude() + 1e-9);
        }
        cut_plane += diag.cut_plane_active as usize;
        flying += (next.status == ContactStatus::Flying) as usize;
        // Re-hang after long flights so most steps exercise the string.
        flight = if next.status == ContactStatus::Flying { flight + 1 } else { 0 };
        state = if flight > 300 || (next.position - now.midpoint()).norm() > 3.0 {
            DiaboloState::hanging(&now, &params).unwrap()
        } else {
            next
        };
        prev = now;
    }
    assert!(capped > 0 && cut_plane > 0 && flying > 0, "{capped} {cut_plane} {flying}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_is_deterministic_and_rotation_equivariant(
        seed in any::<u64>(),
        angle in -3.1..3.1f64,
    ) {
        let params = ModelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rot = Rotation3::from_axis_angle(&Vec3::z_axis(), angle);
        let turn = |p: &StickPair| StickPair::new(rot * p.left, rot * p.right);
        let mut prev = sticks();
        let mut state = DiaboloState::hanging(&prev, &params).unwrap();
        let mut turned = DiaboloState { position: rot * state.position, velocity: rot * state.velocity, ..state };
        for _ in 0..200 {
            let mut now = StickPair::new(
                prev.left + Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)) * params.dt,
                prev.right + Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)) * params.dt,
            );
            if now.distance() > 1.2 {
                now = prev;
            }
            let (a, _) = step(&state, &prev, &now, &params).unwrap();
            let (again, _) = step(&state, &prev, &now, &params).unwrap();
            prop_assert_eq!(a, again);
            let (b, _) = step(&turned, &turn(&prev), &turn(&now), &params).unwrap();
            prop_assert_eq!(a.status, b.status);
            prop_assert!((rot * a.position - b.position).norm() < 1e-9);
            prop_assert!((rot * a.velocity - b.velocity).norm() < 1e-6);
            prop_assert!((a.omega - b.omega).abs() < 1e-6 * a.omega.max(1.0));
            state = a;
            turned = b;
            prev = now;
        }
    }
}
