mod common;

use common::{random_state, rng};
use crane_core::controller::{
    control_force, effective_mass, initial_force, initial_force_bound, ln_cosh, lyapunov,
};
use crane_core::dynamics::accelerations;
use crane_core::harness::{self, lyapunov_check, ControllerKind, Scenario};
use crane_core::{ControllerGains, ControllerState, CraneParams, CraneState};
use proptest::prelude::*;

proptest! {
    #[test]
    fn initial_force_is_strictly_bounded(x_d in -100.0f64..100.0) {
        let p = CraneParams::group1();
        let gains = ControllerGains::default();
        let u0 = control_force(&p, &gains, &ControllerState::new(x_d), &CraneState::default());
        prop_assert!((u0 - initial_force(&p, &gains, x_d)).abs() < 1e-12);
        prop_assert!(u0.abs() <= initial_force_bound(&p, &gains));
        if x_d.abs() < 10.0 {
            prop_assert!(u0.abs() < initial_force_bound(&p, &gains));
        }
    }
}

#[test]
fn control_force_is_locally_lipschitz() {
    let p = CraneParams::group1();
    let gains = ControllerGains::default();
    let mut r = rng(21);
    let h = 1e-7;
    for _ in 0..2_000 {
        let s = random_state(&mut r, 1.2, 2.0);
        let cs = ControllerState {
            int_sin_theta1: rand::Rng::gen_range(&mut r, -1.0..1.0),
            int_sin_theta2: rand::Rng::gen_range(&mut r, -1.0..1.0),
            x_d: 0.7,
        };
        let u = control_force(&p, &gains, &cs, &s);
        let base = s.to_array();
        for i in 0..6 {
            let mut y = base;
            y[i] += h;
            let du = (control_force(&p, &gains, &cs, &CraneState::from_array(&y)) - u).abs();
            let mut y2 = base;
            y2[i] += h / 10.0;
            let du2 = (control_force(&p, &gains, &cs, &CraneState::from_array(&y2)) - u).abs();
            // O(eps): shrinking the perturbation tenfold shrinks the change tenfold
            assert!(du < 1e4 * h, "component {i}: du {du}");
            assert!(du2 <= 0.1 * du + 1e-9, "component {i}: {du2} vs {du}");
        }
    }
}

/// Residual of the linearized plant at rest: `[u, gravity1, gravity2]`.
fn rest_residual(p: &CraneParams, gains: &ControllerGains, cs: &ControllerState, q: [f64; 3]) -> [f64; 3] {
    let s = CraneState { x: q[0], theta1: q[1], theta2: q[2], ..Default::default() };
    let u = control_force(p, gains, cs, &s);
    [u, (p.m1 + p.m2) * p.g * p.l1 * q[1], p.m2 * p.g * p.l2 * q[2]]
}

#[test]
fn only_fixed_point_is_the_target() {
    let p = CraneParams::group1();
    let gains = ControllerGains::default();
    let cs = ControllerState::new(0.7);
    let mut r = rng(22);
    for _ in 0..50 {
        let mut q = [
            rand::Rng::gen_range(&mut r, -2.0..3.0),
            rand::Rng::gen_range(&mut r, -0.3..0.3),
            rand::Rng::gen_range(&mut r, -0.3..0.3),
        ];
        for _ in 0..100 {
            let f = rest_residual(&p, &gains, &cs, q);
            let h = 1e-7;
            let jac: [[f64; 3]; 3] = std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let mut qj = q;
                    qj[j] += h;
                    (rest_residual(&p, &gains, &cs, qj)[i] - f[i]) / h
                })
            });
            let step = common::cramer(&jac, &f);
            // damped Newton: tanh saturates far from the target
            let scale = 1.0f64.min(0.5 / step[0].abs().max(1e-12));
            for k in 0..3 {
                q[k] -= scale * step[k];
            }
        }
        assert!((q[0] - 0.7).abs() < 1e-9 && q[1].abs() < 1e-12 && q[2].abs() < 1e-12, "{q:?}");
    }
}

/// Chain-rule derivative of V along the true plant with frozen gains.
fn exact_v_dot(p: &CraneParams, g: &ControllerGains, cs: &ControllerState, s: &CraneState) -> f64 {
    let u = control_force(p, g, cs, s);
    let a = accelerations(p, s, u).unwrap();
    let (m1, m2, l1, gr) = (p.m1, p.m2, p.l1, p.g);
    let e = s.x - cs.x_d - g.kl * l1 * (cs.int_sin_theta1 + cs.int_sin_theta2);
    let e_dot = s.x_dot - g.kl * l1 * (s.theta1.sin() + s.theta2.sin());
    let e_ddot = a.x_ddot
        - g.kl * l1 * (s.theta1.cos() * s.theta1_dot + s.theta2.cos() * s.theta2_dot);
    let z = (e - (s.theta1 + s.theta2)) / l1;
    let z_dot = (e_dot - s.theta1_dot - s.theta2_dot) / l1;
    e_dot * e_ddot
        + s.theta1_dot * a.theta1_ddot
        + s.theta2_dot * a.theta2_ddot
        + (gr / l1 + m2 * gr / (m1 * l1)) * s.theta1 * s.theta1_dot
        + g.kp * z.tanh() * z_dot
        - (s.theta1_dot * s.theta2 + s.theta1 * s.theta2_dot) * m2 * gr / (m1 * l1)
}

fn fixed_gain_default_run() -> (Scenario, harness::RunOutput) {
    let sc = Scenario::default().with_kind(ControllerKind::FixedGain);
    let out = harness::run(&sc).unwrap();
    (sc, out)
}

#[test]
fn lyapunov_value_matches_its_chain_rule_derivative() {
    // validates V itself: finite differences of V agree with d/dt by chain rule
    let (sc, out) = fixed_gain_default_run();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for w in out.records.windows(2).step_by(10) {
        let dt = w[1].t - w[0].t;
        let fd = (w[1].v - w[0].v) / dt;
        let exact = |r: &harness::SimRecord| {
            let cs = ControllerState {
                int_sin_theta1: r.int_sin_theta1,
                int_sin_theta2: r.int_sin_theta2,
                x_d: sc.x_d,
            };
            exact_v_dot(&sc.params, &r.gains, &cs, &r.state)
        };
        let mid = 0.5 * (exact(&w[0]) + exact(&w[1]));
        worst = worst.max((fd - mid).abs());
        scale = scale.max(mid.abs());
    }
    assert!(worst < 1e-4 * scale, "worst mismatch {worst} against peak |dV/dt| {scale}");
}

#[test]
fn analytic_v_dot_is_nonpositive_along_default_run() {
    let (_, out) = fixed_gain_default_run();
    assert!(out.records.iter().all(|r| r.v_dot <= 1e-8));
    let fuzzy = harness::run(&Scenario::default()).unwrap();
    assert!(fuzzy.records.iter().all(|r| r.v_dot <= 1e-8));
}

#[test]
fn analytic_v_dot_matches_finite_difference() {
    let (_, out) = fixed_gain_default_run();
    let check = lyapunov_check(&out.records);
    assert!(check.fd_samples > 0);
    assert!(
        check.matches_finite_difference(),
        "{} of {} samples off by more than 5% (max relative error {})",
        check.fd_violations,
        check.fd_samples,
        check.fd_max_rel_error
    );
}

#[test]
fn lyapunov_is_non_increasing_along_default_run() {
    let (_, out) = fixed_gain_default_run();
    let check = lyapunov_check(&out.records);
    assert!(check.non_increasing(), "V rose by up to {}", check.max_v_increase);
}

#[test]
fn effective_mass_and_ln_cosh() {
    assert!((effective_mass(&CraneParams::group1()) - (10.0 - 0.6 / 0.7)).abs() < 1e-12);
    assert!(effective_mass(&CraneParams { m2: 40.0, ..CraneParams::group1() }) < 0.0);
    assert_eq!(ln_cosh(0.0), 0.0);
    let p = CraneParams::group1();
    let l = lyapunov(&p, &ControllerGains::default(), &ControllerState::new(0.7), &CraneState::default());
    assert!(l.v.is_finite());
}
