//! Enhanced-coupling, output-constrained control law.
//!
//! The trolley position is blended with the running integrals of the swing
//! angle sines into a composite signal
//!
//! ```text
//! eps   = x - kl * l1 * (int sin(theta1) + int sin(theta2))
//! e_eps = eps - x_d
//! ```
//!
//! and the force is shaped through `tanh((e_eps - (theta1 + theta2)) / l1)`,
//! which caps the initial output at `kp * (m - m2*l2/l1)` whatever the target
//! distance.

use serde::{Deserialize, Serialize};

use crate::dynamics::{CraneParams, CraneState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    pub kp: f64,
    pub kd: f64,
    /// Coupling gain between swing integrals and trolley position.
    pub kl: f64,
}

impl ControllerGains {
    pub const fn new(kp: f64, kd: f64, kl: f64) -> Self {
        Self { kp, kd, kl }
    }

    pub fn is_positive(&self) -> bool {
        self.kp > 0.0 && self.kd > 0.0 && self.kl > 0.0
    }
}

impl Default for ControllerGains {
    /// Initial tuning used for both load groups.
    fn default() -> Self {
        Self::new(1.5, 250.0, 0.01)
    }
}

/// Internal controller memory: the two swing integrals and the target.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControllerState {
    pub int_sin_theta1: f64,
    pub int_sin_theta2: f64,
    pub x_d: f64,
}

impl ControllerState {
    pub fn new(x_d: f64) -> Self {
        Self { x_d, ..Default::default() }
    }

    fn integral_sum(&self) -> f64 {
        self.int_sin_theta1 + self.int_sin_theta2
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LyapunovSample {
    pub v: f64,
    pub v_dot: f64,
}

/// Composite error `e_eps` and its rate.
pub fn composite_error(cs: &ControllerState, s: &CraneState, kl: f64, l1: f64) -> (f64, f64) {
    let e = s.x - cs.x_d - kl * l1 * cs.integral_sum();
    let e_dot = s.x_dot - kl * l1 * (s.theta1.sin() + s.theta2.sin());
    (e, e_dot)
}

#[inline]
fn shaping_argument(e_eps: f64, s: &CraneState, l1: f64) -> f64 {
    (e_eps - (s.theta1 + s.theta2)) / l1
}

/// `m - m2*l2/l1`; the initial force bound is `kp` times this.
pub fn effective_mass(p: &CraneParams) -> f64 {
    p.m - p.m2 * p.l2 / p.l1
}

/// Upper bound on `|u(0)|` from rest, valid for any target.
pub fn initial_force_bound(p: &CraneParams, gains: &ControllerGains) -> f64 {
    gains.kp * effective_mass(p)
}

/// Closed-form force at the rest state `e_eps = -x_d`.
pub fn initial_force(p: &CraneParams, gains: &ControllerGains, x_d: f64) -> f64 {
    -gains.kp * effective_mass(p) * (-x_d / p.l1).tanh()
}

pub fn control_force(
    p: &CraneParams,
    gains: &ControllerGains,
    cs: &ControllerState,
    s: &CraneState,
) -> f64 {
    let ControllerGains { kp, kd, kl } = *gains;
    let CraneParams { m, m1, m2, l1, l2, g } = *p;
    let (e_eps, e_eps_dot) = composite_error(cs, s, kl, l1);
    let (c1, c2) = (s.theta1.cos(), s.theta2.cos());
    let (w1, w2) = (s.theta1_dot, s.theta2_dot);

    let shaping = -kp * effective_mass(p) * shaping_argument(e_eps, s, l1).tanh();
    let damping = -kd * (e_eps_dot / m - w1 / (m * l1));
    let coupling = kl * (m * l1 * (c1 * w1 + c2 * w2) - m2 * l2 * c2 * (w2 - w1));
    let gravity = -(m1 * g + m2 * m2 * g / m1 - m2 * m2 * g * l2 / (m1 * l1) + 2.0 * m2 * g)
        * s.theta1
        + (m2 * m2 * g / m1 + m2 * g) * s.theta2;
    let centripetal = -(m1 * l1 + m2 * l1) * s.theta1 * w1 * w1 - m2 * l2 * s.theta2 * w2 * w2;

    shaping + damping + coupling + gravity + centripetal
}

/// Constant term of the shaped potential, i.e. `V` at the target equilibrium.
pub fn lyapunov_offset(p: &CraneParams) -> f64 {
    3.0 * p.m2 * p.g / (p.m1 * p.l1)
}

/// Energy-like function and its closed-form derivative along the closed loop.
pub fn lyapunov(
    p: &CraneParams,
    gains: &ControllerGains,
    cs: &ControllerState,
    s: &CraneState,
) -> LyapunovSample {
    let ControllerGains { kp, kd, kl } = *gains;
    let CraneParams { m, m1, m2, l1, g, .. } = *p;
    let (e_eps, e_eps_dot) = composite_error(cs, s, kl, l1);
    let (w1, w2) = (s.theta1_dot, s.theta2_dot);

    let kinetic = 0.5 * (e_eps_dot * e_eps_dot + w1 * w1 + w2 * w2);
    let swing = 0.5 * (g / l1 + m2 * g / (m1 * l1)) * s.theta1 * s.theta1;
    let shaped = kp * ln_cosh(shaping_argument(e_eps, s, l1));
    let cross = (3.0 - s.theta1 * s.theta2) * m2 * g / (m1 * l1);
    let v = kinetic + swing + shaped + cross;

    let mix = l1 * e_eps_dot - w1;
    let v_dot = -kl * (s.theta1.cos() * w1 * w1 + s.theta2.cos() * w2 * w2)
        - kd / (m * m * l1 * l1) * mix * mix;

    LyapunovSample { v, v_dot }
}

/// `ln(cosh(z))` without overflow for large `|z|`.
pub fn ln_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}
