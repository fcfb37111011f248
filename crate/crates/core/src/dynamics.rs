//! Nonlinear plant model of a trolley carrying a hook and payload as a
//! double pendulum.
//!
//! Generalized coordinates are `q = [x, theta1, theta2]`. The equations of
//! motion are written as `M(q) q'' = rhs(q, q', u)` and solved directly; no
//! small-angle approximation is applied. [`small_angle_accelerations`]
//! provides the linearized counterpart for comparison.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard gravity used when a scenario does not override it.
pub const DEFAULT_GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid crane parameter `{field}` = {value} (must be finite and > 0)")]
    InvalidParam { field: &'static str, value: f64 },
    #[error("mass matrix is singular at theta1 = {theta1}, theta2 = {theta2}")]
    SingularMass { theta1: f64, theta2: f64 },
}

/// Masses (kg), rope lengths (m) and gravity (m/s^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CraneParams {
    /// Trolley mass.
    pub m: f64,
    /// Hook mass.
    pub m1: f64,
    /// Payload mass.
    pub m2: f64,
    /// Trolley to hook rope length.
    pub l1: f64,
    /// Hook to payload rope length.
    pub l2: f64,
    pub g: f64,
}

impl CraneParams {
    /// Light payload on a short lower rope (`l2 = 0.3`, `m2 = 2`).
    pub const fn group1() -> Self {
        Self { m: 10.0, m1: 1.0, m2: 2.0, l1: 0.7, l2: 0.3, g: DEFAULT_GRAVITY }
    }

    /// Second load configuration (`l2 = 0.4`, `m2 = 1.5`).
    pub const fn group2() -> Self {
        Self { m: 10.0, m1: 1.0, m2: 1.5, l1: 0.7, l2: 0.4, g: DEFAULT_GRAVITY }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        for (field, value) in [
            ("m", self.m),
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("g", self.g),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(DynamicsError::InvalidParam { field, value });
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.m + self.m1 + self.m2
    }
}

impl Default for CraneParams {
    fn default() -> Self {
        Self::group1()
    }
}

/// Positions and rates of the three generalized coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CraneState {
    pub x: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub x_dot: f64,
    pub theta1_dot: f64,
    pub theta2_dot: f64,
}

impl CraneState {
    pub fn from_array(y: &[f64; 6]) -> Self {
        Self {
            x: y[0],
            theta1: y[1],
            theta2: y[2],
            x_dot: y[3],
            theta1_dot: y[4],
            theta2_dot: y[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.theta1, self.theta2, self.x_dot, self.theta1_dot, self.theta2_dot]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// True while both swing angles stay strictly below the horizontal.
    pub fn within_angle_limit(&self) -> bool {
        self.theta1.abs() < std::f64::consts::FRAC_PI_2
            && self.theta2.abs() < std::f64::consts::FRAC_PI_2
    }
}

/// Symmetric configuration-dependent inertia matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassMatrix(pub Matrix3<f64>);

impl MassMatrix {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn is_symmetric(&self) -> bool {
        let m = &self.0;
        m[(0, 1)] == m[(1, 0)] && m[(0, 2)] == m[(2, 0)] && m[(1, 2)] == m[(2, 1)]
    }

    /// Positive definiteness via a Cholesky factorization.
    pub fn is_positive_definite(&self) -> bool {
        self.0.cholesky().is_some()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accelerations {
    pub x_ddot: f64,
    pub theta1_ddot: f64,
    pub theta2_ddot: f64,
}

impl Accelerations {
    pub fn to_array(&self) -> [f64; 3] {
        [self.x_ddot, self.theta1_ddot, self.theta2_ddot]
    }

    fn from_vector(v: &Vector3<f64>) -> Self {
        Self { x_ddot: v[0], theta1_ddot: v[1], theta2_ddot: v[2] }
    }
}

pub fn mass_matrix(p: &CraneParams, s: &CraneState) -> MassMatrix {
    let m12 = p.m1 + p.m2;
    let a12 = m12 * p.l1 * s.theta1.cos();
    let a13 = p.m2 * p.l2 * s.theta2.cos();
    let a23 = p.m2 * p.l1 * p.l2 * (s.theta1 - s.theta2).cos();
    #[rustfmt::skip]
    let m = Matrix3::new(
        p.total_mass(), a12,                a13,
        a12,            m12 * p.l1 * p.l1,  a23,
        a13,            a23,                p.m2 * p.l2 * p.l2,
    );
    MassMatrix(m)
}

/// Input, centrifugal, Coriolis and gravity terms moved to the right-hand
/// side of `M(q) q'' = rhs`.
fn generalized_forces(p: &CraneParams, s: &CraneState, u: f64) -> Vector3<f64> {
    let m12 = p.m1 + p.m2;
    let (s1, s2) = (s.theta1.sin(), s.theta2.sin());
    let s12 = (s.theta1 - s.theta2).sin();
    let w1 = s.theta1_dot * s.theta1_dot;
    let w2 = s.theta2_dot * s.theta2_dot;
    Vector3::new(
        u + m12 * p.l1 * s1 * w1 + p.m2 * p.l2 * s2 * w2,
        -p.m2 * p.l1 * p.l2 * s12 * w2 - m12 * p.g * p.l1 * s1,
        p.m2 * p.l1 * p.l2 * s12 * w1 - p.m2 * p.g * p.l2 * s2,
    )
}

/// Solves the full nonlinear equations of motion for `(x'', theta1'', theta2'')`.
pub fn accelerations(
    p: &CraneParams,
    s: &CraneState,
    u: f64,
) -> Result<Accelerations, DynamicsError> {
    let mass = mass_matrix(p, s);
    let rhs = generalized_forces(p, s, u);
    mass.0
        .lu()
        .solve(&rhs)
        .filter(|q| q.iter().all(|v| v.is_finite()))
        .map(|q| Accelerations::from_vector(&q))
        .ok_or(DynamicsError::SingularMass { theta1: s.theta1, theta2: s.theta2 })
}

/// Linearized model `M0 q'' + C q' + G = U` with `cos ~ 1`, `sin ~ angle`
/// and the `sin(theta1 - theta2)` rate terms dropped.
pub fn small_angle_accelerations(
    p: &CraneParams,
    s: &CraneState,
    u: f64,
) -> Result<Accelerations, DynamicsError> {
    let hanging = CraneState { theta1: 0.0, theta2: 0.0, ..*s };
    let mass = mass_matrix(p, &hanging);
    let m12 = p.m1 + p.m2;
    let rhs = Vector3::new(
        u + m12 * p.l1 * s.theta1 * s.theta1_dot * s.theta1_dot
            + p.m2 * p.l2 * s.theta2 * s.theta2_dot * s.theta2_dot,
        -m12 * p.g * p.l1 * s.theta1,
        -p.m2 * p.g * p.l2 * s.theta2,
    );
    mass.0
        .lu()
        .solve(&rhs)
        .map(|q| Accelerations::from_vector(&q))
        .ok_or(DynamicsError::SingularMass { theta1: s.theta1, theta2: s.theta2 })
}

/// Kinetic plus gravitational potential energy, zero when hanging at rest.
pub fn mechanical_energy(p: &CraneParams, s: &CraneState) -> f64 {
    let mass = mass_matrix(p, s);
    let qd = Vector3::new(s.x_dot, s.theta1_dot, s.theta2_dot);
    let kinetic = 0.5 * qd.dot(&(mass.0 * qd));
    let potential = (p.m1 + p.m2) * p.g * p.l1 * (1.0 - s.theta1.cos())
        + p.m2 * p.g * p.l2 * (1.0 - s.theta2.cos());
    kinetic + potential
}
