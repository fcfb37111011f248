//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver paths it is used to check.
#![allow(dead_code)]

use crane_core::{CraneParams, CraneState};
use rand::Rng;

/// The three scalar equations of motion written as
/// `coef * [x'', th1'', th2''] + bias = [u, 0, 0]`.
pub struct ScalarEquations {
    pub coef: [[f64; 3]; 3],
    pub bias: [f64; 3],
    pub input: [f64; 3],
}

pub fn scalar_equations(p: &CraneParams, s: &CraneState, u: f64) -> ScalarEquations {
    let (m, m1, m2, l1, l2, g) = (p.m, p.m1, p.m2, p.l1, p.l2, p.g);
    let (t1, t2, w1, w2) = (s.theta1, s.theta2, s.theta1_dot, s.theta2_dot);
    ScalarEquations {
        coef: [
            [m + m1 + m2, (m1 + m2) * l1 * t1.cos(), m2 * l2 * t2.cos()],
            [(m1 + m2) * l1 * t1.cos(), (m1 + m2) * l1 * l1, m2 * l1 * l2 * (t1 - t2).cos()],
            [m2 * l2 * t2.cos(), m2 * l1 * l2 * (t1 - t2).cos(), m2 * l2 * l2],
        ],
        bias: [
            -(m1 + m2) * l1 * t1.sin() * w1 * w1 - m2 * l2 * t2.sin() * w2 * w2,
            m2 * l1 * l2 * (t1 - t2).sin() * w2 * w2 + (m1 + m2) * g * l1 * t1.sin(),
            -m2 * l1 * l2 * (t1 - t2).sin() * w1 * w1 + m2 * g * l2 * t2.sin(),
        ],
        input: [u, 0.0, 0.0],
    }
}

fn det3(a: &[[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn cramer(a: &[[f64; 3]; 3], b: &[f64; 3]) -> [f64; 3] {
    let d = det3(a);
    std::array::from_fn(|k| {
        let mut ak = *a;
        for r in 0..3 {
            ak[r][k] = b[r];
        }
        det3(&ak) / d
    })
}

/// Accelerations by Cramer's rule on the scalar equations.
pub fn oracle_accelerations(p: &CraneParams, s: &CraneState, u: f64) -> [f64; 3] {
    let eq = scalar_equations(p, s, u);
    let rhs: [f64; 3] = std::array::from_fn(|i| eq.input[i] - eq.bias[i]);
    cramer(&eq.coef, &rhs)
}

/// Per-equation residual divided by the sum of the absolute terms.
pub fn relative_residuals(p: &CraneParams, s: &CraneState, u: f64, qdd: &[f64; 3]) -> [f64; 3] {
    let eq = scalar_equations(p, s, u);
    std::array::from_fn(|i| {
        let terms: Vec<f64> = (0..3)
            .map(|j| eq.coef[i][j] * qdd[j])
            .chain([eq.bias[i], -eq.input[i]])
            .collect();
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        let sum: f64 = terms.iter().sum();
        if scale == 0.0 {
            0.0
        } else {
            sum.abs() / scale
        }
    })
}

pub fn random_params<R: Rng>(rng: &mut R) -> CraneParams {
    CraneParams {
        m: rng.gen_range(1.0..50.0),
        m1: rng.gen_range(0.1..10.0),
        m2: rng.gen_range(0.1..10.0),
        l1: rng.gen_range(0.1..3.0),
        l2: rng.gen_range(0.1..3.0),
        g: 9.81,
    }
}

pub fn random_state<R: Rng>(rng: &mut R, max_angle: f64, max_rate: f64) -> CraneState {
    CraneState {
        x: rng.gen_range(-5.0..5.0),
        theta1: rng.gen_range(-max_angle..max_angle),
        theta2: rng.gen_range(-max_angle..max_angle),
        x_dot: rng.gen_range(-2.0..2.0),
        theta1_dot: rng.gen_range(-max_rate..max_rate),
        theta2_dot: rng.gen_range(-max_rate..max_rate),
    }
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
