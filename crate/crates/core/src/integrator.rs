//! Fixed-step explicit Runge-Kutta integration over fixed-size state arrays.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest step accepted by [`IntegratorConfig::validate`].
pub const MAX_DT: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("non-finite state at t = {t} s")]
    NonFiniteState { t: f64 },
    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 15.0, method: Method::Rk4 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(IntegratorError::InvalidConfig(format!(
                "dt = {} must lie in (0, {MAX_DT}]",
                self.dt
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(IntegratorError::InvalidConfig(format!(
                "t_end = {} must be finite and non-negative",
                self.t_end
            )));
        }
        let ratio = self.t_end / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) {
            return Err(IntegratorError::InvalidConfig(format!(
                "t_end / dt = {ratio} is not a whole number of steps"
            )));
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Time after `k` steps. Computed by multiplication so that long runs do
    /// not accumulate summation drift.
    pub fn time_at(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// Advances `y` by one step of `dt` from time `t`.
pub fn step<const N: usize, F>(
    method: Method,
    deriv: &mut F,
    t: f64,
    y: &[f64; N],
    dt: f64,
) -> Result<[f64; N], IntegratorError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let next = match method {
        Method::Euler => axpy(y, dt, &deriv(t, y)),
        Method::Rk4 => {
            let half = 0.5 * dt;
            let k1 = deriv(t, y);
            let k2 = deriv(t + half, &axpy(y, half, &k1));
            let k3 = deriv(t + half, &axpy(y, half, &k2));
            let k4 = deriv(t + dt, &axpy(y, dt, &k3));
            std::array::from_fn(|i| {
                y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            })
        }
    };
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(IntegratorError::NonFiniteState { t: t + dt })
    }
}

/// Integrates from `t = 0` to `cfg.t_end`, calling `observer(t, y)` after
/// every step.
pub fn integrate<const N: usize, F, O>(
    mut deriv: F,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    mut observer: O,
) -> Result<[f64; N], IntegratorError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]),
{
    cfg.validate()?;
    let mut y = y0;
    for k in 0..cfg.steps() {
        let t = cfg.time_at(k);
        y = step(cfg.method, &mut deriv, t, &y, cfg.dt)?;
        observer(cfg.time_at(k + 1), &y);
    }
    Ok(y)
}
