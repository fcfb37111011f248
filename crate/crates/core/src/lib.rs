//! Simulation and control of a double-pendulum overhead crane.
//!
//! * [`dynamics`]: nonlinear trolley/hook/payload plant.
//! * [`integrator`]: fixed-step RK4 and Euler.
//! * [`controller`]: composite-signal control law and its energy function.
//! * [`fuzzy`]: Mamdani scheduler for the controller gains.
//! * [`harness`]: closed-loop runs, metrics, comparisons and sweeps.
//! * [`scenario`] and [`output`]: JSON scenario files and CSV/JSON results.
//! * [`cli`]: the `crane-ctl` command set.

pub mod cli;
pub mod controller;
pub mod dynamics;
pub mod fuzzy;
pub mod harness;
pub mod integrator;
pub mod output;
pub mod scenario;

pub use controller::{ControllerGains, ControllerState, LyapunovSample};
pub use dynamics::{CraneParams, CraneState};
pub use harness::{ControllerKind, Metrics, Scenario, SimRecord};
