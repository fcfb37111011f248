//! Closed-loop scenario runner.
//!
//! The integrated state is the plant state followed by the two swing
//! integrals of the controller, so both advance with the same RK stages.
//! Scheduled gains are evaluated once per step from the state at the start
//! of the step and held through its stages.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::controller::{self, ControllerGains, ControllerState};
use crate::dynamics::{self, CraneParams, CraneState};
use crate::fuzzy::{ClampFlags, FuzzyRuleTable, FuzzyTuner};
use crate::integrator::{self, IntegratorConfig, IntegratorError};

/// Settling band as a fraction of `|x_d|`.
pub const SETTLING_BAND: f64 = 0.02;
/// Width of the trailing window used for residual swing (s).
pub const RESIDUAL_WINDOW: f64 = 2.0;
/// Tolerance on the analytic energy derivative.
pub const V_DOT_TOL: f64 = 1e-8;
/// Allowed sample-to-sample increase of the energy function.
pub const V_INCREASE_TOL: f64 = 1e-9;
/// Relative tolerance between analytic and finite-difference `dV/dt`.
pub const FD_REL_TOL: f64 = 0.05;
/// Only samples with `|v_dot|` above this enter the finite-difference check.
pub const FD_MIN_MAGNITUDE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("simulation became unstable (non-finite state) at t = {t} s")]
    Unstable { t: f64 },
    #[error("swing angle reached the horizontal at t = {t} s (theta1 = {theta1}, theta2 = {theta2})")]
    AngleLimit { t: f64, theta1: f64, theta2: f64 },
    #[error("scenarios do not share the same plant and target: {0}")]
    MismatchedScenarios(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Composite-signal law with fuzzy-scheduled gains.
    #[default]
    FuzzyTuned,
    /// Composite-signal law with the initial gains held constant.
    FixedGain,
    /// Plain PD on trolley position, used as a comparison baseline.
    PdBaseline,
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerKind::FuzzyTuned => "fuzzy_tuned",
            ControllerKind::FixedGain => "fixed_gain",
            ControllerKind::PdBaseline => "pd_baseline",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdGains {
    pub kp: f64,
    pub kd: f64,
}

impl Default for PdGains {
    /// Critically damped on the total mass of the default plant, with a
    /// settling time close to that of the fuzzy-tuned controller.
    fn default() -> Self {
        pd_critically_damped(&CraneParams::group1(), 20.0)
    }
}

/// PD gains with `kd = 2 sqrt(kp * M_total)`.
pub fn pd_critically_damped(p: &CraneParams, kp: f64) -> PdGains {
    PdGains { kp, kd: 2.0 * (kp * p.total_mass()).sqrt() }
}

pub fn pd_baseline_force(s: &CraneState, x_d: f64, gains: &PdGains) -> f64 {
    -gains.kp * (s.x - x_d) - gains.kd * s.x_dot
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub params: CraneParams,
    pub x_d: f64,
    pub gains0: ControllerGains,
    pub integrator: IntegratorConfig,
    pub kind: ControllerKind,
    pub pd: PdGains,
    pub table: FuzzyRuleTable,
    /// Starting state; rest at the origin unless a test overrides it.
    pub initial: CraneState,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            label: "group1".into(),
            params: CraneParams::group1(),
            x_d: 0.7,
            gains0: ControllerGains::default(),
            integrator: IntegratorConfig::default(),
            kind: ControllerKind::FuzzyTuned,
            pd: PdGains::default(),
            table: FuzzyRuleTable::default(),
            initial: CraneState::default(),
        }
    }
}

impl Scenario {
    pub fn group2() -> Self {
        Self { label: "group2".into(), params: CraneParams::group2(), ..Default::default() }
    }

    pub fn with_kind(mut self, kind: ControllerKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate().map_err(|e| SimError::Invalid(e.to_string()))?;
        self.integrator.validate().map_err(|e| SimError::Invalid(e.to_string()))?;
        if !self.x_d.is_finite() {
            return Err(SimError::Invalid(format!("x_d = {} is not finite", self.x_d)));
        }
        if !self.initial.is_finite() || !self.initial.within_angle_limit() {
            return Err(SimError::Invalid("initial state must be finite with |theta| < pi/2".into()));
        }
        if !self.gains0.is_positive() {
            return Err(SimError::Invalid(format!(
                "initial gains must be positive, got {:?}",
                self.gains0
            )));
        }
        if self.kind == ControllerKind::PdBaseline && !(self.pd.kp > 0.0 && self.pd.kd > 0.0) {
            return Err(SimError::Invalid(format!("PD gains must be positive, got {:?}", self.pd)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Report `V` minus its equilibrium value.
    pub v_relative: bool,
    /// Skip the positivity check on `gains0` (used to provoke divergence).
    pub allow_nonpositive_gains: bool,
}

/// One sample of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub t: f64,
    pub state: CraneState,
    pub u: f64,
    pub gains: ControllerGains,
    pub v: f64,
    pub v_dot: f64,
    pub int_sin_theta1: f64,
    pub int_sin_theta2: f64,
    pub clamped: ClampFlags,
}

fn serialize_settling<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(t) => s.serialize_f64(*t),
        None => s.serialize_str("not settled"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// First time after which `|x - x_d|` stays within the settling band.
    #[serde(serialize_with = "serialize_settling")]
    pub settling_time: Option<f64>,
    /// Degrees.
    pub peak_theta1: f64,
    /// Degrees.
    pub peak_theta2: f64,
    /// Largest `|theta|` of either pendulum over the trailing window (deg).
    pub residual_theta: f64,
    pub steady_state_error: f64,
    pub max_u: f64,
    /// Integral of `|x - x_d|` over the run.
    pub iae: f64,
    pub clamp_events: usize,
}

impl Metrics {
    pub const NAMES: [&'static str; 8] = [
        "settling_time",
        "peak_theta1",
        "peak_theta2",
        "residual_theta",
        "steady_state_error",
        "max_u",
        "iae",
        "clamp_events",
    ];

    /// Values in [`Metrics::NAMES`] order; `None` for an unsettled run.
    pub fn values(&self) -> [Option<f64>; 8] {
        [
            self.settling_time,
            Some(self.peak_theta1),
            Some(self.peak_theta2),
            Some(self.residual_theta),
            Some(self.steady_state_error),
            Some(self.max_u),
            Some(self.iae),
            Some(self.clamp_events as f64),
        ]
    }
}

/// Numerical audit of the energy function along a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovCheck {
    pub max_v_dot: f64,
    /// Largest `v[k+1] - v[k]`.
    pub max_v_increase: f64,
    /// Samples where `|v_dot|` exceeded [`FD_MIN_MAGNITUDE`].
    pub fd_samples: usize,
    /// Of those, how many disagree with the finite difference by more than
    /// [`FD_REL_TOL`].
    pub fd_violations: usize,
    pub fd_max_rel_error: f64,
}

impl LyapunovCheck {
    pub fn v_dot_ok(&self) -> bool {
        self.max_v_dot <= V_DOT_TOL
    }

    pub fn non_increasing(&self) -> bool {
        self.max_v_increase <= V_INCREASE_TOL
    }

    pub fn matches_finite_difference(&self) -> bool {
        self.fd_violations == 0
    }

    pub fn holds(&self) -> bool {
        self.v_dot_ok() && self.non_increasing() && self.matches_finite_difference()
    }
}

/// Compares `(v[k+1] - v[k]) / dt` against the trapezoid mean of the
/// analytic derivative at both ends.
pub fn lyapunov_check(records: &[SimRecord]) -> LyapunovCheck {
    let mut check = LyapunovCheck {
        max_v_dot: records.iter().map(|r| r.v_dot).fold(f64::NEG_INFINITY, f64::max),
        max_v_increase: f64::NEG_INFINITY,
        fd_samples: 0,
        fd_violations: 0,
        fd_max_rel_error: 0.0,
    };
    for w in records.windows(2) {
        let dt = w[1].t - w[0].t;
        let dv = w[1].v - w[0].v;
        check.max_v_increase = check.max_v_increase.max(dv);
        let analytic = 0.5 * (w[0].v_dot + w[1].v_dot);
        if analytic.abs() > FD_MIN_MAGNITUDE {
            let rel = ((dv / dt) - analytic).abs() / analytic.abs();
            check.fd_samples += 1;
            check.fd_max_rel_error = check.fd_max_rel_error.max(rel);
            if rel > FD_REL_TOL {
                check.fd_violations += 1;
            }
        }
    }
    if records.len() < 2 {
        check.max_v_increase = 0.0;
    }
    check
}

pub fn compute_metrics(records: &[SimRecord], x_d: f64) -> Metrics {
    let band = SETTLING_BAND * x_d.abs();
    let err = |r: &SimRecord| (r.state.x - x_d).abs();

    let settling_time = match records.iter().rposition(|r| err(r) > band) {
        None => Some(records.first().map_or(0.0, |r| r.t)),
        Some(i) if i + 1 < records.len() => Some(records[i + 1].t),
        Some(_) => None,
    };

    let t_last = records.last().map_or(0.0, |r| r.t);
    let peak = |f: fn(&SimRecord) -> f64| records.iter().map(f).fold(0.0, f64::max).to_degrees();
    let residual_theta = records
        .iter()
        .filter(|r| r.t >= t_last - RESIDUAL_WINDOW)
        .map(|r| r.state.theta1.abs().max(r.state.theta2.abs()))
        .fold(0.0, f64::max)
        .to_degrees();

    let iae = records
        .windows(2)
        .map(|w| 0.5 * (err(&w[0]) + err(&w[1])) * (w[1].t - w[0].t))
        .sum();

    Metrics {
        settling_time,
        peak_theta1: peak(|r| r.state.theta1.abs()),
        peak_theta2: peak(|r| r.state.theta2.abs()),
        residual_theta,
        steady_state_error: records.last().map_or(0.0, err),
        max_u: records.iter().map(|r| r.u.abs()).fold(0.0, f64::max),
        iae,
        clamp_events: records.iter().map(|r| r.clamped.count()).sum(),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<SimRecord>,
    pub metrics: Metrics,
    pub lyapunov: LyapunovCheck,
}

fn split_state(y: &[f64; 8], x_d: f64) -> (CraneState, ControllerState) {
    let state = CraneState::from_array(&[y[0], y[1], y[2], y[3], y[4], y[5]]);
    let cs = ControllerState { int_sin_theta1: y[6], int_sin_theta2: y[7], x_d };
    (state, cs)
}

fn applied_force(sc: &Scenario, gains: &ControllerGains, cs: &ControllerState, s: &CraneState) -> f64 {
    match sc.kind {
        ControllerKind::PdBaseline => pd_baseline_force(s, sc.x_d, &sc.pd),
        _ => controller::control_force(&sc.params, gains, cs, s),
    }
}

fn closed_loop_derivative(sc: &Scenario, gains: &ControllerGains, y: &[f64; 8]) -> [f64; 8] {
    let (s, cs) = split_state(y, sc.x_d);
    let u = applied_force(sc, gains, &cs, &s);
    match dynamics::accelerations(&sc.params, &s, u) {
        Ok(a) => [
            s.x_dot,
            s.theta1_dot,
            s.theta2_dot,
            a.x_ddot,
            a.theta1_ddot,
            a.theta2_ddot,
            s.theta1.sin(),
            s.theta2.sin(),
        ],
        Err(_) => [f64::NAN; 8],
    }
}

pub fn run(sc: &Scenario) -> Result<RunOutput, SimError> {
    run_with(sc, &RunOptions::default())
}

pub fn run_with(sc: &Scenario, opts: &RunOptions) -> Result<RunOutput, SimError> {
    if opts.allow_nonpositive_gains {
        let probe = Scenario { gains0: ControllerGains::default(), ..sc.clone() };
        probe.validate()?;
    } else {
        sc.validate()?;
    }
    if sc.kind != ControllerKind::PdBaseline && controller::effective_mass(&sc.params) <= 0.0 {
        log::warn!(
            "m - m2*l2/l1 = {:.4} <= 0: the initial force bound no longer holds",
            controller::effective_mass(&sc.params)
        );
    }

    let tuner = FuzzyTuner::new(sc.gains0).with_table(sc.table.clone());
    let cfg = &sc.integrator;
    let steps = cfg.steps();
    let v_shift = if opts.v_relative { controller::lyapunov_offset(&sc.params) } else { 0.0 };

    let s0 = sc.initial.to_array();
    let mut y = [s0[0], s0[1], s0[2], s0[3], s0[4], s0[5], 0.0, 0.0];
    let mut records = Vec::with_capacity(steps + 1);

    for k in 0..=steps {
        let t = cfg.time_at(k);
        let (state, cs) = split_state(&y, sc.x_d);
        if !state.within_angle_limit() {
            return Err(SimError::AngleLimit { t, theta1: state.theta1, theta2: state.theta2 });
        }
        let (gains, clamped) = match sc.kind {
            ControllerKind::FuzzyTuned => {
                let tuned = tuner.tune(state.x - sc.x_d, state.x_dot);
                if tuned.clamped.any() {
                    log::debug!("t = {t:.4}: gain clamp {:?}", tuned.clamped);
                }
                (tuned.gains, tuned.clamped)
            }
            _ => (sc.gains0, ClampFlags::default()),
        };
        let u = applied_force(sc, &gains, &cs, &state);
        let lyap = controller::lyapunov(&sc.params, &gains, &cs, &state);
        records.push(SimRecord {
            t,
            state,
            u,
            gains,
            v: lyap.v - v_shift,
            v_dot: lyap.v_dot,
            int_sin_theta1: cs.int_sin_theta1,
            int_sin_theta2: cs.int_sin_theta2,
            clamped,
        });
        if k == steps {
            break;
        }
        let mut deriv = |_t: f64, y: &[f64; 8]| closed_loop_derivative(sc, &gains, y);
        y = integrator::step(cfg.method, &mut deriv, t, &y, cfg.dt).map_err(|e| match e {
            IntegratorError::NonFiniteState { t } => SimError::Unstable { t },
            other => SimError::Invalid(other.to_string()),
        })?;
    }

    let metrics = compute_metrics(&records, sc.x_d);
    let lyapunov = lyapunov_check(&records);
    Ok(RunOutput { records, metrics, lyapunov })
}

/// Finds critically damped PD gains whose settling time is closest to
/// `target` on the scenario's plant, scanning `kp` on a log grid.
pub fn tune_pd_baseline(base: &Scenario, target: f64) -> Result<(PdGains, f64), SimError> {
    let candidates: Vec<f64> = (0..=48).map(|i| 10f64.powf(i as f64 / 16.0)).collect();
    let results: Vec<(PdGains, Option<f64>)> = candidates
        .par_iter()
        .map(|&kp| {
            let pd = pd_critically_damped(&base.params, kp);
            let sc = Scenario { kind: ControllerKind::PdBaseline, pd, ..base.clone() };
            let settle = run(&sc).ok().and_then(|out| out.metrics.settling_time);
            (pd, settle)
        })
        .collect();
    results
        .into_iter()
        .filter_map(|(pd, ts)| ts.map(|ts| (pd, ts)))
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .ok_or_else(|| SimError::Invalid("no PD candidate settled".into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub kind: String,
    pub metrics: Metrics,
    /// This row minus the first row, per metric; `None` if either side is
    /// unsettled.
    pub deltas: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub settling_band: f64,
    pub residual_window_s: f64,
    pub metric_names: Vec<String>,
    pub rows: Vec<ComparisonRow>,
    /// Label of the lowest value per metric (ties go to the earliest row).
    pub winners: Vec<Option<String>>,
}

impl ComparisonReport {
    pub fn from_metrics(entries: &[(String, ControllerKind, Metrics)]) -> Self {
        let reference = entries.first().map(|e| e.2.values());
        let rows = entries
            .iter()
            .map(|(label, kind, m)| {
                let vals = m.values();
                let deltas = match &reference {
                    Some(r) => vals
                        .iter()
                        .zip(r.iter())
                        .map(|(a, b)| Some((*a)? - (*b)?))
                        .collect(),
                    None => Vec::new(),
                };
                ComparisonRow { label: label.clone(), kind: kind.to_string(), metrics: *m, deltas }
            })
            .collect::<Vec<_>>();
        let winners = (0..Metrics::NAMES.len())
            .map(|k| {
                let mut best: Option<(f64, &str)> = None;
                for row in &rows {
                    if let Some(v) = row.metrics.values()[k] {
                        if best.map_or(true, |(b, _)| v < b) {
                            best = Some((v, &row.label));
                        }
                    }
                }
                best.map(|(_, l)| l.to_string())
            })
            .collect();
        Self {
            settling_band: SETTLING_BAND,
            residual_window_s: RESIDUAL_WINDOW,
            metric_names: Metrics::NAMES.iter().map(|s| s.to_string()).collect(),
            rows,
            winners,
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "not settled".to_string(), |v| format!("{v:.6}"))
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# settling band {:.0}% of x_d, residual swing over final {} s; deltas relative to `{}`",
            self.settling_band * 100.0,
            self.residual_window_s,
            self.rows.first().map_or("", |r| r.label.as_str())
        )?;
        write!(f, "{:<20}", "metric")?;
        for row in &self.rows {
            write!(f, " {:>16} {:>16}", row.label, "delta")?;
        }
        writeln!(f, " {:>16}", "winner")?;
        for (k, name) in self.metric_names.iter().enumerate() {
            write!(f, "{name:<20}")?;
            for row in &self.rows {
                let d = row.deltas.get(k).copied().flatten();
                write!(f, " {:>16} {:>16}", fmt_opt(row.metrics.values()[k]), fmt_opt(d))?;
            }
            writeln!(f, " {:>16}", self.winners[k].as_deref().unwrap_or("-"))?;
        }
        Ok(())
    }
}

/// Runs every scenario (in parallel) and tabulates their metrics.
pub fn compare(scenarios: &[Scenario]) -> Result<(ComparisonReport, Vec<RunOutput>), SimError> {
    if scenarios.len() < 2 {
        return Err(SimError::Invalid("compare needs at least two scenarios".into()));
    }
    let first = &scenarios[0];
    for sc in &scenarios[1..] {
        if sc.params != first.params || sc.x_d != first.x_d {
            return Err(SimError::MismatchedScenarios(format!(
                "`{}` differs from `{}`",
                sc.label, first.label
            )));
        }
    }
    let outputs = scenarios.par_iter().map(run).collect::<Result<Vec<_>, _>>()?;
    let entries: Vec<_> = scenarios
        .iter()
        .zip(&outputs)
        .map(|(sc, out)| (sc.label.clone(), sc.kind, out.metrics))
        .collect();
    Ok((ComparisonReport::from_metrics(&entries), outputs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    M2,
    L2,
    L1,
    M1,
    Xd,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] =
        [SweepAxis::M2, SweepAxis::L2, SweepAxis::L1, SweepAxis::M1, SweepAxis::Xd];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::M2 => "m2",
            SweepAxis::L2 => "l2",
            SweepAxis::L1 => "l1",
            SweepAxis::M1 => "m1",
            SweepAxis::Xd => "x_d",
        }
    }

    pub fn apply(self, base: &Scenario, value: f64) -> Scenario {
        let mut sc = base.clone();
        match self {
            SweepAxis::M2 => sc.params.m2 = value,
            SweepAxis::L2 => sc.params.l2 = value,
            SweepAxis::L1 => sc.params.l1 = value,
            SweepAxis::M1 => sc.params.m1 = value,
            SweepAxis::Xd => sc.x_d = value,
        }
        sc.label = format!("{}={value}", self.name());
        sc
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = if s == "xd" { "x_d" } else { s };
        SweepAxis::ALL.into_iter().find(|a| a.name() == wanted).ok_or_else(|| {
            let valid: Vec<_> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
            format!("unknown sweep axis `{s}`; valid axes: {}", valid.join(", "))
        })
    }
}

/// Parses a comma-separated list of finite numbers.
pub fn parse_values(list: &str) -> Result<Vec<f64>, String> {
    let values = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{s}` is not a finite number"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("value list is empty".into());
    }
    Ok(values)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<(Metrics, LyapunovCheck), SimError>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn succeeded(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_ok()).count()
    }
}

/// One run per value; failures are kept per row.
pub fn sweep(base: &Scenario, axis: SweepAxis, values: &[f64]) -> SweepTable {
    let rows = values
        .par_iter()
        .map(|&value| SweepRow {
            value,
            outcome: run(&axis.apply(base, value)).map(|out| (out.metrics, out.lyapunov)),
        })
        .collect();
    SweepTable { axis, rows }
}
