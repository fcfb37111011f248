//! JSON scenario files.
//!
//! Every section and key is optional; missing values default to the first
//! load group with the standard initial gains. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "label": "group1",
//!   "params": { "m": 10, "m1": 1, "m2": 2, "l1": 0.7, "l2": 0.3, "g": 9.81 },
//!   "target": { "x_d": 0.7 },
//!   "gains": { "kp0": 1.5, "kd0": 250, "kl0": 0.01 },
//!   "integrator": { "dt": 0.001, "t_end": 15, "method": "rk4" },
//!   "controller": {
//!     "kind": "fuzzy_tuned",
//!     "fuzzy": { "enabled": true, "table_override_path": null },
//!     "pd": { "kp": 20, "kd": 32.249 }
//!   }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::ControllerGains;
use crate::dynamics::{CraneParams, CraneState, DEFAULT_GRAVITY};
use crate::fuzzy::{FuzzyRuleTable, TableParseError};
use crate::harness::{ControllerKind, PdGains, Scenario};
use crate::integrator::{IntegratorConfig, Method, MAX_DT};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("invalid value for `{field}`: {msg}")]
    Validation { field: String, msg: String },
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("rule table {}: {source}", path.display())]
    Table { path: PathBuf, source: TableParseError },
    #[error("unknown preset `{0}` (available: group1, group2, fixed, pd)")]
    UnknownPreset(String),
}

impl ScenarioError {
    fn invalid(field: &str, msg: impl Into<String>) -> Self {
        Self::Validation { field: field.to_string(), msg: msg.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub m: f64,
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub g: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        let p = CraneParams::group1();
        Self { m: p.m, m1: p.m1, m2: p.m2, l1: p.l1, l2: p.l2, g: DEFAULT_GRAVITY }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    pub x_d: f64,
}

impl Default for TargetSection {
    fn default() -> Self {
        Self { x_d: 0.7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainsSection {
    pub kp0: f64,
    pub kd0: f64,
    pub kl0: f64,
}

impl Default for GainsSection {
    fn default() -> Self {
        let g = ControllerGains::default();
        Self { kp0: g.kp, kd0: g.kd, kl0: g.kl }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let c = IntegratorConfig::default();
        Self { dt: c.dt, t_end: c.t_end, method: c.method }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzySection {
    pub enabled: bool,
    pub table_override_path: Option<PathBuf>,
}

impl Default for FuzzySection {
    fn default() -> Self {
        Self { enabled: true, table_override_path: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub kind: ControllerKind,
    pub fuzzy: FuzzySection,
    pub pd: PdGains,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            kind: ControllerKind::FuzzyTuned,
            fuzzy: FuzzySection::default(),
            pd: PdGains::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub label: String,
    pub params: ParamsSection,
    pub target: TargetSection,
    pub gains: GainsSection,
    pub integrator: IntegratorSection,
    pub controller: ControllerSection,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            label: "group1".into(),
            params: ParamsSection::default(),
            target: TargetSection::default(),
            gains: GainsSection::default(),
            integrator: IntegratorSection::default(),
            controller: ControllerSection::default(),
        }
    }
}

impl ScenarioFile {
    /// Parses without validating values.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
        let mut file = Self::parse(&text)?;
        // relative table paths are resolved against the scenario's directory
        if let (Some(p), Some(dir)) = (&file.controller.fuzzy.table_override_path, path.parent()) {
            if p.is_relative() && !dir.as_os_str().is_empty() {
                file.controller.fuzzy.table_override_path = Some(dir.join(p));
            }
        }
        Ok(file)
    }

    /// Built-in scenarios: `group1`, `group2`, `fixed` (group 1 without
    /// scheduling) and `pd` (group 1 with the PD baseline).
    pub fn preset(name: &str) -> Result<Self, ScenarioError> {
        let mut file = Self::default();
        match name {
            "group1" => {}
            "group2" => {
                let p = CraneParams::group2();
                file.label = "group2".into();
                file.params.m2 = p.m2;
                file.params.l2 = p.l2;
            }
            "fixed" => {
                file.label = "fixed_gain".into();
                file.controller.kind = ControllerKind::FixedGain;
                file.controller.fuzzy.enabled = false;
            }
            "pd" => {
                file.label = "pd_baseline".into();
                file.controller.kind = ControllerKind::PdBaseline;
                file.controller.fuzzy.enabled = false;
            }
            other => return Err(ScenarioError::UnknownPreset(other.to_string())),
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ScenarioError::invalid(field, format!("{v} must be finite and > 0")))
            }
        };
        let p = &self.params;
        positive("params.m", p.m)?;
        positive("params.m1", p.m1)?;
        positive("params.m2", p.m2)?;
        positive("params.l1", p.l1)?;
        positive("params.l2", p.l2)?;
        positive("params.g", p.g)?;
        if !self.target.x_d.is_finite() {
            return Err(ScenarioError::invalid("target.x_d", "must be finite"));
        }
        positive("gains.kp0", self.gains.kp0)?;
        positive("gains.kd0", self.gains.kd0)?;
        positive("gains.kl0", self.gains.kl0)?;
        let i = &self.integrator;
        if !(i.dt.is_finite() && i.dt > 0.0 && i.dt <= MAX_DT) {
            return Err(ScenarioError::invalid(
                "integrator.dt",
                format!("{} must lie in (0, {MAX_DT}]", i.dt),
            ));
        }
        if !(i.t_end.is_finite() && i.t_end > 0.0) {
            return Err(ScenarioError::invalid("integrator.t_end", format!("{} must be > 0", i.t_end)));
        }
        let cfg = IntegratorConfig { dt: i.dt, t_end: i.t_end, method: i.method };
        if let Err(e) = cfg.validate() {
            return Err(ScenarioError::invalid("integrator.t_end", e.to_string()));
        }
        if self.controller.kind == ControllerKind::PdBaseline {
            positive("controller.pd.kp", self.controller.pd.kp)?;
            positive("controller.pd.kd", self.controller.pd.kd)?;
        }
        Ok(())
    }

    /// Controller actually run: a fuzzy-tuned kind with the tuner disabled
    /// runs with fixed gains.
    pub fn effective_kind(&self) -> ControllerKind {
        match self.controller.kind {
            ControllerKind::FuzzyTuned if !self.controller.fuzzy.enabled => ControllerKind::FixedGain,
            k => k,
        }
    }

    pub fn load_table(&self) -> Result<FuzzyRuleTable, ScenarioError> {
        match &self.controller.fuzzy.table_override_path {
            None => Ok(FuzzyRuleTable::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| ScenarioError::Io { path: path.clone(), source })?;
                text.parse()
                    .map_err(|source| ScenarioError::Table { path: path.clone(), source })
            }
        }
    }

    /// Validates and resolves into a runnable scenario.
    pub fn to_scenario(&self) -> Result<Scenario, ScenarioError> {
        self.validate()?;
        let p = &self.params;
        let i = &self.integrator;
        Ok(Scenario {
            label: self.label.clone(),
            params: CraneParams { m: p.m, m1: p.m1, m2: p.m2, l1: p.l1, l2: p.l2, g: p.g },
            x_d: self.target.x_d,
            gains0: ControllerGains::new(self.gains.kp0, self.gains.kd0, self.gains.kl0),
            integrator: IntegratorConfig { dt: i.dt, t_end: i.t_end, method: i.method },
            kind: self.effective_kind(),
            pd: self.controller.pd,
            table: self.load_table()?,
            initial: CraneState::default(),
        })
    }
}
