//! Mamdani gain scheduler.
//!
//! Both inputs are clamped to their domains, normalized to `[-1, 1]` and
//! fuzzified with seven uniform triangles. Rules fire with `min`, consequents
//! aggregate with `max`, and each output is the strength-weighted average of
//! its label centres mapped affinely onto the output domain. The scheduled
//! gain is the initial gain plus that increment.

mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerGains;

pub use table::{Consequent, FuzzyRuleTable, TableParseError};

/// Scheduled gains never drop below this fraction of their initial value.
pub const GAIN_FLOOR_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FuzzyLabel {
    NB,
    NM,
    NS,
    ZE,
    PS,
    PM,
    PB,
}

impl FuzzyLabel {
    pub const ALL: [FuzzyLabel; 7] = [
        FuzzyLabel::NB,
        FuzzyLabel::NM,
        FuzzyLabel::NS,
        FuzzyLabel::ZE,
        FuzzyLabel::PS,
        FuzzyLabel::PM,
        FuzzyLabel::PB,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Peak position in thirds of the normalized universe, `-3..=3`.
    pub fn offset(self) -> i32 {
        self as i32 - 3
    }

    /// Peak position on the normalized universe `[-1, 1]`.
    pub fn center(self) -> f64 {
        f64::from(self.offset()) / 3.0
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FuzzyLabel::NB => "NB",
            FuzzyLabel::NM => "NM",
            FuzzyLabel::NS => "NS",
            FuzzyLabel::ZE => "ZE",
            FuzzyLabel::PS => "PS",
            FuzzyLabel::PM => "PM",
            FuzzyLabel::PB => "PB",
        }
    }
}

impl fmt::Display for FuzzyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FuzzyLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FuzzyLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown fuzzy label `{s}` (expected one of NB NM NS ZE PS PM PB)"))
    }
}

/// Closed interval `(lo, hi)` of a fuzzy variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn symmetric(half_width: f64) -> Self {
        Self { lo: -half_width, hi: half_width }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    /// Clamp into the range and map onto `[-1, 1]`.
    pub fn normalize(&self, v: f64) -> f64 {
        let half = 0.5 * self.width();
        let mid = 0.5 * (self.lo + self.hi);
        ((v.clamp(self.lo, self.hi) - mid) / half).clamp(-1.0, 1.0)
    }

    /// Map a weighted label offset (in thirds) back onto the range.
    fn denormalize_thirds(&self, thirds: f64) -> f64 {
        let half = 0.5 * self.width();
        let mid = 0.5 * (self.lo + self.hi);
        // rounding at the shoulders can land one ulp outside
        (mid + thirds * half / 3.0).clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyDomains {
    /// Displacement error `x - x_d` (m).
    pub e: Range,
    /// Displacement error rate (m/s).
    pub e_dot: Range,
    pub dkp: Range,
    pub dkd: Range,
    pub dkl: Range,
}

impl Default for FuzzyDomains {
    fn default() -> Self {
        Self {
            e: Range::symmetric(1.0),
            e_dot: Range::symmetric(0.5),
            dkp: Range::symmetric(0.25),
            dkd: Range::symmetric(10.0),
            dkl: Range::symmetric(0.05),
        }
    }
}

impl FuzzyDomains {
    pub fn output(&self, k: usize) -> Range {
        [self.dkp, self.dkd, self.dkl][k]
    }
}

/// Degrees of membership in each of the seven labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Memberships(pub [f64; 7]);

impl Memberships {
    pub fn degree(&self, label: FuzzyLabel) -> f64 {
        self.0[label.index()]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Triangular memberships of a normalized input. At most two adjacent
/// labels are non-zero and they sum to one.
pub fn fuzzify(value: f64) -> Memberships {
    let v = if value.is_nan() { 0.0 } else { value.clamp(-1.0, 1.0) };
    let pos = (v + 1.0) * 3.0;
    let lower = (pos.floor() as usize).min(5);
    let frac = pos - lower as f64;
    let mut mu = [0.0; 7];
    mu[lower] = 1.0 - frac;
    mu[lower + 1] = frac;
    Memberships(mu)
}

/// Crisp increments for `(Kp, Kd, Kl)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GainDeltas {
    pub kp: f64,
    pub kd: f64,
    pub kl: f64,
}

/// Fires every rule of `table`; rows take `row_mu`, columns `col_mu`.
pub fn infer(
    table: &FuzzyRuleTable,
    domains: &FuzzyDomains,
    row_mu: &Memberships,
    col_mu: &Memberships,
) -> GainDeltas {
    let mut aggregated = [[0.0f64; 7]; 3];
    for (r, &mr) in row_mu.0.iter().enumerate() {
        if mr <= 0.0 {
            continue;
        }
        for (c, &mc) in col_mu.0.iter().enumerate() {
            let strength = mr.min(mc);
            if strength <= 0.0 {
                continue;
            }
            let rule = table.cell(r, c);
            for (k, agg) in aggregated.iter_mut().enumerate() {
                let slot = &mut agg[rule.get(k).index()];
                *slot = slot.max(strength);
            }
        }
    }

    let crisp = |k: usize| {
        let agg = &aggregated[k];
        let total: f64 = agg.iter().sum();
        if total <= 0.0 {
            return domains.output(k).denormalize_thirds(0.0);
        }
        let weighted: f64 = FuzzyLabel::ALL
            .iter()
            .map(|l| agg[l.index()] * f64::from(l.offset()))
            .sum();
        domains.output(k).denormalize_thirds(weighted / total)
    };
    GainDeltas { kp: crisp(0), kd: crisp(1), kl: crisp(2) }
}

/// Which gains hit their lower floor in one update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClampFlags {
    pub kp: bool,
    pub kd: bool,
    pub kl: bool,
}

impl ClampFlags {
    pub fn count(&self) -> usize {
        usize::from(self.kp) + usize::from(self.kd) + usize::from(self.kl)
    }

    pub fn any(&self) -> bool {
        self.count() > 0
    }
}

pub fn gain_floor(initial: f64) -> f64 {
    GAIN_FLOOR_FRACTION * initial
}

/// Offsets the initial gains by `deltas`, flooring each at
/// [`GAIN_FLOOR_FRACTION`] of its initial value.
pub fn update_gains(base: &ControllerGains, deltas: &GainDeltas) -> (ControllerGains, ClampFlags) {
    let apply = |k0: f64, dk: f64| {
        let floor = gain_floor(k0);
        let k = k0 + dk;
        if k < floor {
            (floor, true)
        } else {
            (k, false)
        }
    };
    let (kp, cp) = apply(base.kp, deltas.kp);
    let (kd, cd) = apply(base.kd, deltas.kd);
    let (kl, cl) = apply(base.kl, deltas.kl);
    (ControllerGains { kp, kd, kl }, ClampFlags { kp: cp, kd: cd, kl: cl })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedGains {
    pub gains: ControllerGains,
    pub deltas: GainDeltas,
    pub clamped: ClampFlags,
}

/// Rule table, domains and initial gains bundled for per-step use.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyTuner {
    pub table: FuzzyRuleTable,
    pub domains: FuzzyDomains,
    pub base: ControllerGains,
}

impl FuzzyTuner {
    pub fn new(base: ControllerGains) -> Self {
        Self { table: FuzzyRuleTable::default(), domains: FuzzyDomains::default(), base }
    }

    pub fn with_table(mut self, table: FuzzyRuleTable) -> Self {
        self.table = table;
        self
    }

    /// Increments for displacement error `e = x - x_d` and its rate.
    pub fn deltas(&self, e: f64, e_dot: f64) -> GainDeltas {
        let col_mu = fuzzify(self.domains.e.normalize(e));
        let row_mu = fuzzify(self.domains.e_dot.normalize(e_dot));
        infer(&self.table, &self.domains, &row_mu, &col_mu)
    }

    pub fn tune(&self, e: f64, e_dot: f64) -> TunedGains {
        let deltas = self.deltas(e, e_dot);
        let (gains, clamped) = update_gains(&self.base, &deltas);
        TunedGains { gains, deltas, clamped }
    }
}
