//! Seven-by-seven rule base for the gain increments.
//!
//! Rows are indexed by the displacement-error rate, columns by the
//! displacement error `x - x_d`. Each cell holds the consequent labels for
//! `(dKp, dKd, dKl)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::FuzzyLabel;

/// Consequent labels of one rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Consequent {
    pub kp: FuzzyLabel,
    pub kd: FuzzyLabel,
    pub kl: FuzzyLabel,
}

impl Consequent {
    pub fn get(&self, output: usize) -> FuzzyLabel {
        match output {
            0 => self.kp,
            1 => self.kd,
            2 => self.kl,
            _ => panic!("consequent index {output} out of range"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate rule for cell ({row}, {col})")]
    Duplicate { line: usize, row: FuzzyLabel, col: FuzzyLabel },
    #[error("rule table incomplete: {missing} of 49 cells missing (first: {first_row} {first_col})")]
    Incomplete { missing: usize, first_row: FuzzyLabel, first_col: FuzzyLabel },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FuzzyRuleTable {
    cells: [[Consequent; 7]; 7],
}

use FuzzyLabel::{NB, NM, NS, PB, PM, PS, ZE};

const fn c(kp: FuzzyLabel, kd: FuzzyLabel, kl: FuzzyLabel) -> Consequent {
    Consequent { kp, kd, kl }
}

#[rustfmt::skip]
const DEFAULT_CELLS: [[Consequent; 7]; 7] = [
    // col:  NB              NM              NS              ZE              PS              PM              PB
    /* NB */ [c(PB, PS, NB), c(PB, PS, NB), c(PM, ZE, PB), c(PM, ZE, ZE), c(PS, ZE, PB), c(PS, PB, NB), c(ZE, PB, NB)],
    /* NM */ [c(PB, NS, NB), c(PB, NS, NB), c(PM, NS, PB), c(PM, NS, ZE), c(PS, ZE, PB), c(ZE, NS, NB), c(ZE, PM, NB)],
    /* NS */ [c(PM, NB, NB), c(PM, NB, NB), c(PM, NM, PB), c(PS, NS, ZE), c(ZE, ZE, PB), c(NS, PS, NB), c(NM, PM, NB)],
    /* ZE */ [c(PM, NB, NB), c(PS, NM, NB), c(PS, NM, PB), c(ZE, NS, ZE), c(NS, ZE, PB), c(NM, PS, NB), c(NM, PM, NB)],
    /* PS */ [c(PS, NB, NB), c(PS, NM, NB), c(ZE, NS, PB), c(NS, NS, ZE), c(NS, ZE, PB), c(NM, PS, NB), c(NM, PS, NB)],
    /* PM */ [c(ZE, NM, NB), c(ZE, NS, NB), c(NS, NS, PB), c(NM, NS, ZE), c(NM, ZE, PB), c(NM, PS, NB), c(NB, PS, NB)],
    /* PB */ [c(ZE, PS, NB), c(NS, ZE, NB), c(NS, ZE, PB), c(NM, ZE, ZE), c(NM, ZE, PB), c(NB, PB, NB), c(NB, PB, NB)],
];

impl Default for FuzzyRuleTable {
    fn default() -> Self {
        Self { cells: DEFAULT_CELLS }
    }
}

impl FuzzyRuleTable {
    pub fn from_cells(cells: [[Consequent; 7]; 7]) -> Self {
        Self { cells }
    }

    pub fn rule(&self, row: FuzzyLabel, col: FuzzyLabel) -> Consequent {
        self.cells[row.index()][col.index()]
    }

    pub fn cell(&self, row: usize, col: usize) -> Consequent {
        self.cells[row][col]
    }

    /// Swaps the roles of the row and column inputs.
    pub fn transposed(&self) -> Self {
        Self { cells: std::array::from_fn(|r| std::array::from_fn(|c| self.cells[c][r])) }
    }
}

/// One rule per line: `row col kp kd kl`, row-major.
impl fmt::Display for FuzzyRuleTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in FuzzyLabel::ALL {
            for col in FuzzyLabel::ALL {
                let r = self.rule(row, col);
                writeln!(f, "{row} {col} {} {} {}", r.kp, r.kd, r.kl)?;
            }
        }
        Ok(())
    }
}

/// Parses the override format written by `Display`. Blank lines and
/// `#` comments are ignored; every one of the 49 cells must appear once.
impl FromStr for FuzzyRuleTable {
    type Err = TableParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut cells: [[Option<Consequent>; 7]; 7] = [[None; 7]; 7];
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(TableParseError::Syntax {
                    line,
                    msg: format!("expected 5 labels `row col kp kd kl`, found {}", fields.len()),
                });
            }
            let mut labels = [ZE; 5];
            for (slot, field) in labels.iter_mut().zip(&fields) {
                *slot = field
                    .parse()
                    .map_err(|msg: String| TableParseError::Syntax { line, msg })?;
            }
            let [row, col, kp, kd, kl] = labels;
            let cell = &mut cells[row.index()][col.index()];
            if cell.is_some() {
                return Err(TableParseError::Duplicate { line, row, col });
            }
            *cell = Some(Consequent { kp, kd, kl });
        }

        let missing: Vec<(usize, usize)> = (0..7)
            .flat_map(|r| (0..7).map(move |c| (r, c)))
            .filter(|&(r, c)| cells[r][c].is_none())
            .collect();
        if let Some(&(r, c)) = missing.first() {
            return Err(TableParseError::Incomplete {
                missing: missing.len(),
                first_row: FuzzyLabel::ALL[r],
                first_col: FuzzyLabel::ALL[c],
            });
        }
        Ok(Self {
            cells: std::array::from_fn(|r| std::array::from_fn(|c| cells[r][c].unwrap())),
        })
    }
}
