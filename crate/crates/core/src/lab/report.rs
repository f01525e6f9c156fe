use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skipped => "SKIPPED",
        })
    }
}

/// One verification record: `name statistic tolerance outcome`.
///
/// Renders as a single line:
/// `check=<name> statistic=<x> tolerance=<t> result=<PASS|FAIL|SKIPPED> note="<text>"`
/// with floats in 17 significant digits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub statistic: f64,
    pub tolerance: f64,
    pub outcome: Outcome,
    pub note: String,
}

impl CheckRecord {
    /// Passes when `statistic <= tolerance`.
    pub fn at_most(name: impl Into<String>, statistic: f64, tolerance: f64, note: impl Into<String>) -> Self {
        let outcome = if statistic <= tolerance {
            Outcome::Pass
        } else {
            Outcome::Fail
        };
        Self {
            name: name.into(),
            statistic,
            tolerance,
            outcome,
            note: note.into(),
        }
    }

    pub fn skipped(name: impl Into<String>, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            statistic: f64::NAN,
            tolerance: f64::NAN,
            outcome: Outcome::Skipped,
            note: note.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome != Outcome::Fail
    }
}

impl fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "check={} statistic={:.16e} tolerance={:.16e} result={} note=\"{}\"",
            self.name,
            self.statistic,
            self.tolerance,
            self.outcome,
            self.note.replace('"', "'")
        )
    }
}
