//! Tabular report rows with optional tolerance verdicts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::relative_deviation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Tolerance {
    Exact,
    Absolute {
        max: f64,
    },
    /// Relative to |expected|.
    Relative {
        max: f64,
    },
    /// Value must lie in [lo, hi].
    Range {
        lo: f64,
        hi: f64,
    },
}

impl Tolerance {
    pub fn accepts(&self, expected: f64, actual: f64) -> bool {
        match *self {
            Tolerance::Exact => expected == actual,
            Tolerance::Absolute { max } => (actual - expected).abs() <= max,
            Tolerance::Relative { max } => (actual - expected).abs() <= max * expected.abs(),
            Tolerance::Range { lo, hi } => (lo..=hi).contains(&actual),
        }
    }

    /// Within a factor `k` of `expected`.
    pub fn factor(expected: f64, k: f64) -> Self {
        let (a, b) = (expected / k, expected * k);
        Tolerance::Range {
            lo: a.min(b),
            hi: a.max(b),
        }
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Tolerance::Exact => f.write_str("exact"),
            Tolerance::Absolute { max } => write!(f, "±{max}"),
            Tolerance::Relative { max } => write!(f, "±{}%", 100.0 * max),
            Tolerance::Range { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub tolerance: Tolerance,
}

/// One line of a report: a reference (data) value, optionally a computed
/// (model) value, their relative deviation and a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportRow {
    pub label: String,
    pub data_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl ReportRow {
    pub fn value(label: impl Into<String>, data_value: f64) -> Self {
        ReportRow {
            label: label.into(),
            data_value,
            model_value: None,
            deviation: None,
            verdict: None,
        }
    }

    pub fn compared(label: impl Into<String>, data_value: f64, model_value: f64) -> Self {
        ReportRow {
            label: label.into(),
            data_value,
            model_value: Some(model_value),
            deviation: Some(relative_deviation(data_value, model_value)),
            verdict: None,
        }
    }

    /// Compares a computed value with a published one.
    pub fn check(label: impl Into<String>, published: f64, computed: f64, tolerance: Tolerance) -> Self {
        let mut row = ReportRow::compared(label, published, computed);
        row.verdict = Some(Verdict {
            pass: tolerance.accepts(published, computed),
            tolerance,
        });
        row
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_none_or(|v| v.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances() {
        assert!(Tolerance::Exact.accepts(3.0, 3.0));
        assert!(!Tolerance::Exact.accepts(3.0, 3.0000001));
        assert!(Tolerance::Absolute { max: 1.0 }.accepts(-24_193.0, -24_193.9));
        assert!(!Tolerance::Absolute { max: 1.0 }.accepts(-24_193.0, -24_194.1));
        assert!(Tolerance::Relative { max: 0.02 }.accepts(-120_191.0, -122_000.0));
        assert!(Tolerance::factor(0.001, 2.0).accepts(0.001, 0.0019));
        assert!(!Tolerance::factor(0.001, 2.0).accepts(0.001, 0.0021));
        assert!(Tolerance::factor(-4.0, 2.0).accepts(-4.0, -7.0));
    }

    #[test]
    fn deviation_present_iff_both_values() {
        assert!(ReportRow::value("x", 1.0).deviation.is_none());
        let r = ReportRow::compared("x", 100.0, 101.0);
        assert!((r.deviation.unwrap() - 0.01).abs() < 1e-15);
        assert!(r.passed());
        assert!(!ReportRow::check("x", 1.0, 2.0, Tolerance::Exact).passed());
    }

    #[test]
    fn json_round_trip() {
        let rows = vec![
            ReportRow::value("a", -3.5),
            ReportRow::check("b", 1e6, 1.001e6, Tolerance::Relative { max: 0.002 }),
            ReportRow::check("c", 0.18, 0.1857, Tolerance::Range { lo: 0.17, hi: 0.19 }),
        ];
        let json = serde_json::to_string(&rows).unwrap();
        let back: Vec<ReportRow> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rows);
    }
}
