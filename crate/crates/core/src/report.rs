//! Reports shared across modules.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// A fitted quantity compared against a declared bound.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EstimateReport {
    pub name: String,
    /// Symbolic form of the bound being tested.
    pub target: String,
    /// Pointwise quantity actually measured when the claim is operator-level.
    pub surrogate: Option<String>,
    pub window: (f64, f64),
    pub fitted: f64,
    pub claimed: f64,
    pub tolerance: f64,
    pub constant: Option<f64>,
    pub scatter: f64,
    pub verdict: Verdict,
    pub details: Vec<(String, f64)>,
}

impl EstimateReport {
    pub fn new(name: impl Into<String>, target: impl Into<String>) -> Self {
        EstimateReport {
            name: name.into(),
            target: target.into(),
            surrogate: None,
            window: (0.0, 0.0),
            fitted: f64::NAN,
            claimed: f64::NAN,
            tolerance: 0.0,
            constant: None,
            scatter: 0.0,
            verdict: Verdict::Inconclusive,
            details: Vec::new(),
        }
    }

    pub fn detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.push((key.into(), value));
        self
    }
}

impl std::fmt::Display for EstimateReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} [{}]: fitted {:.4} vs claimed {:.4} (tol {}) on [{:.3e}, {:.3e}], scatter {:.2e}",
            self.name, self.verdict, self.fitted, self.claimed, self.tolerance, self.window.0, self.window.1, self.scatter
        )?;
        for (k, v) in &self.details {
            write!(f, ", {k}={v:.4e}")?;
        }
        Ok(())
    }
}
