//! The three norms the toolkit works with, and their duals.

use std::fmt;

use serde::{Deserialize, Serialize};

/// An ℓₚ norm on ℝⁿ with p ∈ {1, 2, ∞}.
///
/// In scene files the norm is written as the index `1`, `2` or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum Norm {
    L1,
    #[default]
    L2,
    LInf,
}

impl Norm {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
            Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::LInf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// Norm of `x - y`.
    pub fn dist(self, x: &[f64], y: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.eval(&d)
    }

    /// The norm of the dual space: ℓ₁ ↔ ℓ∞, ℓ₂ ↔ ℓ₂.
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::LInf,
            Norm::L2 => Norm::L2,
            Norm::LInf => Norm::L1,
        }
    }

    /// Norm of a covector (gradient) measured as a functional on this space.
    pub fn dual_eval(self, covector: &[f64]) -> f64 {
        self.dual().eval(covector)
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::L1 => write!(f, "l1"),
            Norm::L2 => write!(f, "l2"),
            Norm::LInf => write!(f, "linf"),
        }
    }
}

impl TryFrom<serde_json::Value> for Norm {
    type Error = String;

    fn try_from(v: serde_json::Value) -> Result<Self, Self::Error> {
        match &v {
            serde_json::Value::Number(n) => match n.as_f64() {
                Some(p) if p == 1.0 => Ok(Norm::L1),
                Some(p) if p == 2.0 => Ok(Norm::L2),
                _ => Err(format!("unsupported norm index {n}; expected 1, 2 or \"inf\"")),
            },
            serde_json::Value::String(s) => match s.as_str() {
                "1" | "l1" => Ok(Norm::L1),
                "2" | "l2" => Ok(Norm::L2),
                "inf" | "linf" => Ok(Norm::LInf),
                _ => Err(format!("unsupported norm {s:?}; expected 1, 2 or \"inf\"")),
            },
            _ => Err(format!("norm must be 1, 2 or \"inf\", got {v}")),
        }
    }
}

impl From<Norm> for serde_json::Value {
    fn from(n: Norm) -> Self {
        match n {
            Norm::L1 => serde_json::json!(1),
            Norm::L2 => serde_json::json!(2),
            Norm::LInf => serde_json::json!("inf"),
        }
    }
}
