//! Deterministic records of sampled inequality margins.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// The sample at which the smallest margin was attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    /// Index of the sample in the sampler stream.
    pub index: usize,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

/// Outcome of a sampled check. A margin is `rhs − lhs` of the inequality
/// being tested, so nonnegative margins mean the inequality held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub check: String,
    pub n_samples: usize,
    #[serde(with = "finite_or_null")]
    pub min_margin: f64,
    pub witness: Option<WorstCase>,
    pub seed: Option<u64>,
    pub tol: f64,
    /// The pass threshold is `−tol · scale`.
    pub scale: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

impl MarginReport {
    pub fn threshold(&self) -> f64 {
        -self.tol * self.scale
    }
}

/// JSON has no infinities; an empty minimum (+∞) is written as `null`.
mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
