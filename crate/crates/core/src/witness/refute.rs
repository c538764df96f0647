//! Escalating refutation of a derivative modulus D·ω along a witness ray.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Witness, WitnessError};
use crate::linalg;

/// Smallest ray parameter on the search grid.
const T_MIN: f64 = 1e-3;
/// Ratio between consecutive grid parameters.
pub const GRID_RATIO: f64 = 1.01;

/// A pair of ray parameters whose gradient gap exceeds D·ω(|t₂ − t₁|).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t1: f64,
    pub t2: f64,
    pub gap: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefutationEntry {
    pub d: f64,
    /// None when no violation was found below the t ceiling.
    pub violation: Option<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefutationReport {
    pub schedule: Vec<f64>,
    pub pairs: Vec<RefutationEntry>,
    pub t_ceiling: f64,
    pub grid_ratio: f64,
    /// Requested D values beyond the witness type's reach, if any were dropped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ceiling_reason: Option<String>,
    pub largest_defeated: Option<f64>,
    pub undefeated: Vec<f64>,
    pub verdict: String,
}

impl RefutationReport {
    pub fn all_defeated(&self) -> bool {
        self.undefeated.is_empty()
    }

    /// Recompute every recorded violation from the witness.
    pub fn verify(&self, w: &Witness) -> Result<bool, WitnessError> {
        for e in &self.pairs {
            if let Some(v) = &e.violation {
                let gap = gap_between(w, v.t1, v.t2);
                let bound = e.d * w.modulus.eval((v.t2 - v.t1).abs())?;
                if !(gap > bound) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// 1, 2, 4, … up to `dmax`.
pub fn power_schedule(dmax: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut d = 1.0;
    while d <= dmax {
        out.push(d);
        d *= 2.0;
    }
    out
}

/// Gradient at a + t v. The ray lies in the body because v is a recession
/// direction, but far out rounding can push a slanted ray point across the
/// boundary, so the formula is evaluated without the membership test.
fn ray_gradient(w: &Witness, t: f64) -> Vec<f64> {
    w.field.expr().eval_grad(&w.ray.point(t)).1
}

fn gap_between(w: &Witness, t1: f64, t2: f64) -> f64 {
    linalg::norm2(&linalg::sub(&ray_gradient(w, t2), &ray_gradient(w, t1)))
}

/// `count` geometrically spaced ray parameters from the grid start to `t_end`.
pub fn log_ray_grid(t_end: f64, count: usize) -> Vec<f64> {
    crate::modulus::log_grid(T_MIN, t_end.max(T_MIN * 10.0), count)
}

/// ‖∇f(a + t v) − ∇f(a)‖ along the witness ray.
pub fn ray_gap(w: &Witness, t: f64) -> f64 {
    gap_between(w, 0.0, t)
}

/// For each D, the first grid parameter t with
/// ‖∇f(a + t v) − ∇f(a)‖ > D·ω(t), searched geometrically up to `t_ceiling`.
pub fn refute_c1omega(w: &Witness, schedule: &[f64], t_ceiling: f64) -> Result<RefutationReport, WitnessError> {
    let count = ((t_ceiling / T_MIN).ln() / GRID_RATIO.ln()).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=count).map(|k| (T_MIN * GRID_RATIO.powi(k as i32)).min(t_ceiling)).collect();
    if let Some(t) = w.ray_escape() {
        return Err(WitnessError::Precondition { reason: "the ray leaves the body".into(), point: Some(w.ray.point(t)) });
    }
    let rows: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&t| Ok((gap_between(w, 0.0, t), w.modulus.eval(t)?)))
        .collect::<Result<_, WitnessError>>()?;
    let mut pairs = Vec::with_capacity(schedule.len());
    for &d in schedule {
        let violation = grid
            .iter()
            .zip(&rows)
            .find(|(_, (gap, om))| *gap > d * om)
            .map(|(&t, &(gap, om))| Violation { t1: 0.0, t2: t, gap, bound: d * om });
        pairs.push(RefutationEntry { d, violation });
    }
    let largest_defeated = pairs.iter().filter(|e| e.violation.is_some()).map(|e| e.d).fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
    let undefeated: Vec<f64> = pairs.iter().filter(|e| e.violation.is_none()).map(|e| e.d).collect();
    let verdict = match (largest_defeated, undefeated.first()) {
        (Some(d), None) => format!("refuted up to D_max = {d}"),
        (Some(d), Some(u)) => format!("refuted up to D = {d}; undefeated at D = {u} below t = {t_ceiling:e}"),
        (None, Some(u)) => format!("undefeated at D = {u} below t = {t_ceiling:e}"),
        (None, None) => "empty schedule".into(),
    };
    Ok(RefutationReport {
        schedule: schedule.to_vec(),
        pairs,
        t_ceiling,
        grid_ratio: GRID_RATIO,
        ceiling_reason: None,
        largest_defeated,
        undefeated,
        verdict,
    })
}

/// Refute D = 1, 2, 4, … ≤ `dmax`, truncated at the witness type's ceiling.
pub fn refute_up_to(w: &Witness, dmax: f64) -> Result<RefutationReport, WitnessError> {
    let cap = w.kind.d_ceiling();
    let mut report = refute_c1omega(w, &power_schedule(dmax.min(cap)), w.kind.t_ceiling())?;
    if dmax > cap {
        report.ceiling_reason = Some(format!(
            "schedule capped at D = {cap}: violations for this witness type need t beyond {:e}",
            w.kind.t_ceiling()
        ));
    }
    Ok(report)
}
