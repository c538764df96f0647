//! Thin wrapper around `microlp` for the small linear programs used by the
//! geometry module (Chebyshev centres, implicit feasibility, preimages).

use microlp::{ComparisonOp, OptimizationDirection, Problem};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("linear program solver failure: {0}")]
    Solver(String),
}

#[derive(Debug, Clone, Copy)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Dense LP: optimise `c·x` subject to row constraints and variable bounds.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    maximize: bool,
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { maximize: true, objective, bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n], rows: Vec::new() }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self { maximize: false, ..Self::maximize(objective) }
    }

    pub fn bound(mut self, var: usize, lo: f64, hi: f64) -> Self {
        self.bounds[var] = (lo, hi);
        self
    }

    pub fn constraint(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.rows.push((coeffs, sense, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let dir = if self.maximize { OptimizationDirection::Maximize } else { OptimizationDirection::Minimize };
        let mut p = Problem::new(dir);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &b)| p.add_var(c, b))
            .collect();
        for (coeffs, sense, rhs) in &self.rows {
            let terms: Vec<_> = vars
                .iter()
                .zip(coeffs)
                .filter(|(_, c)| **c != 0.0)
                .map(|(v, c)| (*v, *c))
                .collect();
            let op = match sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Ge => ComparisonOp::Ge,
                Sense::Eq => ComparisonOp::Eq,
            };
            if terms.is_empty() {
                let ok = match sense {
                    Sense::Le => 0.0 <= *rhs,
                    Sense::Ge => 0.0 >= *rhs,
                    Sense::Eq => *rhs == 0.0,
                };
                if !ok {
                    return Err(LpError::Infeasible);
                }
                continue;
            }
            p.add_constraint(terms.as_slice(), op, *rhs);
        }
        let outcome = p.solve().map_err(|e| match e {
            microlp::Error::Infeasible => LpError::Infeasible,
            microlp::Error::Unbounded => LpError::Unbounded,
            other => LpError::Solver(other.to_string()),
        })?;
        let sol = outcome
            .into_solution()
            .map_err(|_| LpError::Solver("interrupted".into()))?;
        Ok(LpSolution { x: vars.iter().map(|&v| sol.var_value(v)).collect(), objective: sol.objective() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_max() {
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]).bound(0, 0.0, 2.0).bound(1, 0.0, 3.0);
        lp.constraint(vec![1.0, 1.0], Sense::Le, 4.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 4.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.constraint(vec![1.0], Sense::Ge, 2.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
        lp.constraint(vec![1.0], Sense::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Infeasible);
    }
}
