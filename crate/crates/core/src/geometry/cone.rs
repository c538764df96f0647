//! Closed polyhedral cones {y : A y ≤ 0}.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, dot, matrix_from_rows, norm2, normalized, null_space, orthonormal_basis};
use crate::lp::{LinearProgram, Sense};

/// Relative tolerance for cone membership.
pub const CONE_TOL: f64 = 1e-9;

/// Above this many candidate row subsets ray enumeration is skipped.
const MAX_SUBSETS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub n: usize,
    /// Rows aᵢ of the description aᵢ·y ≤ 0.
    pub rows: Vec<Vec<f64>>,
}

impl Cone {
    pub fn new(n: usize, rows: Vec<Vec<f64>>) -> Self {
        let rows = rows.into_iter().filter(|r| norm2(r) > 0.0).collect();
        Self { n, rows }
    }

    pub fn zero(n: usize) -> Self {
        let rows = (0..n)
            .flat_map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                let mut m = e.clone();
                m[i] = -1.0;
                [e, m]
            })
            .collect();
        Self { n, rows }
    }

    pub fn whole(n: usize) -> Self {
        Self { n, rows: Vec::new() }
    }

    /// The ray {t·d : t ≥ 0}.
    pub fn ray(d: &[f64]) -> Self {
        let n = d.len();
        let mut rows: Vec<Vec<f64>> = linalg::orthogonal_complement(&[d.to_vec()], n)
            .into_iter()
            .flat_map(|q| [q.clone(), linalg::scale(&q, -1.0)])
            .collect();
        rows.push(linalg::scale(d, -1.0));
        Self::new(n, rows)
    }

    /// Membership with tolerance relative to ‖y‖.
    pub fn contains(&self, y: &[f64]) -> bool {
        let ny = norm2(y);
        self.rows.iter().all(|r| dot(r, y) <= CONE_TOL * norm2(r) * ny)
    }

    /// Worst normalised constraint value minₖ −aₖ·y / (‖aₖ‖‖y‖); ≥ 0 inside.
    pub fn margin(&self, y: &[f64]) -> f64 {
        let ny = norm2(y);
        if ny == 0.0 {
            return 0.0;
        }
        self.rows.iter().map(|r| -dot(r, y) / (norm2(r) * ny)).fold(f64::INFINITY, f64::min)
    }

    /// Intersection with another cone in the same space.
    pub fn intersect(&self, other: &Cone) -> Cone {
        Cone::new(self.n, self.rows.iter().chain(&other.rows).cloned().collect())
    }

    /// Orthonormal basis of the largest linear subspace in the cone.
    pub fn lineality_basis(&self) -> Vec<Vec<f64>> {
        if self.rows.is_empty() {
            return linalg::orthogonal_complement(&[], self.n);
        }
        null_space(&matrix_from_rows(&self.rows, self.n))
    }

    pub fn is_pointed(&self) -> bool {
        self.lineality_basis().is_empty()
    }

    /// Indices of rows with aₖ·y = 0 on the whole cone.
    pub fn implicit_equalities(&self) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&k| {
                let mut lp = LinearProgram::maximize(linalg::scale(&self.rows[k], -1.0));
                for j in 0..self.n {
                    lp = lp.bound(j, -1.0, 1.0);
                }
                for r in &self.rows {
                    lp.constraint(r.clone(), Sense::Le, 0.0);
                }
                match lp.solve() {
                    Ok(s) => s.objective <= 1e-12 * norm2(&self.rows[k]),
                    Err(_) => true,
                }
            })
            .collect()
    }

    /// Dimension of the linear span of the cone.
    pub fn dimension(&self) -> usize {
        let eq: Vec<Vec<f64>> = self.implicit_equalities().into_iter().map(|k| self.rows[k].clone()).collect();
        self.n - linalg::rank_of(&eq, self.n)
    }

    /// Orthonormal basis of the linear span of the cone.
    pub fn span_basis(&self) -> Vec<Vec<f64>> {
        let eq: Vec<Vec<f64>> = self.implicit_equalities().into_iter().map(|k| self.rows[k].clone()).collect();
        if eq.is_empty() {
            return linalg::orthogonal_complement(&[], self.n);
        }
        null_space(&matrix_from_rows(&eq, self.n))
    }

    /// Unit extreme rays of the cone's pointed part C ∩ (lineality)⊥.
    /// `None` when the enumeration would be too large.
    pub fn extreme_rays(&self) -> Option<Vec<Vec<f64>>> {
        let n = self.n;
        let lineality = self.lineality_basis();
        let need = n - 1 - lineality.len().min(n - 1);
        if lineality.len() == n {
            return Some(Vec::new());
        }
        let m = self.rows.len();
        if binomial(m, need) > MAX_SUBSETS {
            return None;
        }
        let mut rays: Vec<Vec<f64>> = Vec::new();
        let mut subset: Vec<usize> = (0..need).collect();
        loop {
            if need <= m {
                let mut eqs: Vec<Vec<f64>> = lineality.clone();
                eqs.extend(subset.iter().map(|&k| self.rows[k].clone()));
                let ns = if eqs.is_empty() {
                    linalg::orthogonal_complement(&[], n)
                } else {
                    null_space(&matrix_from_rows(&eqs, n))
                };
                if ns.len() == 1 {
                    for sign in [1.0, -1.0] {
                        let d = linalg::scale(&ns[0], sign);
                        if self.contains(&d) && !rays.iter().any(|r| norm2(&linalg::sub(r, &d)) < 1e-7) {
                            rays.push(d);
                        }
                    }
                }
            }
            if !next_subset(&mut subset, m) {
                break;
            }
        }
        // canonical order for reproducible output
        rays.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| y.total_cmp(x)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
        Some(rays)
    }

    /// Generators: ± each lineality basis vector, then the extreme rays.
    pub fn generators(&self) -> Option<Vec<Vec<f64>>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for q in self.lineality_basis() {
            out.push(q.clone());
            out.push(linalg::scale(&q, -1.0));
        }
        out.extend(self.extreme_rays()?);
        Some(out)
    }

    /// A unit vector in the relative interior of the cone (sum of
    /// generators), or `None` for {0}.
    pub fn interior_direction(&self) -> Option<Vec<f64>> {
        let rays = self.extreme_rays()?;
        let mut s = vec![0.0; self.n];
        for r in &rays {
            s = linalg::axpy(&s, 1.0, r);
        }
        if let Some(v) = normalized(&s) {
            return Some(v);
        }
        self.lineality_basis().first().cloned()
    }

    /// Orthonormal basis of span(C) used for sampling.
    pub fn span_orthonormal(&self) -> Vec<Vec<f64>> {
        orthonormal_basis(&self.span_basis())
    }
}

fn binomial(m: usize, k: usize) -> usize {
    if k > m {
        return 1;
    }
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(m - i) / (i + 1);
    }
    acc
}

fn next_subset(s: &mut [usize], m: usize) -> bool {
    let k = s.len();
    if k == 0 || k > m {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if s[i] < m - k + i {
            s[i] += 1;
            for j in i + 1..k {
                s[j] = s[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(Cone::zero(2).dimension(), 0);
        assert_eq!(Cone::ray(&[0.0, 0.0, 1.0]).dimension(), 1);
        assert_eq!(Cone::new(2, vec![vec![0.0, -1.0]]).dimension(), 2);
        assert_eq!(Cone::whole(3).dimension(), 3);
        let line = Cone::new(2, vec![vec![0.0, 1.0], vec![0.0, -1.0]]);
        assert_eq!(line.dimension(), 1);
        assert!(!line.is_pointed());
    }

    #[test]
    fn rays_of_quadrant() {
        let q = Cone::new(2, vec![vec![-1.0, 0.0], vec![0.0, -1.0]]);
        let rays = q.extreme_rays().unwrap();
        assert_eq!(rays, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let v = q.interior_direction().unwrap();
        assert!((v[0] - v[1]).abs() < 1e-15);
        assert!(q.contains(&[1.0, 2.0]) && !q.contains(&[-1.0, 2.0]));
    }

    #[test]
    fn rays_in_three_dimensions() {
        // first octant: three rays
        let oct = Cone::new(3, vec![vec![-1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, -1.0]]);
        assert_eq!(oct.extreme_rays().unwrap().len(), 3);
        // half-space x₃ ≥ 0: lineality 2, one ray
        let h = Cone::new(3, vec![vec![0.0, 0.0, -1.0]]);
        assert_eq!(h.lineality_basis().len(), 2);
        assert_eq!(h.extreme_rays().unwrap(), vec![vec![0.0, 0.0, 1.0]]);
        assert_eq!(h.generators().unwrap().len(), 5);
        // zero cone has no rays
        assert!(Cone::zero(3).extreme_rays().unwrap().is_empty());
    }

    #[test]
    fn subsets() {
        let mut s = vec![0, 1];
        let mut count = 1;
        while next_subset(&mut s, 4) {
            count += 1;
        }
        assert_eq!(count, 6);
        assert_eq!(binomial(5, 2), 10);
    }
}
