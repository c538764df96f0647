//! Small dense linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Relative threshold below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-10;

pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm2(a);
    (n > 0.0 && n.is_finite()).then(|| scale(a, 1.0 / n))
}

/// Matrix from row-major nested vectors. Rows must have equal length.
pub fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

pub fn rank(m: &DMatrix<f64>) -> usize {
    let sv = singular_values(m);
    let top = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * top.max(1.0)).count()
}

/// Rank of a set of vectors of dimension `n`.
pub fn rank_of(vectors: &[Vec<f64>], n: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    rank(&matrix_from_rows(vectors, n))
}

/// Largest singular value (operator norm for ℓ₂).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Smallest singular value of an `r × c` matrix, counting min(r, c) values.
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).into_iter().fold(f64::INFINITY, f64::min)
}

/// Orthonormal basis of the span of `vectors` (Gram–Schmidt, in order).
pub fn orthonormal_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut r = v.clone();
        // two passes keep the result orthogonal to working precision
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&r, q);
                r = axpy(&r, -c, q);
            }
        }
        let scale_ref = norm2(v).max(1.0);
        if norm2(&r) > 1e-9 * scale_ref {
            basis.push(normalized(&r).expect("nonzero residual"));
        }
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of `span(vectors)` in ℝⁿ.
///
/// Built by projecting the coordinate axes e₁..eₙ in order, so coordinate
/// directions are returned verbatim whenever they already lie in the
/// complement.
pub fn orthogonal_complement(vectors: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let span = orthonormal_basis(vectors);
    let mut basis = span.clone();
    let mut out = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let mut r = e.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&r, q);
                r = axpy(&r, -c, q);
            }
        }
        if norm2(&r) > 1e-8 {
            let q = normalized(&r).expect("nonzero residual");
            // snap to the axis when the residual is the axis itself
            let q = if sub(&q, &e).iter().all(|d| d.abs() < 1e-14) { e } else { q };
            basis.push(q.clone());
            out.push(q);
        }
        if out.len() + span.len() == n {
            break;
        }
    }
    out
}

/// Basis of the null space {x : M x = 0} of an `m × n` matrix.
pub fn null_space(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = m.ncols();
    let rows: Vec<Vec<f64>> = matrix_rows(m);
    orthogonal_complement(&rows, n)
}

/// Solve a square system, `None` when singular.
pub fn solve(m: &DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let lu = m.clone().lu();
    let x = lu.solve(&DVector::from_column_slice(rhs))?;
    x.iter().all(|v| v.is_finite()).then(|| to_vec(&x))
}

pub fn inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.nrows() != m.ncols() || rank(m) < m.nrows() {
        return None;
    }
    m.clone().try_inverse()
}

/// Minimum-norm solution of an underdetermined full-row-rank system `M x = y`.
pub fn min_norm_solution(m: &DMatrix<f64>, y: &[f64]) -> Option<Vec<f64>> {
    let mmt = m * m.transpose();
    let z = solve(&mmt, y)?;
    Some(to_vec(&(m.transpose() * DVector::from_column_slice(&z))))
}

pub fn is_identity(m: &DMatrix<f64>, tol: f64) -> bool {
    m.nrows() == m.ncols()
        && (0..m.nrows()).all(|i| {
            (0..m.ncols()).all(|j| (m[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() <= tol)
        })
}

/// True when `Mᵀ M = I` within `tol`.
pub fn is_orthogonal(m: &DMatrix<f64>, tol: f64) -> bool {
    m.nrows() == m.ncols() && is_identity(&(m.transpose() * m), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_prefers_axes() {
        let c = orthogonal_complement(&[vec![1.0, 0.0, 0.0]], 3);
        assert_eq!(c, vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let c = orthogonal_complement(&[vec![-1.0, 1.0, 0.0]], 3);
        assert_eq!(c.len(), 2);
        for q in &c {
            assert!(dot(q, &[-1.0, 1.0, 0.0]).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_and_null_space() {
        let m = matrix_from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]], 3);
        assert_eq!(rank(&m), 1);
        let ns = null_space(&m);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!(mat_vec(&m, &v).iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn min_norm() {
        let m = matrix_from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 3);
        let x = min_norm_solution(&m, &[3.0, -1.0]).unwrap();
        assert_eq!(x, vec![3.0, -1.0, 0.0]);
    }
}
