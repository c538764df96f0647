//! Surjective linear maps, images of polyhedra, and the recession-cone
//! compatibility check rec(L(G)) = L(rec(G)).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{recession_cone, Cone, ConvexBody, GeometryError};
use crate::linalg::{self, mat_vec, matrix_from_rows, matrix_rows, norm2};
use crate::lp::{LinearProgram, Sense};
use crate::report::{MarginReport, WorstCase};

/// A linear map ℝⁿ → ℝᵏ of full row rank k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct LinearMap {
    matrix: DMatrix<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for LinearMap {
    type Error = GeometryError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        LinearMap::from_rows(&rows)
    }
}

impl From<LinearMap> for Vec<Vec<f64>> {
    fn from(l: LinearMap) -> Self {
        l.rows()
    }
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, GeometryError> {
        let k = matrix.nrows();
        if k == 0 || matrix.ncols() < k {
            return Err(GeometryError::Invalid(format!("{}x{} matrix cannot be surjective", k, matrix.ncols())));
        }
        if linalg::rank(&matrix) != k {
            return Err(GeometryError::NotSurjective { rank: linalg::rank(&matrix), k });
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GeometryError> {
        let n = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != n) {
            return Err(GeometryError::Invalid("linear map rows must have equal length".into()));
        }
        Self::new(matrix_from_rows(rows, n))
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n) }
    }

    /// Keep the listed coordinates, in order.
    pub fn coordinates(n: usize, keep: &[usize]) -> Result<Self, GeometryError> {
        let rows: Vec<Vec<f64>> = keep
            .iter()
            .map(|&j| {
                let mut r = vec![0.0; n];
                r[j] = 1.0;
                r
            })
            .collect();
        Self::from_rows(&rows)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.matrix)
    }

    /// Target dimension k.
    pub fn k(&self) -> usize {
        self.matrix.nrows()
    }

    /// Source dimension n.
    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn rank(&self) -> usize {
        self.k()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.matrix, x)
    }

    /// φ ∘ L as a covector on ℝⁿ.
    pub fn pull_back(&self, phi: &[f64]) -> Vec<f64> {
        mat_vec(&self.matrix.transpose(), phi)
    }

    /// Smallest β with β‖φ ∘ L‖ ≥ ‖φ‖ for all covectors φ (Euclidean norms):
    /// 1 / σ_min(Lᵀ).
    pub fn beta(&self) -> f64 {
        1.0 / linalg::min_singular_value(&self.matrix.transpose())
    }

    /// ‖ṽ‖ / ‖v‖ for a preimage ṽ of v.
    pub fn alpha(preimage: &[f64], image: &[f64]) -> f64 {
        norm2(preimage) / norm2(image)
    }

    pub fn kernel(&self) -> Vec<Vec<f64>> {
        linalg::null_space(&self.matrix)
    }

    pub fn is_identity(&self) -> bool {
        linalg::is_identity(&self.matrix, 0.0)
    }

    /// Minimum-norm x with L x = y.
    pub fn min_norm_preimage(&self, y: &[f64]) -> Vec<f64> {
        linalg::min_norm_solution(&self.matrix, y).expect("full row rank")
    }
}

/// Drop rows implied by the others and normalise the rest.
fn prune(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<(Vec<Vec<f64>>, Vec<f64>), GeometryError> {
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (r, bi) in a.into_iter().zip(b) {
        let nr = norm2(&r);
        if nr <= 1e-12 {
            if bi > 0.0 {
                continue;
            }
            return Err(GeometryError::Empty);
        }
        let r: Vec<f64> = r.iter().map(|v| v / nr).collect();
        let bi = bi / nr;
        if let Some(existing) = rows.iter_mut().find(|(q, _)| norm2(&linalg::sub(q, &r)) < 1e-10) {
            existing.1 = existing.1.min(bi);
        } else {
            rows.push((r, bi));
        }
    }
    // remove rows that are implied by the remaining ones
    let mut k = 0;
    while k < rows.len() {
        let mut lp = LinearProgram::maximize(rows[k].0.clone());
        for (j, (r, bj)) in rows.iter().enumerate() {
            if j != k {
                lp.constraint(r.clone(), Sense::Le, *bj);
            }
        }
        let redundant = matches!(lp.solve(), Ok(s) if s.objective <= rows[k].1 + 1e-9 * (1.0 + rows[k].1.abs()));
        if redundant && rows.len() > 1 {
            rows.remove(k);
        } else {
            k += 1;
        }
    }
    Ok(rows.into_iter().unzip())
}

/// Eliminate coordinate `j` from {A x < b} by Fourier–Motzkin.
fn eliminate(n: usize, a: &[Vec<f64>], b: &[f64], j: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>), GeometryError> {
    let mut out_a = Vec::new();
    let mut out_b = Vec::new();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (k, r) in a.iter().enumerate() {
        if r[j].abs() <= 1e-14 {
            let mut r = r.clone();
            r[j] = 0.0;
            out_a.push(r);
            out_b.push(b[k]);
        } else if r[j] > 0.0 {
            pos.push(k);
        } else {
            neg.push(k);
        }
    }
    for &p in &pos {
        for &q in &neg {
            let (sp, sq) = (1.0 / a[p][j], -1.0 / a[q][j]);
            let mut r: Vec<f64> = (0..n).map(|i| sp * a[p][i] + sq * a[q][i]).collect();
            r[j] = 0.0;
            out_a.push(r);
            out_b.push(sp * b[p] + sq * b[q]);
        }
    }
    prune(out_a, out_b)
}

/// L(G) for a polyhedral body G, as an H-representation in ℝᵏ.
pub fn linear_image(g: &ConvexBody, l: &LinearMap) -> Result<ConvexBody, GeometryError> {
    let n = g.dim();
    if l.n() != n {
        return Err(GeometryError::Invalid(format!("map source dimension {} != body dimension {n}", l.n())));
    }
    let (a, b) = g.to_hrep().ok_or_else(|| GeometryError::Unsupported("image of a non-polyhedral body".into()))?;
    let k = l.k();
    // complete L to an invertible T = [L; K] and write G in y = T x
    let mut t_rows = l.rows();
    t_rows.extend(l.kernel());
    let t = matrix_from_rows(&t_rows, n);
    let t_inv = linalg::inverse(&t).ok_or(GeometryError::Singular)?;
    let at = matrix_rows(&(matrix_from_rows(&a, n) * t_inv));
    let (mut ca, mut cb) = prune(at, b)?;
    for j in (k..n).rev() {
        (ca, cb) = eliminate(n, &ca, &cb, j)?;
    }
    let rows: Vec<Vec<f64>> = ca.into_iter().map(|r| r[..k].to_vec()).collect();
    ConvexBody::hrep(k, rows, cb)
}

/// Random nonnegative combination of generators (lineality included ±).
pub fn sample_cone(cone: &Cone, gens: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    if gens.is_empty() {
        return None;
    }
    let mut y = vec![0.0; cone.n];
    for g in gens {
        let c: f64 = rng.gen::<f64>();
        y = linalg::axpy(&y, c * c, g);
    }
    linalg::normalized(&y)
}

/// Sampled two-sided check of rec(L(G)) = L(rec(G)).
///
/// Margins: for y ∈ rec(G), the cone margin of L y in rec(L(G)); for
/// z ∈ rec(L(G)), 0 when some y ∈ rec(G) has L y = z and −1 otherwise.
pub fn check_rchl(g: &ConvexBody, l: &LinearMap, samples: usize, seed: u64) -> Result<MarginReport, GeometryError> {
    let rec = recession_cone(g)?;
    let n = g.dim();
    let mut ker_rows = rec.rows.clone();
    for r in l.rows() {
        ker_rows.push(linalg::scale(&r, -1.0));
        ker_rows.push(r);
    }
    let meet = Cone::new(n, ker_rows);
    if meet.dimension() > 0 {
        let w = meet.interior_direction().unwrap_or_else(|| meet.span_basis()[0].clone());
        return Err(GeometryError::KernelMeetsRecession { witness: w });
    }
    let image = linear_image(g, l)?;
    let rec_image = recession_cone(&image)?;
    let gens_g = rec.generators().ok_or_else(|| GeometryError::Unsupported("too many cone rows".into()))?;
    let gens_i = rec_image.generators().ok_or_else(|| GeometryError::Unsupported("too many cone rows".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_margin = f64::INFINITY;
    let mut worst = None;
    for i in 0..samples {
        if i % 2 == 0 {
            let Some(y) = sample_cone(&rec, &gens_g, &mut rng) else { continue };
            let ly = l.apply(&y);
            let m = rec_image.margin(&ly).max(if rec_image.contains(&ly) { 0.0 } else { -1.0 });
            if m < min_margin {
                min_margin = m;
                worst = Some(WorstCase { index: i, points: vec![y, ly], values: vec![m], lambda: None });
            }
        } else {
            let Some(z) = sample_cone(&rec_image, &gens_i, &mut rng) else { continue };
            let mut lp = LinearProgram::minimize(vec![0.0; n]);
            for j in 0..n {
                lp = lp.bound(j, -1e6, 1e6);
            }
            for r in &rec.rows {
                lp.constraint(r.clone(), Sense::Le, 0.0);
            }
            for (r, zi) in l.rows().into_iter().zip(&z) {
                lp.constraint(r, Sense::Eq, *zi);
            }
            let m = if lp.solve().is_ok() { 0.0 } else { -1.0 };
            if m < min_margin {
                min_margin = m;
                worst = Some(WorstCase { index: i, points: vec![z], values: vec![m], lambda: None });
            }
        }
    }
    if min_margin == f64::INFINITY {
        // both cones are {0}
        min_margin = 0.0;
    }
    let mut details = BTreeMap::new();
    details.insert("image_rows".into(), serde_json::json!(rec_image.rows.len()));
    details.insert("rec_dim".into(), serde_json::json!(rec.dimension()));
    details.insert("image_rec_dim".into(), serde_json::json!(rec_image.dimension()));
    let tol = 1e-9;
    Ok(MarginReport {
        check: "rchl".into(),
        n_samples: samples,
        min_margin,
        witness: worst.filter(|_| min_margin < 0.0),
        seed: Some(seed),
        tol,
        scale: 1.0,
        pass: min_margin >= -tol,
        details,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_strip_3d() -> ConvexBody {
        ConvexBody::hrep(
            3,
            vec![
                vec![-1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, -1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.0, 0.0, -1.0],
            ],
            vec![-1.0, 1.0, 1.0, 1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn beta_of_projection_and_scaling() {
        assert_eq!(LinearMap::coordinates(3, &[0, 1]).unwrap().beta(), 1.0);
        let l = LinearMap::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((l.beta() - 2.0).abs() < 1e-12);
        // β‖φ∘L‖ ≥ ‖φ‖ on a few covectors
        for phi in [[1.0, 0.0], [0.0, 1.0], [0.3, -0.7]] {
            assert!(l.beta() * norm2(&l.pull_back(&phi)) >= norm2(&phi) - 1e-12);
        }
        assert!(matches!(
            LinearMap::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]),
            Err(GeometryError::NotSurjective { .. })
        ));
    }

    #[test]
    fn image_of_half_strip_prism() {
        let g = half_strip_3d();
        let l = LinearMap::coordinates(3, &[0, 1]).unwrap();
        let img = linear_image(&g, &l).unwrap();
        for (x, inside) in [([2.0, 0.0], true), ([0.5, 0.0], false), ([100.0, 0.99], true), ([3.0, 1.01], false)] {
            assert_eq!(img.contains(&x), inside, "{x:?}");
        }
        let r = check_rchl(&g, &l, 200, 7).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn image_of_quadrant_on_line() {
        let quad = ConvexBody::hrep(2, vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0]).unwrap();
        let l = LinearMap::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let img = linear_image(&quad, &l).unwrap();
        assert!(img.contains(&[0.1]) && !img.contains(&[-0.1]) && img.contains(&[1e6]));
        let rec = recession_cone(&img).unwrap();
        assert!(rec.contains(&[1.0]) && !rec.contains(&[-1.0]));
        assert!(check_rchl(&quad, &l, 100, 1).unwrap().pass);
    }

    #[test]
    fn identity_image() {
        let g = half_strip_3d();
        let img = linear_image(&g, &LinearMap::identity(3)).unwrap();
        for x in [[2.0, 0.0, 0.5], [0.0, 0.0, 0.5], [2.0, 0.0, 1.5]] {
            assert_eq!(img.contains(&x), g.contains(&x));
        }
        assert!(check_rchl(&g, &LinearMap::identity(3), 100, 3).unwrap().pass);
    }

    #[test]
    fn kernel_condition() {
        let g = half_strip_3d();
        let l = LinearMap::coordinates(3, &[1, 2]).unwrap();
        match check_rchl(&g, &l, 10, 0) {
            Err(GeometryError::KernelMeetsRecession { witness }) => assert!(witness[0] > 0.9),
            other => panic!("{other:?}"),
        }
    }
}
