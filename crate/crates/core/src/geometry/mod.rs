//! Open convex bodies, their recession cones, and the classification of
//! bodies into bounded, cone-containing and degenerate unbounded ones.

mod body;
mod cone;
mod linear;

use serde::{Deserialize, Serialize};

pub use body::{chebyshev_center, BodySpec, ConvexBody, MAX_DIM};
pub use cone::{Cone, CONE_TOL};
pub use linear::{check_rchl, linear_image, LinearMap};
pub use linear::sample_cone;

use crate::linalg::{self, dot, norm2, normalized};
use crate::lp::{LinearProgram, LpError, Sense};
use crate::modulus::BoundaryFn;
use crate::norm::Norm;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid body: {0}")]
    Invalid(String),
    #[error("the body is empty")]
    Empty,
    #[error("the body is unbounded")]
    Unbounded,
    #[error("matrix is singular")]
    Singular,
    #[error("linear map has rank {rank} but {k} rows, so it is not surjective")]
    NotSurjective { rank: usize, k: usize },
    #[error("kernel of the map meets the recession cone along {witness:?}")]
    KernelMeetsRecession { witness: Vec<f64> },
    #[error("cone is not pointed: it contains the line through {witness:?}")]
    NotPointed { witness: Vec<f64> },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Growth rate lim u(x)/x of a boundary function.
fn slope_at_infinity(f: &BoundaryFn) -> Result<f64, GeometryError> {
    match f {
        BoundaryFn::Constant { .. } => Ok(0.0),
        BoundaryFn::Power { coef, exponent, .. } if *exponent < 1.0 || *coef == 0.0 => Ok(0.0),
        BoundaryFn::Power { coef, exponent, .. } if *exponent == 1.0 => Ok(*coef),
        BoundaryFn::Power { .. } => Err(GeometryError::Unsupported("superlinear boundary".into())),
        BoundaryFn::MinAffine { pieces } => Ok(pieces.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min)),
        BoundaryFn::MaxAffine { pieces } => Ok(pieces.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max)),
    }
}

/// rec(G) = {y : x + λy ∈ G for all x ∈ G, λ ≥ 0}, a closed cone.
pub fn recession_cone(g: &ConvexBody) -> Result<Cone, GeometryError> {
    g.interior_point()?;
    let n = g.dim();
    if let Some((a, _)) = g.to_hrep() {
        return Ok(Cone::new(n, a));
    }
    match g {
        ConvexBody::Ball { .. } => Ok(Cone::zero(n)),
        ConvexBody::Wedge { .. } => Ok(Cone::ray(&[1.0, 0.0])),
        ConvexBody::Ul { u, l } => {
            let (su, sl) = (slope_at_infinity(u)?, slope_at_infinity(l)?);
            Ok(Cone::new(2, vec![vec![-su, 1.0], vec![sl, -1.0], vec![-1.0, 0.0]]))
        }
        ConvexBody::Product(fs) => {
            let mut rows = Vec::new();
            let mut offset = 0;
            for f in fs {
                let c = recession_cone(f)?;
                for r in c.rows {
                    let mut full = vec![0.0; n];
                    full[offset..offset + r.len()].copy_from_slice(&r);
                    rows.push(full);
                }
                offset += f.dim();
            }
            Ok(Cone::new(n, rows))
        }
        ConvexBody::Affine { body, inverse, .. } => {
            let inner = recession_cone(body)?;
            let rows = inner
                .rows
                .iter()
                .map(|r| (0..n).map(|j| (0..n).map(|i| r[i] * inverse[(i, j)]).sum()).collect())
                .collect();
            Ok(Cone::new(n, rows))
        }
        _ => unreachable!("polyhedral variants handled above"),
    }
}

pub fn cone_dimension(c: &Cone) -> usize {
    c.dimension()
}

/// Position of a body in the bounded / cone-containing / degenerate trichotomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Classification {
    Bounded,
    /// a ∈ G, unit v and r > 0 with B(v, r) ⊂ rec(G); then B(a + k v, k r) ⊂ G
    /// for every k > 0.
    ConeContaining { a: Vec<f64>, v: Vec<f64>, r: f64 },
    DegenerateUnbounded { rec_dim: usize },
}

pub fn classify_body(g: &ConvexBody) -> Result<Classification, GeometryError> {
    let rec = recession_cone(g)?;
    let n = g.dim();
    let dim = rec.dimension();
    if dim == 0 {
        return Ok(Classification::Bounded);
    }
    if dim < n {
        return Ok(Classification::DegenerateUnbounded { rec_dim: dim });
    }
    let (a, _) = g.interior_point()?;
    if rec.rows.is_empty() {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        return Ok(Classification::ConeContaining { a, v, r: 1.0 });
    }
    // max r with aₖ·v + r‖aₖ‖ ≤ 0 and |v|∞ ≤ 1
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut lp = LinearProgram::maximize(c).bound(n, 0.0, f64::INFINITY);
    for j in 0..n {
        lp = lp.bound(j, -1.0, 1.0);
    }
    for r in &rec.rows {
        let mut row = r.clone();
        row.push(norm2(r));
        lp.constraint(row, Sense::Le, 0.0);
    }
    let sol = lp.solve()?;
    let v = normalized(&sol.x[..n]).ok_or_else(|| GeometryError::Invalid("degenerate cone interior".into()))?;
    let r = rec.rows.iter().map(|row| -dot(row, &v) / norm2(row)).fold(f64::INFINITY, f64::min).min(1.0);
    if !(r > 0.0) {
        return Err(GeometryError::Invalid("cone interior not found".into()));
    }
    Ok(Classification::ConeContaining { a, v, r })
}

/// diam(G) / inradius(G), both in the Euclidean metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eccentricity {
    pub value: f64,
    pub diameter: f64,
    pub inradius: f64,
    /// False when the diameter is only a sampled lower bound.
    pub exact: bool,
}

const MAX_VERTEX_ROWS: usize = 64;
const MAX_VERTEX_DIM: usize = 3;

fn polytope_diameter(n: usize, a: &[Vec<f64>], b: &[f64]) -> (f64, bool) {
    if n <= MAX_VERTEX_DIM && a.len() <= MAX_VERTEX_ROWS {
        let mut vertices: Vec<Vec<f64>> = Vec::new();
        let mut subset: Vec<usize> = (0..n).collect();
        let m = a.len();
        loop {
            let sys = linalg::matrix_from_rows(&subset.iter().map(|&k| a[k].clone()).collect::<Vec<_>>(), n);
            if linalg::rank(&sys) == n {
                let rhs: Vec<f64> = subset.iter().map(|&k| b[k]).collect();
                if let Some(x) = linalg::solve(&sys, &rhs) {
                    if a.iter().zip(b).all(|(r, bi)| dot(r, &x) <= bi + 1e-9 * (1.0 + bi.abs())) {
                        vertices.push(x);
                    }
                }
            }
            if !next_combination(&mut subset, m) {
                break;
            }
        }
        let mut d: f64 = 0.0;
        for i in 0..vertices.len() {
            for j in i + 1..vertices.len() {
                d = d.max(norm2(&linalg::sub(&vertices[i], &vertices[j])));
            }
        }
        return (d, true);
    }
    // lower bound: largest width over axes and their pairwise sums/differences
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e.clone());
        for j in i + 1..n {
            for s in [1.0, -1.0] {
                let mut d = e.clone();
                d[j] = s;
                dirs.push(normalized(&d).expect("nonzero"));
            }
        }
    }
    let mut best: f64 = 0.0;
    for d in dirs {
        let extreme = |maximize: bool| {
            let mut lp = if maximize { LinearProgram::maximize(d.clone()) } else { LinearProgram::minimize(d.clone()) };
            for (r, bi) in a.iter().zip(b) {
                lp.constraint(r.clone(), Sense::Le, *bi);
            }
            lp.solve().map(|s| s.objective).unwrap_or(f64::NAN)
        };
        let w = extreme(true) - extreme(false);
        if w.is_finite() {
            best = best.max(w);
        }
    }
    (best, false)
}

fn next_combination(s: &mut [usize], m: usize) -> bool {
    let k = s.len();
    if k > m {
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

fn diameter_inradius(g: &ConvexBody) -> Result<(f64, f64, bool), GeometryError> {
    let n = g.dim() as f64;
    match g {
        ConvexBody::Ball { radius, norm, .. } => Ok(match norm {
            Norm::L2 => (2.0 * radius, *radius, true),
            Norm::LInf => (2.0 * radius * n.sqrt(), *radius, true),
            Norm::L1 => (2.0 * radius, radius / n.sqrt(), true),
        }),
        ConvexBody::Affine { body, matrix, .. } if matches!(**body, ConvexBody::Ball { norm: Norm::L2, .. }) => {
            let ConvexBody::Ball { radius, .. } = **body else { unreachable!() };
            let smax = linalg::spectral_norm(matrix);
            let smin = linalg::min_singular_value(matrix);
            Ok((2.0 * radius * smax, radius * smin, true))
        }
        ConvexBody::Product(fs) => {
            let mut d2 = 0.0;
            let mut r = f64::INFINITY;
            let mut exact = true;
            for f in fs {
                let (d, rf, e) = diameter_inradius(f)?;
                d2 += d * d;
                r = r.min(rf);
                exact &= e;
            }
            Ok((d2.sqrt(), r, exact))
        }
        _ => {
            let (a, b) = g
                .to_hrep()
                .ok_or_else(|| GeometryError::Unsupported("eccentricity of this body".into()))?;
            let (_, r) = chebyshev_center(g.dim(), &a, &b, None)?;
            let (d, exact) = polytope_diameter(g.dim(), &a, &b);
            Ok((d, r, exact))
        }
    }
}

/// e_G = diam(G) / sup{r : B(a, r) ⊂ G} for a bounded body.
pub fn eccentricity(g: &ConvexBody) -> Result<Eccentricity, GeometryError> {
    if recession_cone(g)?.dimension() > 0 {
        return Err(GeometryError::Unbounded);
    }
    let (diameter, inradius, exact) = diameter_inradius(g)?;
    Ok(Eccentricity { value: diameter / inradius, diameter, inradius, exact })
}

fn rotate90(p: [f64; 2]) -> [f64; 2] {
    [-p[1], p[0]]
}

/// A unit w in span(plane) with w ∉ C and −w ∉ C, for a cone C whose
/// intersection with the plane is pointed.
///
/// The bisector of the planar section is rotated by +90°; should that fail,
/// directions are swept in 1° steps from the first basis vector.
pub fn find_transversal(c: &Cone, plane: &[Vec<f64>; 2]) -> Result<Vec<f64>, GeometryError> {
    let basis = linalg::orthonormal_basis(&plane[..]);
    if basis.len() != 2 {
        return Err(GeometryError::Invalid("plane vectors must be independent".into()));
    }
    let (q1, q2) = (&basis[0], &basis[1]);
    let lift = |p: [f64; 2]| -> Vec<f64> { linalg::axpy(&linalg::scale(q1, p[0]), p[1], q2) };
    let section: Vec<[f64; 2]> = c
        .rows
        .iter()
        .map(|r| [dot(r, q1), dot(r, q2)])
        .filter(|s| s[0].hypot(s[1]) > 1e-12)
        .collect();
    let inside = |p: [f64; 2]| c.contains(&lift(p));
    let section_rank = linalg::rank_of(&section.iter().map(|s| s.to_vec()).collect::<Vec<_>>(), 2);
    if section_rank < 2 {
        let line = if section.is_empty() { [1.0, 0.0] } else { rotate90(section[0]) };
        return Err(GeometryError::NotPointed { witness: lift(line) });
    }
    let mut rays: Vec<[f64; 2]> = Vec::new();
    for s in &section {
        let len = s[0].hypot(s[1]);
        for sign in [1.0, -1.0] {
            let d = [-s[1] * sign / len, s[0] * sign / len];
            if inside(d) && !rays.iter().any(|r| (r[0] - d[0]).hypot(r[1] - d[1]) < 1e-9) {
                rays.push(d);
            }
        }
    }
    let candidate = match rays.as_slice() {
        [] => [1.0, 0.0],
        [r] => rotate90(*r),
        [r1, r2, ..] => {
            let b = [r1[0] + r2[0], r1[1] + r2[1]];
            let len = b[0].hypot(b[1]);
            rotate90([b[0] / len, b[1] / len])
        }
    };
    let ok = |p: [f64; 2]| !inside(p) && !inside([-p[0], -p[1]]);
    if ok(candidate) {
        return Ok(lift(candidate));
    }
    (0..360)
        .map(|deg| {
            let t = (deg as f64).to_radians();
            [t.cos(), t.sin()]
        })
        .find(|&p| ok(p))
        .map(lift)
        .ok_or_else(|| GeometryError::NotPointed { witness: lift(candidate) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::Eta;

    fn quadrant() -> ConvexBody {
        ConvexBody::hrep(2, vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn strip_recession() {
        let c = recession_cone(&ConvexBody::Strip).unwrap();
        assert_eq!(c.dimension(), 1);
        assert!(c.contains(&[1.0, 0.0]) && c.contains(&[-1.0, 0.0]) && !c.contains(&[1.0, 0.01]));
    }

    #[test]
    fn half_plane_recession() {
        let g = ConvexBody::hrep(2, vec![vec![0.0, -1.0]], vec![0.0]).unwrap();
        let c = recession_cone(&g).unwrap();
        assert_eq!(cone_dimension(&c), 2);
        assert!(c.contains(&[5.0, 0.0]) && !c.contains(&[0.0, -1.0]));
    }

    #[test]
    fn wedge_recession_matches_sampling() {
        let w = ConvexBody::wedge(Eta::sqrt()).unwrap();
        let c = recession_cone(&w).unwrap();
        assert_eq!(c.dimension(), 1);
        let x = [2.0, 0.5];
        for k in 0..360 {
            let t = (k as f64).to_radians();
            let y = [t.cos(), t.sin()];
            let sampled = [1.0, 10.0, 100.0, 1e3, 1e4].iter().all(|&l| w.contains(&[x[0] + l * y[0], x[1] + l * y[1]]));
            assert_eq!(sampled, c.contains(&y), "angle {k}");
        }
    }

    #[test]
    fn classifications() {
        let square = ConvexBody::open_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(classify_body(&square).unwrap(), Classification::Bounded);
        assert_eq!(classify_body(&ConvexBody::Strip).unwrap(), Classification::DegenerateUnbounded { rec_dim: 1 });
        match classify_body(&quadrant()).unwrap() {
            Classification::ConeContaining { v, r, .. } => {
                let s = 0.5f64.sqrt();
                assert!((v[0] - s).abs() < 1e-12 && (v[1] - s).abs() < 1e-12);
                assert!((r - s).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let half_strip = ConvexBody::hrep(2, vec![vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]], vec![-1.0, 1.0, 1.0]).unwrap();
        assert_eq!(classify_body(&half_strip).unwrap(), Classification::DegenerateUnbounded { rec_dim: 1 });
    }

    #[test]
    fn eccentricities() {
        let e = eccentricity(&ConvexBody::ball(vec![0.0, 0.0], 3.0, Norm::L2).unwrap()).unwrap();
        assert_eq!(e.value, 2.0);
        let square = ConvexBody::open_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let e = eccentricity(&square).unwrap();
        assert!((e.value - 8f64.sqrt()).abs() < 1e-9 && e.exact);
        let thin = ConvexBody::open_box(&[0.0, 0.0], &[1.0, 0.01]).unwrap();
        let expected = (1.0f64 + 1e-4).sqrt() / 0.005;
        assert!((eccentricity(&thin).unwrap().value - expected).abs() < 1e-6);
        assert!(matches!(eccentricity(&ConvexBody::Strip), Err(GeometryError::Unbounded)));
    }

    #[test]
    fn transversal_of_quadrant() {
        let c = recession_cone(&quadrant()).unwrap();
        let w = find_transversal(&c, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = 0.5f64.sqrt();
        assert!((w[0] + s).abs() < 1e-12 && (w[1] - s).abs() < 1e-12);
        assert!(!c.contains(&w) && !c.contains(&linalg::scale(&w, -1.0)));
        let ray = Cone::ray(&[1.0, 0.0]);
        let w = find_transversal(&ray, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(!ray.contains(&w) && !ray.contains(&linalg::scale(&w, -1.0)));
        let half = Cone::new(2, vec![vec![0.0, -1.0]]);
        assert!(matches!(find_transversal(&half, &[vec![1.0, 0.0], vec![0.0, 1.0]]), Err(GeometryError::NotPointed { .. })));
    }
}
