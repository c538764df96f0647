//! Recursive witness construction by dimension: planar strips and
//! one-sided bodies directly, higher dimensions through a projection and a
//! lift.

use nalgebra::DMatrix;

use super::{apply_affine, build_strip_witness, build_ul_witness, build_wedge_witness, lift_witness, precondition, Witness, WitnessError};
use crate::geometry::{classify_body, find_transversal, linear_image, recession_cone, Classification, ConvexBody, LinearMap};
use crate::linalg::{self, dot};
use crate::modulus::BoundaryFn;

const SNAP: f64 = 1e-12;

/// A witness on a degenerate unbounded body (polyhedral, or one of the
/// planar catalog bodies and their affine images).
pub fn construct_witness(g: &ConvexBody) -> Result<Witness, WitnessError> {
    let w = construct_at(g, 0, g.dim())?;
    w.restricted(g.clone())
}

fn construct_at(g: &ConvexBody, depth: usize, max_depth: usize) -> Result<Witness, WitnessError> {
    if depth > max_depth {
        return Err(WitnessError::Depth(max_depth));
    }
    match classify_body(g)? {
        Classification::DegenerateUnbounded { .. } => {}
        Classification::Bounded => return Err(WitnessError::Classification("the body is bounded".into())),
        Classification::ConeContaining { .. } => {
            return Err(WitnessError::Classification("the body contains a translated solid cone".into()))
        }
    }
    match g {
        ConvexBody::Wedge { eta } => return build_wedge_witness(eta.clone()),
        ConvexBody::Ul { u, l } => return build_ul_witness(u.clone(), l.clone()),
        ConvexBody::Affine { body, matrix, shift, .. } if !body.is_polyhedral() => {
            let inner = construct_at(body, depth + 1, max_depth)?;
            return apply_affine(&inner, matrix, shift);
        }
        _ => {}
    }
    let (a, b) = g
        .to_hrep()
        .ok_or_else(|| WitnessError::Unsupported("witness construction needs a polyhedral or planar catalog body".into()))?;
    if g.dim() == 2 {
        planar(g, &a, &b)
    } else {
        higher(g, depth, max_depth)
    }
}

fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    if let Some(first) = v.iter().find(|c| c.abs() > SNAP) {
        if *first < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
    v
}

fn planar(g: &ConvexBody, a: &[Vec<f64>], b: &[f64]) -> Result<Witness, WitnessError> {
    let rec = recession_cone(g)?;
    let lin = rec.lineality_basis();
    if let Some(line) = lin.first() {
        let ell = canonical_sign(line.clone());
        let q = vec![-ell[1], ell[0]];
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (row, bi) in a.iter().zip(b) {
            let c = dot(row, &q);
            if c > SNAP {
                hi = hi.min(bi / c);
            } else if c < -SNAP {
                lo = lo.max(bi / c);
            }
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(precondition("a planar body with a line must be a strip of finite width", None));
        }
        let matrix = DMatrix::from_column_slice(2, 2, &[ell[0], ell[1], (hi - lo) * q[0], (hi - lo) * q[1]]);
        let shift = vec![lo * q[0], lo * q[1]];
        return apply_affine(&build_strip_witness(), &matrix, &shift);
    }
    let rays = rec.extreme_rays().unwrap_or_default();
    let d = match rays.as_slice() {
        [d] => linalg::normalized(d).ok_or_else(|| precondition("zero recession ray", None))?,
        _ => return Err(precondition(format!("expected a single recession ray, found {}", rays.len()), None)),
    };
    // z = Rᵀ z' with R d = e₁
    let rot_t = DMatrix::from_row_slice(2, 2, &[d[0], -d[1], d[1], d[0]]);
    let rot_rows: Vec<Vec<f64>> = a.iter().map(|r| linalg::to_vec(&(rot_t.transpose() * nalgebra::DVector::from_column_slice(r)))).collect();
    let (p, _) = g.interior_point()?;
    let y0 = -d[1] * p[0] + d[0] * p[1];
    // left end of the horizontal section through the interior point
    let mut x0 = f64::NEG_INFINITY;
    let mut active = None;
    for (i, (r, bi)) in rot_rows.iter().zip(b).enumerate() {
        if r[0] < -SNAP {
            let x = (bi - r[1] * y0) / r[0];
            if x > x0 {
                x0 = x;
                active = Some(i);
            }
        }
    }
    let active = active.ok_or_else(|| precondition("the horizontal section is unbounded on both sides", Some(p.clone())))?;
    let tau = [x0 - 1.0, y0];
    let sigma = rot_rows[active][1] / rot_rows[active][0];
    let shear_inv = DMatrix::from_row_slice(2, 2, &[1.0, -sigma, 0.0, 1.0]);
    let matrix = &rot_t * &shear_inv;
    let shift = linalg::mat_vec(&rot_t, &tau);
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (r, bi) in a.iter().zip(b) {
        let row = linalg::to_vec(&(matrix.transpose() * nalgebra::DVector::from_column_slice(r)));
        let c = bi - dot(r, &shift);
        let (px, qy) = (row[0], row[1]);
        if qy > SNAP {
            upper.push([-px / qy, c / qy]);
        } else if qy < -SNAP {
            lower.push([-px / qy, c / qy]);
        } else if px < 0.0 && c / px > 1.0 + 1e-9 {
            return Err(precondition("normalisation left a vertical face to the right of x = 1", None));
        }
    }
    if upper.is_empty() || lower.is_empty() {
        return Err(precondition("normalised body is unbounded vertically", None));
    }
    let u = boundary(upper, true);
    let l = boundary(lower, false);
    let base = build_ul_witness(u, l)?;
    apply_affine(&base, &matrix, &shift)
}

fn boundary(pieces: Vec<[f64; 2]>, upper: bool) -> BoundaryFn {
    match pieces.as_slice() {
        [[s, c]] if s.abs() <= SNAP => BoundaryFn::Constant { value: *c },
        _ if upper => BoundaryFn::MinAffine { pieces },
        _ => BoundaryFn::MaxAffine { pieces },
    }
}

fn higher(g: &ConvexBody, depth: usize, max_depth: usize) -> Result<Witness, WitnessError> {
    let n = g.dim();
    let rec = recession_cone(g)?;
    let lin = rec.lineality_basis();
    let l = if !lin.is_empty() {
        let complement = linalg::orthogonal_complement(&lin, n);
        let onto_section = LinearMap::from_rows(&complement)?;
        let section = linear_image(g, &onto_section)?;
        if matches!(classify_body(&section)?, Classification::Bounded) {
            // bounded cross-section: project onto (line, one bounded direction)
            LinearMap::from_rows(&[canonical_sign(lin[0].clone()), complement[0].clone()])?
        } else {
            onto_section
        }
    } else {
        let span = rec.span_basis();
        let w = if span.len() + 1 < n {
            linalg::orthogonal_complement(&span, n).pop().ok_or_else(|| precondition("recession cone spans the space", None))?
        } else {
            let gens = rec.extreme_rays().ok_or_else(|| WitnessError::Unsupported("recession cone too large to enumerate".into()))?;
            let (v1, v2) = independent_pair(&gens).ok_or_else(|| precondition("fewer than two independent recession rays", None))?;
            find_transversal(&rec, &[v1, v2])?
        };
        LinearMap::from_rows(&linalg::orthogonal_complement(&[w], n))?
    };
    let image = linear_image(g, &l)?;
    let base = construct_at(&image, depth + 1, max_depth)?.restricted(image)?;
    lift_witness(&base, &l, g)
}

fn independent_pair(gens: &[Vec<f64>]) -> Option<(Vec<f64>, Vec<f64>)> {
    for (i, a) in gens.iter().enumerate() {
        for b in &gens[i + 1..] {
            if linalg::rank_of(&[a.clone(), b.clone()], a.len()) == 2 {
                return Some((a.clone(), b.clone()));
            }
        }
    }
    None
}
