//! Open convex bodies in ℝⁿ.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::linalg::{self, dot, mat_vec, matrix_from_rows, matrix_rows, norm2, sub};
use crate::lp::{LinearProgram, LpError, Sense};
use crate::modulus::{BoundaryFn, Eta};
use crate::norm::Norm;

/// Largest dimension the toolkit accepts.
pub const MAX_DIM: usize = 8;

/// An open convex subset of ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodySpec", into = "BodySpec")]
pub enum ConvexBody {
    /// {x : A x < b} (componentwise strict).
    HRep { n: usize, a: Vec<Vec<f64>>, b: Vec<f64> },
    /// Open ball of the given ℓₚ norm.
    Ball { center: Vec<f64>, radius: f64, norm: Norm },
    /// Cartesian product, coordinates concatenated in order.
    Product(Vec<ConvexBody>),
    /// {M x + t : x ∈ body} for an invertible M.
    Affine { body: Box<ConvexBody>, matrix: DMatrix<f64>, inverse: DMatrix<f64>, shift: Vec<f64> },
    WholeSpace { n: usize },
    /// ℝ × (0, 1).
    Strip,
    /// {x₁ > 1, |x₂| < η(x₁)}.
    Wedge { eta: Eta },
    /// {x₁ > 1, l(x₁) < x₂ < u(x₁)}.
    Ul { u: BoundaryFn, l: BoundaryFn },
}

/// Scene-file representation of a body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Hrep {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        norm: Norm,
    },
    Product { factors: Vec<BodySpec> },
    Affine { body: Box<BodySpec>, matrix: Vec<Vec<f64>>, shift: Vec<f64> },
    WholeSpace { n: usize },
    Strip {},
    Wedge { eta: Eta },
    Ul { u: BoundaryFn, l: BoundaryFn },
}

impl TryFrom<BodySpec> for ConvexBody {
    type Error = GeometryError;

    fn try_from(spec: BodySpec) -> Result<Self, GeometryError> {
        match spec {
            BodySpec::Hrep { a, b, n } => {
                let n = n.or_else(|| a.first().map(Vec::len)).ok_or_else(|| {
                    GeometryError::Invalid("hrep with no rows needs an explicit dimension n".into())
                })?;
                ConvexBody::hrep(n, a, b)
            }
            BodySpec::Ball { center, radius, norm } => ConvexBody::ball(center, radius, norm),
            BodySpec::Product { factors } => {
                ConvexBody::product(factors.into_iter().map(ConvexBody::try_from).collect::<Result<_, _>>()?)
            }
            BodySpec::Affine { body, matrix, shift } => {
                let body = ConvexBody::try_from(*body)?;
                let n = shift.len();
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(GeometryError::Invalid("affine matrix must be square and match the shift".into()));
                }
                ConvexBody::affine(body, matrix_from_rows(&matrix, n), shift)
            }
            BodySpec::WholeSpace { n } => ConvexBody::whole_space(n),
            BodySpec::Strip {} => Ok(ConvexBody::Strip),
            BodySpec::Wedge { eta } => ConvexBody::wedge(eta),
            BodySpec::Ul { u, l } => Ok(ConvexBody::Ul { u, l }),
        }
    }
}

impl From<ConvexBody> for BodySpec {
    fn from(body: ConvexBody) -> Self {
        match body {
            ConvexBody::HRep { n, a, b } => {
                let explicit = a.is_empty().then_some(n);
                BodySpec::Hrep { a, b, n: explicit }
            }
            ConvexBody::Ball { center, radius, norm } => BodySpec::Ball { center, radius, norm },
            ConvexBody::Product(fs) => BodySpec::Product { factors: fs.into_iter().map(BodySpec::from).collect() },
            ConvexBody::Affine { body, matrix, shift, .. } => BodySpec::Affine {
                body: Box::new(BodySpec::from(*body)),
                matrix: matrix_rows(&matrix),
                shift,
            },
            ConvexBody::WholeSpace { n } => BodySpec::WholeSpace { n },
            ConvexBody::Strip => BodySpec::Strip {},
            ConvexBody::Wedge { eta } => BodySpec::Wedge { eta },
            ConvexBody::Ul { u, l } => BodySpec::Ul { u, l },
        }
    }
}

fn check_dim(n: usize) -> Result<(), GeometryError> {
    if n == 0 || n > MAX_DIM {
        return Err(GeometryError::Invalid(format!("dimension {n} not in 1..={MAX_DIM}")));
    }
    Ok(())
}

impl ConvexBody {
    pub fn hrep(n: usize, a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self, GeometryError> {
        check_dim(n)?;
        if a.len() != b.len() {
            return Err(GeometryError::Invalid(format!("{} rows but {} right-hand sides", a.len(), b.len())));
        }
        if a.iter().any(|r| r.len() != n) {
            return Err(GeometryError::Invalid(format!("every row of A must have length {n}")));
        }
        if a.iter().flatten().chain(&b).any(|v| !v.is_finite()) {
            return Err(GeometryError::Invalid("hrep entries must be finite".into()));
        }
        Ok(ConvexBody::HRep { n, a, b })
    }

    pub fn ball(center: Vec<f64>, radius: f64, norm: Norm) -> Result<Self, GeometryError> {
        check_dim(center.len())?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::Invalid(format!("ball radius {radius} must be positive")));
        }
        Ok(ConvexBody::Ball { center, radius, norm })
    }

    pub fn product(factors: Vec<ConvexBody>) -> Result<Self, GeometryError> {
        if factors.is_empty() {
            return Err(GeometryError::Invalid("product needs at least one factor".into()));
        }
        let n: usize = factors.iter().map(ConvexBody::dim).sum();
        check_dim(n)?;
        Ok(ConvexBody::Product(factors))
    }

    pub fn affine(body: ConvexBody, matrix: DMatrix<f64>, shift: Vec<f64>) -> Result<Self, GeometryError> {
        let n = body.dim();
        if matrix.nrows() != n || matrix.ncols() != n || shift.len() != n {
            return Err(GeometryError::Invalid("affine map does not match the body's dimension".into()));
        }
        let inverse = linalg::inverse(&matrix).ok_or(GeometryError::Singular)?;
        Ok(ConvexBody::Affine { body: Box::new(body), matrix, inverse, shift })
    }

    pub fn whole_space(n: usize) -> Result<Self, GeometryError> {
        check_dim(n)?;
        Ok(ConvexBody::WholeSpace { n })
    }

    pub fn wedge(eta: Eta) -> Result<Self, GeometryError> {
        eta.validate().map_err(|e| GeometryError::Invalid(e.to_string()))?;
        Ok(ConvexBody::Wedge { eta })
    }

    /// Axis-aligned box (lo, hi) in every coordinate; the open interval (lo, hi)^n.
    pub fn open_box(lo: &[f64], hi: &[f64]) -> Result<Self, GeometryError> {
        let n = lo.len();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..n {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            a.push(row.clone());
            b.push(hi[i]);
            row[i] = -1.0;
            a.push(row);
            b.push(-lo[i]);
        }
        ConvexBody::hrep(n, a, b)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::HRep { n, .. } | ConvexBody::WholeSpace { n } => *n,
            ConvexBody::Ball { center, .. } => center.len(),
            ConvexBody::Product(fs) => fs.iter().map(ConvexBody::dim).sum(),
            ConvexBody::Affine { shift, .. } => shift.len(),
            ConvexBody::Strip | ConvexBody::Wedge { .. } | ConvexBody::Ul { .. } => 2,
        }
    }

    /// Whether the set is the whole space (declared, not inferred).
    pub fn is_whole_space(&self) -> bool {
        match self {
            ConvexBody::WholeSpace { .. } => true,
            ConvexBody::Product(fs) => fs.iter().all(ConvexBody::is_whole_space),
            ConvexBody::Affine { body, .. } => body.is_whole_space(),
            _ => false,
        }
    }

    /// Membership in the open body.
    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim());
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            ConvexBody::HRep { a, b, .. } => a.iter().zip(b).all(|(row, bi)| dot(row, x) < *bi),
            ConvexBody::Ball { center, radius, norm } => norm.dist(x, center) < *radius,
            ConvexBody::Product(fs) => {
                let mut offset = 0;
                fs.iter().all(|f| {
                    let d = f.dim();
                    let inside = f.contains(&x[offset..offset + d]);
                    offset += d;
                    inside
                })
            }
            ConvexBody::Affine { body, inverse, shift, .. } => body.contains(&mat_vec(inverse, &sub(x, shift))),
            ConvexBody::WholeSpace { .. } => true,
            ConvexBody::Strip => x[1] > 0.0 && x[1] < 1.0,
            ConvexBody::Wedge { eta } => x[0] > 1.0 && x[1].abs() < eta.eval(x[0]),
            ConvexBody::Ul { u, l } => x[0] > 1.0 && l.eval(x[0]) < x[1] && x[1] < u.eval(x[0]),
        }
    }

    /// Polyhedral description `(A, b)` of the body when it has one.
    pub fn to_hrep(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        match self {
            ConvexBody::HRep { a, b, .. } => Some((a.clone(), b.clone())),
            ConvexBody::WholeSpace { .. } => Some((Vec::new(), Vec::new())),
            ConvexBody::Strip => Some((vec![vec![0.0, -1.0], vec![0.0, 1.0]], vec![0.0, 1.0])),
            ConvexBody::Ball { center, radius, norm } => {
                let n = center.len();
                let normals: Vec<Vec<f64>> = match norm {
                    Norm::L2 => return None,
                    Norm::LInf => (0..2 * n)
                        .map(|k| {
                            let mut r = vec![0.0; n];
                            r[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
                            r
                        })
                        .collect(),
                    Norm::L1 => (0..1usize << n)
                        .map(|mask| (0..n).map(|j| if mask >> j & 1 == 1 { -1.0 } else { 1.0 }).collect())
                        .collect(),
                };
                let b = normals.iter().map(|r| dot(r, center) + radius).collect();
                Some((normals, b))
            }
            ConvexBody::Product(fs) => {
                let n = self.dim();
                let mut a = Vec::new();
                let mut b = Vec::new();
                let mut offset = 0;
                for f in fs {
                    let (fa, fb) = f.to_hrep()?;
                    for (row, bi) in fa.into_iter().zip(fb) {
                        let mut full = vec![0.0; n];
                        full[offset..offset + row.len()].copy_from_slice(&row);
                        a.push(full);
                        b.push(bi);
                    }
                    offset += f.dim();
                }
                Some((a, b))
            }
            ConvexBody::Affine { body, inverse, shift, .. } => {
                // x = M y + t, A y < b  ⇔  A M⁻¹ x < b + A M⁻¹ t
                let (ba, bb) = body.to_hrep()?;
                let n = shift.len();
                let am = matrix_from_rows(&ba, n) * inverse;
                let rows = matrix_rows(&am);
                let b = rows.iter().zip(bb).map(|(r, bi)| bi + dot(r, shift)).collect();
                Some((rows, b))
            }
            ConvexBody::Ul { u, l } => {
                let upper = match u {
                    BoundaryFn::Constant { value } => vec![[0.0, *value]],
                    BoundaryFn::MinAffine { pieces } => pieces.clone(),
                    _ => return None,
                };
                let lower = match l {
                    BoundaryFn::Constant { value } => vec![[0.0, *value]],
                    BoundaryFn::MaxAffine { pieces } => pieces.clone(),
                    _ => return None,
                };
                let mut a = vec![vec![-1.0, 0.0]];
                let mut b = vec![-1.0];
                for [s, c] in upper {
                    a.push(vec![-s, 1.0]);
                    b.push(c);
                }
                for [s, c] in lower {
                    a.push(vec![s, -1.0]);
                    b.push(-c);
                }
                Some((a, b))
            }
            ConvexBody::Wedge { .. } => None,
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        self.to_hrep().is_some()
    }

    /// Axis-aligned bounding box, with infinite entries for unbounded directions.
    pub fn bounds(&self) -> Vec<[f64; 2]> {
        let n = self.dim();
        let free = [f64::NEG_INFINITY, f64::INFINITY];
        match self {
            ConvexBody::Ball { center, radius, .. } => center.iter().map(|c| [c - radius, c + radius]).collect(),
            ConvexBody::Product(fs) => fs.iter().flat_map(ConvexBody::bounds).collect(),
            ConvexBody::Affine { body, matrix, shift, .. } => {
                let inner = body.bounds();
                (0..n)
                    .map(|i| {
                        let mut mid = shift[i];
                        let mut half = 0.0;
                        for (j, [lo, hi]) in inner.iter().enumerate() {
                            let m = matrix[(i, j)];
                            if m == 0.0 {
                                continue;
                            }
                            if !(lo.is_finite() && hi.is_finite()) {
                                return free;
                            }
                            mid += m * 0.5 * (lo + hi);
                            half += m.abs() * 0.5 * (hi - lo);
                        }
                        [mid - half, mid + half]
                    })
                    .collect()
            }
            ConvexBody::WholeSpace { .. } => vec![free; n],
            ConvexBody::Strip => vec![free, [0.0, 1.0]],
            ConvexBody::Wedge { .. } | ConvexBody::Ul { .. } => vec![[1.0, f64::INFINITY], free],
            ConvexBody::HRep { a, b, .. } => (0..n)
                .map(|i| {
                    let extent = |maximize: bool| {
                        let mut c = vec![0.0; n];
                        c[i] = 1.0;
                        let mut lp = if maximize { LinearProgram::maximize(c) } else { LinearProgram::minimize(c) };
                        for (row, bi) in a.iter().zip(b) {
                            lp.constraint(row.clone(), Sense::Le, *bi);
                        }
                        match lp.solve() {
                            Ok(s) => s.objective,
                            Err(_) if maximize => f64::INFINITY,
                            Err(_) => f64::NEG_INFINITY,
                        }
                    };
                    [extent(false), extent(true)]
                })
                .collect(),
        }
    }

    /// A point of the body with a ball of positive radius around it, and
    /// that radius (capped at 1). For polyhedra this is a Chebyshev centre.
    pub fn interior_point(&self) -> Result<(Vec<f64>, f64), GeometryError> {
        match self {
            ConvexBody::HRep { n, a, b } => chebyshev_center(*n, a, b, Some(1.0)),
            ConvexBody::Ball { center, radius, norm } => {
                let r = match norm {
                    Norm::L1 => radius / (center.len() as f64).sqrt(),
                    _ => *radius,
                };
                Ok((center.clone(), r.min(1.0)))
            }
            ConvexBody::Product(fs) => {
                let mut x = Vec::new();
                let mut r = f64::INFINITY;
                for f in fs {
                    let (p, rf) = f.interior_point()?;
                    x.extend(p);
                    r = r.min(rf);
                }
                Ok((x, r))
            }
            ConvexBody::Affine { body, matrix, shift, .. } => {
                let (p, r) = body.interior_point()?;
                let x = linalg::axpy(shift, 1.0, &mat_vec(matrix, &p));
                Ok((x, (r * linalg::min_singular_value(matrix)).min(1.0)))
            }
            ConvexBody::WholeSpace { n } => Ok((vec![0.0; *n], 1.0)),
            ConvexBody::Strip => Ok((vec![0.0, 0.5], 0.5)),
            ConvexBody::Wedge { eta } => {
                let h = eta.eval(2.0);
                Ok((vec![2.0, 0.0], (0.5 * h).min(1.0).min(1.0)))
            }
            ConvexBody::Ul { u, l } => {
                let (hi, lo) = (u.eval(2.0), l.eval(2.0));
                if !(hi > lo) {
                    return Err(GeometryError::Empty);
                }
                Ok((vec![2.0, 0.5 * (hi + lo)], (0.25 * (hi - lo)).min(0.5)))
            }
        }
    }

    /// Distance from `x` to the complement of an H-representation, or of
    /// the body's polyhedral description; `None` for non-polyhedral bodies.
    pub fn boundary_distance(&self, x: &[f64]) -> Option<f64> {
        if let ConvexBody::Ball { center, radius, norm: Norm::L2 } = self {
            return Some(radius - norm2(&sub(x, center)));
        }
        let (a, b) = self.to_hrep()?;
        Some(
            a.iter()
                .zip(&b)
                .filter(|(r, _)| norm2(r) > 0.0)
                .map(|(r, bi)| (bi - dot(r, x)) / norm2(r))
                .fold(f64::INFINITY, f64::min),
        )
    }
}

/// Largest ball {‖y − x‖₂ < r} inside {A y < b}, optionally capping r.
pub fn chebyshev_center(
    n: usize,
    a: &[Vec<f64>],
    b: &[f64],
    cap: Option<f64>,
) -> Result<(Vec<f64>, f64), GeometryError> {
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut lp = LinearProgram::maximize(c).bound(n, 0.0, cap.unwrap_or(f64::INFINITY));
    for (row, bi) in a.iter().zip(b) {
        let mut r = row.clone();
        r.push(norm2(row));
        lp.constraint(r, Sense::Le, *bi);
    }
    if a.is_empty() {
        return Ok((vec![0.0; n], cap.unwrap_or(f64::INFINITY)));
    }
    match lp.solve() {
        Ok(sol) if sol.objective > 0.0 => Ok((sol.x[..n].to_vec(), sol.objective)),
        Ok(_) | Err(LpError::Infeasible) => Err(GeometryError::Empty),
        Err(LpError::Unbounded) => Err(GeometryError::Invalid("unbounded inradius".into())),
        Err(e) => Err(GeometryError::Lp(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexBody {
        ConvexBody::open_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn membership() {
        assert!(square().contains(&[0.5, 0.5]));
        assert!(!square().contains(&[1.0, 0.5]));
        assert!(ConvexBody::Strip.contains(&[-1e9, 0.3]));
        assert!(!ConvexBody::Strip.contains(&[0.0, 1.0]));
        let w = ConvexBody::wedge(Eta::sqrt()).unwrap();
        assert!(w.contains(&[4.0, 1.9]));
        assert!(!w.contains(&[4.0, 2.0]));
        assert!(!w.contains(&[1.0, 0.0]));
    }

    #[test]
    fn product_and_affine() {
        let unit = ConvexBody::hrep(1, vec![vec![1.0], vec![-1.0]], vec![1.0, 0.0]).unwrap();
        let p = ConvexBody::product(vec![ConvexBody::Strip, unit]).unwrap();
        assert_eq!(p.dim(), 3);
        assert!(p.contains(&[5.0, 0.5, 0.5]));
        assert!(!p.contains(&[5.0, 0.5, 1.5]));
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let a = ConvexBody::affine(ConvexBody::Strip, rot, vec![10.0, 0.0]).unwrap();
        // strip rotated by 90°: {−1 < x − 10 < 0}
        assert!(a.contains(&[9.5, 1e6]));
        assert!(!a.contains(&[10.5, 0.0]));
        let (ha, hb) = a.to_hrep().unwrap();
        for x in [[9.5, 3.0], [10.5, 0.0], [8.0, -2.0]] {
            let poly = ha.iter().zip(&hb).all(|(r, bi)| dot(r, &x) < *bi);
            assert_eq!(poly, a.contains(&x));
        }
        assert!(matches!(
            ConvexBody::affine(ConvexBody::Strip, DMatrix::zeros(2, 2), vec![0.0, 0.0]),
            Err(GeometryError::Singular)
        ));
    }

    #[test]
    fn ball_polyhedra_agree() {
        for norm in [Norm::L1, Norm::LInf] {
            let b = ConvexBody::ball(vec![1.0, -1.0, 0.5], 2.0, norm).unwrap();
            let (a, rhs) = b.to_hrep().unwrap();
            for x in [[1.0, -1.0, 0.5], [2.9, -1.0, 0.5], [2.0, 0.0, 1.4], [3.1, -1.0, 0.5]] {
                let poly = a.iter().zip(&rhs).all(|(r, bi)| dot(r, &x) < *bi);
                assert_eq!(poly, b.contains(&x), "{norm} {x:?}");
            }
        }
    }

    #[test]
    fn bounds_and_interior() {
        let b = square().bounds();
        assert!((b[0][0]).abs() < 1e-12 && (b[1][1] - 1.0).abs() < 1e-12);
        let (c, r) = square().interior_point().unwrap();
        assert!((c[0] - 0.5).abs() < 1e-9 && (r - 0.5).abs() < 1e-9);
        let half = ConvexBody::hrep(2, vec![vec![0.0, -1.0]], vec![0.0]).unwrap();
        assert_eq!(half.bounds()[0], [f64::NEG_INFINITY, f64::INFINITY]);
        let (p, r) = half.interior_point().unwrap();
        assert!(half.contains(&p) && r == 1.0);
        let empty = ConvexBody::hrep(1, vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        assert!(matches!(empty.interior_point(), Err(GeometryError::Empty)));
    }

    #[test]
    fn scene_round_trip() {
        let json = r#"{"type":"product","factors":[{"type":"hrep","a":[[-1,0],[0,1],[0,-1]],"b":[-1,1,1]},{"type":"hrep","a":[[1],[-1]],"b":[1,0]}]}"#;
        let body: ConvexBody = serde_json::from_str(json).unwrap();
        assert_eq!(body.dim(), 3);
        let back: ConvexBody = serde_json::from_str(&serde_json::to_string(&body).unwrap()).unwrap();
        assert_eq!(back, body);
        assert!(serde_json::from_str::<ConvexBody>(r#"{"type":"strip","extra":1}"#).is_err());
        assert!(serde_json::from_str::<ConvexBody>(r#"{"type":"hrep","a":[[1,2]],"b":[1,2]}"#).is_err());
    }
}
