//! Scalar fields on convex bodies and their restrictions to lines.

mod expr;

use serde::{Deserialize, Serialize};

pub use expr::{Expr, Func, ParseError, ParseErrorKind};

use crate::geometry::ConvexBody;
use crate::linalg::{self, norm2};
use crate::norm::Norm;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("point {point:?} is outside the field's domain")]
    Domain { point: Vec<f64> },
    #[error("point {point:?} is too close to the boundary for a difference step {h}")]
    NearBoundary { point: Vec<f64>, h: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid field: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogId {
    /// (c/2)(x₁² − x₂²)
    Saddle,
    /// c·x₁x₂
    Product,
    /// log(x₁)·x₂
    Logwedge,
}

fn one() -> f64 {
    1.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Scene-file description of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Expr {
        src: String,
        /// Use central differences instead of the analytic gradient.
        #[serde(default, skip_serializing_if = "is_false")]
        finite_difference: bool,
    },
    Catalog {
        id: CatalogId,
        #[serde(default = "one")]
        c: f64,
    },
}

impl FieldSpec {
    pub fn expr(src: impl Into<String>) -> Self {
        FieldSpec::Expr { src: src.into(), finite_difference: false }
    }

    pub fn catalog(id: CatalogId, c: f64) -> Self {
        FieldSpec::Catalog { id, c }
    }

    fn to_expr(&self, n: usize) -> Result<Expr, FieldError> {
        match self {
            FieldSpec::Expr { src, .. } => Ok(Expr::parse(src, n)?),
            FieldSpec::Catalog { id, c } => {
                if n < 2 {
                    return Err(FieldError::Dimension { expected: 2, got: n });
                }
                let src = match id {
                    CatalogId::Saddle => format!("{:?} * (x1^2 - x2^2)", c / 2.0),
                    CatalogId::Product => format!("{c:?} * x1 * x2"),
                    CatalogId::Logwedge => "log(x1) * x2".to_string(),
                };
                Ok(Expr::parse(&src, n)?)
            }
        }
    }
}

/// A real function on an open convex body.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: FieldSpec,
    expr: Expr,
    domain: ConvexBody,
    finite_difference: bool,
}

impl ScalarField {
    pub fn new(spec: FieldSpec, domain: ConvexBody) -> Result<Self, FieldError> {
        let n = domain.dim();
        let expr = spec.to_expr(n)?;
        let finite_difference = matches!(spec, FieldSpec::Expr { finite_difference: true, .. });
        Ok(Self { spec, expr, domain, finite_difference })
    }

    /// Parse an expression over x1..xn, n = dimension of the domain.
    pub fn parse(src: &str, domain: ConvexBody) -> Result<Self, FieldError> {
        Self::new(FieldSpec::expr(src), domain)
    }

    pub fn from_expr(expr: Expr, domain: ConvexBody) -> Result<Self, FieldError> {
        if expr.arity() > domain.dim() {
            return Err(FieldError::Dimension { expected: domain.dim(), got: expr.arity() });
        }
        let spec = FieldSpec::expr(expr.to_string());
        Ok(Self { spec, expr, domain, finite_difference: false })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn domain(&self) -> &ConvexBody {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn uses_finite_differences(&self) -> bool {
        self.finite_difference
    }

    pub fn with_finite_differences(mut self, on: bool) -> Self {
        self.finite_difference = on;
        if let FieldSpec::Expr { finite_difference, .. } = &mut self.spec {
            *finite_difference = on;
        }
        self
    }

    /// Same formula on another domain of the same dimension.
    pub fn with_domain(&self, domain: ConvexBody) -> Result<Self, FieldError> {
        if domain.dim() != self.dim() {
            return Err(FieldError::Dimension { expected: self.dim(), got: domain.dim() });
        }
        Ok(Self { domain, ..self.clone() })
    }

    fn check(&self, x: &[f64]) -> Result<(), FieldError> {
        if x.len() != self.dim() {
            return Err(FieldError::Dimension { expected: self.dim(), got: x.len() });
        }
        if !self.domain.contains(x) {
            return Err(FieldError::Domain { point: x.to_vec() });
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, FieldError> {
        self.check(x)?;
        Ok(self.expr.eval(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        self.check(x)?;
        if self.finite_difference {
            self.fd_gradient(x)
        } else {
            Ok(self.expr.eval_grad(x).1)
        }
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), FieldError> {
        self.check(x)?;
        if self.finite_difference {
            Ok((self.expr.eval(x), self.fd_gradient(x)?))
        } else {
            Ok(self.expr.eval_grad(x))
        }
    }

    /// Difference step h = ∛ε · (1 + ‖x‖).
    pub fn fd_step(x: &[f64]) -> f64 {
        f64::EPSILON.cbrt() * (1.0 + norm2(x))
    }

    /// Central differences; every stencil point must lie in the domain
    /// with room to spare.
    pub fn fd_gradient(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        self.check(x)?;
        let h = Self::fd_step(x);
        let mut g = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            let (mut p2, mut m2) = (x.to_vec(), x.to_vec());
            p2[i] += 2.0 * h;
            m2[i] -= 2.0 * h;
            if !(self.domain.contains(&p2) && self.domain.contains(&m2)) {
                return Err(FieldError::NearBoundary { point: x.to_vec(), h });
            }
            g.push((self.expr.eval(&p) - self.expr.eval(&m)) / (2.0 * h));
        }
        Ok(g)
    }

    /// −f on the same domain.
    pub fn negated(&self) -> Self {
        let expr = match &self.expr {
            Expr::Const(c) => Expr::Const(-c),
            e => Expr::Neg(Box::new(e.clone())),
        };
        let spec = FieldSpec::Expr { src: expr.to_string(), finite_difference: self.finite_difference };
        Self { spec, expr, domain: self.domain.clone(), finite_difference: self.finite_difference }
    }

    /// x ↦ f(M x + t) on `domain` ⊂ ℝᵐ, for a k×m matrix M given by rows.
    pub fn compose_affine(&self, rows: &[Vec<f64>], shift: &[f64], domain: ConvexBody) -> Result<Self, FieldError> {
        if rows.len() != self.dim() || shift.len() != self.dim() {
            return Err(FieldError::Dimension { expected: self.dim(), got: rows.len() });
        }
        if rows.iter().any(|r| r.len() != domain.dim()) {
            return Err(FieldError::Dimension { expected: domain.dim(), got: rows[0].len() });
        }
        let images: Vec<Expr> = rows.iter().zip(shift).map(|(r, t)| Expr::affine(r, *t)).collect();
        let mut out = Self::from_expr(self.expr.substitute(&images), domain)?;
        out = out.with_finite_differences(self.finite_difference);
        Ok(out)
    }

    /// max over i of |analytic − central difference| / (1 + ‖∇f‖).
    pub fn gradient_discrepancy(&self, x: &[f64]) -> Result<f64, FieldError> {
        let (_, g) = { self.check(x)?; self.expr.eval_grad(x) };
        let fd = self.fd_gradient(x)?;
        let scale = 1.0 + norm2(&g);
        Ok(g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
    }
}

impl Serialize for ScalarField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.spec.serialize(s)
    }
}

/// Gradient at `x` and its dual norm with respect to `norm`.
pub fn eval_gradient(f: &ScalarField, x: &[f64], norm: Norm) -> Result<(Vec<f64>, f64), FieldError> {
    let g = f.gradient(x)?;
    let d = norm.dual_eval(&g);
    Ok((g, d))
}

/// Accuracy of the interval endpoints of a line restriction.
pub const LINE_TOL: f64 = 1e-10;

/// Beyond this parameter a line is treated as unbounded.
const LINE_HORIZON: f64 = 1e12;

/// t ↦ f(a + t v) on the open interval {t : a + t v ∈ G}, v a unit vector.
#[derive(Debug, Clone)]
pub struct LineRestriction {
    field: ScalarField,
    pub base: Vec<f64>,
    pub direction: Vec<f64>,
    /// Interval endpoints; infinite when the line leaves no bound.
    pub lo: f64,
    pub hi: f64,
}

impl LineRestriction {
    pub fn point(&self, t: f64) -> Vec<f64> {
        linalg::axpy(&self.base, t, &self.direction)
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }

    pub fn eval(&self, t: f64) -> Result<f64, FieldError> {
        self.field.value(&self.point(t))
    }

    /// f'(a + t v)·v.
    pub fn derivative(&self, t: f64) -> Result<f64, FieldError> {
        let g = self.field.gradient(&self.point(t))?;
        Ok(linalg::dot(&g, &self.direction))
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }
}

fn boundary_along(body: &ConvexBody, a: &[f64], v: &[f64], sign: f64) -> f64 {
    let inside = |t: f64| body.contains(&linalg::axpy(a, sign * t, v));
    let mut t_in = 0.0;
    let mut t_out = 1.0;
    while inside(t_out) {
        t_in = t_out;
        t_out *= 2.0;
        if t_out > LINE_HORIZON {
            return f64::INFINITY;
        }
    }
    while t_out - t_in > LINE_TOL * t_out.max(1.0) {
        let mid = 0.5 * (t_in + t_out);
        if inside(mid) {
            t_in = mid;
        } else {
            t_out = mid;
        }
    }
    0.5 * (t_in + t_out)
}

pub fn restrict_to_line(f: &ScalarField, a: &[f64], v: &[f64]) -> Result<LineRestriction, FieldError> {
    f.check(a)?;
    let direction = linalg::normalized(v).ok_or_else(|| FieldError::Invalid("direction must be nonzero".into()))?;
    let hi = boundary_along(f.domain(), a, &direction, 1.0);
    let lo = -boundary_along(f.domain(), a, &direction, -1.0);
    Ok(LineRestriction { field: f.clone(), base: a.to_vec(), direction, lo, hi })
}
