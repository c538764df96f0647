//! Sublinear concave profiles η and the boundary functions u, l of a
//! two-dimensional set {x > 1, l(x) < y < u(x)}.

use serde::{Deserialize, Serialize};

use super::ModulusError;

/// A function on (1, ∞) bounding a planar set from above or below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryFn {
    Constant { value: f64 },
    /// `coef · x^exponent + offset`
    Power { coef: f64, exponent: f64, offset: f64 },
    /// Pointwise minimum of affine pieces `[slope, intercept]` (concave).
    MinAffine { pieces: Vec<[f64; 2]> },
    /// Pointwise maximum of affine pieces `[slope, intercept]` (convex).
    MaxAffine { pieces: Vec<[f64; 2]> },
}

impl BoundaryFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BoundaryFn::Constant { value } => *value,
            BoundaryFn::Power { coef, exponent, offset } => coef * x.powf(*exponent) + offset,
            BoundaryFn::MinAffine { pieces } => {
                pieces.iter().map(|[s, c]| s * x + c).fold(f64::INFINITY, f64::min)
            }
            BoundaryFn::MaxAffine { pieces } => {
                pieces.iter().map(|[s, c]| s * x + c).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// One-sided derivative from the right.
    pub fn right_derivative(&self, x: f64) -> f64 {
        match self {
            BoundaryFn::Constant { .. } => 0.0,
            BoundaryFn::Power { coef, exponent, .. } => coef * exponent * x.powf(exponent - 1.0),
            BoundaryFn::MinAffine { pieces } => {
                let v = self.eval(x);
                let tol = 1e-12 * (1.0 + v.abs());
                pieces
                    .iter()
                    .filter(|[s, c]| (s * x + c - v).abs() <= tol)
                    .map(|[s, _]| *s)
                    .fold(f64::INFINITY, f64::min)
            }
            BoundaryFn::MaxAffine { pieces } => {
                let v = self.eval(x);
                let tol = 1e-12 * (1.0 + v.abs());
                pieces
                    .iter()
                    .filter(|[s, c]| (s * x + c - v).abs() <= tol)
                    .map(|[s, _]| *s)
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Kinks of piecewise-affine boundaries in (1, ∞).
    pub fn breakpoints(&self) -> Vec<f64> {
        let pieces = match self {
            BoundaryFn::MinAffine { pieces } | BoundaryFn::MaxAffine { pieces } => pieces,
            _ => return Vec::new(),
        };
        let mut out = Vec::new();
        for (i, [s1, c1]) in pieces.iter().enumerate() {
            for [s2, c2] in &pieces[i + 1..] {
                if (s1 - s2).abs() > 1e-15 {
                    let x = (c2 - c1) / (s1 - s2);
                    if x > 1.0 && x.is_finite() && (self.eval(x) - (s1 * x + c1)).abs() < 1e-9 * (1.0 + x.abs()) {
                        out.push(x);
                    }
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Continuous nondecreasing nonconstant concave η: [0, ∞) → [0, ∞) with
/// η(0) = 0 and η(t)/t → 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Eta {
    /// η(t) = t^α, α ∈ (0, 1).
    Power { alpha: f64 },
    /// Linear interpolation through `[t, η(t)]` knots, starting from the
    /// origin and constant after the last knot.
    PiecewiseLinear { knots: Vec<[f64; 2]> },
    /// η(x) = a·x on [0, 2] and h(x) + b beyond, where h = u − l,
    /// a = max(h(2), h'₊(2)) and b = 2a − h(2).
    LemmaUl { u: BoundaryFn, l: BoundaryFn },
}

impl Eta {
    pub fn sqrt() -> Self {
        Eta::Power { alpha: 0.5 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Eta::Power { alpha } => t.powf(*alpha),
            Eta::PiecewiseLinear { knots } => {
                let mut prev = [0.0, 0.0];
                for k in knots {
                    if t <= k[0] {
                        if k[0] == prev[0] {
                            return k[1];
                        }
                        return prev[1] + (k[1] - prev[1]) * (t - prev[0]) / (k[0] - prev[0]);
                    }
                    prev = *k;
                }
                prev[1]
            }
            Eta::LemmaUl { u, l } => {
                let (a, b) = ul_constants(u, l);
                if t <= 2.0 {
                    a * t
                } else {
                    u.eval(t) - l.eval(t) + b
                }
            }
        }
    }

    /// Points where η may fail to be smooth, used to split quadrature.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Eta::Power { .. } => Vec::new(),
            Eta::PiecewiseLinear { knots } => knots.iter().map(|k| k[0]).filter(|&t| t > 0.0).collect(),
            Eta::LemmaUl { u, l } => {
                let mut b = vec![2.0];
                b.extend(u.breakpoints().into_iter().filter(|&x| x > 2.0));
                b.extend(l.breakpoints().into_iter().filter(|&x| x > 2.0));
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            }
        }
    }

    /// Grid check of the profile's hypotheses.
    pub fn validate(&self) -> Result<(), ModulusError> {
        let bad = |msg: String| Err(ModulusError::InvalidEta(msg));
        match self {
            Eta::Power { alpha } if !(*alpha > 0.0 && *alpha < 1.0) => {
                return bad(format!("power exponent {alpha} not in (0, 1)"));
            }
            Eta::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return bad("piecewise-linear eta needs at least one knot".into());
                }
                let mut prev = [0.0, 0.0];
                for (i, k) in knots.iter().enumerate() {
                    let first_at_origin = i == 0 && k[0] == 0.0;
                    if !(k[0] > prev[0] || first_at_origin) || !k[1].is_finite() {
                        return bad(format!("knot {i} not strictly increasing in t"));
                    }
                    if first_at_origin && k[1] != 0.0 {
                        return bad("eta(0) must be 0".into());
                    }
                    prev = *k;
                }
            }
            _ => {}
        }
        if self.eval(0.0) != 0.0 {
            return bad(format!("eta(0) = {} must be 0", self.eval(0.0)));
        }
        let grid = super::log_grid(1e-6, 1e12, 361);
        let tol = 1e-9;
        let vals: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("eta must be finite and nonnegative".into());
        }
        for i in 1..grid.len() {
            if vals[i] < vals[i - 1] - tol * (1.0 + vals[i - 1].abs()) {
                return bad(format!("eta decreases near t = {}", grid[i]));
            }
        }
        for i in 1..grid.len() - 1 {
            let defect = super::chord_defect(&grid, &vals, i);
            if defect > tol * (1.0 + vals[i].abs()) {
                return bad(format!("eta not concave near t = {}", grid[i]));
            }
        }
        if vals.last() <= vals.first() {
            return bad("eta is constant".into());
        }
        let ratios: Vec<f64> = grid.iter().zip(&vals).map(|(t, v)| v / t).collect();
        let last = *ratios.last().expect("nonempty grid");
        let at_one = self.eval(1.0);
        if !(last < 1e-3 * at_one.max(1e-300)) {
            return bad(format!("eta(t)/t = {last} at t = 1e12 does not decay"));
        }
        if at_one <= 0.0 {
            return bad("eta(1) must be positive".into());
        }
        Ok(())
    }
}

/// (a, b) of the u/l normalisation.
pub fn ul_constants(u: &BoundaryFn, l: &BoundaryFn) -> (f64, f64) {
    let h2 = u.eval(2.0) - l.eval(2.0);
    let dh2 = u.right_derivative(2.0) - l.right_derivative(2.0);
    let a = h2.max(dh2);
    (a, 2.0 * a - h2)
}
