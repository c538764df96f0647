//! Counterexample witnesses on degenerate unbounded bodies: a field that is
//! Cω-semiconvex and Cω-semiconcave, together with a ray along which its
//! gradient is uniformly continuous with modulus Dω for no D.

mod construct;
mod refute;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use construct::construct_witness;
pub use refute::{log_ray_grid, power_schedule, ray_gap, GRID_RATIO, refute_c1omega, refute_up_to, RefutationEntry, RefutationReport, Violation};

use crate::fields::{CatalogId, FieldError, FieldSpec, ScalarField};
use crate::geometry::{check_rchl, recession_cone, ConvexBody, GeometryError, LinearMap};
use crate::linalg::{self, norm2};
use crate::lp::{LinearProgram, Sense};
use crate::modulus::{build_lemma_e_modulus, log_grid, ul_constants, BoundaryFn, Eta, Modulus, ModulusError, DEFAULT_QUAD_TOL};
use crate::regularity::{check_envelope, check_semiconcave, check_semiconvex, CheckConfig, CheckError};
use crate::report::MarginReport;
use crate::sampler::Sampler;

/// Safety inflation of the grid supremum defining the wedge constant.
const OD_INFLATION: f64 = 1.05;
/// Largest power-of-two multiplier tried for a lifted constant.
const MAX_LIFT_DOUBLINGS: u32 = 20;
/// Samples used for the sampled preconditions of a lift.
const LIFT_PROBES: usize = 1000;
/// Ray parameters at which containment is verified.
pub const RAY_PROBES: [f64; 5] = [0.0, 1.0, 10.0, 1e3, 1e6];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WitnessError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Modulus(#[from] ModulusError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("precondition failed: {reason}")]
    Precondition { reason: String, point: Option<Vec<f64>> },
    #[error("the body is not degenerate unbounded ({0}); the characterisation by semiconvexity applies instead")]
    Classification(String),
    #[error("construction recursed deeper than the dimension {0}")]
    Depth(usize),
    #[error("{0}")]
    Unsupported(String),
}

fn precondition(reason: impl Into<String>, point: Option<Vec<f64>>) -> WitnessError {
    WitnessError::Precondition { reason: reason.into(), point }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub a: Vec<f64>,
    /// Unit direction.
    pub v: Vec<f64>,
}

impl Ray {
    pub fn point(&self, t: f64) -> Vec<f64> {
        linalg::axpy(&self.a, t, &self.v)
    }
}

/// Growth type of the gradient gap along the ray, which fixes how far a
/// refutation can escalate D in floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// Gap grows like t against ω(t) = √t: violations at t ≈ 4D².
    Strip,
    /// Gap grows like log t against ω ≈ √log t: violations at t ≈ e^{D²}.
    LogWedge,
}

impl WitnessKind {
    pub fn d_ceiling(self) -> f64 {
        match self {
            WitnessKind::Strip => 1024.0,
            WitnessKind::LogWedge => 16.0,
        }
    }

    pub fn t_ceiling(self) -> f64 {
        match self {
            WitnessKind::Strip => 1e12,
            WitnessKind::LogWedge => 1e300,
        }
    }
}

/// One step of a witness construction, in the order performed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum TraceStep {
    Strip,
    Wedge { eta: Eta, od_constant: f64 },
    Ul { u: BoundaryFn, l: BoundaryFn, a: f64, b: f64 },
    Lift {
        matrix: Vec<Vec<f64>>,
        alpha: f64,
        beta: f64,
        /// A gap bound D̃ on the lifted ray gives D̃ times this on the base ray.
        d_factor: f64,
        base_constant: f64,
        constant: f64,
        kernel_meets_recession: bool,
    },
    Affine { matrix: Vec<Vec<f64>>, shift: Vec<f64>, kappa: f64, constant: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub body: ConvexBody,
    pub field: ScalarField,
    pub modulus: Modulus,
    pub constant: f64,
    pub ray: Ray,
    pub kind: WitnessKind,
    pub trace: Vec<TraceStep>,
    pub refutation: Option<RefutationReport>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessSpec {
    body: ConvexBody,
    field: FieldSpec,
    modulus: Modulus,
    #[serde(rename = "C")]
    constant: f64,
    ray: Ray,
    kind: WitnessKind,
    trace: Vec<TraceStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    refutation: Option<RefutationReport>,
}

impl Serialize for Witness {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        WitnessSpec {
            body: self.body.clone(),
            field: self.field.spec().clone(),
            modulus: self.modulus.clone(),
            constant: self.constant,
            ray: self.ray.clone(),
            kind: self.kind,
            trace: self.trace.clone(),
            refutation: self.refutation.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Witness {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = WitnessSpec::deserialize(d)?;
        let field = ScalarField::new(w.field, w.body.clone()).map_err(serde::de::Error::custom)?;
        Ok(Witness {
            body: w.body,
            field,
            modulus: w.modulus,
            constant: w.constant,
            ray: w.ray,
            kind: w.kind,
            trace: w.trace,
            refutation: w.refutation,
        })
    }
}

impl Witness {
    /// The modulus C·ω the field is claimed to satisfy.
    pub fn scaled_modulus(&self) -> Result<Modulus, ModulusError> {
        crate::modulus::scale_modulus(&self.modulus, self.constant)
    }

    /// Semiconvexity, semiconcavity and envelope reports with C·ω.
    pub fn margin_suite(&self, cfg: &CheckConfig) -> Result<Vec<MarginReport>, CheckError> {
        let m = self.scaled_modulus()?;
        Ok(vec![
            check_semiconvex(&self.field, &m, cfg)?,
            check_semiconcave(&self.field, &m, cfg)?,
            check_envelope(&self.field, &m, cfg)?,
        ])
    }

    /// First probe parameter whose ray point leaves the body.
    pub fn ray_escape(&self) -> Option<f64> {
        RAY_PROBES.iter().copied().find(|&t| !self.body.contains(&self.ray.point(t)))
    }

    /// Closed-form violation scale t(D) = 4D² of the bare strip witness.
    pub fn predicted_violation(&self, d: f64) -> Option<f64> {
        matches!(self.trace.as_slice(), [TraceStep::Strip]).then_some(4.0 * d * d)
    }

    /// The same witness with its field and body restricted to `body`.
    pub fn restricted(&self, body: ConvexBody) -> Result<Self, WitnessError> {
        let mut w = self.clone();
        w.field = self.field.with_domain(body.clone())?;
        w.body = body;
        Ok(w)
    }
}

/// f(x) = x₁x₂/2 on ℝ×(0,1) with ω(t) = √t and C = 1, along (0, ½) + t e₁.
pub fn build_strip_witness() -> Witness {
    let body = ConvexBody::Strip;
    let field = ScalarField::new(FieldSpec::catalog(CatalogId::Product, 0.5), body.clone()).expect("catalog field");
    Witness {
        body,
        field,
        modulus: Modulus::sqrt(),
        constant: 1.0,
        ray: Ray { a: vec![0.0, 0.5], v: vec![1.0, 0.0] },
        kind: WitnessKind::Strip,
        trace: vec![TraceStep::Strip],
        refutation: None,
    }
}

/// Smallest D (inflated) with η(t) log t ≤ D t ω(t) and η(t) ≤ D t on a
/// log grid of [1, 10⁶].
pub fn od_constant(eta: &Eta, m: &Modulus) -> Result<f64, ModulusError> {
    let mut d: f64 = 0.0;
    for t in log_grid(1.0, 1e6, 601) {
        let e = eta.eval(t);
        d = d.max(e * t.ln() / (t * m.eval(t)?)).max(e / t);
    }
    Ok(OD_INFLATION * d)
}

/// f(x) = log(x₁) x₂ on {x₁ > 1, |x₂| < η(x₁)} with the integral modulus
/// of η and C = 9D + 1, along (2, 0) + t e₁.
pub fn build_wedge_witness(eta: Eta) -> Result<Witness, WitnessError> {
    let body = ConvexBody::wedge(eta.clone())?;
    let modulus = build_lemma_e_modulus(eta.clone(), DEFAULT_QUAD_TOL)?;
    let d = od_constant(&eta, &modulus)?;
    let field = ScalarField::new(FieldSpec::catalog(CatalogId::Logwedge, 1.0), body.clone())?;
    Ok(Witness {
        body,
        field,
        modulus,
        constant: 9.0 * d + 1.0,
        ray: Ray { a: vec![2.0, 0.0], v: vec![1.0, 0.0] },
        kind: WitnessKind::LogWedge,
        trace: vec![TraceStep::Wedge { eta, od_constant: d }],
        refutation: None,
    })
}

/// Grid check of the hypotheses on u and l: signs, monotonicity,
/// concavity/convexity and sublinear growth.
pub fn check_ul_hypotheses(u: &BoundaryFn, l: &BoundaryFn) -> Result<(), WitnessError> {
    let grid = log_grid(1.0 + 1e-9, 1e12, 400);
    let tol = 1e-9;
    for (name, f, sign) in [("u", u, 1.0), ("l", l, -1.0)] {
        let vals: Vec<f64> = grid.iter().map(|&x| sign * f.eval(x)).collect();
        for (i, (&x, &v)) in grid.iter().zip(&vals).enumerate() {
            let at = Some(vec![x, sign * v]);
            if !(v > 0.0) || !v.is_finite() {
                return Err(precondition(format!("{name} must be {} at x = {x}", if sign > 0.0 { "positive" } else { "negative" }), at));
            }
            if i > 0 && v < vals[i - 1] - tol * (1.0 + v.abs()) {
                return Err(precondition(format!("{name} must be monotone away from 0 at x = {x}"), at));
            }
            if i > 0 && i + 1 < grid.len() {
                let defect = crate::modulus::chord_defect(&grid, &vals, i);
                if defect > tol * (1.0 + v.abs()) {
                    return Err(precondition(format!("{name} fails {} at x = {x}", if sign > 0.0 { "concavity" } else { "convexity" }), at));
                }
            }
        }
        let x_end = *grid.last().expect("grid");
        let ratio = vals.last().expect("grid") / x_end;
        if ratio > 1e-3 {
            return Err(precondition(format!("{name}(x)/x = {ratio} at x = {x_end} does not tend to 0"), Some(vec![x_end, sign * vals[vals.len() - 1]])));
        }
    }
    Ok(())
}

/// The wedge witness for η = max-profile of u − l, restricted to
/// {x > 1, l(x) < y < u(x)}.
pub fn build_ul_witness(u: BoundaryFn, l: BoundaryFn) -> Result<Witness, WitnessError> {
    check_ul_hypotheses(&u, &l)?;
    let (a, b) = ul_constants(&u, &l);
    let eta = Eta::LemmaUl { u: u.clone(), l: l.clone() };
    let wedge = build_wedge_witness(eta)?;
    let mut w = wedge.restricted(ConvexBody::Ul { u: u.clone(), l: l.clone() })?;
    w.trace.insert(0, TraceStep::Ul { u, l, a, b });
    Ok(w)
}

/// Transport by z ↦ M z + shift: f̃ = f∘A⁻¹ on A(G) with constant
/// C·κ·max(1, κ), κ = ‖M⁻¹‖₂.
pub fn apply_affine(w: &Witness, matrix: &DMatrix<f64>, shift: &[f64]) -> Result<Witness, WitnessError> {
    let n = w.body.dim();
    if matrix.nrows() != n || matrix.ncols() != n || shift.len() != n {
        return Err(WitnessError::Unsupported(format!("affine map must act on ℝ^{n}")));
    }
    let inv = linalg::inverse(matrix).ok_or(GeometryError::Singular)?;
    if linalg::is_identity(matrix, 0.0) && shift.iter().all(|s| *s == 0.0) {
        return Ok(w.clone());
    }
    let kappa = linalg::spectral_norm(&inv);
    let constant = w.constant * kappa * kappa.max(1.0);
    let body = ConvexBody::affine(w.body.clone(), matrix.clone(), shift.to_vec())?;
    let back_shift = linalg::scale(&linalg::mat_vec(&inv, shift), -1.0);
    let field = w.field.compose_affine(&linalg::matrix_rows(&inv), &back_shift, body.clone())?;
    let a = linalg::axpy(&linalg::mat_vec(matrix, &w.ray.a), 1.0, shift);
    let v = linalg::normalized(&linalg::mat_vec(matrix, &w.ray.v)).ok_or(GeometryError::Singular)?;
    let mut trace = w.trace.clone();
    trace.push(TraceStep::Affine { matrix: linalg::matrix_rows(matrix), shift: shift.to_vec(), kappa, constant });
    Ok(Witness { body, field, modulus: w.modulus.clone(), constant, ray: Ray { a, v }, kind: w.kind, trace, refutation: None })
}

/// A point of G ∩ L⁻¹(y) as deep inside G as possible, for polyhedral G.
fn fiber_point(rows: &[Vec<f64>], rhs: &[f64], l: &LinearMap, y: &[f64]) -> Option<Vec<f64>> {
    let n = l.n();
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = LinearProgram::maximize(obj).bound(n, f64::NEG_INFINITY, 1.0);
    for (r, b) in rows.iter().zip(rhs) {
        let mut c = r.clone();
        c.push(norm2(r));
        lp.constraint(c, Sense::Le, *b);
    }
    for (r, yi) in l.rows().into_iter().zip(y) {
        let mut c = r;
        c.push(0.0);
        lp.constraint(c, Sense::Eq, *yi);
    }
    let sol = lp.solve().ok()?;
    (sol.objective > 1e-9).then(|| sol.x[..n].to_vec())
}

/// Some ṽ in the cone {A ṽ ≤ 0} with L ṽ = z.
fn cone_preimage(cone_rows: &[Vec<f64>], l: &LinearMap, z: &[f64]) -> Option<Vec<f64>> {
    let n = l.n();
    let mut lp = LinearProgram::minimize(vec![0.0; n]);
    for j in 0..n {
        lp = lp.bound(j, -1e6, 1e6);
    }
    for r in cone_rows {
        lp.constraint(r.clone(), Sense::Le, 0.0);
    }
    for (r, zi) in l.rows().into_iter().zip(z) {
        lp.constraint(r, Sense::Eq, *zi);
    }
    lp.solve().ok().map(|s| s.x)
}

/// f̃ = f∘L on G, for a surjection L with L(G) = w.body and
/// rec(w.body) ⊂ L(rec G). The lifted constant is the smallest C·2^k whose
/// margin suite passes.
pub fn lift_witness(w: &Witness, l: &LinearMap, g: &ConvexBody) -> Result<Witness, WitnessError> {
    lift_witness_with(w, l, g, &CheckConfig::default())
}

pub fn lift_witness_with(w: &Witness, l: &LinearMap, g: &ConvexBody, cfg: &CheckConfig) -> Result<Witness, WitnessError> {
    let (n, k) = (g.dim(), w.body.dim());
    if l.n() != n || l.k() != k {
        return Err(WitnessError::Unsupported(format!("map is ℝ^{} → ℝ^{}, expected ℝ^{n} → ℝ^{k}", l.n(), l.k())));
    }
    let hrep = g.to_hrep();
    let probes = Sampler::new(cfg.sampler.seed, LIFT_PROBES);

    // L(G) ⊂ H and H ⊂ L(G), sampled
    for x in probes.points(g).map_err(CheckError::from)? {
        let y = l.apply(&x);
        if !w.body.contains(&y) {
            return Err(precondition("L(G) is not contained in the base body", Some(x)));
        }
    }
    if let Some((rows, rhs)) = &hrep {
        for y in probes.points(&w.body).map_err(CheckError::from)? {
            if fiber_point(rows, rhs, l, &y).is_none() {
                return Err(precondition("the base body is not contained in L(G)", Some(y)));
            }
        }
    }

    // rec(H) ⊂ L(rec G) on generators
    let rec_g = recession_cone(g)?;
    let rec_h = recession_cone(&w.body)?;
    let gens_h = rec_h.generators().ok_or_else(|| WitnessError::Unsupported("recession cone too large to enumerate".into()))?;
    for z in &gens_h {
        if cone_preimage(&rec_g.rows, l, z).is_none() {
            return Err(precondition("rec of the base body is not contained in L(rec G)", Some(z.clone())));
        }
    }
    let kernel_meets_recession = matches!(
        check_rchl(g, l, LIFT_PROBES, cfg.sampler.seed),
        Err(GeometryError::KernelMeetsRecession { .. })
    );

    // lifted ray
    let mut v_lift = l.min_norm_preimage(&w.ray.v);
    if !rec_g.contains(&v_lift) {
        v_lift = cone_preimage(&rec_g.rows, l, &w.ray.v)
            .ok_or_else(|| precondition("the ray direction has no preimage in rec G", Some(w.ray.v.clone())))?;
    }
    let mut a_lift = l.min_norm_preimage(&w.ray.a);
    if !g.contains(&a_lift) {
        a_lift = hrep
            .as_ref()
            .and_then(|(rows, rhs)| fiber_point(rows, rhs, l, &w.ray.a))
            .ok_or_else(|| precondition("the ray base has no preimage in G", Some(w.ray.a.clone())))?;
    }
    let alpha = LinearMap::alpha(&v_lift, &w.ray.v);
    let beta = l.beta();
    let ray = Ray { a: a_lift, v: linalg::normalized(&v_lift).ok_or(GeometryError::Singular)? };

    let field = w.field.compose_affine(&l.rows(), &vec![0.0; k], g.clone())?;
    let mut lifted = Witness {
        body: g.clone(),
        field,
        modulus: w.modulus.clone(),
        constant: w.constant,
        ray,
        kind: w.kind,
        trace: w.trace.clone(),
        refutation: None,
    };
    if let Some(t) = lifted.ray_escape() {
        return Err(precondition("the lifted ray leaves G", Some(lifted.ray.point(t))));
    }
    let mut found = false;
    for _ in 0..=MAX_LIFT_DOUBLINGS {
        if lifted.margin_suite(cfg)?.iter().all(|r| r.pass) {
            found = true;
            break;
        }
        lifted.constant *= 2.0;
    }
    if !found {
        return Err(precondition(format!("no lifted constant up to C·2^{MAX_LIFT_DOUBLINGS} passes the margin suite"), None));
    }
    lifted.trace.push(TraceStep::Lift {
        matrix: l.rows(),
        alpha,
        beta,
        d_factor: beta * alpha.max(1.0),
        base_constant: w.constant,
        constant: lifted.constant,
        kernel_meets_recession,
    });
    Ok(lifted)
}
