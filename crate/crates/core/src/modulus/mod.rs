//! Moduli of continuity ω: [0, ∞) → [0, ∞), nondecreasing with ω(0⁺) = 0.

mod eta;
pub mod quadrature;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use eta::{ul_constants, BoundaryFn, Eta};
use quadrature::adaptive_simpson;

use crate::report::{MarginReport, WorstCase};

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Values of ω(10⁻ᵏ), k = 1..=12, must end below this.
pub const TAIL_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModulusError {
    #[error("modulus argument {0} is negative or not finite")]
    Domain(f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid eta profile: {0}")]
    InvalidEta(String),
    #[error("modulus construction failed: {0}")]
    Construction(String),
    #[error("quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
}

impl From<quadrature::QuadratureError> for ModulusError {
    fn from(e: quadrature::QuadratureError) -> Self {
        ModulusError::Quadrature { a: e.a, b: e.b }
    }
}

/// Serialized description of a modulus. The structural flags are derived
/// from the kind, so this is all that is needed to rebuild one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModulusSpec {
    Zero,
    Linear { slope: f64 },
    Power {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    SqrtLog,
    LemmaE {
        eta: Eta,
        #[serde(default = "default_quad_tol")]
        quad_tol: f64,
    },
    Scaled { base: Box<ModulusSpec>, factor: f64 },
    Tabulated { knots: Vec<[f64; 2]> },
}

fn one() -> f64 {
    1.0
}

fn default_quad_tol() -> f64 {
    DEFAULT_QUAD_TOL
}

#[derive(Debug, Clone)]
enum Kind {
    Zero,
    Linear(f64),
    Power { exponent: f64, scale: f64 },
    SqrtLog,
    LemmaE(Arc<LemmaE>),
    Scaled(Box<Modulus>, f64),
    Tabulated(Vec<[f64; 2]>),
}

/// The integral construction ω(t) = ω̃(t) + √log(1 + t) with ω̃(t) = t on
/// [0, 1] and ω̃(t) = 1 + η(1)⁻¹ ∫₁ᵗ η(u)/u² du beyond.
///
/// The integral is evaluated in the variable s = log u, where it becomes
/// ∫ η(eˢ) e⁻ˢ ds; cumulative values at integer s are tabulated once.
#[derive(Debug)]
struct LemmaE {
    eta: Eta,
    quad_tol: f64,
    eta_one: f64,
    log_breaks: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Last integer below log(f64::MAX) ≈ 709.78.
const LOG_TABLE_END: usize = 709;

impl LemmaE {
    fn new(eta: Eta, quad_tol: f64) -> Result<Self, ModulusError> {
        let eta_one = eta.eval(1.0);
        if !(eta_one > 0.0) {
            return Err(ModulusError::Construction(format!("eta(1) = {eta_one} must be positive")));
        }
        let log_breaks = eta.breakpoints().into_iter().filter(|&t| t > 1.0).map(f64::ln).collect();
        let mut this = Self { eta, quad_tol, eta_one, log_breaks, cumulative: Vec::with_capacity(LOG_TABLE_END + 1) };
        let mut acc = 0.0;
        this.cumulative.push(0.0);
        for k in 0..LOG_TABLE_END {
            acc += this.integrate(k as f64, (k + 1) as f64)?;
            this.cumulative.push(acc);
        }
        Ok(this)
    }

    fn integrand(&self, s: f64) -> f64 {
        self.eta.eval(s.exp()) * (-s).exp()
    }

    fn integrate(&self, s0: f64, s1: f64) -> Result<f64, ModulusError> {
        let f = |s: f64| self.integrand(s);
        let mut total = 0.0;
        let mut lo = s0;
        for &b in self.log_breaks.iter().filter(|&&b| b > s0 && b < s1) {
            total += adaptive_simpson(&f, lo, b, self.quad_tol)?;
            lo = b;
        }
        total += adaptive_simpson(&f, lo, s1, self.quad_tol)?;
        Ok(total)
    }

    /// ∫₁ᵗ η(u)/u² du for t ≥ 1.
    fn integral(&self, t: f64) -> Result<f64, ModulusError> {
        let s = t.ln();
        let k = (s.floor() as usize).min(LOG_TABLE_END);
        Ok(self.cumulative[k] + self.integrate(k as f64, s)?)
    }

    fn tilde(&self, t: f64) -> Result<f64, ModulusError> {
        if t <= 1.0 {
            Ok(t)
        } else {
            Ok(1.0 + self.integral(t)? / self.eta_one)
        }
    }
}

/// A modulus of continuity with structural flags.
#[derive(Debug, Clone)]
pub struct Modulus {
    kind: Kind,
    concave: bool,
    unbounded: bool,
}

impl PartialEq for Modulus {
    fn eq(&self, other: &Self) -> bool {
        self.spec() == other.spec()
    }
}

impl Modulus {
    pub fn zero() -> Self {
        Self { kind: Kind::Zero, concave: true, unbounded: false }
    }

    pub fn linear(slope: f64) -> Result<Self, ModulusError> {
        if !(slope >= 0.0 && slope.is_finite()) {
            return Err(ModulusError::Parameter(format!("linear slope {slope} must be finite and >= 0")));
        }
        Ok(Self { kind: Kind::Linear(slope), concave: true, unbounded: slope > 0.0 })
    }

    pub fn power(exponent: f64, scale: f64) -> Result<Self, ModulusError> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(ModulusError::Parameter(format!("power exponent {exponent} not in (0, 1]")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(ModulusError::Parameter(format!("power scale {scale} must be positive")));
        }
        Ok(Self { kind: Kind::Power { exponent, scale }, concave: true, unbounded: true })
    }

    pub fn sqrt() -> Self {
        Self::power(0.5, 1.0).expect("valid parameters")
    }

    /// ω(t) = √log(1 + t).
    pub fn sqrt_log() -> Self {
        Self { kind: Kind::SqrtLog, concave: true, unbounded: true }
    }

    /// Piecewise-linear modulus through `[t, ω(t)]` knots, joined to the
    /// origin and constant after the last knot. Knots must be increasing in t;
    /// values are not checked here (see [`check_modulus_axioms`]).
    pub fn tabulated(knots: Vec<[f64; 2]>) -> Result<Self, ModulusError> {
        if knots.is_empty() {
            return Err(ModulusError::Parameter("tabulated modulus needs knots".into()));
        }
        let mut prev_t = -1.0;
        for k in &knots {
            if !(k[0] > prev_t && k[0] >= 0.0 && k[0].is_finite() && k[1].is_finite()) {
                return Err(ModulusError::Parameter("tabulated knots must be finite and increasing in t".into()));
            }
            prev_t = k[0];
        }
        let concave = tabulated_is_concave(&knots);
        Ok(Self { kind: Kind::Tabulated(knots), concave, unbounded: false })
    }

    pub fn from_spec(spec: &ModulusSpec) -> Result<Self, ModulusError> {
        match spec {
            ModulusSpec::Zero => Ok(Self::zero()),
            ModulusSpec::Linear { slope } => Self::linear(*slope),
            ModulusSpec::Power { exponent, scale } => Self::power(*exponent, *scale),
            ModulusSpec::SqrtLog => Ok(Self::sqrt_log()),
            ModulusSpec::LemmaE { eta, quad_tol } => build_lemma_e_modulus(eta.clone(), *quad_tol),
            ModulusSpec::Scaled { base, factor } => scale_modulus(&Self::from_spec(base)?, *factor),
            ModulusSpec::Tabulated { knots } => Self::tabulated(knots.clone()),
        }
    }

    pub fn spec(&self) -> ModulusSpec {
        match &self.kind {
            Kind::Zero => ModulusSpec::Zero,
            Kind::Linear(s) => ModulusSpec::Linear { slope: *s },
            Kind::Power { exponent, scale } => ModulusSpec::Power { exponent: *exponent, scale: *scale },
            Kind::SqrtLog => ModulusSpec::SqrtLog,
            Kind::LemmaE(e) => ModulusSpec::LemmaE { eta: e.eta.clone(), quad_tol: e.quad_tol },
            Kind::Scaled(b, c) => ModulusSpec::Scaled { base: Box::new(b.spec()), factor: *c },
            Kind::Tabulated(k) => ModulusSpec::Tabulated { knots: k.clone() },
        }
    }

    pub fn is_concave(&self) -> bool {
        self.concave
    }

    pub fn is_unbounded(&self) -> bool {
        self.unbounded
    }

    /// Slope c when ω(t) = c·t.
    pub fn linear_slope(&self) -> Option<f64> {
        match &self.kind {
            Kind::Zero => Some(0.0),
            Kind::Linear(s) => Some(*s),
            Kind::Power { exponent, scale } if *exponent == 1.0 => Some(*scale),
            Kind::Scaled(b, c) => b.linear_slope().map(|s| s * c),
            _ => None,
        }
    }

    /// The profile η when this is a Lemma-E modulus.
    pub fn eta(&self) -> Option<&Eta> {
        match &self.kind {
            Kind::LemmaE(e) => Some(&e.eta),
            Kind::Scaled(b, _) => b.eta(),
            _ => None,
        }
    }

    /// ω(t). Errors on negative or non-finite `t`.
    pub fn eval(&self, t: f64) -> Result<f64, ModulusError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(ModulusError::Domain(t));
        }
        Ok(match &self.kind {
            Kind::Zero => 0.0,
            Kind::Linear(s) => s * t,
            Kind::Power { exponent, scale } => scale * t.powf(*exponent),
            Kind::SqrtLog => t.ln_1p().sqrt(),
            Kind::LemmaE(e) => e.tilde(t)? + t.ln_1p().sqrt(),
            Kind::Scaled(b, c) => c * b.eval(t)?,
            Kind::Tabulated(knots) => tabulated_eval(knots, t),
        })
    }

    /// ω̃ part of a Lemma-E modulus (without the √log term).
    pub fn lemma_e_tilde(&self, t: f64) -> Option<Result<f64, ModulusError>> {
        match &self.kind {
            Kind::LemmaE(e) if t >= 0.0 && t.is_finite() => Some(e.tilde(t)),
            Kind::LemmaE(_) => Some(Err(ModulusError::Domain(t))),
            _ => None,
        }
    }
}

impl Serialize for Modulus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Modulus {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let spec = ModulusSpec::deserialize(d)?;
        Modulus::from_spec(&spec).map_err(serde::de::Error::custom)
    }
}

fn tabulated_eval(knots: &[[f64; 2]], t: f64) -> f64 {
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

fn tabulated_is_concave(knots: &[[f64; 2]]) -> bool {
    let mut pts = Vec::with_capacity(knots.len() + 1);
    if knots[0][0] > 0.0 {
        pts.push([0.0, 0.0]);
    }
    pts.extend_from_slice(knots);
    let mut slopes: Vec<f64> = pts.windows(2).map(|w| (w[1][1] - w[0][1]) / (w[1][0] - w[0][0])).collect();
    // constant extension after the last knot
    slopes.push(0.0);
    pts[0] == [0.0, 0.0] && slopes.windows(2).all(|w| w[1] <= w[0])
}

/// The Lemma-E modulus for a profile η.
pub fn build_lemma_e_modulus(eta: Eta, quad_tol: f64) -> Result<Modulus, ModulusError> {
    if !(quad_tol > 0.0 && quad_tol.is_finite()) {
        return Err(ModulusError::Parameter(format!("quad_tol {quad_tol} must be positive")));
    }
    eta.validate()?;
    let inner = LemmaE::new(eta, quad_tol)?;
    Ok(Modulus { kind: Kind::LemmaE(Arc::new(inner)), concave: true, unbounded: true })
}

/// Pointwise c·ω; flags are preserved.
pub fn scale_modulus(m: &Modulus, c: f64) -> Result<Modulus, ModulusError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(ModulusError::Domain(c));
    }
    Ok(Modulus { kind: Kind::Scaled(Box::new(m.clone()), c), concave: m.concave, unbounded: m.unbounded })
}

/// `count` points geometrically spaced on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// How far `vals[i]` lies below the chord through its neighbours; positive
/// values indicate a concavity violation. Works on uneven grids.
pub fn chord_defect(grid: &[f64], vals: &[f64], i: usize) -> f64 {
    let (t0, t1, t2) = (grid[i - 1], grid[i], grid[i + 1]);
    let w = (t1 - t0) / (t2 - t0);
    (1.0 - w) * vals[i - 1] + w * vals[i + 1] - vals[i]
}

/// Monotonicity margin on `grid` plus the ω(10⁻ᵏ) tail.
pub fn check_modulus_axioms(m: &Modulus, grid: &[f64], tol: f64) -> Result<MarginReport, ModulusError> {
    if grid.is_empty() {
        return Err(ModulusError::Parameter("grid must be nonempty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(ModulusError::Parameter("grid must be increasing and nonnegative".into()));
    }
    let vals = grid.iter().map(|&t| m.eval(t)).collect::<Result<Vec<_>, _>>()?;
    let tail = (1..=12).map(|k| m.eval(10f64.powi(-k))).collect::<Result<Vec<_>, _>>()?;
    let scale = 1.0 + vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let mut min_margin = f64::INFINITY;
    let mut worst = None;
    for i in 1..grid.len() {
        let d = vals[i] - vals[i - 1];
        if d < min_margin {
            min_margin = d;
            worst = Some(i - 1);
        }
    }
    if grid.len() == 1 {
        min_margin = 0.0;
    }
    let tail_ok = tail[11] < TAIL_LIMIT;
    let pass = min_margin >= -tol * scale && tail_ok && vals.iter().all(|v| *v >= 0.0);
    let mut details = BTreeMap::new();
    details.insert("tail".into(), serde_json::json!(tail));
    details.insert("tail_ok".into(), serde_json::json!(tail_ok));
    Ok(MarginReport {
        check: "modulus_axioms".into(),
        n_samples: grid.len(),
        min_margin,
        witness: worst.map(|i| WorstCase {
            index: i,
            points: vec![vec![grid[i]], vec![grid[i + 1]]],
            values: vec![vals[i], vals[i + 1]],
            lambda: None,
        }),
        seed: None,
        tol,
        scale,
        pass,
        details,
    })
}

/// Growth class of a modulus at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticClass {
    /// ω(t)/t → 0 but ω is not o(log t).
    SubLinearAtInfinity,
    /// ω(t)/t does not decay.
    LinearLike,
    /// ω(t)/log t decreases at infinity.
    SuperLogDecay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticsProbe {
    /// (t, ω(t)/t) at the grid points ≤ 10⁻³.
    pub near_zero: Vec<[f64; 2]>,
    /// (t, ω(t)/t, ω(t)/log t) at the grid points ≥ 10³.
    pub near_infinity: Vec<[f64; 3]>,
    pub class: AsymptoticClass,
}

pub fn asymptotics_probe(m: &Modulus, t_grid: &[f64]) -> Result<AsymptoticsProbe, ModulusError> {
    let lo = t_grid.first().copied().unwrap_or(f64::NAN);
    let hi = t_grid.last().copied().unwrap_or(f64::NAN);
    if !(lo > 0.0 && lo <= 1e-6 && hi >= 1e6) || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ModulusError::Parameter("probe grid must be increasing and span [1e-6, 1e6]".into()));
    }
    let mut near_zero = Vec::new();
    let mut near_infinity = Vec::new();
    for &t in t_grid {
        let w = m.eval(t)?;
        if t <= 1e-3 {
            near_zero.push([t, w / t]);
        }
        if t >= 1e3 {
            near_infinity.push([t, w / t, w / t.ln()]);
        }
    }
    let mid = hi.sqrt();
    let (w_hi, w_mid) = (m.eval(hi)?, m.eval(mid)?);
    let (lin_hi, lin_mid) = (w_hi / hi, w_mid / mid);
    let (log_hi, log_mid) = (w_hi / hi.ln(), w_mid / mid.ln());
    let class = if lin_hi > 0.0 && lin_hi >= 0.5 * lin_mid {
        AsymptoticClass::LinearLike
    } else if log_hi < log_mid {
        AsymptoticClass::SuperLogDecay
    } else {
        AsymptoticClass::SubLinearAtInfinity
    };
    Ok(AsymptoticsProbe { near_zero, near_infinity, class })
}
