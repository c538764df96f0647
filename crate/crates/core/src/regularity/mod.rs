//! Sampled margins of the semiconvexity inequality, the first-order
//! envelope, the directional gap, and the derivative bounds they imply.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fields::{restrict_to_line, FieldError, ScalarField};
use crate::geometry::{classify_body, eccentricity, Classification, GeometryError};
use crate::linalg::{self, dot};
use crate::modulus::{Modulus, ModulusError};
use crate::norm::Norm;
use crate::report::{MarginReport, WorstCase};
use crate::sampler::{gaussian, Sampler, SamplerError};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Modulus(#[from] ModulusError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("the sampler produced no points")]
    NoSamples,
    #[error("no theorem applies: {0}")]
    NoTheoremApplies(String),
    #[error("closed ball is not contained in the body: boundary point {point:?} lies outside")]
    BallNotContained { point: Vec<f64> },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

/// Sampling, tolerance and norm shared by all checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub sampler: Sampler,
    pub tol: f64,
    pub norm: Norm,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { sampler: Sampler::default(), tol: DEFAULT_TOL, norm: Norm::L2 }
    }
}

impl CheckConfig {
    pub fn new(seed: u64, count: usize) -> Self {
        Self { sampler: Sampler::new(seed, count), ..Self::default() }
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_window(mut self, window: Vec<[f64; 2]>) -> Self {
        self.sampler.window = Some(window);
        self
    }
}

/// One evaluated sample: its margin, the magnitude of the terms that were
/// compared (for the relative tolerance), and what to report if it is worst.
struct Sample {
    margin: f64,
    magnitude: f64,
    worst: WorstCase,
    /// ‖h‖ for plots.
    h: f64,
}

fn assemble(check: &str, samples: Vec<Sample>, cfg: &CheckConfig, modulus: &Modulus, strategy: &str) -> Result<MarginReport, CheckError> {
    if samples.is_empty() {
        return Err(CheckError::NoSamples);
    }
    let mut min_margin = f64::INFINITY;
    let mut worst = None;
    let mut magnitude: f64 = 0.0;
    for s in &samples {
        magnitude = magnitude.max(s.magnitude);
        // strict comparison keeps the lowest index among ties; NaN counts as worst
        if s.margin < min_margin || (s.margin.is_nan() && !min_margin.is_nan()) {
            min_margin = s.margin;
            worst = Some(s.worst.clone());
        }
    }
    let scale = 1.0 + magnitude;
    let pass = min_margin >= -cfg.tol * scale;
    let mut details = BTreeMap::new();
    details.insert("strategy".into(), serde_json::json!(strategy));
    details.insert("norm".into(), serde_json::json!(cfg.norm));
    details.insert("modulus".into(), serde_json::json!(modulus));
    if let Some(w) = &cfg.sampler.window {
        details.insert("window".into(), serde_json::json!(w));
    }
    Ok(MarginReport {
        check: check.into(),
        n_samples: samples.len(),
        min_margin,
        witness: worst,
        seed: Some(cfg.sampler.seed),
        tol: cfg.tol,
        scale,
        pass,
        details,
    })
}

/// Points of a report's samples as (‖h‖, margin), for plotting.
pub type Scatter = Vec<[f64; 2]>;

fn scatter(samples: &[Sample]) -> Scatter {
    samples.iter().map(|s| [s.h, s.margin]).collect()
}

/// λf(x) + (1−λ)f(y) + λ(1−λ)‖x−y‖ω(‖x−y‖) − f(λx + (1−λ)y), with the
/// three function values.
pub fn semiconvex_margin(
    f: &ScalarField,
    m: &Modulus,
    norm: Norm,
    x: &[f64],
    y: &[f64],
    lambda: f64,
) -> Result<(f64, [f64; 3]), CheckError> {
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
    let (fx, fy, fz) = (f.value(x)?, f.value(y)?, f.value(&z)?);
    let d = norm.dist(x, y);
    let penalty = lambda * (1.0 - lambda) * d * m.eval(d)?;
    Ok((lambda * fx + (1.0 - lambda) * fy + penalty - fz, [fx, fy, fz]))
}

fn semiconvex_samples(f: &ScalarField, m: &Modulus, cfg: &CheckConfig) -> Result<Vec<Sample>, CheckError> {
    let triples = cfg.sampler.triples(f.domain())?;
    triples
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let (margin, vals) = semiconvex_margin(f, m, cfg.norm, &t.x, &t.y, t.lambda)?;
            let z: Vec<f64> = t.x.iter().zip(&t.y).map(|(a, b)| t.lambda * a + (1.0 - t.lambda) * b).collect();
            Ok(Sample {
                margin,
                magnitude: vals.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                h: cfg.norm.dist(&t.x, &t.y),
                worst: WorstCase { index: i, points: vec![t.x.clone(), t.y.clone(), z], values: vals.to_vec(), lambda: Some(t.lambda) },
            })
        })
        .collect()
}

/// ω-semiconvexity on sampled triples.
pub fn check_semiconvex(f: &ScalarField, m: &Modulus, cfg: &CheckConfig) -> Result<MarginReport, CheckError> {
    assemble("semiconvex", semiconvex_samples(f, m, cfg)?, cfg, m, "triple")
}

/// ω-semiconcavity of f, i.e. ω-semiconvexity of −f on the same samples.
pub fn check_semiconcave(f: &ScalarField, m: &Modulus, cfg: &CheckConfig) -> Result<MarginReport, CheckError> {
    let mut r = check_semiconvex(&f.negated(), m, cfg)?;
    r.check = "semiconcave".into();
    Ok(r)
}

fn envelope_samples(f: &ScalarField, m: &Modulus, cfg: &CheckConfig) -> Result<Vec<Sample>, CheckError> {
    let pairs = cfg.sampler.pairs(f.domain())?;
    pairs
        .par_iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let (fx, gx) = f.value_and_gradient(x)?;
            let fy = f.value(y)?;
            let h = linalg::sub(y, x);
            let nh = cfg.norm.eval(&h);
            let lin = dot(&gx, &h);
            let remainder = (fy - fx - lin).abs();
            Ok(Sample {
                margin: nh * m.eval(nh)? - remainder,
                magnitude: fx.abs().max(fy.abs()).max(lin.abs()),
                h: nh,
                worst: WorstCase { index: i, points: vec![x.clone(), y.clone()], values: vec![fx, fy, remainder], lambda: None },
            })
        })
        .collect()
}

/// |f(y) − f(x) − ∇f(x)·(y − x)| ≤ ‖y − x‖ω(‖y − x‖) on sampled pairs.
pub fn check_envelope(f: &ScalarField, m: &Modulus, cfg: &CheckConfig) -> Result<MarginReport, CheckError> {
    assemble("envelope", envelope_samples(f, m, cfg)?, cfg, m, "pair")
}

fn gap_samples(f: &ScalarField, m: &Modulus, cfg: &CheckConfig) -> Result<Vec<Sample>, CheckError> {
    let pairs = cfg.sampler.pairs(f.domain())?;
    pairs
        .par_iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let gx = f.gradient(x)?;
            let gy = f.gradient(y)?;
            let h = linalg::sub(y, x);
            let nh = cfg.norm.eval(&h);
            let (a, b) = (dot(&gy, &h), dot(&gx, &h));
            let gap = (a - b).abs();
            Ok(Sample {
                margin: nh * m.eval(nh)? - gap,
                magnitude: a.abs().max(b.abs()),
                h: nh,
                worst: WorstCase { index: i, points: vec![x.clone(), y.clone()], values: vec![a, b, gap], lambda: None },
            })
        })
        .collect()
}

/// |(∇f(y) − ∇f(x))·(y − x)| ≤ ‖y − x‖ω(‖y − x‖) on sampled pairs.
pub fn check_directional_gap(f: &ScalarField, m: &Modulus, cfg: &CheckConfig) -> Result<MarginReport, CheckError> {
    assemble("gap", gap_samples(f, m, cfg)?, cfg, m, "pair")
}

/// A check report together with its (‖h‖, margin) scatter.
pub fn check_with_scatter(
    which: &str,
    f: &ScalarField,
    m: &Modulus,
    cfg: &CheckConfig,
) -> Result<(MarginReport, Scatter), CheckError> {
    let (samples, strategy) = match which {
        "semiconvex" => (semiconvex_samples(f, m, cfg)?, "triple"),
        "semiconcave" => (semiconvex_samples(&f.negated(), m, cfg)?, "triple"),
        "envelope" => (envelope_samples(f, m, cfg)?, "pair"),
        "gap" => (gap_samples(f, m, cfg)?, "pair"),
        other => return Err(CheckError::Precondition(format!("no sampled check named {other}"))),
    };
    let sc = scatter(&samples);
    Ok((assemble(which, samples, cfg, m, strategy)?, sc))
}

/// ω-semiconvexity of the one-dimensional restrictions t ↦ f(a + t v) on
/// `lines` sampled lines, with `cfg.sampler.count` triples spread over them.
pub fn check_semiconvex_on_lines(f: &ScalarField, m: &Modulus, cfg: &CheckConfig, lines: usize) -> Result<MarginReport, CheckError> {
    let lines = lines.max(1);
    let bx = cfg.sampler.sampling_box(f.domain())?;
    let reach = bx.iter().map(|[a, b]| (b - a) * (b - a)).sum::<f64>().sqrt();
    let base_lines = cfg.sampler.lines(f.domain(), lines)?;
    let per_line = cfg.sampler.count.div_ceil(lines);
    let mut jobs = Vec::with_capacity(per_line * lines);
    for (k, (a, v)) in base_lines.iter().enumerate() {
        let r = restrict_to_line(f, a, v)?;
        let (lo, hi) = (r.lo.max(-reach), r.hi.min(reach));
        let sub = Sampler::new(cfg.sampler.seed.wrapping_add(k as u64 + 1), per_line);
        let interval = crate::geometry::ConvexBody::hrep(1, vec![vec![1.0], vec![-1.0]], vec![hi, -lo])?;
        for t in sub.triples(&interval)? {
            jobs.push((k, t.x[0], t.y[0], t.lambda));
        }
    }
    jobs.truncate(cfg.sampler.count.max(1));
    let samples: Vec<Sample> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(k, s, t, lambda))| {
            let (a, v) = &base_lines[k];
            let x = linalg::axpy(a, s, v);
            let y = linalg::axpy(a, t, v);
            let (margin, vals) = semiconvex_margin(f, m, cfg.norm, &x, &y, lambda)?;
            Ok(Sample {
                margin,
                magnitude: vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())),
                h: cfg.norm.dist(&x, &y),
                worst: WorstCase { index: i, points: vec![x, y], values: vals.to_vec(), lambda: Some(lambda) },
            })
        })
        .collect::<Result<_, CheckError>>()?;
    let mut r = assemble("semiconvex_lines", samples, cfg, m, "line_grid")?;
    r.details.insert("lines".into(), serde_json::json!(lines));
    Ok(r)
}

/// Empirical derivative modulus: pairs (‖h‖, ‖∇f(x+h) − ∇f(x)‖_*).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeModulusEstimate {
    pub table: Vec<[f64; 2]>,
    /// sup ‖Δ∇f‖ / ‖h‖ over the table.
    pub lipschitz: f64,
    /// sup ‖Δ∇f‖ / m(‖h‖) for the candidate modulus, if one was given.
    pub sup_ratio: Option<f64>,
    /// The pair attaining `sup_ratio` (or `lipschitz` without a candidate).
    pub argmax: Option<[Vec<f64>; 2]>,
    /// Row of `table` belonging to `argmax`.
    pub argmax_index: Option<usize>,
    pub n_pairs: usize,
}

/// Axis- and diagonal-aligned pairs around the first sampled points; these
/// realise the extreme directions of quadratic fields.
fn adversarial_pairs(f: &ScalarField, points: &[Vec<f64>], step: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = f.dim();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e.clone());
        for j in i + 1..n {
            for s in [1.0, -1.0] {
                let mut d = e.clone();
                d[j] = s;
                dirs.push(linalg::normalized(&d).expect("nonzero"));
            }
        }
    }
    let mut out = Vec::new();
    for x in points {
        for d in &dirs {
            let mut s = step;
            for _ in 0..40 {
                let y = linalg::axpy(x, s, d);
                if f.domain().contains(&y) {
                    out.push((x.clone(), y));
                    break;
                }
                s *= 0.5;
            }
        }
    }
    out
}

/// Number of sampled points used as centres of adversarial pairs.
const ADVERSARIAL_CENTRES: usize = 200;

pub fn estimate_derivative_modulus(
    f: &ScalarField,
    cfg: &CheckConfig,
    candidate: Option<&Modulus>,
) -> Result<DerivativeModulusEstimate, CheckError> {
    let mut pairs = cfg.sampler.pairs(f.domain())?;
    let centres: Vec<Vec<f64>> = pairs.iter().take(ADVERSARIAL_CENTRES).map(|(x, _)| x.clone()).collect();
    let step = 0.1 * cfg.sampler.scale(f.domain())?;
    pairs.extend(adversarial_pairs(f, &centres, step));
    let rows: Vec<(f64, f64, f64)> = pairs
        .par_iter()
        .map(|(x, y)| {
            let gx = f.gradient(x)?;
            let gy = f.gradient(y)?;
            let nh = cfg.norm.dist(x, y);
            let dg = cfg.norm.dual_eval(&linalg::sub(&gy, &gx));
            let ratio = match candidate {
                Some(m) => {
                    let w = m.eval(nh)?;
                    if w > 0.0 {
                        dg / w
                    } else if dg > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                }
                None => dg / nh,
            };
            Ok((nh, dg, ratio))
        })
        .collect::<Result<_, CheckError>>()?;
    let mut best = f64::NEG_INFINITY;
    let mut argmax = None;
    let mut argmax_index = None;
    let mut lipschitz: f64 = 0.0;
    for (k, (nh, dg, ratio)) in rows.iter().enumerate() {
        if *nh > 0.0 {
            lipschitz = lipschitz.max(dg / nh);
        }
        if *ratio > best {
            best = *ratio;
            argmax = Some([pairs[k].0.clone(), pairs[k].1.clone()]);
            argmax_index = Some(k);
        }
    }
    Ok(DerivativeModulusEstimate {
        table: rows.iter().map(|(h, d, _)| [*h, *d]).collect(),
        lipschitz,
        sup_ratio: candidate.map(|_| best.max(0.0)),
        argmax,
        argmax_index,
        n_pairs: rows.len(),
    })
}

/// Directions used to probe a sphere: ± axes, then seeded Gaussian directions.
fn sphere_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            out.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count.max(2 * n) {
        let g: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
        if let Some(v) = linalg::normalized(&g) {
            out.push(v);
        }
    }
    out
}

/// ‖∇f(z) − ∇f(y)‖_* ≤ 2(1 + ‖z−y‖/r)·ω(r/2 + ‖z−y‖/2) for a closed ball B̄(y, r) ⊂ G.
pub fn check_bound_zodh(
    f: &ScalarField,
    m: &Modulus,
    y: &[f64],
    r: f64,
    z: &[f64],
    cfg: &CheckConfig,
) -> Result<MarginReport, CheckError> {
    let n = f.dim();
    if !(r > 0.0) {
        return Err(CheckError::Precondition(format!("radius {r} must be positive")));
    }
    for d in sphere_directions(n, 64 * n, cfg.sampler.seed) {
        let unit = linalg::scale(&d, 1.0 / cfg.norm.eval(&d));
        let p = linalg::axpy(y, r, &unit);
        if !f.domain().contains(&p) {
            return Err(CheckError::BallNotContained { point: p });
        }
    }
    if !f.domain().contains(z) {
        return Err(FieldError::Domain { point: z.to_vec() }.into());
    }
    let env = check_envelope(f, m, cfg)?;
    if !env.pass {
        return Err(CheckError::Precondition(format!("envelope check fails with min margin {}", env.min_margin)));
    }
    let d = cfg.norm.dist(z, y);
    let rhs = 2.0 * (1.0 + d / r) * m.eval(0.5 * r + 0.5 * d)?;
    let gz = f.gradient(z)?;
    let gy = f.gradient(y)?;
    let lhs = cfg.norm.dual_eval(&linalg::sub(&gz, &gy));
    let margin = rhs - lhs;
    let mut details = BTreeMap::new();
    details.insert("lhs".into(), serde_json::json!(lhs));
    details.insert("rhs".into(), serde_json::json!(rhs));
    details.insert("r".into(), serde_json::json!(r));
    details.insert("envelope_min_margin".into(), serde_json::json!(env.min_margin));
    let scale = 1.0 + lhs.abs();
    Ok(MarginReport {
        check: "zodh".into(),
        n_samples: 1,
        min_margin: margin,
        witness: Some(WorstCase { index: 0, points: vec![y.to_vec(), z.to_vec()], values: vec![lhs, rhs], lambda: None }),
        seed: Some(cfg.sampler.seed),
        tol: cfg.tol,
        scale,
        pass: margin >= -cfg.tol * scale,
        details,
    })
}

/// A derivative bound K·ω asserted by one of the theorems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    /// The bound is factor·ω.
    pub factor: f64,
    pub observed: f64,
    pub pass: bool,
}

/// Bounds on the modulus of ∇f implied by ω-semiconvexity and
/// ω-semiconcavity:
///
/// - bounded G: 6·e_G·ω;
/// - G containing B(a + k v, k r) for all k: 12(1 + 1/r)·ω;
/// - G the whole space: 4·ω;
/// - linear ω on any G: 4·ω, and on Euclidean spaces 2·ω, i.e. ∇f is
///   Lipschitz with constant C = 2·slope.
///
/// Bodies that are unbounded but contain no translated solid cone get
/// [`CheckError::NoTheoremApplies`]. Sampled preconditions (semiconvexity
/// and semiconcavity with ω) that fail are returned as the failing report.
pub fn check_theorem_q(f: &ScalarField, m: &Modulus, cfg: &CheckConfig) -> Result<MarginReport, CheckError> {
    let body = f.domain();
    let slope = m.linear_slope();
    let mut channels: Vec<(String, f64)> = Vec::new();
    if body.is_whole_space() {
        channels.push(("cepr: 4w".into(), 4.0));
    } else {
        match classify_body(body)? {
            Classification::Bounded if cfg.norm == Norm::L2 => {
                let e = eccentricity(body)?;
                channels.push((format!("bounded: 6*e_G, e_G={}", e.value), 6.0 * e.value));
            }
            Classification::ConeContaining { r, .. } if cfg.norm == Norm::L2 => {
                channels.push((format!("cone: 12*(1+1/r), r={r}"), 12.0 * (1.0 + 1.0 / r)));
            }
            Classification::DegenerateUnbounded { rec_dim } if slope.is_none() => {
                return Err(CheckError::NoTheoremApplies(format!(
                    "the body is unbounded with a {rec_dim}-dimensional recession cone and contains no translated solid cone"
                )));
            }
            Classification::DegenerateUnbounded { .. } => {}
            _ if slope.is_none() => {
                return Err(CheckError::NoTheoremApplies(format!(
                    "eccentricity bounds are computed for the Euclidean norm only, not {}",
                    cfg.norm
                )));
            }
            _ => {}
        }
    }
    if let Some(c) = slope {
        channels.push(("linear: 4w".into(), 4.0));
        if cfg.norm == Norm::L2 {
            channels.push((format!("lint: C={}", 2.0 * c), 2.0));
        }
    }

    for pre in [check_semiconvex(f, m, cfg)?, check_semiconcave(f, m, cfg)?] {
        if !pre.pass {
            let mut r = pre;
            r.details.insert("precondition".into(), serde_json::json!(r.check));
            r.check = "theorem_q".into();
            return Ok(r);
        }
    }

    let est = estimate_derivative_modulus(f, cfg, Some(m))?;
    let observed = est.sup_ratio.unwrap_or(0.0);
    let tightest = channels.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let mut min_margin = f64::INFINITY;
    let mut magnitude: f64 = 0.0;
    for [h, dg] in &est.table {
        min_margin = min_margin.min(tightest * m.eval(*h)? - dg);
        magnitude = magnitude.max(*dg);
    }
    let scale = 1.0 + magnitude;
    let ratio_tol = cfg.tol * scale;
    let report_channels: Vec<Channel> = channels
        .iter()
        .map(|(name, factor)| Channel { name: name.clone(), factor: *factor, observed, pass: observed <= factor + ratio_tol })
        .collect();
    let mut details = BTreeMap::new();
    details.insert("channels".into(), serde_json::json!(report_channels));
    details.insert("sup_ratio".into(), serde_json::json!(observed));
    details.insert("lipschitz".into(), serde_json::json!(est.lipschitz));
    if let Some(c) = report_channels.iter().find(|c| c.name.starts_with("lint")) {
        details.insert("bound".into(), serde_json::json!(c.name));
    } else if let Some(c) = report_channels.iter().find(|c| c.factor == tightest) {
        details.insert("bound".into(), serde_json::json!(c.name));
    }
    details.insert("modulus".into(), serde_json::json!(m));
    details.insert("norm".into(), serde_json::json!(cfg.norm));
    let pairs_witness = est.argmax_index.zip(est.argmax.as_ref()).map(|(k, p)| {
        let [h, dg] = est.table[k];
        WorstCase { index: k, points: p.to_vec(), values: vec![h, dg], lambda: None }
    });
    Ok(MarginReport {
        check: "theorem_q".into(),
        n_samples: est.n_pairs,
        min_margin,
        witness: pairs_witness,
        seed: Some(cfg.sampler.seed),
        tol: cfg.tol,
        scale,
        pass: min_margin >= -cfg.tol * scale,
        details,
    })
}
