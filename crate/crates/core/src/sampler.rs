//! Seeded sample streams on convex bodies.
//!
//! All streams are generated sequentially from one ChaCha8 generator, so a
//! fixed seed reproduces them exactly; evaluation may then run in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::ConvexBody;
use crate::linalg;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_COUNT: usize = 10_000;
/// Half-width of the default sampling window in unbounded coordinates.
pub const DEFAULT_WINDOW: f64 = 100.0;
/// Smallest pair-shrink factor: ‖h‖ ranges over [10⁻⁴·d, d] for a pair at distance d.
pub const MIN_SHRINK: f64 = 1e-4;

const TRIES_PER_POINT: usize = 5_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplerError {
    #[error("sampling window does not meet the body's bounding box in coordinate {0}")]
    EmptyWindow(usize),
    #[error("rejection sampling found only {found} of {wanted} points")]
    Exhausted { found: usize, wanted: usize },
    #[error("window has {got} coordinates, body has {expected}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    UniformInBody,
    LineGrid,
    Pair,
    Triple,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_count() -> usize {
    DEFAULT_COUNT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampler {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_count")]
    pub count: usize,
    /// Optional box [lo, hi] per coordinate intersected with the body.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<[f64; 2]>>,
}

impl Default for Sampler {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, count: DEFAULT_COUNT, window: None }
    }
}

/// A pair of points of the body and a convex weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: f64,
}

impl Sampler {
    pub fn new(seed: u64, count: usize) -> Self {
        Self { seed, count, window: None }
    }

    pub fn with_window(mut self, window: Vec<[f64; 2]>) -> Self {
        self.window = Some(window);
        self
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Box in which rejection sampling runs.
    pub fn sampling_box(&self, body: &ConvexBody) -> Result<Vec<[f64; 2]>, SamplerError> {
        let bounds = body.bounds();
        if let Some(w) = &self.window {
            if w.len() != bounds.len() {
                return Err(SamplerError::Dimension { expected: bounds.len(), got: w.len() });
            }
        }
        bounds
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let w = self.window.as_ref().map_or([-DEFAULT_WINDOW, DEFAULT_WINDOW], |w| w[i]);
                let (lo, hi) = if self.window.is_some() || !(b[0].is_finite() && b[1].is_finite()) {
                    (b[0].max(w[0]), b[1].min(w[1]))
                } else {
                    (b[0], b[1])
                };
                if lo < hi && lo.is_finite() && hi.is_finite() {
                    Ok([lo, hi])
                } else {
                    Err(SamplerError::EmptyWindow(i))
                }
            })
            .collect()
    }

    /// Length of the sampling box's diagonal.
    pub fn scale(&self, body: &ConvexBody) -> Result<f64, SamplerError> {
        let bx = self.sampling_box(body)?;
        Ok(bx.iter().map(|[a, b]| (b - a) * (b - a)).sum::<f64>().sqrt())
    }

    fn draw_point(rng: &mut ChaCha8Rng, bx: &[[f64; 2]], body: &ConvexBody) -> Option<Vec<f64>> {
        for _ in 0..TRIES_PER_POINT {
            let x: Vec<f64> = bx.iter().map(|[lo, hi]| lo + (hi - lo) * rng.gen::<f64>()).collect();
            if body.contains(&x) {
                return Some(x);
            }
        }
        None
    }

    fn draw_points(&self, rng: &mut ChaCha8Rng, body: &ConvexBody, count: usize) -> Result<Vec<Vec<f64>>, SamplerError> {
        let bx = self.sampling_box(body)?;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            match Self::draw_point(rng, &bx, body) {
                Some(x) => out.push(x),
                None => return Err(SamplerError::Exhausted { found: out.len(), wanted: count }),
            }
        }
        Ok(out)
    }

    /// `count` points uniform in body ∩ window.
    pub fn points(&self, body: &ConvexBody) -> Result<Vec<Vec<f64>>, SamplerError> {
        self.draw_points(&mut self.rng(), body, self.count)
    }

    /// `count` pairs (x, y) in the body. Even-indexed pairs are shrunk
    /// towards x by a factor log-uniform in [10⁻⁴, 1], which keeps y in the
    /// body by convexity and spreads ‖y − x‖ over four decades.
    pub fn pairs(&self, body: &ConvexBody) -> Result<Vec<(Vec<f64>, Vec<f64>)>, SamplerError> {
        let mut rng = self.rng();
        let bx = self.sampling_box(body)?;
        let mut out = Vec::with_capacity(self.count);
        for i in 0..self.count {
            let x = Self::draw_point(&mut rng, &bx, body);
            let y = Self::draw_point(&mut rng, &bx, body);
            let (Some(x), Some(mut y)) = (x, y) else {
                return Err(SamplerError::Exhausted { found: out.len(), wanted: self.count });
            };
            if i % 2 == 0 {
                let s = (MIN_SHRINK.ln() * rng.gen::<f64>()).exp();
                let h = linalg::sub(&y, &x);
                y = linalg::axpy(&x, s, &h);
            }
            out.push((x, y));
        }
        Ok(out)
    }

    /// `count` triples; λ cycles through ¼, ½, ¾ and a uniform draw.
    pub fn triples(&self, body: &ConvexBody) -> Result<Vec<Triple>, SamplerError> {
        let pairs = self.pairs(body)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        Ok(pairs
            .into_iter()
            .enumerate()
            .map(|(i, (x, y))| {
                let lambda = match i % 4 {
                    0 => 0.25,
                    1 => 0.5,
                    2 => 0.75,
                    _ => rng.gen::<f64>(),
                };
                Triple { x, y, lambda }
            })
            .collect())
    }

    /// `lines` random lines through body points, each with a unit direction
    /// uniform on the sphere.
    pub fn lines(&self, body: &ConvexBody, lines: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>, SamplerError> {
        let mut rng = self.rng();
        let bases = self.draw_points(&mut rng, body, lines)?;
        Ok(bases
            .into_iter()
            .map(|a| {
                let v = loop {
                    let g: Vec<f64> = (0..a.len()).map(|_| gaussian(&mut rng)).collect();
                    if let Some(v) = linalg::normalized(&g) {
                        break v;
                    }
                };
                (a, v)
            })
            .collect())
    }
}

/// Standard normal draw by Box–Muller.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
