#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semiconv::fields::{CatalogId, FieldSpec};
use semiconv::geometry::{recession_cone, ConvexBody};
use semiconv::modulus::scale_modulus;
use semiconv::regularity::{
    check_directional_gap, check_envelope, check_semiconcave, check_semiconvex, CheckConfig,
};
use semiconv::witness::build_wedge_witness;
use semiconv::{Eta, Modulus, Norm, ScalarField};

pub struct CatalogEntry {
    pub name: &'static str,
    pub field: ScalarField,
    pub modulus: Modulus,
    pub cfg: CheckConfig,
}

pub fn unit_ball() -> ConvexBody {
    ConvexBody::ball(vec![0.0, 0.0], 1.0, Norm::L2).unwrap()
}

/// Six fields with a modulus each, spanning linear and nonlinear moduli,
/// bounded and unbounded bodies.
pub fn catalog(count: usize) -> Vec<CatalogEntry> {
    let cfg = CheckConfig::new(42, count);
    let wedge = build_wedge_witness(Eta::sqrt()).unwrap();
    vec![
        CatalogEntry {
            name: "saddle",
            field: ScalarField::new(FieldSpec::catalog(CatalogId::Saddle, 1.0), unit_ball()).unwrap(),
            modulus: Modulus::linear(0.5).unwrap(),
            cfg: cfg.clone(),
        },
        CatalogEntry {
            name: "product",
            field: ScalarField::parse("x1*x2", unit_ball()).unwrap(),
            modulus: Modulus::linear(0.5).unwrap(),
            cfg: cfg.clone(),
        },
        CatalogEntry {
            name: "strip",
            field: ScalarField::parse("x1*x2/2", ConvexBody::Strip).unwrap(),
            modulus: Modulus::sqrt(),
            cfg: cfg.clone(),
        },
        CatalogEntry {
            name: "logwedge",
            field: wedge.field.clone(),
            modulus: wedge.scaled_modulus().unwrap(),
            cfg: cfg.clone(),
        },
        CatalogEntry {
            name: "paraboloid",
            field: ScalarField::parse("x1^2 + x2^2", ConvexBody::ball(vec![0.0, 0.0], 2.0, Norm::L2).unwrap()).unwrap(),
            modulus: Modulus::linear(1.0).unwrap(),
            cfg: cfg.clone(),
        },
        CatalogEntry {
            name: "three_halves",
            field: ScalarField::parse("x1^1.5/1.5", ConvexBody::open_box(&[0.0], &[1.0]).unwrap()).unwrap(),
            modulus: Modulus::sqrt(),
            cfg,
        },
    ]
}

pub struct Implication {
    pub field: &'static str,
    pub label: &'static str,
    pub hypothesis: bool,
    pub holds: bool,
}

/// The implications between the semiconvexity pair, the envelope and the
/// directional gap, evaluated on every catalog entry with the same seed.
pub fn equivalence_battery(count: usize) -> Vec<Implication> {
    let mut out = Vec::new();
    for e in catalog(count) {
        let (f, m, cfg) = (&e.field, &e.modulus, &e.cfg);
        let m2 = scale_modulus(m, 2.0).unwrap();
        let both = |m: &Modulus| check_semiconvex(f, m, cfg).unwrap().pass && check_semiconcave(f, m, cfg).unwrap().pass;
        let pair = both(m);
        let pair2 = both(&m2);
        let env = check_envelope(f, m, cfg).unwrap().pass;
        let gap = check_directional_gap(f, m, cfg).unwrap().pass;
        out.push(Implication { field: e.name, label: "pair(m) => envelope(m)", hypothesis: pair, holds: !pair || env });
        out.push(Implication { field: e.name, label: "envelope(m) => pair(2m)", hypothesis: env, holds: !env || pair2 });
        out.push(Implication { field: e.name, label: "gap(m) => pair(m)", hypothesis: gap, holds: !gap || pair });
        if m.linear_slope().is_some() && cfg.norm == Norm::L2 {
            out.push(Implication { field: e.name, label: "linear envelope(m) => pair(m)", hypothesis: env, holds: !env || pair });
        }
    }
    out
}

/// Random polyhedra {A x < b} around a known interior point.
pub fn random_polyhedra(seed: u64, count: usize) -> Vec<(ConvexBody, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = if i % 2 == 0 { 2 } else { 3 };
            let m = rng.gen_range(1..=2 * n + 1);
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut a = Vec::new();
            let mut b = Vec::new();
            for _ in 0..m {
                let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let slack = rng.gen_range(0.1..2.0);
                b.push(row.iter().zip(&x0).map(|(r, x)| r * x).sum::<f64>() + slack);
                a.push(row);
            }
            (ConvexBody::hrep(n, a, b).unwrap(), x0)
        })
        .collect()
}

/// A direction is recessive iff x₀ + t y stays in the body for all t ≥ 0,
/// probed at a range of t.
pub fn recession_oracle(g: &ConvexBody, x0: &[f64], y: &[f64]) -> bool {
    [1.0, 10.0, 1e2, 1e4, 1e6, 1e9].iter().all(|t| g.contains(&x0.iter().zip(y).map(|(a, b)| a + t * b).collect::<Vec<_>>()))
}

/// Disagreements between `recession_cone` and the ray oracle over `probes`
/// directions: half uniform on the sphere, half drawn from the cone itself.
pub fn recession_disagreements(g: &ConvexBody, x0: &[f64], probes: usize, seed: u64) -> usize {
    let cone = recession_cone(g).unwrap();
    let gens = cone.generators().unwrap_or_default();
    let n = g.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for i in 0..probes {
        let y: Vec<f64> = if i % 2 == 1 && !gens.is_empty() {
            let mut y = vec![0.0; n];
            for gen in &gens {
                let c: f64 = rng.gen();
                y.iter_mut().zip(gen).for_each(|(a, b)| *a += c * b);
            }
            y
        } else {
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        let y: Vec<f64> = y.iter().map(|v| v / norm).collect();
        if cone.contains(&y) != recession_oracle(g, x0, &y) {
            bad += 1;
        }
    }
    bad
}
