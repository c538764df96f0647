//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use semiconv::fields::{eval_gradient, CatalogId, FieldSpec};
use semiconv::geometry::{eccentricity, ConvexBody};
use semiconv::modulus::{build_lemma_e_modulus, chord_defect, log_grid, DEFAULT_QUAD_TOL};
use semiconv::regularity::{
    check_envelope, check_semiconcave, check_semiconvex, check_theorem_q, estimate_derivative_modulus, CheckConfig,
};
use semiconv::witness::{build_strip_witness, construct_witness, power_schedule, refute_c1omega, TraceStep, Witness, WitnessKind};
use semiconv::{Eta, Modulus, Norm, ScalarField};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ell_infinity_optimality() -> Outcome {
    let body = ConvexBody::open_box(&[-1.0, -1.0], &[1.0, 1.0]).map_err(|e| e.to_string())?;
    let f = ScalarField::parse("x1^2 - x2^2", ConvexBody::whole_space(2).unwrap()).map_err(|e| e.to_string())?;
    let (g1, _) = eval_gradient(&f, &[1.0, 1.0], Norm::LInf).map_err(|e| e.to_string())?;
    let (g0, _) = eval_gradient(&f, &[0.0, 0.0], Norm::LInf).map_err(|e| e.to_string())?;
    let gap = Norm::LInf.dual_eval(&[g1[0] - g0[0], g1[1] - g0[1]]);
    ensure((gap - 4.0).abs() <= 1e-12, format!("dual-norm gap {gap} != 4"))?;
    let cfg = CheckConfig::new(42, 10_000).with_norm(Norm::LInf);
    let env = check_envelope(&f.with_domain(body).unwrap(), &Modulus::linear(1.0).unwrap(), &cfg).map_err(|e| e.to_string())?;
    ensure(env.pass, format!("envelope min margin {}", env.min_margin))?;
    Ok(format!("gap {gap}, envelope min margin {:.3e}", env.min_margin))
}

fn lipschitz_exactness() -> Outcome {
    let mut notes = Vec::new();
    for c in [0.5, 1.0, 3.0] {
        let f = ScalarField::new(FieldSpec::catalog(CatalogId::Saddle, c), common::unit_ball()).map_err(|e| e.to_string())?;
        let m = Modulus::linear(c / 2.0).map_err(|e| e.to_string())?;
        let cfg = CheckConfig::new(42, 10_000);
        let sc = check_semiconvex(&f, &m, &cfg).map_err(|e| e.to_string())?;
        let scc = check_semiconcave(&f, &m, &cfg).map_err(|e| e.to_string())?;
        ensure(sc.pass && scc.pass, format!("C={c}: semiconvex {} semiconcave {}", sc.min_margin, scc.min_margin))?;
        let est = estimate_derivative_modulus(&f, &cfg, None).map_err(|e| e.to_string())?;
        ensure(
            est.lipschitz >= c * (1.0 - 1e-2) && est.lipschitz <= c * (1.0 + 1e-2),
            format!("C={c}: Lipschitz estimate {}", est.lipschitz),
        )?;
        notes.push(format!("C={c}: L={:.6}", est.lipschitz));
    }
    Ok(notes.join(", "))
}

fn bounded_body_bound() -> Outcome {
    let f = ScalarField::parse("x1*x2", common::unit_ball()).map_err(|e| e.to_string())?;
    let m = Modulus::linear(0.5).map_err(|e| e.to_string())?;
    let cfg = CheckConfig::new(42, 10_000);
    let est = estimate_derivative_modulus(&f, &cfg, Some(&m)).map_err(|e| e.to_string())?;
    let ratio = est.sup_ratio.unwrap_or(f64::INFINITY);
    let e_ball = eccentricity(&common::unit_ball()).map_err(|e| e.to_string())?.value;
    ensure((e_ball - 2.0).abs() < 1e-12, format!("ball eccentricity {e_ball}"))?;
    ensure(ratio <= 6.0 * e_ball, format!("sup ratio {ratio} > {}", 6.0 * e_ball))?;
    let q = check_theorem_q(&f, &m, &cfg).map_err(|e| e.to_string())?;
    ensure(q.pass, "theorem_q report fails")?;
    let square = ConvexBody::open_box(&[0.0, 0.0], &[1.0, 1.0]).map_err(|e| e.to_string())?;
    let e_sq = eccentricity(&square).map_err(|e| e.to_string())?.value;
    ensure((e_sq - 8f64.sqrt()).abs() < 1e-9, format!("square eccentricity {e_sq}"))?;
    Ok(format!("sup ratio {ratio:.6} <= 12, square e_G {e_sq:.12}"))
}

fn integral_modulus() -> Outcome {
    let m = build_lemma_e_modulus(Eta::sqrt(), DEFAULT_QUAD_TOL).map_err(|e| e.to_string())?;
    let w4 = m.eval(4.0).map_err(|e| e.to_string())?;
    let expected = 2.0 + 5f64.ln().sqrt();
    ensure((w4 - expected).abs() < 1e-8, format!("ω(4) = {w4}, expected {expected}"))?;
    for t in log_grid(1e-3, 1e3, 100) {
        let v = m.eval(t).map_err(|e| e.to_string())?;
        ensure(v >= t.min(1.0), format!("ω({t}) = {v} < min(1, t)"))?;
    }
    let grid = log_grid(1.0, 1e6, 400);
    let vals: Result<Vec<f64>, _> = grid.iter().map(|&t| m.eval(t)).collect();
    let vals = vals.map_err(|e| e.to_string())?;
    let worst = (1..grid.len() - 1).map(|i| chord_defect(&grid, &vals, i)).fold(f64::NEG_INFINITY, f64::max);
    ensure(worst <= 1e-9, format!("concavity defect {worst}"))?;
    let r6 = m.eval(1e6).map_err(|e| e.to_string())? / 1e6f64.ln();
    let r3 = m.eval(1e3).map_err(|e| e.to_string())? / 1e3f64.ln();
    ensure(r6 < r3, format!("ω/log not decreasing: {r6} >= {r3}"))?;
    Ok(format!("ω(4) = {w4:.10}, max chord defect {worst:.2e}"))
}

fn suite_passes(w: &Witness, count: usize) -> Result<(), String> {
    let cfg = CheckConfig::new(42, count);
    for r in w.margin_suite(&cfg).map_err(|e| e.to_string())? {
        ensure(r.pass, format!("{} min margin {}", r.check, r.min_margin))?;
    }
    Ok(())
}

fn strip_counterexample() -> Outcome {
    let w = build_strip_witness();
    suite_passes(&w, 10_000)?;
    let schedule = power_schedule(1024.0);
    let r = refute_c1omega(&w, &schedule, w.kind.t_ceiling()).map_err(|e| e.to_string())?;
    ensure(r.all_defeated(), r.verdict.clone())?;
    for e in &r.pairs {
        let t = e.violation.as_ref().map(|v| v.t2).unwrap_or(f64::NAN);
        let p = 4.0 * e.d * e.d;
        ensure(t >= p / 2.0 && t <= 2.0 * p, format!("D={}: violation at t={t}, predicted {p}", e.d))?;
    }
    ensure(r.verify(&w).map_err(|e| e.to_string())?, "recorded violations do not re-verify")?;
    Ok(r.verdict)
}

fn construction_end_to_end() -> Outcome {
    let strip = ConvexBody::Strip;
    let half = ConvexBody::hrep(2, vec![vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]], vec![-1.0, 1.0, 1.0]).unwrap();
    let slab = ConvexBody::hrep(
        3,
        vec![vec![-1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, -1.0], vec![0.0, 0.0, 1.0]],
        vec![-1.0, 1.0, 1.0, 0.0, 1.0],
    )
    .unwrap();
    let mut notes = Vec::new();
    for (name, g) in [("strip", strip), ("half-strip", half), ("half-strip x (0,1)", slab)] {
        let w = construct_witness(&g).map_err(|e| format!("{name}: {e}"))?;
        ensure(w.ray_escape().is_none(), format!("{name}: ray leaves the body"))?;
        suite_passes(&w, 10_000).map_err(|e| format!("{name}: {e}"))?;
        let schedule = power_schedule(w.kind.d_ceiling());
        let expected_top = match w.kind {
            WitnessKind::Strip => 1024.0,
            WitnessKind::LogWedge => 16.0,
        };
        ensure(schedule.last() == Some(&expected_top), format!("{name}: schedule {schedule:?}"))?;
        let r = refute_c1omega(&w, &schedule, w.kind.t_ceiling()).map_err(|e| e.to_string())?;
        ensure(r.all_defeated(), format!("{name}: {}", r.verdict))?;
        if g.dim() == 3 {
            let lift = w.trace.iter().find_map(|s| match s {
                TraceStep::Lift { alpha, beta, .. } => Some((*alpha, *beta)),
                _ => None,
            });
            let (alpha, beta) = lift.ok_or_else(|| format!("{name}: no lift step in trace"))?;
            notes.push(format!("{name}: lift alpha={alpha} beta={beta}"));
        } else {
            notes.push(format!("{name}: {} steps", w.trace.len()));
        }
    }
    Ok(notes.join(", "))
}

fn equivalence_battery() -> Outcome {
    let results = common::equivalence_battery(10_000);
    let failed: Vec<String> = results.iter().filter(|r| !r.holds).map(|r| format!("{}: {}", r.field, r.label)).collect();
    ensure(failed.is_empty(), failed.join("; "))?;
    let active = results.iter().filter(|r| r.hypothesis).count();
    ensure(active * 2 >= results.len(), format!("only {active} of {} hypotheses hold", results.len()))?;
    Ok(format!("{} implications, {active} with hypothesis satisfied", results.len()))
}

fn recession_oracle_agreement() -> Outcome {
    let mut total = 0;
    for (i, (g, x0)) in common::random_polyhedra(7, 20).iter().enumerate() {
        total += common::recession_disagreements(g, x0, 1000, 100 + i as u64);
    }
    ensure(total == 0, format!("{total} disagreements"))?;
    Ok("20 polyhedra, 20000 probes, 0 disagreements".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 8] = [
        ("1 l-infinity optimality of the factor 4", ell_infinity_optimality, 5),
        ("2 Lipschitz constant of saddles", lipschitz_exactness, 10),
        ("3 bounded-body derivative bound", bounded_body_bound, 10),
        ("4 integral modulus construction", integral_modulus, 5),
        ("5 strip counterexample end to end", strip_counterexample, 10),
        ("6 witness construction on three bodies", construction_end_to_end, 60),
        ("7 equivalence battery", equivalence_battery, 30),
        ("8 recession cone oracle agreement", recession_oracle_agreement, 20),
    ];
    let mut failures = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        match (&outcome, in_time) {
            (Ok(note), true) => println!("PASS {name} ({:.2}s): {note}", elapsed.as_secs_f64()),
            (Ok(note), false) => {
                failures += 1;
                println!("FAIL {name} ({:.2}s > {limit}s): {note}", elapsed.as_secs_f64());
            }
            (Err(msg), _) => {
                failures += 1;
                println!("FAIL {name} ({:.2}s): {msg}", elapsed.as_secs_f64());
            }
        }
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
