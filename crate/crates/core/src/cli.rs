//! Command-line front end: scene files in, JSON reports and plots out.
//!
//! Exit codes: 0 when the check passes, 1 when it fails with a witness,
//! 2 on usage, input or precondition errors.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::fields::{FieldSpec, ScalarField};
use crate::geometry::{classify_body, eccentricity, recession_cone, Classification, Cone, ConvexBody, Eccentricity};
use crate::modulus::Modulus;
use crate::norm::Norm;
use crate::plot::{Plot, Series, Style};
use crate::regularity::{
    check_bound_zodh, check_theorem_q, check_with_scatter, estimate_derivative_modulus, Channel, CheckConfig, CheckError, DEFAULT_TOL,
};
use crate::sampler::Sampler;
use crate::witness::{construct_witness, log_ray_grid, ray_gap, refute_up_to, Witness, WitnessError};

#[derive(Debug, Parser)]
#[command(name = "semiconv", version, about = "Sampled checks of semiconvexity bounds and counterexample witnesses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one sampled check on a scene and write its margin report.
    Check(CheckArgs),
    /// Write the recession cone and classification of the scene's body.
    Geometry(GeometryArgs),
    /// Construct a counterexample witness on a degenerate unbounded body.
    Witness(WitnessArgs),
    /// Refute derivative moduli D·ω along a witness ray.
    Refute(RefuteArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Semiconvex,
    Semiconcave,
    Envelope,
    Gap,
    TheoremQ,
    Zodh,
}

#[derive(Debug, clap::Args)]
pub struct Overrides {
    /// Seed overriding the scene's sampler seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample count overriding the scene's sampler count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Relative pass tolerance overriding the scene's.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, value_enum)]
    pub which: Which,
    #[arg(long)]
    pub out: PathBuf,
    /// SVG (or CSV, by extension) of the sampled margins against ‖h‖.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, clap::Args)]
pub struct GeometryArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, clap::Args)]
pub struct RefuteArgs {
    /// Witness JSON written by the `witness` subcommand.
    #[arg(long)]
    pub witness: PathBuf,
    /// Largest D of the schedule 1, 2, 4, …; capped by the witness type.
    #[arg(long)]
    pub dmax: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// SVG (or CSV) of the gradient gap against D·ω along the ray.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

/// Parameters of the ball bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZodhParams {
    pub y: Vec<f64>,
    pub r: f64,
    pub z: Vec<f64>,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

/// Input file of every subcommand except `refute`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub body: ConvexBody,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Modulus>,
    #[serde(default)]
    pub norm: Norm,
    #[serde(default)]
    pub sampler: Sampler,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zodh: Option<ZodhParams>,
}

impl Scene {
    fn config(&self, o: &Overrides) -> CheckConfig {
        let mut sampler = self.sampler.clone();
        if let Some(s) = o.seed {
            sampler.seed = s;
        }
        if let Some(c) = o.samples {
            sampler.count = c;
        }
        CheckConfig { sampler, tol: o.tol.unwrap_or(self.tol), norm: self.norm }
    }

    fn field(&self) -> Result<ScalarField, CliError> {
        let spec = self.field.clone().ok_or_else(|| CliError::new("the scene has no field"))?;
        ScalarField::new(spec, self.body.clone()).map_err(CliError::from_display)
    }

    fn modulus(&self) -> Result<Modulus, CliError> {
        self.modulus.clone().ok_or_else(|| CliError::new("the scene has no modulus"))
    }
}

/// A message for the diagnostic stream; always exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError(pub String);

impl CliError {
    fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }

    fn from_display(e: impl std::fmt::Display) -> Self {
        Self(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError(format!("invalid {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::from_display)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError(format!("cannot write {}: {e}", path.display())))
}

fn write_plot(path: &Path, plot: &Plot) -> Result<(), CliError> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let text = if is_csv { plot.to_csv() } else { plot.to_svg() };
    fs::write(path, text).map_err(|e| CliError(format!("cannot write {}: {e}", path.display())))
}

/// Parse arguments, run, and map the result to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(outcome)) => outcome.code(),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(_) => {
            eprintln!("error: internal failure");
            2
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Geometry(a) => cmd_geometry(a),
        Command::Witness(a) => cmd_witness(a),
        Command::Refute(a) => cmd_refute(a),
    }
}

#[derive(Serialize)]
struct NoTheorem<'a> {
    check: &'a str,
    pass: bool,
    no_theorem_applies: String,
}

pub fn cmd_check(a: &CheckArgs) -> Result<Outcome, CliError> {
    let scene: Scene = read_json(&a.scene)?;
    let cfg = scene.config(&a.overrides);
    let f = scene.field()?;
    let m = scene.modulus()?;
    let (report, plot) = match a.which {
        Which::Semiconvex | Which::Semiconcave | Which::Envelope | Which::Gap => {
            let id = match a.which {
                Which::Semiconvex => "semiconvex",
                Which::Semiconcave => "semiconcave",
                Which::Envelope => "envelope",
                _ => "gap",
            };
            let (report, scatter) = check_with_scatter(id, &f, &m, &cfg).map_err(CliError::from_display)?;
            let plot = Plot::new(format!("{id} margins"), "‖h‖", "margin").with(Series::new("margin", scatter, Style::Points));
            (report, Some(plot))
        }
        Which::TheoremQ => match check_theorem_q(&f, &m, &cfg) {
            Ok(report) => {
                let plot = theorem_q_plot(&f, &m, &cfg, &report)?;
                (report, plot)
            }
            Err(CheckError::NoTheoremApplies(reason)) => {
                write_json(&a.out, &NoTheorem { check: "theorem_q", pass: false, no_theorem_applies: reason.clone() })?;
                return Err(CliError(format!("no theorem applies: {reason}")));
            }
            Err(e) => return Err(CliError::from_display(e)),
        },
        Which::Zodh => {
            let p = scene.zodh.as_ref().ok_or_else(|| CliError::new("the scene has no zodh parameters"))?;
            let report = check_bound_zodh(&f, &m, &p.y, p.r, &p.z, &cfg).map_err(CliError::from_display)?;
            (report, None)
        }
    };
    write_json(&a.out, &report)?;
    if let Some(path) = &a.plot {
        match &plot {
            Some(p) => write_plot(path, p)?,
            None => eprintln!("note: no plot for this check"),
        }
    }
    let bound = report.details.get("bound").and_then(|b| b.as_str()).map(|b| format!(", bound {b}")).unwrap_or_default();
    println!(
        "{}: {} (min margin {:e} over {} samples{bound})",
        report.check,
        if report.pass { "pass" } else { "FAIL" },
        report.min_margin,
        report.n_samples
    );
    Ok(Outcome::from_pass(report.pass))
}

fn theorem_q_plot(f: &ScalarField, m: &Modulus, cfg: &CheckConfig, report: &crate::report::MarginReport) -> Result<Option<Plot>, CliError> {
    let Some(channels) = report.details.get("channels") else { return Ok(None) };
    let channels: Vec<Channel> = serde_json::from_value(channels.clone()).map_err(CliError::from_display)?;
    let est = estimate_derivative_modulus(f, cfg, Some(m)).map_err(CliError::from_display)?;
    let mut hs: Vec<f64> = est.table.iter().map(|r| r[0]).filter(|h| *h > 0.0).collect();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    let mut plot = Plot::new("derivative modulus", "‖h‖", "‖Δ∇f‖").log_y(true).with(Series::new("samples", est.table.clone(), Style::Points));
    for c in channels {
        let curve: Result<Vec<[f64; 2]>, _> = hs.iter().map(|&h| m.eval(h).map(|w| [h, c.factor * w])).collect();
        plot = plot.with(Series::new(c.name, curve.map_err(CliError::from_display)?, Style::Line));
    }
    Ok(Some(plot))
}

#[derive(Serialize)]
struct ConeReport {
    rows: Vec<Vec<f64>>,
    generators: Option<Vec<Vec<f64>>>,
    dimension: usize,
    lineality_dim: usize,
}

impl ConeReport {
    fn new(c: &Cone) -> Self {
        Self { rows: c.rows.clone(), generators: c.generators(), dimension: c.dimension(), lineality_dim: c.lineality_basis().len() }
    }
}

#[derive(Serialize)]
struct GeometryReport {
    dim: usize,
    recession_cone: ConeReport,
    classification: Classification,
    #[serde(skip_serializing_if = "Option::is_none")]
    eccentricity: Option<Eccentricity>,
}

pub fn cmd_geometry(a: &GeometryArgs) -> Result<Outcome, CliError> {
    let scene: Scene = read_json(&a.scene)?;
    let g = &scene.body;
    let rec = recession_cone(g).map_err(CliError::from_display)?;
    let classification = classify_body(g).map_err(CliError::from_display)?;
    let ecc = match classification {
        Classification::Bounded => Some(eccentricity(g).map_err(CliError::from_display)?),
        _ => None,
    };
    let report = GeometryReport { dim: g.dim(), recession_cone: ConeReport::new(&rec), classification, eccentricity: ecc };
    write_json(&a.out, &report)?;
    let summary = match (&report.classification, &report.eccentricity) {
        (Classification::Bounded, Some(e)) => format!("bounded, eccentricity {}", e.value),
        (Classification::ConeContaining { r, .. }, _) => format!("contains a translated solid cone (r = {r})"),
        (Classification::DegenerateUnbounded { rec_dim }, _) => format!("degenerate unbounded, recession dimension {rec_dim}"),
        _ => "bounded".into(),
    };
    println!("geometry: {summary}");
    Ok(Outcome::Pass)
}

pub fn cmd_witness(a: &WitnessArgs) -> Result<Outcome, CliError> {
    let scene: Scene = read_json(&a.scene)?;
    let cfg = scene.config(&a.overrides);
    let w = match construct_witness(&scene.body) {
        Ok(w) => w,
        Err(WitnessError::Classification(msg)) => {
            return Err(CliError(format!(
                "{msg}: no witness exists, since a field that is semiconvex and semiconcave with a modulus ω on such a body has a derivative with modulus Kω"
            )))
        }
        Err(e) => return Err(CliError::from_display(e)),
    };
    let suite = w.margin_suite(&cfg).map_err(CliError::from_display)?;
    write_json(&a.out, &w)?;
    let pass = suite.iter().all(|r| r.pass);
    for r in &suite {
        println!("{}: {} (min margin {:e})", r.check, if r.pass { "pass" } else { "FAIL" }, r.min_margin);
    }
    println!("witness: C = {}, {} trace steps", w.constant, w.trace.len());
    Ok(Outcome::from_pass(pass))
}

pub fn cmd_refute(a: &RefuteArgs) -> Result<Outcome, CliError> {
    let w: Witness = read_json(&a.witness)?;
    let dmax = a.dmax.unwrap_or_else(|| w.kind.d_ceiling());
    if !(dmax >= 1.0) {
        return Err(CliError(format!("--dmax must be at least 1, got {dmax}")));
    }
    let report = refute_up_to(&w, dmax).map_err(CliError::from_display)?;
    write_json(&a.out, &report)?;
    if let Some(path) = &a.plot {
        let t_end = report.pairs.iter().filter_map(|e| e.violation.as_ref().map(|v| v.t2)).fold(10.0, f64::max) * 10.0;
        let ts = log_ray_grid(t_end.min(w.kind.t_ceiling()), 400);
        let mut plot = Plot::new("gradient gap along the ray", "t", "gap").log_y(true).with(Series::new(
            "‖∇f(a+tv) − ∇f(a)‖",
            ts.iter().map(|&t| [t, ray_gap(&w, t)]).collect(),
            Style::Line,
        ));
        for &d in &report.schedule {
            let pts: Result<Vec<[f64; 2]>, _> = ts.iter().map(|&t| w.modulus.eval(t).map(|o| [t, d * o])).collect();
            plot = plot.with(Series::new(format!("{d}·ω"), pts.map_err(CliError::from_display)?, Style::Line));
        }
        write_plot(path, &plot)?;
    }
    println!("refute: {}", report.verdict);
    if let Some(reason) = &report.ceiling_reason {
        println!("refute: {reason}");
    }
    Ok(Outcome::from_pass(report.all_defeated()))
}
