//! Command-line front end: JSON configuration, dispatch to the solver modules,
//! and atomically written JSON reports and CSV profiles.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fields::HiggsConfig;
use crate::forms::{parse_q, q_to_f64, BinaryForm, Q};
use crate::geometry::{
    build_grid, integrate, write_profile_csv, AxisymGrid, ConformalMetric, Field, MAX_NODES,
    MIN_NODES,
};
use crate::gravitating::{
    c_alternative, c_conventions, einstein_bogomolnyi_solve, solve_gravitating,
    ContinuationSchedule, SecantOptions,
};
use crate::newton::NewtonOptions;
use crate::obstructions::{
    abelian_futaki_quadrature, futaki_coefficient, futaki_quadrature, stability_check,
    stability_check_with_forms, FutakiInput, StabilityReport,
};
use crate::quiver::{
    analytic_point_data, impose_first_equation, quiver_constant, quiver_vortex_residual,
    reduction_parameters, slope, trace_identity_check, QuiverBundleSpec, ReductionParams,
};
use crate::vortex::{bundle_curvature, solve_vortex};

pub const CONVENTIONS: &str = include_str!("../conventions.md");
pub const REPORT_SCHEMA: &str = include_str!("../schema/run_report.schema.json");
/// Fallback output directory when neither `--out` nor `output.directory` is set.
pub const OUT_DIR_ENV: &str = "KYMH_OUT_DIR";
pub const DEFAULT_N: usize = 129;
/// Continuation steps used when only a target `alpha` is given.
pub const DEFAULT_STEPS: usize = 5;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_OBSTRUCTED: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn conventions_sha256() -> String {
    hex::encode(Sha256::digest(CONVENTIONS.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveVortex,
    SolveGravitating,
    EbSolve,
    Futaki,
    Stability,
    QuiverCheck,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveVortex => "solve-vortex",
            Command::SolveGravitating => "solve-gravitating",
            Command::EbSolve => "eb-solve",
            Command::Futaki => "futaki",
            Command::Stability => "stability",
            Command::QuiverCheck => "quiver-check",
            Command::Sweep => "sweep",
        }
    }

    fn is_higgs(self) -> bool {
        !matches!(self, Command::QuiverCheck | Command::Sweep)
    }

    /// Problem-specific keys this command reads.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Command::SolveVortex | Command::Futaki => &["degrees", "exponents", "tau", "alpha"],
            Command::SolveGravitating => &["degrees", "exponents", "tau", "alpha", "schedule"],
            Command::EbSolve => &["degrees", "exponents", "tau", "secant"],
            Command::Stability => &["degrees", "exponents", "tau", "alpha", "coefficients"],
            Command::QuiverCheck => &["quiver", "reduction"],
            Command::Sweep => &["sweep"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

fn all_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

/// Exact rational `τ`: a JSON number or a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tau(#[serde(with = "crate::fields::tau_serde")] pub Q);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecantConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

/// Cartesian parameter grid; omitted `exponents` means every admissible tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub command: Command,
    pub degrees: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<Vec<u32>>>,
    pub tau: Vec<Tau>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
}

/// One run, as read from the JSON config file. Problem and numerics keys sit
/// at the top level; only the keys relevant to `command` may be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Tau>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Coefficients of general binary forms, lowest power of `x1` first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quiver: Option<QuiverBundleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secant: Option<SecantConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

const COMMON_KEYS: [&str; 5] = ["command", "n", "tolerance", "max_iter", "output"];
const ALL_KEYS: [&str; 16] = [
    "command",
    "degrees",
    "exponents",
    "tau",
    "alpha",
    "coefficients",
    "quiver",
    "reduction",
    "sweep",
    "n",
    "tolerance",
    "max_iter",
    "schedule",
    "secant",
    "output",
    "override_obstruction",
];

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            degrees: None,
            exponents: None,
            tau: None,
            alpha: None,
            coefficients: None,
            quiver: None,
            reduction: None,
            sweep: None,
            n: None,
            tolerance: None,
            max_iter: None,
            schedule: None,
            secant: None,
            output: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(DEFAULT_N)
    }

    pub fn newton_options(&self) -> NewtonOptions {
        let d = NewtonOptions::default();
        NewtonOptions {
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
        }
    }

    pub fn higgs(&self) -> Result<HiggsConfig> {
        let (Some(degrees), Some(exponents), Some(tau)) = (&self.degrees, &self.exponents, &self.tau)
        else {
            return Err(Error::Config("degrees, exponents and tau are required".into()));
        };
        let cfg = HiggsConfig {
            degrees: degrees.clone(),
            exponents: exponents.clone(),
            tau: tau.0.clone(),
            alpha: self.alpha.unwrap_or(0.0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn schedule(&self) -> Result<ContinuationSchedule> {
        match (&self.schedule, self.alpha) {
            (Some(a), _) => ContinuationSchedule::new(a.clone(), self.newton_options()),
            (None, Some(alpha)) => ContinuationSchedule::uniform(alpha, DEFAULT_STEPS, self.newton_options()),
            (None, None) => Err(Error::Config("solve-gravitating needs `schedule` or `alpha`".into())),
        }
    }

    pub fn secant_options(&self) -> SecantOptions {
        let mut o = SecantOptions::default();
        o.newton.max_iter = self.max_iter.unwrap_or(o.newton.max_iter);
        if let Some(t) = self.tolerance {
            o.newton.tolerance = t;
        }
        if let Some(s) = self.secant {
            o.alpha1 = s.alpha1.unwrap_or(o.alpha1);
            o.max_step = s.max_step.unwrap_or(o.max_step);
            o.tolerance = s.tolerance.unwrap_or(o.tolerance);
            o.max_iter = s.max_iter.unwrap_or(o.max_iter);
        }
        o
    }

    pub fn forms(&self) -> Result<Option<Vec<BinaryForm>>> {
        let Some(rows) = &self.coefficients else {
            return Ok(None);
        };
        rows.iter()
            .map(|row| {
                let q = row.iter().map(|t| parse_q(t)).collect::<Result<Vec<_>>>()?;
                BinaryForm::new(q)
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Every semantic problem, in key order.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if let Some(n) = self.n {
            if n % 2 == 0 {
                problems.push("n must be odd".to_string());
            }
            if !(MIN_NODES..=MAX_NODES).contains(&n) {
                problems.push(format!("n must lie in [{MIN_NODES}, {MAX_NODES}]"));
            }
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                problems.push("tolerance must be positive".into());
            }
        }
        if self.max_iter == Some(0) {
            problems.push("max_iter must be at least 1".into());
        }
        let allowed = self.command.keys();
        let present = self.present_keys();
        for k in &present {
            if !COMMON_KEYS.contains(k) && !allowed.contains(k) {
                problems.push(format!("key `{k}` is not used by {}", self.command.name()));
            }
        }
        if self.command.is_higgs() {
            let mut required = vec!["degrees", "exponents", "tau"];
            if self.command == Command::Futaki {
                required.push("alpha");
            }
            let missing: Vec<_> = required.iter().filter(|k| !present.contains(k)).collect();
            for k in &missing {
                problems.push(format!("missing required key `{k}`"));
            }
            if missing.is_empty() {
                if let Err(e) = self.higgs() {
                    problems.extend(split_problems(&e));
                }
                let single = matches!(
                    self.command,
                    Command::SolveVortex | Command::SolveGravitating | Command::EbSolve
                );
                if single && self.degrees.as_ref().is_some_and(|d| d.len() != 1) {
                    problems.push(format!("{} needs a single degree", self.command.name()));
                }
            }
            if let Some(a) = self.alpha {
                if !(a >= 0.0 && a.is_finite()) {
                    problems.push("alpha must be non-negative".into());
                }
            }
        }
        match self.command {
            Command::SolveGravitating => {
                if self.schedule.is_none() && self.alpha.is_none() {
                    problems.push("missing required key `schedule` (or `alpha`)".into());
                } else if let Err(e) = self.schedule() {
                    problems.extend(split_problems(&e));
                }
            }
            Command::EbSolve => {
                let o = self.secant_options();
                if !(o.alpha1 > 0.0 && o.max_step > 0.0 && o.tolerance > 0.0 && o.max_iter > 0) {
                    problems.push("secant values must be positive".into());
                }
            }
            Command::Stability => match self.forms() {
                Err(e) => problems.push(format!("coefficients: {e}")),
                Ok(Some(forms)) => {
                    let degrees = self.degrees.clone().unwrap_or_default();
                    if forms.len() != degrees.len()
                        || forms.iter().zip(&degrees).any(|(f, &n)| f.degree() != n)
                    {
                        problems.push(
                            "coefficients must give one form per degree, with N+1 entries each".into(),
                        );
                    }
                }
                Ok(None) => {}
            },
            Command::QuiverCheck => match &self.quiver {
                None => problems.push("missing required key `quiver`".into()),
                Some(q) => {
                    if let Err(e) = q.model() {
                        problems.extend(split_problems(&e));
                    }
                    if let Some(r) = &self.reduction {
                        if let Err(e) = reduction_parameters(r) {
                            problems.push(format!("reduction: {e}"));
                        }
                    }
                }
            },
            Command::Sweep => match &self.sweep {
                None => problems.push("missing required key `sweep`".into()),
                Some(s) => {
                    if !matches!(
                        s.command,
                        Command::SolveVortex | Command::SolveGravitating | Command::Futaki | Command::Stability
                    ) {
                        problems.push(format!("sweep cannot run {}", s.command.name()));
                    }
                    if s.degrees.is_empty() || s.tau.is_empty() {
                        problems.push("sweep needs at least one degree tuple and one tau".into());
                    }
                    if s.alpha.as_ref().is_some_and(|a| a.is_empty()) {
                        problems.push("sweep alpha list is empty".into());
                    }
                }
            },
            _ => {}
        }
        problems
    }

    fn present_keys(&self) -> Vec<&'static str> {
        let flags = [
            ("degrees", self.degrees.is_some()),
            ("exponents", self.exponents.is_some()),
            ("tau", self.tau.is_some()),
            ("alpha", self.alpha.is_some()),
            ("coefficients", self.coefficients.is_some()),
            ("quiver", self.quiver.is_some()),
            ("reduction", self.reduction.is_some()),
            ("sweep", self.sweep.is_some()),
            ("n", self.n.is_some()),
            ("tolerance", self.tolerance.is_some()),
            ("max_iter", self.max_iter.is_some()),
            ("schedule", self.schedule.is_some()),
            ("secant", self.secant.is_some()),
            ("output", self.output.is_some()),
        ];
        flags.iter().filter(|(_, p)| *p).map(|(k, _)| *k).collect()
    }
}

fn split_problems(e: &Error) -> Vec<String> {
    match e {
        Error::Config(m) | Error::Model(m) => m.split("; ").map(str::to_string).collect(),
        other => vec![other.to_string()],
    }
}

/// Parses and validates a config, returning every problem found.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, Vec<String>> {
    let value: Value = serde_json::from_str(text).map_err(|e| vec![format!("invalid JSON: {e}")])?;
    let Value::Object(map) = value else {
        return Err(vec!["config must be a JSON object".into()]);
    };
    let mut problems = Vec::new();
    for key in map.keys() {
        if key == "override_obstruction" {
            problems.push("`override_obstruction` is a command-line flag, not a config key".into());
        } else if !ALL_KEYS.contains(&key.as_str()) {
            problems.push(format!("unknown key `{key}`"));
        }
    }
    match map.get("command") {
        None => problems.push("missing required key `command`".into()),
        Some(c) => {
            if let Err(e) = serde_json::from_value::<Command>(c.clone()) {
                problems.push(format!("`command`: {e}"));
            }
        }
    }
    for (key, v) in &map {
        if key == "command" || !ALL_KEYS.contains(&key.as_str()) || key == "override_obstruction" {
            continue;
        }
        let probe = json!({ "command": "futaki", key.as_str(): v });
        if let Err(e) = serde_json::from_value::<RunConfig>(probe) {
            problems.push(format!("`{key}`: {e}"));
        }
    }
    if !problems.is_empty() {
        return Err(problems);
    }
    let cfg: RunConfig = serde_json::from_value(Value::Object(map)).map_err(|e| vec![e.to_string()])?;
    let problems = cfg.validate();
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(problems)
    }
}

pub fn serialize_config(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Decided,
    Infeasible,
    Obstructed,
    NotConverged,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Converged | Status::Decided => EXIT_OK,
            Status::Infeasible | Status::Obstructed => EXIT_OBSTRUCTED,
            Status::NotConverged => EXIT_NOT_CONVERGED,
            Status::Error => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub artifact: String,
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub conventions_sha256: String,
    pub status: Status,
    pub exit_code: i32,
    pub reasons: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityReport>,
    pub result: Value,
    pub wall_time_seconds: f64,
}

/// A finished run: the report plus the CSV files it refers to.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub csv: Vec<(String, String)>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }
}

struct Done {
    status: Status,
    reasons: Vec<String>,
    stability: Option<StabilityReport>,
    result: Value,
    csv: Vec<(String, String)>,
    /// One number for sweep tables.
    headline: Option<f64>,
}

impl Done {
    fn new(status: Status, result: Value) -> Self {
        Done {
            status,
            reasons: Vec::new(),
            stability: None,
            result,
            csv: Vec::new(),
            headline: None,
        }
    }
}

fn status_for(err: &Error) -> Status {
    match err {
        Error::Infeasible(_) => Status::Infeasible,
        Error::Obstructed(_) => Status::Obstructed,
        _ => Status::Error,
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn profile_csv(grid: &AxisymGrid, columns: &[(&str, &Field)]) -> Result<String> {
    let mut buf = Vec::new();
    write_profile_csv(&mut buf, grid, columns)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

fn converged(ok: bool) -> Status {
    if ok {
        Status::Converged
    } else {
        Status::NotConverged
    }
}

fn run_solve_vortex(cfg: &RunConfig) -> Result<Done> {
    let higgs = cfg.higgs()?;
    let grid = build_grid(cfg.n())?;
    let metric = ConformalMetric::round(&grid);
    let (h, report) = solve_vortex(&grid, &metric, &higgs, &cfg.newton_options())?;
    let n = higgs.degrees[0] as f64;
    let curv = bundle_curvature(&grid, &metric, n, &h.v[0])?;
    let phi = h.higgs_norm(&grid, &higgs, 0)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let result = json!({
        "solve": to_value(&report),
        "chern_integral": integrate(&grid, &metric, &curv)?,
        "chern_expected": two_pi * n,
        "higgs_mass": integrate(&grid, &metric, &phi)?,
        "higgs_mass_expected": two_pi * (higgs.tau_f64() - 2.0 * n),
    });
    let mut done = Done::new(converged(report.converged), result);
    if let Some(f) = &report.failure {
        done.reasons.push(f.clone());
    }
    done.headline = Some(report.residual_sup);
    done.csv.push(("profile.csv".into(), profile_csv(&grid, &[("v", &h.v[0]), ("higgs_norm", &phi)])?));
    Ok(done)
}

fn run_solve_gravitating(cfg: &RunConfig, override_obstruction: bool) -> Result<Done> {
    let higgs = cfg.higgs()?;
    let grid = build_grid(cfg.n())?;
    let schedule = cfg.schedule()?;
    let stability = stability_check(&higgs)?;
    let run = solve_gravitating(&grid, &higgs, &schedule, override_obstruction)?;
    let alpha = run.state.alpha;
    let result = json!({
        "schedule": schedule.alphas,
        "history": to_value(&run.history),
        "last_step": to_value(&run.report),
        "alpha": alpha,
        "c_conventions": c_conventions(&higgs, alpha),
        "c_alternative": c_alternative(&higgs, alpha),
        "override_obstruction": override_obstruction,
    });
    let mut done = Done::new(converged(run.converged()), result);
    if let Some(f) = &run.report.failure {
        done.reasons.push(f.clone());
    }
    if override_obstruction && stability.obstructed {
        done.reasons.push(format!("obstruction overridden: {}", stability.reasons.join("; ")));
    }
    done.headline = run.history.last().map(|h| h.c_est);
    done.stability = Some(stability);
    done.csv.push((
        "profile.csv".into(),
        profile_csv(&grid, &[("u", &run.state.metric.u), ("v", &run.state.bundle.v[0])])?,
    ));
    Ok(done)
}

fn run_eb_solve(cfg: &RunConfig, override_obstruction: bool) -> Result<Done> {
    let higgs = cfg.higgs()?;
    let grid = build_grid(cfg.n())?;
    let stability = stability_check(&higgs)?;
    let eb = einstein_bogomolnyi_solve(&grid, &higgs, &cfg.secant_options(), override_obstruction)?;
    let mut result = to_value(&eb);
    if let Value::Object(m) = &mut result {
        m.remove("state");
        m.insert(
            "note".into(),
            json!("c vanishes at ατN = 2 under the conventions in use; the alternative normalization c = 2 - 2ατN would put it at ατN = 1"),
        );
    }
    let mut done = Done::new(converged(eb.converged), result);
    if let Some(f) = &eb.failure {
        done.reasons.push(f.clone());
    }
    done.headline = Some(eb.alpha_star);
    done.stability = Some(stability);
    done.csv.push((
        "profile.csv".into(),
        profile_csv(&grid, &[("u", &eb.state.metric.u), ("v", &eb.state.bundle.v[0])])?,
    ));
    Ok(done)
}

fn run_futaki(cfg: &RunConfig) -> Result<Done> {
    let higgs = cfg.higgs()?;
    let coefficient = futaki_coefficient(&higgs);
    let closed = 2.0 * std::f64::consts::PI * higgs.alpha * q_to_f64(&coefficient);
    let mut result = json!({
        "coefficient": coefficient.to_string(),
        "closed_form": closed,
    });
    let quadrature = if higgs.rank() == 2 {
        let grid = build_grid(cfg.n())?;
        let input = FutakiInput {
            config: higgs.clone(),
            metric: ConformalMetric::round(&grid),
            v: vec![grid.constant(0.0); 2],
        };
        let q = futaki_quadrature(&grid, &input)?;
        result["resolution"] = json!(cfg.n());
        q
    } else {
        let rich = abelian_futaki_quadrature(&higgs, |g| Ok((ConformalMetric::round(g), g.constant(0.0))))?;
        result["richardson"] = to_value(&rich);
        rich.value
    };
    result["quadrature"] = json!(quadrature);
    result["difference"] = json!((quadrature - closed).abs());
    let mut done = Done::new(Status::Decided, result);
    done.headline = Some(quadrature);
    Ok(done)
}

fn run_stability(cfg: &RunConfig) -> Result<Done> {
    let higgs = cfg.higgs()?;
    let report = match cfg.forms()? {
        Some(forms) => stability_check_with_forms(&higgs, Some(&forms))?,
        None => stability_check(&higgs)?,
    };
    let status = if report.obstructed {
        Status::Obstructed
    } else {
        Status::Decided
    };
    let mut done = Done::new(status, json!({ "verdict": report.verdict }));
    done.reasons = report.reasons.clone();
    done.headline = Some(if report.obstructed { 1.0 } else { 0.0 });
    done.stability = Some(report);
    Ok(done)
}

fn run_quiver_check(cfg: &RunConfig) -> Result<Done> {
    let spec = cfg
        .quiver
        .as_ref()
        .ok_or_else(|| Error::Config("missing required key `quiver`".into()))?;
    let model = spec.model()?;
    let vol = 2.0 * std::f64::consts::PI;
    let slopes = model
        .degrees
        .iter()
        .zip(&model.ranks)
        .map(|(&d, &r)| slope(d, r, vol))
        .collect::<Result<Vec<_>>>()?;
    let mut result = json!({
        "constant_c": quiver_constant(&model, vol, 4.0 * std::f64::consts::PI, None)?,
        "slopes": slopes,
    });
    if let Some(r) = &cfg.reduction {
        result["reduction"] = to_value(&reduction_parameters(r)?);
    }
    let mut done = Done::new(Status::Decided, Value::Null);
    if model.ranks.iter().all(|&r| r == 1) {
        let grid = build_grid(cfg.n())?;
        let metric = ConformalMetric::round(&grid);
        let pots = vec![grid.constant(0.0); model.ranks.len()];
        let res = quiver_vortex_residual(&model, &pots, &metric, &grid)?;
        let raw = analytic_point_data(&model, &pots, &metric, &grid)?;
        let imposed = raw
            .iter()
            .map(|p| impose_first_equation(&model, p))
            .collect::<Result<Vec<_>>>()?;
        result["fubini_study"] = json!({
            "vertex_residual_sup": res.vertex.iter().map(|f| f.amax()).collect::<Vec<_>>(),
            "scalar_residual_sup": res.scalar.amax(),
            "c_est": res.c_est,
            "c_identity": res.c_identity,
            "trace_identity": to_value(&trace_identity_check(&model, &raw, &metric, &grid)?),
            "trace_identity_first_equation_imposed": to_value(&trace_identity_check(&model, &imposed, &metric, &grid)?),
        });
        let mut cols: Vec<(String, &Field)> = model
            .quiver
            .vertices
            .iter()
            .zip(&res.vertex)
            .map(|(v, f)| (format!("vertex_{v}"), f))
            .collect();
        cols.push(("scalar".into(), &res.scalar));
        let refs: Vec<(&str, &Field)> = cols.iter().map(|(k, f)| (k.as_str(), *f)).collect();
        done.csv.push(("quiver_profile.csv".into(), profile_csv(&grid, &refs)?));
    } else {
        done.reasons.push("analytic residuals skipped: some vertex has rank > 1".into());
    }
    done.result = result;
    Ok(done)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub command: Command,
    pub degrees: Vec<u32>,
    pub exponents: Vec<u32>,
    pub tau: String,
    pub alpha: f64,
    pub exit_code: i32,
    pub status: Status,
    pub value: Option<f64>,
    pub detail: String,
}

fn exponent_tuples(degrees: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &n in degrees {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=n).map(move |l| {
                    let mut p = prefix.clone();
                    p.push(l);
                    p
                })
            })
            .collect();
    }
    out
}

/// Member configs of a sweep, in row order.
pub fn sweep_members(cfg: &RunConfig) -> Result<Vec<RunConfig>> {
    let s = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing required key `sweep`".into()))?;
    let alphas = s.alpha.clone().unwrap_or_else(|| vec![0.0]);
    let mut members = Vec::new();
    for degrees in &s.degrees {
        let exps = match &s.exponents {
            Some(e) => e.iter().filter(|e| e.len() == degrees.len()).cloned().collect(),
            None => exponent_tuples(degrees),
        };
        for exponents in exps {
            for tau in &s.tau {
                for &alpha in &alphas {
                    let mut m = RunConfig::new(s.command);
                    m.degrees = Some(degrees.clone());
                    m.exponents = Some(exponents.clone());
                    m.tau = Some(tau.clone());
                    m.alpha = Some(alpha);
                    m.n = cfg.n;
                    m.tolerance = cfg.tolerance;
                    m.max_iter = cfg.max_iter;
                    members.push(m);
                }
            }
        }
    }
    Ok(members)
}

fn run_sweep(cfg: &RunConfig, override_obstruction: bool) -> Result<Done> {
    let members = sweep_members(cfg)?;
    let rows: Vec<SweepRow> = members
        .par_iter()
        .enumerate()
        .map(|(index, m)| {
            let problems = m.validate();
            let (status, value, detail) = if !problems.is_empty() {
                (Status::Error, None, problems.join("; "))
            } else {
                match dispatch(m, override_obstruction) {
                    Ok(d) => {
                        let detail = d
                            .stability
                            .as_ref()
                            .map(|s| s.verdict.clone())
                            .or_else(|| d.reasons.first().cloned())
                            .unwrap_or_default();
                        (d.status, d.headline, detail)
                    }
                    Err(e) => (status_for(&e), None, e.to_string()),
                }
            };
            SweepRow {
                index,
                command: m.command,
                degrees: m.degrees.clone().unwrap_or_default(),
                exponents: m.exponents.clone().unwrap_or_default(),
                tau: m.tau.as_ref().map(|t| t.0.to_string()).unwrap_or_default(),
                alpha: m.alpha.unwrap_or(0.0),
                exit_code: status.exit_code(),
                status,
                value,
                detail,
            }
        })
        .collect();
    let mut table = String::from("index,command,degrees,exponents,tau,alpha,exit_code,status,value,detail\n");
    for r in &rows {
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(";");
        let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_string));
        let _ = writeln!(
            table,
            "{},{},{},{},{},{:.16e},{},{},{},\"{}\"",
            r.index,
            r.command.name(),
            join(&r.degrees),
            join(&r.exponents),
            r.tau,
            r.alpha,
            r.exit_code,
            status.unwrap_or_default(),
            r.value.map(|v| format!("{v:.16e}")).unwrap_or_default(),
            r.detail.replace('"', "\"\"")
        );
    }
    let mut done = Done::new(Status::Decided, json!({ "members": rows.len(), "rows": to_value(&rows) }));
    done.csv.push(("summary.csv".into(), table));
    Ok(done)
}

fn dispatch(cfg: &RunConfig, override_obstruction: bool) -> Result<Done> {
    match cfg.command {
        Command::SolveVortex => run_solve_vortex(cfg),
        Command::SolveGravitating => run_solve_gravitating(cfg, override_obstruction),
        Command::EbSolve => run_eb_solve(cfg, override_obstruction),
        Command::Futaki => run_futaki(cfg),
        Command::Stability => run_stability(cfg),
        Command::QuiverCheck => run_quiver_check(cfg),
        Command::Sweep => run_sweep(cfg, override_obstruction),
    }
}

/// Runs a validated config. Never panics on solver failures: they become a
/// status and an exit code in the report.
pub fn execute(config: &RunConfig, override_obstruction: bool) -> Outcome {
    let start = Instant::now();
    let done = dispatch(config, override_obstruction).unwrap_or_else(|e| {
        let mut d = Done::new(status_for(&e), Value::Null);
        d.reasons.push(e.to_string());
        d
    });
    let report = RunReport {
        artifact: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: config.command,
        config: config.clone(),
        conventions_sha256: conventions_sha256(),
        status: done.status,
        exit_code: done.status.exit_code(),
        reasons: done.reasons,
        stability: done.stability,
        result: done.result,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    Outcome {
        report,
        csv: done.csv,
    }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes the report and CSV files selected by `formats`; returns their paths.
pub fn write_outputs(dir: &Path, outcome: &Outcome, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    if formats.contains(&Format::Csv) {
        for (name, body) in &outcome.csv {
            let p = dir.join(name);
            write_atomic(&p, body.as_bytes())?;
            written.push(p);
        }
    }
    if formats.contains(&Format::Json) {
        let p = dir.join("report.json");
        let text = serde_json::to_string_pretty(&outcome.report).map_err(|e| Error::Io(e.to_string()))?;
        write_atomic(&p, text.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

/// Output directory: `--out`, then `output.directory`, then the environment
/// default, then the working directory.
pub fn output_dir(flag: Option<&Path>, config: &RunConfig, env_default: Option<OsString>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output.as_ref().and_then(|o| o.directory.clone()))
        .or_else(|| env_default.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Debug, Parser)]
#[command(name = "kymh", version, about = "Gravitating vortex solver and existence-obstruction calculator")]
pub struct Args {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: `output.directory`, then $KYMH_OUT_DIR, then `.`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run the gravitating solvers even when an obstruction applies.
    #[arg(long)]
    pub override_obstruction: bool,
    /// Grid size, overriding `n` in the config.
    #[arg(long)]
    pub resolution: Option<usize>,
}

/// Full command-line run; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return EXIT_IO;
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(problems) => {
            for p in problems {
                eprintln!("config error: {p}");
            }
            return EXIT_USAGE;
        }
    };
    if let Some(r) = args.resolution {
        config.n = Some(r);
        let problems = config.validate();
        if !problems.is_empty() {
            for p in problems {
                eprintln!("config error: {p}");
            }
            return EXIT_USAGE;
        }
    }
    let outcome = execute(&config, args.override_obstruction);
    let dir = output_dir(args.out.as_deref(), &config, std::env::var_os(OUT_DIR_ENV));
    let formats = config.output.as_ref().map(|o| o.formats.clone()).unwrap_or_else(all_formats);
    let written = match write_outputs(&dir, &outcome, &formats) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };
    let r = &outcome.report;
    for reason in &r.reasons {
        eprintln!("{}: {reason}", config.command.name());
    }
    let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_string));
    println!(
        "{}: {} (exit {})",
        config.command.name(),
        status.unwrap_or_default(),
        r.exit_code
    );
    for p in written {
        println!("  wrote {}", p.display());
    }
    r.exit_code
}
