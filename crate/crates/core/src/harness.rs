//! Experiment harness: run configuration, solver dispatch, iteration
//! tables, the scaling study and certificate checks.
//!
//! A run is described by a [`RunConfig`]. Configurations are usually
//! assembled from [`Settings`], a flat key/value record that can be read
//! from a TOML file and overlaid with command-line flags.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::duality::{certify, DualCertificate};
use crate::error::{Error, Result};
use crate::operators::read_csv_vector;
use crate::problems::{make_instance, ExperimentKind, ExperimentSpec, GroundTruth, InstanceBundle, Noise};
use crate::prox::{active_inactive, Problem};
use crate::solvers::{
    solve_active_set, solve_ista, solve_ssn, IterationRecord, SolveOptions, SolveReport, Status, StopRule,
};

/// Grid of the scaling study, roughly `100 · 1.5^k`.
pub const DEFAULT_SCALING_SIZES: [usize; 6] = [100, 150, 224, 335, 501, 750];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Experiment,
    Scaling,
    Certify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Ssn,
    ActiveSet,
    Ista,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Ssn => "ssn",
            SolverKind::ActiveSet => "active-set",
            SolverKind::Ista => "ista",
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ssn" => Ok(SolverKind::Ssn),
            "active-set" => Ok(SolverKind::ActiveSet),
            "ista" => Ok(SolverKind::Ista),
            _ => Err(Error::Parse(format!("unknown solver {s:?} (expected ssn, active-set or ista)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Parse(format!("unknown format {s:?} (expected table, csv or json)"))),
        }
    }
}

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    NotConverged,
    Singular,
    ConfigError,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::NotConverged => 2,
            ExitStatus::Singular => 3,
            ExitStatus::ConfigError => 4,
        }
    }

    pub fn from_report(report: &SolveReport) -> Self {
        match report.status {
            Status::Converged => ExitStatus::Success,
            Status::MaxIters => ExitStatus::NotConverged,
            Status::SingularSystem => ExitStatus::Singular,
        }
    }
}

/// Flat configuration record. Every field is optional so that a config
/// file and command-line flags can be layered with [`Settings::overlay`].
///
/// ```toml
/// experiment = "inverse-integration"
/// n = 500
/// w = 3e-3
/// gamma = 5e5
/// noise_rel = 0.05
/// seed = 1
/// tol = 1e-10
/// max_iters = 100
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub experiment: Option<ExperimentKind>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub w: Option<f64>,
    pub gamma: Option<f64>,
    pub noise_rel: Option<f64>,
    pub noise_abs: Option<f64>,
    pub seed: Option<u64>,
    pub solver: Option<SolverKind>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub stop_rule: Option<StopRule>,
    pub record_condition: Option<bool>,
    pub certify: Option<bool>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub instance: Option<PathBuf>,
    pub solution: Option<PathBuf>,
    pub gap_tol: Option<f64>,
    pub sizes: Option<Vec<usize>>,
    pub repeats: Option<usize>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($field:ident),*) => {
        Settings { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Settings {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        Self::from_toml_str(&text)
    }

    /// Fields set in `top` win over fields set in `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay_fields!(base, top; experiment, n, m, w, gamma, noise_rel, noise_abs, seed, solver, tol,
            max_iters, stop_rule, record_condition, certify, format, out, instance, solution, gap_tol,
            sizes, repeats)
    }

    fn experiment_spec(&self, kind: ExperimentKind) -> Result<ExperimentSpec> {
        let mut spec = match kind {
            ExperimentKind::InverseIntegration => ExperimentSpec::inverse_integration(self.n.unwrap_or(500)),
            ExperimentKind::HaarDeblur => ExperimentSpec::haar_deblur(self.n.unwrap_or(1024)),
            ExperimentKind::CompressedSensing => {
                ExperimentSpec::compressed_sensing(self.n.unwrap_or(1024), self.m.unwrap_or(64))
            }
        };
        match (self.noise_rel, self.noise_abs) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter("give at most one of noise_rel and noise_abs".into()));
            }
            (Some(r), None) => spec.noise = Noise::Relative(r),
            (None, Some(a)) => spec.noise = Noise::Absolute(a),
            (None, None) => {}
        }
        if let Some(w) = self.w {
            spec.w_value = w;
        }
        if let Some(g) = self.gamma {
            spec.gamma = g;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Resolves defaults and checks that `command` has what it needs.
    pub fn into_config(self, command: Command) -> Result<RunConfig> {
        let kind = match command {
            Command::Scaling => Some(self.experiment.unwrap_or(ExperimentKind::InverseIntegration)),
            _ => self.experiment,
        };
        let experiment = kind.map(|k| self.experiment_spec(k)).transpose()?;
        let mut options = SolveOptions {
            record_condition: kind == Some(ExperimentKind::CompressedSensing),
            ..SolveOptions::default()
        };
        if matches!(command, Command::Experiment | Command::Scaling) {
            // Experiment tables and timings report convergence of the residual.
            options.stop_rule = StopRule::ResidualNorm;
        }
        if let Some(t) = self.tol {
            options.residual_tol = t;
        }
        if let Some(k) = self.max_iters {
            options.max_iters = k;
        }
        if let Some(r) = self.stop_rule {
            options.stop_rule = r;
        }
        if let Some(c) = self.record_condition {
            options.record_condition = c;
        }
        let cfg = RunConfig {
            command,
            experiment,
            solver: self.solver.unwrap_or(SolverKind::Ssn),
            options,
            output_format: self.format.unwrap_or(OutputFormat::Table),
            output_path: self.out,
            certify: self.certify.unwrap_or(false),
            instance_path: self.instance,
            solution_path: self.solution,
            gap_tolerance: self.gap_tol,
            sizes: self.sizes.unwrap_or_else(|| DEFAULT_SCALING_SIZES.to_vec()),
            timing_repeats: self.repeats.unwrap_or(3),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub experiment: Option<ExperimentSpec>,
    pub solver: SolverKind,
    pub options: SolveOptions,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    /// Attach a duality certificate to the report.
    pub certify: bool,
    /// Instance bundle for `solve` and `certify` (JSON file or CSV directory).
    pub instance_path: Option<PathBuf>,
    /// Candidate solution for `certify` (JSON array or one CSV column).
    pub solution_path: Option<PathBuf>,
    /// Gap bound for `certify`; defaults to the certificate's own bound.
    pub gap_tolerance: Option<f64>,
    pub sizes: Vec<usize>,
    /// Each scaling timing is the minimum over this many solves.
    pub timing_repeats: usize,
}

impl RunConfig {
    /// Experiment run with table output, stopping on `‖F(u)‖ ≤ 1e-10`.
    pub fn experiment(spec: ExperimentSpec) -> Self {
        let cs = spec.kind == ExperimentKind::CompressedSensing;
        let mut cfg = RunConfig::base(Command::Experiment, Some(spec));
        cfg.options.stop_rule = StopRule::ResidualNorm;
        cfg.options.record_condition = cs;
        cfg
    }

    /// Scaling study over `sizes`, timing solves to `‖F(u)‖ ≤ 1e-10`.
    pub fn scaling(spec: ExperimentSpec, sizes: &[usize]) -> Self {
        let mut cfg = RunConfig::base(Command::Scaling, Some(spec));
        cfg.options.stop_rule = StopRule::ResidualNorm;
        cfg.sizes = sizes.to_vec();
        cfg
    }

    /// `solve` on an instance bundle.
    pub fn solve(instance: impl Into<PathBuf>) -> Self {
        let mut cfg = RunConfig::base(Command::Solve, None);
        cfg.instance_path = Some(instance.into());
        cfg
    }

    /// `certify` of a stored solution against an instance bundle.
    pub fn certify(instance: impl Into<PathBuf>, solution: impl Into<PathBuf>) -> Self {
        let mut cfg = RunConfig::base(Command::Certify, None);
        cfg.instance_path = Some(instance.into());
        cfg.solution_path = Some(solution.into());
        cfg
    }

    fn base(command: Command, experiment: Option<ExperimentSpec>) -> Self {
        RunConfig {
            command,
            experiment,
            solver: SolverKind::Ssn,
            options: SolveOptions::default(),
            output_format: OutputFormat::Table,
            output_path: None,
            certify: false,
            instance_path: None,
            solution_path: None,
            gap_tolerance: None,
            sizes: DEFAULT_SCALING_SIZES.to_vec(),
            timing_repeats: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.options.validate()?;
        let missing = |what: &str| Err(Error::InvalidParameter(format!("{what} is required for this command")));
        match self.command {
            Command::Experiment | Command::Scaling if self.experiment.is_none() => missing("an experiment")?,
            Command::Solve if self.instance_path.is_none() => missing("an instance path")?,
            Command::Certify if self.instance_path.is_none() => missing("an instance path")?,
            Command::Certify if self.solution_path.is_none() => missing("a solution path")?,
            _ => {}
        }
        if let Some(spec) = &self.experiment {
            spec.validate()?;
        }
        if self.command == Command::Scaling {
            if self.sizes.len() < 4 {
                return Err(Error::InvalidParameter(format!(
                    "scaling needs at least 4 sizes, got {}",
                    self.sizes.len()
                )));
            }
            if self.sizes.windows(2).any(|s| s[0] >= s[1]) {
                return Err(Error::InvalidParameter("scaling sizes must be strictly increasing".into()));
            }
            if self.timing_repeats == 0 {
                return Err(Error::InvalidParameter("repeats must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// Runs `solver` on `p` from `u = 0`. The active-set form starts from the
/// sign pattern of the shifted point at zero, so both Newton variants
/// produce the same first iterate.
pub fn solve_with(p: &Problem, solver: SolverKind, opts: &SolveOptions) -> Result<SolveReport> {
    let u0 = Array1::zeros(p.dim());
    match solver {
        SolverKind::Ssn => solve_ssn(p, u0.view(), opts),
        SolverKind::ActiveSet => solve_active_set(p, &active_inactive(p, u0.view())?, opts),
        SolverKind::Ista => solve_ista(p, u0.view(), opts),
    }
}

/// Result of a `solve` or `experiment` run.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub experiment: Option<ExperimentSpec>,
    pub solver: SolverKind,
    pub report: SolveReport,
    pub certificate: Option<DualCertificate>,
    /// `‖u − u_true‖` when the ground truth is known.
    pub reconstruction_error: Option<f64>,
    #[serde(skip)]
    pub truth: Option<GroundTruth>,
}

impl RunOutcome {
    pub fn exit_status(&self) -> ExitStatus {
        ExitStatus::from_report(&self.report)
    }
}

fn distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn finish(
    cfg: &RunConfig,
    p: &Problem,
    report: SolveReport,
    truth: Option<GroundTruth>,
    u_true: Option<ArrayView1<f64>>,
) -> Result<RunOutcome> {
    let certificate = if cfg.certify {
        Some(certify(p, report.solution.view())?)
    } else {
        None
    };
    let outcome = RunOutcome {
        experiment: cfg.experiment.clone(),
        solver: cfg.solver,
        reconstruction_error: u_true.map(|u| distance(report.solution.view(), u)),
        report,
        certificate,
        truth,
    };
    if let Some(path) = &cfg.output_path {
        write_outcome(&outcome, cfg.output_format, path)?;
    }
    Ok(outcome)
}

/// Builds the configured experiment, solves it and writes the report to
/// `cfg.output_path` if one is set. A singular Newton system is not an
/// error: the partial trace is kept and reflected in the exit status.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let spec = cfg
        .experiment
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("an experiment is required".into()))?;
    let (p, truth) = make_instance(spec)?;
    let report = solve_with(&p, cfg.solver, &cfg.options)?;
    let u_true = truth.u_true.clone();
    finish(cfg, &p, report, Some(truth), Some(u_true.view()))
}

/// Solves the instance bundle at `cfg.instance_path`.
pub fn run_solve(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let bundle = load_instance(cfg.instance_path.as_ref().expect("validated"))?;
    let p = bundle.to_problem()?;
    let report = solve_with(&p, cfg.solver, &cfg.options)?;
    let u_true = bundle.u_true.map(Array1::from);
    finish(cfg, &p, report, None, u_true.as_ref().map(|u| u.view()))
}

/// Reads a bundle from a JSON file or from a directory of CSV files.
pub fn load_instance(path: impl AsRef<Path>) -> Result<InstanceBundle> {
    let path = path.as_ref();
    if path.is_dir() {
        InstanceBundle::read_csv_dir(path)
    } else {
        InstanceBundle::read_json(path)
    }
}

/// Reads a vector from a JSON array (`.json`) or a single CSV row or column.
pub fn load_vector(path: impl AsRef<Path>) -> Result<Array1<f64>> {
    let path = path.as_ref();
    let file = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "json") {
        let v: Vec<f64> = serde_json::from_reader(file)?;
        Ok(Array1::from(v))
    } else {
        read_csv_vector(file)
    }
}

/// Formats `x` with four significant digits, e.g. `1.234e-05`.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.3e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Iteration table with columns `n`, `Ψ(uⁿ)`, `‖rⁿ‖`, `|A|` and, when
/// condition numbers were recorded, `cond(M_AA)`.
pub fn format_table(records: &[IterationRecord]) -> String {
    let with_cond = records.iter().any(|r| r.condition.is_some());
    let mut out = String::new();
    write!(out, "{:>5}  {:>11}  {:>11}  {:>6}", "n", "Psi(u^n)", "|r^n|", "|A|").unwrap();
    if with_cond {
        write!(out, "  {:>11}", "cond(M_AA)").unwrap();
    }
    out.push('\n');
    for r in records {
        write!(
            out,
            "{:>5}  {:>11}  {:>11}  {:>6}",
            r.n,
            format_sci(r.objective),
            format_sci(r.residual_norm),
            r.active_size
        )
        .unwrap();
        if with_cond {
            let c = r.condition.map(format_sci).unwrap_or_default();
            write!(out, "  {c:>11}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn format_certificate(c: &DualCertificate) -> String {
    format!(
        "primal {}  dual {}  gap {}  feasibility margin {}  complementarity {}  dual scale {}\n",
        format_sci(c.primal_objective),
        format_sci(c.dual_objective),
        format_sci(c.gap),
        format_sci(c.feasibility_margin),
        format_sci(c.complementarity_violation),
        format_sci(c.dual_scale),
    )
}

/// Records as CSV with a header row. Floats are written in shortest
/// round-trip form, so [`read_records_csv`] restores them bit for bit.
pub fn write_records_csv<W: Write>(writer: W, records: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<IterationRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for r in rdr.deserialize() {
        records.push(r?);
    }
    Ok(records)
}

fn summary(outcome: &RunOutcome) -> String {
    let r = &outcome.report;
    let mut out = String::new();
    if let Some(spec) = &outcome.experiment {
        let noise = match spec.noise {
            Noise::Relative(x) => format!("{}% relative", x * 100.0),
            Noise::Absolute(x) => format!("|delta| = {}", format_sci(x)),
        };
        writeln!(
            out,
            "# {} n = {} seed = {} w = {} gamma = {} noise {}",
            spec.kind.name(),
            spec.n,
            spec.seed,
            format_sci(spec.w_value),
            format_sci(spec.gamma),
            noise
        )
        .unwrap();
    }
    writeln!(
        out,
        "# solver {}: {:?} after {} iterations in {} s",
        outcome.solver.name(),
        r.status,
        r.iterations,
        format_sci(r.wall_time)
    )
    .unwrap();
    writeln!(out, "# |r|/gamma = {}", format_sci(r.final_scaled_residual())).unwrap();
    if let Some(e) = outcome.reconstruction_error {
        writeln!(out, "# |u - u_true| = {}", format_sci(e)).unwrap();
    }
    for w in &r.warnings {
        writeln!(out, "# warning: {w}").unwrap();
    }
    out
}

/// Renders a run in the requested format. CSV holds only the iteration
/// records; the certificate, if any, is appended to table output and
/// embedded in JSON output.
pub fn render(outcome: &RunOutcome, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Table => {
            let mut s = summary(outcome);
            s.push_str(&format_table(&outcome.report.records));
            if let Some(c) = &outcome.certificate {
                s.push_str("# certificate: ");
                s.push_str(&format_certificate(c));
            }
            Ok(s)
        }
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_records_csv(&mut buf, &outcome.report.records)?;
            Ok(String::from_utf8(buf).expect("csv output is utf-8"))
        }
        OutputFormat::Json => Ok(serde_json::to_string_pretty(outcome)? + "\n"),
    }
}

/// Path of the certificate written next to a CSV report.
pub fn certificate_path(report_path: &Path) -> PathBuf {
    report_path.with_extension("certificate.json")
}

/// Writes the rendered run to `path`. For CSV with a certificate, the
/// certificate goes to [`certificate_path`] as JSON.
pub fn write_outcome(outcome: &RunOutcome, format: OutputFormat, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(render(outcome, format)?.as_bytes())?;
    out.flush()?;
    if let (OutputFormat::Csv, Some(c)) = (format, &outcome.certificate) {
        let mut out = BufWriter::new(File::create(certificate_path(path))?);
        serde_json::to_writer_pretty(&mut out, c)?;
        out.flush()?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub solver: SolverKind,
    /// Sizes whose solve converged, increasing.
    pub sizes: Vec<usize>,
    /// Best wall time per size over the configured repeats.
    pub cpu_seconds: Vec<f64>,
    pub iterations: Vec<usize>,
    /// Sizes left out of the fit because the solve did not converge.
    pub failed: Vec<usize>,
    /// Slope `β` of the least-squares line through `(log N, log t)`.
    pub fitted_exponent: f64,
}

impl ScalingResult {
    pub fn format_table(&self) -> String {
        let mut out = format!("{:>6}  {:>11}  {:>5}\n", "N", "time [s]", "iters");
        for ((n, t), k) in self.sizes.iter().zip(&self.cpu_seconds).zip(&self.iterations) {
            writeln!(out, "{n:>6}  {:>11}  {k:>5}", format_sci(*t)).unwrap();
        }
        for n in &self.failed {
            writeln!(out, "{n:>6}  {:>11}  {:>5}", "failed", "-").unwrap();
        }
        writeln!(out, "# {}: t ~ N^{:.3}", self.solver.name(), self.fitted_exponent).unwrap();
        out
    }
}

/// Least-squares slope of `log t` against `log N`; NaN with fewer than
/// two points.
pub fn fit_exponent(sizes: &[usize], seconds: &[f64]) -> f64 {
    assert_eq!(sizes.len(), seconds.len(), "fit_exponent: length mismatch");
    if sizes.len() < 2 {
        return f64::NAN;
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = seconds.iter().map(|t| t.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Solves the instance `repeats` times and returns the last report with
/// the minimum wall time, measured around the solve call only.
pub fn time_solve(p: &Problem, solver: SolverKind, opts: &SolveOptions, repeats: usize) -> Result<(SolveReport, f64)> {
    let mut best = f64::INFINITY;
    let mut last = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let report = solve_with(p, solver, opts)?;
        best = best.min(start.elapsed().as_secs_f64());
        last = Some(report);
    }
    Ok((last.expect("at least one repeat"), best))
}

/// Times the configured solver on the experiment at each of `sizes`.
///
/// All parameters, including the seed and hence the underlying signal and
/// relative noise level, stay fixed; only the discretization changes.
pub fn run_scaling(cfg: &RunConfig, sizes: &[usize]) -> Result<ScalingResult> {
    let cfg = RunConfig {
        sizes: sizes.to_vec(),
        ..cfg.clone()
    };
    cfg.validate()?;
    let base = cfg
        .experiment
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("an experiment is required".into()))?;
    let mut result = ScalingResult {
        solver: cfg.solver,
        sizes: Vec::new(),
        cpu_seconds: Vec::new(),
        iterations: Vec::new(),
        failed: Vec::new(),
        fitted_exponent: f64::NAN,
    };
    for &n in sizes {
        let spec = ExperimentSpec { n, ..base.clone() };
        let (p, _) = make_instance(&spec)?;
        let (report, seconds) = time_solve(&p, cfg.solver, &cfg.options, cfg.timing_repeats)?;
        if report.converged() {
            result.sizes.push(n);
            result.cpu_seconds.push(seconds);
            result.iterations.push(report.iterations);
        } else {
            result.failed.push(n);
        }
    }
    result.fitted_exponent = fit_exponent(&result.sizes, &result.cpu_seconds);
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyOutcome {
    pub certificate: DualCertificate,
    pub gap_tolerance: f64,
    /// `gap ≤ gap_tolerance`.
    pub certified: bool,
}

impl CertifyOutcome {
    pub fn exit_status(&self) -> ExitStatus {
        if self.certified {
            ExitStatus::Success
        } else {
            ExitStatus::NotConverged
        }
    }
}

/// Certifies the stored solution against the stored instance.
pub fn run_certify(cfg: &RunConfig) -> Result<CertifyOutcome> {
    cfg.validate()?;
    let p = load_instance(cfg.instance_path.as_ref().expect("validated"))?.to_problem()?;
    let u = load_vector(cfg.solution_path.as_ref().expect("validated"))?;
    let certificate = certify(&p, u.view())?;
    let gap_tolerance = cfg.gap_tolerance.unwrap_or_else(|| certificate.default_gap_tolerance());
    Ok(CertifyOutcome {
        certified: certificate.gap <= gap_tolerance,
        certificate,
        gap_tolerance,
    })
}
