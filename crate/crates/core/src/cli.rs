//! Command-line front end: configuration, dispatch and file output.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::entanglement::{self, XState};
use crate::error::Error;
use crate::experiments::{
    self, detect_death_intervals_refined, ConcurrenceTrace, Dynamics, InitialStateSpec, StateFamily,
};
use crate::hilbert::{ComplexMatrix, DensityTolerances};
use crate::model::{Backend, ModelParams};
use crate::propagate::TimeGrid;

pub const TOOL_NAME: &str = "pseudomode";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Validated run configuration. Defaults are the strong-coupling parameters Γ = 0.2, Ω = √0.05.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub backend: Backend,
    pub family: StateFamily,
    pub alpha_sq: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_points: usize,
    pub theta: f64,
    /// Ω in units of γ₀.
    pub omega: f64,
    /// Γ in units of γ₀.
    pub gamma: f64,
    pub fock_cutoff: usize,
    pub t_start: f64,
    pub t_max: f64,
    pub points: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub zero_tol: f64,
    pub threads: Option<usize>,
    pub tolerances: DensityTolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        let params = ModelParams::default();
        Self {
            backend: Backend::CommonStructured,
            family: StateFamily::Entangled,
            alpha_sq: 0.5,
            alpha_min: 0.0,
            alpha_max: 1.0,
            alpha_points: 51,
            theta: 0.0,
            omega: params.omega_coupling,
            gamma: params.gamma_pseudo,
            fock_cutoff: params.fock_cutoff,
            t_start: 0.0,
            t_max: 50.0,
            points: 1001,
            out: None,
            format: OutputFormat::Csv,
            zero_tol: experiments::DEFAULT_ZERO_TOL,
            threads: None,
            tolerances: DensityTolerances::default(),
        }
    }
}

/// Configuration problem, naming the offending key when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn field(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: Some(field.to_string()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "{field}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    /// Deserialises a TOML document without range checks.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError {
            field: None,
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::field(name, format!("must lie in [0, 1], got {v}")))
            }
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::field(name, format!("must be > 0, got {v}")))
            }
        };
        unit("alpha_sq", self.alpha_sq)?;
        unit("alpha_min", self.alpha_min)?;
        unit("alpha_max", self.alpha_max)?;
        if self.alpha_max <= self.alpha_min {
            return Err(ConfigError::field("alpha_max", "must exceed alpha_min"));
        }
        if self.alpha_points < 2 {
            return Err(ConfigError::field("alpha_points", format!("need at least 2, got {}", self.alpha_points)));
        }
        if !(0.0..std::f64::consts::TAU).contains(&self.theta) {
            return Err(ConfigError::field("theta", format!("must lie in [0, 2π), got {}", self.theta)));
        }
        positive("omega", self.omega)?;
        positive("gamma", self.gamma)?;
        if self.fock_cutoff < 2 {
            return Err(ConfigError::field("fock_cutoff", format!("must be >= 2, got {}", self.fock_cutoff)));
        }
        if !(self.t_start.is_finite() && self.t_start >= 0.0) {
            return Err(ConfigError::field("t_start", format!("must be >= 0, got {}", self.t_start)));
        }
        if !(self.t_max.is_finite() && self.t_max > self.t_start) {
            return Err(ConfigError::field("t_max", format!("must exceed t_start, got {}", self.t_max)));
        }
        if self.points < 2 {
            return Err(ConfigError::field("points", format!("need at least 2, got {}", self.points)));
        }
        if !(self.zero_tol.is_finite() && self.zero_tol >= 0.0) {
            return Err(ConfigError::field("zero_tol", format!("must be >= 0, got {}", self.zero_tol)));
        }
        if self.threads == Some(0) {
            return Err(ConfigError::field("threads", "must be >= 1"));
        }
        positive("tolerances.hermiticity", self.tolerances.hermiticity)?;
        positive("tolerances.trace", self.tolerances.trace)?;
        positive("tolerances.positivity", self.tolerances.positivity)?;
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            omega_coupling: self.omega,
            gamma_pseudo: self.gamma,
            fock_cutoff: self.fock_cutoff,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid {
            t_start: self.t_start,
            t_end: self.t_max,
            n_points: self.points,
        }
    }

    pub fn initial_state(&self) -> InitialStateSpec {
        InitialStateSpec {
            family: self.family,
            alpha_sq: self.alpha_sq,
            theta: self.theta,
        }
    }

    pub fn alpha_values(&self) -> Vec<f64> {
        let n = self.alpha_points;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.alpha_max
                } else {
                    self.alpha_min + (self.alpha_max - self.alpha_min) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Parses and validates a TOML run configuration; missing keys take defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config = RunConfig::from_toml(text)?;
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Parser)]
#[command(name = TOOL_NAME, version, about = "Two-qubit entanglement dynamics in structured reservoirs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandKind {
    Trace,
    Sweep,
    Steady,
    Detect,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Concurrence trace for one initial state (CSV: t, C, C1, C2, pop_minus, trace_err).
    Trace(Overrides),
    /// Concurrence surface over (alpha_sq, t).
    Sweep(Overrides),
    /// Long-time state and its concurrence.
    Steady(Overrides),
    /// Sudden death / birth intervals.
    Detect(Overrides),
}

impl Command {
    pub fn parts(&self) -> (&'static str, &Overrides) {
        match self {
            Command::Trace(o) => ("trace", o),
            Command::Sweep(o) => ("sweep", o),
            Command::Steady(o) => ("steady", o),
            Command::Detect(o) => ("detect", o),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long = "alpha-sq")]
    pub alpha_sq: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "fock-cutoff")]
    pub fock_cutoff: Option<usize>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long = "alpha-points")]
    pub alpha_points: Option<usize>,
    #[arg(long = "zero-tol")]
    pub zero_tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Overrides {
    /// Loads the config file (if any), applies flag overrides and validates.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(ConfigError::field("config", format!("{}: {e}", path.display())))
                })?;
                RunConfig::from_toml(&text).map_err(CliError::Config)?
            }
            None => RunConfig::default(),
        };
        if let Some(b) = &self.backend {
            config.backend = b
                .parse()
                .map_err(|e: Error| CliError::Config(ConfigError::field("backend", e.to_string())))?;
        }
        if let Some(f) = &self.family {
            config.family = f
                .parse()
                .map_err(|e: Error| CliError::Config(ConfigError::field("family", e.to_string())))?;
        }
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field.clone() { config.$target = v.into(); })*
            };
        }
        set!(alpha_sq => alpha_sq, theta => theta, omega => omega, gamma => gamma,
             fock_cutoff => fock_cutoff, tmax => t_max, points => points,
             alpha_points => alpha_points, zero_tol => zero_tol, format => format);
        if let Some(out) = &self.out {
            config.out = Some(out.clone());
        }
        if let Some(t) = self.threads {
            config.threads = Some(t);
        }
        config.validate().map_err(CliError::Config)?;
        Ok(config)
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let (kind, field, message) = match self {
            CliError::Config(e) => ("config", e.field.clone(), e.message.clone()),
            CliError::Numerical(e) => ("numerical", None, e.to_string()),
            CliError::Io(e) => ("io", None, e.to_string()),
        };
        json!({ "error": { "kind": kind, "field": field, "message": message } })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config(ConfigError {
                field: match &e {
                    Error::InvalidParameter { name, .. } => Some(name.to_string()),
                    _ => None,
                },
                message: e.to_string(),
            })
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

/// Provenance stamped on every output.
pub fn metadata(command: &str, config: &RunConfig) -> Value {
    let params = config.params();
    json!({
        "tool": TOOL_NAME,
        "version": VERSION,
        "command": command,
        "backend": config.backend,
        "family": config.family,
        "theta": config.theta,
        "units": "time in 1/gamma0, rates in gamma0",
        "params": {
            "omega": params.omega_coupling,
            "gamma": params.gamma_pseudo,
            "gamma0": params.gamma0(),
            "fock_cutoff": params.fock_cutoff,
            "strong_coupling": params.is_strong_coupling(),
        },
        "grid": { "t_start": config.t_start, "t_end": config.t_max, "points": config.points },
        "tolerances": {
            "hermiticity": config.tolerances.hermiticity,
            "trace": config.tolerances.trace,
            "positivity": config.tolerances.positivity,
            "zero_tol": config.zero_tol,
        },
    })
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn sink(path: Option<&Path>) -> std::io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout())),
    })
}

fn write_csv_header(out: &mut dyn Write, meta: &Value) -> std::io::Result<()> {
    writeln!(out, "# {}", serde_json::to_string(meta).expect("metadata serialises"))
}

fn write_json(path: Option<&Path>, value: &Value) -> Result<(), CliError> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    json!(rows)
}

/// Executes one subcommand with a validated configuration.
pub fn run(command: &str, config: &RunConfig) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(ConfigError::field("threads", e.to_string())))?;
    pool.install(|| match command {
        "trace" => run_trace(config),
        "sweep" => run_sweep(config),
        "steady" => run_steady(config),
        "detect" => run_detect(config),
        other => Err(CliError::Config(ConfigError::field("command", format!("unknown command `{other}`")))),
    })
}

fn dynamics(config: &RunConfig) -> Result<Dynamics, CliError> {
    Ok(Dynamics::new(config.backend, config.params())?.with_tolerances(config.tolerances))
}

fn compute_trace(config: &RunConfig) -> Result<(Dynamics, ComplexMatrix, ConcurrenceTrace), CliError> {
    let dynamics = dynamics(config)?;
    let rho0 = config.initial_state().density()?;
    let traj = dynamics.evolve(&rho0, &config.grid())?;
    let trace = ConcurrenceTrace::from_trajectory(&traj)?;
    Ok((dynamics, rho0, trace))
}

fn run_trace(config: &RunConfig) -> Result<(), CliError> {
    let (_, _, trace) = compute_trace(config)?;
    let meta = metadata("trace", config);
    let times = trace.times();
    match config.format {
        OutputFormat::Csv => {
            let mut out = sink(config.out.as_deref())?;
            write_csv_header(&mut out, &meta)?;
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            w.write_record(["t", "C", "C1", "C2", "pop_minus", "trace_err"])?;
            for k in 0..times.len() {
                w.write_record(
                    [times[k], trace.c[k], trace.c1[k], trace.c2[k], trace.pop_minus[k], trace.trace_err[k]]
                        .map(fmt_f64),
                )?;
            }
            w.flush()?;
        }
        OutputFormat::Json => write_json(
            config.out.as_deref(),
            &json!({
                "metadata": meta,
                "alpha_sq": config.alpha_sq,
                "t": times,
                "C": trace.c,
                "C1": trace.c1,
                "C2": trace.c2,
                "pop_minus": trace.pop_minus,
                "trace_err": trace.trace_err,
            }),
        )?,
    }
    Ok(())
}

fn run_sweep(config: &RunConfig) -> Result<(), CliError> {
    let surface = experiments::sweep_with(
        &dynamics(config)?,
        config.family,
        &config.alpha_values(),
        config.theta,
        &config.grid(),
    )?;
    let meta = metadata("sweep", config);
    let document = json!({
        "metadata": meta,
        "alpha_sq": surface.alpha_sq,
        "t": surface.times(),
        "concurrence": surface.concurrence,
    });
    match config.format {
        OutputFormat::Csv => {
            let mut out = sink(config.out.as_deref())?;
            write_csv_header(&mut out, &meta)?;
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            w.write_record(["alpha_sq", "t", "C"])?;
            for (a, t, c) in surface.long_form() {
                w.write_record([a, t, c].map(fmt_f64))?;
            }
            w.flush()?;
            if let Some(path) = &config.out {
                write_json(Some(&sidecar_path(path)), &document)?;
            }
        }
        OutputFormat::Json => write_json(config.out.as_deref(), &document)?,
    }
    Ok(())
}

/// JSON metadata file written next to a CSV sweep.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".json");
    csv_path.with_file_name(name)
}

fn run_steady(config: &RunConfig) -> Result<(), CliError> {
    let dynamics = dynamics(config)?;
    let rho0 = config.initial_state().density()?;
    let limit = dynamics.asymptotic(&rho0)?;
    let concurrence = entanglement::concurrence_general(&limit)?;
    let closed_form = XState::from_density(&limit).and_then(|x| entanglement::concurrence_x(&x)).ok();
    let predicted = match config.family {
        StateFamily::Factorized if config.backend.is_common() => {
            Some(experiments::asymptotic_concurrence_factorized(config.alpha_sq))
        }
        _ => None,
    };
    write_json(
        config.out.as_deref(),
        &json!({
            "metadata": metadata("steady", config),
            "alpha_sq": config.alpha_sq,
            "state_bare": matrix_json(&limit),
            "dressed_populations": experiments::dressed_populations(&limit),
            "subradiant_population": experiments::subradiant_population(&limit),
            "concurrence": concurrence,
            "concurrence_x": closed_form,
            "predicted_concurrence": predicted,
        }),
    )
}

fn run_detect(config: &RunConfig) -> Result<(), CliError> {
    let (dynamics, rho0, trace) = compute_trace(config)?;
    let intervals =
        detect_death_intervals_refined(&trace, config.zero_tol, |t| dynamics.margin_at(&rho0, t))?;
    let horizon = config.t_max;
    write_json(
        config.out.as_deref(),
        &json!({
            "metadata": metadata("detect", config),
            "alpha_sq": config.alpha_sq,
            "death_intervals": intervals.intervals,
            "births": intervals.births(),
            "deaths": intervals.deaths_after(config.t_start),
            "total_death_duration": intervals.total_duration(horizon),
            "initially_separable": trace.margins()[0] < -config.zero_tol,
        }),
    )
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::Config(ConfigError {
                field: None,
                message: e.to_string(),
            });
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    let (name, overrides) = cli.command.parts();
    match overrides.resolve().and_then(|config| run(name, &config)) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.gamma, 0.2);
        assert_eq!(c.omega, 0.05f64.sqrt());
        assert_eq!(c.fock_cutoff, 2);
        assert_eq!((c.t_start, c.t_max, c.points), (0.0, 50.0, 1001));
        assert_eq!(c.alpha_points, 51);
        assert_eq!(c.backend, Backend::CommonStructured);
    }

    #[test]
    fn out_of_range_alpha_is_named() {
        let err = parse_config("alpha_sq = 1.5").unwrap_err();
        assert_eq!(err.field.as_deref(), Some("alpha_sq"));
    }

    #[test]
    fn backend_selection() {
        let c = parse_config("backend = \"common_markov\"").unwrap();
        assert_eq!(c.backend, Backend::CommonMarkov);
        let dynamics = Dynamics::new(c.backend, c.params()).unwrap();
        assert_eq!(dynamics.generator().superop_dim(), 16);
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let err = parse_config("gamma = 0.2\nfoo = 1\n").unwrap_err();
        assert!(err.message.contains("foo"), "{}", err.message);
        assert!(err.message.contains("line 2"), "{}", err.message);
    }

    #[test]
    fn nested_tolerances() {
        let c = parse_config("[tolerances]\npositivity = 1e-6\n").unwrap();
        assert_eq!(c.tolerances.positivity, 1e-6);
        assert_eq!(c.tolerances.trace, 1e-10);
        assert!(parse_config("[tolerances]\ntrace = -1.0\n").is_err());
    }

    #[test]
    fn sidecar_keeps_csv_name() {
        assert_eq!(sidecar_path(Path::new("/tmp/fig1a.csv")), PathBuf::from("/tmp/fig1a.csv.json"));
    }
}
