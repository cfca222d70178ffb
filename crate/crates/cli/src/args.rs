//! Command-line surface and the `key = value` config file.
//!
//! A config file holds the same long flag names as the command line, one per
//! line without the leading dashes. Its entries are spliced in directly after
//! the subcommand, so any flag given explicitly overrides them.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use pasdfs::{Criterion, DEFAULT_EPS};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "pasdfs",
    version,
    about = "Photon-added-then-subtracted displaced Fock states: witnesses, phase and Q-function data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Witness values over an alpha sweep, one row per spec, alpha, criterion and order
    Sweep(SweepArgs),
    /// Fock amplitudes of a single state
    State(StateArgs),
    /// Phase distribution P(theta) and number-phase fluctuation parameters
    Phase(PhaseArgs),
    /// Husimi Q function on a grid
    Qfunc(QfuncArgs),
    /// Closed-form results against the dense-matrix oracle
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Config file of `key = value` lines; explicit flags take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Bound on the discarded amplitude-tail norm
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// A sweep column: one of the moment witnesses or the phase fluctuation `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepCriterion {
    Witness(Criterion),
    PhaseFluctuation,
}

impl SweepCriterion {
    pub fn name(&self) -> &'static str {
        match self {
            SweepCriterion::Witness(c) => c.name(),
            SweepCriterion::PhaseFluctuation => "phase_fluctuation",
        }
    }
}

impl FromStr for SweepCriterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "phase_fluctuation" {
            return Ok(SweepCriterion::PhaseFluctuation);
        }
        s.parse::<Criterion>()
            .map(SweepCriterion::Witness)
            .map_err(|e| e.to_string())
    }
}

/// `name` or `name:o1:o2...`; orders given here take precedence over `--order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionChoice {
    pub criterion: SweepCriterion,
    pub orders: Vec<usize>,
}

impl FromStr for CriterionChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.split(':');
        let criterion = parts.next().unwrap_or_default().trim().parse()?;
        let orders = parts
            .map(|o| {
                o.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("order '{o}' in '{s}' is not a non-negative integer"))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { criterion, orders })
    }
}

#[derive(Debug, Clone, Args)]
pub struct AlphaSweep {
    #[arg(long, default_value_t = 0.0)]
    pub alpha_start: f64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha_stop: f64,
    #[arg(long, default_value_t = 201)]
    pub alpha_steps: usize,
    /// Phase of alpha in radians
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
}

impl AlphaSweep {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.alpha_steps < 2 {
            return Err(CliError::Usage(format!(
                "alpha-steps must be at least 2, got {}",
                self.alpha_steps
            )));
        }
        if self.alpha_start.is_nan() || self.alpha_stop.is_nan() || self.alpha_stop <= self.alpha_start {
            return Err(CliError::Usage(format!(
                "alpha-stop ({}) must exceed alpha-start ({})",
                self.alpha_stop, self.alpha_start
            )));
        }
        Ok(())
    }

    pub fn moduli(&self) -> Vec<f64> {
        let h = (self.alpha_stop - self.alpha_start) / (self.alpha_steps - 1) as f64;
        (0..self.alpha_steps).map(|i| self.alpha_start + i as f64 * h).collect()
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Photons added, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub k: Vec<usize>,
    /// Photons subtracted, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub q: Vec<usize>,
    /// Fock number of the displaced state, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub n: Vec<usize>,
    #[command(flatten)]
    pub alpha: AlphaSweep,
    /// antibunching, hosps, hong_mandel, klyshko, agarwal_tara, vogel or
    /// phase_fluctuation, each optionally followed by its own `:order` list
    #[arg(long, value_delimiter = ',', default_value = "antibunching")]
    pub criterion: Vec<CriterionChoice>,
    /// Orders as quoted in plots: l-1 for antibunching and hosps, l for
    /// hong_mandel, photon number z for klyshko
    #[arg(long, value_delimiter = ',')]
    pub order: Vec<usize>,
    /// Add an oracle_delta column from the dense-matrix pipeline
    #[arg(long)]
    pub oracle_check: bool,
    /// Worker threads; 1 runs serially
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct Single {
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub q: usize,
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    /// Modulus of alpha
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Phase of alpha in radians
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub spec: Single,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub spec: Single,
    #[arg(long, default_value_t = pasdfs::phase::DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct QfuncArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub spec: Single,
    /// `auto`, or `re_min,re_max,im_min,im_max`
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    pub window: String,
    #[arg(long, default_value_t = 128)]
    pub nx: usize,
    #[arg(long, default_value_t = 128)]
    pub ny: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SelfcheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub q: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_start: f64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha_stop: f64,
    #[arg(long, default_value_t = 5)]
    pub alpha_steps: usize,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4, allow_negative_numbers = true)]
    pub theta: f64,
    /// Largest accepted relative difference
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl SelfcheckArgs {
    pub fn sweep(&self) -> AlphaSweep {
        AlphaSweep {
            alpha_start: self.alpha_start,
            alpha_stop: self.alpha_stop,
            alpha_steps: self.alpha_steps,
            theta: self.theta,
        }
    }
}

#[derive(Debug)]
pub enum ParseFailure {
    Clap(clap::Error),
    Config(CliError),
}

/// Parses `argv` (program name first), merging a `--config` file if one is named.
pub fn parse<I, T>(argv: I) -> Result<Cli, ParseFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let sub = argv
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|i| i + 1);
    if let (Some(sub), Some(path)) = (sub, config_path(&argv)) {
        let name = argv[sub].to_string_lossy().into_owned();
        let explicit: Vec<String> = argv[sub + 1..]
            .iter()
            .filter_map(|a| {
                let a = a.to_string_lossy();
                a.strip_prefix("--")
                    .map(|f| f.split('=').next().unwrap_or_default().to_string())
            })
            .collect();
        let spliced = config_args(&name, &path, &explicit).map_err(ParseFailure::Config)?;
        argv.splice(sub + 1..sub + 1, spliced);
    }
    Cli::try_parse_from(argv).map_err(ParseFailure::Clap)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().map(|a| a.to_string_lossy());
    let mut found = None;
    while let Some(a) = it.next() {
        if a == "--config" {
            found = it.next().map(|p| PathBuf::from(p.as_ref()));
        } else if let Some(p) = a.strip_prefix("--config=") {
            found = Some(PathBuf::from(p));
        }
    }
    found
}

/// Flags for every config entry not in `explicit`. List-valued flags append
/// rather than replace, so explicit ones must suppress the file entry.
fn config_args(subcommand: &str, path: &PathBuf, explicit: &[String]) -> Result<Vec<OsString>, CliError> {
    let cmd = Cli::command();
    let Some(sub) = cmd.find_subcommand(subcommand) else {
        // clap reports the unknown subcommand itself
        return Ok(Vec::new());
    };
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = || format!("{}:{}", path.display(), lineno + 1);
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("{}: expected key = value", at())));
        };
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
            .ok_or_else(|| CliError::Usage(format!("{}: unknown key '{key}' for {subcommand}", at())))?;
        if explicit.contains(&key) {
            continue;
        }
        if arg.get_action().takes_values() {
            out.push(OsString::from(format!("--{key}={value}")));
        } else {
            match value {
                "true" => out.push(OsString::from(format!("--{key}"))),
                "false" => {}
                _ => return Err(CliError::Usage(format!("{}: '{key}' expects true or false", at()))),
            }
        }
    }
    Ok(out)
}
