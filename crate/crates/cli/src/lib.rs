//! `tailcop` command-line runs.
//!
//! Flags are parsed into a [`RunConfig`], which [`run`] executes. Every run
//! writes its CSV outputs plus a `manifest.json` holding the configuration,
//! SHA-256 digests of inputs and outputs, and the library version. A
//! manifest can be fed back through `tailcop replay`.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tailcop::export::{write_difference_csv, write_grid_csv, write_relation_csv, write_tail_curve_csv};
use tailcop::synth::{price_panel, sample_regimes, Regime, Timeline};
use tailcop::taildep::average_gaussian_tails;
use tailcop::{
    average_pairwise_density, compute_returns, difference_map, dynamics, load_prices,
    pearson_matrix, DifferenceOptions, ReturnMatrix64, SynthKind, TailCurve, TradingCalendar,
    UpperTailConvention,
};

/// Return intervals accepted on the command line, in minutes.
pub const INTERVALS: [u32; 4] = [30, 60, 120, 240];

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "tailcop", version, about = "Empirical copulas and tail dependence of asset return panels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Average pairwise copula density grid.
    Copula(AnalysisArgs),
    /// Empirical minus Gaussian copula density.
    Diff(AnalysisArgs),
    /// Lower and upper tail coefficients with the Gaussian reference.
    Taildep(AnalysisArgs),
    /// Per-window grids and the correlation / tail-dependence relation.
    Dynamics(AnalysisArgs),
    /// Synthetic price CSV with known dependence.
    Synth(SynthArgs),
    /// Rerun the configuration stored in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Price CSV with header `timestamp,symbol,price`.
    #[arg(long)]
    pub input: PathBuf,
    /// Trading calendar file (`open=HH:MM`, `close=HH:MM`, one holiday date per line).
    #[arg(long)]
    pub calendar: Option<PathBuf>,
    /// Return interval in minutes.
    #[arg(long, default_value_t = 60)]
    pub dt: u32,
    /// Grid resolution m.
    #[arg(long, default_value_t = tailcop::DEFAULT_RESOLUTION)]
    pub grid: usize,
    /// Tail level; repeat for several (default 0.02 0.04 0.1 0.25).
    #[arg(long = "alpha")]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = tailcop::DEFAULT_WINDOW_DAYS)]
    pub window_days: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Convention::Literal)]
    pub upper_tail_convention: Convention,
    /// Add a `density_permille` column to grid CSVs.
    #[arg(long)]
    pub permille: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub assets: usize,
    /// Trading days to generate.
    #[arg(long, default_value_t = 40)]
    pub days: usize,
    #[arg(long, value_enum, default_value_t = Kind::Gaussian)]
    pub kind: Kind,
    /// Equicorrelation of a Gaussian regime; repeat to split the days into
    /// consecutive regimes of equal length (default 0.5).
    #[arg(long = "corr", allow_hyphen_values = true)]
    pub correlations: Vec<f64>,
    /// First trading day.
    #[arg(long, default_value = "2007-01-03")]
    pub start: NaiveDate,
    #[arg(long)]
    pub calendar: Option<PathBuf>,
    /// Interval between synthetic prices in minutes.
    #[arg(long, default_value_t = 30)]
    pub dt: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write into this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Literal,
    Survival,
}

impl From<Convention> for UpperTailConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Literal => UpperTailConvention::Literal,
            Convention::Survival => UpperTailConvention::Survival,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Gaussian,
    Independent,
    Comonotone,
    Countermonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Copula,
    Diff,
    Taildep,
    Dynamics,
    Synth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub kind: Kind,
    pub assets: usize,
    pub days: usize,
    pub correlations: Vec<f64>,
    pub start: String,
}

/// Everything that determines a run's outputs. Thread count is deliberately
/// absent: it never changes results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub calendar: Option<PathBuf>,
    pub dt: u32,
    pub grid: usize,
    pub alphas: Vec<f64>,
    pub window_days: usize,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub upper_tail_convention: Convention,
    pub permille: bool,
    pub synth: Option<SynthConfig>,
}

impl RunConfig {
    fn analysis(command: Command, args: AnalysisArgs) -> Self {
        Self {
            command,
            input: Some(args.input),
            calendar: args.calendar,
            dt: args.dt,
            grid: args.grid,
            alphas: if args.alphas.is_empty() {
                tailcop::DEFAULT_ALPHAS.to_vec()
            } else {
                args.alphas
            },
            window_days: args.window_days,
            out: args.out,
            seed: None,
            upper_tail_convention: args.upper_tail_convention,
            permille: args.permille,
            synth: None,
        }
    }

    fn synth(args: SynthArgs) -> Self {
        let correlations = if args.correlations.is_empty() && args.kind == Kind::Gaussian {
            vec![0.5]
        } else {
            args.correlations
        };
        Self {
            command: Command::Synth,
            input: None,
            calendar: args.calendar,
            dt: args.dt,
            grid: tailcop::DEFAULT_RESOLUTION,
            alphas: tailcop::DEFAULT_ALPHAS.to_vec(),
            window_days: tailcop::DEFAULT_WINDOW_DAYS,
            out: args.out,
            seed: Some(args.seed),
            upper_tail_convention: Convention::Literal,
            permille: false,
            synth: Some(SynthConfig {
                kind: args.kind,
                assets: args.assets,
                days: args.days,
                correlations,
                start: args.start.to_string(),
            }),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !INTERVALS.contains(&self.dt) {
            return Err(CliError::usage(format!("--dt must be one of {INTERVALS:?}, got {}", self.dt)));
        }
        if self.grid < 2 || self.grid > usize::from(u16::MAX) {
            return Err(CliError::usage(format!("--grid must be between 2 and 65535, got {}", self.grid)));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a <= 0.5)) {
            return Err(CliError::usage(format!("--alpha must lie in (0, 0.5], got {a}")));
        }
        if self.alphas.is_empty() {
            return Err(CliError::usage("at least one --alpha is required"));
        }
        if self.window_days == 0 {
            return Err(CliError::usage("--window-days must be at least 1"));
        }
        match (&self.command, &self.synth) {
            (Command::Synth, Some(s)) => {
                if s.assets < 2 {
                    return Err(CliError::usage("--assets must be at least 2"));
                }
                if s.days == 0 {
                    return Err(CliError::usage("--days must be at least 1"));
                }
                if s.kind == Kind::Gaussian {
                    if s.correlations.is_empty() || s.correlations.len() > s.days {
                        return Err(CliError::usage("need between 1 and --days values of --corr"));
                    }
                    if let Some(c) = s.correlations.iter().find(|c| !(c.abs() <= 1.0)) {
                        return Err(CliError::usage(format!("--corr must lie in [-1, 1], got {c}")));
                    }
                } else if !s.correlations.is_empty() {
                    return Err(CliError::usage("--corr only applies to --kind gaussian"));
                }
                s.start
                    .parse::<NaiveDate>()
                    .map_err(|e| CliError::usage(format!("bad start date {:?}: {e}", s.start)))?;
            }
            (Command::Synth, None) => return Err(CliError::usage("synth settings missing")),
            (_, _) => {
                if self.input.is_none() {
                    return Err(CliError::usage("--input is required"));
                }
            }
        }
        Ok(())
    }
}

/// A parsed command line: what to run and on how many threads.
#[derive(Debug)]
pub struct Invocation {
    pub config: RunConfig,
    pub threads: Option<usize>,
}

impl Cli {
    pub fn into_invocation(self) -> Result<Invocation, CliError> {
        let config = match self.command {
            CliCommand::Copula(a) => RunConfig::analysis(Command::Copula, a),
            CliCommand::Diff(a) => RunConfig::analysis(Command::Diff, a),
            CliCommand::Taildep(a) => RunConfig::analysis(Command::Taildep, a),
            CliCommand::Dynamics(a) => RunConfig::analysis(Command::Dynamics, a),
            CliCommand::Synth(a) => RunConfig::synth(a),
            CliCommand::Replay(r) => {
                let text = fs::read_to_string(&r.manifest)
                    .map_err(|e| CliError::input(format!("{}: {e}", r.manifest.display())))?;
                let manifest: Manifest = serde_json::from_str(&text)
                    .map_err(|e| CliError::input(format!("{}: {e}", r.manifest.display())))?;
                let mut config = manifest.config;
                if let Some(out) = r.out {
                    config.out = out;
                }
                config
            }
        };
        Ok(Invocation {
            config,
            threads: self.threads,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Input,
    Numerical,
    Io,
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Usage, message)
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Input, message)
    }

    /// 2 usage, 3 input, 4 numerical, 5 I/O.
    pub fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Usage => 2,
            ErrorKind::Input => 3,
            ErrorKind::Numerical => 4,
            ErrorKind::Io => 5,
        }
    }
}

impl From<tailcop::Error> for CliError {
    fn from(e: tailcop::Error) -> Self {
        use tailcop::Error as E;
        let kind = match e {
            E::Io(_) => ErrorKind::Io,
            E::Parse { .. }
            | E::Calendar { .. }
            | E::Csv(_)
            | E::InvalidPanel(_)
            | E::NoReturns
            | E::InvalidInterval { .. }
            | E::WindowTooLong { .. }
            | E::TooFewAssets { .. }
            | E::TooFewObservations { .. }
            | E::EmptySample => ErrorKind::Input,
            E::InvalidSpec(_) | E::InfeasibleEquicorrelation { .. } => ErrorKind::Usage,
            _ => ErrorKind::Numerical,
        };
        Self::new(kind, e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

/// What a successful run produced, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Output files, manifest last.
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Tracks files written so far so a failed run can remove them.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    digests: Vec<FileDigest>,
}

impl Outputs {
    fn write(
        &mut self,
        name: &str,
        render: impl FnOnce(&mut Vec<u8>) -> tailcop::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        render(&mut buf)?;
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, &buf).map_err(|e| io_error(&path, e))?;
        self.digests.push(FileDigest {
            path: PathBuf::from(name),
            sha256: sha256_hex(&buf),
        });
        Ok(())
    }

    fn discard(&self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new(ErrorKind::Io, format!("{}: {e}", path.display()))
}

fn read_input(path: &Path, inputs: &mut Vec<FileDigest>) -> Result<Vec<u8>, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    inputs.push(FileDigest {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    });
    Ok(bytes)
}

fn load_calendar(config: &RunConfig, inputs: &mut Vec<FileDigest>) -> Result<TradingCalendar, CliError> {
    match &config.calendar {
        None => Ok(TradingCalendar::default()),
        Some(path) => {
            let bytes = read_input(path, inputs)?;
            let text = String::from_utf8(bytes)
                .map_err(|_| CliError::input(format!("{}: not UTF-8", path.display())))?;
            TradingCalendar::parse(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
        }
    }
}

fn load_returns(
    config: &RunConfig,
    calendar: &TradingCalendar,
    inputs: &mut Vec<FileDigest>,
    warnings: &mut Vec<String>,
) -> Result<ReturnMatrix64, CliError> {
    let path = config.input.as_deref().expect("validated");
    let bytes = read_input(path, inputs)?;
    let (panel, report) = load_prices::<f64, _>(bytes.as_slice(), calendar)
        .map_err(|e| CliError::from(e).context(path))?;
    if report.rows_excluded > 0 {
        warnings.push(format!(
            "{} of {} rows fall outside trading sessions and were ignored",
            report.rows_excluded, report.rows_read
        ));
    }
    let returns = compute_returns(&panel, config.dt)?;
    if returns.len() < config.grid {
        warnings.push(format!(
            "only {} returns for a {}x{} grid; most cells will be empty",
            returns.len(),
            config.grid,
            config.grid
        ));
    }
    Ok(returns)
}

impl CliError {
    fn context(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

/// Runs `config` on the current rayon pool.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    fs::create_dir_all(&config.out).map_err(|e| io_error(&config.out, e))?;
    let mut outputs = Outputs {
        dir: config.out.clone(),
        written: Vec::new(),
        digests: Vec::new(),
    };
    let mut inputs = Vec::new();
    let mut warnings = Vec::new();
    let result = execute(config, &mut outputs, &mut inputs, &mut warnings).and_then(|()| {
        let manifest = Manifest {
            tool: "tailcop".into(),
            version: tailcop::VERSION.into(),
            config: config.clone(),
            inputs,
            outputs: outputs.digests.clone(),
        };
        let path = config.out.join(MANIFEST);
        outputs.written.push(path.clone());
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_error(&path, e))
    });
    match result {
        Ok(()) => Ok(RunOutcome {
            files: outputs.written,
            warnings,
        }),
        Err(e) => {
            outputs.discard();
            Err(e)
        }
    }
}

/// Runs `config` on a dedicated pool of `threads` workers (all cores when `None`).
pub fn run_with_threads(config: &RunConfig, threads: Option<usize>) -> Result<RunOutcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run(config))
}

fn execute(
    config: &RunConfig,
    outputs: &mut Outputs,
    inputs: &mut Vec<FileDigest>,
    warnings: &mut Vec<String>,
) -> Result<(), CliError> {
    let calendar = load_calendar(config, inputs)?;
    if config.command == Command::Synth {
        return synthesize(config, &calendar, outputs);
    }
    let returns = load_returns(config, &calendar, inputs, warnings)?;
    let m = config.grid;
    let convention = config.upper_tail_convention.into();
    match config.command {
        Command::Copula => {
            let grid = average_pairwise_density(&returns, m)?;
            outputs.write("copula_grid.csv", |w| write_grid_csv(&grid, w, config.permille))
        }
        Command::Diff => {
            let grid = average_pairwise_density(&returns, m)?;
            let corr = pearson_matrix(&returns)?;
            let diff = difference_map(&grid, &corr, DifferenceOptions::default())?;
            outputs.write("difference_map.csv", |w| write_difference_csv(&diff, w))
        }
        Command::Taildep => {
            let grid = average_pairwise_density(&returns, m)?;
            let curve = TailCurve::from_grid(&grid, &config.alphas, convention)?;
            let gauss = average_gaussian_tails(&pearson_matrix(&returns)?, &config.alphas)?;
            outputs.write("tail_curve.csv", |w| write_tail_curve_csv(&curve, &gauss, w))
        }
        Command::Dynamics => {
            let reports = dynamics(&returns, config.window_days, m, &config.alphas, convention)?;
            for (k, r) in reports.iter().enumerate() {
                outputs.write(&format!("window_{k:03}.csv"), |w| {
                    write_grid_csv(&r.grid, w, config.permille)
                })?;
            }
            outputs.write("relation.csv", |w| write_relation_csv(&reports, w))
        }
        Command::Synth => unreachable!("handled above"),
    }
}

fn synthesize(config: &RunConfig, calendar: &TradingCalendar, outputs: &mut Outputs) -> Result<(), CliError> {
    let s = config.synth.as_ref().expect("validated");
    let timeline = Timeline {
        calendar: calendar.clone(),
        start: s.start.parse().expect("validated"),
        interval_minutes: config.dt,
    };
    let per_day = timeline.per_day()?;
    let kinds: Vec<SynthKind<f64>> = match s.kind {
        Kind::Gaussian => s.correlations.iter().map(|&c| SynthKind::Gaussian(c)).collect(),
        Kind::Independent => vec![SynthKind::Independent],
        Kind::Comonotone => vec![SynthKind::Comonotone],
        Kind::Countermonotone => vec![SynthKind::Countermonotone],
    };
    // Equal split of the days; the last regime takes the remainder.
    let base = s.days / kinds.len();
    let regimes: Vec<Regime<f64>> = kinds
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let days = if k + 1 == kinds.len() { s.days - base * k } else { base };
            Regime {
                kind,
                length: days * per_day,
            }
        })
        .collect();
    let matrix = sample_regimes(&regimes, s.assets, config.seed.unwrap_or(0), &timeline)?;
    let panel = price_panel(&matrix, calendar, 100.0, 1e-3)?;
    outputs.write("prices.csv", |w| tailcop::ingest::write_prices(&panel, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Invocation, String> {
        Cli::try_parse_from(args)
            .map_err(|e| e.to_string())
            .and_then(|c| c.into_invocation().map_err(|e| e.to_string()))
    }

    #[test]
    fn defaults() {
        let inv = parse(&["tailcop", "copula", "--input", "p.csv", "--out", "o"]).unwrap();
        let c = inv.config;
        assert_eq!(c.dt, 60);
        assert_eq!(c.grid, 50);
        assert_eq!(c.alphas, vec![0.02, 0.04, 0.1, 0.25]);
        assert_eq!(c.window_days, 10);
        assert_eq!(c.upper_tail_convention, Convention::Literal);
        assert!(c.validate().is_ok());
        assert_eq!(inv.threads, None);
    }

    #[test]
    fn validation() {
        let config = |extra: &[&str]| {
            let mut args = vec!["tailcop", "taildep", "--input", "p.csv", "--out", "o"];
            args.extend_from_slice(extra);
            parse(&args).unwrap().config.validate().map_err(|e| e.kind)
        };
        assert_eq!(config(&["--dt", "45"]), Err(ErrorKind::Usage));
        assert_eq!(config(&["--grid", "1"]), Err(ErrorKind::Usage));
        assert_eq!(config(&["--alpha", "0.6"]), Err(ErrorKind::Usage));
        assert_eq!(config(&["--window-days", "0"]), Err(ErrorKind::Usage));
        assert!(config(&["--dt", "240", "--alpha", "0.5", "--alpha", "0.1"]).is_ok());
    }

    #[test]
    fn synth_flags() {
        let inv = parse(&["tailcop", "synth", "--out", "o", "--corr", "-0.05", "--corr", "0.7", "--seed", "9"]).unwrap();
        let s = inv.config.synth.clone().unwrap();
        assert_eq!(s.correlations, vec![-0.05, 0.7]);
        assert_eq!(inv.config.seed, Some(9));
        assert!(inv.config.validate().is_ok());
        let co = parse(&["tailcop", "synth", "--out", "o", "--kind", "comonotone", "--corr", "0.2"]).unwrap();
        assert!(co.config.validate().is_err());
    }

    #[test]
    fn unknown_flag_is_rejected() {
        assert!(parse(&["tailcop", "copula", "--input", "p", "--out", "o", "--bogus"]).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = parse(&["tailcop", "dynamics", "--input", "p.csv", "--out", "o", "--permille"]).unwrap().config;
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }
}
