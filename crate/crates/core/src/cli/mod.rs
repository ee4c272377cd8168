//! Command-line front end: `pwt <command> --config run.toml [flags]`.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a numerical
//! method fails.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use crate::error::{Error, Result};
use clap::Parser;
use config::{Command, Overrides, RunConfig};
use output::ArtifactSink;
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "pwt", version, about = "Perfect wave transfer diagnostics for inhomogeneous 1+1D channels")]
pub struct Cli {
    /// Pipeline to run; defaults to `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Grid points of the model geometry.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub eps_spec: Option<f64>,
    /// Regularization length for correlators and overlaps.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Number of modes in correlator series.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Also render SVG figures.
    #[arg(long)]
    pub svg: bool,
}

/// Outcome of a successful run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
    pub config_hash: String,
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// SHA-256 of the effective configuration (output location excluded) and
/// of any input file it references.
pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.output.dir = PathBuf::new();
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&c).map_err(|e| Error::Io(e.to_string()))?);
    if let Some(i) = &cfg.invert {
        h.update(std::fs::read(&i.target).map_err(|e| Error::Input(format!("{}: {e}", i.target.display())))?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Execute a fully resolved configuration.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let command = cfg.command.ok_or_else(|| Error::Usage("no command given".into()))?;
    let hash = config_hash(cfg)?;
    let mut sink = ArtifactSink::new(&cfg.output.dir, hash.clone(), command.name())?;
    log::info!("running {} into {}", command.name(), cfg.output.dir.display());
    let summary = match command {
        Command::Spectrum => commands::spectrum(cfg, &mut sink)?,
        Command::CheckPwt => commands::check_pwt(cfg, &mut sink)?,
        Command::Correlate => commands::correlate(cfg, &mut sink)?,
        Command::Invert => commands::invert(cfg, &mut sink)?,
        Command::Wkb => commands::wkb(cfg, &mut sink)?,
        Command::Overlap => commands::overlap(cfg, &mut sink)?,
    };
    Ok(RunOutcome { summary, artifacts: sink.written().to_vec(), config_hash: hash })
}

/// Parse flags, load the config and run; returns (exit code, stdout line, stderr line).
pub fn run_args<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) { 0 } else { 1 };
            return if code == 0 { (0, e.to_string(), String::new()) } else { (1, String::new(), e.to_string()) };
        }
    };
    match resolve(&cli).and_then(|c| run(&c)) {
        Ok(o) => (0, o.summary, String::new()),
        Err(e) => (exit_code(&e), String::new(), format!("error: {e}")),
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Usage("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(c) = cli.command {
        cfg.command = Some(c);
    }
    cfg.apply(&Overrides {
        out: cli.out.clone(),
        n_max: cli.n_max,
        grid: cli.grid,
        eps_spec: cli.eps_spec,
        epsilon: cli.epsilon,
        modes: cli.modes,
        svg: cli.svg,
    });
    Ok(cfg)
}

/// Entry point of the `pwt` binary.
pub fn main() -> i32 {
    let (code, out, err) = run_args(std::env::args_os());
    // A closed pipe is not an error of the run.
    if !out.is_empty() {
        let _ = writeln!(std::io::stdout(), "{}", out.trim_end());
    }
    if !err.is_empty() {
        let _ = writeln!(std::io::stderr(), "{}", err.trim_end());
    }
    code
}
