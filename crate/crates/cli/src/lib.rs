//! Command-line front end for weak-value amplification scenarios.

pub mod commands;
pub mod config;
pub mod format;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands::{cmd_dump, cmd_mach_zehnder, cmd_optimize, cmd_shift, cmd_sweep, CliError, CliResult};
use crate::config::{parse_real, ConfigError, RawConfig, ScenarioConfig, Source};

#[derive(Debug, Parser)]
#[command(name = "wva", version, about = "Weak-value amplification scenarios and CSV data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shift report for one scenario, with analytic predictions.
    Shift(Overrides),
    /// Momentum and position samples as `space,coordinate,re,im`.
    Dump(Overrides),
    /// One shift row per value of the chosen axis.
    Sweep(Overrides),
    /// Projected gradient ascent of the position shift.
    Optimize(Overrides),
    /// Weak values of the Mach-Zehnder path projector for angles chi, phi.
    MachZehnder(Overrides),
}

/// Every flag mirrors a config-file key and replaces it.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Scenario file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub aw_re: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub aw_im: Option<String>,
    /// Radians.
    #[arg(long, allow_hyphen_values = true)]
    pub chi: Option<String>,
    /// Radians.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    /// Comma-separated complex amplitudes, e.g. `1, 0.5-0.2i`.
    #[arg(long, allow_hyphen_values = true)]
    pub pre: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub post: Option<String>,
    /// Rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true)]
    pub obs: Option<String>,
    /// gaussian, optimal, smoothed or file.
    #[arg(long)]
    pub probe: Option<String>,
    #[arg(long)]
    pub w: Option<String>,
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub probe_file: Option<String>,
    #[arg(long)]
    pub n_points: Option<String>,
    #[arg(long)]
    pub support: Option<String>,
    #[arg(long)]
    pub n_range: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub format: Option<String>,
    /// postselection_angle, smoothing_s, coupling_g or grid_n.
    #[arg(long)]
    pub axis: Option<String>,
    /// Comma-separated axis values.
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<String>,
    #[arg(long)]
    pub count: Option<String>,
    #[arg(long)]
    pub max_iters: Option<String>,
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// gaussian or random.
    #[arg(long)]
    pub init: Option<String>,
    /// Where `optimize` writes the gauge-fixed final probe.
    #[arg(long)]
    pub probe_output: Option<String>,
}

impl Overrides {
    pub fn to_raw(&self) -> CliResult<RawConfig> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                RawConfig::parse(&text)?
            }
            None => RawConfig::default(),
        };
        let flags = [
            ("g", &self.g),
            ("aw_re", &self.aw_re),
            ("aw_im", &self.aw_im),
            ("chi", &self.chi),
            ("phi", &self.phi),
            ("pre", &self.pre),
            ("post", &self.post),
            ("obs", &self.obs),
            ("probe", &self.probe),
            ("w", &self.w),
            ("s", &self.s),
            ("probe_file", &self.probe_file),
            ("n_points", &self.n_points),
            ("support", &self.support),
            ("n_range", &self.n_range),
            ("output", &self.output),
            ("format", &self.format),
            ("axis", &self.axis),
            ("values", &self.values),
            ("from", &self.from),
            ("to", &self.to),
            ("count", &self.count),
            ("max_iters", &self.max_iters),
            ("step", &self.step),
            ("tol", &self.tol),
            ("seed", &self.seed),
            ("init", &self.init),
            ("probe_output", &self.probe_output),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                raw.set_flag(key, v.clone());
            }
        }
        Ok(raw)
    }
}

fn angles(raw: &RawConfig) -> CliResult<(f64, f64)> {
    let value = |key: &str| -> CliResult<f64> {
        let (text, source) = raw.lookup(key).ok_or_else(|| {
            CliError::Config(ConfigError {
                source: Source::Default,
                field: key.into(),
                message: "missing required value".into(),
            })
        })?;
        parse_real(text).map_err(|message| {
            CliError::Config(ConfigError {
                source,
                field: key.into(),
                message,
            })
        })
    };
    Ok((value("chi")?, value("phi")?))
}

fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(CliError::from),
    }
}

/// Runs a parsed command; returns the process exit code.
pub fn execute(command: &Command, stdout: &mut dyn Write) -> CliResult<i32> {
    match command {
        Command::MachZehnder(o) => {
            let (chi, phi) = angles(&o.to_raw()?)?;
            stdout.write_all(cmd_mach_zehnder(chi, phi)?.as_bytes())?;
            Ok(0)
        }
        Command::Shift(o) => {
            let c = ScenarioConfig::from_raw(&o.to_raw()?)?;
            let text = cmd_shift(&c)?;
            stdout.write_all(text.as_bytes())?;
            if let Some(p) = &c.output {
                emit(&text, Some(p), stdout)?;
            }
            Ok(0)
        }
        Command::Dump(o) => {
            let c = ScenarioConfig::from_raw(&o.to_raw()?)?;
            emit(&cmd_dump(&c)?, c.output.as_deref(), stdout)?;
            Ok(0)
        }
        Command::Sweep(o) => {
            let c = ScenarioConfig::from_raw(&o.to_raw()?)?;
            let (text, failures) = cmd_sweep(&c)?;
            emit(&text, c.output.as_deref(), stdout)?;
            Ok(if failures == 0 { 0 } else { 1 })
        }
        Command::Optimize(o) => {
            let c = ScenarioConfig::from_raw(&o.to_raw()?)?;
            let out = cmd_optimize(&c)?;
            match &c.output {
                Some(p) => emit(&out.trace_csv, Some(p), stdout)?,
                None => {
                    stdout.write_all(out.trace_csv.as_bytes())?;
                    stdout.write_all(b"\n")?;
                }
            }
            if let Some(p) = &c.probe_output {
                emit(&out.probe_csv, Some(p), stdout)?;
            }
            stdout.write_all(out.comparison_csv.as_bytes())?;
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name) and runs the command. Errors
/// go to `stderr` as `error: <Name>: <detail>`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}: {e}", e.name());
            1
        }
    }
}
