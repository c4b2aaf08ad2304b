//! Argument parsing and command dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qzzb_core::SpeedLimitConstants;
use serde_json::json;

use crate::config::{FileConfig, Format, Noise, Probe, RangeSpec, RunConfig, Settings, Strategy};
use crate::error::{usage, CliResult};
use crate::eval;
use crate::figures::{self, Figure, FigureAxes};
use crate::selftest;
use crate::sweep;
use crate::table::Table;

#[derive(Debug, Parser)]
#[command(name = "qzzb", version, about = "Quantum Ziv-Zakai bounds for multiparameter phase estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bound report for one configuration.
    Bound {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Dataset behind one of the figures.
    Figure {
        #[arg(value_enum)]
        name: Figure,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Cartesian-product sweep over d, n, w, eta, beta and r.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Cross-check closed forms against independent numerics.
    Selftest {
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Model selection and parameter values. Values accept the range syntax
/// `x`, `a,b,c`, `lo:hi` or `lo:hi:count`.
#[derive(Debug, Args, Default)]
struct ModelArgs {
    #[arg(long, value_enum)]
    probe: Option<Probe>,
    #[arg(long, value_enum)]
    strategy: Option<Strategy>,
    #[arg(long, value_enum)]
    noise: Option<Noise>,
    /// Number of parameters.
    #[arg(long)]
    d: Option<String>,
    /// Total mean photon number.
    #[arg(long)]
    n: Option<String>,
    /// Prior width per parameter (default: 100 × the larger validity threshold).
    #[arg(long)]
    w: Option<String>,
    /// Transmissivity for the loss model.
    #[arg(long)]
    eta: Option<String>,
    /// Diffusion strength.
    #[arg(long)]
    beta: Option<String>,
    /// Squeezing parameter; overrides the photon budget.
    #[arg(long)]
    r: Option<String>,
}

#[derive(Debug, Args, Default)]
struct CommonArgs {
    /// JSON file with default values; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Intervals of the fixed quadrature grid.
    #[arg(long)]
    quad_points: Option<usize>,
    #[arg(long)]
    no_valley_fill: bool,
    #[arg(long, hide = true)]
    corrupt_constant: bool,
}

fn text(s: Option<String>) -> Option<RangeSpec> {
    s.map(RangeSpec::Text)
}

fn merged(model: ModelArgs, common: &CommonArgs) -> CliResult<FileConfig> {
    let base = match &common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let flags = FileConfig {
        probe: model.probe,
        strategy: model.strategy,
        noise: model.noise,
        d: text(model.d),
        n: text(model.n),
        w: text(model.w),
        eta: text(model.eta),
        beta: text(model.beta),
        r: text(model.r),
        lambda: common.lambda,
        quad_points: common.quad_points,
        valley_fill: common.no_valley_fill.then_some(false),
        format: common.format,
        output: common.output.clone(),
    };
    Ok(base.overlay(flags))
}

/// Where output goes, and the metadata echoed alongside it.
struct Sink<'a> {
    output: Option<PathBuf>,
    format: Format,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

pub fn meta_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

impl Sink<'_> {
    fn emit(&mut self, body: &[u8], meta: serde_json::Value) -> CliResult<()> {
        match &self.output {
            Some(path) => {
                std::fs::write(path, body)?;
                let mut m = serde_json::to_vec_pretty(&meta)?;
                m.push(b'\n');
                std::fs::write(meta_path(path), m)?;
            }
            None => {
                self.stdout.write_all(body)?;
                writeln!(self.stderr, "# config: {}", serde_json::to_string(&meta)?)?;
            }
        }
        Ok(())
    }

    fn table(&mut self, t: &Table, meta: serde_json::Value) -> CliResult<()> {
        let mut buf = Vec::new();
        match self.format {
            Format::Csv => t.write_csv(&mut buf)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut buf, &t.to_json())?;
                buf.push(b'\n');
            }
        }
        self.emit(&buf, meta)
    }
}

fn constants_json(k: &SpeedLimitConstants) -> serde_json::Value {
    json!({ "lambda": k.lambda, "c_ml": k.c_ml, "c_mt": k.c_mt })
}

fn meta(command: &str, config: serde_json::Value, settings: &Settings) -> CliResult<serde_json::Value> {
    Ok(json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "constants": constants_json(&settings.constants()?),
        "quadrature": settings.quadrature(),
        "default_width_factor": qzzb_core::zzb::DEFAULT_WIDTH_FACTOR,
    }))
}

fn cmd_bound(file: FileConfig, sink: &mut Sink) -> CliResult<()> {
    let cfg = RunConfig::resolve(file)?;
    let cell = cfg.single_cell()?;
    let k = cfg.settings.constants()?;
    let row = eval::evaluate(&cfg.settings, &cell, &k)?;
    let m = meta("bound", serde_json::to_value(&cfg)?, &cfg.settings)?;
    match cfg.format {
        Format::Csv => sink.table(&sweep::to_table(std::slice::from_ref(&row)), m),
        Format::Json => {
            let mut buf = serde_json::to_vec_pretty(&row)?;
            buf.push(b'\n');
            sink.emit(&buf, m)
        }
    }
}

fn cmd_sweep(file: FileConfig, sink: &mut Sink) -> CliResult<()> {
    let cfg = RunConfig::resolve(file)?;
    let rows = sweep::run(&cfg)?;
    let m = meta("sweep", serde_json::to_value(&cfg)?, &cfg.settings)?;
    sink.table(&sweep::to_table(&rows), m)
}

fn cmd_figure(name: Figure, file: FileConfig, sink: &mut Sink) -> CliResult<()> {
    let axes = FigureAxes::resolve(name, &file)?;
    // figure content is fixed by the name; only numeric settings apply
    let settings_src = FileConfig {
        lambda: file.lambda,
        quad_points: file.quad_points,
        valley_fill: file.valley_fill,
        format: file.format,
        output: file.output.clone(),
        ..FileConfig::default()
    };
    let cfg = RunConfig::resolve(settings_src)?;
    let table = figures::build(name, &axes, &cfg.settings)?;
    let m = meta(
        "figure",
        json!({ "figure": name, "axes": axes, "settings": cfg.settings }),
        &cfg.settings,
    )?;
    sink.table(&table, m)
}

fn cmd_selftest(common: &CommonArgs, out: &mut dyn Write) -> CliResult<bool> {
    let file = merged(ModelArgs::default(), common)?;
    let lambda = RunConfig::resolve(file)?.settings.lambda;
    let k = if common.corrupt_constant {
        SpeedLimitConstants::corrupted(lambda)
    } else {
        SpeedLimitConstants::new(lambda)?
    };
    let checks = selftest::run(&k);
    for c in &checks {
        writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(out, "{} of {} checks passed (λ = {lambda})", checks.len() - failed, checks.len())?;
    Ok(failed == 0)
}

/// Runs the command line `args` and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let target: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = target.write_all(rendered.as_bytes());
            return code;
        }
    };
    let result = match cli.command {
        Command::Selftest { common } => match cmd_selftest(&common, stdout) {
            Ok(true) => return 0,
            Ok(false) => return 1,
            Err(e) => Err(e),
        },
        Command::Bound { model, common } => dispatch(model, &common, stdout, stderr, cmd_bound),
        Command::Sweep { model, common } => dispatch(model, &common, stdout, stderr, cmd_sweep),
        Command::Figure { name, model, common } => {
            dispatch(model, &common, stdout, stderr, |f, s| cmd_figure(name, f, s))
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(
    model: ModelArgs,
    common: &CommonArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
    f: impl FnOnce(FileConfig, &mut Sink) -> CliResult<()>,
) -> CliResult<()> {
    if common.corrupt_constant {
        return Err(usage("--corrupt-constant only applies to selftest"));
    }
    let file = merged(model, common)?;
    let mut sink = Sink {
        output: file.output.clone(),
        format: file.format.unwrap_or_default(),
        stdout,
        stderr,
    };
    f(file, &mut sink)
}
