//! Run configuration: value ranges, model selection and numeric settings,
//! merged from an optional JSON file and command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use qzzb_core::zzb::{QuadratureConfig, QuadratureRule};
use qzzb_core::{SpeedLimitConstants, DEFAULT_LAMBDA};
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    Optimal,
    Noon,
    Squeezed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Se,
    Ie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    None,
    Loss,
    Diffusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

macro_rules! label {
    ($t:ty { $($v:ident => $s:literal),* }) => {
        impl $t {
            pub fn label(self) -> &'static str {
                match self { $(Self::$v => $s),* }
            }
        }
    };
}
label!(Probe { Optimal => "optimal", Noon => "noon", Squeezed => "squeezed" });
label!(Strategy { Se => "se", Ie => "ie" });
label!(Noise { None => "none", Loss => "loss", Diffusion => "diffusion" });

/// A value or range as written by the user.
///
/// Text forms: `x`, `a,b,c`, `lo:hi` (unit steps from `lo` towards `hi`),
/// `lo:hi:count` (`count ≥ 2` evenly spaced points, both ends included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

impl RangeSpec {
    pub fn values(&self, name: &str) -> CliResult<Vec<f64>> {
        let v = match self {
            RangeSpec::Number(x) => vec![*x],
            RangeSpec::List(xs) => xs.clone(),
            RangeSpec::Text(s) => parse_range(s).map_err(|m| usage(format!("--{name} {s:?}: {m}")))?,
        };
        if v.is_empty() {
            return Err(usage(format!("--{name}: empty range")));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(usage(format!("--{name}: non-finite value {x}")));
        }
        Ok(v)
    }
}

fn num(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("cannot parse {s:?} as a number"))
}

pub fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    if s.contains(',') {
        return s.split(',').map(num).collect();
    }
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [lo, hi] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let steps = (hi - lo).abs().floor();
            if steps > 1e7 {
                return Err("too many points".into());
            }
            let dir = if hi >= lo { 1.0 } else { -1.0 };
            Ok((0..=steps as u64).map(|i| lo + dir * i as f64).collect())
        }
        [lo, hi, count] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| format!("cannot parse {count:?} as a point count"))?;
            if count < 2 {
                return Err("resolution must be at least 2".into());
            }
            Ok(linspace(lo, hi, count))
        }
        _ => Err("expected x, a,b,c, lo:hi or lo:hi:count".into()),
    }
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let last = (count - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / last })
        .collect()
}

/// Optional settings as they appear in a JSON config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub probe: Option<Probe>,
    pub strategy: Option<Strategy>,
    pub noise: Option<Noise>,
    pub d: Option<RangeSpec>,
    pub n: Option<RangeSpec>,
    pub w: Option<RangeSpec>,
    pub eta: Option<RangeSpec>,
    pub beta: Option<RangeSpec>,
    pub r: Option<RangeSpec>,
    pub lambda: Option<f64>,
    pub quad_points: Option<usize>,
    pub valley_fill: Option<bool>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: FileConfig) -> FileConfig {
        FileConfig {
            probe: over.probe.or(self.probe),
            strategy: over.strategy.or(self.strategy),
            noise: over.noise.or(self.noise),
            d: over.d.or(self.d),
            n: over.n.or(self.n),
            w: over.w.or(self.w),
            eta: over.eta.or(self.eta),
            beta: over.beta.or(self.beta),
            r: over.r.or(self.r),
            lambda: over.lambda.or(self.lambda),
            quad_points: over.quad_points.or(self.quad_points),
            valley_fill: over.valley_fill.or(self.valley_fill),
            format: over.format.or(self.format),
            output: over.output.or(self.output),
        }
    }
}

/// Model and numeric settings shared by every cell of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Settings {
    pub probe: Probe,
    pub strategy: Strategy,
    pub noise: Noise,
    pub lambda: f64,
    pub quad_points: usize,
    pub valley_fill: bool,
}

impl Settings {
    pub fn constants(&self) -> CliResult<SpeedLimitConstants> {
        Ok(SpeedLimitConstants::new(self.lambda)?)
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            grid_points: self.quad_points,
            rule: QuadratureRule::Simpson,
            valley_fill: self.valley_fill,
            refine: false,
        }
    }
}

/// Parameter values of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub d: usize,
    pub n: f64,
    pub w: Option<f64>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub r: Option<f64>,
}

/// Fully resolved configuration, echoed into every output's metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub settings: Settings,
    pub d: Vec<f64>,
    pub n: Vec<f64>,
    pub w: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub r: Option<Vec<f64>>,
    pub format: Format,
    pub output: Option<PathBuf>,
}

pub const DEFAULT_D: f64 = 2.0;
pub const DEFAULT_N: f64 = 10.0;

fn opt_values(spec: &Option<RangeSpec>, name: &str) -> CliResult<Option<Vec<f64>>> {
    spec.as_ref().map(|s| s.values(name)).transpose()
}

impl RunConfig {
    pub fn resolve(file: FileConfig) -> CliResult<Self> {
        let probe = file.probe.unwrap_or(Probe::Optimal);
        let strategy = match (probe, file.strategy) {
            (Probe::Optimal, None | Some(Strategy::Se)) => Strategy::Se,
            (Probe::Noon, None | Some(Strategy::Ie)) => Strategy::Ie,
            (Probe::Squeezed, s) => s.unwrap_or(Strategy::Se),
            (p, Some(s)) => {
                return Err(usage(format!(
                    "probe {} only supports its own strategy, not {}",
                    p.label(),
                    s.label()
                )))
            }
        };
        let noise = file.noise.unwrap_or(Noise::None);
        let lambda = file.lambda.unwrap_or(DEFAULT_LAMBDA);
        SpeedLimitConstants::new(lambda).map_err(|e| usage(e.to_string()))?;
        let defaults = QuadratureConfig::default();
        let settings = Settings {
            probe,
            strategy,
            noise,
            lambda,
            quad_points: file.quad_points.unwrap_or(defaults.grid_points),
            valley_fill: file.valley_fill.unwrap_or(defaults.valley_fill),
        };
        settings.quadrature().validate().map_err(|e| usage(e.to_string()))?;

        let cfg = RunConfig {
            settings,
            d: opt_values(&file.d, "d")?.unwrap_or(vec![DEFAULT_D]),
            n: opt_values(&file.n, "n")?.unwrap_or(vec![DEFAULT_N]),
            w: opt_values(&file.w, "w")?,
            eta: opt_values(&file.eta, "eta")?,
            beta: opt_values(&file.beta, "beta")?,
            r: opt_values(&file.r, "r")?,
            format: file.format.unwrap_or_default(),
            output: file.output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        let s = &self.settings;
        for &d in &self.d {
            if d < 1.0 || d.fract() != 0.0 {
                return Err(usage(format!("--d must be a positive integer, got {d}")));
            }
        }
        for &n in &self.n {
            if !(n > 0.0) {
                return Err(usage(format!("--n must be positive, got {n}")));
            }
            if s.probe != Probe::Squeezed && n.fract() != 0.0 {
                return Err(usage(format!("--n must be an integer photon number for {} probes, got {n}", s.probe.label())));
            }
        }
        if let Some(w) = &self.w {
            if let Some(x) = w.iter().find(|&&x| !(x > 0.0)) {
                return Err(usage(format!("--w must be positive, got {x}")));
            }
        }
        if let Some(eta) = &self.eta {
            if let Some(x) = eta.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
                return Err(usage(format!("--eta must lie in [0, 1], got {x}")));
            }
        }
        if let Some(beta) = &self.beta {
            if let Some(x) = beta.iter().find(|&&x| !(x > 0.0)) {
                return Err(usage(format!("--beta must be positive, got {x}")));
            }
        }
        if let Some(r) = &self.r {
            if s.probe != Probe::Squeezed {
                return Err(usage("--r applies to squeezed probes only"));
            }
            if let Some(x) = r.iter().find(|&&x| !(x >= 0.0)) {
                return Err(usage(format!("--r must be non-negative, got {x}")));
            }
        }
        match s.noise {
            Noise::Loss if self.eta.is_none() => return Err(usage("--noise loss needs --eta")),
            Noise::Diffusion if self.beta.is_none() => {
                return Err(usage("--noise diffusion needs --beta"))
            }
            Noise::Loss if s.probe == Probe::Squeezed => {
                return Err(usage(
                    "the loss model needs a bounded photon number; use optimal or noon probes",
                ))
            }
            _ => {}
        }
        Ok(())
    }

    /// Range sizes in canonical order `d, n, w, eta, beta, r`.
    pub fn shape(&self) -> [usize; 6] {
        let len = |v: &Option<Vec<f64>>| v.as_ref().map_or(1, Vec::len);
        [
            self.d.len(),
            self.n.len(),
            len(&self.w),
            len(&self.eta),
            len(&self.beta),
            len(&self.r),
        ]
    }

    /// Number of cells of the Cartesian product, saturating.
    pub fn cell_count(&self) -> u128 {
        self.shape().iter().map(|&x| x as u128).product()
    }

    /// Cell at `index` in row-major order with `d` slowest.
    pub fn cell(&self, mut index: usize) -> Cell {
        let shape = self.shape();
        let mut idx = [0usize; 6];
        for k in (0..6).rev() {
            idx[k] = index % shape[k];
            index /= shape[k];
        }
        let pick = |v: &Option<Vec<f64>>, i: usize| v.as_ref().map(|v| v[i]);
        Cell {
            d: self.d[idx[0]] as usize,
            n: self.n[idx[1]],
            w: pick(&self.w, idx[2]),
            eta: pick(&self.eta, idx[3]),
            beta: pick(&self.beta, idx[4]),
            r: pick(&self.r, idx[5]),
        }
    }

    /// The single cell of a run whose ranges are all singletons.
    pub fn single_cell(&self) -> CliResult<Cell> {
        if self.cell_count() != 1 {
            return Err(usage("bound takes single values; use sweep for ranges"));
        }
        Ok(self.cell(0))
    }
}
