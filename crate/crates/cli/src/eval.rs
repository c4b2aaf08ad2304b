//! Evaluation of a single parameter cell into a report row.

use qzzb_core::noisechan::{self, LossMode, NoisyPair};
use qzzb_core::probes::{self, OptimalProbeSpec};
use qzzb_core::zzb::{self, BoundReport, PriorWindow};
use qzzb_core::{EnergySpectrum, GeneratorStats, SpeedLimitConstants};
use serde::Serialize;

use crate::config::{Cell, Noise, Probe, Settings, Strategy};
use crate::error::{usage, CliError, CliResult};
use crate::table::Value;

/// One output row: the cell, the resolved model and the bound report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub probe: Probe,
    pub strategy: Strategy,
    pub noise: Noise,
    pub d: usize,
    pub n: f64,
    pub w: Option<f64>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub r: Option<f64>,
    pub lambda: f64,
    /// Squeezing actually used, from `r` or from the photon budget.
    pub r_used: Option<f64>,
    /// Photons per NOON state.
    pub n_per_mode: Option<u32>,
    pub advantage_ratio: f64,
    pub ceiling: f64,
    pub report: BoundReport,
}

impl Row {
    pub const COLUMNS: [&'static str; 26] = [
        "probe",
        "strategy",
        "noise",
        "d",
        "n",
        "w",
        "eta",
        "beta",
        "r",
        "lambda",
        "r_used",
        "n_per_mode",
        "total_ml",
        "total_mt",
        "total_combined",
        "total_integral",
        "ceiling",
        "advantage_ratio",
        "per_mode_ml",
        "per_mode_mt",
        "per_mode_integral",
        "ml_valid",
        "mt_valid",
        "widths",
        "valley_fill",
        "warnings",
    ];

    pub fn values(&self) -> Vec<Value> {
        let rep = &self.report;
        vec![
            Value::from(self.probe.label()),
            Value::from(self.strategy.label()),
            Value::from(self.noise.label()),
            Value::Int(self.d as i64),
            Value::Num(self.n),
            self.w.into(),
            self.eta.into(),
            self.beta.into(),
            self.r.into(),
            Value::Num(self.lambda),
            self.r_used.into(),
            self.n_per_mode.map(|x| x as i64).into(),
            Value::Num(rep.total_ml),
            Value::Num(rep.total_mt),
            Value::Num(rep.total_combined),
            rep.total_integral.into(),
            Value::Num(self.ceiling),
            Value::Num(self.advantage_ratio),
            Value::Nums(rep.per_mode_ml.clone()),
            Value::Nums(rep.per_mode_mt.clone()),
            rep.per_mode_integral.clone().map_or(Value::Empty, Value::Nums),
            Value::Bools(rep.ml_valid.clone()),
            Value::Bools(rep.mt_valid.clone()),
            Value::Nums(rep.widths.clone()),
            rep.valley_fill.map_or(Value::Empty, Value::Bool),
            Value::Text(rep.warnings.join(" | ")),
        ]
    }
}

/// Per-mode inputs of a probe: stats, optional spectrum, photon cap.
struct ModeModel {
    stats: GeneratorStats,
    spectrum: Option<EnergySpectrum>,
    max_photons: Option<u32>,
    r_used: Option<f64>,
    n_per_mode: Option<u32>,
    n_total: f64,
    warnings: Vec<String>,
}

fn photon_count(n: f64) -> CliResult<u32> {
    if n < 1.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
        return Err(usage(format!("photon number must be a positive integer, got {n}")));
    }
    Ok(n as u32)
}

fn mode_model(settings: &Settings, cell: &Cell) -> CliResult<ModeModel> {
    let d = cell.d;
    match (settings.probe, settings.strategy) {
        (Probe::Optimal, Strategy::Se) => {
            let n = photon_count(cell.n)?;
            let spec = OptimalProbeSpec::new(d, n)?;
            let spectrum = spec.state()?.mode_number_spectrum(1)?;
            Ok(ModeModel {
                stats: spec.mode_stats(),
                spectrum: Some(spectrum),
                max_photons: Some(n),
                r_used: None,
                n_per_mode: None,
                n_total: cell.n,
                warnings: Vec::new(),
            })
        }
        (Probe::Noon, Strategy::Ie) => {
            let n = photon_count(cell.n)?;
            let per = n / d as u32;
            if per < 1 {
                return Err(usage(format!("N = {n} leaves no photons for {d} NOON states")));
            }
            let mut warnings = Vec::new();
            if n % d as u32 != 0 {
                warnings.push(format!(
                    "N = {n} not divisible by d = {d}: each NOON state uses {per} photons"
                ));
            }
            Ok(ModeModel {
                stats: probes::noon_mode_stats(per as f64),
                spectrum: Some(probes::noon_state(per)?.mode_number_spectrum(1)?),
                max_photons: Some(per),
                r_used: None,
                n_per_mode: Some(per),
                n_total: cell.n,
                warnings,
            })
        }
        (Probe::Squeezed, strategy) => {
            let (dim, copies) = match strategy {
                Strategy::Se => (d + 1, 1.0),
                Strategy::Ie => (2, d as f64),
            };
            let r = match cell.r {
                Some(r) => r,
                None => probes::match_photon_budget(dim, cell.n / copies)?,
            };
            let stats = probes::squeezed_mode_stats(dim, r)?[1];
            Ok(ModeModel {
                stats: stats.generator_stats(),
                spectrum: None,
                max_photons: None,
                r_used: Some(r),
                n_per_mode: None,
                n_total: if cell.r.is_some() { copies * dim as f64 * stats.mean } else { cell.n },
                warnings: Vec::new(),
            })
        }
        (p, s) => Err(usage(format!("probe {} does not support strategy {}", p.label(), s.label()))),
    }
}

fn prior_for(cell: &Cell, default: impl FnOnce() -> CliResult<PriorWindow>) -> CliResult<PriorWindow> {
    match cell.w {
        Some(w) => Ok(PriorWindow::uniform(cell.d, w)?),
        None => default(),
    }
}

fn noisy_report(
    pair: NoisyPair,
    cell: &Cell,
    k: &SpeedLimitConstants,
) -> CliResult<(BoundReport, PriorWindow)> {
    let pairs = vec![pair; cell.d];
    let prior = prior_for(cell, || Ok(noisechan::noisy_default_prior(&pairs, k)?))?;
    Ok((noisechan::noisy_bound(&pairs, &prior, k)?, prior))
}

/// Evaluates one cell.
pub fn evaluate(settings: &Settings, cell: &Cell, k: &SpeedLimitConstants) -> CliResult<Row> {
    let model = mode_model(settings, cell)?;
    let d = cell.d;
    let (eta, beta) = match settings.noise {
        Noise::None => (None, None),
        Noise::Loss => (cell.eta, None),
        Noise::Diffusion => (None, cell.beta),
    };

    let (mut report, prior) = match settings.noise {
        Noise::None => {
            let stats = vec![model.stats; d];
            let prior = prior_for(cell, || Ok(probes::resolve_prior(&stats, None, k)?))?;
            let report = match &model.spectrum {
                Some(s) => {
                    let spectra = vec![s.clone(); d];
                    zzb::qzzb_vector_bound(&spectra, &prior, &settings.quadrature(), k)?
                }
                None => zzb::combined_bound(&stats, &prior, k)?,
            };
            (report, prior)
        }
        Noise::Loss => {
            let eta = eta.ok_or_else(|| usage("loss model needs eta"))?;
            let n = model
                .max_photons
                .ok_or_else(|| usage("loss model needs a bounded photon number"))?;
            let mode = LossMode { mean: model.stats.mean, variance: model.stats.variance, n };
            let pair = noisechan::photon_loss_pairs(&[mode], &[eta])?[0];
            noisy_report(pair, cell, k)?
        }
        Noise::Diffusion => {
            let beta = beta.ok_or_else(|| usage("diffusion model needs beta"))?;
            let (pairs, flags) =
                noisechan::phase_diffusion_pairs(&[(model.stats.mean, model.stats.variance)], &[beta])?;
            let (mut report, prior) = noisy_report(pairs[0], cell, k)?;
            noisechan::add_regime_warnings(&mut report, &vec![flags[0]; d]);
            (report, prior)
        }
    };
    report.warnings.extend(model.warnings);

    let totals = [report.total_ml, report.total_mt];
    if totals.iter().any(|x| x.is_nan()) {
        return Err(CliError::Numeric(format!("non-numeric bound for cell {cell:?}")));
    }

    Ok(Row {
        probe: settings.probe,
        strategy: settings.strategy,
        noise: settings.noise,
        d,
        n: model.n_total,
        w: cell.w,
        eta,
        beta,
        r: cell.r,
        lambda: k.lambda,
        r_used: model.r_used,
        n_per_mode: model.n_per_mode,
        advantage_ratio: probes::advantage_ratio(d, k)?.ratio,
        ceiling: prior.ceiling(),
        report,
    })
}
