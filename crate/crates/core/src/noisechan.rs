//! Effective-generator statistics under photon loss and phase diffusion.
//!
//! Each noisy mode is purified with a variational environment parameter
//! (`σ = δ + 1` for loss, `κ` for diffusion). The bounds use the minimum
//! effective mean (ML) and the minimum variance (MT) over that parameter.
//! A fixed-resolution grid search is authoritative; closed-form optima are
//! carried alongside as cross-checks.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_dims, Result};
use crate::fockcore::{EnergySpectrum, GeneratorStats, SpeedLimitConstants};
use crate::zzb::{self, BoundReport, PriorWindow};

/// Threshold for the `√2 β² ⟨n⟩ ≫ 1` diffusion regime warning.
pub const DIFFUSION_REGIME_MIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub points: usize,
    /// Rounds of local re-gridding around the coarse minimum.
    pub zoom_rounds: usize,
    pub zoom_points: usize,
    /// Upper end of the ML σ range for photon loss.
    pub sigma_max: f64,
}

impl Default for GridSearch {
    fn default() -> Self {
        Self {
            points: 100_001,
            zoom_rounds: 4,
            zoom_points: 1001,
            sigma_max: 4.0,
        }
    }
}

/// Minimises `f` on `points` equispaced nodes of `[lo, hi]`, then zooms into
/// the neighbouring cells. Ties go to the smallest abscissa.
pub fn grid_minimize(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    search: &GridSearch,
) -> (f64, f64) {
    let node = |a: f64, b: f64, n: usize, i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
    let scan = |a: f64, b: f64, n: usize| {
        let mut best = (0usize, a, f(a));
        for i in 1..n {
            let x = node(a, b, n, i);
            let v = f(x);
            if v < best.2 {
                best = (i, x, v);
            }
        }
        best
    };
    let mut n = search.points.max(2);
    let (mut i, mut x, mut v) = scan(lo, hi, n);
    let (mut a, mut b) = (lo, hi);
    for _ in 0..search.zoom_rounds {
        let a2 = node(a, b, n, i.saturating_sub(1));
        let b2 = node(a, b, n, (i + 1).min(n - 1));
        if !(b2 > a2) {
            break;
        }
        n = search.zoom_points.max(3);
        let (i2, x2, v2) = scan(a2, b2, n);
        if v2 < v {
            x = x2;
            v = v2;
        }
        (a, b, i) = (a2, b2, i2);
    }
    (x, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonLossChannel {
    pub eta: f64,
    pub sigma: f64,
    pub n_max: u32,
}

impl PhotonLossChannel {
    pub fn new(eta: f64, sigma: f64, n_max: u32) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self { eta, sigma, n_max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiffusionChannel {
    pub beta: f64,
    pub kappa: f64,
}

impl PhaseDiffusionChannel {
    pub fn new(beta: f64, kappa: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { beta, kappa })
    }
}

/// Effective generator moments at one variational value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyModeStats {
    pub effective_mean: f64,
    pub variance: f64,
    pub sigma_or_kappa: f64,
}

impl NoisyModeStats {
    pub fn generator_stats(&self) -> GeneratorStats {
        GeneratorStats::new(self.effective_mean, self.variance, 0.0)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("transmissivity must lie in (0, 1], got {eta}")))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("diffusion strength must be positive, got {beta}")))
    }
}

/// `ln C(n, l) + l ln(1−η) + (n−l) ln η` for `l = 0..=n`, exact at the
/// endpoints `η ∈ {0, 1}`.
fn log_binomial_weights(n: u32, eta: f64) -> Vec<f64> {
    let (ln_loss, ln_keep) = ((1.0 - eta).ln(), eta.ln());
    let mut ln_choose = 0.0;
    (0..=n)
        .map(|l| {
            if l > 0 {
                ln_choose += ((n - l + 1) as f64).ln() - (l as f64).ln();
            }
            let a = if l == 0 { 0.0 } else { l as f64 * ln_loss };
            let b = if l == n { 0.0 } else { (n - l) as f64 * ln_keep };
            ln_choose + a + b
        })
        .collect()
}

/// Purified spectrum of one mode of the optimal probe under loss:
/// `α² C(N,l)(1−η)^l η^{N−l}` at `E_l = N − σl`, plus `(1 − α², 0)`.
pub fn photon_loss_spectrum(alpha_sq: f64, n: u32, eta: f64, sigma: f64) -> Result<EnergySpectrum> {
    if !(alpha_sq > 0.0 && alpha_sq <= 1.0) {
        return Err(domain(format!("α² must lie in (0, 1], got {alpha_sq}")));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain(format!("transmissivity must lie in [0, 1], got {eta}")));
    }
    let nf = n as f64;
    let mut entries: Vec<(f64, f64)> = log_binomial_weights(n, eta)
        .into_iter()
        .enumerate()
        .map(|(l, w)| (alpha_sq * w.exp(), nf - sigma * l as f64))
        .collect();
    entries.push((1.0 - alpha_sq, 0.0));
    entries.retain(|e| e.0 > 0.0);
    EnergySpectrum::new(entries)
}

/// `⟨H⟩₊ = ⟨n⟩[1 − σ(1−η)] − min{N(1−σ), 0}`,
/// `ΔH² = Δn²[1 − σ(1−η)]² + ⟨n⟩σ²η(1−η)`.
pub fn photon_loss_stats(
    mean_n: f64,
    var_n: f64,
    n: u32,
    eta: f64,
    sigma: f64,
) -> Result<NoisyModeStats> {
    check_eta(eta)?;
    Ok(loss_stats_unchecked(mean_n, var_n, n as f64, eta, sigma))
}

fn loss_stats_unchecked(mean_n: f64, var_n: f64, n: f64, eta: f64, sigma: f64) -> NoisyModeStats {
    let keep = 1.0 - sigma * (1.0 - eta);
    NoisyModeStats {
        effective_mean: (mean_n * keep - (n * (1.0 - sigma)).min(0.0)).max(0.0),
        variance: (var_n * keep * keep + mean_n * sigma * sigma * eta * (1.0 - eta)).max(0.0),
        sigma_or_kappa: sigma,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossOptimum {
    /// Grid minimum of the effective mean over `σ ∈ [0, σ_max]`.
    pub ml: NoisyModeStats,
    /// Grid minimum of the variance.
    pub mt: NoisyModeStats,
    /// `Δn² / ((1−η)Δn² + η⟨n⟩)`.
    pub mt_closed_sigma: f64,
    /// `ηΔn²⟨n⟩ / ((1−η)Δn² + η⟨n⟩)`.
    pub mt_closed_variance: f64,
    /// `η⟨n⟩`, the target of the ML optimisation.
    pub ml_target: f64,
    /// Effective mean at `σ = 1` (`δ = 0`).
    pub ml_at_sigma_one: f64,
    /// Effective mean at `σ = 2` (`δ = 1`).
    pub ml_at_sigma_two: f64,
}

pub fn photon_loss_optimize(mean_n: f64, var_n: f64, n: u32, eta: f64) -> Result<LossOptimum> {
    photon_loss_optimize_with(mean_n, var_n, n, eta, &GridSearch::default())
}

pub fn photon_loss_optimize_with(
    mean_n: f64,
    var_n: f64,
    n: u32,
    eta: f64,
    search: &GridSearch,
) -> Result<LossOptimum> {
    check_eta(eta)?;
    let nf = n as f64;
    let at = |s: f64| loss_stats_unchecked(mean_n, var_n, nf, eta, s);

    let (s_ml, _) = grid_minimize(|s| at(s).effective_mean, 0.0, search.sigma_max, search);
    // σ* ≤ 1/(1−η), so the MT range widens as η → 1
    let mt_hi = if eta < 1.0 {
        search.sigma_max.max(1.0 / (1.0 - eta))
    } else {
        search.sigma_max
    };
    let (s_mt, _) = grid_minimize(|s| at(s).variance, 0.0, mt_hi, search);

    let denom = (1.0 - eta) * var_n + eta * mean_n;
    let (mt_closed_sigma, mt_closed_variance) = if denom > 0.0 {
        (var_n / denom, eta * var_n * mean_n / denom)
    } else {
        (0.0, 0.0)
    };
    Ok(LossOptimum {
        ml: at(s_ml),
        mt: at(s_mt),
        mt_closed_sigma,
        mt_closed_variance,
        ml_target: eta * mean_n,
        ml_at_sigma_one: at(1.0).effective_mean,
        ml_at_sigma_two: at(2.0).effective_mean,
    })
}

/// Per-mode probe data for the loss bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossMode {
    pub mean: f64,
    pub variance: f64,
    pub n: u32,
}

/// Optimised `(ML, MT)` stats pair per mode, ready for [`noisy_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyPair {
    pub ml: NoisyModeStats,
    pub mt: NoisyModeStats,
}

impl NoisyPair {
    /// Stats carrying the ML effective mean and the MT variance, used for
    /// default prior widths.
    pub fn threshold_stats(&self) -> GeneratorStats {
        GeneratorStats::new(self.ml.effective_mean, self.mt.variance, 0.0)
    }
}

pub fn photon_loss_pairs(modes: &[LossMode], etas: &[f64]) -> Result<Vec<NoisyPair>> {
    ensure_dims(modes.len(), etas.len())?;
    modes
        .iter()
        .zip(etas)
        .map(|(m, &eta)| {
            let o = photon_loss_optimize(m.mean, m.variance, m.n, eta)?;
            Ok(NoisyPair { ml: o.ml, mt: o.mt })
        })
        .collect()
}

/// `max{Σ c_ML/min⟨H⟩₊², Σ c_MT/min ΔH²}` from optimised pairs.
pub fn noisy_bound(
    pairs: &[NoisyPair],
    prior: &PriorWindow,
    k: &SpeedLimitConstants,
) -> Result<BoundReport> {
    ensure_dims(prior.dim(), pairs.len())?;
    let ml = pairs
        .iter()
        .zip(prior.widths())
        .map(|(p, &w)| zzb::ml_closed(&p.ml.generator_stats(), w, k))
        .collect();
    let mt = pairs
        .iter()
        .zip(prior.widths())
        .map(|(p, &w)| zzb::mt_closed(&p.mt.generator_stats(), w, k))
        .collect();
    Ok(BoundReport::from_modes(ml, mt, prior.widths().to_vec()))
}

/// Prior with the default width for each optimised pair.
pub fn noisy_default_prior(pairs: &[NoisyPair], k: &SpeedLimitConstants) -> Result<PriorWindow> {
    let widths = pairs
        .iter()
        .map(|p| zzb::default_width(&p.threshold_stats(), k, zzb::DEFAULT_WIDTH_FACTOR))
        .collect::<Result<Vec<f64>>>()?;
    PriorWindow::centered(widths)
}

pub fn photon_loss_vector_bound(
    modes: &[LossMode],
    etas: &[f64],
    prior: &PriorWindow,
    k: &SpeedLimitConstants,
) -> Result<BoundReport> {
    noisy_bound(&photon_loss_pairs(modes, etas)?, prior, k)
}

/// `⟨H⟩₊ = |1−κ|⟨n⟩ + |κ|/(2√(2π)β)`, `ΔH² = Δn²(1−κ)² + κ²/(8β²)`.
pub fn phase_diffusion_stats(mean_n: f64, var_n: f64, beta: f64, kappa: f64) -> Result<NoisyModeStats> {
    check_beta(beta)?;
    Ok(diffusion_stats_unchecked(mean_n, var_n, beta, kappa))
}

fn diffusion_stats_unchecked(mean_n: f64, var_n: f64, beta: f64, kappa: f64) -> NoisyModeStats {
    NoisyModeStats {
        effective_mean: (1.0 - kappa).abs() * mean_n
            + kappa.abs() / (2.0 * (2.0 * PI).sqrt() * beta),
        variance: var_n * (1.0 - kappa).powi(2) + kappa * kappa / (8.0 * beta * beta),
        sigma_or_kappa: kappa,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionOptimum {
    pub ml: NoisyModeStats,
    pub mt: NoisyModeStats,
    /// `8Δn²β² / (1 + 8Δn²β²)`.
    pub mt_closed_kappa: f64,
    /// `Δn² / (1 + 8β²Δn²)`.
    pub mt_closed_variance: f64,
    /// `min(⟨n⟩, 1/(2√(2π)β))`.
    pub ml_closed: f64,
    /// `√2 β² ⟨n⟩ < 10`: outside the regime where the model is derived.
    pub regime_warning: bool,
}

pub fn phase_diffusion_optimize(mean_n: f64, var_n: f64, beta: f64) -> Result<DiffusionOptimum> {
    phase_diffusion_optimize_with(mean_n, var_n, beta, &GridSearch::default())
}

pub fn phase_diffusion_optimize_with(
    mean_n: f64,
    var_n: f64,
    beta: f64,
    search: &GridSearch,
) -> Result<DiffusionOptimum> {
    check_beta(beta)?;
    let at = |kp: f64| diffusion_stats_unchecked(mean_n, var_n, beta, kp);
    let (k_ml, _) = grid_minimize(|kp| at(kp).effective_mean, 0.0, 1.0, search);
    let (k_mt, _) = grid_minimize(|kp| at(kp).variance, 0.0, 1.0, search);
    let x = 8.0 * var_n * beta * beta;
    Ok(DiffusionOptimum {
        ml: at(k_ml),
        mt: at(k_mt),
        mt_closed_kappa: x / (1.0 + x),
        mt_closed_variance: var_n / (1.0 + x),
        ml_closed: mean_n.min(1.0 / (2.0 * (2.0 * PI).sqrt() * beta)),
        regime_warning: 2f64.sqrt() * beta * beta * mean_n < DIFFUSION_REGIME_MIN,
    })
}

pub fn phase_diffusion_pairs(modes: &[(f64, f64)], betas: &[f64]) -> Result<(Vec<NoisyPair>, Vec<bool>)> {
    ensure_dims(modes.len(), betas.len())?;
    let mut pairs = Vec::with_capacity(modes.len());
    let mut flags = Vec::with_capacity(modes.len());
    for (&(mean, var), &beta) in modes.iter().zip(betas) {
        let o = phase_diffusion_optimize(mean, var, beta)?;
        pairs.push(NoisyPair { ml: o.ml, mt: o.mt });
        flags.push(o.regime_warning);
    }
    Ok((pairs, flags))
}

/// Appends one warning per flagged mode.
pub fn add_regime_warnings(report: &mut BoundReport, flags: &[bool]) {
    for (i, &f) in flags.iter().enumerate() {
        if f {
            report
                .warnings
                .push(format!("mode {i}: √2·β²·⟨n⟩ < {DIFFUSION_REGIME_MIN}, diffusion model outside its regime"));
        }
    }
}

pub fn phase_diffusion_vector_bound(
    modes: &[(f64, f64)],
    betas: &[f64],
    prior: &PriorWindow,
    k: &SpeedLimitConstants,
) -> Result<BoundReport> {
    let (pairs, flags) = phase_diffusion_pairs(modes, betas)?;
    let mut report = noisy_bound(&pairs, prior, k)?;
    add_regime_warnings(&mut report, &flags);
    Ok(report)
}
