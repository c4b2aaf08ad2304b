//! Quantum Ziv-Zakai bounds for a vector of independent phase parameters
//! under a uniform prior window.
//!
//! Two families of results live here:
//!
//! * numeric per-mode integrals
//!   `∫₀^W dτ (τ/2) V[(1 − τ/W)(1 − √(1 − F²(τ)))]`, where `V` is the
//!   valley-filling (suffix maximum) operator, and an alternative form that
//!   weighs the Helstrom error of unequal priors by `P(ζ) + P(ζ + τ)`;
//! * closed forms obtained from the ML and MT fidelity surrogates,
//!   `c_ML / ⟨H⟩₊²` and `c_MT / ΔH²`, combined per mode into a
//!   [`BoundReport`].
//!
//! Modes with zero effective mean (resp. variance) carry no information and
//! report `+∞` for the corresponding closed form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_dims, Error, Result};
use crate::fockcore::{EnergySpectrum, GeneratorStats, SpeedLimitConstants};

/// Multiplier standing in for "W ≫ threshold" in validity flags.
pub const VALIDITY_FACTOR: f64 = 10.0;

/// Default prior width as a multiple of the larger validity threshold.
pub const DEFAULT_WIDTH_FACTOR: f64 = 100.0;

const FIDELITY_SLACK: f64 = 1e-9;
const REFINE_REL_TOL: f64 = 1e-8;
const REFINE_MAX_INTERVALS: usize = 1 << 20;

/// Per-parameter uniform prior: parameter `i` is uniform on
/// `[μ_i − W_i/2, μ_i + W_i/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorWindow {
    means: Vec<f64>,
    widths: Vec<f64>,
}

impl PriorWindow {
    pub fn new(means: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        ensure_dims(means.len(), widths.len())?;
        if widths.is_empty() {
            return Err(domain("prior needs at least one parameter"));
        }
        if let Some(w) = widths.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(domain(format!("prior width must be positive, got {w}")));
        }
        Ok(Self { means, widths })
    }

    /// Zero-mean prior with the given widths.
    pub fn centered(widths: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0; widths.len()], widths)
    }

    /// `d` parameters sharing one width.
    pub fn uniform(d: usize, width: f64) -> Result<Self> {
        Self::centered(vec![width; d])
    }

    pub fn dim(&self) -> usize {
        self.widths.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Density of parameter `i` at `x`.
    pub fn density(&self, i: usize, x: f64) -> f64 {
        let half = 0.5 * self.widths[i];
        let lo = self.means[i] - half;
        let hi = self.means[i] + half;
        if x >= lo && x <= hi {
            1.0 / self.widths[i]
        } else {
            0.0
        }
    }

    /// `Σ_i W_i² / 12`: the total prior variance, which no lower bound exceeds.
    pub fn ceiling(&self) -> f64 {
        self.widths.iter().map(|w| w * w / 12.0).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Number of intervals on `[0, W]`.
    pub grid_points: usize,
    pub rule: QuadratureRule,
    pub valley_fill: bool,
    /// Double the grid until the relative change drops below 1e-8
    /// (capped at 2²⁰ intervals).
    pub refine: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            grid_points: 4096,
            rule: QuadratureRule::Simpson,
            valley_fill: true,
            refine: false,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 16 {
            return Err(domain(format!(
                "quadrature needs at least 16 intervals, got {}",
                self.grid_points
            )));
        }
        if self.rule == QuadratureRule::Simpson && self.grid_points % 2 != 0 {
            return Err(domain("Simpson's rule needs an even interval count"));
        }
        Ok(())
    }
}

/// Per-mode and total bound values with validity flags.
///
/// Infinite values mean "unbounded": the mode carries no information about
/// its parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub per_mode_ml: Vec<f64>,
    pub per_mode_mt: Vec<f64>,
    pub per_mode_integral: Option<Vec<f64>>,
    pub total_ml: f64,
    pub total_mt: f64,
    pub total_combined: f64,
    pub total_integral: Option<f64>,
    pub ml_valid: Vec<bool>,
    pub mt_valid: Vec<bool>,
    /// Whether valley filling was applied to the integral columns.
    pub valley_fill: Option<bool>,
    pub widths: Vec<f64>,
    pub warnings: Vec<String>,
}

impl BoundReport {
    /// Assembles a report from per-mode closed-form values.
    pub fn from_modes(
        ml: Vec<(f64, bool)>,
        mt: Vec<(f64, bool)>,
        widths: Vec<f64>,
    ) -> Self {
        let per_mode_ml: Vec<f64> = ml.iter().map(|m| m.0).collect();
        let per_mode_mt: Vec<f64> = mt.iter().map(|m| m.0).collect();
        let total_ml = per_mode_ml.iter().sum::<f64>();
        let total_mt = per_mode_mt.iter().sum::<f64>();
        let ml_valid: Vec<bool> = ml.iter().map(|m| m.1).collect();
        let mt_valid: Vec<bool> = mt.iter().map(|m| m.1).collect();
        let mut warnings = Vec::new();
        for (i, (&a, &b)) in ml_valid.iter().zip(&mt_valid).enumerate() {
            if !a {
                warnings.push(format!("mode {i}: prior width below ML validity threshold"));
            }
            if !b {
                warnings.push(format!("mode {i}: prior width below MT validity threshold"));
            }
        }
        Self {
            per_mode_ml,
            per_mode_mt,
            per_mode_integral: None,
            total_ml,
            total_mt,
            total_combined: total_ml.max(total_mt),
            total_integral: None,
            ml_valid,
            mt_valid,
            valley_fill: None,
            widths,
            warnings,
        }
    }

    pub fn dim(&self) -> usize {
        self.per_mode_ml.len()
    }

    /// Largest finite quantity reported, for ceiling checks.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.per_mode_ml
            .iter()
            .chain(&self.per_mode_mt)
            .chain(self.per_mode_integral.iter().flatten())
            .copied()
            .chain([self.total_ml, self.total_mt, self.total_combined])
            .chain(self.total_integral)
    }
}

/// Suffix maximum: `out[k] = max_{j ≥ k} samples[j]`.
pub fn valley_fill(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(domain("valley filling needs at least one sample"));
    }
    let mut out = samples.to_vec();
    valley_fill_in_place(&mut out);
    Ok(out)
}

fn valley_fill_in_place(values: &mut [f64]) {
    let mut running = f64::NEG_INFINITY;
    for v in values.iter_mut().rev() {
        running = running.max(*v);
        *v = running;
    }
}

/// `∫ min{P(ζ), P(ζ+τ)} dζ` for a uniform window of width `width`.
pub fn uniform_overlap(tau: f64, width: f64) -> f64 {
    (1.0 - tau / width).max(0.0)
}

/// `(1 − √(1 − F²)) / 2`: minimum error for two equally likely pure states.
pub fn pe_equally_likely(fidelity: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(domain(format!("fidelity {fidelity} outside [0, 1]")));
    }
    Ok(0.5 * (1.0 - (1.0 - fidelity * fidelity).sqrt()))
}

/// Minimum error for pure states with priors `p0`, `p1`:
/// `(1 − √(1 − 4 p0 p1 F²)) / 2`.
pub fn pe_pure(p0: f64, p1: f64, fidelity: f64) -> f64 {
    0.5 * (1.0 - (1.0 - 4.0 * p0 * p1 * fidelity * fidelity).max(0.0).sqrt())
}

fn checked_fidelity(f: f64, tau: f64) -> Result<f64> {
    if !f.is_finite() || f < -FIDELITY_SLACK || f > 1.0 + FIDELITY_SLACK {
        return Err(domain(format!("fidelity {f} at τ = {tau} outside [0, 1]")));
    }
    Ok(f.clamp(0.0, 1.0))
}

fn integrate_samples(values: &[f64], h: f64, rule: QuadratureRule) -> f64 {
    let n = values.len() - 1;
    match rule {
        QuadratureRule::Trapezoid => {
            let inner: f64 = values[1..n].iter().sum();
            h * (0.5 * (values[0] + values[n]) + inner)
        }
        QuadratureRule::Simpson => {
            let mut acc = values[0] + values[n];
            for (k, v) in values.iter().enumerate().take(n).skip(1) {
                acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            acc * h / 3.0
        }
    }
}

/// One fixed-grid evaluation of `∫₀^W (τ/2) V[J(τ)] dτ`, where
/// `pair_term(τ)` supplies `J(τ)`.
fn integrate_pair_term(
    width: f64,
    intervals: usize,
    cfg: &QuadratureConfig,
    pair_term: &mut dyn FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let h = width / intervals as f64;
    let mut j = Vec::with_capacity(intervals + 1);
    for k in 0..=intervals {
        j.push(pair_term(k as f64 * h)?);
    }
    if cfg.valley_fill {
        valley_fill_in_place(&mut j);
    }
    for (k, v) in j.iter_mut().enumerate() {
        *v *= 0.5 * k as f64 * h;
    }
    Ok(integrate_samples(&j, h, cfg.rule))
}

fn integrate_with_refinement(
    width: f64,
    cfg: &QuadratureConfig,
    pair_term: &mut dyn FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    cfg.validate()?;
    if !(width > 0.0) || !width.is_finite() {
        return Err(domain(format!("prior width must be positive, got {width}")));
    }
    let mut n = cfg.grid_points;
    let mut value = integrate_pair_term(width, n, cfg, pair_term)?;
    if !cfg.refine {
        return Ok(value);
    }
    while n < REFINE_MAX_INTERVALS {
        n *= 2;
        let next = integrate_pair_term(width, n, cfg, pair_term)?;
        let change = (next - value).abs();
        value = next;
        if change <= REFINE_REL_TOL * next.abs() {
            break;
        }
    }
    Ok(value)
}

/// Numeric single-mode bound
/// `∫₀^W dτ (τ/2) V[(1 − τ/W)(1 − √(1 − F²(τ)))]`.
///
/// Valley filling acts on the whole ζ-averaged term, i.e. on the product of
/// the window overlap and the fidelity factor.
pub fn qzzb_mode_bound(
    fid: impl Fn(f64) -> f64,
    width: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let mut term = |tau: f64| -> Result<f64> {
        let f = checked_fidelity(fid(tau), tau)?;
        Ok(uniform_overlap(tau, width) * (1.0 - (1.0 - f * f).sqrt()))
    };
    integrate_with_refinement(width, cfg, &mut term)
}

/// The variant that averages the unequal-prior Helstrom error:
/// `∫₀^W dτ (τ/2) V ∫ dζ [P(ζ) + P(ζ+τ)] · ½(1 − √(1 − 4P⁰P¹F²))`,
/// with `P⁰ = P(ζ)/(P(ζ)+P(ζ+τ))`. The ζ-integral is evaluated numerically
/// over the pieces on which the window densities are constant.
pub fn zzb_variant2_mode_bound(
    fid: impl Fn(f64) -> f64,
    width: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let prior = PriorWindow::new(vec![0.0], vec![width])?;
    let lo = -0.5 * width;
    let hi = 0.5 * width;
    let mut term = |tau: f64| -> Result<f64> {
        let f = checked_fidelity(fid(tau), tau)?;
        let mut cuts = vec![lo - tau, lo, hi - tau, hi];
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b <= a {
                continue;
            }
            // Simpson on each piece; exact for the piecewise-constant weight
            let g = |z: f64| {
                let p = prior.density(0, z);
                let q = prior.density(0, z + tau);
                let s = p + q;
                if s == 0.0 {
                    0.0
                } else {
                    s * pe_pure(p / s, q / s, f)
                }
            };
            // sample strictly inside the piece so boundary ties don't matter
            let inset = 1e-12 * (b - a);
            let (a2, b2) = (a + inset, b - inset);
            total += (b - a) / 6.0 * (g(a2) + 4.0 * g(0.5 * (a2 + b2)) + g(b2));
        }
        Ok(total)
    };
    integrate_with_refinement(width, cfg, &mut term)
}

/// `c_ML / ⟨H⟩₊²` and whether `W ≥ 10 / (2λ⟨H⟩₊)`.
pub fn ml_closed(stats: &GeneratorStats, width: f64, k: &SpeedLimitConstants) -> (f64, bool) {
    let h = stats.effective_mean;
    if !(h > 0.0) {
        return (f64::INFINITY, false);
    }
    let value = k.c_ml / (h * h);
    (value, width >= VALIDITY_FACTOR * ml_threshold(stats, k))
}

/// `c_MT / ΔH²` and whether `W ≥ 10 π / (2ΔH)`.
pub fn mt_closed(stats: &GeneratorStats, width: f64, k: &SpeedLimitConstants) -> (f64, bool) {
    let v = stats.variance;
    if !(v > 0.0) {
        return (f64::INFINITY, false);
    }
    (k.c_mt / v, width >= VALIDITY_FACTOR * mt_threshold(stats))
}

/// `1 / (2λ⟨H⟩₊)`, infinite for stationary modes.
pub fn ml_threshold(stats: &GeneratorStats, k: &SpeedLimitConstants) -> f64 {
    1.0 / (2.0 * k.lambda * stats.effective_mean)
}

/// `π / (2ΔH)`, infinite for zero variance.
pub fn mt_threshold(stats: &GeneratorStats) -> f64 {
    PI / (2.0 * stats.std_dev())
}

/// Default prior width: `factor` times the larger finite validity threshold.
pub fn default_width(stats: &GeneratorStats, k: &SpeedLimitConstants, factor: f64) -> Result<f64> {
    let t = [ml_threshold(stats, k), mt_threshold(stats)]
        .into_iter()
        .filter(|t| t.is_finite())
        .fold(f64::NAN, f64::max);
    if t.is_nan() {
        return Err(Error::Range(
            "mode is stationary; no finite prior width threshold".into(),
        ));
    }
    Ok(factor * t)
}

/// Closed-form ML/MT report, one entry per mode.
pub fn combined_bound(
    per_mode_stats: &[GeneratorStats],
    prior: &PriorWindow,
    k: &SpeedLimitConstants,
) -> Result<BoundReport> {
    ensure_dims(prior.dim(), per_mode_stats.len())?;
    let ml = per_mode_stats
        .iter()
        .zip(prior.widths())
        .map(|(s, &w)| ml_closed(s, w, k))
        .collect();
    let mt = per_mode_stats
        .iter()
        .zip(prior.widths())
        .map(|(s, &w)| mt_closed(s, w, k))
        .collect();
    Ok(BoundReport::from_modes(ml, mt, prior.widths().to_vec()))
}

/// Numeric integral bound per mode plus the closed forms for comparison.
pub fn qzzb_vector_bound(
    spectra: &[EnergySpectrum],
    prior: &PriorWindow,
    cfg: &QuadratureConfig,
    k: &SpeedLimitConstants,
) -> Result<BoundReport> {
    ensure_dims(prior.dim(), spectra.len())?;
    let stats: Vec<GeneratorStats> = spectra.iter().map(EnergySpectrum::stats).collect();
    let mut report = combined_bound(&stats, prior, k)?;
    let integrals = spectra
        .iter()
        .zip(prior.widths())
        .map(|(s, &w)| qzzb_mode_bound(|t| s.fidelity(t), w, cfg))
        .collect::<Result<Vec<f64>>>()?;
    report.total_integral = Some(integrals.iter().sum());
    report.per_mode_integral = Some(integrals);
    report.valley_fill = Some(cfg.valley_fill);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockcore::{ml_fidelity_surrogate, mt_fidelity_surrogate};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn valley_fill_examples() {
        assert_eq!(valley_fill(&[3.0, 1.0, 2.0, 0.0]).unwrap(), vec![3.0, 2.0, 2.0, 0.0]);
        let mono = [5.0, 4.0, 4.0, 1.0];
        assert_eq!(valley_fill(&mono).unwrap(), mono.to_vec());
        assert_eq!(valley_fill(&[2.5; 3]).unwrap(), vec![2.5; 3]);
        assert!(valley_fill(&[]).is_err());
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(uniform_overlap(0.0, 3.0), 1.0);
        assert_eq!(uniform_overlap(3.0, 3.0), 0.0);
        assert_eq!(uniform_overlap(0.75, 3.0), 0.75);
        assert_eq!(uniform_overlap(5.0, 3.0), 0.0);
    }

    #[test]
    fn pe_examples() {
        assert_eq!(pe_equally_likely(0.0).unwrap(), 0.0);
        assert_eq!(pe_equally_likely(1.0).unwrap(), 0.5);
        assert_relative_eq!(pe_equally_likely(0.6).unwrap(), 0.1, epsilon = 1e-15);
        assert!(pe_equally_likely(1.2).is_err());
        assert!(pe_equally_likely(-0.1).is_err());
    }

    #[test]
    fn indistinguishable_states_reach_prior_variance() {
        let cfg = QuadratureConfig::default();
        for w in [0.5, 3.0, 40.0] {
            let v = qzzb_mode_bound(|_| 1.0, w, &cfg).unwrap();
            assert_relative_eq!(v, w * w / 12.0, max_relative = 1e-12);
            let v2 = zzb_variant2_mode_bound(|_| 1.0, w, &cfg).unwrap();
            assert_relative_eq!(v2, w * w / 12.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn orthogonal_states_give_zero() {
        let cfg = QuadratureConfig::default();
        // F(0) = 1 is a single grid point of zero weight
        let f = |t: f64| if t == 0.0 { 1.0 } else { 0.0 };
        assert_eq!(qzzb_mode_bound(f, 7.0, &cfg).unwrap(), 0.0);
        assert_eq!(zzb_variant2_mode_bound(f, 7.0, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_fidelity_and_config() {
        let cfg = QuadratureConfig::default();
        assert!(qzzb_mode_bound(|_| 1.1, 1.0, &cfg).is_err());
        assert!(qzzb_mode_bound(|_| f64::NAN, 1.0, &cfg).is_err());
        assert!(qzzb_mode_bound(|_| 1.0 + 5e-10, 1.0, &cfg).is_ok());
        let odd = QuadratureConfig { grid_points: 101, ..cfg };
        assert!(qzzb_mode_bound(|_| 1.0, 1.0, &odd).is_err());
        let tiny = QuadratureConfig { grid_points: 8, ..cfg };
        assert!(qzzb_mode_bound(|_| 1.0, 1.0, &tiny).is_err());
        let trap = QuadratureConfig { grid_points: 101, rule: QuadratureRule::Trapezoid, ..cfg };
        assert!(qzzb_mode_bound(|_| 1.0, 1.0, &trap).is_ok());
    }

    #[test]
    fn ml_surrogate_integral_close_to_constant() {
        let k = SpeedLimitConstants::default();
        let stats = GeneratorStats::new(1.0, 1.0, 0.0);
        let w = 100.0 / (2.0 * k.lambda);
        let v = qzzb_mode_bound(
            |t| ml_fidelity_surrogate(&stats, k.lambda, t),
            w,
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(v, k.c_ml, max_relative = 0.05);
        assert_relative_eq!(k.c_ml, 0.023_807_5, max_relative = 1e-5);
    }

    #[test]
    fn quarter_period_identity() {
        let k = SpeedLimitConstants::default();
        for dh in [0.5, 1.0, 3.0] {
            let stats = GeneratorStats::new(0.0, dh * dh, 0.0);
            let w = PI / (2.0 * dh);
            // no window factor: integrate (τ/2)(1 − |sin ΔHτ|) directly
            let n = 1 << 14;
            let h = w / n as f64;
            let samples: Vec<f64> = (0..=n)
                .map(|i| {
                    let t = i as f64 * h;
                    let f = mt_fidelity_surrogate(&stats, t);
                    0.5 * t * (1.0 - (1.0 - f * f).sqrt())
                })
                .collect();
            let v = integrate_samples(&samples, h, QuadratureRule::Simpson);
            assert!((v - k.c_mt / (dh * dh)).abs() < 1e-9, "ΔH = {dh}: {v}");
        }
    }

    #[test]
    fn closed_form_examples() {
        let k = SpeedLimitConstants::default();
        let s1 = GeneratorStats::new(1.0, 1.0, 0.0);
        assert_relative_eq!(ml_closed(&s1, 1e6, &k).0, 0.023_807_5, max_relative = 1e-5);
        assert_relative_eq!(mt_closed(&s1, 1e6, &k).0, 0.116_850_2, max_relative = 1e-6);
        let s2 = GeneratorStats::new(2.0, 4.0, 0.0);
        assert_relative_eq!(ml_closed(&s2, 1e6, &k).0, k.c_ml / 4.0, max_relative = 1e-15);
        assert_relative_eq!(mt_closed(&s2, 1e6, &k).0, k.c_mt / 4.0, max_relative = 1e-15);

        // NOON with n photons per parameter mode
        for (d, n_total) in [(1usize, 4.0), (3, 12.0), (5, 50.0)] {
            let n = n_total / d as f64;
            let noon = GeneratorStats::new(n / 2.0, n * n / 4.0, 0.0);
            let df = d as f64;
            assert_relative_eq!(
                ml_closed(&noon, 1e6, &k).0,
                df * df / (20.0 * k.lambda * k.lambda * n_total * n_total),
                max_relative = 1e-13
            );
            assert_relative_eq!(
                mt_closed(&noon, 1e6, &k).0,
                (PI * PI - 8.0) / (4.0 * n * n),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn closed_form_validity_and_sentinels() {
        let k = SpeedLimitConstants::default();
        let s = GeneratorStats::new(1.0, 1.0, 0.0);
        let t_ml = 1.0 / (2.0 * k.lambda);
        assert!(ml_closed(&s, 10.0 * t_ml, &k).1);
        assert!(!ml_closed(&s, 9.9 * t_ml, &k).1);
        assert!(mt_closed(&s, 10.0 * PI / 2.0, &k).1);
        assert!(!mt_closed(&s, 9.9 * PI / 2.0, &k).1);

        let flat = GeneratorStats::new(3.0, 0.0, 3.0);
        assert_eq!(ml_closed(&flat, 1.0, &k), (f64::INFINITY, false));
        assert_eq!(mt_closed(&flat, 1.0, &k), (f64::INFINITY, false));
        let prior = PriorWindow::uniform(2, 100.0).unwrap();
        let r = combined_bound(&[s, flat], &prior, &k).unwrap();
        assert!(r.total_ml.is_infinite() && r.total_combined.is_infinite());
    }

    #[test]
    fn combined_single_mode_and_additivity() {
        let k = SpeedLimitConstants::default();
        let s = GeneratorStats::new(2.0, 4.0, 0.0);
        let r = combined_bound(&[s], &PriorWindow::uniform(1, 1e3).unwrap(), &k).unwrap();
        assert!((r.total_combined - k.c_ml.max(k.c_mt) / 4.0).abs() < 1e-12);
        assert_eq!(r.total_combined, r.total_mt);

        let r4 = combined_bound(&[s; 4], &PriorWindow::uniform(4, 1e3).unwrap(), &k).unwrap();
        assert_relative_eq!(r4.total_ml, 4.0 * r.total_ml, max_relative = 1e-15);
        assert_relative_eq!(r4.total_mt, 4.0 * r.total_mt, max_relative = 1e-15);
        assert!(combined_bound(&[s; 3], &PriorWindow::uniform(4, 1.0).unwrap(), &k).is_err());
    }

    #[test]
    fn vector_bound_additivity() {
        let k = SpeedLimitConstants::default();
        let cfg = QuadratureConfig::default();
        let noon = EnergySpectrum::new([(0.5, 0.0), (0.5, 2.0)]).unwrap();
        let w = 4.0 * PI;
        let single = qzzb_mode_bound(|t| noon.fidelity(t), w, &cfg).unwrap();
        let r = qzzb_vector_bound(
            &vec![noon.clone(); 3],
            &PriorWindow::uniform(3, w).unwrap(),
            &cfg,
            &k,
        )
        .unwrap();
        assert_eq!(r.total_integral.unwrap(), single + single + single);
        assert_eq!(r.valley_fill, Some(true));

        let flat = EnergySpectrum::new([(1.0, 0.0)]).unwrap();
        let r = qzzb_vector_bound(&[flat], &PriorWindow::uniform(1, 2.0).unwrap(), &cfg, &k)
            .unwrap();
        assert_relative_eq!(r.total_integral.unwrap(), 4.0 / 12.0, max_relative = 1e-12);
    }

    #[test]
    fn prior_window_validation() {
        assert!(PriorWindow::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(PriorWindow::new(vec![0.0], vec![0.0]).is_err());
        assert!(PriorWindow::new(vec![], vec![]).is_err());
        let p = PriorWindow::new(vec![1.0, 0.0], vec![2.0, 6.0]).unwrap();
        assert_relative_eq!(p.ceiling(), 4.0 / 12.0 + 36.0 / 12.0);
        assert_eq!(p.density(0, 1.9), 0.5);
        assert_eq!(p.density(0, 2.1), 0.0);
    }

    #[test]
    fn default_width_uses_larger_threshold() {
        let k = SpeedLimitConstants::default();
        let s = GeneratorStats::new(1.0, 100.0, 0.0);
        let w = default_width(&s, &k, 100.0).unwrap();
        assert_relative_eq!(w, 100.0 / (2.0 * k.lambda));
        assert!(default_width(&GeneratorStats::new(0.0, 0.0, 0.0), &k, 100.0).is_err());
    }

    proptest! {
        #[test]
        fn valley_fill_is_nonincreasing_envelope(v in prop::collection::vec(-5.0f64..5.0, 1..64)) {
            let out = valley_fill(&v).unwrap();
            for w in out.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            for (o, x) in out.iter().zip(&v) {
                prop_assert!(o >= x);
            }
            prop_assert_eq!(out.last(), v.last());
        }
    }
}
