//! Multimode bosonic pure states, single-mode energy spectra and the
//! statistics of per-mode generators.
//!
//! Every bound in this crate is driven by the fidelity of a single mode,
//! `F(τ) = |Σ_l P_l e^{iτE_l}|`, and by two moments of the generator on the
//! probe: the effective mean `⟨H⟩₊ = ⟨H⟩ − E_min` and the variance `ΔH²`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Margolus-Levitin speed-limit constant used throughout.
pub const DEFAULT_LAMBDA: f64 = 0.7246;

const NORM_TOL: f64 = 1e-12;
const ENERGY_MERGE_TOL: f64 = 1e-12;

/// Photon numbers per mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccupationVector(Vec<u32>);

impl OccupationVector {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    /// `|0…0 n 0…0⟩` with `n` photons in `mode`.
    pub fn single(modes: usize, mode: usize, n: u32) -> Self {
        let mut counts = vec![0; modes];
        counts[mode] = n;
        Self(counts)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self, mode: usize) -> u32 {
        self.0[mode]
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "⟩")
    }
}

/// Sparse multimode pure state in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    modes: usize,
    amplitudes: BTreeMap<OccupationVector, Complex64>,
}

impl FockState {
    /// Builds a state from explicit amplitudes. Repeated kets are summed; the
    /// result must be normalised to within 1e-12.
    pub fn new(
        modes: usize,
        terms: impl IntoIterator<Item = (OccupationVector, Complex64)>,
    ) -> Result<Self> {
        let state = Self::collect(modes, terms)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(domain(format!("state norm² = {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Like [`FockState::new`] but rescales the amplitudes to unit norm.
    pub fn normalized(
        modes: usize,
        terms: impl IntoIterator<Item = (OccupationVector, Complex64)>,
    ) -> Result<Self> {
        let mut state = Self::collect(modes, terms)?;
        let norm = state.norm_sqr();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(domain("cannot normalise a zero or non-finite state"));
        }
        let scale = norm.sqrt().recip();
        for amp in state.amplitudes.values_mut() {
            *amp *= scale;
        }
        Ok(state)
    }

    fn collect(
        modes: usize,
        terms: impl IntoIterator<Item = (OccupationVector, Complex64)>,
    ) -> Result<Self> {
        if modes == 0 {
            return Err(domain("a state needs at least one mode"));
        }
        let mut amplitudes = BTreeMap::new();
        for (occ, amp) in terms {
            if occ.len() != modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    got: occ.len(),
                });
            }
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(domain("non-finite amplitude"));
            }
            *amplitudes.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        amplitudes.retain(|_, a: &mut Complex64| a.norm_sqr() > 0.0);
        Ok(Self { modes, amplitudes })
    }

    /// Single-mode vacuum `|0⟩`.
    pub fn vacuum(modes: usize) -> Result<Self> {
        Self::new(
            modes,
            [(OccupationVector::new(vec![0; modes]), Complex64::new(1.0, 0.0))],
        )
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = (&OccupationVector, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn amplitude(&self, occ: &OccupationVector) -> Complex64 {
        self.amplitudes
            .get(occ)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn support_size(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Marginal photon-number distribution of one mode as an energy spectrum
    /// of the generator `n̂_mode`.
    pub fn mode_number_spectrum(&self, mode: usize) -> Result<EnergySpectrum> {
        if mode >= self.modes {
            return Err(Error::Index {
                index: mode,
                len: self.modes,
            });
        }
        let mut marginal: BTreeMap<u32, f64> = BTreeMap::new();
        for (occ, amp) in &self.amplitudes {
            *marginal.entry(occ.count(mode)).or_insert(0.0) += amp.norm_sqr();
        }
        EnergySpectrum::new(marginal.into_iter().map(|(n, p)| (p, n as f64)))
    }
}

/// Free-function form of [`FockState::mode_number_spectrum`].
pub fn mode_number_spectrum(state: &FockState, mode: usize) -> Result<EnergySpectrum> {
    state.mode_number_spectrum(mode)
}

/// Probability/energy pairs `{(P_l, E_l)}` of a generator on a probe.
///
/// Entries are kept sorted by energy; energies closer than 1e-12 are merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySpectrum {
    entries: Vec<(f64, f64)>,
}

impl EnergySpectrum {
    pub fn new(entries: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw: Vec<(f64, f64)> = entries.into_iter().collect();
        if raw.is_empty() {
            return Err(domain("empty spectrum"));
        }
        for &(p, e) in &raw {
            if !p.is_finite() || !e.is_finite() {
                return Err(domain("non-finite spectrum entry"));
            }
            if p < 0.0 {
                return Err(domain(format!("negative probability {p}")));
            }
        }
        let total: f64 = raw.iter().map(|&(p, _)| p).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(domain(format!("probabilities sum to {total}, expected 1")));
        }

        raw.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut entries: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (p, e) in raw {
            match entries.last_mut() {
                Some(last) if (e - last.1).abs() <= ENERGY_MERGE_TOL => last.0 += p,
                _ => entries.push((p, e)),
            }
        }
        Ok(Self { entries })
    }

    /// `(probability, energy)` pairs in ascending energy order.
    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `|Σ_l P_l e^{iτE_l}|`, clamped to `[0, 1]`.
    pub fn fidelity(&self, tau: f64) -> f64 {
        if tau == 0.0 {
            return 1.0;
        }
        let sum: Complex64 = self
            .entries
            .iter()
            .map(|&(p, e)| Complex64::from_polar(p, tau * e))
            .sum();
        sum.norm().clamp(0.0, 1.0)
    }

    pub fn stats(&self) -> GeneratorStats {
        generator_stats_from_spectrum(self)
    }
}

pub fn fidelity_from_spectrum(spec: &EnergySpectrum, tau: f64) -> f64 {
    spec.fidelity(tau)
}

/// Moments of a generator on a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorStats {
    pub mean: f64,
    pub effective_mean: f64,
    pub variance: f64,
    pub e_min: f64,
}

impl GeneratorStats {
    /// Builds stats from raw moments, clamping round-off negatives to zero.
    pub fn new(mean: f64, variance: f64, e_min: f64) -> Self {
        Self {
            mean,
            effective_mean: (mean - e_min).max(0.0),
            variance: variance.max(0.0),
            e_min,
        }
    }

    /// Stats of a number-like generator whose ground energy is zero.
    pub fn from_number_moments(mean: f64, variance: f64) -> Self {
        Self::new(mean, variance, 0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

pub fn generator_stats_from_spectrum(spec: &EnergySpectrum) -> GeneratorStats {
    let mean: f64 = spec.entries.iter().map(|&(p, e)| p * e).sum();
    // centred second moment avoids cancellation for large energies
    let variance: f64 = spec
        .entries
        .iter()
        .map(|&(p, e)| p * (e - mean) * (e - mean))
        .sum();
    let e_min = spec
        .entries
        .iter()
        .filter(|&&(p, _)| p > 0.0)
        .map(|&(_, e)| e)
        .fold(f64::INFINITY, f64::min);
    GeneratorStats::new(mean, variance, e_min)
}

/// Speed-limit constants. `c_ml` and `c_mt` are always derived, never stored
/// independently of `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimitConstants {
    pub lambda: f64,
    pub c_ml: f64,
    pub c_mt: f64,
}

impl SpeedLimitConstants {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(domain(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            lambda,
            c_ml: 1.0 / (80.0 * lambda * lambda),
            c_mt: PI * PI / 16.0 - 0.5,
        })
    }

    /// Negative-control hook for the self-test: a constant set whose ML
    /// coefficient no longer follows from `lambda`.
    #[doc(hidden)]
    pub fn corrupted(lambda: f64) -> Self {
        let mut k = Self::new(lambda).expect("valid lambda");
        k.c_ml *= 1.5;
        k
    }
}

impl Default for SpeedLimitConstants {
    fn default() -> Self {
        Self::new(DEFAULT_LAMBDA).expect("default lambda is positive")
    }
}

/// Clamped ML surrogate `sqrt(max(0, 1 − 2λτ⟨H⟩₊))`.
pub fn ml_fidelity_surrogate(stats: &GeneratorStats, lambda: f64, tau: f64) -> f64 {
    (1.0 - 2.0 * lambda * tau * stats.effective_mean).max(0.0).sqrt()
}

/// MT surrogate `|cos ΔHτ|` on the first quarter period, zero beyond.
pub fn mt_fidelity_surrogate(stats: &GeneratorStats, tau: f64) -> f64 {
    let phase = stats.std_dev() * tau;
    if phase <= PI / 2.0 {
        phase.cos().abs()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn noon2() -> FockState {
        FockState::new(
            2,
            [
                (OccupationVector::new(vec![2, 0]), c(FRAC_1_SQRT_2)),
                (OccupationVector::new(vec![0, 2]), c(FRAC_1_SQRT_2)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn vacuum_spectrum() {
        let s = FockState::vacuum(1).unwrap().mode_number_spectrum(0).unwrap();
        assert_eq!(s.entries(), &[(1.0, 0.0)]);
    }

    #[test]
    fn noon_mode_spectrum() {
        let s = noon2().mode_number_spectrum(0).unwrap();
        assert_eq!(s.len(), 2);
        assert_relative_eq!(s.entries()[0].0, 0.5, epsilon = 1e-15);
        assert_eq!(s.entries()[0].1, 0.0);
        assert_relative_eq!(s.entries()[1].0, 0.5, epsilon = 1e-15);
        assert_eq!(s.entries()[1].1, 2.0);
    }

    #[test]
    fn mode_out_of_range() {
        assert!(matches!(
            noon2().mode_number_spectrum(2),
            Err(Error::Index { index: 2, len: 2 })
        ));
    }

    #[test]
    fn rejects_unnormalised_and_mismatched() {
        assert!(FockState::new(1, [(OccupationVector::new(vec![1]), c(0.9))]).is_err());
        assert!(FockState::new(2, [(OccupationVector::new(vec![1]), c(1.0))]).is_err());
        let s = FockState::normalized(1, [(OccupationVector::new(vec![1]), c(3.0))]).unwrap();
        assert_relative_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn spectrum_merges_duplicates() {
        let s = EnergySpectrum::new([(0.25, 1.0), (0.5, 0.0), (0.25, 1.0 + 1e-13)]).unwrap();
        assert_eq!(s.len(), 2);
        assert_relative_eq!(s.entries()[1].0, 0.5, epsilon = 1e-15);
        assert!(EnergySpectrum::new([(0.5, 0.0)]).is_err());
        assert!(EnergySpectrum::new([(1.5, 0.0), (-0.5, 1.0)]).is_err());
        assert!(EnergySpectrum::new(Vec::new()).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let flat = EnergySpectrum::new([(1.0, 0.0)]).unwrap();
        assert_eq!(flat.fidelity(3.7), 1.0);
        let two = EnergySpectrum::new([(0.5, 0.0), (0.5, 2.0)]).unwrap();
        assert!(two.fidelity(PI / 2.0) < 1e-15);
        assert_relative_eq!(two.fidelity(PI / 4.0), (PI / 4.0).cos(), epsilon = 1e-15);
        assert_eq!(two.fidelity(0.0), 1.0);
    }

    #[test]
    fn stats_examples() {
        let s = EnergySpectrum::new([(1.0, 5.0)]).unwrap().stats();
        assert_eq!((s.mean, s.variance, s.effective_mean), (5.0, 0.0, 0.0));

        for n in 1..8 {
            let nf = n as f64;
            let s = EnergySpectrum::new([(0.5, 0.0), (0.5, nf)]).unwrap().stats();
            assert_relative_eq!(s.effective_mean, nf / 2.0, epsilon = 1e-14);
            assert_relative_eq!(s.variance, nf * nf / 4.0, epsilon = 1e-13);
        }

        let a2 = 1.0 / (2.0 + 2f64.sqrt());
        let n = 3.0;
        let s = EnergySpectrum::new([(a2, n), (1.0 - a2, 0.0)]).unwrap().stats();
        assert_relative_eq!(s.effective_mean, a2 * n, epsilon = 1e-14);
        assert_relative_eq!(s.variance, a2 * (1.0 - a2) * n * n, epsilon = 1e-14);
    }

    #[test]
    fn e_min_ignores_zero_probability_levels() {
        let s = EnergySpectrum::new([(0.0, -4.0), (0.5, 1.0), (0.5, 3.0)])
            .unwrap()
            .stats();
        assert_eq!(s.e_min, 1.0);
        assert_relative_eq!(s.effective_mean, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn constants() {
        let k = SpeedLimitConstants::default();
        assert_relative_eq!(k.c_ml, 0.023_807_5, max_relative = 1e-5);
        assert_relative_eq!(k.c_mt, 0.116_850_2, max_relative = 1e-6);
        assert!(SpeedLimitConstants::new(0.0).is_err());
        assert!(SpeedLimitConstants::new(-1.0).is_err());
    }

    #[test]
    fn surrogate_examples() {
        let k = SpeedLimitConstants::default();
        let unit = GeneratorStats::new(1.0, 1.0, 0.0);
        assert_eq!(ml_fidelity_surrogate(&unit, k.lambda, 0.0), 1.0);
        assert_eq!(
            ml_fidelity_surrogate(&GeneratorStats::new(0.0, 0.0, 0.0), k.lambda, 9.0),
            1.0
        );
        assert!(ml_fidelity_surrogate(&unit, k.lambda, 1.0 / (2.0 * k.lambda)) < 1e-7);

        assert_eq!(mt_fidelity_surrogate(&unit, 0.0), 1.0);
        assert!(mt_fidelity_surrogate(&unit, PI / 2.0) < 1e-15);
        assert_eq!(mt_fidelity_surrogate(&unit, PI / 2.0 + 1e-9), 0.0);
        let two = GeneratorStats::new(0.0, 4.0, 0.0);
        assert_relative_eq!(
            mt_fidelity_surrogate(&two, PI / 8.0),
            (PI / 4.0).cos(),
            epsilon = 1e-15
        );
    }

    fn kahan(values: impl Iterator<Item = f64>) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for v in values {
            let y = v - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    }

    fn arb_spectrum() -> impl Strategy<Value = EnergySpectrum> {
        prop::collection::vec((0.01f64..1.0, -20.0f64..60.0), 1..12).prop_map(|raw| {
            let total: f64 = raw.iter().map(|r| r.0).sum();
            let mut entries: Vec<(f64, f64)> = raw.iter().map(|&(p, e)| (p / total, e)).collect();
            let s: f64 = entries.iter().map(|e| e.0).sum();
            entries[0].0 += 1.0 - s;
            EnergySpectrum::new(entries).unwrap()
        })
    }

    proptest! {
        #[test]
        fn fidelity_in_unit_interval(spec in arb_spectrum(), tau in 0.0f64..10.0) {
            let f = spec.fidelity(tau);
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!((spec.fidelity(0.0) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn stats_match_kahan_reverse_order(spec in arb_spectrum()) {
            let s = spec.stats();
            let rev = spec.entries().iter().rev();
            let mean = kahan(rev.clone().map(|&(p, e)| p * e));
            let second = kahan(rev.map(|&(p, e)| p * e * e));
            prop_assert!((s.mean - mean).abs() < 1e-10);
            prop_assert!((s.variance - (second - mean * mean)).abs() < 1e-10 * (1.0 + second));
            prop_assert!((s.effective_mean - (s.mean - s.e_min)).abs() < 1e-12);
            prop_assert!(s.variance >= 0.0 && s.effective_mean >= 0.0);
        }

        #[test]
        fn ml_speed_limit_holds(spec in arb_spectrum(), frac in 0.0f64..1.0) {
            let k = SpeedLimitConstants::default();
            let s = spec.stats();
            prop_assume!(s.effective_mean > 1e-9);
            let tau = frac / (k.lambda * s.effective_mean);
            let f = spec.fidelity(tau);
            prop_assert!(f * f >= 1.0 - 2.0 * k.lambda * tau * s.effective_mean - 1e-9);
        }

        #[test]
        fn mt_speed_limit_holds(spec in arb_spectrum(), frac in 0.0f64..1.0) {
            let s = spec.stats();
            prop_assume!(s.variance > 1e-12);
            let tau = frac * PI / (2.0 * s.std_dev());
            let f = spec.fidelity(tau);
            let c = (s.std_dev() * tau).cos();
            prop_assert!(f * f >= c * c - 1e-9);
        }
    }
}
