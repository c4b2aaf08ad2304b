//! Probe families and the simultaneous (SE) vs individual (IE) estimation
//! comparisons built on them.
//!
//! * The entangled optimal probe
//!   `β|N,0,…,0⟩ + α Σ_k |0,…,N_k,…,0⟩` with `α = 1/√(d+√d)` on `d+1` modes.
//! * NOON states `(|n,0⟩ + |0,n⟩)/√2`, one per parameter for IE.
//! * The cyclic `D`-mode squeezed vacuum `exp(i r QᵀAP)|0⟩`, whose matrix
//!   exponentials are evaluated through the discrete Fourier coefficients
//!   of the circulant shift.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fockcore::{FockState, GeneratorStats, OccupationVector, SpeedLimitConstants};
use crate::zzb::{self, BoundReport, PriorWindow};

/// The limit `Δ₂^IE/Δ₁^SE` as printed in the literature for this comparison.
pub const PRINTED_ADVANTAGE_LIMIT: f64 = 4.9081;

const IMAG_RESIDUE_TOL: f64 = 1e-10;
const BOGOLIUBOV_TOL: f64 = 1e-9;
const BUDGET_R_MAX: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalProbeSpec {
    pub d: usize,
    pub n_total: u32,
    pub alpha: f64,
    pub beta: f64,
}

impl OptimalProbeSpec {
    pub fn new(d: usize, n_total: u32) -> Result<Self> {
        if d == 0 || n_total == 0 {
            return Err(domain("optimal probe needs d ≥ 1 and N ≥ 1"));
        }
        let df = d as f64;
        let alpha_sq = 1.0 / (df + df.sqrt());
        Ok(Self {
            d,
            n_total,
            alpha: alpha_sq.sqrt(),
            beta: (1.0 - df * alpha_sq).max(0.0).sqrt(),
        })
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha * self.alpha
    }

    /// Photon-number statistics of any parameter mode:
    /// mean `α²N`, variance `α²(1 − α²)N²`.
    pub fn mode_stats(&self) -> GeneratorStats {
        let a2 = self.alpha_sq();
        let n = self.n_total as f64;
        GeneratorStats::from_number_moments(a2 * n, a2 * (1.0 - a2) * n * n)
    }

    pub fn state(&self) -> Result<FockState> {
        let modes = self.d + 1;
        let n = self.n_total;
        let mut terms = vec![(
            OccupationVector::single(modes, 0, n),
            Complex64::new(self.beta, 0.0),
        )];
        for k in 1..modes {
            terms.push((
                OccupationVector::single(modes, k, n),
                Complex64::new(self.alpha, 0.0),
            ));
        }
        FockState::normalized(modes, terms)
    }
}

/// Optimal entangled probe on `d + 1` modes (mode 0 is the reference).
pub fn optimal_probe(d: usize, n_total: u32) -> Result<FockState> {
    OptimalProbeSpec::new(d, n_total)?.state()
}

/// `(|n,0⟩ + |0,n⟩)/√2`.
pub fn noon_state(n: u32) -> Result<FockState> {
    if n == 0 {
        return Err(domain("NOON state needs n ≥ 1"));
    }
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    FockState::normalized(
        2,
        [
            (OccupationVector::new(vec![n, 0]), amp),
            (OccupationVector::new(vec![0, n]), amp),
        ],
    )
}

/// Statistics of the phase mode of a NOON state: mean `n/2`, variance `n²/4`.
pub fn noon_mode_stats(n: f64) -> GeneratorStats {
    GeneratorStats::from_number_moments(n / 2.0, n * n / 4.0)
}

/// `(ML, MT)` closed forms for SE with the optimal probe:
/// `d(d+√d)² c_ML / N²` and `d(d+√d)² c_MT / ((d+√d−1) N²)`.
pub fn se_bounds_optimal(d: usize, n_total: u32, k: &SpeedLimitConstants) -> Result<(f64, f64)> {
    if d == 0 || n_total == 0 {
        return Err(domain("SE bounds need d ≥ 1 and N ≥ 1"));
    }
    let df = d as f64;
    let s = df + df.sqrt();
    let n2 = (n_total as f64).powi(2);
    Ok((
        df * s * s * k.c_ml / n2,
        df * s * s * k.c_mt / ((s - 1.0) * n2),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IeNoonBounds {
    pub ml: f64,
    pub mt: f64,
    /// Photons per NOON state, `⌊N/d⌋`.
    pub n_per_mode: u32,
    /// `N mod d`; nonzero means photons were left unused.
    pub remainder: u32,
}

impl IeNoonBounds {
    pub fn rounded(&self) -> bool {
        self.remainder != 0
    }
}

/// IE with `d` NOON states of `⌊N/d⌋` photons each:
/// `d³/(20λ²N²)` and `d³(π² − 8)/(4N²)` when `d | N`.
pub fn ie_bounds_noon(d: usize, n_total: u32, k: &SpeedLimitConstants) -> Result<IeNoonBounds> {
    if d == 0 {
        return Err(domain("IE bounds need d ≥ 1"));
    }
    let n = n_total / d as u32;
    if n < 1 {
        return Err(domain(format!("N = {n_total} leaves no photons for {d} NOON states")));
    }
    let s = noon_mode_stats(n as f64);
    let df = d as f64;
    Ok(IeNoonBounds {
        ml: df * k.c_ml / (s.effective_mean * s.effective_mean),
        mt: df * k.c_mt / s.variance,
        n_per_mode: n,
        remainder: n_total % d as u32,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageReport {
    pub d: usize,
    /// `Δ₂^IE/Δ₁^SE = 20λ²(π² − 8) d²/(d + √d)²`.
    pub ratio: f64,
    /// `20λ²(π² − 8)`, the `d → ∞` limit of `ratio`.
    pub limit: f64,
    pub printed_limit: f64,
    /// `limit / printed_limit`.
    pub discrepancy: f64,
}

pub fn advantage_ratio(d: usize, k: &SpeedLimitConstants) -> Result<AdvantageReport> {
    if d == 0 {
        return Err(domain("advantage ratio needs d ≥ 1"));
    }
    let df = d as f64;
    let limit = 20.0 * k.lambda * k.lambda * (PI * PI - 8.0);
    let s = df + df.sqrt();
    Ok(AdvantageReport {
        d,
        ratio: limit * df * df / (s * s),
        limit,
        printed_limit: PRINTED_ADVANTAGE_LIMIT,
        discrepancy: limit / PRINTED_ADVANTAGE_LIMIT,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftSign {
    /// Coefficients of `e^{−rÃ}`.
    Minus,
    /// Coefficients of `e^{rA}`.
    Plus,
}

/// `c_m = (1/D) Σ_j e^{−imjω} e^{∓r e^{ijω}}`, `ω = 2π/D`.
pub fn squeezed_coeffs(dim: usize, r: f64, sign: ShiftSign) -> Result<Vec<f64>> {
    if dim < 2 {
        return Err(domain("squeezed family needs D ≥ 2"));
    }
    if !r.is_finite() {
        return Err(domain("squeezing strength must be finite"));
    }
    let s = match sign {
        ShiftSign::Minus => -r,
        ShiftSign::Plus => r,
    };
    let omega = 2.0 * PI / dim as f64;
    let eig: Vec<Complex64> = (0..dim)
        .map(|j| (Complex64::from_polar(s, j as f64 * omega)).exp())
        .collect();
    let scale = eig.iter().map(|z| z.norm()).fold(1.0, f64::max);
    (0..dim)
        .map(|m| {
            let c: Complex64 = eig
                .iter()
                .enumerate()
                .map(|(j, z)| z * Complex64::from_polar(1.0, -(((m * j) % dim) as f64) * omega))
                .sum::<Complex64>()
                / dim as f64;
            if c.im.abs() >= IMAG_RESIDUE_TOL * scale {
                return Err(Error::Internal(format!(
                    "coefficient {m} has imaginary residue {:e}",
                    c.im
                )));
            }
            Ok(c.re)
        })
        .collect()
}

/// `Ã^m`, with `Ã^m_{kj} = δ_{(k+m) mod D, j}`.
pub fn shift_tilde_power(dim: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |k, j| if (k + m) % dim == j { 1.0 } else { 0.0 })
}

/// `A^m`, with `A^m_{kj} = δ_{k, (j+m) mod D}`.
pub fn shift_power(dim: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |k, j| if k == (j + m) % dim { 1.0 } else { 0.0 })
}

/// `(e^{−rÃ}, e^{rA})` assembled from the Fourier coefficients.
pub fn squeezer_exponentials(dim: usize, r: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let cm = squeezed_coeffs(dim, r, ShiftSign::Minus)?;
    let cp = squeezed_coeffs(dim, r, ShiftSign::Plus)?;
    let mut em = DMatrix::zeros(dim, dim);
    let mut ep = DMatrix::zeros(dim, dim);
    for m in 0..dim {
        em += shift_tilde_power(dim, m) * cm[m];
        ep += shift_power(dim, m) * cp[m];
    }
    Ok((em, ep))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezedSpec {
    pub d: usize,
    pub dim: usize,
    pub r: f64,
    pub coeffs_minus: Vec<f64>,
    pub coeffs_plus: Vec<f64>,
    pub r_mat: DMatrix<f64>,
    pub k_mat: DMatrix<f64>,
}

impl SqueezedSpec {
    /// Cyclic squeezer on `D = d + 1` modes.
    pub fn new(d: usize, r: f64) -> Result<Self> {
        let dim = d + 1;
        let (r_mat, k_mat) = bogoliubov(dim, r)?;
        Ok(Self {
            d,
            dim,
            r,
            coeffs_minus: squeezed_coeffs(dim, r, ShiftSign::Minus)?,
            coeffs_plus: squeezed_coeffs(dim, r, ShiftSign::Plus)?,
            r_mat,
            k_mat,
        })
    }
}

/// `R = (e^{−rÃ} + e^{rA})/2`, `K = (e^{−rÃ} − e^{rA})/2`, checked against
/// `RRᵀ − KKᵀ = I`, `RKᵀ = KRᵀ` and the row contraction identity.
pub fn bogoliubov(dim: usize, r: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (em, ep) = squeezer_exponentials(dim, r)?;
    let r_mat = (&em + &ep) * 0.5;
    let k_mat = (&em - &ep) * 0.5;

    let scale = em.abs().max().max(ep.abs().max()).powi(2).max(1.0);
    let tol = BOGOLIUBOV_TOL * scale;
    let id = DMatrix::<f64>::identity(dim, dim);
    let sympl = &r_mat * r_mat.transpose() - &k_mat * k_mat.transpose() - &id;
    if sympl.abs().max() > tol {
        return Err(Error::Internal(format!(
            "RRᵀ − KKᵀ deviates from I by {:e}",
            sympl.abs().max()
        )));
    }
    let rk = &r_mat * k_mat.transpose();
    if (&rk - rk.transpose()).abs().max() > tol {
        return Err(Error::Internal("RKᵀ is not symmetric".into()));
    }
    for row in 0..dim {
        let c: f64 = em.row(row).component_mul(&ep.row(row)).sum();
        if (c - 1.0).abs() > tol {
            return Err(Error::Internal(format!("row {row} contraction = {c}")));
        }
    }
    Ok((r_mat, k_mat))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePhotonStats {
    pub mean: f64,
    pub variance: f64,
}

impl ModePhotonStats {
    pub fn generator_stats(&self) -> GeneratorStats {
        GeneratorStats::from_number_moments(self.mean, self.variance)
    }
}

/// Per-mode photon statistics of the cyclic squeezed vacuum:
/// `⟨n⟩ = (S₋ + S₊)/4 − 1/2`, `Δn² = (S₋² + S₊²)/8 − 1/4` with
/// `S_± = Σ_i (c_i^±)²`. The mean is cross-checked against `(KKᵀ)_kk`.
pub fn squeezed_mode_stats(dim: usize, r: f64) -> Result<Vec<ModePhotonStats>> {
    let s_minus: f64 = squeezed_coeffs(dim, r, ShiftSign::Minus)?
        .iter()
        .map(|c| c * c)
        .sum();
    let s_plus: f64 = squeezed_coeffs(dim, r, ShiftSign::Plus)?
        .iter()
        .map(|c| c * c)
        .sum();
    let mean = ((s_minus + s_plus) / 4.0 - 0.5).max(0.0);
    let variance = ((s_minus * s_minus + s_plus * s_plus) / 8.0 - 0.25).max(0.0);

    let (_, k_mat) = bogoliubov(dim, r)?;
    let kk = &k_mat * k_mat.transpose();
    for k in 0..dim {
        if (kk[(k, k)] - mean).abs() > BOGOLIUBOV_TOL * mean.max(1.0) {
            return Err(Error::Internal(format!(
                "mode {k}: mean {mean} disagrees with (KKᵀ)_kk = {}",
                kk[(k, k)]
            )));
        }
    }
    Ok(vec![ModePhotonStats { mean, variance }; dim])
}

/// Squeezing `r ∈ [0, 20]` with `D · ⟨n_k⟩ = n_total`, by bisection.
pub fn match_photon_budget(dim: usize, n_total: f64) -> Result<f64> {
    if !(n_total > 0.0) || !n_total.is_finite() {
        return Err(domain(format!("photon budget must be positive, got {n_total}")));
    }
    let total = |r: f64| -> Result<f64> {
        Ok(dim as f64 * squeezed_mode_stats(dim, r)?[0].mean)
    };
    let (mut lo, mut hi) = (0.0, BUDGET_R_MAX);
    if total(hi)? < n_total {
        return Err(Error::Range(format!(
            "budget {n_total} needs squeezing beyond r = {BUDGET_R_MAX}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid)? < n_total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Widths for `stats`: `width` if given, else the default multiple of the
/// larger validity threshold of each mode.
pub fn resolve_prior(
    stats: &[GeneratorStats],
    width: Option<f64>,
    k: &SpeedLimitConstants,
) -> Result<PriorWindow> {
    let widths = stats
        .iter()
        .map(|s| match width {
            Some(w) => Ok(w),
            None => zzb::default_width(s, k, zzb::DEFAULT_WIDTH_FACTOR),
        })
        .collect::<Result<Vec<f64>>>()?;
    PriorWindow::centered(widths)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezedComparison {
    pub se: BoundReport,
    pub ie: BoundReport,
    pub r_se: f64,
    pub r_ie: f64,
    pub se_stats: ModePhotonStats,
    pub ie_stats: ModePhotonStats,
}

/// SE with the `(d+1)`-mode squeezed vacuum against IE with `d` two-mode
/// squeezed vacua, both at total mean photon number `n_total`.
pub fn se_ie_squeezed_comparison(
    d: usize,
    n_total: f64,
    width: Option<f64>,
    k: &SpeedLimitConstants,
) -> Result<SqueezedComparison> {
    if d < 1 {
        return Err(domain("comparison needs d ≥ 1"));
    }
    let dim = d + 1;
    let r_se = match_photon_budget(dim, n_total)?;
    let se_stats = squeezed_mode_stats(dim, r_se)?[1];
    let r_ie = match_photon_budget(2, n_total / d as f64)?;
    let ie_stats = squeezed_mode_stats(2, r_ie)?[0];

    let se_modes = vec![se_stats.generator_stats(); d];
    let ie_modes = vec![ie_stats.generator_stats(); d];
    let se = zzb::combined_bound(&se_modes, &resolve_prior(&se_modes, width, k)?, k)?;
    let ie = zzb::combined_bound(&ie_modes, &resolve_prior(&ie_modes, width, k)?, k)?;
    Ok(SqueezedComparison {
        se,
        ie,
        r_se,
        r_ie,
        se_stats,
        ie_stats,
    })
}
