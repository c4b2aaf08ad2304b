//! Cross-checks of the closed forms against independent numerics.

use std::f64::consts::PI;

use qzzb_core::fockcore::ml_fidelity_surrogate;
use qzzb_core::noisechan;
use qzzb_core::oracle::{self, DensityMatrix, HypothesisTest};
use qzzb_core::probes::{self, OptimalProbeSpec, ShiftSign};
use qzzb_core::zzb::{self, PriorWindow, QuadratureConfig};
use qzzb_core::{EnergySpectrum, GeneratorStats, SpeedLimitConstants};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const HELSTROM_SEED: u64 = 20_240_901;
pub const HELSTROM_PAIRS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Outcome = Result<(bool, String), qzzb_core::Error>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// `∫₀^{π/2} (u/2)(1 − sin u) du` against `c_MT`.
pub fn mt_constant(k: &SpeedLimitConstants) -> Outcome {
    let v = oracle::adaptive_quadrature(|u| 0.5 * u * (1.0 - u.sin()), 0.0, PI / 2.0, 1e-13)?;
    let err = (v - k.c_mt).abs();
    Ok((err < 1e-9, format!("integral {v:.12e}, c_MT {:.12e}, |Δ| {err:.2e}", k.c_mt)))
}

/// Single-mode bound with the ML fidelity surrogate and `W ≫ 1/(2λ⟨H⟩₊)`,
/// scaled by `⟨H⟩₊²`, against `c_ML`.
pub fn ml_constant(k: &SpeedLimitConstants) -> Outcome {
    let h = 1.0;
    let stats = GeneratorStats::new(h, 1.0, 0.0);
    let w = 1000.0 * zzb::ml_threshold(&stats, k);
    let cfg = QuadratureConfig { grid_points: 1 << 16, refine: true, ..QuadratureConfig::default() };
    let v = zzb::qzzb_mode_bound(|t| ml_fidelity_surrogate(&stats, k.lambda, t), w, &cfg)? * h * h;
    let e = rel(v, k.c_ml);
    Ok((e < 5e-3, format!("quadrature {v:.8e}, c_ML {:.8e}, rel {e:.2e}", k.c_ml)))
}

pub fn single_mode_reduction(k: &SpeedLimitConstants) -> Outcome {
    let mut worst: f64 = 0.0;
    for (mean, var) in [(0.5, 0.1), (3.0, 9.0), (40.0, 2.0)] {
        let s = GeneratorStats::from_number_moments(mean, var);
        let prior = PriorWindow::uniform(1, zzb::default_width(&s, k, zzb::DEFAULT_WIDTH_FACTOR)?)?;
        let r = zzb::combined_bound(&[s], &prior, k)?;
        let expect = (k.c_ml / (mean * mean)).max(k.c_mt / var);
        worst = worst.max(rel(r.total_combined, expect));
    }
    Ok((worst < 1e-12, format!("max rel {worst:.2e}")))
}

pub fn squeezer_coefficients() -> Outcome {
    let mut worst: f64 = 0.0;
    for dim in 2..=6 {
        for r in [0.2, 0.5, 1.0, 1.5] {
            let (em, ep) = probes::squeezer_exponentials(dim, r)?;
            let dm = oracle::dense_expm(&(probes::shift_tilde_power(dim, 1) * -r))?;
            let dp = oracle::dense_expm(&(probes::shift_power(dim, 1) * r))?;
            worst = worst.max((em - dm).abs().max()).max((ep - dp).abs().max());
        }
    }
    Ok((worst < 1e-10, format!("max |Δ| {worst:.2e}")))
}

pub fn squeezed_moments() -> Outcome {
    let mut worst: f64 = 0.0;
    for (dim, r) in [(3, 0.5), (4, 0.8)] {
        let sim = oracle::truncated_squeeze_sim_auto(dim, r)?;
        let stats = probes::squeezed_mode_stats(dim, r)?;
        for (i, s) in stats.iter().enumerate() {
            worst = worst
                .max((sim.means[i] - s.mean).abs())
                .max((sim.variances[i] - s.variance).abs());
        }
    }
    let r: f64 = 1.0;
    let s = probes::squeezed_mode_stats(2, r)?[0];
    let sh2 = r.sinh().powi(2);
    let closed = (s.mean - sh2).abs().max((s.variance - sh2 * r.cosh().powi(2)).abs());
    Ok((
        worst < 1e-6 && closed < 1e-9,
        format!("vs truncated sim {worst:.2e}, two-mode closed form {closed:.2e}"),
    ))
}

pub fn coefficient_mirror() -> Outcome {
    let mut worst: f64 = 0.0;
    for dim in 2..=6 {
        let m = probes::squeezed_coeffs(dim, 0.7, ShiftSign::Minus)?;
        let p = probes::squeezed_coeffs(dim, -0.7, ShiftSign::Plus)?;
        worst = m.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    Ok((worst < 1e-12, format!("max |Δ| {worst:.2e}")))
}

pub fn helstrom_pure_states() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(HELSTROM_SEED);
    let mut worst: f64 = 0.0;
    for i in 0..HELSTROM_PAIRS {
        let dim = 2 + i % 7;
        let a = oracle::random_pure_state(&mut rng, dim);
        let b = oracle::random_pure_state(&mut rng, dim);
        let f = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum::<num_complex::Complex64>().norm();
        let t = HypothesisTest::new(0.5, 0.5, DensityMatrix::pure(&a)?, DensityMatrix::pure(&b)?)?;
        worst = worst.max((oracle::helstrom_error(&t)? - zzb::pe_equally_likely(f.min(1.0))?).abs());
    }
    Ok((worst < 1e-9, format!("{HELSTROM_PAIRS} pairs, max |Δ| {worst:.2e}")))
}

pub fn bound_variants() -> Outcome {
    let cfg = QuadratureConfig::default();
    let spec = EnergySpectrum::new([(0.25, 0.0), (0.5, 1.0), (0.25, 4.0)])?;
    let mut worst: f64 = 0.0;
    for w in [0.5, 3.0, 20.0] {
        let a = zzb::qzzb_mode_bound(|t| spec.fidelity(t), w, &cfg)?;
        let b = zzb::zzb_variant2_mode_bound(|t| spec.fidelity(t), w, &cfg)?;
        worst = worst.max(rel(b, a));
    }
    Ok((worst < 1e-8, format!("max rel {worst:.2e}")))
}

pub fn loss_optimum() -> Outcome {
    let mut worst: f64 = 0.0;
    for (d, n) in [(2usize, 10u32), (5, 30)] {
        let s = OptimalProbeSpec::new(d, n)?.mode_stats();
        for eta in [0.1, 0.5, 0.9] {
            let o = noisechan::photon_loss_optimize(s.mean, s.variance, n, eta)?;
            worst = worst
                .max((o.mt.sigma_or_kappa - o.mt_closed_sigma).abs())
                .max(rel(o.mt.variance, o.mt_closed_variance));
        }
    }
    Ok((worst < 1e-6, format!("max deviation {worst:.2e}")))
}

pub fn loss_spectrum_moments() -> Outcome {
    let mut worst: f64 = 0.0;
    for (d, n) in [(2usize, 6u32), (3, 17)] {
        let spec = OptimalProbeSpec::new(d, n)?;
        let s = spec.mode_stats();
        for eta in [0.2, 0.7] {
            for sigma in [0.0, 0.8, 1.6] {
                let a = noisechan::photon_loss_spectrum(spec.alpha_sq(), n, eta, sigma)?.stats();
                let b = noisechan::photon_loss_stats(s.mean, s.variance, n, eta, sigma)?;
                worst = worst
                    .max(rel(a.effective_mean, b.effective_mean))
                    .max(rel(a.variance, b.variance));
            }
        }
    }
    Ok((worst < 1e-10, format!("max rel {worst:.2e}")))
}

pub fn diffusion_optimum() -> Outcome {
    let mut worst_mt: f64 = 0.0;
    let mut worst_ml: f64 = 0.0;
    let s = OptimalProbeSpec::new(3, 20)?.mode_stats();
    for beta in [0.05, 0.3, 1.2] {
        let o = noisechan::phase_diffusion_optimize(s.mean, s.variance, beta)?;
        worst_mt = worst_mt
            .max((o.mt.sigma_or_kappa - o.mt_closed_kappa).abs())
            .max(rel(o.mt.variance, o.mt_closed_variance));
        worst_ml = worst_ml.max(rel(o.ml.effective_mean, o.ml_closed));
    }
    Ok((
        worst_mt < 1e-6 && worst_ml < 1e-9,
        format!("MT {worst_mt:.2e}, ML {worst_ml:.2e}"),
    ))
}

pub fn se_pipeline(k: &SpeedLimitConstants) -> Outcome {
    let mut worst: f64 = 0.0;
    for (d, n) in [(1usize, 2u32), (2, 10), (7, 100)] {
        let spec = OptimalProbeSpec::new(d, n)?;
        let state = spec.state()?;
        let stats: Vec<GeneratorStats> = (1..=d)
            .map(|m| state.mode_number_spectrum(m).map(|s| s.stats()))
            .collect::<Result<_, _>>()?;
        let prior = probes::resolve_prior(&stats, None, k)?;
        let r = zzb::combined_bound(&stats, &prior, k)?;
        let (ml, mt) = probes::se_bounds_optimal(d, n, k)?;
        worst = worst.max(rel(r.total_ml, ml)).max(rel(r.total_mt, mt));
    }
    Ok((worst < 1e-12, format!("max rel {worst:.2e}")))
}

/// Runs every check with constants `k`.
pub fn run(k: &SpeedLimitConstants) -> Vec<Check> {
    let checks: Vec<(&'static str, Box<dyn Fn() -> Outcome>)> = vec![
        ("mt-constant-quarter-period", Box::new(|| mt_constant(k))),
        ("ml-constant-surrogate", Box::new(|| ml_constant(k))),
        ("single-mode-reduction", Box::new(|| single_mode_reduction(k))),
        ("squeezer-coefficients-vs-expm", Box::new(squeezer_coefficients)),
        ("squeezed-moments-vs-truncated-sim", Box::new(squeezed_moments)),
        ("coefficient-sign-mirror", Box::new(coefficient_mirror)),
        ("helstrom-vs-pure-state-formula", Box::new(helstrom_pure_states)),
        ("bound-variants-agree", Box::new(bound_variants)),
        ("loss-mt-optimum-vs-grid", Box::new(loss_optimum)),
        ("loss-spectrum-vs-formula", Box::new(loss_spectrum_moments)),
        ("diffusion-optima-vs-grid", Box::new(diffusion_optimum)),
        ("se-closed-form-vs-pipeline", Box::new(|| se_pipeline(k))),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => Check { name, passed, detail },
            Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
        })
        .collect()
}
