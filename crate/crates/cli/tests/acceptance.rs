//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qzzb_cli::config::{Cell, Noise, Probe, Settings, Strategy};
use qzzb_cli::eval;
use qzzb_cli::figures::{self, Figure, FigureAxes};
use qzzb_cli::selftest;
use qzzb_core::noisechan::{self, LossMode};
use qzzb_core::oracle::{self, DensityMatrix, HypothesisTest};
use qzzb_core::probes::{self, OptimalProbeSpec, ShiftSign};
use qzzb_core::zzb::{self, PriorWindow, QuadratureConfig};
use qzzb_core::{EnergySpectrum, GeneratorStats, SpeedLimitConstants};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn k() -> SpeedLimitConstants {
    SpeedLimitConstants::default()
}

fn settings() -> Settings {
    Settings {
        probe: Probe::Optimal,
        strategy: Strategy::Se,
        noise: Noise::None,
        lambda: qzzb_core::DEFAULT_LAMBDA,
        quad_points: QuadratureConfig::default().grid_points,
        valley_fill: true,
    }
}

fn default_axes(fig: Figure) -> FigureAxes {
    FigureAxes::resolve(fig, &Default::default()).expect("default axes")
}

fn c1_constants() -> Outcome {
    let k = k();
    let start = Instant::now();
    let checks = selftest::run(&k);
    let elapsed = start.elapsed();
    let named = |n: &str| checks.iter().find(|c| c.name == n).expect("check exists");
    let mt = named("mt-constant-quarter-period");
    let ml = named("ml-constant-surrogate");
    let values_ok = (k.c_ml - 0.023_807_5).abs() < 1e-7 && (k.c_mt - 0.116_850_2).abs() < 1e-7;
    let closed_ok = rel(k.c_ml, 1.0 / (80.0 * 0.7246f64.powi(2))) < 1e-15
        && rel(k.c_mt, PI * PI / 16.0 - 0.5) < 1e-15;
    let all_ok = checks.iter().all(|c| c.passed);
    outcome(
        values_ok && closed_ok && mt.passed && ml.passed && all_ok && elapsed < Duration::from_secs(1),
        format!(
            "c_ML = {:.10}, c_MT = {:.10}; {}; {}; selftest {}/{} in {:.3} s",
            k.c_ml,
            k.c_mt,
            mt.detail,
            ml.detail,
            checks.iter().filter(|c| c.passed).count(),
            checks.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_single_mode() -> Outcome {
    let k = k();
    let mut worst: f64 = 0.0;
    for (mean, var) in [(0.3, 0.02), (1.0, 1.0), (5.0, 25.0), (50.0, 3.0), (2.5, 400.0)] {
        let s = GeneratorStats::from_number_moments(mean, var);
        for w in [1e3, 1e6] {
            let r = zzb::combined_bound(&[s], &PriorWindow::uniform(1, w).unwrap(), &k).unwrap();
            let expect = (k.c_ml / (mean * mean)).max(k.c_mt / var);
            worst = worst.max(rel(r.total_combined, expect));
        }
    }
    outcome(worst <= 1e-12, format!("max relative deviation {worst:.2e}"))
}

fn c3_fig2() -> Outcome {
    let start = Instant::now();
    let t = figures::fig2(&default_axes(Figure::Fig2), &k()).unwrap();
    let col = |n: &str| t.column_f64(n).unwrap();
    let (d, d1se, d2se, d1ie, d2ie) = (col("d"), col("d1_se"), col("d2_se"), col("d1_ie"), col("d2_ie"));
    let a = d1ie.iter().zip(&d2ie).all(|(m, t)| t > m);
    let sign: Vec<bool> = d1se.iter().zip(&d2se).map(|(m, t)| t > m).collect();
    let crossings = sign.windows(2).filter(|w| w[0] != w[1]).count();
    let b = sign[0] && !sign[sign.len() - 1] && crossings == 1;
    let cross_at = sign.iter().position(|s| !s).map(|i| d[i]).unwrap_or(f64::NAN);
    let ratio: Vec<f64> = d1se.iter().zip(&d2ie).map(|(s, i)| s / i).collect();
    let adv: Vec<f64> = d1se.iter().zip(&d2ie).map(|(s, i)| i / s).collect();
    let limit = probes::advantage_ratio(1, &k()).unwrap().limit;
    let max_ratio = ratio.iter().cloned().fold(0.0, f64::max);
    let max_adv = adv.iter().cloned().fold(0.0, f64::max);
    let c = max_ratio <= ratio[0] && max_adv <= limit;
    let elapsed = start.elapsed();
    outcome(
        a && b && c && d.len() == 99 && elapsed < Duration::from_secs(5),
        format!(
            "(a) {a}; (b) {b}, {crossings} crossing, ML tighter from d = {cross_at}; \
             (c) {c}, max Δ1SE/Δ2IE = {max_ratio:.4}, max Δ2IE/Δ1SE = {max_adv:.4} ≤ {limit:.4}; {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c4_advantage() -> Outcome {
    let r = probes::advantage_ratio(1_000_000, &k()).unwrap();
    let expected = 20.0 * 0.7246f64.powi(2) * (PI * PI - 8.0);
    let dev = rel(r.ratio, expected);
    let limit_ok = rel(r.limit, expected) < 1e-15 && (r.limit - 19.634).abs() < 5e-4;
    let discrepancy_ok = (r.discrepancy - 4.0).abs() < 0.01 && r.printed_limit == 4.9081;
    outcome(
        dev < 1e-4 && limit_ok && discrepancy_ok,
        format!(
            "ratio(d = 1e6) = {:.6}, 20λ²(π²−8) = {:.6}, rel deviation {dev:.3e} (tolerance 1e-4); \
             printed limit {}, derived/printed = {:.4}",
            r.ratio, r.limit, r.printed_limit, r.discrepancy
        ),
    )
}

fn c5_squeezed() -> Outcome {
    let start = Instant::now();
    let mut coeff: f64 = 0.0;
    let mut moments: f64 = 0.0;
    let mut max_cutoff = 0;
    for dim in 2..=6 {
        for r in [0.2, 0.5, 1.0, 1.5] {
            let (em, ep) = probes::squeezer_exponentials(dim, r).unwrap();
            let dm = oracle::dense_expm(&(probes::shift_tilde_power(dim, 1) * -r)).unwrap();
            let dp = oracle::dense_expm(&(probes::shift_power(dim, 1) * r)).unwrap();
            coeff = coeff.max((em - dm).abs().max()).max((ep - dp).abs().max());

            let stats = probes::squeezed_mode_stats(dim, r).unwrap();
            let sim = oracle::truncated_squeeze_sim_auto(dim, r).unwrap();
            max_cutoff = max_cutoff.max(sim.cutoffs.iter().copied().max().unwrap_or(0));
            for (i, s) in stats.iter().enumerate() {
                moments = moments
                    .max((sim.means[i] - s.mean).abs())
                    .max((sim.variances[i] - s.variance).abs());
            }
        }
    }
    let mut two_mode: f64 = 0.0;
    for r in [0.2f64, 0.5, 1.0, 1.5] {
        let s = probes::squeezed_mode_stats(2, r).unwrap();
        let sh2 = r.sinh().powi(2);
        for m in s {
            two_mode = two_mode.max((m.mean - sh2).abs()).max((m.variance - sh2 * r.cosh().powi(2)).abs());
        }
    }
    // the sign-mirror identity of the two coefficient families
    let mirror = (2..=6)
        .flat_map(|dim| {
            let m = probes::squeezed_coeffs(dim, 0.9, ShiftSign::Minus).unwrap();
            let p = probes::squeezed_coeffs(dim, -0.9, ShiftSign::Plus).unwrap();
            m.into_iter().zip(p).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        coeff < 1e-10 && moments < 1e-6 && two_mode < 1e-9 && mirror < 1e-12 && elapsed < Duration::from_secs(60),
        format!(
            "coefficients vs expm {coeff:.2e}; moments vs truncated sim {moments:.2e} (cutoff ≤ {max_cutoff}); \
             two-mode closed forms {two_mode:.2e}; {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c6_fig3() -> Outcome {
    let start = Instant::now();
    let t = figures::fig3(Figure::Fig3c, &default_axes(Figure::Fig3c), &k()).unwrap();
    let (d, n) = (t.column_f64("d").unwrap(), t.column_f64("n").unwrap());
    let (se, ie) = (t.column_f64("se_combined").unwrap(), t.column_f64("ie_combined").unwrap());
    let near = |d: f64, n: f64| d == 2.0 && (1.0..=4.0).contains(&n);
    let mut reversed_near = 0;
    let mut reversed_far = Vec::new();
    let mut min_ratio = (f64::INFINITY, 0.0, 0.0);
    for i in 0..d.len() {
        let q = ie[i] / se[i];
        if q < min_ratio.0 {
            min_ratio = (q, d[i], n[i]);
        }
        if se[i] >= ie[i] {
            if near(d[i], n[i]) {
                reversed_near += 1;
            } else {
                reversed_far.push((d[i], n[i]));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        reversed_near > 0 && reversed_far.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "{} cells; SE ≥ IE at {reversed_near} cells near (2, N ≤ 4) and {} elsewhere; \
             min IE/SE = {:.4} at (d = {}, N = {}); {:.2} s",
            d.len(),
            reversed_far.len(),
            min_ratio.0,
            min_ratio.1,
            min_ratio.2,
            elapsed.as_secs_f64()
        ),
    )
}

fn c7_loss() -> Outcome {
    let k = k();
    let mut grid_sigma: f64 = 0.0;
    let mut grid_var: f64 = 0.0;
    let mut recover: f64 = 0.0;
    let mut routes: f64 = 0.0;
    for d in [2usize, 3, 5, 8] {
        for n in 1..=50u32 {
            let spec = OptimalProbeSpec::new(d, n).unwrap();
            let s = spec.mode_stats();
            for step in 1..=10 {
                let eta = step as f64 / 10.0;
                let o = noisechan::photon_loss_optimize(s.mean, s.variance, n, eta).unwrap();
                if eta < 1.0 {
                    grid_sigma = grid_sigma.max((o.mt.sigma_or_kappa - o.mt_closed_sigma).abs());
                }
                grid_var = grid_var.max(rel(o.mt.variance, o.mt_closed_variance));
                if eta < 1.0 {
                    for sigma in [0.0, 0.5, 1.0, 1.5, 2.0, o.mt_closed_sigma] {
                        let a = noisechan::photon_loss_spectrum(spec.alpha_sq(), n, eta, sigma).unwrap().stats();
                        let b = noisechan::photon_loss_stats(s.mean, s.variance, n, eta, sigma).unwrap();
                        routes = routes
                            .max(rel(a.effective_mean, b.effective_mean))
                            .max(rel(a.variance, b.variance));
                    }
                }
            }
            let modes = vec![LossMode { mean: s.mean, variance: s.variance, n }; d];
            let stats = vec![s; d];
            let prior = probes::resolve_prior(&stats, None, &k).unwrap();
            let clean = zzb::combined_bound(&stats, &prior, &k).unwrap();
            let noisy = noisechan::photon_loss_vector_bound(&modes, &vec![1.0; d], &prior, &k).unwrap();
            recover = recover.max(rel(noisy.total_ml, clean.total_ml)).max(rel(noisy.total_mt, clean.total_mt));
        }
    }
    outcome(
        grid_sigma < 1e-6 && grid_var < 1e-6 && recover < 1e-9 && routes < 1e-10,
        format!(
            "σ* vs grid {grid_sigma:.2e}, variance vs grid {grid_var:.2e}; η = 1 vs noiseless {recover:.2e}; \
             spectrum vs formula {routes:.2e}"
        ),
    )
}

fn c8_diffusion() -> Outcome {
    let k = k();
    let mut kappa: f64 = 0.0;
    let mut ml: f64 = 0.0;
    let mut recover: f64 = 0.0;
    for d in [2usize, 3, 5, 8] {
        for n in [2u32, 5, 10, 20, 50] {
            let s = OptimalProbeSpec::new(d, n).unwrap().mode_stats();
            for beta in qzzb_cli::config::linspace(0.01, 2.0, 20) {
                let o = noisechan::phase_diffusion_optimize(s.mean, s.variance, beta).unwrap();
                let closed = 8.0 * s.variance * beta * beta / (1.0 + 8.0 * s.variance * beta * beta);
                kappa = kappa
                    .max((o.mt.sigma_or_kappa - closed).abs())
                    .max(rel(o.mt.variance, o.mt_closed_variance));
                let ml_closed = s.mean.min(1.0 / (2.0 * (2.0 * PI).sqrt() * beta));
                ml = ml.max(rel(o.ml.effective_mean, ml_closed));
            }
            let stats = vec![s; d];
            let prior = probes::resolve_prior(&stats, None, &k).unwrap();
            let clean = zzb::combined_bound(&stats, &prior, &k).unwrap();
            let modes = vec![(s.mean, s.variance); d];
            let noisy = noisechan::phase_diffusion_vector_bound(&modes, &vec![1e-9; d], &prior, &k).unwrap();
            recover = recover.max(rel(noisy.total_ml, clean.total_ml)).max(rel(noisy.total_mt, clean.total_mt));
        }
    }
    outcome(
        kappa < 1e-6 && ml < 1e-9 && recover < 1e-9,
        format!("κ* vs grid {kappa:.2e}; ML minimum vs closed form {ml:.2e}; β = 1e-9 vs noiseless {recover:.2e}"),
    )
}

fn c9_fig4() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (fig, label) in [(Figure::Fig4loss, "loss"), (Figure::Fig4diff, "diffusion")] {
        let axes = default_axes(fig);
        let t = figures::build(fig, &axes, &settings()).unwrap();
        let (d, ml, mt) = (t.column_f64("d").unwrap(), t.column_f64("ml").unwrap(), t.column_f64("mt").unwrap());
        for &dd in &figures::FIG4_DIMS {
            let idx: Vec<usize> = (0..d.len()).filter(|&i| d[i] == dd).collect();
            let ml_wins = idx.iter().filter(|&&i| ml[i] > mt[i]).count();
            let mt_wins = idx.iter().filter(|&&i| mt[i] > ml[i]).count();
            let max_q = idx.iter().map(|&i| ml[i] / mt[i]).fold(0.0, f64::max);
            let ok = ml_wins > 0 && mt_wins > 0;
            pass &= ok;
            parts.push(format!(
                "{label} d={dd}: ML>MT {ml_wins}, MT>ML {mt_wins}, max ML/MT {max_q:.3}{}",
                if ok { "" } else { " (no crossover)" }
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn c10_appendix() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7_654_321);
    let mut helstrom: f64 = 0.0;
    for i in 0..100 {
        let dim = 2 + i % 9;
        let a = oracle::random_pure_state(&mut rng, dim);
        let b = oracle::random_pure_state(&mut rng, dim);
        let f = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm().min(1.0);
        let t = HypothesisTest::new(0.5, 0.5, DensityMatrix::pure(&a).unwrap(), DensityMatrix::pure(&b).unwrap()).unwrap();
        helstrom = helstrom.max((oracle::helstrom_error(&t).unwrap() - zzb::pe_equally_likely(f).unwrap()).abs());
    }

    let cfg = QuadratureConfig::default();
    let spectra = [
        EnergySpectrum::new([(0.5, 0.0), (0.5, 3.0)]).unwrap(),
        EnergySpectrum::new([(0.1, 0.0), (0.6, 1.0), (0.3, 2.5)]).unwrap(),
        OptimalProbeSpec::new(3, 12).unwrap().state().unwrap().mode_number_spectrum(1).unwrap(),
    ];
    let mut variants: f64 = 0.0;
    for s in &spectra {
        for w in [0.3, 2.0, 15.0, 120.0] {
            let a = zzb::qzzb_mode_bound(|t| s.fidelity(t), w, &cfg).unwrap();
            let b = zzb::zzb_variant2_mode_bound(|t| s.fidelity(t), w, &cfg).unwrap();
            variants = variants.max(rel(b, a));
        }
    }

    let w = 7.5;
    let ceiling = w * w / 12.0;
    let f_zero = zzb::qzzb_mode_bound(|_| 0.0, w, &cfg).unwrap();
    let f_one = zzb::qzzb_mode_bound(|_| 1.0, w, &cfg).unwrap();
    let zero_ok = (f_zero - ceiling).abs() < 1e-10;

    outcome(
        helstrom < 1e-9 && variants < 1e-8 && zero_ok,
        format!(
            "Helstrom vs pure-state formula {helstrom:.2e}; variants rel {variants:.2e}; \
             F≡0 integral = {f_zero:.3e} vs W²/12 = {ceiling:.6} ({}); F≡1 integral = {f_one:.10} (|Δ| {:.1e})",
            if zero_ok { "ok" } else { "mismatch" },
            (f_one - ceiling).abs()
        ),
    )
}

fn corpus_cells() -> Vec<(Settings, Cell)> {
    let base = settings();
    let mut out = Vec::new();
    let cell = |d: usize, n: f64| Cell { d, n, w: None, eta: None, beta: None, r: None };
    for d in [1usize, 2, 3, 5, 8] {
        for n in [1.0, 2.0, 5.0, 10.0, 30.0, 50.0] {
            let families = [
                (Probe::Optimal, Strategy::Se),
                (Probe::Noon, Strategy::Ie),
                (Probe::Squeezed, Strategy::Se),
                (Probe::Squeezed, Strategy::Ie),
            ];
            for (probe, strategy) in families {
                if probe == Probe::Noon && (n as usize) < d {
                    continue;
                }
                let s = Settings { probe, strategy, ..base };
                out.push((s, cell(d, n)));
                for beta in [0.01, 0.3, 1.0, 2.0] {
                    out.push((Settings { noise: Noise::Diffusion, ..s }, Cell { beta: Some(beta), ..cell(d, n) }));
                }
                if probe != Probe::Squeezed {
                    for eta in [0.05, 0.5, 0.9, 1.0] {
                        out.push((Settings { noise: Noise::Loss, ..s }, Cell { eta: Some(eta), ..cell(d, n) }));
                    }
                }
            }
        }
    }
    out
}

fn c11_ceiling() -> Outcome {
    let k = k();
    let mut checked = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    let mut check = |what: String, values: Vec<f64>, ceiling: f64| {
        for v in values {
            checked += 1;
            worst = worst.max(v - ceiling);
            if !(v <= ceiling + 1e-9) {
                violations.push(format!("{what}: {v:e} > {ceiling:e}"));
            }
        }
    };
    for (s, c) in corpus_cells() {
        let row = eval::evaluate(&s, &c, &k).unwrap();
        check(format!("{s:?} {c:?}"), row.report.values().collect(), row.ceiling);
    }
    for d in 2..=10usize {
        for n in 1..=30 {
            let c = probes::se_ie_squeezed_comparison(d, n as f64, None, &k).unwrap();
            for rep in [&c.se, &c.ie] {
                let ceiling: f64 = rep.widths.iter().map(|w| w * w / 12.0).sum();
                check(format!("squeezed d={d} N={n}"), rep.values().collect(), ceiling);
            }
        }
    }
    for (fig, noise) in [(Figure::Fig4loss, Noise::Loss), (Figure::Fig4diff, Noise::Diffusion)] {
        let axes = default_axes(fig);
        let s = Settings { noise, ..settings() };
        for &d in &axes.d {
            for &n in axes.n.as_ref().unwrap() {
                for &x in axes.noise.as_ref().unwrap() {
                    let cell = Cell {
                        d: d as usize,
                        n,
                        w: None,
                        eta: (noise == Noise::Loss).then_some(x),
                        beta: (noise == Noise::Diffusion).then_some(x),
                        r: None,
                    };
                    let row = eval::evaluate(&s, &cell, &k).unwrap();
                    check(format!("{fig:?} {cell:?}"), row.report.values().collect(), row.ceiling);
                }
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{checked} values checked, max (value − ceiling) = {worst:.3e}{}",
            violations.first().map(|v| format!("; first violation {v}")).unwrap_or_default()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 constants", c1_constants),
        ("2 single-mode reduction", c2_single_mode),
        ("3 fig2 qualitative", c3_fig2),
        ("4 advantage limit", c4_advantage),
        ("5 squeezed-state machinery", c5_squeezed),
        ("6 fig3 SE/IE reversal near (2, 2)", c6_fig3),
        ("7 photon loss", c7_loss),
        ("8 phase diffusion", c8_diffusion),
        ("9 fig4 ML/MT crossover", c9_fig4),
        ("10 appendix machinery", c10_appendix),
        ("11 ceiling", c11_ceiling),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{tag} criterion {name} [{:.2} s]: {}", start.elapsed().as_secs_f64(), o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
