//! Datasets behind the published figures.

use clap::ValueEnum;
use qzzb_core::probes;
use qzzb_core::SpeedLimitConstants;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{linspace, Cell, FileConfig, Noise, Probe, Settings, Strategy};
use crate::error::{usage, CliResult};
use crate::eval;
use crate::table::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig4loss,
    Fig4diff,
}

/// Axis values of a figure after applying user overrides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureAxes {
    pub d: Vec<f64>,
    /// `None` for fig2 means `N = 10 d`.
    pub n: Option<Vec<f64>>,
    pub noise: Option<Vec<f64>>,
    pub w: Option<f64>,
}

pub const FIG2_PHOTONS_PER_PARAMETER: usize = 10;
pub const FIG4_DIMS: [f64; 4] = [2.0, 3.0, 5.0, 8.0];
pub const FIG4_NOISE_POINTS: usize = 20;

fn ints(lo: usize, hi: usize) -> Vec<f64> {
    (lo..=hi).map(|x| x as f64).collect()
}

impl FigureAxes {
    pub fn resolve(fig: Figure, file: &FileConfig) -> CliResult<Self> {
        let get = |spec: &Option<crate::config::RangeSpec>, name: &str| {
            spec.as_ref().map(|s| s.values(name)).transpose()
        };
        let d = get(&file.d, "d")?;
        let n = get(&file.n, "n")?;
        let w = match get(&file.w, "w")? {
            None => None,
            Some(v) if v.len() == 1 && v[0] > 0.0 => Some(v[0]),
            Some(_) => return Err(usage("figures take a single positive --w")),
        };
        let axes = match fig {
            Figure::Fig2 => FigureAxes { d: d.unwrap_or_else(|| ints(2, 100)), n, noise: None, w },
            Figure::Fig3a | Figure::Fig3b | Figure::Fig3c => FigureAxes {
                d: d.unwrap_or_else(|| ints(2, 10)),
                n: Some(n.unwrap_or_else(|| ints(1, 30))),
                noise: None,
                w,
            },
            Figure::Fig4loss => FigureAxes {
                d: d.unwrap_or_else(|| FIG4_DIMS.to_vec()),
                n: Some(n.unwrap_or_else(|| ints(2, 50))),
                noise: Some(get(&file.eta, "eta")?.unwrap_or_else(|| linspace(0.05, 1.0, FIG4_NOISE_POINTS))),
                w,
            },
            Figure::Fig4diff => FigureAxes {
                d: d.unwrap_or_else(|| FIG4_DIMS.to_vec()),
                n: Some(n.unwrap_or_else(|| ints(2, 50))),
                noise: Some(get(&file.beta, "beta")?.unwrap_or_else(|| linspace(0.01, 2.0, FIG4_NOISE_POINTS))),
                w,
            },
        };
        if axes.d.iter().any(|&d| d < 1.0 || d.fract() != 0.0) {
            return Err(usage("--d values must be positive integers"));
        }
        if matches!(fig, Figure::Fig3a | Figure::Fig3b | Figure::Fig3c) && axes.d.iter().any(|&d| d < 2.0) {
            return Err(usage("fig3 needs d ≥ 2"));
        }
        if let Some(n) = &axes.n {
            if n.iter().any(|&x| !(x > 0.0)) {
                return Err(usage("--n values must be positive"));
            }
            if fig == Figure::Fig2 && n.len() != 1 {
                return Err(usage("fig2 takes a single --n (default N = 10 d)"));
            }
        }
        Ok(axes)
    }
}

pub fn build(fig: Figure, axes: &FigureAxes, settings: &Settings) -> CliResult<Table> {
    let k = settings.constants()?;
    match fig {
        Figure::Fig2 => fig2(axes, &k),
        Figure::Fig3a | Figure::Fig3b | Figure::Fig3c => fig3(fig, axes, &k),
        Figure::Fig4loss => fig4(Noise::Loss, axes, settings),
        Figure::Fig4diff => fig4(Noise::Diffusion, axes, settings),
    }
}

/// SE (optimal probe) and IE (NOON) closed forms scaled by `N²/d³`.
pub fn fig2(axes: &FigureAxes, k: &SpeedLimitConstants) -> CliResult<Table> {
    let mut t = Table::new(["d", "n", "d1_se", "d2_se", "d1_ie", "d2_ie", "advantage_ratio", "ie_n_per_mode"]);
    for &df in &axes.d {
        let d = df as usize;
        let n_total = match &axes.n {
            Some(n) => n[0],
            None => (FIG2_PHOTONS_PER_PARAMETER * d) as f64,
        };
        if n_total.fract() != 0.0 {
            return Err(usage("fig2 needs an integer photon number"));
        }
        let n = n_total as u32;
        let (se_ml, se_mt) = probes::se_bounds_optimal(d, n, k)?;
        let ie = probes::ie_bounds_noon(d, n, k)?;
        let scale = n_total * n_total / df.powi(3);
        t.push(vec![
            d.into(),
            Value::Num(n_total),
            Value::Num(se_ml * scale),
            Value::Num(se_mt * scale),
            Value::Num(ie.ml * scale),
            Value::Num(ie.mt * scale),
            Value::Num(probes::advantage_ratio(d, k)?.ratio),
            Value::Int(ie.n_per_mode as i64),
        ]);
    }
    Ok(t)
}

fn grid(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

/// SE `(d+1)`-mode against IE two-mode squeezed vacua over `(d, N)`.
pub fn fig3(fig: Figure, axes: &FigureAxes, k: &SpeedLimitConstants) -> CliResult<Table> {
    let n = axes.n.as_deref().unwrap_or_default();
    let cells = grid(&axes.d, n);
    let results = cells
        .par_iter()
        .map(|&(d, n)| probes::se_ie_squeezed_comparison(d as usize, n, axes.w, k))
        .collect::<Result<Vec<_>, _>>()?;

    let mut t = match fig {
        Figure::Fig3c => Table::new(["d", "n", "se_combined", "ie_combined", "ie_over_se", "se_superior"]),
        _ => Table::new(["d", "n", "r", "mode_mean", "mode_variance", "ml", "mt", "combined"]),
    };
    for (&(d, n), c) in cells.iter().zip(&results) {
        let (rep, r, st) = match fig {
            Figure::Fig3a => (&c.se, c.r_se, c.se_stats),
            _ => (&c.ie, c.r_ie, c.ie_stats),
        };
        let row = match fig {
            Figure::Fig3c => vec![
                Value::Num(d),
                Value::Num(n),
                Value::Num(c.se.total_combined),
                Value::Num(c.ie.total_combined),
                Value::Num(c.ie.total_combined / c.se.total_combined),
                Value::Bool(c.se.total_combined < c.ie.total_combined),
            ],
            _ => vec![
                Value::Num(d),
                Value::Num(n),
                Value::Num(r),
                Value::Num(st.mean),
                Value::Num(st.variance),
                Value::Num(rep.total_ml),
                Value::Num(rep.total_mt),
                Value::Num(rep.total_combined),
            ],
        };
        t.push(row);
    }
    Ok(t)
}

/// Noisy ML and MT totals for the optimal probe over `(d, N, noise)`.
pub fn fig4(noise: Noise, axes: &FigureAxes, base: &Settings) -> CliResult<Table> {
    let settings = Settings { probe: Probe::Optimal, strategy: Strategy::Se, noise, ..*base };
    let k = settings.constants()?;
    let n = axes.n.as_deref().unwrap_or_default();
    let strengths = axes.noise.as_deref().unwrap_or_default();
    let cells: Vec<Cell> = axes
        .d
        .iter()
        .flat_map(|&d| n.iter().flat_map(move |&n| strengths.iter().map(move |&s| (d, n, s))))
        .map(|(d, n, s)| Cell {
            d: d as usize,
            n,
            w: axes.w,
            eta: (noise == Noise::Loss).then_some(s),
            beta: (noise == Noise::Diffusion).then_some(s),
            r: None,
        })
        .collect();
    let rows = cells
        .par_iter()
        .map(|c| eval::evaluate(&settings, c, &k))
        .collect::<CliResult<Vec<_>>>()?;

    let axis = if noise == Noise::Loss { "eta" } else { "beta" };
    let mut t = Table::new(["d", "n", axis, "ml", "mt", "combined", "ml_gt_mt", "regime_warning"]);
    for (c, r) in cells.iter().zip(&rows) {
        let rep = &r.report;
        t.push(vec![
            c.d.into(),
            Value::Num(c.n),
            Value::from(c.eta.or(c.beta)),
            Value::Num(rep.total_ml),
            Value::Num(rep.total_mt),
            Value::Num(rep.total_combined),
            Value::Bool(rep.total_ml > rep.total_mt),
            Value::Bool(noise == Noise::Diffusion && !rep.warnings.is_empty()),
        ]);
    }
    Ok(t)
}
