//! Brute-force reference computations used to certify the closed forms.
//!
//! Nothing here is on a hot path; every routine favours transparency over
//! speed.

use std::collections::HashMap;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::linalg::{symmetric_eigen, CMatrix, HermitianEigen, RMatrix};
use crate::probes::shift_power;

const DENSITY_TOL: f64 = 1e-10;
const TRACE_DRIFT_TOL: f64 = 1e-8;
/// Tail mass allowed beyond `cutoff − 2` in a truncated simulation.
pub const TAIL_TOL: f64 = 1e-10;
/// Starting per-mode cutoff of [`truncated_squeeze_sim_auto`].
pub const DEFAULT_CUTOFF: usize = 24;
const MAX_FOCK_DIM: usize = 1 << 22;
const QUAD_MAX_DEPTH: u32 = 40;
const EIGEN_FLOOR: f64 = 1e-13;

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(domain("density matrix must be square and non-empty"));
        }
        let herm = crate::linalg::max_abs_diff(&m, &m.adjoint());
        if herm > DENSITY_TOL {
            return Err(domain(format!("not Hermitian: deviation {herm:e}")));
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(domain(format!("trace {tr} ≠ 1")));
        }
        let min = HermitianEigen::new(&m)?.values.min();
        if min < -DENSITY_TOL {
            return Err(domain(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { m })
    }

    /// `|ψ⟩⟨ψ|` after normalising `ψ`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(domain("zero state vector"));
        }
        let v = v / Complex64::new(norm, 0.0);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(HermitianEigen::new(&self.m)?.values.iter().copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisTest {
    pub p0: f64,
    pub p1: f64,
    pub rho0: DensityMatrix,
    pub rho1: DensityMatrix,
}

impl HypothesisTest {
    pub fn new(p0: f64, p1: f64, rho0: DensityMatrix, rho1: DensityMatrix) -> Result<Self> {
        if p0 < 0.0 || p1 < 0.0 || (p0 + p1 - 1.0).abs() > 1e-12 {
            return Err(domain(format!("priors ({p0}, {p1}) are not a distribution")));
        }
        if rho0.dim() != rho1.dim() {
            return Err(domain(format!(
                "hypotheses act on dimensions {} and {}",
                rho0.dim(),
                rho1.dim()
            )));
        }
        Ok(Self { p0, p1, rho0, rho1 })
    }
}

/// `1/2 − ‖p₁ρ₁ − p₀ρ₀‖₁ / 2`.
pub fn helstrom_error(test: &HypothesisTest) -> Result<f64> {
    let gamma = test.rho1.matrix() * Complex64::new(test.p1, 0.0)
        - test.rho0.matrix() * Complex64::new(test.p0, 0.0);
    let trace_norm: f64 = HermitianEigen::new(&gamma)?.values.iter().map(|g| g.abs()).sum();
    Ok((0.5 - 0.5 * trace_norm).clamp(0.0, test.p0.min(test.p1)))
}

/// Square root of eigenvalues, with those below round-off level of the
/// largest set to zero (their square roots would otherwise be ~1e-8 noise).
fn psd_sqrt(x: f64, largest: f64) -> f64 {
    if x <= EIGEN_FLOOR * largest {
        0.0
    } else {
        x.sqrt()
    }
}

/// `tr √(√ρ σ √ρ)`.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(domain("fidelity needs equal dimensions"));
    }
    let eig = HermitianEigen::new(rho.matrix())?;
    let top = eig.values.max();
    let sqrt_rho = eig.map(|x| psd_sqrt(x, top));
    let inner = &sqrt_rho * sigma.matrix() * &sqrt_rho;
    let vals = HermitianEigen::new(&inner)?.values;
    let top = vals.max();
    let f: f64 = vals.iter().map(|&x| psd_sqrt(x, top)).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Scaling-and-squaring Taylor exponential of a real square matrix.
pub fn dense_expm(m: &RMatrix) -> Result<RMatrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(domain("matrix has non-finite entries"));
    }
    let norm1 = (0..n).map(|j| m.column(j).abs().sum()).fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a = m / 2f64.powi(squarings);
    let mut sum = RMatrix::identity(n, n);
    let mut term = RMatrix::identity(n, n);
    for j in 1..=60 {
        term = &term * &a / j as f64;
        sum += &term;
        if term.abs().max() <= 1e-18 * sum.abs().max() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    if sum.iter().any(|x| !x.is_finite()) {
        return Err(Error::Range("matrix exponential overflowed".into()));
    }
    Ok(sum)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_quadrature(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) {
        return Err(domain(format!("need a < b, got [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = simpson_step(&f, a, b, fa, fm, fb, whole, tol, QUAD_MAX_DEPTH)?;
    if !v.is_finite() {
        return Err(domain("integrand is not finite"));
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Convergence(format!(
            "adaptive Simpson hit depth limit on [{a}, {b}]"
        )));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Haar-random pure state of dimension `dim`.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    let raw: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|z| z / norm).collect()
}

/// Kraus matrix `π_l` on one mode truncated at `n_max`:
/// `⟨n−l|π_l|n⟩ = √(C(n,l)(1−η)^l η^{n−l}) e^{ix(n − l − δl)}`, `δ = σ − 1`.
fn loss_kraus(n_max: usize, l: usize, eta: f64, x: f64, sigma: f64) -> CMatrix {
    let dim = n_max + 1;
    let delta = sigma - 1.0;
    let mut k = CMatrix::zeros(dim, dim);
    for n in l..dim {
        let mut choose = 1.0;
        for j in 0..l {
            choose *= (n - j) as f64 / (j + 1) as f64;
        }
        let w = choose * (1.0 - eta).powi(l as i32) * eta.powi((n - l) as i32);
        let phase = x * ((n - l) as f64 - delta * l as f64);
        k[(n - l, n)] = Complex64::from_polar(w.sqrt(), phase);
    }
    k
}

/// Photon loss with the variational Kraus set on a single truncated mode.
pub fn loss_channel_apply(
    rho: &DensityMatrix,
    eta: f64,
    x: f64,
    sigma: f64,
) -> Result<DensityMatrix> {
    loss_channel_apply_on_mode(rho, &[rho.dim()], 0, eta, x, sigma)
}

/// As [`loss_channel_apply`], acting on `mode` of a multimode state whose
/// per-mode dimensions are `dims` (last mode fastest).
pub fn loss_channel_apply_on_mode(
    rho: &DensityMatrix,
    dims: &[usize],
    mode: usize,
    eta: f64,
    x: f64,
    sigma: f64,
) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain(format!("transmissivity {eta} outside [0, 1]")));
    }
    if mode >= dims.len() {
        return Err(Error::Index { index: mode, len: dims.len() });
    }
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::DimensionMismatch { expected: total, got: rho.dim() });
    }
    let inner: usize = dims[mode + 1..].iter().product();
    let outer: usize = dims[..mode].iter().product();
    let local = dims[mode];

    let mut out = CMatrix::zeros(total, total);
    for l in 0..local {
        let k = loss_kraus(local - 1, l, eta, x, sigma);
        let mut full = CMatrix::zeros(total, total);
        for o in 0..outer {
            for i in 0..inner {
                for (r, c) in (0..local).flat_map(|r| (0..local).map(move |c| (r, c))) {
                    let v = k[(r, c)];
                    if v != Complex64::new(0.0, 0.0) {
                        full[((o * local + r) * inner + i, (o * local + c) * inner + i)] = v;
                    }
                }
            }
        }
        out += &full * rho.matrix() * full.adjoint();
    }
    let tr = out.trace().re;
    if (tr - 1.0).abs() > TRACE_DRIFT_TOL {
        return Err(Error::Internal(format!("loss channel trace drifted to {tr}")));
    }
    // restore exact Hermiticity lost to round-off
    let out = (&out + out.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::new(out)
}

/// Photon-number moments per mode from a truncated simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeSim {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// Cutoff used for each simulated block.
    pub cutoffs: Vec<usize>,
    /// Total probability at occupation ≥ cutoff − 2 in any mode.
    pub tail: f64,
}

/// Real sparse matrix in coordinate form.
struct Coo {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Coo {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(r, c, v) in &self.entries {
            out[r] += v * x[c];
        }
    }

    fn norm1(&self) -> f64 {
        let mut cols = vec![0.0; self.dim];
        for &(_, c, v) in &self.entries {
            cols[c] += v.abs();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    /// `exp(self)·v` by Taylor steps of norm at most 4.
    fn expm_apply(&self, v: &[f64]) -> Vec<f64> {
        let steps = (self.norm1() / 4.0).ceil().max(1.0) as usize;
        let h = 1.0 / steps as f64;
        let mut acc = v.to_vec();
        let mut term = vec![0.0; self.dim];
        let mut next = vec![0.0; self.dim];
        for _ in 0..steps {
            term.copy_from_slice(&acc);
            for j in 1..200 {
                self.apply(&term, &mut next);
                let scale = h / j as f64;
                let mut big = 0.0f64;
                for (t, n) in term.iter_mut().zip(&next) {
                    *t = n * scale;
                    big = big.max(t.abs());
                }
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a += t;
                }
                if big < 1e-18 {
                    break;
                }
            }
        }
        acc
    }
}

/// Truncated Fock space of `modes` modes with a common cutoff; basis index
/// `Σ n_j cutoff^j`.
struct FockBlock {
    modes: usize,
    cutoff: usize,
}

impl FockBlock {
    fn dim(&self) -> usize {
        self.cutoff.pow(self.modes as u32)
    }

    fn stride(&self, m: usize) -> usize {
        self.cutoff.pow(m as u32)
    }

    fn occ(&self, idx: usize, m: usize) -> usize {
        (idx / self.stride(m)) % self.cutoff
    }

    /// `a_m` (`dag = false`) or `a_m†` applied to basis `idx`.
    fn ladder(&self, idx: usize, m: usize, dag: bool) -> Option<(usize, f64)> {
        let n = self.occ(idx, m);
        if dag {
            (n + 1 < self.cutoff).then(|| (idx + self.stride(m), ((n + 1) as f64).sqrt()))
        } else {
            (n > 0).then(|| (idx - self.stride(m), (n as f64).sqrt()))
        }
    }

    fn word(&self, idx: usize, ops: &[(usize, bool)]) -> Option<(usize, f64)> {
        let mut cur = (idx, 1.0);
        for &(m, dag) in ops.iter().rev() {
            let (j, w) = self.ladder(cur.0, m, dag)?;
            cur = (j, cur.1 * w);
        }
        Some(cur)
    }

    /// Real matrix of `i r Σ_{mn} B_mn Q_m P_n`, with the diagonal terms
    /// symmetrised (their constant parts cancel because `tr B = 0` overall).
    fn generator(&self, b: &RMatrix, r: f64) -> Coo {
        let mut entries = Vec::new();
        for idx in 0..self.dim() {
            for m in 0..self.modes {
                for n in 0..self.modes {
                    let c = r * b[(m, n)];
                    if c == 0.0 {
                        continue;
                    }
                    let terms: [(&[(usize, bool)], f64); 4] = if m == n {
                        [
                            (&[(m, false), (m, false)], 0.5),
                            (&[(m, true), (m, true)], -0.5),
                            (&[], 0.0),
                            (&[], 0.0),
                        ]
                    } else {
                        [
                            (&[(m, false), (n, false)], 0.5),
                            (&[(m, false), (n, true)], -0.5),
                            (&[(m, true), (n, false)], 0.5),
                            (&[(m, true), (n, true)], -0.5),
                        ]
                    };
                    for (word, w) in terms {
                        if w == 0.0 {
                            continue;
                        }
                        if let Some((row, amp)) = self.word(idx, word) {
                            entries.push((row, idx, c * w * amp));
                        }
                    }
                }
            }
        }
        Coo { dim: self.dim(), entries }
    }

    fn tail(&self, psi: &[f64]) -> f64 {
        let edge = self.cutoff.saturating_sub(2);
        psi.iter()
            .enumerate()
            .filter(|(idx, _)| (0..self.modes).any(|m| self.occ(*idx, m) >= edge))
            .map(|(_, a)| a * a)
            .sum()
    }

    fn expect(&self, psi: &[f64], ops: &[(usize, bool)]) -> f64 {
        psi.iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .filter_map(|(idx, a)| self.word(idx, ops).map(|(j, w)| psi[j] * w * a))
            .sum()
    }
}

/// One independently evolving group of normal modes.
struct SimBlock {
    modes: Vec<usize>,
    b: RMatrix,
}

struct SolvedBlock {
    fock: FockBlock,
    psi: Vec<f64>,
    tail: f64,
}

fn solve_block(block: &SimBlock, r: f64, cutoff: usize) -> Result<SolvedBlock> {
    let fock = FockBlock { modes: block.modes.len(), cutoff };
    let dim = cutoff
        .checked_pow(block.modes.len() as u32)
        .filter(|&d| d <= MAX_FOCK_DIM)
        .ok_or(Error::Truncation { tail: f64::NAN, cutoff })?;
    let mut vac = vec![0.0; dim];
    vac[0] = 1.0;
    let psi = fock.generator(&block.b, r).expm_apply(&vac);
    let tail = fock.tail(&psi);
    Ok(SolvedBlock { fock, psi, tail })
}

/// Splits the cyclic generator into decoupled normal-mode blocks.
/// Returns the orthogonal `O` (rows = normal modes) and the blocks of
/// `O A Oᵀ`.
fn normal_mode_blocks(dim: usize) -> Result<(RMatrix, Vec<SimBlock>)> {
    let a = shift_power(dim, 1);
    let (vals, vecs) = symmetric_eigen(&(&a + a.transpose()))?;
    let o = vecs.transpose();
    let b = &o * &a * o.transpose();

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..dim {
        match groups.last_mut() {
            Some(g) if (vals[i] - vals[g[0]]).abs() < 1e-8 => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let mut owner = vec![0; dim];
    for (gi, g) in groups.iter().enumerate() {
        for &m in g {
            owner[m] = gi;
        }
    }
    for i in 0..dim {
        for j in 0..dim {
            if owner[i] != owner[j] && b[(i, j)].abs() > 1e-10 {
                return Err(Error::Internal(format!(
                    "normal modes {i} and {j} couple with {:e}",
                    b[(i, j)]
                )));
            }
        }
    }
    let blocks = groups
        .into_iter()
        .map(|g| {
            let sub = RMatrix::from_fn(g.len(), g.len(), |x, y| b[(g[x], g[y])]);
            SimBlock { modes: g, b: sub }
        })
        .collect();
    Ok((o, blocks))
}

/// Moments of `n_k = a_k† a_k` with `a_k = Σ_m O_mk b_m` on a product of
/// block states.
fn mode_moments(o: &RMatrix, blocks: &[SimBlock], solved: &[SolvedBlock]) -> (Vec<f64>, Vec<f64>) {
    let dim = o.nrows();
    let mut owner = vec![(0usize, 0usize); dim];
    for (bi, blk) in blocks.iter().enumerate() {
        for (li, &m) in blk.modes.iter().enumerate() {
            owner[m] = (bi, li);
        }
    }
    let mut cache: HashMap<(usize, Vec<(usize, bool)>), f64> = HashMap::new();
    let mut expect = |ops: &[(usize, bool)]| -> f64 {
        let mut per_block: Vec<Vec<(usize, bool)>> = vec![Vec::new(); blocks.len()];
        for &(m, dag) in ops {
            let (bi, li) = owner[m];
            per_block[bi].push((li, dag));
        }
        let mut value = 1.0;
        for (bi, word) in per_block.into_iter().enumerate() {
            if word.is_empty() {
                continue;
            }
            let v = *cache
                .entry((bi, word.clone()))
                .or_insert_with(|| solved[bi].fock.expect(&solved[bi].psi, &word));
            value *= v;
            if value == 0.0 {
                break;
            }
        }
        value
    };

    let mut means = Vec::with_capacity(dim);
    let mut variances = Vec::with_capacity(dim);
    for k in 0..dim {
        let w: Vec<f64> = (0..dim).map(|m| o[(m, k)]).collect();
        let mut first = 0.0;
        let mut second = 0.0;
        for m1 in 0..dim {
            for m2 in 0..dim {
                let c12 = w[m1] * w[m2];
                if c12 == 0.0 {
                    continue;
                }
                first += c12 * expect(&[(m1, true), (m2, false)]);
                for m3 in 0..dim {
                    for m4 in 0..dim {
                        let c = c12 * w[m3] * w[m4];
                        if c == 0.0 {
                            continue;
                        }
                        second += c * expect(&[(m1, true), (m2, false), (m3, true), (m4, false)]);
                    }
                }
            }
        }
        means.push(first);
        variances.push((second - first * first).max(0.0));
    }
    (means, variances)
}

fn check_squeeze_args(dim: usize, r: f64) -> Result<()> {
    if dim < 2 {
        return Err(domain("squeezing simulation needs D ≥ 2"));
    }
    if !r.is_finite() || r < 0.0 {
        return Err(domain(format!("squeezing strength must be ≥ 0, got {r}")));
    }
    Ok(())
}

fn finish(o: &RMatrix, blocks: &[SimBlock], solved: Vec<SolvedBlock>) -> Result<SqueezeSim> {
    let tail: f64 = solved.iter().map(|s| s.tail).sum();
    if tail >= TAIL_TOL {
        let cutoff = solved.iter().map(|s| s.fock.cutoff).min().unwrap_or(0);
        return Err(Error::Truncation { tail, cutoff });
    }
    let (means, variances) = mode_moments(o, blocks, &solved);
    Ok(SqueezeSim {
        means,
        variances,
        cutoffs: solved.iter().map(|s| s.fock.cutoff).collect(),
        tail,
    })
}

/// Simulates `exp(i r QᵀAP)|0⟩` in a truncated Fock space with per-mode
/// photon cap `cutoff`, one block of decoupled normal modes at a time, and
/// returns per-mode photon-number moments.
///
/// Fails with [`Error::Truncation`] if the tail mass at occupation
/// ≥ `cutoff − 2` reaches [`TAIL_TOL`].
pub fn truncated_squeeze_sim(dim: usize, r: f64, cutoff: usize) -> Result<SqueezeSim> {
    check_squeeze_args(dim, r)?;
    let (o, blocks) = normal_mode_blocks(dim)?;
    let solved = blocks
        .iter()
        .map(|b| solve_block(b, r, cutoff))
        .collect::<Result<Vec<_>>>()?;
    finish(&o, &blocks, solved)
}

/// [`truncated_squeeze_sim`] starting from [`DEFAULT_CUTOFF`] and doubling
/// each block's cutoff until its tail mass is below the tolerance.
pub fn truncated_squeeze_sim_auto(dim: usize, r: f64) -> Result<SqueezeSim> {
    check_squeeze_args(dim, r)?;
    let (o, blocks) = normal_mode_blocks(dim)?;
    let share = TAIL_TOL / (2.0 * blocks.len() as f64);
    let solved = blocks
        .iter()
        .map(|b| {
            let mut cutoff = DEFAULT_CUTOFF;
            loop {
                let s = solve_block(b, r, cutoff)?;
                if s.tail < share {
                    return Ok(s);
                }
                cutoff *= 2;
            }
        })
        .collect::<Result<Vec<_>>>()?;
    finish(&o, &blocks, solved)
}

/// The same evolution on the full `D`-mode truncated space without any
/// normal-mode decomposition. Only feasible for small `D` and `r`.
pub fn direct_squeeze_sim(dim: usize, r: f64, cutoff: usize) -> Result<SqueezeSim> {
    check_squeeze_args(dim, r)?;
    let block = SimBlock {
        modes: (0..dim).collect(),
        b: shift_power(dim, 1),
    };
    let o = RMatrix::identity(dim, dim);
    let solved = vec![solve_block(&block, r, cutoff)?];
    finish(&o, std::slice::from_ref(&block), solved)
}
