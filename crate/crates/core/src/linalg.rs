//! Small dense Hermitian eigensolver (cyclic Jacobi) and helpers built on it.
//!
//! Only used by the oracles, where matrices are at most a few hundred wide.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `A = V diag(λ) V†` of a Hermitian matrix, eigenvalues
/// ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(a: &CMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
        // symmetrise to remove round-off anti-Hermitian parts
        let mut m = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
        let mut v = CMatrix::identity(n, n);
        let scale = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);

        let mut converged = n < 2;
        for _ in 0..MAX_SWEEPS {
            if converged {
                break;
            }
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-15 * scale {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
        if !converged {
            return Err(Error::Convergence("Jacobi sweeps exhausted".into()));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
        let values = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)].re));
        let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        Ok(Self { values, vectors })
    }

    /// `V f(diag λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for k in 0..n {
            let w = f(self.values[k]);
            if w == 0.0 {
                continue;
            }
            let col = self.vectors.column(k);
            for i in 0..n {
                let vi = col[i] * w;
                for j in 0..n {
                    out[(i, j)] += vi * col[j].conj();
                }
            }
        }
        out
    }
}

fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let phase = apq / mag;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = diag(1, conj(phase)) · [[c, s], [-s, c]] on the (p, q) plane
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    let n = m.nrows();
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * jpp + akq * jqp;
        m[(k, q)] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        m[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

pub fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Eigen-decomposition of a real symmetric matrix with real eigenvectors.
pub fn symmetric_eigen(a: &RMatrix) -> Result<(DVector<f64>, RMatrix)> {
    let eig = HermitianEigen::new(&to_complex(a))?;
    let n = a.nrows();
    let mut vecs = RMatrix::zeros(n, n);
    for k in 0..n {
        // real input: each column is real up to one global phase
        let col = eig.vectors.column(k);
        let pivot = col
            .iter()
            .copied()
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = (pivot / pivot.norm()).conj();
        for i in 0..n {
            let z = col[i] * phase;
            if z.im.abs() > 1e-9 {
                return Err(Error::Internal("non-real eigenvector of a real matrix".into()));
            }
            vecs[(i, k)] = z.re;
        }
    }
    Ok((eig.values, vecs))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
