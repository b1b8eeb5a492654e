//! Lanczos ground states and Krylov propagation for Hermitian operators.
//!
//! Reductions are computed over fixed chunks and summed in order, so results
//! do not depend on the number of threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::chain::ChainHamiltonian;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

const CHUNK: usize = 4096;

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        CsrMatrix::dim(self)
    }
    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.matvec(x, y)
    }
}

impl LinearOperator for ChainHamiltonian {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }
    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.matrix.matvec(x, y)
    }
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    if a.len() <= CHUNK {
        return a.iter().zip(b).map(|(p, q)| p.conj() * q).sum();
    }
    let parts: Vec<Complex64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum())
        .collect();
    parts.into_iter().sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    if a.len() <= CHUNK {
        return a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    let parts: Vec<f64> = a.par_chunks(CHUNK).map(|x| x.iter().map(|z| z.norm_sqr()).sum()).collect();
    parts.into_iter().sum::<f64>().sqrt()
}

/// `y += alpha x`
pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.par_iter_mut().zip(x.par_iter()).with_min_len(CHUNK).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn scale(alpha: Complex64, x: &mut [Complex64]) {
    x.par_iter_mut().with_min_len(CHUNK).for_each(|xi| *xi *= alpha);
}

/// Deterministic start vector with no special symmetry.
pub fn reference_vector(dim: usize) -> Vec<Complex64> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut v: Vec<Complex64> =
        (0..dim).map(|i| Complex64::new(((i as f64 + 1.0) * phi).fract() - 0.5, 0.0)).collect();
    let n = norm(&v);
    scale(Complex64::new(1.0 / n, 0.0), &mut v);
    v
}

struct Krylov {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Norm of the residual after the last vector; zero on breakdown.
    tail: f64,
}

/// `m` Lanczos steps with full reorthogonalization from a normalized vector.
fn lanczos<A: LinearOperator + ?Sized>(op: &A, start: Vec<Complex64>, m: usize) -> Krylov {
    let n = op.dim();
    let mut basis = vec![start];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut tail = 0.0;
    for j in 0..m {
        op.apply_into(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let h = dot(v, &w);
                axpy(-h, v, &mut w);
            }
        }
        let b = norm(&w);
        let scale_ref = a.abs().max(beta.last().copied().unwrap_or(0.0)).max(1.0);
        if b <= 1e-13 * scale_ref || j + 1 == m.min(n) {
            tail = if b <= 1e-13 * scale_ref { 0.0 } else { b };
            break;
        }
        beta.push(b);
        let mut next = w.clone();
        scale(Complex64::new(1.0 / b, 0.0), &mut next);
        basis.push(next);
    }
    basis.truncate(alpha.len());
    Krylov { basis, alpha, beta, tail }
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.min(j)]
        } else {
            0.0
        }
    })
}

fn combine(basis: &[Vec<Complex64>], coef: &[Complex64]) -> Vec<Complex64> {
    let n = basis[0].len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (v, &c) in basis.iter().zip(coef) {
        axpy(c, v, &mut out);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub krylov_dim: usize,
    pub tol: f64,
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { krylov_dim: 40, tol: 1e-10, max_restarts: 400 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Lowest eigenpair by thick-free restarted Lanczos (restart from the Ritz vector).
pub fn lowest_eigenpair<A: LinearOperator + ?Sized>(
    op: &A,
    start: Vec<Complex64>,
    opts: &LanczosOptions,
) -> Result<EigenPair> {
    let n = op.dim();
    if start.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: start.len() });
    }
    let mut x = start;
    let nx = norm(&x);
    if !(nx > 0.0) {
        return Err(Error::domain("start vector is zero"));
    }
    scale(Complex64::new(1.0 / nx, 0.0), &mut x);
    let mut history = Vec::new();
    let mut hx = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..opts.max_restarts {
        let k = lanczos(op, x, opts.krylov_dim.max(2));
        let t = tridiagonal(&k.alpha, &k.beta);
        let eig = t.symmetric_eigen();
        let (imin, _) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        let y: Vec<Complex64> = eig.eigenvectors.column(imin).iter().map(|&r| Complex64::new(r, 0.0)).collect();
        x = combine(&k.basis, &y);
        let nx = norm(&x);
        scale(Complex64::new(1.0 / nx, 0.0), &mut x);
        op.apply_into(&x, &mut hx);
        let theta = dot(&x, &hx).re;
        let mut r = hx.clone();
        axpy(Complex64::new(-theta, 0.0), &x, &mut r);
        let res = norm(&r);
        history.push(res);
        if res <= opts.tol * theta.abs().max(1.0) {
            return Ok(EigenPair { value: theta, vector: x, residual: res, history });
        }
    }
    let residual = history.last().copied().unwrap_or(f64::NAN);
    Err(Error::NonConvergence { stage: "lanczos ground state", iterations: history.len(), residual, history })
}

#[derive(Debug, Clone, Copy)]
pub struct PropagationOptions {
    pub krylov_dim: usize,
    /// Bound on the a-posteriori error estimate of each step.
    pub step_tol: f64,
    pub max_dt: f64,
    pub min_dt: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { krylov_dim: 30, step_tol: 1e-10, max_dt: 1.0, min_dt: 1e-10 }
    }
}

/// One step `exp(-i H dt) psi`, with the a-posteriori error estimate
/// `beta_m |e_m^T exp(-i T dt) e_1| |psi|`.
pub fn expm_step<A: LinearOperator + ?Sized>(op: &A, psi: &[Complex64], dt: f64, m: usize) -> (Vec<Complex64>, f64) {
    let beta0 = norm(psi);
    if beta0 == 0.0 {
        return (psi.to_vec(), 0.0);
    }
    let mut start = psi.to_vec();
    scale(Complex64::new(1.0 / beta0, 0.0), &mut start);
    let k = lanczos(op, start, m);
    let t = tridiagonal(&k.alpha, &k.beta);
    let eig = t.symmetric_eigen();
    let dimk = k.alpha.len();
    let q = &eig.eigenvectors;
    let phases = DVector::from_fn(dimk, |i, _| {
        let lam = eig.eigenvalues[i];
        Complex64::from_polar(1.0, -lam * dt) * q[(0, i)]
    });
    let coef: Vec<Complex64> = (0..dimk)
        .map(|r| (0..dimk).map(|i| q[(r, i)] * phases[i]).sum::<Complex64>() * beta0)
        .collect();
    let err = k.tail * coef[dimk - 1].norm();
    (combine(&k.basis, &coef), err)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PropagationStats {
    pub steps: usize,
    pub rejected: usize,
    pub max_step_error: f64,
}

/// `exp(-i H t) psi` for either sign of `t`, with adaptive step halving.
pub fn propagate<A: LinearOperator + ?Sized>(
    op: &A,
    psi: &[Complex64],
    t: f64,
    opts: &PropagationOptions,
) -> Result<(Vec<Complex64>, PropagationStats)> {
    if !t.is_finite() {
        return Err(Error::domain("propagation time must be finite"));
    }
    let mut state = psi.to_vec();
    let mut stats = PropagationStats::default();
    let sign = t.signum();
    let mut done = 0.0;
    let total = t.abs();
    let mut dt = opts.max_dt.min(total);
    while total - done > 1e-14 * total.max(1.0) {
        let h = dt.min(total - done);
        let (next, err) = expm_step(op, &state, sign * h, opts.krylov_dim);
        if err > opts.step_tol {
            stats.rejected += 1;
            dt = 0.5 * h;
            if dt < opts.min_dt {
                return Err(Error::StepUnderflow { t: sign * done, dt });
            }
            continue;
        }
        state = next;
        done += h;
        stats.steps += 1;
        stats.max_step_error = stats.max_step_error.max(err);
        if err < 0.01 * opts.step_tol {
            dt = (1.5 * h).min(opts.max_dt);
        }
    }
    Ok((state, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::heisenberg_proxy;

    #[test]
    fn ground_state_of_small_ring_matches_dense() {
        let h = heisenberg_proxy(8, true, Some(4)).unwrap();
        let dense = h.dense_spectrum();
        let gs = lowest_eigenpair(&h, reference_vector(h.dim()), &LanczosOptions::default()).unwrap();
        assert!((gs.value - dense[0]).abs() < 1e-10);
    }

    #[test]
    fn propagation_matches_dense_exponential() {
        let h = heisenberg_proxy(6, false, Some(3)).unwrap();
        let psi = reference_vector(h.dim());
        let t = 2.7;
        let (out, stats) = propagate(&h, &psi, t, &PropagationOptions::default()).unwrap();
        assert!(stats.max_step_error <= 1e-10);
        let m = h.matrix.to_dense();
        let eig = m.clone().symmetric_eigen();
        let v = &eig.eigenvectors;
        let p = DVector::from_vec(psi.clone());
        let coeffs = v.adjoint() * p;
        let evolved = v * DVector::from_fn(coeffs.len(), |i, _| coeffs[i] * Complex64::from_polar(1.0, -eig.eigenvalues[i] * t));
        let diff: f64 = out.iter().zip(evolved.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
        let (back, _) = propagate(&h, &out, -t, &PropagationOptions::default()).unwrap();
        let diff: f64 = back.iter().zip(&psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9);
    }

    #[test]
    fn tiny_step_budget_underflows() {
        let h = heisenberg_proxy(8, true, Some(4)).unwrap();
        let opts = PropagationOptions { krylov_dim: 3, step_tol: 1e-15, max_dt: 1.0, min_dt: 1e-3 };
        let err = propagate(&h, &reference_vector(h.dim()), 1.0, &opts).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }));
    }
}
