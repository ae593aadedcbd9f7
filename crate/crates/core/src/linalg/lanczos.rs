//! Lanczos iteration for the smallest eigenvalue of a symmetric operator on
//! the orthogonal complement of a known null vector.
//!
//! Full reorthogonalisation is used throughout: the Krylov dimension stays
//! small (a few hundred) and it keeps the deflated direction out exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, norm, symmetric_eigen, CsrMatrix};
use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions<T> {
    /// Target for the true residual `‖Av - θv‖`.
    pub tolerance: T,
    /// Krylov dimension before an explicit restart.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl<T: Real> Default for LanczosOptions<T> {
    fn default() -> Self {
        Self { tolerance: T::lit(1e-8), krylov_dim: 240, max_restarts: 40, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair<T> {
    pub value: T,
    /// Unit vector orthogonal to the deflated direction.
    pub vector: Vec<T>,
    pub residual: T,
    pub matvecs: usize,
}

/// Smallest eigenpair of `a` restricted to `deflate^⊥` (`deflate` unit norm).
pub fn lanczos_smallest<T: Real>(a: &CsrMatrix<T>, deflate: &[T], opts: &LanczosOptions<T>) -> Result<RitzPair<T>> {
    let n = a.dim();
    if n < 2 {
        return Err(Error::Degenerate("operator has no complement to the deflated vector".into()));
    }
    let m_max = opts.krylov_dim.min(n - 1).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<T> = (0..n).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect();

    let mut best: Option<RitzPair<T>> = None;
    let mut matvecs = 0usize;
    let mut w = vec![T::zero(); n];

    for _restart in 0..=opts.max_restarts {
        orthogonalize(&mut start, deflate, &[]);
        let nrm = norm(&start);
        if nrm == T::zero() {
            return Err(Error::Degenerate("start vector lies in the deflated direction".into()));
        }
        start.iter_mut().for_each(|x| *x = *x / nrm);

        let mut basis: Vec<Vec<T>> = vec![start.clone()];
        let mut alphas: Vec<T> = Vec::new();
        let mut betas: Vec<T> = Vec::new();
        let mut candidate: Option<RitzPair<T>> = None;

        for j in 0..m_max {
            a.matvec(&basis[j], &mut w);
            matvecs += 1;
            let alpha = dot(&w, &basis[j]);
            axpy(&mut w, alpha, &basis[j]);
            if j > 0 {
                axpy(&mut w, betas[j - 1], &basis[j - 1]);
            }
            orthogonalize(&mut w, deflate, &basis);
            alphas.push(alpha);
            let beta = norm(&w);
            let exhausted = beta <= T::epsilon() * T::lit(64.0) * alpha.abs().max(T::one());
            let last = j + 1 == m_max;

            if exhausted || last || (j + 1) % 8 == 0 {
                let (theta, y) = smallest_tridiagonal(&alphas, &betas)?;
                let estimate = beta * y[y.len() - 1].abs();
                if exhausted || last || estimate <= opts.tolerance {
                    let pair = ritz_pair(a, &basis, theta, &y, matvecs);
                    matvecs += 1;
                    let done = pair.residual <= opts.tolerance;
                    candidate = Some(pair);
                    if done || exhausted || last {
                        break;
                    }
                }
            }
            betas.push(beta);
            let next: Vec<T> = w.iter().map(|x| *x / beta).collect();
            basis.push(next);
        }

        let pair = candidate.expect("Lanczos cycle always produces a Ritz pair");
        if pair.residual <= opts.tolerance {
            return Ok(RitzPair { matvecs, ..pair });
        }
        start = pair.vector.clone();
        if best.as_ref().is_none_or(|b| pair.residual < b.residual) {
            best = Some(pair);
        }
    }
    Err(Error::Convergence {
        iterations: matvecs,
        best_residual: best.map(|b| b.residual.as_f64()).unwrap_or(f64::INFINITY),
    })
}

/// Two passes of classical Gram-Schmidt against `deflate` and `basis`.
fn orthogonalize<T: Real>(w: &mut [T], deflate: &[T], basis: &[Vec<T>]) {
    for _ in 0..2 {
        let c = dot(w, deflate);
        axpy(w, c, deflate);
        for b in basis {
            let c = dot(w, b);
            axpy(w, c, b);
        }
    }
}

fn smallest_tridiagonal<T: Real>(alphas: &[T], betas: &[T]) -> Result<(T, Vec<T>)> {
    let m = alphas.len();
    let mut t = vec![T::zero(); m * m];
    for i in 0..m {
        t[i * m + i] = alphas[i];
        if i + 1 < m {
            t[i * m + i + 1] = betas[i];
            t[(i + 1) * m + i] = betas[i];
        }
    }
    let eig = symmetric_eigen(&t, m, true)?;
    Ok((eig.values[0], eig.vector(0).unwrap().to_vec()))
}

fn ritz_pair<T: Real>(a: &CsrMatrix<T>, basis: &[Vec<T>], theta: T, y: &[T], matvecs: usize) -> RitzPair<T> {
    let n = a.dim();
    let mut x = vec![T::zero(); n];
    for (b, &c) in basis.iter().zip(y) {
        for (xi, bi) in x.iter_mut().zip(b) {
            *xi = *xi + c * *bi;
        }
    }
    let nrm = norm(&x);
    x.iter_mut().for_each(|v| *v = *v / nrm);
    let mut ax = vec![T::zero(); n];
    a.matvec(&x, &mut ax);
    let value = dot(&x, &ax);
    axpy(&mut ax, value, &x);
    let _ = theta;
    RitzPair { value, residual: norm(&ax), vector: x, matvecs }
}
