//! Householder tridiagonalisation followed by implicit-shift QL iteration
//! (the EISPACK tred2/tql2 pair), generic over the scalar type.

use crate::error::{Error, Result};
use crate::Real;

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    /// Column-major `n × n`; column `j` pairs with `values[j]`. Empty when
    /// vectors were not requested.
    pub vectors: Vec<T>,
    n: usize,
}

impl<T: Real> SymmetricEigen<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn vector(&self, j: usize) -> Option<&[T]> {
        (!self.vectors.is_empty()).then(|| &self.vectors[j * self.n..(j + 1) * self.n])
    }
}

const MAX_SWEEPS_PER_VALUE: usize = 60;

/// Full eigen-decomposition of the symmetric `n × n` matrix `a`
/// (column-major; only symmetry is assumed, both triangles are read).
pub fn symmetric_eigen<T: Real>(a: &[T], n: usize, want_vectors: bool) -> Result<SymmetricEigen<T>> {
    assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
    if n == 0 {
        return Ok(SymmetricEigen { values: vec![], vectors: vec![], n });
    }
    let mut v = a.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e, n, want_vectors);
    ql_implicit(&mut v, &mut d, &mut e, n, want_vectors)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = if want_vectors {
        let mut out = Vec::with_capacity(n * n);
        for &j in &order {
            out.extend_from_slice(&v[j * n..(j + 1) * n]);
        }
        out
    } else {
        Vec::new()
    };
    Ok(SymmetricEigen { values, vectors, n })
}

#[inline]
fn at(i: usize, j: usize, n: usize) -> usize {
    j * n + i
}

fn tridiagonalize<T: Real>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize, want_vectors: bool) {
    for j in 0..n {
        d[j] = v[at(n - 1, j, n)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for dk in d.iter().take(i) {
            scale = scale + dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j, n)];
                v[at(i, j, n)] = T::zero();
                v[at(j, i, n)] = T::zero();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i, n)] = f;
                g = e[j] + v[at(j, j, n)] * f;
                for k in j + 1..i {
                    let vkj = v[at(k, j, n)];
                    g = g + vkj * d[k];
                    e[k] = e[k] + vkj * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut v[j * n..(j + 1) * n];
                for k in j..i {
                    col[k] = col[k] - (f * e[k] + g * d[k]);
                }
                d[j] = v[at(i - 1, j, n)];
                v[at(i, j, n)] = T::zero();
            }
        }
        d[i] = h;
    }

    if !want_vectors {
        for j in 0..n {
            d[j] = v[at(j, j, n)];
        }
        e[0] = T::zero();
        return;
    }

    for i in 0..n - 1 {
        v[at(n - 1, i, n)] = v[at(i, i, n)];
        v[at(i, i, n)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[at(k, i + 1, n)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g = g + v[at(k, i + 1, n)] * v[at(k, j, n)];
                }
                let col = &mut v[j * n..(j + 1) * n];
                for k in 0..=i {
                    col[k] = col[k] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1, n)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j, n)];
        v[at(n - 1, j, n)] = T::zero();
    }
    v[at(n - 1, n - 1, n)] = T::one();
    e[0] = T::zero();
}

fn ql_implicit<T: Real>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize, want_vectors: bool) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let two = T::lit(2.0);
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS_PER_VALUE {
                    return Err(Error::Convergence { iterations: sweeps, best_residual: e[l].abs().as_f64() });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        let (left, right) = v.split_at_mut((i + 1) * n);
                        let col_i = &mut left[i * n..];
                        let col_i1 = &mut right[..n];
                        for k in 0..n {
                            let hk = col_i1[k];
                            col_i1[k] = s * col_i[k] + c * hk;
                            col_i[k] = c * col_i[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.random_range(-1.0..1.0);
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        a
    }

    #[test]
    fn path_laplacian() {
        // Path on 3 vertices: eigenvalues 0, 1, 3.
        let a: Vec<f64> = vec![1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0];
        let eig = symmetric_eigen(&a, 3, true).unwrap();
        for (got, want) in eig.values.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn reconstructs_random_matrices() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (40, 4), (97, 5)] {
            let a = random_symmetric(n, seed);
            let eig = symmetric_eigen(&a, n, true).unwrap();
            for j in 0..n {
                let v = eig.vector(j).unwrap();
                let lam = eig.values[j];
                let mut res = 0.0f64;
                for i in 0..n {
                    let av: f64 = (0..n).map(|k| a[k * n + i] * v[k]).sum();
                    res = res.max((av - lam * v[i]).abs());
                }
                assert!(res < 1e-12, "n={n} j={j} residual {res}");
                let nrm: f64 = v.iter().map(|x| x * x).sum();
                assert!((nrm - 1.0).abs() < 1e-12);
            }
            let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
            let sum: f64 = eig.values.iter().sum();
            assert!((trace - sum).abs() < 1e-12 * (1.0 + trace.abs()));
            let vals = symmetric_eigen(&a, n, false).unwrap().values;
            for (x, y) in vals.iter().zip(&eig.values) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_precision() {
        let a = vec![2.0f32, -1.0, -1.0, 2.0];
        let eig = symmetric_eigen(&a, 2, false).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-6);
        assert!((eig.values[1] - 3.0).abs() < 1e-6);
    }
}
