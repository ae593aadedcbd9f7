use serde::Serialize;

use super::Generator;
use super::StateSpace;
use crate::error::{Error, Result};
use crate::linalg::{dot, lanczos_smallest, norm, symmetric_eigen, LanczosOptions};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Iterative,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Dense => "dense",
            Method::Iterative => "iterative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    /// Dense up to `dense_limit` states, iterative above.
    #[default]
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone)]
pub struct GapOptions<T> {
    pub method: MethodChoice,
    pub dense_limit: usize,
    /// Residual target; `None` uses 1e-10 (dense) or 1e-8 (iterative),
    /// relative to `max(1, max_x γ(x))`.
    pub tolerance: Option<T>,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// Relative detailed-balance defect tolerated before refusing to solve.
    pub balance_tolerance: T,
}

impl<T: Real> Default for GapOptions<T> {
    fn default() -> Self {
        Self {
            method: MethodChoice::Auto,
            dense_limit: 4096,
            tolerance: None,
            krylov_dim: 240,
            max_restarts: 40,
            seed: 0x5eed,
            balance_tolerance: T::lit(1e-10),
        }
    }
}

impl<T: Real> GapOptions<T> {
    pub fn dense() -> Self {
        Self { method: MethodChoice::Dense, ..Self::default() }
    }

    pub fn iterative() -> Self {
        Self { method: MethodChoice::Iterative, ..Self::default() }
    }
}

/// Spectral gap of a reversible generator with the residual achieved.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport<T> {
    pub gap: T,
    /// Box radius when the state space has one.
    pub n: Option<usize>,
    pub states: usize,
    pub rate: String,
    pub method: Method,
    pub residual: T,
    /// Gap eigenfunction of `L`, normalised in `L²(μ)` and `μ`-mean zero.
    #[serde(skip)]
    pub eigenvector: Vec<T>,
}

fn default_tolerance<T: Real>(g: &Generator<T>, method: Method) -> T {
    let base = match method {
        Method::Dense => T::lit(1e-10),
        Method::Iterative => T::lit(1e-8),
    };
    let floor = T::epsilon() * T::lit(1e4);
    let scale = (0..g.dim()).map(|x| g.exit_rate(x)).fold(T::one(), T::max);
    base.max(floor) * scale
}

/// `λ = inf { D(f) / Var_μ(f) }`, the smallest eigenvalue of `-L` on
/// `μ`-mean-zero functions.
///
/// The constant direction is removed by projection (a Householder
/// reflector for the dense path, explicit deflation for Lanczos), never by
/// shifting the matrix.
pub fn spectral_gap<T: Real>(g: &Generator<T>, opts: &GapOptions<T>) -> Result<SpectralReport<T>> {
    if g.dim() < 2 {
        return Err(Error::Degenerate("single-state chain has no spectral gap".into()));
    }
    g.check_irreducible()?;
    g.check_detailed_balance(opts.balance_tolerance)?;
    let method = match opts.method {
        MethodChoice::Dense => Method::Dense,
        MethodChoice::Iterative => Method::Iterative,
        MethodChoice::Auto if g.dim() <= opts.dense_limit => Method::Dense,
        MethodChoice::Auto => Method::Iterative,
    };
    let tolerance = opts.tolerance.unwrap_or_else(|| default_tolerance(g, method));
    let root: Vec<T> = g.equilibrium().iter().map(|m| m.sqrt()).collect();
    let (gap, vector, residual) = match method {
        Method::Dense => dense_gap(g, &root)?,
        Method::Iterative => {
            let lanczos = LanczosOptions {
                tolerance,
                krylov_dim: opts.krylov_dim,
                max_restarts: opts.max_restarts,
                seed: opts.seed,
            };
            let pair = lanczos_smallest(&g.symmetrized(), &root, &lanczos)?;
            (pair.value, pair.vector, pair.residual)
        }
    };
    if !(residual <= tolerance) {
        return Err(Error::Convergence { iterations: 0, best_residual: residual.as_f64() });
    }
    let eigenvector = vector.iter().zip(&root).map(|(v, r)| *v / *r).collect();
    Ok(SpectralReport {
        gap,
        n: g.space().box_radius(),
        states: g.dim(),
        rate: g.descriptor().to_string(),
        method,
        residual,
        eigenvector,
    })
}

/// Householder reflector `H = I - β v vᵀ` with `H √μ = -e₀`.
struct Reflector<T> {
    v: Vec<T>,
    beta: T,
}

impl<T: Real> Reflector<T> {
    fn new(root: &[T]) -> Self {
        let mut v = root.to_vec();
        v[0] = v[0] + T::one();
        let beta = T::lit(2.0) / dot(&v, &v);
        Self { v, beta }
    }

    fn apply(&self, x: &mut [T]) {
        let c = self.beta * dot(&self.v, x);
        for (xi, vi) in x.iter_mut().zip(&self.v) {
            *xi = *xi - c * *vi;
        }
    }
}

/// Column-major `(N-1) × (N-1)` block of `H S H` orthogonal to `√μ`.
fn projected_block<T: Real>(s: &[T], n: usize, h: &Reflector<T>) -> Vec<T> {
    let v = &h.v;
    let mut w = vec![T::zero(); n];
    for j in 0..n {
        let col = &s[j * n..(j + 1) * n];
        for i in 0..n {
            w[i] = w[i] + col[i] * v[j];
        }
    }
    let vw = dot(v, &w);
    let b = h.beta;
    let b2vw = b * b * vw;
    let m = n - 1;
    let mut out = vec![T::zero(); m * m];
    for j in 1..n {
        for i in 1..n {
            out[(j - 1) * m + (i - 1)] =
                s[j * n + i] - b * v[i] * w[j] - b * w[i] * v[j] + b2vw * v[i] * v[j];
        }
    }
    out
}

fn dense_gap<T: Real>(g: &Generator<T>, root: &[T]) -> Result<(T, Vec<T>, T)> {
    let n = g.dim();
    let s = g.symmetrized_dense();
    let h = Reflector::new(root);
    let block = projected_block(&s, n, &h);
    let eig = symmetric_eigen(&block, n - 1, true)?;
    let mut x = Vec::with_capacity(n);
    x.push(T::zero());
    x.extend_from_slice(eig.vector(0).unwrap());
    h.apply(&mut x);
    let gap = eig.values[0];
    let mut r = vec![T::zero(); n];
    g.symmetrized().matvec(&x, &mut r);
    for (ri, xi) in r.iter_mut().zip(&x) {
        *ri = *ri - gap * *xi;
    }
    Ok((gap, x, norm(&r)))
}

/// All eigenvalues of `-L` (ascending), dense path; the first is the
/// null eigenvalue of the constants.
pub fn dense_spectrum<T: Real>(g: &Generator<T>) -> Result<Vec<T>> {
    let n = g.dim();
    let s = g.symmetrized_dense();
    if n < 2 {
        return Ok(vec![s.first().copied().unwrap_or_else(T::zero)]);
    }
    let root: Vec<T> = g.equilibrium().iter().map(|m| m.sqrt()).collect();
    let h = Reflector::new(&root);
    let block = projected_block(&s, n, &h);
    let mut values = vec![T::zero()];
    values.extend(symmetric_eigen(&block, n - 1, false)?.values);
    Ok(values)
}

/// `D(f̄) / ‖f̄‖²_{L²(μ)}` with `f̄ = f - ∫ f dμ`.
pub fn rayleigh_quotient<T: Real>(g: &Generator<T>, f: &[T]) -> Result<T> {
    if f.len() != g.dim() {
        return Err(Error::Contract(format!("test function has {} entries, chain has {} states", f.len(), g.dim())));
    }
    let mean = g.mean(f);
    let centered: Vec<T> = f.iter().map(|v| *v - mean).collect();
    let var = g.mean(&centered.iter().map(|v| *v * *v).collect::<Vec<_>>());
    let scale = g.mean(&f.iter().map(|v| *v * *v).collect::<Vec<_>>());
    let eps = T::epsilon() * T::lit(64.0);
    if var <= eps * eps * scale || var == T::zero() {
        return Err(Error::Degenerate("test function is constant".into()));
    }
    Ok(g.dirichlet_form(&centered) / var)
}

/// Rayleigh quotient of `1{x > 0}` on the walk generator, an upper bound
/// on the gap of order `(2n+1)^{-α}`.
pub fn upper_bound_test_function<T: Real>(g: &Generator<T>) -> Result<T> {
    let StateSpace::Walk { n } = g.space() else {
        return Err(Error::Contract("indicator test function needs a walk generator".into()));
    };
    let f: Vec<T> = (0..g.dim()).map(|i| if i > n { T::one() } else { T::zero() }).collect();
    rayleigh_quotient(g, &f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::TransitionRate;
    use crate::spectrum::build_walk_generator;

    #[test]
    fn path_gap() {
        let p = TransitionRate::<f64>::nearest_neighbor(1.0).unwrap();
        let g = build_walk_generator(&p, 1).unwrap();
        let r = spectral_gap(&g, &GapOptions::default()).unwrap();
        assert!((r.gap - 1.0).abs() < 1e-13);
        assert_eq!(r.method, Method::Dense);
        assert_eq!(r.n, Some(1));
        let spec = dense_spectrum(&g).unwrap();
        assert!((spec[1] - 1.0).abs() < 1e-13 && (spec[2] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn path_rayleigh_linear() {
        let p = TransitionRate::<f64>::nearest_neighbor(1.0).unwrap();
        let g = build_walk_generator(&p, 1).unwrap();
        // Hand computation: mean 0, D = ½·(1/3)·(1+1+1+1) = 2/3, ‖f‖² = 2/3.
        let q = rayleigh_quotient(&g, &[-1.0, 0.0, 1.0]).unwrap();
        assert!((q - 1.0).abs() < 1e-15);
        assert!(matches!(rayleigh_quotient(&g, &[2.0, 2.0, 2.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn eigenvector_attains_gap() {
        let p = TransitionRate::<f64>::power_law(1.0).unwrap();
        let g = build_walk_generator(&p, 6).unwrap();
        let r = spectral_gap(&g, &GapOptions::default()).unwrap();
        let q = rayleigh_quotient(&g, &r.eigenvector).unwrap();
        assert!((q - r.gap).abs() < 1e-12);
        assert!(g.mean(&r.eigenvector).abs() < 1e-13);
    }

    #[test]
    fn indicator_bound_nearest_neighbor() {
        // One crossing bond: D = p(1)/(2n+1), Var = n(n+1)/(2n+1)².
        let p = TransitionRate::<f64>::nearest_neighbor(1.0).unwrap();
        let g = build_walk_generator(&p, 8).unwrap();
        let q = upper_bound_test_function(&g).unwrap();
        assert!((q - 17.0 / 72.0).abs() < 1e-14);
        let gap = spectral_gap(&g, &GapOptions::default()).unwrap().gap;
        assert!(q >= gap);
    }

    #[test]
    fn indicator_needs_walk() {
        let rows = vec![vec![(1, 1.0)], vec![(0, 1.0)]];
        let g = Generator::from_rates(StateSpace::Custom, vec![1.0, 1.0], rows, "pair").unwrap();
        assert!(matches!(upper_bound_test_function(&g), Err(Error::Contract(_))));
    }

    #[test]
    fn single_state_is_degenerate() {
        let g = Generator::<f64>::from_rates(StateSpace::Custom, vec![1.0], vec![vec![]], "point").unwrap();
        assert!(matches!(spectral_gap(&g, &GapOptions::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn reducible_is_refused() {
        let rows = vec![vec![(1, 1.0)], vec![(0, 1.0)], vec![]];
        let g = Generator::from_rates(StateSpace::Custom, vec![1.0; 3], rows, "split").unwrap();
        assert!(matches!(spectral_gap(&g, &GapOptions::default()), Err(Error::Irreducible(_))));
    }

    #[test]
    fn non_reversible_is_refused() {
        let rows = vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]];
        let g = Generator::from_rates(StateSpace::Custom, vec![1.0; 3], rows, "cycle").unwrap();
        assert!(matches!(spectral_gap(&g, &GapOptions::default()), Err(Error::DetailedBalance(_))));
    }

    #[test]
    fn single_precision_gap() {
        let p = TransitionRate::<f32>::nearest_neighbor(1.0).unwrap();
        let g = build_walk_generator(&p, 1).unwrap();
        let r = spectral_gap(&g, &GapOptions::default()).unwrap();
        assert!((r.gap - 1.0).abs() < 1e-5);
    }
}
