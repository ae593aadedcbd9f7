use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::rates::TransitionRate;
use crate::Real;

/// What the states of a generator stand for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StateSpace {
    /// Sites `-n..=n`, index `i` is site `i - n`.
    Walk { n: usize },
    Exclusion { n: usize, ell: usize },
    ZeroRange { n: usize, ell: usize },
    Custom,
}

impl StateSpace {
    pub fn box_radius(&self) -> Option<usize> {
        match *self {
            StateSpace::Walk { n } | StateSpace::Exclusion { n, .. } | StateSpace::ZeroRange { n, .. } => Some(n),
            StateSpace::Custom => None,
        }
    }
}

/// Rate matrix `r(x, y)` of a reversible chain together with its equilibrium.
///
/// `L f(x) = Σ_y r(x,y) (f(y) - f(x))`; only off-diagonal rates are stored,
/// so `L 1 = 0` holds by construction.
#[derive(Debug, Clone)]
pub struct Generator<T> {
    space: StateSpace,
    equilibrium: Vec<T>,
    rates: CsrMatrix<T>,
    exit_rates: Vec<T>,
    descriptor: String,
}

impl<T: Real> Generator<T> {
    /// Builds a generator from per-state `(target, rate)` lists.
    ///
    /// Self-loops and zero rates are dropped; `equilibrium` is normalised.
    pub fn from_rates(
        space: StateSpace,
        equilibrium: Vec<T>,
        rows: Vec<Vec<(usize, T)>>,
        descriptor: impl Into<String>,
    ) -> Result<Self> {
        let n = rows.len();
        if equilibrium.len() != n {
            return Err(Error::Contract(format!("{} equilibrium weights for {n} states", equilibrium.len())));
        }
        if n == 0 {
            return Err(Error::Degenerate("empty state space".into()));
        }
        if equilibrium.iter().any(|w| !(w.is_finite() && *w > T::zero())) {
            return Err(Error::Contract("equilibrium weights must be finite and positive".into()));
        }
        let total: T = equilibrium.iter().copied().sum();
        let equilibrium: Vec<T> = equilibrium.into_iter().map(|w| w / total).collect();
        let mut cleaned = Vec::with_capacity(n);
        for (x, row) in rows.into_iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (y, r) in row {
                if y >= n {
                    return Err(Error::Contract(format!("transition {x} -> {y} leaves the state space")));
                }
                if !(r.is_finite() && r >= T::zero()) {
                    return Err(Error::Contract(format!("rate {x} -> {y} is {r}")));
                }
                if y != x && r > T::zero() {
                    out.push((y, r));
                }
            }
            cleaned.push(out);
        }
        let rates = CsrMatrix::from_rows(cleaned);
        let exit_rates = (0..n).map(|x| rates.row(x).map(|(_, r)| r).sum()).collect();
        Ok(Self { space, equilibrium, rates, exit_rates, descriptor: descriptor.into() })
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.equilibrium.len()
    }

    pub fn equilibrium(&self) -> &[T] {
        &self.equilibrium
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// `r(x, y)`, zero on the diagonal.
    pub fn rate(&self, x: usize, y: usize) -> T {
        if x == y {
            T::zero()
        } else {
            self.rates.get(x, y)
        }
    }

    /// Off-diagonal rates leaving `x`.
    pub fn transitions(&self, x: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.rates.row(x)
    }

    /// `γ(x) = Σ_y r(x, y)`.
    pub fn exit_rate(&self, x: usize) -> T {
        self.exit_rates[x]
    }

    /// Number of stored positive rates.
    pub fn nnz(&self) -> usize {
        self.rates.nnz()
    }

    /// `(L f)(x) = Σ_y r(x,y)(f(y) - f(x))`.
    pub fn apply(&self, f: &[T]) -> Vec<T> {
        (0..self.dim())
            .map(|x| self.rates.row(x).fold(T::zero(), |acc, (y, r)| acc + r * (f[y] - f[x])))
            .collect()
    }

    /// Largest `|Σ_y L(x,y)|` over rows, with the diagonal `-γ(x)` added
    /// after the off-diagonal sum.
    pub fn row_sum_defect(&self) -> T {
        (0..self.dim())
            .map(|x| {
                let off: T = self.rates.row(x).map(|(_, r)| r).fold(T::zero(), |a, b| a + b);
                (off - self.exit_rates[x]).abs()
            })
            .fold(T::zero(), T::max)
    }

    /// Largest relative violation of `μ(x) r(x,y) = μ(y) r(y,x)`.
    pub fn detailed_balance_defect(&self) -> T {
        let mu = &self.equilibrium;
        let mut worst = T::zero();
        for x in 0..self.dim() {
            for (y, r) in self.rates.row(x) {
                let fwd = mu[x] * r;
                let bwd = mu[y] * self.rates.get(y, x);
                worst = worst.max((fwd - bwd).abs() / fwd.max(bwd));
            }
        }
        worst
    }

    /// Checks detailed balance to `tolerance` (relative, entrywise).
    pub fn check_detailed_balance(&self, tolerance: T) -> Result<()> {
        let defect = self.detailed_balance_defect();
        if defect > tolerance {
            Err(Error::DetailedBalance(format!("relative defect {defect:e} above {tolerance:e}")))
        } else {
            Ok(())
        }
    }

    /// Connected components of the positive-rate graph.
    pub fn component_count(&self) -> usize {
        let n = self.dim();
        let mut uf = UnionFind::<usize>::new(n);
        for x in 0..n {
            for (y, _) in self.rates.row(x) {
                uf.union(x, y);
            }
        }
        let mut labels = uf.into_labeling();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }

    pub fn check_irreducible(&self) -> Result<()> {
        match self.component_count() {
            1 => Ok(()),
            k => Err(Error::Irreducible(format!("positive-rate graph has {k} components"))),
        }
    }

    /// `S = D^{1/2}(-L)D^{-1/2}` with `D = diag(μ)`; symmetric under
    /// detailed balance and with null vector `√μ`.
    pub fn symmetrized(&self) -> CsrMatrix<T> {
        let root: Vec<T> = self.equilibrium.iter().map(|m| m.sqrt()).collect();
        let rows = (0..self.dim())
            .map(|x| {
                let mut row: Vec<(usize, T)> =
                    self.rates.row(x).map(|(y, r)| (y, -(r * root[x] / root[y]))).collect();
                row.push((x, self.exit_rates[x]));
                row
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    /// Dense column-major `S`, averaged with its transpose.
    pub fn symmetrized_dense(&self) -> Vec<T> {
        let n = self.dim();
        let mut s = self.symmetrized().to_dense();
        let half = T::lit(0.5);
        for i in 0..n {
            for j in 0..i {
                let avg = (s[i * n + j] + s[j * n + i]) * half;
                s[i * n + j] = avg;
                s[j * n + i] = avg;
            }
        }
        s
    }

    /// `trace(-L) = Σ_x γ(x)`.
    pub fn trace(&self) -> T {
        self.exit_rates.iter().copied().sum()
    }

    /// `D(f) = ½ Σ_{x,y} μ(x) r(x,y) (f(y) - f(x))²`.
    pub fn dirichlet_form(&self, f: &[T]) -> T {
        let mut acc = T::zero();
        for x in 0..self.dim() {
            let inner = self.rates.row(x).fold(T::zero(), |a, (y, r)| {
                let d = f[y] - f[x];
                a + r * d * d
            });
            acc = acc + self.equilibrium[x] * inner;
        }
        acc * T::lit(0.5)
    }

    /// `∫ f dμ`.
    pub fn mean(&self, f: &[T]) -> T {
        self.equilibrium.iter().zip(f).fold(T::zero(), |a, (m, v)| a + *m * *v)
    }
}

/// Walk on `Λ_n = {-n, …, n}` with `r(x, y) = p(y - x)`; uniform equilibrium.
pub fn build_walk_generator<T: Real>(p: &TransitionRate<T>, n: usize) -> Result<Generator<T>> {
    if n == 0 {
        return Err(Error::ParameterDomain("box radius must be at least 1".into()));
    }
    if p.eval(1) <= T::zero() {
        return Err(Error::Irreducible("p(1) = 0".into()));
    }
    let size = 2 * n + 1;
    let jumps: Vec<T> = (0..size as i64).map(|d| p.eval(d)).collect();
    let rows = (0..size)
        .map(|x| {
            (0..size)
                .filter(|&y| y != x)
                .map(|y| (y, jumps[(y as i64 - x as i64).unsigned_abs() as usize]))
                .collect()
        })
        .collect();
    Generator::from_rates(StateSpace::Walk { n }, vec![T::one(); size], rows, p.descriptor())
}
