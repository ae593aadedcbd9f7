use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rates::TransitionRate;
use crate::Real;

#[derive(Debug, Clone, Copy)]
pub struct SemigroupOptions<T> {
    /// Poisson mass left out of the uniformization series.
    pub series_tolerance: T,
    /// Largest mass allowed to leave the box before the result is refused.
    pub leakage_budget: T,
}

impl<T: Real> Default for SemigroupOptions<T> {
    fn default() -> Self {
        Self { series_tolerance: T::lit(1e-12), leakage_budget: T::lit(1e-6) }
    }
}

impl<T: Real> SemigroupOptions<T> {
    pub fn with_budget(budget: T) -> Self {
        Self { leakage_budget: budget, ..Self::default() }
    }
}

/// `f_t = P_t(0, ·)` for the walk killed on leaving `{-L, …, L}`.
#[derive(Debug, Clone, Serialize)]
pub struct SemigroupState<T> {
    pub box_radius: usize,
    pub time: T,
    /// `values[i] = f_t(i - L)`.
    pub values: Vec<T>,
    /// Mass that jumped out of the box by time `t`.
    pub leaked_mass: T,
    /// Negative rounding residue set to zero during the evolution.
    pub clamped_mass: T,
    /// Most negative entry met before clamping.
    pub most_negative: T,
    /// Poisson weight not included in the truncated series.
    pub series_remainder: T,
}

impl<T: Real> SemigroupState<T> {
    /// `f_t(x)`, zero outside the box.
    pub fn value_at(&self, x: i64) -> T {
        let i = x + self.box_radius as i64;
        if i < 0 {
            return T::zero();
        }
        self.values.get(i as usize).copied().unwrap_or_else(T::zero)
    }

    pub fn mass(&self) -> T {
        self.values.iter().copied().sum()
    }

    /// `max_x |f_t(x) - f_t(-x)|`.
    pub fn asymmetry(&self) -> T {
        let n = self.values.len();
        (0..n / 2).map(|i| (self.values[i] - self.values[n - 1 - i]).abs()).fold(T::zero(), T::max)
    }
}

/// `ψ(t) = Σ_x f_t(x)²`.
pub fn psi_functional<T: Real>(state: &SemigroupState<T>) -> T {
    state.values.iter().map(|v| *v * *v).sum()
}

/// Jump kernel `p(y-x)/γ` restricted to the box, applied by FFT convolution.
pub struct KilledKernel<T: Real> {
    radius: usize,
    gamma: T,
    size: usize,
    spectrum: Vec<Complex<T>>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> KilledKernel<T> {
    pub fn new(p: &TransitionRate<T>, radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::ParameterDomain("box radius must be at least 1".into()));
        }
        let gamma = p.total_rate();
        let reach = 2 * radius;
        let size = (6 * radius + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut spectrum = vec![Complex::new(T::zero(), T::zero()); size];
        for (j, slot) in spectrum.iter_mut().enumerate().take(2 * reach + 1) {
            slot.re = p.eval(j as i64 - reach as i64) / gamma;
        }
        forward.process(&mut spectrum);
        let norm = T::one() / T::from_usize_lossy(size);
        for c in &mut spectrum {
            *c = *c * norm;
        }
        Ok(Self { radius, gamma, size, spectrum, forward, inverse })
    }

    pub fn total_rate(&self) -> T {
        self.gamma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `(K v)(y) = Σ_{x in box} v(x) p(y-x)/γ`.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let n = 2 * self.radius + 1;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.size];
        for (b, x) in buf.iter_mut().zip(v) {
            b.re = *x;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.spectrum) {
            *b = *b * *k;
        }
        self.inverse.process(&mut buf);
        let shift = 2 * self.radius;
        buf[shift..shift + n].iter().map(|c| c.re).collect()
    }
}

fn poisson_weights(lambda: f64, k_max: usize) -> Vec<f64> {
    if lambda == 0.0 {
        let mut w = vec![0.0; k_max + 1];
        w[0] = 1.0;
        return w;
    }
    let ll = lambda.ln();
    (0..=k_max).map(|k| (-lambda + k as f64 * ll - ln_gamma(k as f64 + 1.0)).exp()).collect()
}

/// Smallest `K` with `P(Poisson(λ) > K) ≤ tol`.
fn series_length(lambda: f64, tol: f64) -> usize {
    if lambda == 0.0 {
        return 0;
    }
    let ll = lambda.ln();
    let mut cum = 0.0;
    let mut k = 0usize;
    loop {
        cum += (-lambda + k as f64 * ll - ln_gamma(k as f64 + 1.0)).exp();
        if k as f64 > lambda && 1.0 - cum <= tol {
            return k;
        }
        k += 1;
    }
}

/// Evolves `initial` (values on the box) to every time in `times` by
/// uniformization, without enforcing the leakage budget.
pub fn propagate<T: Real>(kernel: &KilledKernel<T>, initial: &[T], times: &[T], series_tolerance: T) -> Result<Vec<SemigroupState<T>>> {
    let n = 2 * kernel.radius + 1;
    if initial.len() != n {
        return Err(Error::Contract(format!("initial vector has {} entries, box has {n}", initial.len())));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= T::zero())) {
        return Err(Error::ParameterDomain(format!("time must be finite and nonnegative, got {t}")));
    }
    let gamma = kernel.gamma.as_f64();
    let tol = series_tolerance.as_f64();
    let lambdas: Vec<f64> = times.iter().map(|t| gamma * t.as_f64()).collect();
    let k_max = lambdas.iter().map(|&l| series_length(l, tol)).max().unwrap_or(0);
    let weights: Vec<Vec<f64>> = lambdas.iter().map(|&l| poisson_weights(l, k_max)).collect();
    let start_mass: T = initial.iter().copied().sum();
    let mut acc = vec![vec![T::zero(); n]; times.len()];
    let mut leaked = vec![T::zero(); times.len()];
    let mut clamped = T::zero();
    let mut most_negative = T::zero();
    let mut v = initial.to_vec();
    for k in 0..=k_max {
        let mass: T = v.iter().copied().sum();
        for (ti, w) in weights.iter().enumerate() {
            let wk = T::lit(w[k]);
            if wk == T::zero() {
                continue;
            }
            for (a, x) in acc[ti].iter_mut().zip(&v) {
                *a = *a + wk * *x;
            }
            leaked[ti] = leaked[ti] + wk * (start_mass - mass);
        }
        if k == k_max {
            break;
        }
        v = kernel.apply(&v);
        for x in &mut v {
            if *x < T::zero() {
                most_negative = most_negative.min(*x);
                clamped = clamped - *x;
                *x = T::zero();
            }
        }
    }
    Ok(times
        .iter()
        .zip(acc)
        .zip(leaked)
        .zip(&weights)
        .map(|(((t, values), leaked_mass), w)| SemigroupState {
            box_radius: kernel.radius,
            time: *t,
            values,
            leaked_mass,
            clamped_mass: clamped,
            most_negative,
            series_remainder: T::lit((1.0 - w.iter().sum::<f64>()).max(0.0)),
        })
        .collect())
}

fn delta<T: Real>(radius: usize) -> Vec<T> {
    let mut v = vec![T::zero(); 2 * radius + 1];
    v[radius] = T::one();
    v
}

/// `f_t` from `f_0 = δ_0` at each requested time; fails with a truncation
/// error when the leaked mass exceeds the budget.
pub fn evolve_semigroup_times<T: Real>(
    p: &TransitionRate<T>,
    times: &[T],
    box_radius: usize,
    opts: &SemigroupOptions<T>,
) -> Result<Vec<SemigroupState<T>>> {
    let kernel = KilledKernel::new(p, box_radius)?;
    let states = propagate(&kernel, &delta(box_radius), times, opts.series_tolerance)?;
    if let Some(s) = states.iter().find(|s| s.leaked_mass > opts.leakage_budget) {
        return Err(Error::Truncation { leaked: s.leaked_mass.as_f64(), budget: opts.leakage_budget.as_f64() });
    }
    Ok(states)
}

pub fn evolve_semigroup<T: Real>(
    p: &TransitionRate<T>,
    t: T,
    box_radius: usize,
    opts: &SemigroupOptions<T>,
) -> Result<SemigroupState<T>> {
    Ok(evolve_semigroup_times(p, &[t], box_radius, opts)?.remove(0))
}

/// `Σ_{x,y ∈ ℤ} p(y-x) (f(y) - f(x))²` for `f` extended by zero off the box.
pub fn dissipation<T: Real>(kernel: &KilledKernel<T>, f: &[T]) -> T {
    let kf = kernel.apply(f);
    let sq: T = f.iter().map(|v| *v * *v).sum();
    let cross: T = f.iter().zip(&kf).map(|(a, b)| *a * *b).sum();
    T::lit(2.0) * kernel.gamma * (sq - cross)
}
