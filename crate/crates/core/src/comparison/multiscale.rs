use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::{growth_exponent, TransitionRate};
use crate::Real;

/// Constants of the multiscale comparison argument for one choice of `b`.
///
/// The scale sequence `b_n = ⌊b^{n+k₀}⌋` is stored from `n = 0`; it is
/// empty until [`MultiscaleParameters::extend_scales`] is called.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiscaleParameters<T> {
    pub b: T,
    pub delta: T,
    pub k0: u32,
    #[serde(rename = "K")]
    pub k: T,
    pub alpha: T,
    pub a: T,
    pub gamma1: T,
    pub gamma2: T,
    pub ell1: usize,
    pub ell2: usize,
    pub theta: T,
    /// Burn-in index, set once a certificate has been built.
    pub m: Option<usize>,
    #[serde(skip)]
    pub scale_sequence: Vec<u64>,
    #[serde(skip)]
    pub a_sequence: Vec<i64>,
}

fn golden<T: Real>() -> T {
    (T::one() + T::lit(5.0).sqrt()) / T::lit(2.0)
}

/// Closed-form constants for a given `b`, without burn-in.
pub fn compute_constants<T: Real>(b: T, alpha: T, k: T) -> Result<MultiscaleParameters<T>> {
    if !(b > T::one() && b < golden()) {
        return Err(Error::ParameterDomain(format!("b must lie in (1, golden ratio), got {b}")));
    }
    if !(alpha > T::zero() && alpha < T::lit(2.0)) {
        return Err(Error::ParameterDomain(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    if !(k >= T::lit(0.5) && k.is_finite()) {
        return Err(Error::ParameterDomain(format!("K must be at least 1/2, got {k}")));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let delta = b - one;
    let a = one + b - b * b;
    let gamma1 = (b.powf(-alpha) - b.powf(-two * alpha)) / (alpha * (a.powf(-alpha) - one));
    let gamma2 = (delta * (two * b + one) / b).powf(one + alpha);
    let ell1 = (-a.ln() / b.ln()).ceil().to_usize().unwrap() + 1;
    let ell2 = ((two * b + one).ln() / b.ln()).ceil().to_usize().unwrap();
    let theta = two * k * T::from_usize_lossy(ell2) * gamma2;
    let target = (two / delta).as_f64();
    let bf = b.as_f64();
    let mut k0 = (target.ln() / bf.ln()).floor().max(0.0) as u32;
    while bf.powi(k0 as i32) <= target {
        k0 += 1;
    }
    while k0 > 0 && bf.powi(k0 as i32 - 1) > target {
        k0 -= 1;
    }
    Ok(MultiscaleParameters {
        b,
        delta,
        k0,
        k,
        alpha,
        a,
        gamma1,
        gamma2,
        ell1,
        ell2,
        theta,
        m: None,
        scale_sequence: Vec::new(),
        a_sequence: Vec::new(),
    })
}

/// First `b = 1 + 2^{-j}`, `j = 1, 2, …`, with `θ < 1`.
pub fn select_b<T: Real>(k: T, alpha: T) -> Result<MultiscaleParameters<T>> {
    let mut last = None;
    for j in 1..=52 {
        let b = T::one() + T::lit(0.5).powi(j);
        if b == T::one() {
            break;
        }
        let params = compute_constants(b, alpha, k)?;
        if params.theta < T::one() {
            return Ok(params);
        }
        last = Some(params.theta);
    }
    Err(Error::Infeasible(format!(
        "no dyadic b with theta < 1 representable in this precision (last theta {})",
        last.map(|t| t.to_string()).unwrap_or_default()
    )))
}

impl<T: Real> MultiscaleParameters<T> {
    /// Fills `b_n` and `a_n` for `n < len` (and two more `b` values, which
    /// `a_n` needs).
    pub fn extend_scales(&mut self, len: usize) -> Result<()> {
        let bf = self.b.as_f64();
        let need = len + 2;
        while self.scale_sequence.len() < need {
            let n = self.scale_sequence.len() as i32;
            let v = bf.powi(n + self.k0 as i32).floor();
            if !(v < 9.0e15) {
                return Err(Error::ParameterDomain(format!("scale b_{n} overflows exact integer range")));
            }
            self.scale_sequence.push(v as u64);
        }
        let s = &self.scale_sequence;
        self.a_sequence = (0..len).map(|n| s[n] as i64 + s[n + 1] as i64 - s[n + 2] as i64).collect();
        Ok(())
    }

    /// `b_n`.
    pub fn b_n(&self, n: usize) -> u64 {
        self.scale_sequence[n]
    }

    /// `a_n`.
    pub fn a_n(&self, n: usize) -> i64 {
        self.a_sequence[n]
    }

    /// `A_n = {a_n+1, …, b_n}` as inclusive bounds.
    pub fn set_a(&self, n: usize) -> (i64, i64) {
        (self.a_n(n) + 1, self.b_n(n) as i64)
    }

    /// `B_n = {b_{n+1}+1, …, b_{n+2}}`.
    pub fn set_b(&self, n: usize) -> (i64, i64) {
        (self.b_n(n + 1) as i64 + 1, self.b_n(n + 2) as i64)
    }

    /// `D_n = {b_{n+1}-b_n+1, …, b_{n+2}-a_n-1}`.
    pub fn set_d(&self, n: usize) -> (i64, i64) {
        let b = |i| self.b_n(i) as i64;
        (b(n + 1) - b(n) + 1, b(n + 2) - self.a_n(n) - 1)
    }

    /// Smallest index with `b_n ≥ z`, extending the sequence as needed.
    pub fn index_reaching(&mut self, z: u64) -> Result<usize> {
        let mut len = self.a_sequence.len().max(16);
        loop {
            self.extend_scales(len)?;
            if let Some(i) = self.scale_sequence[..len].iter().position(|&v| v >= z) {
                return Ok(i);
            }
            len *= 2;
        }
    }

    pub fn nu(&self) -> T {
        growth_exponent(self.k)
    }
}

/// How `p` is normalised before the finite-scale checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateOptions {
    /// Scales are verified for `n ≤ horizon`; `None` picks the first index
    /// with `b_n ≥ horizon_value`.
    pub horizon: Option<usize>,
    pub horizon_value: u64,
    /// Where the tail constant is read when no closed-form limit exists.
    pub reference_x: u64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self { horizon: None, horizon_value: 10_000_000, reference_x: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonCertificate<T> {
    pub params: MultiscaleParameters<T>,
    /// Bound on `D_q(I_n) / D_p(I_n)` for the original, unrescaled `p`.
    pub kappa: T,
    /// Finite-window constant, in units of the rescaled rate.
    pub c1: T,
    pub horizon: usize,
    /// `b_horizon`: the comparison is certified for `n ≤ verified_up_to`.
    pub verified_up_to: u64,
    /// `c` in `p̃ = p / c`.
    pub rescale_factor: T,
    pub status: String,
}

/// Tail constant `c` used to normalise `p`.
pub fn rescale_factor<T: Real>(p: &TransitionRate<T>, reference_x: u64) -> Result<T> {
    let c = match p.limit_tail_constant() {
        Some(c) => c,
        None => p.tail_constant(reference_x)?,
    };
    if c > T::zero() && c.is_finite() {
        Ok(c)
    } else {
        Err(Error::Infeasible(format!("tail constant {c} at x = {reference_x} is not positive")))
    }
}

fn mass<T: Real>(p: &TransitionRate<T>, (lo, hi): (i64, i64)) -> T {
    if hi < lo || hi < 1 {
        return T::zero();
    }
    p.mass(lo.max(1) as u64, hi as u64)
}

/// First condition failing at scale `n`, if any.
fn scale_failure<T: Real>(
    params: &MultiscaleParameters<T>,
    p: &TransitionRate<T>,
    q: &TransitionRate<T>,
    n: usize,
) -> Option<String> {
    let two = T::lit(2.0);
    let an = params.a_n(n);
    if an <= 0 {
        return Some(format!("a_{n} = {an} is not positive"));
    }
    if params.a_n(n + 1) <= an {
        return Some(format!("a_n is not increasing at n = {n}"));
    }
    let pa = mass(p, params.set_a(n));
    if pa <= T::zero() {
        return Some(format!("p(A_{n}) = 0"));
    }
    if params.b_n(n) as i64 > params.a_n(n + params.ell1) {
        return Some(format!("A_{n} and A_{} overlap", n + params.ell1));
    }
    if params.set_d(n).1 >= params.set_d(n + params.ell2).0 {
        return Some(format!("D_{n} and D_{} overlap", n + params.ell2));
    }
    let qb = mass(q, params.set_b(n));
    if qb > two * params.gamma1 * pa {
        return Some(format!("q(B_{n}) / p(A_{n}) = {} exceeds 2 Gamma1", qb / pa));
    }
    let num = q.eval(params.b_n(n + 1) as i64);
    let den = q.eval(params.b_n(n + 2) as i64 - an);
    if num > two * params.gamma2 * den {
        return Some(format!("q(b_{}) / q(b_{} - a_{n}) = {} exceeds 2 Gamma2", n + 1, n + 2, num / den));
    }
    None
}

/// Largest number of intervals from `sets` sharing one point.
fn max_multiplicity(sets: impl Iterator<Item = (i64, i64)>) -> usize {
    let mut events: Vec<(i64, i32)> = Vec::new();
    for (lo, hi) in sets.filter(|(lo, hi)| lo <= hi) {
        events.push((lo, 1));
        events.push((hi + 1, -1));
    }
    events.sort_unstable();
    let mut depth = 0i32;
    let mut best = 0;
    for (_, d) in events {
        depth += d;
        best = best.max(depth);
    }
    best as usize
}

fn burn_in_scan<T: Real>(
    params: &mut MultiscaleParameters<T>,
    p_tilde: &TransitionRate<T>,
    horizon: usize,
) -> Result<usize> {
    let q = TransitionRate::power_law(params.alpha)?;
    params.extend_scales(horizon + params.ell1.max(params.ell2) + 2)?;
    let mut m = 0;
    let mut last_failure = None;
    for n in (0..=horizon).rev() {
        if let Some(why) = scale_failure(params, p_tilde, &q, n) {
            m = n + 1;
            last_failure = Some(why);
            break;
        }
    }
    // Disjointness of shifted pairs only bounds the overlap count when the
    // endpoints are monotone, so the count itself is checked as well.
    loop {
        if m > horizon {
            return Err(Error::Infeasible(format!(
                "no burn-in index up to horizon {horizon}: {}",
                last_failure.unwrap_or_default()
            )));
        }
        let over_a = max_multiplicity((m..=horizon).map(|j| params.set_a(j)));
        let over_d = max_multiplicity((m..=horizon).map(|j| params.set_d(j)));
        if over_a <= params.ell1 && over_d <= params.ell2 {
            return Ok(m);
        }
        last_failure = Some(format!("overlap count {over_a}/{over_d} above ell1/ell2 from m = {m}"));
        m += 1;
    }
}

/// Smallest `m` from which every finite-scale hypothesis holds on
/// `m ≤ n ≤ horizon`, for `p` normalised by its tail constant.
pub fn burn_in_index<T: Real>(
    params: &MultiscaleParameters<T>,
    p: &TransitionRate<T>,
    horizon: usize,
) -> Result<usize> {
    let c = rescale_factor(p, CertificateOptions::default().reference_x)?;
    let p_tilde = p.scaled(T::one() / c)?;
    burn_in_scan(&mut params.clone(), &p_tilde, horizon)
}

/// `κ = (2Kℓ₁Γ₁ + C₁) / (1 - θ)`, converted back to the scale of `p`.
pub fn certificate_kappa<T: Real>(
    params: &MultiscaleParameters<T>,
    p: &TransitionRate<T>,
    opts: &CertificateOptions,
) -> Result<ComparisonCertificate<T>> {
    if params.theta >= T::one() {
        return Err(Error::Infeasible(format!("theta = {} is not below 1", params.theta)));
    }
    let mut params = params.clone();
    let c = rescale_factor(p, opts.reference_x)?;
    let p_tilde = p.scaled(T::one() / c)?;
    let horizon = match opts.horizon {
        Some(h) => h,
        None => params.index_reaching(opts.horizon_value)?,
    };
    let m = burn_in_scan(&mut params, &p_tilde, horizon)?;
    params.m = Some(m);
    let two_k = T::lit(2.0) * params.k;
    let power = params.nu() - T::one() - params.alpha;
    let window = params.b_n(m + 1);
    let mut sum = T::zero();
    for x in (1..=window).rev() {
        sum = sum + T::from_u64(x).unwrap().powf(power);
    }
    let c1 = two_k * sum / p_tilde.eval(1);
    let kappa_tilde = (two_k * T::from_usize_lossy(params.ell1) * params.gamma1 + c1) / (T::one() - params.theta);
    Ok(ComparisonCertificate {
        verified_up_to: params.b_n(horizon),
        kappa: kappa_tilde / c,
        c1,
        horizon,
        rescale_factor: c,
        status: "verified up to horizon".into(),
        params,
    })
}
