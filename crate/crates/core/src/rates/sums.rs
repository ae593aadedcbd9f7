//! Partial sums of `y^{-s}` with a certified remainder.

use crate::Real;

/// Below this point tails are summed term by term before switching to the
/// asymptotic expansion.
const DIRECT_LIMIT: u64 = 24;

/// Two-sided estimate of a convergent tail sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate<T> {
    pub value: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Real> TailEstimate<T> {
    pub fn exact(value: T) -> Self {
        Self { value, lower: value, upper: value }
    }

    pub fn scale(self, factor: T) -> Self {
        Self { value: self.value * factor, lower: self.lower * factor, upper: self.upper * factor }
    }

    pub fn shift(self, offset: T) -> Self {
        Self { value: self.value + offset, lower: self.lower + offset, upper: self.upper + offset }
    }
}

/// `Σ_{y ≥ x} y^{-s}` for `s > 1`, `x ≥ 1`.
///
/// The value uses Euler-Maclaurin with three Bernoulli corrections once
/// `x` passes [`DIRECT_LIMIT`]; the bounds are the integral sandwich
/// `∫_N^∞ y^{-s} ≤ Σ_{y≥N} y^{-s} ≤ N^{-s} + ∫_N^∞ y^{-s}`.
pub fn power_tail<T: Real>(x: u64, s: T) -> TailEstimate<T> {
    debug_assert!(x >= 1);
    let start = x.max(DIRECT_LIMIT);
    let mut head = T::zero();
    for y in x..start {
        head = head + T::from_u64(y).unwrap().powf(-s);
    }
    let n = T::from_u64(start).unwrap();
    let integral = n.powf(T::one() - s) / (s - T::one());
    let f = n.powf(-s);
    let s1 = s;
    let s3 = s * (s + T::one()) * (s + T::lit(2.0));
    let s5 = s3 * (s + T::lit(3.0)) * (s + T::lit(4.0));
    let value = integral + f / T::lit(2.0) + s1 * f / (n * T::lit(12.0))
        - s3 * f / (n.powi(3) * T::lit(720.0))
        + s5 * f / (n.powi(5) * T::lit(30240.0));
    TailEstimate { value: head + value, lower: head + integral, upper: head + integral + f }
}

/// `Σ_{y=lo}^{hi} y^{-s}` for `1 ≤ lo ≤ hi`.
pub fn power_range<T: Real>(lo: u64, hi: u64, s: T) -> T {
    if hi < lo {
        return T::zero();
    }
    if hi - lo < 4096 {
        // Summed from the small end up so the large terms don't swamp the rest.
        let mut acc = T::zero();
        for y in (lo..=hi).rev() {
            acc = acc + T::from_u64(y).unwrap().powf(-s);
        }
        return acc;
    }
    power_tail(lo, s).value - power_tail(hi + 1, s).value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(x: u64, s: f64, terms: u64) -> f64 {
        // Long partial sum plus midpoint-rule remainder.
        let mut acc = 0.0;
        for y in (x..x + terms).rev() {
            acc += (y as f64).powf(-s);
        }
        let end = (x + terms) as f64 - 0.5;
        acc + end.powf(1.0 - s) / (s - 1.0)
    }

    #[test]
    fn tail_matches_long_partial_sum() {
        for &s in &[1.5, 2.0, 2.5, 3.0] {
            for &x in &[1u64, 2, 7, 24, 25, 1000] {
                let est = power_tail::<f64>(x, s);
                let oracle = brute(x, s, 2_000_000);
                assert!(
                    ((est.value - oracle) / oracle).abs() < 1e-9,
                    "s={s} x={x}: {} vs {oracle}",
                    est.value
                );
                assert!(est.lower <= oracle && oracle <= est.upper);
            }
        }
    }

    #[test]
    fn zeta_two() {
        let est = power_tail::<f64>(1, 2.0);
        assert!((est.value - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
    }

    #[test]
    fn range_agrees_across_paths() {
        let direct: f64 = (100..=9000u64).map(|y| (y as f64).powf(-2.0)).sum();
        let fast = power_range::<f64>(100, 9000, 2.0);
        assert!((direct - fast).abs() < 1e-13);
    }
}
