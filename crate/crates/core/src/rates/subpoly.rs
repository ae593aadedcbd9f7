use serde::Serialize;

use crate::error::{Error, Result};
use crate::Real;

/// A nonnegative function on `{1, …, N}`, stored as `values[x-1] = φ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubpolynomialFunction<T> {
    values: Vec<T>,
    /// Constant `K` the caller claims; verified by [`check_subpolynomial`].
    pub k_claim: Option<T>,
}

impl<T: Real> SubpolynomialFunction<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= T::zero())) {
            return Err(Error::ParameterDomain(format!("phi({}) = {v} is negative or not finite", i + 1)));
        }
        Ok(Self { values, k_claim: None })
    }

    pub fn from_fn(len: usize, f: impl Fn(usize) -> T) -> Result<Self> {
        Self::new((1..=len).map(f).collect())
    }

    pub fn with_claim(mut self, k: T) -> Self {
        self.k_claim = Some(k);
        self
    }

    /// Largest `x` on which `φ` is defined.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `φ(x)` for `1 ≤ x ≤ len`.
    pub fn get(&self, x: usize) -> Option<T> {
        x.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// `ν = 1 + log K / log 2`.
pub fn growth_exponent<T: Real>(k: T) -> T {
    T::one() + k.ln() / T::lit(2.0).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubpolyVerdict {
    pub passed: bool,
    /// First `(x, y)`, `x ≤ y`, in order of increasing `x + y`, with
    /// `φ(x+y) > K(φ(x) + φ(y))`.
    pub witness: Option<(usize, usize)>,
    /// Window actually scanned.
    pub checked_up_to: usize,
}

/// Exhaustive test of `φ(x+y) ≤ K(φ(x) + φ(y))` over `x, y ≥ 1`, `x + y ≤ N`.
///
/// `N` is clipped to the range on which `φ` is defined.
pub fn check_subpolynomial<T: Real>(phi: &SubpolynomialFunction<T>, k: T, n: usize) -> SubpolyVerdict {
    let n = n.min(phi.len());
    let v = phi.values();
    for s in 2..=n {
        let lhs = v[s - 1];
        for x in 1..=s / 2 {
            let y = s - x;
            if lhs > k * (v[x - 1] + v[y - 1]) {
                return SubpolyVerdict { passed: false, witness: Some((x, y)), checked_up_to: n };
            }
        }
    }
    SubpolyVerdict { passed: true, witness: None, checked_up_to: n }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolynomialEnvelopeVerdict<T> {
    pub holds: bool,
    pub nu: T,
    /// `max_x φ(x) / (2K φ(1) x^ν)`, zero when `φ ≡ 0`.
    pub worst_ratio: T,
    pub first_violation: Option<usize>,
}

/// Checks the polynomial envelope `φ(x) ≤ 2K φ(1) x^ν` on `{1, …, N}`.
///
/// The envelope is only guaranteed for `K`-subpolynomial `φ`, so the
/// subpolynomial property is verified first on the same window.
pub fn polynomial_envelope_check<T: Real>(phi: &SubpolynomialFunction<T>, k: T, n: usize) -> Result<PolynomialEnvelopeVerdict<T>> {
    if k < T::lit(0.5) {
        return Err(Error::ParameterDomain(format!("K must be at least 1/2, got {k}")));
    }
    let pre = check_subpolynomial(phi, k, n);
    if !pre.passed {
        let (x, y) = pre.witness.unwrap();
        return Err(Error::Contract(format!("phi is not {k}-subpolynomial: fails at ({x}, {y})")));
    }
    let nu = growth_exponent(k);
    let n = pre.checked_up_to;
    let phi1 = phi.get(1).unwrap_or_else(T::zero);
    let two_k = T::lit(2.0) * k;
    // Relative slack for rounding in the product on the right.
    let slack = T::one() + T::lit(64.0) * T::epsilon();
    let mut worst = T::zero();
    let mut first_violation = None;
    for x in 1..=n {
        let bound = two_k * phi1 * T::from_usize_lossy(x).powf(nu);
        let value = phi.get(x).unwrap();
        if value > bound * slack && first_violation.is_none() {
            first_violation = Some(x);
        }
        if bound > T::zero() {
            worst = worst.max(value / bound);
        } else if value > T::zero() {
            worst = T::infinity();
        }
    }
    Ok(PolynomialEnvelopeVerdict { holds: first_violation.is_none(), nu, worst_ratio: worst, first_violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phi(n: usize, f: impl Fn(usize) -> f64) -> SubpolynomialFunction<f64> {
        SubpolynomialFunction::from_fn(n, f).unwrap()
    }

    #[test]
    fn square_is_two_subpolynomial() {
        let p = phi(200, |x| (x * x) as f64);
        assert!(check_subpolynomial(&p, 2.0, 200).passed);
        let v = check_subpolynomial(&p, 1.0, 200);
        assert!(!v.passed);
        assert_eq!(v.witness, Some((1, 1)));
    }

    #[test]
    fn exponential_fails() {
        let p = phi(64, |x| 2f64.powi(x as i32));
        let v = check_subpolynomial(&p, 4.0, 64);
        assert!(!v.passed);
        // Brute-force scan in the same order.
        let mut oracle = None;
        'outer: for s in 2..=64usize {
            for x in 1..=s / 2 {
                let y = s - x;
                if 2f64.powi(s as i32) > 4.0 * (2f64.powi(x as i32) + 2f64.powi(y as i32)) {
                    oracle = Some((x, y));
                    break 'outer;
                }
            }
        }
        assert_eq!(v.witness, oracle);
        assert_eq!(v.witness, Some((3, 4)));
    }

    #[test]
    fn growth_exponent_values() {
        assert!((growth_exponent(2.0f64) - 2.0).abs() < 1e-15);
        assert!((growth_exponent(1.0f64) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn envelope_identity_scale() {
        let p = phi(100, |x| x as f64);
        let v = polynomial_envelope_check(&p, 1.0, 100).unwrap();
        assert!(v.holds);
        assert!((v.worst_ratio - 0.5).abs() < 1e-15);
        let p = phi(100, |x| (x * x) as f64);
        let v = polynomial_envelope_check(&p, 2.0, 100).unwrap();
        assert!(v.holds);
        assert!((v.worst_ratio - 0.25).abs() < 1e-15);
    }

    #[test]
    fn envelope_needs_precondition() {
        let p = phi(100, |x| (x * x) as f64);
        assert!(matches!(polynomial_envelope_check(&p, 1.0, 100), Err(Error::Contract(_))));
    }

    #[test]
    fn rejects_negative_values() {
        assert!(SubpolynomialFunction::new(vec![1.0, -0.5]).is_err());
    }

    proptest! {
        // Sums of powers x^β with β ≤ 1 are 1-subpolynomial (subadditive);
        // everything passing the check must satisfy the envelope.
        #[test]
        fn passing_implies_envelope(
            coeffs in proptest::collection::vec((0.0f64..3.0, 0.0f64..2.5), 1..4),
            k in 0.5f64..4.0,
        ) {
            let p = phi(128, |x| coeffs.iter().map(|(c, b)| c * (x as f64).powf(*b)).sum::<f64>() + 0.1);
            if check_subpolynomial(&p, k, 128).passed {
                let v = polynomial_envelope_check(&p, k, 128).unwrap();
                prop_assert!(v.holds, "worst ratio {}", v.worst_ratio);
            }
        }
    }
}
