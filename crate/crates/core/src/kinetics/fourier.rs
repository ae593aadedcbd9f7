//! Return probabilities on all of `ℤ` from the characteristic exponent
//! `ψ(k) = Σ_z p(z) (1 - cos kz)`:
//! `P^0(x(t) = x) = (1/π) ∫_0^π cos(kx) e^{-tψ(k)} dk`.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::rates::{RateKind, TailRule, TransitionRate};
use crate::Real;

const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Riemann zeta on the real line, `s ≠ 1`.
pub fn zeta(s: f64) -> f64 {
    if s < 0.0 {
        // functional equation
        return 2f64.powf(s) * PI.powf(s - 1.0) * (PI * s / 2.0).sin() * gamma(1.0 - s) * zeta(1.0 - s);
    }
    let n = 16.0f64;
    let mut acc: f64 = (1..16).map(|j| (j as f64).powf(-s)).sum();
    acc += n.powf(1.0 - s) / (s - 1.0) + n.powf(-s) / 2.0;
    let mut rising = s;
    let mut fact = 2.0;
    let mut npow = n.powf(-s - 1.0);
    for (j, b) in BERNOULLI.iter().enumerate() {
        acc += b / fact * rising * npow;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        fact *= (m + 3.0) * (m + 4.0);
        npow /= n * n;
    }
    acc
}

/// `Σ_{z≥1} z^{-s} (1 - cos kz)` for `s ∈ (1, 3)`, `0 ≤ k ≤ π`.
fn power_symbol_half(s: f64, k: f64) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    if (s - 2.0).abs() < 1e-14 {
        return PI * k / 2.0 - k * k / 4.0;
    }
    let mut acc = -gamma(1.0 - s) * (PI * (s - 1.0) / 2.0).cos() * k.powf(s - 1.0);
    let mut term_k = 1.0;
    for m in 1..=60 {
        term_k *= k * k / ((2 * m - 1) as f64 * (2 * m) as f64);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let t = -sign * zeta(s - 2.0 * m as f64) * term_k;
        acc += t;
        if t.abs() < 1e-18 * acc.abs() {
            break;
        }
    }
    acc
}

/// `Li_s(e^{ik})` for `s ∈ (0, 2)`, `0 < k ≤ π`.
fn polylog_unit(s: f64, k: f64) -> Complex64 {
    if (s - 1.0).abs() < 1e-14 {
        return Complex64::new(-(2.0 * (k / 2.0).sin()).ln(), (PI - k) / 2.0);
    }
    let lead = Complex64::from_polar(k.powf(s - 1.0), -PI * (s - 1.0) / 2.0) * gamma(1.0 - s);
    let mut acc = lead;
    let mut power = Complex64::new(1.0, 0.0);
    let ik = Complex64::new(0.0, k);
    for m in 0..=80 {
        if m > 0 {
            power = power * ik / m as f64;
        }
        let t = power * zeta(s - m as f64);
        acc += t;
        if m > 4 && t.norm() < 1e-18 * acc.norm() {
            break;
        }
    }
    acc
}

fn finite_symbol_half(values: impl Iterator<Item = (u64, f64)>, k: f64) -> f64 {
    values.map(|(z, p)| 2.0 * p * (k * z as f64 / 2.0).sin().powi(2)).sum()
}

/// `ψ(k) = Σ_{z ∈ ℤ} p(z)(1 - cos kz)` for `0 ≤ k ≤ π`.
///
/// Available for power laws, `q₀`, finite tables and tables with a
/// power-law tail; lacunary rates have no closed form here.
pub fn characteristic_exponent<T: Real>(p: &TransitionRate<T>, k: f64) -> Result<f64> {
    let half = match p.kind() {
        RateKind::PowerLaw => power_symbol_half(1.0 + p.alpha().unwrap().as_f64(), k),
        RateKind::QZero => {
            if k == 0.0 {
                0.0
            } else {
                let a = p.alpha().unwrap().as_f64();
                let e = Complex64::from_polar(1.0, -k) - 1.0;
                (e * polylog_unit(a, k)).re
            }
        }
        RateKind::Table { values, tail } => {
            let head = values.iter().enumerate().map(|(i, v)| (i as u64 + 1, v.as_f64()));
            let mut acc = finite_symbol_half(head, k);
            if let TailRule::PowerLaw { alpha, scale } = tail {
                let s = 1.0 + alpha.as_f64();
                let covered = (1..=values.len() as u64).map(|z| (z, (z as f64).powf(-s)));
                acc += scale.as_f64() * (power_symbol_half(s, k) - finite_symbol_half(covered, k));
            }
            acc
        }
        RateKind::Lacunary(_) => {
            return Err(Error::ParameterDomain("no closed-form characteristic exponent for lacunary rates".into()))
        }
    };
    Ok(2.0 * p.scale().as_f64() * half)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` via the Jacobi matrix.
fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = vec![0.0; order * order];
    for i in 1..order {
        let b = i as f64 / ((4 * i * i - 1) as f64).sqrt();
        jacobi[i * order + i - 1] = b;
        jacobi[(i - 1) * order + i] = b;
    }
    let eig = symmetric_eigen(&jacobi, order, true).expect("small tridiagonal eigenproblem");
    let weights = (0..order).map(|j| 2.0 * eig.vector(j).unwrap()[0].powi(2)).collect();
    (eig.values, weights)
}

/// `P^0(x(t) = x)` on `ℤ` by quadrature of the inverse Fourier integral.
pub fn return_probability_fourier<T: Real>(p: &TransitionRate<T>, t: T, x: i64) -> Result<T> {
    let t = t.as_f64();
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::ParameterDomain(format!("time must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(if x == 0 { T::one() } else { T::zero() });
    }
    characteristic_exponent(p, 1.0)?;
    let (nodes, weights) = gauss_legendre(24);
    let integrand = |k: f64| -> f64 {
        let psi = characteristic_exponent(p, k).unwrap();
        (k * x as f64).cos() * (-t * psi).exp()
    };
    let mut total = 0.0;
    let mut hi = PI;
    // dyadic panels towards k = 0, each cut so it holds at most one period of cos(kx)
    for _ in 0..64 {
        let lo = hi / 2.0;
        let pieces = (((hi - lo) * x.unsigned_abs() as f64 / PI).ceil() as usize).max(1);
        let width = (hi - lo) / pieces as f64;
        for piece in 0..pieces {
            let a = lo + piece as f64 * width;
            let mid = a + width / 2.0;
            let half = width / 2.0;
            total += nodes.iter().zip(&weights).map(|(u, w)| w * integrand(mid + half * u)).sum::<f64>() * half;
        }
        hi = lo;
    }
    total += hi; // the remaining [0, π 2^-64] contributes its length
    Ok(T::lit(total / PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::Anchors;

    #[test]
    fn zeta_values() {
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((zeta(-1.0) + 1.0 / 12.0).abs() < 1e-14);
        assert!((zeta(0.0) + 0.5).abs() < 1e-14);
        assert!(zeta(-2.0).abs() < 1e-14);
        assert!((zeta(0.5) + 1.4603545088095868).abs() < 1e-13);
        assert!((zeta(1.5) - 2.612375348685488).abs() < 1e-13);
        assert!((zeta(-0.5) + 0.2078862249773545).abs() < 1e-13);
    }

    fn brute_half(p: &TransitionRate<f64>, k: f64, terms: u64) -> f64 {
        (1..=terms).map(|z| p.eval(z as i64) * (1.0 - (k * z as f64).cos())).sum()
    }

    #[test]
    fn power_symbol_matches_sum() {
        for alpha in [0.5, 1.0, 1.5] {
            let p = TransitionRate::power_law(alpha).unwrap();
            for k in [0.3, 1.0, 2.5] {
                let terms = 2_000_000;
                // leftover tail is below ∫ 2 z^{-1-α} over z > terms
                let bound = 4.0 * (terms as f64).powf(-alpha) / alpha;
                let got = characteristic_exponent(&p, k).unwrap();
                let want = 2.0 * brute_half(&p, k, terms);
                assert!((got - want).abs() < bound, "alpha {alpha} k {k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn q_zero_symbol_matches_sum() {
        for alpha in [0.5, 1.0, 1.5] {
            let p = TransitionRate::q_zero(alpha).unwrap();
            for k in [0.4, 2.0] {
                let terms = 2_000_000;
                let bound = 4.0 * (terms as f64).powf(-alpha);
                let got = characteristic_exponent(&p, k).unwrap();
                let want = 2.0 * brute_half(&p, k, terms);
                assert!((got - want).abs() < bound, "alpha {alpha} k {k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn symbol_at_pi_is_total_odd_mass() {
        // 1 - cos(πz) is 2 on odd z and 0 on even z.
        let p = TransitionRate::power_law(1.0).unwrap();
        let odd = (1.0 - 0.25) * PI * PI / 6.0;
        assert!((characteristic_exponent(&p, PI).unwrap() - 4.0 * odd).abs() < 1e-12);
    }

    #[test]
    fn nearest_neighbor_return_probability() {
        // P^0(x(t)=0) = e^{-2t} I_0(2t); at t = 1 this is 0.3085083...
        let p = TransitionRate::<f64>::nearest_neighbor(1.0).unwrap();
        let v = return_probability_fourier(&p, 1.0, 0).unwrap();
        assert!((v - 0.30850832255367094).abs() < 1e-13);
        // Probabilities over a wide window sum to one.
        let total: f64 = (-60..=60).map(|x| return_probability_fourier(&p, 1.0, x).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lacunary_has_no_symbol() {
        let p = TransitionRate::lacunary(1.0, Anchors::default()).unwrap();
        assert!(return_probability_fourier(&p, 1.0, 0).is_err());
    }
}
