use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::{check_subpolynomial, SubpolynomialFunction, TransitionRate};
use crate::Real;

/// `D_p(A) = Σ_{x∈A} p(x) φ(x)`.
pub fn dirichlet_sum<T: Real>(
    p: &TransitionRate<T>,
    phi: &SubpolynomialFunction<T>,
    set: impl IntoIterator<Item = u64>,
) -> Result<T> {
    let mut acc = T::zero();
    for x in set {
        let v = usize::try_from(x)
            .ok()
            .and_then(|i| phi.get(i))
            .ok_or_else(|| Error::ParameterDomain(format!("phi is not defined at {x}")))?;
        acc = acc + p.eval(x as i64) * v;
    }
    Ok(acc)
}

/// `φ(k) = Σ_x (f(x+k) - f(x))²` for `k = 1, …, 2n`, where `f` lists the
/// values on `Λ_n` from `-n` to `n`. Always 2-subpolynomial.
pub fn dirichlet_profile<T: Real>(f: &[T]) -> SubpolynomialFunction<T> {
    let len = f.len().saturating_sub(1);
    let values = (1..=len)
        .map(|k| f[k..].iter().zip(f).fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b)))
        .collect();
    SubpolynomialFunction::new(values).expect("sums of squares are nonnegative").with_claim(T::lit(2.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioRow<T> {
    pub index: usize,
    #[serde(rename = "K")]
    pub k: T,
    /// `sup_{n ≤ n_max} D_q(I_n) / D_p(I_n)`.
    pub sup_ratio: T,
    pub argmax_n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport<T> {
    pub rows: Vec<RatioRow<T>>,
    pub sup_ratio: T,
    pub n_max: usize,
    pub kappa: Option<T>,
    pub within_kappa: Option<bool>,
}

fn ratio_row<T: Real>(
    p: &TransitionRate<T>,
    q: &TransitionRate<T>,
    index: usize,
    phi: &SubpolynomialFunction<T>,
    n_max: usize,
) -> Result<RatioRow<T>> {
    let k = phi
        .k_claim
        .ok_or_else(|| Error::Contract(format!("phi #{index} carries no K claim")))?;
    if phi.len() < n_max {
        return Err(Error::ParameterDomain(format!("phi #{index} is defined only up to {}", phi.len())));
    }
    let verdict = check_subpolynomial(phi, k, n_max);
    if let Some((x, y)) = verdict.witness {
        return Err(Error::Contract(format!("phi #{index} is not {k}-subpolynomial: fails at ({x}, {y})")));
    }
    let mut dq = T::zero();
    let mut dp = T::zero();
    let mut sup = T::zero();
    let mut argmax = 0;
    for n in 1..=n_max {
        let v = phi.get(n).unwrap();
        dq = dq + q.eval(n as i64) * v;
        dp = dp + p.eval(n as i64) * v;
        if dp == T::zero() {
            if dq > T::zero() {
                return Err(Error::ComparisonViolated(format!("D_p(I_{n}) = 0 < D_q(I_{n}) for phi #{index}")));
            }
            continue;
        }
        let r = dq / dp;
        if r > sup {
            sup = r;
            argmax = n;
        }
    }
    Ok(RatioRow { index, k, sup_ratio: sup, argmax_n: argmax })
}

/// `1`, `x`, `x²` and the profiles of four test functions on `Λ_{n/2}`
/// (a step, a slow sine, `√|x|` and seeded noise), all defined up to `n`.
pub fn reference_family(n: usize, seed: u64) -> Result<Vec<SubpolynomialFunction<f64>>> {
    use rand::{Rng, SeedableRng};
    if n < 2 {
        return Err(Error::ParameterDomain(format!("family needs n ≥ 2, got {n}")));
    }
    let mut family = vec![
        SubpolynomialFunction::from_fn(n, |_| 1.0)?.with_claim(1.0),
        SubpolynomialFunction::from_fn(n, |x| x as f64)?.with_claim(1.0),
        SubpolynomialFunction::from_fn(n, |x| (x * x) as f64)?.with_claim(2.0),
    ];
    let half = n.div_ceil(2);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for shape in 0..4 {
        let f: Vec<f64> = (0..=2 * half)
            .map(|i| {
                let x = i as f64 - half as f64;
                match shape {
                    0 => (x > 0.0) as u8 as f64,
                    1 => (x * 0.013).sin(),
                    2 => x.abs().sqrt(),
                    _ => rng.random_range(-1.0..1.0),
                }
            })
            .collect();
        family.push(dirichlet_profile(&f));
    }
    Ok(family)
}

/// Empirical `sup_n D_q(I_n) / D_p(I_n)` with `q(z) = |z|^{-(1+α)}`, for
/// every `φ` in the family (each must carry a verified `K` claim).
pub fn verify_comparison<T: Real>(
    p: &TransitionRate<T>,
    alpha: T,
    family: &[SubpolynomialFunction<T>],
    n_max: usize,
    kappa: Option<T>,
) -> Result<ComparisonReport<T>> {
    if n_max == 0 {
        return Err(Error::ParameterDomain("n_max must be at least 1".into()));
    }
    let q = TransitionRate::power_law(alpha)?;
    let rows = family
        .par_iter()
        .enumerate()
        .map(|(i, phi)| ratio_row(p, &q, i, phi, n_max))
        .collect::<Result<Vec<_>>>()?;
    let sup_ratio = rows.iter().map(|r| r.sup_ratio).fold(T::zero(), T::max);
    Ok(ComparisonReport { within_kappa: kappa.map(|k| sup_ratio <= k), rows, sup_ratio, n_max, kappa })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::Anchors;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sums() {
        let q = TransitionRate::<f64>::power_law(1.0).unwrap();
        let sq = SubpolynomialFunction::from_fn(10, |x| (x * x) as f64).unwrap();
        assert!((dirichlet_sum(&q, &sq, [1, 2]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(dirichlet_sum(&q, &sq, []).unwrap(), 0.0);
        let one = SubpolynomialFunction::from_fn(10, |_| 1.0).unwrap();
        let want: f64 = (1..=7).map(|z| q.eval(z)).sum();
        assert!((dirichlet_sum(&q, &one, 1..=7).unwrap() - want).abs() < 1e-15);
        assert!(matches!(dirichlet_sum(&q, &one, [11]), Err(Error::ParameterDomain(_))));
    }

    #[test]
    fn profile_examples() {
        let phi = dirichlet_profile(&[3.0, 3.0, 3.0]);
        assert!(phi.values().iter().all(|v| *v == 0.0));
        let phi = dirichlet_profile(&[-1.0, 0.0, 1.0]);
        assert_eq!(phi.values(), &[2.0, 4.0]);
    }

    #[test]
    fn profile_is_two_subpolynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let f: Vec<f64> = (0..33).map(|_| rng.random_range(-1.0..1.0)).collect();
            let phi = dirichlet_profile(&f);
            assert!(check_subpolynomial(&phi, 2.0, 32).passed);
        }
    }

    #[test]
    fn bridge_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = TransitionRate::<f64>::power_law(0.8).unwrap();
        let n = 12;
        let f: Vec<f64> = (0..2 * n + 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut lhs = 0.0;
        for x in 0..f.len() {
            for y in 0..f.len() {
                lhs += p.eval(y as i64 - x as i64) * (f[y] - f[x]).powi(2);
            }
        }
        let phi = dirichlet_profile(&f);
        let rhs = 2.0 * dirichlet_sum(&p, &phi, 1..=2 * n as u64).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn identical_rates_give_ratio_one() {
        let q = TransitionRate::<f64>::power_law(1.0).unwrap();
        let fam = vec![
            SubpolynomialFunction::from_fn(500, |_| 1.0).unwrap().with_claim(1.0),
            SubpolynomialFunction::from_fn(500, |x| (x * x) as f64).unwrap().with_claim(2.0),
        ];
        let r = verify_comparison(&q, 1.0, &fam, 500, None).unwrap();
        for row in &r.rows {
            assert!((row.sup_ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lacunary_ratio_finite() {
        let p = TransitionRate::<f64>::lacunary(1.0, Anchors::default()).unwrap();
        let fam = vec![SubpolynomialFunction::from_fn(2000, |x| (x * x) as f64).unwrap().with_claim(2.0)];
        let r = verify_comparison(&p, 1.0, &fam, 2000, Some(1e12)).unwrap();
        // Direct double summation at the reported maximiser.
        let n = r.rows[0].argmax_n as i64;
        let dq: f64 = (1..=n).map(|z| (z as f64).powi(-2) * (z * z) as f64).sum();
        let dp: f64 = (1..=n).map(|z| p.eval(z) * (z * z) as f64).sum();
        assert!((r.sup_ratio - dq / dp).abs() < 1e-9 * r.sup_ratio);
        assert_eq!(r.within_kappa, Some(true));
    }

    #[test]
    fn family_must_be_subpolynomial() {
        let q = TransitionRate::<f64>::power_law(1.0).unwrap();
        let bad = vec![SubpolynomialFunction::from_fn(40, |x| 2f64.powi(x as i32)).unwrap().with_claim(2.0)];
        assert!(matches!(verify_comparison(&q, 1.0, &bad, 40, None), Err(Error::Contract(_))));
        let unclaimed = vec![SubpolynomialFunction::from_fn(40, |_| 1.0).unwrap()];
        assert!(matches!(verify_comparison(&q, 1.0, &unclaimed, 40, None), Err(Error::Contract(_))));
    }
}
