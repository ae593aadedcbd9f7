use serde::Serialize;

use super::ensemble::ZeroRangeEnsemble;
use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InteractionKind<T> {
    /// `g(k) = k`: independent particles.
    Linear,
    /// `g(k) = 1{k ≥ 1}`.
    Indicator,
    /// `values[k] = g(k)` for `k = 0, …, values.len() - 1`.
    Table(Vec<T>),
}

/// Departure rate `g` of the zero-range process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionRate<T> {
    kind: InteractionKind<T>,
}

impl<T: Real> InteractionRate<T> {
    pub fn linear() -> Self {
        Self { kind: InteractionKind::Linear }
    }

    pub fn indicator() -> Self {
        Self { kind: InteractionKind::Indicator }
    }

    /// Table with `g(0) = 0` and `g(k) > 0` for `k ≥ 1`.
    pub fn table(values: Vec<T>) -> Result<Self> {
        if values.first() != Some(&T::zero()) {
            return Err(Error::ParameterDomain("g(0) must be 0".into()));
        }
        if let Some((k, v)) = values.iter().enumerate().skip(1).find(|(_, v)| !(v.is_finite() && **v > T::zero())) {
            return Err(Error::ParameterDomain(format!("g({k}) = {v} must be finite and positive")));
        }
        Ok(Self { kind: InteractionKind::Table(values) })
    }

    pub fn kind(&self) -> &InteractionKind<T> {
        &self.kind
    }

    /// Largest `k` with a known `g(k)`.
    pub fn max_defined(&self) -> Option<usize> {
        match &self.kind {
            InteractionKind::Table(v) => Some(v.len() - 1),
            _ => None,
        }
    }

    pub fn eval(&self, k: usize) -> Option<T> {
        match &self.kind {
            InteractionKind::Linear => Some(T::from_usize_lossy(k)),
            InteractionKind::Indicator => Some(if k == 0 { T::zero() } else { T::one() }),
            InteractionKind::Table(v) => v.get(k).copied(),
        }
    }

    /// `ln g(k)! = Σ_{j=1}^{k} ln g(j)`.
    pub fn ln_factorial(&self, k: usize) -> Option<T> {
        (1..=k).try_fold(T::zero(), |acc, j| self.eval(j).map(|g| acc + g.ln()))
    }

    /// `sup_{k < ell_max} |g(k+1) - g(k)|` on the checked range.
    pub fn andjel_constant(&self, ell_max: usize) -> Option<T> {
        (0..ell_max).try_fold(T::zero(), |acc, k| Some(acc.max((self.eval(k + 1)? - self.eval(k)?).abs())))
    }

    pub fn descriptor(&self) -> String {
        match &self.kind {
            InteractionKind::Linear => "linear".into(),
            InteractionKind::Indicator => "indicator".into(),
            InteractionKind::Table(v) => format!("table(len={})", v.len()),
        }
    }

    pub(crate) fn require_range(&self, ell: usize) -> Result<()> {
        match self.max_defined() {
            Some(m) if m < ell => Err(Error::ParameterDomain(format!("g is tabulated up to {m}, needs {ell}"))),
            _ => Ok(()),
        }
    }
}

/// Canonical zero-range measure `μ(ξ) ∝ Π_x 1 / g(ξ_x)!`.
#[derive(Debug, Clone)]
pub struct ZeroRangeMeasure<T> {
    pub weights: Vec<T>,
    /// `ln Z_{n,ℓ}`.
    pub ln_partition: T,
}

/// Normalised weights, computed in log space.
pub fn zero_range_measure<T: Real>(g: &InteractionRate<T>, e: &ZeroRangeEnsemble) -> Result<ZeroRangeMeasure<T>> {
    g.require_range(e.ell())?;
    let table: Vec<T> = (0..=e.ell()).map(|k| g.ln_factorial(k).unwrap()).collect();
    let logs: Vec<T> = e.states().map(|xi| -xi.iter().map(|&v| table[v as usize]).sum::<T>()).collect();
    let top = logs.iter().copied().fold(T::neg_infinity(), T::max);
    let total: T = logs.iter().map(|l| (*l - top).exp()).sum();
    let ln_partition = top + total.ln();
    let weights = logs.iter().map(|l| (*l - ln_partition).exp()).collect();
    Ok(ZeroRangeMeasure { weights, ln_partition })
}

/// Which lower-bound regime a departure rate falls in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GrowthCase<T> {
    /// `g(k + ℓ₀) > g(k) + ε₀` for every checked `k`.
    Increasing { eps0: T, ell0: usize },
    /// Exactly the indicator.
    Indicator,
}

/// Classifies `g` on `{0, …, ell_max}`; tables are matched by a scan for
/// a witness `(ε₀, ℓ₀)`.
pub fn classify<T: Real>(g: &InteractionRate<T>, ell_max: usize) -> Result<GrowthCase<T>> {
    match g.kind() {
        InteractionKind::Linear => Ok(GrowthCase::Increasing { eps0: T::lit(0.5), ell0: 1 }),
        InteractionKind::Indicator => Ok(GrowthCase::Indicator),
        InteractionKind::Table(v) => {
            let top = (v.len() - 1).min(ell_max.max(1));
            if (1..=top).all(|k| v[k] == T::one()) {
                return Ok(GrowthCase::Indicator);
            }
            // the shift must leave at least as many steps as it spans
            for ell0 in 1..=top / 2 {
                let min_step = (0..=top - ell0).map(|k| v[k + ell0] - v[k]).fold(T::infinity(), T::min);
                if min_step > T::zero() {
                    return Ok(GrowthCase::Increasing { eps0: min_step / T::lit(2.0), ell0 });
                }
            }
            Err(Error::Classification(format!(
                "no shift l0 <= {top} with g(k + l0) - g(k) bounded below, and g is not the indicator"
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particles::enumerate_zero_range;

    #[test]
    fn table_validation() {
        assert!(InteractionRate::table(vec![1.0, 1.0]).is_err());
        assert!(InteractionRate::table(vec![0.0, 0.0]).is_err());
        let g = InteractionRate::table(vec![0.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.eval(2), Some(3.0));
        assert_eq!(g.eval(3), None);
        assert!((g.ln_factorial(2).unwrap() - 6f64.ln()).abs() < 1e-15);
        assert_eq!(g.andjel_constant(2), Some(2.0));
    }

    #[test]
    fn indicator_measure_is_uniform() {
        let e = enumerate_zero_range(1, 3).unwrap();
        let m = zero_range_measure(&InteractionRate::<f64>::indicator(), &e).unwrap();
        for w in &m.weights {
            assert!((w - 1.0 / e.len() as f64).abs() < 1e-15);
        }
        assert!((m.ln_partition - (e.len() as f64).ln()).abs() < 1e-13);
    }

    #[test]
    fn linear_measure_is_multinomial() {
        let e = enumerate_zero_range(1, 4).unwrap();
        let m = zero_range_measure(&InteractionRate::<f64>::linear(), &e).unwrap();
        let fact = |k: u16| (1..=k as u64).product::<u64>() as f64;
        // Multinomial: μ(ξ) = 4! / Π ξ_x! · 3^{-4}.
        for (xi, w) in e.states().zip(&m.weights) {
            let want = 24.0 / xi.iter().map(|&v| fact(v)).product::<f64>() / 81.0;
            assert!((w - want).abs() < 1e-14);
        }
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_ell_is_finite() {
        let e = enumerate_zero_range(1, 64).unwrap();
        let m = zero_range_measure(&InteractionRate::<f64>::linear(), &e).unwrap();
        assert!(m.weights.iter().all(|w| w.is_finite() && *w > 0.0));
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classification() {
        assert!(matches!(classify(&InteractionRate::<f64>::linear(), 5), Ok(GrowthCase::Increasing { ell0: 1, .. })));
        assert_eq!(classify(&InteractionRate::<f64>::indicator(), 5).unwrap(), GrowthCase::Indicator);
        let ind = InteractionRate::table(vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(classify(&ind, 3).unwrap(), GrowthCase::Indicator);
        // Grows only every second step.
        let stairs = InteractionRate::table(vec![0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap();
        assert!(matches!(classify(&stairs, 6).unwrap(), GrowthCase::Increasing { ell0: 2, .. }));
        let bounded = InteractionRate::table(vec![0.0, 1.0, 2.0, 2.0, 2.0, 2.0]).unwrap();
        assert!(matches!(classify(&bounded, 5), Err(Error::Classification(_))));
    }
}
