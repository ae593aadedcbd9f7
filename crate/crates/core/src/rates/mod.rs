//! Symmetric jump rates on the integers and their tail diagnostics.
//!
//! A [`TransitionRate`] is always symmetric with `p(0) = 0` and `p(1) > 0`;
//! constructors refuse anything else. Evaluation takes `z` of either sign.

mod subpoly;
mod sums;
mod table;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::Real;

pub use subpoly::{check_subpolynomial, growth_exponent, polynomial_envelope_check, PolynomialEnvelopeVerdict, SubpolyVerdict, SubpolynomialFunction};
pub use sums::{power_range, power_tail, TailEstimate};
pub use table::parse_table;

/// Anchor sequence `z_1 < z_2 < …` carrying a lacunary rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Anchors {
    /// `z_ℓ = ℓ^degree`; degree 2 is the default.
    Power { degree: u32 },
    /// A finite list. The last anchor absorbs the whole remaining tail, so the
    /// rate has bounded support and is not in the stable domain.
    Explicit(Vec<u64>),
}

impl Default for Anchors {
    fn default() -> Self {
        Anchors::Power { degree: 2 }
    }
}

impl Anchors {
    fn validate(&self) -> Result<()> {
        match self {
            Anchors::Power { degree } if *degree >= 1 => Ok(()),
            Anchors::Power { .. } => Err(Error::ParameterDomain("anchor degree must be at least 1".into())),
            Anchors::Explicit(list) => {
                if list.first() != Some(&1) {
                    return Err(Error::ParameterDomain("first anchor must be 1".into()));
                }
                if let Some(w) = list.windows(2).find(|w| w[1] <= w[0]) {
                    return Err(Error::ParameterDomain(format!(
                        "anchors must be strictly increasing, got {} then {}",
                        w[0], w[1]
                    )));
                }
                Ok(())
            }
        }
    }

    /// The `ℓ`-th anchor, 1-based.
    pub fn anchor(&self, l: u64) -> Option<u64> {
        match self {
            Anchors::Power { degree } => l.checked_pow(*degree),
            Anchors::Explicit(list) => list.get(usize::try_from(l).ok()?.checked_sub(1)?).copied(),
        }
    }

    /// Index and value of the smallest anchor `≥ x`.
    pub fn first_at_or_after(&self, x: u64) -> Option<(u64, u64)> {
        match self {
            Anchors::Power { degree } => {
                let d = *degree;
                let mut r = (x as f64).powf(1.0 / d as f64).floor().max(1.0) as u64;
                while r.checked_pow(d).is_some_and(|v| v < x) {
                    r += 1;
                }
                while r > 1 && (r - 1).checked_pow(d).is_some_and(|v| v >= x) {
                    r -= 1;
                }
                r.checked_pow(d).map(|z| (r, z))
            }
            Anchors::Explicit(list) => {
                let i = list.partition_point(|&z| z < x);
                list.get(i).map(|&z| (i as u64 + 1, z))
            }
        }
    }

    /// Index of `z` if it is an anchor.
    pub fn index_of(&self, z: u64) -> Option<u64> {
        self.first_at_or_after(z).filter(|&(_, a)| a == z).map(|(l, _)| l)
    }
}

/// Behaviour of a table-backed rate past its last tabulated point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailRule<T> {
    /// `p(z) = 0` beyond the horizon. Such a rate is not in any stable domain.
    Zero,
    /// `p(z) = scale · z^{-(1+alpha)}` beyond the horizon.
    PowerLaw { alpha: T, scale: T },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RateKind<T> {
    /// `q(z) = |z|^{-(1+α)}`.
    PowerLaw,
    /// `q₀(z) = |z|^{-α} - (|z|+1)^{-α}`.
    QZero,
    /// `p(±z_ℓ) = z_ℓ^{-α} - z_{ℓ+1}^{-α}`, zero off the anchors.
    Lacunary(Anchors),
    /// `values[z-1] = p(z)` for `1 ≤ z ≤ values.len()`.
    Table { values: Vec<T>, tail: TailRule<T> },
}

/// A symmetric transition rate `p: ℤ → [0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionRate<T> {
    kind: RateKind<T>,
    alpha: Option<T>,
    scale: T,
}

fn check_alpha<T: Real>(alpha: T) -> Result<T> {
    if alpha.is_finite() && alpha > T::zero() && alpha < T::lit(2.0) {
        Ok(alpha)
    } else {
        Err(Error::ParameterDomain(format!("alpha must lie in (0, 2), got {alpha}")))
    }
}

impl<T: Real> TransitionRate<T> {
    /// `q(z) = |z|^{-(1+α)}`, tail constant `1/α`.
    pub fn power_law(alpha: T) -> Result<Self> {
        Ok(Self { kind: RateKind::PowerLaw, alpha: Some(check_alpha(alpha)?), scale: T::one() })
    }

    /// `q₀(z) = |z|^{-α} - (|z|+1)^{-α}`, tail constant 1.
    pub fn q_zero(alpha: T) -> Result<Self> {
        Ok(Self { kind: RateKind::QZero, alpha: Some(check_alpha(alpha)?), scale: T::one() })
    }

    /// Lacunary rate supported on `±z_ℓ`.
    pub fn lacunary(alpha: T, anchors: Anchors) -> Result<Self> {
        let alpha = check_alpha(alpha)?;
        anchors.validate()?;
        Ok(Self { kind: RateKind::Lacunary(anchors), alpha: Some(alpha), scale: T::one() })
    }

    /// Table-backed rate. `values[0]` is `p(1)` and must be positive.
    pub fn table(values: Vec<T>, tail: TailRule<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ParameterDomain("rate table is empty".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= T::zero())) {
            return Err(Error::ParameterDomain(format!("p({}) = {v} is not a finite nonnegative number", i + 1)));
        }
        if values[0] <= T::zero() {
            return Err(Error::Irreducible("p(1) must be positive".into()));
        }
        let alpha = match tail {
            TailRule::Zero => None,
            TailRule::PowerLaw { alpha, scale } => {
                if !(scale.is_finite() && scale > T::zero()) {
                    return Err(Error::ParameterDomain(format!("tail scale must be positive, got {scale}")));
                }
                Some(check_alpha(alpha)?)
            }
        };
        Ok(Self { kind: RateKind::Table { values, tail }, alpha, scale: T::one() })
    }

    /// Nearest-neighbour walk `p(±1) = rate`.
    pub fn nearest_neighbor(rate: T) -> Result<Self> {
        Self::table(vec![rate], TailRule::Zero)
    }

    /// Constant `rate` for `1 ≤ |z| ≤ horizon`. On `Λ_n` with `horizon ≥ 2n`
    /// this is the complete graph.
    pub fn constant_range(rate: T, horizon: usize) -> Result<Self> {
        Self::table(vec![rate; horizon.max(1)], TailRule::Zero)
    }

    pub fn kind(&self) -> &RateKind<T> {
        &self.kind
    }

    /// Stability index, `None` for finite-range tables.
    pub fn alpha(&self) -> Option<T> {
        self.alpha
    }

    /// Multiplicative factor applied on top of the base rate.
    pub fn scale(&self) -> T {
        self.scale
    }

    /// Exponent `β` in the expected gap scaling `λ_n ~ (2n+1)^{-β}`:
    /// `α` in the stable domain and 2 for finite-range rates.
    pub fn scaling_exponent(&self) -> T {
        self.alpha.unwrap_or_else(|| T::lit(2.0))
    }

    /// `c · p` for `c > 0`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        if !(factor.is_finite() && factor > T::zero()) {
            return Err(Error::ParameterDomain(format!("rescale factor must be positive, got {factor}")));
        }
        Ok(Self { scale: self.scale * factor, ..self.clone() })
    }

    /// `p(z)` for any integer `z`.
    pub fn eval(&self, z: i64) -> T {
        if z == 0 {
            return T::zero();
        }
        self.scale * self.base(z.unsigned_abs())
    }

    fn base(&self, z: u64) -> T {
        let zf = || T::from_u64(z).unwrap();
        match &self.kind {
            RateKind::PowerLaw => zf().powf(-(T::one() + self.alpha.unwrap())),
            RateKind::QZero => {
                let a = self.alpha.unwrap();
                // z^{-α}(1 - (1 + 1/z)^{-α}) without cancellation for large z
                let x = zf();
                x.powf(-a) * -(-a * (T::one() / x).ln_1p()).exp_m1()
            }
            RateKind::Lacunary(anchors) => match anchors.index_of(z) {
                None => T::zero(),
                Some(l) => {
                    let a = self.alpha.unwrap();
                    let here = T::from_u64(z).unwrap().powf(-a);
                    match anchors.anchor(l + 1) {
                        Some(next) => here - T::from_u64(next).unwrap().powf(-a),
                        None => here,
                    }
                }
            },
            RateKind::Table { values, tail } => match values.get((z - 1) as usize) {
                Some(v) => *v,
                None => match tail {
                    TailRule::Zero => T::zero(),
                    TailRule::PowerLaw { alpha, scale } => *scale * zf().powf(-(T::one() + *alpha)),
                },
            },
        }
    }

    /// `Σ_{y ≥ x} p(y)` with certified bounds, `x ≥ 1`.
    pub fn tail_sum(&self, x: u64) -> TailEstimate<T> {
        let x = x.max(1);
        let est = match &self.kind {
            RateKind::PowerLaw => power_tail(x, T::one() + self.alpha.unwrap()),
            RateKind::QZero => TailEstimate::exact(T::from_u64(x).unwrap().powf(-self.alpha.unwrap())),
            RateKind::Lacunary(anchors) => TailEstimate::exact(match anchors.first_at_or_after(x) {
                Some((_, z)) => T::from_u64(z).unwrap().powf(-self.alpha.unwrap()),
                None => T::zero(),
            }),
            RateKind::Table { values, tail } => {
                let horizon = values.len() as u64;
                let head: T = if x <= horizon {
                    values[(x - 1) as usize..].iter().rev().copied().sum()
                } else {
                    T::zero()
                };
                match tail {
                    TailRule::Zero => TailEstimate::exact(head),
                    TailRule::PowerLaw { alpha, scale } => {
                        power_tail(x.max(horizon + 1), T::one() + *alpha).scale(*scale).shift(head)
                    }
                }
            }
        };
        est.scale(self.scale)
    }

    /// `Σ_{z=lo}^{hi} p(z)` for `1 ≤ lo`; zero when `hi < lo`.
    pub fn mass(&self, lo: u64, hi: u64) -> T {
        let lo = lo.max(1);
        if hi < lo {
            return T::zero();
        }
        let raw = match &self.kind {
            RateKind::PowerLaw => power_range(lo, hi, T::one() + self.alpha.unwrap()),
            RateKind::Table { values, tail: TailRule::Zero } if hi <= values.len() as u64 => {
                values[(lo - 1) as usize..hi as usize].iter().rev().copied().sum()
            }
            RateKind::Table { .. } if hi - lo < 4096 => {
                return (lo..=hi).rev().map(|z| self.eval(z as i64)).sum();
            }
            _ => {
                return self.tail_sum(lo).value - self.tail_sum(hi + 1).value;
            }
        };
        raw * self.scale
    }

    /// `Σ_z p(z)`, the total jump rate `γ`.
    pub fn total_rate(&self) -> T {
        T::lit(2.0) * self.tail_sum(1).value
    }

    /// `x^α Σ_{y ≥ x} p(y)` with certified bounds.
    pub fn tail_constant_estimate(&self, x: u64) -> Result<TailEstimate<T>> {
        if x == 0 {
            return Err(Error::ParameterDomain("tail constant needs x ≥ 1".into()));
        }
        if let RateKind::Table { values, tail: TailRule::Zero } = &self.kind {
            if x > values.len() as u64 {
                return Err(Error::Accuracy {
                    message: format!(
                        "table horizon {} is below x = {x} and the table declares a zero tail",
                        values.len()
                    ),
                    residual_bound: f64::INFINITY,
                });
            }
        }
        let weight = T::from_u64(x).unwrap().powf(self.scaling_exponent());
        Ok(self.tail_sum(x).scale(weight))
    }

    /// `x^α Σ_{y ≥ x} p(y)`.
    pub fn tail_constant(&self, x: u64) -> Result<T> {
        self.tail_constant_estimate(x).map(|e| e.value)
    }

    /// The limit `c = lim x^α Σ_{y≥x} p(y)` when known in closed form.
    pub fn limit_tail_constant(&self) -> Option<T> {
        let c = match &self.kind {
            RateKind::PowerLaw => T::one() / self.alpha?,
            RateKind::QZero => T::one(),
            RateKind::Lacunary(Anchors::Power { .. }) => T::one(),
            RateKind::Lacunary(Anchors::Explicit(_)) => return None,
            RateKind::Table { tail: TailRule::PowerLaw { alpha, scale }, .. } => *scale / *alpha,
            RateKind::Table { tail: TailRule::Zero, .. } => return None,
        };
        Some(c * self.scale)
    }

    /// Whether the rate has a stable tail, i.e. belongs to `DAN(α)`.
    pub fn in_dan(&self) -> bool {
        self.limit_tail_constant().is_some()
    }

    /// Largest `|z|` with `p(z) > 0`, if the support is bounded.
    pub fn support_bound(&self) -> Option<u64> {
        match &self.kind {
            RateKind::Table { values, tail: TailRule::Zero } => {
                values.iter().rposition(|v| *v > T::zero()).map(|i| i as u64 + 1)
            }
            RateKind::Lacunary(Anchors::Explicit(list)) => list.last().copied(),
            _ => None,
        }
    }

    /// Short human-readable description used in reports.
    pub fn descriptor(&self) -> String {
        let alpha = self.alpha.map(|a| format!("{a}")).unwrap_or_else(|| "-".into());
        let base = match &self.kind {
            RateKind::PowerLaw => format!("power(alpha={alpha})"),
            RateKind::QZero => format!("q0(alpha={alpha})"),
            RateKind::Lacunary(Anchors::Power { degree }) => format!("lacunary(alpha={alpha},anchors=l^{degree})"),
            RateKind::Lacunary(Anchors::Explicit(l)) => format!("lacunary(alpha={alpha},anchors={})", l.len()),
            RateKind::Table { values, tail: TailRule::Zero } if values.len() == 1 => "nearest-neighbor".to_string(),
            RateKind::Table { values, tail: TailRule::Zero } => format!("table(horizon={},tail=zero)", values.len()),
            RateKind::Table { values, tail: TailRule::PowerLaw { .. } } => {
                format!("table(horizon={},tail=power,alpha={alpha})", values.len())
            }
        };
        if self.scale == T::one() {
            base
        } else {
            format!("{}*{base}", self.scale)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn power_law_values() {
        let q = TransitionRate::<f64>::power_law(1.0).unwrap();
        assert_eq!(q.eval(1), 1.0);
        assert_eq!(q.eval(2), 0.25);
        assert_eq!(q.eval(-2), 0.25);
        assert_eq!(q.eval(0), 0.0);
        let q = TransitionRate::<f64>::power_law(0.5).unwrap();
        assert!((q.eval(4) - 0.125).abs() < 1e-15);
        assert_eq!(q.limit_tail_constant(), Some(2.0));
    }

    #[test]
    fn alpha_domain() {
        for a in [0.0, 2.0, -1.0, f64::NAN, 3.0] {
            assert!(matches!(TransitionRate::<f64>::power_law(a), Err(Error::ParameterDomain(_))));
            assert!(matches!(TransitionRate::<f64>::q_zero(a), Err(Error::ParameterDomain(_))));
        }
    }

    #[test]
    fn power_law_tail_constant_converges() {
        let q = TransitionRate::<f64>::power_law(1.0).unwrap();
        let c = q.tail_constant(10_000).unwrap();
        assert!((c - 1.0).abs() < 0.01);
        // Approach from above: x Σ_{y≥x} y^{-2} = 1 + 1/(2x) + O(x^{-2}).
        let mut prev = f64::INFINITY;
        for x in [100u64, 1000, 10_000] {
            let est = q.tail_constant_estimate(x).unwrap();
            assert!(est.value < prev);
            assert!(est.lower <= est.value && est.value <= est.upper);
            assert!((est.value - 1.0 - 0.5 / x as f64).abs() < 1.0 / (x * x) as f64);
            prev = est.value;
        }
    }

    #[test]
    fn q_zero_values() {
        let q0 = TransitionRate::<f64>::q_zero(1.0).unwrap();
        assert!((q0.eval(1) - 0.5).abs() < 1e-15);
        assert!((q0.eval(2) - 1.0 / 6.0).abs() < 1e-15);
        let ratio = q0.eval(1000) / (1000f64).powi(-2);
        assert!((ratio - 1.0).abs() < 2e-3);
        assert_eq!(q0.tail_constant(37).unwrap(), 1.0);
    }

    #[test]
    fn lacunary_values_and_telescoping() {
        let p = TransitionRate::<f64>::lacunary(1.0, Anchors::default()).unwrap();
        assert!((p.eval(1) - 0.75).abs() < 1e-15);
        assert_eq!(p.eval(2), 0.0);
        assert_eq!(p.eval(-4), p.eval(4));
        // Telescoping oracle: walk the anchors and sum the tail explicitly
        // up to a far anchor, then add the closed-form remainder z_L^{-α}.
        for l in 1..40u64 {
            let z = l * l;
            let far = 4000u64;
            let mut s = 0.0;
            for k in l..far {
                s += 1.0 / (k * k) as f64 - 1.0 / ((k + 1) * (k + 1)) as f64;
            }
            s += 1.0 / (far * far) as f64;
            assert!((p.tail_sum(z).value - s).abs() < 1e-14);
            assert!((p.tail_constant(z).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lacunary_rejects_bad_anchors() {
        assert!(TransitionRate::<f64>::lacunary(1.0, Anchors::Explicit(vec![1, 3, 3])).is_err());
        assert!(TransitionRate::<f64>::lacunary(1.0, Anchors::Explicit(vec![2, 3])).is_err());
        assert!(TransitionRate::<f64>::lacunary(1.0, Anchors::Power { degree: 0 }).is_err());
        let p = TransitionRate::<f64>::lacunary(1.0, Anchors::Explicit(vec![1, 2, 5])).unwrap();
        assert!(!p.in_dan());
        assert_eq!(p.support_bound(), Some(5));
        assert!((p.total_rate() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn tail_constant_at_one_is_half_total() {
        let rates = [
            TransitionRate::<f64>::power_law(1.3).unwrap(),
            TransitionRate::<f64>::q_zero(0.7).unwrap(),
            TransitionRate::<f64>::lacunary(1.0, Anchors::default()).unwrap(),
            TransitionRate::<f64>::nearest_neighbor(2.0).unwrap(),
        ];
        for p in &rates {
            assert!((p.tail_constant(1).unwrap() - p.total_rate() / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_tail_table_is_flagged() {
        let p = TransitionRate::<f64>::table(vec![1.0, 0.5], TailRule::Zero).unwrap();
        assert!(!p.in_dan());
        assert!(matches!(p.tail_constant(3), Err(Error::Accuracy { .. })));
        let p = TransitionRate::<f64>::table(vec![1.0, 0.5], TailRule::PowerLaw { alpha: 1.0, scale: 4.0 }).unwrap();
        assert!(p.in_dan());
        assert_eq!(p.eval(4), 0.25);
        assert!((p.tail_constant(100_000).unwrap() - 4.0).abs() < 1e-3);
    }

    #[test]
    fn table_requires_p1() {
        assert!(matches!(TransitionRate::<f64>::table(vec![0.0, 1.0], TailRule::Zero), Err(Error::Irreducible(_))));
        assert!(TransitionRate::<f64>::table(vec![1.0, -1.0], TailRule::Zero).is_err());
    }

    #[test]
    fn q_and_q0_are_equivalent() {
        // Ratio q0/q stays inside a compact subset of (0, ∞).
        for alpha in [0.5, 1.0, 1.5] {
            let q = TransitionRate::<f64>::power_law(alpha).unwrap();
            let q0 = TransitionRate::<f64>::q_zero(alpha).unwrap();
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for z in 1..=10_000 {
                let r = q0.eval(z) / q.eval(z);
                lo = lo.min(r);
                hi = hi.max(r);
            }
            assert!(lo > 0.0 && hi.is_finite());
            assert!(lo >= 1.0 - 2f64.powf(-alpha) - 1e-12);
            assert!(hi <= alpha + 1e-12);
        }
    }

    #[test]
    fn mass_matches_pointwise_sum() {
        let rates = [
            TransitionRate::<f64>::power_law(0.8).unwrap(),
            TransitionRate::<f64>::q_zero(1.2).unwrap(),
            TransitionRate::<f64>::lacunary(1.0, Anchors::default()).unwrap(),
        ];
        for p in &rates {
            for (lo, hi) in [(1u64, 1u64), (3, 50), (100, 20_000)] {
                let direct: f64 = (lo..=hi).rev().map(|z| p.eval(z as i64)).sum();
                assert!((p.mass(lo, hi) - direct).abs() < 1e-12 * direct.max(1e-300), "{}", p.descriptor());
            }
        }
    }

    #[test]
    fn scaling_multiplies_everything() {
        let p = TransitionRate::<f64>::power_law(1.0).unwrap().scaled(3.0).unwrap();
        assert_eq!(p.eval(2), 0.75);
        assert_eq!(p.limit_tail_constant(), Some(3.0));
        assert!(p.scaled(0.0).is_err());
    }

    #[test]
    fn f32_rates() {
        let q = TransitionRate::<f32>::power_law(1.0).unwrap();
        assert_eq!(q.eval(2), 0.25f32);
        assert!((q.total_rate() - 3.289_868_f32).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn symmetric_with_zero_at_origin(alpha in 0.05f64..1.95, z in 1i64..100_000, kind in 0usize..3) {
            let p = match kind {
                0 => TransitionRate::<f64>::power_law(alpha).unwrap(),
                1 => TransitionRate::<f64>::q_zero(alpha).unwrap(),
                _ => TransitionRate::<f64>::lacunary(alpha, Anchors::default()).unwrap(),
            };
            prop_assert_eq!(p.eval(z), p.eval(-z));
            prop_assert_eq!(p.eval(0), 0.0);
            prop_assert!(p.eval(1) > 0.0);
            prop_assert!(p.total_rate().is_finite());
            prop_assert!(p.eval(z) >= 0.0);
        }
    }
}
