use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::{Anchors, RateKind, TailRule, TransitionRate};
use crate::Real;

/// Default alias-table horizon for rates with an infinite tail.
pub const DEFAULT_ALIAS_HORIZON: u64 = 1 << 16;
const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, Default)]
pub struct McOptions {
    /// `Z_max`: jumps with `|z| ≤ Z_max` come from the alias table. `None`
    /// picks the table length for finite tables and
    /// [`DEFAULT_ALIAS_HORIZON`] otherwise.
    pub alias_horizon: Option<u64>,
}

#[derive(Debug, Clone)]
enum Tail {
    None,
    /// `P(|Z| ≥ z) ∝ z^{-α}` beyond `start`.
    Pareto { start: f64, alpha: f64 },
    /// Power-law tail by rejection from the Pareto proposal.
    Power { start: f64, alpha: f64 },
    /// Largest anchor below a Pareto draw.
    Anchored { start: f64, alpha: f64, anchors: Anchors },
}

/// Draws jump displacements from `p(·)/γ`.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    head: Option<WeightedAliasIndex<f64>>,
    head_prob: f64,
    tail: Tail,
}

impl JumpSampler {
    pub fn new<T: Real>(p: &TransitionRate<T>, opts: &McOptions) -> Result<Self> {
        let horizon = match (p.kind(), opts.alias_horizon) {
            (RateKind::Table { values, tail: TailRule::Zero }, Some(z)) if z > values.len() as u64 => {
                return Err(Error::SamplingDomain(format!(
                    "alias horizon {z} lies beyond the table horizon {} and the tail is undeclared",
                    values.len()
                )));
            }
            (_, Some(0)) => return Err(Error::SamplingDomain("alias horizon must be at least 1".into())),
            (_, Some(z)) => z,
            (RateKind::Table { values, .. }, None) => values.len() as u64,
            (RateKind::Lacunary(Anchors::Explicit(list)), None) => *list.last().unwrap(),
            (_, None) => DEFAULT_ALIAS_HORIZON,
        };
        let weights: Vec<f64> = (1..=horizon).map(|z| p.eval(z as i64).as_f64()).collect();
        let head_mass: f64 = weights.iter().rev().sum();
        let start = horizon + 1;
        let alpha = p.alpha().map(|a| a.as_f64());
        let (tail, tail_mass) = match p.kind() {
            RateKind::PowerLaw => (Tail::Power { start: start as f64, alpha: alpha.unwrap() }, p.tail_sum(start).value),
            RateKind::QZero => (Tail::Pareto { start: start as f64, alpha: alpha.unwrap() }, p.tail_sum(start).value),
            RateKind::Lacunary(anchors) => match anchors.first_at_or_after(start) {
                Some((_, z)) => (
                    Tail::Anchored { start: z as f64, alpha: alpha.unwrap(), anchors: anchors.clone() },
                    p.tail_sum(start).value,
                ),
                None => (Tail::None, T::zero()),
            },
            RateKind::Table { values, tail } => match tail {
                TailRule::Zero => (Tail::None, T::zero()),
                TailRule::PowerLaw { alpha, .. } => {
                    if horizon < values.len() as u64 {
                        return Err(Error::SamplingDomain(format!(
                            "alias horizon {horizon} must cover the table horizon {}",
                            values.len()
                        )));
                    }
                    (Tail::Power { start: start as f64, alpha: alpha.as_f64() }, p.tail_sum(start).value)
                }
            },
        };
        let tail_mass = tail_mass.as_f64();
        let head = if head_mass > 0.0 {
            Some(WeightedAliasIndex::new(weights).map_err(|e| Error::SamplingDomain(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { head, head_prob: head_mass / (head_mass + tail_mass), tail })
    }

    /// One displacement with a uniformly random sign.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let magnitude = match &self.head {
            Some(alias) if rng.random::<f64>() < self.head_prob => alias.sample(rng) as u64 + 1,
            _ => self.sample_tail(rng),
        };
        let z = i64::try_from(magnitude).unwrap_or(i64::MAX);
        if rng.random::<bool>() {
            z
        } else {
            -z
        }
    }

    fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let pareto = |rng: &mut R, start: f64, alpha: f64| {
            let u: f64 = 1.0 - rng.random::<f64>();
            start * u.powf(-1.0 / alpha)
        };
        match &self.tail {
            Tail::None => unreachable!("tail drawn with zero tail mass"),
            Tail::Pareto { start, alpha } => pareto(rng, *start, *alpha).floor() as u64,
            Tail::Power { start, alpha } => {
                let bound = (1.0 + 1.0 / start).powf(1.0 + alpha);
                loop {
                    let zf = pareto(rng, *start, *alpha).floor();
                    let proposal = zf.powf(-alpha) * -(-alpha * (1.0 / zf).ln_1p()).exp_m1();
                    let accept = alpha * zf.powf(-1.0 - alpha) / (proposal * bound);
                    if !accept.is_finite() || rng.random::<f64>() < accept {
                        return zf as u64;
                    }
                }
            }
            Tail::Anchored { start, alpha, anchors } => {
                let y = pareto(rng, *start, *alpha);
                largest_anchor_at_most(anchors, y)
            }
        }
    }
}

fn largest_anchor_at_most(anchors: &Anchors, y: f64) -> u64 {
    match anchors {
        Anchors::Power { degree } => {
            let d = *degree;
            let mut l = y.powf(1.0 / d as f64).floor().max(1.0) as u64;
            let fits = |l: u64| l.checked_pow(d).map(|z| (z as f64) <= y).unwrap_or(false);
            while l > 1 && !fits(l) {
                l -= 1;
            }
            while fits(l + 1) {
                l += 1;
            }
            l.saturating_pow(d)
        }
        Anchors::Explicit(list) => {
            let i = list.partition_point(|z| (*z as f64) <= y);
            list[i.saturating_sub(1)]
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McEstimate {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
    pub hits: u64,
    pub samples: u64,
}

/// Fraction of trajectories sitting at the origin at each time, started
/// from 0. Chunks run in parallel on independent ChaCha streams derived
/// from `seed`, so results do not depend on the thread count.
pub fn mc_return_probability<T: Real>(
    p: &TransitionRate<T>,
    times: &[f64],
    samples: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<Vec<McEstimate>> {
    if samples == 0 {
        return Err(Error::ParameterDomain("need at least one sample".into()));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::ParameterDomain(format!("time must be finite and nonnegative, got {t}")));
    }
    let sampler = JumpSampler::new(p, opts)?;
    let gamma = p.total_rate().as_f64();
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| times[i]).collect();
    let chunks = samples.div_ceil(CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut hits = vec![0u64; sorted.len()];
            for _ in 0..count {
                let mut x: i64 = 0;
                let mut clock: f64 = rng.sample::<f64, _>(Exp1) / gamma;
                for (h, &t) in hits.iter_mut().zip(&sorted) {
                    while clock < t {
                        x = x.saturating_add(sampler.sample(&mut rng));
                        clock += rng.sample::<f64, _>(Exp1) / gamma;
                    }
                    if x == 0 {
                        *h += 1;
                    }
                }
            }
            hits
        })
        .reduce(|| vec![0u64; sorted.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let n = samples as f64;
    let mut out: Vec<McEstimate> = times
        .iter()
        .map(|&t| McEstimate { t, value: 0.0, stderr: 0.0, hits: 0, samples: samples as u64 })
        .collect();
    for (k, &i) in order.iter().enumerate() {
        let v = hits[k] as f64 / n;
        out[i].hits = hits[k];
        out[i].value = v;
        out[i].stderr = (v * (1.0 - v) / n).sqrt();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empirical(p: &TransitionRate<f64>, opts: &McOptions, draws: usize) -> Vec<f64> {
        let s = JumpSampler::new(p, opts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = vec![0usize; 9];
        for _ in 0..draws {
            let z = s.sample(&mut rng).unsigned_abs() as usize;
            counts[z.min(8)] += 1;
        }
        counts.iter().map(|c| *c as f64 / draws as f64).collect()
    }

    #[test]
    fn tail_samplers_match_rates() {
        // Tiny alias horizon forces most of the mass through the tail code.
        let cases = [
            TransitionRate::<f64>::power_law(1.0).unwrap(),
            TransitionRate::<f64>::q_zero(0.7).unwrap(),
            TransitionRate::<f64>::lacunary(1.0, Anchors::Power { degree: 2 }).unwrap(),
        ];
        let draws = 400_000;
        for p in &cases {
            let got = empirical(p, &McOptions { alias_horizon: Some(1) }, draws);
            let half = p.total_rate() / 2.0;
            for z in 1..8u64 {
                let want = p.eval(z as i64) / half;
                let sd = (want * (1.0 - want) / draws as f64).sqrt();
                assert!((got[z as usize] - want).abs() < 5.0 * sd + 1e-9, "{} z={z}: {} vs {want}", p.descriptor(), got[z as usize]);
            }
            let want_far = p.tail_sum(8).value / half;
            let sd = (want_far * (1.0 - want_far) / draws as f64).sqrt();
            assert!((got[8] - want_far).abs() < 5.0 * sd);
        }
    }

    #[test]
    fn anchor_lookup() {
        let a = Anchors::Power { degree: 2 };
        assert_eq!(largest_anchor_at_most(&a, 24.9), 16);
        assert_eq!(largest_anchor_at_most(&a, 25.0), 25);
        assert_eq!(largest_anchor_at_most(&Anchors::Explicit(vec![1, 3, 10]), 9.5), 3);
    }

    #[test]
    fn time_zero_and_determinism() {
        let p = TransitionRate::<f64>::power_law(1.0).unwrap();
        let a = mc_return_probability(&p, &[0.0, 2.0, 1.0], 5000, 7, &McOptions::default()).unwrap();
        assert_eq!(a[0].value, 1.0);
        assert_eq!(a[0].stderr, 0.0);
        let b = mc_return_probability(&p, &[0.0, 2.0, 1.0], 5000, 7, &McOptions::default()).unwrap();
        assert_eq!(
            a.iter().map(|e| e.value.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|e| e.value.to_bits()).collect::<Vec<_>>()
        );
        assert!(a[2].value > a[1].value);
    }

    #[test]
    fn undeclared_tail_refused() {
        let p = TransitionRate::<f64>::nearest_neighbor(1.0).unwrap();
        let r = JumpSampler::new(&p, &McOptions { alias_horizon: Some(5) });
        assert!(matches!(r, Err(Error::SamplingDomain(_))));
        assert!(mc_return_probability(&p, &[1.0], 0, 1, &McOptions::default()).is_err());
    }
}
