use rayon::prelude::*;
use serde::Serialize;

use super::ensemble::{enumerate_exclusion, enumerate_zero_range, ExclusionEnsemble, ZeroRangeEnsemble};
use super::interaction::{classify, zero_range_measure, GrowthCase, InteractionRate};
use crate::error::{Error, Result};
use crate::rates::TransitionRate;
use crate::spectrum::{build_walk_generator, spectral_gap, GapOptions, Generator, SpectralReport, StateSpace};
use crate::Real;

/// Tolerance on the relative detailed-balance defect of built generators.
pub const BALANCE_TOLERANCE: f64 = 1e-10;

/// Exclusion process: `η → η^{x,y}` at rate `p(y-x) η_x (1-η_y)`,
/// uniform equilibrium.
pub fn build_exclusion_generator<T: Real>(p: &TransitionRate<T>, e: &ExclusionEnsemble) -> Result<Generator<T>> {
    if e.len() < 2 {
        return Err(Error::Degenerate(format!(
            "exclusion ensemble with {} particles on {} sites has a single state; the gap is undefined",
            e.ell(),
            e.sites()
        )));
    }
    let sites = e.sites();
    let jumps: Vec<T> = (0..sites as i64).map(|d| p.eval(d)).collect();
    let rows = e
        .states()
        .iter()
        .map(|&s| {
            let mut row = Vec::new();
            for x in (0..sites).filter(|&x| s >> x & 1 == 1) {
                for y in (0..sites).filter(|&y| s >> y & 1 == 0) {
                    let target = s ^ (1 << x) ^ (1 << y);
                    row.push((e.rank(target).unwrap(), jumps[x.abs_diff(y)]));
                }
            }
            row
        })
        .collect();
    let g = Generator::from_rates(
        StateSpace::Exclusion { n: e.n(), ell: e.ell() },
        vec![T::one(); e.len()],
        rows,
        format!("exclusion[{}]", p.descriptor()),
    )?;
    g.check_detailed_balance(T::lit(BALANCE_TOLERANCE))?;
    Ok(g)
}

/// Zero-range process: `ξ → ξ^{x,y}` at rate `g(ξ_x) p(y-x)`, reversible
/// for `μ(ξ) ∝ Π 1/g(ξ_x)!`.
pub fn build_zero_range_generator<T: Real>(
    p: &TransitionRate<T>,
    g: &InteractionRate<T>,
    e: &ZeroRangeEnsemble,
) -> Result<Generator<T>> {
    if e.len() < 2 {
        return Err(Error::Degenerate("zero-range ensemble has a single state; the gap is undefined".into()));
    }
    let measure = zero_range_measure(g, e)?;
    let sites = e.sites();
    let jumps: Vec<T> = (0..sites as i64).map(|d| p.eval(d)).collect();
    let departure: Vec<T> = (0..=e.ell()).map(|k| g.eval(k).unwrap()).collect();
    let mut scratch = vec![0u16; sites];
    let rows = e
        .states()
        .map(|xi| {
            let mut row = Vec::new();
            for x in (0..sites).filter(|&x| xi[x] > 0) {
                for y in (0..sites).filter(|&y| y != x) {
                    scratch.copy_from_slice(xi);
                    scratch[x] -= 1;
                    scratch[y] += 1;
                    row.push((e.rank(&scratch).unwrap(), departure[xi[x] as usize] * jumps[x.abs_diff(y)]));
                }
            }
            row
        })
        .collect();
    let gen = Generator::from_rates(
        StateSpace::ZeroRange { n: e.n(), ell: e.ell() },
        measure.weights,
        rows,
        format!("zero-range[{},g={}]", p.descriptor(), g.descriptor()),
    )?;
    gen.check_detailed_balance(T::lit(BALANCE_TOLERANCE))?;
    Ok(gen)
}

/// One `(n, ℓ)` gap of a particle system.
#[derive(Debug, Clone, Serialize)]
pub struct ParticleRow<T> {
    pub n: usize,
    pub ell: usize,
    pub states: usize,
    pub gap: Option<T>,
    pub normalized_gap: Option<T>,
    pub method: String,
    pub residual: Option<T>,
    #[serde(skip)]
    pub error: Option<Error>,
}

impl<T: Real> ParticleRow<T> {
    fn from_report(n: usize, ell: usize, states: usize, r: Result<SpectralReport<T>>, scale: T) -> Self {
        match r {
            Ok(r) => Self {
                n,
                ell,
                states,
                gap: Some(r.gap),
                normalized_gap: Some(r.gap * scale),
                method: r.method.to_string(),
                residual: Some(r.residual),
                error: None,
            },
            Err(e) => Self {
                n,
                ell,
                states,
                gap: None,
                normalized_gap: None,
                method: "failed".into(),
                residual: None,
                error: Some(e),
            },
        }
    }
}

fn walk_scale<T: Real>(p: &TransitionRate<T>, n: usize) -> T {
    T::from_usize_lossy(2 * n + 1).powf(p.scaling_exponent())
}

/// Exclusion gap with `normalized_gap = λ (2n+1)^α`.
pub fn exclusion_gap<T: Real>(p: &TransitionRate<T>, n: usize, ell: usize, opts: &GapOptions<T>) -> ParticleRow<T> {
    let built = enumerate_exclusion(n, ell).and_then(|e| build_exclusion_generator(p, &e));
    let states = built.as_ref().map(|g| g.dim()).unwrap_or(0);
    let report = built.and_then(|g| spectral_gap(&g, opts));
    ParticleRow::from_report(n, ell, states, report, walk_scale(p, n))
}

/// Zero-range gap; `normalized_gap` follows the growth case of `g`.
pub fn zero_range_gap<T: Real>(
    p: &TransitionRate<T>,
    g: &InteractionRate<T>,
    n: usize,
    ell: usize,
    opts: &GapOptions<T>,
) -> ParticleRow<T> {
    let built = enumerate_zero_range(n, ell).and_then(|e| build_zero_range_generator(p, g, &e));
    let states = built.as_ref().map(|g| g.dim()).unwrap_or(0);
    let mut scale = walk_scale(p, n);
    if let Ok(GrowthCase::Indicator) = classify(g, ell) {
        let rho = T::from_usize_lossy(ell) / T::from_usize_lossy(2 * n + 1);
        scale = scale * (T::one() + rho) * (T::one() + rho);
    }
    let report = built.and_then(|gen| spectral_gap(&gen, opts));
    ParticleRow::from_report(n, ell, states, report, scale)
}

#[derive(Debug, Clone, Serialize)]
pub struct AldousReport<T> {
    pub n: usize,
    pub walk_gap: T,
    pub rows: Vec<ParticleRow<T>>,
    pub worst_deviation: T,
    pub passed: bool,
}

/// Compares the exclusion gap for every `ℓ ∈ {1, …, 2n}` with the walk gap.
pub fn verify_aldous<T: Real>(
    p: &TransitionRate<T>,
    n: usize,
    tol: T,
    opts: &GapOptions<T>,
) -> Result<AldousReport<T>> {
    let walk_gap = spectral_gap(&build_walk_generator(p, n)?, opts)?.gap;
    let rows: Vec<ParticleRow<T>> = (1..=2 * n).into_par_iter().map(|ell| exclusion_gap(p, n, ell, opts)).collect();
    let mut worst = T::zero();
    for r in &rows {
        match (&r.gap, &r.error) {
            (Some(g), _) => worst = worst.max((*g - walk_gap).abs()),
            (None, Some(e)) => return Err(Error::Contract(format!("exclusion n={n} ell={}: {e}", r.ell))),
            (None, None) => unreachable!(),
        }
    }
    Ok(AldousReport { n, walk_gap, rows, worst_deviation: worst, passed: worst <= tol })
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroRangeTable<T> {
    pub case: GrowthCase<T>,
    pub rows: Vec<ParticleRow<T>>,
    pub min_normalized: Option<T>,
}

/// Normalised zero-range gaps over a grid: `λ (2n+1)^α` when `g` grows,
/// `λ (2n+1)^α (1+ρ)²` for the indicator.
pub fn zero_range_bound_table<T: Real>(
    p: &TransitionRate<T>,
    g: &InteractionRate<T>,
    n_values: &[usize],
    ell_values: &[usize],
    opts: &GapOptions<T>,
) -> Result<ZeroRangeTable<T>> {
    let ell_max = ell_values.iter().copied().max().unwrap_or(1);
    let case = classify(g, ell_max)?;
    let grid: Vec<(usize, usize)> = n_values.iter().flat_map(|&n| ell_values.iter().map(move |&l| (n, l))).collect();
    let rows: Vec<ParticleRow<T>> = grid.par_iter().map(|&(n, l)| zero_range_gap(p, g, n, l, opts)).collect();
    let min_normalized = rows.iter().filter_map(|r| r.normalized_gap).reduce(T::min);
    Ok(ZeroRangeTable { case, rows, min_normalized })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MovingLemmaVerdict<T> {
    /// `φ^{x,z}(f)`.
    pub lhs: T,
    /// `2(φ^{x,y}(f) + φ^{y,z}(f))`.
    pub rhs: T,
    pub holds: bool,
}

/// `φ^{x,y}(f) = ∫ g(ξ_x) (f(ξ^{x,y}) - f(ξ))² dμ`; sites are indices `0..2n+1`.
pub fn moving_cost<T: Real>(
    g: &InteractionRate<T>,
    e: &ZeroRangeEnsemble,
    weights: &[T],
    f: &[T],
    x: usize,
    y: usize,
) -> T {
    if x == y {
        return T::zero();
    }
    let mut scratch = vec![0u16; e.sites()];
    let mut acc = T::zero();
    for (i, xi) in e.states().enumerate() {
        if xi[x] == 0 {
            continue;
        }
        scratch.copy_from_slice(xi);
        scratch[x] -= 1;
        scratch[y] += 1;
        let j = e.rank(&scratch).unwrap();
        let d = f[j] - f[i];
        acc = acc + weights[i] * g.eval(xi[x] as usize).unwrap() * d * d;
    }
    acc
}

/// Two-step path bound `φ^{x,z} ≤ 2(φ^{x,y} + φ^{y,z})`.
pub fn moving_lemma_check<T: Real>(
    g: &InteractionRate<T>,
    e: &ZeroRangeEnsemble,
    f: &[T],
    x: usize,
    y: usize,
    z: usize,
) -> Result<MovingLemmaVerdict<T>> {
    if f.len() != e.len() {
        return Err(Error::Contract(format!("f has {} values for {} states", f.len(), e.len())));
    }
    if [x, y, z].iter().any(|&s| s >= e.sites()) {
        return Err(Error::ParameterDomain("site index outside the box".into()));
    }
    let w = zero_range_measure(g, e)?.weights;
    let lhs = moving_cost(g, e, &w, f, x, z);
    let rhs = T::lit(2.0) * (moving_cost(g, e, &w, f, x, y) + moving_cost(g, e, &w, f, y, z));
    let slack = T::one() + T::lit(64.0) * T::epsilon();
    Ok(MovingLemmaVerdict { lhs, rhs, holds: lhs <= rhs * slack })
}
