use serde::Serialize;

use super::semigroup::{dissipation, propagate, psi_functional, KilledKernel, SemigroupOptions, SemigroupState};
use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::rates::TransitionRate;
use crate::spectrum::{build_walk_generator, spectral_gap, GapOptions};
use crate::Real;

/// Fits start at this time unless a window is given.
pub const DEFAULT_FIT_START: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    /// Slope of `ln value` against `ln t` over the window.
    pub slope: T,
    pub intercept: T,
    /// Half-open index range of the points used.
    pub window: (usize, usize),
}

/// Log-log least squares over the points with `lo ≤ t ≤ hi`; the default
/// window is `t ≥ 10`. Times must be sorted.
pub fn decay_exponent_fit<T: Real>(times: &[T], values: &[T], window: Option<(T, T)>) -> Result<DecayFit<T>> {
    if times.len() != values.len() {
        return Err(Error::Contract(format!("{} times but {} values", times.len(), values.len())));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ParameterDomain("times must be strictly increasing".into()));
    }
    let (lo, hi) = window.unwrap_or((T::lit(DEFAULT_FIT_START), T::infinity()));
    let start = times.partition_point(|t| *t < lo);
    let end = times.partition_point(|t| *t <= hi);
    if end < start + 3 {
        return Err(Error::ParameterDomain(format!("fit window [{lo}, {hi}] holds {} points, need 3", end.saturating_sub(start))));
    }
    if let Some((t, v)) = times[start..end].iter().zip(&values[start..end]).find(|(t, v)| !(**v > T::zero()) || !(**t > T::zero())) {
        return Err(Error::ParameterDomain(format!("log-log fit needs positive data, got value {v} at t = {t}")));
    }
    let xs: Vec<T> = times[start..end].iter().map(|t| t.ln()).collect();
    let ys: Vec<T> = values[start..end].iter().map(|v| v.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys).ok_or_else(|| Error::Degenerate("fit abscissae coincide".into()))?;
    Ok(DecayFit { times: times.to_vec(), values: values.to_vec(), slope, intercept, window: (start, end) })
}

/// Whether `ψ` never increases along `states` (sorted by time), allowing
/// `slack` for rounding.
pub fn psi_nonincreasing<T: Real>(states: &[SemigroupState<T>], slack: T) -> bool {
    states.windows(2).all(|w| psi_functional(&w[1]) <= psi_functional(&w[0]) + slack)
}

#[derive(Debug, Clone, Serialize)]
pub struct DissipationVerdict<T> {
    pub t: T,
    pub dt: T,
    pub stencil: &'static str,
    /// Finite-difference `dψ/dt`.
    pub derivative: T,
    /// `Σ_{x,y} p(y-x) (f_t(y) - f_t(x))²` over `ℤ²`, `f_t` zero off the box.
    pub double_sum: T,
    /// `-derivative / double_sum`; 1 under the unordered-pair convention.
    pub measured_prefactor: T,
    pub relative_error: T,
    pub tolerance: T,
    pub passed: bool,
}

/// Checks `dψ/dt = -Σ_{x,y} p(y-x)(f_t(y) - f_t(x))²` for the killed walk
/// (the identity is exact on the box, so leakage does not enter). Centered
/// differences are used once `t ≥ dt`, a third-order forward stencil before.
pub fn psi_dissipation_check<T: Real>(
    p: &TransitionRate<T>,
    state: &SemigroupState<T>,
    dt: T,
    opts: &SemigroupOptions<T>,
) -> Result<DissipationVerdict<T>> {
    let kernel = KilledKernel::new(p, state.box_radius)?;
    let gamma = kernel.total_rate();
    if !(dt > T::zero()) || dt * gamma > T::lit(0.1) {
        return Err(Error::StepSize(format!("dt = {dt} must be positive with dt·γ ≤ 0.1 (γ = {gamma})")));
    }
    let t = state.time;
    let mut init = vec![T::zero(); 2 * state.box_radius + 1];
    init[state.box_radius] = T::one();
    let centered = t >= dt + dt;
    let derivative_at = |h: T| -> Result<T> {
        let grid: Vec<T> = if centered {
            vec![t - h, t + h]
        } else {
            (0..4).map(|k| t + T::from_usize_lossy(k) * h).collect()
        };
        let psi: Vec<T> = propagate(&kernel, &init, &grid, opts.series_tolerance)?.iter().map(psi_functional).collect();
        Ok(if centered {
            (psi[1] - psi[0]) / (h + h)
        } else {
            (T::lit(-11.0) * psi[0] + T::lit(18.0) * psi[1] - T::lit(9.0) * psi[2] + T::lit(2.0) * psi[3]) / (T::lit(6.0) * h)
        })
    };
    let fine = derivative_at(dt)?;
    let coarse = derivative_at(dt + dt)?;
    // Richardson: the error of the fine estimate is (coarse - fine)/(2^k - 1).
    let order_gain = if centered { T::lit(3.0) } else { T::lit(7.0) };
    let truncation = (coarse - fine).abs() / order_gain;
    let double_sum = dissipation(&kernel, &state.values);
    let rounding = T::lit(16.0) * opts.series_tolerance.max(T::epsilon()) / dt;
    let tolerance = T::lit(2.0) * truncation + rounding;
    let scale = double_sum.abs().max(T::min_positive_value());
    let relative_error = (fine + double_sum).abs() / scale;
    Ok(DissipationVerdict {
        t,
        dt,
        stencil: if centered { "centered" } else { "forward3" },
        derivative: fine,
        double_sum,
        measured_prefactor: -fine / scale,
        relative_error,
        tolerance: tolerance / scale,
        passed: (fine + double_sum).abs() <= tolerance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockRow<T> {
    /// Block index `j`; the block is `{(2n+1)j - n, …, (2n+1)j + n}`.
    pub block: i64,
    pub sum_squares: T,
    pub dirichlet: T,
    pub mass: T,
    pub bound: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockVerdict<T> {
    pub n: usize,
    pub gap: T,
    pub rows: Vec<BlockRow<T>>,
    /// `Σ_B Σ_{x∈B} f²`, which is `ψ` restricted to the box.
    pub total_sum_squares: T,
    /// `Σ_B ½ Σ_{x,y∈B} p(y-x)(f(y)-f(x))²`.
    pub total_dirichlet: T,
    /// `Σ_B mass_B² / (2n+1)`.
    pub total_mass_term: T,
    pub holds: bool,
}

/// Gap of the walk restricted to `Λ_n`.
pub fn walk_gap<T: Real>(p: &TransitionRate<T>, n: usize) -> Result<T> {
    Ok(spectral_gap(&build_walk_generator(p, n)?, &GapOptions::dense())?.gap)
}

/// Poincaré inequality on every block of width `2n+1` tiling the box:
/// `Σ_B f² ≤ gap⁻¹ · ½ Σ_{B×B} p(y-x)(f(y)-f(x))² + mass_B²/(2n+1)`.
pub fn block_projection_bound<T: Real>(p: &TransitionRate<T>, state: &SemigroupState<T>, n: usize, gap: T) -> Result<BlockVerdict<T>> {
    let width = 2 * n + 1;
    let len = state.values.len();
    if len % width != 0 {
        return Err(Error::Alignment(format!(
            "box of {len} sites is not tiled by blocks of width {width}; pick 2L+1 a multiple of 2n+1"
        )));
    }
    if !(gap > T::zero()) {
        return Err(Error::ParameterDomain(format!("gap must be positive, got {gap}")));
    }
    let weights: Vec<T> = (0..width as i64).map(|d| p.eval(d)).collect();
    let blocks = len / width;
    let half = (blocks / 2) as i64;
    let wf = T::from_usize_lossy(width);
    let mut rows = Vec::with_capacity(blocks);
    for (b, f) in state.values.chunks(width).enumerate() {
        let sum_squares: T = f.iter().map(|v| *v * *v).sum();
        let mass: T = f.iter().copied().sum();
        let mut dirichlet = T::zero();
        for i in 0..width {
            for j in i + 1..width {
                let d = f[j] - f[i];
                dirichlet = dirichlet + weights[j - i] * d * d;
            }
        }
        rows.push(BlockRow { block: b as i64 - half, sum_squares, dirichlet, mass, bound: dirichlet / gap + mass * mass / wf });
    }
    let slack = |row: &BlockRow<T>| row.bound * T::lit(1e-10) + T::lit(1e-300);
    let holds = rows.iter().all(|r| r.sum_squares <= r.bound + slack(r));
    Ok(BlockVerdict {
        n,
        gap,
        total_sum_squares: rows.iter().map(|r| r.sum_squares).sum(),
        total_dirichlet: rows.iter().map(|r| r.dirichlet).sum(),
        total_mass_term: rows.iter().map(|r| r.mass * r.mass / wf).sum(),
        rows,
        holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeRow<T> {
    pub t: T,
    pub psi: T,
    /// `-dψ/dt`, the full double sum.
    pub dissipation: T,
    /// Block width parameter giving the best lower bound.
    pub best_n: usize,
    /// `max_n 2 λ_n (ψ - Σ_B mass_B²/(2n+1))`.
    pub best_bound: T,
    /// `best_bound / ψ^{1+α}`.
    pub ratio: T,
}

/// For each state, the lower bound on `-dψ/dt` obtained from the block
/// inequality, optimised over the admissible `n` with precomputed gaps.
pub fn dissipation_envelope<T: Real>(
    p: &TransitionRate<T>,
    states: &[SemigroupState<T>],
    gaps: &[(usize, T)],
) -> Result<Vec<EnvelopeRow<T>>> {
    let alpha = p.scaling_exponent();
    states
        .iter()
        .map(|s| {
            let kernel = KilledKernel::new(p, s.box_radius)?;
            let psi = psi_functional(s);
            let mut best = (0, T::neg_infinity());
            for &(n, gap) in gaps {
                let v = block_projection_bound(p, s, n, gap)?;
                let bound = T::lit(2.0) * gap * (v.total_sum_squares - v.total_mass_term);
                if bound > best.1 {
                    best = (n, bound);
                }
            }
            if best.0 == 0 {
                return Err(Error::ParameterDomain("no block widths supplied".into()));
            }
            Ok(EnvelopeRow {
                t: s.time,
                psi,
                dissipation: dissipation(&kernel, &s.values),
                best_n: best.0,
                best_bound: best.1,
                ratio: best.1 / psi.powf(T::one() + alpha),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::evolve_semigroup_times;

    fn loose() -> SemigroupOptions<f64> {
        SemigroupOptions::with_budget(1.0)
    }

    #[test]
    fn fit_recovers_power() {
        let ts: Vec<f64> = (1..=20).map(|k| 5.0 * k as f64).collect();
        let vs: Vec<f64> = ts.iter().map(|t| 3.0 * t.powf(-0.75)).collect();
        let fit = decay_exponent_fit(&ts, &vs, None).unwrap();
        assert_eq!(fit.window, (1, 20));
        assert!((fit.slope + 0.75).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        let mut bad = vs.clone();
        bad[5] = 0.0;
        assert!(matches!(decay_exponent_fit(&ts, &bad, None), Err(Error::ParameterDomain(_))));
        assert!(decay_exponent_fit(&ts, &vs, Some((10.0, 12.0))).is_err());
    }

    #[test]
    fn nearest_neighbor_decays_like_root() {
        let p = TransitionRate::<f64>::nearest_neighbor(1.0).unwrap();
        let ts: Vec<f64> = (0..=10).map(|k| 50.0 * 10f64.powf(k as f64 / 10.0)).collect();
        let states = evolve_semigroup_times(&p, &ts, 400, &SemigroupOptions::default()).unwrap();
        let vals: Vec<f64> = states.iter().map(|s| s.value_at(0)).collect();
        let fit = decay_exponent_fit(&ts, &vals, Some((50.0, 500.0))).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.1, "{}", fit.slope);
    }

    #[test]
    fn psi_monotone_on_grid() {
        let p = TransitionRate::<f64>::power_law(1.0).unwrap();
        let ts: Vec<f64> = (0..40).map(|k| 0.25 * k as f64).collect();
        let states = evolve_semigroup_times(&p, &ts, 128, &loose()).unwrap();
        assert!(psi_nonincreasing(&states, 1e-14));
    }

    #[test]
    fn dissipation_finite_difference() {
        let p = TransitionRate::<f64>::power_law(1.0).unwrap();
        let s = evolve_semigroup_times(&p, &[10.0], 512, &loose()).unwrap().remove(0);
        let v = psi_dissipation_check(&p, &s, 1e-3, &loose()).unwrap();
        assert_eq!(v.stencil, "centered");
        assert!(v.passed, "{v:?}");
        assert!(v.relative_error < 1e-5, "{v:?}");
        assert!((v.measured_prefactor - 1.0).abs() < 1e-5);
    }

    #[test]
    fn dissipation_at_delta() {
        let p = TransitionRate::<f64>::power_law(1.0).unwrap();
        let s = evolve_semigroup_times(&p, &[0.0], 64, &loose()).unwrap().remove(0);
        let v = psi_dissipation_check(&p, &s, 1e-3, &loose()).unwrap();
        assert_eq!(v.stencil, "forward3");
        assert!((v.double_sum - 2.0 * p.total_rate()).abs() < 1e-12);
        assert!(v.passed, "{v:?}");
        assert!(matches!(psi_dissipation_check(&p, &s, 0.5, &loose()), Err(Error::StepSize(_))));
    }

    #[test]
    fn block_bound_equality_for_block_constants() {
        let p = TransitionRate::<f64>::power_law(1.0).unwrap();
        let mut values = vec![0.0; 27];
        for (b, chunk) in values.chunks_mut(9).enumerate() {
            chunk.iter_mut().for_each(|v| *v = 0.01 * (b + 1) as f64);
        }
        let s = SemigroupState { box_radius: 13, time: 0.0, values, leaked_mass: 0.0, clamped_mass: 0.0, most_negative: 0.0, series_remainder: 0.0 };
        let v = block_projection_bound(&p, &s, 4, 0.3).unwrap();
        assert!(v.holds);
        for r in &v.rows {
            assert_eq!(r.dirichlet, 0.0);
            assert!((r.sum_squares - r.bound).abs() < 1e-16);
        }
        assert!(matches!(block_projection_bound(&p, &s, 3, 0.3), Err(Error::Alignment(_))));
    }

    #[test]
    fn block_bound_holds_at_t10() {
        let p = TransitionRate::<f64>::power_law(1.0).unwrap();
        let gap = walk_gap(&p, 4).unwrap();
        let s = evolve_semigroup_times(&p, &[10.0], factor_radius(9, 121), &loose()).unwrap().remove(0);
        let v = block_projection_bound(&p, &s, 4, gap).unwrap();
        assert!(v.holds);
        assert_eq!(v.rows.len(), 121);
    }

    /// Box radius whose box holds `blocks` blocks of width `width`.
    fn factor_radius(width: usize, blocks: usize) -> usize {
        (width * blocks - 1) / 2
    }

    #[test]
    fn envelope_tracks_psi_power() {
        // 2187 = 3^7 sites, tiled by widths 3^k.
        let p = TransitionRate::<f64>::power_law(1.0).unwrap();
        let gaps: Vec<(usize, f64)> = [1usize, 4, 13, 40, 121].iter().map(|&n| (n, walk_gap(&p, n).unwrap())).collect();
        let ts = [5.0, 10.0, 20.0, 40.0, 80.0];
        let states = evolve_semigroup_times(&p, &ts, 1093, &loose()).unwrap();
        let rows = dissipation_envelope(&p, &states, &gaps).unwrap();
        for r in &rows {
            assert!(r.best_bound <= r.dissipation * (1.0 + 1e-9), "{r:?}");
            assert!(r.best_bound > 0.0);
        }
        let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        assert!(hi / lo < 10.0, "{rows:?}");
        // ψ t^{1/α} stays within a constant window as well.
        let scaled: Vec<f64> = rows.iter().map(|r| r.psi * r.t).collect();
        let (a, b) = (scaled.iter().cloned().fold(f64::INFINITY, f64::min), scaled.iter().cloned().fold(0.0, f64::max));
        assert!(b / a < 2.0, "{scaled:?}");
    }
}
