use rayon::prelude::*;
use serde::Serialize;

use super::{build_walk_generator, spectral_gap, GapOptions};
use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::rates::TransitionRate;
use crate::Real;

/// One line of a gap sweep; `gap` is empty and `method` is `failed` when
/// the solve did not succeed.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow<T> {
    pub n: usize,
    pub states: usize,
    pub gap: Option<T>,
    pub gap_times_scale: Option<T>,
    pub method: String,
    pub residual: Option<T>,
    #[serde(skip)]
    pub error: Option<Error>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary<T> {
    pub rows: Vec<SweepRow<T>>,
    /// Exponent used for `gap_times_scale = λ_n (2n+1)^exponent`.
    pub exponent: T,
    /// Least-squares slope of `log λ_n` against `log(2n+1)` over successful rows.
    pub slope: Option<T>,
    pub intercept: Option<T>,
    pub min_normalized: Option<T>,
    pub max_normalized: Option<T>,
    pub failures: usize,
}

/// Spectral gaps of the walk over several box radii, solved in parallel.
pub fn gap_scaling_sweep<T: Real>(
    p: &TransitionRate<T>,
    n_values: &[usize],
    opts: &GapOptions<T>,
) -> Result<SweepSummary<T>> {
    if n_values.is_empty() {
        return Err(Error::ParameterDomain("empty list of box radii".into()));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ParameterDomain("box radii must be strictly increasing".into()));
    }
    let exponent = p.scaling_exponent();
    let rows: Vec<SweepRow<T>> = n_values
        .par_iter()
        .map(|&n| {
            let states = 2 * n + 1;
            let scale = T::from_usize_lossy(states).powf(exponent);
            match build_walk_generator(p, n).and_then(|g| spectral_gap(&g, opts)) {
                Ok(r) => SweepRow {
                    n,
                    states,
                    gap: Some(r.gap),
                    gap_times_scale: Some(r.gap * scale),
                    method: r.method.to_string(),
                    residual: Some(r.residual),
                    error: None,
                },
                Err(e) => SweepRow {
                    n,
                    states,
                    gap: None,
                    gap_times_scale: None,
                    method: "failed".into(),
                    residual: None,
                    error: Some(e),
                },
            }
        })
        .collect();
    let ok: Vec<&SweepRow<T>> = rows.iter().filter(|r| r.gap.is_some_and(|g| g > T::zero())).collect();
    let xs: Vec<T> = ok.iter().map(|r| T::from_usize_lossy(r.states).ln()).collect();
    let ys: Vec<T> = ok.iter().map(|r| r.gap.unwrap().ln()).collect();
    let fit = least_squares(&xs, &ys);
    let normalized = ok.iter().filter_map(|r| r.gap_times_scale);
    let min_normalized = normalized.clone().reduce(T::min);
    let max_normalized = normalized.reduce(T::max);
    Ok(SweepSummary {
        failures: rows.len() - ok.len(),
        rows,
        exponent,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        min_normalized,
        max_normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_slope_one() {
        // Constant rate on all of Λ_n: the gap is the site count 2n+1.
        let ns = [2, 4, 8, 16];
        let p = TransitionRate::<f64>::constant_range(1.0, 40).unwrap();
        let s = gap_scaling_sweep(&p, &ns, &GapOptions::default()).unwrap();
        for r in &s.rows {
            assert!((r.gap.unwrap() - r.states as f64).abs() < 1e-9);
        }
        assert!((s.slope.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_lists() {
        let p = TransitionRate::<f64>::power_law(1.0).unwrap();
        assert!(gap_scaling_sweep(&p, &[], &GapOptions::default()).is_err());
        assert!(gap_scaling_sweep(&p, &[4, 4], &GapOptions::default()).is_err());
    }

    #[test]
    fn failures_are_marked() {
        let p = TransitionRate::<f64>::power_law(1.0).unwrap();
        let opts = GapOptions { tolerance: Some(0.0), ..GapOptions::default() };
        let s = gap_scaling_sweep(&p, &[1, 2], &opts).unwrap();
        assert_eq!(s.failures, 2);
        assert!(s.rows.iter().all(|r| r.method == "failed"));
    }
}
