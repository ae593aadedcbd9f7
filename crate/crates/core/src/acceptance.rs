//! End-to-end acceptance checks, shared by the test suite and the CLI.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::comparison::{certificate_kappa, compute_constants, dirichlet_profile, dirichlet_sum, reference_family, select_b, verify_comparison,
    CertificateOptions};
use crate::error::{Error, Result};
use crate::kinetics::{
    decay_exponent_fit, evolve_semigroup_times, mc_return_probability, psi_functional, return_probability_fourier, McOptions,
    SemigroupOptions,
};
use crate::particles::{
    build_exclusion_generator, build_zero_range_generator, enumerate_exclusion, enumerate_zero_range, exclusion_gap, zero_range_bound_table,
    verify_aldous, zero_range_gap, InteractionRate,
};
use crate::rates::{check_subpolynomial, polynomial_envelope_check, Anchors, SubpolynomialFunction, TransitionRate};
use crate::spectrum::{build_walk_generator, gap_scaling_sweep, rayleigh_quotient, spectral_gap, GapOptions, Generator};

/// Lower edge for the indicator zero-range normalised gap on `n ≤ 3`, `ℓ ≤ 6`.
/// Fixed before the check was run against the full grid; the smallest value
/// observed there is about 5.86.
pub const ZERO_RANGE_INDICATOR_FLOOR: f64 = 4.0;

const SWEEP_N: [usize; 5] = [4, 8, 16, 32, 64];
const MC_TIMES: [f64; 3] = [10.0, 30.0, 100.0];

#[derive(Debug, Clone, Copy)]
pub struct AcceptanceOptions {
    pub seed: u64,
    pub mc_samples: usize,
    /// Perturbs one rate of a structural-check generator so detailed balance
    /// breaks; the structural criterion must then fail.
    pub inject_asymmetry: bool,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self { seed: 20240917, mc_samples: 100_000, inject_asymmetry: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {} {}: {} ({:.2} s of {:.0} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

pub const CRITERIA: [(u8, &str, f64); 8] = [
    (1, "power-law gap scaling", 30.0),
    (2, "gap scaling across the stable domain", 60.0),
    (3, "multiscale comparison certificate", 30.0),
    (4, "subpolynomial growth envelope", 10.0),
    (5, "exclusion gap equals walk gap", 30.0),
    (6, "zero-range gap bounds", 60.0),
    (7, "return probability decay", 120.0),
    (8, "structural invariants", 30.0),
];

/// Runs one criterion. Computation errors are reported as failures.
pub fn run_criterion(id: u8, opts: &AcceptanceOptions) -> Result<CriterionResult> {
    let &(_, name, budget) = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| Error::ParameterDomain(format!("no acceptance criterion {id}")))?;
    let start = Instant::now();
    let outcome = match id {
        1 => walk_scaling(),
        2 => stable_domain_scaling(),
        3 => certificate(),
        4 => growth_envelope(opts.seed),
        5 => aldous(),
        6 => zero_range(),
        7 => decay(opts),
        _ => structural(opts),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    let within = seconds <= budget;
    let detail = if within { detail } else { format!("{detail}; over the time budget") };
    Ok(CriterionResult { id, name, passed: passed && within, seconds, budget_seconds: budget, detail })
}

pub fn run_all(opts: &AcceptanceOptions) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| run_criterion(c.0, opts).expect("criterion ids are valid")).collect()
}

type Outcome = Result<(bool, String)>;

fn sweep_slope(p: &TransitionRate<f64>) -> Result<(f64, f64)> {
    let s = gap_scaling_sweep(p, &SWEEP_N, &GapOptions::default())?;
    if s.failures > 0 {
        return Err(Error::Contract(format!("{} sweep rows failed for {}", s.failures, p.descriptor())));
    }
    let slope = s.slope.ok_or_else(|| Error::Degenerate("sweep fit failed".into()))?;
    Ok((slope, s.min_normalized.unwrap_or(f64::NAN)))
}

fn walk_scaling() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.5, 1.0, 1.5] {
        let (slope, low) = sweep_slope(&TransitionRate::power_law(alpha)?)?;
        let good = (slope + alpha).abs() <= 0.10 && (alpha != 1.0 || low >= 0.5);
        ok &= good;
        parts.push(format!("alpha={alpha} slope {slope:.3} (target {:.2}±0.10) min normalized {low:.3}", -alpha));
    }
    Ok((ok, parts.join("; ")))
}

fn stable_domain_scaling() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut cases: Vec<(String, TransitionRate<f64>, f64)> = [0.5, 1.0, 1.5]
        .iter()
        .map(|&a| Ok((format!("q0 alpha={a}"), TransitionRate::q_zero(a)?, a)))
        .collect::<Result<_>>()?;
    cases.push(("lacunary l^2 alpha=1".into(), TransitionRate::lacunary(1.0, Anchors::Power { degree: 2 })?, 1.0));
    for (label, p, alpha) in cases {
        let (slope, _) = sweep_slope(&p)?;
        ok &= (slope + alpha).abs() <= 0.15;
        parts.push(format!("{label} slope {slope:.3} (target {:.2}±0.15)", -alpha));
    }
    Ok((ok, parts.join("; ")))
}

fn certificate() -> Outcome {
    let reference = compute_constants(1.02f64, 1.0, 2.0)?;
    let params = select_b(2.0f64, 1.0)?;
    let lacunary = TransitionRate::lacunary(1.0, Anchors::Power { degree: 2 })?;
    let cert = certificate_kappa(&params, &lacunary, &CertificateOptions::default())?;
    let n = 10_000;
    let family = reference_family(n, 5000)?;
    let report = verify_comparison(&lacunary, 1.0, &family, n, Some(cert.kappa))?;
    let ok = params.theta < 1.0
        && (reference.theta - 0.810).abs() < 0.005
        && cert.kappa.is_finite()
        && report.within_kappa == Some(true);
    Ok((
        ok,
        format!(
            "b={} theta={:.4}; theta(b=1.02)={:.4}; kappa={:.4e}; sup ratio {:.4} over {} functions, n<={n}",
            params.b,
            params.theta,
            reference.theta,
            cert.kappa,
            report.sup_ratio,
            family.len()
        ),
    ))
}

/// A random subadditive function on `{1..len}`, raised to a power `m` so
/// that it is `2^{m-1}`-subpolynomial.
pub fn random_subpolynomial(rng: &mut impl Rng, len: usize) -> (SubpolynomialFunction<f64>, f64) {
    fn subadditive(rng: &mut impl Rng, depth: u32) -> Box<dyn Fn(f64) -> f64> {
        let leaf = depth == 0 || rng.random_bool(0.3);
        if leaf {
            return match rng.random_range(0..4) {
                0 => {
                    let c = rng.random_range(0.1..5.0);
                    Box::new(move |_| c)
                }
                1 => {
                    let s = rng.random_range(0.0..=1.0);
                    Box::new(move |x: f64| x.powf(s))
                }
                2 => Box::new(|x: f64| x.ln_1p()),
                _ => {
                    let c = rng.random_range(1.0..100.0);
                    Box::new(move |x: f64| x.min(c))
                }
            };
        }
        let a = subadditive(rng, depth - 1);
        match rng.random_range(0..3) {
            0 => {
                let b = subadditive(rng, depth - 1);
                let (wa, wb) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
                Box::new(move |x| wa * a(x) + wb * b(x))
            }
            1 => {
                let b = subadditive(rng, depth - 1);
                Box::new(move |x| a(x).max(b(x)))
            }
            _ => {
                // Nondecreasing concave h with h(0) = 0 keeps subadditivity.
                let s = rng.random_range(0.2..=1.0);
                Box::new(move |x| a(x).powf(s))
            }
        }
    }
    let base = subadditive(rng, 4);
    let m = rng.random_range(1..=3);
    let phi = SubpolynomialFunction::from_fn(len, |x| base(x as f64).powi(m)).expect("nonnegative by construction");
    (phi, 2f64.powi(m - 1))
}

fn growth_envelope(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut tested, mut violations, mut worst) = (0, 0, 0.0f64);
    while tested < 1000 {
        let (phi, k) = random_subpolynomial(&mut rng, 512);
        // Rounding can nudge a composite just past K; only certified ones count.
        if !check_subpolynomial(&phi, k, 512).passed {
            continue;
        }
        let v = polynomial_envelope_check(&phi, k, 512)?;
        tested += 1;
        violations += (!v.holds) as usize;
        worst = worst.max(v.worst_ratio);
    }
    Ok((violations == 0, format!("{tested} functions, {violations} violations, worst ratio {worst:.4}")))
}

fn aldous() -> Outcome {
    let tol = 1e-8;
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut worst_hole = 0.0f64;
    let opts = GapOptions::dense();
    for p in [TransitionRate::power_law(1.0)?, TransitionRate::nearest_neighbor(1.0)?] {
        for n in 1..=3 {
            let r = verify_aldous(&p, n, tol, &opts)?;
            ok &= r.passed;
            worst = worst.max(r.worst_deviation);
            for ell in 1..2 * n + 1 {
                let a = exclusion_gap(&p, n, ell, &opts).gap;
                let b = exclusion_gap(&p, n, 2 * n + 1 - ell, &opts).gap;
                let d = match (a, b) {
                    (Some(a), Some(b)) => (a - b).abs(),
                    _ => f64::INFINITY,
                };
                worst_hole = worst_hole.max(d);
            }
        }
    }
    ok &= worst_hole <= tol;
    Ok((ok, format!("worst |exclusion - walk| {worst:.2e}; worst particle-hole gap difference {worst_hole:.2e}")))
}

fn zero_range() -> Outcome {
    let p = TransitionRate::<f64>::power_law(1.0)?;
    let opts = GapOptions::dense();
    let linear = InteractionRate::linear();
    let mut worst = 0.0f64;
    for n in 1..=2 {
        let walk = spectral_gap(&build_walk_generator(&p, n)?, &opts)?.gap;
        for ell in 1..=4 {
            let row = zero_range_gap(&p, &linear, n, ell, &opts);
            let gap = row.gap.ok_or_else(|| row.error.clone().unwrap())?;
            worst = worst.max((gap - walk).abs());
        }
    }
    let table = zero_range_bound_table(&p, &InteractionRate::indicator(), &[1, 2, 3], &[1, 2, 3, 4, 5, 6], &GapOptions::default())?;
    let floor = table.min_normalized.unwrap_or(f64::NAN);
    let ok = worst <= 1e-8 && floor >= ZERO_RANGE_INDICATOR_FLOOR && table.rows.iter().all(|r| r.gap.is_some());
    Ok((
        ok,
        format!(
            "linear g: worst |zero-range - walk| {worst:.2e}; indicator g: min normalized gap {floor:.4} (floor {ZERO_RANGE_INDICATOR_FLOOR})"
        ),
    ))
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| lo * (hi / lo).powf(k as f64 / (points - 1) as f64)).collect()
}

fn decay(opts: &AcceptanceOptions) -> Outcome {
    let times = log_grid(10.0, 100.0, 21);
    let mut ok = true;
    let mut parts = Vec::new();

    // α = 1 on the box: the prescribed radius leaks more than the default
    // budget, so the box is run with the budget lifted and its bias measured
    // against the Fourier values on all of ℤ.
    let p1 = TransitionRate::power_law(1.0)?;
    let states = evolve_semigroup_times(&p1, &times, 2048, &SemigroupOptions::with_budget(1.0))?;
    let box_vals: Vec<f64> = states.iter().map(|s| s.value_at(0)).collect();
    let leaked = states.iter().map(|s| s.leaked_mass).fold(0.0, f64::max);
    let fourier1: Vec<f64> = times.iter().map(|&t| return_probability_fourier(&p1, t, 0)).collect::<Result<_>>()?;
    let bias = box_vals.iter().zip(&fourier1).map(|(b, f)| ((b - f) / f).abs()).fold(0.0, f64::max);
    let box_fit = decay_exponent_fit(&times, &box_vals, None)?;
    let fourier_fit = decay_exponent_fit(&times, &fourier1, None)?;
    ok &= (box_fit.slope + 1.0).abs() <= 0.15 && (fourier_fit.slope + 1.0).abs() <= 0.15 && bias < 1e-2;
    parts.push(format!(
        "alpha=1 box L=2048 slope {:.4} (leaked up to {leaked:.3}, max relative bias {bias:.1e}), fourier slope {:.4}",
        box_fit.slope, fourier_fit.slope
    ));

    let p05 = TransitionRate::power_law(0.5)?;
    let fourier05: Vec<f64> = times.iter().map(|&t| return_probability_fourier(&p05, t, 0)).collect::<Result<_>>()?;
    let fit05 = decay_exponent_fit(&times, &fourier05, None)?;
    ok &= (fit05.slope + 2.0).abs() <= 0.2;
    parts.push(format!("alpha=0.5 fourier slope {:.4}", fit05.slope));

    let mut worst_z = 0.0f64;
    for alpha in [0.5, 1.0, 1.5] {
        let p = TransitionRate::power_law(alpha)?;
        let est = mc_return_probability(&p, &MC_TIMES, opts.mc_samples, opts.seed, &McOptions::default())?;
        for e in &est {
            let exact = return_probability_fourier(&p, e.t, 0)?;
            // Null-hypothesis spread, so rare events with no hits stay testable.
            let sd = (exact * (1.0 - exact) / opts.mc_samples as f64).sqrt().max(e.stderr);
            worst_z = worst_z.max((e.value - exact).abs() / sd);
        }
    }
    ok &= worst_z <= 4.0;
    parts.push(format!("MC worst deviation {worst_z:.2} sd over alpha in {{0.5,1,1.5}}, t in {{10,30,100}}"));
    Ok((ok, parts.join("; ")))
}

/// Copy of `g` with the rate `0 -> first neighbour` scaled by `1 + 1e-3`.
pub fn with_asymmetry(g: &Generator<f64>) -> Result<Generator<f64>> {
    let mut rows: Vec<Vec<(usize, f64)>> = (0..g.dim()).map(|x| g.transitions(x).collect()).collect();
    if let Some(first) = rows[0].first_mut() {
        first.1 *= 1.001;
    }
    Generator::from_rates(g.space(), g.equilibrium().to_vec(), rows, format!("{} (perturbed)", g.descriptor()))
}

fn structural(opts: &AcceptanceOptions) -> Outcome {
    let mut generators = Vec::new();
    let rates = [
        TransitionRate::power_law(0.5)?,
        TransitionRate::power_law(1.0)?,
        TransitionRate::power_law(1.5)?,
        TransitionRate::q_zero(1.0)?,
        TransitionRate::lacunary(1.0, Anchors::Power { degree: 2 })?,
        TransitionRate::nearest_neighbor(1.0)?,
    ];
    for p in &rates {
        for n in [4, 16] {
            generators.push(build_walk_generator(p, n)?);
        }
    }
    generators.push(build_exclusion_generator(&rates[1], &enumerate_exclusion(3, 3)?)?);
    for g in [InteractionRate::linear(), InteractionRate::indicator()] {
        generators.push(build_zero_range_generator(&rates[1], &g, &enumerate_zero_range(2, 3)?)?);
    }
    if opts.inject_asymmetry {
        generators[0] = with_asymmetry(&generators[0])?;
    }
    let row_bad = generators
        .iter()
        .filter(|g| {
            let l1 = g.apply(&vec![1.0; g.dim()]).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            g.row_sum_defect() > 1e-12 || l1 > 1e-12
        })
        .count();
    let balance_bad = generators.iter().filter(|g| g.detailed_balance_defect() > 1e-10).count();

    let p = &rates[1];
    let ts = [0.5, 1.0, 2.5, 5.0, 10.0];
    let doubled: Vec<f64> = ts.iter().map(|t| 2.0 * t).collect();
    let budget = SemigroupOptions::with_budget(1.0);
    let at_t = evolve_semigroup_times(p, &ts, 512, &budget)?;
    let at_2t = evolve_semigroup_times(p, &doubled, 512, &budget)?;
    let reversibility_bad = at_t
        .iter()
        .zip(&at_2t)
        .filter(|(a, b)| (psi_functional(*a) - b.value_at(0)).abs() > 1e-10 + b.leaked_mass)
        .count();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let walk = build_walk_generator(p, 16)?;
    let gap = spectral_gap(&walk, &GapOptions::dense())?.gap;
    let mut rayleigh_bad = 0;
    for _ in 0..1000 {
        let f: Vec<f64> = (0..walk.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        if rayleigh_quotient(&walk, &f)? < gap * (1.0 - 1e-10) {
            rayleigh_bad += 1;
        }
    }

    let mut bridge_worst = 0.0f64;
    for q in &rates {
        for n in [5usize, 20] {
            let f: Vec<f64> = (0..2 * n + 1).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut direct = 0.0;
            for x in 0..f.len() {
                for y in 0..f.len() {
                    direct += q.eval(y as i64 - x as i64) * (f[y] - f[x]).powi(2);
                }
            }
            let via = 2.0 * dirichlet_sum(q, &dirichlet_profile(&f), 1..=2 * n as u64)?;
            bridge_worst = bridge_worst.max((direct - via).abs() / direct);
        }
    }

    let ok = row_bad == 0 && balance_bad == 0 && reversibility_bad == 0 && rayleigh_bad == 0 && bridge_worst <= 1e-12;
    Ok((
        ok,
        format!(
            "{} generators: {row_bad} row-sum and {balance_bad} detailed-balance failures; {reversibility_bad}/{} reversibility failures; {rayleigh_bad}/1000 Rayleigh quotients below the gap; bridge identity worst relative error {bridge_worst:.1e}",
            generators.len(),
            ts.len()
        ),
    ))
}
