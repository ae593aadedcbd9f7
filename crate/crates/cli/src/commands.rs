use std::fs;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use stablegap::acceptance::{run_criterion, AcceptanceOptions, CRITERIA};
use stablegap::comparison::{
    certificate_kappa, compute_constants, reference_family, select_b, verify_comparison, CertificateOptions, MultiscaleParameters,
};
use stablegap::kinetics::{
    characteristic_exponent, decay_exponent_fit, evolve_semigroup_times, mc_return_probability, return_probability_fourier, McOptions,
    SemigroupOptions, DEFAULT_FIT_START,
};
use stablegap::particles::{classify, exclusion_gap, zero_range_gap, InteractionRate, ParticleRow};
use stablegap::rates::{parse_table, Anchors, TailRule};
use stablegap::spectrum::{gap_scaling_sweep, GapOptions, MethodChoice};
use stablegap::{Error, TransitionRate64};

use crate::args::*;
use crate::error::CliError;
use crate::output::{emit, render, Manifest};
use crate::range::{parse_int_range, parse_times};

type CliResult = Result<(), CliError>;

fn build_rate(a: &RateArgs) -> Result<(TransitionRate64, Value), CliError> {
    let base = match a.rate {
        RateName::Power => TransitionRate64::power_law(a.alpha),
        RateName::Q0 => TransitionRate64::q_zero(a.alpha),
        RateName::Lacunary => TransitionRate64::lacunary(a.alpha, Anchors::Power { degree: a.anchor_degree }),
        RateName::Nn => TransitionRate64::nearest_neighbor(1.0),
        RateName::Table => {
            let path = a.table.as_ref().ok_or_else(|| CliError::Validation("--rate table needs --table PATH".into()))?;
            let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let tail = match a.tail_alpha {
                Some(alpha) => TailRule::PowerLaw { alpha, scale: a.tail_scale },
                None => TailRule::Zero,
            };
            parse_table(&text, tail)
        }
    }
    .and_then(|p| if a.rate_scale == 1.0 { Ok(p) } else { p.scaled(a.rate_scale) })
    .map_err(CliError::validation)?;
    let mut echo = json!({ "rate": base.descriptor() });
    if a.rate == RateName::Table {
        // The table contents matter for reproducibility, not its path.
        let text = fs::read(a.table.as_ref().unwrap()).unwrap_or_default();
        echo["table_sha256"] = json!(crate::output::sha256_hex(&text));
    }
    Ok((base, echo))
}

fn gap_options(m: MethodName, seed: u64) -> GapOptions<f64> {
    let method = match m {
        MethodName::Auto => MethodChoice::Auto,
        MethodName::Dense => MethodChoice::Dense,
        MethodName::Iterative => MethodChoice::Iterative,
    };
    GapOptions { method, seed, ..GapOptions::default() }
}

fn method_name(m: MethodName) -> &'static str {
    match m {
        MethodName::Auto => "auto",
        MethodName::Dense => "dense",
        MethodName::Iterative => "iterative",
    }
}

fn finish<R: Serialize>(out: &OutputArgs, manifest: &Manifest, rows: &[R], summary: &Value, start: Instant) -> CliResult {
    let text = render(manifest, rows, summary, out.format)?;
    emit(out, manifest, &text, start.elapsed().as_secs_f64())
}

pub fn gap_sweep(a: &GapSweepArgs) -> CliResult {
    let start = Instant::now();
    let (p, mut config) = build_rate(&a.rate)?;
    let n = parse_int_range(&a.n, "--n").map_err(CliError::Validation)?;
    if n[0] == 0 {
        return Err(CliError::Validation("--n: box radius must be at least 1".into()));
    }
    config["n"] = json!(n);
    config["method"] = json!(method_name(a.method));
    let manifest = Manifest::new("gap-sweep", config, a.out.seed);
    let sweep = gap_scaling_sweep(&p, &n, &gap_options(a.method, a.out.seed)).map_err(CliError::computation)?;
    let summary = json!({
        "exponent": sweep.exponent,
        "slope": sweep.slope,
        "intercept": sweep.intercept,
        "min_normalized": sweep.min_normalized,
        "max_normalized": sweep.max_normalized,
        "failures": sweep.failures,
    });
    finish(&a.out, &manifest, &sweep.rows, &summary, start)?;
    failed_rows(sweep.rows.iter().filter_map(|r| r.error.as_ref().map(|e| format!("n={}: {e}", r.n))))
}

fn failed_rows(errors: impl Iterator<Item = String>) -> CliResult {
    let errors: Vec<String> = errors.collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Computation(format!("{} rows failed (marked in the output): {}", errors.len(), errors.join("; "))))
    }
}

fn stable_alpha(p: &TransitionRate64) -> Result<f64, CliError> {
    p.alpha().ok_or_else(|| CliError::Validation(format!("{} has no stable tail; the multiscale constants need one", p.descriptor())))
}

fn multiscale_params(k: f64, alpha: f64, b: Option<f64>) -> Result<MultiscaleParameters<f64>, CliError> {
    match b {
        Some(b) => compute_constants(b, alpha, k).map_err(CliError::validation),
        None => select_b(k, alpha).map_err(|e| match e {
            Error::ParameterDomain(_) => CliError::validation(e),
            e => CliError::computation(e),
        }),
    }
}

#[derive(Serialize)]
struct Quantity {
    name: String,
    value: String,
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<Quantity>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::String(s) => out.push(Quantity { name: prefix.into(), value: s.clone() }),
        other => out.push(Quantity { name: prefix.into(), value: other.to_string() }),
    }
}

pub fn multiscale(a: &MultiscaleArgs) -> CliResult {
    let start = Instant::now();
    let (p, mut config) = build_rate(&a.rate)?;
    let alpha = stable_alpha(&p)?;
    config["K"] = json!(a.k);
    config["b"] = json!(a.b);
    config["horizon_value"] = json!(a.horizon_value);
    let manifest = Manifest::new("multiscale", config, a.out.seed);
    let params = multiscale_params(a.k, alpha, a.b)?;
    let opts = CertificateOptions { horizon_value: a.horizon_value, ..CertificateOptions::default() };
    let cert = certificate_kappa(&params, &p, &opts).map_err(CliError::computation)?;
    let doc = serde_json::to_value(&cert).unwrap();
    match a.out.format {
        Format::Json => finish(&a.out, &manifest, &[doc], &Value::Null, start),
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", &doc, &mut rows);
            finish(&a.out, &manifest, &rows, &Value::Null, start)
        }
    }
}

pub fn compare(a: &CompareArgs) -> CliResult {
    let start = Instant::now();
    let (p, mut config) = build_rate(&a.rate)?;
    let alpha = stable_alpha(&p)?;
    if a.n_max < 2 {
        return Err(CliError::Validation("--n-max must be at least 2".into()));
    }
    config["K"] = json!(a.k);
    config["n_max"] = json!(a.n_max);
    let manifest = Manifest::new("compare", config, a.out.seed);
    let params = multiscale_params(a.k, alpha, None)?;
    let cert = certificate_kappa(&params, &p, &CertificateOptions::default()).map_err(CliError::computation)?;
    let family = reference_family(a.n_max, a.out.seed).map_err(CliError::validation)?;
    let report = verify_comparison(&p, alpha, &family, a.n_max, Some(cert.kappa)).map_err(CliError::computation)?;
    let summary = json!({
        "certificate": cert,
        "sup_ratio": report.sup_ratio,
        "within_kappa": report.within_kappa,
    });
    finish(&a.out, &manifest, &report.rows, &summary, start)?;
    if report.within_kappa == Some(false) {
        return Err(CliError::Computation(format!("empirical ratio {} exceeds kappa {}", report.sup_ratio, cert.kappa)));
    }
    Ok(())
}

fn particle_grid(a: &ParticleArgs, max_ell: impl Fn(usize) -> usize) -> Result<Vec<(usize, usize)>, CliError> {
    let ns = parse_int_range(&a.n, "--n").map_err(CliError::Validation)?;
    if ns[0] == 0 {
        return Err(CliError::Validation("--n: box radius must be at least 1".into()));
    }
    let ells = match &a.ell {
        Some(s) => Some(parse_int_range(s, "--ell").map_err(CliError::Validation)?),
        None => None,
    };
    let mut grid = Vec::new();
    for &n in &ns {
        let top = max_ell(n);
        match &ells {
            Some(list) => grid.extend(list.iter().filter(|&&l| l >= 1 && l <= top).map(|&l| (n, l))),
            None => grid.extend((1..=top).map(|l| (n, l))),
        }
    }
    if grid.is_empty() {
        return Err(CliError::Validation("no admissible (n, ell) pairs in the requested ranges".into()));
    }
    Ok(grid)
}

fn particle_summary(rows: &[ParticleRow<f64>]) -> Value {
    let min = rows.iter().filter_map(|r| r.normalized_gap).reduce(f64::min);
    json!({ "min_normalized": min, "failures": rows.iter().filter(|r| r.error.is_some()).count() })
}

pub fn exclusion(a: &ParticleArgs) -> CliResult {
    let start = Instant::now();
    let (p, mut config) = build_rate(&a.rate)?;
    // ell = 2n+1 fills the box: a single state and no gap.
    let grid = particle_grid(a, |n| 2 * n)?;
    config["grid"] = json!(grid);
    config["method"] = json!(method_name(a.method));
    let manifest = Manifest::new("exclusion", config, a.out.seed);
    let opts = gap_options(a.method, a.out.seed);
    let rows: Vec<ParticleRow<f64>> = grid.iter().map(|&(n, l)| exclusion_gap(&p, n, l, &opts)).collect();
    finish(&a.out, &manifest, &rows, &particle_summary(&rows), start)?;
    failed_rows(rows.iter().filter_map(|r| r.error.as_ref().map(|e| format!("n={} ell={}: {e}", r.n, r.ell))))
}

fn parse_g(spec: &str) -> Result<InteractionRate<f64>, CliError> {
    match spec.trim() {
        "linear" => Ok(InteractionRate::linear()),
        "indicator" => Ok(InteractionRate::indicator()),
        list => {
            let mut values = vec![0.0];
            for part in list.split(',') {
                values.push(part.trim().parse().map_err(|_| CliError::Validation(format!("--g: '{part}' is not a number")))?);
            }
            InteractionRate::table(values).map_err(CliError::validation)
        }
    }
}

pub fn zero_range(a: &ZeroRangeArgs) -> CliResult {
    let start = Instant::now();
    let pa = &a.particles;
    let (p, mut config) = build_rate(&pa.rate)?;
    let g = parse_g(&a.g)?;
    let grid = particle_grid(pa, |n| 2 * n + 1)?;
    let ell_max = grid.iter().map(|x| x.1).max().unwrap();
    if let Some(top) = g.max_defined() {
        if top < ell_max {
            return Err(CliError::Validation(format!("--g defines g up to {top}, but ell reaches {ell_max}")));
        }
    }
    let case = classify(&g, ell_max).map_err(CliError::validation)?;
    config["g"] = json!(g.descriptor());
    config["grid"] = json!(grid);
    config["method"] = json!(method_name(pa.method));
    let manifest = Manifest::new("zero-range", config, pa.out.seed);
    let opts = gap_options(pa.method, pa.out.seed);
    let rows: Vec<ParticleRow<f64>> = grid.iter().map(|&(n, l)| zero_range_gap(&p, &g, n, l, &opts)).collect();
    let mut summary = particle_summary(&rows);
    summary["case"] = serde_json::to_value(case).unwrap();
    finish(&pa.out, &manifest, &rows, &summary, start)?;
    failed_rows(rows.iter().filter_map(|r| r.error.as_ref().map(|e| format!("n={} ell={}: {e}", r.n, r.ell))))
}

#[derive(Serialize)]
struct ReturnRow {
    t: f64,
    exact_value: f64,
    mc_value: f64,
    mc_stderr: f64,
    leaked_mass: f64,
}

pub fn return_prob(a: &ReturnProbArgs) -> CliResult {
    let start = Instant::now();
    let (p, mut config) = build_rate(&a.rate)?;
    let times = parse_times(&a.times).map_err(CliError::Validation)?;
    if a.samples == 0 {
        return Err(CliError::Validation("--samples must be at least 1".into()));
    }
    if !(a.leak_budget >= 0.0) {
        return Err(CliError::Validation("--leak-budget must be nonnegative".into()));
    }
    let fourier_ok = characteristic_exponent(&p, 1.0).is_ok();
    let exact = match a.exact {
        Some(ExactName::Fourier) if !fourier_ok => {
            return Err(CliError::Validation(format!("{} has no closed-form symbol; use --exact box", p.descriptor())));
        }
        Some(e) => e,
        None if fourier_ok => ExactName::Fourier,
        None => ExactName::Box,
    };
    let radius = a.box_radius.unwrap_or(if p.scaling_exponent() >= 1.0 { 2048 } else { 8192 });
    if radius == 0 {
        return Err(CliError::Validation("--box-radius must be at least 1".into()));
    }
    let mc_opts = McOptions { alias_horizon: a.alias_horizon };
    stablegap::kinetics::JumpSampler::new(&p, &mc_opts).map_err(CliError::validation)?;
    config["times"] = json!(times);
    config["samples"] = json!(a.samples);
    config["exact"] = json!(match exact {
        ExactName::Fourier => "fourier",
        ExactName::Box => "box",
    });
    if exact == ExactName::Box {
        config["box_radius"] = json!(radius);
        config["leak_budget"] = json!(a.leak_budget);
    }
    config["alias_horizon"] = json!(a.alias_horizon);
    let manifest = Manifest::new("return-prob", config, a.out.seed);

    let (exact_values, leaked): (Vec<f64>, Vec<f64>) = match exact {
        ExactName::Fourier => (
            times.iter().map(|&t| return_probability_fourier(&p, t, 0)).collect::<Result<_, _>>().map_err(CliError::computation)?,
            vec![0.0; times.len()],
        ),
        ExactName::Box => {
            let opts = SemigroupOptions::with_budget(a.leak_budget);
            let states = evolve_semigroup_times(&p, &times, radius, &opts).map_err(|e| match e {
                Error::Truncation { leaked, budget } => CliError::Computation(format!(
                    "box of radius {radius} leaks {leaked:.3e} > budget {budget:.1e}; raise --box-radius, relax --leak-budget or use --exact fourier"
                )),
                e => CliError::computation(e),
            })?;
            states.iter().map(|s| (s.value_at(0), s.leaked_mass)).unzip()
        }
    };
    let mc = mc_return_probability(&p, &times, a.samples, a.out.seed, &mc_opts).map_err(CliError::computation)?;
    let rows: Vec<ReturnRow> = times
        .iter()
        .zip(&exact_values)
        .zip(&leaked)
        .zip(&mc)
        .map(|(((t, e), l), m)| ReturnRow { t: *t, exact_value: *e, mc_value: m.value, mc_stderr: m.stderr, leaked_mass: *l })
        .collect();
    let fit = decay_exponent_fit(&times, &exact_values, None).ok();
    let summary = json!({
        "fit_window_start": DEFAULT_FIT_START,
        "decay_slope": fit.as_ref().map(|f| f.slope),
        "decay_intercept": fit.as_ref().map(|f| f.intercept),
        "expected_slope": p.alpha().map(|a| -1.0 / a),
    });
    finish(&a.out, &manifest, &rows, &summary, start)
}

#[derive(Serialize)]
struct CriterionRow {
    id: u8,
    name: &'static str,
    passed: bool,
    budget_seconds: f64,
    detail: String,
}

pub fn verify_all(a: &VerifyArgs) -> CliResult {
    let start = Instant::now();
    let ids: Vec<u8> = match &a.only {
        Some(s) => {
            let list = parse_int_range(s, "--only").map_err(CliError::Validation)?;
            if let Some(bad) = list.iter().find(|&&i| !CRITERIA.iter().any(|c| c.0 as usize == i)) {
                return Err(CliError::Validation(format!("--only: no criterion {bad}")));
            }
            list.into_iter().map(|i| i as u8).collect()
        }
        None => CRITERIA.iter().map(|c| c.0).collect(),
    };
    if a.samples == 0 {
        return Err(CliError::Validation("--samples must be at least 1".into()));
    }
    let config = json!({ "criteria": ids, "samples": a.samples, "inject_asymmetry": a.inject_asymmetry });
    let manifest = Manifest::new("verify-all", config, a.out.seed);
    let opts = AcceptanceOptions { seed: a.out.seed, mc_samples: a.samples, inject_asymmetry: a.inject_asymmetry };
    let mut rows = Vec::new();
    for id in ids {
        let r = run_criterion(id, &opts).map_err(CliError::validation)?;
        eprintln!("{}", r.line());
        rows.push(CriterionRow { id: r.id, name: r.name, passed: r.passed, budget_seconds: r.budget_seconds, detail: r.detail });
    }
    let failed: Vec<u8> = rows.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let summary = json!({ "passed": rows.len() - failed.len(), "total": rows.len(), "failed": failed });
    finish(&a.out, &manifest, &rows, &summary, start)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(format!("criteria {failed:?} failed")))
    }
}
