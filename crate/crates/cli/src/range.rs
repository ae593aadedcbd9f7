//! `a..b` (inclusive) and comma-list parsing.

fn parse_one<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("{what}: '{}' is not a valid number", s.trim()))
}

/// Integers from `a..b` (inclusive) and comma lists, mixed freely;
/// sorted and deduplicated.
pub fn parse_int_range(spec: &str, what: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let b = b.strip_prefix('=').unwrap_or(b);
                let (a, b): (usize, usize) = (parse_one(a, what)?, parse_one(b, what)?);
                if b < a {
                    return Err(format!("{what}: range {a}..{b} is empty"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_one(part, what)?),
        }
    }
    if out.is_empty() {
        return Err(format!("{what}: no values given"));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Times from a comma list or `a..b/k` (k log-spaced points, both ends
/// included); sorted and deduplicated.
pub fn parse_times(spec: &str) -> Result<Vec<f64>, String> {
    let mut out: Vec<f64> = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((range, k)) = part.split_once('/') {
            let (a, b) = range.split_once("..").ok_or_else(|| format!("times: '{part}' should read a..b/k"))?;
            let (a, b): (f64, f64) = (parse_one(a, "times")?, parse_one(b, "times")?);
            let k: usize = parse_one(k, "times")?;
            if !(a > 0.0 && b > a && k >= 2) {
                return Err(format!("times: '{part}' needs 0 < a < b and k ≥ 2"));
            }
            out.extend((0..k).map(|i| a * (b / a).powf(i as f64 / (k - 1) as f64)));
        } else {
            out.push(parse_one(part, "times")?);
        }
    }
    if out.is_empty() {
        return Err("times: no values given".into());
    }
    if let Some(t) = out.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(format!("times: {t} is not a finite nonnegative time"));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_ranges() {
        assert_eq!(parse_int_range("4..7", "n").unwrap(), vec![4, 5, 6, 7]);
        assert_eq!(parse_int_range("8,4,4..5", "n").unwrap(), vec![4, 5, 8]);
        assert_eq!(parse_int_range("3..3", "n").unwrap(), vec![3]);
        assert!(parse_int_range("5..4", "n").is_err());
        assert!(parse_int_range("", "n").is_err());
        assert!(parse_int_range("a..4", "n").is_err());
    }

    #[test]
    fn time_grids() {
        let t = parse_times("10..100/3").unwrap();
        assert_eq!(t.len(), 3);
        assert!((t[1] - 10f64.powf(1.5)).abs() < 1e-12);
        assert_eq!(parse_times("30, 10").unwrap(), vec![10.0, 30.0]);
        assert!(parse_times("-1").is_err());
        assert!(parse_times("10..5/3").is_err());
    }
}
