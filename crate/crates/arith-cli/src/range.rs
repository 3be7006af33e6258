//! Integer ranges (`1..50`, `-20..0`, `1,4,9`, `1..5,9`) and real lists
//! (`0.8,1.0,1.5`).

/// Largest number of items a single range may expand to.
const MAX_ITEMS: usize = 10_000_000;

pub fn parse_ints(spec: &str) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(format!("empty item in range {spec:?}"));
        }
        let (lo, hi) = match part.split_once("..") {
            Some((a, b)) => (int(a)?, int(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let v = int(part)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(format!("range {part:?} is empty"));
        }
        if (hi - lo) as u128 + out.len() as u128 >= MAX_ITEMS as u128 {
            return Err(format!("range {spec:?} has more than {MAX_ITEMS} items"));
        }
        out.extend(lo..=hi);
    }
    Ok(out)
}

fn int(s: &str) -> Result<i64, String> {
    s.trim().parse().map_err(|_| format!("not an integer: {s:?}"))
}

/// Positive integers only.
pub fn parse_naturals(spec: &str, what: &str) -> Result<Vec<u64>, String> {
    parse_ints(spec)?
        .into_iter()
        .map(|v| u64::try_from(v).ok().filter(|&v| v >= 1).ok_or(format!("{what} must be at least 1, got {v}")))
        .collect()
}

/// Comma-separated positive finite reals.
pub fn parse_positive_reals(spec: &str, what: &str) -> Result<Vec<f64>, String> {
    spec.split(',')
        .map(|s| {
            let v: f64 = s.trim().parse().map_err(|_| format!("{what}: not a number: {s:?}"))?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(format!("{what} must be positive and finite, got {v}"))
            }
        })
        .collect()
}
