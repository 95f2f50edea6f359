//! Parser for reciprocal-linear p-sequence formulas: `1/n`, `1/(2n)`,
//! `1/(n+0.5)`, `1/(2*n - 1)` and the like.

use regex::Regex;

/// Parses `1/(k*n + c)` style formulas into the sequence n -> p_n.
pub fn parse(formula: &str) -> geomid::Result<impl Fn(u32) -> f64 + Send + Sync + 'static> {
    let re = Regex::new(
        r"^1/\(?\s*(?P<k>\d+(?:\.\d+)?)?\s*\*?\s*n\s*(?:(?P<sign>[+-])\s*(?P<c>\d+(?:\.\d+)?))?\s*\)?$",
    )
    .expect("valid regex");
    let cleaned = formula.trim();
    let caps = re.captures(cleaned).ok_or_else(|| {
        geomid::Error::invalid(format!(
            "cannot parse p-sequence `{formula}`; expected a form like 1/n, 1/(2n), 1/(n+0.5)"
        ))
    })?;
    let k: f64 = caps.name("k").map_or(1.0, |m| m.as_str().parse().unwrap());
    let mut c: f64 = caps.name("c").map_or(0.0, |m| m.as_str().parse().unwrap());
    if caps.name("sign").map(|m| m.as_str()) == Some("-") {
        c = -c;
    }
    if k <= 0.0 {
        return Err(geomid::Error::invalid("p-sequence coefficient must be positive"));
    }
    Ok(move |n: u32| 1.0 / (k * n as f64 + c))
}
