//! Parsers for command-line values: complex `λ`, built-in test functions,
//! truncation schedules, ranges and tabulated data.

use num_complex::Complex64;
use slspectra::{parse_scalar, transform::Truncation};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct ParseError(pub String);

type Result<T> = std::result::Result<T, ParseError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ParseError(msg.into()))
}

fn finite(text: &str) -> Result<f64> {
    let t = text.trim();
    // Rust also accepts "inf" and "nan"; only plain decimal numbers are allowed here.
    if t.is_empty() || t.chars().any(|c| !(c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))) {
        return err(format!("`{text}` is not a number"));
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => err(format!("`{text}` is not a finite number")),
    }
}

fn scalar(text: &str) -> Result<f64> {
    parse_scalar(text.trim()).map_err(|e| ParseError(e.to_string()))
}

/// A complex number: `-1`, `2i`, `1+2i`, `3.5-0.1i`, `-i`, `(re,im)`; `j` works as `i`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return err("empty complex number");
    }
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        let (re, im) = inner
            .split_once(',')
            .ok_or_else(|| ParseError(format!("expected (re,im), got `{text}`")))?;
        return Ok(Complex64::new(finite(re)?, finite(im)?));
    }
    let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) else {
        return Ok(Complex64::new(finite(&s)?, 0.0));
    };
    // Split before the last sign that is not an exponent sign or the leading one.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => finite(x)?,
    };
    let re = if re.is_empty() { 0.0 } else { finite(re)? };
    Ok(Complex64::new(re, im))
}

/// A test function `y(t)` given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    One,
    Zero,
    /// `(1 - t²)²`.
    Quartic,
    /// `t²`.
    Square,
    /// `cos(ω t)`.
    Cos(f64),
    /// `Σ c_k t^k`.
    Poly(Vec<f64>),
    /// Linear interpolation of `(t, y)` samples, sorted by `t`.
    Table(Vec<(f64, f64)>),
}

impl FunctionSpec {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            FunctionSpec::One => 1.0,
            FunctionSpec::Zero => 0.0,
            FunctionSpec::Quartic => (1.0 - t * t).powi(2),
            FunctionSpec::Square => t * t,
            FunctionSpec::Cos(w) => (w * t).cos(),
            FunctionSpec::Poly(c) => c.iter().rev().fold(0.0, |acc, &x| acc * t + x),
            FunctionSpec::Table(pts) => interpolate(pts, t),
        }
    }
}

fn interpolate(pts: &[(f64, f64)], t: f64) -> f64 {
    let i = pts.partition_point(|p| p.0 <= t);
    if i == 0 {
        return pts[0].1;
    }
    if i == pts.len() {
        return pts[pts.len() - 1].1;
    }
    let ((t0, y0), (t1, y1)) = (pts[i - 1], pts[i]);
    y0 + (y1 - y0) * (t - t0) / (t1 - t0)
}

/// A function spec; `table:PATH` is returned as the path for the caller to read.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionArg {
    Spec(FunctionSpec),
    TablePath(String),
}

/// `one`, `zero`, `quartic`, `square`, `cos:ω`, `poly:c0,c1,...` or `table:PATH`.
pub fn parse_function(text: &str) -> Result<FunctionArg> {
    let t = text.trim();
    let (head, arg) = match t.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (t, None),
    };
    let spec = match (head, arg) {
        ("one", None) => FunctionSpec::One,
        ("zero", None) => FunctionSpec::Zero,
        ("quartic", None) => FunctionSpec::Quartic,
        ("square", None) => FunctionSpec::Square,
        ("cos", Some(w)) => FunctionSpec::Cos(scalar(w)?),
        ("poly", Some(cs)) => {
            let c = cs.split(',').map(scalar).collect::<Result<Vec<_>>>()?;
            if c.len() > 64 {
                return err("at most 64 polynomial coefficients");
            }
            FunctionSpec::Poly(c)
        }
        ("table", Some(path)) if !path.is_empty() => return Ok(FunctionArg::TablePath(path.to_string())),
        _ => {
            return err(format!(
                "unknown function `{text}` (one, zero, quartic, square, cos:W, poly:C0,C1,..., table:PATH)"
            ))
        }
    };
    Ok(FunctionArg::Spec(spec))
}

/// Two-column `t,y` text with an optional header row; `t` strictly increasing.
pub fn parse_table(text: &str) -> Result<FunctionSpec> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ParseError(e.to_string()))?;
        if rec.len() != 2 {
            return err(format!("table row {} has {} fields, expected 2", i + 1, rec.len()));
        }
        match (finite(&rec[0]), finite(&rec[1])) {
            (Ok(t), Ok(y)) => pts.push((t, y)),
            // A non-numeric first row is a header.
            _ if i == 0 => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    if pts.len() < 2 {
        return err("a table needs at least two rows");
    }
    if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
        return err("table t values must be strictly increasing");
    }
    Ok(FunctionSpec::Table(pts))
}

/// `LO..HI` with `LO ≤ HI`.
pub fn parse_range(text: &str) -> Result<(f64, f64)> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| ParseError(format!("expected LO..HI, got `{text}`")))?;
    let (lo, hi) = (scalar(lo)?, scalar(hi)?);
    if lo > hi {
        return err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

/// `LO,HI` with `LO < HI`.
pub fn parse_window(text: &str) -> Result<(f64, f64)> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| ParseError(format!("expected LO,HI, got `{text}`")))?;
    let (lo, hi) = (scalar(lo)?, scalar(hi)?);
    if lo >= hi {
        return err(format!("empty window [{lo}, {hi}]"));
    }
    Ok((lo, hi))
}

/// `K:LO..HI,K:LO..HI,...`: point masses kept and ac window per truncation.
pub fn parse_schedule(text: &str) -> Result<Vec<Truncation>> {
    let out = text
        .split(',')
        .map(|item| {
            let (k, range) = item
                .split_once(':')
                .ok_or_else(|| ParseError(format!("expected K:LO..HI, got `{item}`")))?;
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| ParseError(format!("`{k}` is not a mass count")))?;
            Ok(Truncation::new(k, parse_range(range)?))
        })
        .collect::<Result<Vec<_>>>()?;
    slspectra::transform::check_nested(&out).map_err(|e| ParseError(e.to_string()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("-1").unwrap(), c(-1.0, 0.0));
        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("3.5 - 0.1i").unwrap(), c(3.5, -0.1));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1e-3-2e+2j").unwrap(), c(1e-3, -200.0));
        assert_eq!(parse_complex("(4,-5)").unwrap(), c(4.0, -5.0));
        for bad in ["", "i+", "1+2", "inf", "nan i", "(1)", "1+2ii", "--1"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn functions() {
        let f = |s: &str| match parse_function(s).unwrap() {
            FunctionArg::Spec(f) => f,
            FunctionArg::TablePath(_) => panic!(),
        };
        assert_eq!(f("quartic").eval(0.5), 0.5625);
        assert_eq!(f("poly:1,0,-2").eval(2.0), -7.0);
        assert!((f("cos:pi").eval(1.0) + 1.0).abs() < 1e-15);
        assert_eq!(parse_function("table:y.csv").unwrap(), FunctionArg::TablePath("y.csv".into()));
        assert!(parse_function("cosh:1").is_err());
        assert!(parse_function("one:1").is_err());

        let t = parse_table("t,y\n0,1\n0.5,2\n1,0\n").unwrap();
        assert_eq!(t.eval(0.25), 1.5);
        assert_eq!(t.eval(2.0), 0.0);
        assert!(parse_table("0,1\n0,2\n").is_err());
        assert!(parse_table("0,1,2\n1,2,3\n").is_err());
    }

    #[test]
    fn schedules_and_ranges() {
        let s = parse_schedule("2:-500..0,40:-1e4..0").unwrap();
        assert_eq!(s[1], Truncation::new(40, (-1e4, 0.0)));
        assert!(parse_schedule("40:-1e4..0,2:-500..0").is_err());
        assert!(parse_schedule("x:0..1").is_err());
        assert_eq!(parse_range("-1..50").unwrap(), (-1.0, 50.0));
        assert_eq!(parse_range("1.5..2").unwrap(), (1.5, 2.0));
        assert!(parse_range("5..1").is_err());
        assert_eq!(parse_window("-50,100").unwrap(), (-50.0, 100.0));
        assert!(parse_window("1,1").is_err());
    }
}
