//! TOML problem configuration.
//!
//! ```toml
//! [interval]
//! a = 0
//! b = 1
//! alpha = "-pi/2"
//!
//! [coefficients.p]
//! constant = 1
//!
//! [coefficients.q]
//! constant = 0
//!
//! [coefficients.delta]
//! pieces = [
//!   { start = 0, end = "1/3", constant = 1 },
//!   { start = "1/3", end = "2/3", constant = 0 },
//!   { start = "2/3", end = 1, polynomial = [0, 1] },
//! ]
//!
//! [quadrature]
//! abs_tol = 1e-13
//!
//! [boundary]
//! tau = "sqrt"
//! ```
//!
//! Every scalar may be a number or a string holding a small expression over
//! numbers and `pi` with `+ - * /` and parentheses.

use serde::Deserialize;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::problem::{CoefficientFn, Piece, QuadConfig, Rule, SLProblem};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Float(f64),
    Expr(String),
}

impl Scalar {
    fn value(&self) -> Result<f64> {
        match self {
            Scalar::Int(i) => Ok(*i as f64),
            Scalar::Float(x) => Ok(*x),
            Scalar::Expr(s) => parse_scalar(s),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalSection {
    a: Scalar,
    b: Scalar,
    alpha: Scalar,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceSpec {
    start: Scalar,
    end: Scalar,
    constant: Option<Scalar>,
    polynomial: Option<Vec<Scalar>>,
    table: Option<Vec<(Scalar, Scalar)>>,
    order: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientSection {
    constant: Option<Scalar>,
    polynomial: Option<Vec<Scalar>>,
    pieces: Option<Vec<PieceSpec>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadSection {
    abs_tol: Option<Scalar>,
    rel_tol: Option<Scalar>,
    max_subdivisions: Option<usize>,
    ode_tol: Option<Scalar>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundarySection {
    tau: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    interval: IntervalSection,
    coefficients: BTreeMap<String, CoefficientSection>,
    #[serde(default)]
    quadrature: QuadSection,
    #[serde(default)]
    boundary: BoundarySection,
}

/// A parsed configuration: the problem plus the optional boundary parameter spec.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub problem: SLProblem,
    pub tau: Option<String>,
}

/// Parses and validates a problem configuration.
pub fn load_problem(text: &str) -> Result<SLProblem> {
    load_config(text).map(|c| c.problem)
}

/// Like [`load_problem`], also returning the `[boundary] tau` entry if present.
pub fn load_config(text: &str) -> Result<ProblemConfig> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let a = doc.interval.a.value()?;
    let b = doc.interval.b.value()?;
    let alpha = doc.interval.alpha.value()?;
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::DegenerateInterval { a, b });
    }

    for key in doc.coefficients.keys() {
        if !matches!(key.as_str(), "p" | "q" | "delta") {
            return Err(Error::Parse(format!("unknown coefficient `{key}`")));
        }
    }
    let coefficient = |name: &str| -> Result<CoefficientFn> {
        let sec = doc
            .coefficients
            .get(name)
            .ok_or_else(|| Error::Parse(format!("missing [coefficients.{name}]")))?;
        build_coefficient(name, sec, a, b)
    };
    let p = coefficient("p")?;
    let q = coefficient("q")?;
    let delta = coefficient("delta")?;

    let defaults = QuadConfig::default();
    let opt = |s: &Option<Scalar>, d: f64| s.as_ref().map_or(Ok(d), Scalar::value);
    let quad = QuadConfig {
        abs_tol: opt(&doc.quadrature.abs_tol, defaults.abs_tol)?,
        rel_tol: opt(&doc.quadrature.rel_tol, defaults.rel_tol)?,
        max_subdivisions: doc
            .quadrature
            .max_subdivisions
            .unwrap_or(defaults.max_subdivisions),
        ode_tol: opt(&doc.quadrature.ode_tol, defaults.ode_tol)?,
    };

    let problem = SLProblem::new(a, b, alpha, p, q, delta, quad)?;
    Ok(ProblemConfig {
        problem,
        tau: doc.boundary.tau,
    })
}

fn build_coefficient(name: &str, sec: &CoefficientSection, a: f64, b: f64) -> Result<CoefficientFn> {
    let whole = |rule| Ok(vec![Piece { start: a, end: b, rule }]);
    let pieces = match (&sec.constant, &sec.polynomial, &sec.pieces) {
        (Some(c), None, None) => whole(Rule::Constant(c.value()?))?,
        (None, Some(cs), None) => whole(Rule::Polynomial(values(cs)?))?,
        (None, None, Some(ps)) => ps.iter().map(build_piece).collect::<Result<Vec<_>>>()?,
        _ => {
            return Err(Error::Parse(format!(
                "[coefficients.{name}] needs exactly one of `constant`, `polynomial`, `pieces`"
            )))
        }
    };
    CoefficientFn::new(pieces).map_err(|e| match e {
        Error::InvalidProblem(msg) => Error::InvalidProblem(format!("coefficient {name}: {msg}")),
        other => other,
    })
}

fn build_piece(spec: &PieceSpec) -> Result<Piece> {
    let rule = match (&spec.constant, &spec.polynomial, &spec.table) {
        (Some(c), None, None) => Rule::Constant(c.value()?),
        (None, Some(cs), None) => Rule::Polynomial(values(cs)?),
        (None, None, Some(rows)) => Rule::Table {
            nodes: rows
                .iter()
                .map(|(t, v)| Ok((t.value()?, v.value()?)))
                .collect::<Result<Vec<_>>>()?,
            order: spec.order.unwrap_or(3),
        },
        _ => {
            return Err(Error::Parse(
                "a piece needs exactly one of `constant`, `polynomial`, `table`".into(),
            ))
        }
    };
    if spec.order.is_some() && !matches!(rule, Rule::Table { .. }) {
        return Err(Error::Parse("`order` only applies to table pieces".into()));
    }
    Ok(Piece {
        start: spec.start.value()?,
        end: spec.end.value()?,
        rule,
    })
}

fn values(xs: &[Scalar]) -> Result<Vec<f64>> {
    xs.iter().map(Scalar::value).collect()
}

/// Evaluates a scalar expression such as `"-pi/2"`, `"1/3"` or `"2*(pi+1)"`.
pub fn parse_scalar(text: &str) -> Result<f64> {
    let mut p = ExprParser {
        src: text.as_bytes(),
        pos: 0,
        depth: 0,
    };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing input"));
    }
    if !v.is_finite() {
        return Err(Error::Parse(format!("`{text}` is not finite")));
    }
    Ok(v)
}

const MAX_DEPTH: usize = 64;

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl ExprParser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Parse(format!(
            "{what} at offset {} in `{}`",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<f64> {
        let mut acc = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == b'+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<f64> {
        let mut acc = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if op == b'*' { acc * rhs } else { acc / rhs };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<f64> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("expression nested too deeply"));
        }
        let v = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                self.unary().map(|x| -x)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        };
        self.depth -= 1;
        v
    }

    fn atom(&mut self) -> Result<f64> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(_) => {
                let rest = &self.src[self.pos..];
                if rest.starts_with(b"pi") {
                    self.pos += 2;
                    Ok(std::f64::consts::PI)
                } else if rest.starts_with("π".as_bytes()) {
                    self.pos += "π".len();
                    Ok(std::f64::consts::PI)
                } else {
                    Err(self.error("unexpected character"))
                }
            }
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                return Err(self.error("malformed exponent"));
            }
        }
        // Only ASCII digits, '.', 'e', signs were consumed.
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        s.parse::<f64>().map_err(|_| self.error("malformed number"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const FREE: &str = r#"
[interval]
a = 0
b = 1
alpha = "-pi/2"

[coefficients.p]
constant = 1
[coefficients.q]
constant = 0
[coefficients.delta]
constant = 1
"#;

    #[test]
    fn scalar_expressions() {
        assert_eq!(parse_scalar("1/3").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_scalar("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_scalar(" 2 * (pi + 1) ").unwrap(), 2.0 * (PI + 1.0));
        assert_eq!(parse_scalar("1e-3").unwrap(), 1e-3);
        assert_eq!(parse_scalar("--2").unwrap(), 2.0);
        assert_eq!(parse_scalar("π").unwrap(), PI);
        for bad in ["", "1/", "(1", "pie", "1e", "1/0", "2 3", "abc"] {
            assert!(parse_scalar(bad).is_err(), "{bad}");
        }
        let deep = "(".repeat(10_000) + "1" + &")".repeat(10_000);
        assert!(parse_scalar(&deep).is_err());
    }

    #[test]
    fn free_problem_loads() {
        let c = load_config(FREE).unwrap();
        let p = c.problem;
        assert_eq!((p.a(), p.b(), p.alpha()), (0.0, 1.0, -PI / 2.0));
        assert_eq!(p.weight_support_measure(), 1.0);
        assert!(c.tau.is_none());
        assert_eq!(*p.quad(), QuadConfig::default());
    }

    #[test]
    fn degenerate_weight_loads() {
        let text = FREE.replace(
            "[coefficients.delta]\nconstant = 1",
            r#"[coefficients.delta]
pieces = [
  { start = 0, end = "1/3", constant = 1 },
  { start = "1/3", end = "2/3", constant = 0 },
  { start = "2/3", end = 1, constant = 1 },
]
[boundary]
tau = "constant:0"
"#,
        );
        let c = load_config(&text).unwrap();
        assert!((c.problem.weight_support_measure() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.tau.as_deref(), Some("constant:0"));
    }

    #[test]
    fn trivial_weight_and_degenerate_interval() {
        let zero = FREE.replace("[coefficients.delta]\nconstant = 1", "[coefficients.delta]\nconstant = 0");
        assert!(matches!(load_problem(&zero), Err(Error::TrivialWeight)));
        let flipped = FREE.replace("b = 1", "b = -1");
        assert!(matches!(
            load_problem(&flipped),
            Err(Error::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn negative_weight_rejected() {
        let neg = FREE.replace(
            "[coefficients.delta]\nconstant = 1",
            "[coefficients.delta]\npolynomial = [\"-1/4\", 1]",
        );
        assert!(matches!(load_problem(&neg), Err(Error::NegativeWeight { .. })));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(load_problem("not toml ["), Err(Error::Parse(_))));
        let missing = FREE.replace("[coefficients.q]\nconstant = 0\n", "");
        assert!(matches!(load_problem(&missing), Err(Error::Parse(_))));
        let unknown = FREE.to_string() + "[coefficients.r]\nconstant = 1\n";
        assert!(matches!(load_problem(&unknown), Err(Error::Parse(_))));
        let both = FREE.replace("constant = 0", "constant = 0\npolynomial = [1]");
        assert!(matches!(load_problem(&both), Err(Error::Parse(_))));
    }

    #[test]
    fn table_and_quadrature_sections() {
        let text = FREE.replace(
            "[coefficients.p]\nconstant = 1",
            r#"[coefficients.p]
pieces = [{ start = 0, end = 1, table = [[0, 1], [0.25, 1.25], [0.5, 1.5], [0.75, 1.75], [1, 2]], order = 2 }]
"#,
        ) + "[quadrature]\nabs_tol = 1e-12\nmax_subdivisions = 500\n";
        let p = load_problem(&text).unwrap();
        assert!((p.p().eval(0.6) - 1.6).abs() < 1e-14);
        assert_eq!(p.quad().abs_tol, 1e-12);
        assert_eq!(p.quad().max_subdivisions, 500);
        let bad = text.replace("max_subdivisions = 500", "max_subdivisions = 2");
        assert!(matches!(load_problem(&bad), Err(Error::InvalidQuadConfig(_))));
    }
}
