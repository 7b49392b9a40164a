//! Boundary parameters `τ` (Nevanlinna functions or `∞`), their behaviour
//! along the imaginary axis, and the right-endpoint condition they induce.

use num_complex::Complex64;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

use crate::config::parse_scalar;
use crate::error::{Error, Result};

pub type TauFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(f64) -> TauValue + Send + Sync>;

/// A value of `τ`, which may be the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauValue {
    Finite(Complex64),
    Infinite,
}

impl TauValue {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            TauValue::Finite(z) => Some(z),
            TauValue::Infinite => None,
        }
    }
}

/// A named analytic parameter with an optional evaluator of its boundary
/// values `τ(u + i0)` on the real axis.
#[derive(Clone)]
pub struct AnalyticParam {
    name: String,
    eval: TauFn,
    boundary: Option<BoundaryFn>,
}

impl AnalyticParam {
    pub fn new<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        AnalyticParam {
            name: name.into(),
            eval: Arc::new(eval),
            boundary: None,
        }
    }

    pub fn with_boundary<G>(mut self, boundary: G) -> Self
    where
        G: Fn(f64) -> TauValue + Send + Sync + 'static,
    {
        self.boundary = Some(Arc::new(boundary));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for AnalyticParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Analytic({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum BoundaryParam {
    Constant(f64),
    Infinity,
    Analytic(AnalyticParam),
}

impl BoundaryParam {
    /// Principal square root, `Im √λ ≥ 0` on the upper half-plane.
    pub fn sqrt() -> Self {
        BoundaryParam::Analytic(
            AnalyticParam::new("sqrt", |z: Complex64| z.sqrt()).with_boundary(|u| {
                TauValue::Finite(if u < 0.0 {
                    Complex64::new(0.0, (-u).sqrt())
                } else {
                    Complex64::new(u.sqrt(), 0.0)
                })
            }),
        )
    }

    /// `(aλ + b) / (cλ + d)` with real coefficients and `ad - bc ≥ 0`.
    pub fn mobius(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParam("mobius coefficients must be finite".into()));
        }
        if c == 0.0 && d == 0.0 {
            return Err(Error::InvalidParam("mobius denominator vanishes identically".into()));
        }
        if a * d - b * c < 0.0 {
            return Err(Error::InvalidParam(format!(
                "mobius:{a},{b},{c},{d} maps the upper half-plane into the lower one (ad - bc < 0)"
            )));
        }
        let name = format!("mobius:{a},{b},{c},{d}");
        let f = move |z: Complex64| (z * a + b) / (z * c + d);
        let g = move |u: f64| {
            let den = c * u + d;
            if den == 0.0 {
                TauValue::Infinite
            } else {
                TauValue::Finite(Complex64::new((a * u + b) / den, 0.0))
            }
        };
        Ok(BoundaryParam::Analytic(AnalyticParam::new(name, f).with_boundary(g)))
    }

    /// `τ(λ) = λ`.
    pub fn identity() -> Self {
        BoundaryParam::mobius(1.0, 0.0, 0.0, 1.0).expect("valid")
    }

    /// Parses `constant:θ`, `infinity`, `sqrt`, `mobius:a,b,c,d` (and `lambda` for `mobius:1,0,0,1`).
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (head, rest) = match spec.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r)),
            None => (spec, None),
        };
        match (head, rest) {
            ("infinity" | "inf", None) => Ok(BoundaryParam::Infinity),
            ("sqrt", None) => Ok(BoundaryParam::sqrt()),
            ("lambda", None) => Ok(BoundaryParam::identity()),
            ("constant", Some(v)) => {
                let theta = parse_scalar(v).map_err(|e| Error::InvalidParam(e.to_string()))?;
                Ok(BoundaryParam::Constant(theta))
            }
            ("mobius", Some(v)) => {
                let xs = v
                    .split(',')
                    .map(|s| parse_scalar(s).map_err(|e| Error::InvalidParam(e.to_string())))
                    .collect::<Result<Vec<f64>>>()?;
                match xs[..] {
                    [a, b, c, d] => BoundaryParam::mobius(a, b, c, d),
                    _ => Err(Error::InvalidParam(format!(
                        "mobius needs 4 coefficients, got {}",
                        xs.len()
                    ))),
                }
            }
            _ => Err(Error::InvalidParam(format!(
                "unknown tau spec `{spec}` (expected constant:θ, infinity, sqrt, lambda, mobius:a,b,c,d)"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            BoundaryParam::Constant(t) => format!("constant:{t}"),
            BoundaryParam::Infinity => "infinity".into(),
            BoundaryParam::Analytic(a) => a.name.clone(),
        }
    }

    pub fn is_orthogonal(&self) -> bool {
        !matches!(self, BoundaryParam::Analytic(_))
    }

    /// `τ(u + i0)` for real `u`. Analytic parameters without a boundary
    /// evaluator are sampled slightly above the axis.
    pub fn boundary_value(&self, u: f64) -> TauValue {
        match self {
            BoundaryParam::Constant(t) => TauValue::Finite(Complex64::new(*t, 0.0)),
            BoundaryParam::Infinity => TauValue::Infinite,
            BoundaryParam::Analytic(a) => match &a.boundary {
                Some(g) => g(u),
                None => TauValue::Finite((a.eval)(Complex64::new(u, 1e-13 * (1.0 + u.abs())))),
            },
        }
    }
}

/// `τ(λ)`; analytic parameters are only defined off the real axis.
pub fn eval_param(tau: &BoundaryParam, lambda: Complex64) -> Result<TauValue> {
    match tau {
        BoundaryParam::Constant(t) => Ok(TauValue::Finite(Complex64::new(*t, 0.0))),
        BoundaryParam::Infinity => Ok(TauValue::Infinite),
        BoundaryParam::Analytic(a) => {
            if lambda.im == 0.0 {
                return Err(Error::RealAxis(lambda.re));
            }
            let v = (a.eval)(lambda);
            if v.is_finite() {
                Ok(TauValue::Finite(v))
            } else {
                Ok(TauValue::Infinite)
            }
        }
    }
}

/// Limit of `τ(iy)/(iy)` as `y → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Slope {
    Value(f64),
    /// The tail stabilised away from zero but not to the requested accuracy.
    NonzeroUnresolved,
}

impl Slope {
    pub fn is_zero(&self) -> bool {
        matches!(self, Slope::Value(v) if *v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Asymptotics {
    pub b: Slope,
    /// `lim y Im τ(iy) < ∞`.
    pub moment_finite: bool,
    /// `lim τ(iy)`, present iff `b` is zero and the moment is finite.
    pub d: Option<f64>,
}

/// Geometric sampling schedule `y_k = y0 · 2^k`, `k = 0..=k_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSchedule {
    pub y0: f64,
    pub k_max: usize,
    pub rel_tol: f64,
    /// `|B|` at or below this counts as zero.
    pub zero_tol: f64,
}

impl Default for AsymptoticSchedule {
    fn default() -> Self {
        AsymptoticSchedule {
            y0: 1.0,
            k_max: 40,
            rel_tol: 1e-8,
            zero_tol: 1e-10,
        }
    }
}

pub fn asymptotics(tau: &BoundaryParam) -> Result<Asymptotics> {
    asymptotics_with(tau, &AsymptoticSchedule::default())
}

enum Limit {
    Converged(f64),
    Divergent,
    Open,
}

/// Aitken-accelerated limit of a real sequence.
struct Tracker {
    xs: Vec<f64>,
    est: Vec<f64>,
    rel_tol: f64,
    abs_tol: f64,
}

impl Tracker {
    fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Tracker {
            xs: Vec::new(),
            est: Vec::new(),
            rel_tol,
            abs_tol,
        }
    }

    fn push(&mut self, x: f64) {
        self.xs.push(x);
        let n = self.xs.len();
        if n >= 3 {
            let (a, b, c) = (self.xs[n - 3], self.xs[n - 2], self.xs[n - 1]);
            let den = (c - b) - (b - a);
            let acc = if den == 0.0 || !den.is_finite() {
                c
            } else {
                c - (c - b) * (c - b) / den
            };
            self.est.push(if acc.is_finite() { acc } else { c });
        }
    }

    fn increments(&self) -> Vec<f64> {
        self.xs.windows(2).map(|w| w[1] - w[0]).collect()
    }

    fn shrinking(&self) -> bool {
        let d = self.increments();
        let n = d.len();
        n >= 3
            && (n - 2..n).all(|i| d[i] == 0.0 || d[i].abs() < (1.0 - 1e-3) * d[i - 1].abs())
    }

    fn state(&self) -> Limit {
        let n = self.est.len();
        if n >= 3 && self.shrinking() {
            let e = &self.est[n - 3..];
            let scale = e.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let spread = e.iter().fold(0.0f64, |m, x| m.max((x - e[2]).abs()));
            if spread <= self.rel_tol * scale + self.abs_tol {
                return Limit::Converged(e[2]);
            }
        }
        Limit::Open
    }

    fn final_state(&self) -> Limit {
        if let Limit::Converged(v) = self.state() {
            return Limit::Converged(v);
        }
        let d = self.increments();
        let n = d.len();
        if n >= 4
            && (n - 3..n).all(|i| {
                d[i] != 0.0 && d[i].signum() == d[i - 1].signum() && d[i].abs() >= (1.0 - 1e-3) * d[i - 1].abs()
            })
        {
            Limit::Divergent
        } else {
            Limit::Open
        }
    }

    fn tail(&self) -> Vec<f64> {
        self.xs.iter().rev().take(6).rev().copied().collect()
    }
}

/// Extrapolates `B = lim τ(iy)/(iy)`, whether `y Im τ(iy)` stays bounded and,
/// if so, `D = lim τ(iy)`.
pub fn asymptotics_with(tau: &BoundaryParam, sched: &AsymptoticSchedule) -> Result<Asymptotics> {
    let a = match tau {
        BoundaryParam::Constant(t) => {
            return Ok(Asymptotics {
                b: Slope::Value(0.0),
                moment_finite: true,
                d: Some(*t),
            })
        }
        BoundaryParam::Infinity => return Err(Error::InfiniteParam),
        BoundaryParam::Analytic(a) => a,
    };
    if !(sched.y0 > 0.0 && sched.k_max >= 4) {
        return Err(Error::InvalidArgument("asymptotic schedule needs y0 > 0 and k_max >= 4".into()));
    }
    let samples: Vec<(f64, Complex64)> = (0..=sched.k_max)
        .map(|k| {
            let y = sched.y0 * 2f64.powi(k as i32);
            (y, (a.eval)(Complex64::new(0.0, y)))
        })
        .collect();
    if samples.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidParam(format!("{} is not finite on the imaginary axis", a.name)));
    }

    // B: τ(iy)/(iy) is real in the limit.
    let mut slope = Tracker::new(sched.rel_tol, 0.1 * sched.zero_tol);
    let mut b = None;
    for (y, v) in &samples {
        slope.push((v / Complex64::new(0.0, *y)).re);
        if let Limit::Converged(x) = slope.state() {
            b = Some(x);
            break;
        }
    }
    let b = match b {
        Some(x) if x.abs() <= sched.zero_tol => 0.0,
        Some(x) => {
            return Ok(Asymptotics {
                b: Slope::Value(x),
                moment_finite: false,
                d: None,
            })
        }
        None => {
            let tail = slope.tail();
            let n = tail.len();
            let settled = tail.iter().all(|x| x.abs() > sched.zero_tol)
                && tail[n - 3..]
                    .iter()
                    .all(|x| (x - tail[n - 1]).abs() <= 1e-2 * tail[n - 1].abs());
            if settled {
                return Ok(Asymptotics {
                    b: Slope::NonzeroUnresolved,
                    moment_finite: false,
                    d: None,
                });
            }
            if tail[n - 1].abs() > sched.zero_tol {
                return Err(Error::Unresolved {
                    quantity: "tau(iy)/(iy)",
                    tail,
                });
            }
            0.0
        }
    };
    debug_assert_eq!(b, 0.0);

    let mut moment = Tracker::new(sched.rel_tol, 1e-14);
    let mut finite = None;
    for (y, v) in &samples {
        moment.push(y * v.im);
        if let Limit::Converged(_) = moment.state() {
            finite = Some(true);
            break;
        }
    }
    let finite = match finite {
        Some(f) => f,
        None => match moment.final_state() {
            Limit::Converged(_) => true,
            Limit::Divergent => false,
            Limit::Open => {
                return Err(Error::Unresolved {
                    quantity: "y Im tau(iy)",
                    tail: moment.tail(),
                })
            }
        },
    };
    if !finite {
        return Ok(Asymptotics {
            b: Slope::Value(0.0),
            moment_finite: false,
            d: None,
        });
    }

    let mut value = Tracker::new(sched.rel_tol, 1e-14);
    for (_, v) in &samples {
        value.push(v.re);
        if let Limit::Converged(d) = value.state() {
            return Ok(Asymptotics {
                b: Slope::Value(0.0),
                moment_finite: true,
                d: Some(d),
            });
        }
    }
    match value.final_state() {
        Limit::Converged(d) => Ok(Asymptotics {
            b: Slope::Value(0.0),
            moment_finite: true,
            d: Some(d),
        }),
        _ => Err(Error::Unresolved {
            quantity: "tau(iy)",
            tail: value.tail(),
        }),
    }
}

/// The scalar relation `η_τ` determined by the asymptotics of `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum EtaRelation {
    /// `η = {0} ⊕ C`.
    FullRange,
    /// `η = {(h, -d h)}`.
    Graph { d: f64 },
    /// `η = {(0, 0)}`.
    Zero,
}

pub fn eta_relation(tau: &BoundaryParam) -> Result<EtaRelation> {
    if let BoundaryParam::Infinity = tau {
        return Ok(EtaRelation::FullRange);
    }
    let asy = asymptotics(tau)?;
    Ok(eta_from(&asy))
}

pub fn eta_from(asy: &Asymptotics) -> EtaRelation {
    match (asy.b, asy.moment_finite, asy.d) {
        (b, _, _) if !b.is_zero() => EtaRelation::FullRange,
        (_, true, Some(d)) => EtaRelation::Graph { d },
        _ => EtaRelation::Zero,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BcLabel {
    /// `y(b) = 0`.
    Bc1,
    /// `y1(b) = D y(b)`.
    Bc2,
    /// `y(b) = y1(b) = 0`.
    Bc3,
}

impl fmt::Display for BcLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcLabel::Bc1 => "bc1",
            BcLabel::Bc2 => "bc2",
            BcLabel::Bc3 => "bc3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BcClass {
    pub label: BcLabel,
    pub d_tau: Option<f64>,
}

impl From<EtaRelation> for BcClass {
    fn from(eta: EtaRelation) -> Self {
        match eta {
            EtaRelation::FullRange => BcClass {
                label: BcLabel::Bc1,
                d_tau: None,
            },
            EtaRelation::Graph { d } => BcClass {
                label: BcLabel::Bc2,
                d_tau: Some(d),
            },
            EtaRelation::Zero => BcClass {
                label: BcLabel::Bc3,
                d_tau: None,
            },
        }
    }
}

pub fn classify_bc(tau: &BoundaryParam) -> Result<BcClass> {
    eta_relation(tau).map(BcClass::from)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NevanlinnaReport {
    pub ok: bool,
    /// Most negative `Im τ(λ)` seen (0 if none negative).
    pub worst_im: f64,
    pub worst_im_at: Complex64,
    /// Largest `|τ(conj λ) - conj τ(λ)|` relative to `1 + |τ(λ)|`.
    pub worst_symmetry: f64,
    pub worst_symmetry_at: Complex64,
}

/// Deterministic sample points in the upper half-plane with log-spaced moduli
/// in `[1e-2, 1e4]` and arguments in `(0, π)`.
pub fn upper_half_plane_samples(n: usize) -> Vec<Complex64> {
    const GOLDEN: f64 = 0.618_033_988_749_894_8;
    (0..n)
        .map(|i| {
            let s = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
            let r = 10f64.powf(-2.0 + 6.0 * s);
            let frac = ((i as f64 + 0.5) * GOLDEN).fract();
            let arg = std::f64::consts::PI * (0.01 + 0.98 * frac);
            Complex64::from_polar(r, arg)
        })
        .collect()
}

pub fn check_nevanlinna(tau: &BoundaryParam, n_samples: usize, tol_nev: f64) -> Result<NevanlinnaReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let mut rep = NevanlinnaReport {
        ok: true,
        worst_im: 0.0,
        worst_im_at: Complex64::new(0.0, 0.0),
        worst_symmetry: 0.0,
        worst_symmetry_at: Complex64::new(0.0, 0.0),
    };
    if !matches!(tau, BoundaryParam::Analytic(_)) {
        return Ok(rep);
    }
    for lam in upper_half_plane_samples(n_samples) {
        let (v, w) = match (eval_param(tau, lam)?, eval_param(tau, lam.conj())?) {
            (TauValue::Finite(v), TauValue::Finite(w)) => (v, w),
            _ => {
                return Err(Error::InvalidParam(format!(
                    "{} is infinite at {lam}",
                    tau.name()
                )))
            }
        };
        if v.im < rep.worst_im {
            rep.worst_im = v.im;
            rep.worst_im_at = lam;
        }
        let sym = (w - v.conj()).norm() / (1.0 + v.norm());
        if sym > rep.worst_symmetry {
            rep.worst_symmetry = sym;
            rep.worst_symmetry_at = lam;
        }
    }
    rep.ok = rep.worst_im >= -tol_nev && rep.worst_symmetry <= tol_nev;
    Ok(rep)
}
