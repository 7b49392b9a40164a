//! Problem data for `-(p y')' + q y = λ Δ y` on a compact interval.
//!
//! Coefficients are piecewise rules rather than opaque callables: the set
//! where the weight vanishes is then known exactly, and both quadrature and
//! propagation split at every piece boundary.

use num_complex::Complex64;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::propagator::TrajectoryCache;
pub use crate::quad::QuadConfig;
use crate::quad::{integrate, integrate_real};

/// Maximum interpolation order accepted for tabulated pieces.
pub const MAX_TABLE_ORDER: usize = 5;

/// How a coefficient is evaluated on one piece.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    Constant(f64),
    /// Coefficients `c0 + c1 t + c2 t^2 + ...` in the absolute variable `t`.
    Polynomial(Vec<f64>),
    /// Pointwise samples `(t, value)` with local Lagrange interpolation.
    Table { nodes: Vec<(f64, f64)>, order: usize },
}

impl Rule {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Rule::Constant(c) => *c,
            Rule::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci),
            Rule::Table { nodes, order } => lagrange(nodes, *order, t),
        }
    }

    /// True when the rule is zero everywhere (not merely at isolated points).
    pub fn is_identically_zero(&self) -> bool {
        match self {
            Rule::Constant(c) => *c == 0.0,
            Rule::Polynomial(c) => c.iter().all(|&x| x == 0.0),
            Rule::Table { nodes, .. } => nodes.iter().all(|&(_, v)| v == 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Rule::Constant(c) if !c.is_finite() => {
                Err(Error::InvalidProblem("non-finite constant".into()))
            }
            Rule::Polynomial(c) if c.is_empty() || c.iter().any(|x| !x.is_finite()) => Err(
                Error::InvalidProblem("polynomial needs finite coefficients".into()),
            ),
            Rule::Table { nodes, order } => {
                if *order == 0 || *order > MAX_TABLE_ORDER {
                    return Err(Error::InvalidProblem(format!(
                        "table interpolation order must be in 1..={MAX_TABLE_ORDER}, got {order}"
                    )));
                }
                if nodes.len() < order + 1 {
                    return Err(Error::InvalidProblem(format!(
                        "table of order {order} needs at least {} nodes",
                        order + 1
                    )));
                }
                if nodes.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                    return Err(Error::InvalidProblem("non-finite table entry".into()));
                }
                if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidProblem(
                        "table nodes must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn hash_into<H: Hasher>(&self, h: &mut H) {
        match self {
            Rule::Constant(c) => {
                0u8.hash(h);
                c.to_bits().hash(h);
            }
            Rule::Polynomial(cs) => {
                1u8.hash(h);
                cs.iter().for_each(|c| c.to_bits().hash(h));
            }
            Rule::Table { nodes, order } => {
                2u8.hash(h);
                order.hash(h);
                for (t, v) in nodes {
                    t.to_bits().hash(h);
                    v.to_bits().hash(h);
                }
            }
        }
    }
}

fn lagrange(nodes: &[(f64, f64)], order: usize, t: f64) -> f64 {
    let n = nodes.len();
    let width = (order + 1).min(n);
    let idx = nodes.partition_point(|&(x, _)| x < t);
    let start = idx.saturating_sub(width / 2 + width % 2).min(n - width);
    let stencil = &nodes[start..start + width];
    let mut acc = 0.0;
    for (i, &(xi, yi)) in stencil.iter().enumerate() {
        let mut w = 1.0;
        for (j, &(xj, _)) in stencil.iter().enumerate() {
            if i != j {
                w *= (t - xj) / (xi - xj);
            }
        }
        acc += w * yi;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub rule: Rule,
}

/// A coefficient function given piecewise over `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFn {
    pieces: Vec<Piece>,
}

impl CoefficientFn {
    /// Pieces must be listed left to right with matching endpoints.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidProblem("coefficient has no pieces".into()));
        }
        for piece in &pieces {
            piece.rule.validate()?;
            if !(piece.start.is_finite() && piece.end.is_finite() && piece.start < piece.end) {
                return Err(Error::InvalidProblem(format!(
                    "piece [{}, {}] is empty or not finite",
                    piece.start, piece.end
                )));
            }
        }
        for w in pieces.windows(2) {
            if w[0].end != w[1].start {
                return Err(Error::InvalidProblem(format!(
                    "pieces must be contiguous: {} != {}",
                    w[0].end, w[1].start
                )));
            }
        }
        Ok(CoefficientFn { pieces })
    }

    pub fn constant(a: f64, b: f64, value: f64) -> Result<Self> {
        Self::new(vec![Piece {
            start: a,
            end: b,
            rule: Rule::Constant(value),
        }])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Index of the piece owning `t`; pieces are closed on the left except the last.
    pub fn piece_index(&self, t: f64) -> usize {
        let i = self.pieces.partition_point(|p| p.end <= t);
        i.min(self.pieces.len() - 1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.pieces[self.piece_index(t)].rule.eval(t)
    }

    fn start(&self) -> f64 {
        self.pieces[0].start
    }

    fn end(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].end
    }

    fn hash_into<H: Hasher>(&self, h: &mut H) {
        for p in &self.pieces {
            p.start.to_bits().hash(h);
            p.end.to_bits().hash(h);
            p.rule.hash_into(h);
        }
    }
}

/// One interval between consecutive breakpoints of all three coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub p_piece: usize,
    pub q_piece: usize,
    pub delta_piece: usize,
    /// The weight is identically zero here.
    pub dead: bool,
}

/// A validated regular Sturm–Liouville problem.
#[derive(Clone)]
pub struct SLProblem {
    a: f64,
    b: f64,
    alpha: f64,
    p: CoefficientFn,
    q: CoefficientFn,
    delta: CoefficientFn,
    quad: QuadConfig,
    segments: Vec<Segment>,
    breaks: Vec<f64>,
    fingerprint: u64,
    cache: Arc<TrajectoryCache>,
}

impl fmt::Debug for SLProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SLProblem")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("alpha", &self.alpha)
            .field("p", &self.p)
            .field("q", &self.q)
            .field("delta", &self.delta)
            .field("quad", &self.quad)
            .finish()
    }
}

const SAMPLES_PER_PIECE: usize = 65;

impl SLProblem {
    pub fn new(
        a: f64,
        b: f64,
        alpha: f64,
        p: CoefficientFn,
        q: CoefficientFn,
        delta: CoefficientFn,
        quad: QuadConfig,
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::DegenerateInterval { a, b });
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidProblem("alpha must be finite".into()));
        }
        quad.validate()?;
        for (name, c) in [("p", &p), ("q", &q), ("delta", &delta)] {
            if c.start() != a || c.end() != b {
                return Err(Error::InvalidProblem(format!(
                    "coefficient {name} covers [{}, {}] instead of [{a}, {b}]",
                    c.start(),
                    c.end()
                )));
            }
        }

        for piece in delta.pieces() {
            for t in sample_points(piece) {
                let v = piece.rule.eval(t);
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::NegativeWeight { t, value: v });
                }
            }
        }
        for piece in p.pieces() {
            if piece.rule.is_identically_zero() {
                return Err(Error::InvalidProblem(format!(
                    "p vanishes identically on [{}, {}]",
                    piece.start, piece.end
                )));
            }
            let values: Vec<f64> = sample_points(piece).map(|t| piece.rule.eval(t)).collect();
            if values.iter().any(|&v| v > 0.0) && values.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "p changes sign inside [{}, {}]; split the piece at the sign change",
                    piece.start, piece.end
                )));
            }
        }

        let mut breaks: Vec<f64> = [&p, &q, &delta]
            .iter()
            .flat_map(|c| c.pieces().iter().flat_map(|pc| [pc.start, pc.end]))
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let segments: Vec<Segment> = breaks
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let di = delta.piece_index(mid);
                Segment {
                    start: w[0],
                    end: w[1],
                    p_piece: p.piece_index(mid),
                    q_piece: q.piece_index(mid),
                    delta_piece: di,
                    dead: delta.pieces()[di].rule.is_identically_zero(),
                }
            })
            .collect();

        let mut h = DefaultHasher::new();
        a.to_bits().hash(&mut h);
        b.to_bits().hash(&mut h);
        alpha.to_bits().hash(&mut h);
        p.hash_into(&mut h);
        q.hash_into(&mut h);
        delta.hash_into(&mut h);
        for x in [quad.abs_tol, quad.rel_tol, quad.ode_tol] {
            x.to_bits().hash(&mut h);
        }
        quad.max_subdivisions.hash(&mut h);

        let problem = SLProblem {
            a,
            b,
            alpha,
            p,
            q,
            delta,
            quad,
            segments,
            breaks,
            fingerprint: h.finish(),
            cache: Arc::new(TrajectoryCache::default()),
        };
        problem.check_integrability()?;
        if problem.weight_support_measure() <= 0.0 {
            return Err(Error::TrivialWeight);
        }
        Ok(problem)
    }

    fn check_integrability(&self) -> Result<()> {
        let cfg = QuadConfig {
            rel_tol: 1e-6,
            abs_tol: 1e-10,
            ..self.quad
        };
        for seg in &self.segments {
            let s = *seg;
            let parts: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
                ("1/p", Box::new(move |t| 1.0 / self.p.pieces()[s.p_piece].rule.eval(t))),
                ("q", Box::new(move |t| self.q.pieces()[s.q_piece].rule.eval(t))),
                ("delta", Box::new(move |t| self.delta.pieces()[s.delta_piece].rule.eval(t))),
            ];
            for (name, f) in parts.iter() {
                let v = integrate_real(|t| f(t).abs(), &[s.start, s.end], &cfg);
                match v {
                    Ok(x) if x.is_finite() => {}
                    _ => {
                        return Err(Error::InvalidProblem(format!(
                            "{name} is not integrable on [{}, {}]",
                            s.start, s.end
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn p(&self) -> &CoefficientFn {
        &self.p
    }
    pub fn q(&self) -> &CoefficientFn {
        &self.q
    }
    pub fn delta(&self) -> &CoefficientFn {
        &self.delta
    }
    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }
    /// Sorted union of all piece boundaries, including `a` and `b`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }
    /// Stable hash of the problem data and tolerances.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
    pub(crate) fn cache(&self) -> &TrajectoryCache {
        &self.cache
    }

    /// Same problem with different tolerances (and a fresh trajectory cache).
    pub fn with_quad(&self, quad: QuadConfig) -> Result<Self> {
        SLProblem::new(
            self.a,
            self.b,
            self.alpha,
            self.p.clone(),
            self.q.clone(),
            self.delta.clone(),
            quad,
        )
    }

    /// `(1/p, q, Δ)` at `t`, using the rules of segment `seg` even at its endpoints.
    #[inline]
    pub fn coefficients_on(&self, seg: &Segment, t: f64) -> (f64, f64, f64) {
        let inv_p = 1.0 / self.p.pieces[seg.p_piece].rule.eval(t);
        let q = self.q.pieces[seg.q_piece].rule.eval(t);
        let d = if seg.dead {
            0.0
        } else {
            self.delta.pieces[seg.delta_piece].rule.eval(t)
        };
        (inv_p, q, d)
    }

    pub fn segment_at(&self, t: f64) -> &Segment {
        let i = self.segments.partition_point(|s| s.end <= t);
        &self.segments[i.min(self.segments.len() - 1)]
    }

    /// Lebesgue measure of `{Δ > 0}`: the total length of pieces whose rule is not
    /// identically zero.
    pub fn weight_support_measure(&self) -> f64 {
        self.delta
            .pieces()
            .iter()
            .filter(|p| !p.rule.is_identically_zero())
            .map(|p| p.end - p.start)
            .sum()
    }

    /// `∫ Δ(t) f(t) g(t)* dt`, skipping every piece on which `Δ` vanishes.
    pub fn delta_inner<F, G>(&self, f: F, g: G) -> Result<Complex64>
    where
        F: Fn(f64) -> Complex64,
        G: Fn(f64) -> Complex64,
    {
        self.integrate_weighted(|t| f(t) * g(t).conj())
    }

    /// `∫ Δ(t) h(t) dt` with the same piece-aware splitting as [`Self::delta_inner`].
    pub fn integrate_weighted<H>(&self, h: H) -> Result<Complex64>
    where
        H: Fn(f64) -> Complex64,
    {
        integrate(
            |t| {
                let seg = self.segment_at(t);
                if seg.dead {
                    return Complex64::new(0.0, 0.0);
                }
                let d = self.delta.pieces[seg.delta_piece].rule.eval(t);
                if d == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    h(t) * d
                }
            },
            &self.breaks,
            &self.quad,
        )
    }

    /// `‖f‖²_Δ`.
    pub fn delta_norm_sq<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(f64) -> Complex64,
    {
        self.integrate_weighted(|t| Complex64::new(f(t).norm_sqr(), 0.0))
            .map(|z| z.re)
    }
}

fn sample_points(piece: &Piece) -> impl Iterator<Item = f64> + '_ {
    (0..SAMPLES_PER_PIECE).map(move |i| {
        let s = i as f64 / (SAMPLES_PER_PIECE - 1) as f64;
        if i + 1 == SAMPLES_PER_PIECE {
            piece.end
        } else {
            piece.start + s * (piece.end - piece.start)
        }
    })
}

/// Problems used throughout the documentation and test suites.
pub mod presets {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    /// `-y'' = λ y` on `[0, 1]` with the left condition `y'(0) = 0` (α = −π/2).
    pub fn unit_interval() -> SLProblem {
        unit_interval_with(-FRAC_PI_2, QuadConfig::default())
    }

    pub fn unit_interval_with(alpha: f64, quad: QuadConfig) -> SLProblem {
        SLProblem::new(
            0.0,
            1.0,
            alpha,
            CoefficientFn::constant(0.0, 1.0, 1.0).unwrap(),
            CoefficientFn::constant(0.0, 1.0, 0.0).unwrap(),
            CoefficientFn::constant(0.0, 1.0, 1.0).unwrap(),
            quad,
        )
        .expect("valid preset")
    }

    /// `Δ = 1` on `[0, 1/3] ∪ [2/3, 1]`, zero in between; `p ≡ 1`, `q ≡ 0`, α = −π/2.
    pub fn middle_third() -> SLProblem {
        middle_third_with(QuadConfig::default())
    }

    pub fn middle_third_with(quad: QuadConfig) -> SLProblem {
        let (t1, t2) = (1.0 / 3.0, 2.0 / 3.0);
        let delta = CoefficientFn::new(vec![
            Piece {
                start: 0.0,
                end: t1,
                rule: Rule::Constant(1.0),
            },
            Piece {
                start: t1,
                end: t2,
                rule: Rule::Constant(0.0),
            },
            Piece {
                start: t2,
                end: 1.0,
                rule: Rule::Constant(1.0),
            },
        ])
        .unwrap();
        SLProblem::new(
            0.0,
            1.0,
            -FRAC_PI_2,
            CoefficientFn::constant(0.0, 1.0, 1.0).unwrap(),
            CoefficientFn::constant(0.0, 1.0, 0.0).unwrap(),
            delta,
            quad,
        )
        .expect("valid preset")
    }
}
