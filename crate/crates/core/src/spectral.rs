//! m-functions, Stieltjes inversion, eigenvalues and point masses.
//!
//! With `N = ψ(b)τ - ψ1(b)` and `D = φ(b)τ - φ1(b)` (or `N = ψ(b)`, `D = φ(b)`
//! for `τ = ∞`) the m-function is `m = N / D`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nevanlinna::{eval_param, BoundaryParam, TauValue};
use crate::problem::SLProblem;
use crate::propagator::{phi_initial, propagate_backward, psi_initial, shoot, StateVec};
use crate::roots::{brent, golden_min, winding_number};

/// Default `ε_j = 0.1 · 2^{-j}`, `j = 0..=12`.
pub fn default_eps_schedule() -> Vec<f64> {
    (0..=12).map(|j| 0.1 * 2f64.powi(-j)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MFunctionSample {
    pub lambda: Complex64,
    pub value: Complex64,
}

/// `τ(λ)`, using the boundary value `τ(λ + i0)` on the real axis.
fn tau_at(tau: &BoundaryParam, lambda: Complex64) -> Result<TauValue> {
    if lambda.im == 0.0 {
        Ok(tau.boundary_value(lambda.re))
    } else {
        eval_param(tau, lambda)
    }
}

struct Ends {
    phi: StateVec,
    psi: StateVec,
    tau: TauValue,
}

impl Ends {
    fn compute(problem: &SLProblem, tau: &BoundaryParam, lambda: Complex64) -> Result<Self> {
        let tau = tau_at(tau, lambda)?;
        let phi = shoot(problem, lambda, phi_initial(problem.alpha()))?;
        let psi = shoot(problem, lambda, psi_initial(problem.alpha()))?;
        Ok(Ends { phi, psi, tau })
    }

    fn nd(&self) -> (Complex64, Complex64) {
        match self.tau {
            TauValue::Finite(t) => (self.psi.y * t - self.psi.y1, self.phi.y * t - self.phi.y1),
            TauValue::Infinite => (self.psi.y, self.phi.y),
        }
    }
}

/// Numerator and denominator of the m-function at `λ`.
pub fn numerator_denominator(
    problem: &SLProblem,
    tau: &BoundaryParam,
    lambda: Complex64,
) -> Result<(Complex64, Complex64)> {
    Ok(Ends::compute(problem, tau, lambda)?.nd())
}

/// The denominator only; for real `λ` with a constant or infinite parameter it is real.
pub fn denominator(problem: &SLProblem, tau: &BoundaryParam, lambda: Complex64) -> Result<Complex64> {
    let tv = tau_at(tau, lambda)?;
    let phi = shoot(problem, lambda, phi_initial(problem.alpha()))?;
    Ok(match tv {
        TauValue::Finite(t) => phi.y * t - phi.y1,
        TauValue::Infinite => phi.y,
    })
}

/// `m_τ(λ) = N / D`. On the real axis analytic parameters enter through
/// their boundary values.
pub fn m_function(problem: &SLProblem, tau: &BoundaryParam, lambda: Complex64) -> Result<Complex64> {
    let (n, d) = numerator_denominator(problem, tau, lambda)?;
    if !(d.norm() > 1e-14 * n.norm()) {
        return Err(Error::PoleProximity(lambda));
    }
    Ok(n / d)
}

/// `Im m_τ(λ)` from the identity `Im m = Im λ ∫ Δ|χ|² + Im τ / |D|²`, where
/// `χ = ψ - mφ` is propagated backwards from `b`. Unlike `Im(N/D)` this keeps
/// full relative accuracy when `Im m` is exponentially small against `|m|`.
pub fn im_m(problem: &SLProblem, tau: &BoundaryParam, lambda: Complex64) -> Result<f64> {
    let (energy, boundary) = im_m_parts(problem, tau, lambda)?;
    Ok(lambda.im * energy + boundary)
}

/// `(∫ Δ|χ|², Im τ / |D|²)` at `λ`; the energy is 0 on the real axis.
fn im_m_parts(problem: &SLProblem, tau: &BoundaryParam, lambda: Complex64) -> Result<(f64, f64)> {
    let ends = Ends::compute(problem, tau, lambda)?;
    let (n, d) = ends.nd();
    if !(d.norm() > 1e-14 * n.norm()) {
        return Err(Error::PoleProximity(lambda));
    }
    let (end, boundary_term) = match ends.tau {
        TauValue::Finite(t) => (StateVec::new(1.0 / d, t / d), t.im / d.norm_sqr()),
        TauValue::Infinite => (
            StateVec::new(Complex64::new(0.0, 0.0), 1.0 / ends.phi.y),
            0.0,
        ),
    };
    if lambda.im == 0.0 {
        return Ok((0.0, boundary_term));
    }
    let chi = propagate_backward(problem, lambda, end)?;
    let energy = problem
        .integrate_weighted(|t| {
            let v = chi.at(t).map(|s| s.y.norm_sqr()).unwrap_or(f64::NAN);
            Complex64::new(v, 0.0)
        })?
        .re;
    Ok((energy, boundary_term))
}

fn check_schedule(eps: &[f64]) -> Result<Vec<f64>> {
    if eps.len() < 3 {
        return Err(Error::InvalidArgument("epsilon schedule needs at least 3 entries".into()));
    }
    if eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "epsilon schedule must be positive and strictly decreasing".into(),
        ));
    }
    // Smallest four, ascending.
    Ok(eps.iter().rev().take(4).copied().collect())
}

/// Value at 0 of the quadratic through three points.
fn extrapolate0(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if i != j {
                w *= -x[j] / (x[i] - x[j]);
            }
        }
        acc += w * y[i];
    }
    acc
}

/// Extrapolates `g(ε)` to `ε = 0` from the smallest schedule entries. Returns the
/// estimate from the three smallest and, if available, from the next triple.
fn limit_at_zero<G>(eps: &[f64], mut g: G) -> Result<(f64, Option<f64>)>
where
    G: FnMut(f64) -> Result<f64>,
{
    let xs = check_schedule(eps)?;
    let ys = xs.iter().map(|&e| g(e)).collect::<Result<Vec<f64>>>()?;
    let e1 = extrapolate0(&xs[..3], &ys[..3]);
    let e2 = (xs.len() == 4).then(|| extrapolate0(&xs[1..4], &ys[1..4]));
    Ok((e1, e2))
}

fn mass_kernel(masses: &[(f64, f64)], u: f64, eps: f64) -> f64 {
    masses
        .iter()
        .map(|&(s, m)| m * eps / ((u - s) * (u - s) + eps * eps))
        .sum()
}

/// `(1/π) lim Im m(u + iε)` by quadratic extrapolation over the smallest `ε` of
/// the schedule.
pub fn spectral_density(problem: &SLProblem, tau: &BoundaryParam, u: f64, eps: &[f64]) -> Result<f64> {
    density_excluding(problem, tau, u, eps, &[])
}

/// As [`spectral_density`], with the Poisson kernels of known point masses removed
/// before extrapolation.
pub fn density_excluding(
    problem: &SLProblem,
    tau: &BoundaryParam,
    u: f64,
    eps: &[f64],
    masses: &[(f64, f64)],
) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::InvalidArgument("u must be finite".into()));
    }
    // The two parts of Im m are extrapolated separately. `ε ∫ Δ|χ|²` tends to 0
    // exactly when the energy stays bounded, which the agreement of its two
    // extrapolants certifies; folding it into the total would leave an absolute
    // residue far above densities like e^{-2 sqrt|u|}.
    let xs = check_schedule(eps)?;
    let parts = xs
        .iter()
        .map(|&e| {
            let (energy, boundary) = im_m_parts(problem, tau, Complex64::new(u, e))?;
            Ok((energy - mass_kernel(masses, u, e) / e, boundary))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let energy: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let boundary: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let e1 = extrapolate0(&xs[..3], &boundary[..3]);
    if xs.len() == 4 {
        let e2 = extrapolate0(&xs[1..4], &boundary[1..4]);
        let (i1, i2) = (extrapolate0(&xs[..3], &energy[..3]), extrapolate0(&xs[1..4], &energy[1..4]));
        if (e1 - e2).abs() > 1e-8 + 1e-6 * e1.abs() || (i1 - i2).abs() > 1e-8 + 1e-3 * i1.abs() {
            return Err(Error::PoleContaminated {
                u,
                first: e1 / std::f64::consts::PI,
                second: e2 / std::f64::consts::PI,
            });
        }
    }
    let rho = e1 / std::f64::consts::PI;
    if rho < -1e-8 {
        return Err(Error::NegativeDensity { u, value: rho });
    }
    Ok(rho.max(0.0))
}

/// Jump of the spectral function at a simple pole `lambda_k`, via the residue
/// `-N/D'` and cross-checked against `lim ε Im m(λ_k + iε)`.
pub fn point_mass(problem: &SLProblem, tau: &BoundaryParam, lambda_k: f64) -> Result<f64> {
    point_mass_with(problem, tau, lambda_k, &default_eps_schedule())
}

pub fn point_mass_with(problem: &SLProblem, tau: &BoundaryParam, lambda_k: f64, eps: &[f64]) -> Result<f64> {
    let (residue, limit) = point_mass_estimates(problem, tau, lambda_k, eps)?;
    if !(residue > 0.0) || !((residue - limit).abs() <= 1e-3 * residue) {
        return Err(Error::MassCrossCheck {
            lambda: lambda_k,
            residue,
            limit,
        });
    }
    Ok(residue)
}

/// `(residue, ε-limit)` estimates of the jump at `s`, before any cross-check.
pub fn point_mass_estimates(problem: &SLProblem, tau: &BoundaryParam, s: f64, eps: &[f64]) -> Result<(f64, f64)> {
    let h = 1e-5 * (1.0 + s.abs());
    let (np, dp) = numerator_denominator(problem, tau, Complex64::new(s, h))?;
    let (nm, dm) = numerator_denominator(problem, tau, Complex64::new(s, -h))?;
    let dprime = (dp - dm) / Complex64::new(0.0, 2.0 * h);
    let n = (np + nm) * 0.5;
    let residue = (-n / dprime).re;
    let (limit, _) = limit_at_zero(eps, |e| {
        let lam = Complex64::new(s, e);
        let (n, d) = numerator_denominator(problem, tau, lam)?;
        Ok(e * (n / d).im)
    })?;
    Ok((residue, limit))
}

/// Total `L = ∫ sqrt(Δ/|p|)`, which sets the asymptotic spacing `π/L` of `sqrt(λ_k)`.
fn optical_length(problem: &SLProblem) -> Result<f64> {
    crate::quad::integrate_real(
        |t| {
            let seg = problem.segment_at(t);
            let (inv_p, _, d) = problem.coefficients_on(seg, t);
            (d.max(0.0) * inv_p.abs()).sqrt()
        },
        problem.breakpoints(),
        problem.quad(),
    )
}

fn to_w(l: f64) -> f64 {
    l.signum() * l.abs().sqrt()
}

fn from_w(w: f64) -> f64 {
    w * w.abs()
}

/// Real poles of `m_τ` in `[lo, hi]`, ascending, at most `max_count`.
pub fn find_eigenvalues(
    problem: &SLProblem,
    tau: &BoundaryParam,
    interval: (f64, f64),
    max_count: usize,
) -> Result<Vec<f64>> {
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!("empty eigenvalue range [{lo}, {hi}]")));
    }
    let length = optical_length(problem)?;
    let hw = std::f64::consts::PI / (16.0 * length.max(1e-12));
    let (wlo, whi) = (to_w(lo), to_w(hi));
    let n = ((whi - wlo) / hw).ceil().max(4.0) as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|i| {
            if i == n {
                hi
            } else if i == 0 {
                lo
            } else {
                from_w(wlo + (whi - wlo) * i as f64 / n as f64)
            }
        })
        .collect();
    let values = grid
        .par_iter()
        .map(|&l| denominator(problem, tau, Complex64::new(l, 0.0)))
        .collect::<Result<Vec<Complex64>>>()?;

    let real_d = |l: f64| -> Result<f64> { Ok(denominator(problem, tau, Complex64::new(l, 0.0))?.re) };
    // Zeros can only occur where τ(u + i0) is real.
    let is_real = |v: &Complex64| v.im.abs() <= 1e-12 * v.norm();

    let mut candidates: Vec<(f64, f64, f64)> = Vec::new(); // (root, cell lo, cell hi)
    for i in 0..=n {
        let (l, v) = (grid[i], values[i]);
        if v == Complex64::new(0.0, 0.0) {
            let (a, b) = (grid[i.saturating_sub(1)], grid[(i + 1).min(n)]);
            candidates.push((l, a, b));
            continue;
        }
        if i == n {
            break;
        }
        let (l2, v2) = (grid[i + 1], values[i + 1]);
        if v2 == Complex64::new(0.0, 0.0) {
            continue;
        }
        if is_real(&v) && is_real(&v2) && v.re.signum() != v2.re.signum() {
            let xtol = 4.0 * f64::EPSILON * l.abs().max(l2.abs()) + 1e-300;
            let r = brent(real_d, l, l2, v.re, v2.re, xtol)?;
            candidates.push((r, l, l2));
        }
    }

    // A dip of |D| without a sign change may hide a double root or a close pair.
    for i in 1..n {
        let (vm, v, vp) = (values[i - 1], values[i], values[i + 1]);
        if !(is_real(&vm) && is_real(&v) && is_real(&vp)) || v.re == 0.0 {
            continue;
        }
        let same = vm.re.signum() == v.re.signum() && vp.re.signum() == v.re.signum();
        if !(same && v.re.abs() < vm.re.abs() && v.re.abs() < vp.re.abs()) {
            continue;
        }
        let sgn = v.re.signum();
        let (a, b) = (grid[i - 1], grid[i + 1]);
        let xtol = 1e-13 * (1.0 + a.abs().max(b.abs()));
        let (x, fx) = golden_min(|l| Ok(sgn * real_d(l)?), a, b, xtol)?;
        let scale = vm.re.abs().max(vp.re.abs());
        if fx < 0.0 {
            let fa = real_d(a)?;
            let fm = real_d(x)?;
            let fb = real_d(b)?;
            candidates.push((brent(real_d, a, x, fa, fm, xtol)?, a, x));
            candidates.push((brent(real_d, x, b, fm, fb, xtol)?, x, b));
        } else if fx <= 1e-9 * scale {
            return Err(Error::DoubleRoot(x));
        }
    }

    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut roots: Vec<f64> = Vec::new();
    for (r, a, b) in candidates {
        if r < lo || r > hi {
            continue;
        }
        if roots.last().is_some_and(|&p| (r - p).abs() <= 1e-8 * (1.0 + r.abs())) {
            continue;
        }
        if let BoundaryParam::Analytic(_) = tau {
            if !analytic_pole(problem, tau, r, a, b)? {
                continue;
            }
        }
        roots.push(r);
        if roots.len() >= max_count {
            break;
        }
    }
    Ok(roots)
}

/// Confirms that a real zero of the boundary-value denominator is a pole of
/// `m`: by the argument principle on a thin rectangle when `τ` is real along the
/// cell, otherwise by a stable nonzero point mass.
fn analytic_pole(problem: &SLProblem, tau: &BoundaryParam, r: f64, a: f64, b: f64) -> Result<bool> {
    const HALF_HEIGHT: f64 = 1e-2;
    let real_on_cell = [a, 0.5 * (a + b), b, r]
        .iter()
        .all(|&u| matches!(tau.boundary_value(u), TauValue::Finite(t) if t.im == 0.0));
    let (a, b) = if b - a < 1e-9 * (1.0 + r.abs()) {
        (r - 1e-3 * (1.0 + r.abs()), r + 1e-3 * (1.0 + r.abs()))
    } else {
        (a, b)
    };
    if real_on_cell && a < r && r < b {
        let corners = [
            Complex64::new(a, -HALF_HEIGHT),
            Complex64::new(b, -HALF_HEIGHT),
            Complex64::new(b, HALF_HEIGHT),
            Complex64::new(a, HALF_HEIGHT),
        ];
        if let Ok(count) = winding_number(|z| denominator(problem, tau, z), &corners) {
            if count >= 2 {
                return Err(Error::DoubleRoot(r));
            }
            return Ok(count == 1);
        }
    }
    match point_mass_estimates(problem, tau, r, &default_eps_schedule()) {
        Ok((res, lim)) => Ok(lim > 1e-10 && (res - lim).abs() <= 1e-3 * lim),
        Err(Error::PoleProximity(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// One node of the absolutely continuous grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcNode {
    pub u: f64,
    /// `w = sign(u) sqrt|u|`; nodes are midpoints of cells in `w`.
    pub w: f64,
    /// Cell width in `w`.
    pub dw: f64,
    pub rho: f64,
}

/// `σ_τ` on a window: an ac density on a grid plus point masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralFunction {
    pub ac: Vec<AcNode>,
    pub masses: Vec<(f64, f64)>,
    pub window: (f64, f64),
}

impl SpectralFunction {
    /// Quadrature weight of an ac node: `du = 2|w| dw`.
    pub fn weight(&self, node: &AcNode) -> f64 {
        2.0 * node.w.abs() * node.dw
    }

    /// A purely atomic spectral function.
    pub fn point_only(window: (f64, f64), masses: Vec<(f64, f64)>) -> Self {
        SpectralFunction {
            ac: Vec::new(),
            masses,
            window,
        }
    }

    /// The ac part integrated over `[x0, x1)` in `w`, partial cells linearly.
    fn ac_between_w(&self, x0: f64, x1: f64) -> f64 {
        self.ac
            .iter()
            .map(|n| {
                let (c0, c1) = (n.w - 0.5 * n.dw, n.w + 0.5 * n.dw);
                let overlap = (c1.min(x1) - c0.max(x0)).max(0.0);
                n.rho * 2.0 * n.w.abs() * overlap
            })
            .sum()
    }
}

/// Sample grid and exclusions used by [`build_spectral_function`]: returns
/// `(u, w, dw)` per node. When the window straddles 0, `w = 0` is a cell edge.
pub fn ac_grid(window: (f64, f64), nodes: usize, masses: &[(f64, f64)]) -> Vec<(f64, f64, f64)> {
    let (w0, w1) = (to_w(window.0), to_w(window.1));
    let mut cells = Vec::with_capacity(nodes);
    let mut side = |a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        for j in 0..n {
            cells.push((a + (j as f64 + 0.5) * h, h));
        }
    };
    if w0 < 0.0 && w1 > 0.0 && nodes >= 2 {
        let h = (w1 - w0) / nodes as f64;
        let n_neg = ((-w0 / h).round() as usize).clamp(1, nodes - 1);
        side(w0, 0.0, n_neg);
        side(0.0, w1, nodes - n_neg);
    } else {
        side(w0, w1, nodes);
    }
    cells
        .into_iter()
        .map(|(w, h)| (from_w(w), w, h))
        .filter(|&(u, _, _)| masses.iter().all(|&(s, _)| (u - s).abs() >= 1e-3 * (1.0 + s.abs())))
        .collect()
}

/// Locates the point masses in `window`, then samples the density on `ac_nodes`
/// midpoints of a grid uniform in `sign(u) sqrt|u|`.
pub fn build_spectral_function(
    problem: &SLProblem,
    tau: &BoundaryParam,
    window: (f64, f64),
    ac_nodes: usize,
    eps: &[f64],
) -> Result<SpectralFunction> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!("invalid window [{lo}, {hi}]")));
    }
    if ac_nodes < 16 {
        return Err(Error::InvalidArgument("ac_nodes must be at least 16".into()));
    }
    check_schedule(eps)?;
    let poles = find_eigenvalues(problem, tau, window, usize::MAX)?;
    let masses = poles
        .par_iter()
        .map(|&s| point_mass_with(problem, tau, s, eps).map(|m| (s, m)))
        .collect::<Result<Vec<_>>>()?;
    let pts = ac_grid(window, ac_nodes, &masses);
    let ac = pts
        .par_iter()
        .map(|&(u, w, dw)| {
            let rho = match tau {
                // Real on the axis: no absolutely continuous part.
                BoundaryParam::Constant(_) | BoundaryParam::Infinity => 0.0,
                BoundaryParam::Analytic(_) => refined_density(problem, tau, u, eps, &masses)?,
            };
            Ok(AcNode { u, w, dw, rho })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralFunction {
        ac,
        masses,
        window,
    })
}

/// Density with the schedule shrunk by factors of 16 while the two
/// extrapolants disagree, as happens within `ε` of the branch point at 0.
fn refined_density(
    problem: &SLProblem,
    tau: &BoundaryParam,
    u: f64,
    eps: &[f64],
    masses: &[(f64, f64)],
) -> Result<f64> {
    let mut sched = eps.to_vec();
    loop {
        match density_excluding(problem, tau, u, &sched, masses) {
            Err(Error::PoleContaminated { .. }) if sched[sched.len() - 1] > 1e-13 * (1.0 + u.abs()) => {
                sched.iter_mut().for_each(|e| *e /= 16.0);
            }
            other => return other,
        }
    }
}

/// Left-continuous distribution function with `σ(0) = 0`. Mass outside the
/// window is not known and counts as zero.
pub fn stieltjes_cdf(sigma: &SpectralFunction, s: f64) -> Result<f64> {
    let (lo, hi) = sigma.window;
    if !(s >= lo && s <= hi) {
        return Err(Error::OutsideWindow { s, lo, hi });
    }
    let ws = to_w(s);
    if s >= 0.0 {
        let jumps: f64 = sigma.masses.iter().filter(|&&(x, _)| 0.0 <= x && x < s).map(|m| m.1).sum();
        Ok(jumps + sigma.ac_between_w(0.0, ws))
    } else {
        let jumps: f64 = sigma.masses.iter().filter(|&&(x, _)| s <= x && x < 0.0).map(|m| m.1).sum();
        Ok(-(jumps + sigma.ac_between_w(ws, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::presets::{middle_third, unit_interval};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Closed form on the free unit problem with `y'(0) = 0`.
    fn m_closed(tau: Complex64, lam: Complex64) -> Complex64 {
        let k = lam.sqrt();
        let (s, co) = (k.sin(), k.cos());
        (s / k * tau - co) / (co * tau + k * s)
    }

    #[test]
    fn m_sqrt_at_minus_one() {
        let p = unit_interval();
        let m = m_function(&p, &BoundaryParam::sqrt(), c(-1.0, 0.0)).unwrap();
        assert!((m.re - 0.964_027_580_075_816_9).abs() < 1e-10, "{m}");
        assert!((m.im - 0.265_802_228_834_079_7).abs() < 1e-10, "{m}");
    }

    #[test]
    fn m_sqrt_matches_closed_form_at_2i() {
        let p = unit_interval();
        let lam = c(0.0, 2.0);
        let m = m_function(&p, &BoundaryParam::sqrt(), lam).unwrap();
        let e = m_closed(lam.sqrt(), lam);
        assert!((m - e).norm() <= 1e-8 * e.norm());
    }

    #[test]
    fn m_neumann_near_zero() {
        let p = unit_interval();
        let lam = c(1e-4, 1e-4);
        let m = m_function(&p, &BoundaryParam::Constant(0.0), lam).unwrap();
        let lead = -1.0 / lam;
        assert!((m - lead).norm() < 1e-2 * lead.norm());
        let e = m_closed(c(0.0, 0.0), lam);
        assert!((m - e).norm() < 1e-8 * e.norm());
    }

    #[test]
    fn pole_proximity() {
        let p = unit_interval();
        let r = m_function(&p, &BoundaryParam::Constant(0.0), c(PI * PI, 0.0));
        assert!(matches!(r, Err(Error::PoleProximity(_))) || r.unwrap().norm() > 1e8);
    }

    #[test]
    fn stable_im_m_matches_direct() {
        let p = middle_third();
        for tau in [BoundaryParam::sqrt(), BoundaryParam::Constant(1.0), BoundaryParam::Infinity] {
            for lam in [c(3.0, 1.0), c(-20.0, 0.5), c(150.0, 2.0)] {
                let direct = m_function(&p, &tau, lam).unwrap().im;
                let stable = im_m(&p, &tau, lam).unwrap();
                assert!((direct - stable).abs() < 1e-9 * (1.0 + direct.abs()), "{lam} {direct} {stable}");
            }
        }
    }

    #[test]
    fn density_examples() {
        let p = unit_interval();
        let eps = default_eps_schedule();
        let rho = spectral_density(&p, &BoundaryParam::sqrt(), -1.0, &eps).unwrap();
        assert_relative_eq!(rho, 0.084_607_477_207_573_79, max_relative = 1e-7);
        assert_eq!(spectral_density(&p, &BoundaryParam::sqrt(), 1.0, &eps).unwrap(), 0.0);
        assert_eq!(spectral_density(&p, &BoundaryParam::Constant(0.0), -5.0, &eps).unwrap(), 0.0);
        assert!(spectral_density(&p, &BoundaryParam::sqrt(), -1.0, &[0.1, 0.05]).is_err());
    }

    #[test]
    fn density_next_to_a_pole_is_flagged() {
        let p = unit_interval();
        let a1 = 9.0 * PI * PI / 16.0;
        let r = spectral_density(&p, &BoundaryParam::sqrt(), a1 + 1e-3, &default_eps_schedule());
        assert!(matches!(r, Err(Error::PoleContaminated { .. })), "{r:?}");
    }

    #[test]
    fn eigenvalue_examples() {
        let p = unit_interval();
        let ev = find_eigenvalues(&p, &BoundaryParam::sqrt(), (0.0, 100.0), 10).unwrap();
        let expect: Vec<f64> = [0.75f64, 1.75, 2.75].iter().map(|k| PI * PI * k * k).collect();
        assert_eq!(ev.len(), 3, "{ev:?}");
        for (a, b) in ev.iter().zip(&expect) {
            assert_relative_eq!(*a, *b, max_relative = 1e-10);
        }

        let ev = find_eigenvalues(&p, &BoundaryParam::Constant(0.0), (-1.0, 50.0), 10).unwrap();
        assert_eq!(ev.len(), 3, "{ev:?}");
        assert!(ev[0].abs() < 1e-12);
        assert_relative_eq!(ev[1], PI * PI, max_relative = 1e-10);
        assert_relative_eq!(ev[2], 4.0 * PI * PI, max_relative = 1e-10);

        let ev = find_eigenvalues(&p, &BoundaryParam::Infinity, (0.0, 30.0), 10).unwrap();
        assert_eq!(ev.len(), 2);
        assert_relative_eq!(ev[0], PI * PI / 4.0, max_relative = 1e-10);
        assert_relative_eq!(ev[1], 9.0 * PI * PI / 4.0, max_relative = 1e-10);

        assert!(find_eigenvalues(&p, &BoundaryParam::Infinity, (5.0, 1.0), 10).is_err());
        let first = find_eigenvalues(&p, &BoundaryParam::Infinity, (0.0, 1000.0), 1).unwrap();
        assert_eq!(first.len(), 1);
    }

    #[test]
    fn eigenvalue_count_to_1000() {
        let p = unit_interval();
        let ev = find_eigenvalues(&p, &BoundaryParam::sqrt(), (0.0, 1000.0), usize::MAX).unwrap();
        let closed = (1..).take_while(|&k| PI * PI * (k as f64 - 0.25).powi(2) <= 1000.0).count();
        assert_eq!(ev.len(), closed);
    }

    #[test]
    fn mass_examples() {
        let p = unit_interval();
        let a1 = 9.0 * PI * PI / 16.0;
        assert_relative_eq!(point_mass(&p, &BoundaryParam::sqrt(), a1).unwrap(), 2.0, max_relative = 1e-7);
        assert_relative_eq!(point_mass(&p, &BoundaryParam::Constant(0.0), 0.0).unwrap(), 1.0, max_relative = 1e-7);
        assert_relative_eq!(point_mass(&p, &BoundaryParam::Constant(0.0), PI * PI).unwrap(), 2.0, max_relative = 1e-7);
        assert!(matches!(
            point_mass(&p, &BoundaryParam::Constant(0.0), 3.0),
            Err(Error::MassCrossCheck { .. })
        ));
    }

    #[test]
    fn spectral_function_examples() {
        let p = unit_interval();
        let eps = default_eps_schedule();
        let sf = build_spectral_function(&p, &BoundaryParam::sqrt(), (-50.0, 100.0), 64, &eps).unwrap();
        assert_eq!(sf.masses.len(), 3);
        for &(_, m) in &sf.masses {
            assert_relative_eq!(m, 2.0, max_relative = 1e-7);
        }
        for n in &sf.ac {
            if n.u < 0.0 {
                assert!(n.rho > 0.0, "{n:?}");
            } else {
                assert!(n.rho < 1e-12, "{n:?}");
            }
        }
        let a1 = sf.masses[0].0;
        assert_eq!(stieltjes_cdf(&sf, 0.0).unwrap(), 0.0);
        assert!(stieltjes_cdf(&sf, a1).unwrap().abs() < 1e-12);
        assert_relative_eq!(stieltjes_cdf(&sf, a1 + 0.5).unwrap(), 2.0, max_relative = 1e-7);
        assert!(stieltjes_cdf(&sf, -10.0).unwrap() < 0.0);
        assert!(matches!(stieltjes_cdf(&sf, 200.0), Err(Error::OutsideWindow { .. })));

        let sf = build_spectral_function(&p, &BoundaryParam::Constant(0.0), (-10.0, 50.0), 32, &eps).unwrap();
        assert!(sf.ac.iter().all(|n| n.rho == 0.0));
        let m: Vec<f64> = sf.masses.iter().map(|m| m.1).collect();
        assert_eq!(m.len(), 3);
        assert_relative_eq!(m[0], 1.0, max_relative = 1e-7);
        assert_relative_eq!(m[1], 2.0, max_relative = 1e-7);

        let gap = build_spectral_function(&p, &BoundaryParam::sqrt(), (0.1, 9.0 * PI * PI / 16.0 - 0.1), 16, &eps).unwrap();
        assert!(gap.masses.is_empty());
        assert!(gap.ac.iter().all(|n| n.rho < 1e-12));
    }

    #[test]
    fn jump_norm_duality() {
        let p = middle_third();
        let tau = BoundaryParam::Constant(0.0);
        for s in find_eigenvalues(&p, &tau, (-1.0, 400.0), 6).unwrap() {
            let m = point_mass(&p, &tau, s).unwrap();
            let tr = crate::propagator::propagate(&p, c(s, 0.0), phi_initial(p.alpha())).unwrap();
            let norm = p.delta_norm_sq(|t| tr.at(t).unwrap().y).unwrap();
            assert_relative_eq!(m * norm, 1.0, max_relative = 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn m_is_nevanlinna(re in -100.0f64..100.0, im in 0.05f64..50.0) {
            let p = middle_third();
            for tau in [BoundaryParam::sqrt(), BoundaryParam::Constant(-0.5), BoundaryParam::Infinity] {
                let lam = c(re, im);
                let v = m_function(&p, &tau, lam).unwrap();
                let w = m_function(&p, &tau, lam.conj()).unwrap();
                prop_assert!(v.im >= -1e-8);
                prop_assert!((w - v.conj()).norm() <= 1e-8 * (1.0 + v.norm()));
            }
        }

        #[test]
        fn m_matches_closed_form(re in -100.0f64..100.0, im in 0.1f64..100.0, flip in any::<bool>()) {
            prop_assume!(re * re + im * im <= 1e4);
            let lam = c(re, if flip { -im } else { im });
            let p = unit_interval();
            let m = m_function(&p, &BoundaryParam::sqrt(), lam).unwrap();
            let e = m_closed(lam.sqrt(), lam);
            prop_assert!((m - e).norm() <= 1e-8 * e.norm(), "{} {} {}", lam, m, e);
        }
    }
}
