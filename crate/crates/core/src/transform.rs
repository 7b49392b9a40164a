//! Generalized Fourier transform against a spectral function, its inverse,
//! Parseval checks, eigenfunction expansions and membership in the class `F`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nevanlinna::{classify_bc, BcLabel, BoundaryParam};
use crate::problem::SLProblem;
use crate::propagator::{phi_initial, propagate, Trajectory};
use crate::spectral::{find_eigenvalues, SpectralFunction};

/// `ŷ` sampled on the nodes of one [`SpectralFunction`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformedFn {
    pub ac_values: Vec<(f64, Complex64)>,
    pub mass_values: Vec<(f64, Complex64)>,
    /// `‖y‖²_Δ`.
    pub source_norm_sq: f64,
}

/// Which part of a spectral function an inverse transform uses: the first
/// `k_max` point masses (ascending) and the ac nodes inside `ac_window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub k_max: usize,
    pub ac_window: (f64, f64),
}

impl Truncation {
    pub fn new(k_max: usize, ac_window: (f64, f64)) -> Self {
        Truncation { k_max, ac_window }
    }

    /// Everything in `sigma`.
    pub fn full(sigma: &SpectralFunction) -> Self {
        Truncation {
            k_max: sigma.masses.len(),
            ac_window: sigma.window,
        }
    }

    pub fn contains(&self, other: &Truncation) -> bool {
        self.k_max >= other.k_max && self.ac_window.0 <= other.ac_window.0 && self.ac_window.1 >= other.ac_window.1
    }

    pub fn describe(&self) -> String {
        format!("k_max={} ac=[{}, {}]", self.k_max, self.ac_window.0, self.ac_window.1)
    }

    fn check(&self) -> Result<()> {
        let (lo, hi) = self.ac_window;
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidArgument(format!("invalid ac window [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// An inverse-transform value with the matching sum of moduli.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseValue {
    pub value: Complex64,
    pub bound: f64,
}

fn phi_traj(problem: &SLProblem, s: f64) -> Result<Trajectory> {
    propagate(problem, Complex64::new(s, 0.0), phi_initial(problem.alpha()))
}

fn transform_at<Y>(problem: &SLProblem, y: &Y, s: f64) -> Result<Complex64>
where
    Y: Fn(f64) -> Complex64 + Sync,
{
    let tr = phi_traj(problem, s)?;
    problem.integrate_weighted(|t| match tr.at(t) {
        Ok(v) => v.y * y(t),
        Err(_) => Complex64::new(f64::NAN, 0.0),
    })
}

/// `ŷ(s) = ∫ φ(t, s) Δ(t) y(t) dt` at every ac node and point mass of `sigma`.
pub fn fourier_transform<Y>(problem: &SLProblem, y: Y, sigma: &SpectralFunction) -> Result<TransformedFn>
where
    Y: Fn(f64) -> Complex64 + Sync,
{
    let ac_values = sigma
        .ac
        .par_iter()
        .map(|n| transform_at(problem, &y, n.u).map(|v| (n.u, v)))
        .collect::<Result<Vec<_>>>()?;
    let mass_values = sigma
        .masses
        .par_iter()
        .map(|&(s, _)| transform_at(problem, &y, s).map(|v| (s, v)))
        .collect::<Result<Vec<_>>>()?;
    let source_norm_sq = problem.delta_norm_sq(&y)?;
    Ok(TransformedFn {
        ac_values,
        mass_values,
        source_norm_sq,
    })
}

fn check_alignment(sigma: &SpectralFunction, yhat: &TransformedFn) -> Result<()> {
    if sigma.ac.len() != yhat.ac_values.len() || sigma.masses.len() != yhat.mass_values.len() {
        return Err(Error::GridMisalignment(format!(
            "{} ac / {} masses in sigma, {} / {} in the transform",
            sigma.ac.len(),
            sigma.masses.len(),
            yhat.ac_values.len(),
            yhat.mass_values.len()
        )));
    }
    for (n, &(u, _)) in sigma.ac.iter().zip(&yhat.ac_values) {
        if n.u.to_bits() != u.to_bits() {
            return Err(Error::GridMisalignment(format!("ac node {} vs {u}", n.u)));
        }
    }
    for (&(s, _), &(x, _)) in sigma.masses.iter().zip(&yhat.mass_values) {
        if s.to_bits() != x.to_bits() {
            return Err(Error::GridMisalignment(format!("mass at {s} vs {x}")));
        }
    }
    Ok(())
}

/// Terms of the inverse transform selected by `tr`: `(s, weight·ŷ(s))`, where the
/// weight is the jump or `ρ du`.
fn selected_terms(sigma: &SpectralFunction, yhat: &TransformedFn, tr: &Truncation) -> Vec<(f64, Complex64)> {
    let mut idx: Vec<usize> = (0..sigma.masses.len()).collect();
    idx.sort_by(|&i, &j| sigma.masses[i].0.total_cmp(&sigma.masses[j].0));
    let mut out: Vec<(f64, Complex64)> = idx
        .into_iter()
        .take(tr.k_max)
        .map(|i| (sigma.masses[i].0, yhat.mass_values[i].1 * sigma.masses[i].1))
        .collect();
    let (lo, hi) = tr.ac_window;
    for (n, &(_, v)) in sigma.ac.iter().zip(&yhat.ac_values) {
        if n.u >= lo && n.u <= hi && n.rho != 0.0 {
            out.push((n.u, v * (n.rho * sigma.weight(n))));
        }
    }
    out
}

/// Inverse transform at one `t`: `Σ φ(t, s_k) σ_k ŷ(s_k) + ∫ φ(t, u) ρ(u) ŷ(u) du`
/// over the part of `sigma` selected by `truncation`.
pub fn inverse_transform(
    problem: &SLProblem,
    sigma: &SpectralFunction,
    yhat: &TransformedFn,
    t: f64,
    truncation: &Truncation,
) -> Result<InverseValue> {
    let mut v = reconstruct(problem, sigma, yhat, &[t], std::slice::from_ref(truncation))?;
    Ok(v.remove(0).remove(0))
}

/// Inverse transforms on `t_grid` for each truncation; `out[i][j]` is truncation
/// `i` at `t_grid[j]`. Each φ trajectory is computed once.
pub fn reconstruct(
    problem: &SLProblem,
    sigma: &SpectralFunction,
    yhat: &TransformedFn,
    t_grid: &[f64],
    schedule: &[Truncation],
) -> Result<Vec<Vec<InverseValue>>> {
    check_alignment(sigma, yhat)?;
    for &t in t_grid {
        if !(t >= problem.a() && t <= problem.b()) {
            return Err(Error::OutOfRange {
                t,
                a: problem.a(),
                b: problem.b(),
            });
        }
    }
    for tr in schedule {
        tr.check()?;
    }
    let per_tr: Vec<Vec<(f64, Complex64)>> = schedule.iter().map(|tr| selected_terms(sigma, yhat, tr)).collect();
    let mut nodes: Vec<f64> = per_tr.iter().flatten().map(|&(s, _)| s).collect();
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| a.to_bits() == b.to_bits());
    // φ(t_j, s) for every node that any truncation uses.
    let table = nodes
        .par_iter()
        .map(|&s| {
            let tr = phi_traj(problem, s)?;
            t_grid.iter().map(|&t| tr.at(t).map(|v| v.y)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let lookup = |s: f64| nodes.binary_search_by(|x| x.total_cmp(&s)).expect("node present");
    Ok(per_tr
        .iter()
        .map(|terms| {
            (0..t_grid.len())
                .map(|j| {
                    let mut value = Complex64::new(0.0, 0.0);
                    let mut bound = 0.0;
                    for &(s, c) in terms {
                        let term = table[lookup(s)][j] * c;
                        value += term;
                        bound += term.norm();
                    }
                    InverseValue { value, bound }
                })
                .collect()
        })
        .collect())
}

/// `Σ σ_k |ŷ(s_k)|² + ∫ ρ |ŷ|²` over the selected part of `sigma`.
pub fn transformed_norm_sq(sigma: &SpectralFunction, yhat: &TransformedFn, truncation: &Truncation) -> Result<f64> {
    check_alignment(sigma, yhat)?;
    truncation.check()?;
    let mut idx: Vec<usize> = (0..sigma.masses.len()).collect();
    idx.sort_by(|&i, &j| sigma.masses[i].0.total_cmp(&sigma.masses[j].0));
    let point: f64 = idx
        .into_iter()
        .take(truncation.k_max)
        .map(|i| sigma.masses[i].1 * yhat.mass_values[i].1.norm_sqr())
        .sum();
    let (lo, hi) = truncation.ac_window;
    let ac: f64 = sigma
        .ac
        .iter()
        .zip(&yhat.ac_values)
        .filter(|(n, _)| n.u >= lo && n.u <= hi)
        .map(|(n, &(_, v))| n.rho * sigma.weight(n) * v.norm_sqr())
        .sum();
    Ok(point + ac)
}

/// Relative Parseval defect of an already transformed function. For `‖y‖_Δ = 0`
/// the transformed norm itself is returned.
pub fn parseval_defect_of(sigma: &SpectralFunction, yhat: &TransformedFn, truncation: &Truncation) -> Result<f64> {
    let n = transformed_norm_sq(sigma, yhat, truncation)?;
    if yhat.source_norm_sq == 0.0 {
        return Ok(n);
    }
    Ok((n - yhat.source_norm_sq).abs() / yhat.source_norm_sq.max(1e-30))
}

pub fn parseval_defect<Y>(problem: &SLProblem, sigma: &SpectralFunction, y: Y, truncation: &Truncation) -> Result<f64>
where
    Y: Fn(f64) -> Complex64 + Sync,
{
    let yhat = fourier_transform(problem, y, sigma)?;
    parseval_defect_of(sigma, &yhat, truncation)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipCheck {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub in_f: bool,
    pub checks: Vec<MembershipCheck>,
}

/// Tolerances for [`membership_in_f_with`]. `tol_res` of `None` means
/// `1e-6 (1 + ‖f_y‖_Δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipTol {
    pub tol_bc: f64,
    pub tol_res: Option<f64>,
}

impl Default for MembershipTol {
    fn default() -> Self {
        MembershipTol {
            tol_bc: 1e-8,
            tol_res: None,
        }
    }
}

pub fn membership_in_f<Y, Y1, FY>(
    problem: &SLProblem,
    tau: &BoundaryParam,
    y: Y,
    y1: Y1,
    f_y: FY,
) -> Result<MembershipReport>
where
    Y: Fn(f64) -> f64,
    Y1: Fn(f64) -> f64,
    FY: Fn(f64) -> f64,
{
    membership_in_f_with(problem, tau, y, y1, f_y, MembershipTol::default())
}

/// Checks the left boundary condition, the right one required by the class of `tau`,
/// and that `l[y] = -y1' + q y` equals `Δ f_y` (sampled; `y1'` by central differences).
/// `f_y` is one representative of its Δ-class.
pub fn membership_in_f_with<Y, Y1, FY>(
    problem: &SLProblem,
    tau: &BoundaryParam,
    y: Y,
    y1: Y1,
    f_y: FY,
    tol: MembershipTol,
) -> Result<MembershipReport>
where
    Y: Fn(f64) -> f64,
    Y1: Fn(f64) -> f64,
    FY: Fn(f64) -> f64,
{
    let class = classify_bc(tau)?;
    let (a, b) = (problem.a(), problem.b());
    let al = problem.alpha();
    let mut checks = Vec::new();
    let mut push = |name: &str, residual: f64, limit: f64| {
        checks.push(MembershipCheck {
            name: name.to_string(),
            pass: residual.is_finite() && residual <= limit,
            residual,
        })
    };

    push("left_bc", (al.cos() * y(a) + al.sin() * y1(a)).abs(), tol.tol_bc);
    let (yb, y1b) = (y(b), y1(b));
    match class.label {
        BcLabel::Bc1 => push("right_bc1", yb.abs(), tol.tol_bc),
        BcLabel::Bc2 => {
            let d = class.d_tau.unwrap_or(0.0);
            push("right_bc2", (y1b - d * yb).abs(), tol.tol_bc * (1.0 + yb.abs()));
        }
        BcLabel::Bc3 => push("right_bc3", yb.abs().max(y1b.abs()), tol.tol_bc),
    }

    let fy_norm = problem
        .delta_norm_sq(|t| Complex64::new(f_y(t), 0.0))?
        .max(0.0)
        .sqrt();
    let tol_res = tol.tol_res.unwrap_or(1e-6 * (1.0 + fy_norm));
    const SAMPLES: usize = 64;
    let mut worst: f64 = 0.0;
    for seg in problem.segments() {
        let len = seg.end - seg.start;
        let h = 1e-5 * len;
        for i in 0..SAMPLES {
            // Interior points only, so the stencil stays inside the segment.
            let t = seg.start + len * (i as f64 + 0.5) / SAMPLES as f64;
            let d1 = (y1(t + h) - y1(t - h)) / (2.0 * h);
            let (_, q, d) = problem.coefficients_on(seg, t);
            let r = (-d1 + q * y(t) - d * f_y(t)).abs();
            worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
        }
    }
    push("residual", worst, tol_res);

    let in_f = checks.iter().all(|c| c.pass);
    Ok(MembershipReport { in_f, checks })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub truncations: Vec<(String, f64)>,
    pub monotone_tail: bool,
}

/// Sup-errors of the truncated inverse transforms against `y_true` on `t_grid`.
pub fn uniform_convergence_profile<Y>(
    problem: &SLProblem,
    sigma: &SpectralFunction,
    yhat: &TransformedFn,
    y_true: Y,
    schedule: &[Truncation],
    t_grid: &[f64],
) -> Result<ConvergenceReport>
where
    Y: Fn(f64) -> Complex64,
{
    check_nested(schedule)?;
    let rec = reconstruct(problem, sigma, yhat, t_grid, schedule)?;
    let truth: Vec<Complex64> = t_grid.iter().map(|&t| y_true(t)).collect();
    let truncations: Vec<(String, f64)> = schedule
        .iter()
        .zip(&rec)
        .map(|(tr, vals)| {
            let err = vals
                .iter()
                .zip(&truth)
                .map(|(v, &y)| (y - v.value).norm())
                .fold(0.0, f64::max);
            (tr.describe(), err)
        })
        .collect();
    let n = truncations.len();
    let monotone_tail = truncations[n.saturating_sub(3)..]
        .windows(2)
        .all(|w| w[1].1 <= w[0].1);
    Ok(ConvergenceReport {
        truncations,
        monotone_tail,
    })
}

pub fn check_nested(schedule: &[Truncation]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty truncation schedule".into()));
    }
    for w in schedule.windows(2) {
        if !w[1].contains(&w[0]) {
            return Err(Error::InvalidArgument(format!(
                "schedule not nested: {} does not contain {}",
                w[1].describe(),
                w[0].describe()
            )));
        }
    }
    Ok(())
}

/// A spectral function serving a nested `schedule`: the ac part sampled with
/// `ac_nodes` cells on the widest ac window `[lo, hi]`, and the first `k_max` jumps
/// at or above `lo`, searched past `hi` as far as needed. The ac part above `hi`
/// is not sampled.
pub fn spectral_function_for(
    problem: &SLProblem,
    tau: &BoundaryParam,
    schedule: &[Truncation],
    ac_nodes: usize,
    eps: &[f64],
) -> Result<SpectralFunction> {
    check_nested(schedule)?;
    let last = schedule[schedule.len() - 1];
    last.check()?;
    let (lo, hi) = last.ac_window;
    let k = last.k_max;
    // A zero-width window carries no ac part.
    let mut sigma = if lo < hi {
        crate::spectral::build_spectral_function(problem, tau, (lo, hi), ac_nodes, eps)?
    } else {
        SpectralFunction::point_only((lo, hi), Vec::new())
    };
    if k == 0 {
        sigma.masses.clear();
        return Ok(sigma);
    }
    let span = (hi - lo).max(64.0);
    let mut top = hi + span;
    let poles = loop {
        let ev = find_eigenvalues(problem, tau, (lo, top), k)?;
        if ev.len() >= k {
            break ev;
        }
        if top - lo > 1e9 {
            return Err(Error::InsufficientEigenvalues { found: ev.len(), wanted: k });
        }
        top = lo + 2.0 * (top - lo);
    };
    sigma.masses = poles
        .par_iter()
        .map(|&s| crate::spectral::point_mass_with(problem, tau, s, eps).map(|m| (s, m)))
        .collect::<Result<Vec<_>>>()?;
    sigma.window = (lo, hi.max(top));
    Ok(sigma)
}

/// One term of an eigenfunction expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenTerm {
    pub lambda: f64,
    /// `(y, v_k)_Δ`.
    pub coefficient: Complex64,
    /// `‖φ(·, λ_k)‖²_Δ`.
    pub norm_sq: f64,
    /// `v_k` on the caller's grid.
    pub values: Vec<f64>,
}

/// First `k` eigenvalues of the orthogonal problem for `tau`.
pub fn first_eigenvalues(problem: &SLProblem, tau: &BoundaryParam, k: usize) -> Result<Vec<f64>> {
    if !tau.is_orthogonal() {
        return Err(Error::InvalidArgument(format!(
            "eigenfunction expansions need a constant or infinite tau, got {}",
            tau.name()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    // Push the lower end down until a whole block below it is empty.
    let mut lo = -16.0;
    for _ in 0..20 {
        if find_eigenvalues(problem, tau, (4.0 * lo, lo), 1)?.is_empty() {
            break;
        }
        lo *= 4.0;
    }
    let mut hi = 64.0;
    let mut last = 0;
    for _ in 0..40 {
        let ev = find_eigenvalues(problem, tau, (lo, hi), k)?;
        if ev.len() >= k {
            return Ok(ev);
        }
        last = ev.len();
        hi *= 2.0;
    }
    Err(Error::InsufficientEigenvalues { found: last, wanted: k })
}

/// `y ≈ Σ (y, v_k)_Δ v_k` over the first `k` eigenfunctions `v_k = φ(·, λ_k)/‖φ(·, λ_k)‖_Δ`,
/// cross-checked against the inverse transform with the pure-point spectral function.
pub fn eigen_expansion<Y>(
    problem: &SLProblem,
    tau: &BoundaryParam,
    y: Y,
    k: usize,
    t_grid: &[f64],
) -> Result<Vec<EigenTerm>>
where
    Y: Fn(f64) -> Complex64 + Sync,
{
    let lams = first_eigenvalues(problem, tau, k)?;
    let terms = lams
        .par_iter()
        .map(|&lambda| {
            let tr = phi_traj(problem, lambda)?;
            let phi = |t: f64| tr.at(t).map(|v| v.y).unwrap_or(Complex64::new(f64::NAN, 0.0));
            let norm_sq = problem.delta_norm_sq(phi)?;
            if !(norm_sq > 0.0) {
                return Err(Error::CrossCheck(format!("eigenfunction at {lambda} has zero Δ-norm")));
            }
            let nrm = norm_sq.sqrt();
            let coefficient = problem.delta_inner(&y, phi)? / nrm;
            let values = t_grid
                .iter()
                .map(|&t| tr.at(t).map(|v| v.y.re / nrm))
                .collect::<Result<Vec<_>>>()?;
            Ok(EigenTerm {
                lambda,
                coefficient,
                norm_sq,
                values,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Same sum through the transform machinery, with the jumps from residues.
    let masses = lams
        .par_iter()
        .map(|&s| crate::spectral::point_mass(problem, tau, s).map(|m| (s, m)))
        .collect::<Result<Vec<_>>>()?;
    let window = (lams[0], lams[lams.len() - 1]);
    let sigma = SpectralFunction::point_only(window, masses);
    let yhat = fourier_transform(problem, &y, &sigma)?;
    let rec = reconstruct(problem, &sigma, &yhat, t_grid, &[Truncation::full(&sigma)])?;
    let scale = terms
        .iter()
        .map(|tm| tm.coefficient.norm() * tm.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .sum::<f64>();
    for (j, r) in rec[0].iter().enumerate() {
        let direct: Complex64 = terms.iter().map(|tm| tm.coefficient * tm.values[j]).sum();
        if (direct - r.value).norm() > 1e-6 * scale.max(1e-300) {
            return Err(Error::CrossCheck(format!(
                "expansion {direct} vs inverse transform {} at t = {}",
                r.value, t_grid[j]
            )));
        }
    }
    Ok(terms)
}

/// `Σ_k c_k v_k(t_j)` for the terms of [`eigen_expansion`].
pub fn expansion_values(terms: &[EigenTerm], n_points: usize) -> Vec<Complex64> {
    (0..n_points)
        .map(|j| terms.iter().map(|tm| tm.coefficient * tm.values[j]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::presets::{middle_third, unit_interval};
    use crate::spectral::{build_spectral_function, default_eps_schedule};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    fn neumann_sigma() -> SpectralFunction {
        let p = unit_interval();
        build_spectral_function(&p, &BoundaryParam::Constant(0.0), (-1.0, 50.0), 16, &default_eps_schedule()).unwrap()
    }

    #[test]
    fn transform_examples() {
        let p = unit_interval();
        let a1 = PI * PI * 0.75 * 0.75;
        let a2 = PI * PI * 1.75 * 1.75;
        let sigma = SpectralFunction::point_only((0.0, 50.0), vec![(a1, 2.0), (a2, 2.0)]);
        let one = fourier_transform(&p, |_| c(1.0), &sigma).unwrap();
        assert_relative_eq!(one.mass_values[0].1.re, 0.300_105_438_719_035_357, max_relative = 1e-10);
        assert_relative_eq!(one.source_norm_sq, 1.0, max_relative = 1e-12);
        let v1 = fourier_transform(&p, |t| c((0.75 * PI * t).cos()), &sigma).unwrap();
        // The boundary condition depends on λ, so distinct modes are not Δ-orthogonal.
        assert_relative_eq!(v1.mass_values[1].1.re, 0.063_661_977_236_758_134, max_relative = 1e-10);

        let m = middle_third();
        let sigma = SpectralFunction::point_only((0.0, 400.0), vec![(10.436918241555672, 1.0), (88.82643960980423, 1.0)]);
        let dead = |t: f64| c(if t > 0.4 && t < 0.6 { (t - 0.4) * (0.6 - t) } else { 0.0 });
        let z = fourier_transform(&m, dead, &sigma).unwrap();
        assert_eq!(z.source_norm_sq, 0.0);
        assert!(z.mass_values.iter().all(|v| v.1.norm() == 0.0));
        assert_eq!(parseval_defect_of(&sigma, &z, &Truncation::full(&sigma)).unwrap(), 0.0);
    }

    #[test]
    fn single_mode_reproduces_itself() {
        let p = unit_interval();
        let sigma = neumann_sigma();
        let y = |t: f64| c((PI * t).cos());
        let yhat = fourier_transform(&p, y, &sigma).unwrap();
        let tr = Truncation::full(&sigma);
        assert!(parseval_defect_of(&sigma, &yhat, &tr).unwrap() <= 1e-8);
        for &t in &grid(33) {
            let v = inverse_transform(&p, &sigma, &yhat, t, &tr).unwrap();
            assert!((v.value - y(t)).norm() < 1e-9, "t={t} {v:?}");
        }
        let zero = TransformedFn {
            ac_values: yhat.ac_values.iter().map(|&(u, _)| (u, c(0.0))).collect(),
            mass_values: yhat.mass_values.iter().map(|&(s, _)| (s, c(0.0))).collect(),
            source_norm_sq: 0.0,
        };
        assert_eq!(inverse_transform(&p, &sigma, &zero, 0.3, &tr).unwrap().value, c(0.0));
        let mut bad = yhat.clone();
        bad.mass_values.pop();
        assert!(matches!(
            inverse_transform(&p, &sigma, &bad, 0.3, &tr),
            Err(Error::GridMisalignment(_))
        ));
    }

    #[test]
    fn parseval_is_monotone_in_truncation() {
        let p = unit_interval();
        let sigma = build_spectral_function(&p, &BoundaryParam::sqrt(), (-400.0, 400.0), 200, &default_eps_schedule()).unwrap();
        let yhat = fourier_transform(&p, |t| c((1.0 - t * t).powi(2)), &sigma).unwrap();
        let mut prev = f64::INFINITY;
        for k in [1usize, 2, 4, 6] {
            let tr = Truncation::new(k, (-100.0 * k as f64, 0.0));
            let d = parseval_defect_of(&sigma, &yhat, &tr).unwrap();
            assert!(d <= prev, "{k}: {d} > {prev}");
            prev = d;
        }
        assert!(prev < 1e-4, "{prev}");
    }

    #[test]
    fn membership_examples() {
        let p = unit_interval();
        let sqrt = BoundaryParam::sqrt();
        let rep = membership_in_f(
            &p,
            &sqrt,
            |t| (1.0 - t * t).powi(2),
            |t| -4.0 * t * (1.0 - t * t),
            |t| 4.0 - 12.0 * t * t,
        )
        .unwrap();
        assert!(rep.in_f, "{rep:?}");
        assert_eq!(rep.checks.len(), 3);

        let rep = membership_in_f(&p, &sqrt, |t| (1.0 - t).powi(2), |t| -2.0 * (1.0 - t), |_| -2.0).unwrap();
        assert!(!rep.in_f);
        assert!(!rep.checks[0].pass);
        assert_relative_eq!(rep.checks[0].residual, 2.0, max_relative = 1e-12);

        let rep = membership_in_f(
            &p,
            &BoundaryParam::Constant(0.0),
            |t| (PI * t).cos(),
            |t| -PI * (PI * t).sin(),
            |t| PI * PI * (PI * t).cos(),
        )
        .unwrap();
        assert!(rep.in_f, "{rep:?}");

        // A wrong f_y fails only the residual check.
        let rep = membership_in_f(
            &p,
            &sqrt,
            |t| (1.0 - t * t).powi(2),
            |t| -4.0 * t * (1.0 - t * t),
            |t| 12.0 * t * t - 4.0,
        )
        .unwrap();
        assert!(!rep.in_f);
        assert!(rep.checks[0].pass && rep.checks[1].pass && !rep.checks[2].pass);
    }

    #[test]
    fn profile_of_zero_is_zero() {
        let p = unit_interval();
        let sigma = neumann_sigma();
        let yhat = fourier_transform(&p, |_| c(0.0), &sigma).unwrap();
        let sched = [Truncation::new(1, (-1.0, 0.0)), Truncation::new(3, (-1.0, 50.0))];
        let rep = uniform_convergence_profile(&p, &sigma, &yhat, |_| c(0.0), &sched, &grid(11)).unwrap();
        assert!(rep.truncations.iter().all(|t| t.1 == 0.0));
        assert!(rep.monotone_tail);
        let bad = [sched[1], sched[0]];
        assert!(uniform_convergence_profile(&p, &sigma, &yhat, |_| c(0.0), &bad, &grid(11)).is_err());
    }

    #[test]
    fn eigen_expansion_examples() {
        let p = unit_interval();
        let tau = BoundaryParam::Constant(0.0);
        let g = grid(9);
        let terms = eigen_expansion(&p, &tau, |t| c((2.0 * PI * t).cos()), 3, &g).unwrap();
        assert_eq!(terms.len(), 3);
        assert!(terms[0].coefficient.norm() < 1e-12);
        assert!(terms[1].coefficient.norm() < 1e-12);
        assert_relative_eq!(terms[2].coefficient.re.abs(), 0.5f64.sqrt(), max_relative = 1e-10);
        assert_relative_eq!(terms[2].lambda, 4.0 * PI * PI, max_relative = 1e-10);

        let zero = eigen_expansion(&p, &tau, |_| c(0.0), 3, &g).unwrap();
        assert!(zero.iter().all(|t| t.coefficient == c(0.0)));

        assert!(eigen_expansion(&p, &BoundaryParam::sqrt(), |_| c(1.0), 3, &g).is_err());
    }

    #[test]
    fn middle_third_expansion_of_one() {
        let m = middle_third();
        let terms = eigen_expansion(&m, &BoundaryParam::Constant(0.0), |_| c(1.0), 4, &grid(5)).unwrap();
        let lam: Vec<f64> = terms.iter().map(|t| t.lambda).collect();
        assert!(lam[0].abs() < 1e-8, "{lam:?}");
        assert_relative_eq!(lam[1], 10.436_918_241_555_672, max_relative = 1e-8);
        // y ≡ 1 is the λ = 0 mode, normalised by ‖1‖_Δ = sqrt(2/3).
        assert_relative_eq!(terms[0].coefficient.re.abs(), (2.0f64 / 3.0).sqrt(), max_relative = 1e-10);
        for t in &terms[1..] {
            assert!(t.coefficient.norm() < 1e-10);
        }
    }
}
