//! Independent oracles: closed forms for the free problem on `[0, 1]` with
//! `y'(0) = 0`, and exact transfer matrices for the middle-third problem.
//! Nothing here calls the propagator.

use num_complex::Complex64;
use std::f64::consts::PI;

/// `m_τ(λ)` of `-y'' = λ y` on `[0, 1]`, `y'(0) = 0`; `tau = None` is `τ = ∞`.
pub fn free_m(tau: Option<Complex64>, lambda: Complex64) -> Complex64 {
    let k = lambda.sqrt();
    let (s, c) = (k.sin(), k.cos());
    // sin(k)/k and k sin(k) are even in k, so the branch of the root is irrelevant.
    let sk = if k.norm() < 1e-8 { Complex64::new(1.0, 0.0) } else { s / k };
    match tau {
        None => sk / c,
        Some(t) => (sk * t - c) / (c * t + lambda * sk),
    }
}

/// `m` for `τ(λ) = sqrt(λ)` (principal branch).
pub fn free_sqrt_m(lambda: Complex64) -> Complex64 {
    free_m(Some(lambda.sqrt()), lambda)
}

/// Density of the ac part for `τ = sqrt(λ)`: `2 / (π sqrt(-s) (e^{2 sqrt(-s)} + e^{-2 sqrt(-s)}))`
/// for `s < 0`, zero otherwise.
pub fn free_sqrt_density(s: f64) -> f64 {
    if s >= 0.0 {
        return 0.0;
    }
    let r = (-s).sqrt();
    2.0 / (PI * r * ((2.0 * r).exp() + (-2.0 * r).exp()))
}

/// `k`-th pole (from 1) for `τ = sqrt(λ)`: `π² (k - 1/4)²`; its jump is 2.
pub fn free_sqrt_pole(k: usize) -> f64 {
    let x = k as f64 - 0.25;
    PI * PI * x * x
}

pub const FREE_SQRT_MASS: f64 = 2.0;

/// `k`-th eigenvalue (from 1) for `τ = 0` (Neumann at both ends): `(k - 1)² π²`.
pub fn free_neumann_eigenvalue(k: usize) -> f64 {
    let x = (k - 1) as f64;
    PI * PI * x * x
}

/// Jump at the `k`-th Neumann eigenvalue: 1 for the constant mode, 2 otherwise.
pub fn free_neumann_mass(k: usize) -> f64 {
    if k == 1 {
        1.0
    } else {
        2.0
    }
}

/// `k`-th eigenvalue (from 1) for `τ = ∞` (`y(1) = 0`): `((2k - 1) π / 2)²`.
pub fn free_dirichlet_eigenvalue(k: usize) -> f64 {
    let x = (2 * k - 1) as f64 * PI / 2.0;
    x * x
}

/// Pieces of the middle-third problem: `(length, live)`.
const MIDDLE_THIRD: [(f64, bool); 3] = [(1.0 / 3.0, true), (1.0 / 3.0, false), (1.0 / 3.0, true)];

/// `(cos(kL), sin(kL)/k)` continued to all real `λ = k²`.
fn cs(lambda: f64, len: f64) -> (f64, f64) {
    if lambda.abs() < 1e-12 {
        (1.0 - lambda * len * len / 2.0, len * (1.0 - lambda * len * len / 6.0))
    } else if lambda > 0.0 {
        let k = lambda.sqrt();
        ((k * len).cos(), (k * len).sin() / k)
    } else {
        let k = (-lambda).sqrt();
        ((k * len).cosh(), (k * len).sinh() / k)
    }
}

/// `(y, y')` at the end of each piece of the middle-third problem, starting from
/// `y(0) = 1, y'(0) = 0`.
fn middle_third_states(lambda: f64) -> Vec<(f64, f64)> {
    let mut st = (1.0, 0.0);
    let mut out = vec![st];
    for &(len, live) in &MIDDLE_THIRD {
        let (y, y1) = st;
        st = if live {
            let (c, s) = cs(lambda, len);
            (c * y + s * y1, -lambda * s * y + c * y1)
        } else {
            (y + len * y1, y1)
        };
        out.push(st);
    }
    out
}

/// `y'(1)` of the solution with `y(0) = 1, y'(0) = 0`; eigenvalues for `τ = 0`
/// are its zeros.
pub fn middle_third_characteristic(lambda: f64) -> f64 {
    middle_third_states(lambda)[3].1
}

/// First `n` eigenvalues of the middle-third problem with Neumann ends,
/// by a scan in `sign(λ) sqrt|λ|` and bisection.
pub fn middle_third_eigenvalues(n: usize) -> Vec<f64> {
    let f = middle_third_characteristic;
    let h = 1e-2;
    let mut out = Vec::new();
    let mut j: i64 = -100;
    let lam = |j: i64| {
        let w = j as f64 * h;
        w * w.abs()
    };
    let mut prev = f(lam(j));
    while out.len() < n && j < 1_000_000 {
        j += 1;
        let x = lam(j);
        let fx = f(x);
        if fx == 0.0 {
            out.push(x);
        } else if prev != 0.0 && prev.signum() != fx.signum() {
            let (mut a, mut b, mut fa) = (lam(j - 1), x, prev);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                let fm = f(m);
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev = fx;
    }
    out
}

/// `(∫ Δ φ, ∫ Δ φ²)` for the middle-third problem at real `λ ≥ 0`, in closed form.
pub fn middle_third_moments(lambda: f64) -> (f64, f64) {
    let st = middle_third_states(lambda);
    let mut int1 = 0.0;
    let mut int2 = 0.0;
    for (i, &(len, live)) in MIDDLE_THIRD.iter().enumerate() {
        if !live {
            continue;
        }
        let (a, d) = st[i];
        if lambda.abs() < 1e-12 {
            // y = a + d x.
            int1 += a * len + d * len * len / 2.0;
            int2 += a * a * len + a * d * len * len + d * d * len.powi(3) / 3.0;
        } else {
            let k = lambda.sqrt();
            let b = d / k;
            let (s1, c1) = ((k * len).sin(), (k * len).cos());
            let (s2, c2) = ((2.0 * k * len).sin(), (2.0 * k * len).cos());
            int1 += a * s1 / k + b * (1.0 - c1) / k;
            int2 += a * a * (len / 2.0 + s2 / (4.0 * k)) + b * b * (len / 2.0 - s2 / (4.0 * k)) + a * b * (1.0 - c2) / (2.0 * k);
        }
    }
    (int1, int2)
}

/// Expansion coefficient `(1, v)_Δ` of `y ≡ 1` on the normalised middle-third
/// eigenfunction at `λ`, up to sign.
pub fn middle_third_coefficient_of_one(lambda: f64) -> f64 {
    let (i1, i2) = middle_third_moments(lambda);
    (i1 / i2.sqrt()).abs()
}
