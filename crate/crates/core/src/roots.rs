//! Scalar root bracketing, minimisation and argument-principle counting.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Brent's method on a sign-changing bracket `[a, b]` with `f(a) = fa`, `f(b) = fb`.
pub fn brent<F>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidArgument(format!("[{a}, {b}] does not bracket a root")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Ok(b)
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_min<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const R: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - R * (b - a);
    let mut x2 = a + R * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - R * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + R * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 < f2 { (x1, f1) } else { (x2, f2) })
}

/// Number of zeros (with multiplicity) of an analytic `f` inside the closed
/// polygon `corners`, by tracking the argument along its edges.
pub fn winding_number<F>(mut f: F, corners: &[Complex64]) -> Result<i64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    const SEED: usize = 8;
    const MAX_DEPTH: usize = 14;
    let mut total = 0.0;
    for (i, &z0) in corners.iter().enumerate() {
        let z1 = corners[(i + 1) % corners.len()];
        let mut prev_z = z0;
        let mut prev = f(z0)?;
        for k in 1..=SEED {
            let z = z0 + (z1 - z0) * (k as f64 / SEED as f64);
            let v = f(z)?;
            total += arg_change(&mut f, prev_z, prev, z, v, MAX_DEPTH)?;
            prev_z = z;
            prev = v;
        }
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

fn arg_change<F>(f: &mut F, za: Complex64, fa: Complex64, zb: Complex64, fb: Complex64, depth: usize) -> Result<f64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    if fa == Complex64::new(0.0, 0.0) || fb == Complex64::new(0.0, 0.0) {
        return Err(Error::CrossCheck("zero on the counting contour".into()));
    }
    let d = (fb / fa).arg();
    if d.abs() <= PI / 4.0 {
        return Ok(d);
    }
    if depth == 0 {
        return Err(Error::CrossCheck("argument change along contour not resolved".into()));
    }
    let zm = (za + zb) * 0.5;
    let fm = f(zm)?;
    Ok(arg_change(f, za, fa, zm, fm, depth - 1)? + arg_change(f, zm, fm, zb, fb, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cosine_root() {
        let r = brent(|x| Ok(x.cos()), 1.0, 2.0, 1f64.cos(), 2f64.cos(), 1e-15).unwrap();
        assert!((r - PI / 2.0).abs() < 1e-14);
        assert!(brent(|x| Ok(x), 1.0, 2.0, 1.0, 2.0, 1e-12).is_err());
    }

    #[test]
    fn golden_section_minimum() {
        let (x, fx) = golden_min(|x| Ok((x - 0.3) * (x - 0.3) + 1.0), 0.0, 1.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn counts_zeros() {
        let sq = |c: f64, h: f64| {
            vec![
                Complex64::new(c - h, -h),
                Complex64::new(c + h, -h),
                Complex64::new(c + h, h),
                Complex64::new(c - h, h),
            ]
        };
        let f = |z: Complex64| Ok((z - 1.0) * (z - 1.1) * (z + 2.0));
        assert_eq!(winding_number(f, &sq(1.05, 0.2)).unwrap(), 2);
        assert_eq!(winding_number(f, &sq(-2.0, 0.5)).unwrap(), 1);
        assert_eq!(winding_number(f, &sq(5.0, 0.5)).unwrap(), 0);
        let g = |z: Complex64| Ok((z - 0.5).powi(2));
        assert_eq!(winding_number(g, &sq(0.5, 0.01)).unwrap(), 2);
    }
}
