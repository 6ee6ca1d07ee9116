//! Scalar root finding and minimization used by the parameter solvers.

use crate::error::{Error, Result};

/// Residual tolerance for all monotone solves.
pub const RESIDUAL_TOL: f64 = 1e-12;

const MAX_ITER: usize = 400;

/// Bisection on `[lo, hi]`. The endpoints must bracket a sign change.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::NoBracket(format!(
            "f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= RESIDUAL_TOL || (hi - lo).abs() <= f64::EPSILON * mid.abs().max(1e-300) {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection that first grows the bracket `[start, start + step·2^k]` until a
/// sign change appears or `limit` is crossed. Works in either direction
/// (negative `step` searches downwards).
pub fn bisect_expanding<F>(mut f: F, start: f64, step: f64, limit: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let f0 = f(start);
    if f0 == 0.0 {
        return Ok(start);
    }
    let mut width = step;
    let mut prev = start;
    loop {
        let mut next = start + width;
        let beyond = if step > 0.0 {
            next >= limit
        } else {
            next <= limit
        };
        if beyond {
            next = limit;
        }
        let fn_ = f(next);
        if fn_.is_finite() && fn_.signum() != f0.signum() {
            return bisect(f, prev, next);
        }
        if beyond {
            return Err(Error::NoBracket(format!(
                "no sign change between {start} and {limit}"
            )));
        }
        prev = next;
        width *= 2.0;
    }
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..MAX_ITER {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `n` log-spaced points between `lo` and `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// `n` evenly spaced points between `lo` and `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
