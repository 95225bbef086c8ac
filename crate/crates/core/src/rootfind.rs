//! Scalar root finding: plain bisection for interpolant zeros and a
//! bracketing secant iteration for shooting residuals.

use crate::error::{Error, Result};

/// Bisection on a sign change in [a, b]. The caller guarantees
/// `f(a) * f(b) <= 0`; after `iters` halvings the midpoint is returned.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, iters: u32) -> f64 {
    let (mut lo, mut hi) = (a, b);
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// Secant refinement safeguarded by a bracket. `f` may fail (e.g. an inner
/// integration error); failures abort the search.
///
/// Converges when `|f| <= f_tol` or the bracket width falls below `x_tol`.
/// Returns the best root estimate and its residual.
pub fn refine_bracketed<F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    x_tol: f64,
    f_tol: f64,
    max_iter: u32,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa * fb > 0.0 {
        return Err(Error::RootFind(format!(
            "not a bracket: f({a}) = {fa}, f({b}) = {fb}"
        )));
    }
    let (mut lo, mut hi, mut flo, mut fhi) = if a < b { (a, b, fa, fb) } else { (b, a, fb, fa) };
    // previous two iterates drive the secant step
    let (mut x0, mut f0) = (lo, flo);
    let (mut x1, mut f1) = (hi, fhi);
    let mut best = if flo.abs() < fhi.abs() { (lo, flo) } else { (hi, fhi) };

    for _ in 0..max_iter {
        if best.1.abs() <= f_tol || (hi - lo).abs() <= x_tol {
            return Ok(best);
        }
        let denom = f1 - f0;
        let secant = if denom != 0.0 {
            x1 - f1 * (x1 - x0) / denom
        } else {
            f64::NAN
        };
        // fall back to bisection when the secant step leaves the bracket
        let x_next = if secant.is_finite() && secant > lo && secant < hi {
            secant
        } else {
            0.5 * (lo + hi)
        };
        let f_next = f(x_next)?;
        if f_next.abs() < best.1.abs() {
            best = (x_next, f_next);
        }
        if flo * f_next <= 0.0 {
            hi = x_next;
            fhi = f_next;
        } else {
            lo = x_next;
            flo = f_next;
        }
        let _ = fhi;
        x0 = x1;
        f0 = f1;
        x1 = x_next;
        f1 = f_next;
    }
    Ok(best)
}
