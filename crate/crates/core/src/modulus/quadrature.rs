//! Adaptive Simpson quadrature.

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("adaptive Simpson did not converge on [{a}, {b}]")]
pub struct QuadratureError {
    pub a: f64,
    pub b: f64,
}

const MAX_DEPTH: u32 = 50;

/// Integrate `f` over `[a, b]` to relative tolerance `rel_tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let eps = (rel_tol * whole.abs()).max(f64::MIN_POSITIVE);
    recurse(f, a, b, fa, fm, fb, whole, eps, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64, QuadratureError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(QuadratureError { a, b });
    }
    if delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= a || m >= b {
        return Err(QuadratureError { a, b });
    }
    Ok(recurse(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)?)
}
