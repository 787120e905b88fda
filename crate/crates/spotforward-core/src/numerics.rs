//! Fixed-step integrators, quadrature on uniform knots and scalar root finders.

use crate::error::{Error, Result};

/// Classical RK4 run backward from `knots[last]` to `knots[0]`.
///
/// `f(t, y, k)` is the right-hand side of `y' = f` on interval `k`
/// (`[knots[k], knots[k+1]]`), so piecewise data can be resolved per step.
pub fn rk4_backward<const N: usize, F>(knots: &[f64], y_terminal: [f64; N], mut f: F) -> Vec<[f64; N]>
where
    F: FnMut(f64, &[f64; N], usize) -> [f64; N],
{
    let n = knots.len();
    let mut ys = vec![[0.0; N]; n];
    ys[n - 1] = y_terminal;
    for k in (0..n - 1).rev() {
        let t1 = knots[k + 1];
        let h = knots[k] - t1; // negative step
        let y = ys[k + 1];
        let k1 = f(t1, &y, k);
        let k2 = f(t1 + 0.5 * h, &axpy(&y, 0.5 * h, &k1), k);
        let k3 = f(t1 + 0.5 * h, &axpy(&y, 0.5 * h, &k2), k);
        let k4 = f(t1 + h, &axpy(&y, h, &k3), k);
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        ys[k] = out;
    }
    ys
}

/// Classical RK4 run forward from `knots[0]`.
pub fn rk4_forward<const N: usize, F>(knots: &[f64], y0: [f64; N], mut f: F) -> Vec<[f64; N]>
where
    F: FnMut(f64, &[f64; N], usize) -> [f64; N],
{
    let n = knots.len();
    let mut ys = vec![[0.0; N]; n];
    ys[0] = y0;
    for k in 0..n - 1 {
        let t0 = knots[k];
        let h = knots[k + 1] - t0;
        let y = ys[k];
        let k1 = f(t0, &y, k);
        let k2 = f(t0 + 0.5 * h, &axpy(&y, 0.5 * h, &k1), k);
        let k3 = f(t0 + 0.5 * h, &axpy(&y, 0.5 * h, &k2), k);
        let k4 = f(t0 + h, &axpy(&y, h, &k3), k);
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        ys[k + 1] = out;
    }
    ys
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], a: f64, x: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * x[i];
    }
    out
}

/// Integral of uniformly spaced samples `y` with spacing `h`.
///
/// Composite Simpson; an odd number of intervals closes with the 3/8 rule,
/// a single interval falls back to the trapezoid.
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (y[0] + y[1]),
        2 => h / 3.0 * (y[0] + 4.0 * y[1] + y[2]),
        3 => 3.0 * h / 8.0 * (y[0] + 3.0 * y[1] + 3.0 * y[2] + y[3]),
        _ if n % 2 == 0 => simpson_even(y, h),
        _ => {
            let m = n - 3;
            simpson_even(&y[..=m], h)
                + 3.0 * h / 8.0 * (y[m] + 3.0 * y[m + 1] + 3.0 * y[m + 2] + y[m + 3])
        }
    }
}

fn simpson_even(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        if i % 2 == 1 {
            odd += y[i];
        } else {
            even += y[i];
        }
    }
    h / 3.0 * (y[0] + y[n] + 4.0 * odd + 2.0 * even)
}

/// Running integral `F[i] = ∫_{x0}^{xi} y`, fourth-order at every knot.
///
/// Even knots accumulate Simpson panels; odd knots add the three-point
/// partial panel `h(5f0 + 8f1 − f2)/12`.
pub fn cumulative_simpson(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (y[0] + y[1]);
        return out;
    }
    for i in 1..n {
        if i % 2 == 0 {
            out[i] = out[i - 2] + h / 3.0 * (y[i - 2] + 4.0 * y[i - 1] + y[i]);
        } else if i + 1 < n {
            out[i] = out[i - 1] + h * (5.0 * y[i - 1] + 8.0 * y[i] - y[i + 1]) / 12.0;
        } else {
            out[i] = out[i - 1] + h * (-y[i - 2] + 8.0 * y[i - 1] + 5.0 * y[i]) / 12.0;
        }
    }
    out
}

/// Running integral over consecutive knot segments `[a, b]` that share
/// endpoints. `sample(seg, i)` gives the integrand at knot `i` as seen from
/// segment `seg`, so jumps at segment breaks are integrated one-sidedly.
pub fn cumulative_simpson_segments<F>(segments: &[(usize, usize)], n_knots: usize, h: f64, mut sample: F) -> Vec<f64>
where
    F: FnMut(usize, usize) -> f64,
{
    let mut out = vec![0.0; n_knots];
    let mut base = 0.0;
    for (s, &(a, b)) in segments.iter().enumerate() {
        let ys: Vec<f64> = (a..=b).map(|i| sample(s, i)).collect();
        let cum = cumulative_simpson(&ys, h);
        for (j, c) in cum.iter().enumerate() {
            out[a + j] = base + c;
        }
        base += cum[cum.len() - 1];
    }
    out
}

/// Bisection on a sign change. `f(lo)` and `f(hi)` must have opposite signs.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NonConvergence(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo).abs() <= tol {
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

/// Brent's method on a bracketing interval. Returns the root and the number
/// of function evaluations.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a0: f64, b0: f64, xtol: f64, max_iter: usize) -> Result<(f64, usize)> {
    let (mut a, mut b) = (a0, b0);
    let mut fa = f(a);
    let mut fb = f(b);
    let mut evals = 2;
    if fa == 0.0 {
        return Ok((a, evals));
    }
    if fb == 0.0 {
        return Ok((b, evals));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NonConvergence(format!("no sign change on [{a0}, {b0}]")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok((b, evals));
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        evals += 1;
    }
    Err(Error::NonConvergence(format!(
        "brent exceeded {max_iter} iterations"
    )))
}

/// Sup-norm of a slice.
pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Sup-norm of the difference of two equal-length slices.
pub fn sup_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
}
