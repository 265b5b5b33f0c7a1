//! Scalar root finders used by the projection.

/// Root of a nondecreasing `f` on `[lo, hi]` with `f(lo) <= 0 <= f(hi)`.
/// Newton steps from `x0` fall back to bisection when they leave the bracket.
pub(crate) fn newton_bracketed<F>(mut f: F, mut lo: f64, mut hi: f64, x0: f64, xtol: f64) -> f64
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= xtol * (1.0 + x.abs()) {
            return 0.5 * (lo + hi);
        }
        let newton = x - fx / dfx;
        let next = if dfx > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        // relative: from a tiny warm start the early steps are tiny too
        if (next - x).abs() <= xtol * next.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// Brent's method on `[a, b]` where `f(a)` and `f(b)` differ in sign; without
/// a sign change the endpoint with the smaller `|f|` comes back twice.
/// Returns the bracket endpoint on the side where `f <= 0` together with the
/// other endpoint, so callers can pick whichever side they need.
pub(crate) fn brent<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return (a, a);
    }
    if fb == 0.0 {
        return (b, b);
    }
    if fa * fb > 0.0 {
        // no sign change: f is flat at rounding level across the bracket
        let x = if fa.abs() <= fb.abs() { a } else { b };
        return (x, x);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb * fc > 0.0 {
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
            break;
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
        fb = f(b);
    }
    if fb == 0.0 {
        return (b, b);
    }
    if fb * fc > 0.0 {
        c = a;
    }
    if fb <= 0.0 {
        (b, c)
    } else {
        (c, b)
    }
}
