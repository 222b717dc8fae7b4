//! Scalar bracketing, bisection and golden-section helpers.

/// Bisection on `[lo, hi]` for a sign change of `f`.
///
/// `f(lo)` and `f(hi)` must differ in sign (or one of them vanish). Iterates
/// until the bracket is no wider than `x_tol` or can no longer be split in
/// floating point. Returns the end of the final bracket on the `hi` side,
/// so the result always satisfies the sign of `f(hi)`.
pub fn bisect<F>(mut lo: f64, mut hi: f64, f: F, x_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let lo_sign = flo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) || (hi - lo).abs() <= x_tol {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Grows `hi` geometrically from `start` until `f` changes sign relative to
/// `f(0)`. Returns the bracket `(lo, hi)` or `None` once `limit` is passed.
pub fn bracket_by_doubling<F>(start: f64, limit: f64, f: F) -> Option<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let f0 = f(0.0);
    if f0 == 0.0 {
        return Some((0.0, 0.0));
    }
    let mut lo = 0.0;
    let mut hi = start.min(limit);
    loop {
        let fh = f(hi);
        if fh.is_nan() {
            return None;
        }
        if fh == 0.0 || (fh > 0.0) != (f0 > 0.0) {
            return Some((lo, hi));
        }
        if hi >= limit {
            return None;
        }
        lo = hi;
        hi = (2.0 * hi).min(limit);
    }
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section_min<F>(mut a: f64, mut b: f64, f: F, iterations: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iterations {
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let root = bisect(0.0, 2.0, |x| x * x - 2.0, 0.0);
        assert!((root - 2f64.sqrt()).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn bisect_respects_tolerance() {
        let root = bisect(0.0, 1.0, |x| x - 0.3, 1e-3);
        assert!((root - 0.3).abs() <= 1e-3);
        assert!(root >= 0.3);
    }

    #[test]
    fn bisect_decreasing_function() {
        let root = bisect(0.0, 10.0, |x| 3.0 - x, 0.0);
        assert!((root - 3.0).abs() < 1e-14);
    }

    #[test]
    fn doubling_brackets_and_gives_up() {
        let (lo, hi) = bracket_by_doubling(0.5, 100.0, |x| x - 5.0).unwrap();
        assert!(lo < 5.0 && hi >= 5.0);
        assert!(bracket_by_doubling(0.5, 4.0, |x| x - 5.0).is_none());
        assert_eq!(bracket_by_doubling(1.0, 4.0, |x| x), Some((0.0, 0.0)));
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section_min(-1.0, 3.0, |x| (x - 1.25) * (x - 1.25) + 0.5, 80);
        assert!((x - 1.25).abs() < 1e-7);
        assert!((fx - 0.5).abs() < 1e-13);
    }
}
