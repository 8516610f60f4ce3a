//! Small scalar root-finding helpers shared by the solvers.

/// Finds `[lo, hi]` with `below(lo)` true and `below(hi)` false by doubling
/// from 1. `lo` is 0 when `hi` is 1. Assumes `below(0)` holds; returns `None`
/// if `below` is still true past 1e300.
pub(crate) fn doubling_bracket(mut below: impl FnMut(f64) -> bool) -> Option<(f64, f64)> {
    let mut hi = 1.0f64;
    while below(hi) {
        hi *= 2.0;
        if hi > 1e300 {
            return None;
        }
    }
    let lo = if hi <= 1.0 { 0.0 } else { hi * 0.5 };
    Some((lo, hi))
}

/// Bisection keeping `below(lo)` true and `below(hi)` false. Stops when the
/// bracket is narrower than `rel·max(1, |hi|)` or cannot shrink any further.
pub(crate) fn bisect(
    mut lo: f64,
    mut hi: f64,
    mut below: impl FnMut(f64) -> bool,
    rel: f64,
) -> (f64, f64) {
    for _ in 0..2200 {
        if hi - lo <= rel * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let (lo, hi) = doubling_bracket(|x| x * x < 2.0).unwrap();
        assert_eq!((lo, hi), (1.0, 2.0));
        let (lo, hi) = bisect(lo, hi, |x| x * x < 2.0, 1e-15);
        assert!(lo <= 2f64.sqrt() && 2f64.sqrt() <= hi);
        assert!(hi - lo < 1e-14);
    }

    #[test]
    fn unbounded() {
        assert!(doubling_bracket(|_| true).is_none());
        assert_eq!(doubling_bracket(|x| x < 0.5), Some((0.0, 1.0)));
    }
}
