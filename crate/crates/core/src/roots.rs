//! Bracketed bisection shared by the zero finders and the weight search.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub root: f64,
    /// Final bracket, ordered.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Bisection for a sign change of `f` on `[a, b]`.
///
/// Stops when the bracket is shorter than `xtol` (absolute) or after
/// `max_iter` halvings. `f(a)` and `f(b)` must have opposite signs; an
/// exact zero at an endpoint is returned directly.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<Bisection> {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(Bisection {
            root: lo,
            bracket: (lo, lo),
            iterations: 0,
        });
    }
    if fhi == 0.0 {
        return Ok(Bisection {
            root: hi,
            bracket: (hi, hi),
            iterations: 0,
        });
    }
    if !(flo.signum() != fhi.signum()) || flo.is_nan() || fhi.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "no sign change on [{lo}, {hi}]: f = {flo}, {fhi}"
        )));
    }
    let mut iterations = 0;
    while hi - lo > xtol && iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        iterations += 1;
        if fm == 0.0 {
            return Ok(Bisection {
                root: mid,
                bracket: (mid, mid),
                iterations,
            });
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(Bisection {
        root: 0.5 * (lo + hi),
        bracket: (lo, hi),
        iterations,
    })
}

/// Bisection on a predicate that is `true` below some threshold and `false`
/// above it. `lo` must satisfy the predicate and `hi` must not. Returns the
/// final `(lo, hi)` bracket and the iteration count.
///
/// When the bracket spans more than a factor 4 the split point is the
/// geometric mean, so thresholds spread over many decades converge quickly.
pub fn bisect_predicate<P, E>(
    mut pred: P,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> std::result::Result<((f64, f64), usize), E>
where
    P: FnMut(f64) -> std::result::Result<bool, E>,
{
    let mut it = 0;
    while hi - lo > rel_tol * lo.abs() && it < max_iter {
        let mid = if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        it += 1;
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(((lo, hi), it))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r.root - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn rejects_missing_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10, 100).is_err());
    }

    #[test]
    fn predicate_threshold() {
        let ((lo, hi), _) =
            bisect_predicate::<_, ()>(|c| Ok(c <= 3.7), 1.0, 1e6, 1e-12, 500).unwrap();
        assert!(lo <= 3.7 && hi > 3.7 && hi - lo <= 1e-12 * lo);
    }
}
