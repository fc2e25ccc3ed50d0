//! Bessel functions of the first kind, their zeros, and the boundary
//! parameter `μ(n)`.
//!
//! `J_ν(x)` uses the ascending power series for `x <= 10` and Miller's
//! backward recurrence, normalised with the Neumann sum
//! `(x/2)^ν₀ = Σ_k (ν₀+2k) Γ(ν₀+k)/k! · J_{ν₀+2k}(x)`, above it. Both
//! branches reach better than `1e-12` absolute accuracy on `[0, 50]`; the
//! crossover band `[8, 12]` is covered by tests comparing the two.

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::roots::bisect;

/// Crossover between the power series and the backward recurrence.
pub const SERIES_CROSSOVER: f64 = 10.0;

/// `J_ν(x)` for `ν >= 0`, `x >= 0`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= 0.0) || !(x >= 0.0) || !nu.is_finite() || !x.is_finite() {
        return Err(Error::Domain {
            function: "bessel_j",
            detail: format!("need finite nu >= 0 and x >= 0, got nu = {nu}, x = {x}"),
        });
    }
    if x <= SERIES_CROSSOVER {
        Ok(bessel_j_series(nu, x))
    } else {
        Ok(bessel_j_recurrence(nu, x))
    }
}

/// Ascending series `Σ (-1)^k (x/2)^{2k+ν} / (k! Γ(k+ν+1))`.
pub fn bessel_j_series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    // First term computed in log space to survive large orders.
    let mut term = (nu * half.ln() - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    let q = -half * half;
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() && kf > half {
            break;
        }
    }
    sum
}

/// Miller's backward recurrence for `J_{ν₀+n}` with `ν₀ ∈ [0, 1)`.
pub fn bessel_j_recurrence(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let n = nu.floor() as usize;
    let nu0 = nu - n as f64;
    // Start well above both the order and the turning point.
    let mut top = (x.max(nu) + 30.0 + 4.0 * x.cbrt()).ceil() as usize + 10;
    if top % 2 == 1 {
        top += 1;
    }

    // Coefficients of the Neumann normalisation sum: a_0 = Γ(ν₀+1),
    // a_k = (ν₀+2k) Γ(ν₀+k)/k! for k >= 1.
    let mut coef = vec![0.0; top / 2 + 1];
    coef[0] = gamma(nu0 + 1.0);
    let mut g = gamma(nu0 + 1.0); // Γ(ν₀+k)/k! at k = 1
    for (k, c) in coef.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        if k > 1 {
            g *= (nu0 + kf - 1.0) / kf;
        }
        *c = (nu0 + 2.0 * kf) * g;
    }

    let mut j_next = 0.0; // J_{μ+1}
    let mut j_cur = 1e-300; // J_μ, arbitrary seed
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for m in (0..=top).rev() {
        // j_cur holds the (unnormalised) J_{ν₀+m}.
        if m % 2 == 0 {
            norm += coef[m / 2] * j_cur;
        }
        if m == n {
            wanted = j_cur;
        }
        if m == 0 {
            break;
        }
        let mu = nu0 + m as f64;
        let j_prev = 2.0 * mu / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            if m <= n {
                wanted *= 1e-250;
            }
        }
    }
    wanted * half_pow(x, nu0) / norm
}

fn half_pow(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        (0.5 * x).powf(p)
    }
}

/// `J₀'(x) = -J₁(x)`.
pub fn bessel_j0_prime(x: f64) -> Result<f64> {
    Ok(-bessel_j(1.0, x)?)
}

/// First positive zero of `J_ν`, bracketed by a coarse scan and polished by
/// bisection to `1e-14`.
pub fn first_zero(nu: f64) -> Result<f64> {
    let f = |x: f64| bessel_j(nu, x).unwrap_or(f64::NAN);
    // J_ν > 0 on (0, j_{ν,1}) and j_{ν,1} > ν.
    let mut a = nu.max(1e-3);
    let step = 0.25;
    let mut fa = f(a);
    for _ in 0..100_000 {
        let b = a + step;
        let fb = f(b);
        if fa > 0.0 && fb <= 0.0 {
            return bisect(f, a, b, 1e-15, 200).map(|r| r.root);
        }
        a = b;
        fa = fb;
    }
    Err(Error::NoConvergence { a, b: a + step })
}

/// First zero `z₀ = 2.404825557695773...` of `J₀`, by bracketed bisection on
/// `[2, 3]`.
pub fn first_zero_j0() -> f64 {
    let f = |x: f64| bessel_j_series(0.0, x);
    bisect(f, 2.0, 3.0, 1e-15, 200)
        .expect("J0 changes sign on [2, 3]")
        .root
}

/// `x J₀'(x) / J₀(x)`, decreasing from 0 to -∞ on `(0, z₀)`.
pub fn j0_log_derivative(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    -x * bessel_j_series(1.0, x) / bessel_j_series(0.0, x)
}

/// Result of [`mu_for_dimension`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MuValue {
    pub n: u32,
    pub mu: f64,
    /// `μ J₀'(μ)/J₀(μ) + n/2`.
    pub residual: f64,
    pub iterations: usize,
}

/// The unique `μ ∈ (0, z₀)` with `μ J₀'(μ)/J₀(μ) = -n/2`.
///
/// Returned dimensionless; callers scale by `1/R²` themselves.
pub fn mu_for_dimension(n: u32) -> Result<MuValue> {
    if n == 0 {
        return Err(Error::InvalidParameter("mu(n) needs n >= 1".into()));
    }
    let z0 = first_zero_j0();
    let target = -(n as f64) / 2.0;
    let g = |x: f64| j0_log_derivative(x) - target;
    // g(0+) = n/2 > 0 and g -> -inf at z0.
    let hi = z0 * (1.0 - 1e-15);
    let r = bisect(g, 1e-12, hi, 1e-16, 300)?;
    Ok(MuValue {
        n,
        mu: r.root,
        residual: j0_log_derivative(r.root) - target,
        iterations: r.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn j0_at_origin_is_one() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(2.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn j0_vanishes_near_quoted_zero() {
        assert!(bessel_j(0.0, 2.4048).unwrap().abs() < 5e-5);
    }

    #[test]
    fn half_integer_order_matches_closed_form() {
        // J_{1/2}(x) = sqrt(2/(πx)) sin x.
        for &x in &[PI / 2.0, 0.3, 4.0, 9.5, 10.5, 17.0, 33.3, 49.0] {
            let closed = (2.0 / (PI * x)).sqrt() * x.sin();
            let got = bessel_j(0.5, x).unwrap();
            assert!((got - closed).abs() < 1e-12, "x = {x}: {got} vs {closed}");
        }
        // J_{3/2}(x) = sqrt(2/(πx)) (sin x / x - cos x).
        for &x in &[0.7, 6.0, 12.0, 41.0] {
            let closed = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
            assert!((bessel_j(1.5, x).unwrap() - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_values() {
        // Reference values to 16 digits.
        let cases = [
            (0.0, 1.0, 0.765_197_686_557_966_6),
            (0.0, 5.0, -0.177_596_771_314_338_3),
            (1.0, 5.0, -0.327_579_137_591_465_2),
            (0.0, 20.0, 0.167_024_664_340_583_4),
            (1.0, 20.0, 0.066_833_124_175_849_93),
            (0.0, 50.0, 0.055_812_327_669_251_85),
            (2.0, 30.0, 0.078_451_246_073_265_38),
        ];
        for (nu, x, want) in cases {
            let got = bessel_j(nu, x).unwrap();
            assert!(
                (got - want).abs() < 1e-12,
                "J_{nu}({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn branches_agree_on_crossover_band() {
        for &nu in &[0.0, 0.5, 1.0, 2.3, 5.0] {
            let mut x = 8.0;
            while x <= 12.0 {
                let s = bessel_j_series(nu, x);
                let m = bessel_j_recurrence(nu, x);
                assert!((s - m).abs() < 1e-9, "nu {nu} x {x}: {s} vs {m}");
                x += 0.125;
            }
        }
    }

    #[test]
    fn bounded_by_one() {
        for i in 0..=200 {
            let x = 0.25 * i as f64;
            for &nu in &[0.0, 0.5, 1.0, 3.7] {
                assert!(bessel_j(nu, x).unwrap().abs() <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn derivative_of_j0_is_minus_j1() {
        let h = 1e-5;
        for &x in &[0.5, 2.0, 7.5, 11.0, 30.0] {
            let fd = (bessel_j(0.0, x + h).unwrap() - bessel_j(0.0, x - h).unwrap()) / (2.0 * h);
            assert!((fd - bessel_j0_prime(x).unwrap()).abs() < 1e-7);
        }
    }

    #[test]
    fn zeros() {
        let z0 = first_zero_j0();
        assert!((z0 - 2.404_825_557_695_773).abs() < 1e-12);
        assert!(bessel_j(0.0, z0).unwrap().abs() < 1e-10);
        assert!((first_zero(0.5).unwrap() - PI).abs() < 1e-12);
        assert!((first_zero(0.0).unwrap() - z0).abs() < 1e-12);
    }

    #[test]
    fn mu_is_monotone_and_below_z0() {
        let z0 = first_zero_j0();
        let mut prev = 0.0;
        for n in 1..=20 {
            let m = mu_for_dimension(n).unwrap();
            assert!(m.mu > prev && m.mu < z0);
            assert!(m.residual.abs() < 1e-9, "n = {n}: residual {}", m.residual);
            prev = m.mu;
        }
        assert!(mu_for_dimension(0).is_err());
    }

    #[test]
    fn mu_four_by_plain_interval_halving() {
        // Independent oracle: textbook interval halving on the defining ratio,
        // evaluated with the recurrence branch instead of the series.
        let ratio = |x: f64| -x * bessel_j_recurrence(1.0, x) / bessel_j_recurrence(0.0, x);
        let (mut lo, mut hi) = (1e-6, 2.404_825_557_695_773 - 1e-9);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if ratio(mid) > -2.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let mu4 = mu_for_dimension(4).unwrap().mu;
        assert!((mu4 - oracle).abs() < 1e-10, "{mu4} vs {oracle}");
        // Frozen from the halving oracle above (30-digit check: 1.5994492064869278511).
        assert!((mu4 - 1.599_449_206_486_928).abs() < 1e-10);
    }
}
