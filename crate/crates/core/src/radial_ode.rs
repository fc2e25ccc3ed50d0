//! Shooting from the origin for
//!
//! ```text
//! y'' + (d/r + V_r/V) y' + c (W/V) y = 0   on (0, R],
//! ```
//!
//! with `d = n - 1` ([`OdeDim::NDim`]) or `d = 1` ([`OdeDim::TwoD`]).
//!
//! The equation is integrated in `t = log r` for the state `(y, r y')`,
//! which turns the regular singular point into a smooth half-line. The
//! start value comes from the dominant Frobenius branch `r^σ (1 + a₁r + a₂r²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::RadialPotential;
use crate::quadrature::integrable_at_origin;

/// Coefficient convention for the first-order term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OdeDim {
    /// `(n-1)/r`.
    #[default]
    NDim,
    /// `1/r`, the planar radial operator.
    TwoD,
}

impl std::str::FromStr for OdeDim {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n-dim" | "n" => Ok(OdeDim::NDim),
            "two-d" | "2d" => Ok(OdeDim::TwoD),
            _ => Err(Error::InvalidParameter(format!("unknown ode-dim `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OdeProblem {
    pub n: u32,
    pub v: RadialPotential,
    pub w: RadialPotential,
    pub c: f64,
    pub r: f64,
    pub convention: OdeDim,
}

impl OdeProblem {
    /// Build and check the integrability hypotheses
    /// `∫_0 dr/(r^{n-1}V) = ∞` and `∫_0 r^{n-1}V dr < ∞`
    /// (with `n = 2` under [`OdeDim::TwoD`]).
    pub fn new(
        n: u32,
        v: RadialPotential,
        w: RadialPotential,
        c: f64,
        r: f64,
        convention: OdeDim,
    ) -> Result<Self> {
        let p = Self::unchecked(n, v, w, c, r, convention)?;
        let ne = p.d() + 1.0;
        let a = 0.5 * r;
        let vv = &p.v;
        if integrable_at_origin(|s: f64| 1.0 / (s.powf(ne - 1.0) * vv.value(s)), a) {
            return Err(Error::Hypothesis(
                "∫ dr/(r^{n-1} V) is finite at the origin".into(),
            ));
        }
        if !integrable_at_origin(|s: f64| s.powf(ne - 1.0) * vv.value(s), a) {
            return Err(Error::Hypothesis(
                "r^{n-1} V is not integrable at the origin".into(),
            ));
        }
        Ok(p)
    }

    /// Build with parameter validation only.
    pub fn unchecked(
        n: u32,
        v: RadialPotential,
        w: RadialPotential,
        c: f64,
        r: f64,
        convention: OdeDim,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {r}"
            )));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "c must be finite and >= 0, got {c}"
            )));
        }
        if v.r_max() < r * (1.0 - 1e-12) || w.r_max() < r * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(
                "potentials are not defined up to R".into(),
            ));
        }
        if !(v.value(r) > 0.0) || !(v.sing_coefficient() > 0.0) {
            return Err(Error::Hypothesis("V must be positive".into()));
        }
        Ok(OdeProblem {
            n,
            v,
            w,
            c,
            r,
            convention,
        })
    }

    pub fn with_c(&self, c: f64) -> Self {
        OdeProblem { c, ..self.clone() }
    }

    /// Coefficient `d` of `y'/r`.
    pub fn d(&self) -> f64 {
        match self.convention {
            OdeDim::NDim => self.n as f64 - 1.0,
            OdeDim::TwoD => 1.0,
        }
    }

    /// `r p(r) = d + r V_r/V`.
    pub fn rp(&self, r: f64) -> f64 {
        self.d() + self.v.log_derivative(r)
    }

    /// `r² q(r) = c r² W/V`.
    pub fn r2q(&self, r: f64) -> f64 {
        if self.c == 0.0 {
            return 0.0;
        }
        self.c * r * r * self.w.value(r) / self.v.value(r)
    }

    /// Leading coefficient `w₋₂` of `W/V ~ w₋₂ r^{-2}` (zero when `W/V` is
    /// less singular).
    pub fn w_minus2(&self) -> Result<f64> {
        if self.w.is_zero() {
            return Ok(0.0);
        }
        let e = self.w.sing_exponent() - self.v.sing_exponent();
        if e < -2.0 - 1e-12 {
            return Err(Error::TooSingular { exponent: e });
        }
        if (e + 2.0).abs() <= 1e-12 {
            Ok(self.w.sing_coefficient() / self.v.sing_coefficient())
        } else {
            Ok(0.0)
        }
    }

    pub fn indicial(&self) -> Result<Indicial> {
        let p0 = self.d() + self.v.sing_exponent();
        let q0 = self.c * self.w_minus2()?;
        let b = p0 - 1.0;
        let mut disc = b * b - 4.0 * q0;
        let scale = (b * b).max(4.0 * q0.abs());
        let double = disc.abs() <= 1e-12 * scale || disc == 0.0;
        if double {
            disc = 0.0;
        }
        if disc < 0.0 {
            return Err(Error::ComplexExponents {
                c: self.c,
                discriminant: disc,
            });
        }
        let s = disc.sqrt();
        Ok(Indicial {
            p0,
            q0,
            roots: ((-b + s) / 2.0, (-b - s) / 2.0),
            discriminant: disc,
            double,
        })
    }
}

/// Data of `σ² + (p₀-1)σ + q₀ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indicial {
    pub p0: f64,
    pub q0: f64,
    /// Sorted descending.
    pub roots: (f64, f64),
    pub discriminant: f64,
    pub double: bool,
}

/// Roots of the indicial equation, larger first.
pub fn indicial_exponents(p: &OdeProblem) -> Result<(f64, f64)> {
    Ok(p.indicial()?.roots)
}

#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    /// Relative local tolerance of the Runge–Kutta pair.
    pub tol: f64,
    pub stop_at_zero: bool,
    /// Largest step in `log r`.
    pub max_step: f64,
    /// `r₀ / R`.
    pub start_ratio: f64,
    /// Initial amplitude: `y(r₀) = scale`.
    pub scale: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            tol: 1e-12,
            stop_at_zero: false,
            max_step: 0.5,
            start_ratio: 1e-8,
            scale: 1.0,
        }
    }
}

/// Threshold on `|y(R)| r^{-σ}` relative to its maximum over the grid.
pub const BOUNDARY_EPS: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub y: Vec<f64>,
    pub yp: Vec<f64>,
    /// First interior zero of `y`.
    pub first_zero: Option<f64>,
    /// `y'(R)/y(R)` unless `y(R)` is degenerate.
    pub end_ratio: Option<f64>,
    pub sigma: f64,
    pub positive_open: bool,
    pub end_positive: bool,
    pub boundary_degenerate: bool,
    /// `log` of the product of overflow rescalings applied to the stored values.
    pub log_rescale: f64,
    pub steps: usize,
    pub rejected: usize,
}

/// Compact, serializable view of a [`Trajectory`].
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub sigma: f64,
    pub first_zero: Option<f64>,
    pub end_ratio: Option<f64>,
    pub positive_open: bool,
    pub end_positive: bool,
    pub boundary_degenerate: bool,
    pub points: usize,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            sigma: self.sigma,
            first_zero: self.first_zero,
            end_ratio: self.end_ratio,
            positive_open: self.positive_open,
            end_positive: self.end_positive,
            boundary_degenerate: self.boundary_degenerate,
            points: self.grid.len(),
            steps: self.steps,
            rejected: self.rejected,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.y.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type State = [f64; 2];

struct System<'a> {
    p: &'a OdeProblem,
}

impl System<'_> {
    fn rhs(&self, t: f64, s: State) -> State {
        let r = t.exp();
        [s[1], (1.0 - self.p.rp(r)) * s[1] - self.p.r2q(r) * s[0]]
    }

    fn step(&self, t: f64, s: State, h: f64) -> (State, State) {
        let mut k = [[0.0; 2]; 7];
        for i in 0..7 {
            let mut st = s;
            for (j, kj) in k.iter().enumerate().take(i) {
                st[0] += h * A[i][j] * kj[0];
                st[1] += h * A[i][j] * kj[1];
            }
            k[i] = self.rhs(t + C[i] * h, st);
        }
        let mut out = s;
        let mut err = [0.0; 2];
        for i in 0..7 {
            out[0] += h * B[i] * k[i][0];
            out[1] += h * B[i] * k[i][1];
            err[0] += h * E[i] * k[i][0];
            err[1] += h * E[i] * k[i][1];
        }
        (out, err)
    }
}

/// Frobenius start `(y, r y') / r₀^σ` at `r₀`.
fn frobenius_start(p: &OdeProblem, ind: &Indicial, r0: f64) -> (f64, f64) {
    let sigma = ind.roots.0;
    let f = |x: f64| x * (x - 1.0) + ind.p0 * x + ind.q0;
    // Fit P = r p - p₀ and Q = r² q - q₀ by P₁r + P₂r² at two small radii.
    let ra = 1e-3 * p.r;
    let rb = 2.0 * ra;
    let fit = |g: &dyn Fn(f64) -> f64| {
        let (ga, gb) = (g(ra), g(rb));
        let c2 = (gb - 2.0 * ga) / (2.0 * ra * ra);
        let c1 = (ga - c2 * ra * ra) / ra;
        (c1, c2)
    };
    let (p1, p2) = fit(&|r| p.rp(r) - ind.p0);
    let (q1, q2) = fit(&|r| p.r2q(r) - ind.q0);
    let mut a1 = -(sigma * p1 + q1) / f(sigma + 1.0);
    if !(a1.abs() * r0 <= 0.1) {
        a1 = 0.0;
    }
    let mut a2 = if ind.double {
        0.0
    } else {
        -(((sigma + 1.0) * p1 + q1) * a1 + sigma * p2 + q2) / f(sigma + 2.0)
    };
    if !(a2.abs() * r0 * r0 <= 0.1) {
        a2 = 0.0;
    }
    let y = 1.0 + a1 * r0 + a2 * r0 * r0;
    let mut yy = sigma * y + a1 * r0 + 2.0 * a2 * r0 * r0;
    if ind.double {
        yy += y * log_level_correction(p, ind, r0);
    }
    (y, yy)
}

/// At a double root `u = r^{-σ} y` obeys `u_tt + Q u ≈ 0` in `t = log r`.
/// When `Q = r²q - q₀` decays only like `κ/τ²` with `τ ~ -log r` (iterated-log
/// weights), the principal solution behaves like `τ^{s}` with
/// `s(s-1) + κ = 0`, so `r u'/u ≈ -s/τ`. Returns that correction, or zero
/// when `Q` decays like a power of `r`.
fn log_level_correction(p: &OdeProblem, ind: &Indicial, r0: f64) -> f64 {
    let q = |r: f64| p.r2q(r) - ind.q0;
    let q0 = q(r0);
    if !(q0 > 1e-8) {
        return 0.0;
    }
    // Two-point fit of κ/τ² with τ decreasing by `dt` between the samples;
    // exact for a pure inverse-square law in τ.
    let dt: f64 = 1.0;
    let ratio = (q(r0 * dt.exp()) / q0).sqrt();
    if !(ratio > 1.0) {
        return 0.0;
    }
    let tau = ratio * dt / (ratio - 1.0);
    let kappa = q0 * tau * tau;
    let mut disc = 1.0 - 4.0 * kappa;
    if disc.abs() < 1e-10 {
        disc = 0.0;
    }
    let s = 0.5 * (1.0 - disc.max(0.0).sqrt());
    -s / tau
}

const RESCALE_HI: f64 = 1e150;

/// Integrate from `r₀ = start_ratio·R` to `R` on the dominant branch.
pub fn shoot_from_origin(p: &OdeProblem, opts: &ShootOptions) -> Result<Trajectory> {
    let ind = p.indicial()?;
    if !(opts.tol > 0.0)
        || !(opts.start_ratio > 0.0 && opts.start_ratio < 1.0)
        || !(opts.max_step > 0.0)
    {
        return Err(Error::InvalidParameter("invalid shooting options".into()));
    }
    let r0 = (opts.start_ratio * p.r).max(f64::MIN_POSITIVE * 1e10);
    let (y0, yy0) = frobenius_start(p, &ind, r0);
    let sys = System { p };

    let t0 = r0.ln();
    let t1 = p.r.ln();
    let mut t = t0;
    let mut s: State = [opts.scale * y0, opts.scale * yy0];
    let mut grid = vec![r0];
    let mut ys = vec![s[0]];
    let mut yps = vec![s[1] / r0];
    let mut h = (1e-3f64).min(opts.max_step);
    let mut first_zero = None;
    let near_end = |z: f64| p.r - z <= 1e-7 * p.r;
    let mut log_rescale = 0.0;
    let (mut steps, mut rejected) = (0usize, 0usize);
    let mut stopped = false;

    while t1 - t > 1e-15 * t1.abs().max(1.0) {
        if steps + rejected > 2_000_000 {
            return Err(Error::StepCollapse { radius: t.exp() });
        }
        let last = h >= t1 - t;
        let hh = if last { t1 - t } else { h };
        let (ns, e) = sys.step(t, s, hh);
        let scale = (s[0].abs() + s[1].abs()).max(ns[0].abs() + ns[1].abs());
        let err = e[0].abs().max(e[1].abs()) / (opts.tol * scale + 1e-300);
        if !err.is_finite() || err > 1.0 {
            rejected += 1;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.1
            };
            h = hh * fac;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepCollapse { radius: t.exp() });
            }
            continue;
        }
        steps += 1;
        let crossed = first_zero.is_none() && s[0] > 0.0 && ns[0] <= 0.0;
        if crossed {
            let tz = polish_zero(&sys, t, s, hh);
            first_zero = Some(tz.exp());
            // A zero next to R is left to the boundary-degeneracy test.
            if opts.stop_at_zero && !near_end(tz.exp()) {
                let (zs, _) = sys.step(t, s, tz - t);
                let rz = tz.exp();
                grid.push(rz);
                ys.push(zs[0]);
                yps.push(zs[1] / rz);
                stopped = true;
                break;
            }
        }
        t = if last { t1 } else { t + hh };
        s = ns;
        let r = t.exp();
        grid.push(r);
        ys.push(s[0]);
        yps.push(s[1] / r);
        let big = s[0].abs().max(s[1].abs());
        let f = if big > RESCALE_HI {
            1.0 / RESCALE_HI
        } else if big < 1.0 / RESCALE_HI && big > 0.0 {
            RESCALE_HI
        } else {
            1.0
        };
        if f != 1.0 {
            s[0] *= f;
            s[1] *= f;
            ys.iter_mut().for_each(|v| *v *= f);
            yps.iter_mut().for_each(|v| *v *= f);
            log_rescale += f.ln();
        }
        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (hh * fac).min(opts.max_step);
    }

    // Magnitudes are compared after removing the r^σ envelope, so that a
    // decaying dominant branch is not mistaken for a boundary zero.
    let sigma = ind.roots.0;
    let envelope = |r: f64, y: f64| y.abs().ln() - sigma * (r / r0).ln();
    let max_env = grid
        .iter()
        .zip(&ys)
        .map(|(&r, &y)| envelope(r, y))
        .fold(f64::NEG_INFINITY, f64::max);
    let y_end = *ys.last().unwrap();
    let yp_end = *yps.last().unwrap();
    let r_end = *grid.last().unwrap();
    // When stopped at an interior zero the boundary value is never reached.
    let boundary_degenerate = !stopped && envelope(r_end, y_end) <= BOUNDARY_EPS.ln() + max_env;
    if boundary_degenerate && first_zero.is_some_and(near_end) {
        first_zero = None;
    }
    let positive_open = first_zero.is_none();
    let end_positive = positive_open && !boundary_degenerate && y_end > 0.0;
    let end_ratio = if !boundary_degenerate && !stopped {
        Some(yp_end / y_end)
    } else {
        None
    };
    Ok(Trajectory {
        grid,
        y: ys,
        yp: yps,
        first_zero,
        end_ratio,
        sigma,
        positive_open,
        end_positive,
        boundary_degenerate,
        log_rescale,
        steps,
        rejected,
    })
}

/// Bisection on the step length of a single Runge–Kutta step from `t`.
fn polish_zero(sys: &System, t: f64, s: State, h: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (ms, _) = sys.step(t, s, mid);
        if ms[0] > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t + 0.5 * (lo + hi)
}

/// `θ = V(R) φ'(R)/φ(R)` for the positive solution at the problem's own `c`.
pub fn theta(p: &OdeProblem) -> Result<f64> {
    theta_with(p, &ShootOptions::default())
}

pub fn theta_with(p: &OdeProblem, opts: &ShootOptions) -> Result<f64> {
    let opts = ShootOptions {
        stop_at_zero: true,
        ..*opts
    };
    let tr = shoot_from_origin(p, &opts)?;
    if let Some(z) = tr.first_zero {
        return Err(Error::SignChange { radius: z });
    }
    if tr.boundary_degenerate {
        return Err(Error::CriticalBoundary {
            y_end: *tr.y.last().unwrap(),
        });
    }
    Ok(p.v.value(p.r) * tr.end_ratio.expect("non-degenerate end"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_potential, PotentialSpec};
    use std::f64::consts::PI;

    fn pot(spec: PotentialSpec) -> RadialPotential {
        make_potential(&spec, 1.0).unwrap()
    }

    fn problem(n: u32, v: PotentialSpec, w: PotentialSpec, c: f64) -> OdeProblem {
        OdeProblem::new(n, pot(v), pot(w), c, 1.0, OdeDim::NDim).unwrap()
    }

    #[test]
    fn indicial_examples() {
        let p = problem(3, PotentialSpec::one(), PotentialSpec::one(), 7.0);
        assert_eq!(indicial_exponents(&p).unwrap(), (0.0, -1.0));
        let p = problem(5, PotentialSpec::one(), PotentialSpec::power(1.0), 2.25);
        let (a, b) = indicial_exponents(&p).unwrap();
        assert_eq!((a, b), (-1.5, -1.5));
        let a_ = 0.7;
        let n = 6;
        let c = ((n as f64 - 2.0 * a_ - 2.0) / 2.0).powi(2);
        let p = problem(
            n,
            PotentialSpec::power(a_),
            PotentialSpec::power(a_ + 1.0),
            c,
        );
        let ind = p.indicial().unwrap();
        assert!(ind.double);
        assert!((ind.roots.0 + (n as f64 - 2.0 * a_ - 2.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn complex_and_too_singular() {
        let p = problem(3, PotentialSpec::one(), PotentialSpec::power(1.0), 0.3);
        assert!(matches!(p.indicial(), Err(Error::ComplexExponents { .. })));
        let p = problem(3, PotentialSpec::one(), PotentialSpec::power(1.5), 0.3);
        assert!(matches!(p.indicial(), Err(Error::TooSingular { .. })));
    }

    #[test]
    fn hypotheses_checked() {
        // n = 1 with V = 1: ∫ dr/V is finite.
        let r = OdeProblem::new(
            1,
            pot(PotentialSpec::one()),
            pot(PotentialSpec::one()),
            1.0,
            1.0,
            OdeDim::NDim,
        );
        assert!(matches!(r, Err(Error::Hypothesis(_))));
        // r^{n-1} V not integrable.
        let r = OdeProblem::new(
            3,
            pot(PotentialSpec::power(1.6)),
            pot(PotentialSpec::one()),
            1.0,
            1.0,
            OdeDim::NDim,
        );
        assert!(matches!(r, Err(Error::Hypothesis(_))));
        assert!(OdeProblem::new(
            2,
            pot(PotentialSpec::one()),
            pot(PotentialSpec::one()),
            1.0,
            1.0,
            OdeDim::NDim
        )
        .is_ok());
    }

    #[test]
    fn sine_over_r() {
        let p = problem(3, PotentialSpec::one(), PotentialSpec::one(), PI * PI);
        let tr = shoot_from_origin(&p, &ShootOptions::default()).unwrap();
        assert!(tr.first_zero.is_none());
        assert!(tr.boundary_degenerate);
        assert!(!tr.end_positive);
        // Compare with sin(πr)/(πr) along the grid.
        for (r, y) in tr.grid.iter().zip(&tr.y) {
            let exact = (PI * r).sin() / (PI * r);
            assert!((y - exact).abs() < 1e-9, "r = {r}");
        }
        let tr = shoot_from_origin(&p.with_c(PI * PI - 1e-4), &ShootOptions::default()).unwrap();
        assert!(tr.first_zero.is_none() && tr.end_positive && tr.y.last().unwrap() > &0.0);
        let tr = shoot_from_origin(&p.with_c(4.0 * PI * PI), &ShootOptions::default()).unwrap();
        assert!((tr.first_zero.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_weight_gives_constant() {
        for n in 2..7 {
            let p = problem(n, PotentialSpec::one(), PotentialSpec::Zero, 123.0);
            let tr = shoot_from_origin(&p, &ShootOptions::default()).unwrap();
            assert!(tr.y.iter().all(|&y| y == 1.0));
            assert_eq!(tr.end_ratio, Some(0.0));
            assert_eq!(theta(&p).unwrap(), 0.0);
        }
    }

    #[test]
    fn ckn_theta() {
        for &(n, a) in &[(3u32, 0.0), (5, 0.5), (6, -0.25), (4, 0.9)] {
            let c = ((n as f64 - 2.0 * a - 2.0) / 2.0).powi(2);
            let rr = 1.7;
            let p = OdeProblem::new(
                n,
                make_potential(&PotentialSpec::power(a), rr).unwrap(),
                make_potential(&PotentialSpec::power(a + 1.0), rr).unwrap(),
                c,
                rr,
                OdeDim::NDim,
            )
            .unwrap();
            let want = -(n as f64 - 2.0 * a - 2.0) / 2.0 * rr.powf(-2.0 * a - 1.0);
            let got = theta(&p).unwrap();
            assert!(
                (got - want).abs() < 1e-9 * want.abs().max(1.0),
                "n {n} a {a}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn log_chain_theta_matches_closed_form() {
        // TwoD, V = 1, W = W_{1,ρ}, c = 1/4: φ = log(ρ/r)^{1/2}.
        let rho = 3.0;
        let p = OdeProblem::new(
            3,
            pot(PotentialSpec::one()),
            pot(PotentialSpec::LogChain { k: 1, rho }),
            0.25,
            1.0,
            OdeDim::TwoD,
        )
        .unwrap();
        let got = theta(&p).unwrap();
        let want = -1.0 / (2.0 * rho.ln());
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn two_d_equals_n_dim_at_two() {
        let w = PotentialSpec::Sum {
            terms: vec![PotentialSpec::one(), PotentialSpec::power(0.4)],
        };
        let a = OdeProblem::new(
            7,
            pot(PotentialSpec::one()),
            pot(w.clone()),
            2.0,
            1.0,
            OdeDim::TwoD,
        )
        .unwrap();
        let b =
            OdeProblem::new(2, pot(PotentialSpec::one()), pot(w), 2.0, 1.0, OdeDim::NDim).unwrap();
        let ta = shoot_from_origin(&a, &ShootOptions::default()).unwrap();
        let tb = shoot_from_origin(&b, &ShootOptions::default()).unwrap();
        assert_eq!(ta.y, tb.y);
        assert_eq!(ta.end_ratio, tb.end_ratio);
    }

    #[test]
    fn residual_on_fine_grid() {
        let p = problem(
            4,
            PotentialSpec::power(0.3),
            PotentialSpec::Sum {
                terms: vec![PotentialSpec::one(), PotentialSpec::power(0.8)],
            },
            3.0,
        );
        let opts = ShootOptions {
            max_step: 2e-3,
            ..Default::default()
        };
        let tr = shoot_from_origin(&p, &opts).unwrap();
        let g = &tr.grid;
        let mut worst: f64 = 0.0;
        for i in 1..g.len() - 1 {
            let r = g[i];
            if r < 1e-3 {
                continue;
            }
            let (h0, h1) = (g[i] - g[i - 1], g[i + 1] - g[i]);
            let ypp = (tr.yp[i + 1] - tr.yp[i - 1]) / (h0 + h1);
            let res = ypp + p.rp(r) / r * tr.yp[i] + p.r2q(r) / (r * r) * tr.y[i];
            let scale =
                ypp.abs() + (p.rp(r) / r * tr.yp[i]).abs() + (p.r2q(r) / (r * r) * tr.y[i]).abs();
            worst = worst.max(res.abs() / scale);
        }
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn step_collapse_reports_radius() {
        // A potential with a pole inside the ball.
        let w = RadialPotential::custom(
            |r| crate::jet::Jet::var(r - 0.5).powi(-2).scale(1.0),
            1.0,
            0.0,
            4.0,
            "pole",
        );
        let p =
            OdeProblem::unchecked(3, pot(PotentialSpec::one()), w, 1.0, 1.0, OdeDim::NDim).unwrap();
        match shoot_from_origin(&p, &ShootOptions::default()) {
            Err(Error::StepCollapse { radius }) => assert!((radius - 0.5).abs() < 1e-2, "{radius}"),
            Ok(t) => assert!(t.first_zero.is_some_and(|z| z < 0.5)),
            Err(e) => panic!("{e}"),
        }
    }
}
