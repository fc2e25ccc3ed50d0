//! The weight `β(V, W; R) = sup{c : (V, cW) is a Bessel pair on B_R}`.
//!
//! Oscillation of the shot solution is monotone in `c` (Sturm), so `β` is the
//! threshold of a yes/no predicate and is bracketed by bisection. The search
//! runs in the normalised variable `κ = c W(R)/V(R)`, which makes the result
//! covariant under rescaling of either weight.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inequality::{hardy_deficit, DeficitReport, TestFunction};
use crate::potentials::RadialPotential;
use crate::radial_ode::{
    shoot_from_origin, theta_with, OdeDim, OdeProblem, ShootOptions, Trajectory,
};
use crate::roots::bisect_predicate;

/// Doubling/halving stops after this many factors of two from `κ = 1`.
pub const SEARCH_OCTAVES: i32 = 40;

#[derive(Debug, Clone, Copy)]
pub struct WeightOptions {
    pub rel_tol: f64,
    pub convention: OdeDim,
    pub shoot: ShootOptions,
    /// Use `β = 1/4` for constant `V` and chain `W` under the planar
    /// operator, where shooting from a finite radius cannot see the
    /// iterated-log oscillation.
    pub closed_form_chains: bool,
}

impl Default for WeightOptions {
    fn default() -> Self {
        WeightOptions {
            rel_tol: 1e-8,
            convention: OdeDim::NDim,
            shoot: ShootOptions {
                stop_at_zero: true,
                ..ShootOptions::default()
            },
            closed_form_chains: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Positive { boundary_degenerate: bool },
    SignChange { radius: f64 },
    ComplexExponents { discriminant: f64 },
}

/// Evidence for the pair verdict at one value of `c`.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub c: f64,
    #[serde(flatten)]
    pub verdict: Verdict,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

impl Certificate {
    pub fn positive(&self) -> bool {
        matches!(self.verdict, Verdict::Positive { .. })
    }
}

fn certify(p: &OdeProblem, shoot: &ShootOptions) -> Result<Certificate> {
    let opts = ShootOptions {
        stop_at_zero: true,
        ..*shoot
    };
    match shoot_from_origin(p, &opts) {
        Ok(tr) => {
            let verdict = match tr.first_zero {
                Some(radius) => Verdict::SignChange { radius },
                None => Verdict::Positive {
                    boundary_degenerate: tr.boundary_degenerate,
                },
            };
            Ok(Certificate {
                c: p.c,
                verdict,
                trajectory: Some(tr),
            })
        }
        Err(Error::ComplexExponents { discriminant, .. }) => Ok(Certificate {
            c: p.c,
            verdict: Verdict::ComplexExponents { discriminant },
            trajectory: None,
        }),
        Err(e) => Err(e),
    }
}

/// Whether `(V, cW)` is a Bessel pair on `(0, R)`: the dominant solution
/// from the origin has no sign change before `R`.
pub fn is_bessel_pair(
    v: &RadialPotential,
    w: &RadialPotential,
    n: u32,
    r: f64,
    c: f64,
    opts: &WeightOptions,
) -> Result<Certificate> {
    let p = OdeProblem::new(n, v.clone(), w.clone(), c, r, opts.convention)?;
    certify(&p, &opts.shoot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMethod {
    Bisection,
    ClosedForm,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightResult {
    /// Midpoint of the final bracket; `+∞` when no oscillating `c` exists.
    pub beta: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// Shots including the doubling/halving search.
    pub shots: usize,
    pub theta_at_beta: Option<f64>,
    /// The `c` at which `theta_at_beta` was evaluated.
    pub theta_c: Option<f64>,
    pub unbounded: bool,
    /// `β` equals the value where the indicial exponents at the origin merge.
    pub origin_limited: bool,
    pub method: WeightMethod,
    pub lo: Option<Certificate>,
    pub hi: Option<Certificate>,
}

impl WeightResult {
    fn unbounded(lo: Option<Certificate>, shots: usize, theta: Option<f64>) -> Self {
        let c_lo = lo.as_ref().map_or(0.0, |c| c.c);
        WeightResult {
            beta: f64::INFINITY,
            bracket: (c_lo, f64::INFINITY),
            iterations: 0,
            shots,
            theta_at_beta: theta,
            theta_c: None,
            unbounded: true,
            origin_limited: false,
            method: WeightMethod::Bisection,
            lo,
            hi: None,
        }
    }
}

/// Compute `β(V, W; R)` with relative bracket width `opts.rel_tol`.
pub fn weight(
    v: &RadialPotential,
    w: &RadialPotential,
    n: u32,
    r: f64,
    opts: &WeightOptions,
) -> Result<WeightResult> {
    if !(opts.rel_tol > 0.0 && opts.rel_tol < 0.1) {
        return Err(Error::InvalidParameter(format!(
            "rel_tol must be in (0, 0.1), got {}",
            opts.rel_tol
        )));
    }
    let base = OdeProblem::new(n, v.clone(), w.clone(), 0.0, r, opts.convention)?;
    if w.is_zero() {
        let cert = certify(&base, &opts.shoot)?;
        let theta = cert
            .trajectory
            .as_ref()
            .and_then(|t| t.end_ratio)
            .map(|e| v.value(r) * e);
        return Ok(WeightResult::unbounded(Some(cert), 1, theta));
    }
    if opts.closed_form_chains {
        if let Some(res) = chain_closed_form(&base, n)? {
            return Ok(res);
        }
    }

    let unit = {
        let u = v.value(r) / w.value(r);
        if u.is_finite() && u > 0.0 {
            u
        } else {
            1.0
        }
    };
    let mut shots = 0usize;
    let mut lo_cert: Option<Certificate> = None;
    let mut hi_cert: Option<Certificate> = None;
    let mut probe = |kappa: f64,
                     lo_cert: &mut Option<Certificate>,
                     hi_cert: &mut Option<Certificate>|
     -> Result<bool> {
        shots += 1;
        let cert = certify(&base.with_c(kappa * unit), &opts.shoot)?;
        let ok = cert.positive();
        if ok {
            *lo_cert = Some(cert);
        } else {
            *hi_cert = Some(cert);
        }
        Ok(ok)
    };

    let (mut klo, mut khi) = (1.0f64, 1.0f64);
    if probe(1.0, &mut lo_cert, &mut hi_cert)? {
        let mut found = false;
        for _ in 0..SEARCH_OCTAVES {
            khi = 2.0 * klo;
            if probe(khi, &mut lo_cert, &mut hi_cert)? {
                klo = khi;
            } else {
                found = true;
                break;
            }
        }
        if !found {
            let theta = lo_cert
                .as_ref()
                .and_then(|c| c.trajectory.as_ref())
                .and_then(|t| t.end_ratio)
                .map(|e| v.value(r) * e);
            return Ok(WeightResult::unbounded(lo_cert, shots, theta));
        }
    } else {
        let mut found = false;
        for _ in 0..SEARCH_OCTAVES {
            klo = 0.5 * khi;
            if probe(klo, &mut lo_cert, &mut hi_cert)? {
                found = true;
                break;
            }
            khi = klo;
        }
        if !found {
            return Err(Error::NeverPositive { c_min: klo * unit });
        }
    }

    let ((klo, khi), iterations) = bisect_predicate(
        |k| probe(k, &mut lo_cert, &mut hi_cert),
        klo,
        khi,
        opts.rel_tol,
        200,
    )?;
    let (c_lo, c_hi) = (klo * unit, khi * unit);
    let beta = 0.5 * (c_lo + c_hi);

    // θ at β: at the origin-critical value the exponents merge and θ depends
    // on c like sqrt(c* - c), so it is evaluated exactly there.
    let mut origin_limited = false;
    let mut theta_c = beta * (1.0 - 10.0 * opts.rel_tol);
    let ind = base.indicial()?;
    let w2 = base.w_minus2()?;
    if w2 > 0.0 {
        let c_star = ((ind.p0 - 1.0) / 2.0).powi(2) / w2;
        if c_star >= c_lo * (1.0 - 1e-12) && c_star <= c_hi * (1.0 + 1e-12) {
            origin_limited = true;
            theta_c = c_star;
        }
    }
    let theta = theta_with(&base.with_c(theta_c), &opts.shoot).ok();
    Ok(WeightResult {
        beta,
        bracket: (c_lo, c_hi),
        iterations,
        shots,
        theta_at_beta: theta,
        theta_c: Some(theta_c),
        unbounded: false,
        origin_limited,
        method: WeightMethod::Bisection,
        lo: lo_cert,
        hi: hi_cert,
    })
}

/// `β = V/(4f)` for `V` constant, `W = f·(chain)`, and the planar operator.
fn chain_closed_form(base: &OdeProblem, n: u32) -> Result<Option<WeightResult>> {
    let (Some(v), Some(f)) = (base.v.constant_value(), base.w.chain_factor()) else {
        return Ok(None);
    };
    if base.d() != 1.0 || !(f > 0.0) {
        return Ok(None);
    }
    let beta = v / (4.0 * f);
    let phi = base.w.candidate_phi(n)?;
    let theta = v * phi.end_ratio() / base.r;
    let lo = certify(&base.with_c(beta), &base_shoot())?;
    Ok(Some(WeightResult {
        beta,
        bracket: (beta, beta),
        iterations: 0,
        shots: 1,
        theta_at_beta: Some(theta),
        theta_c: Some(beta),
        unbounded: false,
        origin_limited: true,
        method: WeightMethod::ClosedForm,
        lo: Some(lo),
        hi: None,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceOutcome {
    /// Pair, and every deficit is nonnegative.
    Consistent,
    /// Not a pair, and some test function violates the inequality.
    ViolatorFound,
    /// Pair with a negative deficit, or no violator for a non-pair.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub c: f64,
    pub pair: bool,
    /// Boundary coefficient used in the inequality.
    pub theta: Option<f64>,
    /// The `c` at which `theta` was evaluated.
    pub theta_c: Option<f64>,
    pub outcome: EquivalenceOutcome,
    pub violator: Option<String>,
    pub reports: Vec<DeficitReport>,
}

/// Check that `(V, cW)` is a Bessel pair exactly when the Hardy inequality
/// with weight `cW` holds on the suite.
///
/// For a pair, `θ` comes from the positive solution at `c` and every deficit
/// must be nonnegative. Otherwise `θ` is taken from the largest certified
/// sub-critical multiplier, and the suite is extended by an oscillating
/// solution at a multiplier between `β` and `c`, cut at its first zero,
/// whose deficit is `(c' - c)∫Wu² < 0`.
pub fn verify_pair_equivalence(
    v: &RadialPotential,
    w: &RadialPotential,
    n: u32,
    r: f64,
    c: f64,
    suite: &[TestFunction],
    opts: &WeightOptions,
) -> Result<EquivalenceReport> {
    let cert = is_bessel_pair(v, w, n, r, c, opts)?;
    let pair = cert.positive();
    let cw = RadialPotential::scaled(c, w.clone());
    let mut extra: Vec<TestFunction> = Vec::new();
    let (theta_val, theta_c) = if pair {
        let p = OdeProblem::new(n, v.clone(), w.clone(), c, r, opts.convention)?;
        match theta_with(&p, &opts.shoot) {
            Ok(t) => (Some(t), Some(c)),
            Err(_) if c > 0.0 => {
                let c2 = c * (1.0 - 1e-6);
                (Some(theta_with(&p.with_c(c2), &opts.shoot)?), Some(c2))
            }
            Err(e) => return Err(e),
        }
    } else {
        let wr = weight(v, w, n, r, opts)?;
        let c_osc = if c > wr.bracket.1 {
            0.5 * (wr.bracket.1 + c)
        } else {
            wr.bracket.1
        };
        let p = OdeProblem::new(n, v.clone(), w.clone(), c_osc, r, opts.convention)?;
        let shoot = ShootOptions {
            stop_at_zero: true,
            max_step: 0.02,
            ..opts.shoot
        };
        if let Ok(tr) = shoot_from_origin(&p, &shoot) {
            if let Some(z) = tr.first_zero {
                extra.push(TestFunction::from_trajectory(
                    format!("oscillating solution (c={c_osc:.6})"),
                    &tr,
                    r,
                    Some(z),
                ));
            }
        }
        (wr.theta_at_beta, wr.theta_c)
    };
    let th = theta_val.unwrap_or(0.0);
    let reports = suite
        .iter()
        .chain(extra.iter())
        .map(|u| hardy_deficit(v, &cw, th, u, n))
        .collect::<Result<Vec<_>>>()?;
    let violator = reports
        .iter()
        .find(|d| d.deficit < -10.0 * d.quad_error)
        .map(|d| d.function.clone());
    let outcome = match (pair, violator.is_some()) {
        (true, false) => EquivalenceOutcome::Consistent,
        (false, true) => EquivalenceOutcome::ViolatorFound,
        _ => EquivalenceOutcome::Inconclusive,
    };
    Ok(EquivalenceReport {
        c,
        pair,
        theta: theta_val,
        theta_c,
        outcome,
        violator,
        reports,
    })
}

fn base_shoot() -> ShootOptions {
    ShootOptions {
        stop_at_zero: true,
        ..ShootOptions::default()
    }
}
