//! Both sides of the Hardy, Hardy–Rellich and improved Rellich inequalities
//! evaluated on explicit test functions.
//!
//! A test function is a finite sum `u = Σ f_k(|x|) φ_k(x/|x|)` of spherical
//! harmonic modes. Every quadratic form is diagonal in `k`, so each side is
//! a sum of one-dimensional weighted integrals, computed with the graded
//! log-mesh rules of [`crate::quadrature`]. Harmonics are normalised so that
//! `∫_{S^{n-1}} φ_k² = nω_n`, which makes a radial `u` (`φ_0 = 1`) the
//! ordinary radial function.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bessel_weight::{weight, WeightOptions};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::potentials::{default_probe_radii, lambda_limit, RadialPotential};
use crate::quadrature::{integrable_at_origin, integrate_radial, Integral, LogMesh};
use crate::radial_ode::{theta, OdeDim, OdeProblem, Trajectory};
use crate::special::mu_for_dimension;
use crate::spectral::{self, a_nm_closed, c_k, c_n, h_nm, ModeSolution};

/// Volume of the unit ball in `R^n`.
pub fn omega(n: u32) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => omega(n - 2) * 2.0 * PI / n as f64,
    }
}

/// `|S^{n-1}| = nω_n`.
pub fn sphere_area(n: u32) -> f64 {
    n as f64 * omega(n)
}

/// Radial profile `r -> (f, f', f'')`.
#[derive(Clone)]
pub struct Profile {
    f: Arc<dyn Fn(f64) -> Jet + Send + Sync>,
}

impl Profile {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> Jet + Send + Sync + 'static,
    {
        Profile { f: Arc::new(f) }
    }

    /// Profile written as a function of the jet variable `r`.
    pub fn from_jet<F>(f: F) -> Self
    where
        F: Fn(Jet) -> Jet + Send + Sync + 'static,
    {
        Profile::new(move |r| f(Jet::var(r)))
    }

    pub fn eval(&self, r: f64) -> Jet {
        (self.f)(r)
    }

    fn scaled(&self, a: f64) -> Self {
        let f = self.f.clone();
        Profile::new(move |r| f(r).scale(a))
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Profile")
    }
}

#[derive(Debug, Clone)]
pub struct Mode {
    pub k: u32,
    pub profile: Profile,
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    pub label: String,
    pub r: f64,
    pub modes: Vec<Mode>,
    /// Extra mesh breakpoints (kinks, support edges).
    pub knots: Vec<f64>,
    /// Lower end of the mesh; the rest is a power-law tail.
    pub r_min: f64,
    pub per_decade: usize,
}

impl TestFunction {
    pub fn new(label: impl Into<String>, r: f64, modes: Vec<(u32, Profile)>) -> Self {
        TestFunction {
            label: label.into(),
            r,
            modes: modes
                .into_iter()
                .map(|(k, profile)| Mode { k, profile })
                .collect(),
            knots: Vec::new(),
            r_min: 1e-9 * r,
            per_decade: 20,
        }
    }

    pub fn radial(label: impl Into<String>, r: f64, profile: Profile) -> Self {
        Self::new(label, r, vec![(0, profile)])
    }

    pub fn with_knots(mut self, knots: &[f64]) -> Self {
        self.knots.extend_from_slice(knots);
        self
    }

    /// Start the mesh at `r_min` (the profile vanishes below it or follows a power law).
    pub fn with_mesh_start(mut self, r_min: f64) -> Self {
        self.r_min = r_min;
        self
    }

    /// Same function on a mesh with twice as many elements.
    pub fn refined(&self) -> Self {
        let mut out = self.clone();
        out.per_decade *= 2;
        out
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        for m in &mut out.modes {
            m.profile = m.profile.scaled(a);
        }
        out
    }

    /// The `i`-th mode on its own.
    pub fn single_mode(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.modes = vec![self.modes[i].clone()];
        out.label = format!("{}[k={}]", self.label, self.modes[i].k);
        out
    }

    pub fn is_radial(&self) -> bool {
        self.modes.iter().all(|m| m.k == 0)
    }

    fn scale_estimate(&self, m: &Mode) -> f64 {
        (1..=16)
            .map(|i| m.profile.eval(self.r * i as f64 / 16.0).v.abs())
            .fold(0.0, f64::max)
    }

    /// Whether every mode vanishes at `R` (so `u ∈ H¹_0`).
    pub fn vanishes_on_boundary(&self) -> bool {
        self.modes
            .iter()
            .all(|m| m.profile.eval(self.r).v.abs() <= 1e-12 * (1.0 + self.scale_estimate(m)))
    }

    /// Whether all modes with `k >= 1` vanish at `R`.
    pub fn higher_modes_vanish(&self) -> bool {
        self.modes
            .iter()
            .filter(|m| m.k >= 1)
            .all(|m| m.profile.eval(self.r).v.abs() <= 1e-12 * (1.0 + self.scale_estimate(m)))
    }

    /// Sampled check of `f_k = O(r^k)` at the origin.
    pub fn check_orders(&self) -> Result<()> {
        for m in &self.modes {
            let ratio = |r: f64| m.profile.eval(r).v.abs() / r.powi(m.k as i32);
            let (near, far) = (ratio(1e-6 * self.r), ratio(1e-3 * self.r));
            if !(near <= 10.0 * far + 1e-300) && near.is_finite() {
                return Err(Error::Hypothesis(format!(
                    "{}: mode k={} is not O(r^{}) at the origin",
                    self.label, m.k, m.k
                )));
            }
            if !near.is_finite() {
                return Err(Error::Hypothesis(format!(
                    "{}: mode k={} is singular",
                    self.label, m.k
                )));
            }
        }
        Ok(())
    }

    fn mesh(&self) -> LogMesh {
        let mut mesh = LogMesh::new(self.r_min, self.r).with_knots(&self.knots);
        mesh.per_decade = self.per_decade;
        mesh
    }

    /// Hermite interpolant (in `log r`) of a shooting trajectory, extended
    /// below its first point by the local power law and cut to zero beyond
    /// `truncate`.
    pub fn from_trajectory(
        label: impl Into<String>,
        traj: &Trajectory,
        r: f64,
        truncate: Option<f64>,
    ) -> Self {
        let t: Vec<f64> = traj.grid.iter().map(|x| x.ln()).collect();
        let y = traj.y.clone();
        let yt: Vec<f64> = traj.grid.iter().zip(&traj.yp).map(|(x, d)| x * d).collect();
        let cut = truncate
            .unwrap_or(f64::INFINITY)
            .min(*traj.grid.last().unwrap());
        let sigma0 = yt[0] / y[0];
        let (r0, y0) = (traj.grid[0], y[0]);
        let tt = t.clone();
        let f = move |x: f64| {
            if x > cut {
                return Jet::constant(0.0);
            }
            if x <= r0 {
                let v = y0 * (x / r0).powf(sigma0);
                return Jet::new(v, sigma0 * v / x, sigma0 * (sigma0 - 1.0) * v / (x * x));
            }
            let s = x.ln();
            let i = tt.partition_point(|&a| a <= s).clamp(1, tt.len() - 1) - 1;
            let h = tt[i + 1] - tt[i];
            let xi = (s - tt[i]) / h;
            let (bh, bd, bdd) = spectral::hermite(xi, h);
            let dof = [y[i], yt[i], y[i + 1], yt[i + 1]];
            let (mut v, mut vt, mut vtt) = (0.0, 0.0, 0.0);
            for j in 0..4 {
                v += bh[j] * dof[j];
                vt += bd[j] * dof[j];
                vtt += bdd[j] * dof[j];
            }
            Jet::new(v, vt / x, (vtt - vt) / (x * x))
        };
        let mut knots: Vec<f64> = traj.grid.iter().cloned().filter(|&x| x < cut).collect();
        if cut < r {
            knots.push(cut);
        }
        TestFunction::radial(label, r, Profile::new(f))
            .with_knots(&knots)
            .with_mesh_start(traj.grid[0])
    }

    /// Minimiser of a spectral mode problem as a test function on the unit ball.
    pub fn from_mode_solution(label: impl Into<String>, sol: &ModeSolution) -> Self {
        let s = sol.clone();
        let f = move |x: f64| {
            let (v, d, dd) = s.profile(x);
            Jet::new(v, d, dd)
        };
        let knots: Vec<f64> = sol.t.iter().map(|t| t.exp()).collect();
        let start = knots[0];
        let mut u =
            TestFunction::new(label, 1.0, vec![(sol.k, Profile::new(f))]).with_knots(&knots);
        if sol.antiderivative.is_none() {
            u = u.with_mesh_start(start);
        }
        u
    }
}

/// Quadrature helpers for the mode-wise forms, scaled by `nω_n`.
struct Forms<'a> {
    u: &'a TestFunction,
    n: u32,
}

impl<'a> Forms<'a> {
    fn sum_modes(&self, what: &str, g: impl Fn(&Mode, f64, Jet, f64) -> f64) -> Result<Integral> {
        let area = sphere_area(self.n);
        let nm1 = self.n as i32 - 1;
        let mesh = self.u.mesh();
        let mut total = Integral {
            value: 0.0,
            error: 0.0,
        };
        for m in &self.u.modes {
            let ck = c_k(self.n, m.k);
            let i = integrate_radial(|r| g(m, r, m.profile.eval(r), ck) * r.powi(nm1), &mesh)
                .map_err(|e| match e {
                    Error::Divergent(d) => {
                        Error::Divergent(format!("{what} for mode k={}: {d}", m.k))
                    }
                    e => e,
                })?;
            total.value += area * i.value;
            total.error += area * i.error;
        }
        Ok(total)
    }

    /// `∫ g u²`.
    fn mass(&self, what: &str, g: impl Fn(f64) -> f64) -> Result<Integral> {
        self.sum_modes(what, |_, r, f, _| g(r) * f.v * f.v)
    }

    /// `∫ g |∇u|²`.
    fn grad(&self, what: &str, g: impl Fn(f64) -> f64) -> Result<Integral> {
        self.sum_modes(what, |_, r, f, ck| {
            g(r) * (f.d * f.d + ck * f.v * f.v / (r * r))
        })
    }

    /// `∫ g |Δu|²`.
    fn laplace(&self, what: &str, g: impl Fn(f64) -> f64) -> Result<Integral> {
        let d = self.n as f64 - 1.0;
        self.sum_modes(what, |_, r, f, ck| {
            let l = f.dd + d * f.d / r - ck * f.v / (r * r);
            g(r) * l * l
        })
    }

    /// `∫_{∂B} u²`.
    fn boundary_mass(&self) -> f64 {
        let r = self.u.r;
        sphere_area(self.n)
            * r.powi(self.n as i32 - 1)
            * self
                .u
                .modes
                .iter()
                .map(|m| m.profile.eval(r).v.powi(2))
                .sum::<f64>()
    }

    /// `∫_{∂B} |∇u|²`.
    fn boundary_grad(&self) -> f64 {
        let r = self.u.r;
        let s: f64 = self
            .u
            .modes
            .iter()
            .map(|m| {
                let f = m.profile.eval(r);
                f.d * f.d + c_k(self.n, m.k) * f.v * f.v / (r * r)
            })
            .sum();
        sphere_area(self.n) * r.powi(self.n as i32 - 1) * s
    }

    /// `Σ_k nω_n f_k'(R)²`.
    fn boundary_radial_slopes(&self) -> f64 {
        sphere_area(self.n)
            * self
                .u
                .modes
                .iter()
                .map(|m| m.profile.eval(self.u.r).d.powi(2))
                .sum::<f64>()
    }
}

/// Both sides of one inequality on one test function.
#[derive(Debug, Clone, Serialize)]
pub struct DeficitReport {
    pub inequality: String,
    pub function: String,
    pub n: u32,
    pub lhs: f64,
    pub rhs_terms: BTreeMap<String, f64>,
    /// `lhs - Σ rhs_terms`.
    pub deficit: f64,
    pub quad_error: f64,
    /// Hypotheses of the inequality that the inputs do not satisfy.
    pub notes: Vec<String>,
    /// Deficits under alternative readings of the boundary terms or constants.
    pub alternatives: BTreeMap<String, f64>,
}

impl DeficitReport {
    pub fn rhs(&self) -> f64 {
        self.rhs_terms.values().sum()
    }

    pub fn within_hypotheses(&self) -> bool {
        self.notes.is_empty()
    }

    /// `deficit >= -factor · quad_error`.
    pub fn holds(&self, factor: f64) -> bool {
        self.deficit >= -factor * self.quad_error
    }
}

struct Builder {
    inequality: String,
    function: String,
    n: u32,
    lhs: Integral,
    terms: Vec<(String, f64, Integral)>,
    notes: Vec<String>,
    alternatives: BTreeMap<String, f64>,
}

impl Builder {
    fn new(inequality: &str, u: &TestFunction, n: u32, lhs: Integral) -> Self {
        Builder {
            inequality: inequality.into(),
            function: u.label.clone(),
            n,
            lhs,
            terms: Vec::new(),
            notes: Vec::new(),
            alternatives: BTreeMap::new(),
        }
    }

    fn term(&mut self, name: &str, coef: f64, i: Integral) -> &mut Self {
        self.terms.push((name.into(), coef, i));
        self
    }

    fn exact(&mut self, name: &str, value: f64) -> &mut Self {
        self.term(name, 1.0, Integral { value, error: 0.0 })
    }

    fn note(&mut self, cond: bool, text: impl Into<String>) -> &mut Self {
        if cond {
            self.notes.push(text.into());
        }
        self
    }

    fn deficit(&self) -> f64 {
        self.lhs.value - self.terms.iter().map(|(_, c, i)| c * i.value).sum::<f64>()
    }

    /// Deficit with the named term replaced by `value`.
    fn alternative(&mut self, name: &str, replace: &str, value: f64) -> &mut Self {
        let base = self.deficit();
        let old: f64 = self
            .terms
            .iter()
            .filter(|t| t.0 == replace)
            .map(|(_, c, i)| c * i.value)
            .sum();
        self.alternatives.insert(name.into(), base + old - value);
        self
    }

    fn finish(self) -> DeficitReport {
        let deficit = self.deficit();
        let size = self.lhs.value.abs()
            + self
                .terms
                .iter()
                .map(|(_, c, i)| (c * i.value).abs())
                .sum::<f64>();
        let quad_error = self.lhs.error
            + self
                .terms
                .iter()
                .map(|(_, c, i)| c.abs() * i.error)
                .sum::<f64>()
            + 1e-12 * size;
        DeficitReport {
            inequality: self.inequality,
            function: self.function,
            n: self.n,
            lhs: self.lhs.value,
            rhs_terms: self
                .terms
                .into_iter()
                .map(|(k, c, i)| (k, c * i.value))
                .collect(),
            deficit,
            quad_error,
            notes: self.notes,
            alternatives: self.alternatives,
        }
    }
}

fn check_radius(u: &TestFunction, pots: &[&RadialPotential]) -> Result<()> {
    for p in pots {
        if p.r_max() < u.r * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "potential `{}` is defined on (0, {}] but the test function lives on (0, {}]",
                p.label(),
                p.r_max(),
                u.r
            )));
        }
    }
    Ok(())
}

/// `∫V|∇u|² ≥ ∫W u² + θ ∫_{∂B} u²`.
pub fn hardy_deficit(
    v: &RadialPotential,
    w: &RadialPotential,
    theta: f64,
    u: &TestFunction,
    n: u32,
) -> Result<DeficitReport> {
    check_radius(u, &[v, w])?;
    let forms = Forms { u, n };
    let mut b = Builder::new("hardy", u, n, forms.grad("∫V|∇u|²", |r| v.value(r))?);
    b.term("weight", 1.0, forms.mass("∫Wu²", |r| w.value(r))?);
    b.exact("boundary", theta * forms.boundary_mass());
    Ok(b.finish())
}

/// `∫V|Δu|² ≥ ∫W|∇u|² + (n-1)∫(V/r² - V_r/r)|∇u|² + boundary`.
///
/// The boundary term is assembled mode by mode,
/// `Σ_k nω_n [(n-1)V(R)R^{n-2} + θR^{n-1}] f_k'(R)²`. The alternatives
/// record the deficit with `(θ + (n-1)V(R)/R)∫_{∂B}|∇u|²`, with the literal
/// coefficient `(θ + (n-1)V(R))`, and with no boundary term at all.
pub fn hardy_rellich_deficit(
    v: &RadialPotential,
    w: &RadialPotential,
    u: &TestFunction,
    n: u32,
    theta: f64,
) -> Result<DeficitReport> {
    check_radius(u, &[v, w])?;
    let forms = Forms { u, n };
    let nm1 = n as f64 - 1.0;
    let r = u.r;
    let vr = v.value(r);
    let name = if u.is_radial() {
        "hardy-rellich-radial"
    } else {
        "hardy-rellich"
    };
    let mut b = Builder::new(name, u, n, forms.laplace("∫V|Δu|²", |x| v.value(x))?);
    b.term(
        "weight_gradient",
        1.0,
        forms.grad("∫W|∇u|²", |x| w.value(x))?,
    );
    b.term(
        "potential_gradient",
        nm1,
        forms.grad("∫(V/r²-V_r/r)|∇u|²", |x| {
            let j = v.jet(x);
            j.v / (x * x) - j.d / x
        })?,
    );
    let modewise = (nm1 * vr * r.powi(n as i32 - 2) + theta * r.powi(n as i32 - 1))
        * forms.boundary_radial_slopes();
    b.exact("boundary", modewise);
    let grad_b = forms.boundary_grad();
    b.alternative(
        "boundary_aggregate",
        "boundary",
        (theta + nm1 * vr / r) * grad_b,
    );
    b.alternative(
        "boundary_as_printed",
        "boundary",
        (theta + nm1 * vr) * grad_b,
    );
    b.alternative("without_boundary", "boundary", 0.0);
    if !u.is_radial() {
        let cond = spectral::check_condition_main(v, w, n, r);
        b.note(
            !cond.holds,
            format!(
                "pointwise condition fails (min scaled value {:.3e})",
                cond.min_scaled
            ),
        );
        b.note(
            cond.boundary_holds == Some(false),
            "boundary condition (n-1+Rφ'/φ)V(R) >= 0 fails",
        );
        b.note(
            !u.higher_modes_vanish(),
            "modes with k >= 1 do not vanish on the boundary",
        );
    }
    Ok(b.finish())
}

/// A weight `W` for the planar equation `φ'' + φ'/r + cWφ = 0` together with
/// the multiplier used in an improved inequality.
#[derive(Debug, Clone)]
pub struct BesselPotential {
    pub w: RadialPotential,
    pub r: f64,
    /// `β(W;R)`; infinite for `W ≡ 0`.
    pub beta: f64,
    /// Multiplier of `W` in the inequality.
    pub coefficient: f64,
    /// `R φ'(R)/φ(R)` at `coefficient`.
    pub end_ratio: f64,
    /// The boundary requirement forced `coefficient < beta`.
    pub limited: bool,
}

impl BesselPotential {
    pub fn zero(r: f64) -> Self {
        BesselPotential {
            w: RadialPotential::zero(r),
            r,
            beta: f64::INFINITY,
            coefficient: 0.0,
            end_ratio: 0.0,
            limited: false,
        }
    }

    /// Trusted multiplier and boundary ratio (closed forms).
    pub fn with_coefficient(
        w: RadialPotential,
        r: f64,
        beta: f64,
        coefficient: f64,
        end_ratio: f64,
    ) -> Self {
        BesselPotential {
            w,
            r,
            beta,
            coefficient,
            end_ratio,
            limited: coefficient < beta,
        }
    }

    /// Compute `β(W;R)` and the largest multiplier `c <= β` whose solution
    /// satisfies `R φ_c'(R)/φ_c(R) >= target`.
    pub fn new(w: RadialPotential, r: f64, target: Option<f64>) -> Result<Self> {
        if w.is_zero() {
            return Ok(Self::zero(r));
        }
        let one = RadialPotential::constant(1.0, w.r_max());
        let opts = WeightOptions {
            convention: OdeDim::TwoD,
            ..WeightOptions::default()
        };
        let wr = weight(&one, &w, 2, r, &opts)?;
        if wr.unbounded {
            return Err(Error::Hypothesis(format!(
                "`{}` has unbounded weight",
                w.label()
            )));
        }
        let beta = wr.beta;
        let ratio = |c: f64| -> Result<f64> {
            let p = OdeProblem::new(2, one.clone(), w.clone(), c, r, OdeDim::TwoD)?;
            Ok(r * theta(&p)?)
        };
        let at_beta = wr.theta_at_beta.map(|t| r * t).unwrap_or(f64::NEG_INFINITY);
        let target = match target {
            Some(t) if at_beta < t => t,
            _ => {
                return Ok(BesselPotential {
                    w,
                    r,
                    beta,
                    coefficient: beta,
                    end_ratio: at_beta,
                    limited: false,
                });
            }
        };
        if target > 0.0 {
            return Err(Error::Hypothesis(format!(
                "boundary ratio target {target} is not attainable"
            )));
        }
        let (mut lo, mut hi) = (0.0, beta);
        while hi - lo > 1e-12 * beta {
            let mid = 0.5 * (lo + hi);
            match ratio(mid) {
                Ok(q) if q >= target => lo = mid,
                _ => hi = mid,
            }
        }
        let end_ratio = if lo > 0.0 { ratio(lo)? } else { 0.0 };
        Ok(BesselPotential {
            w,
            r,
            beta,
            coefficient: lo,
            end_ratio,
            limited: true,
        })
    }

    /// `λ = -lim r W_r/W`.
    pub fn lambda(&self) -> Result<f64> {
        if self.w.is_zero() {
            return Ok(0.0);
        }
        Ok(lambda_limit(&self.w, &default_probe_radii(self.r))?.lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `∫|Δu|² - n²(n-4)²/16 ∫u²/r⁴ ≥ (n²/4 + (n-λ-2)²/4) β ∫W u²/r²`.
    Rellich,
    /// Weighted version with `|x|^{-2m}` and `H_{n,m}`.
    GeneralRellich,
    /// Log-chain example with the factor `1 + n(n-4)/8`.
    LogChainRellich,
    /// Two Bessel potentials and the `μ` terms.
    TwoPotentials,
    /// `H_0^1` improvement `μ²/R² ∫|∇u|²`.
    H1Improved,
    /// `∫|Δu|² ≥ C(n)∫|∇u|²/r² + β∫W|∇u|²`.
    GradientImproved,
    /// `∫|Δu|²/r^{2m} ≥ a_{n,m}∫|∇u|²/r^{2m+2} + β∫W|∇u|²/r^{2m}`.
    WeightedGradient,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Rellich,
        Variant::GeneralRellich,
        Variant::LogChainRellich,
        Variant::TwoPotentials,
        Variant::H1Improved,
        Variant::GradientImproved,
        Variant::WeightedGradient,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Rellich => "rellich",
            Variant::GeneralRellich => "general-rellich",
            Variant::LogChainRellich => "log-chain-rellich",
            Variant::TwoPotentials => "two-potentials",
            Variant::H1Improved => "h1-improved",
            Variant::GradientImproved => "gradient-improved",
            Variant::WeightedGradient => "weighted-gradient",
        }
    }

    /// Lower bound on `R φ'(R)/φ(R)` required of the Bessel potential.
    pub fn boundary_target(&self, n: u32, m: f64) -> Option<f64> {
        let h = n as f64 / 2.0;
        match self {
            Variant::Rellich | Variant::LogChainRellich | Variant::GradientImproved => Some(-h),
            Variant::GeneralRellich | Variant::WeightedGradient => Some(-h - m),
            Variant::TwoPotentials | Variant::H1Improved => None,
        }
    }

    /// Whether the inequality is stated on `H² ∩ H¹_0`.
    pub fn needs_dirichlet(&self) -> bool {
        !matches!(self, Variant::GradientImproved | Variant::WeightedGradient)
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .iter()
            .find(|v| v.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("unknown inequality variant `{s}`")))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct ImprovedParams {
    pub n: u32,
    pub m: f64,
    pub w: BesselPotential,
    /// Second potential of [`Variant::TwoPotentials`]; defaults to `w`.
    pub w2: Option<BesselPotential>,
    /// `λ = -lim rW_r/W`; computed from `w` when absent.
    pub lambda: Option<f64>,
    /// `a_{n,m}` where no closed form is known; computed spectrally when absent.
    pub a_nm: Option<f64>,
}

impl ImprovedParams {
    /// Parameters with the multiplier of `w` chosen for the variant's
    /// boundary requirement.
    pub fn new(variant: Variant, n: u32, m: f64, w: RadialPotential, r: f64) -> Result<Self> {
        let w = BesselPotential::new(w, r, variant.boundary_target(n, m))?;
        Ok(ImprovedParams {
            n,
            m,
            w,
            w2: None,
            lambda: None,
            a_nm: None,
        })
    }
}

/// Evaluate one of the improved Rellich-type inequalities.
pub fn improved_rellich_deficit(
    variant: Variant,
    u: &TestFunction,
    p: &ImprovedParams,
) -> Result<DeficitReport> {
    let (n, nf, m, r) = (p.n, p.n as f64, p.m, u.r);
    check_radius(u, &[&p.w.w])?;
    let forms = Forms { u, n };
    let w = p.w.w.clone();
    let b = p.w.coefficient;
    let lambda = match p.lambda {
        Some(l) => l,
        None => p.w.lambda()?,
    };
    let rellich0 = nf * nf * (nf - 4.0).powi(2) / 16.0;
    let mu2 = || -> Result<f64> { Ok(mu_for_dimension(n)?.mu.powi(2) / (r * r)) };
    let mut notes: Vec<String> = Vec::new();
    if variant.needs_dirichlet() && !u.vanishes_on_boundary() {
        notes.push("u does not vanish on the boundary".into());
    }
    if let Some(t) = variant.boundary_target(n, m) {
        if !p.w.w.is_zero() && p.w.end_ratio < t - 1e-9 {
            notes.push(format!("R φ'(R)/φ(R) = {:.6} is below {t}", p.w.end_ratio));
        }
    }
    let mut bld = match variant {
        Variant::Rellich => {
            let mut bl = Builder::new(variant.name(), u, n, forms.laplace("∫|Δu|²", |_| 1.0)?);
            bl.term("rellich", rellich0, forms.mass("∫u²/r⁴", |x| x.powi(-4))?);
            let k = (nf * nf / 4.0 + (nf - lambda - 2.0).powi(2) / 4.0) * b;
            bl.term(
                "improvement",
                k,
                forms.mass("∫Wu²/r²", |x| w.value(x) / (x * x))?,
            );
            bl.note(
                lambda > nf - 2.0 + 1e-6,
                format!("λ = {lambda} exceeds n - 2"),
            );
            bl
        }
        Variant::GeneralRellich => {
            let mut bl = Builder::new(
                variant.name(),
                u,
                n,
                forms.laplace("∫|Δu|²/r^2m", |x| x.powf(-2.0 * m))?,
            );
            bl.term(
                "rellich",
                h_nm(n, m),
                forms.mass("∫u²/r^(2m+4)", |x| x.powf(-2.0 * m - 4.0))?,
            );
            let k =
                b * ((nf + 2.0 * m).powi(2) / 4.0 + (nf - 2.0 * m - lambda - 2.0).powi(2) / 4.0);
            bl.term(
                "improvement",
                k,
                forms.mass("∫Wu²/r^(2m+2)", |x| w.value(x) * x.powf(-2.0 * m - 2.0))?,
            );
            bl.note(
                m < -nf / 2.0 || m > (nf - 4.0) / 2.0,
                format!("m = {m} outside [-n/2, (n-4)/2]"),
            );
            bl.note(
                lambda > nf / 2.0 + m + 1e-6,
                format!("λ = {lambda} exceeds n/2 + m"),
            );
            bl
        }
        Variant::LogChainRellich => {
            let f = w.chain_factor().ok_or_else(|| {
                Error::InvalidParameter(
                    "the log-chain inequality needs a log or X chain potential".into(),
                )
            })?;
            let mut bl = Builder::new(variant.name(), u, n, forms.laplace("∫|Δu|²", |_| 1.0)?);
            bl.term("rellich", rellich0, forms.mass("∫u²/r⁴", |x| x.powi(-4))?);
            let k = 1.0 + nf * (nf - 4.0) / 8.0;
            bl.term(
                "improvement",
                k,
                forms.mass("Σ∫u²/r⁴ chain", |x| w.value(x) / (f * x * x))?,
            );
            bl.note(n < 4, "n < 4");
            bl
        }
        Variant::TwoPotentials => {
            let w2 = p.w2.clone().unwrap_or_else(|| p.w.clone());
            check_radius(u, &[&w2.w])?;
            let mu2 = mu2()?;
            let mu = mu2.sqrt() * r;
            let mut bl = Builder::new(variant.name(), u, n, forms.laplace("∫|Δu|²", |_| 1.0)?);
            bl.term("rellich", rellich0, forms.mass("∫u²/r⁴", |x| x.powi(-4))?);
            bl.term(
                "first",
                nf * nf / 4.0 * b,
                forms.mass("∫W1u²/r²", |x| w.value(x) / (x * x))?,
            );
            let hardy = forms.mass("∫u²/r²", |x| 1.0 / (x * x))?;
            let ww = w2.w.clone();
            let second = forms.mass("∫W2u²", |x| ww.value(x))?;
            let k_h = (nf - 2.0).powi(2) / 4.0;
            bl.term("hardy", mu2 * k_h, hardy);
            bl.term("second", mu2 * w2.coefficient, second);
            let literal = mu * (k_h * hardy.value + w2.coefficient * second.value);
            let base = bl.deficit() + mu2 * (k_h * hardy.value + w2.coefficient * second.value);
            bl.alternatives
                .insert("mu_unsquared".into(), base - literal);
            bl.note(n < 5, "n = 4 is not covered by the argument");
            bl
        }
        Variant::H1Improved => {
            let mut bl = Builder::new(variant.name(), u, n, forms.laplace("∫|Δu|²", |_| 1.0)?);
            bl.term("rellich", rellich0, forms.mass("∫u²/r⁴", |x| x.powi(-4))?);
            bl.term(
                "improvement",
                b * nf * nf / 4.0,
                forms.mass("∫Wu²/r²", |x| w.value(x) / (x * x))?,
            );
            bl.term("dirichlet", mu2()?, forms.grad("∫|∇u|²", |_| 1.0)?);
            bl.note(n < 4, "n < 4");
            bl
        }
        Variant::GradientImproved => {
            let c = c_n(n).ok_or_else(|| Error::InvalidParameter("C(n) needs n >= 3".into()))?;
            let mut bl = Builder::new(variant.name(), u, n, forms.laplace("∫|Δu|²", |_| 1.0)?);
            bl.term(
                "hardy_rellich",
                c,
                forms.grad("∫|∇u|²/r²", |x| 1.0 / (x * x))?,
            );
            bl.term("improvement", b, forms.grad("∫W|∇u|²", |x| w.value(x))?);
            bl
        }
        Variant::WeightedGradient => {
            let a = match a_nm_closed(n, m).or(p.a_nm) {
                Some(a) => a,
                None => {
                    spectral::min_rayleigh(
                        n,
                        m,
                        spectral::QuotientKind::GradOverGrad,
                        spectral::BoundaryCondition::H2,
                        8,
                        &spectral::GridParams::default(),
                    )?
                    .value
                }
            };
            let mut bl = Builder::new(
                variant.name(),
                u,
                n,
                forms.laplace("∫|Δu|²/r^2m", |x| x.powf(-2.0 * m))?,
            );
            bl.term(
                "hardy_rellich",
                a,
                forms.grad("∫|∇u|²/r^(2m+2)", |x| x.powf(-2.0 * m - 2.0))?,
            );
            bl.term(
                "improvement",
                b,
                forms.grad("∫W|∇u|²/r^2m", |x| w.value(x) * x.powf(-2.0 * m))?,
            );
            bl.note(
                m < -nf / 2.0 || m >= (nf - 2.0) / 2.0,
                format!("m = {m} outside [-n/2, (n-2)/2)"),
            );
            bl
        }
    };
    bld.notes.splice(0..0, notes);
    Ok(bld.finish())
}

/// `∫r^α f'² ≥ ((α-1)/2)² ∫r^{α-2} f² + β ∫r^α W f² + (φ'(R)/φ(R) - (α-1)/(2R)) R^α f(R)²`
/// for the radial profile of `u`.
pub fn one_dim_deficit(alpha: f64, w: &BesselPotential, u: &TestFunction) -> Result<DeficitReport> {
    check_radius(u, &[&w.w])?;
    let f = &u.modes[0].profile;
    let r = u.r;
    let mut mesh = LogMesh::new(u.r_min, r).with_knots(&u.knots);
    mesh.per_decade = u.per_decade;
    let lhs = integrate_radial(|x| x.powf(alpha) * f.eval(x).d.powi(2), &mesh)?;
    let mut b = Builder::new("one-dimensional", u, 1, lhs);
    let g = (alpha - 1.0) / 2.0;
    // A zero coefficient switches the term off even where its integral diverges.
    let hardy = if g == 0.0 {
        Integral::default()
    } else {
        integrate_radial(|x| x.powf(alpha - 2.0) * f.eval(x).v.powi(2), &mesh)?
    };
    b.term("hardy", g * g, hardy);
    let ww = w.w.clone();
    let improvement = if w.coefficient == 0.0 {
        Integral::default()
    } else {
        integrate_radial(|x| x.powf(alpha) * ww.value(x) * f.eval(x).v.powi(2), &mesh)?
    };
    b.term("improvement", w.coefficient, improvement);
    let coef = (w.end_ratio / r - g / r) * r.powf(alpha);
    b.exact("boundary", coef * f.eval(r).v.powi(2));
    b.alternative("boundary_without_value", "boundary", coef);
    b.note(alpha < 1.0, format!("α = {alpha} < 1"));
    b.note(
        u.modes.len() != 1 || u.modes[0].k != 0,
        "only the first radial profile is used",
    );
    Ok(b.finish())
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperHardyReport {
    pub n: u32,
    /// `-lim rV_r/V`.
    pub lambda1: Option<f64>,
    /// `-lim rV_rr/V_r`; absent when `V_r ≡ 0`.
    pub lambda2: Option<f64>,
    pub lambda2_vacuous: bool,
    pub decreasing: bool,
    pub lambda1_condition: bool,
    pub lambda2_condition: Option<bool>,
    /// `(½(n-λ₁-2)² + 3(n-3))V - (n-5)rV_r - r²V_rr ≥ 0`, sampled.
    pub main_condition: bool,
    pub main_min_scaled: f64,
    /// `∫ 1/(r^{n-3}V) = ∞` and `-∫ 1/(r^{n-4}V_r) = ∞`.
    pub integral_conditions: (bool, bool),
    /// `((n-λ₁-2)²/4 + n - 1)(n-λ₁-4)²/4`.
    pub k1: Option<f64>,
    /// `(n-1)(n-λ₂-2)²/4` as printed.
    pub k2_printed: Option<f64>,
    /// `(n-1)(n-λ₂-3)²/4`, which reproduces `H_{n,m}` for powers.
    pub k2_corrected: Option<f64>,
}

/// Sample the hypotheses of the weighted Rellich inequality for `V` and
/// evaluate its constants.
pub fn check_superhardy_conditions(v: &RadialPotential, n: u32, r: f64) -> SuperHardyReport {
    let nf = n as f64;
    let probes = default_probe_radii(r);
    let lambda1 = lambda_limit(v, &probes).ok().map(|l| l.lambda);
    let samples: Vec<f64> = (0..400)
        .map(|i| r * 10f64.powf(-8.0 * (1.0 - i as f64 / 399.0)))
        .collect();
    let vanishing_slope = samples.iter().all(|&x| {
        let j = v.jet(x);
        j.d.abs() <= 1e-13 * j.v.abs() / x
    });
    let lambda2 = if vanishing_slope {
        None
    } else {
        let vv = v.clone();
        let sign = if v.deriv(r * 0.5) < 0.0 { -1.0 } else { 1.0 };
        let slope = RadialPotential::custom(
            move |x| {
                let j = vv.jet(x);
                Jet::new(sign * j.d, sign * j.dd, f64::NAN)
            },
            v.r_max(),
            v.sing_exponent() - 1.0,
            0.0,
            "V_r",
        );
        lambda_limit(&slope, &probes).ok().map(|l| l.lambda)
    };
    let decreasing = samples
        .iter()
        .all(|&x| v.deriv(x) <= 1e-13 * v.value(x) / x);
    let l1 = lambda1.unwrap_or(f64::NAN);
    let lambda1_condition = samples
        .iter()
        .all(|&x| x * v.deriv(x) / v.value(x) + l1 >= -1e-7);
    let lambda2_condition = lambda2.map(|l2| {
        samples.iter().all(|&x| {
            let j = v.jet(x);
            x * j.dd / j.d + l2 >= -1e-7
        })
    });
    let c = 0.5 * (nf - l1 - 2.0).powi(2) + 3.0 * (nf - 3.0);
    let main_min_scaled = samples
        .iter()
        .map(|&x| {
            let j = v.jet(x);
            (c * j.v - (nf - 5.0) * x * j.d - x * x * j.dd) / j.v
        })
        .fold(f64::INFINITY, f64::min);
    let vv = v.clone();
    let int1 = !integrable_at_origin(|x| 1.0 / (x.powf(nf - 3.0) * vv.value(x)), r);
    let vv = v.clone();
    let int2 =
        vanishing_slope || !integrable_at_origin(|x| -1.0 / (x.powf(nf - 4.0) * vv.deriv(x)), r);
    SuperHardyReport {
        n,
        lambda1,
        lambda2,
        lambda2_vacuous: vanishing_slope,
        decreasing,
        lambda1_condition,
        lambda2_condition,
        main_condition: main_min_scaled >= -1e-9,
        main_min_scaled,
        integral_conditions: (int1, int2),
        k1: lambda1
            .map(|l| ((nf - l - 2.0).powi(2) / 4.0 + nf - 1.0) * (nf - l - 4.0).powi(2) / 4.0),
        k2_printed: lambda2.map(|l| (nf - 1.0) * (nf - l - 2.0).powi(2) / 4.0),
        k2_corrected: lambda2.map(|l| (nf - 1.0) * (nf - l - 3.0).powi(2) / 4.0),
    }
}

/// `u = r^{-γ} ψ(log r)` with `γ = (n-2a-2)/2` and `ψ` a quintic ramp from 0
/// to 1 over `log r ∈ [-1-L, -1]` (unit ball).
pub fn ckn_log_cutoff(n: u32, a: f64, length: f64) -> TestFunction {
    let gamma = (n as f64 - 2.0 * a - 2.0) / 2.0;
    let t0 = -1.0 - length;
    let f = move |x: f64| {
        let t = x.ln();
        let s = ((t - t0) / length).clamp(0.0, 1.0);
        // ψ, ψ_s, ψ_ss of 6s⁵ - 15s⁴ + 10s³.
        let (p, ps, pss) = (
            s * s * s * (10.0 - 15.0 * s + 6.0 * s * s),
            30.0 * s * s * (1.0 - s).powi(2),
            60.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
        );
        let (pt, ptt) = (ps / length, pss / (length * length));
        // g(t) = e^{-γt} ψ(t); f' = g_t / r, f'' = (g_tt - g_t)/r².
        let e = (-gamma * t).exp();
        let g = e * p;
        let gt = e * (pt - gamma * p);
        let gtt = e * (ptt - 2.0 * gamma * pt + gamma * gamma * p);
        Jet::new(g, gt / x, (gtt - gt) / (x * x))
    };
    let start = t0.exp();
    TestFunction::radial(format!("ckn-cutoff(L={length})"), 1.0, Profile::new(f))
        .with_knots(&[start, (-1.0f64).exp()])
        .with_mesh_start(start)
}

/// Hardy deficits of the CKN pair `(r^{-2a}, ((n-2a-2)/2)² r^{-2a-2})` with its
/// boundary term along [`ckn_log_cutoff`]. The exact values are
/// `nω_n · 10/(7L)`.
pub fn ckn_saturation(n: u32, a: f64, lengths: &[f64]) -> Result<Vec<(f64, DeficitReport)>> {
    let g = (n as f64 - 2.0 * a - 2.0) / 2.0;
    let v = RadialPotential::power(a, 1.0);
    let w = RadialPotential::scaled(g * g, RadialPotential::power(a + 1.0, 1.0));
    lengths
        .iter()
        .map(|&l| {
            let mut u = ckn_log_cutoff(n, a, l);
            u.per_decade = 40;
            Ok((l, hardy_deficit(&v, &w, -g, &u, n)?))
        })
        .collect()
}

/// File description of one mode, `r^k (1 - (r/R)²)^p Σ_i a_i r^i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialMode {
    pub k: u32,
    #[serde(default = "default_power")]
    pub p: u32,
    pub coeffs: Vec<f64>,
}

fn default_power() -> u32 {
    1
}

fn default_radius() -> f64 {
    1.0
}

/// File description of a test function.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionSpec {
    pub label: String,
    #[serde(default = "default_radius")]
    pub radius: f64,
    pub modes: Vec<PolynomialMode>,
}

impl TestFunctionSpec {
    pub fn build(&self) -> Result<TestFunction> {
        if !(self.radius > 0.0) || self.modes.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "test function `{}` needs R > 0 and a mode",
                self.label
            )));
        }
        let r = self.radius;
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let (k, p, a) = (m.k as i32, m.p as i32, m.coeffs.clone());
                let prof = Profile::from_jet(move |x| {
                    let s = x * (1.0 / r);
                    let mut poly = Jet::constant(0.0);
                    for c in a.iter().rev() {
                        poly = poly * x + *c;
                    }
                    x.powi(k) * (1.0 - s * s).powi(p) * poly
                });
                (m.k, prof)
            })
            .collect();
        let u = TestFunction::new(self.label.clone(), r, modes);
        u.check_orders()?;
        Ok(u)
    }
}

/// Thirty smooth test functions on the unit ball, all vanishing on the
/// boundary: radial polynomials and bumps, single higher modes and mixtures.
pub fn builtin_suite() -> Vec<TestFunction> {
    fn p(f: impl Fn(Jet) -> Jet + Send + Sync + 'static) -> Profile {
        Profile::from_jet(f)
    }
    fn poly(k: i32, q: i32) -> Profile {
        Profile::from_jet(move |r| r.powi(k) * (1.0 - r * r).powi(q))
    }
    let half_pi = PI / 2.0;
    let e4 = (-4.0f64).exp();
    let e100 = (-100.0f64).exp();
    let rad = |label: &str, f: Profile| TestFunction::radial(label, 1.0, f);
    let multi = |label: &str, modes: Vec<(u32, Profile)>| TestFunction::new(label, 1.0, modes);
    vec![
        rad("1-r^2", poly(0, 1)),
        rad("(1-r^2)^2", poly(0, 2)),
        rad("(1-r^2)^3", poly(0, 3)),
        rad("(1-r^2)^4", poly(0, 4)),
        rad("1-r^4", p(|r| 1.0 - r.powi(4))),
        rad("cos(pi r/2)", p(move |r| (r * half_pi).cos())),
        rad(
            "(1-r^2)exp(-r^2)",
            p(|r| (1.0 - r * r) * (-1.0 * (r * r)).exp()),
        ),
        rad("gaussian(4)", p(move |r| (-4.0 * (r * r)).exp() - e4)),
        rad(
            "(1-r^2)(1+3r^2)",
            p(|r| (1.0 - r * r) * (1.0 + 3.0 * (r * r))),
        ),
        rad("sin(pi r^2)", p(|r| (PI * (r * r)).sin())),
        rad(
            "(1-r^2)^2(1-3r^2)",
            p(|r| (1.0 - r * r).powi(2) * (1.0 - 3.0 * (r * r))),
        ),
        rad("gaussian(100)", p(move |r| (-100.0 * (r * r)).exp() - e100)),
        rad(
            "(1-r^2)log(2/(r^2+0.01))",
            p(|r| (1.0 - r * r) * (2.0 * ((r * r) + 0.01).recip()).ln()),
        ),
        rad(
            "(1-r^2)/(1+25r^2)",
            p(|r| (1.0 - r * r) / (1.0 + 25.0 * (r * r))),
        ),
        rad(
            "(1-r^2)^3(1+r^2+r^4)",
            p(|r| (1.0 - r * r).powi(3) * (1.0 + r * r + r.powi(4))),
        ),
        multi("r(1-r^2)", vec![(1, poly(1, 1))]),
        multi("r(1-r^2)^2", vec![(1, poly(1, 2))]),
        multi(
            "r(1-r^2)exp(-r^2)",
            vec![(1, p(|r| r * (1.0 - r * r) * (-1.0 * (r * r)).exp()))],
        ),
        multi("r^2(1-r^2)", vec![(2, poly(2, 1))]),
        multi("r^2(1-r^2)^2", vec![(2, poly(2, 2))]),
        multi("r^3(1-r^2)", vec![(3, poly(3, 1))]),
        multi("r^4(1-r^2)^2", vec![(4, poly(4, 2))]),
        multi("r^5(1-r^2)", vec![(5, poly(5, 1))]),
        multi("mix{0,1}", vec![(0, poly(0, 2)), (1, poly(1, 1))]),
        multi(
            "mix{0,1,2}",
            vec![
                (0, poly(0, 1)),
                (1, p(|r| 0.5 * (r * (1.0 - r * r).powi(2)))),
                (2, p(|r| 0.3 * (r * r * (1.0 - r * r)))),
            ],
        ),
        multi(
            "mix{0,2}",
            vec![(0, p(move |r| (r * half_pi).cos())), (2, poly(2, 1))],
        ),
        multi(
            "mix{1,3}",
            vec![
                (1, poly(1, 2)),
                (3, p(|r| -2.0 * (r.powi(3) * (1.0 - r * r)))),
            ],
        ),
        multi(
            "mix{0,1,2,3}",
            vec![
                (0, p(|r| (1.0 - r * r) * (-1.0 * (r * r)).exp())),
                (1, poly(1, 1)),
                (2, poly(2, 2)),
                (3, poly(3, 1)),
            ],
        ),
        multi(
            "mix{0,2} sin",
            vec![
                (0, p(|r| (PI * (r * r)).sin())),
                (2, p(|r| r * r * (PI * (r * r)).sin())),
            ],
        ),
        multi(
            "mix{0,4}",
            vec![
                (0, poly(0, 2)),
                (4, p(|r| 2.0 * (r.powi(4) * (1.0 - r * r)))),
            ],
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_potential, PotentialSpec};
    use crate::radial_ode::{shoot_from_origin, ShootOptions};
    use approx::assert_relative_eq;

    fn ckn(n: u32, a: f64) -> (RadialPotential, RadialPotential, f64) {
        let g = (n as f64 - 2.0 * a - 2.0) / 2.0;
        (
            RadialPotential::power(a, 1.0),
            RadialPotential::scaled(g * g, RadialPotential::power(a + 1.0, 1.0)),
            -g,
        )
    }

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(omega(2), PI, max_relative = 1e-15);
        assert_relative_eq!(omega(3), 4.0 * PI / 3.0, max_relative = 1e-15);
        assert_relative_eq!(omega(4), PI * PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-15);
    }

    #[test]
    fn suite_is_admissible() {
        let suite = builtin_suite();
        assert_eq!(suite.len(), 30);
        for u in &suite {
            u.check_orders().unwrap();
            assert!(u.vanishes_on_boundary(), "{}", u.label);
        }
    }

    #[test]
    fn order_check_rejects_low_order_modes() {
        let u = TestFunction::new("bad", 1.0, vec![(2, Profile::from_jet(|r| 1.0 - r * r))]);
        assert!(u.check_orders().is_err());
    }

    #[test]
    fn dirichlet_energy_of_parabola() {
        // ∫|∇(1-r²)|² = nω_n ∫ 4r² r^{n-1} = 4nω_n/(n+2).
        let u = TestFunction::radial("1-r^2", 1.0, Profile::from_jet(|r| 1.0 - r * r));
        for n in [2u32, 3, 5] {
            let one = RadialPotential::constant(1.0, 1.0);
            let rep = hardy_deficit(&one, &RadialPotential::zero(1.0), 0.0, &u, n).unwrap();
            assert_relative_eq!(
                rep.deficit,
                4.0 * sphere_area(n) / (n as f64 + 2.0),
                max_relative = 1e-10
            );
            assert!(rep.quad_error < 1e-6 * rep.lhs);
        }
    }

    #[test]
    fn laplacian_of_mode() {
        // u = r² φ_2 is harmonic times r^0? Δ(r^k φ_k) = 0.
        let u = TestFunction::new("harmonic", 1.0, vec![(2, Profile::from_jet(|r| r * r))]);
        let one = RadialPotential::constant(1.0, 1.0);
        let rep = hardy_rellich_deficit(&one, &RadialPotential::zero(1.0), &u, 4, 0.0).unwrap();
        assert!(rep.lhs.abs() < 1e-12);
    }

    #[test]
    fn ckn_hardy_nonnegative() {
        let (v, w, th) = ckn(5, 0.5);
        for u in builtin_suite() {
            let rep = hardy_deficit(&v, &w, th, &u, 5).unwrap();
            assert!(rep.holds(10.0), "{}: {rep:?}", u.label);
        }
    }

    #[test]
    fn mode_additivity_and_scaling() {
        let u = &builtin_suite()[27];
        let (v, w, th) = ckn(6, 0.0);
        let whole = hardy_rellich_deficit(&v, &w, u, 6, th).unwrap();
        let parts: f64 = (0..u.modes.len())
            .map(|i| {
                hardy_rellich_deficit(&v, &w, &u.single_mode(i), 6, th)
                    .unwrap()
                    .deficit
            })
            .sum();
        assert_relative_eq!(whole.deficit, parts, max_relative = 1e-12);
        let scaled = hardy_rellich_deficit(&v, &w, &u.scaled(3.0), 6, th).unwrap();
        assert_relative_eq!(scaled.deficit, 9.0 * whole.deficit, max_relative = 1e-12);
    }

    #[test]
    fn refinement_is_stable() {
        let (v, w, th) = ckn(5, 0.0);
        for u in builtin_suite().iter().step_by(5) {
            let a = hardy_deficit(&v, &w, th, u, 5).unwrap();
            let b = hardy_deficit(&v, &w, th, &u.refined(), 5).unwrap();
            assert!(
                (a.deficit - b.deficit).abs() <= a.quad_error.max(1e-12),
                "{}",
                u.label
            );
        }
    }

    #[test]
    fn constant_function_has_zero_rellich_deficit() {
        let u = TestFunction::radial("1", 1.0, Profile::from_jet(|_| Jet::constant(1.0)));
        let one = RadialPotential::constant(1.0, 1.0);
        let rep = hardy_rellich_deficit(&one, &RadialPotential::zero(1.0), &u, 5, 0.0).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.deficit, 0.0);
    }

    #[test]
    fn radial_hardy_rellich_with_hardy_pair() {
        // V = 1, W = ((n-2)/2)² r^{-2}: the gradient terms add up to C(5) = 25/4.
        let (v, w, th) = ckn(5, 0.0);
        let u = TestFunction::radial(
            "(1-r^2)^2",
            1.0,
            Profile::from_jet(|r| (1.0 - r * r).powi(2)),
        );
        let rep = hardy_rellich_deficit(&v, &w, &u, 5, th).unwrap();
        assert!(rep.deficit >= 0.0 && rep.notes.is_empty());
        let total = rep.rhs_terms["weight_gradient"] + rep.rhs_terms["potential_gradient"];
        let grad = Forms { u: &u, n: 5 }
            .grad("", |x| 1.0 / (x * x))
            .unwrap()
            .value;
        assert_relative_eq!(total, 6.25 * grad, max_relative = 1e-10);
        // Radial: the mode-wise boundary equals the aggregated one.
        assert_relative_eq!(
            rep.alternatives["boundary_aggregate"],
            rep.deficit,
            max_relative = 1e-12
        );
    }

    #[test]
    fn non_radial_outside_condition_is_labelled() {
        let u = &builtin_suite()[24];
        let (v, w, th) = ckn(4, 0.0);
        let rep = hardy_rellich_deficit(&v, &w, u, 4, th).unwrap();
        assert!(rep.notes.iter().any(|s| s.contains("pointwise")));
    }

    #[test]
    fn trajectory_saturates_hardy() {
        // n = 3, V = W = 1 at c just below π²: u = φ gives zero deficit.
        let one = RadialPotential::constant(1.0, 1.0);
        let c = 0.9 * PI * PI;
        let p = OdeProblem::new(3, one.clone(), one.clone(), c, 1.0, OdeDim::NDim).unwrap();
        let opts = ShootOptions {
            max_step: 0.02,
            ..ShootOptions::default()
        };
        let traj = shoot_from_origin(&p, &opts).unwrap();
        let th = traj.end_ratio.unwrap();
        let u = TestFunction::from_trajectory("phi", &traj, 1.0, None);
        let w = RadialPotential::constant(c, 1.0);
        let rep = hardy_deficit(&one, &w, th, &u, 3).unwrap();
        assert!(rep.deficit.abs() < 1e-7 * rep.lhs, "{rep:?}");
    }

    #[test]
    fn ckn_cutoff_matches_closed_form() {
        for (l, rep) in ckn_saturation(5, 0.5, &[1.0, 5.0, 25.0]).unwrap() {
            let exact = sphere_area(5) * 10.0 / (7.0 * l);
            assert_relative_eq!(rep.deficit, exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn one_dim_matches_radial_hardy() {
        let n = 5u32;
        let (v, w, th) = ckn(n, 0.0);
        let zero = BesselPotential::zero(1.0);
        for u in builtin_suite().iter().take(5) {
            let one = one_dim_deficit(n as f64 - 1.0, &zero, u).unwrap();
            let h = hardy_deficit(&v, &w, th, u, n).unwrap();
            assert_relative_eq!(
                one.deficit,
                h.deficit / sphere_area(n),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn bessel_potential_constant_is_mu_limited() {
        let w = RadialPotential::constant(1.0, 1.0);
        let n = 6;
        let bp = BesselPotential::new(w, 1.0, Some(-(n as f64) / 2.0)).unwrap();
        let mu = mu_for_dimension(n).unwrap().mu;
        assert!(bp.limited);
        assert_relative_eq!(bp.coefficient, mu * mu, max_relative = 1e-8);
        assert_relative_eq!(bp.end_ratio, -3.0, max_relative = 1e-6);
        assert_relative_eq!(
            bp.beta,
            crate::special::first_zero_j0().powi(2),
            max_relative = 1e-7
        );
    }

    #[test]
    fn log_chain_coefficient_is_quarter() {
        let w = make_potential(&PotentialSpec::LogChain { k: 1, rho: 10.0 }, 1.0).unwrap();
        let bp = BesselPotential::new(w, 1.0, Some(-2.5)).unwrap();
        assert!(!bp.limited);
        assert_relative_eq!(bp.coefficient, 0.25, max_relative = 1e-8);
        assert_relative_eq!(bp.lambda().unwrap(), 2.0, max_relative = 1e-4);
    }

    #[test]
    fn improved_variants_hold_on_suite() {
        let r = 1.0;
        let chain = make_potential(&PotentialSpec::LogChain { k: 1, rho: 10.0 }, r).unwrap();
        let n = 6;
        for variant in Variant::ALL {
            let p = ImprovedParams::new(variant, n, 0.0, chain.clone(), r).unwrap();
            for u in builtin_suite().iter().step_by(3) {
                let rep = improved_rellich_deficit(variant, u, &p).unwrap();
                assert!(rep.holds(10.0), "{variant}: {}: {rep:?}", u.label);
                assert!(rep.notes.is_empty(), "{variant}: {:?}", rep.notes);
            }
        }
    }

    #[test]
    fn log_chain_constant() {
        let chain = make_potential(&PotentialSpec::LogChain { k: 2, rho: 100.0 }, 1.0).unwrap();
        let p = ImprovedParams::new(Variant::LogChainRellich, 5, 0.0, chain, 1.0).unwrap();
        let u = &builtin_suite()[1];
        let rep = improved_rellich_deficit(Variant::LogChainRellich, u, &p).unwrap();
        let chain_term = Forms { u, n: 5 }
            .mass("", |x| p.w.w.value(x) / (x * x))
            .unwrap()
            .value;
        assert_relative_eq!(
            rep.rhs_terms["improvement"],
            1.625 * chain_term,
            max_relative = 1e-12
        );
        assert!(rep.deficit > 0.0);
    }

    #[test]
    fn zero_weight_general_rellich_is_plain_rellich() {
        let p = ImprovedParams {
            n: 8,
            m: 1.0,
            w: BesselPotential::zero(1.0),
            w2: None,
            lambda: None,
            a_nm: None,
        };
        let u = &builtin_suite()[2];
        let rep = improved_rellich_deficit(Variant::GeneralRellich, u, &p).unwrap();
        assert_eq!(rep.rhs_terms["improvement"], 0.0);
        let forms = Forms { u, n: 8 };
        let exact = forms.laplace("", |x| x.powi(-2)).unwrap().value
            - 25.0 * forms.mass("", |x| x.powi(-6)).unwrap().value;
        assert_relative_eq!(rep.deficit, exact, max_relative = 1e-10);
    }

    #[test]
    fn spectral_minimiser_nearly_saturates_rellich() {
        use crate::spectral::*;
        let mode = ModeForm::new(
            6,
            0.0,
            0,
            QuotientKind::DeltaOverU,
            BoundaryCondition::H2capH10,
        );
        let sol = solve_mode(
            &mode,
            &GridParams {
                nodes: 300,
                span: 60.0,
            },
        )
        .unwrap();
        let u = TestFunction::from_mode_solution("fem", &sol);
        let p = ImprovedParams {
            n: 6,
            m: 0.0,
            w: BesselPotential::zero(1.0),
            w2: None,
            lambda: None,
            a_nm: None,
        };
        let rep = improved_rellich_deficit(Variant::GeneralRellich, &u, &p).unwrap();
        let ratio = rep.lhs / rep.rhs_terms["rellich"] * 9.0;
        assert_relative_eq!(ratio, sol.value, max_relative = 1e-6);
        assert!(rep.deficit >= 0.0 && rep.deficit < 0.01 * rep.lhs);
    }

    #[test]
    fn superhardy_for_powers() {
        for (n, m) in [(6u32, 0.0), (8, 1.0), (7, -0.5)] {
            let v = RadialPotential::power(m, 1.0);
            let rep = check_superhardy_conditions(&v, n, 1.0);
            assert_relative_eq!(rep.lambda1.unwrap(), 2.0 * m, epsilon = 1e-6);
            if m == 0.0 {
                assert!(rep.lambda2_vacuous);
            } else {
                assert_relative_eq!(rep.lambda2.unwrap(), 2.0 * m + 1.0, epsilon = 1e-6);
                let combined = rep.k1.unwrap() + 2.0 * m * rep.k2_corrected.unwrap();
                assert_relative_eq!(combined, h_nm(n, m), max_relative = 1e-6);
            }
            // Sampled condition against the closed-form interval.
            let nf = n as f64;
            let half = 0.5 * (1.0 + (nf + 1.0).powi(2)).sqrt();
            let inside = m >= -2.0 - half && m <= -2.0 + half;
            assert_eq!(
                rep.main_condition, inside,
                "n={n} m={m}: {}",
                rep.main_min_scaled
            );
        }
    }
}
