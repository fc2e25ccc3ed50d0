//! Radial weights `V(r)`, `W(r)` used throughout the crate.
//!
//! Every potential is evaluated as a [`Jet`], so value, first and second
//! derivative come out of one pass and stay exact near the origin. The
//! iterated-log and `X`-chain families follow
//!
//! ```text
//! W_{k,ρ}(r) = Σ_{j=1..k} r^{-2} Π_{i=1..j} (log^{(i)}(ρ/r))^{-2}
//! X̃_k(r)     = Σ_{j=1..k} r^{-2} Π_{i=1..j} X_i(r/R)^2,
//!              X_1(t) = 1/(1 - log t),  X_i = X_1 ∘ X_{i-1}
//! ```
//!
//! Their positive solutions of the two-dimensional radial equation
//! `φ'' + φ'/r + ¼ W φ = 0` are available from [`candidate_phi`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::special::{bessel_j, mu_for_dimension};

/// Smallest admissible value of any iterated logarithm on `(0, R_max]`.
pub const LOG_ADMISSIBILITY: f64 = 1e-8;

/// File/CLI description of a potential: a tree of `{kind, params}` records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `r^{-2m}`.
    Power {
        m: f64,
    },
    LogChain {
        k: u32,
        rho: f64,
    },
    /// `X`-chain with scale `radius` (defaults to the domain radius).
    XChain {
        k: u32,
        #[serde(default)]
        radius: Option<f64>,
    },
    Scaled {
        c: f64,
        inner: Box<PotentialSpec>,
    },
    Sum {
        terms: Vec<PotentialSpec>,
    },
}

fn one() -> f64 {
    1.0
}

impl PotentialSpec {
    pub fn one() -> Self {
        PotentialSpec::Constant { value: 1.0 }
    }

    pub fn power(m: f64) -> Self {
        PotentialSpec::Power { m }
    }

    pub fn scaled(c: f64, inner: PotentialSpec) -> Self {
        PotentialSpec::Scaled {
            c,
            inner: Box::new(inner),
        }
    }

    /// Short textual form used by the CLI:
    /// `zero`, `one`, `const:<v>`, `power:<m>`, `logchain:<k>:<rho>`,
    /// `xchain:<k>[:<radius>]`, `scaled:<c>:<inner>`, `sum:<a>+<b>+...`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let bad = || Error::InvalidParameter(format!("cannot parse potential `{text}`"));
        let num = |s: &str| -> Result<f64> { parse_number(s).ok_or_else(bad) };
        if let Some(rest) = t.strip_prefix("sum:") {
            let terms = rest
                .split('+')
                .map(PotentialSpec::parse)
                .collect::<Result<Vec<_>>>()?;
            return Ok(PotentialSpec::Sum { terms });
        }
        if let Some(rest) = t.strip_prefix("scaled:") {
            let (c, inner) = rest.split_once(':').ok_or_else(bad)?;
            return Ok(PotentialSpec::scaled(num(c)?, PotentialSpec::parse(inner)?));
        }
        let parts: Vec<&str> = t.split(':').collect();
        match parts.as_slice() {
            ["zero"] => Ok(PotentialSpec::Zero),
            ["one"] => Ok(PotentialSpec::one()),
            ["const", v] | ["constant", v] => Ok(PotentialSpec::Constant { value: num(v)? }),
            ["power", m] => Ok(PotentialSpec::Power { m: num(m)? }),
            ["logchain", k, rho] => Ok(PotentialSpec::LogChain {
                k: k.parse().map_err(|_| bad())?,
                rho: num(rho)?,
            }),
            ["xchain", k] => Ok(PotentialSpec::XChain {
                k: k.parse().map_err(|_| bad())?,
                radius: None,
            }),
            ["xchain", k, r] => Ok(PotentialSpec::XChain {
                k: k.parse().map_err(|_| bad())?,
                radius: Some(num(r)?),
            }),
            _ => Err(bad()),
        }
    }
}

/// Numbers in the short form may be written `e`, `2e` (multiples of Euler's
/// number), `pi`, or plain decimals.
fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if s == "pi" {
        return Some(std::f64::consts::PI);
    }
    if let Some(m) = s.strip_suffix('e') {
        if m.is_empty() {
            return Some(std::f64::consts::E);
        }
        if let Ok(v) = m.parse::<f64>() {
            return Some(v * std::f64::consts::E);
        }
    }
    s.parse().ok()
}

type CustomFn = Arc<dyn Fn(f64) -> Jet + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Zero,
    Constant(f64),
    Power(f64),
    LogChain { k: u32, rho: f64 },
    XChain { k: u32, scale: f64 },
    Scaled(f64, Box<RadialPotential>),
    Sum(Vec<RadialPotential>),
    Custom(CustomFn),
}

/// An evaluatable radial weight on `(0, r_max]`.
///
/// `sing_exponent` and `sing_coefficient` describe the origin behaviour
/// `V(r) ~ v0 r^s`. Iterated-log chains are reported as `s = -2, v0 = 0`:
/// they are `o(r^-2)` but not `O(r^{-2+ε})`.
#[derive(Clone)]
pub struct RadialPotential {
    kind: Kind,
    r_max: f64,
    sing_exponent: f64,
    sing_coefficient: f64,
    label: String,
}

impl fmt::Debug for RadialPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialPotential")
            .field("label", &self.label)
            .field("r_max", &self.r_max)
            .field("sing_exponent", &self.sing_exponent)
            .field("sing_coefficient", &self.sing_coefficient)
            .finish()
    }
}

/// Build an evaluator for `spec` on `(0, r_max]`.
pub fn make_potential(spec: &PotentialSpec, r_max: f64) -> Result<RadialPotential> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "domain radius must be positive, got {r_max}"
        )));
    }
    let p = match spec {
        PotentialSpec::Zero => RadialPotential::leaf(Kind::Zero, r_max, 0.0, 0.0, "0".into()),
        PotentialSpec::Constant { value } => {
            if !value.is_finite() {
                return Err(Error::InvalidParameter("constant must be finite".into()));
            }
            RadialPotential::leaf(
                Kind::Constant(*value),
                r_max,
                0.0,
                *value,
                format!("{value}"),
            )
        }
        PotentialSpec::Power { m } => {
            if !m.is_finite() {
                return Err(Error::InvalidParameter("power m must be finite".into()));
            }
            RadialPotential::leaf(
                Kind::Power(*m),
                r_max,
                -2.0 * m,
                1.0,
                format!("r^{}", -2.0 * m),
            )
        }
        PotentialSpec::LogChain { k, rho } => {
            if *k == 0 {
                return Err(Error::InvalidParameter("log chain needs k >= 1".into()));
            }
            // log^{(i)}(ρ/r) decreases in r, so the tightest point is r = r_max.
            let mut x = rho / r_max;
            for i in 1..=*k {
                x = if x > 0.0 { x.ln() } else { f64::NAN };
                if !(x >= LOG_ADMISSIBILITY) {
                    return Err(Error::InvalidParameter(format!(
                        "rho = {rho} too small: log^({i})(rho/R) = {x} on (0, {r_max}]"
                    )));
                }
            }
            RadialPotential::leaf(
                Kind::LogChain { k: *k, rho: *rho },
                r_max,
                -2.0,
                0.0,
                format!("W_{{{k},{rho}}}"),
            )
        }
        PotentialSpec::XChain { k, radius } => {
            if *k == 0 {
                return Err(Error::InvalidParameter("X chain needs k >= 1".into()));
            }
            let scale = radius.unwrap_or(r_max);
            if !(scale >= r_max) {
                return Err(Error::InvalidParameter(format!(
                    "X chain scale {scale} must be >= domain radius {r_max}"
                )));
            }
            RadialPotential::leaf(
                Kind::XChain { k: *k, scale },
                r_max,
                -2.0,
                0.0,
                format!("X_{{{k}}}"),
            )
        }
        PotentialSpec::Scaled { c, inner } => {
            let inner = make_potential(inner, r_max)?;
            RadialPotential::scaled(*c, inner)
        }
        PotentialSpec::Sum { terms } => {
            let terms = terms
                .iter()
                .map(|t| make_potential(t, r_max))
                .collect::<Result<Vec<_>>>()?;
            RadialPotential::sum(terms)?
        }
    };
    Ok(p)
}

impl RadialPotential {
    fn leaf(kind: Kind, r_max: f64, s: f64, v0: f64, label: String) -> Self {
        RadialPotential {
            kind,
            r_max,
            sing_exponent: s,
            sing_coefficient: v0,
            label,
        }
    }

    pub fn zero(r_max: f64) -> Self {
        Self::leaf(Kind::Zero, r_max, 0.0, 0.0, "0".into())
    }

    pub fn constant(value: f64, r_max: f64) -> Self {
        Self::leaf(Kind::Constant(value), r_max, 0.0, value, format!("{value}"))
    }

    /// `r^{-2m}`.
    pub fn power(m: f64, r_max: f64) -> Self {
        Self::leaf(
            Kind::Power(m),
            r_max,
            -2.0 * m,
            1.0,
            format!("r^{}", -2.0 * m),
        )
    }

    pub fn scaled(c: f64, inner: RadialPotential) -> Self {
        RadialPotential {
            r_max: inner.r_max,
            sing_exponent: inner.sing_exponent,
            sing_coefficient: c * inner.sing_coefficient,
            label: format!("{c}*({})", inner.label),
            kind: Kind::Scaled(c, Box::new(inner)),
        }
    }

    pub fn sum(terms: Vec<RadialPotential>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty sum of potentials".into()))?;
        let r_max = first.r_max;
        // Leading behaviour: the most singular exponent among non-zero terms.
        let mut s = f64::INFINITY;
        for t in &terms {
            if !matches!(t.kind, Kind::Zero) {
                s = s.min(t.sing_exponent);
            }
        }
        if !s.is_finite() {
            s = 0.0;
        }
        let v0 = terms
            .iter()
            .filter(|t| t.sing_exponent == s)
            .map(|t| t.sing_coefficient)
            .sum();
        let label = terms
            .iter()
            .map(|t| t.label.clone())
            .collect::<Vec<_>>()
            .join(" + ");
        Ok(RadialPotential {
            kind: Kind::Sum(terms),
            r_max,
            sing_exponent: s,
            sing_coefficient: v0,
            label,
        })
    }

    /// A user-supplied weight. The origin exponent must be declared; it is
    /// never fitted.
    pub fn custom<F>(
        f: F,
        r_max: f64,
        sing_exponent: f64,
        sing_coefficient: f64,
        label: impl Into<String>,
    ) -> Self
    where
        F: Fn(f64) -> Jet + Send + Sync + 'static,
    {
        Self::leaf(
            Kind::Custom(Arc::new(f)),
            r_max,
            sing_exponent,
            sing_coefficient,
            label.into(),
        )
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn sing_exponent(&self) -> f64 {
        self.sing_exponent
    }

    pub fn sing_coefficient(&self) -> f64 {
        self.sing_coefficient
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            Kind::Zero => true,
            Kind::Constant(v) => *v == 0.0,
            Kind::Scaled(c, inner) => *c == 0.0 || inner.is_zero(),
            Kind::Sum(ts) => ts.iter().all(|t| t.is_zero()),
            _ => false,
        }
    }

    /// `(V, V_r, V_rr)` at `r`.
    pub fn jet(&self, r: f64) -> Jet {
        match &self.kind {
            Kind::Zero => Jet::constant(0.0),
            Kind::Constant(v) => Jet::constant(*v),
            Kind::Power(m) => Jet::var(r).powf(-2.0 * m),
            Kind::LogChain { k, rho } => log_chain_jet(*k, *rho, r),
            Kind::XChain { k, scale } => x_chain_jet(*k, *scale, r),
            Kind::Scaled(c, inner) => inner.jet(r).scale(*c),
            Kind::Sum(ts) => ts.iter().fold(Jet::constant(0.0), |acc, t| acc + t.jet(r)),
            Kind::Custom(f) => f(r),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).v
    }

    pub fn deriv(&self, r: f64) -> f64 {
        self.jet(r).d
    }

    pub fn deriv2(&self, r: f64) -> f64 {
        self.jet(r).dd
    }

    /// `r V_r / V`, computed without forming `V_r` separately for powers.
    pub fn log_derivative(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Power(m) => -2.0 * m,
            Kind::Constant(_) => 0.0,
            Kind::Scaled(_, inner) => inner.log_derivative(r),
            _ => {
                let j = self.jet(r);
                r * j.d / j.v
            }
        }
    }

    /// Closed-form `λ = -lim r W_r/W` where the family has one.
    pub fn known_lambda(&self) -> Option<f64> {
        match &self.kind {
            Kind::Zero | Kind::Constant(_) => Some(0.0),
            Kind::Power(m) => Some(2.0 * m),
            Kind::LogChain { .. } | Kind::XChain { .. } => Some(2.0),
            Kind::Scaled(_, inner) => inner.known_lambda(),
            _ => None,
        }
    }
}

/// `Π_{i=1..j} log^{(i)}(ρ/r)` for `j = 1..k`, as jets.
fn iterated_logs(k: u32, rho: f64, r: f64) -> Vec<Jet> {
    let mut out = Vec::with_capacity(k as usize);
    // log(ρ/r) = log ρ - log r, kept exact for tiny r.
    let mut l = Jet::constant(rho.ln()) - Jet::var(r).ln();
    out.push(l);
    for _ in 1..k {
        l = l.ln();
        out.push(l);
    }
    out
}

fn log_chain_jet(k: u32, rho: f64, r: f64) -> Jet {
    let logs = iterated_logs(k, rho, r);
    let inv_r2 = Jet::var(r).powf(-2.0);
    let mut prod = Jet::constant(1.0);
    let mut sum = Jet::constant(0.0);
    for l in logs {
        prod = prod * l;
        sum = sum + inv_r2 * prod.powf(-2.0);
    }
    sum
}

/// `X_1(t), ..., X_k(t)` at `t = r/scale`.
fn x_chain(k: u32, scale: f64, r: f64) -> Vec<Jet> {
    // X_1(t) = 1/(1 - log t) with log t = log r - log scale.
    let mut x = (1.0 - (Jet::var(r).ln() - scale.ln())).recip();
    let mut out = vec![x];
    for _ in 1..k {
        x = (1.0 - x.ln()).recip();
        out.push(x);
    }
    out
}

fn x_chain_jet(k: u32, scale: f64, r: f64) -> Jet {
    let xs = x_chain(k, scale, r);
    let inv_r2 = Jet::var(r).powf(-2.0);
    let mut prod = Jet::constant(1.0);
    let mut sum = Jet::constant(0.0);
    for x in xs {
        prod = prod * x * x;
        sum = sum + inv_r2 * prod;
    }
    sum
}

/// `λ` and the residual `f(r) = W_r/W + λ/r` of a weight with
/// `r W_r / W -> -λ` at the origin.
#[derive(Debug, Clone)]
pub struct LambdaData {
    pub lambda: f64,
    /// Extrapolated estimates using all probes and all but the finest one.
    pub estimates: (f64, f64),
    w: RadialPotential,
}

impl LambdaData {
    pub fn residual(&self, r: f64) -> f64 {
        let j = self.w.jet(r);
        j.d / j.v + self.lambda / r
    }
}

/// Default probe radii `R·10^{-2j}`, `j = 1..8`.
pub fn default_probe_radii(r_max: f64) -> Vec<f64> {
    (1..=8).map(|j| r_max * 10f64.powi(-2 * j)).collect()
}

/// Estimate `λ = -lim_{r→0} r W_r/W`.
///
/// The probes are extrapolated to the origin with Neville's scheme in the
/// variable `s = 1/log(R/r)`, which absorbs both power-law corrections
/// (flat in `s`) and iterated-log corrections (analytic in `s`).
pub fn lambda_limit(w: &RadialPotential, probe_radii: &[f64]) -> Result<LambdaData> {
    lambda_limit_tol(w, probe_radii, 1e-5)
}

pub fn lambda_limit_tol(w: &RadialPotential, probe_radii: &[f64], tol: f64) -> Result<LambdaData> {
    if probe_radii.len() < 3 {
        return Err(Error::InvalidParameter(
            "need at least three probe radii".into(),
        ));
    }
    if probe_radii.windows(2).any(|p| !(p[1] < p[0])) || probe_radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParameter(
            "probe radii must be positive and strictly decreasing".into(),
        ));
    }
    if w.is_zero() {
        return Ok(LambdaData {
            lambda: 0.0,
            estimates: (0.0, 0.0),
            w: w.clone(),
        });
    }
    let r_ref = w.r_max() * 1.000_001;
    let mut s = Vec::new();
    let mut e = Vec::new();
    for &r in probe_radii {
        let val = w.value(r);
        if !(val > 0.0) {
            return Err(Error::Hypothesis(format!("W({r}) = {val} is not positive")));
        }
        s.push(1.0 / (r_ref / r).ln());
        e.push(-w.log_derivative(r));
    }
    let all = neville_at_zero(&s, &e);
    let fewer = neville_at_zero(&s[..s.len() - 1], &e[..e.len() - 1]);
    if (all - fewer).abs() > tol * all.abs().max(1.0) {
        return Err(Error::NoConvergence { a: fewer, b: all });
    }
    Ok(LambdaData {
        lambda: all,
        estimates: (all, fewer),
        w: w.clone(),
    })
}

/// Polynomial extrapolation of the points `(x_i, y_i)` to `x = 0`.
pub(crate) fn neville_at_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
        }
    }
    p[0]
}

/// Closed-form positive solution `φ` of `φ'' + φ'/r + c W φ = 0` on `(0, R]`.
#[derive(Clone)]
pub struct CandidatePhi {
    f: Arc<dyn Fn(f64) -> Jet + Send + Sync>,
    /// Multiplier `c` on `W` for which `φ` solves the two-dimensional equation.
    pub weight: f64,
    pub radius: f64,
}

impl fmt::Debug for CandidatePhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CandidatePhi")
            .field("weight", &self.weight)
            .field("radius", &self.radius)
            .finish()
    }
}

impl CandidatePhi {
    pub fn jet(&self, r: f64) -> Jet {
        (self.f)(r)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).v
    }

    /// `R φ'(R)/φ(R)`.
    pub fn end_ratio(&self) -> f64 {
        let j = self.jet(self.radius);
        self.radius * j.d / j.v
    }
}

/// Closed-form `φ` for the catalogued Bessel potentials.
///
/// * `Zero`: `φ ≡ 1`.
/// * `Constant(v)`: `φ = J₀(μ r/R)` with `μ = μ(n)`, solving the equation
///   with `c = μ²/(v R²)`; then `R φ'(R)/φ(R) = -n/2`.
/// * `LogChain(k, ρ)`: `φ = (Π_{i≤k} log^{(i)}(ρ/r))^{1/2}`, `c = 1/4`.
/// * `XChain(k)`: `φ = (Π_{i≤k} X_i(r/R))^{-1/2}`, `c = 1/4`, and
///   `R φ'(R)/φ(R) = -k/2`.
pub fn candidate_phi(spec: &PotentialSpec, r: f64, n: u32) -> Result<CandidatePhi> {
    make_potential(spec, r)?.candidate_phi(n)
}

impl RadialPotential {
    /// Closed-form `φ` on `(0, r_max]`; see [`candidate_phi`].
    pub fn candidate_phi(&self, n: u32) -> Result<CandidatePhi> {
        let r = self.r_max;
        let phi = match &self.kind {
            Kind::Zero => CandidatePhi {
                f: Arc::new(|_| Jet::constant(1.0)),
                weight: 1.0,
                radius: r,
            },
            Kind::Constant(value) => {
                if !(*value > 0.0) {
                    return Err(Error::InvalidParameter(
                        "constant potential must be positive".into(),
                    ));
                }
                let mu = mu_for_dimension(n)?.mu;
                let a = mu / r;
                let f = move |x: f64| {
                    let z = a * x;
                    let j0 = bessel_j(0.0, z).unwrap_or(f64::NAN);
                    let j1 = bessel_j(1.0, z).unwrap_or(f64::NAN);
                    // J0' = -J1, J1' = J0 - J1/z.
                    let j1p = if z == 0.0 { 0.5 } else { j0 - j1 / z };
                    Jet::new(j0, -a * j1, -a * a * j1p)
                };
                CandidatePhi {
                    f: Arc::new(f),
                    weight: a * a / value,
                    radius: r,
                }
            }
            Kind::LogChain { k, rho } => {
                let (k, rho) = (*k, *rho);
                let f = move |x: f64| {
                    let prod = iterated_logs(k, rho, x)
                        .into_iter()
                        .fold(Jet::constant(1.0), |a, l| a * l);
                    prod.sqrt()
                };
                CandidatePhi {
                    f: Arc::new(f),
                    weight: 0.25,
                    radius: r,
                }
            }
            Kind::XChain { k, scale } => {
                let (k, scale) = (*k, *scale);
                let f = move |x: f64| {
                    let prod = x_chain(k, scale, x)
                        .into_iter()
                        .fold(Jet::constant(1.0), |a, l| a * l);
                    prod.powf(-0.5)
                };
                CandidatePhi {
                    f: Arc::new(f),
                    weight: 0.25,
                    radius: r,
                }
            }
            Kind::Scaled(c, inner) => {
                let mut p = inner.candidate_phi(n)?;
                p.weight /= c;
                p
            }
            Kind::Power(_) => return Err(Error::Unsupported("power".into())),
            Kind::Sum(_) => return Err(Error::Unsupported("sum".into())),
            Kind::Custom(_) => return Err(Error::Unsupported("custom".into())),
        };
        Ok(phi)
    }

    /// `f` when this is `f·(log chain)` or `f·(X chain)`.
    pub fn chain_factor(&self) -> Option<f64> {
        match &self.kind {
            Kind::LogChain { .. } | Kind::XChain { .. } => Some(1.0),
            Kind::Scaled(c, inner) => inner.chain_factor().map(|f| c * f),
            _ => None,
        }
    }

    /// The value when this potential is a constant.
    pub fn constant_value(&self) -> Option<f64> {
        match &self.kind {
            Kind::Constant(v) => Some(*v),
            Kind::Scaled(c, inner) => inner.constant_value().map(|v| c * v),
            _ => None,
        }
    }
}
