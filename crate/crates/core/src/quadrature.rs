//! Composite Gauss–Legendre quadrature on geometric meshes.
//!
//! Radial integrands here are singular or slowly varying at the origin, so
//! every rule works in `t = log r`: `∫ f(r) dr = ∫ f(e^t) e^t dt`. The error
//! estimate is the sum of `|GL5 - GL3|` over elements plus the estimated
//! tail `∫_0^{r_min}`.

use crate::error::{Error, Result};

const GL3_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Mesh description for [`integrate_radial`].
#[derive(Debug, Clone)]
pub struct LogMesh {
    pub r_min: f64,
    pub r_max: f64,
    pub per_decade: usize,
    /// Extra breakpoints (profile kinks, support edges).
    pub knots: Vec<f64>,
}

impl LogMesh {
    pub fn new(r_min: f64, r_max: f64) -> Self {
        LogMesh {
            r_min,
            r_max,
            per_decade: 20,
            knots: Vec::new(),
        }
    }

    pub fn with_knots(mut self, knots: &[f64]) -> Self {
        self.knots.extend_from_slice(knots);
        self
    }

    /// Element boundaries in `t = log r`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (t0, t1) = (self.r_min.ln(), self.r_max.ln());
        let decades = (t1 - t0) / std::f64::consts::LN_10;
        let m = ((decades * self.per_decade as f64).ceil() as usize).max(1);
        let mut ts: Vec<f64> = (0..=m)
            .map(|i| t0 + (t1 - t0) * i as f64 / m as f64)
            .collect();
        for &k in &self.knots {
            if k > self.r_min && k < self.r_max {
                ts.push(k.ln());
            }
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * (1.0 + b.abs()));
        ts
    }
}

fn element(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let g = |x: f64| {
        let t = mid + half * x;
        let r = t.exp();
        f(r) * r
    };
    let s5: f64 = GL5_X.iter().zip(GL5_W).map(|(&x, w)| w * g(x)).sum::<f64>() * half;
    let s3: f64 = GL3_X.iter().zip(GL3_W).map(|(&x, w)| w * g(x)).sum::<f64>() * half;
    (s5, (s5 - s3).abs())
}

/// `∫_{r_min}^{r_max} f(r) dr` on the mesh, without any tail correction.
pub fn integrate_mesh(f: impl Fn(f64) -> f64, mesh: &LogMesh) -> Integral {
    let ts = mesh.breakpoints();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in ts.windows(2) {
        let (v, e) = element(&f, w[0], w[1]);
        value += v;
        error += e;
    }
    Integral { value, error }
}

/// `∫_0^{r_max} f(r) dr`, with the piece below `mesh.r_min` estimated from
/// the local power law `f(r) ~ A r^{p-1}`.
pub fn integrate_radial(f: impl Fn(f64) -> f64, mesh: &LogMesh) -> Result<Integral> {
    let mut out = integrate_mesh(&f, mesh);
    let tail = power_tail(&f, mesh.r_min)?;
    // Second estimate one decade further out measures how well the power law fits.
    let alt = power_tail(&f, 10.0 * mesh.r_min)
        .map(|t| t - integrate_mesh(&f, &LogMesh::new(mesh.r_min, 10.0 * mesh.r_min)).value);
    out.value += tail;
    out.error += alt.map_or(tail.abs(), |a| (a - tail).abs());
    if !out.value.is_finite() {
        return Err(Error::Divergent(
            "integrand is not finite on the mesh".into(),
        ));
    }
    Ok(out)
}

/// `∫_0^{a} f` assuming `r f(r)` follows a power law below `a`.
fn power_tail(f: &impl Fn(f64) -> f64, a: f64) -> Result<f64> {
    let g0 = f(a) * a;
    if g0 == 0.0 {
        return Ok(0.0);
    }
    let b = 10.0 * a;
    let g1 = f(b) * b;
    let p = (g1 / g0).abs().ln() / std::f64::consts::LN_10;
    if !p.is_finite() || (g1 != 0.0 && g1.signum() != g0.signum()) {
        return Ok(0.0);
    }
    if p <= 1e-3 {
        return Err(Error::Divergent(format!(
            "integrand behaves like r^{:.3} at the origin",
            p - 1.0
        )));
    }
    Ok(g0 / p)
}

/// Whether `∫_0^a f(r) dr` converges for `f >= 0`, judged from the ratio of
/// successive contributions of blocks `[a·10^{-4(k+1)}, a·10^{-4k}]`.
pub fn integrable_at_origin(f: impl Fn(f64) -> f64, a: f64) -> bool {
    let blocks: Vec<f64> = (0..5)
        .map(|k| {
            let hi = a * 10f64.powi(-4 * k);
            let lo = hi * 1e-4;
            let mut mesh = LogMesh::new(lo, hi);
            mesh.per_decade = 8;
            integrate_mesh(&f, &mesh).value
        })
        .collect();
    if blocks.iter().any(|b| !b.is_finite()) {
        return false;
    }
    let last = blocks[4];
    let prev = blocks[3];
    if prev <= 0.0 {
        return last <= 0.0;
    }
    last / prev < 0.98
}
