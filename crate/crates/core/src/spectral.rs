//! Best constants of weighted Rellich-type quotients by mode-wise Rayleigh
//! minimisation.
//!
//! For `u = f(|x|) φ_k(x)` with `-Δ_S φ_k = c_k φ_k`, `c_k = k(n+k-2)`, the
//! numerator `∫|x|^{-2m}|Δu|²` becomes
//!
//! ```text
//! ∫ r^{n-2m-1} f''² + [(n-1)(2m+1) + 2c_k] ∫ r^{n-2m-3} f'²
//!   + c_k [c_k + (n-4-2m)(2m+2)] ∫ r^{n-2m-5} f² + (n-1) R^{n-2m-2} f'(R)²
//! ```
//!
//! and the denominators are `∫ r^{n-2m-3} f'² + c_k ∫ r^{n-2m-5} f²`
//! ([`QuotientKind::GradOverGrad`]) or `∫ r^{n-2m-5} f²`
//! ([`QuotientKind::DeltaOverU`]). The quotients are scale invariant, so
//! everything is computed on the unit ball.
//!
//! Writing `f = r^s h(t)` with `t = log r` and `s = -(n-2m-4)/2` turns every
//! weight into a constant, so the forms are assembled exactly with cubic
//! Hermite elements on a uniform grid in `t ∈ [-L, 0]`. The infima are not
//! attained (minimising sequences concentrate at the origin), which is why
//! the default span `L = 60` is long.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::RadialPotential;
use crate::radial_ode::{theta, OdeDim, OdeProblem};
use crate::roots::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuotientKind {
    /// `∫|x|^{-2m}|Δu|² / ∫|x|^{-2m-2}|∇u|²`.
    GradOverGrad,
    /// `∫|x|^{-2m}|Δu|² / ∫|x|^{-2m-4}u²`.
    DeltaOverU,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// Radial part free at `R`; higher modes vanish at `R`.
    #[serde(rename = "h2")]
    H2,
    /// `u = 0` on the sphere.
    #[serde(rename = "h2-cap-h10")]
    H2capH10,
    /// `u = ∂_r u = 0` on the sphere.
    #[serde(rename = "h20")]
    H20,
}

impl FromStr for QuotientKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grad-over-grad" | "grad" => Ok(QuotientKind::GradOverGrad),
            "delta-over-u" | "u" => Ok(QuotientKind::DeltaOverU),
            _ => Err(Error::InvalidParameter(format!("unknown quotient `{s}`"))),
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h2" => Ok(BoundaryCondition::H2),
            "h2-cap-h10" | "h2h10" => Ok(BoundaryCondition::H2capH10),
            "h20" => Ok(BoundaryCondition::H20),
            _ => Err(Error::InvalidParameter(format!(
                "unknown boundary condition `{s}`"
            ))),
        }
    }
}

impl fmt::Display for QuotientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuotientKind::GradOverGrad => "grad-over-grad",
            QuotientKind::DeltaOverU => "delta-over-u",
        })
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryCondition::H2 => "h2",
            BoundaryCondition::H2capH10 => "h2-cap-h10",
            BoundaryCondition::H20 => "h20",
        })
    }
}

/// Laplace–Beltrami eigenvalue `c_k = k(n+k-2)` on `S^{n-1}`.
pub fn c_k(n: u32, k: u32) -> f64 {
    k as f64 * (n as f64 + k as f64 - 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeForm {
    pub n: u32,
    pub m: f64,
    pub k: u32,
    pub c_k: f64,
    pub kind: QuotientKind,
    pub bc: BoundaryCondition,
}

impl ModeForm {
    pub fn new(n: u32, m: f64, k: u32, kind: QuotientKind, bc: BoundaryCondition) -> Self {
        ModeForm {
            n,
            m,
            k,
            c_k: c_k(n, k),
            kind,
            bc,
        }
    }

    /// Exponent `s` in `f = r^s h` (`f' = r^s h` for [`ModeForm::reduced`]).
    pub fn shift(&self) -> f64 {
        let s = -(self.n as f64 - 2.0 * self.m - 4.0) / 2.0;
        if self.reduced() {
            s - 1.0
        } else {
            s
        }
    }

    /// Radial gradient quotient with `f(R)` free. Constants make the
    /// denominator degenerate, so this case is solved for `g = f'` instead.
    pub fn reduced(&self) -> bool {
        self.kind == QuotientKind::GradOverGrad && self.k == 0 && self.bc == BoundaryCondition::H2
    }

    /// Whether profiles `f = O(r^k)` give finite forms.
    pub fn integrable(&self) -> bool {
        let (n, m, k) = (self.n as f64, self.m, self.k as f64);
        if self.kind == QuotientKind::GradOverGrad && self.k == 0 {
            n - 2.0 * m > 0.0
        } else {
            2.0 * k + n - 2.0 * m - 4.0 > 0.0
        }
    }

    fn coefficients(&self) -> (f64, f64) {
        let (n, m, ck) = (self.n as f64, self.m, self.c_k);
        let c1 = (n - 1.0) * (2.0 * m + 1.0) + 2.0 * ck;
        let c0 = ck * (ck + (n - 4.0 - 2.0 * m) * (2.0 * m + 2.0));
        (c1, c0)
    }

    /// Degrees of freedom fixed to zero: `h, h_t` at `t = -L`, plus the
    /// boundary conditions at `t = 0`.
    fn fixed_dofs(&self, ndof: usize) -> Vec<usize> {
        let mut fixed = vec![0, 1];
        if self.reduced() {
            return fixed;
        }
        let value_at_r = self.bc != BoundaryCondition::H2 || self.k >= 1;
        if value_at_r {
            fixed.push(ndof - 2);
        }
        if self.bc == BoundaryCondition::H20 {
            fixed.push(ndof - 1);
        }
        fixed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub nodes: usize,
    /// `L = log(R / r_min)`.
    pub span: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            nodes: 400,
            span: 60.0,
        }
    }
}

/// Uniform grid in `t = log(r/R)` with cubic Hermite elements; two unknowns
/// `(h, h_t)` per node.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub t: Vec<f64>,
    pub step: f64,
}

impl Discretization {
    pub fn new(grid: &GridParams) -> Result<Self> {
        if grid.nodes < 4 || !(grid.span > 0.0) {
            return Err(Error::InvalidParameter(
                "grid needs >= 4 nodes and a positive span".into(),
            ));
        }
        let step = grid.span / (grid.nodes - 1) as f64;
        let t = (0..grid.nodes)
            .map(|i| -grid.span + i as f64 * step)
            .collect();
        Ok(Discretization { t, step })
    }

    pub fn ndof(&self) -> usize {
        2 * self.t.len()
    }

    /// Radii of the nodes on the unit ball.
    pub fn radii(&self) -> Vec<f64> {
        self.t.iter().map(|t| t.exp()).collect()
    }
}

const GL5_X: [f64; 5] = [
    0.046_910_077_030_668_0,
    0.230_765_344_947_158_45,
    0.5,
    0.769_234_655_052_841_6,
    0.953_089_922_969_332,
];
const GL5_W: [f64; 5] = [
    0.118_463_442_528_094_55,
    0.239_314_335_249_683_23,
    0.284_444_444_444_444_4,
    0.239_314_335_249_683_23,
    0.118_463_442_528_094_55,
];

/// Cubic Hermite basis on `[0, 1]` scaled to an element of length `len`:
/// values, first and second `t`-derivatives.
pub(crate) fn hermite(xi: f64, len: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let (x2, x3) = (xi * xi, xi * xi * xi);
    let h = [
        1.0 - 3.0 * x2 + 2.0 * x3,
        len * (xi - 2.0 * x2 + x3),
        3.0 * x2 - 2.0 * x3,
        len * (x3 - x2),
    ];
    let d = [
        (-6.0 * xi + 6.0 * x2) / len,
        1.0 - 4.0 * xi + 3.0 * x2,
        (6.0 * xi - 6.0 * x2) / len,
        -2.0 * xi + 3.0 * x2,
    ];
    let dd = [
        (-6.0 + 12.0 * xi) / (len * len),
        (-4.0 + 6.0 * xi) / len,
        (6.0 - 12.0 * xi) / (len * len),
        (6.0 * xi - 2.0) / len,
    ];
    (h, d, dd)
}

/// Symmetric matrix with half-bandwidth 3, stored by rows of the lower band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    /// `band[i][j] = A[i][i-j]`.
    band: Vec<[f64; 4]>,
}

pub const HALF_BANDWIDTH: usize = 3;

impl BandedSym {
    pub fn zeros(n: usize) -> Self {
        BandedSym {
            band: vec![[0.0; 4]; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.band.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > HALF_BANDWIDTH {
            0.0
        } else {
            self.band[i][i - j]
        }
    }

    /// Add `v` to entries `(i, j)` and `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= HALF_BANDWIDTH, "entry outside the band");
        self.band[i][i - j] += v;
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            for j in i.saturating_sub(HALF_BANDWIDTH)..n.min(i + HALF_BANDWIDTH + 1) {
                y[i] += self.get(i, j) * x[j];
            }
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Principal submatrix on the kept indices (sorted ascending).
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut out = BandedSym::zeros(keep.len());
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep
                .iter()
                .enumerate()
                .take(a + 1)
                .skip(a.saturating_sub(HALF_BANDWIDTH))
            {
                out.band[a][a - b] = self.get(i, j);
            }
        }
        out
    }

    /// `self - sigma * other`.
    pub fn shifted(&self, sigma: f64, other: &BandedSym) -> Self {
        let band = self
            .band
            .iter()
            .zip(&other.band)
            .map(|(a, b)| {
                [
                    a[0] - sigma * b[0],
                    a[1] - sigma * b[1],
                    a[2] - sigma * b[2],
                    a[3] - sigma * b[3],
                ]
            })
            .collect();
        BandedSym { band }
    }

    pub fn scale_rows_cols(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            for j in 0..=HALF_BANDWIDTH.min(i) {
                out.band[i][j] *= d[i] * d[i - j];
            }
        }
        out
    }
}

/// `LDLᵀ` of a banded symmetric matrix without pivoting.
#[derive(Debug, Clone)]
pub struct BandedLdl {
    l: Vec<[f64; 4]>,
    pub d: Vec<f64>,
}

impl BandedLdl {
    pub fn factor(a: &BandedSym) -> Self {
        let n = a.dim();
        let mut l = vec![[0.0; 4]; n];
        let mut d = vec![0.0; n];
        let scale = a
            .band
            .iter()
            .map(|r| r[0].abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in i.saturating_sub(HALF_BANDWIDTH)..i {
                // l[i][i-j] = (a_ij - Σ_{p<j} l_ip l_jp d_p) / d_j
                let mut s = a.get(i, j);
                for p in i.saturating_sub(HALF_BANDWIDTH)..j {
                    s -= l[i][i - p] * l[j][j - p] * d[p];
                }
                l[i][i - j] = s / d[j];
            }
            let mut s = a.get(i, i);
            for p in i.saturating_sub(HALF_BANDWIDTH)..i {
                s -= l[i][i - p] * l[i][i - p] * d[p];
            }
            if s == 0.0 {
                s = -1e-300 * scale;
            }
            d[i] = s;
            l[i][0] = 1.0;
        }
        BandedLdl { l, d }
    }

    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&x| x < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut y = b.to_vec();
        for i in 0..n {
            for p in i.saturating_sub(HALF_BANDWIDTH)..i {
                y[i] -= self.l[i][i - p] * y[p];
            }
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for q in i + 1..n.min(i + HALF_BANDWIDTH + 1) {
                y[i] -= self.l[q][q - i] * y[q];
            }
        }
        y
    }
}

/// Assemble the numerator form for one mode on the full (unconstrained)
/// Hermite basis.
pub fn assemble_numerator(mode: &ModeForm, disc: &Discretization) -> BandedSym {
    let s = mode.shift();
    let (c1, c0) = mode.coefficients();
    if mode.reduced() {
        // ∫ r^{n-2m-1} g'² + (n-1)(2m+1) ∫ r^{n-2m-3} g² + (n-1) g(R)².
        let mut a = assemble(disc, s, |g, gr, _| [(gr, gr, 1.0), (g, g, c1), (g, g, 0.0)]);
        let nd = disc.ndof();
        a.add(nd - 2, nd - 2, mode.n as f64 - 1.0);
        return a;
    }
    let mut a = assemble(disc, s, |f, fr, frr| {
        [(frr, frr, 1.0), (fr, fr, c1), (f, f, c0)]
    });
    if mode.bc != BoundaryCondition::H20 {
        // (n-1) f'(R)² with R f'(R) = h_t(0) + s h(0).
        let nd = disc.ndof();
        let w = mode.n as f64 - 1.0;
        a.add(nd - 1, nd - 1, w);
        a.add(nd - 1, nd - 2, w * s);
        a.add(nd - 2, nd - 2, w * s * s);
    }
    a
}

/// Assemble the denominator form for one mode.
pub fn assemble_denominator(mode: &ModeForm, disc: &Discretization) -> BandedSym {
    let s = mode.shift();
    let ck = mode.c_k;
    if mode.reduced() {
        return assemble(disc, s, |g, _, _| [(g, g, 1.0), (g, g, 0.0), (g, g, 0.0)]);
    }
    match mode.kind {
        QuotientKind::GradOverGrad => {
            assemble(disc, s, |f, fr, _| [(fr, fr, 1.0), (f, f, ck), (f, f, 0.0)])
        }
        QuotientKind::DeltaOverU => {
            assemble(disc, s, |f, _, _| [(f, f, 1.0), (f, f, 0.0), (f, f, 0.0)])
        }
    }
}

type Row = [f64; 4];

/// `Σ_e ∫ Σ_terms coef · a_i b_j` where `(F, F_r, F_rr)` are the basis
/// images of `r^{-s}(f, r f', r² f'')`.
fn assemble<G>(disc: &Discretization, s: f64, terms: G) -> BandedSym
where
    G: Fn(Row, Row, Row) -> [(Row, Row, f64); 3],
{
    let nd = disc.ndof();
    let len = disc.step;
    let mut a = BandedSym::zeros(nd);
    // The element matrix is the same on every element.
    let mut local = [[0.0; 4]; 4];
    for (&xi, &w) in GL5_X.iter().zip(&GL5_W) {
        let (h, d, dd) = hermite(xi, len);
        let mut f = [0.0; 4];
        let mut fr = [0.0; 4];
        let mut frr = [0.0; 4];
        for i in 0..4 {
            f[i] = h[i];
            fr[i] = d[i] + s * h[i];
            frr[i] = dd[i] + (2.0 * s - 1.0) * d[i] + s * (s - 1.0) * h[i];
        }
        for (u, v, coef) in terms(f, fr, frr) {
            if coef == 0.0 {
                continue;
            }
            for i in 0..4 {
                for j in 0..4 {
                    local[i][j] += w * len * coef * u[i] * v[j];
                }
            }
        }
    }
    for e in 0..disc.t.len() - 1 {
        let base = 2 * e;
        for i in 0..4 {
            for j in 0..=i {
                a.add(base + i, base + j, local[i][j]);
            }
        }
    }
    a
}

/// Smallest eigenpair of `A x = λ B x` for banded symmetric `A` and
/// positive definite `B`.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub factorizations: usize,
}

pub fn smallest_eigenpair(a: &BandedSym, b: &BandedSym) -> Result<Eigenpair> {
    let fb = BandedLdl::factor(b);
    if let Some((row, &pivot)) = fb.d.iter().enumerate().find(|(_, &p)| !(p > 0.0)) {
        return Err(Error::IndefiniteDenominator { row, pivot });
    }
    let mut count = 0usize;
    let mut below = |sigma: f64| {
        count += 1;
        BandedLdl::factor(&a.shifted(sigma, b)).negative_pivots()
    };
    let mut lo = -1.0;
    while below(lo) > 0 {
        lo = 4.0 * lo;
        if lo < -1e300 {
            return Err(Error::NoConvergence { a: lo, b: 0.0 });
        }
    }
    let mut hi = 1.0;
    while below(hi) == 0 {
        lo = hi;
        hi *= 4.0;
        if hi > 1e300 {
            return Err(Error::NoConvergence { a: lo, b: hi });
        }
    }
    while hi - lo > 1e-14 * hi.abs().max(lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Inverse iteration with a shift just below the eigenvalue.
    let sigma = lo - 1e-10 * lo.abs().max(1e-12);
    let f = BandedLdl::factor(&a.shifted(sigma, b));
    count += 1;
    let n = a.dim();
    let mut x = vec![1.0; n];
    for _ in 0..6 {
        let bx = b.mul_vec(&x);
        let mut y = f.solve(&bx);
        let norm = b.quad_form(&y).sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        x = y;
    }
    // Fix the sign so that the largest component is positive.
    let big = x
        .iter()
        .cloned()
        .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if big < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(Eigenpair {
        value: 0.5 * (lo + hi),
        vector: x,
        factorizations: count,
    })
}

/// Minimiser of one mode on one grid.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSolution {
    pub k: u32,
    pub value: f64,
    pub nodes: usize,
    /// Nodal `t`, `h`, `h_t` of the eigenvector (`f = r^s h`).
    #[serde(skip)]
    pub t: Vec<f64>,
    #[serde(skip)]
    pub h: Vec<f64>,
    #[serde(skip)]
    pub ht: Vec<f64>,
    pub shift: f64,
    /// Set when the nodal data describe `f'`; holds `∫_{r_i}^1 f'` per node.
    #[serde(skip)]
    pub antiderivative: Option<Vec<f64>>,
}

impl ModeSolution {
    fn locate(&self, t: f64) -> (usize, f64) {
        let len = self.t[1] - self.t[0];
        let e = (((t - self.t[0]) / len).floor().max(0.0) as usize).min(self.t.len() - 2);
        (e, (t - self.t[e]) / len)
    }

    /// `(q, q', q'')` of the interpolated `q = r^s h`.
    fn nodal(&self, r: f64) -> (f64, f64, f64) {
        let len = self.t[1] - self.t[0];
        let (e, xi) = self.locate(r.ln());
        let (bh, bd, bdd) = hermite(xi, len);
        let dof = [self.h[e], self.ht[e], self.h[e + 1], self.ht[e + 1]];
        let (mut h, mut ht, mut htt) = (0.0, 0.0, 0.0);
        for i in 0..4 {
            h += bh[i] * dof[i];
            ht += bd[i] * dof[i];
            htt += bdd[i] * dof[i];
        }
        let s = self.shift;
        let rs = r.powf(s);
        (
            rs * h,
            rs * (ht + s * h) / r,
            rs * (htt + (2.0 * s - 1.0) * ht + s * (s - 1.0) * h) / (r * r),
        )
    }

    /// `∫_{e^a}^{e^b} q(r) dr` by five-point Gauss in `t`.
    fn integrate_nodal(&self, a: f64, b: f64) -> f64 {
        let len = b - a;
        GL5_X
            .iter()
            .zip(&GL5_W)
            .map(|(&x, &w)| {
                let r = (a + x * len).exp();
                w * len * self.nodal(r).0 * r
            })
            .sum()
    }

    fn with_antiderivative(mut self) -> Self {
        let n = self.t.len();
        let mut cum = vec![0.0; n];
        for i in (0..n - 1).rev() {
            cum[i] = cum[i + 1] + self.integrate_nodal(self.t[i], self.t[i + 1]);
        }
        self.antiderivative = Some(cum);
        self
    }

    /// `(f, f', f'')` of the eigenprofile at `r ∈ (0, 1]`. Below the mesh the
    /// profile is continued by its value at the first node, which is zero
    /// except in the free radial gradient case, where `f(R) = 0` is chosen.
    pub fn profile(&self, r: f64) -> (f64, f64, f64) {
        let t = r.ln();
        if r > 1.0 {
            return (0.0, 0.0, 0.0);
        }
        match &self.antiderivative {
            None if t <= self.t[0] => (0.0, 0.0, 0.0),
            None => self.nodal(r),
            Some(cum) if t <= self.t[0] => (-cum[0], 0.0, 0.0),
            Some(cum) => {
                let (e, _) = self.locate(t);
                let (g, gp, _) = self.nodal(r);
                (
                    -(cum[e + 1] + self.integrate_nodal(t, self.t[e + 1])),
                    g,
                    gp,
                )
            }
        }
    }
}

/// Solve one mode on one grid.
pub fn solve_mode(mode: &ModeForm, grid: &GridParams) -> Result<ModeSolution> {
    if !mode.integrable() {
        return Err(Error::NonIntegrableMode { k: mode.k as usize });
    }
    let disc = Discretization::new(grid)?;
    let nd = disc.ndof();
    let fixed = mode.fixed_dofs(nd);
    let keep: Vec<usize> = (0..nd).filter(|i| !fixed.contains(i)).collect();
    let a = assemble_numerator(mode, &disc).restrict(&keep);
    let b = assemble_denominator(mode, &disc).restrict(&keep);
    let eig = smallest_eigenpair(&a, &b)?;
    let mut full = vec![0.0; nd];
    for (x, &i) in eig.vector.iter().zip(&keep) {
        full[i] = *x;
    }
    let sol = ModeSolution {
        k: mode.k,
        value: eig.value,
        nodes: grid.nodes,
        h: full.iter().step_by(2).cloned().collect(),
        ht: full.iter().skip(1).step_by(2).cloned().collect(),
        t: disc.t,
        shift: mode.shift(),
        antiderivative: None,
    };
    Ok(if mode.reduced() {
        sol.with_antiderivative()
    } else {
        sol
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeValue {
    pub k: u32,
    /// Smallest quotient on the coarse and the refined grid.
    pub values: Option<(f64, f64)>,
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementRow {
    pub nodes: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RayleighResult {
    pub n: u32,
    pub m: f64,
    pub kind: QuotientKind,
    pub bc: BoundaryCondition,
    /// Value on the refined grid.
    pub value: f64,
    pub k_star: u32,
    pub refinement: Vec<RefinementRow>,
    /// Fourth-order Richardson extrapolation of the two grids.
    pub richardson: f64,
    pub modes: Vec<ModeValue>,
    #[serde(skip)]
    pub eigenvector: ModeSolution,
}

/// Minimise the quotient over modes `k = 0..=k_max` on the grid `grid` and
/// on the grid with twice the nodes.
pub fn min_rayleigh(
    n: u32,
    m: f64,
    kind: QuotientKind,
    bc: BoundaryCondition,
    k_max: u32,
    grid: &GridParams,
) -> Result<RayleighResult> {
    if n == 0 || !m.is_finite() {
        return Err(Error::InvalidParameter("need n >= 1 and finite m".into()));
    }
    let fine = GridParams {
        nodes: 2 * grid.nodes - 1,
        span: grid.span,
    };
    let solved: Vec<(u32, Result<(ModeSolution, ModeSolution)>)> = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let mode = ModeForm::new(n, m, k, kind, bc);
            let r = solve_mode(&mode, grid).and_then(|c| Ok((c, solve_mode(&mode, &fine)?)));
            (k, r)
        })
        .collect();
    let mut modes = Vec::new();
    let mut best: Option<(ModeSolution, ModeSolution)> = None;
    for (k, r) in solved {
        match r {
            Ok((c, f)) => {
                modes.push(ModeValue {
                    k,
                    values: Some((c.value, f.value)),
                    excluded: None,
                });
                if best.as_ref().map_or(true, |b| f.value < b.1.value) {
                    best = Some((c, f));
                }
            }
            Err(Error::NonIntegrableMode { .. }) => modes.push(ModeValue {
                k,
                values: None,
                excluded: Some("not integrable".into()),
            }),
            Err(e) => return Err(e),
        }
    }
    let (coarse, fine_sol) = best.ok_or_else(|| Error::Hypothesis("no integrable mode".into()))?;
    let richardson = fine_sol.value + (fine_sol.value - coarse.value) / 15.0;
    Ok(RayleighResult {
        n,
        m,
        kind,
        bc,
        value: fine_sol.value,
        k_star: fine_sol.k,
        refinement: vec![
            RefinementRow {
                nodes: coarse.nodes,
                value: coarse.value,
            },
            RefinementRow {
                nodes: fine_sol.nodes,
                value: fine_sol.value,
            },
        ],
        richardson,
        modes,
        eigenvector: fine_sol,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EqualInfimaReport {
    pub n: u32,
    pub m: f64,
    pub kind: QuotientKind,
    pub values: Vec<(BoundaryCondition, f64)>,
    pub tolerance: f64,
    pub agree: bool,
    /// Constrained infima are never below the less constrained ones.
    pub ordered: bool,
}

/// Compare the infima under the boundary conditions that should give the
/// same constant. The tolerance is 2% plus the grid-refinement changes.
pub fn check_equal_infima(
    n: u32,
    m: f64,
    kind: QuotientKind,
    grid: &GridParams,
) -> Result<EqualInfimaReport> {
    let bcs: &[BoundaryCondition] = match kind {
        QuotientKind::GradOverGrad => &[
            BoundaryCondition::H2,
            BoundaryCondition::H2capH10,
            BoundaryCondition::H20,
        ],
        QuotientKind::DeltaOverU => &[BoundaryCondition::H2capH10, BoundaryCondition::H20],
    };
    let mut values = Vec::new();
    let mut slack = 0.0;
    for &bc in bcs {
        let r = min_rayleigh(n, m, kind, bc, 8, grid)?;
        slack += (r.refinement[0].value - r.refinement[1].value).abs();
        values.push((bc, r.value));
    }
    let vmin = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let vmax = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let tolerance = 0.02 * vmax.abs() + slack;
    let ordered = values
        .windows(2)
        .all(|w| w[0].1 <= w[1].1 * (1.0 + 1e-9) + 1e-12);
    Ok(EqualInfimaReport {
        n,
        m,
        kind,
        values,
        tolerance,
        agree: vmax - vmin <= tolerance,
        ordered,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    /// Minimum of `W - 2V/r² + 2V_r/r - V_rr` over the sample grid.
    pub min_value: f64,
    pub min_radius: f64,
    /// Minimum of the same expression times `r²/V`.
    pub min_scaled: f64,
    pub holds: bool,
    /// `(n - 1 + R φ'(R)/φ(R)) V(R)` for the positive solution of the pair.
    pub boundary_value: Option<f64>,
    pub boundary_holds: Option<bool>,
    pub boundary_note: Option<String>,
}

/// Sample the pointwise condition on the Hardy–Rellich pair and its
/// boundary companion.
pub fn check_condition_main(
    v: &RadialPotential,
    w: &RadialPotential,
    n: u32,
    r: f64,
) -> ConditionReport {
    let samples = 400;
    let (lmin, lmax) = ((1e-8 * r).ln(), r.ln());
    let mut min_value = f64::INFINITY;
    let mut min_radius = r;
    let mut min_scaled = f64::INFINITY;
    for i in 0..samples {
        let x = (lmin + (lmax - lmin) * i as f64 / (samples - 1) as f64).exp();
        let jv = v.jet(x);
        let e = w.value(x) - 2.0 * jv.v / (x * x) + 2.0 * jv.d / x - jv.dd;
        if e < min_value {
            min_value = e;
            min_radius = x;
        }
        min_scaled = min_scaled.min(e * x * x / jv.v);
    }
    let holds = min_scaled >= -1e-12;
    let (boundary_value, boundary_note) = match OdeProblem::new(
        n,
        v.clone(),
        w.clone(),
        1.0,
        r,
        OdeDim::NDim,
    )
    .and_then(|p| theta(&p))
    {
        Ok(th) => {
            let vr = v.value(r);
            (Some((n as f64 - 1.0 + r * th / vr) * vr), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    ConditionReport {
        min_value,
        min_radius,
        min_scaled,
        holds,
        boundary_value,
        boundary_holds: boundary_value.map(|b| b >= -1e-12),
        boundary_note,
    }
}

/// Endpoints of the interval of `m` for which `V = |x|^{-2m}` satisfies the
/// pointwise condition with its optimal Hardy partner.
pub fn restrict_interval(n: u32) -> (f64, f64) {
    let n = n as f64;
    let s = 2.0 * (n * n - n + 1.0).sqrt();
    ((-(n + 4.0) - s) / 6.0, (-(n + 4.0) + s) / 6.0)
}

/// The same endpoints located numerically: bisection in `m` on the sampled
/// margin of [`check_condition_main`] for the pair
/// `(|x|^{-2m}, ((n-2m-2)/2)²|x|^{-2m-2})`.
pub fn locate_restrict_interval(n: u32) -> Result<(f64, f64)> {
    let margin = |m: f64| {
        let g = (n as f64 - 2.0 * m - 2.0) / 2.0;
        let v = RadialPotential::power(m, 1.0);
        let w = RadialPotential::scaled(g * g, RadialPotential::power(m + 1.0, 1.0));
        check_condition_main(&v, &w, n, 1.0).min_scaled
    };
    let vertex = -(n as f64 + 4.0) / 6.0;
    let span = 2.0 * n as f64 + 4.0;
    let lo = bisect(margin, vertex - span, vertex, 1e-12, 200)?.root;
    let hi = bisect(margin, vertex, vertex + span, 1e-12, 200)?.root;
    Ok((lo, hi))
}

/// `H_{n,m} = ((n+2m)(n-4-2m)/4)²`.
pub fn h_nm(n: u32, m: f64) -> f64 {
    let n = n as f64;
    ((n + 2.0 * m) * (n - 4.0 - 2.0 * m) / 4.0).powi(2)
}

/// `C(3) = 25/36`, `C(4) = 3`, `C(n) = n²/4` for `n >= 5`.
pub fn c_n(n: u32) -> Option<f64> {
    match n {
        0..=2 => None,
        3 => Some(25.0 / 36.0),
        4 => Some(3.0),
        _ => Some((n as f64).powi(2) / 4.0),
    }
}

/// Closed form of `a_{n,m}` where one is known: `C(n)` for `m = 0`, and
/// `(n+2m)²/4` for `m` inside [`restrict_interval`].
pub fn a_nm_closed(n: u32, m: f64) -> Option<f64> {
    if m == 0.0 {
        return c_n(n);
    }
    let (lo, hi) = restrict_interval(n);
    if m >= lo && m <= hi {
        Some((n as f64 + 2.0 * m).powi(2) / 4.0)
    } else {
        None
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsRow {
    pub n: u32,
    pub m: f64,
    pub a_closed: Option<f64>,
    pub a_computed: Option<f64>,
    pub h_closed: f64,
    pub h_computed: Option<f64>,
    pub c_n: Option<f64>,
    pub restrict: (f64, f64),
}

/// Closed-form constants next to their computed counterparts.
pub fn constants_row(n: u32, m: f64, grid: &GridParams) -> Result<ConstantsRow> {
    let a = min_rayleigh(
        n,
        m,
        QuotientKind::GradOverGrad,
        BoundaryCondition::H2,
        8,
        grid,
    )
    .ok()
    .map(|r| r.value);
    let h = min_rayleigh(
        n,
        m,
        QuotientKind::DeltaOverU,
        BoundaryCondition::H2capH10,
        8,
        grid,
    )
    .ok()
    .map(|r| r.value);
    Ok(ConstantsRow {
        n,
        m,
        a_closed: a_nm_closed(n, m),
        a_computed: a,
        h_closed: h_nm(n, m),
        h_computed: h,
        c_n: c_n(n),
        restrict: restrict_interval(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_potential, PotentialSpec};
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn dense(a: &BandedSym) -> DMatrix<f64> {
        let d = a.to_dense();
        DMatrix::from_fn(a.dim(), a.dim(), |i, j| d[i][j])
    }

    /// Independent route: Cholesky of B, then a dense symmetric eigensolver.
    fn dense_smallest(a: &BandedSym, b: &BandedSym) -> f64 {
        let l = dense(b).cholesky().expect("B positive definite").l();
        let li = l.clone().try_inverse().unwrap();
        let c = &li * dense(a) * li.transpose();
        let c = 0.5 * (&c + c.transpose());
        SymmetricEigen::new(c).eigenvalues.min()
    }

    fn pencil(mode: &ModeForm, nodes: usize) -> (BandedSym, BandedSym) {
        let disc = Discretization::new(&GridParams { nodes, span: 20.0 }).unwrap();
        let nd = disc.ndof();
        let fixed = mode.fixed_dofs(nd);
        let keep: Vec<usize> = (0..nd).filter(|i| !fixed.contains(i)).collect();
        (
            assemble_numerator(mode, &disc).restrict(&keep),
            assemble_denominator(mode, &disc).restrict(&keep),
        )
    }

    #[test]
    fn c_k_values() {
        assert_eq!(c_k(5, 0), 0.0);
        let mut prev = -1.0;
        for k in 0..10 {
            assert!(c_k(4, k) > prev);
            prev = c_k(4, k);
        }
        assert_eq!(c_k(3, 2), 6.0);
    }

    #[test]
    fn inertia_solver_matches_dense_oracle() {
        for &(n, m, k, kind, bc) in &[
            (5, 0.0, 0, QuotientKind::GradOverGrad, BoundaryCondition::H2),
            (
                4,
                0.0,
                1,
                QuotientKind::GradOverGrad,
                BoundaryCondition::H20,
            ),
            (
                6,
                0.0,
                0,
                QuotientKind::DeltaOverU,
                BoundaryCondition::H2capH10,
            ),
            (7, 0.5, 2, QuotientKind::DeltaOverU, BoundaryCondition::H2),
        ] {
            let mode = ModeForm::new(n, m, k, kind, bc);
            let (a, b) = pencil(&mode, 60);
            let ours = smallest_eigenpair(&a, &b).unwrap();
            let oracle = dense_smallest(&a, &b);
            assert_relative_eq!(ours.value, oracle, max_relative = 1e-9);
            // Residual of the eigenvector.
            let ax = a.mul_vec(&ours.vector);
            let bx = b.mul_vec(&ours.vector);
            let res: f64 = ax
                .iter()
                .zip(&bx)
                .map(|(p, q)| (p - ours.value * q).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale: f64 = ax.iter().map(|p| p * p).sum::<f64>().sqrt();
            assert!(res < 1e-6 * scale, "{res} vs {scale}");
        }
    }

    #[test]
    fn eigenvalues_invariant_under_congruence_scaling() {
        let mode = ModeForm::new(5, 0.0, 1, QuotientKind::GradOverGrad, BoundaryCondition::H2);
        let (a, b) = pencil(&mode, 40);
        let d: Vec<f64> = (0..a.dim()).map(|i| 1.0 + (i % 7) as f64 * 0.3).collect();
        let v0 = smallest_eigenpair(&a, &b).unwrap().value;
        let v1 = smallest_eigenpair(&a.scale_rows_cols(&d), &b.scale_rows_cols(&d))
            .unwrap()
            .value;
        assert_relative_eq!(v0, v1, max_relative = 1e-10);
    }

    /// Exact form values of a monomial `f = r^p` on `[r_min, 1]`, computed
    /// from the weights directly.
    fn monomial_forms(mode: &ModeForm, p: f64, r_min: f64) -> (f64, f64) {
        let (n, m) = (mode.n as f64, mode.m);
        let (c1, c0) = mode.coefficients();
        let int = |e: f64| {
            if e.abs() < 1e-14 {
                -(r_min.ln())
            } else {
                (1.0 - r_min.powf(e)) / e
            }
        };
        // r^{n-2m-1}(p(p-1) r^{p-2})² etc.
        let e2 = n - 2.0 * m - 1.0 + 2.0 * p - 4.0 + 1.0;
        let e1 = n - 2.0 * m - 3.0 + 2.0 * p - 2.0 + 1.0;
        let e0 = n - 2.0 * m - 5.0 + 2.0 * p + 1.0;
        let mut num = (p * (p - 1.0)).powi(2) * int(e2) + c1 * p * p * int(e1) + c0 * int(e0);
        if mode.bc != BoundaryCondition::H20 {
            num += (n - 1.0) * p * p;
        }
        let den = match mode.kind {
            QuotientKind::GradOverGrad => p * p * int(e1) + mode.c_k * int(e0),
            QuotientKind::DeltaOverU => int(e0),
        };
        (num, den)
    }

    /// The Hermite interpolant of `h = e^{(p-s)t}` on a fine grid against
    /// the exact monomial integrals.
    #[test]
    fn forms_match_monomial_integrals() {
        let span = 8.0;
        let disc = Discretization::new(&GridParams { nodes: 401, span }).unwrap();
        for &(n, m, k, kind) in &[
            (5u32, 0.0, 0u32, QuotientKind::GradOverGrad),
            (6, 0.5, 1, QuotientKind::DeltaOverU),
            (3, -0.5, 2, QuotientKind::GradOverGrad),
        ] {
            for bc in [BoundaryCondition::H2, BoundaryCondition::H2capH10] {
                let mode = ModeForm::new(n, m, k, kind, bc);
                let p: f64 = 2.0;
                // The reduced form acts on g = f' = p r^{p-1}.
                let (amp, q) = if mode.reduced() {
                    (p, p - 1.0 - mode.shift())
                } else {
                    (1.0, p - mode.shift())
                };
                let x: Vec<f64> = disc
                    .t
                    .iter()
                    .flat_map(|&t| [amp * (q * t).exp(), amp * q * (q * t).exp()])
                    .collect();
                let num = assemble_numerator(&mode, &disc).quad_form(&x);
                let den = assemble_denominator(&mode, &disc).quad_form(&x);
                let (en, ed) = monomial_forms(&mode, p, (-span).exp());
                assert_relative_eq!(num, en, max_relative = 1e-6);
                assert_relative_eq!(den, ed, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn linear_profile_h20_single_term() {
        // f = r: f'' = 0, so only the f' and f terms survive; with k = 0 only
        // (n-1)∫ r^{n-3} f'².
        let span = 6.0;
        let disc = Discretization::new(&GridParams { nodes: 201, span }).unwrap();
        let n = 5u32;
        let mode = ModeForm::new(
            n,
            0.0,
            0,
            QuotientKind::GradOverGrad,
            BoundaryCondition::H20,
        );
        let q = 1.0 - mode.shift();
        let x: Vec<f64> = disc
            .t
            .iter()
            .flat_map(|&t| [(q * t).exp(), q * (q * t).exp()])
            .collect();
        let num = assemble_numerator(&mode, &disc).quad_form(&x);
        let r_min: f64 = (-span).exp();
        let want = (n as f64 - 1.0) * (1.0 - r_min.powi(n as i32 - 2)) / (n as f64 - 2.0);
        assert_relative_eq!(num, want, max_relative = 1e-6);
    }

    #[test]
    fn hermite_convergence_order() {
        let mode = ModeForm::new(5, 0.0, 1, QuotientKind::GradOverGrad, BoundaryCondition::H2);
        let vals: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&nodes| {
                solve_mode(&mode, &GridParams { nodes, span: 15.0 })
                    .unwrap()
                    .value
            })
            .collect();
        let ratio = (vals[0] - vals[1]) / (vals[1] - vals[2]);
        // Fourth-order elements; the eigenvalue error behaves like h^4 (ratio ~ 16).
        assert!(ratio > 8.0, "{vals:?} ratio {ratio}");
    }

    #[test]
    fn best_constants() {
        let g = GridParams {
            nodes: 200,
            span: 60.0,
        };
        let cases = [
            (
                5,
                0.0,
                QuotientKind::GradOverGrad,
                BoundaryCondition::H2,
                6.25,
            ),
            (
                4,
                0.0,
                QuotientKind::GradOverGrad,
                BoundaryCondition::H2,
                3.0,
            ),
            (
                3,
                0.0,
                QuotientKind::GradOverGrad,
                BoundaryCondition::H2,
                25.0 / 36.0,
            ),
            (
                6,
                0.0,
                QuotientKind::DeltaOverU,
                BoundaryCondition::H2capH10,
                9.0,
            ),
        ];
        for (n, m, kind, bc, want) in cases {
            let r = min_rayleigh(n, m, kind, bc, 6, &g).unwrap();
            assert!(
                (r.value - want).abs() < 0.02 * want,
                "n={n}: {} vs {want}",
                r.value
            );
        }
    }

    #[test]
    fn bc_ordering_and_kmax_stability() {
        let g = GridParams {
            nodes: 120,
            span: 40.0,
        };
        let rep = check_equal_infima(5, 0.0, QuotientKind::GradOverGrad, &g).unwrap();
        assert!(rep.ordered, "{:?}", rep.values);
        let a = min_rayleigh(
            4,
            0.0,
            QuotientKind::GradOverGrad,
            BoundaryCondition::H2,
            6,
            &g,
        )
        .unwrap();
        let b = min_rayleigh(
            4,
            0.0,
            QuotientKind::GradOverGrad,
            BoundaryCondition::H2,
            12,
            &g,
        )
        .unwrap();
        assert!(a.k_star + 5 <= 6);
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn non_integrable_modes_are_reported() {
        let g = GridParams {
            nodes: 60,
            span: 20.0,
        };
        let r = min_rayleigh(
            4,
            0.0,
            QuotientKind::DeltaOverU,
            BoundaryCondition::H2capH10,
            3,
            &g,
        )
        .unwrap();
        assert!(r.modes[0].excluded.is_some());
        assert!(r.modes[1].values.is_some());
        let mode = ModeForm::new(4, 0.0, 0, QuotientKind::DeltaOverU, BoundaryCondition::H20);
        assert!(matches!(
            solve_mode(&mode, &g),
            Err(Error::NonIntegrableMode { k: 0 })
        ));
    }

    #[test]
    fn eigenprofile_is_smooth_and_normalised() {
        let g = GridParams {
            nodes: 80,
            span: 20.0,
        };
        let mode = ModeForm::new(
            5,
            0.0,
            0,
            QuotientKind::GradOverGrad,
            BoundaryCondition::H20,
        );
        let sol = solve_mode(&mode, &g).unwrap();
        let (f, fp, _) = sol.profile(1.0);
        assert!(f.abs() < 1e-12 && fp.abs() < 1e-9);
        let r = 0.3;
        let h = 1e-5;
        let (f0, d0, dd0) = sol.profile(r);
        let (fp_, _, _) = sol.profile(r + h);
        let (fm_, _, _) = sol.profile(r - h);
        assert!(f0.is_finite());
        assert_relative_eq!(d0, (fp_ - fm_) / (2.0 * h), max_relative = 1e-5);
        let (_, dp, _) = sol.profile(r + h);
        let (_, dm, _) = sol.profile(r - h);
        assert_relative_eq!(dd0, (dp - dm) / (2.0 * h), max_relative = 1e-4);
    }

    #[test]
    fn reduced_profile_integrates_its_derivative() {
        let g = GridParams {
            nodes: 80,
            span: 20.0,
        };
        let mode = ModeForm::new(5, 0.0, 0, QuotientKind::GradOverGrad, BoundaryCondition::H2);
        assert!(mode.reduced());
        let sol = solve_mode(&mode, &g).unwrap();
        assert_eq!(sol.profile(1.0).0, 0.0);
        let (r, h) = (0.2, 1e-5);
        let d = (sol.profile(r + h).0 - sol.profile(r - h).0) / (2.0 * h);
        assert_relative_eq!(d, sol.profile(r).1, max_relative = 1e-6);
    }

    #[test]
    fn condition_examples() {
        let one = make_potential(&PotentialSpec::one(), 1.0).unwrap();
        for (n, holds) in [(5u32, true), (4, false)] {
            let c = ((n as f64 - 2.0) / 2.0).powi(2);
            let w =
                make_potential(&PotentialSpec::scaled(c, PotentialSpec::power(1.0)), 1.0).unwrap();
            let rep = check_condition_main(&one, &w, n, 1.0);
            assert_eq!(rep.holds, holds, "{rep:?}");
            assert!((rep.min_scaled - (c - 2.0)).abs() < 1e-12);
            // θ = -(n-2)/2 so the boundary value is n/2.
            assert!((rep.boundary_value.unwrap() - n as f64 / 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(h_nm(6, 0.0), 9.0);
        assert_eq!(h_nm(8, 1.0), 25.0);
        assert_eq!(c_n(5), Some(6.25));
        assert_eq!(a_nm_closed(4, 0.0), Some(3.0));
        let (lo, hi) = restrict_interval(5);
        assert!(lo < -2.0 && hi > 0.0 && hi < 0.05);
        let (a, b) = locate_restrict_interval(5).unwrap();
        assert!((a - lo).abs() < 1e-9 && (b - hi).abs() < 1e-9);
    }
}
