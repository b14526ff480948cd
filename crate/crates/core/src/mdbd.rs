//! Mixtures of Binomial distributions, Bernstein polynomials and pdf fitting.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::error::{Error, Result};

/// Smallest `w(x)` accepted as a divisor in the Hald terms.
pub const PDF_FLOOR: f64 = 1e-12;

/// Sum with pairwise splitting, so the result does not depend on thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// `B_{N,i}(x) = C(N,i) x^i (1−x)^{N−i}`, evaluated in log space.
pub fn bernstein(n: usize, i: usize, x: f64) -> Result<f64> {
    if i > n {
        return Err(Error::IndexOutOfRange { index: i, bound: n + 1 });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("x = {x} must lie in [0, 1]")));
    }
    Ok(bernstein_unchecked(n, i, x))
}

fn bernstein_unchecked(n: usize, i: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    if x == 1.0 {
        return if i == n { 1.0 } else { 0.0 };
    }
    let lg = ln_binomial(n as u64, i as u64) + i as f64 * x.ln() + (n - i) as f64 * (-x).ln_1p();
    lg.exp()
}

/// `p`-th derivative of `B_{N,i}`:
/// `N!/(N−p)! Σ_k (−1)^{k+p} C(p,k) B_{N−p,i−k}(x)`.
pub fn bernstein_derivative(n: usize, i: usize, order: usize, x: f64) -> Result<f64> {
    if i > n {
        return Err(Error::IndexOutOfRange { index: i, bound: n + 1 });
    }
    if order > n {
        return Err(Error::IndexOutOfRange {
            index: order,
            bound: n + 1,
        });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("x = {x} must lie in [0, 1]")));
    }
    let falling = ln_factorial(n as u64) - ln_factorial((n - order) as u64);
    let mut total = 0.0;
    for k in 0..=order {
        if k > i || i - k > n - order {
            continue;
        }
        let sign = if (k + order).is_multiple_of(2) { 1.0 } else { -1.0 };
        let coef = (falling + ln_binomial(order as u64, k as u64)).exp();
        total += sign * coef * bernstein_unchecked(n - order, i - k, x);
    }
    Ok(total)
}

/// A mixture `{(B(p_j, N), α_j)}` of Binomial distributions sharing the degree `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdbdFile", into = "MdbdFile")]
pub struct Mdbd {
    degree: usize,
    p: Vec<f64>,
    alpha: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MdbdFile {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "T")]
    t: usize,
    p: Vec<f64>,
    alpha: Vec<f64>,
}

impl TryFrom<MdbdFile> for Mdbd {
    type Error = Error;

    fn try_from(f: MdbdFile) -> Result<Self> {
        if f.t != f.p.len() {
            return Err(Error::DimensionMismatch {
                expected: f.t,
                found: f.p.len(),
            });
        }
        Mdbd::new(f.n, f.p, f.alpha)
    }
}

impl From<Mdbd> for MdbdFile {
    fn from(m: Mdbd) -> Self {
        Self {
            n: m.degree,
            t: m.p.len(),
            p: m.p,
            alpha: m.alpha,
        }
    }
}

impl Mdbd {
    /// Validates distinct `p_j ∈ (0,1)`, `α_j ∈ (0,1]` and `Σ α ≤ 1`.
    ///
    /// `α = (1)` is allowed so that a single Binomial is a valid mixture.
    pub fn new(degree: usize, p: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        if p.is_empty() {
            return Err(Error::InvalidParameter("a mixture needs at least one component".into()));
        }
        if p.len() != alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: alpha.len(),
            });
        }
        if let Some(bad) = p.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::InvalidParameter(format!("p = {bad} must lie in (0, 1)")));
        }
        let mut sorted = p.clone();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("repeated p = {}", w[0])));
        }
        for (index, &value) in alpha.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::WeightOutOfRange { index, value });
            }
        }
        let total = pairwise_sum(&alpha);
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("weights sum to {total} > 1")));
        }
        Ok(Self { degree, p, alpha })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn size(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `δ = 1 − Σ α`, clamped at 0.
    pub fn delta(&self) -> f64 {
        (1.0 - pairwise_sum(&self.alpha)).max(0.0)
    }

    /// The same mixture at another degree.
    pub fn with_degree(&self, degree: usize) -> Result<Self> {
        Self::new(degree, self.p.clone(), self.alpha.clone())
    }
}

/// `γ_i = Σ_j α_j B_{N,i}(p_j)` for `i = 0..=N`.
pub fn induce_gamma(mix: &Mdbd) -> Vec<f64> {
    let n = mix.degree;
    (0..=n)
        .map(|i| {
            let terms: Vec<f64> = mix
                .p
                .iter()
                .zip(&mix.alpha)
                .map(|(&p, &a)| a * bernstein_unchecked(n, i, p))
                .collect();
            pairwise_sum(&terms)
        })
        .collect()
}

type Derivs = dyn Fn(usize, f64) -> f64 + Send + Sync;

/// A density on `[0,1]` with derivatives up to fourth order and the
/// constants `φ_w ≥ max w` and `C` with `w = C·f`.
#[derive(Clone)]
pub struct SmoothPdf {
    name: String,
    derivs: Arc<Derivs>,
    phi: f64,
    c: f64,
}

impl fmt::Debug for SmoothPdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothPdf")
            .field("name", &self.name)
            .field("phi", &self.phi)
            .field("c", &self.c)
            .finish()
    }
}

impl SmoothPdf {
    /// `derivs(k, x)` must return `w^{(k)}(x)` for `k = 0..=4`.
    pub fn new<F>(name: impl Into<String>, phi: f64, c: f64, derivs: F) -> Result<Self>
    where
        F: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        if !(phi.is_finite() && phi > 0.0 && c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter("φ_w and C must be positive".into()));
        }
        Ok(Self {
            name: name.into(),
            derivs: Arc::new(derivs),
            phi,
            c,
        })
    }

    pub fn uniform() -> Self {
        Self::new("uniform", 1.0, 1.0, |k, _| if k == 0 { 1.0 } else { 0.0 }).expect("valid constants")
    }

    /// `w(x) = k/(1−e^{−k}) e^{−kx}` for `k > 0`.
    pub fn exponential(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponential rate k = {k} must be positive"
            )));
        }
        let c = k / -(-k).exp_m1();
        Self::new(format!("exp:{k}"), c, c, move |order, x| {
            let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
            sign * k.powi(order as i32) * c * (-k * x).exp()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn w(&self, x: f64) -> f64 {
        (self.derivs)(0, x)
    }

    pub fn deriv(&self, order: usize, x: f64) -> f64 {
        (self.derivs)(order, x)
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `f = w / C`.
    pub fn f(&self, x: f64) -> f64 {
        self.w(x) / self.c
    }
}

/// Named densities accepted on the command line: `uniform` or `exp:k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Canonical {
    Uniform,
    Exponential(f64),
}

impl FromStr for Canonical {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "uniform" {
            return Ok(Self::Uniform);
        }
        if let Some(k) = s.strip_prefix("exp:") {
            let k: f64 = k
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad exponential rate in {s:?}")))?;
            return Ok(Self::Exponential(k));
        }
        Err(Error::InvalidParameter(format!(
            "unknown pdf {s:?}; expected uniform or exp:k"
        )))
    }
}

pub fn canonical_pdf(which: Canonical) -> Result<SmoothPdf> {
    match which {
        Canonical::Uniform => Ok(SmoothPdf::uniform()),
        Canonical::Exponential(k) => SmoothPdf::exponential(k),
    }
}

/// Correction terms `(b₁(x), b₂(x))` of the Hald expansion.
pub fn hald_terms(w: &SmoothPdf, x: f64) -> Result<(f64, f64)> {
    let w0 = w.w(x);
    if w0 <= PDF_FLOOR {
        return Err(Error::DivisionByZero { x });
    }
    let (w1, w2, w3, w4) = (w.deriv(1, x), w.deriv(2, x), w.deriv(3, x), w.deriv(4, x));
    let u = 1.0 - 2.0 * x;
    let v = x * (1.0 - x);
    let b1 = (-w0 + u * w1 + 0.5 * v * w2) / w0;
    let b2 = (w0 - 3.0 * u * w1 + (1.0 - 6.0 * x + 6.0 * x * x) * w2 + 5.0 / 6.0 * v * u * w3 + v * v / 8.0 * w4) / w0;
    Ok((b1, b2))
}

/// Truncated expansion `η̂ = b₁/N + b₂/N²` at `x`.
pub fn hald_eta(w: &SmoothPdf, n: usize, x: f64) -> Result<f64> {
    let (b1, b2) = hald_terms(w, x)?;
    let nf = n as f64;
    Ok(b1 / nf + b2 / (nf * nf))
}

/// Composite trapezoid error bound `∫|f''| / (8T²)`.
pub fn trapezoid_error_bound(f_second_abs_integral: f64, t: usize) -> f64 {
    let t = t as f64;
    f_second_abs_integral / (8.0 * t * t)
}

/// Output of [`app_dscr_pdf`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdfFit {
    pub mdbd: Mdbd,
    /// Mass lost to the discretization, `1 − (S_T/(T+1)) / (S_N/N)`.
    pub delta_w: f64,
    /// `S_{N+1,N} = Σ_{i=0}^{N} w(i/N)`.
    pub s_n: f64,
    /// `S_{T,T+1} = Σ_{j=1}^{T} w(j/(T+1))`.
    pub s_t: f64,
    /// Grid size before any component was dropped.
    pub grid: usize,
    /// Grid indices `j` (1-based) whose weight fell outside `(0,1)`.
    pub dropped: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Fits a mixture whose induced distribution tracks `w(i/N)/S_{N+1,N}`.
///
/// Uses `T = ⌈N √(φ_w/ε_I)⌉` equally spaced nodes `p_j = j/(T+1)` and
/// weights `α_j = w(p_j) N / ((T+1) S_{N+1,N})`.
pub fn app_dscr_pdf(w: &SmoothPdf, n: usize, eps_i: f64) -> Result<PdfFit> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    if !(eps_i.is_finite() && eps_i > 0.0) {
        return Err(Error::InvalidParameter(format!("eps_I = {eps_i} must be positive")));
    }
    let phi = w.phi().max(1.0);
    let t_real = (n as f64 * (phi / eps_i).sqrt()).ceil();
    if !(t_real >= 1.0) {
        return Err(Error::InvalidParameter(format!("T = {t_real} < 1")));
    }
    let t = t_real as usize;
    let nf = n as f64;
    let tf = t as f64;
    let grid_n: Vec<f64> = (0..=n).map(|i| w.w(i as f64 / nf)).collect();
    let s_n = pairwise_sum(&grid_n);
    if !(s_n > 0.0) {
        return Err(Error::InvalidParameter("pdf vanishes on the degree grid".into()));
    }
    let nodes: Vec<f64> = (1..=t).map(|j| j as f64 / (tf + 1.0)).collect();
    let values: Vec<f64> = nodes.iter().map(|&p| w.w(p)).collect();
    let s_t = pairwise_sum(&values);
    let mut p = Vec::with_capacity(t);
    let mut alpha = Vec::with_capacity(t);
    let mut dropped = Vec::new();
    let mut warnings = Vec::new();
    for (j, (&node, &value)) in nodes.iter().zip(&values).enumerate() {
        let a = value * nf / ((tf + 1.0) * s_n);
        if a > 0.0 && a < 1.0 {
            p.push(node);
            alpha.push(a);
        } else {
            dropped.push(j + 1);
            warnings.push(format!("dropped component j = {} with weight {a}", j + 1));
        }
    }
    if p.is_empty() {
        return Err(Error::WeightOutOfRange {
            index: 0,
            value: values[0] * nf / ((tf + 1.0) * s_n),
        });
    }
    let delta_w = 1.0 - (s_t / (tf + 1.0)) / (s_n / nf);
    let mdbd = Mdbd::new(n, p, alpha)?;
    Ok(PdfFit {
        mdbd,
        delta_w,
        s_n,
        s_t,
        grid: t,
        dropped,
        warnings,
    })
}

/// One row of the fit quality table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub i: usize,
    /// `γ_i / (1 − δ)`.
    pub normalized: f64,
    /// `ŵ(i/N) = w(i/N)/S_{N+1,N}`.
    pub target: f64,
    pub eta_hat: f64,
    /// Distance from the band `(1 + 2η̂)·ŵ`.
    pub residual: f64,
    /// Allowed additive slack.
    pub slack: f64,
    pub within: bool,
}

/// Compares the fitted distribution with `ŵ` for `i ∈ [3, N−3]`, allowing
/// `slack_factor · 2ε_I / S_{N+1,N}` around `(1 + 2η̂_i) ŵ(i/N)`.
pub fn residual_table(w: &SmoothPdf, fit: &PdfFit, eps_i: f64, slack_factor: f64) -> Result<Vec<ResidualRow>> {
    let mix = &fit.mdbd;
    let n = mix.degree();
    let gamma = induce_gamma(mix);
    let mass = 1.0 - mix.delta();
    let slack = slack_factor * 2.0 * eps_i / fit.s_n;
    let mut rows = Vec::new();
    if n < 6 {
        return Ok(rows);
    }
    for i in 3..=n - 3 {
        let x = i as f64 / n as f64;
        let target = w.w(x) / fit.s_n;
        let eta_hat = hald_eta(w, n, x)?;
        let normalized = gamma[i] / mass;
        let residual = (normalized - (1.0 + 2.0 * eta_hat) * target).abs();
        rows.push(ResidualRow {
            i,
            normalized,
            target,
            eta_hat,
            residual,
            slack,
            within: residual <= slack,
        });
    }
    Ok(rows)
}

/// Thresholds for [`check_pdf_conditions`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionParams {
    pub n0: usize,
    pub mu: f64,
    /// Lower bound standing in for `Ω(1)` in the boundary-mass condition.
    pub boundary_floor: f64,
    pub grid: usize,
}

impl ConditionParams {
    pub fn new(n0: usize, mu: f64) -> Self {
        Self {
            n0,
            mu,
            boundary_floor: 0.1,
            grid: 10 * n0 + 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Evaluates the smoothness hypotheses of the fitting theorems on a grid.
///
/// `o(N)` bounds are read as `≤ N₀`. A pdf vanishing somewhere on the grid
/// fails the two Hald-term conditions with an infinite measurement.
pub fn check_pdf_conditions(w: &SmoothPdf, params: &ConditionParams) -> Vec<Condition> {
    let n0 = params.n0 as f64;
    let phi = w.phi();
    let points = params.grid.max(2);
    let xs: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
    let max_abs = |f: &dyn Fn(f64) -> f64| xs.iter().fold(0.0f64, |m, &x| m.max(f(x).abs()));

    let mut b1_max = 0.0f64;
    let mut b2_max = 0.0f64;
    for &x in &xs {
        match hald_terms(w, x) {
            Ok((b1, b2)) => {
                b1_max = b1_max.max(b1.abs());
                b2_max = b2_max.max(b2.abs());
            }
            Err(_) => {
                b1_max = f64::INFINITY;
                b2_max = f64::INFINITY;
            }
        }
    }

    let f_min = xs.iter().map(|&x| w.f(x)).fold(f64::INFINITY, f64::min);
    let f_max = xs.iter().map(|&x| w.f(x)).fold(f64::NEG_INFINITY, f64::max);
    let f2: Vec<f64> = xs.iter().map(|&x| (w.deriv(2, x) / w.c()).abs()).collect();
    let h = 1.0 / (points - 1) as f64;
    let f2_integral = h * (pairwise_sum(&f2) - 0.5 * (f2[0] + f2[points - 1]));

    let mut out = Vec::new();
    let mut push = |name: &str, measured: f64, bound: f64, passed: bool| {
        out.push(Condition {
            name: name.into(),
            measured,
            bound,
            passed,
        });
    };
    let d2 = max_abs(&|x| w.deriv(2, x));
    push(
        "1: max|w''| <= 2 phi N0^2",
        d2,
        2.0 * phi * n0 * n0,
        d2 <= 2.0 * phi * n0 * n0,
    );
    let d1 = max_abs(&|x| w.deriv(1, x));
    push("2: max|w'| <= phi N0 / 2", d1, 0.5 * phi * n0, d1 <= 0.5 * phi * n0);
    let d0 = max_abs(&|x| w.w(x));
    push("3: max|w| <= phi", d0, phi, d0 <= phi * (1.0 + 1e-12));
    let b2_bound = 0.5 * params.mu * n0 * n0;
    push("4: max|b2| <= mu N0^2 / 2", b2_max, b2_bound, b2_max <= b2_bound);
    let b1_bound = 0.5 * params.mu * n0;
    push("5: max|b1| <= mu N0 / 2", b1_max, b1_bound, b1_max <= b1_bound);
    push("a: 0 <= f <= 1", f_max, 1.0, f_min >= 0.0 && f_max <= 1.0 + 1e-12);
    let boundary = 0.5 * (w.f(0.0) + w.f(1.0));
    push(
        "b: (f(0) + f(1)) / 2 >= floor",
        boundary,
        params.boundary_floor,
        boundary >= params.boundary_floor,
    );
    let c = w.c();
    push("c: 1 <= C <= N0", c, n0, c >= 1.0 - 1e-12 && c <= n0);
    push("d: int |f''| <= N0", f2_integral, n0, f2_integral <= n0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bernstein_examples() {
        assert_abs_diff_eq!(bernstein(2, 1, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        let s: f64 = (0..=10).map(|i| bernstein(10, i, 0.37).unwrap()).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        assert_eq!(bernstein(4, 0, 0.0).unwrap(), 1.0);
        assert_eq!(bernstein(4, 4, 0.0).unwrap(), 0.0);
        assert_eq!(bernstein(4, 4, 1.0).unwrap(), 1.0);
        assert!(matches!(bernstein(3, 4, 0.5), Err(Error::IndexOutOfRange { .. })));
        assert!(bernstein(3, 1, 1.5).is_err());
    }

    #[test]
    fn bernstein_integral() {
        // Composite Simpson on a fine grid.
        let m = 20_000;
        let h = 1.0 / m as f64;
        let mut acc = 0.0;
        for k in 0..=m {
            let wgt = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += wgt * bernstein(8, 3, k as f64 * h).unwrap();
        }
        assert_abs_diff_eq!(acc * h / 3.0, 1.0 / 9.0, epsilon = 1e-6);
    }

    #[test]
    fn derivative_examples() {
        assert_abs_diff_eq!(
            bernstein_derivative(5, 2, 0, 0.3).unwrap(),
            bernstein(5, 2, 0.3).unwrap(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(bernstein_derivative(2, 1, 1, 0.25).unwrap(), 1.0, epsilon = 1e-14);
        assert!(bernstein_derivative(2, 3, 1, 0.5).is_err());
        assert!(bernstein_derivative(2, 1, 3, 0.5).is_err());
    }

    #[test]
    fn gamma_examples() {
        let mix = Mdbd::new(1, vec![1.0 / 3.0, 2.0 / 3.0], vec![0.3, 0.5]).unwrap();
        let g = induce_gamma(&mix);
        assert_abs_diff_eq!(g[0], 0.3 * 2.0 / 3.0 + 0.5 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 0.3 / 3.0 + 0.5 * 2.0 / 3.0, epsilon = 1e-15);

        let single = Mdbd::new(4, vec![0.5], vec![1.0]).unwrap();
        let g = induce_gamma(&single);
        for (gi, want) in g.iter().zip([1.0, 4.0, 6.0, 4.0, 1.0]) {
            assert_abs_diff_eq!(*gi, want / 16.0, epsilon = 1e-15);
        }

        let sym = Mdbd::new(7, vec![0.2, 0.8], vec![0.4, 0.4]).unwrap();
        let g = induce_gamma(&sym);
        for i in 0..=7 {
            assert_abs_diff_eq!(g[i], g[7 - i], epsilon = 1e-15);
        }
    }

    #[test]
    fn mdbd_validation() {
        assert!(Mdbd::new(4, vec![0.4, 0.4], vec![0.1, 0.1]).is_err());
        assert!(Mdbd::new(4, vec![0.4, 0.5], vec![0.6, 0.6]).is_err());
        assert!(Mdbd::new(4, vec![0.0], vec![0.5]).is_err());
        assert!(matches!(
            Mdbd::new(4, vec![0.5], vec![0.0]),
            Err(Error::WeightOutOfRange { .. })
        ));
        assert!(Mdbd::new(0, vec![0.5], vec![0.5]).is_err());
        let json = r#"{"N": 4, "T": 2, "p": [0.25, 0.5], "alpha": [0.5, 0.5]}"#;
        let m: Mdbd = serde_json::from_str(json).unwrap();
        assert_eq!(m.degree(), 4);
        let back: Mdbd = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"N": 4, "T": 3, "p": [0.25, 0.5], "alpha": [0.5, 0.5]}"#;
        assert!(serde_json::from_str::<Mdbd>(bad).is_err());
    }

    #[test]
    fn uniform_fit_closed_form() {
        let w = SmoothPdf::uniform();
        let fit = app_dscr_pdf(&w, 16, 0.25).unwrap();
        assert_eq!(fit.mdbd.size(), 32);
        let want = 16.0 / (33.0 * 17.0);
        for &a in fit.mdbd.alpha() {
            assert_abs_diff_eq!(a, want, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(fit.delta_w, 1.0 - (32.0 / 33.0) * (16.0 / 17.0), epsilon = 1e-14);
        assert_abs_diff_eq!(fit.delta_w, fit.mdbd.delta(), epsilon = 1e-14);
        assert!(app_dscr_pdf(&w, 16, 0.0).is_err());
        assert!(app_dscr_pdf(&w, 16, f64::INFINITY).is_err());
    }

    #[test]
    fn fit_drops_vanishing_nodes() {
        // 3(2x−1)² vanishes at x = 1/2, which is a node when T + 1 is even.
        let w = SmoothPdf::new("dip", 3.0, 3.0, |k, x| {
            let u = 2.0 * x - 1.0;
            match k {
                0 => 3.0 * u * u,
                1 => 12.0 * u,
                2 => 24.0,
                _ => 0.0,
            }
        })
        .unwrap();
        let fit = app_dscr_pdf(&w, 3, 3.0).unwrap();
        assert_eq!(fit.grid, 3);
        assert_eq!(fit.dropped, vec![2]);
        assert_eq!(fit.warnings.len(), 1);
    }

    #[test]
    fn hald_examples() {
        let u = SmoothPdf::uniform();
        assert_eq!(hald_terms(&u, 0.3).unwrap(), (-1.0, 1.0));
        let k = 1.7;
        let e = SmoothPdf::exponential(k).unwrap();
        for &x in &[0.0, 0.2, 0.5, 0.9] {
            let (b1, b2) = hald_terms(&e, x).unwrap();
            let want1 = -k * k / 2.0 * x * x + (2.0 * k + k * k / 2.0) * x - (1.0 + k);
            let want2 = 1.0 + 3.0 * (1.0 - 2.0 * x) * k + (1.0 - 6.0 * x + 6.0 * x * x) * k * k
                - 5.0 / 6.0 * x * (1.0 - x) * (1.0 - 2.0 * x) * k.powi(3)
                + x * x * (1.0 - x) * (1.0 - x) / 8.0 * k.powi(4);
            assert_abs_diff_eq!(b1, want1, epsilon = 1e-12);
            assert_abs_diff_eq!(b2, want2, epsilon = 1e-12);
        }
        let dip = SmoothPdf::new("dip", 3.0, 3.0, |k, x| {
            if k == 0 {
                3.0 * (2.0 * x - 1.0).powi(2)
            } else {
                0.0
            }
        })
        .unwrap();
        assert!(matches!(hald_terms(&dip, 0.5), Err(Error::DivisionByZero { .. })));
    }

    #[test]
    fn trapezoid_examples() {
        assert_eq!(trapezoid_error_bound(0.0, 10), 0.0);
        let n = 16.0;
        let integral = n * (n - 1.0) * 4.0 / (n + 1.0);
        assert!(trapezoid_error_bound(integral, 8) <= n / (2.0 * 64.0));
        assert_abs_diff_eq!(
            trapezoid_error_bound(3.0, 10) / trapezoid_error_bound(3.0, 20),
            4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn canonical_examples() {
        let e = canonical_pdf("exp:2".parse().unwrap()).unwrap();
        assert_abs_diff_eq!(e.w(0.0), 2.0 / (1.0 - (-2.0f64).exp()), epsilon = 1e-14);
        for p in 0..=4 {
            assert_abs_diff_eq!(e.deriv(p, 0.3), (-2.0f64).powi(p as i32) * e.w(0.3), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(e.phi(), e.w(0.0), epsilon = 1e-15);
        let u = canonical_pdf(Canonical::Uniform).unwrap();
        assert_eq!((u.w(0.4), u.deriv(2, 0.4), u.phi(), u.c()), (1.0, 0.0, 1.0, 1.0));
        assert!("exp:-1".parse::<Canonical>().map(canonical_pdf).unwrap().is_err());
        assert!("gauss".parse::<Canonical>().is_err());
    }

    #[test]
    fn condition_checks() {
        let u = SmoothPdf::uniform();
        for n0 in [2, 8, 64] {
            let report = check_pdf_conditions(&u, &ConditionParams::new(n0, 2.0 / n0 as f64));
            assert!(report.iter().all(|c| c.passed), "{report:?}");
        }
        // With k = √N₀ the largest |b₁| is 1 + N₀/8, one more than μN₀/2 at μ = 1/4.
        let n0 = 256;
        let e = SmoothPdf::exponential((n0 as f64).sqrt()).unwrap();
        let report = check_pdf_conditions(&e, &ConditionParams::new(n0, 0.25));
        assert_abs_diff_eq!(report[4].measured, 1.0 + n0 as f64 / 8.0, epsilon = 1e-9);
        assert_eq!(report.iter().filter(|c| !c.passed).count(), 1);
        let report = check_pdf_conditions(&e, &ConditionParams::new(n0, 0.25 + 2.0 / n0 as f64));
        assert!(report.iter().all(|c| c.passed), "{report:?}");

        let dip = SmoothPdf::new("dip", 3.0, 3.0, |k, x| {
            let u = 2.0 * x - 1.0;
            match k {
                0 => 3.0 * u * u,
                1 => 12.0 * u,
                2 => 24.0,
                _ => 0.0,
            }
        })
        .unwrap();
        let report = check_pdf_conditions(&dip, &ConditionParams::new(16, 0.5));
        assert!(!report[3].passed && !report[4].passed);
    }
}
