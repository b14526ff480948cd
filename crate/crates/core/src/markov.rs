//! Escaping probabilities of random walks and an SDDM solver built on
//! sparsified inverse chains.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ensure_dense, Kind, LinearOperator, PosDiag, SparseSym, TMatrix};
use crate::poly::sqr_ss;
use crate::seed;
use crate::sparsify::{check_eps, mklc, mps, Config};

/// Largest normalized spectral norm accepted at the bottom of a chain.
pub const TERMINAL_NORM: f64 = 0.25;

/// A vertex subset `S` with its degree-weighted start distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetIndicator {
    members: Vec<usize>,
    mask: Vec<bool>,
    mu: f64,
}

impl SubsetIndicator {
    /// Duplicates are ignored; `S` must be nonempty.
    pub fn new(d: &PosDiag, members: &[usize]) -> Result<Self> {
        let n = d.dim();
        let mut mask = vec![false; n];
        for &v in members {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, bound: n });
            }
            mask[v] = true;
        }
        let members: Vec<usize> = (0..n).filter(|&v| mask[v]).collect();
        if members.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mu = members.iter().map(|&v| d.values()[v]).sum();
        Ok(Self { members, mask, mu })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, v: usize) -> bool {
        self.mask.get(v).copied().unwrap_or(false)
    }

    /// `μ(S) = Σ_{u∈S} d_u`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `π_S(u) = d_u/μ(S)` on `S`, zero elsewhere.
    pub fn start_distribution(&self, d: &PosDiag) -> Vec<f64> {
        d.values()
            .iter()
            .zip(&self.mask)
            .map(|(dv, &m)| if m { dv / self.mu } else { 0.0 })
            .collect()
    }

    /// `ξ_S = 1_S/√μ(S)`.
    pub fn xi(&self) -> Vec<f64> {
        let s = 1.0 / self.mu.sqrt();
        self.mask.iter().map(|&m| if m { s } else { 0.0 }).collect()
    }
}

fn require_laplacian(b: &TMatrix) -> Result<()> {
    if b.kind() != Kind::Laplacian {
        return Err(Error::InvalidParameter(
            "escaping probabilities need a Laplacian".into(),
        ));
    }
    Ok(())
}

/// `y = G_γ 1_{S̄}` with `G_γ = Σ γ_i (D⁻¹M)^i`, by Horner's rule.
pub fn escape_vector(b: &TMatrix, gamma: &[f64], s: &SubsetIndicator) -> Result<Vec<f64>> {
    require_laplacian(b)?;
    let n = b.d().dim();
    if s.mask.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: s.mask.len(),
        });
    }
    let Some((&last, rest)) = gamma.split_last() else {
        return Err(Error::InvalidParameter("empty coefficient vector".into()));
    };
    let outside: Vec<f64> = s.mask.iter().map(|&m| if m { 0.0 } else { 1.0 }).collect();
    let mut y: Vec<f64> = outside.iter().map(|u| last * u).collect();
    for &g in rest.iter().rev() {
        let walked = b.d().solve(&b.m().apply(&y));
        y = walked.iter().zip(&outside).map(|(w, u)| w + g * u).collect();
    }
    Ok(y)
}

/// `gEsc(v, S, G_γ) = 1_vᵀ G_γ 1_{S̄}` for `v ∈ S`.
pub fn escape_prob_exact(b: &TMatrix, gamma: &[f64], v: usize, s: &SubsetIndicator) -> Result<f64> {
    if !s.contains(v) {
        return Err(Error::VertexNotInSet(v));
    }
    Ok(escape_vector(b, gamma, s)?[v])
}

/// `E_{v∼π_S} gEsc(v, S, G_γ)`.
pub fn expected_escape(b: &TMatrix, gamma: &[f64], s: &SubsetIndicator) -> Result<f64> {
    let y = escape_vector(b, gamma, s)?;
    let pi = s.start_distribution(b.d());
    Ok(pi.iter().zip(&y).map(|(p, y)| p * y).sum())
}

/// `ξ_Sᵀ (D − Â) ξ_S`, the quadratic-form estimate of the expected escape probability.
pub fn egep_estimate(d: &PosDiag, a_hat: &SparseSym, s: &SubsetIndicator) -> Result<f64> {
    if a_hat.dim() != d.dim() || s.mask.len() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.dim(),
            found: a_hat.dim(),
        });
    }
    let mut inner = 0.0;
    for &u in &s.members {
        inner += a_hat.row(u).filter(|&(w, _)| s.mask[w]).map(|(_, x)| x).sum::<f64>();
    }
    Ok((s.mu - inner) / s.mu)
}

/// Levels `M̂_{2^0}, …, M̂_{2^K}` sharing one diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseChain {
    d: PosDiag,
    levels: Vec<SparseSym>,
    /// Condition bound the chain was sized for.
    pub kappa: f64,
    /// Normalized spectral norm of the last level.
    pub terminal_norm: f64,
}

impl InverseChain {
    pub fn d(&self) -> &PosDiag {
        &self.d
    }

    pub fn levels(&self) -> &[SparseSym] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// Largest `|λ|` of `D^{-1/2} M D^{-1/2}`.
pub fn normalized_norm(d: &PosDiag, m: &SparseSym) -> Result<f64> {
    ensure_dense(d.dim())?;
    let mut a = m.to_dense();
    let s: Vec<f64> = d.values().iter().map(|v| 1.0 / v.sqrt()).collect();
    for i in 0..d.dim() {
        for j in 0..d.dim() {
            a[(i, j)] *= s[i] * s[j];
        }
    }
    Ok(a.symmetric_eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// `λ_max / λ_min` of `D^{-1/2} B D^{-1/2}` by a dense eigensolve.
pub fn estimate_kappa(b: &TMatrix) -> Result<f64> {
    let n = b.d().dim();
    ensure_dense(n)?;
    let s: Vec<f64> = b.d().values().iter().map(|v| 1.0 / v.sqrt()).collect();
    let dense = b.to_dense();
    let a = DMatrix::from_fn(n, n, |i, j| dense[(i, j)] * s[i] * s[j]);
    let eig = a.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) {
        return Err(Error::NotPsd { min_eig: lo });
    }
    Ok(hi / lo)
}

/// Chain whose recursive application approximates `(D − M)⁻¹` up to a constant factor.
///
/// Level 0 is a one-hop sparsifier at `ε/16`, level 1 a two-hop sparsifier at
/// `ε/8`, and further levels are squarings at `ε/(16 log₂ t)` with
/// `t = (1+ε/8)/(1−ε/8)·κ`. The chain starts with `⌈log₂ t⌉` levels and grows
/// up to twice that until the last level has normalized norm at most `1/4`.
pub fn build_inverse_chain(b: &TMatrix, eps: f64, kappa: Option<f64>, seed: u64, cfg: &Config) -> Result<InverseChain> {
    check_eps(eps)?;
    if b.kind() != Kind::Sddm {
        return Err(Error::InvalidParameter("inverse chains need an SDDM matrix".into()));
    }
    let kappa = match kappa {
        Some(k) if k.is_finite() && k >= 1.0 => k,
        Some(k) => return Err(Error::InvalidParameter(format!("kappa = {k} must be at least 1"))),
        None => estimate_kappa(b)?,
    };
    let d = b.d().clone();
    if b.m().nnz() == 0 {
        return Ok(InverseChain {
            d,
            levels: Vec::new(),
            kappa,
            terminal_norm: 0.0,
        });
    }
    let t = (1.0 + eps / 8.0) / (1.0 - eps / 8.0) * kappa;
    let log_t = t.log2().max(1.0);
    let k_levels = (log_t.ceil() as usize).max(1);
    let eps_step = eps / (16.0 * log_t);

    let mut cur = mklc(b, eps / 16.0, seed::derive(seed, 0), cfg)?;
    let mut levels = vec![cur.m().clone()];
    let mut norm = normalized_norm(&d, cur.m())?;
    let mut k = 0usize;
    while k < k_levels || (norm > TERMINAL_NORM && k < 2 * k_levels) {
        k += 1;
        let level_seed = seed::derive(seed, k as u64);
        cur = if k == 1 {
            mps(&cur, eps / 8.0, level_seed, cfg)?
        } else {
            sqr_ss(&cur, eps_step, level_seed, cfg)?
        };
        levels.push(cur.m().clone());
        norm = normalized_norm(&d, cur.m())?;
    }
    if norm > TERMINAL_NORM {
        return Err(Error::KappaTooSmall {
            norm,
            levels: levels.len(),
        });
    }
    Ok(InverseChain {
        d,
        levels,
        kappa,
        terminal_norm: norm,
    })
}

fn apply_from(chain: &InverseChain, k: usize, b: &[f64]) -> Vec<f64> {
    let d = &chain.d;
    let Some(m) = chain.levels.get(k) else {
        return d.solve(b);
    };
    let dinv_b = d.solve(b);
    let u: Vec<f64> = b.iter().zip(m.apply(&dinv_b)).map(|(x, y)| x + y).collect();
    let v = apply_from(chain, k + 1, &u);
    let mv = d.solve(&m.apply(&v));
    dinv_b
        .iter()
        .zip(v.iter().zip(&mv))
        .map(|(a, (v, w))| 0.5 * (a + v + w))
        .collect()
}

/// `z ≈ (D − M̂_{2^0})⁻¹ b` via
/// `Z_k = [D⁻¹ + (I + D⁻¹M̂_k) Z_{k+1} (I + M̂_k D⁻¹)]/2`, bottoming out at `D⁻¹`.
pub fn apply_chain(chain: &InverseChain, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != chain.d.dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.d.dim(),
            found: b.len(),
        });
    }
    Ok(apply_from(chain, 0, b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `‖b − Bx‖/‖b‖`.
    pub residual: f64,
    pub theta: f64,
    /// Relative residual after each iteration.
    pub history: Vec<f64>,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(b: &TMatrix, rhs: &[f64], x: &[f64]) -> Vec<f64> {
    rhs.iter().zip(b.apply(x)).map(|(r, y)| r - y).collect()
}

/// Preconditioned Richardson iteration `x ← x + θ Z(b − Bx)` with the chain as `Z`.
///
/// `θ` is picked from `{1/4, 1/2, 3/4, 1}` on the first step and kept.
pub fn solve_sddm(b: &TMatrix, rhs: &[f64], eps: f64, chain: &InverseChain) -> Result<SolveReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1)")));
    }
    let n = b.d().dim();
    if rhs.len() != n || chain.d.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let bnorm = norm2(rhs);
    if bnorm == 0.0 {
        return Ok(SolveReport {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            theta: 1.0,
            history: Vec::new(),
        });
    }
    let max_iter = 200 * ((1.0 / eps).ln().ceil() as usize).max(1);
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut theta = 1.0;
    let mut history = Vec::new();
    for it in 0..max_iter {
        let z = apply_chain(chain, &r)?;
        if it == 0 {
            let mut best = f64::INFINITY;
            for cand in [0.25, 0.5, 0.75, 1.0] {
                let trial: Vec<f64> = z.iter().map(|v| cand * v).collect();
                let res = norm2(&residual(b, rhs, &trial));
                if res < best {
                    best = res;
                    theta = cand;
                }
            }
        }
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += theta * zi;
        }
        r = residual(b, rhs, &x);
        let rel = norm2(&r) / bnorm;
        history.push(rel);
        if rel <= eps {
            return Ok(SolveReport {
                x,
                iterations: it + 1,
                residual: rel,
                theta,
                history,
            });
        }
        if !rel.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: history.last().copied().unwrap_or(f64::NAN),
    })
}
