//! Sparsifiers of `D − D Σ γ_i (D⁻¹M)^i` by repeated sparsified squaring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
#[cfg(test)]
use crate::matrix::PosDiag;
use crate::matrix::{is_spsd, SparseSym, TMatrix};
use crate::mdbd::Mdbd;
use crate::par::map_range;
use crate::seed;
use crate::sparsify::{check_eps, mklc, mps, split_budget, Config};

/// Mixture weights summing to less than this are rejected.
pub const DELTA_TOL: f64 = 1e-9;

/// Per-stage tolerances of the squaring pipeline for degree `N = 2^levels`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSchedule {
    pub eps_total: f64,
    pub eps_init: f64,
    pub eps_step: f64,
    pub eps_final: f64,
    pub levels: u32,
}

fn composed(init: f64, step: f64, fin: f64, squarings: i32) -> (f64, f64) {
    let hi = (1.0 + init) * (1.0 + step).powi(squarings) * (1.0 + fin);
    let lo = (1.0 - init) * (1.0 - step).powi(squarings) * (1.0 - fin);
    (lo, hi)
}

impl ErrorSchedule {
    /// Starts from the split `ε/3, ε/(3 log₂N), ε/3` and shrinks all three by a
    /// common factor until the composed error fits inside `1 ± ε`.
    pub fn new(eps: f64, degree: usize) -> Result<Self> {
        check_eps(eps)?;
        let levels = log2_exact(degree)?;
        let squarings = levels.max(1) as i32 - 1;
        let nominal = [eps / 3.0, eps / (3.0 * f64::from(levels.max(1))), eps / 3.0];
        let fits = |c: f64| {
            let (lo, hi) = composed(c * nominal[0], c * nominal[1], c * nominal[2], squarings);
            lo >= 1.0 - eps && hi <= 1.0 + eps
        };
        let mut scale = 1.0;
        if !fits(scale) {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if fits(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            scale = lo;
        }
        let out = Self {
            eps_total: eps,
            eps_init: scale * nominal[0],
            eps_step: scale * nominal[1],
            eps_final: scale * nominal[2],
            levels,
        };
        debug_assert!(out.is_sound());
        Ok(out)
    }

    pub fn squarings(&self) -> u32 {
        self.levels.max(1) - 1
    }

    /// Composed factor range `[lo, hi]` of all stages.
    pub fn composed(&self) -> (f64, f64) {
        composed(self.eps_init, self.eps_step, self.eps_final, self.squarings() as i32)
    }

    pub fn is_sound(&self) -> bool {
        let (lo, hi) = self.composed();
        lo >= 1.0 - self.eps_total && hi <= 1.0 + self.eps_total
    }
}

/// `log₂ N` for a power of two `N ≥ 1`.
pub fn log2_exact(degree: usize) -> Result<u32> {
    if degree == 0 || !degree.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("N = {degree} must be a power of two")));
    }
    Ok(degree.trailing_zeros())
}

/// How the initial two-hop sparsifier was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitBranch {
    /// Degree one: a single one-hop sparsifier, no squaring.
    Direct,
    /// `M` is SPSD: sparsify `D − M` first, then square.
    Fss,
    /// General case through the two-hop decomposition.
    Mps,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyOutput {
    pub matrix: TMatrix,
    pub branch: InitBranch,
}

/// One sparsified squaring: `D − M̂' ≈_ε D − M̂ D⁻¹ M̂`.
pub fn sqr_ss(cur: &TMatrix, eps_step: f64, seed: u64, cfg: &Config) -> Result<TMatrix> {
    mps(cur, eps_step, seed, cfg)
}

/// Two-hop sparsifier for SPSD `M`: one-hop sparsify, then square.
pub fn fss(b: &TMatrix, eps: f64, seed: u64, cfg: &Config) -> Result<TMatrix> {
    check_eps(eps)?;
    let part = split_budget(eps, 2);
    let first = mklc(b, part, seed::derive(seed, 0), cfg)?;
    mps(&first, part, seed::derive(seed, 1), cfg)
}

/// Two-hop sparsifier choosing the SPSD fast path when `spsd` says so,
/// or when a dense eigencheck decides it (falling back to `mps` past the dense limit).
fn two_hop(b: &TMatrix, eps: f64, seed: u64, cfg: &Config, spsd: Option<bool>) -> Result<(TMatrix, InitBranch)> {
    let spsd = match spsd {
        Some(known) => known,
        None => match is_spsd(b.m(), b.d()) {
            Ok(v) => v,
            Err(Error::SizeLimitExceeded { .. }) => false,
            Err(e) => return Err(e),
        },
    };
    if spsd {
        Ok((fss(b, eps, seed, cfg)?, InitBranch::Fss))
    } else {
        Ok((mps(b, eps, seed, cfg)?, InitBranch::Mps))
    }
}

/// `M̂₁` and `M̂₂` with `D − M̂₁ ≈_ε D − M` and `D − M̂₂ ≈_ε D − M D⁻¹ M`.
pub fn init_ss(b: &TMatrix, eps: f64, seed: u64, cfg: &Config) -> Result<(TMatrix, TMatrix, InitBranch)> {
    let m1 = mklc(b, eps, seed::derive(seed, 0), cfg)?;
    let (m2, branch) = two_hop(b, eps, seed::derive(seed, 1), cfg, None)?;
    Ok((m1, m2, branch))
}

/// From `D − M̂₂ ≈ D − D(D⁻¹M)²` to power `N`: `log₂N − 1` squarings at
/// `eps_step`, then a refining one-hop pass at `eps`.
pub fn ind_ss(m2: &TMatrix, degree: usize, eps: f64, eps_step: f64, seed: u64, cfg: &Config) -> Result<TMatrix> {
    let levels = log2_exact(degree)?;
    if levels == 0 {
        return Err(Error::InvalidParameter("ind_ss needs N ≥ 2".into()));
    }
    check_eps(eps)?;
    if levels > 1 {
        check_eps(eps_step)?;
    }
    let mut cur = m2.clone();
    for k in 1..levels {
        cur = sqr_ss(&cur, eps_step, seed::derive(seed, u64::from(k)), cfg)?;
    }
    mklc(&cur, eps, seed::derive(seed, 0), cfg)
}

fn pwr_ss_hinted(
    b: &TMatrix,
    degree: usize,
    eps: f64,
    seed: u64,
    cfg: &Config,
    spsd: Option<bool>,
) -> Result<PolyOutput> {
    let sched = ErrorSchedule::new(eps, degree)?;
    if degree == 1 {
        return Ok(PolyOutput {
            matrix: mklc(b, eps, seed, cfg)?,
            branch: InitBranch::Direct,
        });
    }
    let (m2, branch) = two_hop(b, sched.eps_init, seed::derive(seed, 0), cfg, spsd)?;
    let matrix = ind_ss(&m2, degree, sched.eps_final, sched.eps_step, seed::derive(seed, 1), cfg)?;
    Ok(PolyOutput { matrix, branch })
}

/// `D − M̂_N ≈_ε D − D(D⁻¹M)^N` for `N = 2^k`.
pub fn pwr_ss(b: &TMatrix, degree: usize, eps: f64, seed: u64, cfg: &Config) -> Result<PolyOutput> {
    pwr_ss_hinted(b, degree, eps, seed, cfg, None)
}

/// `D·W_p = (1−p)D + pM`.
pub fn lazy_matrix(b: &TMatrix, p: f64) -> Result<TMatrix> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1)")));
    }
    let diag: Vec<f64> = b.d().values().iter().map(|d| (1.0 - p) * d).collect();
    let m = SparseSym::combine(b.d().dim(), &[(p, b.m())], Some(&diag))?;
    TMatrix::new(b.d().clone(), m)
}

/// `D − M̂ ≈_ε D − D W_p^N` with `W_p = (1−p)I + p D⁻¹M`.
///
/// For `p ≤ 1/2` the lazy matrix is known to be SPSD and no eigencheck runs.
pub fn lazy_ss(b: &TMatrix, degree: usize, p: f64, eps: f64, seed: u64, cfg: &Config) -> Result<PolyOutput> {
    let lazy = lazy_matrix(b, p)?;
    let hint = if p <= 0.5 { Some(true) } else { None };
    pwr_ss_hinted(&lazy, degree, eps, seed, cfg, hint)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureOutput {
    pub matrix: TMatrix,
    pub branch: InitBranch,
    pub delta: f64,
    pub schedule: ErrorSchedule,
}

/// `D − M̂ ≈_ε D − D Σ_i γ_i/(1−δ) (D⁻¹M)^i` for the coefficients induced by `mix`.
///
/// The per-component squarings run independently (in parallel with the
/// `parallel` feature); their results are summed in index order.
pub fn ss_mdbd(b: &TMatrix, mix: &Mdbd, eps: f64, seed: u64, cfg: &Config) -> Result<MixtureOutput> {
    let n = b.d().dim();
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let degree = mix.degree();
    let sched = ErrorSchedule::new(eps, degree)?;
    let delta = mix.delta();
    if delta >= 1.0 - DELTA_TOL {
        return Err(Error::DeltaOverflow { delta });
    }
    let refine = split_budget(sched.eps_final, 2);
    let (m1, m2, branch) = init_ss(b, sched.eps_init, seed::derive(seed, 0), cfg)?;
    let d = b.d();
    let dvals = d.values();
    let per_j_seed = seed::derive(seed, 1);

    let parts = map_range(mix.size(), |j| -> Result<TMatrix> {
        let p = mix.p()[j];
        if degree == 1 {
            let diag: Vec<f64> = dvals.iter().map(|v| (1.0 - p) * v).collect();
            let m = SparseSym::combine(n, &[(p, m1.m())], Some(&diag))?;
            return TMatrix::new(d.clone(), m);
        }
        let q = 1.0 - p;
        let diag: Vec<f64> = dvals.iter().map(|v| q * q * v).collect();
        let m = SparseSym::combine(n, &[(2.0 * p * q, m1.m()), (p * p, m2.m())], Some(&diag))?;
        let mp2 = TMatrix::new(d.clone(), m)?;
        ind_ss(
            &mp2,
            degree,
            refine,
            sched.eps_step,
            seed::derive(per_j_seed, j as u64),
            cfg,
        )
    });

    let mut mats = Vec::with_capacity(parts.len());
    for part in parts {
        mats.push(part?);
    }
    let scale = 1.0 / (1.0 - delta);
    let terms: Vec<(f64, &SparseSym)> = mix.alpha().iter().zip(&mats).map(|(a, m)| (a * scale, m.m())).collect();
    let acc = TMatrix::new(d.clone(), SparseSym::combine(n, &terms, None)?)?;
    let matrix = mklc(&acc, refine, seed::derive(seed, 2), cfg)?;
    Ok(MixtureOutput {
        matrix,
        branch,
        delta,
        schedule: sched,
    })
}
