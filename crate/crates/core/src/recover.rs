//! Exact recovery of mixture weights from induced coefficients when `T = N + 1`.
//!
//! The Bernstein matrix factors as `B_N(p) = D_p · V(x) · D_CN` with
//! `x_j = p_j/(1−p_j)`, `D_p = diag((1−p_j)^N)` and `D_CN = diag(C(N,i))`, so
//! `γ = B_Nᵀ α` reduces to one Vandermonde solve plus diagonal scalings.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::mdbd::bernstein;

/// Minimum absolute gap between nodes.
pub const NODE_GAP: f64 = 1e-8;

/// Largest accepted relative residual and forward-error estimate.
pub const SOLVE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub alpha: Vec<f64>,
    /// `‖B_Nᵀα − γ‖∞ / ‖γ‖∞`.
    pub residual: f64,
    /// 2-norm condition number of `B_N(p)`.
    pub condition: f64,
    /// Whether every recovered weight lies in `(0, 1)`.
    pub valid: bool,
}

fn check_gaps(nodes: &[f64]) -> Result<()> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    for w in order.windows(2) {
        let gap = (nodes[w[1]] - nodes[w[0]]).abs();
        if gap < NODE_GAP {
            return Err(Error::NodeCollision {
                i: w[0].min(w[1]),
                j: w[0].max(w[1]),
                gap,
            });
        }
    }
    Ok(())
}

/// Björck–Pereyra elimination for `Σ_j x_j^i z_j = f_i`, in place.
fn bjorck_pereyra(x: &[f64], f: &mut [f64]) {
    let n = x.len().saturating_sub(1);
    for k in 0..n {
        for i in (k + 1..=n).rev() {
            f[i] -= x[k] * f[i - 1];
        }
    }
    for k in (0..n).rev() {
        for i in k + 1..=n {
            f[i] /= x[i] - x[i - k - 1];
        }
        for i in k..n {
            f[i] -= f[i + 1];
        }
    }
}

fn scale_of(nodes: &[f64]) -> f64 {
    let s = nodes.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s > 1.0 {
        s
    } else {
        1.0
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `V(nodes)ᵀ z = rhs`, i.e. `Σ_j nodes_j^i z_j = rhs_i` for `i = 0..=n`.
///
/// Nodes are rescaled by their largest magnitude when it exceeds 1.
pub fn solve_transpose_vandermonde(nodes: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    if nodes.len() != rhs.len() {
        return Err(Error::DimensionMismatch {
            expected: nodes.len(),
            found: rhs.len(),
        });
    }
    check_gaps(nodes)?;
    let s = scale_of(nodes);
    let ln_s = s.ln();
    let y: Vec<f64> = nodes.iter().map(|v| v / s).collect();
    let mut f: Vec<f64> = rhs
        .iter()
        .enumerate()
        .map(|(i, r)| r * (-(i as f64) * ln_s).exp())
        .collect();
    let scaled_rhs = f.clone();
    bjorck_pereyra(&y, &mut f);

    let norm = max_abs(&scaled_rhs);
    if norm > 0.0 {
        let mut worst = 0.0f64;
        for (i, &r) in scaled_rhs.iter().enumerate() {
            let row: f64 = y.iter().zip(&f).map(|(yj, zj)| yj.powi(i as i32) * zj).sum();
            worst = worst.max((row - r).abs());
        }
        let residual = worst / norm;
        if !(residual <= SOLVE_TOL) {
            return Err(Error::IllConditioned {
                residual,
                condition: f64::NAN,
            });
        }
    }
    Ok(f)
}

/// `B_N(p)` with rows indexed by nodes: `[B]_{ji} = B_{N,i}(p_j)`.
pub fn bernstein_matrix(p: &[f64]) -> Result<DMatrix<f64>> {
    let n = p.len().saturating_sub(1);
    let mut out = DMatrix::zeros(p.len(), p.len());
    for (j, &pj) in p.iter().enumerate() {
        for i in 0..=n {
            out[(j, i)] = bernstein(n, i, pj)?;
        }
    }
    Ok(out)
}

/// Recovers `α` from `γ_i = Σ_j α_j B_{N,i}(p_j)` with `N + 1` distinct nodes.
///
/// Raises [`Error::IllConditioned`] when the residual or the forward-error
/// estimate `cond₂(B_N)·ε_mach` exceeds the tolerance, instead of returning
/// weights that cannot be trusted.
pub fn recover_alpha(p: &[f64], gamma: &[f64]) -> Result<Recovery> {
    if p.len() != gamma.len() || p.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: gamma.len(),
        });
    }
    if let Some(bad) = p.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::InvalidParameter(format!("node {bad} must lie in (0, 1)")));
    }
    if let Some(bad) = gamma.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::InvalidParameter(format!("coefficient {bad} must be positive")));
    }
    check_gaps(p)?;
    let n = p.len() - 1;
    let x: Vec<f64> = p.iter().map(|v| v / (1.0 - v)).collect();
    let s = scale_of(&x);
    let ln_s = s.ln();
    let y: Vec<f64> = x.iter().map(|v| v / s).collect();
    let mut f: Vec<f64> = gamma
        .iter()
        .enumerate()
        .map(|(i, g)| g * (-ln_binomial(n as u64, i as u64) - i as f64 * ln_s).exp())
        .collect();
    bjorck_pereyra(&y, &mut f);
    let alpha: Vec<f64> = f
        .iter()
        .zip(p)
        .map(|(z, pj)| z * (-(n as f64) * (-pj).ln_1p()).exp())
        .collect();

    let b = bernstein_matrix(p)?;
    let forward = b.transpose() * nalgebra::DVector::from_column_slice(&alpha);
    let worst = forward.iter().zip(gamma).fold(0.0f64, |m, (a, g)| m.max((a - g).abs()));
    let residual = worst / max_abs(gamma);
    let sv = b.singular_values();
    let condition = sv.max() / sv.min();
    if !(residual <= SOLVE_TOL) || !(condition * f64::EPSILON <= SOLVE_TOL) {
        return Err(Error::IllConditioned { residual, condition });
    }
    let valid = alpha.iter().all(|a| *a > 0.0 && *a < 1.0);
    Ok(Recovery {
        alpha,
        residual,
        condition,
        valid,
    })
}
