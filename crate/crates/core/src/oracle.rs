//! Dense ground truth: polynomial evaluation and Loewner-order checks.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ensure_dense, PosDiag, TMatrix, PSD_TOL};

/// Relative threshold below which an eigenvalue counts as kernel.
pub const KERNEL_TOL: f64 = 1e-10;

/// Absolute slack allowed on the pencil bounds.
pub const PENCIL_TOL: f64 = 1e-9;

/// Relative size of `‖X K‖` that still counts as `K` lying in the kernel of `X`.
const LEAKAGE_TOL: f64 = 1e-6;

/// Extreme generalized eigenvalues of `(X, Y)` off their common kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PencilBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl PencilBounds {
    pub fn within(&self, eps: f64) -> bool {
        self.lambda_min >= 1.0 - eps - PENCIL_TOL && self.lambda_max <= 1.0 + eps + PENCIL_TOL
    }

    /// Smallest `ε` for which the bounds pass.
    pub fn achieved_eps(&self) -> f64 {
        (1.0 - self.lambda_min).max(self.lambda_max - 1.0).max(0.0)
    }
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// `(Σ γ_i) D − D Σ γ_i (D⁻¹M)^i` by Horner's rule.
pub fn dense_poly(b: &TMatrix, gamma: &[f64]) -> Result<DMatrix<f64>> {
    let n = b.d().dim();
    ensure_dense(n)?;
    if gamma.is_empty() {
        return Err(Error::InvalidParameter("empty coefficient vector".into()));
    }
    if let Some(g) = gamma.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "coefficient {g} must be finite and nonnegative"
        )));
    }
    let d = b.d().values();
    let mut w = b.m().to_dense();
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] /= d[i];
        }
    }
    let mut acc = DMatrix::<f64>::identity(n, n) * gamma[gamma.len() - 1];
    for &g in gamma.iter().rev().skip(1) {
        acc = &w * acc;
        for i in 0..n {
            acc[(i, i)] += g;
        }
    }
    let total: f64 = gamma.iter().sum();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = -d[i] * acc[(i, j)];
        }
        out[(i, i)] += total * d[i];
    }
    Ok(symmetrize(&out))
}

struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    scale: f64,
}

fn spectrum(a: &DMatrix<f64>) -> Result<Spectrum> {
    let eig = a.clone().symmetric_eigen();
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd { min_eig: min });
    }
    Ok(Spectrum {
        values,
        vectors: eig.eigenvectors,
        scale,
    })
}

/// Decides `X ≈_ε Y`, i.e. `(1−ε)Y ⪯ X ⪯ (1+ε)Y`, by a dense pencil eigensolve.
///
/// The kernels of `X` and `Y` must coincide; otherwise [`Error::KernelMismatch`].
pub fn approx_check(x: &DMatrix<f64>, y: &DMatrix<f64>, eps: f64) -> Result<(bool, PencilBounds)> {
    let n = y.nrows();
    if y.ncols() != n || x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.nrows(),
        });
    }
    ensure_dense(n)?;
    let x = symmetrize(x);
    let y = symmetrize(y);
    let sx = spectrum(&x)?;
    let sy = spectrum(&y)?;

    let kernel = |s: &Spectrum| -> Vec<usize> {
        (0..s.values.len())
            .filter(|&k| s.values[k] <= KERNEL_TOL * s.scale)
            .collect()
    };
    let ky = kernel(&sy);
    let kx = kernel(&sx);
    let y_range: Vec<usize> = (0..n).filter(|k| !ky.contains(k)).collect();

    let mut leakage = 0.0f64;
    if !ky.is_empty() && sx.scale > 0.0 {
        let basis = sy.vectors.select_columns(&ky);
        leakage = (&x * basis).norm() / sx.scale;
    }
    if kx.len() != ky.len() || leakage > LEAKAGE_TOL {
        return Err(Error::KernelMismatch {
            x_kernel: kx.len(),
            y_kernel: ky.len(),
            leakage,
        });
    }
    if y_range.is_empty() {
        let bounds = PencilBounds {
            lambda_min: 1.0,
            lambda_max: 1.0,
        };
        return Ok((true, bounds));
    }

    let mut z = sy.vectors.select_columns(&y_range);
    for (c, &k) in y_range.iter().enumerate() {
        let s = 1.0 / sy.values[k].sqrt();
        z.column_mut(c).scale_mut(s);
    }
    let pencil = symmetrize(&(z.transpose() * &x * &z));
    let vals = pencil.symmetric_eigenvalues();
    let bounds = PencilBounds {
        lambda_min: vals.min(),
        lambda_max: vals.max(),
    };
    Ok((bounds.within(eps), bounds))
}

/// Outcome of checking the Schur complement implication on one instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchurOutcome {
    Holds,
    Violated,
    /// The block pencils were not `ε`-close, so nothing is implied.
    PremiseFailed,
}

fn block(d1: &PosDiag, d2: &PosDiag, m: &DMatrix<f64>) -> DMatrix<f64> {
    let a = d1.dim();
    let b = d2.dim();
    let mut out = DMatrix::zeros(a + b, a + b);
    out.view_mut((0, 0), (a, a)).copy_from(&d1.to_dense());
    out.view_mut((a, a), (b, b)).copy_from(&d2.to_dense());
    out.view_mut((0, a), (a, b)).copy_from(&(-m));
    out.view_mut((a, 0), (b, a)).copy_from(&(-m.transpose()));
    out
}

fn schur(d1: &PosDiag, d2: &PosDiag, m: &DMatrix<f64>) -> DMatrix<f64> {
    let inv: Vec<f64> = d1.values().iter().map(|v| 1.0 / v).collect();
    let mut scaled = m.clone();
    for (r, s) in inv.iter().enumerate() {
        scaled.row_mut(r).scale_mut(*s);
    }
    d2.to_dense() - m.transpose() * scaled
}

/// Checks that `[[D1, −M], [−M, D2]] ≈_ε [[D1, −Q], [−Q, D2]]` implies
/// `D2 − M D1⁻¹ M ≈_ε D2 − Q D1⁻¹ Q` on this instance.
pub fn schur_complement_check(
    d1: &PosDiag,
    d2: &PosDiag,
    m: &DMatrix<f64>,
    q: &DMatrix<f64>,
    eps: f64,
) -> Result<SchurOutcome> {
    let shape = (d1.dim(), d2.dim());
    if m.shape() != shape || q.shape() != shape {
        return Err(Error::DimensionMismatch {
            expected: d1.dim(),
            found: m.nrows(),
        });
    }
    let xm = block(d1, d2, m);
    let xq = block(d1, d2, q);
    let premise = match approx_check(&xq, &xm, eps) {
        Ok((ok, _)) => ok,
        Err(Error::KernelMismatch { .. }) => false,
        Err(e) => return Err(e),
    };
    if !premise {
        return Ok(SchurOutcome::PremiseFailed);
    }
    match approx_check(&schur(d1, d2, q), &schur(d1, d2, m), eps) {
        Ok((true, _)) => Ok(SchurOutcome::Holds),
        Ok((false, _)) | Err(Error::KernelMismatch { .. }) => Ok(SchurOutcome::Violated),
        Err(e) => Err(e),
    }
}
