//! Sparse symmetric matrices, positive diagonals and T-matrices `D - M`.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default size bound for dense eigen checks and resistance computations.
pub const DEFAULT_DENSE_LIMIT: usize = 2000;

/// Relative tolerance for diagonal dominance, scaled by the largest row sum.
pub const DOMINANCE_TOL: f64 = 1e-9;

/// Relative tolerance on the smallest eigenvalue in [`is_spsd`].
pub const PSD_TOL: f64 = 1e-10;

/// Dense threshold, overridable through `POLYSPARSE_DENSE_LIMIT`.
pub fn dense_limit() -> usize {
    static LIMIT: OnceLock<usize> = OnceLock::new();
    *LIMIT.get_or_init(|| {
        std::env::var("POLYSPARSE_DENSE_LIMIT")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_DENSE_LIMIT)
    })
}

pub(crate) fn ensure_dense(n: usize) -> Result<()> {
    let limit = dense_limit();
    if n > limit {
        return Err(Error::SizeLimitExceeded { n, limit });
    }
    Ok(())
}

/// Anything that can be applied to a vector.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Caller guarantees `x.len() == self.dim()`.
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

/// Checked product `a * x`.
pub fn matvec<A: LinearOperator + ?Sized>(a: &A, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: x.len(),
        });
    }
    Ok(a.apply(x))
}

/// Symmetric nonnegative sparse matrix kept as canonical upper-triangle triples.
///
/// Triples are sorted by `(row, col)` with `row <= col`, duplicates summed and
/// zeros dropped, so two matrices with the same entries compare equal. A
/// mirrored CSR copy is kept for row access.
#[derive(Clone, Debug)]
pub struct SparseSym {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl PartialEq for SparseSym {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.entries == other.entries
    }
}

impl SparseSym {
    /// Canonicalizes arbitrary triples; `(i, j)` and `(j, i)` name the same entry.
    pub fn new<I>(n: usize, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut raw = Vec::new();
        for (i, j, w) in triples {
            let bound = n;
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, bound });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, bound });
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight {
                    row: i,
                    col: j,
                    weight: w,
                });
            }
            raw.push((i.min(j), i.max(j), w));
        }
        raw.sort_by_key(|t| (t.0, t.1));
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(raw.len());
        for (i, j, w) in raw {
            match entries.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += w,
                _ => entries.push((i, j, w)),
            }
        }
        entries.retain(|e| e.2 > 0.0);
        Ok(Self::from_canonical(n, entries))
    }

    fn from_canonical(n: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in &entries {
            counts[i + 1] += 1;
            if i != j {
                counts[j + 1] += 1;
            }
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let total = offsets[n];
        let mut cols = vec![0usize; total];
        let mut vals = vec![0.0; total];
        // Lower-triangle mirrors first so each row ends up sorted by column.
        for &(i, j, w) in &entries {
            if i != j {
                let p = fill[j];
                cols[p] = i;
                vals[p] = w;
                fill[j] += 1;
            }
        }
        for &(i, j, w) in &entries {
            let p = fill[i];
            cols[p] = j;
            vals[p] = w;
            fill[i] += 1;
        }
        Self {
            n,
            entries,
            offsets,
            cols,
            vals,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_canonical(n, Vec::new())
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), values.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Reads the upper triangle of a symmetric dense matrix, dropping entries
    /// with magnitude at most `drop_tol`. Negative entries above that are errors.
    pub fn from_dense(a: &DMatrix<f64>, drop_tol: f64) -> Result<Self> {
        let n = a.nrows();
        let mut triples = Vec::new();
        for i in 0..n {
            for j in i..n {
                let w = 0.5 * (a[(i, j)] + a[(j, i)]);
                if w.abs() > drop_tol {
                    triples.push((i, j, w));
                }
            }
        }
        Self::new(n, triples)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Canonical upper-triangle triples.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Number of stored nonzeros of the full symmetric matrix.
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map(|(_, w)| w).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.n];
        for &(i, j, w) in &self.entries {
            if i == j {
                diag[i] = w;
            }
        }
        diag
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, w)| w).sum()).collect()
    }

    /// Strict upper-triangle entries, i.e. the edges of the underlying graph.
    pub fn off_diagonal(&self) -> Vec<(usize, usize, f64)> {
        self.entries.iter().copied().filter(|&(i, j, _)| i != j).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j, w) in &self.entries {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        a
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.n, self.entries.iter().map(|&(i, j, w)| (i, j, c * w)))
    }

    /// `Σ c_k · A_k + diag(extra)` for nonnegative coefficients.
    pub fn combine(n: usize, terms: &[(f64, &SparseSym)], extra_diag: Option<&[f64]>) -> Result<Self> {
        let mut triples = Vec::new();
        for &(c, a) in terms {
            if a.n != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: a.n,
                });
            }
            triples.extend(a.entries.iter().map(|&(i, j, w)| (i, j, c * w)));
        }
        if let Some(d) = extra_diag {
            if d.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: d.len(),
                });
            }
            triples.extend(d.iter().enumerate().map(|(i, &v)| (i, i, v)));
        }
        Self::new(n, triples)
    }

    /// `M · diag(d)^{-1} · M`, accumulated row by row.
    pub fn two_hop(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: d.len(),
            });
        }
        let n = self.n;
        let mut acc = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut triples = Vec::new();
        for i in 0..n {
            for (k, w_ik) in self.row(i) {
                let s = w_ik / d[k];
                for (j, w_kj) in self.row(k) {
                    if j < i {
                        continue;
                    }
                    if acc[j] == 0.0 {
                        touched.push(j);
                    }
                    acc[j] += s * w_kj;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                triples.push((i, j, acc[j]));
                acc[j] = 0.0;
            }
            touched.clear();
        }
        Self::new(n, triples)
    }
}

impl LinearOperator for SparseSym {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, w)| w * x[j]).sum()).collect()
    }
}

/// Diagonal matrix with strictly positive entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PosDiag(Vec<f64>);

impl PosDiag {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveDiagonal { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| c * v).collect())
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        b.iter().zip(&self.0).map(|(x, d)| x / d).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.0))
    }
}

impl TryFrom<Vec<f64>> for PosDiag {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PosDiag> for Vec<f64> {
    fn from(d: PosDiag) -> Self {
        d.0
    }
}

impl LinearOperator for PosDiag {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.0).map(|(x, d)| x * d).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Laplacian,
    Sddm,
}

/// `B = D - M` with `D` positive, `M` symmetric nonnegative and every row
/// diagonally dominant. Rows that are all tight make a Laplacian.
#[derive(Clone, Debug, PartialEq)]
pub struct TMatrix {
    d: PosDiag,
    m: SparseSym,
    kind: Kind,
}

impl TMatrix {
    pub fn new(d: PosDiag, m: SparseSym) -> Result<Self> {
        if d.dim() != m.dim() {
            return Err(Error::DimensionMismatch {
                expected: d.dim(),
                found: m.dim(),
            });
        }
        let sums = m.row_sums();
        let scale = sums
            .iter()
            .zip(d.values())
            .fold(0.0f64, |acc, (s, dv)| acc.max(*s).max(*dv));
        let tol = DOMINANCE_TOL * scale;
        let mut strict = false;
        for (row, (&row_sum, &diag)) in sums.iter().zip(d.values()).enumerate() {
            let slack = diag - row_sum;
            if slack < -tol {
                return Err(Error::DominanceViolation { row, diag, row_sum });
            }
            if slack > tol {
                strict = true;
            }
        }
        let kind = if strict { Kind::Sddm } else { Kind::Laplacian };
        Ok(Self { d, m, kind })
    }

    /// Graph Laplacian of a weighted adjacency (self-loops allowed).
    pub fn laplacian(adjacency: SparseSym) -> Result<Self> {
        let d = PosDiag::new(adjacency.row_sums())?;
        Self::new(d, adjacency)
    }

    pub fn d(&self) -> &PosDiag {
        &self.d
    }

    pub fn m(&self) -> &SparseSym {
        &self.m
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn into_parts(self) -> (PosDiag, SparseSym) {
        (self.d, self.m)
    }

    /// Row slack `D_ii - Σ_j M_ij`.
    pub fn slack(&self) -> Vec<f64> {
        self.m
            .row_sums()
            .iter()
            .zip(self.d.values())
            .map(|(s, d)| d - s)
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.d.to_dense() - self.m.to_dense()
    }
}

impl LinearOperator for TMatrix {
    fn dim(&self) -> usize {
        self.d.dim()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mx = self.m.apply(x);
        self.d
            .values()
            .iter()
            .zip(x)
            .zip(mx)
            .map(|((d, x), mx)| d * x - mx)
            .collect()
    }
}

/// Validating constructor; see [`TMatrix::new`].
pub fn build_tmatrix(d: PosDiag, m: SparseSym) -> Result<TMatrix> {
    TMatrix::new(d, m)
}

/// Whether `M` is symmetric positive semi-definite, decided by a dense eigensolve.
pub fn is_spsd(m: &SparseSym, d: &PosDiag) -> Result<bool> {
    if m.dim() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.dim(),
            found: m.dim(),
        });
    }
    ensure_dense(m.dim())?;
    if m.nnz() == 0 {
        return Ok(true);
    }
    let eig = m.to_dense().symmetric_eigenvalues();
    let norm = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(min >= -PSD_TOL * norm)
}
