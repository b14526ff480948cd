#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use polysparse::TMatrix;

pub fn path3() -> TMatrix {
    polysparse::TMatrix::laplacian(polysparse::SparseSym::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()).unwrap()
}

/// `D⁻¹M` as a dense matrix.
pub fn walk(b: &TMatrix) -> DMatrix<f64> {
    let mut w = b.m().to_dense();
    for (i, d) in b.d().values().iter().enumerate() {
        w.row_mut(i).scale_mut(1.0 / d);
    }
    w
}

/// `D − D W_p^N` by repeated multiplication.
pub fn lazy_truth(b: &TMatrix, p: f64, n: usize) -> DMatrix<f64> {
    let dim = b.d().dim();
    let wp = DMatrix::identity(dim, dim) * (1.0 - p) + walk(b) * p;
    let mut acc = DMatrix::identity(dim, dim);
    for _ in 0..n {
        acc = &acc * &wp;
    }
    let d = b.d().to_dense();
    &d - &d * acc
}

pub fn min_eig(x: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(x.clone()).eigenvalues.min()
}

pub fn spectral_norm(x: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(x.clone()).eigenvalues.amax()
}
