//! Seeded random instances for tests, benchmarks and demos.

use rand::Rng;

use crate::error::Result;
use crate::matrix::{PosDiag, SparseSym, TMatrix};
use crate::seed;

const MAX_ATTEMPTS: u64 = 1000;

fn connected(a: &SparseSym) -> bool {
    let n = a.dim();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for (w, _) in a.row(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Unit-weight `G(n, p)` adjacency, redrawn until connected.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<SparseSym> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = seed::rng(seed::derive(seed, attempt));
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j, 1.0));
                }
            }
        }
        let a = SparseSym::new(n, edges)?;
        if connected(&a) {
            return Ok(a);
        }
    }
    Err(crate::Error::InvalidParameter(format!(
        "G({n}, {p}) stayed disconnected after {MAX_ATTEMPTS} draws"
    )))
}

/// Laplacian of a connected `G(n, p)`.
pub fn er_laplacian(n: usize, p: f64, seed: u64) -> Result<TMatrix> {
    TMatrix::laplacian(erdos_renyi(n, p, seed)?)
}

/// `factor · deg − A` for a connected `G(n, p)`; SDDM when `factor > 1`.
pub fn er_sddm(n: usize, p: f64, factor: f64, seed: u64) -> Result<TMatrix> {
    let a = erdos_renyi(n, p, seed)?;
    let d = PosDiag::new(a.row_sums().iter().map(|v| factor * v).collect())?;
    TMatrix::new(d, a)
}

/// Random T-matrix with weights in `[0.5, 2)`, self-loops on about a third of
/// the vertices and slack on about half of the rows (so usually SDDM).
/// Vertices left without neighbours get a self-loop so `D` stays positive.
pub fn random_tmatrix(n: usize, density: f64, seed: u64) -> Result<TMatrix> {
    let mut rng = seed::rng(seed);
    let mut triples = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < density {
                triples.push((i, j, rng.random_range(0.5..2.0)));
            }
        }
    }
    for i in 0..n {
        if rng.random::<f64>() < 1.0 / 3.0 {
            triples.push((i, i, rng.random_range(0.5..2.0)));
        }
    }
    let mut m = SparseSym::new(n, triples)?;
    let lonely: Vec<(usize, usize, f64)> = m
        .row_sums()
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == 0.0)
        .map(|(i, _)| (i, i, 1.0))
        .collect();
    if !lonely.is_empty() {
        let mut all = m.entries().to_vec();
        all.extend(lonely);
        m = SparseSym::new(n, all)?;
    }
    let d: Vec<f64> = m
        .row_sums()
        .iter()
        .map(|s| {
            if rng.random::<f64>() < 0.5 {
                *s
            } else {
                s * rng.random_range(1.0..1.5)
            }
        })
        .collect();
    TMatrix::new(PosDiag::new(d)?, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_is_connected_and_seeded() {
        let a = erdos_renyi(40, 0.1, 3).unwrap();
        assert!(connected(&a));
        assert_eq!(a, erdos_renyi(40, 0.1, 3).unwrap());
        assert_ne!(a, erdos_renyi(40, 0.1, 4).unwrap());
        let b = er_sddm(20, 0.3, 1.5, 1).unwrap();
        assert_eq!(b.kind(), crate::Kind::Sddm);
    }
}
