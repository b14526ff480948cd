//! Leverage-score sampling and the normalized sparsifiers built on it.
//!
//! Effective resistances are computed exactly with a dense factorization per
//! connected component, so everything here is limited to the dense threshold.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ensure_dense, PosDiag, SparseSym, TMatrix, DOMINANCE_TOL};
use crate::par::map_range;
use crate::seed;

/// Tunables shared by every sampler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Oversampling constant `C_s` in `q = ⌈C_s ε⁻² n ln n⌉`.
    pub oversample: f64,
    /// Implicit cliques with at most this many members are written out edge by edge.
    pub clique_threshold: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            oversample: 4.0,
            clique_threshold: 32,
        }
    }
}

impl Config {
    /// Number of samples drawn for an `n`-vertex graph at tolerance `eps`.
    pub fn sample_count(&self, n: usize, eps: f64) -> usize {
        let n_f = n as f64;
        let q = (self.oversample * n_f * n_f.max(1.0).ln() / (eps * eps)).ceil();
        (q as usize).max(1)
    }

    /// Upper bound on the stored (upper-triangle) entries of a sparsifier at tolerance `eps`.
    pub fn nnz_bound(&self, n: usize, eps: f64) -> f64 {
        let n_f = n as f64;
        self.oversample * n_f * n_f.max(1.0).ln() / (eps * eps)
    }
}

/// Splits a relative budget into `k` equal factors: `(1+e)^k = 1+eps`.
pub fn split_budget(eps: f64, k: u32) -> f64 {
    (1.0 + eps).powf(1.0 / f64::from(k)) - 1.0
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1)")));
    }
    Ok(())
}

/// One sampled edge with its leverage score and sampling probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSample {
    pub edge: (usize, usize),
    pub weight: f64,
    pub leverage: f64,
    pub prob: f64,
}

/// Result of a sampling pass: `D̃ − Ã` approximates the input Laplacian.
#[derive(Clone, Debug, PartialEq)]
pub struct Sparsifier {
    /// Weighted degrees of `Ã` (may contain zeros for isolated vertices).
    pub degrees: Vec<f64>,
    /// Off-diagonal adjacency `Ã`.
    pub adjacency: SparseSym,
    /// Tolerance that holds for the output; 0 when the input was copied.
    pub eps: f64,
}

impl Sparsifier {
    fn exact(edges: SparseSym) -> Self {
        Self {
            degrees: edges.row_sums(),
            adjacency: edges,
            eps: 0.0,
        }
    }

    pub fn sampled(&self) -> bool {
        self.eps > 0.0
    }
}

fn components(n: usize, edges: &[(usize, usize, f64)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j, _) in edges {
        let a = find(&mut parent, i);
        let b = find(&mut parent, j);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    (0..n).map(|v| find(&mut parent, v)).collect()
}

/// Effective resistance of every listed edge in the graph formed by those edges.
fn resistances(n: usize, edges: &[(usize, usize, f64)]) -> Result<Vec<f64>> {
    ensure_dense(n)?;
    let comp = components(n, edges);
    let mut local = vec![0usize; n];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        local[v] = members[comp[v]].len();
        members[comp[v]].push(v);
    }
    let mut by_comp: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(i, _, _)) in edges.iter().enumerate() {
        by_comp[comp[i]].push(e);
    }
    let mut out = vec![0.0; edges.len()];
    for root in 0..n {
        let ids = &by_comp[root];
        if ids.is_empty() {
            continue;
        }
        let c = members[root].len();
        let mut lap = DMatrix::from_element(c, c, 1.0 / c as f64);
        for &e in ids {
            let (i, j, w) = edges[e];
            let (a, b) = (local[i], local[j]);
            lap[(a, a)] += w;
            lap[(b, b)] += w;
            lap[(a, b)] -= w;
            lap[(b, a)] -= w;
        }
        let inv = lap
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("graph Laplacian is not factorizable".into()))?
            .inverse();
        for &e in ids {
            let (i, j, _) = edges[e];
            let (a, b) = (local[i], local[j]);
            out[e] = (inv[(a, a)] + inv[(b, b)] - 2.0 * inv[(a, b)]).max(0.0);
        }
    }
    Ok(out)
}

/// Effective resistance of every edge of a Laplacian, keyed by `(i, j)` with `i < j`.
///
/// Disconnected graphs are handled one component at a time.
pub fn effective_resistances(l: &TMatrix) -> Result<Vec<((usize, usize), f64)>> {
    if l.kind() != crate::matrix::Kind::Laplacian {
        return Err(Error::InvalidParameter("effective resistances need a Laplacian".into()));
    }
    let edges = l.m().off_diagonal();
    let r = resistances(l.d().dim(), &edges)?;
    Ok(edges.iter().zip(r).map(|(&(i, j, _), r)| ((i, j), r)).collect())
}

/// Leverage scores and sampling probabilities for the edges of a graph.
pub fn edge_samples(n: usize, edges: &SparseSym) -> Result<Vec<EdgeSample>> {
    let list = edges.off_diagonal();
    let r = resistances(n, &list)?;
    let lev: Vec<f64> = list.iter().zip(&r).map(|(e, r)| e.2 * r).collect();
    let total: f64 = lev.iter().sum();
    Ok(list
        .iter()
        .zip(lev)
        .map(|(&(i, j, w), leverage)| EdgeSample {
            edge: (i, j),
            weight: w,
            leverage,
            prob: if total > 0.0 { leverage / total } else { 0.0 },
        })
        .collect())
}

/// Samples the off-diagonal part of `edges`, ignoring any diagonal.
pub(crate) fn sparsify_edges(n: usize, edges: &SparseSym, eps: f64, seed: u64, cfg: &Config) -> Result<Sparsifier> {
    check_eps(eps)?;
    let list = edges.off_diagonal();
    let q = cfg.sample_count(n, eps);
    if list.len() <= q {
        return Ok(Sparsifier::exact(SparseSym::new(n, list)?));
    }
    let samples = edge_samples(n, edges)?;
    let probs: Vec<f64> = samples.iter().map(|s| s.prob).collect();
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::InvalidParameter(format!("sampling weights: {e}")))?;
    let mut rng = seed::rng(seed);
    let mut counts = vec![0u32; samples.len()];
    for _ in 0..q {
        counts[dist.sample(&mut rng)] += 1;
    }
    let qf = q as f64;
    let kept = samples
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| (s.edge.0, s.edge.1, f64::from(c) * s.weight / (qf * s.prob)));
    let adjacency = SparseSym::new(n, kept)?;
    Ok(Sparsifier {
        degrees: adjacency.row_sums(),
        adjacency,
        eps,
    })
}

/// Spectral sparsifier of the Laplacian `D − A`.
///
/// Self-loops of `A` cancel against `D` and are dropped. When `A` already has
/// at most `q` edges it is returned unchanged with `eps = 0`.
pub fn sample_sparsifier(d: &PosDiag, a: &SparseSym, eps: f64, seed: u64, cfg: &Config) -> Result<Sparsifier> {
    let b = TMatrix::new(d.clone(), a.clone())?;
    if b.kind() != crate::matrix::Kind::Laplacian {
        return Err(Error::InvalidParameter(
            "sample_sparsifier needs a Laplacian D − A".into(),
        ));
    }
    sparsify_edges(d.dim(), a, eps, seed, cfg)
}

/// `Â = diag(D − D̃/(1+ε)) + Ã/(1+ε)`, so that `D − Â = (D̃ − Ã)/(1+ε)` off `D`'s slack.
///
/// Small negative residues from rounding are clamped to zero.
pub fn normalize_sparsifier(d: &[f64], d_tilde: &[f64], a_tilde: &SparseSym, eps: f64) -> Result<SparseSym> {
    let n = d.len();
    if d_tilde.len() != n || a_tilde.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: d_tilde.len().max(a_tilde.dim()),
        });
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be nonnegative")));
    }
    let shrink = 1.0 / (1.0 + eps);
    let scale = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut diag = Vec::with_capacity(n);
    for (row, (&di, &ti)) in d.iter().zip(d_tilde).enumerate() {
        let value = di - shrink * ti;
        if value < -DOMINANCE_TOL * scale {
            return Err(Error::NegativeDiagonalResidue { row, value });
        }
        diag.push(value.max(0.0));
    }
    SparseSym::combine(n, &[(shrink, a_tilde)], Some(&diag))
}

/// Normalized one-hop sparsifier: `D − M̂ ≈_ε D − M` with the same `D` and kind.
pub fn mklc(b: &TMatrix, eps: f64, seed: u64, cfg: &Config) -> Result<TMatrix> {
    check_eps(eps)?;
    let n = b.d().dim();
    let d2 = b.m().row_sums();
    let sp = sparsify_edges(n, b.m(), eps / 2.0, seed, cfg)?;
    let m_hat = normalize_sparsifier(&d2, &sp.degrees, &sp.adjacency, sp.eps)?;
    TMatrix::new(b.d().clone(), m_hat)
}

type Triple = (usize, usize, f64);

/// Implicit clique `η ηᵀ / D_kk` over the neighbours of a centre vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Clique {
    pub center: usize,
    pub members: Vec<usize>,
    /// Off-diagonal row of `M` at the centre, restricted to `members`.
    pub eta: Vec<f64>,
    /// `D_kk`, the denominator of every clique weight.
    pub denom: f64,
    /// `Σ η`.
    pub s: f64,
}

impl Clique {
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.eta[a] * self.eta[b] / self.denom
    }

    fn all_edges(&self) -> Vec<(usize, usize, f64)> {
        let r = self.members.len();
        let mut out = Vec::with_capacity(r * (r - 1) / 2);
        for a in 0..r {
            for b in a + 1..r {
                out.push((self.members[a], self.members[b], self.weight(a, b)));
            }
        }
        out
    }

    /// Leverage-score sampling in closed form: the pair `{u, v}` has leverage
    /// `(η_u + η_v)/s`, realized by drawing `u ∝ η` and `v` uniformly among the rest.
    fn sample_edges(&self, q: usize, seed: u64) -> Result<Vec<(usize, usize, f64)>> {
        let r = self.members.len();
        let dist =
            WeightedIndex::new(&self.eta).map_err(|e| Error::InvalidParameter(format!("clique weights: {e}")))?;
        let mut rng = seed::rng(seed);
        let mut picks = Vec::with_capacity(q);
        for _ in 0..q {
            let a = dist.sample(&mut rng);
            let mut b = rng.random_range(0..r - 1);
            if b >= a {
                b += 1;
            }
            picks.push((a.min(b), a.max(b)));
        }
        picks.sort_unstable();
        let qf = q as f64;
        let mut out = Vec::new();
        let mut k = 0;
        while k < picks.len() {
            let pair = picks[k];
            let mut count = 0u32;
            while k < picks.len() && picks[k] == pair {
                count += 1;
                k += 1;
            }
            let (a, b) = pair;
            let prob = (self.eta[a] + self.eta[b]) / (self.s * (r as f64 - 1.0));
            let w = f64::from(count) * self.weight(a, b) / (qf * prob);
            out.push((self.members[a], self.members[b], w));
        }
        Ok(out)
    }

    /// `(s/D) diag(η) − ηηᵀ/D` embedded in `n × n`.
    pub fn laplacian_dense(&self, n: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n, n);
        for (a, &u) in self.members.iter().enumerate() {
            out[(u, u)] += self.s * self.eta[a] / self.denom;
            for (b, &v) in self.members.iter().enumerate() {
                out[(u, v)] -= self.weight(a, b);
            }
        }
        out
    }
}

/// `D − M D⁻¹ M = diag(d1) + L_B + Σ_k L_{N_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoHopDecomposition {
    pub d1: Vec<f64>,
    /// Edges `B_ij = (M_ii/D_ii + M_jj/D_jj) M_ij` of the Laplacian part.
    pub laplacian_b: SparseSym,
    /// Cliques with at least two members.
    pub cliques: Vec<Clique>,
}

impl TwoHopDecomposition {
    /// Dense reassembly of the decomposition.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.d1.len();
        let mut out = DMatrix::zeros(n, n);
        for (i, v) in self.d1.iter().enumerate() {
            out[(i, i)] += v;
        }
        for &(i, j, w) in self.laplacian_b.entries() {
            out[(i, i)] += w;
            out[(j, j)] += w;
            out[(i, j)] -= w;
            out[(j, i)] -= w;
        }
        for c in &self.cliques {
            out += c.laplacian_dense(n);
        }
        out
    }
}

/// Splits `D − M D⁻¹ M` into a diagonal, an explicit Laplacian and implicit cliques in `O(m)`.
pub fn two_hop_decompose(b: &TMatrix) -> Result<TwoHopDecomposition> {
    let n = b.d().dim();
    let d = b.d().values();
    let m = b.m();
    let diag = m.diagonal();
    let r = m.row_sums();
    let d1: Vec<f64> = (0..n)
        .map(|i| {
            let p1: f64 = m.row(i).map(|(k, w)| w * r[k] / d[k]).sum();
            (d[i] - p1).max(0.0)
        })
        .collect();
    let laplacian_b = SparseSym::new(
        n,
        m.off_diagonal()
            .into_iter()
            .map(|(i, j, w)| (i, j, (diag[i] / d[i] + diag[j] / d[j]) * w)),
    )?;
    let mut cliques = Vec::new();
    for k in 0..n {
        let (members, eta): (Vec<usize>, Vec<f64>) = m.row(k).filter(|&(j, _)| j != k).unzip();
        if members.len() < 2 {
            continue;
        }
        let s = eta.iter().sum();
        cliques.push(Clique {
            center: k,
            members,
            eta,
            denom: d[k],
            s,
        });
    }
    Ok(TwoHopDecomposition {
        d1,
        laplacian_b,
        cliques,
    })
}

/// Normalized two-hop sparsifier: `D − M̂₂ ≈_ε D − M D⁻¹ M`, same `D` and kind.
pub fn mps(b: &TMatrix, eps: f64, seed: u64, cfg: &Config) -> Result<TMatrix> {
    check_eps(eps)?;
    let n = b.d().dim();
    let dec = two_hop_decompose(b)?;
    let part = split_budget(eps / 2.0, 2);
    let clique_seed = seed::derive(seed, 0);

    let per_clique = map_range(dec.cliques.len(), |k| -> Result<(Vec<Triple>, bool)> {
        let c = &dec.cliques[k];
        let r = c.members.len();
        let pairs = r * (r - 1) / 2;
        if r <= cfg.clique_threshold {
            return Ok((c.all_edges(), false));
        }
        let q = cfg.sample_count(r, part);
        if q >= pairs {
            return Ok((c.all_edges(), false));
        }
        Ok((c.sample_edges(q, seed::derive(clique_seed, k as u64))?, true))
    });

    let mut triples: Vec<(usize, usize, f64)> = dec.laplacian_b.entries().to_vec();
    let mut clique_sampled = false;
    for res in per_clique {
        let (edges, sampled) = res?;
        clique_sampled |= sampled;
        triples.extend(edges);
    }
    let union = SparseSym::new(n, triples)?;
    let sp = sparsify_edges(n, &union, part, seed::derive(seed, 1), cfg)?;
    let achieved = (1.0 + if clique_sampled { part } else { 0.0 }) * (1.0 + sp.eps) - 1.0;

    let d = b.d().values();
    let residue: Vec<f64> = (0..n).map(|i| d[i] - dec.d1[i]).collect();
    let m_hat = normalize_sparsifier(&residue, &sp.degrees, &sp.adjacency, achieved)?;
    TMatrix::new(b.d().clone(), m_hat)
}
