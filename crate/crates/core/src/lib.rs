//! Spectral sparsification of random-walk matrix polynomials whose
//! coefficients come from mixtures of Binomial distributions.
//!
//! The crate is organized bottom-up:
//!
//! - [`matrix`]: sparse symmetric matrices and T-matrices `D - M`.
//! - [`oracle`]: dense ground truth used to verify every sparsifier.
//! - [`sparsify`]: leverage-score sampling and the normalized one-hop and
//!   two-hop sparsifiers.
//! - [`poly`]: repeated squaring, single-Binomial and mixture pipelines.
//! - [`mdbd`]: Binomial mixtures, Bernstein evaluation and pdf fitting.
//! - [`recover`]: exact recovery of mixture weights.
//! - [`markov`]: escaping probabilities and an SDDM solver built on inverse chains.
//! - [`io`]: text and JSON file formats.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod generators;
pub mod io;
pub mod markov;
pub mod matrix;
pub mod mdbd;
pub mod oracle;
pub mod poly;
pub mod recover;
pub mod seed;
pub mod sparsify;

mod par;

pub use error::{Error, Result};
pub use matrix::{build_tmatrix, is_spsd, matvec, Kind, PosDiag, SparseSym, TMatrix};
pub use mdbd::Mdbd;
pub use oracle::{approx_check, dense_poly, PencilBounds};
pub use sparsify::Config;
