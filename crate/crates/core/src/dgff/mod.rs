//! The zero-average discrete Gaussian free field.
//!
//! A field on a connected weighted graph is the centered Gaussian vector
//! with covariance `G^V = Σ_{j≥2} λ_j^{-1} u_j u_j^T`, the inverse of the
//! Laplacian away from constants. [`markov`] holds the exact linear-algebra
//! forms of the Markov decomposition: the field minus its harmonic
//! extension from outside `U` has the covariance of the walk killed on
//! leaving `U`.

pub mod markov;
mod sample;

pub use markov::{
    harmonic_extension, killed_green, markov_decomposition_check, occupation_identity_check,
    occupation_matrix, SubsetProblem,
};
pub use sample::{
    covariance_estimate, pair_with_function, sample_dgff, sample_dgff_blocks, DgffSample,
    DRAW_BLOCK,
};
