//! Discrete Gaussian free fields on weighted graphs over compact manifolds.
//!
//! The crate builds graph Laplacians over point clouds on the flat tori and
//! the round sphere (heat-kernel weights or regular lattices), samples the
//! zero-average discrete Gaussian free field, and provides the quantities
//! needed to compare it with the continuum field: Green and semigroup forms,
//! Wasserstein-driven bandwidth selection, and the Voronoi lift to negative
//! Sobolev spaces.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`manifold`] | eigen-data, heat and Green kernels, sampling, distances |
//! | [`graph`] | grids, conductances, Laplacian, spectral operators |
//! | [`bandwidth`] | Wasserstein-1 distances, bandwidth rule, gap-adjusted schedule |
//! | [`dgff`] | field sampler, pairings, Markov-decomposition identities |
//! | [`sobolev`] | Voronoi cells, lifted field, `H^{-s}` norms, tightness |

pub mod bandwidth;
pub mod dgff;
pub mod error;
pub mod graph;
pub mod manifold;
pub mod quadrature;
pub mod rng;
pub mod sobolev;
pub mod stats;

pub use error::{Error, Result};
