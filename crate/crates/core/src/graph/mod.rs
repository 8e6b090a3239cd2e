//! Weighted graphs over manifold grids and their Laplacians.
//!
//! The Laplacian acts as `Lf(v) = Σ_w c_vw (f(v) − f(w))`; it is stored as a
//! dense symmetric matrix and fully diagonalized, which is what the Green
//! operator, the semigroup and the field sampler all consume.

mod grid;
mod laplacian;
pub(crate) mod spectral;
mod weighted;

pub use grid::{GridRealization, Provenance};
pub use laplacian::{assemble_laplacian, LaplacianMatrix};
pub use spectral::{discretize_function, spectral_decompose, SpectralData};
pub use weighted::{build_heat_kernel_graph, build_torus_lattice, WeightedGraph};
