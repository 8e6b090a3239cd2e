//! Lifting discrete fields to distributions on the manifold.
//!
//! A grid field `φ` becomes the distribution `f ↦ N^{-1} Σ_i φ(p_i) f̃(p_i)`
//! where `f̃(p_i)` is the average of `f` over the Voronoi cell of `p_i`.
//! Cells, volumes and averages are estimated from shared Monte Carlo probes.

mod lift;
mod norm;
mod voronoi;

pub use lift::{lift_pair, tightness_statistic, LiftBasis, LiftedField, TightnessReport, MIN_TIGHTNESS_DRAWS};
pub use norm::{bound_series, bound_series_tail, sobolev_neg_norm, NegNorm, SobolevParams};
pub use voronoi::{cell_average, fill_radius, voronoi_assign, CellAverage, VoronoiTessellation};
