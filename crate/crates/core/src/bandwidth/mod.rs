//! Bandwidth selection for heat-kernel graphs.
//!
//! The bandwidth `t` must shrink with `N`, but no faster than the empirical
//! measure approaches the volume measure: the rule here is
//! `W₁(μ^N, V̄) ≤ safety · t^{d/2+2}`. The gap-adjusted schedule then coarsens
//! these bandwidths to levels `1/j` on which the graph spectral gap has been
//! measured to be close to the gap of the intermediate operator `(1 − S_t)/t`.

mod rule;
mod schedule;
mod transport;
mod wasserstein;

pub use rule::{intermediate_gap, select_bandwidth_wass, DEFAULT_SAFETY};
pub use schedule::{gap_adjusted_schedule, BandwidthSchedule, GapErrorTable, ScheduleRecord};
pub use transport::{empirical_wasserstein1, transport_cost};
pub use wasserstein::{wasserstein1_circle, wasserstein1_estimate, EmpiricalMeasure, W1Estimate};
