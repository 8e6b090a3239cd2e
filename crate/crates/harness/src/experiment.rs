//! Grids, bandwidths and graphs shared by all suites of one run.

use std::collections::BTreeSet;
use std::sync::Mutex;

use dgff::bandwidth::{
    gap_adjusted_schedule, intermediate_gap, select_bandwidth_wass, wasserstein1_circle, wasserstein1_estimate,
    BandwidthSchedule, GapErrorTable,
};
use dgff::graph::{
    assemble_laplacian, build_heat_kernel_graph, build_torus_lattice, spectral_decompose, GridRealization,
    LaplacianMatrix, SpectralData, WeightedGraph,
};
use dgff::manifold::{Manifold, TestFunction, DEFAULT_MODE_CAP};
use dgff::rng::{stream, Purpose, StreamId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BandwidthConfig, ExperimentConfig, GridKind};
use crate::error::Result;

/// `W₁(μ^N, V̄)` as measured for one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W1Record {
    pub value: f64,
    /// Zero when `value` is exact.
    pub bias_bound: f64,
}

/// Per-replicate bandwidth derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicatePlan {
    pub replicate: usize,
    pub w1: Vec<(usize, W1Record)>,
    /// Raw `t'_N` from the Wasserstein rule.
    pub t_prime: Vec<(usize, f64)>,
    /// Nonincreasing majorant `max_{k ≥ N} t'_k` fed to the schedule.
    pub t_prime_monotone: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_table: Option<GapErrorTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<BandwidthSchedule>,
}

/// One grid with its graph and spectrum.
pub struct Realization {
    pub n: usize,
    pub replicate: usize,
    pub grid: GridRealization,
    pub graph: WeightedGraph,
    pub laplacian: LaplacianMatrix,
    pub spectral: SpectralData,
    /// Heat-kernel time; `None` for lattices.
    pub bandwidth: Option<f64>,
    /// False when the schedule could not certify a level at this size and
    /// `t'_N` was used instead.
    pub certified: bool,
    pub w1: W1Record,
}

impl Realization {
    /// Key separating the random streams of different sizes and replicates.
    pub fn stream_key(&self) -> u64 {
        stream_key(self.n, self.replicate)
    }
}

pub fn stream_key(n: usize, replicate: usize) -> u64 {
    n as u64 | ((replicate as u64) << 32)
}

pub struct Experiment {
    pub config: ExperimentConfig,
    pub functions: Vec<(String, TestFunction)>,
    pub plans: Vec<ReplicatePlan>,
    /// Ordered by replicate, then size.
    pub realizations: Vec<Realization>,
    pub warnings: Vec<String>,
    streams: Mutex<BTreeSet<String>>,
}

impl Experiment {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        let mut warnings = config.validate()?;
        let functions = config.test_functions()?;
        let streams = Mutex::new(BTreeSet::new());
        let exp = Self {
            config: config.clone(),
            functions,
            plans: Vec::new(),
            realizations: Vec::new(),
            warnings: Vec::new(),
            streams,
        };
        let grids: Vec<Option<GridRealization>> = (0..config.replicates)
            .map(|r| exp.full_grid(r))
            .collect::<Result<_>>()?;
        let plans: Vec<ReplicatePlan> = (0..config.replicates)
            .into_par_iter()
            .map(|r| exp.plan(r, grids[r].as_ref()))
            .collect::<Result<_>>()?;
        let cells: Vec<(usize, usize)> = (0..config.replicates)
            .flat_map(|r| config.sizes.iter().map(move |&n| (r, n)))
            .collect();
        let realizations: Vec<Realization> = cells
            .par_iter()
            .map(|&(r, n)| exp.realize(&plans[r], grids[r].as_ref(), n))
            .collect::<Result<_>>()?;
        for real in &realizations {
            if !real.certified {
                warnings.push(format!(
                    "N={} replicate {}: no certified schedule level, used t'_N = {:.6e}",
                    real.n,
                    real.replicate,
                    real.bandwidth.unwrap_or(f64::NAN)
                ));
            }
        }
        Ok(Self {
            plans,
            realizations,
            warnings,
            ..exp
        })
    }

    pub fn note_stream(&self, id: StreamId) {
        self.streams.lock().unwrap().insert(id.label());
    }

    pub fn streams(&self) -> Vec<String> {
        self.streams.lock().unwrap().iter().cloned().collect()
    }

    pub fn model(&self) -> Manifold {
        self.config.manifold
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn realizations_for(&self, replicate: usize) -> impl Iterator<Item = &Realization> {
        self.realizations.iter().filter(move |r| r.replicate == replicate)
    }

    /// The largest i.i.d. grid; smaller sizes are its prefixes.
    fn full_grid(&self, replicate: usize) -> Result<Option<GridRealization>> {
        if self.config.grid != GridKind::Iid {
            return Ok(None);
        }
        let n = *self.config.sizes.last().unwrap();
        let id = StreamId::new(Purpose::Grid, n as u64, replicate as u64);
        self.note_stream(id);
        let mut rng = stream(self.seed(), id);
        Ok(Some(GridRealization::iid(self.model(), n, &mut rng, self.seed(), id.label())?))
    }

    fn grid_for(&self, full: Option<&GridRealization>, n: usize) -> Result<GridRealization> {
        match full {
            Some(g) => Ok(g.prefix(n)?),
            None => Ok(GridRealization::lattice(self.model(), n)?),
        }
    }

    fn measure_w1(&self, grid: &GridRealization, replicate: usize) -> Result<W1Record> {
        let model = self.model();
        if model == Manifold::Torus1 {
            let xs: Vec<f64> = grid.points().iter().map(|p| p.x()).collect();
            return Ok(W1Record {
                value: wasserstein1_circle(&xs)?,
                bias_bound: 0.0,
            });
        }
        let id = StreamId::new(Purpose::WassersteinReference, stream_key(grid.len(), replicate), 0);
        self.note_stream(id);
        let mut rng = stream(self.seed(), id);
        let est = wasserstein1_estimate(model, grid.points(), 10 * grid.len(), &mut rng)?;
        Ok(W1Record {
            value: est.estimate,
            bias_bound: est.bias_bound,
        })
    }

    fn plan(&self, replicate: usize, full: Option<&GridRealization>) -> Result<ReplicatePlan> {
        let sizes = &self.config.sizes;
        let w1: Vec<(usize, W1Record)> = sizes
            .par_iter()
            .map(|&n| Ok((n, self.measure_w1(&self.grid_for(full, n)?, replicate)?)))
            .collect::<Result<_>>()?;
        let mut plan = ReplicatePlan {
            replicate,
            w1,
            t_prime: Vec::new(),
            t_prime_monotone: Vec::new(),
            gap_table: None,
            schedule: None,
        };
        let safety = match (&self.config.bandwidth, self.config.grid) {
            (_, GridKind::Lattice) | (None, _) | (Some(BandwidthConfig::Fixed { .. }), _) => return Ok(plan),
            (Some(BandwidthConfig::Wasserstein { safety }), _) => *safety,
            (Some(BandwidthConfig::Schedule { safety, .. }), _) => *safety,
        };
        let d = self.model().dim();
        for (n, rec) in &plan.w1 {
            // an upper estimate keeps t' on the safe side
            plan.t_prime.push((*n, select_bandwidth_wass(rec.value + rec.bias_bound, d, safety)?));
        }
        let mut running = 0.0f64;
        let mut monotone: Vec<(usize, f64)> = plan
            .t_prime
            .iter()
            .rev()
            .map(|&(n, t)| {
                running = running.max(t);
                (n, running)
            })
            .collect();
        monotone.reverse();
        plan.t_prime_monotone = monotone;

        if let Some(BandwidthConfig::Schedule { levels, .. }) = &self.config.bandwidth {
            let full = full.expect("schedules are only built for i.i.d. grids");
            let table = self.gap_error_table(full, *levels)?;
            let mut schedule = gap_adjusted_schedule(&table, &plan.t_prime_monotone)?;
            schedule.safety = Some(safety);
            schedule.exponent = Some(d as f64 / 2.0 + 2.0);
            for (n, rec) in &plan.w1 {
                schedule.set_measurement(*n, rec.value, rec.bias_bound);
            }
            plan.gap_table = Some(table);
            plan.schedule = Some(schedule);
        }
        Ok(plan)
    }

    /// `|λ₂(heat graph at t = 1/j on the n-prefix) − (1 − e^{−λ₂/j}) j|`.
    /// Cells whose graph cannot be built get an infinite error.
    fn gap_error_table(&self, full: &GridRealization, levels: usize) -> Result<GapErrorTable> {
        let model = self.model();
        let sizes = self.config.sizes.clone();
        let cells: Vec<(usize, usize)> = (1..=levels)
            .flat_map(|j| sizes.iter().map(move |&n| (j, n)))
            .collect();
        let errors: Vec<f64> = cells
            .par_iter()
            .map(|&(j, n)| -> Result<f64> {
                let t = 1.0 / j as f64;
                let target = intermediate_gap(t, model.spectral_gap())?;
                let grid = full.prefix(n)?;
                let gap = build_heat_kernel_graph(model, &grid, t, DEFAULT_MODE_CAP)
                    .and_then(|g| spectral_decompose(&assemble_laplacian(&g)))
                    .map(|sd| sd.spectral_gap());
                Ok(gap.map_or(f64::MAX, |g| (g - target).abs()))
            })
            .collect::<Result<_>>()?;
        let k = sizes.len();
        Ok(GapErrorTable::from_fn(levels, &sizes, |j, n| {
            let idx = sizes.iter().position(|&m| m == n).unwrap();
            errors[(j - 1) * k + idx]
        })?)
    }

    fn realize(&self, plan: &ReplicatePlan, full: Option<&GridRealization>, n: usize) -> Result<Realization> {
        let model = self.model();
        let w1 = plan.w1.iter().find(|(m, _)| *m == n).map(|(_, w)| *w).unwrap();
        let (grid, graph, bandwidth, certified) = match self.config.grid {
            GridKind::Lattice => {
                let (grid, graph) = build_torus_lattice(n, model.dim())?;
                (grid, graph, None, true)
            }
            GridKind::Iid => {
                let grid = self.grid_for(full, n)?;
                let monotone = plan.t_prime_monotone.iter().find(|(m, _)| *m == n).map(|(_, t)| *t);
                let (t, certified) = match self.config.bandwidth.as_ref().unwrap() {
                    BandwidthConfig::Fixed { t } => (*t, true),
                    BandwidthConfig::Wasserstein { .. } => (monotone.unwrap(), true),
                    BandwidthConfig::Schedule { .. } => {
                        match plan.schedule.as_ref().and_then(|s| s.bandwidth(n)) {
                            Some(t) => (t, true),
                            None => (monotone.unwrap(), false),
                        }
                    }
                };
                let graph = build_heat_kernel_graph(model, &grid, t, DEFAULT_MODE_CAP)?;
                (grid, graph, Some(t), certified)
            }
        };
        let laplacian = assemble_laplacian(&graph);
        let spectral = spectral_decompose(&laplacian)?;
        Ok(Realization {
            n,
            replicate: plan.replicate,
            grid,
            graph,
            laplacian,
            spectral,
            bandwidth,
            certified,
            w1,
        })
    }
}
