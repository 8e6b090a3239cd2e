use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::norm::{bound_series, sobolev_neg_norm, NegNorm, SobolevParams};
use super::voronoi::VoronoiTessellation;
use crate::dgff::{sample_dgff_blocks, DgffSample};
use crate::error::{invalid, Result};
use crate::graph::SpectralData;
use crate::manifold::{Mode, TestFunction};
use crate::rng::Purpose;

/// `⟨φ̃, f⟩ = N^{-1} Σ_i φ(p_i) f̃(p_i)`.
pub fn lift_pair(sample: &DgffSample, tess: &VoronoiTessellation, f: &TestFunction) -> Result<f64> {
    let lifted = tess.lifted_values(|p| f.eval(p))?;
    Ok(lift_with(sample, &lifted))
}

fn lift_with(sample: &DgffSample, lifted: &DVector<f64>) -> f64 {
    sample.values.dot(lifted) / lifted.len() as f64
}

/// Cell averages of the eigenfunctions `e_2..e_J` over a tessellation,
/// one column per mode.
#[derive(Debug, Clone)]
pub struct LiftBasis {
    params: SobolevParams,
    modes: Vec<Mode>,
    lifted: DMatrix<f64>,
}

impl LiftBasis {
    pub fn new(tess: &VoronoiTessellation, params: &SobolevParams) -> Result<Self> {
        let model = tess.grid().model();
        if model != params.model() {
            return Err(invalid("params", "Sobolev parameters belong to a different manifold"));
        }
        let modes = params.modes();
        let mut lifted = DMatrix::zeros(tess.len(), modes.len());
        for (j, mode) in modes.iter().enumerate() {
            let col = tess.lifted_values(|p| model.eval_mode(&mode.descriptor, p))?;
            lifted.set_column(j, &col);
        }
        Ok(Self {
            params: params.clone(),
            modes,
            lifted,
        })
    }

    pub fn params(&self) -> &SobolevParams {
        &self.params
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Column `k` holds `ẽ_{k+2}` on the grid.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.lifted
    }

    pub fn lift(&self, sample: &DgffSample) -> LiftedField {
        let n = self.lifted.nrows() as f64;
        let pairings = (self.lifted.tr_mul(&sample.values) / n).iter().copied().collect();
        LiftedField { pairings }
    }
}

/// Pairings `⟨φ̃, e_j⟩` for `j = 2..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedField {
    pub pairings: Vec<f64>,
}

impl LiftedField {
    pub fn neg_norm(&self, params: &SobolevParams) -> Result<NegNorm> {
        sobolev_neg_norm(&self.pairings, params)
    }

    /// CSV rows `j,eigenvalue,pairing`.
    pub fn write_csv(&self, basis: &LiftBasis, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "j,eigenvalue,pairing")?;
        for (m, c) in basis.modes.iter().zip(&self.pairings) {
            writeln!(out, "{},{:.12e},{:.12e}", m.index, m.eigenvalue, c)?;
        }
        Ok(())
    }
}

/// Monte Carlo `E‖√N φ̃‖²_{-s}` next to its exact value and the bound
/// `(λ_2^N)^{-1} Σ_{j=2}^{J} λ_j^{-s} ‖e_j‖_∞²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TightnessReport {
    pub draws: usize,
    pub mean: f64,
    pub se: f64,
    /// `Σ_j λ_j^{-s} N^{-1} (ẽ_j, G ẽ_j)`.
    pub expectation: f64,
    pub bound: f64,
    pub graph_gap: f64,
}

impl TightnessReport {
    pub fn ratio(&self) -> f64 {
        self.mean / self.bound
    }
}

pub const MIN_TIGHTNESS_DRAWS: usize = 1000;

pub fn tightness_statistic(
    sd: &SpectralData,
    basis: &LiftBasis,
    draws: usize,
    master_seed: u64,
    size_key: u64,
) -> Result<TightnessReport> {
    if draws < MIN_TIGHTNESS_DRAWS {
        return Err(invalid("draws", format!("need at least {MIN_TIGHTNESS_DRAWS}, got {draws}")));
    }
    let n = sd.len();
    if basis.lifted.nrows() != n {
        return Err(invalid("basis", "lift basis and spectral data disagree on grid size"));
    }
    let s = basis.params.s;
    let weights: Vec<f64> = basis.modes.iter().map(|m| m.eigenvalue.powf(-s)).collect();
    let nf = n as f64;
    let values = sample_dgff_blocks(sd, master_seed, Purpose::Tightness, size_key, draws, |sample| {
        let pairings = basis.lifted.tr_mul(&sample.values) / nf.sqrt();
        pairings.iter().zip(&weights).map(|(c, w)| w * c * c).sum::<f64>()
    });
    let (mean, se) = crate::stats::mean_and_se(&values);
    let expectation = basis
        .lifted
        .column_iter()
        .zip(&weights)
        .map(|(col, w)| {
            let col = col.into_owned();
            w * col.dot(&sd.green_apply(&col)) / nf
        })
        .sum();
    let gap = sd.spectral_gap();
    Ok(TightnessReport {
        draws,
        mean,
        se,
        expectation,
        bound: bound_series(&basis.params) / gap,
        graph_gap: gap,
    })
}
