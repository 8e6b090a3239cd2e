//! The three measurement suites. Each returns a report section whose
//! `violations` list the rows that broke a configured threshold.

use dgff::bandwidth::intermediate_gap;
use dgff::dgff::{pair_with_function, sample_dgff_blocks};
use dgff::graph::discretize_function;
use dgff::manifold::{green_form, semigroup_form};
use dgff::rng::{stream, Purpose, StreamId};
use dgff::sobolev::{bound_series, tightness_statistic, voronoi_assign, LiftBasis, SobolevParams};
use dgff::stats::{mean_and_se, median};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiment::{Experiment, Realization, W1Record};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n: usize,
    pub replicate: usize,
    pub lambda2: f64,
    pub running_inf: f64,
    /// Gap the graph should approach: the manifold's `λ₂` on lattices, the
    /// intermediate-operator gap at the bandwidth on heat-kernel graphs.
    pub reference: f64,
    pub w1: W1Record,
    pub bandwidth: Option<f64>,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupRow {
    pub n: usize,
    pub replicate: usize,
    pub function: String,
    pub t: f64,
    pub discrete: f64,
    pub continuum: f64,
    pub abs_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionSection {
    pub gaps: Vec<GapRow>,
    pub semigroup: Vec<SemigroupRow>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRow {
    pub n: usize,
    pub replicate: usize,
    pub function: String,
    pub lambda2: f64,
    /// `N^{-1}(f_N, G_N f_N)`.
    pub form: f64,
    /// `(f, G f)` from the manifold's spectrum.
    pub target: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub bandwidth: Option<f64>,
    /// Empirical `Var⟨√N φ_N, f⟩` and its standard error.
    pub mc_variance: f64,
    pub mc_se: f64,
    /// Empirical `E cos⟨√N φ_N, f⟩` against `exp(−form/2)`.
    pub char_mean: f64,
    pub char_se: f64,
    pub char_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSummary {
    pub n: usize,
    pub function: String,
    pub median_abs_gap: f64,
    pub median_rel_gap: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSection {
    pub rows: Vec<CovarianceRow>,
    pub summary: Vec<CovarianceSummary>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftRow {
    pub n: usize,
    pub replicate: usize,
    pub function: String,
    pub fill_radius: f64,
    pub var_lift: f64,
    pub var_pair: f64,
    /// Mean of `(√N⟨φ̃,f⟩)² − (√N⟨φ,f⟩)²` over the same draws.
    pub diff: f64,
    pub diff_se: f64,
    /// `2 ε_N L_f ‖f‖_∞ / λ₂^N`.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub n: usize,
    pub replicate: usize,
    pub s: f64,
    pub truncation: usize,
    pub fill_radius: f64,
    pub probes: usize,
    pub mean: f64,
    pub se: f64,
    pub expectation: f64,
    pub bound: f64,
    /// `Σ_{j=2}^{J} λ_j^{-s} ‖e_j‖_∞²` without the `1/λ₂^N` factor.
    pub bound_series: f64,
    pub ratio: f64,
    pub lambda2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevSection {
    pub lifts: Vec<LiftRow>,
    pub tightness: Vec<TightnessRow>,
    pub violations: Vec<String>,
}

/// `√N ⟨φ_N, f⟩` for every configured function over `draws` fields.
fn grid_pairings(exp: &Experiment, real: &Realization) -> Vec<Vec<f64>> {
    let draws = exp.config.draws;
    for b in 0..draws.div_ceil(dgff::dgff::DRAW_BLOCK) {
        exp.note_stream(StreamId::new(Purpose::DgffDraws, real.stream_key(), b as u64));
    }
    let sqrt_n = (real.grid.len() as f64).sqrt();
    let per_draw = sample_dgff_blocks(&real.spectral, exp.seed(), Purpose::DgffDraws, real.stream_key(), draws, |s| {
        exp.functions
            .iter()
            .map(|(_, f)| sqrt_n * pair_with_function(s, f, &real.grid))
            .collect::<Vec<f64>>()
    });
    transpose(per_draw, exp.functions.len())
}

fn transpose(rows: Vec<Vec<f64>>, width: usize) -> Vec<Vec<f64>> {
    let mut cols = vec![Vec::with_capacity(rows.len()); width];
    for row in rows {
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    cols
}

impl Experiment {
    pub fn assumptions(&self) -> Result<AssumptionSection> {
        let model = self.model();
        let th = &self.config.thresholds;
        let mut gaps = Vec::new();
        let mut semigroup = Vec::new();
        let mut violations = Vec::new();
        for r in 0..self.config.replicates {
            let mut running = f64::INFINITY;
            let mut reference_floor = f64::INFINITY;
            for real in self.realizations_for(r) {
                let lambda2 = real.spectral.spectral_gap();
                running = running.min(lambda2);
                let reference = match real.bandwidth {
                    None => model.spectral_gap(),
                    Some(t) => intermediate_gap(t, model.spectral_gap())?,
                };
                reference_floor = reference_floor.min(reference);
                if running < th.gap_floor * reference_floor {
                    violations.push(format!(
                        "assumptions: N={} replicate {r}: running gap infimum {running:.6e} below {} x {reference_floor:.6e}",
                        real.grid.len(),
                        th.gap_floor
                    ));
                }
                gaps.push(GapRow {
                    n: real.grid.len(),
                    replicate: r,
                    lambda2,
                    running_inf: running,
                    reference,
                    w1: real.w1,
                    bandwidth: real.bandwidth,
                    certified: real.certified,
                });
                for (name, f) in &self.functions {
                    let fv = discretize_function(f, &real.grid);
                    for &t in &self.config.assumptions.times {
                        let discrete = real.spectral.semigroup_quadratic_form(&fv, t);
                        let continuum = semigroup_form(f, t);
                        let abs_gap = (discrete - continuum).abs();
                        if abs_gap > th.semigroup_tolerance {
                            violations.push(format!(
                                "assumptions: N={} replicate {r}: semigroup gap {abs_gap:.6e} for `{name}` at t={t}",
                                real.grid.len()
                            ));
                        }
                        semigroup.push(SemigroupRow {
                            n: real.grid.len(),
                            replicate: r,
                            function: name.clone(),
                            t,
                            discrete,
                            continuum,
                            abs_gap,
                        });
                    }
                }
            }
        }
        Ok(AssumptionSection {
            gaps,
            semigroup,
            violations,
        })
    }

    pub fn covariance(&self) -> Result<CovarianceSection> {
        let th = &self.config.thresholds;
        let per_real: Vec<Vec<CovarianceRow>> = self
            .realizations
            .par_iter()
            .map(|real| self.covariance_rows(real))
            .collect::<Result<_>>()?;
        let rows: Vec<CovarianceRow> = per_real.into_iter().flatten().collect();
        let mut violations = Vec::new();
        for row in &rows {
            if (row.mc_variance - row.form).abs() > th.clt_sigmas * row.mc_se {
                violations.push(format!(
                    "covariance: N={} replicate {}: Monte Carlo variance {:.6e} ± {:.2e} vs form {:.6e} for `{}`",
                    row.n, row.replicate, row.mc_variance, row.mc_se, row.form, row.function
                ));
            }
            if (row.char_mean - row.char_target).abs() > th.clt_sigmas * row.char_se {
                violations.push(format!(
                    "covariance: N={} replicate {}: characteristic mean {:.6e} ± {:.2e} vs {:.6e} for `{}`",
                    row.n, row.replicate, row.char_mean, row.char_se, row.char_target, row.function
                ));
            }
        }
        let mut summary = Vec::new();
        let mut sizes: Vec<usize> = rows.iter().map(|r| r.n).collect();
        sizes.dedup();
        sizes.sort_unstable();
        sizes.dedup();
        for &n in &sizes {
            for (name, _) in &self.functions {
                let sel: Vec<&CovarianceRow> = rows.iter().filter(|r| r.n == n && &r.function == name).collect();
                let abs: Vec<f64> = sel.iter().map(|r| r.abs_gap).collect();
                let rel: Vec<f64> = sel.iter().map(|r| r.rel_gap).collect();
                let s = CovarianceSummary {
                    n,
                    function: name.clone(),
                    median_abs_gap: median(&abs),
                    median_rel_gap: median(&rel),
                    replicates: sel.len(),
                };
                if s.median_rel_gap > th.covariance_tolerance {
                    violations.push(format!(
                        "covariance: N={n}: median relative gap {:.6e} for `{name}` exceeds {}",
                        s.median_rel_gap, th.covariance_tolerance
                    ));
                }
                summary.push(s);
            }
        }
        Ok(CovarianceSection {
            rows,
            summary,
            violations,
        })
    }

    fn covariance_rows(&self, real: &Realization) -> Result<Vec<CovarianceRow>> {
        let pairings = grid_pairings(self, real);
        let mut rows = Vec::new();
        for ((name, f), samples) in self.functions.iter().zip(&pairings) {
            let fv = discretize_function(f, &real.grid);
            let form = real.spectral.green_quadratic_form(&fv)?;
            let target = green_form(f);
            let abs_gap = (form - target).abs();
            let rel_gap = if target == 0.0 {
                if abs_gap == 0.0 {
                    0.0
                } else {
                    f64::MAX
                }
            } else {
                abs_gap / target.abs()
            };
            let squares: Vec<f64> = samples.iter().map(|x| x * x).collect();
            let (mc_variance, mc_se) = mean_and_se(&squares);
            let cosines: Vec<f64> = samples.iter().map(|x| x.cos()).collect();
            let (char_mean, char_se) = mean_and_se(&cosines);
            rows.push(CovarianceRow {
                n: real.grid.len(),
                replicate: real.replicate,
                function: name.clone(),
                lambda2: real.spectral.spectral_gap(),
                form,
                target,
                abs_gap,
                rel_gap,
                bandwidth: real.bandwidth,
                mc_variance,
                mc_se,
                char_mean,
                char_se,
                char_target: (-0.5 * form).exp(),
            });
        }
        Ok(rows)
    }

    pub fn sobolev_params(&self) -> Result<SobolevParams> {
        let s = &self.config.sobolev;
        Ok(match s.truncation {
            Some(j) => SobolevParams::with_truncation(self.model(), s.s, j)?,
            None => SobolevParams::new(self.model(), s.s)?,
        })
    }

    pub fn sobolev(&self) -> Result<(SobolevSection, Vec<String>, Vec<SobolevArtifacts>)> {
        let params = self.sobolev_params()?;
        let th = &self.config.thresholds;
        let mut warnings = params.warnings();
        let results: Vec<(Vec<LiftRow>, TightnessRow, Vec<String>, SobolevArtifacts)> = self
            .realizations
            .par_iter()
            .map(|real| self.sobolev_rows(real, &params))
            .collect::<Result<_>>()?;
        let mut lifts = Vec::new();
        let mut tightness = Vec::new();
        let mut artifacts = Vec::new();
        for (l, t, w, a) in results {
            lifts.extend(l);
            tightness.push(t);
            warnings.extend(w);
            artifacts.push(a);
        }
        let mut violations = Vec::new();
        for row in &lifts {
            if row.diff.abs() > row.envelope + th.clt_sigmas * row.diff_se {
                violations.push(format!(
                    "sobolev: N={} replicate {}: lifted variance differs by {:.6e}, envelope {:.6e} for `{}`",
                    row.n, row.replicate, row.diff, row.envelope, row.function
                ));
            }
        }
        for row in &tightness {
            if row.mean > row.bound {
                violations.push(format!(
                    "sobolev: N={} replicate {}: tightness statistic {:.6e} above bound {:.6e}",
                    row.n, row.replicate, row.mean, row.bound
                ));
            }
        }
        for r in 0..self.config.replicates {
            let means: Vec<f64> = tightness.iter().filter(|t| t.replicate == r).map(|t| t.mean).collect();
            let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = means.iter().copied().fold(0.0, f64::max);
            if means.len() > 1 && hi > (1.0 + th.tightness_spread) * lo {
                violations.push(format!(
                    "sobolev: replicate {r}: tightness statistic ranges over [{lo:.6e}, {hi:.6e}] across sizes"
                ));
            }
        }
        Ok((
            SobolevSection {
                lifts,
                tightness,
                violations,
            },
            warnings,
            artifacts,
        ))
    }

    fn sobolev_rows(
        &self,
        real: &Realization,
        params: &SobolevParams,
    ) -> Result<(Vec<LiftRow>, TightnessRow, Vec<String>, SobolevArtifacts)> {
        let n = real.grid.len();
        let probes = self.config.sobolev.probes_per_cell * n;
        let probe_id = StreamId::new(Purpose::VoronoiProbes, real.stream_key(), 0);
        self.note_stream(probe_id);
        let tess = voronoi_assign(&real.grid, probes, &mut stream(self.seed(), probe_id))?;
        let warnings: Vec<String> = tess
            .warnings()
            .iter()
            .map(|w| format!("N={n} replicate {}: {w}", real.replicate))
            .collect();
        let eps = tess.fill_radius();
        let gap = real.spectral.spectral_gap();
        let sqrt_n = (n as f64).sqrt();

        let lifted: Vec<DVector<f64>> = self
            .functions
            .iter()
            .map(|(_, f)| tess.lifted_values(|p| f.eval(p)))
            .collect::<dgff::Result<_>>()?;
        let per_draw = sample_dgff_blocks(
            &real.spectral,
            self.seed(),
            Purpose::DgffDraws,
            real.stream_key(),
            self.config.draws,
            |s| {
                self.functions
                    .iter()
                    .zip(&lifted)
                    .map(|((_, f), lf)| {
                        let a = sqrt_n * s.values.dot(lf) / n as f64;
                        let b = sqrt_n * pair_with_function(s, f, &real.grid);
                        (a * a, b * b)
                    })
                    .collect::<Vec<(f64, f64)>>()
            },
        );
        let mut lifts = Vec::new();
        for (k, (name, f)) in self.functions.iter().enumerate() {
            let a: Vec<f64> = per_draw.iter().map(|d| d[k].0).collect();
            let b: Vec<f64> = per_draw.iter().map(|d| d[k].1).collect();
            let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let (diff, diff_se) = mean_and_se(&diffs);
            lifts.push(LiftRow {
                n,
                replicate: real.replicate,
                function: name.clone(),
                fill_radius: eps,
                var_lift: mean_and_se(&a).0,
                var_pair: mean_and_se(&b).0,
                diff,
                diff_se,
                envelope: 2.0 * eps * f.lipschitz_bound() * f.sup_bound() / gap,
            });
        }

        let basis = LiftBasis::new(&tess, params)?;
        let draws = self.config.sobolev.tightness_draws;
        for b in 0..draws.div_ceil(dgff::dgff::DRAW_BLOCK) {
            self.note_stream(StreamId::new(Purpose::Tightness, real.stream_key(), b as u64));
        }
        let report = tightness_statistic(&real.spectral, &basis, draws, self.seed(), real.stream_key())?;
        let tightness = TightnessRow {
            n,
            replicate: real.replicate,
            s: params.s,
            truncation: params.truncation,
            fill_radius: eps,
            probes,
            mean: report.mean,
            se: report.se,
            expectation: report.expectation,
            bound: report.bound,
            bound_series: bound_series(params),
            ratio: report.ratio(),
            lambda2: report.graph_gap,
        };

        let mut tessellation_csv = Vec::new();
        tess.write_csv(&mut tessellation_csv).expect("writing to memory");
        let first = dgff::dgff::sample_dgff_blocks(&real.spectral, self.seed(), Purpose::DgffDraws, real.stream_key(), 1, |s| {
            s.clone()
        });
        let mut lifted_csv = Vec::new();
        basis.lift(&first[0]).write_csv(&basis, &mut lifted_csv).expect("writing to memory");
        let artifacts = SobolevArtifacts {
            n,
            replicate: real.replicate,
            tessellation_csv,
            lifted_csv,
        };
        Ok((lifts, tightness, warnings, artifacts))
    }
}

/// Per-realization CSV tables produced by the Sobolev suite.
pub struct SobolevArtifacts {
    pub n: usize,
    pub replicate: usize,
    pub tessellation_csv: Vec<u8>,
    pub lifted_csv: Vec<u8>,
}

pub fn run_assumption_suite(config: &ExperimentConfig) -> Result<AssumptionSection> {
    Experiment::prepare(config)?.assumptions()
}

pub fn run_covariance_convergence(config: &ExperimentConfig) -> Result<CovarianceSection> {
    Experiment::prepare(config)?.covariance()
}

pub fn run_sobolev_suite(config: &ExperimentConfig) -> Result<SobolevSection> {
    Ok(Experiment::prepare(config)?.sobolev()?.0)
}
