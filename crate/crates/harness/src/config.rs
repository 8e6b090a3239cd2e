//! Experiment configuration (TOML).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use dgff::manifold::{Manifold, ModeDescriptor, TestFunction};
use serde::{Deserialize, Serialize};

use crate::error::{config_error, io_error, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Lattice,
    Iid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: Manifold,
    pub grid: GridKind,
    /// Grid sizes, strictly ascending. Lattices use the points per side.
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Independent grids per size (i.i.d. grids only vary between them).
    #[serde(default = "one")]
    pub replicates: usize,
    /// Field draws per Monte Carlo estimate.
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub functions: Vec<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<BandwidthConfig>,
    #[serde(default)]
    pub assumptions: AssumptionConfig,
    #[serde(default)]
    pub sobolev: SobolevConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub name: String,
    pub terms: Vec<TermSpec>,
}

/// One eigenfunction and its coefficient. The mode is given by exactly one
/// of `index` (1-based flat order), `k` (torus wave vector) or `l` and `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<i32>,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BandwidthConfig {
    Fixed {
        t: f64,
    },
    Wasserstein {
        #[serde(default = "default_safety")]
        safety: f64,
    },
    Schedule {
        #[serde(default = "default_safety")]
        safety: f64,
        #[serde(default = "default_levels")]
        levels: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionConfig {
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevConfig {
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default = "default_probes")]
    pub probes_per_cell: usize,
    #[serde(default = "default_tightness_draws")]
    pub tightness_draws: usize,
}

/// Pass/fail limits applied to the report rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Running infimum of the graph gap must stay above this fraction of
    /// the reference gap.
    #[serde(default = "default_gap_floor")]
    pub gap_floor: f64,
    #[serde(default = "default_semigroup_tolerance")]
    pub semigroup_tolerance: f64,
    /// Limit on the median (over replicates) relative covariance gap.
    #[serde(default = "default_covariance_tolerance")]
    pub covariance_tolerance: f64,
    #[serde(default = "default_clt_sigmas")]
    pub clt_sigmas: f64,
    /// Allowed relative spread of the tightness statistic across sizes.
    #[serde(default = "default_tightness_spread")]
    pub tightness_spread: f64,
}

fn one() -> usize {
    1
}
fn default_draws() -> usize {
    10_000
}
fn default_safety() -> f64 {
    dgff::bandwidth::DEFAULT_SAFETY
}
fn default_levels() -> usize {
    20
}
fn default_times() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}
fn default_s() -> f64 {
    1.0
}
fn default_probes() -> usize {
    100
}
fn default_tightness_draws() -> usize {
    1000
}
fn default_gap_floor() -> f64 {
    0.99
}
fn default_semigroup_tolerance() -> f64 {
    1e-2
}
fn default_covariance_tolerance() -> f64 {
    0.1
}
fn default_clt_sigmas() -> f64 {
    5.0
}
fn default_tightness_spread() -> f64 {
    0.2
}

impl Default for AssumptionConfig {
    fn default() -> Self {
        Self { times: default_times() }
    }
}

impl Default for SobolevConfig {
    fn default() -> Self {
        Self {
            s: default_s(),
            truncation: None,
            probes_per_cell: default_probes(),
            tightness_draws: default_tightness_draws(),
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            gap_floor: default_gap_floor(),
            semigroup_tolerance: default_semigroup_tolerance(),
            covariance_tolerance: default_covariance_tolerance(),
            clt_sigmas: default_clt_sigmas(),
            tightness_spread: default_tightness_spread(),
        }
    }
}

impl TermSpec {
    fn descriptor(&self, model: Manifold, field: &str) -> Result<ModeDescriptor> {
        let given = [self.index.is_some(), self.k.is_some(), self.l.is_some() || self.m.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(config_error(field, "give exactly one of `index`, `k`, or `l` with `m`"));
        }
        let descriptor = if let Some(j) = self.index {
            model.eigenpair(j).map_err(|e| config_error(field, e.to_string()))?.descriptor
        } else if let Some(k) = &self.k {
            let k = match (model, k.as_slice()) {
                (Manifold::Torus1, [a]) => [*a, 0],
                (Manifold::Torus2, [a, b]) => [*a, *b],
                _ => return Err(config_error(field, format!("wave vector {k:?} does not fit {}", model.name()))),
            };
            ModeDescriptor::Torus { k }
        } else {
            match (self.l, self.m) {
                (Some(l), Some(m)) if model == Manifold::Sphere2 => ModeDescriptor::Sphere { l, m },
                (Some(_), Some(_)) => return Err(config_error(field, "`l`, `m` only apply to sphere2")),
                _ => return Err(config_error(field, "`l` and `m` must be given together")),
            }
        };
        let mode = model.mode_of(descriptor).map_err(|e| config_error(field, e.to_string()))?;
        if mode.eigenvalue == 0.0 {
            return Err(config_error(field, "constant mode is not a test function (they must have zero mean)"));
        }
        Ok(descriptor)
    }
}

impl FunctionSpec {
    pub fn resolve(&self, model: Manifold) -> Result<TestFunction> {
        let field = format!("functions.{}", self.name);
        let mut coeffs = Vec::with_capacity(self.terms.len());
        for (i, term) in self.terms.iter().enumerate() {
            let tf = format!("{field}.terms[{i}]");
            if !term.coefficient.is_finite() {
                return Err(config_error(tf, "coefficient must be finite"));
            }
            coeffs.push((term.descriptor(model, &tf)?, term.coefficient));
        }
        TestFunction::from_descriptors(model, &coeffs).map_err(|e| config_error(field, e.to_string()))
    }
}

impl ExperimentConfig {
    /// Checks the invariants that serde cannot express; returns warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.sizes.is_empty() {
            return Err(config_error("sizes", "at least one grid size is required"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_error("sizes", "must be strictly ascending"));
        }
        if self.sizes[0] < 2 {
            return Err(config_error("sizes", "grids need at least two points"));
        }
        if self.replicates == 0 {
            return Err(config_error("replicates", "must be at least 1"));
        }
        if self.draws < 2 {
            return Err(config_error("draws", "must be at least 2"));
        }
        if self.functions.is_empty() {
            return Err(config_error("functions", "at least one test function is required"));
        }
        let mut names = BTreeSet::new();
        for f in &self.functions {
            if !names.insert(f.name.as_str()) {
                return Err(config_error("functions", format!("duplicate name `{}`", f.name)));
            }
            f.resolve(self.manifold)?;
        }
        match self.grid {
            GridKind::Lattice => {
                if self.manifold == Manifold::Sphere2 {
                    return Err(config_error("grid", "regular lattices exist only on the tori"));
                }
                if self.sizes[0] < 3 {
                    return Err(config_error("sizes", "lattices need at least 3 points per side"));
                }
                if self.bandwidth.is_some() {
                    warnings.push("bandwidth settings are ignored for lattice grids".to_string());
                }
            }
            GridKind::Iid => match &self.bandwidth {
                None => return Err(config_error("bandwidth", "i.i.d. grids need a bandwidth policy")),
                Some(BandwidthConfig::Fixed { t }) if !(*t > 0.0 && t.is_finite()) => {
                    return Err(config_error("bandwidth.t", "must be positive"));
                }
                Some(BandwidthConfig::Wasserstein { safety }) | Some(BandwidthConfig::Schedule { safety, .. })
                    if !(*safety > 0.0 && *safety < 1.0) =>
                {
                    return Err(config_error("bandwidth.safety", "must lie in (0, 1)"));
                }
                Some(BandwidthConfig::Schedule { levels: 0, .. }) => {
                    return Err(config_error("bandwidth.levels", "must be at least 1"));
                }
                _ => {}
            },
        }
        if self.assumptions.times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(config_error("assumptions.times", "times must be positive"));
        }
        let s = &self.sobolev;
        if !(s.s > 0.0 && s.s.is_finite()) {
            return Err(config_error("sobolev.s", "must be positive"));
        }
        if s.truncation.is_some_and(|j| j < 2) {
            return Err(config_error("sobolev.truncation", "must be at least 2"));
        }
        if s.probes_per_cell == 0 {
            return Err(config_error("sobolev.probes_per_cell", "must be at least 1"));
        }
        if s.tightness_draws < dgff::sobolev::MIN_TIGHTNESS_DRAWS {
            return Err(config_error(
                "sobolev.tightness_draws",
                format!("must be at least {}", dgff::sobolev::MIN_TIGHTNESS_DRAWS),
            ));
        }
        let t = &self.thresholds;
        for (name, v) in [
            ("thresholds.gap_floor", t.gap_floor),
            ("thresholds.semigroup_tolerance", t.semigroup_tolerance),
            ("thresholds.covariance_tolerance", t.covariance_tolerance),
            ("thresholds.clt_sigmas", t.clt_sigmas),
            ("thresholds.tightness_spread", t.tightness_spread),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(name, "must be positive"));
            }
        }
        Ok(warnings)
    }

    pub fn test_functions(&self) -> Result<Vec<(String, TestFunction)>> {
        self.functions
            .iter()
            .map(|f| Ok((f.name.clone(), f.resolve(self.manifold)?)))
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types always serialize")
    }
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    parse_config_str(&text).map_err(|e| match e {
        HarnessError::Parse(msg) => HarnessError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}
