//! Report assembly, output files and the reload check.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dgff::dgff::sample_dgff_blocks;
use dgff::manifold::{green_form, semigroup_form};
use dgff::rng::Purpose;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{io_error, HarnessError, Result};
use crate::experiment::{Experiment, ReplicatePlan};
use crate::suites::{AssumptionSection, CovarianceSection, SobolevArtifacts, SobolevSection};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "dgff-bench";
/// Largest allowed difference between a stored continuum target and its
/// recomputation.
pub const STALENESS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Assumptions,
    Converge,
    Sobolev,
    Full,
}

impl Command {
    fn runs_assumptions(self) -> bool {
        matches!(self, Command::Assumptions | Command::Full)
    }
    fn runs_covariance(self) -> bool {
        matches!(self, Command::Converge | Command::Full)
    }
    fn runs_sobolev(self) -> bool {
        matches!(self, Command::Sobolev | Command::Full)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// Labels of every random substream the run consumed.
    pub streams: Vec<String>,
    pub warnings: Vec<String>,
    pub plans: Vec<ReplicatePlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<AssumptionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovarianceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev: Option<SobolevSection>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub dump_spectra: bool,
    pub dump_samples: bool,
}

/// Draws written per realization by `--dump-samples`.
pub const DUMPED_SAMPLES: usize = 10;

/// Runs the suites selected by `command` without touching the filesystem.
pub fn build_report(config: &ExperimentConfig, command: Command) -> Result<(Report, Experiment, Vec<SobolevArtifacts>)> {
    let exp = Experiment::prepare(config)?;
    let mut warnings = exp.warnings.clone();
    let assumptions = if command.runs_assumptions() {
        Some(exp.assumptions()?)
    } else {
        None
    };
    let covariance = if command.runs_covariance() {
        Some(exp.covariance()?)
    } else {
        None
    };
    let (sobolev, artifacts) = if command.runs_sobolev() {
        let (section, w, artifacts) = exp.sobolev()?;
        warnings.extend(w);
        (Some(section), artifacts)
    } else {
        (None, Vec::new())
    };
    let mut violations = Vec::new();
    for v in [
        assumptions.as_ref().map(|s| &s.violations),
        covariance.as_ref().map(|s| &s.violations),
        sobolev.as_ref().map(|s| &s.violations),
    ]
    .into_iter()
    .flatten()
    {
        violations.extend(v.iter().cloned());
    }
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool: TOOL.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command,
        seed: config.seed,
        config: config.clone(),
        streams: exp.streams(),
        warnings,
        plans: exp.plans.clone(),
        assumptions,
        covariance,
        sobolev,
        violations,
    };
    Ok((report, exp, artifacts))
}

/// Runs, writes every output file under the output directory, and reloads
/// the JSON report to confirm its continuum targets.
pub fn run(config: &ExperimentConfig, command: Command, options: &RunOptions) -> Result<Report> {
    let start = Instant::now();
    let out = options
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("dgff-out"));
    let (report, exp, artifacts) = build_report(config, command)?;
    fs::create_dir_all(&out).map_err(io_error(&out))?;
    let json_path = out.join("report.json");
    write(&json_path, serde_json::to_string_pretty(&report)? + "\n")?;
    write_tables(&out, &report)?;
    for a in &artifacts {
        write(&out.join(format!("tessellation_N{}_r{}.csv", a.n, a.replicate)), with_header("tessellation", &a.tessellation_csv))?;
        write(&out.join(format!("lifted_N{}_r{}.csv", a.n, a.replicate)), with_header("lifted", &a.lifted_csv))?;
    }
    if options.dump_spectra {
        let dir = out.join("spectra");
        fs::create_dir_all(&dir).map_err(io_error(&dir))?;
        for real in &exp.realizations {
            let mut buf = Vec::new();
            real.spectral.dump_csv(&mut buf).map_err(io_error(&dir))?;
            write(&dir.join(format!("N{}_r{}.csv", real.grid.len(), real.replicate)), with_header("spectrum", &buf))?;
        }
    }
    if options.dump_samples {
        let dir = out.join("samples");
        fs::create_dir_all(&dir).map_err(io_error(&dir))?;
        for real in &exp.realizations {
            let draws = sample_dgff_blocks(
                &real.spectral,
                exp.seed(),
                Purpose::DgffDraws,
                real.stream_key(),
                DUMPED_SAMPLES.min(config.draws),
                |s| s.clone(),
            );
            let mut text = header("samples", "draw,vertex,value");
            for s in &draws {
                for (v, x) in s.values.iter().enumerate() {
                    writeln!(text, "{},{},{:.12e}", s.draw, v, x).unwrap();
                }
            }
            write(&dir.join(format!("N{}_r{}.csv", real.grid.len(), real.replicate)), text)?;
        }
    }
    let reloaded: Report = serde_json::from_str(&fs::read_to_string(&json_path).map_err(io_error(&json_path))?)?;
    verify_report(&reloaded)?;
    let timing = serde_json::json!({
        "command": command,
        "wall_seconds": start.elapsed().as_secs_f64(),
    });
    write(&out.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
    Ok(report)
}

/// Recomputes every stored continuum target from the manifold model.
/// Returns the number of values checked.
pub fn verify_report(report: &Report) -> Result<usize> {
    let functions = report.config.test_functions()?;
    let lookup = |name: &str| {
        functions
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| HarnessError::Stale(format!("row refers to unknown function `{name}`")))
    };
    let mut checked = 0;
    let mut compare = |what: String, stored: f64, fresh: f64| -> Result<()> {
        checked += 1;
        if (stored - fresh).abs() > STALENESS_TOLERANCE {
            return Err(HarnessError::Stale(format!("{what}: stored {stored:e}, recomputed {fresh:e}")));
        }
        Ok(())
    };
    if let Some(cov) = &report.covariance {
        for row in &cov.rows {
            let f = lookup(&row.function)?;
            compare(format!("covariance target N={} `{}`", row.n, row.function), row.target, green_form(f))?;
        }
    }
    if let Some(a) = &report.assumptions {
        for row in &a.semigroup {
            let f = lookup(&row.function)?;
            compare(
                format!("semigroup target N={} `{}` t={}", row.n, row.function, row.t),
                row.continuum,
                semigroup_form(f, row.t),
            )?;
        }
    }
    Ok(checked)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(io_error(path))
}

fn header(table: &str, columns: &str) -> String {
    format!("# {TOOL} {table} schema {SCHEMA_VERSION}\n{columns}\n")
}

fn with_header(table: &str, body: &[u8]) -> Vec<u8> {
    let mut out = format!("# {TOOL} {table} schema {SCHEMA_VERSION}\n").into_bytes();
    out.extend_from_slice(body);
    out
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_tables(out: &Path, report: &Report) -> Result<()> {
    for plan in &report.plans {
        if let Some(schedule) = &plan.schedule {
            let mut buf = Vec::new();
            schedule.write_csv(&mut buf).map_err(io_error(out))?;
            write(&out.join(format!("schedule_r{}.csv", plan.replicate)), with_header("schedule", &buf))?;
        }
    }
    if let Some(a) = &report.assumptions {
        let mut text = header("assumptions", "N,replicate,lambda2,running_inf,reference,w1,w1_bias_bound,bandwidth,certified");
        for r in &a.gaps {
            writeln!(
                text,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.replicate,
                num(r.lambda2),
                num(r.running_inf),
                num(r.reference),
                num(r.w1.value),
                num(r.w1.bias_bound),
                opt(r.bandwidth),
                r.certified
            )
            .unwrap();
        }
        write(&out.join("assumptions.csv"), text)?;
        let mut text = header("semigroup", "N,replicate,function,t,discrete,continuum,abs_gap");
        for r in &a.semigroup {
            writeln!(
                text,
                "{},{},{},{},{},{},{}",
                r.n,
                r.replicate,
                r.function,
                num(r.t),
                num(r.discrete),
                num(r.continuum),
                num(r.abs_gap)
            )
            .unwrap();
        }
        write(&out.join("semigroup.csv"), text)?;
    }
    if let Some(c) = &report.covariance {
        let mut text = header(
            "covariance",
            "N,replicate,function,lambda2,form,target,abs_gap,rel_gap,bandwidth,mc_variance,mc_se,char_mean,char_se,char_target",
        );
        for r in &c.rows {
            writeln!(
                text,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.replicate,
                r.function,
                num(r.lambda2),
                num(r.form),
                num(r.target),
                num(r.abs_gap),
                num(r.rel_gap),
                opt(r.bandwidth),
                num(r.mc_variance),
                num(r.mc_se),
                num(r.char_mean),
                num(r.char_se),
                num(r.char_target)
            )
            .unwrap();
        }
        write(&out.join("covariance.csv"), text)?;
        let mut text = header("covariance-summary", "N,function,median_abs_gap,median_rel_gap,replicates");
        for s in &c.summary {
            writeln!(
                text,
                "{},{},{},{},{}",
                s.n,
                s.function,
                num(s.median_abs_gap),
                num(s.median_rel_gap),
                s.replicates
            )
            .unwrap();
        }
        write(&out.join("covariance_summary.csv"), text)?;
    }
    if let Some(s) = &report.sobolev {
        let mut text = header("lift", "N,replicate,function,fill_radius,var_lift,var_pair,diff,diff_se,envelope");
        for r in &s.lifts {
            writeln!(
                text,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.replicate,
                r.function,
                num(r.fill_radius),
                num(r.var_lift),
                num(r.var_pair),
                num(r.diff),
                num(r.diff_se),
                num(r.envelope)
            )
            .unwrap();
        }
        write(&out.join("sobolev.csv"), text)?;
        let mut text = header(
            "tightness",
            "N,replicate,s,truncation,fill_radius,probes,mean,se,expectation,bound,bound_series,ratio,lambda2",
        );
        for r in &s.tightness {
            writeln!(
                text,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.replicate,
                num(r.s),
                r.truncation,
                num(r.fill_radius),
                r.probes,
                num(r.mean),
                num(r.se),
                num(r.expectation),
                num(r.bound),
                num(r.bound_series),
                num(r.ratio),
                num(r.lambda2)
            )
            .unwrap();
        }
        write(&out.join("tightness.csv"), text)?;
    }
    Ok(())
}
