use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Measured `|λ₂^{1/j}_{n} − λ₂^{1/j}|` for levels `j = 1..=levels` and grid
/// sizes `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapErrorTable {
    sizes: Vec<usize>,
    /// `errors[j - 1][k]` belongs to level `j` and `sizes[k]`.
    errors: Vec<Vec<f64>>,
}

impl GapErrorTable {
    pub fn from_fn(levels: usize, sizes: &[usize], mut error: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if levels == 0 || sizes.is_empty() {
            return Err(invalid("table", "gap-error table must be nonempty"));
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sizes", "grid sizes must be strictly increasing"));
        }
        let errors = (1..=levels)
            .map(|j| sizes.iter().map(|&n| error(j, n)).collect())
            .collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            errors,
        })
    }

    pub fn levels(&self) -> usize {
        self.errors.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn error(&self, j: usize, n: usize) -> Option<f64> {
        let k = self.sizes.iter().position(|&s| s == n)?;
        self.errors.get(j.checked_sub(1)?).map(|row| row[k])
    }
}

/// One row of a bandwidth schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub n: usize,
    pub w1: Option<f64>,
    pub bias_bound: Option<f64>,
    pub t_prime: f64,
    /// Level `j(N)`; `None` when `N < n_1` (not certified).
    pub level: Option<usize>,
    /// `t_N = 1/j(N)`.
    pub t: Option<f64>,
    /// Measured gap error at `(j(N), N)`.
    pub gap_error: Option<f64>,
}

/// Output of [`gap_adjusted_schedule`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSchedule {
    pub records: Vec<ScheduleRecord>,
    /// `n_j` for the certified levels `j = 1, 2, …`.
    pub thresholds: Vec<usize>,
    /// First level that the table could not certify; the schedule is not
    /// extrapolated past it.
    pub truncated_at: usize,
    pub safety: Option<f64>,
    pub exponent: Option<f64>,
}

/// Builds `t_N` by the level construction: for `j = 1, 2, …` pick `n_j` as
/// the smallest tabulated `n` with
/// (i) `n_j > n_{j−1}`,
/// (ii) error at level `j` is `≤ 1/j` for every tabulated size `≥ n_j`,
/// (iii) `n_j ≥ min{k : t'_k ≤ 1/j}`;
/// then `t_N = 1/j(N)` with `n_{j(N)} ≤ N < n_{j(N)+1}`.
///
/// `t_prime` holds `(N, t'_N)` pairs and must be nonincreasing in `N`.
pub fn gap_adjusted_schedule(table: &GapErrorTable, t_prime: &[(usize, f64)]) -> Result<BandwidthSchedule> {
    let mut tp = t_prime.to_vec();
    tp.sort_by_key(|&(n, _)| n);
    if tp.is_empty() {
        return Err(invalid("t_prime", "no bandwidths supplied"));
    }
    if tp.windows(2).any(|w| w[1].1 > w[0].1) {
        return Err(invalid("t_prime", "t' must be nonincreasing in N"));
    }
    let mut thresholds: Vec<usize> = Vec::new();
    let mut truncated_at = table.levels() + 1;
    for j in 1..=table.levels() {
        let level = 1.0 / j as f64;
        let Some(&(k_j, _)) = tp.iter().find(|&&(_, t)| t <= level) else {
            truncated_at = j;
            break;
        };
        let prev = thresholds.last().copied();
        let errors = &table.errors[j - 1];
        let found = table.sizes.iter().enumerate().find(|&(idx, &n)| {
            prev.is_none_or(|p| n > p) && n >= k_j && errors[idx..].iter().all(|&e| e <= level)
        });
        match found {
            Some((_, &n)) => thresholds.push(n),
            None => {
                truncated_at = j;
                break;
            }
        }
    }
    if thresholds.is_empty() {
        return Err(Error::UncertifiedSchedule);
    }
    let records = tp
        .iter()
        .map(|&(n, t_prime)| {
            let level = thresholds.iter().rposition(|&nj| nj <= n).map(|i| i + 1);
            ScheduleRecord {
                n,
                w1: None,
                bias_bound: None,
                t_prime,
                level,
                t: level.map(|j| 1.0 / j as f64),
                gap_error: level.and_then(|j| table.error(j, n)),
            }
        })
        .collect();
    Ok(BandwidthSchedule {
        records,
        thresholds,
        truncated_at,
        safety: None,
        exponent: None,
    })
}

impl BandwidthSchedule {
    pub fn record(&self, n: usize) -> Option<&ScheduleRecord> {
        self.records.iter().find(|r| r.n == n)
    }

    pub fn bandwidth(&self, n: usize) -> Option<f64> {
        self.record(n).and_then(|r| r.t)
    }

    /// Attaches the Wasserstein figures behind `t'_N`.
    pub fn set_measurement(&mut self, n: usize, w1: f64, bias_bound: f64) {
        if let Some(r) = self.records.iter_mut().find(|r| r.n == n) {
            r.w1 = Some(w1);
            r.bias_bound = Some(bias_bound);
        }
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        writeln!(out, "N,w1,bias_bound,t_prime,j,t_N")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{:.12e},{},{}",
                r.n,
                opt(r.w1),
                opt(r.bias_bound),
                r.t_prime,
                r.level.map(|j| j.to_string()).unwrap_or_default(),
                opt(r.t)
            )?;
        }
        Ok(())
    }
}
