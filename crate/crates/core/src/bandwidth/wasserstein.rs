use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::transport::empirical_wasserstein1;
use crate::error::{invalid, Result};
use crate::manifold::{Manifold, Point};
use crate::rng::{stream, Purpose, StreamId};

/// Uniform weights `1/N` on a list of grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<Point>,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("points", "empirical measure needs at least one atom"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }
}

/// Exact `W₁` between the empirical measure of `points` (coordinates mod 1)
/// and the uniform measure on the circle.
///
/// With `D = F_μ − id` the difference of distribution functions, the circular
/// distance is `min_c ∫|D − c|`, attained at a median of `D` under Lebesgue
/// measure. `D` has slope −1 between atoms, so each gap contributes a uniform
/// spread of values and both the median and the integral are exact.
pub fn wasserstein1_circle(points: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return Err(invalid("points", "empirical measure needs at least one atom"));
    }
    let n = points.len() as f64;
    let mut xs: Vec<f64> = points.iter().map(|x| x.rem_euclid(1.0)).collect();
    xs.sort_by(f64::total_cmp);
    // segments (high, length): D runs linearly from `high` down to high - length
    let mut segments = Vec::with_capacity(xs.len() + 1);
    segments.push((0.0, xs[0]));
    for (i, &x) in xs.iter().enumerate() {
        let next = xs.get(i + 1).copied().unwrap_or(1.0);
        segments.push(((i + 1) as f64 / n - x, next - x));
    }
    let below = |c: f64| -> f64 {
        segments
            .iter()
            .map(|&(hi, len)| (c - (hi - len)).clamp(0.0, len))
            .sum()
    };
    // below(c) is piecewise linear and nondecreasing; bracket the median
    // between consecutive breakpoints and interpolate.
    let mut breaks: Vec<f64> = segments
        .iter()
        .flat_map(|&(hi, len)| [hi - len, hi])
        .collect();
    breaks.sort_by(f64::total_cmp);
    let mut median = breaks[0];
    for w in breaks.windows(2) {
        let (lo, hi) = (below(w[0]), below(w[1]));
        if hi >= 0.5 {
            median = if hi > lo {
                w[0] + (0.5 - lo) / (hi - lo) * (w[1] - w[0])
            } else {
                w[0]
            };
            break;
        }
    }
    let cost = segments
        .iter()
        .map(|&(hi, len)| {
            let lo = hi - len;
            if median <= lo {
                len * (0.5 * (hi + lo) - median)
            } else if median >= hi {
                len * (median - 0.5 * (hi + lo))
            } else {
                0.5 * ((hi - median).powi(2) + (median - lo).powi(2))
            }
        })
        .sum();
    Ok(cost)
}

/// Two-sample estimate of `W₁(μ^N, V̄)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W1Estimate {
    /// `W₁(μ^N, μ^M)` against `M` fresh uniform samples.
    pub estimate: f64,
    /// Estimate of `W₁(μ^M, V̄)`; by the triangle inequality the true value
    /// lies within `estimate ± bias_bound` when the bound holds.
    pub bias_bound: f64,
    pub reference_size: usize,
}

const CALIBRATION_SEED: u64 = 0x00D6_FF0C_A11B;

/// `W₁` of the grid against `reference_size` fresh uniform samples, with a
/// bias bound for the reference sample itself.
///
/// On the circle the bias bound is the exact distance of the drawn reference
/// sample. Elsewhere it comes from a calibration table: the two-sample
/// distance between independent reference sets of size `M`, drawn from a
/// fixed calibration stream (by convexity its expectation dominates
/// `E W₁(μ^M, V̄)`).
pub fn wasserstein1_estimate<R: Rng + ?Sized>(
    model: Manifold,
    points: &[Point],
    reference_size: usize,
    rng: &mut R,
) -> Result<W1Estimate> {
    if points.is_empty() {
        return Err(invalid("points", "empirical measure needs at least one atom"));
    }
    if reference_size < 10 * points.len() {
        return Err(invalid(
            "reference_size",
            format!("need at least 10·N = {} reference points, got {reference_size}", 10 * points.len()),
        ));
    }
    let reference = model.sample_uniform(reference_size, rng);
    let estimate = empirical_wasserstein1(model, points, &reference)?;
    let bias_bound = match model {
        Manifold::Torus1 => {
            let xs: Vec<f64> = reference.iter().map(|p| p.x()).collect();
            wasserstein1_circle(&xs)?
        }
        _ => calibrated_bias(model, reference_size)?,
    };
    Ok(W1Estimate {
        estimate,
        bias_bound,
        reference_size,
    })
}

fn calibrated_bias(model: Manifold, size: usize) -> Result<f64> {
    static TABLE: OnceLock<Mutex<HashMap<(Manifold, usize), f64>>> = OnceLock::new();
    let table = TABLE.get_or_init(Default::default);
    if let Some(v) = table.lock().unwrap().get(&(model, size)) {
        return Ok(*v);
    }
    let mut rng = stream(
        CALIBRATION_SEED,
        StreamId::new(Purpose::Calibration, size as u64, model as u64),
    );
    let a = model.sample_uniform(size, &mut rng);
    let b = model.sample_uniform(size, &mut rng);
    let value = empirical_wasserstein1(model, &a, &b)?;
    table.lock().unwrap().insert((model, size), value);
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandwidth::select_bandwidth_wass;
    use crate::quadrature::adaptive;

    /// Independent oracle: minimize ∫|F_μ(x) − x − c|dx over c by golden
    /// section, integrating with adaptive quadrature.
    fn circle_oracle(points: &[f64]) -> f64 {
        let n = points.len() as f64;
        let mut xs = points.to_vec();
        xs.sort_by(f64::total_cmp);
        let d = |x: f64| xs.iter().filter(|&&p| p <= x).count() as f64 / n - x;
        let cost = |c: f64| -> f64 {
            let mut knots = vec![0.0];
            knots.extend(xs.iter().copied());
            knots.push(1.0);
            knots
                .windows(2)
                .map(|w| {
                    if w[1] - w[0] < 1e-15 {
                        0.0
                    } else {
                        let mid = 0.5 * (w[0] + w[1]);
                        let level = d(mid) + mid;
                        adaptive(|x| (level - x - c).abs(), w[0], w[1], 1e-13).unwrap()
                    }
                })
                .sum()
        };
        let (mut lo, mut hi) = (-1.0, 1.0);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if cost(a) < cost(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        cost(0.5 * (lo + hi))
    }

    #[test]
    fn equally_spaced_and_small_examples() {
        for &n in &[2usize, 4, 64] {
            let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
            let w = wasserstein1_circle(&xs).unwrap();
            assert!((w - 1.0 / (4.0 * n as f64)).abs() < 1e-12);
        }
        assert!((wasserstein1_circle(&[0.3]).unwrap() - 0.25).abs() < 1e-12);
        assert!((wasserstein1_circle(&[0.0, 0.5]).unwrap() - 0.125).abs() < 1e-12);
        assert!(wasserstein1_circle(&[]).is_err());
    }

    #[test]
    fn matches_quadrature_oracle_on_random_points() {
        let mut rng = stream(6, StreamId::new(Purpose::Test, 9, 0));
        for n in [1usize, 3, 7, 15] {
            let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let w = wasserstein1_circle(&xs).unwrap();
            let o = circle_oracle(&xs);
            assert!((w - o).abs() < 1e-9, "n={n}: {w} vs {o}");
        }
    }

    #[test]
    fn estimate_brackets_exact_circle_value() {
        let mut rng = stream(8, StreamId::new(Purpose::Test, 64, 0));
        for _ in 0..4 {
            let grid = Manifold::Torus1.sample_uniform(64, &mut rng);
            let xs: Vec<f64> = grid.iter().map(|p| p.x()).collect();
            let exact = wasserstein1_circle(&xs).unwrap();
            let est = wasserstein1_estimate(Manifold::Torus1, &grid, 640, &mut rng).unwrap();
            assert!((est.estimate - exact).abs() <= est.bias_bound + 1e-12);
        }
        let grid = Manifold::Torus1.sample_uniform(8, &mut rng);
        assert!(wasserstein1_estimate(Manifold::Torus1, &grid, 79, &mut rng).is_err());
    }

    #[test]
    fn calibrated_bias_for_sphere_is_cached_and_positive() {
        let mut rng = stream(8, StreamId::new(Purpose::Test, 10, 1));
        let grid = Manifold::Sphere2.sample_uniform(10, &mut rng);
        let a = wasserstein1_estimate(Manifold::Sphere2, &grid, 100, &mut rng).unwrap();
        let b = wasserstein1_estimate(Manifold::Sphere2, &grid, 100, &mut rng).unwrap();
        assert!(a.bias_bound > 0.0);
        assert_eq!(a.bias_bound, b.bias_bound);
    }

    #[test]
    fn w1_decreases_with_sample_size() {
        let median = |n: usize| {
            let mut v: Vec<f64> = (0..20)
                .map(|s| {
                    let mut rng = stream(11, StreamId::new(Purpose::Test, n as u64, s));
                    let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                    wasserstein1_circle(&xs).unwrap()
                })
                .collect();
            v.sort_by(f64::total_cmp);
            0.5 * (v[9] + v[10])
        };
        let sizes = [64usize, 128, 256, 512, 1024];
        let medians: Vec<f64> = sizes.iter().map(|&n| median(n)).collect();
        assert!(medians[4] < medians[0]);
        let t: Vec<f64> = medians
            .iter()
            .map(|&w| select_bandwidth_wass(w, 1, 0.1).unwrap())
            .collect();
        assert!(t.windows(2).all(|w| w[1] <= w[0]), "{t:?}");
    }
}
