//! Gauss–Legendre rules and an adaptive bisection driver.

use crate::error::{Error, Result};

/// n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    fn integrate_vec(&self, f: &impl Fn(f64) -> Vec<f64>, a: f64, b: f64, out: &mut [f64]) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            for (o, vi) in out.iter_mut().zip(v) {
                *o += w * half * vi;
            }
        }
    }
}

/// Legendre polynomial P_n(x) and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const RULE_NODES: usize = 10;
const MAX_DEPTH: usize = 40;

/// Adaptive quadrature of a vector-valued integrand on [a, b]. A panel is
/// accepted when the one-panel and two-half-panel estimates agree to `tol`
/// in max norm (scaled by the panel's share of the interval).
pub fn adaptive_vec(
    f: impl Fn(f64) -> Vec<f64>,
    dim: usize,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let rule = GaussLegendre::new(RULE_NODES);
    let mut total = vec![0.0; dim];
    let mut whole = vec![0.0; dim];
    rule.integrate_vec(&f, a, b, &mut whole);
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut left = vec![0.0; dim];
    let mut right = vec![0.0; dim];
    let width = (b - a).abs().max(f64::MIN_POSITIVE);
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        rule.integrate_vec(&f, lo, mid, &mut left);
        rule.integrate_vec(&f, mid, hi, &mut right);
        let err = est
            .iter()
            .zip(left.iter().zip(&right))
            .map(|(e, (l, r))| (e - l - r).abs())
            .fold(0.0, f64::max);
        let local_tol = tol * ((hi - lo).abs() / width).max(1e-3);
        if err <= local_tol || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH && err > local_tol {
                return Err(Error::Quadrature(format!(
                    "no convergence on [{lo}, {hi}] (error {err:e})"
                )));
            }
            for (t, (l, r)) in total.iter_mut().zip(left.iter().zip(&right)) {
                *t += l + r;
            }
        } else {
            stack.push((lo, mid, left.clone(), depth + 1));
            stack.push((mid, hi, right.clone(), depth + 1));
        }
    }
    Ok(total)
}

pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    adaptive_vec(|x| vec![f(x)], 1, a, b, tol).map(|v| v[0])
}

/// ∫_0^∞ of an integrand that is a combination of decaying exponentials
/// e^{-λt} with rates in `[slowest, fastest]`.
///
/// The range is cut at T with e^{-slowest·T} = 1e-12 and split into geometric
/// panels starting at 1e-2/fastest, so each panel resolves the rates that are
/// still alive on it.
pub fn decaying_integral_vec(
    f: impl Fn(f64) -> Vec<f64>,
    dim: usize,
    slowest: f64,
    fastest: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(slowest > 0.0) || !(fastest >= slowest) {
        return Err(Error::Quadrature(format!(
            "decay rates must satisfy 0 < slowest <= fastest (got {slowest}, {fastest})"
        )));
    }
    let horizon = 12.0 * std::f64::consts::LN_10 / slowest;
    let mut breaks = vec![0.0];
    let mut t = 1e-2 / fastest;
    while t < horizon {
        breaks.push(t);
        t *= 2.0;
    }
    breaks.push(horizon);
    let panels = breaks.len() - 1;
    let mut total = vec![0.0; dim];
    for w in breaks.windows(2) {
        let part = adaptive_vec(&f, dim, w[0], w[1], tol / panels as f64)?;
        total.iter_mut().zip(part).for_each(|(t, p)| *t += p);
    }
    Ok(total)
}

pub fn decaying_integral(
    f: impl Fn(f64) -> f64,
    slowest: f64,
    fastest: f64,
    tol: f64,
) -> Result<f64> {
    decaying_integral_vec(|x| vec![f(x)], 1, slowest, fastest, tol).map(|v| v[0])
}
