//! Exact balanced transport between two uniform empirical measures.
//!
//! Masses are scaled to integer units (source supply `m/g`, sink demand
//! `n/g` with `g = gcd(n, m)`) and routed by successive shortest augmenting
//! paths with Johnson potentials, which yields an optimal plan of the
//! transportation LP.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point};

/// Min-heap entry keyed by tentative distance (ties by node index).
#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum of `Σ π_ij cost(i, j)` over couplings of the uniform measures on
/// `n` sources and `m` sinks.
pub fn transport_cost(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::Infeasible("empty marginal".into()));
    }
    let g = gcd(n, m);
    let mut supply = vec![(m / g) as u64; n];
    let mut demand = vec![(n / g) as u64; m];
    let c: Vec<f64> = (0..n * m).map(|k| cost(k / m, k % m)).collect();
    if c.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Infeasible("costs must be finite and nonnegative".into()));
    }
    let mut flow = vec![0u64; n * m];
    let mut pot_src = vec![0.0f64; n];
    let mut pot_snk = vec![0.0f64; m];
    let total_units = (n / g * m) as u64;
    let mut routed = 0u64;

    // Dijkstra state, nodes 0..n are sources and n..n+m sinks.
    let v = n + m;
    let mut dist = vec![f64::INFINITY; v];
    let mut done = vec![false; v];
    let mut parent = vec![usize::MAX; v];
    let mut heap = BinaryHeap::new();
    // sources with positive flow into each sink
    let mut carriers: Vec<Vec<usize>> = vec![Vec::new(); m];

    while routed < total_units {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        done.iter_mut().for_each(|d| *d = false);
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        heap.clear();
        for i in 0..n {
            if supply[i] > 0 {
                dist[i] = 0.0;
                heap.push(Entry(0.0, i));
            }
        }
        let target = loop {
            let Some(Entry(best_d, best)) = heap.pop() else {
                return Err(Error::Infeasible("no augmenting path".into()));
            };
            if done[best] || best_d > dist[best] {
                continue;
            }
            done[best] = true;
            if best >= n {
                let j = best - n;
                if demand[j] > 0 {
                    break best;
                }
                // residual back-edges sink j -> source i carry existing flow
                for &i in &carriers[j] {
                    if !done[i] {
                        let rc = (-c[i * m + j] + pot_snk[j] - pot_src[i]).max(0.0);
                        if best_d + rc < dist[i] {
                            dist[i] = best_d + rc;
                            parent[i] = best;
                            heap.push(Entry(dist[i], i));
                        }
                    }
                }
            } else {
                let i = best;
                for j in 0..m {
                    let u = n + j;
                    if !done[u] {
                        let rc = (c[i * m + j] + pot_src[i] - pot_snk[j]).max(0.0);
                        if best_d + rc < dist[u] {
                            dist[u] = best_d + rc;
                            parent[u] = i;
                            heap.push(Entry(dist[u], u));
                        }
                    }
                }
            }
        };
        let dt = dist[target];
        // bottleneck along the path
        let mut amount = demand[target - n];
        let mut node = target;
        while parent[node] != usize::MAX {
            let p = parent[node];
            if node < n {
                // back-edge p(sink) -> node(source)
                amount = amount.min(flow[node * m + (p - n)]);
            }
            node = p;
        }
        amount = amount.min(supply[node]);
        let mut node = target;
        while parent[node] != usize::MAX {
            let p = parent[node];
            if node >= n {
                let j = node - n;
                if flow[p * m + j] == 0 {
                    carriers[j].push(p);
                }
                flow[p * m + j] += amount;
            } else {
                let j = p - n;
                flow[node * m + j] -= amount;
                if flow[node * m + j] == 0 {
                    carriers[j].retain(|&i| i != node);
                }
            }
            node = p;
        }
        supply[node] -= amount;
        demand[target - n] -= amount;
        routed += amount;
        for i in 0..n {
            pot_src[i] += dist[i].min(dt);
        }
        for j in 0..m {
            pot_snk[j] += dist[n + j].min(dt);
        }
    }
    let unit = g as f64 / (n as f64 * m as f64);
    Ok(flow
        .iter()
        .zip(&c)
        .map(|(&f, &cost)| f as f64 * cost)
        .sum::<f64>()
        * unit)
}

/// Exact `W₁` between the uniform measures on two point sets (geodesic cost).
pub fn empirical_wasserstein1(model: Manifold, a: &[Point], b: &[Point]) -> Result<f64> {
    transport_cost(a.len(), b.len(), |i, j| model.geodesic_distance(&a[i], &b[j]))
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
