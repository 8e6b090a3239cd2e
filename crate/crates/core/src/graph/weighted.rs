use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::GridRealization;
use crate::error::{invalid, Error, Result};
use crate::manifold::{HeatKernel, Manifold};

/// Grid points plus symmetric nonnegative conductances with zero diagonal.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    grid: GridRealization,
    conductances: DMatrix<f64>,
}

impl WeightedGraph {
    /// Validates symmetry, nonnegativity, zero diagonal and connectivity.
    pub fn new(grid: GridRealization, conductances: DMatrix<f64>) -> Result<Self> {
        let n = grid.len();
        if conductances.nrows() != n || conductances.ncols() != n {
            return Err(invalid("conductances", format!("expected {n}x{n} matrix")));
        }
        for v in 0..n {
            if conductances[(v, v)] != 0.0 {
                return Err(invalid("conductances", format!("nonzero diagonal at {v}")));
            }
            for w in 0..v {
                let c = conductances[(v, w)];
                if c != conductances[(w, v)] {
                    return Err(invalid("conductances", format!("asymmetric at ({v}, {w})")));
                }
                if !(c >= 0.0) || !c.is_finite() {
                    return Err(invalid("conductances", format!("entry ({v}, {w}) = {c}")));
                }
            }
        }
        let graph = Self { grid, conductances };
        let components = graph.component_count();
        if components != 1 {
            return Err(Error::Disconnected(format!(
                "{components} components through positive conductances"
            )));
        }
        Ok(graph)
    }

    pub fn grid(&self) -> &GridRealization {
        &self.grid
    }

    pub fn conductances(&self) -> &DMatrix<f64> {
        &self.conductances
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Connected components of the positive-conductance graph.
    pub fn component_count(&self) -> usize {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for w in 0..n {
                    if !seen[w] && self.conductances[(v, w)] > 0.0 {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        components
    }
}

/// Complete graph with conductances `c_vw = p_t(v, w) / (N t)`.
pub fn build_heat_kernel_graph(
    model: Manifold,
    grid: &GridRealization,
    t: f64,
    mode_cap: usize,
) -> Result<WeightedGraph> {
    let n = grid.len();
    if n < 2 {
        return Err(invalid("grid", "heat-kernel graph needs at least two points"));
    }
    if grid.model() != model {
        return Err(invalid("grid", "grid lives on a different manifold"));
    }
    let kernel = HeatKernel::new(model, t, mode_cap)?;
    let scale = 1.0 / (n as f64 * t);
    let pts = grid.points();
    // Far from the diagonal the truncated series can land just below zero;
    // anything within its error bound is the kernel's tiny positive value.
    let slack = kernel.tail_bound() + 64.0 * f64::EPSILON * kernel.eval(&pts[0], &pts[0]);
    let mut c = DMatrix::zeros(n, n);
    for v in 0..n {
        for w in 0..v {
            let raw = kernel.eval(&pts[v], &pts[w]);
            let value = if raw < 0.0 && raw >= -slack { 0.0 } else { raw * scale };
            c[(v, w)] = value;
            c[(w, v)] = value;
        }
    }
    WeightedGraph::new(grid.clone(), c)
}

/// Regular lattice on `T^d` with nearest-neighbour conductance
/// `per_side²/(4π²)` along each axis.
pub fn build_torus_lattice(per_side: usize, d: usize) -> Result<(GridRealization, WeightedGraph)> {
    if per_side < 3 {
        return Err(invalid("per_side", format!("lattice needs at least 3 points per side, got {per_side}")));
    }
    let model = Manifold::torus(d)?;
    let grid = GridRealization::lattice(model, per_side)?;
    let n = grid.len();
    let weight = (per_side * per_side) as f64 / (4.0 * PI * PI);
    let mut c = DMatrix::zeros(n, n);
    let index = |coords: &[usize]| coords.iter().fold(0, |acc, &x| acc * per_side + x);
    for v in 0..n {
        let mut coords = vec![0usize; d];
        let mut rest = v;
        for slot in coords.iter_mut().rev() {
            *slot = rest % per_side;
            rest /= per_side;
        }
        for axis in 0..d {
            let mut next = coords.clone();
            next[axis] = (coords[axis] + 1) % per_side;
            let w = index(&next);
            c[(v, w)] = weight;
            c[(w, v)] = weight;
        }
    }
    let graph = WeightedGraph::new(grid.clone(), c)?;
    Ok((grid, graph))
}
