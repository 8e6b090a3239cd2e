use std::io::Write;

use nalgebra::{DMatrix, DVector};

use super::WeightedGraph;

/// Dense symmetric graph Laplacian: `L[v][w] = −c_vw`, `L[v][v] = Σ_w c_vw`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    matrix: DMatrix<f64>,
}

impl LaplacianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.matrix * f
    }

    /// `x^T L x`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.matrix * x))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.matrix.amax()
    }

    pub fn dump_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "row,col,value")?;
        for v in 0..self.len() {
            for w in 0..self.len() {
                let x = self.matrix[(v, w)];
                if x != 0.0 {
                    writeln!(out, "{v},{w},{x:e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Assembles the Laplacian of a validated (hence connected) graph.
pub fn assemble_laplacian(graph: &WeightedGraph) -> LaplacianMatrix {
    let c = graph.conductances();
    let n = c.nrows();
    let mut matrix = -c.clone();
    for v in 0..n {
        matrix[(v, v)] = c.row(v).sum();
    }
    LaplacianMatrix { matrix }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GridRealization;
    use crate::manifold::Manifold;
    use proptest::prelude::*;

    fn complete_graph(n: usize) -> WeightedGraph {
        let grid = GridRealization::lattice(Manifold::Torus1, n).unwrap();
        let mut c = DMatrix::from_element(n, n, 1.0);
        c.fill_diagonal(0.0);
        WeightedGraph::new(grid, c).unwrap()
    }

    #[test]
    fn complete_graph_entries() {
        let l = assemble_laplacian(&complete_graph(3));
        for v in 0..3 {
            for w in 0..3 {
                let expected = if v == w { 2.0 } else { -1.0 };
                assert_eq!(l.matrix()[(v, w)], expected);
            }
        }
        let ones = DVector::from_element(3, 1.0);
        assert_eq!(l.apply(&ones).amax(), 0.0);
    }

    proptest! {
        #[test]
        fn dirichlet_form_identity(
            weights in proptest::collection::vec(0.01f64..5.0, 28),
            x in proptest::collection::vec(-3.0f64..3.0, 8),
        ) {
            let n = 8;
            let grid = GridRealization::lattice(Manifold::Torus1, n).unwrap();
            let mut c = DMatrix::zeros(n, n);
            let mut k = 0;
            for v in 0..n {
                for w in 0..v {
                    c[(v, w)] = weights[k];
                    c[(w, v)] = weights[k];
                    k += 1;
                }
            }
            let g = WeightedGraph::new(grid, c.clone()).unwrap();
            let l = assemble_laplacian(&g);
            let x = DVector::from_vec(x);
            let mut direct = 0.0;
            for v in 0..n {
                for w in 0..v {
                    direct += c[(v, w)] * (x[v] - x[w]).powi(2);
                }
            }
            let q = l.quadratic_form(&x);
            prop_assert!((q - direct).abs() < 1e-10 * direct.max(1.0));
            prop_assert!(q >= -1e-12);
            // row sums and sign pattern
            for v in 0..n {
                prop_assert!(l.matrix().row(v).sum().abs() < 1e-12 * l.max_abs());
                prop_assert!(l.matrix()[(v, v)] >= 0.0);
                for w in 0..n {
                    if v != w {
                        prop_assert!(l.matrix()[(v, w)] <= 0.0);
                    }
                }
            }
        }
    }
}
