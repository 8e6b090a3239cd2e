use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{GridRealization, LaplacianMatrix};
use crate::error::{Error, Result};
use crate::manifold::TestFunction;

/// Relative threshold below which the second eigenvalue signals a
/// disconnected graph.
pub const CONNECTIVITY_TOLERANCE: f64 = 1e-10;

/// Full eigendecomposition of a graph Laplacian, eigenvalues ascending.
///
/// Column 0 of the eigenvector matrix is the exact constant vector `1/√n`;
/// the remaining columns are the solver's eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralData {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Diagonalizes `L` and isolates the constant mode at index 0.
pub fn spectral_decompose(laplacian: &LaplacianMatrix) -> Result<SpectralData> {
    let n = laplacian.len();
    let eig = SymmetricEigen::new(laplacian.matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    if n >= 2 {
        let top = eigenvalues[n - 1];
        if !(eigenvalues[1] > CONNECTIVITY_TOLERANCE * top) {
            return Err(Error::Disconnected(format!(
                "second eigenvalue {:e} vs largest {:e}",
                eigenvalues[1], top
            )));
        }
    }
    eigenvalues[0] = eigenvalues[0].max(0.0);
    eigenvectors.set_column(0, &DVector::from_element(n, 1.0 / (n as f64).sqrt()));
    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
    })
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `λ₂`, the smallest nonzero eigenvalue.
    pub fn spectral_gap(&self) -> f64 {
        self.eigenvalues[1]
    }

    /// Coefficients `u_j · f` in the eigenbasis.
    pub fn coefficients(&self, f: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors.tr_mul(f)
    }

    fn synthesize(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.eigenvectors * coeffs
    }

    /// `G f = Σ_{j≥2} λ_j^{-1} (u_j·f) u_j`: the inverse of `L` on vectors
    /// orthogonal to constants, zero on constants.
    pub fn green_apply(&self, f: &DVector<f64>) -> DVector<f64> {
        let mut c = self.coefficients(f);
        c[0] = 0.0;
        for j in 1..self.len() {
            c[j] /= self.eigenvalues[j];
        }
        self.synthesize(&c)
    }

    /// `S_t f = exp(−tL) f`.
    pub fn semigroup_apply(&self, t: f64, f: &DVector<f64>) -> DVector<f64> {
        let mut c = self.coefficients(f);
        for j in 0..self.len() {
            c[j] *= (-t * self.eigenvalues[j]).exp();
        }
        self.synthesize(&c)
    }

    /// The Green matrix `Σ_{j≥2} λ_j^{-1} u_j u_j^T`.
    pub fn green_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut scaled = self.eigenvectors.clone();
        scaled.column_mut(0).fill(0.0);
        for j in 1..n {
            let s = 1.0 / self.eigenvalues[j];
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.eigenvectors.transpose()
    }

    /// `U diag(λ) U^T`, for checking the decomposition.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for j in 0..self.len() {
            let s = self.eigenvalues[j];
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.eigenvectors.transpose()
    }

    fn check_zero_sum(f: &DVector<f64>) -> Result<()> {
        let sum = f.sum();
        let tol = 1e-9 * f.norm();
        if sum.abs() > tol {
            return Err(Error::NotZeroSum { sum, tol });
        }
        Ok(())
    }

    /// `N^{-1}(f_N, G_N f_N)` for a zero-sum vector.
    pub fn green_quadratic_form(&self, f: &DVector<f64>) -> Result<f64> {
        Self::check_zero_sum(f)?;
        let c = self.coefficients(f);
        let total: f64 = (1..self.len()).map(|j| c[j] * c[j] / self.eigenvalues[j]).sum();
        Ok(total / self.len() as f64)
    }

    /// `N^{-1}(f_N, S_t f_N)`.
    pub fn semigroup_quadratic_form(&self, f: &DVector<f64>, t: f64) -> f64 {
        let c = self.coefficients(f);
        let total: f64 = (0..self.len())
            .map(|j| (-t * self.eigenvalues[j]).exp() * c[j] * c[j])
            .sum();
        total / self.len() as f64
    }

    /// Atoms `(λ_j, ‖P_j f‖²)` of the spectral measure of `f`, `j ≥ 2`.
    pub fn spectral_measure(&self, f: &DVector<f64>) -> Vec<(f64, f64)> {
        let c = self.coefficients(f);
        (1..self.len()).map(|j| (self.eigenvalues[j], c[j] * c[j])).collect()
    }

    pub fn dump_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "j,eigenvalue")?;
        for (j, l) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{},{l:e}", j + 1)?;
        }
        Ok(())
    }
}

/// `f` on the grid minus its empirical mean.
pub fn discretize_function(f: &TestFunction, grid: &GridRealization) -> DVector<f64> {
    let mut v = DVector::from_iterator(grid.len(), grid.points().iter().map(|p| f.eval(p)));
    let mean = v.mean();
    v.add_scalar_mut(-mean);
    v
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::{assemble_laplacian, build_torus_lattice, WeightedGraph};
    use crate::manifold::{Manifold, ModeDescriptor, Point};
    use crate::quadrature::decaying_integral;
    use crate::rng::{stream, Purpose, StreamId};
    use rand::Rng;
    use std::f64::consts::{PI, SQRT_2};

    fn complete3() -> SpectralData {
        let grid = GridRealization::lattice(Manifold::Torus1, 3).unwrap();
        let mut c = DMatrix::from_element(3, 3, 1.0);
        c.fill_diagonal(0.0);
        let g = WeightedGraph::new(grid, c).unwrap();
        spectral_decompose(&assemble_laplacian(&g)).unwrap()
    }

    pub(crate) fn random_graph(n: usize, seed: u64) -> (WeightedGraph, LaplacianMatrix) {
        let mut rng = stream(seed, StreamId::new(Purpose::Test, n as u64, 7));
        let grid = GridRealization::from_points(
            Manifold::Torus1,
            (0..n).map(|i| Point::circle(i as f64 / n as f64)).collect(),
        )
        .unwrap();
        let mut c = DMatrix::zeros(n, n);
        for v in 0..n {
            for w in 0..v {
                let x: f64 = rng.random_range(0.05..2.0);
                c[(v, w)] = x;
                c[(w, v)] = x;
            }
        }
        let g = WeightedGraph::new(grid, c).unwrap();
        let l = assemble_laplacian(&g);
        (g, l)
    }

    fn random_vector(n: usize, seed: u64) -> DVector<f64> {
        let mut rng = stream(seed, StreamId::new(Purpose::Test, n as u64, 8));
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn complete_graph_spectrum_and_green() {
        let sd = complete3();
        let ev = sd.eigenvalues();
        assert!(ev[0].abs() < 1e-12);
        assert!((ev[1] - 3.0).abs() < 1e-12 && (ev[2] - 3.0).abs() < 1e-12);
        assert!((sd.spectral_gap() - 3.0).abs() < 1e-12);
        let g = sd.green_matrix();
        for v in 0..3 {
            for w in 0..3 {
                let expected = if v == w { 2.0 / 9.0 } else { -1.0 / 9.0 };
                assert!((g[(v, w)] - expected).abs() < 1e-14);
            }
        }
        let constant = DVector::from_element(3, 2.5);
        assert!(sd.green_apply(&constant).amax() < 1e-14);
    }

    #[test]
    fn lattice_spectrum_matches_closed_form() {
        for &n in &[4usize, 8, 16, 64] {
            let (_, g) = build_torus_lattice(n, 1).unwrap();
            let sd = spectral_decompose(&assemble_laplacian(&g)).unwrap();
            let mut closed: Vec<f64> = (0..n)
                .map(|k| (n * n) as f64 / (PI * PI) * (PI * k as f64 / n as f64).sin().powi(2))
                .collect();
            closed.sort_by(f64::total_cmp);
            for (a, b) in sd.eigenvalues().iter().zip(&closed) {
                assert!((a - b).abs() < 1e-10, "N={n}: {a} vs {b}");
            }
        }
        let (_, g) = build_torus_lattice(4, 1).unwrap();
        let sd = spectral_decompose(&assemble_laplacian(&g)).unwrap();
        let expected = [0.0, 8.0 / (PI * PI), 8.0 / (PI * PI), 16.0 / (PI * PI)];
        for (a, b) in sd.eigenvalues().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let (_, g) = build_torus_lattice(64, 1).unwrap();
        let sd = spectral_decompose(&assemble_laplacian(&g)).unwrap();
        assert!((sd.spectral_gap() - 0.999_197_07).abs() < 1e-8);
    }

    #[test]
    fn torus2_lattice_spectrum_is_a_sum() {
        let n = 6;
        let (_, g) = build_torus_lattice(n, 2).unwrap();
        let sd = spectral_decompose(&assemble_laplacian(&g)).unwrap();
        let one: Vec<f64> = (0..n)
            .map(|k| (n * n) as f64 / (PI * PI) * (PI * k as f64 / n as f64).sin().powi(2))
            .collect();
        let mut closed: Vec<f64> = one.iter().flat_map(|a| one.iter().map(move |b| a + b)).collect();
        closed.sort_by(f64::total_cmp);
        for (a, b) in sd.eigenvalues().iter().zip(&closed) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn decomposition_invariants_on_random_graphs() {
        for seed in 0..5 {
            let (_, l) = random_graph(8, seed);
            let sd = spectral_decompose(&l).unwrap();
            let u = sd.eigenvectors();
            let gram = u.tr_mul(u) - DMatrix::identity(8, 8);
            assert!(gram.amax() < 1e-10);
            assert!((sd.reconstruct() - l.matrix()).amax() < 1e-8 * l.max_abs());
            let top = sd.eigenvalues()[7];
            assert!(sd.eigenvalues()[0] >= 0.0 && sd.eigenvalues()[0] <= 1e-10 * top);
            assert!(sd.eigenvalues().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn adding_an_edge_never_decreases_the_gap() {
        for seed in 0..10 {
            let (g, _) = random_graph(7, seed);
            let mut rng = stream(seed, StreamId::new(Purpose::Test, 1, 1));
            let mut c = g.conductances().clone();
            let before = spectral_decompose(&assemble_laplacian(&g)).unwrap().spectral_gap();
            let (v, w) = (rng.random_range(0..7usize), rng.random_range(0..7usize));
            if v == w {
                continue;
            }
            let extra: f64 = rng.random_range(0.1..3.0);
            c[(v, w)] += extra;
            c[(w, v)] += extra;
            let bigger = WeightedGraph::new(g.grid().clone(), c).unwrap();
            let after = spectral_decompose(&assemble_laplacian(&bigger)).unwrap().spectral_gap();
            assert!(after >= before - 1e-12);
        }
    }

    #[test]
    fn green_is_pseudo_inverse() {
        for seed in 0..5 {
            let (_, l) = random_graph(8, seed);
            let sd = spectral_decompose(&l).unwrap();
            let f = random_vector(8, seed);
            let centered = f.add_scalar(-f.mean());
            let lg = l.apply(&sd.green_apply(&f));
            assert!((lg - &centered).amax() < 1e-10);
            let gl = sd.green_apply(&l.apply(&f));
            assert!((gl - &centered).amax() < 1e-10);
            let gm = sd.green_matrix();
            assert!((&gm - gm.transpose()).amax() < 1e-12);
            assert!((&gm * DVector::from_element(8, 1.0)).amax() < 1e-12);
            let min_eig = SymmetricEigen::new(gm).eigenvalues.min();
            assert!(min_eig > -1e-12);
        }
    }

    #[test]
    fn semigroup_properties() {
        let (_, l) = random_graph(8, 11);
        let sd = spectral_decompose(&l).unwrap();
        let f = random_vector(8, 11);
        assert!((sd.semigroup_apply(0.0, &f) - &f).amax() < 1e-13);
        let s = sd.semigroup_apply(0.7, &f);
        assert!((s.sum() - f.sum()).abs() < 1e-12);
        let composed = sd.semigroup_apply(0.3, &sd.semigroup_apply(0.4, &f));
        assert!((composed - s).amax() < 1e-10);
    }

    fn cos1() -> TestFunction {
        TestFunction::from_descriptors(Manifold::Torus1, &[(ModeDescriptor::Torus { k: [1, 0] }, 1.0)])
            .unwrap()
    }

    #[test]
    fn discretization_examples() {
        let grid = GridRealization::lattice(Manifold::Torus1, 4).unwrap();
        let v = discretize_function(&cos1(), &grid);
        let expected = [SQRT_2, 0.0, -SQRT_2, 0.0];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let mut rng = stream(2, StreamId::new(Purpose::Test, 0, 3));
        let random = GridRealization::iid(Manifold::Torus1, 37, &mut rng, 2, "t").unwrap();
        let f = TestFunction::from_indices(Manifold::Torus1, &[(2, 0.4), (5, -1.3), (8, 2.0)]).unwrap();
        assert!(discretize_function(&f, &random).sum().abs() < 1e-12);
        assert_eq!(discretize_function(&TestFunction::zero(Manifold::Torus1), &random).amax(), 0.0);
    }

    #[test]
    fn quadratic_form_examples() {
        for &(n, expected) in &[(64usize, 1.000_803_58), (4, PI * PI / 8.0)] {
            let (grid, g) = build_torus_lattice(n, 1).unwrap();
            let sd = spectral_decompose(&assemble_laplacian(&g)).unwrap();
            let f = discretize_function(&cos1(), &grid);
            let q = sd.green_quadratic_form(&f).unwrap();
            let gap = (n * n) as f64 / (PI * PI) * (PI / n as f64).sin().powi(2);
            assert!((q - 1.0 / gap).abs() < 1e-12);
            assert!((q - expected).abs() < 1e-6, "N={n}: {q}");
            assert_eq!(sd.green_quadratic_form(&DVector::zeros(n)).unwrap(), 0.0);
        }
        let (_, g) = build_torus_lattice(8, 1).unwrap();
        let sd = spectral_decompose(&assemble_laplacian(&g)).unwrap();
        assert!(matches!(
            sd.green_quadratic_form(&DVector::from_element(8, 1.0)),
            Err(Error::NotZeroSum { .. })
        ));
    }

    #[test]
    fn quadratic_form_is_time_integral_of_semigroup() {
        let (_, l) = random_graph(10, 3);
        let sd = spectral_decompose(&l).unwrap();
        let f = random_vector(10, 3);
        let f = f.add_scalar(-f.mean());
        let top = sd.eigenvalues()[9];
        let integral = decaying_integral(
            |t| sd.semigroup_quadratic_form(&f, t) - f.mean().powi(2),
            sd.spectral_gap(),
            top,
            1e-12,
        )
        .unwrap();
        assert!((integral - sd.green_quadratic_form(&f).unwrap()).abs() < 1e-9);
        let mass: f64 = sd.spectral_measure(&f).iter().map(|(_, w)| w).sum();
        assert!((mass - f.norm_squared()).abs() < 1e-12);
    }
}
