//! Harmonic extension, the killed Green's function and the two identities
//! behind the Markov property of the field.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::graph::{LaplacianMatrix, SpectralData};
use crate::quadrature::decaying_integral_vec;

/// A proper, nonempty vertex subset `U` and its complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetProblem {
    n: usize,
    inside: Vec<usize>,
    outside: Vec<usize>,
}

impl SubsetProblem {
    pub fn new(n: usize, inside: &[usize]) -> Result<Self> {
        let mut member = vec![false; n];
        for &v in inside {
            if v >= n {
                return Err(invalid("inside", format!("vertex {v} out of range for {n} vertices")));
            }
            if member[v] {
                return Err(invalid("inside", format!("vertex {v} listed twice")));
            }
            member[v] = true;
        }
        if inside.is_empty() || inside.len() == n {
            return Err(invalid("inside", "subset must be nonempty and proper"));
        }
        let mut inside = inside.to_vec();
        inside.sort_unstable();
        let outside = (0..n).filter(|&v| !member[v]).collect();
        Ok(Self { n, inside, outside })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn inside(&self) -> &[usize] {
        &self.inside
    }

    pub fn outside(&self) -> &[usize] {
        &self.outside
    }

    fn check(&self, l: &LaplacianMatrix) -> Result<()> {
        if l.len() != self.n {
            return Err(invalid(
                "problem",
                format!("subset built for {} vertices, Laplacian has {}", self.n, l.len()),
            ));
        }
        Ok(())
    }

    fn block(&self, l: &LaplacianMatrix, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        let m = l.matrix();
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
    }

    fn interior_cholesky(&self, l: &LaplacianMatrix) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        self.check(l)?;
        self.block(l, &self.inside, &self.inside)
            .cholesky()
            .ok_or_else(|| Error::SingularBlock(format!("L_UU for |U| = {} is not positive definite", self.inside.len())))
    }

    /// `H = -L_UU^{-1} L_{U∂}`, mapping boundary values to interior values.
    pub fn hitting_operator(&self, l: &LaplacianMatrix) -> Result<DMatrix<f64>> {
        let chol = self.interior_cholesky(l)?;
        let rhs = -self.block(l, &self.inside, &self.outside);
        Ok(chol.solve(&rhs))
    }
}

/// Solves the Dirichlet problem with data `boundary` on the complement of `U`.
/// The result is indexed by all vertices and equals `boundary` off `U`.
pub fn harmonic_extension(
    l: &LaplacianMatrix,
    problem: &SubsetProblem,
    boundary: &DVector<f64>,
) -> Result<DVector<f64>> {
    if boundary.len() != problem.outside.len() {
        return Err(invalid(
            "boundary",
            format!("expected {} values, got {}", problem.outside.len(), boundary.len()),
        ));
    }
    let interior = problem.hitting_operator(l)? * boundary;
    let mut h = DVector::zeros(problem.n);
    for (i, &v) in problem.inside.iter().enumerate() {
        h[v] = interior[i];
    }
    for (i, &v) in problem.outside.iter().enumerate() {
        h[v] = boundary[i];
    }
    Ok(h)
}

/// `(L_UU)^{-1}`, rows and columns ordered as `problem.inside()`.
pub fn killed_green(l: &LaplacianMatrix, problem: &SubsetProblem) -> Result<DMatrix<f64>> {
    problem.check(l)?;
    problem
        .block(l, &problem.inside, &problem.inside)
        .try_inverse()
        .ok_or_else(|| Error::SingularBlock("L_UU is not invertible".into()))
}

/// `max |A G^V A^T − (L_UU)^{-1}|`, with `A φ = φ|_U − H φ|_∂`.
pub fn markov_decomposition_check(
    sd: &SpectralData,
    l: &LaplacianMatrix,
    problem: &SubsetProblem,
) -> Result<f64> {
    if sd.len() != problem.n {
        return Err(invalid("sd", "spectral data and subset disagree on vertex count"));
    }
    let hit = problem.hitting_operator(l)?;
    let mut a = DMatrix::zeros(problem.inside.len(), problem.n);
    for (i, &v) in problem.inside.iter().enumerate() {
        a[(i, v)] = 1.0;
        for (k, &b) in problem.outside.iter().enumerate() {
            a[(i, b)] -= hit[(i, k)];
        }
    }
    let cov = &a * sd.green_matrix() * a.transpose();
    let killed = killed_green(l, problem)?;
    Ok((cov - killed).amax())
}

/// Absolute tolerance used for the time integral in [`occupation_matrix`].
pub const OCCUPATION_TOLERANCE: f64 = 1e-11;

/// `∫_0^∞ (S_t − Π) dt` by quadrature of the semigroup applied to each
/// basis vector.
pub fn occupation_matrix(sd: &SpectralData) -> Result<DMatrix<f64>> {
    let n = sd.len();
    let gap = sd.spectral_gap();
    if !(gap > 1e-8) {
        return Err(Error::Quadrature(format!("spectral gap {gap:e} too small to integrate")));
    }
    let top = sd.eigenvalues()[n - 1];
    let projector = 1.0 / n as f64;
    let integrand = |t: f64| {
        let mut out = Vec::with_capacity(n * n);
        for v in 0..n {
            let col = sd.semigroup_apply(t, &DVector::from_fn(n, |w, _| if w == v { 1.0 } else { 0.0 }));
            out.extend(col.iter().map(|x| x - projector));
        }
        out
    };
    let flat = decaying_integral_vec(integrand, n * n, gap, top.max(gap), OCCUPATION_TOLERANCE)?;
    Ok(DMatrix::from_column_slice(n, n, &flat))
}

/// `max |∫(S_t − Π)dt − G^V|`.
pub fn occupation_identity_check(sd: &SpectralData) -> Result<f64> {
    Ok((occupation_matrix(sd)? - sd.green_matrix()).amax())
}
