use super::{Manifold, Mode, ModeDescriptor, Point};
use crate::error::{invalid, Result};

/// A zero-mean test function given by finitely many eigenfunction
/// coefficients (no constant mode).
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    model: Manifold,
    terms: Vec<(Mode, f64)>,
    l2_norm: f64,
    sup_bound: f64,
    lipschitz_bound: f64,
}

impl TestFunction {
    pub fn zero(model: Manifold) -> Self {
        Self {
            model,
            terms: Vec::new(),
            l2_norm: 0.0,
            sup_bound: 0.0,
            lipschitz_bound: 0.0,
        }
    }

    /// Builds a test function from `(mode, coefficient)` pairs. Repeated modes
    /// are merged; the constant mode is rejected.
    pub fn new(model: Manifold, terms: impl IntoIterator<Item = (Mode, f64)>) -> Result<Self> {
        let mut merged: Vec<(Mode, f64)> = Vec::new();
        for (mode, c) in terms {
            if mode.index == 1 {
                return Err(invalid("f", "constant mode is not a zero-mean test function"));
            }
            match merged.iter_mut().find(|(m, _)| m.index == mode.index) {
                Some((_, acc)) => *acc += c,
                None => merged.push((mode, c)),
            }
        }
        merged.sort_by_key(|(m, _)| m.index);
        merged.retain(|(_, c)| *c != 0.0);
        let l2_norm = merged.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
        let sup_bound = merged
            .iter()
            .map(|(m, c)| c.abs() * model.mode_sup_bound(&m.descriptor))
            .sum();
        let lipschitz_bound = merged
            .iter()
            .map(|(m, c)| c.abs() * model.mode_lipschitz_bound(&m.descriptor))
            .sum();
        Ok(Self {
            model,
            terms: merged,
            l2_norm,
            sup_bound,
            lipschitz_bound,
        })
    }

    /// Coefficients keyed by flat eigen-index `j ≥ 2`.
    pub fn from_indices(model: Manifold, coeffs: &[(usize, f64)]) -> Result<Self> {
        let terms = coeffs
            .iter()
            .map(|&(j, c)| model.eigenpair(j).map(|m| (m, c)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(model, terms)
    }

    pub fn from_descriptors(model: Manifold, coeffs: &[(ModeDescriptor, f64)]) -> Result<Self> {
        let terms = coeffs
            .iter()
            .map(|&(d, c)| model.mode_of(d).map(|m| (m, c)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(model, terms)
    }

    pub fn model(&self) -> Manifold {
        self.model
    }

    pub fn terms(&self) -> &[(Mode, f64)] {
        &self.terms
    }

    pub fn eval(&self, p: &Point) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| c * self.model.eval_mode(&m.descriptor, p))
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.model, self.terms.iter().map(|&(m, c)| (m, factor * c)))
            .expect("scaling keeps the constant mode out")
    }

    pub fn add(&self, other: &TestFunction) -> Result<Self> {
        if self.model != other.model {
            return Err(invalid("f", "test functions live on different manifolds"));
        }
        Self::new(self.model, self.terms.iter().chain(&other.terms).copied())
    }
}

/// `(f, G f) = Σ_j c_j² / λ_j`.
pub fn green_form(f: &TestFunction) -> f64 {
    f.terms.iter().map(|(m, c)| c * c / m.eigenvalue).sum()
}

/// `(f, S_t f) = Σ_j e^{-tλ_j} c_j²`.
pub fn semigroup_form(f: &TestFunction, t: f64) -> f64 {
    f.terms
        .iter()
        .map(|(m, c)| (-t * m.eigenvalue).exp() * c * c)
        .sum()
}
