use serde::Serialize;

use crate::error::{invalid, Result};
use crate::manifold::{Manifold, Mode};

/// Exponent `s` and truncation `J` (number of modes, constant included).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevParams {
    pub s: f64,
    pub truncation: usize,
    model: Manifold,
}

impl SobolevParams {
    /// Default truncation: every mode with `λ ≤ 400` on the tori, degrees
    /// `l ≤ 20` on the sphere.
    pub fn new(model: Manifold, s: f64) -> Result<Self> {
        let cap = match model {
            Manifold::Torus1 | Manifold::Torus2 => 400.0,
            Manifold::Sphere2 => 420.0,
        };
        Self::with_truncation(model, s, model.modes_up_to(cap).len())
    }

    pub fn with_truncation(model: Manifold, s: f64, truncation: usize) -> Result<Self> {
        if !s.is_finite() || s <= 0.0 {
            return Err(invalid("s", format!("must be positive and finite, got {s}")));
        }
        if truncation < 2 {
            return Err(invalid("truncation", "must keep at least one nonconstant mode"));
        }
        Ok(Self { s, truncation, model })
    }

    pub fn model(&self) -> Manifold {
        self.model
    }

    /// Modes `2..=J`.
    pub fn modes(&self) -> Vec<Mode> {
        self.model.first_modes(self.truncation).split_off(1)
    }

    /// True when `s > d - 1/2`, the range where the bound series converges.
    pub fn summable(&self) -> bool {
        self.s > self.model.dim() as f64 - 0.5
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.summable() {
            Vec::new()
        } else {
            vec![format!(
                "s = {} is not above d - 1/2 = {} on {}; the bound series diverges",
                self.s,
                self.model.dim() as f64 - 0.5,
                self.model.name()
            )]
        }
    }
}

/// Truncated squared norm with the tail of the bound series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegNorm {
    /// `Σ_{j=2}^{J} λ_j^{-s} ⟨ψ, e_j⟩²`.
    pub squared: f64,
    /// Upper bound on `Σ_{j>J} λ_j^{-s} ‖e_j‖_∞²`. A field whose pairings
    /// satisfy `⟨ψ, e_j⟩² ≤ κ ‖e_j‖_∞²` misses at most `κ` times this.
    pub tail_series: f64,
}

/// `pairings[k]` is `⟨ψ, e_{k+2}⟩`; exactly `J - 1` values are required.
pub fn sobolev_neg_norm(pairings: &[f64], params: &SobolevParams) -> Result<NegNorm> {
    let modes = params.modes();
    if pairings.len() != modes.len() {
        return Err(invalid(
            "pairings",
            format!("expected {} values for J = {}, got {}", modes.len(), params.truncation, pairings.len()),
        ));
    }
    let squared = modes
        .iter()
        .zip(pairings)
        .map(|(m, c)| m.eigenvalue.powf(-params.s) * c * c)
        .sum();
    Ok(NegNorm {
        squared,
        tail_series: bound_series_tail(params),
    })
}

/// `Σ_{j=2}^{J} λ_j^{-s} ‖e_j‖_∞²` with the model's sup-norm bounds.
pub fn bound_series(params: &SobolevParams) -> f64 {
    series_terms(params.model, params.s, &params.modes())
}

fn series_terms(model: Manifold, s: f64, modes: &[Mode]) -> f64 {
    modes
        .iter()
        .map(|m| m.eigenvalue.powf(-s) * model.mode_sup_bound(&m.descriptor).powi(2))
        .sum()
}

/// Upper bound on the omitted part `Σ_{j>J} λ_j^{-s} ‖e_j‖_∞²`, infinite
/// when the series diverges.
///
/// Terms up to a fixed eigenvalue cutoff are summed exactly; beyond it the
/// lattice-point or degree sums are dominated by integrals.
pub fn bound_series_tail(params: &SobolevParams) -> f64 {
    if !params.summable() {
        return f64::INFINITY;
    }
    let model = params.model;
    let s = params.s;
    let base: f64 = match model {
        Manifold::Torus1 => 1e4,
        Manifold::Torus2 => 1600.0,
        Manifold::Sphere2 => 6480.0,
    };
    let last = model.first_modes(params.truncation).last().map_or(0.0, |m| m.eigenvalue);
    let cutoff = base.max(4.0 * last);
    let exact = series_terms(
        model,
        s,
        &model
            .modes_up_to(cutoff)
            .into_iter()
            .filter(|m| m.index > params.truncation)
            .collect::<Vec<_>>(),
    );
    exact + integral_tail(model, s, cutoff)
}

/// Bound on the series over all modes with `λ > cutoff`.
fn integral_tail(model: Manifold, s: f64, cutoff: f64) -> f64 {
    match model {
        Manifold::Torus1 => {
            // two modes per k ≥ m, each with ‖e‖_∞² = 2
            let m = cutoff.sqrt().floor() + 1.0;
            4.0 * (m.powf(-2.0 * s) + m.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0))
        }
        Manifold::Torus2 => {
            // one mode per lattice point k with |k| > R; compare |k|^{-2s}
            // with the integral over the unit square centred at k
            let a = std::f64::consts::FRAC_1_SQRT_2;
            let u0 = cutoff.sqrt() - 2.0 * a;
            let integral = 2.0
                * std::f64::consts::PI
                * (u0.powf(2.0 - 2.0 * s) / (2.0 * s - 2.0) + a * u0.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0));
            2.0 * integral
        }
        Manifold::Sphere2 => {
            // degree l > L contributes (2l+1)² (l(l+1))^{-s} ≤ 9 l^{2-2s}
            let mut l = 0.0f64;
            while (l + 1.0) * (l + 2.0) <= cutoff {
                l += 1.0;
            }
            let m = l + 1.0;
            9.0 * (m.powf(2.0 - 2.0 * s) + m.powf(3.0 - 2.0 * s) / (2.0 * s - 3.0))
        }
    }
}
