use std::f64::consts::PI;

use super::{harmonics::legendre_series, Manifold, Point};
use crate::error::{invalid, Error, Result};

/// Modes with `t·λ` above this value are dropped; `e^{-36}` is below double
/// precision relative to the leading term.
pub const HEAT_EXPONENT_CUTOFF: f64 = 36.0;

/// Default limit on the number of modes a heat kernel may sum.
pub const DEFAULT_MODE_CAP: usize = 1 << 22;

/// Truncated eigen-series of the heat kernel `p_t(p, q)` at a fixed time.
///
/// Tori use the product of one-dimensional series (the eigenvalues are
/// additive over coordinates); the sphere uses the zonal Legendre series
/// `Σ_l (2l+1) e^{-t l(l+1)} P_l(p·q)`.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    model: Manifold,
    t: f64,
    /// Per-shell weights: `e^{-tk²}` (torus) or `(2l+1)e^{-tl(l+1)}` (sphere).
    weights: Vec<f64>,
    modes: usize,
    tail_bound: f64,
}

impl HeatKernel {
    pub fn new(model: Manifold, t: f64, cap: usize) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(invalid("t", format!("heat kernel time must be positive, got {t}")));
        }
        let (weights, modes, tail_bound) = match model {
            Manifold::Torus1 | Manifold::Torus2 => {
                let kmax = (HEAT_EXPONENT_CUTOFF / t).sqrt().floor() as usize;
                let modes = (2 * kmax + 1).pow(model.dim() as u32);
                if modes > cap {
                    return Err(Error::TruncationTooSmall { t, needed: modes, cap });
                }
                let weights: Vec<f64> = (0..=kmax).map(|k| (-t * (k * k) as f64).exp()).collect();
                let eps = 2.0 * tail_sum(kmax + 1, |k| (-t * (k * k) as f64).exp());
                let tail = if model == Manifold::Torus1 {
                    eps
                } else {
                    let peak = 1.0 + 2.0 * weights[1..].iter().sum::<f64>();
                    2.0 * eps * peak + eps * eps
                };
                (weights, modes, tail)
            }
            Manifold::Sphere2 => {
                let mut lmax = 0usize;
                while t * ((lmax + 1) * (lmax + 2)) as f64 <= HEAT_EXPONENT_CUTOFF {
                    lmax += 1;
                }
                let modes = (lmax + 1) * (lmax + 1);
                if modes > cap {
                    return Err(Error::TruncationTooSmall { t, needed: modes, cap });
                }
                let shell = |l: usize| (2 * l + 1) as f64 * (-t * (l * (l + 1)) as f64).exp();
                let weights = (0..=lmax).map(shell).collect();
                (weights, modes, tail_sum(lmax + 1, shell))
            }
        };
        Ok(Self {
            model,
            t,
            weights,
            modes,
            tail_bound,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn model(&self) -> Manifold {
        self.model
    }

    /// Number of eigenmodes summed per evaluation.
    pub fn mode_count(&self) -> usize {
        self.modes
    }

    /// Bound on `|p_t(p,q) − truncated value|`, uniform in `(p, q)`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn eval(&self, p: &Point, q: &Point) -> f64 {
        match self.model {
            Manifold::Torus1 => self.circle_factor(p.0[0] - q.0[0]),
            Manifold::Torus2 => {
                self.circle_factor(p.0[0] - q.0[0]) * self.circle_factor(p.0[1] - q.0[1])
            }
            Manifold::Sphere2 => {
                let c = (p.0[0] * q.0[0] + p.0[1] * q.0[1] + p.0[2] * q.0[2]).clamp(-1.0, 1.0);
                legendre_series(&self.weights, c)
            }
        }
    }

    /// `1 + 2 Σ_k e^{-tk²} cos(2πkx)` via the Chebyshev recurrence.
    fn circle_factor(&self, x: f64) -> f64 {
        let c1 = (2.0 * PI * x).cos();
        let (mut prev, mut cur) = (1.0, c1);
        let mut sum = 1.0;
        for (k, w) in self.weights.iter().enumerate().skip(1) {
            if k > 1 {
                let next = 2.0 * c1 * cur - prev;
                prev = cur;
                cur = next;
            }
            sum += 2.0 * w * cur;
        }
        sum
    }
}

fn tail_sum(start: usize, term: impl Fn(usize) -> f64) -> f64 {
    let mut total = 0.0;
    let mut k = start;
    loop {
        let v = term(k);
        total += v;
        if v <= 1e-18 * total.max(f64::MIN_POSITIVE) || v < 1e-300 {
            return total;
        }
        k += 1;
    }
}

/// One-shot evaluation of `p_t(p, q)` with a mode cap.
pub fn heat_kernel(model: Manifold, t: f64, p: &Point, q: &Point, cap: usize) -> Result<f64> {
    Ok(HeatKernel::new(model, t, cap)?.eval(p, q))
}
