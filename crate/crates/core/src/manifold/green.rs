//! Pointwise Green's function `G(p,q) = Σ_{j≥2} λ_j^{-1} e_j(p) e_j(q)`.
//!
//! The eigen-series converges only conditionally off the diagonal in
//! dimension two, so each model uses a summed form:
//! * circle: `2π² B₂({p−q})` with the Bernoulli polynomial `B₂(x) = x² − x + 1/6`;
//! * sphere: the Legendre generating function `−ln((1 − cos γ)/2) − 1`;
//! * flat 2-torus: heat-kernel (Ewald) splitting at `τ = 36/K²`, where the
//!   short-time part is a sum of exponential integrals over periodic images
//!   and the long-time part is the eigen-series truncated at `|k|∞ ≤ K`.

use std::f64::consts::PI;

use super::{Manifold, Point};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_GREEN_TRUNCATION: usize = 30;

pub fn green_kernel(model: Manifold, p: &Point, q: &Point, truncation: usize) -> Result<f64> {
    match model {
        Manifold::Torus1 => {
            let x = (p.0[0] - q.0[0]).rem_euclid(1.0);
            Ok(2.0 * PI * PI * (x * x - x + 1.0 / 6.0))
        }
        Manifold::Sphere2 => {
            let c = (p.0[0] * q.0[0] + p.0[1] * q.0[1] + p.0[2] * q.0[2]).clamp(-1.0, 1.0);
            let gap = 0.5 * (1.0 - c);
            if gap <= 1e-15 {
                return Err(Error::SingularGreenKernel { model: "sphere2" });
            }
            Ok(-gap.ln() - 1.0)
        }
        Manifold::Torus2 => {
            if truncation < 20 {
                return Err(invalid(
                    "truncation",
                    format!("Ewald split needs at least 20 spectral shells, got {truncation}"),
                ));
            }
            let mut dx = (p.0[0] - q.0[0]).rem_euclid(1.0);
            let mut dy = (p.0[1] - q.0[1]).rem_euclid(1.0);
            if dx > 0.5 {
                dx -= 1.0;
            }
            if dy > 0.5 {
                dy -= 1.0;
            }
            if dx.hypot(dy) < 1e-12 {
                return Err(Error::SingularGreenKernel { model: "torus2" });
            }
            let k = truncation as i32;
            let tau = 36.0 / (k * k) as f64;
            let mut short = 0.0;
            for a in -2..=2 {
                for b in -2..=2 {
                    let r2 = (dx - a as f64).powi(2) + (dy - b as f64).powi(2);
                    short += PI * exp_integral_e1(PI * PI * r2 / tau);
                }
            }
            let mut long = 0.0;
            for a in -k..=k {
                for b in -k..=k {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let lambda = (a * a + b * b) as f64;
                    let phase = 2.0 * PI * (a as f64 * dx + b as f64 * dy);
                    long += (-tau * lambda).exp() / lambda * phase.cos();
                }
            }
            Ok(short - tau + long)
        }
    }
}

/// Exponential integral `E₁(x) = ∫_x^∞ e^{-u}/u du` for `x > 0`.
fn exp_integral_e1(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if x > 700.0 {
        return 0.0;
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // modified Lentz on the continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::harmonics::legendre_series;
    use crate::quadrature::{adaptive, GaussLegendre};

    #[test]
    fn circle_values() {
        let o = Point::circle(0.0);
        let diag = green_kernel(Manifold::Torus1, &o, &o, 0).unwrap();
        let series: f64 = 2.0 * (1..200_000).map(|k| 1.0 / (k as f64 * k as f64)).sum::<f64>();
        assert!((diag - series).abs() < 2e-5);
        assert!((diag - PI * PI / 3.0).abs() < 1e-14);
        let half = green_kernel(Manifold::Torus1, &o, &Point::circle(0.5), 0).unwrap();
        assert!((half + PI * PI / 6.0).abs() < 1e-14);
        // truncated eigen-series off the diagonal
        let x = 0.23;
        let series: f64 = (1..4000)
            .map(|k| 2.0 * (2.0 * PI * k as f64 * x).cos() / (k * k) as f64)
            .sum();
        let v = green_kernel(Manifold::Torus1, &o, &Point::circle(x), 0).unwrap();
        assert!((v - series).abs() < 1e-3);
    }

    #[test]
    fn e1_reference_values() {
        // E1(0.5) = 0.5597735947761608, E1(2) = 0.04890051070806112
        assert!((exp_integral_e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-14);
        assert!((exp_integral_e1(2.0) - 0.048_900_510_708_061_12).abs() < 1e-14);
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-14);
    }

    #[test]
    fn sphere_matches_legendre_series_and_has_zero_mean() {
        let c: f64 = 0.3;
        // Abel-summed eigen-series at radius r → 1
        let r: f64 = 0.9999;
        let coeffs: Vec<f64> = (0..20000)
            .map(|l| {
                if l == 0 {
                    0.0
                } else {
                    let lf = l as f64;
                    (2.0 * lf + 1.0) / (lf * (lf + 1.0)) * r.powf(lf)
                }
            })
            .collect();
        let series = legendre_series(&coeffs, c);
        let p = Point::sphere(0.0, 0.0, 1.0);
        let q = Point::sphere((1.0 - c * c).sqrt(), 0.0, c);
        let v = green_kernel(Manifold::Sphere2, &p, &q, 0).unwrap();
        assert!((v - series).abs() < 1e-3, "{v} vs {series}");
        let mean = adaptive(|z| 0.5 * (-(0.5 * (1.0 - z)).ln() - 1.0), -1.0, 1.0 - 1e-14, 1e-12).unwrap();
        assert!(mean.abs() < 1e-8);
        assert!(matches!(
            green_kernel(Manifold::Sphere2, &p, &p, 0),
            Err(Error::SingularGreenKernel { .. })
        ));
    }

    #[test]
    fn torus2_is_harmonic_off_diagonal_with_unit_source() {
        // (1/4π²)ΔG = 1 away from the pole, since −ΔG = δ − 1
        let o = Point::torus2(0.0, 0.0);
        let g = |x: f64, y: f64| green_kernel(Manifold::Torus2, &o, &Point::torus2(x, y), 30).unwrap();
        let h = 1e-3;
        for &(x, y) in &[(0.3, 0.1), (0.5, 0.5), (0.17, 0.62)] {
            let lap = (g(x + h, y) + g(x - h, y) + g(x, y + h) + g(x, y - h) - 4.0 * g(x, y))
                / (h * h)
                / (4.0 * PI * PI);
            assert!((lap - 1.0).abs() < 1e-4, "({x},{y}): {lap}");
        }
        // independent of the split point
        let a = green_kernel(Manifold::Torus2, &o, &Point::torus2(0.21, 0.4), 24).unwrap();
        let b = green_kernel(Manifold::Torus2, &o, &Point::torus2(0.21, 0.4), 40).unwrap();
        assert!((a - b).abs() < 1e-10);
        assert!(green_kernel(Manifold::Torus2, &o, &o, 30).is_err());
        assert!(green_kernel(Manifold::Torus2, &o, &Point::torus2(0.1, 0.1), 5).is_err());
    }

    #[test]
    fn torus2_integrates_to_zero() {
        // Gauss product rule on cells offset from the singular point
        let rule = GaussLegendre::new(12);
        let o = Point::torus2(0.0, 0.0);
        let cells = 16;
        let mut total = 0.0;
        for ci in 0..cells {
            for cj in 0..cells {
                for (xi, wi) in rule.nodes.iter().zip(&rule.weights) {
                    for (yj, wj) in rule.nodes.iter().zip(&rule.weights) {
                        let x = (ci as f64 + 0.5 + 0.5 * xi) / cells as f64;
                        let y = (cj as f64 + 0.5 + 0.5 * yj) / cells as f64;
                        let w = wi * wj * 0.25 / (cells * cells) as f64;
                        total += w * green_kernel(Manifold::Torus2, &o, &Point::torus2(x, y), 30).unwrap();
                    }
                }
            }
        }
        assert!(total.abs() < 1e-3, "{total}");
    }
}
