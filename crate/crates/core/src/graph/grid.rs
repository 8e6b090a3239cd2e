use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::manifold::{Manifold, Point};

/// Where a grid's points came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    /// i.i.d. draws from the normalized volume measure.
    Iid { seed: u64, stream: String },
    /// Regular lattice with `per_side` points along each axis.
    Lattice { per_side: usize },
    /// Caller-supplied points.
    Explicit,
}

/// An ordered list of points on a manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRealization {
    model: Manifold,
    points: Vec<Point>,
    provenance: Provenance,
}

impl GridRealization {
    pub fn from_points(model: Manifold, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("points", "grid must contain at least one point"));
        }
        for p in &points {
            let ok = match model {
                Manifold::Torus1 => (0.0..1.0).contains(&p.0[0]) && p.0[1] == 0.0 && p.0[2] == 0.0,
                Manifold::Torus2 => {
                    (0.0..1.0).contains(&p.0[0]) && (0.0..1.0).contains(&p.0[1]) && p.0[2] == 0.0
                }
                Manifold::Sphere2 => (p.0.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12,
            };
            if !ok {
                return Err(invalid("points", format!("{p:?} is not on {}", model.name())));
            }
        }
        Ok(Self {
            model,
            points,
            provenance: Provenance::Explicit,
        })
    }

    /// `n` i.i.d. uniform points drawn from `rng`; `seed`/`stream` are only
    /// recorded as provenance.
    pub fn iid<R: Rng + ?Sized>(
        model: Manifold,
        n: usize,
        rng: &mut R,
        seed: u64,
        stream: impl Into<String>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "grid must contain at least one point"));
        }
        Ok(Self {
            model,
            points: model.sample_uniform(n, rng),
            provenance: Provenance::Iid {
                seed,
                stream: stream.into(),
            },
        })
    }

    /// Equally spaced lattice on a flat torus, `per_side^d` points in
    /// row-major order.
    pub fn lattice(model: Manifold, per_side: usize) -> Result<Self> {
        if per_side == 0 {
            return Err(invalid("per_side", "lattice needs at least one point per side"));
        }
        let h = 1.0 / per_side as f64;
        let points = match model {
            Manifold::Torus1 => (0..per_side).map(|i| Point::circle(i as f64 * h)).collect(),
            Manifold::Torus2 => (0..per_side * per_side)
                .map(|i| Point::torus2((i / per_side) as f64 * h, (i % per_side) as f64 * h))
                .collect(),
            Manifold::Sphere2 => {
                return Err(invalid("model", "regular lattices exist only on flat tori"))
            }
        };
        Ok(Self {
            model,
            points,
            provenance: Provenance::Lattice { per_side },
        })
    }

    /// The first `n` points (nested grids share prefixes).
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.points.len() {
            return Err(invalid("n", format!("prefix {n} out of range 1..={}", self.points.len())));
        }
        Ok(Self {
            model: self.model,
            points: self.points[..n].to_vec(),
            provenance: self.provenance.clone(),
        })
    }

    pub fn model(&self) -> Manifold {
        self.model
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}
