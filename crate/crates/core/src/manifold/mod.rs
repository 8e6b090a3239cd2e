//! Built-in compact manifolds with closed-form spectral data.
//!
//! Conventions: the flat tori use coordinates in `[0, 1)^d` with the
//! Laplace–Beltrami operator `(1/4π²)·Σ ∂²`, so eigenvalues are `|k|²` for
//! integer frequency vectors `k`. The unit sphere carries the round metric
//! with eigenvalues `l(l+1)`. All volume measures are normalized to mass 1,
//! and eigenfunctions are orthonormal in `L²` of the normalized measure.

mod green;
mod harmonics;
pub(crate) mod heat;
mod test_function;

pub use green::{green_kernel, DEFAULT_GREEN_TRUNCATION};
pub use harmonics::{legendre_series, normalized_legendre};
pub use heat::{heat_kernel, HeatKernel, DEFAULT_MODE_CAP, HEAT_EXPONENT_CUTOFF};
pub use test_function::{green_form, semigroup_form, TestFunction};

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One of the built-in manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    /// Flat circle `R/Z`.
    Torus1,
    /// Flat torus `R²/Z²`.
    Torus2,
    /// Unit sphere in `R³`.
    Sphere2,
}

/// A point on a manifold. Torus coordinates live in `[0, 1)`; sphere points
/// are unit vectors. Unused slots are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub fn circle(x: f64) -> Self {
        Point([x.rem_euclid(1.0), 0.0, 0.0])
    }

    pub fn torus2(x: f64, y: f64) -> Self {
        Point([x.rem_euclid(1.0), y.rem_euclid(1.0), 0.0])
    }

    /// Projects `(x, y, z)` onto the unit sphere.
    pub fn sphere(x: f64, y: f64, z: f64) -> Self {
        let r = (x * x + y * y + z * z).sqrt();
        Point([x / r, y / r, z / r])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }
}

/// Labels an eigenfunction of the real eigenbasis.
///
/// On a torus, `k` with first nonzero component positive is the cosine mode
/// `√2 cos(2π k·x)` and its negation is the sine mode `√2 sin(2π |k|·x)`.
/// On the sphere, `m > 0` is the cosine harmonic, `m < 0` the sine harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeDescriptor {
    Torus { k: [i32; 2] },
    Sphere { l: u32, m: i32 },
}

impl fmt::Display for ModeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeDescriptor::Torus { k } => write!(f, "k=({} {})", k[0], k[1]),
            ModeDescriptor::Sphere { l, m } => write!(f, "l={l} m={m}"),
        }
    }
}

/// An eigenpair label together with its flat ascending index (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: usize,
    pub eigenvalue: f64,
    pub descriptor: ModeDescriptor,
}

impl Manifold {
    pub fn torus(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Manifold::Torus1),
            2 => Ok(Manifold::Torus2),
            _ => Err(invalid("d", format!("torus dimension must be 1 or 2, got {d}"))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Manifold::Torus1 => 1,
            Manifold::Torus2 | Manifold::Sphere2 => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Manifold::Torus1 => "torus1",
            Manifold::Torus2 => "torus2",
            Manifold::Sphere2 => "sphere2",
        }
    }

    pub fn spectral_gap(&self) -> f64 {
        match self {
            Manifold::Torus1 | Manifold::Torus2 => 1.0,
            Manifold::Sphere2 => 2.0,
        }
    }

    /// Every mode with eigenvalue `≤ max_eigenvalue` (whole eigenspaces),
    /// in flat ascending order.
    pub fn modes_up_to(&self, max_eigenvalue: f64) -> Vec<Mode> {
        let mut descriptors: Vec<(f64, ModeDescriptor)> = Vec::new();
        match self {
            Manifold::Torus1 => {
                let kmax = max_eigenvalue.max(0.0).sqrt().floor() as i32;
                for k in -kmax..=kmax {
                    descriptors.push(((k * k) as f64, ModeDescriptor::Torus { k: [k, 0] }));
                }
            }
            Manifold::Torus2 => {
                let kmax = max_eigenvalue.max(0.0).sqrt().floor() as i32;
                for a in -kmax..=kmax {
                    for b in -kmax..=kmax {
                        let lambda = (a * a + b * b) as f64;
                        if lambda <= max_eigenvalue {
                            descriptors.push((lambda, ModeDescriptor::Torus { k: [a, b] }));
                        }
                    }
                }
            }
            Manifold::Sphere2 => {
                let mut l = 0u32;
                while (l * (l + 1)) as f64 <= max_eigenvalue {
                    for m in -(l as i32)..=(l as i32) {
                        descriptors.push(((l * (l + 1)) as f64, ModeDescriptor::Sphere { l, m }));
                    }
                    l += 1;
                }
            }
        }
        // Ties: torus by k lexicographically, sphere by (l, m).
        descriptors.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then_with(|| descriptor_key(&a.1).cmp(&descriptor_key(&b.1)))
        });
        descriptors
            .into_iter()
            .enumerate()
            .map(|(i, (eigenvalue, descriptor))| Mode {
                index: i + 1,
                eigenvalue,
                descriptor,
            })
            .collect()
    }

    /// The first `count` modes in flat order.
    pub fn first_modes(&self, count: usize) -> Vec<Mode> {
        let mut cap = 4.0;
        loop {
            let modes = self.modes_up_to(cap);
            if modes.len() >= count {
                return modes.into_iter().take(count).collect();
            }
            cap *= 2.0;
        }
    }

    /// The `j`-th eigenpair (1-based): its mode label and eigenvalue.
    pub fn eigenpair(&self, j: usize) -> Result<Mode> {
        if j == 0 {
            return Err(invalid("j", "eigen-index is 1-based"));
        }
        Ok(self.first_modes(j)[j - 1])
    }

    /// Resolves a descriptor to its mode, validating that it belongs to this
    /// manifold.
    pub fn mode_of(&self, descriptor: ModeDescriptor) -> Result<Mode> {
        let eigenvalue = match (self, descriptor) {
            (Manifold::Torus1, ModeDescriptor::Torus { k }) if k[1] == 0 => (k[0] * k[0]) as f64,
            (Manifold::Torus2, ModeDescriptor::Torus { k }) => (k[0] * k[0] + k[1] * k[1]) as f64,
            (Manifold::Sphere2, ModeDescriptor::Sphere { l, m }) if m.unsigned_abs() <= l => {
                (l * (l + 1)) as f64
            }
            _ => {
                return Err(invalid(
                    "mode",
                    format!("{descriptor} is not a mode of {}", self.name()),
                ))
            }
        };
        self.modes_up_to(eigenvalue)
            .into_iter()
            .find(|m| m.descriptor == descriptor)
            .ok_or_else(|| invalid("mode", format!("{descriptor} not found")))
    }

    /// Number of eigenvalues (with multiplicity) that are `≤ lambda`.
    pub fn weyl_count(&self, lambda: f64) -> usize {
        match self {
            Manifold::Torus1 => 2 * lambda.max(0.0).sqrt().floor() as usize + 1,
            Manifold::Sphere2 => {
                let mut l = 0usize;
                while ((l + 1) * (l + 2)) as f64 <= lambda {
                    l += 1;
                }
                (l + 1) * (l + 1)
            }
            Manifold::Torus2 => self.modes_up_to(lambda).len(),
        }
    }

    /// Evaluates the eigenfunction labelled `descriptor` at `p`.
    pub fn eval_mode(&self, descriptor: &ModeDescriptor, p: &Point) -> f64 {
        match *descriptor {
            ModeDescriptor::Torus { k } => {
                if k == [0, 0] {
                    return 1.0;
                }
                let positive = k[0] > 0 || (k[0] == 0 && k[1] > 0);
                let (a, b) = if positive { (k[0], k[1]) } else { (-k[0], -k[1]) };
                let phase = 2.0 * PI * (a as f64 * p.0[0] + b as f64 * p.0[1]);
                if positive {
                    SQRT_2 * phase.cos()
                } else {
                    SQRT_2 * phase.sin()
                }
            }
            ModeDescriptor::Sphere { l, m } => harmonics::real_harmonic(l, m, p),
        }
    }

    /// Upper bound on `sup |e|` for the eigenfunction.
    pub fn mode_sup_bound(&self, descriptor: &ModeDescriptor) -> f64 {
        match *descriptor {
            ModeDescriptor::Torus { k } if k == [0, 0] => 1.0,
            ModeDescriptor::Torus { .. } => SQRT_2,
            // addition theorem: Σ_m e_lm² = 2l+1 pointwise
            ModeDescriptor::Sphere { l, .. } => ((2 * l + 1) as f64).sqrt(),
        }
    }

    /// Upper bound on the Lipschitz constant of the eigenfunction with respect
    /// to geodesic distance.
    pub fn mode_lipschitz_bound(&self, descriptor: &ModeDescriptor) -> f64 {
        match *descriptor {
            ModeDescriptor::Torus { k } => {
                let norm = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
                2.0 * PI * SQRT_2 * norm
            }
            // Σ_m |∇e_lm|² = l(l+1)(2l+1) pointwise
            ModeDescriptor::Sphere { l, .. } => {
                let l = l as f64;
                (l * (l + 1.0) * (2.0 * l + 1.0)).sqrt()
            }
        }
    }

    pub fn geodesic_distance(&self, p: &Point, q: &Point) -> f64 {
        match self {
            Manifold::Torus1 => circular(p.0[0] - q.0[0]),
            Manifold::Torus2 => circular(p.0[0] - q.0[0]).hypot(circular(p.0[1] - q.0[1])),
            Manifold::Sphere2 => {
                let [a, b, c] = p.0;
                let [x, y, z] = q.0;
                let cross = [b * z - c * y, c * x - a * z, a * y - b * x];
                let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
                let cos = a * x + b * y + c * z;
                sin.atan2(cos)
            }
        }
    }

    /// Maps the unit cube `[0,1)^2` onto the manifold so that the uniform
    /// measure pushes forward to the normalized volume measure (for the
    /// sphere this is Archimedes' equal-area map `z = 2u − 1`).
    pub fn from_unit_square(&self, u: f64, v: f64) -> Point {
        match self {
            Manifold::Torus1 => Point::circle(u),
            Manifold::Torus2 => Point::torus2(u, v),
            Manifold::Sphere2 => {
                let z = 2.0 * u - 1.0;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = 2.0 * PI * v;
                Point([r * phi.cos(), r * phi.sin(), z])
            }
        }
    }

    /// Dimension of the chart used by [`Manifold::from_unit_square`].
    pub fn chart_dim(&self) -> usize {
        self.dim()
    }

    /// `n` i.i.d. points from the normalized volume measure.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let v: f64 = if self.chart_dim() == 2 { rng.random() } else { 0.0 };
                self.from_unit_square(u, v)
            })
            .collect()
    }

    /// `n` uniform points stratified over a regular partition of the chart:
    /// `b^dim` equal-measure boxes each receive `⌊n / b^dim⌋` points and the
    /// remainder is drawn from the whole space. Every point is marginally
    /// uniform.
    pub fn sample_stratified<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point> {
        let dim = self.chart_dim();
        let mut b = (n as f64).powf(1.0 / dim as f64).floor().max(1.0) as usize;
        while b.pow(dim as u32) > n && b > 1 {
            b -= 1;
        }
        let boxes = b.pow(dim as u32);
        let per_box = if n == 0 { 0 } else { n / boxes };
        let mut points = Vec::with_capacity(n);
        for cell in 0..boxes {
            let (i, j) = (cell % b, cell / b);
            for _ in 0..per_box {
                let u = (i as f64 + rng.random::<f64>()) / b as f64;
                let v = if dim == 2 {
                    (j as f64 + rng.random::<f64>()) / b as f64
                } else {
                    0.0
                };
                points.push(self.from_unit_square(u, v));
            }
        }
        let rest = n - points.len();
        points.extend(self.sample_uniform(rest, rng));
        points
    }

    /// Writes `j, eigenvalue, mode` rows for the first `count` modes.
    pub fn dump_modes_csv(&self, count: usize, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "j,eigenvalue,mode")?;
        for m in self.first_modes(count) {
            writeln!(out, "{},{},{}", m.index, m.eigenvalue, m.descriptor)?;
        }
        Ok(())
    }
}

fn descriptor_key(d: &ModeDescriptor) -> (i64, i64) {
    match *d {
        ModeDescriptor::Torus { k } => (k[0] as i64, k[1] as i64),
        ModeDescriptor::Sphere { l, m } => (l as i64, m as i64),
    }
}

fn circular(delta: f64) -> f64 {
    let d = delta.rem_euclid(1.0);
    d.min(1.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use crate::rng::{stream, Purpose, StreamId};

    const ALL: [Manifold; 3] = [Manifold::Torus1, Manifold::Torus2, Manifold::Sphere2];

    #[test]
    fn torus1_eigenvalues_by_enumeration() {
        let values: Vec<f64> = Manifold::Torus1
            .first_modes(7)
            .iter()
            .map(|m| m.eigenvalue)
            .collect();
        assert_eq!(values, vec![0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0]);
        assert_eq!(Manifold::Torus1.eigenpair(4).unwrap().eigenvalue, 4.0);
        let first = Manifold::Torus1.eigenpair(1).unwrap();
        assert_eq!(first.eigenvalue, 0.0);
        assert_eq!(Manifold::Torus1.eval_mode(&first.descriptor, &Point::circle(0.37)), 1.0);
    }

    #[test]
    fn sphere_degree_one_spans_indices_two_to_four() {
        for j in 2..=4 {
            let m = Manifold::Sphere2.eigenpair(j).unwrap();
            assert_eq!(m.eigenvalue, 2.0);
            assert!(matches!(m.descriptor, ModeDescriptor::Sphere { l: 1, .. }));
        }
        assert_eq!(Manifold::Sphere2.eigenpair(5).unwrap().eigenvalue, 6.0);
        assert!(Manifold::Sphere2.eigenpair(0).is_err());
    }

    #[test]
    fn simple_zero_eigenvalue_and_gap() {
        for model in ALL {
            let modes = model.first_modes(10);
            assert_eq!(modes[0].eigenvalue, 0.0);
            assert!(modes[1].eigenvalue > 0.0);
            assert_eq!(modes[1].eigenvalue, model.spectral_gap());
            assert!(modes.windows(2).all(|w| w[0].eigenvalue <= w[1].eigenvalue));
        }
    }

    #[test]
    fn flat_index_is_a_bijection() {
        for model in ALL {
            let modes = model.modes_up_to(60.0);
            for m in &modes {
                assert_eq!(model.mode_of(m.descriptor).unwrap().index, m.index);
            }
            let mut descs: Vec<_> = modes.iter().map(|m| descriptor_key(&m.descriptor)).collect();
            descs.sort();
            descs.dedup();
            assert_eq!(descs.len(), modes.len());
        }
    }

    #[test]
    fn torus_tie_breaking_is_lexicographic() {
        let m = Manifold::Torus2.first_modes(5);
        let ks: Vec<[i32; 2]> = m
            .iter()
            .map(|m| match m.descriptor {
                ModeDescriptor::Torus { k } => k,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(ks, vec![[0, 0], [-1, 0], [0, -1], [0, 1], [1, 0]]);
    }

    /// Quadrature rule on the manifold that is exact for the low modes.
    fn quadrature_grid(model: Manifold) -> Vec<(Point, f64)> {
        match model {
            Manifold::Torus1 => (0..256)
                .map(|i| (Point::circle(i as f64 / 256.0), 1.0 / 256.0))
                .collect(),
            Manifold::Torus2 => {
                let n = 64;
                let mut out = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        out.push((
                            Point::torus2(i as f64 / n as f64, j as f64 / n as f64),
                            1.0 / (n * n) as f64,
                        ));
                    }
                }
                out
            }
            Manifold::Sphere2 => {
                let rule = GaussLegendre::new(32);
                let nphi = 64;
                let mut out = Vec::new();
                for (z, w) in rule.nodes.iter().zip(&rule.weights) {
                    for k in 0..nphi {
                        let phi = 2.0 * PI * k as f64 / nphi as f64;
                        let r = (1.0 - z * z).sqrt();
                        out.push((
                            Point([r * phi.cos(), r * phi.sin(), *z]),
                            0.5 * w / nphi as f64,
                        ));
                    }
                }
                out
            }
        }
    }

    #[test]
    fn eigenfunctions_orthonormal_by_quadrature() {
        for model in ALL {
            let grid = quadrature_grid(model);
            let modes = model.first_modes(20);
            for a in &modes {
                for b in &modes {
                    let ip: f64 = grid
                        .iter()
                        .map(|(p, w)| {
                            w * model.eval_mode(&a.descriptor, p) * model.eval_mode(&b.descriptor, p)
                        })
                        .sum();
                    let expected = if a.index == b.index { 1.0 } else { 0.0 };
                    assert!(
                        (ip - expected).abs() < 1e-6,
                        "{} modes {} {}: {ip}",
                        model.name(),
                        a.descriptor,
                        b.descriptor
                    );
                }
            }
        }
    }

    #[test]
    fn eigenfunctions_solve_the_eigenproblem() {
        // finite-difference Laplacian on the torus; sphere checked via the
        // orthonormality test and the addition theorem
        let h = 1e-4;
        for m in Manifold::Torus2.first_modes(13) {
            let p = Point::torus2(0.31, 0.77);
            let f = |x: f64, y: f64| Manifold::Torus2.eval_mode(&m.descriptor, &Point::torus2(x, y));
            let lap = (f(0.31 + h, 0.77) + f(0.31 - h, 0.77) + f(0.31, 0.77 + h) + f(0.31, 0.77 - h)
                - 4.0 * f(0.31, 0.77))
                / (h * h)
                / (4.0 * PI * PI);
            let value = Manifold::Torus2.eval_mode(&m.descriptor, &p);
            assert!((lap + m.eigenvalue * value).abs() < 1e-4, "{}", m.descriptor);
        }
    }

    #[test]
    fn sphere_addition_theorem_bounds_sup_norm() {
        let p = Point::sphere(0.3, -0.5, 0.8);
        for l in 0..8u32 {
            let s: f64 = (-(l as i32)..=(l as i32))
                .map(|m| Manifold::Sphere2.eval_mode(&ModeDescriptor::Sphere { l, m }, &p).powi(2))
                .sum();
            assert!((s - (2 * l + 1) as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn geodesic_distance_examples() {
        let t = Manifold::Torus1;
        assert!((t.geodesic_distance(&Point::circle(0.1), &Point::circle(0.9)) - 0.2).abs() < 1e-15);
        let s = Manifold::Sphere2;
        let d = s.geodesic_distance(&Point::sphere(0.0, 0.0, 1.0), &Point::sphere(0.0, 0.0, -1.0));
        assert!((d - PI).abs() < 1e-15);
    }

    #[test]
    fn metric_axioms_on_random_pairs() {
        let mut rng = stream(1, StreamId::new(Purpose::Test, 0, 0));
        for model in ALL {
            let pts = model.sample_uniform(60, &mut rng);
            for w in pts.chunks(3) {
                let (p, q, r) = (&w[0], &w[1], &w[2]);
                let d = |a, b| model.geodesic_distance(a, b);
                assert_eq!(d(p, p), 0.0);
                assert!((d(p, q) - d(q, p)).abs() < 1e-15);
                assert!(d(p, r) <= d(p, q) + d(q, r) + 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let id = StreamId::new(Purpose::Test, 3, 0);
        let a = Manifold::Torus1.sample_uniform(3, &mut stream(42, id));
        let b = Manifold::Torus1.sample_uniform(3, &mut stream(42, id));
        assert_eq!(a, b);
        assert!(a.iter().all(|p| (0.0..1.0).contains(&p.x())));
    }

    #[test]
    fn sphere_samples_are_centered() {
        let n = 100_000;
        let mut rng = stream(5, StreamId::new(Purpose::Test, n as u64, 0));
        let pts = Manifold::Sphere2.sample_uniform(n, &mut rng);
        for c in 0..3 {
            let mean: f64 = pts.iter().map(|p| p.0[c]).sum::<f64>() / n as f64;
            // each coordinate has variance 1/3
            let sigma = (1.0 / 3.0 / n as f64).sqrt();
            assert!(mean.abs() < 5.0 * sigma, "coord {c}: {mean}");
        }
        assert!(pts.iter().all(|p| (p.0.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn torus2_samples_pass_chi_square() {
        let n = 10_000;
        let mut rng = stream(9, StreamId::new(Purpose::Test, n as u64, 1));
        let pts = Manifold::Torus2.sample_uniform(n, &mut rng);
        let mut counts = [0usize; 16];
        for p in &pts {
            let i = (p.0[0] * 4.0) as usize;
            let j = (p.0[1] * 4.0) as usize;
            counts[i * 4 + j] += 1;
        }
        let expected = n as f64 / 16.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 0.999 quantile of chi-square with 15 degrees of freedom
        assert!(chi2 < 37.697, "chi2 = {chi2}");
    }

    #[test]
    fn stratified_sampling_counts() {
        let mut rng = stream(2, StreamId::new(Purpose::Test, 0, 2));
        for model in ALL {
            let pts = model.sample_stratified(1000, &mut rng);
            assert_eq!(pts.len(), 1000);
        }
        let pts = Manifold::Torus1.sample_stratified(8, &mut rng);
        let mut bins: Vec<usize> = pts.iter().map(|p| (p.x() * 8.0) as usize).collect();
        bins.sort();
        assert_eq!(bins, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn weyl_growth_matches_dimension() {
        for model in ALL {
            let (lo, hi) = (100.0, 3000.0);
            let slope = ((model.weyl_count(hi) as f64).ln() - (model.weyl_count(lo) as f64).ln())
                / (hi / lo as f64).ln();
            let target = model.dim() as f64 / 2.0;
            assert!((slope - target).abs() < 0.1 * target, "{}: {slope}", model.name());
        }
    }

    #[test]
    fn mode_csv_dump() {
        let mut buf = Vec::new();
        Manifold::Sphere2.dump_modes_csv(4, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("j,eigenvalue,mode\n1,0,l=0 m=0\n2,2,l=1 m=-1"));
    }
}
