use std::io::Write;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::GridRealization;
use crate::manifold::{Point, TestFunction};

/// Probe-based Voronoi partition of the manifold by a grid.
#[derive(Debug, Clone)]
pub struct VoronoiTessellation {
    grid: GridRealization,
    probes: Vec<Point>,
    owner: Vec<usize>,
    members: Vec<Vec<usize>>,
    cell_radius: Vec<f64>,
    fill_radius: f64,
    warnings: Vec<String>,
}

/// Monte Carlo cell average with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellAverage {
    pub value: f64,
    pub se: f64,
}

/// Assigns `m` stratified uniform probes to their nearest grid point
/// (ties go to the lowest index).
pub fn voronoi_assign<R: Rng + ?Sized>(
    grid: &GridRealization,
    m: usize,
    rng: &mut R,
) -> Result<VoronoiTessellation> {
    let n = grid.len();
    if n == 0 || m == 0 {
        return Err(crate::error::invalid("m", "need a nonempty grid and at least one probe"));
    }
    let model = grid.model();
    let mut warnings = Vec::new();
    if m < 100 * n {
        warnings.push(format!("{m} probes for {n} cells is below the recommended 100 per cell"));
    }
    let probes = model.sample_stratified(m, rng);
    let nearest: Vec<(usize, f64)> = probes
        .par_iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (i, c) in grid.points().iter().enumerate() {
                let d = model.geodesic_distance(p, c);
                if d < best.1 {
                    best = (i, d);
                }
            }
            best
        })
        .collect();
    let mut members = vec![Vec::new(); n];
    let mut cell_radius = vec![0.0f64; n];
    let mut owner = Vec::with_capacity(m);
    for (k, &(i, d)) in nearest.iter().enumerate() {
        members[i].push(k);
        cell_radius[i] = cell_radius[i].max(d);
        owner.push(i);
    }
    let empty = members.iter().filter(|c| c.is_empty()).count();
    if empty > 0 {
        warnings.push(format!("{empty} cells received no probes"));
    }
    let fill_radius = cell_radius.iter().copied().fold(0.0, f64::max);
    Ok(VoronoiTessellation {
        grid: grid.clone(),
        probes,
        owner,
        members,
        cell_radius,
        fill_radius,
        warnings,
    })
}

impl VoronoiTessellation {
    pub fn grid(&self) -> &GridRealization {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn probe_count(&self) -> usize {
        self.probes.len()
    }

    pub fn probes(&self) -> &[Point] {
        &self.probes
    }

    /// Cell index of every probe.
    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    pub fn cell_probe_count(&self, i: usize) -> usize {
        self.members[i].len()
    }

    /// Estimated volume fraction `v_i`.
    pub fn volume(&self, i: usize) -> f64 {
        self.members[i].len() as f64 / self.probe_count() as f64
    }

    /// Binomial standard error of [`volume`](Self::volume).
    pub fn volume_se(&self, i: usize) -> f64 {
        let v = self.volume(i);
        (v * (1.0 - v) / self.probe_count() as f64).sqrt()
    }

    /// Largest probe distance to the centre of cell `i`.
    pub fn cell_radius(&self, i: usize) -> f64 {
        self.cell_radius[i]
    }

    /// Largest probe distance to its centre; never exceeds the true fill
    /// radius.
    pub fn fill_radius(&self) -> f64 {
        self.fill_radius
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Average of `g` over the probes in cell `i`.
    pub fn cell_average_with(&self, i: usize, g: impl Fn(&Point) -> f64) -> Result<CellAverage> {
        let members = self.members.get(i).ok_or(Error::EmptyCell { cell: i })?;
        if members.is_empty() {
            return Err(Error::EmptyCell { cell: i });
        }
        // shifted sums keep constant integrands exact
        let first = g(&self.probes[members[0]]);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for &k in members {
            let x = g(&self.probes[k]) - first;
            sum += x;
            sum_sq += x * x;
        }
        let n = members.len() as f64;
        let mean = sum / n;
        let se = if members.len() > 1 {
            ((sum_sq - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
        } else {
            f64::INFINITY
        };
        Ok(CellAverage { value: first + mean, se })
    }

    /// Vector of cell averages `f̃(p_i)` over all cells.
    pub fn lifted_values(&self, g: impl Fn(&Point) -> f64 + Sync) -> Result<DVector<f64>> {
        let values: Result<Vec<f64>> = (0..self.len())
            .into_par_iter()
            .map(|i| self.cell_average_with(i, &g).map(|a| a.value))
            .collect();
        Ok(DVector::from_vec(values?))
    }

    /// CSV with one row per cell: `i,volume,volume_se,probes,max_distance`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "i,volume,volume_se,probes,max_distance")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{:.12e},{:.12e},{},{:.12e}",
                i,
                self.volume(i),
                self.volume_se(i),
                self.cell_probe_count(i),
                self.cell_radius(i)
            )?;
        }
        Ok(())
    }
}

pub fn cell_average(f: &TestFunction, tess: &VoronoiTessellation, i: usize) -> Result<CellAverage> {
    tess.cell_average_with(i, |p| f.eval(p))
}

pub fn fill_radius(tess: &VoronoiTessellation) -> f64 {
    tess.fill_radius()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;
    use crate::rng::{stream, Purpose, StreamId};

    fn rng(k: u64) -> rand_chacha::ChaCha20Rng {
        stream(17, StreamId::new(Purpose::Test, 0, k))
    }

    #[test]
    fn regular_circle_cells() {
        let grid = GridRealization::lattice(Manifold::Torus1, 4).unwrap();
        let m = 40_000;
        let tess = voronoi_assign(&grid, m, &mut rng(0)).unwrap();
        assert_eq!((0..4).map(|i| tess.cell_probe_count(i)).sum::<usize>(), m);
        assert!(((0..4).map(|i| tess.volume(i)).sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..4 {
            // stratified probes make the count nearly exact
            assert!((tess.volume(i) - 0.25).abs() <= 5.0 * (0.25f64 * 0.75 / m as f64).sqrt());
        }
        let eps = tess.fill_radius();
        assert!(eps <= 0.125 && eps > 0.125 - 1e-3, "{eps}");
        assert!(tess.warnings().is_empty());

        let f = TestFunction::from_indices(Manifold::Torus1, &[(3, 1.0 / 2f64.sqrt())]).unwrap();
        let avg = cell_average(&f, &tess, 0).unwrap();
        let exact = (std::f64::consts::FRAC_PI_4).sin() / std::f64::consts::FRAC_PI_4;
        assert!((avg.value - exact).abs() < 5.0 * avg.se, "{} vs {exact} ± {}", avg.value, avg.se);
    }

    #[test]
    fn constant_average_is_exact() {
        let grid = GridRealization::lattice(Manifold::Torus1, 5).unwrap();
        let tess = voronoi_assign(&grid, 500, &mut rng(1)).unwrap();
        for i in 0..5 {
            assert_eq!(tess.cell_average_with(i, |_| 0.3).unwrap().value, 0.3);
        }
    }

    #[test]
    fn single_point_grid() {
        let grid = GridRealization::from_points(Manifold::Torus1, vec![Point::circle(0.3)]).unwrap();
        let tess = voronoi_assign(&grid, 10_000, &mut rng(2)).unwrap();
        assert_eq!(tess.volume(0), 1.0);
        assert!((tess.fill_radius() - 0.5).abs() < 1e-3);
        assert!(tess.fill_radius() <= 0.5);
    }

    #[test]
    fn fill_radius_half_cell_width() {
        for &n in &[8usize, 32] {
            let grid = GridRealization::lattice(Manifold::Torus1, n).unwrap();
            let tess = voronoi_assign(&grid, 200 * n, &mut rng(n as u64)).unwrap();
            let exact = 0.5 / n as f64;
            assert!(tess.fill_radius() <= exact + 1e-15);
            assert!(tess.fill_radius() > 0.99 * exact);
        }
    }

    #[test]
    fn lipschitz_cell_bound() {
        for model in [Manifold::Torus1, Manifold::Torus2, Manifold::Sphere2] {
            let mut r = rng(40);
            let grid = GridRealization::iid(model, 40, &mut r, 17, "test").unwrap();
            let tess = voronoi_assign(&grid, 4000, &mut r).unwrap();
            let f = TestFunction::from_indices(model, &[(2, 1.0), (4, -0.6), (7, 0.25)]).unwrap();
            let lip = f.lipschitz_bound();
            for i in 0..tess.len() {
                if tess.cell_probe_count(i) == 0 {
                    assert!(cell_average(&f, &tess, i).is_err());
                    continue;
                }
                let avg = cell_average(&f, &tess, i).unwrap().value;
                let p = &grid.points()[i];
                assert!((avg - f.eval(p)).abs() <= lip * tess.fill_radius() + 1e-12);
            }
        }
    }

    #[test]
    fn warns_on_few_probes_and_reports_empty_cells() {
        let grid = GridRealization::lattice(Manifold::Torus1, 50).unwrap();
        let tess = voronoi_assign(&grid, 60, &mut rng(3)).unwrap();
        assert!(!tess.warnings().is_empty());
        let empty = (0..50).find(|&i| tess.cell_probe_count(i) == 0).unwrap();
        assert_eq!(tess.cell_average_with(empty, |_| 1.0), Err(Error::EmptyCell { cell: empty }));
    }

    #[test]
    fn iid_fill_radius_shrinks() {
        let median_eps = |n: usize| {
            let v: Vec<f64> = (0..5)
                .map(|s| {
                    let mut r = rng(1000 + s);
                    let grid = GridRealization::iid(Manifold::Torus1, n, &mut r, 17, "test").unwrap();
                    voronoi_assign(&grid, 100 * n, &mut r).unwrap().fill_radius()
                })
                .collect();
            crate::stats::median(&v)
        };
        assert!(median_eps(512) < median_eps(64));
    }

    #[test]
    fn csv_layout() {
        let grid = GridRealization::lattice(Manifold::Torus1, 3).unwrap();
        let tess = voronoi_assign(&grid, 300, &mut rng(4)).unwrap();
        let mut buf = Vec::new();
        tess.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("i,volume,volume_se,probes,max_distance\n0,"));
    }
}
