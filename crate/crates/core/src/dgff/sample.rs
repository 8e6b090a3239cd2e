use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::graph::{GridRealization, SpectralData};
use crate::manifold::TestFunction;
use crate::rng::{stream, Purpose, StreamId};

/// One draw of the field.
#[derive(Debug, Clone, PartialEq)]
pub struct DgffSample {
    pub values: DVector<f64>,
    /// Label of the random stream the draw came from.
    pub stream: String,
    pub draw: usize,
}

impl DgffSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.mean()
    }
}

/// Draws per independent substream in [`sample_dgff_blocks`].
pub const DRAW_BLOCK: usize = 1000;

fn synthesize<R: Rng + ?Sized>(sd: &SpectralData, rng: &mut R) -> DVector<f64> {
    let n = sd.len();
    let mut coeffs = DVector::zeros(n);
    for j in 1..n {
        let xi: f64 = rng.sample(StandardNormal);
        coeffs[j] = xi / sd.eigenvalues()[j].sqrt();
    }
    let mut values = sd.eigenvectors() * coeffs;
    // remove rounding residue along the constant direction
    let mean = values.mean();
    values.add_scalar_mut(-mean);
    values
}

/// `count` fields `Σ_{j≥2} λ_j^{-1/2} ξ_j u_j` from a single stream.
pub fn sample_dgff<R: Rng + ?Sized>(
    sd: &SpectralData,
    rng: &mut R,
    count: usize,
    stream_label: &str,
) -> Vec<DgffSample> {
    (0..count)
        .map(|draw| DgffSample {
            values: synthesize(sd, rng),
            stream: stream_label.to_string(),
            draw,
        })
        .collect()
}

/// Draws `count` fields in blocks of [`DRAW_BLOCK`], block `b` using stream
/// `(purpose, size_key, b)`, and maps each through `observe`. Blocks run in
/// parallel; the output order and values do not depend on the thread count.
pub fn sample_dgff_blocks<T: Send>(
    sd: &SpectralData,
    master_seed: u64,
    purpose: Purpose,
    size_key: u64,
    count: usize,
    observe: impl Fn(&DgffSample) -> T + Sync,
) -> Vec<T> {
    let blocks = count.div_ceil(DRAW_BLOCK);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let id = StreamId::new(purpose, size_key, b as u64);
            let mut rng = stream(master_seed, id);
            let label = id.label();
            let len = DRAW_BLOCK.min(count - b * DRAW_BLOCK);
            (0..len)
                .map(|k| {
                    let sample = DgffSample {
                        values: synthesize(sd, &mut rng),
                        stream: label.clone(),
                        draw: b * DRAW_BLOCK + k,
                    };
                    observe(&sample)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `(1/|V|) Σ_p f(p) φ(p)`.
pub fn pair_with_function(sample: &DgffSample, f: &TestFunction, grid: &GridRealization) -> f64 {
    let total: f64 = grid
        .points()
        .iter()
        .zip(sample.values.iter())
        .map(|(p, v)| f.eval(p) * v)
        .sum();
    total / grid.len() as f64
}

/// Unbiased empirical covariance, using the known zero mean of the field.
///
/// The field is centered by construction, so the estimator divides by the
/// number of samples rather than estimating the mean.
pub fn covariance_estimate(samples: &[DgffSample]) -> Result<DMatrix<f64>> {
    if samples.len() < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    let n = samples[0].len();
    let mut cov = DMatrix::zeros(n, n);
    for s in samples {
        cov.ger(1.0, &s.values, &s.values, 1.0);
    }
    Ok(cov / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{assemble_laplacian, build_torus_lattice, spectral_decompose, WeightedGraph};
    use crate::manifold::{Manifold, ModeDescriptor};

    fn complete3(scale: f64) -> (GridRealization, SpectralData) {
        let grid = GridRealization::lattice(Manifold::Torus1, 3).unwrap();
        let mut c = DMatrix::from_element(3, 3, scale);
        c.fill_diagonal(0.0);
        let g = WeightedGraph::new(grid.clone(), c).unwrap();
        (grid, spectral_decompose(&assemble_laplacian(&g)).unwrap())
    }

    #[test]
    fn samples_have_zero_mean() {
        let (_, sd) = complete3(1.0);
        let mut rng = stream(1, StreamId::new(Purpose::Test, 3, 0));
        for s in sample_dgff(&sd, &mut rng, 200, "t") {
            assert!(s.mean().abs() <= 1e-12);
        }
    }

    #[test]
    fn complete_graph_variance_and_scaling() {
        let draws = 100_000;
        for &scale in &[1.0, 4.0] {
            let (_, sd) = complete3(scale);
            let samples = sample_dgff_blocks(&sd, 5, Purpose::DgffDraws, 3, draws, |s| s.clone());
            let cov = covariance_estimate(&samples).unwrap();
            for v in 0..3 {
                for w in 0..3 {
                    let g = if v == w { 2.0 / 9.0 } else { -1.0 / 9.0 } / scale;
                    let gd = 2.0 / 9.0 / scale;
                    let se = ((gd * gd + g * g) / draws as f64).sqrt();
                    assert!((cov[(v, w)] - g).abs() < 5.0 * se, "scale {scale} ({v},{w})");
                }
                let row: f64 = cov.row(v).sum();
                assert!(row.abs() < 1e-10);
            }
            assert!((&cov - cov.transpose()).amax() < 1e-15);
        }
    }

    #[test]
    fn blocks_are_thread_count_independent() {
        let (_, sd) = complete3(1.0);
        let a = sample_dgff_blocks(&sd, 9, Purpose::DgffDraws, 3, 2500, |s| s.values[0]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_dgff_blocks(&sd, 9, Purpose::DgffDraws, 3, 2500, |s| s.values[0]));
        assert_eq!(a, b);
    }

    #[test]
    fn pairing_is_linear_and_kills_constants() {
        let (grid, g) = build_torus_lattice(16, 1).unwrap();
        let sd = spectral_decompose(&assemble_laplacian(&g)).unwrap();
        let mut rng = stream(2, StreamId::new(Purpose::Test, 16, 0));
        let s = &sample_dgff(&sd, &mut rng, 1, "t")[0];
        let f = TestFunction::from_indices(Manifold::Torus1, &[(2, 1.0), (5, 0.3)]).unwrap();
        let h = TestFunction::from_indices(Manifold::Torus1, &[(3, -2.0), (5, 0.7)]).unwrap();
        let sum = f.add(&h).unwrap();
        let lhs = pair_with_function(s, &sum, &grid);
        let rhs = pair_with_function(s, &f, &grid) + pair_with_function(s, &h, &grid);
        assert!((lhs - rhs).abs() < 1e-12);
        // a constant added to f does not change the pairing
        let constant_part: f64 = s.values.iter().map(|v| 3.0 * v).sum::<f64>() / 16.0;
        assert!(constant_part.abs() < 1e-12);
    }

    #[test]
    fn pairing_variance_matches_green_form() {
        let (grid, g) = build_torus_lattice(64, 1).unwrap();
        let sd = spectral_decompose(&assemble_laplacian(&g)).unwrap();
        let f = TestFunction::from_descriptors(Manifold::Torus1, &[(ModeDescriptor::Torus { k: [1, 0] }, 1.0)])
            .unwrap();
        let n = 64f64;
        let draws = 100_000;
        let squares = sample_dgff_blocks(&sd, 3, Purpose::DgffDraws, 64, draws, |s| (n.sqrt() * pair_with_function(s, &f, &grid)).powi(2));
        let (var, se) = crate::stats::mean_and_se(&squares);
        let target = sd.green_quadratic_form(&crate::graph::discretize_function(&f, &grid)).unwrap();
        assert!((var - target).abs() < 5.0 * se, "{var} vs {target} ± {se}");
    }

    #[test]
    fn characteristic_function_matches_gaussian() {
        let (grid, g) = build_torus_lattice(32, 1).unwrap();
        let sd = spectral_decompose(&assemble_laplacian(&g)).unwrap();
        let f = TestFunction::from_indices(Manifold::Torus1, &[(2, 1.0), (4, -0.5)]).unwrap();
        let q = sd.green_quadratic_form(&crate::graph::discretize_function(&f, &grid)).unwrap();
        let n = 32f64;
        let x = sample_dgff_blocks(&sd, 8, Purpose::DgffDraws, 32, 100_000, |s| n.sqrt() * pair_with_function(s, &f, &grid));
        for &a in &[0.25, 0.5, 1.0, 1.5, 2.0] {
            let cos: Vec<f64> = x.iter().map(|v| (a * v).cos()).collect();
            let sin: Vec<f64> = x.iter().map(|v| (a * v).sin()).collect();
            let (re, se_re) = crate::stats::mean_and_se(&cos);
            let (im, se_im) = crate::stats::mean_and_se(&sin);
            let target = (-0.5 * a * a * q).exp();
            assert!((re - target).abs() < 5.0 * se_re, "a={a}: {re} vs {target}");
            assert!(im.abs() < 5.0 * se_im, "a={a}: imaginary part {im}");
        }
    }
}
