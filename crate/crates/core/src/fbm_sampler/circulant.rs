use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::frac_cov::{HurstModel, UniformGrid};
use crate::rng::ReplicateRng;

use super::{autocov_stationary, IncrementSampler};

/// Circulant embedding of size `2n` of the increment autocovariance.
///
/// The eigenvalues are computed once; each draw costs `2n` normals and one
/// FFT of length `2n`.
pub struct CirculantSampler {
    grid: UniformGrid,
    /// `sqrt(λ_k / M)` for the Hermitian-symmetric construction.
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    clamped_mass: f64,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("grid", &self.grid)
            .field("clamped_mass", &self.clamped_mass)
            .finish_non_exhaustive()
    }
}

const NEGATIVE_TOLERANCE: f64 = 1e-8;

impl CirculantSampler {
    pub fn new(model: &HurstModel, grid: &UniformGrid) -> Result<Self> {
        grid.check_model(model)?;
        let n = grid.n();
        let size = 2 * n;
        let mut c: Vec<Complex<f64>> = (0..size)
            .map(|k| {
                let lag = if k <= n { k } else { size - k };
                Complex::new(autocov_stationary(model, grid, lag), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(size);
        fft.process(&mut c);
        let lambda: Vec<f64> = c.iter().map(|z| z.re).collect();
        let max = lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_TOLERANCE * max {
            return Err(Error::Embedding {
                min_eigenvalue: min,
                max_eigenvalue: max,
            });
        }
        let total: f64 = lambda.iter().map(|l| l.abs()).sum();
        let negative: f64 = lambda.iter().filter(|l| **l < 0.0).map(|l| -l).sum();
        let scale = lambda.iter().map(|&l| (l.max(0.0) / size as f64).sqrt()).collect();
        Ok(CirculantSampler {
            grid: *grid,
            scale,
            fft,
            clamped_mass: negative / total,
        })
    }

    pub fn clamped_mass(&self) -> f64 {
        self.clamped_mass
    }
}

impl IncrementSampler for CirculantSampler {
    fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    fn sample_into(&self, rng: &mut ReplicateRng, out: &mut [f64]) {
        let n = self.grid.n();
        let size = 2 * n;
        let mut y = vec![Complex::new(0.0, 0.0); size];
        y[0] = Complex::new(self.scale[0] * rng.normal(), 0.0);
        for k in 1..n {
            let s = self.scale[k] * std::f64::consts::FRAC_1_SQRT_2;
            let z = Complex::new(s * rng.normal(), s * rng.normal());
            y[k] = z;
            y[size - k] = z.conj();
        }
        y[n] = Complex::new(self.scale[n] * rng.normal(), 0.0);
        self.fft.process(&mut y);
        for (o, z) in out.iter_mut().zip(&y) {
            *o = z.re;
        }
    }

    fn clamped_mass(&self) -> f64 {
        self.clamped_mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac_cov::increment_gram;

    #[test]
    fn eigenvalues_nonnegative_for_rough_and_smooth_indices() {
        for &h in &[0.05, 0.25, 0.45, 0.5, 0.7] {
            let m = HurstModel::new(h, 1.0, 10.0).unwrap();
            let s = CirculantSampler::new(&m, &UniformGrid::new(257, 10.0).unwrap()).unwrap();
            assert!(s.clamped_mass() < 1e-12, "H={h}");
        }
    }

    #[test]
    fn sample_covariance_matches_gram() {
        let m = HurstModel::new(0.3, 1.0, 1.0).unwrap();
        let grid = UniformGrid::new(6, 1.0).unwrap();
        let s = CirculantSampler::new(&m, &grid).unwrap();
        let g = increment_gram(&m, &grid).unwrap();
        let reps = 40_000;
        let mut acc = nalgebra::DMatrix::<f64>::zeros(6, 6);
        let mut x = vec![0.0; 6];
        for r in 0..reps {
            let mut rng = ReplicateRng::new(2, 0, r);
            s.sample_into(&mut rng, &mut x);
            for i in 0..6 {
                for j in 0..6 {
                    acc[(i, j)] += x[i] * x[j];
                }
            }
        }
        acc /= reps as f64;
        for i in 0..6 {
            for j in 0..6 {
                let se = ((g.get(i, i) * g.get(j, j) + g.get(i, j).powi(2)) / reps as f64).sqrt();
                assert!((acc[(i, j)] - g.get(i, j)).abs() < 5.0 * se, "({i},{j})");
            }
        }
    }
}
