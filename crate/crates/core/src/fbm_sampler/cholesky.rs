use crate::error::{Error, Result};
use crate::frac_cov::{increment_gram, HurstModel, UniformGrid};
use crate::rng::ReplicateRng;

use super::IncrementSampler;

/// Lower factor `L` with `L Lᵀ = A`, row-major packed as a full `n × n` matrix.
///
/// Fails with the 1-based index of the first leading minor that is not
/// positive.
pub fn cholesky_lower(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: a.len(),
        });
    }
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let row_j = j * n;
        let mut d = a[row_j + j];
        for k in 0..j {
            d -= l[row_j + k] * l[row_j + k];
        }
        if !(d > 0.0) {
            return Err(Error::Factorization { minor: j + 1 });
        }
        let d = d.sqrt();
        l[row_j + j] = d;
        for i in j + 1..n {
            let row_i = i * n;
            let mut s = a[row_i + j];
            for k in 0..j {
                s -= l[row_i + k] * l[row_j + k];
            }
            l[row_i + j] = s / d;
        }
    }
    Ok(l)
}

/// Dense Cholesky sampler; the reference for small `n`.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    grid: UniformGrid,
    lower: Vec<f64>,
}

impl CholeskySampler {
    pub fn new(model: &HurstModel, grid: &UniformGrid) -> Result<Self> {
        let g = increment_gram(model, grid)?;
        let n = grid.n();
        let dense: Vec<f64> = (0..n * n).map(|k| g.get(k / n, k % n)).collect();
        Ok(CholeskySampler {
            grid: *grid,
            lower: cholesky_lower(&dense, n)?,
        })
    }
}

impl IncrementSampler for CholeskySampler {
    fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    fn sample_into(&self, rng: &mut ReplicateRng, out: &mut [f64]) {
        let n = self.grid.n();
        let mut z = vec![0.0; n];
        rng.fill_normal(&mut z);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.lower[i * n..i * n + i + 1];
            *o = row.iter().zip(&z).map(|(l, z)| l * z).sum();
        }
    }
}
