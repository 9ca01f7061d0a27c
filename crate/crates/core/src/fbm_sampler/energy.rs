//! Two-sample energy-distance test with a permutation null.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::ReplicateRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTest {
    /// `n₁n₂/(n₁+n₂) · E`, with `E` the energy distance.
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: usize,
}

/// Tests whether two samples of `dim`-vectors (row-major) share a law.
pub fn energy_distance_test(
    x: &[f64],
    y: &[f64],
    dim: usize,
    permutations: usize,
    seed: u64,
) -> Result<EnergyTest> {
    if dim == 0 || !x.len().is_multiple_of(dim) || !y.len().is_multiple_of(dim) {
        return Err(Error::Domain("sample length is not a multiple of dim".into()));
    }
    let (n1, n2) = (x.len() / dim, y.len() / dim);
    if n1 < 2 || n2 < 2 {
        return Err(Error::Domain("each sample needs at least two points".into()));
    }
    let total = n1 + n2;
    let pooled = DMatrix::from_row_iterator(total, dim, x.iter().chain(y).copied());
    let gram = &pooled * pooled.transpose();
    let mut dist = vec![0.0; total * total];
    for i in 0..total {
        for j in 0..total {
            let d2 = gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)];
            dist[i * total + j] = d2.max(0.0).sqrt();
        }
    }
    let stat = |labels: &[bool]| {
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for i in 0..total {
            let row = &dist[i * total..(i + 1) * total];
            let (mut rx, mut ry) = (0.0, 0.0);
            for (d, &lj) in row.iter().zip(labels) {
                if lj {
                    ry += d;
                } else {
                    rx += d;
                }
            }
            if labels[i] {
                syy += ry;
                sxy += rx;
            } else {
                sxx += rx;
            }
        }
        let (a, b) = (n1 as f64, n2 as f64);
        let e = 2.0 * sxy / (a * b) - sxx / (a * a) - syy / (b * b);
        a * b / (a + b) * e
    };
    let mut labels: Vec<bool> = (0..total).map(|i| i >= n1).collect();
    let observed = stat(&labels);
    let mut rng = ReplicateRng::new(seed, u32::MAX, 0);
    let mut exceed = 0usize;
    for _ in 0..permutations {
        for i in (1..total).rev() {
            labels.swap(i, rng.below(i + 1));
        }
        if stat(&labels) >= observed {
            exceed += 1;
        }
    }
    Ok(EnergyTest {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (1 + permutations) as f64,
        permutations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normals(seed: u32, k: usize, shift: f64) -> Vec<f64> {
        let mut r = ReplicateRng::new(3, seed, 0);
        (0..k).map(|_| r.normal() + shift).collect()
    }

    #[test]
    fn same_law_is_not_rejected() {
        let t = energy_distance_test(&normals(1, 600, 0.0), &normals(2, 600, 0.0), 3, 199, 5).unwrap();
        assert!(t.p_value > 0.01, "{t:?}");
    }

    #[test]
    fn shifted_law_is_rejected() {
        let t = energy_distance_test(&normals(1, 600, 0.0), &normals(2, 600, 0.5), 3, 199, 5).unwrap();
        assert!(t.p_value <= 0.01, "{t:?}");
        assert!(t.statistic > 0.0);
    }

    #[test]
    fn shape_errors() {
        assert!(energy_distance_test(&[1.0, 2.0, 3.0], &[1.0, 2.0], 2, 9, 0).is_err());
        assert!(energy_distance_test(&[1.0], &[1.0, 2.0], 1, 9, 0).is_err());
    }
}
