//! Fractional Brownian motion covariance, its time derivative, and the Gram
//! matrix of increments on a uniform grid.
//!
//! The increment Gram matrix is the discrete carrier of the Hilbert space
//! attached to fBm: for step functions `u`, `v` on the grid, `<u, v> = u' G v`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};

/// Problem instance: Hurst index, drift rate and time horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstModel {
    hurst: f64,
    theta: f64,
    horizon: f64,
}

impl HurstModel {
    pub fn new(hurst: f64, theta: f64, horizon: f64) -> Result<Self> {
        check_param("hurst", hurst, hurst > 0.0 && hurst < 1.0, "0 < hurst < 1")?;
        check_param("theta", theta, theta > 0.0, "theta > 0")?;
        check_param("horizon", horizon, horizon > 0.0, "horizon > 0")?;
        Ok(HurstModel {
            hurst,
            theta,
            horizon,
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Same H and theta, different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        HurstModel::new(self.hurst, self.theta, horizon)
    }

    /// Rejects models outside the rough regime `0 < H < 1/2`.
    pub fn require_rough(&self) -> Result<()> {
        check_param("hurst", self.hurst, self.hurst < 0.5, "0 < hurst < 1/2")
    }
}

/// `n` equal cells covering `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    n: usize,
    horizon: f64,
}

impl UniformGrid {
    pub fn new(n: usize, horizon: f64) -> Result<Self> {
        check_param("n", n as f64, n >= 1, "n >= 1")?;
        check_param("horizon", horizon, horizon > 0.0, "horizon > 0")?;
        Ok(UniformGrid { n, horizon })
    }

    pub fn for_model(model: &HurstModel, n: usize) -> Result<Self> {
        UniformGrid::new(n, model.horizon())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n as f64
    }

    /// Left edge of cell `i` (`i == n` gives the horizon).
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.horizon
        } else {
            i as f64 * self.step()
        }
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.step()
    }

    /// The grid with every cell split in two.
    pub fn refined(&self) -> Self {
        UniformGrid {
            n: 2 * self.n,
            horizon: self.horizon,
        }
    }

    pub(crate) fn check_model(&self, model: &HurstModel) -> Result<()> {
        let scale = self.horizon.abs().max(model.horizon().abs());
        if (self.horizon - model.horizon()).abs() > 1e-12 * scale {
            return Err(Error::HorizonMismatch {
                grid: self.horizon,
                model: model.horizon(),
            });
        }
        Ok(())
    }
}

/// `R_H(t, s) = (|t|^{2H} + |s|^{2H} - |t - s|^{2H}) / 2`.
pub fn cov(model: &HurstModel, t: f64, s: f64) -> f64 {
    let two_h = 2.0 * model.hurst();
    0.5 * (t.abs().powf(two_h) + s.abs().powf(two_h) - (t - s).abs().powf(two_h))
}

/// `∂R_H/∂t (t, s) = H (t^{2H-1} - sgn(t - s) |t - s|^{2H-1})`.
///
/// Undefined on the diagonal and at `t = 0`; callers integrating across those
/// points must treat the singularity themselves.
pub fn cov_partial_t(model: &HurstModel, t: f64, s: f64) -> Result<f64> {
    if t <= 0.0 || t == s || !t.is_finite() || !s.is_finite() {
        return Err(Error::Domain(format!(
            "dR/dt is singular or undefined at (t, s) = ({t}, {s})"
        )));
    }
    let h = model.hurst();
    let d = t - s;
    Ok(h * (t.powf(2.0 * h - 1.0) - d.signum() * d.abs().powf(2.0 * h - 1.0)))
}

/// Covariances `E[ΔB_i ΔB_j]` of fBm increments over the cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementGram {
    grid: UniformGrid,
    hurst: f64,
    entries: DMatrix<f64>,
}

impl IncrementGram {
    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: n,
            });
        }
        Ok(())
    }
}

/// Assembles the increment Gram matrix from four covariance evaluations per
/// entry. Only the upper triangle is evaluated; the lower one is its mirror.
pub fn increment_gram(model: &HurstModel, grid: &UniformGrid) -> Result<IncrementGram> {
    grid.check_model(model)?;
    let n = grid.n();
    let nodes: Vec<f64> = (0..=n).map(|i| grid.node(i)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    cov(model, nodes[i + 1], nodes[j + 1]) - cov(model, nodes[i + 1], nodes[j])
                        - cov(model, nodes[i], nodes[j + 1])
                        + cov(model, nodes[i], nodes[j])
                })
                .collect()
        })
        .collect();
    let mut entries = DMatrix::<f64>::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let j = i + k;
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(IncrementGram {
        grid: *grid,
        hurst: model.hurst(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn model(h: f64, t: f64) -> HurstModel {
        HurstModel::new(h, 1.0, t).unwrap()
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(HurstModel::new(0.0, 1.0, 1.0).is_err());
        assert!(HurstModel::new(1.0, 1.0, 1.0).is_err());
        assert!(HurstModel::new(0.3, 0.0, 1.0).is_err());
        assert!(HurstModel::new(0.3, 1.0, -2.0).is_err());
        assert!(HurstModel::new(f64::NAN, 1.0, 1.0).is_err());
        assert!(UniformGrid::new(0, 1.0).is_err());
        assert!(model(0.6, 1.0).require_rough().is_err());
    }

    #[test]
    fn grid_step_is_derived() {
        let g = UniformGrid::new(7, 3.0).unwrap();
        assert_eq!(g.step(), 3.0 / 7.0);
        assert_eq!(g.node(7), 3.0);
        assert_eq!(g.refined().n(), 14);
    }

    #[test]
    fn cov_examples() {
        for &h in &[0.1, 0.25, 0.4, 0.7] {
            assert!((cov(&model(h, 1.0), 1.0, 1.0) - 1.0).abs() < 1e-15);
        }
        let bm = model(0.5, 1.0);
        for &t in &[0.0, 0.3, 1.0, 2.5] {
            for &s in &[0.0, 0.2, 1.0, 4.0] {
                assert!((cov(&bm, t, s) - t.min(s)).abs() < 1e-14);
            }
        }
        // 0.5 * 2^0.6, computed independently in extended precision: 0.757858283255198...
        assert!((cov(&model(0.3, 2.0), 2.0, 1.0) - 0.757_858_283_255_198_8).abs() < 1e-14);
    }

    #[test]
    fn partial_derivative_examples() {
        let bm = model(0.5, 2.0);
        assert_eq!(cov_partial_t(&bm, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(cov_partial_t(&bm, 1.0, 2.0).unwrap(), 1.0);
        // 0.25 * (2^-0.5 - 1) = -0.0732233047033631...
        let v = cov_partial_t(&model(0.25, 2.0), 2.0, 1.0).unwrap();
        assert!((v + 0.073_223_304_703_363_1).abs() < 1e-15);
        assert!(cov_partial_t(&bm, 1.0, 1.0).is_err());
        assert!(cov_partial_t(&bm, 0.0, 1.0).is_err());
    }

    #[test]
    fn partial_derivative_matches_central_difference() {
        for &h in &[0.1, 0.25, 0.4, 0.75] {
            let m = model(h, 3.0);
            for &(t, s) in &[(0.5, 0.2), (1.2, 2.0), (2.9, 0.1), (0.15, 1.7)] {
                let eps = 1e-5;
                let fd = (cov(&m, t + eps, s) - cov(&m, t - eps, s)) / (2.0 * eps);
                let d = cov_partial_t(&m, t, s).unwrap();
                assert!((fd - d).abs() <= 1e-6 * d.abs().max(1e-3), "h={h} t={t} s={s}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn gram_examples() {
        for &h in &[0.2, 0.45] {
            let m = model(h, 2.0);
            let g = increment_gram(&m, &UniformGrid::new(1, 2.0).unwrap()).unwrap();
            assert!((g.get(0, 0) - 2f64.powf(2.0 * h)).abs() < 1e-14);
        }
        let bm = model(0.5, 3.0);
        let g = increment_gram(&bm, &UniformGrid::new(6, 3.0).unwrap()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert!((g.get(i, j) - expect).abs() < 1e-14);
            }
        }
        let g = increment_gram(&model(0.25, 1.0), &UniformGrid::new(4, 1.0).unwrap()).unwrap();
        assert!((g.entries().sum() - 1.0).abs() < 1e-14);
        assert!(increment_gram(&model(0.25, 1.0), &UniformGrid::new(4, 2.0).unwrap()).is_err());
    }

    #[test]
    fn negative_off_diagonal_for_rough_paths() {
        let g = increment_gram(&model(0.3, 5.0), &UniformGrid::new(40, 5.0).unwrap()).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                if i != j {
                    assert!(g.get(i, j) < 0.0, "({i},{j}) = {}", g.get(i, j));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn gram_is_symmetric_psd_with_known_diagonal_and_sum(
            h in 0.02f64..0.98, horizon in 0.1f64..50.0, n in 1usize..48
        ) {
            let m = model(h, horizon);
            let grid = UniformGrid::new(n, horizon).unwrap();
            let g = increment_gram(&m, &grid).unwrap();
            let e = g.entries();
            prop_assert_eq!(e, &e.transpose());
            let diag = grid.step().powf(2.0 * h);
            for i in 0..n {
                prop_assert!((e[(i, i)] - diag).abs() <= 1e-12 * diag.max(1.0));
            }
            let total = horizon.powf(2.0 * h);
            prop_assert!((e.sum() - total).abs() <= 1e-10 * total.max(1.0));
            let eig = SymmetricEigen::new(e.clone()).eigenvalues;
            let max = eig.max();
            prop_assert!(eig.min() >= -1e-10 * max);
        }

        #[test]
        fn gram_refinement_aggregates_exactly(h in 0.05f64..0.95, horizon in 0.5f64..20.0, n in 1usize..24) {
            let m = model(h, horizon);
            let coarse = increment_gram(&m, &UniformGrid::new(n, horizon).unwrap()).unwrap();
            let fine = increment_gram(&m, &UniformGrid::new(2 * n, horizon).unwrap()).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let block = fine.get(2 * i, 2 * j) + fine.get(2 * i + 1, 2 * j)
                        + fine.get(2 * i, 2 * j + 1) + fine.get(2 * i + 1, 2 * j + 1);
                    prop_assert!((block - coarse.get(i, j)).abs() < 1e-12 * horizon.powf(2.0 * h).max(1.0));
                }
            }
        }
    }
}
