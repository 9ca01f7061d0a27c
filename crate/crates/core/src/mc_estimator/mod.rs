//! Monte Carlo for the normalized drift estimator: second-chaos functionals on
//! sampled increments, the ratio statistic, a discrete least-squares
//! comparison estimator and Kolmogorov distances to the normal law.

mod kolmogorov;
mod run;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm_sampler::autocov_stationary;
use crate::frac_cov::{HurstModel, IncrementGram, UniformGrid};
use crate::hilbert_quad::StepKernel2D;
use crate::kernel_limits::{bt_gram, bt_quadrature, KernelFamily};

pub use kolmogorov::{dkw_radius, kolmogorov_distance, kolmogorov_distance_normal};
pub use run::{
    mc_run, mc_run_with_batches, BerryEsseenPoint, BerryEsseenReport, DiscretizationBias, ReplicationPlan,
    StatSample,
};

/// Denominators smaller than this in magnitude exclude the replicate.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

const BT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    ChaosRatio,
    DiscreteLse,
}

/// `Σ_{i,j} K(i,j) (ΔB_i ΔB_j - G(i,j))`.
pub fn i2_discrete(kernel: &StepKernel2D, db: &[f64], gram: &IncrementGram) -> Result<f64> {
    let n = kernel.n();
    gram.check_dim(n)?;
    if db.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: db.len(),
        });
    }
    let k = kernel.as_chaos_kernel("i2_discrete");
    let k = k.values();
    let g = gram.entries();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += k[(i, j)] * (db[i] * db[j] - g[(i, j)]);
        }
    }
    Ok(acc)
}

/// `I₂(f_T)`, `I₂(g_T)` and `I₂(h_T)` of one increment vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChaosParts {
    pub i2_f: f64,
    pub i2_g: f64,
    pub i2_h: f64,
}

/// Precomputed pieces for evaluating the chaos functionals in `O(n)`.
///
/// On the midpoint grid `f_T = c r^{|i-j|}` with `r = e^{-θΔ}` and
/// `h_T = v v'`, so the quadratic form in `f_T` is a first-order recursion and
/// the one in `h_T` a squared dot product.
#[derive(Debug, Clone)]
pub struct ChaosRatio {
    model: HurstModel,
    grid: UniformGrid,
    f_scale: f64,
    decay: f64,
    v: Vec<f64>,
    trace_eg: f64,
    v_g_v: f64,
    alpha: f64,
    beta: f64,
    b_t: f64,
}

impl ChaosRatio {
    pub fn new(model: &HurstModel, grid: &UniformGrid) -> Result<Self> {
        grid.check_model(model)?;
        let family = KernelFamily::new(*model)?;
        let n = grid.n();
        let (theta, big_t) = (model.theta(), model.horizon());
        let decay = (-theta * grid.step()).exp();
        let gamma: Vec<f64> = (0..n).map(|k| autocov_stationary(model, grid, k)).collect();
        let mut trace_eg = n as f64 * gamma[0];
        let mut rk = 1.0;
        for (k, g) in gamma.iter().enumerate().skip(1) {
            rk *= decay;
            trace_eg += 2.0 * (n - k) as f64 * rk * g;
        }
        let v: Vec<f64> = (0..n).map(|i| (-theta * (big_t - grid.midpoint(i))).exp()).collect();
        let mut v_g_v = 0.0;
        for i in 0..n {
            let mut row = gamma[0] * v[i];
            for j in 0..i {
                row += 2.0 * gamma[i - j] * v[j];
            }
            v_g_v += v[i] * row;
        }
        Ok(ChaosRatio {
            model: *model,
            grid: *grid,
            f_scale: family.f_scale(),
            decay,
            v,
            trace_eg,
            v_g_v,
            alpha: family.g_alpha(),
            beta: family.g_beta(),
            b_t: bt_quadrature(model, BT_TOL)?.value,
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn model(&self) -> &HurstModel {
        &self.model
    }

    /// `b_T` by quadrature, as used in the denominator.
    pub fn b_t(&self) -> f64 {
        self.b_t
    }

    /// `b_T` on this grid, for diagnostics.
    pub fn b_t_gram(&self) -> Result<f64> {
        bt_gram(&self.model, &self.grid)
    }

    pub fn parts(&self, db: &[f64]) -> Result<ChaosParts> {
        let n = self.grid.n();
        if db.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: db.len(),
            });
        }
        let r = self.decay;
        let (mut q, mut tail, mut prev, mut vdb) = (0.0, 0.0, 0.0, 0.0);
        for (x, v) in db.iter().zip(&self.v) {
            tail = r * (tail + prev);
            q += x * (x + 2.0 * tail);
            prev = *x;
            vdb += v * x;
        }
        let i2_f = self.f_scale * (q - self.trace_eg);
        let i2_h = vdb * vdb - self.v_g_v;
        Ok(ChaosParts {
            i2_f,
            i2_g: self.alpha * i2_f - self.beta * i2_h,
            i2_h,
        })
    }

    /// Numerator and denominator of `I₂(f_T) / (I₂(g_T) + b_T)`.
    pub fn fraction(&self, db: &[f64]) -> Result<(f64, f64)> {
        let p = self.parts(db)?;
        Ok((p.i2_f, p.i2_g + self.b_t))
    }

    pub fn ratio(&self, db: &[f64]) -> Result<f64> {
        let (num, den) = self.fraction(db)?;
        if den.abs() < DENOMINATOR_FLOOR {
            return Err(Error::ZeroDenominator(format!("I2(g_T) + b_T = {den:e}")));
        }
        Ok(num / den)
    }
}

/// `I₂(f_T) / (I₂(g_T) + b_T)` for one increment vector.
pub fn ratio_statistic(db: &[f64], model: &HurstModel, grid: &UniformGrid) -> Result<f64> {
    ChaosRatio::new(model, grid)?.ratio(db)
}

/// `X_0 = 0`, `X_{i+1} = e^{-θΔ} X_i + e^{-θΔ/2} ΔB_i`.
pub fn fou_path(db: &[f64], model: &HurstModel, grid: &UniformGrid) -> Result<Vec<f64>> {
    grid.check_model(model)?;
    if db.len() != grid.n() {
        return Err(Error::DimensionMismatch {
            expected: grid.n(),
            found: db.len(),
        });
    }
    let decay = (-model.theta() * grid.step()).exp();
    let weight = decay.sqrt();
    let mut path = Vec::with_capacity(db.len() + 1);
    let mut x = 0.0;
    path.push(x);
    for d in db {
        x = decay * x + weight * d;
        path.push(x);
    }
    Ok(path)
}

/// `-Σ X_{i-1}(X_i - X_{i-1}) / (Δ Σ X_i²)`, sums over `i = 1..n`.
pub fn lse_discrete(path: &[f64], step: f64) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: path.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for w in path.windows(2) {
        num += w[0] * (w[1] - w[0]);
        den += w[1] * w[1];
    }
    den *= step;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::ZeroDenominator(format!("Δ Σ X² = {den}")));
    }
    Ok(-num / den)
}

/// `sqrt(T / (θ σ²)) (θ̂_n - θ)` from the discrete estimator.
pub fn lse_statistic(db: &[f64], model: &HurstModel, grid: &UniformGrid, sigma2: f64) -> Result<f64> {
    let path = fou_path(db, model, grid)?;
    let est = lse_discrete(&path, grid.step())?;
    Ok((model.horizon() / (model.theta() * sigma2)).sqrt() * (est - model.theta()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm_sampler::{sample_circulant, SamplerConfig, SamplerMethod};
    use crate::frac_cov::increment_gram;

    fn setup(h: f64, t: f64, n: usize) -> (HurstModel, UniformGrid) {
        let m = HurstModel::new(h, 1.0, t).unwrap();
        (m, UniformGrid::for_model(&m, n).unwrap())
    }

    #[test]
    fn i2_discrete_zero_kernel_and_mismatch() {
        let (m, grid) = setup(0.3, 2.0, 8);
        let g = increment_gram(&m, &grid).unwrap();
        let zero = StepKernel2D::from_fn(grid, |_, _| 0.0).unwrap();
        assert_eq!(i2_discrete(&zero, &[1.0; 8], &g).unwrap(), 0.0);
        assert!(i2_discrete(&zero, &[1.0; 7], &g).is_err());
    }

    #[test]
    fn structured_parts_match_dense_double_sums() {
        let (m, grid) = setup(0.25, 6.0, 96);
        let g = increment_gram(&m, &grid).unwrap();
        let k = KernelFamily::new(m).unwrap().grid_kernels(&grid).unwrap();
        let cr = ChaosRatio::new(&m, &grid).unwrap();
        let batch = sample_circulant(&SamplerConfig::new(SamplerMethod::Circulant, 4, 96, m), 3).unwrap();
        for row in batch.rows() {
            let p = cr.parts(row).unwrap();
            let f = i2_discrete(&k.f, row, &g).unwrap();
            let gg = i2_discrete(&k.g, row, &g).unwrap();
            let h = i2_discrete(&k.h, row, &g).unwrap();
            assert!((p.i2_f - f).abs() < 1e-10 * (1.0 + f.abs()), "{} {}", p.i2_f, f);
            assert!((p.i2_g - gg).abs() < 1e-10 * (1.0 + gg.abs()));
            assert!((p.i2_h - h).abs() < 1e-10 * (1.0 + h.abs()));
        }
    }

    #[test]
    fn zero_increments_leave_only_the_centering() {
        let (m, grid) = setup(0.25, 5.0, 50);
        let g = increment_gram(&m, &grid).unwrap();
        let k = KernelFamily::new(m).unwrap().grid_kernels(&grid).unwrap();
        let cr = ChaosRatio::new(&m, &grid).unwrap();
        let (num, den) = cr.fraction(&[0.0; 50]).unwrap();
        let tr = |a: &StepKernel2D| -a.values().component_mul(g.entries()).sum();
        assert!((num - tr(&k.f)).abs() < 1e-10 * num.abs());
        assert!((den - tr(&k.g) - cr.b_t()).abs() < 1e-10 * (1.0 + den.abs()));
        let r = ratio_statistic(&[0.0; 50], &m, &grid).unwrap();
        assert!((r - num / den).abs() < 1e-12 * r.abs());
        assert!((cr.b_t_gram().unwrap() - cr.b_t()).abs() < 0.05 * cr.b_t());
        assert!(ChaosRatio::new(&HurstModel::new(0.6, 1.0, 5.0).unwrap(), &grid).is_err());
    }

    #[test]
    fn fou_path_limits() {
        let m = HurstModel::new(0.3, 1e-12, 1.0).unwrap();
        let grid = UniformGrid::new(4, 1.0).unwrap();
        let db = [0.5, -1.0, 0.25, 2.0];
        let p = fou_path(&db, &m, &grid).unwrap();
        let mut cum = 0.0;
        assert_eq!(p[0], 0.0);
        for (x, d) in p[1..].iter().zip(db) {
            cum += d;
            assert!((x - cum).abs() < 1e-11);
        }
        let m = HurstModel::new(0.3, 2.0, 1.0).unwrap();
        assert!(fou_path(&[0.0; 4], &m, &grid).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lse_discrete_examples() {
        assert_eq!(lse_discrete(&[0.0, 1.5, 1.5, 1.5], 0.1).unwrap(), 0.0);
        let (theta, step, x0) = (0.8, 0.05, 2.0);
        let path: Vec<f64> = (0..400).map(|i| x0 * (-theta * step * i as f64).exp()).collect();
        let exact = ((2.0 * theta * step).exp() - (theta * step).exp()) / step;
        assert!((lse_discrete(&path, step).unwrap() - exact).abs() < 1e-12);
        assert!(((1.0 - (-theta * step).exp()) / step - exact).abs() < 0.1);
        assert!(lse_discrete(&[0.0, 0.0, 0.0], 0.1).is_err());
        assert!(lse_discrete(&[1.0], 0.1).is_err());
    }
}
