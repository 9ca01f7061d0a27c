//! Inner products, norms and 1-contractions in the fBm Hilbert space and its
//! tensor square.
//!
//! Three independent routes compute the same inner product so that each can
//! check the others:
//!
//! * the Gram route ([`inner_h`], [`inner_h2`], [`contract1`]) works on step
//!   functions through the increment Gram matrix;
//! * the boundary-corrected quadrature route ([`inner_h_jolis`]) works on
//!   windowed smooth functions `h * 1_[0,T]` and integrates the derivative of
//!   the covariance against the signed measure of `h`, with the two endpoint
//!   atoms handled as separate one-dimensional integrals;
//! * the spectral route ([`inner_h_spectral`]) integrates Fourier transforms of
//!   step functions against `|xi|^{1-2H}`.

mod jolis;
mod spectral;

use std::borrow::Cow;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::frac_cov::{IncrementGram, UniformGrid};

pub use jolis::{inner_h_distributional, inner_h_jolis, SmoothWindowed1D};
pub use spectral::{inner_h_spectral, spectral_constant, SpectralConfig, SpectralValue};

/// A step function on a uniform grid: `values[i]` on cell `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel1D {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl StepKernel1D {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::DimensionMismatch {
                expected: grid.n(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("step kernel value at cell {i}")));
        }
        Ok(StepKernel1D { grid, values })
    }

    /// Samples `f` at cell midpoints.
    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.n()).map(|i| f(grid.midpoint(i))).collect();
        StepKernel1D::new(grid, values)
    }

    /// Indicator of `[0, a)`; `a` is rounded to the nearest grid node.
    pub fn indicator(grid: UniformGrid, a: f64) -> Result<Self> {
        let k = (a / grid.step()).round().clamp(0.0, grid.n() as f64) as usize;
        let values = (0..grid.n()).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
        StepKernel1D::new(grid, values)
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        StepKernel1D {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Jumps of the step function at the grid nodes `t_0, ..., t_n`, i.e. the
    /// atoms of its Lebesgue-Stieltjes measure.
    pub fn jumps(&self) -> Vec<f64> {
        let n = self.values.len();
        let mut c = Vec::with_capacity(n + 1);
        let mut prev = 0.0;
        for &v in &self.values {
            c.push(v - prev);
            prev = v;
        }
        c.push(-prev);
        c
    }

    fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

/// A kernel on `[0, T]^2` that is constant on grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel2D {
    grid: UniformGrid,
    values: DMatrix<f64>,
    symmetric: bool,
}

impl StepKernel2D {
    pub fn new(grid: UniformGrid, values: DMatrix<f64>) -> Result<Self> {
        let n = grid.n();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if values.nrows() != n { values.nrows() } else { values.ncols() },
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("step kernel entry".into()));
        }
        let symmetric = is_symmetric(&values);
        Ok(StepKernel2D {
            grid,
            values,
            symmetric,
        })
    }

    /// Samples `f(t, s)` at cell midpoints.
    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = grid.n();
        let mids: Vec<f64> = (0..n).map(|i| grid.midpoint(i)).collect();
        let values = DMatrix::from_fn(n, n, |i, j| f(mids[i], mids[j]));
        StepKernel2D::new(grid, values)
    }

    /// `u ⊗ u`.
    pub fn outer(u: &StepKernel1D) -> Self {
        let v = u.as_vector();
        StepKernel2D {
            grid: u.grid,
            values: &v * v.transpose(),
            symmetric: true,
        }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &StepKernel2D, b: f64) -> Result<Self> {
        if other.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        let values = &self.values * a + &other.values * b;
        StepKernel2D::new(self.grid, values)
    }

    /// The symmetrization `(K + K^T) / 2`; borrowed when already symmetric.
    pub fn symmetrized(&self) -> Cow<'_, StepKernel2D> {
        if self.symmetric {
            Cow::Borrowed(self)
        } else {
            let values = (&self.values + self.values.transpose()) * 0.5;
            Cow::Owned(StepKernel2D {
                grid: self.grid,
                values,
                symmetric: true,
            })
        }
    }

    /// Symmetrizes with a warning; chaos kernels are symmetric, so an
    /// asymmetric one here points at a caller bug.
    pub(crate) fn as_chaos_kernel(&self, what: &str) -> Cow<'_, StepKernel2D> {
        if !self.symmetric {
            log::warn!("{what}: asymmetric kernel symmetrized before use");
        }
        self.symmetrized()
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)]))
}

fn check_same(n: usize, others: &[usize]) -> Result<()> {
    for &k in others {
        if k != n {
            return Err(Error::DimensionMismatch { expected: n, found: k });
        }
    }
    Ok(())
}

/// `u' G v`.
pub fn inner_h(u: &StepKernel1D, v: &StepKernel1D, gram: &IncrementGram) -> Result<f64> {
    gram.check_dim(u.values.len())?;
    gram.check_dim(v.values.len())?;
    let gv = gram.entries() * v.as_vector();
    Ok(u.as_vector().dot(&gv))
}

/// Frobenius inner product `sum_ij X_ij Y_ij`.
pub(crate) fn frobenius(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

/// `trace(M N)` for square matrices, i.e. `sum_ij M_ij N_ji`.
pub(crate) fn trace_of_product(m: &DMatrix<f64>, n: &DMatrix<f64>) -> f64 {
    frobenius(m, &n.transpose())
}

/// Inner product in the tensor square:
/// `sum_{ijkl} A_ij G_ik G_jl B_kl = trace(G A G B^T)`.
///
/// Evaluated with two matrix products. Contractions of different kernels are
/// not symmetric, so the inputs are used as given.
pub fn inner_h2(a: &StepKernel2D, b: &StepKernel2D, gram: &IncrementGram) -> Result<f64> {
    check_same(gram.n(), &[a.n(), b.n()])?;
    let g = gram.entries();
    let ga = g * &a.values;
    if std::ptr::eq(a, b) && a.symmetric {
        return Ok(trace_of_product(&ga, &ga));
    }
    let gbt = g * b.values.transpose();
    Ok(trace_of_product(&ga, &gbt))
}

/// `‖A‖²` in the tensor square.
pub fn norm_h2_squared(a: &StepKernel2D, gram: &IncrementGram) -> Result<f64> {
    inner_h2(a, a, gram)
}

/// The 1-contraction `(A ⊗_1 B)(t1, t2) = <A(t1, .), B(t2, .)>`, i.e. `A G B^T`.
pub fn contract1(a: &StepKernel2D, b: &StepKernel2D, gram: &IncrementGram) -> Result<StepKernel2D> {
    check_same(gram.n(), &[a.n(), b.n()])?;
    let a = a.as_chaos_kernel("contract1");
    let b = b.as_chaos_kernel("contract1");
    let agb = &a.values * (gram.entries() * b.values.transpose());
    StepKernel2D::new(a.grid, agb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac_cov::{cov, increment_gram, HurstModel};
    use proptest::prelude::*;

    fn setup(h: f64, t: f64, n: usize) -> (HurstModel, UniformGrid, IncrementGram) {
        let m = HurstModel::new(h, 1.0, t).unwrap();
        let grid = UniformGrid::new(n, t).unwrap();
        let g = increment_gram(&m, &grid).unwrap();
        (m, grid, g)
    }

    fn random_sym(grid: UniformGrid, seed: u64) -> StepKernel2D {
        let n = grid.n();
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        StepKernel2D::new(grid, m).unwrap()
    }

    /// Direct four-index sum, the reference for the matrix-product route.
    fn brute_inner_h2(a: &StepKernel2D, b: &StepKernel2D, g: &IncrementGram) -> f64 {
        let n = a.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += a.values[(i, j)] * g.get(i, k) * g.get(j, l) * b.values[(k, l)];
                    }
                }
            }
        }
        s
    }

    #[test]
    fn indicator_norms() {
        for &h in &[0.1, 0.3, 0.5] {
            let (m, grid, g) = setup(h, 3.0, 12);
            let one = StepKernel1D::indicator(grid, 3.0).unwrap();
            assert!((inner_h(&one, &one, &g).unwrap() - 3f64.powf(2.0 * h)).abs() < 1e-12);
            let a = StepKernel1D::indicator(grid, 1.0).unwrap();
            let b = StepKernel1D::indicator(grid, 2.5).unwrap();
            assert!((inner_h(&a, &b, &g).unwrap() - cov(&m, 1.0, 2.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatches_are_errors() {
        let (_, grid, g) = setup(0.3, 1.0, 4);
        let other = UniformGrid::new(5, 1.0).unwrap();
        let u = StepKernel1D::indicator(grid, 1.0).unwrap();
        let w = StepKernel1D::indicator(other, 1.0).unwrap();
        assert!(matches!(inner_h(&u, &w, &g), Err(Error::DimensionMismatch { .. })));
        let a = StepKernel2D::outer(&u);
        let b = StepKernel2D::outer(&w);
        assert!(inner_h2(&a, &b, &g).is_err());
        assert!(contract1(&a, &b, &g).is_err());
        assert!(StepKernel1D::new(grid, vec![1.0; 3]).is_err());
        assert!(StepKernel1D::new(grid, vec![f64::NAN; 4]).is_err());
    }

    #[test]
    fn tensor_power_and_rank_one_identities() {
        let (_, grid, g) = setup(0.25, 2.0, 16);
        let u = StepKernel1D::from_fn(grid, |t| (-t).exp() + 0.3 * t).unwrap();
        let uu = StepKernel2D::outer(&u);
        let n1 = inner_h(&u, &u, &g).unwrap();
        let n2 = inner_h2(&uu, &uu, &g).unwrap();
        assert!((n2 - n1 * n1).abs() < 1e-12 * n1 * n1);
        let c = contract1(&uu, &uu, &g).unwrap();
        let expect = uu.values() * n1;
        assert!((c.values() - expect).amax() < 1e-12);
    }

    #[test]
    fn identity_gram_reduces_to_frobenius_and_plain_products() {
        // H = 1/2 with unit step: G = I
        let (_, grid, g) = setup(0.5, 6.0, 6);
        assert!((g.entries() - DMatrix::<f64>::identity(6, 6)).amax() < 1e-14);
        let a = random_sym(grid, 1);
        let b = random_sym(grid, 2);
        let got = inner_h2(&a, &b, &g).unwrap();
        assert!((got - frobenius(a.values(), b.values())).abs() < 1e-12);
        let c = contract1(&a, &b, &g).unwrap();
        assert!((c.values() - a.values() * b.values().transpose()).amax() < 1e-12);
    }

    #[test]
    fn matrix_route_matches_brute_force_four_index_sum() {
        for (k, &h) in [0.15, 0.35, 0.45].iter().enumerate() {
            let (_, grid, g) = setup(h, 1.7, 9 + k);
            let a = random_sym(grid, 10 + k as u64);
            let b = random_sym(grid, 20 + k as u64);
            let direct = brute_inner_h2(&a, &b, &g);
            assert!((inner_h2(&a, &b, &g).unwrap() - direct).abs() < 1e-10);
            // contraction followed by the tensor inner product
            let c = contract1(&a, &b, &g).unwrap();
            let cc = brute_inner_h2(&c, &c, &g);
            assert!((inner_h2(&c, &c, &g).unwrap() - cc).abs() < 1e-10);
        }
    }

    #[test]
    fn contraction_norm_is_bounded_by_squared_norm() {
        for seed in 0..100u64 {
            let n = 4 + (seed as usize % 29);
            let h = 0.05 + 0.4 * (seed as f64 / 100.0);
            let (_, grid, g) = setup(h, 1.0 + seed as f64 / 10.0, n);
            let a = random_sym(grid, seed);
            let na = inner_h2(&a, &a, &g).unwrap();
            let c = contract1(&a, &a, &g).unwrap();
            assert!(c.is_symmetric() || (c.values() - c.values().transpose()).amax() < 1e-12);
            let nc = inner_h2(&c, &c, &g).unwrap().sqrt();
            assert!(nc <= na * (1.0 + 1e-12), "seed {seed}: {nc} > {na}");
        }
    }

    #[test]
    fn asymmetric_chaos_kernels_are_symmetrized() {
        let (_, grid, g) = setup(0.3, 1.0, 5);
        let mut m = DMatrix::zeros(5, 5);
        m[(0, 3)] = 1.0;
        let a = StepKernel2D::new(grid, m).unwrap();
        assert!(!a.is_symmetric());
        let s = a.symmetrized();
        assert!(s.is_symmetric());
        assert_eq!(s.values()[(3, 0)], 0.5);
        let c = contract1(&a, &a, &g).unwrap();
        let c_sym = contract1(&s, &s, &g).unwrap();
        assert_eq!(c.values(), c_sym.values());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn cauchy_schwarz_and_symmetry(h in 0.05f64..0.49, n in 2usize..20, s1 in 0u64..1000, s2 in 0u64..1000) {
            let (_, grid, g) = setup(h, 2.0, n);
            let a = random_sym(grid, s1);
            let b = random_sym(grid, s2);
            let ab = inner_h2(&a, &b, &g).unwrap();
            let ba = inner_h2(&b, &a, &g).unwrap();
            let aa = inner_h2(&a, &a, &g).unwrap();
            let bb = inner_h2(&b, &b, &g).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-10 * (aa * bb).sqrt());
            prop_assert!(aa >= 0.0 && bb >= 0.0);
            prop_assert!(ab * ab <= aa * bb * (1.0 + 1e-10));
            let u = StepKernel1D::new(grid, a.values().column(0).iter().copied().collect()).unwrap();
            let v = StepKernel1D::new(grid, b.values().column(0).iter().copied().collect()).unwrap();
            let uv = inner_h(&u, &v, &g).unwrap();
            let uu = inner_h(&u, &u, &g).unwrap();
            let vv = inner_h(&v, &v, &g).unwrap();
            prop_assert!(uu >= 0.0);
            prop_assert!(uv * uv <= uu * vv * (1.0 + 1e-10));
            prop_assert!((uv - inner_h(&v, &u, &g).unwrap()).abs() <= 1e-12 * (uu * vv).sqrt().max(1e-300));
        }
    }
}
