use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::frac_cov::{HurstModel, UniformGrid};
use crate::quad::{adaptive, PowerRule, Tolerance};

use super::StepKernel1D;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `h * 1_[0,T]` for a C^1 function `h` supplied with its derivative.
#[derive(Clone)]
pub struct SmoothWindowed1D {
    horizon: f64,
    h: RealFn,
    h_prime: RealFn,
}

impl fmt::Debug for SmoothWindowed1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothWindowed1D")
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

const PROBES: usize = 17;

impl SmoothWindowed1D {
    /// Checks `h_prime` against a five-point difference of `h` on a probe grid.
    pub fn new(
        horizon: f64,
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
        h_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        crate::error::check_param("horizon", horizon, horizon > 0.0, "> 0")?;
        let e = 1e-3 * horizon;
        for k in 0..PROBES {
            let t = 2.0 * e + (horizon - 4.0 * e) * k as f64 / (PROBES - 1) as f64;
            let fd = (h(t - 2.0 * e) - 8.0 * h(t - e) + 8.0 * h(t + e) - h(t + 2.0 * e)) / (12.0 * e);
            let d = h_prime(t);
            if !fd.is_finite() || !d.is_finite() {
                return Err(Error::NonFinite(format!("kernel or derivative at t = {t}")));
            }
            if (fd - d).abs() > 1e-5 * d.abs().max(1.0) {
                return Err(Error::Domain(format!(
                    "derivative mismatch at t = {t}: supplied {d}, finite difference {fd}"
                )));
            }
        }
        Ok(SmoothWindowed1D {
            horizon,
            h: Arc::new(h),
            h_prime: Arc::new(h_prime),
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.h)(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        (self.h_prime)(t)
    }

    /// Midpoint sampling onto a grid over the same horizon.
    pub fn to_step(&self, grid: UniformGrid) -> Result<StepKernel1D> {
        if (grid.horizon() - self.horizon).abs() > 1e-12 * self.horizon {
            return Err(Error::HorizonMismatch {
                grid: grid.horizon(),
                model: self.horizon,
            });
        }
        StepKernel1D::from_fn(grid, |t| (self.h)(t))
    }
}

/// `<f, g>` for windowed smooth `f`, `g` by boundary-corrected quadrature.
///
/// With `F(s) = ∫_0^T f(t) ∂_s R(s, t) dt`, the measure of `g` has density
/// `g'` plus atoms `g(0)` at 0 and `-g(T)` at T, so
/// `<f, g> = -∫ g'(s) F(s) ds + g(T) F(T) - g(0) F(0)`.
/// `F` is split into three weakly singular integrals with weight
/// `z^{2H-1}`, each done by a Gauss-Jacobi endpoint panel.
/// `quad_n` is the Gauss-Jacobi order.
pub fn inner_h_jolis(
    f: &SmoothWindowed1D,
    g: &SmoothWindowed1D,
    model: &HurstModel,
    quad_n: usize,
) -> Result<f64> {
    check_horizon(f.horizon, model)?;
    jolis_core(&|t| f.eval(t), g, model, quad_n)
}

/// The same boundary-corrected formula with an arbitrary bounded `f`.
///
/// Experimental: convergence is only guaranteed when `f` is of the windowed
/// smooth form; for discontinuous `f` the inner integrals fall back to
/// adaptive bisection and may exhaust their panel budget.
pub fn inner_h_distributional(
    f: &dyn Fn(f64) -> f64,
    g: &SmoothWindowed1D,
    model: &HurstModel,
    quad_n: usize,
) -> Result<f64> {
    jolis_core(f, g, model, quad_n)
}

fn check_horizon(horizon: f64, model: &HurstModel) -> Result<()> {
    if (horizon - model.horizon()).abs() > 1e-12 * model.horizon() {
        return Err(Error::HorizonMismatch {
            grid: horizon,
            model: model.horizon(),
        });
    }
    Ok(())
}

fn jolis_core(
    f: &(dyn Fn(f64) -> f64 + '_),
    g: &SmoothWindowed1D,
    model: &HurstModel,
    quad_n: usize,
) -> Result<f64> {
    check_horizon(g.horizon, model)?;
    let h = model.hurst();
    let t_end = model.horizon();
    let rule = PowerRule::new(2.0 * h - 1.0, quad_n);
    let inner_tol = Tolerance::new(1e-15, 1e-12);

    let a_f = rule.integrate(f, 0.0, t_end, inner_tol)?.value;
    let big_f = |s: f64| -> Result<f64> {
        let lower = rule.integrate(|z| f(s - z), 0.0, s, inner_tol)?.value;
        let upper = rule.integrate(|z| f(s + z), 0.0, t_end - s, inner_tol)?.value;
        Ok(h * (a_f + lower - upper))
    };

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let interior = adaptive(
        |s| match big_f(s) {
            Ok(v) => g.derivative(s) * v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        t_end,
        Tolerance::new(1e-14, 1e-10),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let interior = interior?.value;
    let f_end = big_f(t_end)?;
    let f_start = big_f(0.0)?;
    Ok(-interior + g.eval(t_end) * f_end - g.eval(0.0) * f_start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac_cov::{cov, increment_gram};
    use crate::hilbert_quad::inner_h;

    fn exp_kernel(t_end: f64, rate: f64) -> SmoothWindowed1D {
        SmoothWindowed1D::new(
            t_end,
            move |t| (-rate * (t_end - t)).exp(),
            move |t| rate * (-rate * (t_end - t)).exp(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_wrong_derivative() {
        let r = SmoothWindowed1D::new(1.0, |t| t * t, |t| t);
        assert!(matches!(r, Err(Error::Domain(_))));
        assert!(SmoothWindowed1D::new(1.0, |t| t * t, |t| 2.0 * t).is_ok());
    }

    #[test]
    fn constant_kernel_gives_variance() {
        for &h in &[0.1, 0.25, 0.4] {
            let m = HurstModel::new(h, 1.0, 2.0).unwrap();
            let one = SmoothWindowed1D::new(2.0, |_| 1.0, |_| 0.0).unwrap();
            let v = inner_h_jolis(&one, &one, &m, 16).unwrap();
            assert!((v - 2f64.powf(2.0 * h)).abs() < 1e-10, "H={h}: {v}");
        }
    }

    #[test]
    fn linear_kernel_against_closed_form() {
        let h = 0.3;
        let t_end = 1.5;
        let m = HurstModel::new(h, 1.0, t_end).unwrap();
        let lin = SmoothWindowed1D::new(t_end, |t| t, |_| 1.0).unwrap();
        let one = SmoothWindowed1D::new(t_end, |_| 1.0, |_| 0.0).unwrap();
        let v = inner_h_jolis(&lin, &one, &m, 16).unwrap();
        // E[∫ t dB_t · B_T] = T R(T, T) - ∫_0^T R(t, T) dt = T^{2H+1} / 2
        let expect = 0.5 * t_end.powf(2.0 * h + 1.0);
        assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
        let swapped = inner_h_jolis(&one, &lin, &m, 16).unwrap();
        assert!((swapped - expect).abs() < 1e-9);
    }

    #[test]
    fn brownian_case_is_l2_product() {
        let m = HurstModel::new(0.5, 1.0, 3.0).unwrap();
        let f = exp_kernel(3.0, 1.0);
        let g = exp_kernel(3.0, 0.5);
        let v = inner_h_jolis(&f, &g, &m, 16).unwrap();
        let expect = (1.0 - (-4.5f64).exp()) / 1.5;
        assert!((v - expect).abs() < 1e-6, "{v} vs {expect}");
    }

    #[test]
    fn agrees_with_gram_route_on_fine_grid() {
        let h = 0.3;
        let t_end = 2.0;
        let m = HurstModel::new(h, 1.0, t_end).unwrap();
        let f = exp_kernel(t_end, 1.0);
        let g = SmoothWindowed1D::new(t_end, |t| (-t).exp(), |t| -(-t).exp()).unwrap();
        let exact = inner_h_jolis(&f, &g, &m, 16).unwrap();
        let grid = UniformGrid::new(512, t_end).unwrap();
        let gram = increment_gram(&m, &grid).unwrap();
        let approx = inner_h(&f.to_step(grid).unwrap(), &g.to_step(grid).unwrap(), &gram).unwrap();
        assert!((exact - approx).abs() < 5e-3, "{exact} vs {approx}");
    }

    #[test]
    fn distributional_form_reproduces_indicator_covariance() {
        let h = 0.35;
        let m = HurstModel::new(h, 1.0, 2.0).unwrap();
        let one = SmoothWindowed1D::new(2.0, |_| 1.0, |_| 0.0).unwrap();
        let ind = |t: f64| if t < 0.75 { 1.0 } else { 0.0 };
        let v = inner_h_distributional(&ind, &one, &m, 16).unwrap();
        assert!((v - cov(&m, 0.75, 2.0)).abs() < 1e-6, "{v}");
    }

    #[test]
    fn horizon_mismatch_is_reported() {
        let m = HurstModel::new(0.3, 1.0, 2.0).unwrap();
        let f = exp_kernel(1.0, 1.0);
        assert!(matches!(
            inner_h_jolis(&f, &f, &m, 16),
            Err(Error::HorizonMismatch { .. })
        ));
    }
}
