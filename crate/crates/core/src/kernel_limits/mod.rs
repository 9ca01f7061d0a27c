//! Kernels of the chaos representation of the least-squares estimator, their
//! limit constants, and numerical checks of the convergence rates.

mod bt;
mod extrapolate;
mod lemmas;
mod norms;


use crate::error::{check_param, Result};
use crate::frac_cov::{HurstModel, UniformGrid};
use crate::hilbert_quad::StepKernel2D;
use crate::special::{gamma, ln_gamma};

pub use bt::{bt_gram, bt_quadrature, bt_residual};
pub use extrapolate::{rate_fit, rate_fit_residuals, richardson, GridPolicy, Richardson};
pub use lemmas::{verify_lemma, verify_lemmas, LemmaId, LemmaReport, LimitReport};
pub use norms::{
    contract_norm_ff, contract_norm_fg, contract_norm_gg, cross_fg, norm_ft2, norm_gt2, norm_ht2,
    psi_from_norms, psi_stats, psi_stats_extrapolated, KernelNorms, NormLadder, PsiEstimate, PsiReport,
};

/// `σ²_H = (4H - 1) + 2 Γ(2 - 4H) Γ(4H) / (Γ(2H) Γ(1 - 2H))` for `H` in (0, 1/2).
///
/// `Γ(2 - 4H) / Γ(1 - 2H)` is taken through log-gamma so it stays finite as
/// `H -> 1/2`.
pub fn sigma2(hurst: f64) -> Result<f64> {
    check_param("hurst", hurst, hurst > 0.0 && hurst < 0.5, "in (0, 1/2)")?;
    let ratio = (ln_gamma(2.0 - 4.0 * hurst) - ln_gamma(1.0 - 2.0 * hurst)).exp();
    Ok(4.0 * hurst - 1.0 + 2.0 * ratio * gamma(4.0 * hurst) / gamma(2.0 * hurst))
}

/// `a = H Γ(2H) θ^{-2H}`, the limit of `b_T`.
pub fn a_limit(hurst: f64, theta: f64) -> Result<f64> {
    check_param("hurst", hurst, hurst > 0.0 && hurst < 1.0, "in (0, 1)")?;
    check_param("theta", theta, theta > 0.0, "> 0")?;
    Ok(hurst * gamma(2.0 * hurst) * theta.powf(-2.0 * hurst))
}

/// `δ_H = H² Γ(2H)² σ²_H`.
pub fn delta_h(hurst: f64) -> Result<f64> {
    let s2 = sigma2(hurst)?;
    let g = gamma(2.0 * hurst);
    Ok(hurst * hurst * g * g * s2)
}

/// The kernels `f_T`, `g_T`, `h_T` on `[0, T]²`.
///
/// `f_T = e^{-θ|t-s|} / (2 sqrt(θ σ² T))`, `h_T = e^{-θ(T-t) - θ(T-s)}` and
/// `g_T = sqrt(σ²/(θT)) f_T - h_T / (2θT)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelFamily {
    model: HurstModel,
    sigma2: f64,
}

/// The three kernels sampled at cell midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct GridKernels {
    pub f: StepKernel2D,
    pub g: StepKernel2D,
    pub h: StepKernel2D,
}

impl KernelFamily {
    pub fn new(model: HurstModel) -> Result<Self> {
        model.require_rough()?;
        Ok(KernelFamily {
            model,
            sigma2: sigma2(model.hurst())?,
        })
    }

    pub fn model(&self) -> &HurstModel {
        &self.model
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `f_T(t, t)`.
    pub fn f_scale(&self) -> f64 {
        let m = &self.model;
        0.5 / (m.theta() * self.sigma2 * m.horizon()).sqrt()
    }

    /// Coefficient of `f_T` in `g_T`.
    pub fn g_alpha(&self) -> f64 {
        (self.sigma2 / (self.model.theta() * self.model.horizon())).sqrt()
    }

    /// Coefficient of `-h_T` in `g_T`.
    pub fn g_beta(&self) -> f64 {
        0.5 / (self.model.theta() * self.model.horizon())
    }

    pub fn f(&self, t: f64, s: f64) -> f64 {
        self.f_scale() * (-self.model.theta() * (t - s).abs()).exp()
    }

    pub fn h(&self, t: f64, s: f64) -> f64 {
        let (theta, big_t) = (self.model.theta(), self.model.horizon());
        (-theta * (big_t - t) - theta * (big_t - s)).exp()
    }

    pub fn g(&self, t: f64, s: f64) -> f64 {
        self.g_alpha() * self.f(t, s) - self.g_beta() * self.h(t, s)
    }

    pub fn grid_kernels(&self, grid: &UniformGrid) -> Result<GridKernels> {
        grid.check_model(&self.model)?;
        Ok(GridKernels {
            f: StepKernel2D::from_fn(*grid, |t, s| self.f(t, s))?,
            g: StepKernel2D::from_fn(*grid, |t, s| self.g(t, s))?,
            h: StepKernel2D::from_fn(*grid, |t, s| self.h(t, s))?,
        })
    }
}
