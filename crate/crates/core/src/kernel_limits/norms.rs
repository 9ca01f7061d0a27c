use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frac_cov::{increment_gram, HurstModel, IncrementGram, UniformGrid};
use crate::hilbert_quad::trace_of_product;

use super::bt::bt_quadrature;
use super::extrapolate::{richardson, GridPolicy, Richardson};
use super::KernelFamily;

const BT_TOL: f64 = 1e-12;

/// Norms, inner products and contraction norms of the grid kernels, all in
/// the tensor-square space. Contraction entries are squared norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelNorms {
    pub n: usize,
    pub f2: f64,
    pub g2: f64,
    pub h2: f64,
    pub fh: f64,
    pub fg: f64,
    pub cff2: f64,
    pub cfg2: f64,
    pub cgg2: f64,
}

impl KernelNorms {
    /// Evaluates everything from three dense matrix products.
    ///
    /// The sampled `f_T` is `c r^{|i-j|}` and `h_T = v v'`, so with
    /// `C = F G F` (the contraction of `f` with itself) and `u = F G v`:
    /// `f ⊗_1 g = αC - β u v'` and
    /// `g ⊗_1 g = α²C - αβ(u v' + v u') + β²(v'Gv) v v'`.
    /// Inner products of rank-one terms reduce to
    /// `<a b', c d'> = (b'Gd)(c'Ga)`.
    pub fn on_grid(family: &KernelFamily, gram: &IncrementGram) -> Result<Self> {
        let grid = gram.grid();
        grid.check_model(family.model())?;
        let n = grid.n();
        let theta = family.model().theta();
        let big_t = family.model().horizon();
        let step = grid.step();
        let cf = family.f_scale();
        let powers: Vec<f64> = (0..n).map(|k| cf * (-theta * step * k as f64).exp()).collect();
        let f = DMatrix::from_fn(n, n, |i, j| powers[i.abs_diff(j)]);
        let v = DVector::from_fn(n, |i, _| (-theta * (big_t - grid.midpoint(i))).exp());
        let (alpha, beta) = (family.g_alpha(), family.g_beta());
        let g = gram.entries();

        let gf = g * &f;
        let c = &f * &gf;
        drop(f);
        let u = gf.tr_mul(&v);
        let f2 = trace_of_product(&gf, &gf);
        drop(gf);
        let gc = g * &c;
        drop(c);

        let gv = g * &v;
        let gu = g * &u;
        let w = &gc * &gv;

        let vgv = v.dot(&gv);
        let ugu = u.dot(&gu);
        let vgu = v.dot(&gu);
        let fh = gv.dot(&u);
        let h2 = vgv * vgv;
        let cff2 = trace_of_product(&gc, &gc);
        let c_uv = u.dot(&w);
        let c_vv = v.dot(&w);

        let g2 = alpha * alpha * f2 - 2.0 * alpha * beta * fh + beta * beta * h2;
        let fg = alpha * f2 - beta * fh;
        let cfg2 = alpha * alpha * cff2 - 2.0 * alpha * beta * c_uv + beta * beta * vgv * ugu;

        let coef = [alpha * alpha, -alpha * beta, -alpha * beta, beta * beta * vgv];
        let gram_terms = [
            [cff2, c_uv, c_uv, c_vv],
            [c_uv, vgv * ugu, vgu * vgu, vgv * vgu],
            [c_uv, vgu * vgu, ugu * vgv, vgu * vgv],
            [c_vv, vgv * vgu, vgu * vgv, vgv * vgv],
        ];
        let mut cgg2 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                cgg2 += coef[i] * coef[j] * gram_terms[i][j];
            }
        }

        let out = KernelNorms {
            n,
            f2,
            g2,
            h2,
            fh,
            fg,
            cff2,
            cfg2,
            cgg2,
        };
        if [f2, g2, h2, fh, fg, cff2, cfg2, cgg2].iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("kernel norms on {n} cells")));
        }
        Ok(out)
    }

    pub fn compute(model: &HurstModel, grid: &UniformGrid) -> Result<Self> {
        let family = KernelFamily::new(*model)?;
        let gram = increment_gram(model, grid)?;
        KernelNorms::on_grid(&family, &gram)
    }
}

pub fn norm_ft2(model: &HurstModel, grid: &UniformGrid) -> Result<f64> {
    Ok(KernelNorms::compute(model, grid)?.f2)
}

pub fn norm_gt2(model: &HurstModel, grid: &UniformGrid) -> Result<f64> {
    Ok(KernelNorms::compute(model, grid)?.g2)
}

pub fn norm_ht2(model: &HurstModel, grid: &UniformGrid) -> Result<f64> {
    Ok(KernelNorms::compute(model, grid)?.h2)
}

pub fn cross_fg(model: &HurstModel, grid: &UniformGrid) -> Result<f64> {
    Ok(KernelNorms::compute(model, grid)?.fg)
}

pub fn contract_norm_ff(model: &HurstModel, grid: &UniformGrid) -> Result<f64> {
    Ok(KernelNorms::compute(model, grid)?.cff2.max(0.0).sqrt())
}

pub fn contract_norm_fg(model: &HurstModel, grid: &UniformGrid) -> Result<f64> {
    Ok(KernelNorms::compute(model, grid)?.cfg2.max(0.0).sqrt())
}

pub fn contract_norm_gg(model: &HurstModel, grid: &UniformGrid) -> Result<f64> {
    Ok(KernelNorms::compute(model, grid)?.cgg2.max(0.0).sqrt())
}

/// Kernel norms on a sequence of doubling grids, plus `b_T` by quadrature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormLadder {
    pub model: HurstModel,
    pub sizes: Vec<usize>,
    pub levels: Vec<KernelNorms>,
    pub b_t: f64,
    pub b_t_error: f64,
}

impl NormLadder {
    pub fn compute(model: &HurstModel, policy: &GridPolicy) -> Result<Self> {
        let family = KernelFamily::new(*model)?;
        let sizes = policy.sizes(model)?;
        let mut levels = Vec::with_capacity(sizes.len());
        for &n in &sizes {
            let grid = UniformGrid::for_model(model, n)?;
            let gram = increment_gram(model, &grid)?;
            levels.push(KernelNorms::on_grid(&family, &gram)?);
            log::debug!("kernel norms: T = {}, n = {n}", model.horizon());
        }
        let bt = bt_quadrature(model, BT_TOL)?;
        Ok(NormLadder {
            model: *model,
            sizes,
            levels,
            b_t: bt.value,
            b_t_error: bt.error,
        })
    }

    /// Extrapolates any quantity derived from the per-grid norms, with nominal
    /// order `2H`.
    pub fn extrapolate(&self, pick: impl Fn(&KernelNorms) -> f64) -> Result<Richardson> {
        let values: Vec<f64> = self.levels.iter().map(pick).collect();
        richardson(&self.sizes, &values, 2.0 * self.model.hurst())
    }

    pub fn finest(&self) -> &KernelNorms {
        self.levels.last().expect("ladder has at least three levels")
    }

    pub fn psi_levels(&self) -> Vec<PsiReport> {
        self.levels
            .iter()
            .map(|k| psi_from_norms(k, self.b_t, self.model.horizon()))
            .collect()
    }
}

/// The three statistics bounding the Kolmogorov distance of the ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiReport {
    pub horizon: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
    pub b_t: f64,
}

/// `Ψ1 = sqrt((b² - 2‖f‖²)² + 8‖f⊗f‖²) / b²`,
/// `Ψ2 = 2 sqrt(2‖f⊗g‖² + <f,g>²) / b²`,
/// `Ψ3 = 2 sqrt(‖g‖⁴ + 2‖g⊗g‖²) / b²`.
pub fn psi_from_norms(k: &KernelNorms, b_t: f64, horizon: f64) -> PsiReport {
    let b2 = b_t * b_t;
    PsiReport {
        horizon,
        psi1: ((b2 - 2.0 * k.f2).powi(2) + 8.0 * k.cff2.max(0.0)).sqrt() / b2,
        psi2: 2.0 * (2.0 * k.cfg2.max(0.0) + k.fg * k.fg).sqrt() / b2,
        psi3: 2.0 * (k.g2 * k.g2 + 2.0 * k.cgg2.max(0.0)).sqrt() / b2,
        b_t,
    }
}

pub fn psi_stats(model: &HurstModel, grid: &UniformGrid) -> Result<PsiReport> {
    let norms = KernelNorms::compute(model, grid)?;
    let bt = bt_quadrature(model, BT_TOL)?;
    Ok(psi_from_norms(&norms, bt.value, model.horizon()))
}

/// Extrapolated Ψ values with error bars.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiEstimate {
    pub report: PsiReport,
    pub errors: [f64; 3],
    pub richardson: [Richardson; 3],
}

pub fn psi_stats_extrapolated(model: &HurstModel, policy: &GridPolicy) -> Result<PsiEstimate> {
    psi_from_ladder(&NormLadder::compute(model, policy)?)
}

pub(crate) fn psi_from_ladder(ladder: &NormLadder) -> Result<PsiEstimate> {
    let levels = ladder.psi_levels();
    let order = 2.0 * ladder.model.hurst();
    let fit = |pick: fn(&PsiReport) -> f64| {
        let values: Vec<f64> = levels.iter().map(pick).collect();
        richardson(&ladder.sizes, &values, order)
    };
    let r1 = fit(|p| p.psi1)?;
    let r2 = fit(|p| p.psi2)?;
    let r3 = fit(|p| p.psi3)?;
    let report = PsiReport {
        horizon: ladder.model.horizon(),
        psi1: r1.extrapolated,
        psi2: r2.extrapolated,
        psi3: r3.extrapolated,
        b_t: ladder.b_t,
    };
    Ok(PsiEstimate {
        report,
        errors: [r1.error, r2.error, r3.error],
        richardson: [r1, r2, r3],
    })
}
