use crate::error::{check_param, Error, Result};
use crate::frac_cov::{cov, HurstModel, UniformGrid};
use crate::quad::{adaptive, Estimate, PowerRule, Tolerance};

use super::a_limit;

const RULE_ORDER: usize = 24;

fn checked(est: Estimate, tol: f64) -> Result<Estimate> {
    if !est.value.is_finite() {
        return Err(Error::NonFinite("b_T quadrature".into()));
    }
    if est.error > tol {
        return Err(Error::Tolerance {
            requested: tol,
            estimated: est.error,
        });
    }
    Ok(est)
}

/// `b_T = (H/T) ∫_0^T [∫_0^t e^{-θ(2t-u)} u^{2H-1} du + ∫_0^t e^{-θz} z^{2H-1} dz] dt`.
///
/// After exchanging the order of integration both parts become single
/// integrals against `u^{2H-1}`:
/// `b_T = (H/T) ∫_0^T u^{2H-1} [(e^{-θu} - e^{-θ(2T-u)}) / (2θ) + (T - u) e^{-θu}] du`.
pub fn bt_quadrature(model: &HurstModel, tol: f64) -> Result<Estimate> {
    check_param("tol", tol, tol > 0.0, "> 0")?;
    let (h, theta, t_end) = (model.hurst(), model.theta(), model.horizon());
    let rule = PowerRule::new(2.0 * h - 1.0, RULE_ORDER);
    let scale = h / t_end;
    let inner = rule.integrate(
        |u| {
            let d = (-theta * u).exp();
            (d - (-theta * (2.0 * t_end - u)).exp()) / (2.0 * theta) + (t_end - u) * d
        },
        0.0,
        t_end,
        Tolerance::new(0.25 * tol / scale, 0.0),
    )?;
    checked(inner * scale, tol)
}

/// `b_T - a` without subtracting two nearly equal numbers.
///
/// With `γ_T = ∫_0^T e^{-θz} z^{2H-1} dz`,
///
/// ```text
/// b_T - a = (H/(θT)) (1/2 - 2H) γ_T
///         + e^{-θT} (H/(θT)) [T^{2H} - (1/2) ∫_0^T e^{-θ(T-u)} u^{2H-1} du
///                             - θT ∫_0^∞ e^{-θx} (T + x)^{2H-1} dx]
/// ```
///
/// At `H = 1/4` the algebraic term vanishes and the difference is
/// exponentially small in `T`, so the accuracy target is absolute or relative,
/// whichever is looser.
pub fn bt_residual(model: &HurstModel, abs_tol: f64, rel_tol: f64) -> Result<Estimate> {
    check_param("abs_tol", abs_tol, abs_tol >= 0.0, ">= 0")?;
    check_param("rel_tol", rel_tol, rel_tol >= 0.0, ">= 0")?;
    if abs_tol == 0.0 && rel_tol == 0.0 {
        return Err(Error::InvalidParameter {
            name: "rel_tol",
            value: 0.0,
            bound: "> 0 when abs_tol = 0",
        });
    }
    let (h, theta, t_end) = (model.hurst(), model.theta(), model.horizon());
    let alpha = 2.0 * h - 1.0;
    let rule = PowerRule::new(alpha, RULE_ORDER);
    let c = h / (theta * t_end);
    let decay = (-theta * t_end).exp();
    let algebraic = 0.5 - 2.0 * h;

    let part_tol = |weight: f64| Tolerance::new(0.2 * abs_tol / weight.abs().max(f64::MIN_POSITIVE), 1e-13);
    let gamma_t = if algebraic != 0.0 {
        rule.integrate(|z| (-theta * z).exp(), 0.0, t_end, part_tol(c * algebraic))? * (c * algebraic)
    } else {
        Estimate {
            value: 0.0,
            error: 0.0,
        }
    };
    let w = c * decay;
    let backward = rule.integrate(|u| (-theta * (t_end - u)).exp(), 0.0, t_end, part_tol(0.5 * w))? * (0.5 * w);
    let reach = 50.0 / theta;
    let tail = adaptive(
        |x| (-theta * x).exp() * (t_end + x).powf(alpha),
        0.0,
        reach,
        part_tol(w * theta * t_end),
    )? * (w * theta * t_end);
    let est = Estimate {
        value: gamma_t.value + w * t_end.powf(2.0 * h) - backward.value - tail.value,
        error: gamma_t.error + backward.error + tail.error + w * t_end * (-50.0f64).exp() * t_end.powf(alpha),
    };
    checked(est, abs_tol.max(rel_tol * est.value.abs()))
}

/// `b_T = (1/T) ∫_0^T ‖e^{-θ(t-·)} 1_[0,t]‖² dt` on a grid.
///
/// At each node `t_k` the cell-sampled kernel has norm `q_k = y_k' G y_k`
/// with `y_k,i = e^{-θ(t_k - m_i)}` for `i < k`; `q_k` is updated from
/// `q_{k-1}` in `O(k)`, and the outer integral is the trapezoid rule over nodes.
/// Increment covariances depend on the lag only, so one row of the Gram
/// matrix is evaluated.
pub fn bt_gram(model: &HurstModel, grid: &UniformGrid) -> Result<f64> {
    grid.check_model(model)?;
    let n = grid.n();
    let lag: Vec<f64> = (0..n)
        .map(|d| {
            let (a, b, c, e) = (grid.node(0), grid.node(1), grid.node(d), grid.node(d + 1));
            cov(model, b, e) - cov(model, b, c) - cov(model, a, e) + cov(model, a, c)
        })
        .collect();
    let r = (-model.theta() * grid.step()).exp();
    let e_half = (-0.5 * model.theta() * grid.step()).exp();
    // y[i] = e^{-θ(t_k - m_i)}, newest cell last
    let mut y: Vec<f64> = Vec::with_capacity(n);
    let mut q = 0.0;
    let mut total = 0.0;
    for k in 0..n {
        let cross: f64 = y.iter().enumerate().map(|(i, yi)| lag[k - i] * yi).sum();
        q = r * r * q + 2.0 * r * e_half * cross + e_half * e_half * lag[0];
        for yi in y.iter_mut() {
            *yi *= r;
        }
        y.push(e_half);
        total += if k + 1 == n { 0.5 * q } else { q };
    }
    let bt = total * grid.step() / grid.horizon();
    if !bt.is_finite() {
        return Err(Error::NonFinite("grid b_T".into()));
    }
    Ok(bt)
}

/// `a` for the model, shared by the lemma checks.
pub(crate) fn model_a(model: &HurstModel) -> Result<f64> {
    a_limit(model.hurst(), model.theta())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_bm(theta: f64, t: f64) -> f64 {
        0.5 / theta - (1.0 - (-2.0 * theta * t).exp()) / (4.0 * theta * theta * t)
    }

    #[test]
    fn brownian_closed_form() {
        for &(theta, t) in &[(1.0, 10.0), (0.5, 3.0), (2.0, 0.7)] {
            let m = HurstModel::new(0.5, theta, t).unwrap();
            let q = bt_quadrature(&m, 1e-12).unwrap();
            assert!((q.value - closed_form_bm(theta, t)).abs() < 1e-11, "{q:?}");
            let res = bt_residual(&m, 1e-13, 0.0).unwrap();
            let a = model_a(&m).unwrap();
            assert!((res.value - (closed_form_bm(theta, t) - a)).abs() < 1e-12, "{res:?}");
        }
        let m = HurstModel::new(0.5, 1.0, 10.0).unwrap();
        assert!((bt_quadrature(&m, 1e-10).unwrap().value - 0.475).abs() < 1e-9);
    }

    #[test]
    fn residual_matches_direct_difference() {
        for &h in &[0.1, 0.25, 0.3, 0.4, 0.7] {
            for &(theta, t) in &[(1.0, 2.0), (0.5, 5.0), (2.0, 10.0)] {
                let m = HurstModel::new(h, theta, t).unwrap();
                let direct = bt_quadrature(&m, 1e-12).unwrap().value - model_a(&m).unwrap();
                let res = bt_residual(&m, 1e-13, 0.0).unwrap().value;
                assert!((direct - res).abs() < 1e-11, "H={h} θ={theta} T={t}: {direct} vs {res}");
            }
        }
    }

    #[test]
    fn quarter_residual_is_exponentially_small() {
        let m = HurstModel::new(0.25, 1.0, 40.0).unwrap();
        let res = bt_residual(&m, 0.0, 1e-8).unwrap().value;
        assert!(res != 0.0 && res.abs() < 1e-15, "{res}");
        let far = HurstModel::new(0.25, 1.0, 200.0).unwrap();
        let res_far = bt_residual(&far, 0.0, 1e-8).unwrap().value;
        assert!(res_far.abs() < 1e-80 && res_far != 0.0, "{res_far}");
    }

    #[test]
    fn bt_positive_and_converges() {
        for &h in &[0.1, 0.25, 0.4] {
            let a = a_limit(h, 1.0).unwrap();
            for &t in &[5.0, 20.0, 80.0, 320.0] {
                let m = HurstModel::new(h, 1.0, t).unwrap();
                let b = bt_quadrature(&m, 1e-12).unwrap().value;
                assert!(b > 0.0);
                assert!((b - a).abs() * t < 0.5, "H={h} T={t}: {b} vs {a}");
            }
        }
    }

    #[test]
    fn gram_route_agrees_with_quadrature() {
        let m = HurstModel::new(0.3, 1.0, 5.0).unwrap();
        let q = bt_quadrature(&m, 1e-12).unwrap().value;
        let g = bt_gram(&m, &UniformGrid::new(1024, 5.0).unwrap()).unwrap();
        assert!((g - q).abs() < 0.02 * q, "{g} vs {q}");
        let bm = HurstModel::new(0.5, 1.0, 5.0).unwrap();
        let g = bt_gram(&bm, &UniformGrid::new(1024, 5.0).unwrap()).unwrap();
        assert!((g - closed_form_bm(1.0, 5.0)).abs() < 0.01 * g);
    }

    #[test]
    fn gram_route_converges_monotonically() {
        let m = HurstModel::new(0.3, 1.0, 5.0).unwrap();
        let vals: Vec<f64> = [64, 128, 256, 512, 1024]
            .iter()
            .map(|&n| bt_gram(&m, &UniformGrid::new(n, 5.0).unwrap()).unwrap())
            .collect();
        let diffs: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(diffs.windows(2).all(|d| d[1] < d[0]), "{diffs:?}");
    }

    #[test]
    fn unreachable_tolerance_is_an_error() {
        let m = HurstModel::new(0.3, 1.0, 5.0).unwrap();
        assert!(bt_quadrature(&m, 1e-30).is_err());
        assert!(bt_quadrature(&m, 0.0).is_err());
    }
}
