use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::frac_cov::{HurstModel, UniformGrid};

use super::bt::{bt_gram, bt_residual, model_a};
use super::extrapolate::{rate_fit, rate_fit_residuals, richardson, GridPolicy, Richardson};
use super::norms::NormLadder;
use super::delta_h;

/// The rate statements that can be checked numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LemmaId {
    /// `‖f_T ⊗_1 f_T‖ -> 0` like `T^{-1/2}`.
    L31,
    /// `|b_T - a| <= C/T`.
    L32,
    /// `‖h_T‖² / T -> 0`.
    L33,
    /// `T ‖g_T‖² -> δ_H / (2θ^{1+4H})`.
    C34,
    /// `|2‖f_T‖² - a²| <= C T^{2H-1}`.
    L35,
}

impl LemmaId {
    pub const ALL: [LemmaId; 5] = [LemmaId::L31, LemmaId::L32, LemmaId::L33, LemmaId::C34, LemmaId::L35];

    fn needs_norms(self) -> bool {
        !matches!(self, LemmaId::L32)
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LemmaId::L31 => "L31",
            LemmaId::L32 => "L32",
            LemmaId::L33 => "L33",
            LemmaId::C34 => "C34",
            LemmaId::L35 => "L35",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for LemmaId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LemmaId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown lemma id {s:?}")))
    }
}

/// One computed constant with its grid-convergence history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub constant_name: String,
    pub horizon: f64,
    pub computed_value: f64,
    pub reference_value: f64,
    pub grid_sizes: Vec<usize>,
    pub extrapolated_value: f64,
    pub extrapolation_error: f64,
    /// Grid-convergence order used by the extrapolation.
    pub observed_rate: f64,
}

impl LimitReport {
    fn from_richardson(name: &str, horizon: f64, reference: f64, r: &Richardson) -> Self {
        LimitReport {
            constant_name: name.to_string(),
            horizon,
            computed_value: *r.values.last().expect("non-empty"),
            reference_value: reference,
            grid_sizes: r.grid_sizes.clone(),
            extrapolated_value: r.extrapolated,
            extrapolation_error: r.error,
            observed_rate: r.order,
        }
    }
}

/// Rate check over a ladder of horizons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub lemma: LemmaId,
    pub hurst: f64,
    pub theta: f64,
    pub quantity: String,
    pub horizons: Vec<f64>,
    /// The quantity whose decay is fitted, one per horizon.
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Limit of the quantity; the fit uses `|value - reference|`.
    pub reference: f64,
    pub claimed_exponent: Option<f64>,
    pub fitted_exponent: f64,
    pub rule: String,
    pub passed: bool,
    pub points: Vec<LimitReport>,
}

fn check_ladder(horizons: &[f64]) -> Result<()> {
    if horizons.len() < 4 {
        return Err(Error::DegenerateSeries(format!(
            "ladder needs at least 4 horizons, got {}",
            horizons.len()
        )));
    }
    for w in horizons.windows(2) {
        if (w[1] - 2.0 * w[0]).abs() > 1e-9 * w[1] {
            return Err(Error::Domain(format!("ladder must double: {horizons:?}")));
        }
    }
    Ok(())
}

const RESIDUAL_REL_TOL: f64 = 1e-6;

/// Checks one rate statement over a doubling ladder of horizons.
pub fn verify_lemma(
    id: LemmaId,
    hurst: f64,
    theta: f64,
    horizons: &[f64],
    policy: &GridPolicy,
) -> Result<LemmaReport> {
    let mut out = verify_lemmas(&[id], hurst, theta, horizons, policy)?;
    Ok(out.remove(0))
}

/// Several rate statements sharing one set of kernel-norm ladders.
pub fn verify_lemmas(
    ids: &[LemmaId],
    hurst: f64,
    theta: f64,
    horizons: &[f64],
    policy: &GridPolicy,
) -> Result<Vec<LemmaReport>> {
    check_param("hurst", hurst, hurst > 0.0 && hurst < 0.5, "in (0, 1/2)")?;
    check_ladder(horizons)?;
    let models: Vec<HurstModel> = horizons
        .iter()
        .map(|&t| HurstModel::new(hurst, theta, t))
        .collect::<Result<_>>()?;
    let ladders: Option<Vec<NormLadder>> = if ids.iter().any(|id| id.needs_norms()) {
        Some(models.iter().map(|m| NormLadder::compute(m, policy)).collect::<Result<_>>()?)
    } else {
        None
    };
    let mut cache = BTreeMap::new();
    ids.iter()
        .map(|&id| {
            if let Some(r) = cache.get(&id) {
                return Ok(Clone::clone(r));
            }
            let r = run(id, &models, ladders.as_deref(), policy)?;
            cache.insert(id, r.clone());
            Ok(r)
        })
        .collect()
}

fn run(id: LemmaId, models: &[HurstModel], ladders: Option<&[NormLadder]>, policy: &GridPolicy) -> Result<LemmaReport> {
    let m0 = models[0];
    let (hurst, theta) = (m0.hurst(), m0.theta());
    let horizons: Vec<f64> = models.iter().map(|m| m.horizon()).collect();
    let a = model_a(&m0)?;
    let norms = || ladders.expect("norm ladders computed for this lemma");

    let mut points = Vec::with_capacity(models.len());
    let mut values = Vec::with_capacity(models.len());
    let mut errors = Vec::with_capacity(models.len());
    let (quantity, reference, claimed, fitted, rule, passed);
    match id {
        LemmaId::L31 => {
            for l in norms() {
                let r = l.extrapolate(|k| k.cff2.max(0.0).sqrt())?;
                values.push(r.extrapolated);
                errors.push(r.error);
                points.push(LimitReport::from_richardson("contraction_ff", l.model.horizon(), 0.0, &r));
            }
            quantity = "‖f_T ⊗_1 f_T‖";
            reference = 0.0;
            claimed = Some(-0.5);
            fitted = rate_fit_residuals(&pairs(&horizons, &values))?;
            rule = "fitted exponent <= -0.35".to_string();
            passed = fitted <= -0.35;
        }
        LemmaId::L32 => {
            for m in models {
                let res = bt_residual(m, 0.0, RESIDUAL_REL_TOL)?;
                values.push(res.value);
                errors.push(res.error);
                let r = gram_bt_ladder(m, policy)?;
                let mut p = LimitReport::from_richardson("b_T", m.horizon(), a, &r);
                p.computed_value = a + res.value;
                points.push(p);
            }
            quantity = "b_T - a";
            reference = 0.0;
            claimed = Some(-1.0);
            fitted = rate_fit_residuals(&pairs(&horizons, &values))?;
            rule = "fitted exponent <= -0.75".to_string();
            passed = fitted <= -0.75;
        }
        LemmaId::L33 => {
            for l in norms() {
                let t = l.model.horizon();
                let r = l.extrapolate(|k| k.h2)?;
                values.push(r.extrapolated / t);
                errors.push(r.error / t);
                points.push(LimitReport::from_richardson("norm_h2", t, 0.0, &r));
            }
            quantity = "‖h_T‖² / T";
            reference = 0.0;
            claimed = Some(-1.0);
            fitted = rate_fit_residuals(&pairs(&horizons, &values))?;
            rule = "fitted exponent <= -0.75".to_string();
            passed = fitted <= -0.75;
        }
        LemmaId::C34 => {
            let target = delta_h(hurst)? / (2.0 * theta.powf(1.0 + 4.0 * hurst));
            for l in norms() {
                let t = l.model.horizon();
                let r = l.extrapolate(|k| k.g2 * t)?;
                values.push(r.extrapolated);
                errors.push(r.error);
                points.push(LimitReport::from_richardson("T_norm_g2", t, target, &r));
            }
            quantity = "T ‖g_T‖²";
            reference = target;
            claimed = None;
            fitted = rate_fit(&pairs(&horizons, &values), target)?;
            let rel = (values.last().expect("ladder") - target).abs() / target;
            rule = "relative error at largest T <= 10% and fitted exponent < 0".to_string();
            passed = rel <= 0.10 && fitted < 0.0;
        }
        LemmaId::L35 => {
            for l in norms() {
                let r = l.extrapolate(|k| 2.0 * k.f2 - a * a)?;
                values.push(r.extrapolated);
                errors.push(r.error);
                points.push(LimitReport::from_richardson("2_norm_f2_minus_a2", l.model.horizon(), 0.0, &r));
            }
            quantity = "2‖f_T‖² - a²";
            reference = 0.0;
            let c = 2.0 * hurst - 1.0;
            claimed = Some(c);
            fitted = rate_fit_residuals(&pairs(&horizons, &values))?;
            rule = format!("fitted exponent within ±0.25 of {c}");
            passed = (fitted - c).abs() <= 0.25;
        }
    }
    Ok(LemmaReport {
        lemma: id,
        hurst,
        theta,
        quantity: quantity.to_string(),
        horizons,
        values,
        errors,
        reference,
        claimed_exponent: claimed,
        fitted_exponent: fitted,
        rule,
        passed,
        points,
    })
}

fn pairs(horizons: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    horizons.iter().copied().zip(values.iter().copied()).collect()
}

fn gram_bt_ladder(model: &HurstModel, policy: &GridPolicy) -> Result<Richardson> {
    let sizes = policy.sizes(model)?;
    let values = sizes
        .iter()
        .map(|&n| bt_gram(model, &UniformGrid::for_model(model, n)?))
        .collect::<Result<Vec<_>>>()?;
    richardson(&sizes, &values, 2.0 * model.hurst())
}
