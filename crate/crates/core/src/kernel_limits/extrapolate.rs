use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::frac_cov::HurstModel;

/// How fine the grids are for a given model: the finest grid has about
/// `cells_per_unit` cells per unit of `θT`, and `levels` grids halve from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub cells_per_unit: f64,
    pub min_cells: usize,
    pub levels: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            cells_per_unit: 20.0,
            min_cells: 64,
            levels: 4,
        }
    }
}

impl GridPolicy {
    /// Cell counts, coarsest first, each twice the previous.
    pub fn sizes(&self, model: &HurstModel) -> Result<Vec<usize>> {
        check_param("levels", self.levels as f64, self.levels >= 3 && self.levels <= 12, "in [3, 12]")?;
        check_param("cells_per_unit", self.cells_per_unit, self.cells_per_unit > 0.0, "> 0")?;
        let unit = 1usize << (self.levels - 1);
        let want = (self.cells_per_unit * model.theta() * model.horizon()).ceil() as usize;
        let finest = want.max(self.min_cells).div_ceil(unit).max(1) * unit;
        Ok((0..self.levels).rev().map(|k| finest >> k).collect())
    }
}

/// Extrapolation of a grid-dependent value to the continuum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Richardson {
    pub grid_sizes: Vec<usize>,
    pub values: Vec<f64>,
    /// Convergence order in `1/n` used for the last step.
    pub order: f64,
    /// Whether `order` was measured rather than the nominal one.
    pub order_fitted: bool,
    pub extrapolated: f64,
    /// Difference between the extrapolations from the last and the
    /// second-to-last triple of grids (or the size of the correction when only
    /// three grids are available).
    pub error: f64,
}

struct Step {
    order: f64,
    fitted: bool,
    value: f64,
    monotone: bool,
}

fn step(v1: f64, v2: f64, v3: f64, nominal: f64) -> Step {
    let (d1, d2) = (v2 - v1, v3 - v2);
    let expected = 2f64.powf(-nominal);
    let ratio = d2 / d1;
    let monotone = ratio.is_finite() && ratio > 0.0 && ratio < 1.0;
    let (order, fitted) = if monotone && (ratio - expected).abs() > 0.3 * expected {
        (-ratio.log2(), true)
    } else {
        (nominal, false)
    };
    Step {
        order,
        fitted,
        value: v3 + d2 / (2f64.powf(order) - 1.0),
        monotone,
    }
}

/// Richardson extrapolation over grids that double in size.
///
/// The error is assumed to scale like `n^{-p}` with `p = nominal_order` unless
/// the observed ratio of successive differences deviates from `2^{-p}` by more
/// than 30%, in which case `p` is measured from that ratio.
pub fn richardson(sizes: &[usize], values: &[f64], nominal_order: f64) -> Result<Richardson> {
    if sizes.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: sizes.len(),
            found: values.len(),
        });
    }
    if sizes.len() < 3 {
        return Err(Error::DegenerateSeries(format!(
            "extrapolation needs at least 3 grids, got {}",
            sizes.len()
        )));
    }
    if sizes.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::Domain(format!("grid sizes must double: {sizes:?}")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("grid value {v}")));
    }
    check_param("nominal_order", nominal_order, nominal_order > 0.0, "> 0")?;
    let k = values.len();
    let last = step(values[k - 3], values[k - 2], values[k - 1], nominal_order);
    let mut error = if k >= 4 {
        let prev = step(values[k - 4], values[k - 3], values[k - 2], nominal_order);
        (last.value - prev.value).abs()
    } else {
        (last.value - values[k - 1]).abs()
    };
    if !last.monotone {
        error = error.max((last.value - values[k - 1]).abs());
    }
    Ok(Richardson {
        grid_sizes: sizes.to_vec(),
        values: values.to_vec(),
        order: last.order,
        order_fitted: last.fitted,
        extrapolated: last.value,
        error,
    })
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn check_horizons(series: &[(f64, f64)]) -> Result<()> {
    if series.len() < 3 {
        return Err(Error::DegenerateSeries(format!(
            "rate fit needs at least 3 points, got {}",
            series.len()
        )));
    }
    if series.iter().any(|p| !(p.0 > 0.0 && p.0.is_finite())) {
        return Err(Error::DegenerateSeries("horizons must be positive".into()));
    }
    let first = series[0].0;
    if series.iter().all(|p| p.0 == first) {
        return Err(Error::DegenerateSeries("all horizons equal".into()));
    }
    Ok(())
}

/// Least-squares slope of `log|value - reference|` against `log T`.
///
/// Fails if any residual is at the rounding level of the values, since its
/// logarithm carries no information.
pub fn rate_fit(series: &[(f64, f64)], reference: f64) -> Result<f64> {
    check_horizons(series)?;
    let mut pts = Vec::with_capacity(series.len());
    for &(t, v) in series {
        let r = (v - reference).abs();
        let noise = 8.0 * f64::EPSILON * v.abs().max(reference.abs());
        if !r.is_finite() || r <= noise {
            return Err(Error::DegenerateSeries(format!(
                "residual {r:e} at T = {t} is below rounding noise {noise:e}"
            )));
        }
        pts.push((t.ln(), r.ln()));
    }
    Ok(slope(&pts))
}

/// Least-squares slope of `log|residual|` against `log T` for residuals that
/// were computed directly rather than as a difference.
pub fn rate_fit_residuals(series: &[(f64, f64)]) -> Result<f64> {
    check_horizons(series)?;
    let mut pts = Vec::with_capacity(series.len());
    for &(t, r) in series {
        if !r.is_finite() || r == 0.0 {
            return Err(Error::DegenerateSeries(format!("residual {r} at T = {t}")));
        }
        pts.push((t.ln(), r.abs().ln()));
    }
    Ok(slope(&pts))
}
