use crate::error::{check_param, Error, Result};
use crate::special::normal_cdf;

/// `sup_z |F_m(z) - F(z)|`, evaluated exactly at the order statistics.
pub fn kolmogorov_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    if let Some(x) = sample.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("sample value {x}")));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / m - f).abs()).max((f - i as f64 / m).abs());
    }
    Ok(d)
}

pub fn kolmogorov_distance_normal(sample: &[f64]) -> Result<f64> {
    kolmogorov_distance(sample, normal_cdf)
}

/// Dvoretzky–Kiefer–Wolfowitz half-width `sqrt(ln(2/α) / (2m))`.
pub fn dkw_radius(m: usize, alpha: f64) -> Result<f64> {
    check_param("alpha", alpha, alpha > 0.0 && alpha < 1.0, "in (0, 1)")?;
    if m == 0 {
        return Err(Error::Domain("empty sample".into()));
    }
    Ok(((2.0 / alpha).ln() / (2.0 * m as f64)).sqrt())
}
