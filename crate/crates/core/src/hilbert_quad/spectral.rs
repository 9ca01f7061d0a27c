use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::frac_cov::HurstModel;
use crate::quad::GaussRule;
use crate::special::gamma;

use super::StepKernel1D;

/// Settings for the Fourier-side inner product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Frequencies beyond this are covered by the analytic tail.
    pub frequency_cutoff: f64,
    /// FFT samples per period `2π / Δ`; rounded up to a power of two.
    pub frequency_samples: usize,
    /// Absolute error allowed for the reported estimate.
    pub tolerance: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            frequency_cutoff: 0.0,
            frequency_samples: 0,
            tolerance: 1e-6,
        }
    }
}

/// Value plus a bound on discretization and truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralValue {
    pub value: f64,
    pub error: f64,
}

/// `c_H = Γ(2H + 1) sin(πH) / (2π)`.
pub fn spectral_constant(hurst: f64) -> f64 {
    gamma(2.0 * hurst + 1.0) * (PI * hurst).sin() / (2.0 * PI)
}

/// `<f, g> = c_H ∫_R F f(ξ) conj(F g(ξ)) |ξ|^{1-2H} dξ` for step functions.
///
/// With jumps `c_j` at the nodes, `F f(ξ) conj(F g(ξ)) = P(ξ) / ξ²` where
/// `P(ξ) = Re Σ c_f,j c_g,k e^{-iξ(t_j - t_k)}` has period `2π/Δ`. `P` is
/// sampled by FFT, linearly interpolated and integrated against `ξ^{-1-2H}`
/// over whole periods up to the cutoff, with one
/// Richardson step across two sampling densities. Above the cutoff `P` is
/// replaced by its mean, and the oscillating remainder is bounded by
/// integrating by parts twice.
pub fn inner_h_spectral(
    f: &StepKernel1D,
    g: &StepKernel1D,
    model: &HurstModel,
    config: &SpectralConfig,
) -> Result<SpectralValue> {
    if f.grid() != g.grid() {
        return Err(Error::DimensionMismatch {
            expected: f.grid().n(),
            found: g.grid().n(),
        });
    }
    let grid = f.grid();
    grid.check_model(model)?;
    let h = model.hurst();
    let delta = grid.step();
    let n = grid.n();
    let period = 2.0 * PI / delta;
    let samples = config.frequency_samples.max(16 * (n + 1)).next_power_of_two();
    let periods = if config.frequency_cutoff > 0.0 {
        (config.frequency_cutoff / period).ceil().max(1.0) as usize
    } else {
        8
    };
    let cutoff = periods as f64 * period;

    let cf = f.jumps();
    let cg = g.jumps();
    let beta = 1.0 + 2.0 * h;

    let coarse = periodic_integral(&cf, &cg, delta, samples, periods, beta);
    let fine = periodic_integral(&cf, &cg, delta, 2 * samples, periods, beta);
    let body = (4.0 * fine - coarse) / 3.0;
    let body_err = (fine - coarse).abs() / 3.0;

    let mean: f64 = cf.iter().zip(&cg).map(|(a, b)| a * b).sum();
    let tail = mean * cutoff.powf(-2.0 * h) / (2.0 * h);
    let norm_f = cf.iter().map(|c| c * c).sum::<f64>().sqrt();
    let norm_g = cg.iter().map(|c| c * c).sum::<f64>().sqrt();
    let remainder = norm_f * norm_g * (PI * PI / 3.0) * 2.0 * beta * cutoff.powf(-beta - 1.0) / (delta * delta);

    let c = 2.0 * spectral_constant(h);
    let value = c * (body + tail);
    let error = c * (body_err + remainder);
    if !value.is_finite() {
        return Err(Error::NonFinite("spectral inner product".into()));
    }
    if error > config.tolerance {
        return Err(Error::SpectralCutoff {
            estimated: error,
            tolerance: config.tolerance,
        });
    }
    Ok(SpectralValue { value, error })
}

/// `∫_0^{K p} P(ξ) ξ^{-β} dξ` with `P` linearly interpolated between `m`
/// samples per period. Panels near the origin evaluate `P` directly, and the
/// first one factors out the double zero of `P` at the origin.
fn periodic_integral(
    cf: &[f64],
    cg: &[f64],
    delta: f64,
    m: usize,
    periods: usize,
    beta: f64,
) -> f64 {
    let p = sampled_product(cf, cg, m);
    let step = 2.0 * PI / (delta * m as f64);
    let gauss = GaussRule::legendre(8);
    let origin = GaussRule::jacobi(8, 0.0, 2.0 - beta);
    let half = 0.5 * step;
    let mut total = 0.0;
    for (y, w) in origin.nodes.iter().zip(&origin.weights) {
        let x = half * (1.0 + y);
        total += w * direct_product(cf, cg, delta, x) / (x * x);
    }
    total *= half.powf(3.0 - beta);
    for q in 0..periods {
        for k in 0..m {
            let idx = q * m + k;
            if idx == 0 {
                continue;
            }
            let mid = (idx as f64 + 0.5) * step;
            let panel: f64 = if idx < DIRECT_PANELS {
                gauss
                    .nodes
                    .iter()
                    .zip(&gauss.weights)
                    .map(|(&y, &w)| {
                        let x = mid + half * y;
                        w * direct_product(cf, cg, delta, x) * x.powf(-beta)
                    })
                    .sum()
            } else {
                let (p0, p1) = (p[k], p[(k + 1) % m]);
                gauss
                    .nodes
                    .iter()
                    .zip(&gauss.weights)
                    .map(|(&y, &w)| {
                        let x = mid + half * y;
                        let lin = p0 + (p1 - p0) * (0.5 * (1.0 + y));
                        w * lin * x.powf(-beta)
                    })
                    .sum()
            };
            total += half * panel;
        }
    }
    total
}

const DIRECT_PANELS: usize = 64;

fn direct_product(cf: &[f64], cg: &[f64], delta: f64, xi: f64) -> f64 {
    let (mut fr, mut fi, mut gr, mut gi) = (0.0, 0.0, 0.0, 0.0);
    for (j, (a, b)) in cf.iter().zip(cg).enumerate() {
        let (s, c) = (xi * delta * j as f64).sin_cos();
        fr += a * c;
        fi -= a * s;
        gr += b * c;
        gi -= b * s;
    }
    fr * gr + fi * gi
}

/// `Re(F_f conj(F_g))` at `m` equally spaced frequencies over one period.
fn sampled_product(cf: &[f64], cg: &[f64], m: usize) -> Vec<f64> {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let pad = |c: &[f64]| {
        let mut v = vec![Complex::new(0.0, 0.0); m];
        for (slot, &x) in v.iter_mut().zip(c) {
            *slot = Complex::new(x, 0.0);
        }
        v
    };
    let mut a = pad(cf);
    let mut b = pad(cg);
    fft.process(&mut a);
    fft.process(&mut b);
    a.iter().zip(&b).map(|(x, y)| (x * y.conj()).re).collect()
}
