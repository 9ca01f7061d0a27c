//! Exact sampling of fBm increments on uniform grids.

mod cholesky;
mod circulant;
mod dump;
mod energy;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_cov::{HurstModel, UniformGrid};
use crate::rng::ReplicateRng;

pub use cholesky::{cholesky_lower, CholeskySampler};
pub use circulant::CirculantSampler;
pub use dump::{read_batch, write_batch};
pub use energy::{energy_distance_test, EnergyTest};

/// `γ(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) Δ^{2H} / 2`.
pub fn autocov_stationary(model: &HurstModel, grid: &UniformGrid, lag: usize) -> f64 {
    let two_h = 2.0 * model.hurst();
    let k = lag as f64;
    let p = |x: f64| x.abs().powf(two_h);
    0.5 * (p(k + 1.0) - 2.0 * p(k) + p(k - 1.0)) * grid.step().powf(two_h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMethod {
    Circulant,
    Cholesky,
}

pub const DEFAULT_CHOLESKY_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub method: SamplerMethod,
    pub seed: u64,
    pub n: usize,
    pub model: HurstModel,
    pub cholesky_cap: usize,
    /// Upper 32 bits of every replicate's stream id.
    pub namespace: u32,
}

impl SamplerConfig {
    pub fn new(method: SamplerMethod, seed: u64, n: usize, model: HurstModel) -> Self {
        SamplerConfig {
            method,
            seed,
            n,
            model,
            cholesky_cap: DEFAULT_CHOLESKY_CAP,
            namespace: 0,
        }
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::for_model(&self.model, self.n)
    }
}

/// Where a batch came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Provenance {
    /// `None` for batches read back from a dump.
    pub method: Option<SamplerMethod>,
    pub seed: u64,
    pub namespace: u32,
    pub first_replicate: u32,
    /// Fraction of circulant eigenvalue mass clamped to zero.
    pub clamped_mass: f64,
}

/// `m` rows of `n` increments, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub model: HurstModel,
    pub grid: UniformGrid,
    pub m: usize,
    pub increments: Vec<f64>,
    pub provenance: Provenance,
}

impl PathBatch {
    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.increments[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.increments.chunks_exact(self.n())
    }

    /// `B_T` for each row.
    pub fn endpoints(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }
}

/// Anything that turns a random stream into one increment vector.
pub trait IncrementSampler: Sync {
    fn grid(&self) -> &UniformGrid;
    fn sample_into(&self, rng: &mut ReplicateRng, out: &mut [f64]);
    fn clamped_mass(&self) -> f64 {
        0.0
    }
}

/// Builds the sampler named by the config.
pub fn make_sampler(cfg: &SamplerConfig) -> Result<Box<dyn IncrementSampler>> {
    let grid = cfg.grid()?;
    Ok(match cfg.method {
        SamplerMethod::Circulant => Box::new(CirculantSampler::new(&cfg.model, &grid)?),
        SamplerMethod::Cholesky => {
            if cfg.n > cfg.cholesky_cap {
                return Err(Error::InvalidParameter {
                    name: "n",
                    value: cfg.n as f64,
                    bound: "<= cholesky cap",
                });
            }
            Box::new(CholeskySampler::new(&cfg.model, &grid)?)
        }
    })
}

/// Samples replicates `first .. first + m`, in parallel, deterministically.
pub fn sample_batch(cfg: &SamplerConfig, first: u32, m: usize) -> Result<PathBatch> {
    let sampler = make_sampler(cfg)?;
    let grid = *sampler.grid();
    let n = grid.n();
    let mut increments = vec![0.0; m * n];
    increments.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let mut rng = ReplicateRng::new(cfg.seed, cfg.namespace, first + i as u32);
        sampler.sample_into(&mut rng, row);
    });
    Ok(PathBatch {
        model: cfg.model,
        grid,
        m,
        increments,
        provenance: Provenance {
            method: Some(cfg.method),
            seed: cfg.seed,
            namespace: cfg.namespace,
            first_replicate: first,
            clamped_mass: sampler.clamped_mass(),
        },
    })
}

pub fn sample_circulant(cfg: &SamplerConfig, m: usize) -> Result<PathBatch> {
    sample_batch(
        &SamplerConfig {
            method: SamplerMethod::Circulant,
            ..*cfg
        },
        0,
        m,
    )
}

pub fn sample_cholesky(cfg: &SamplerConfig, m: usize) -> Result<PathBatch> {
    sample_batch(
        &SamplerConfig {
            method: SamplerMethod::Cholesky,
            ..*cfg
        },
        0,
        m,
    )
}
