//! Numerics for the rate of normal approximation of the least-squares drift
//! estimator of a fractional Ornstein-Uhlenbeck process with `H < 1/2`.

pub mod error;
pub mod fbm_sampler;
pub mod frac_cov;
pub mod hilbert_quad;
pub mod kernel_limits;
pub mod mc_estimator;
pub mod quad;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use fbm_sampler::{PathBatch, SamplerConfig, SamplerMethod};
pub use frac_cov::{cov, cov_partial_t, increment_gram, HurstModel, IncrementGram, UniformGrid};
pub use hilbert_quad::{StepKernel1D, StepKernel2D};
pub use kernel_limits::{GridPolicy, KernelFamily};
pub use mc_estimator::{BerryEsseenReport, EstimatorKind, ReplicationPlan, StatSample};
