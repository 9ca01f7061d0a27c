//! Shared fixtures for the benchmarks.

use fouberry::frac_cov::{HurstModel, UniformGrid};

/// The rough reference model `H = 1/4`, `θ = 1` on `[0, horizon]`.
pub fn rough_model(horizon: f64) -> HurstModel {
    HurstModel::new(0.25, 1.0, horizon).expect("valid model")
}

pub fn grid(model: &HurstModel, n: usize) -> UniformGrid {
    UniformGrid::for_model(model, n).expect("valid grid")
}

/// Grid sizes swept by the size-scaling benchmarks.
pub const SIZES: [usize; 3] = [256, 512, 1024];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        let m = rough_model(10.0);
        assert_eq!(grid(&m, 500).step(), 0.02);
    }
}
