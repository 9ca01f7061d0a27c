use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use fouberry::kernel_limits::{GridPolicy, LemmaId};
use fouberry::{EstimatorKind, SamplerMethod};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Limit constants and b_T along the ladder.
    Limits,
    /// Numerical rate checks of the kernel lemmas.
    Lemmas,
    /// Extrapolated Ψ statistics along the ladder.
    Psi,
    /// Monte Carlo Kolmogorov distances of the normalized estimator.
    BerryEsseen,
    /// Sample fBm increment batches and check their variance.
    Sample,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Limits => "limits",
            Command::Lemmas => "lemmas",
            Command::Psi => "psi",
            Command::BerryEsseen => "berry-esseen",
            Command::Sample => "sample",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    ChaosRatio,
    DiscreteLse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Circulant,
    Cholesky,
}

/// Numerics for the Berry-Esséen rate of the least-squares drift estimator
/// of a rough fractional Ornstein-Uhlenbeck process.
#[derive(Debug, Clone, Parser)]
#[command(name = "fouberry", version)]
pub struct Cli {
    pub command: Command,
    #[arg(long, default_value_t = 0.25)]
    pub hurst: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Comma-separated horizons.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    pub tladder: Vec<f64>,
    /// Cells of the sampling grid (sample) or the Gram grid (limits); default 50 T.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Monte Carlo paths per horizon.
    #[arg(long, default_value_t = 5000)]
    pub paths: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Absolute tolerance of the b_T quadrature.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Grid cells per unit of θT for the kernel-norm grids, or per unit of T
    /// for the Monte Carlo grids.
    #[arg(long)]
    pub cells_per_unit: Option<f64>,
    /// Number of doubling grids used for extrapolation.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub min_cells: Option<usize>,
    /// Lemma ids (L31, L32, L33, C34, L35); all when omitted.
    #[arg(long = "id", value_delimiter = ',')]
    pub ids: Vec<String>,
    #[arg(long, value_enum, default_value = "chaos-ratio")]
    pub estimator: EstimatorArg,
    /// Double every Monte Carlo grid.
    #[arg(long)]
    pub refine: bool,
    #[arg(long, value_enum, default_value = "circulant")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Paths re-simulated on doubled grids to measure discretization bias.
    #[arg(long, default_value_t = 200)]
    pub bias_subsample: usize,
    /// Pre-sampled batch dumps to use instead of inline sampling.
    #[arg(long = "batch")]
    pub batches: Vec<PathBuf>,
    /// Write the sampled batches as binary dumps.
    #[arg(long)]
    pub dump: bool,
    #[arg(long, default_value = "fouberry-out")]
    pub out: PathBuf,
}

/// Validated settings of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub hurst: f64,
    pub theta: f64,
    pub t_ladder: Vec<f64>,
    pub grid_n: Option<usize>,
    pub paths: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub policy: GridPolicy,
    pub mc_cells_per_unit: f64,
    pub lemma_ids: Vec<LemmaId>,
    pub estimator: EstimatorKind,
    pub refine: bool,
    pub method: SamplerMethod,
    pub alpha: f64,
    pub bias_subsample: usize,
    pub batches: Vec<PathBuf>,
    pub dump: bool,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

fn usage(name: &str, value: impl std::fmt::Display, bound: &str) -> CliError {
    CliError::Usage(format!("--{name} = {value} violates: {bound}"))
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let default_policy = GridPolicy::default();
        let policy = GridPolicy {
            cells_per_unit: cli.cells_per_unit.unwrap_or(default_policy.cells_per_unit),
            min_cells: cli.min_cells.unwrap_or(default_policy.min_cells),
            levels: cli.levels.unwrap_or(default_policy.levels),
        };
        let lemma_ids = if cli.ids.is_empty() {
            LemmaId::ALL.to_vec()
        } else {
            cli.ids
                .iter()
                .map(|s| s.parse().map_err(|_| usage("id", s, "one of L31, L32, L33, C34, L35")))
                .collect::<Result<_, _>>()?
        };
        let cfg = RunConfig {
            command: cli.command,
            hurst: cli.hurst,
            theta: cli.theta,
            t_ladder: cli.tladder,
            grid_n: cli.grid_n,
            paths: cli.paths,
            seed: cli.seed,
            tolerance: cli.tol,
            policy,
            mc_cells_per_unit: cli.cells_per_unit.unwrap_or(50.0),
            lemma_ids,
            estimator: match cli.estimator {
                EstimatorArg::ChaosRatio => EstimatorKind::ChaosRatio,
                EstimatorArg::DiscreteLse => EstimatorKind::DiscreteLse,
            },
            refine: cli.refine,
            method: match cli.method {
                MethodArg::Circulant => SamplerMethod::Circulant,
                MethodArg::Cholesky => SamplerMethod::Cholesky,
            },
            alpha: cli.alpha,
            bias_subsample: cli.bias_subsample,
            batches: cli.batches,
            dump: cli.dump,
            out_dir: cli.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default settings for `command`, as if invoked without flags.
    pub fn defaults(command: Command) -> Self {
        let cli = Cli::parse_from(["fouberry", command.name()]);
        RunConfig::from_cli(cli).expect("defaults are valid")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let rough = self.hurst > 0.0 && self.hurst < 0.5;
        let any_hurst = self.hurst > 0.0 && self.hurst < 1.0;
        match self.command {
            Command::Sample if !any_hurst => return Err(usage("hurst", self.hurst, "in (0, 1)")),
            Command::Limits | Command::Lemmas | Command::Psi | Command::BerryEsseen if !rough => {
                return Err(usage("hurst", self.hurst, "in (0, 1/2)"))
            }
            _ => {}
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(usage("theta", self.theta, "> 0"));
        }
        if self.t_ladder.is_empty() {
            return Err(usage("tladder", "[]", "at least one horizon"));
        }
        for (i, &t) in self.t_ladder.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(usage("tladder", t, "horizons > 0"));
            }
            if i > 0 && t <= self.t_ladder[i - 1] {
                return Err(usage("tladder", t, "strictly increasing"));
            }
        }
        if let Some(n) = self.grid_n {
            if n == 0 {
                return Err(usage("grid-n", n, ">= 1"));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(usage("tol", self.tolerance, "> 0"));
        }
        if !(self.policy.cells_per_unit > 0.0 && self.mc_cells_per_unit > 0.0) {
            return Err(usage("cells-per-unit", self.mc_cells_per_unit, "> 0"));
        }
        if !(3..=12).contains(&self.policy.levels) {
            return Err(usage("levels", self.policy.levels, "in [3, 12]"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(usage("alpha", self.alpha, "in (0, 1)"));
        }
        match self.command {
            Command::Lemmas => {
                if self.t_ladder.len() < 4 {
                    return Err(usage("tladder", self.t_ladder.len(), "at least 4 horizons"));
                }
                for w in self.t_ladder.windows(2) {
                    if (w[1] - 2.0 * w[0]).abs() > 1e-9 * w[1] {
                        return Err(usage("tladder", w[1], "each horizon twice the previous"));
                    }
                }
            }
            Command::Psi if self.t_ladder.len() < 2 => {
                return Err(usage("tladder", self.t_ladder.len(), "at least 2 horizons"));
            }
            Command::BerryEsseen => {
                if self.t_ladder.len() < 3 {
                    return Err(usage("tladder", self.t_ladder.len(), "at least 3 horizons"));
                }
                if self.paths < 100 {
                    return Err(usage("paths", self.paths, ">= 100"));
                }
            }
            Command::Sample => {
                if self.paths < 2 {
                    return Err(usage("paths", self.paths, ">= 2"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}
