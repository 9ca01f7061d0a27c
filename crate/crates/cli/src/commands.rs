use std::time::Instant;

use fouberry::fbm_sampler::{autocov_stationary, read_batch, sample_batch, write_batch, SamplerConfig};
use fouberry::hilbert_quad::spectral_constant;
use fouberry::kernel_limits::{
    a_limit, bt_gram, bt_quadrature, bt_residual, delta_h, psi_stats_extrapolated, sigma2, verify_lemmas,
};
use fouberry::mc_estimator::{mc_run_with_batches, ReplicationPlan};
use fouberry::{HurstModel, UniformGrid};
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::report::{Assertion, ReportBundle, Table};

type Outcome = (Value, Table, Vec<Assertion>);

/// Runs one command and collects its report; nothing is written.
pub fn run(config: &RunConfig) -> Result<ReportBundle, CliError> {
    config.validate()?;
    let start = Instant::now();
    let (values, table, assertions) = match config.command {
        Command::Limits => limits(config)?,
        Command::Lemmas => lemmas(config)?,
        Command::Psi => psi(config)?,
        Command::BerryEsseen => berry_esseen(config)?,
        Command::Sample => sample(config)?,
    };
    Ok(ReportBundle {
        config: config.clone(),
        values,
        table,
        assertions,
        wall_time: start.elapsed(),
    })
}

fn model(c: &RunConfig, horizon: f64) -> Result<HurstModel, CliError> {
    Ok(HurstModel::new(c.hurst, c.theta, horizon)?)
}

fn default_cells(horizon: f64) -> usize {
    ((50.0 * horizon).round() as usize).max(1)
}

fn limits(c: &RunConfig) -> Result<Outcome, CliError> {
    let (h, theta) = (c.hurst, c.theta);
    let s2 = sigma2(h)?;
    let a = a_limit(h, theta)?;
    let d = delta_h(h)?;
    let mut table = Table::new(&["T", "b_t", "b_t_error", "b_t_minus_a", "b_t_minus_a_error", "gram_n", "b_t_gram"]);
    for &t in &c.t_ladder {
        let m = model(c, t)?;
        let b = bt_quadrature(&m, c.tolerance)?;
        let r = bt_residual(&m, c.tolerance, 1e-6)?;
        let n = c.grid_n.unwrap_or_else(|| default_cells(t));
        let g = bt_gram(&m, &UniformGrid::for_model(&m, n)?)?;
        table.push(vec![t.into(), b.value.into(), b.error.into(), r.value.into(), r.error.into(), n.into(), g.into()]);
    }
    let values = json!({
        "sigma2": s2,
        "a_limit": a,
        "delta_h": d,
        "spectral_constant": spectral_constant(h),
        "t_norm_g_squared_limit": d / (2.0 * theta.powf(1.0 + 4.0 * h)),
        "t_inner_fg_squared_limit": d * d / (4.0 * theta.powf(1.0 + 8.0 * h) * s2),
    });
    let assertions = vec![Assertion::new(
        "constants_positive",
        s2 > 0.0 && a > 0.0 && d > 0.0,
        format!("sigma2 = {s2}, a = {a}, delta_h = {d}"),
    )];
    Ok((values, table, assertions))
}

fn lemmas(c: &RunConfig) -> Result<Outcome, CliError> {
    let reports = verify_lemmas(&c.lemma_ids, c.hurst, c.theta, &c.t_ladder, &c.policy)?;
    let mut table = Table::new(&["lemma", "T", "value", "error", "reference"]);
    let mut assertions = Vec::new();
    for r in &reports {
        let name = r.lemma.to_string();
        for ((t, v), e) in r.horizons.iter().zip(&r.values).zip(&r.errors) {
            table.push(vec![name.as_str().into(), (*t).into(), (*v).into(), (*e).into(), r.reference.into()]);
        }
        assertions.push(Assertion::new(
            &name,
            r.passed,
            format!("fitted exponent {} ({})", r.fitted_exponent, r.rule),
        ));
    }
    Ok((json!({ "reports": reports }), table, assertions))
}

fn psi(c: &RunConfig) -> Result<Outcome, CliError> {
    let mut table = Table::new(&["T", "psi1", "psi1_error", "psi2", "psi2_error", "psi3", "psi3_error", "b_t"]);
    let mut estimates = Vec::new();
    for &t in &c.t_ladder {
        let e = psi_stats_extrapolated(&model(c, t)?, &c.policy)?;
        let r = &e.report;
        table.push(vec![
            t.into(),
            r.psi1.into(),
            e.errors[0].into(),
            r.psi2.into(),
            e.errors[1].into(),
            r.psi3.into(),
            e.errors[2].into(),
            r.b_t.into(),
        ]);
        estimates.push(e);
    }
    let mut assertions = Vec::new();
    for k in 0..3 {
        let pick = |i: usize| {
            let r = &estimates[i].report;
            ([r.psi1, r.psi2, r.psi3][k], estimates[i].errors[k])
        };
        let mut ok = true;
        let mut worst = f64::INFINITY;
        for i in 1..estimates.len() {
            let ((v0, e0), (v1, e1)) = (pick(i - 1), pick(i));
            let margin = (v0 - v1) - (e0 + e1);
            worst = worst.min(margin);
            ok &= margin > 0.0;
        }
        assertions.push(Assertion::new(
            &format!("psi{}_decreasing", k + 1),
            ok,
            format!("smallest drop beyond combined error bars: {worst}"),
        ));
    }
    Ok((json!({ "estimates": estimates }), table, assertions))
}

fn berry_esseen(c: &RunConfig) -> Result<Outcome, CliError> {
    let mut plan = ReplicationPlan::new(c.hurst, c.theta, c.t_ladder.clone(), c.paths, c.seed)?;
    plan.cells_per_unit = c.mc_cells_per_unit;
    plan.refine = c.refine;
    plan.alpha = c.alpha;
    plan.estimator = c.estimator;
    plan.bias_subsample = c.bias_subsample;
    let batches = c
        .batches
        .iter()
        .map(|p| Ok(read_batch(std::io::BufReader::new(std::fs::File::open(p)?))?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = mc_run_with_batches(&plan, &batches)?;
    let mut table = Table::new(&[
        "T",
        "n",
        "used",
        "distance",
        "dkw_radius",
        "mean",
        "variance",
        "excluded_small",
        "excluded_negative",
        "b_t",
        "b_t_gram",
        "bias_mean",
        "bias_std_error",
        "bias_mean_abs",
        "presampled",
    ]);
    for p in &report.points {
        table.push(vec![
            p.horizon.into(),
            p.n.into(),
            p.used.into(),
            p.distance.into(),
            p.dkw_radius.into(),
            p.mean.into(),
            p.variance.into(),
            p.excluded_small.into(),
            p.excluded_negative.into(),
            p.b_t.into(),
            p.b_t_gram.into(),
            p.bias.mean_difference.into(),
            p.bias.std_error.into(),
            p.bias.mean_abs_difference.into(),
            p.presampled.into(),
        ]);
    }
    let pts = &report.points;
    let (first, last) = (&pts[0], &pts[pts.len() - 1]);
    let drop = first.distance - last.distance;
    let radii = first.dkw_radius + last.dkw_radius;
    let assertions = vec![
        Assertion::new(
            "distances_in_unit_interval",
            pts.iter().all(|p| (0.0..=1.0).contains(&p.distance)),
            "Kolmogorov distances lie in [0, 1]".into(),
        ),
        Assertion::new(
            "decay_resolved",
            drop > radii,
            format!("D(T={}) - D(T={}) = {drop} vs summed DKW radii {radii}", first.horizon, last.horizon),
        ),
        Assertion::new(
            "fitted_exponent_negative",
            report.fitted_exponent < 0.0,
            format!(
                "fitted {} vs predicted {} (not asserted; floor {})",
                report.fitted_exponent, report.predicted_exponent, report.mc_floor
            ),
        ),
    ];
    Ok((serde_json::to_value(&report).expect("report serializes"), table, assertions))
}

fn sample(c: &RunConfig) -> Result<Outcome, CliError> {
    let mut table = Table::new(&[
        "T",
        "n",
        "paths",
        "var_endpoint",
        "target",
        "z_score",
        "lag1_autocorr",
        "lag1_target",
        "clamped_mass",
    ]);
    let mut assertions = Vec::new();
    let mut dumps = Vec::new();
    for (index, &t) in c.t_ladder.iter().enumerate() {
        let m = model(c, t)?;
        let n = c.grid_n.unwrap_or_else(|| default_cells(t));
        let mut cfg = SamplerConfig::new(c.method, c.seed, n, m);
        cfg.namespace = index as u32;
        let batch = sample_batch(&cfg, 0, c.paths)?;
        let ends = batch.endpoints();
        let k = ends.len() as f64;
        let var = ends.iter().map(|x| x * x).sum::<f64>() / k;
        let target = t.powf(2.0 * c.hurst);
        let z = (var - target) / (target * (2.0 / k).sqrt());
        let grid = batch.grid;
        let (mut num, mut den) = (0.0, 0.0);
        for row in batch.rows() {
            num += row.windows(2).map(|w| w[0] * w[1]).sum::<f64>();
            den += row.iter().map(|x| x * x).sum::<f64>();
        }
        let lag1 = if n > 1 { num / den * n as f64 / (n - 1) as f64 } else { f64::NAN };
        let lag1_target = autocov_stationary(&m, &grid, 1) / autocov_stationary(&m, &grid, 0);
        table.push(vec![
            t.into(),
            n.into(),
            c.paths.into(),
            var.into(),
            target.into(),
            z.into(),
            lag1.into(),
            lag1_target.into(),
            batch.provenance.clamped_mass.into(),
        ]);
        assertions.push(Assertion::new(
            &format!("variance_T{t}"),
            z.abs() <= 5.0,
            format!("sample Var(B_T) {var} vs T^(2H) {target}, z = {z}"),
        ));
        if c.dump {
            std::fs::create_dir_all(&c.out_dir)?;
            let path = c.out_dir.join(format!("paths_T{t}.bin"));
            write_batch(&batch, std::io::BufWriter::new(std::fs::File::create(&path)?))?;
            dumps.push(path.display().to_string());
        }
    }
    Ok((json!({ "dumps": dumps }), table, assertions))
}
