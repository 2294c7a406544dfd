use serde::Deserialize;
use serde_json::Value;
use wickfock::deformation::classify;
use wickfock::fock::build_metric;
use wickfock::thermo::{boltzmann_factor, module_trace, truncation_estimate};

use crate::config::{self, ConfigFile, DeformationConfig};
use crate::error::{invalid, CliError};
use crate::table::{Cell, OutputFormat, ResultTable};
use crate::{Outcome, RunConfig};

pub(crate) fn check_deformation(file: &ConfigFile, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let deformation: DeformationConfig = file.parse()?;
    let t = deformation.build(&file.base, cfg.seed)?;
    let report = classify(&t);
    let mut table = ResultTable::new(&[
        "d",
        "selfadjoint",
        "positive",
        "norm",
        "ybe_residual",
        "anyonic_residual",
        "applicable_conditions",
    ]);
    table.push(vec![
        t.d().into(),
        report.selfadjoint.into(),
        report.positive.into(),
        report.norm.into(),
        report.ybe_residual.into(),
        report.anyonic_residual.into(),
        Cell::List(report.applicable_conditions.iter().map(|&c| c as i64).collect()),
    ]);
    Ok(Outcome {
        table,
        default_format: OutputFormat::Json,
        dump: Some(t.matrix().clone()),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FockConfig {
    deformation: DeformationConfig,
    cutoff: Option<usize>,
}

fn cutoff(from_config: Option<usize>, cfg: &RunConfig) -> Result<usize, CliError> {
    cfg.cutoff
        .or(from_config)
        .ok_or_else(|| invalid("missing cutoff: set `cutoff` in the config or pass --cutoff"))
}

pub(crate) fn build_fock(file: &ConfigFile, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let fc: FockConfig = file.parse()?;
    let n_max = cutoff(fc.cutoff, cfg)?;
    let t = fc.deformation.build(&file.base, cfg.seed)?;
    let m = build_metric(&t, n_max)?;
    let mut table = ResultTable::new(&["n", "dim_free", "dim_quotient", "min_eig", "projector_residual"]);
    for n in 0..=n_max {
        table.push(vec![
            n.into(),
            m.free_dim(n).into(),
            m.quotient_dim(n).into(),
            m.level(n).min_eig.into(),
            m.projector_residual(n).into(),
        ]);
    }
    Ok(Outcome {
        table,
        default_format: OutputFormat::Json,
        dump: Some(m.metric(n_max).clone()),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionConfig {
    deformation: DeformationConfig,
    h: Value,
    beta: f64,
    #[serde(default)]
    mu: f64,
    cutoff: Option<usize>,
}

pub(crate) fn partition(file: &ConfigFile, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pc: PartitionConfig = file.parse()?;
    let n_max = cutoff(pc.cutoff, cfg)?;
    if !(pc.beta.is_finite() && pc.beta >= 0.0 && pc.mu.is_finite()) {
        return Err(invalid(format!(
            "need finite beta >= 0 and mu, got {} and {}",
            pc.beta, pc.mu
        )));
    }
    let t = pc.deformation.build(&file.base, cfg.seed)?;
    let h = config::matrix(&pc.h, &file.base, "h")?;
    let m = build_metric(&t, n_max)?;
    let res = module_trace(&m, &h, pc.beta, pc.mu)?;

    let mut table = ResultTable::new(&[
        "n",
        "trace_n",
        "cumulative",
        "free_reference",
        "gap",
        "truncation_estimate",
    ]);
    let (mut cumulative, mut free) = (0.0, 0.0);
    for (n, &trace) in res.per_level_traces.iter().enumerate() {
        cumulative += trace;
        free += res.z1.powi(n as i32);
        table.push(vec![
            n.into(),
            trace.into(),
            cumulative.into(),
            free.into(),
            ((cumulative - free).abs() / free).into(),
            truncation_estimate(res.z1, n).into(),
        ]);
    }
    Ok(Outcome {
        table,
        default_format: OutputFormat::Csv,
        dump: Some(boltzmann_factor(&h, pc.beta, pc.mu)?),
    })
}
