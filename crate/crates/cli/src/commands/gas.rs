use serde::Deserialize;
use wickfock::anyon_gas::{lattice_laplacian, thermo_limit_scan, Boundary, Coincidence, LatticeSpec, PhaseFn};

use crate::config::ConfigFile;
use crate::error::{invalid, CliError};
use crate::table::{OutputFormat, ResultTable};
use crate::{Outcome, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BoundaryName {
    Dirichlet,
    Neumann,
    Robin,
    Periodic,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(BoundaryName),
    Many(Vec<BoundaryName>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PhaseKind {
    LmSign,
    Mollified,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum CoincidenceName {
    Symmetric,
    Exclusion,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseConfig {
    kind: PhaseKind,
    theta: Option<f64>,
    /// Direction vector; defaults to the first lattice axis.
    u: Option<Vec<f64>>,
    /// Mollifier width in sites.
    width: Option<f64>,
    coincident: Option<CoincidenceName>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GasConfig {
    dims: Vec<Vec<usize>>,
    boundary: OneOrMany,
    sigma: Option<Vec<f64>>,
    spacing: Option<f64>,
    phase: PhaseConfig,
    beta: f64,
    mu: Option<f64>,
    /// Fugacity `e^{βμ}`; give this or `mu`.
    z: Option<f64>,
    n_max: usize,
}

impl PhaseConfig {
    fn build(&self, dimension: usize) -> Result<PhaseFn, CliError> {
        let u = self.u.clone().unwrap_or_else(|| {
            let mut e = vec![0.0; dimension];
            e[0] = 1.0;
            e
        });
        if u.len() != dimension {
            return Err(invalid(format!(
                "phase.u has length {} but the lattices have dimension {dimension}",
                u.len()
            )));
        }
        let theta = || self.theta.ok_or_else(|| invalid("phase kind needs `theta`"));
        let phase = match self.kind {
            PhaseKind::LmSign => {
                if self.width.is_some() {
                    return Err(invalid("`width` is not used by phase kind `lm_sign`"));
                }
                let coincident = match self.coincident.unwrap_or(CoincidenceName::Symmetric) {
                    CoincidenceName::Symmetric => Coincidence::Symmetric,
                    CoincidenceName::Exclusion => Coincidence::Exclusion,
                };
                PhaseFn::lm_sign(theta()?, &u, coincident)?
            }
            PhaseKind::Mollified => {
                if self.coincident.is_some() {
                    return Err(invalid("`coincident` is not used by phase kind `mollified`"));
                }
                let width = self
                    .width
                    .ok_or_else(|| invalid("phase kind `mollified` needs `width`"))?;
                PhaseFn::mollified(theta()?, &u, width)?
            }
            PhaseKind::Zero => {
                for (key, present) in [
                    ("theta", self.theta.is_some()),
                    ("u", self.u.is_some()),
                    ("width", self.width.is_some()),
                    ("coincident", self.coincident.is_some()),
                ] {
                    if present {
                        return Err(invalid(format!("`{key}` is not used by phase kind `zero`")));
                    }
                }
                PhaseFn::zero()
            }
        };
        Ok(phase)
    }
}

pub(crate) fn anyon_gas(file: &ConfigFile, _cfg: &RunConfig) -> Result<Outcome, CliError> {
    let gc: GasConfig = file.parse()?;
    let dimension = gc
        .dims
        .first()
        .map(Vec::len)
        .ok_or_else(|| invalid("`dims` is empty"))?;
    if let Some(bad) = gc.dims.iter().find(|d| d.len() != dimension) {
        return Err(invalid(format!("all lattices need dimension {dimension}, got {bad:?}")));
    }
    let boundaries = match gc.boundary {
        OneOrMany::One(b) => vec![b],
        OneOrMany::Many(v) => v,
    };
    if boundaries.is_empty() {
        return Err(invalid("`boundary` is empty"));
    }
    let robin = boundaries.contains(&BoundaryName::Robin);
    match (&gc.sigma, robin) {
        (None, true) => return Err(invalid("robin boundary needs `sigma`")),
        (Some(_), false) => return Err(invalid("`sigma` is only used with a robin boundary")),
        _ => {}
    }
    let beta = gc.beta;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid(format!("beta must be finite and positive, got {beta}")));
    }
    let mu = match (gc.mu, gc.z) {
        (Some(mu), None) => mu,
        (None, Some(z)) if z > 0.0 && z.is_finite() => z.ln() / beta,
        (None, Some(z)) => return Err(invalid(format!("fugacity z must be positive, got {z}"))),
        _ => return Err(invalid("give exactly one of `mu` and `z`")),
    };
    let spacing = gc.spacing.unwrap_or(1.0);

    let mut family = Vec::with_capacity(gc.dims.len() * boundaries.len());
    for dims in &gc.dims {
        for b in &boundaries {
            let boundary = match b {
                BoundaryName::Dirichlet => Boundary::Dirichlet,
                BoundaryName::Neumann => Boundary::Neumann,
                BoundaryName::Periodic => Boundary::Periodic,
                BoundaryName::Robin => Boundary::Robin(gc.sigma.clone().unwrap_or_default()),
            };
            family.push(LatticeSpec::new(dims.clone(), spacing, boundary)?);
        }
    }
    let r = gc.phase.build(dimension)?;
    for spec in &family {
        r.validate(spec)?;
    }
    let report = thermo_limit_scan(&family, &r, beta, mu, gc.n_max)?;

    let mut table = ResultTable::new(&["L", "boundary", "P_r", "delta_P", "bc_gap", "truncation_estimate"]);
    for row in &report.rows {
        let label = row.dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
        table.push(vec![
            label.into(),
            row.boundary.as_str().into(),
            row.free_energy_density.into(),
            row.delta_p.into(),
            row.bc_gap.into(),
            row.truncation_estimate.into(),
        ]);
    }
    let largest = family
        .iter()
        .max_by(|a, b| a.volume().total_cmp(&b.volume()))
        .expect("family is non-empty");
    Ok(Outcome {
        table,
        default_format: OutputFormat::Csv,
        dump: Some(lattice_laplacian(largest)?),
    })
}
