use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use super::lattice::{lattice_laplacian, LatticeSpec};
use super::operators::{exchange_weights, sort_word, word_product};
use super::phase::PhaseFn;
use crate::error::{Error, Result};
use crate::fock::factorial;
use crate::tensor::{check_size, matrix_semigroup, tensor_dim, CMatrix, MultiIndex, C64};
use crate::thermo::{free_energy_density, PartitionResult};

/// `Tr(R_n G^{⊗n})` without forming either operator: each `R(π)` is a phased
/// permutation `e_y ↦ c(y) e_{t(y)}`, whose trace against `G^{⊗n}` is
/// `Σ_y c(y) Π_k G[y_k, t(y)_k]`.
pub fn r_trace(spec: &LatticeSpec, r: &PhaseFn, g: &CMatrix, n: usize) -> Result<f64> {
    let sites = spec.sites();
    if g.shape() != (sites, sites) {
        return Err(Error::Dimension(format!(
            "one-particle operator must be {sites}x{sites}"
        )));
    }
    if n == 0 {
        return Ok(1.0);
    }
    check_size("r-trace", tensor_dim(sites, n), 1)?;
    let w = exchange_weights(spec, r)?;
    let mut total = C64::default();
    for pi in (0..n).permutations(n) {
        let rep = word_product(&w, n, &sort_word(&pi, false))?;
        for (y, (&t, &coeff)) in rep.target().iter().zip(rep.coeff()).enumerate() {
            let src = MultiIndex::decode(y, sites, n);
            let dst = MultiIndex::decode(t, sites, n);
            let weight = src
                .digits()
                .iter()
                .zip(dst.digits())
                .fold(coeff, |acc, (&a, &b)| acc * g[(a, b)]);
            total += weight;
        }
    }
    Ok(total.re / factorial(n))
}

#[derive(Debug, Clone, Serialize)]
pub struct GasRow {
    pub dims: Vec<usize>,
    pub boundary: String,
    pub volume: f64,
    pub free_energy_density: f64,
    /// Change from the previous smaller lattice with the same boundary condition.
    pub delta_p: Option<f64>,
    /// Largest gap to another boundary condition on the same box.
    pub bc_gap: Option<f64>,
    pub n_max: usize,
    /// `(z Tr e^{−βh})^{n_max + 1}`.
    pub truncation_estimate: f64,
    pub partition: PartitionResult,
}

/// Rows ordered by volume (ties keep input order).
#[derive(Debug, Clone, Serialize)]
pub struct GasReport {
    pub rows: Vec<GasRow>,
}

fn gas_partition(spec: &LatticeSpec, r: &PhaseFn, beta: f64, mu: f64, n_max: usize) -> Result<PartitionResult> {
    let h = lattice_laplacian(spec)?;
    let g = matrix_semigroup(&h, beta)?;
    let z = (beta * mu).exp();
    let z1 = z * g.trace().re;
    let per_level_traces = (0..=n_max)
        .map(|n| Ok(z.powi(n as i32) * r_trace(spec, r, &g, n)?))
        .collect::<Result<Vec<f64>>>()?;
    let partial_sum: f64 = per_level_traces.iter().sum();
    let free_reference: f64 = (0..=n_max).map(|n| z1.powi(n as i32)).sum();
    Ok(PartitionResult {
        per_level_traces,
        partial_sum,
        free_reference,
        relative_gap: (partial_sum - free_reference).abs() / free_reference,
        z1,
        truncation_estimate: z1.powi(n_max as i32 + 1),
    })
}

/// Free-energy densities `|Λ|^{-1} ln Σ_{n≤n_max} e^{βμn} Tr(R_n e^{−βh^{⊗n}})`
/// with `h = −Δ` for every lattice of the family.
pub fn thermo_limit_scan(family: &[LatticeSpec], r: &PhaseFn, beta: f64, mu: f64, n_max: usize) -> Result<GasReport> {
    if n_max > 4 {
        return Err(Error::InvalidParameter(format!(
            "gas scans sum over n!; n_max = {n_max} exceeds 4"
        )));
    }
    if !(beta >= 0.0 && beta.is_finite() && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need finite beta >= 0 and mu, got {beta}, {mu}"
        )));
    }
    let partitions: Vec<PartitionResult> = family
        .par_iter()
        .map(|spec| gas_partition(spec, r, beta, mu, n_max))
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..family.len()).collect();
    order.sort_by(|&a, &b| family[a].volume().total_cmp(&family[b].volume()).then(a.cmp(&b)));

    let mut rows: Vec<GasRow> = Vec::with_capacity(family.len());
    for &i in &order {
        let spec = &family[i];
        let p = free_energy_density(spec.volume(), &partitions[i])?;
        let boundary = spec.boundary().name().to_string();
        let delta_p = rows
            .iter()
            .rev()
            .find(|row| row.boundary == boundary && row.dims.len() == spec.dimension())
            .map(|prev| (p - prev.free_energy_density).abs());
        rows.push(GasRow {
            dims: spec.dims().to_vec(),
            boundary,
            volume: spec.volume(),
            free_energy_density: p,
            delta_p,
            bc_gap: None,
            n_max,
            truncation_estimate: partitions[i].truncation_estimate,
            partition: partitions[i].clone(),
        });
    }
    let gaps: Vec<Option<f64>> = rows
        .iter()
        .map(|row| {
            rows.iter()
                .filter(|other| other.dims == row.dims && other.boundary != row.boundary)
                .map(|other| (other.free_energy_density - row.free_energy_density).abs())
                .reduce(f64::max)
        })
        .collect();
    for (row, gap) in rows.iter_mut().zip(gaps) {
        row.bc_gap = gap;
    }
    Ok(GasReport { rows })
}
