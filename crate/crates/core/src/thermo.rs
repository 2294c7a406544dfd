//! Grand-canonical partition sums over truncated Fock modules.
//!
//! With `G = e^{−β(h − μ)}` the level-`n` contribution is the trace of
//! `G^{⊗n}` over the quotient `H^{⊗n} / ker P_n`. When `P_n` is strictly
//! positive this is the plain trace `(Tr G)^n`; it is still evaluated in a
//! `P_n`-orthonormal basis so the identity is checked rather than assumed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::FockModule;
use crate::tensor::{c, hermiticity_defect, identity, kron, matrix_semigroup, operator_norm, CMatrix, C64};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionResult {
    /// Quotient traces for `n = 0..=N`.
    pub per_level_traces: Vec<f64>,
    pub partial_sum: f64,
    /// Maxwell–Boltzmann sum `Σ_{n≤N} z₁ⁿ` at the same cutoff.
    pub free_reference: f64,
    /// `|partial_sum − free_reference| / free_reference`.
    pub relative_gap: f64,
    /// One-particle weight `z₁ = e^{βμ} Tr e^{−βh}`.
    pub z1: f64,
    /// `z₁^{N+1} / (1 − z₁)`, infinite when `z₁ ≥ 1`.
    pub truncation_estimate: f64,
}

fn check_h(h: &CMatrix, d: Option<usize>) -> Result<()> {
    if !h.is_square() || d.is_some_and(|d| h.nrows() != d) {
        return Err(Error::Dimension(format!(
            "one-particle Hamiltonian is {}x{}, expected {}x{}",
            h.nrows(),
            h.ncols(),
            d.unwrap_or(h.nrows()),
            d.unwrap_or(h.nrows())
        )));
    }
    let defect = hermiticity_defect(h);
    if defect > tol::HERMITIAN {
        return Err(Error::NotHermitian {
            defect,
            tolerance: tol::HERMITIAN,
        });
    }
    Ok(())
}

/// Boltzmann factor `e^{−β(h − μ)}`.
pub fn boltzmann_factor(h: &CMatrix, beta: f64, mu: f64) -> Result<CMatrix> {
    let shifted = h - identity(h.nrows()) * c(mu);
    matrix_semigroup(&shifted, beta)
}

fn one_particle_weight(h: &CMatrix, beta: f64, mu: f64) -> Result<f64> {
    let g = boltzmann_factor(h, beta, mu)?;
    Ok(g.trace().re)
}

pub fn truncation_estimate(z1: f64, cutoff: usize) -> f64 {
    if z1 < 1.0 {
        z1.powi(cutoff as i32 + 1) / (1.0 - z1)
    } else {
        f64::INFINITY
    }
}

/// `Σ_{n≤N} (e^{βμ} Tr e^{−βh})ⁿ`.
pub fn free_trace(h: &CMatrix, beta: f64, mu: f64, cutoff: usize) -> Result<f64> {
    check_h(h, None)?;
    let z1 = one_particle_weight(h, beta, mu)?;
    Ok((0..=cutoff).map(|n| z1.powi(n as i32)).sum())
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    // Tr(A B) without forming the product
    let mut acc = C64::default();
    for j in 0..b.ncols() {
        for i in 0..a.ncols() {
            acc += a[(j, i)] * b[(i, j)];
        }
    }
    acc
}

/// Trace of `Γ(G)` over the truncated quotient module.
pub fn module_trace(m: &FockModule, h: &CMatrix, beta: f64, mu: f64) -> Result<PartitionResult> {
    check_h(h, Some(m.spec().dim()))?;
    let g = boltzmann_factor(h, beta, mu)?;
    let z1 = g.trace().re;
    let g_norm = operator_norm(&g);

    let mut per_level_traces = Vec::with_capacity(m.cutoff() + 1);
    let mut gn = identity(1);
    for n in 0..=m.cutoff() {
        if n > 0 {
            gn = kron(&gn, &g);
        }
        if m.strictly_positive(n) {
            // evaluated in a P-orthonormal basis of the level, then held against (Tr G)^n
            let free = z1.powi(n as i32);
            let trace = match m.quotient_basis(n) {
                Some(w) => (w.adjoint() * m.metric(n) * &gn * w).trace().re,
                None => free,
            };
            if (trace - free).abs() > 1e-9 * free.abs().max(1.0) {
                return Err(Error::Verification(format!(
                    "level {n} trace {trace} disagrees with the free value {free}"
                )));
            }
            per_level_traces.push(trace);
            continue;
        }
        let p = m.metric(n);
        let commutator = p * &gn - &gn * p;
        let bound = tol::DEFAULT * operator_norm(p) * g_norm.powi(n as i32);
        // Frobenius dominates the operator norm, so only fall back to SVD when needed
        if commutator.norm() > bound {
            let defect = operator_norm(&commutator);
            if defect > bound {
                return Err(Error::CommutationViolated { level: n, defect });
            }
        }
        let trace = trace_product(m.support_projector(n), &gn).re;
        if let Some(w) = m.quotient_basis(n) {
            let congruent = (w.adjoint() * p * &gn * w).trace().re;
            if (congruent - trace).abs() > 1e-9 * trace.abs().max(1.0) {
                return Err(Error::Verification(format!(
                    "level {n} quotient trace {trace} disagrees with congruence path {congruent}"
                )));
            }
        }
        per_level_traces.push(trace);
    }

    let partial_sum = per_level_traces.iter().sum();
    let free_reference: f64 = (0..=m.cutoff()).map(|n| z1.powi(n as i32)).sum();
    Ok(PartitionResult {
        per_level_traces,
        partial_sum,
        free_reference,
        relative_gap: (partial_sum - free_reference).abs() / free_reference,
        z1,
        truncation_estimate: truncation_estimate(z1, m.cutoff()),
    })
}

/// `ln(partial_sum) / volume`.
pub fn free_energy_density(volume: f64, partition: &PartitionResult) -> Result<f64> {
    if !(volume > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "volume must be positive, got {volume}"
        )));
    }
    if !(partition.partial_sum > 0.0) {
        return Err(Error::NonPositivePartition(partition.partial_sum));
    }
    Ok(partition.partial_sum.ln() / volume)
}
