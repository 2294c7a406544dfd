//! Lattice anyons: a finite region `Λ ⊂ aℤ^dim`, a statistics phase
//! `r(x, y)` and the phased exchange `R: f(x, y) ↦ e^{ir(x,y)} f(y, x)`.
//!
//! Multi-particle states live in `ℓ²(Λ)^{⊗n}` with the same big-endian
//! layout as the rest of the crate. The anyonic sector is the range of
//! `R_n = (1/n!) Σ_π R(π)`.

mod lattice;
mod operators;
mod phase;
mod scan;

pub use lattice::{lattice_laplacian, Boundary, LatticeSpec};
pub use operators::{
    anyonic_ladder_check, dressing_transform, effective_hamiltonian_gap, permutation_rep, permutation_rep_sparse,
    phase_exchange_operator, r_projector, reduced_word, Dressing, EffectiveInteraction, LadderResiduals,
};
pub use phase::{Coincidence, PhaseFn};
pub use scan::{r_trace, thermo_limit_scan, GasReport, GasRow};
