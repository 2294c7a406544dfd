//! Finite-dimensional realisation of deformed Wick algebras and their Fock
//! modules.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense complex matrices over `H^{⊗n}`, slot embeddings and
//!   spectral utilities.
//! * [`deformation`]: deformation operators `T` and the structural checks on
//!   them (braid relation, anyonic condition, positivity classes).
//! * [`fock`]: the metric tower `P_n(T)`, quotient modules, ladder operators
//!   and second quantisation.
//! * [`thermo`]: partition functions of truncated Fock modules.
//! * [`anyon_gas`]: lattice anyons with a statistics phase `r(x, y)`.
//! * [`qkms`]: quasi-free q-KMS functionals via pair partitions.

pub mod anyon_gas;
pub mod deformation;
mod error;
pub mod fock;
pub mod qkms;
pub mod tensor;
pub mod thermo;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use tensor::{CMatrix, CVector, C64};

/// Numerical tolerances shared across modules.
pub mod tol {
    /// Default relative tolerance for identities.
    pub const DEFAULT: f64 = 1e-10;
    /// Relative Hermiticity tolerance accepted by the eigensolver.
    pub const HERMITIAN: f64 = 1e-12;
    /// Absolute slack on the closed inequalities `‖T‖ ≤ 1/2`, `‖T‖ ≤ 1`, `T ≥ 0`.
    pub const BOUNDARY: f64 = 1e-12;
    /// Eigenvalues of `P_n` at or below this fraction of the largest one are kernel.
    pub const KERNEL: f64 = 1e-8;
}
