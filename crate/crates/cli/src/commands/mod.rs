mod fock;
mod gas;
mod qkms;

pub(crate) use fock::{build_fock, check_deformation, partition};
pub(crate) use gas::anyon_gas;
pub(crate) use qkms::qkms;
