//! Semi-localized axial states of the Dirac equation: a free solution that is
//! a plane wave along `z` and decays as `e^{−q⊥ρ}/√ρ` across it, the
//! potentials it generates, and the conditions under which it survives the
//! coupling to its own field.
//!
//! Units: lengths in Compton wavelengths, energies in rest-mass units,
//! potentials as `eΦ/mc²` and `eA/mc`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod consistency;
pub mod error;
pub mod fields;
pub mod observables;
pub mod quadrature;
pub mod report;
pub mod residual;
pub mod specfun;
pub mod state;

pub use error::{Error, Result};
