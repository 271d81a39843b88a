//! Desk-scale collider-event toolkit.
//!
//! The crate models one proton-proton collision as an [`event::Event`] (scalar
//! metadata plus ragged per-object collections), provides the four-vector
//! algebra behind all derived observables ([`kinematics`]), clusters
//! particle-flow objects into jets ([`jetclust`]), generates seeded toy events
//! with a parameterized detector response ([`toygen`]), and runs cut-based
//! selections, histograms and η–φ images over the result ([`analysis`]).
//!
//! Conventions used throughout: natural units (energies and momenta in GeV),
//! the beam along the z axis, `px = pt·cos φ`, `py = pt·sin φ`,
//! `pz = pt·sinh η`, and azimuthal differences wrapped into `(−π, π]`.

pub mod analysis;
pub mod event;
pub mod jetclust;
pub mod kinematics;
pub mod toygen;

mod util;
