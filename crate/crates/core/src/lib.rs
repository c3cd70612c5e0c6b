//! Shell-truncated few-body dynamics for localized one-dimensional
//! Fermi-Hubbard chains.
//!
//! The many-body occupancy matrix of each spin component is approximated by
//! a sum of per-atom occupancy matrices. Each of those comes from a small
//! interacting problem: one atom, the atoms initially inside a shell of
//! nearby sites, and a truncated window of the lattice around it. The small
//! problems are propagated exactly (up to Trotter splitting) in a
//! spin-factorised Fock basis, so their cost depends on the window and shell
//! sizes but not on the length of the chain.
//!
//! Module map:
//!
//! * [`model`]: Hamiltonian parameters, on-site potentials, shells and
//!   lattice windows.
//! * [`fewbody`]: Fock bases, sector propagators, the Trotter step and
//!   few-body observables.
//! * [`exact`]: the same engine on the full lattice, used as an oracle.
//! * [`approx`]: shell truncation and per-atom occupancy matrices.
//! * [`cdw`]: ensemble averages over charge-density-wave initial states.
//! * [`reconstruct`]: single-spin densities and canonical parent states.
//! * [`analysis`]: spectra, error metrics, extrapolation and closed forms.
//! * [`cli`]: JSON run configurations, run plans and artifact output.
//! * [`provenance`]: content hashes for run metadata.

pub mod analysis;
pub mod approx;
pub mod cdw;
pub mod cli;
pub mod error;
pub mod exact;
pub mod fewbody;
pub mod linalg;
pub mod model;
pub mod provenance;
pub mod reconstruct;

pub use error::{Error, Result};
pub use num_complex::Complex64;
