//! Few-body Fock-space kernel.
//!
//! A state with fixed numbers of up and down fermions on `L'` sites is kept
//! as a `d_up x d_down` amplitude matrix `M`, where `d_s` counts the
//! occupation patterns of spin `s`. Basis states are created in ascending
//! site order, so every basis vector carries a `+1` phase and all fermionic
//! signs live in determinants and hop signs.
//!
//! One Trotter step is `M <- P o (U_up M U_down^T)`, with `U_s` the sector
//! propagators of the hopping part and `P = exp(-i dt V)` the element-wise
//! interaction phase. The sector propagators come from the single-particle
//! propagator through determinants of its submatrices, so they are built once
//! per time step and sector.

mod basis;
mod hamiltonian;
mod observables;
mod propagate;

pub use basis::{binomial, binomial_signed, bits, hop, mask_from_positions, HopEntry, HopTable, SectorBasis};
pub use hamiltonian::{
    interaction_table, product_hamiltonian, sector_operator, sector_unitary_from_single,
    single_particle_hamiltonian,
};
pub use observables::{EntanglementCut, FewBodySpace, FewBodyState};
pub use propagate::{
    check_budget, evolve_on_grid, EvolveOptions, DEFAULT_BUDGET_BYTES, grid_step, propagation_bytes, trotter_step, PropagatorBundle, Splitting,
    StateBatch, TimeGrid, DEFAULT_DT,
};

/// Same as [`SectorBasis::new`].
pub fn enumerate_basis(sites: usize, particles: usize) -> crate::Result<SectorBasis> {
    SectorBasis::new(sites, particles)
}
