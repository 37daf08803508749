//! Boundary-driven energy transport in fermionic, bosonic and spin lattices.
//!
//! Quadratic (fermion/boson) lattices are handled through their
//! single-particle matrices: the transverse normal-mode reduction in
//! [`modes`], closed-form chain fluxes in [`flux`] and the correlation-matrix
//! steady state in [`quadratic`]. Spin ladders are treated in fixed
//! excitation sectors ([`sector`], [`dynamics`]) and through their
//! Jordan-Wigner image ([`jw`]). [`oracle`] is a brute-force Liouvillian
//! solver for tiny systems, used as ground truth.

pub mod error;
pub mod dynamics;
pub mod flux;
pub mod jw;
pub mod krylov;
pub mod lattice;
pub mod lyapunov;
pub mod modes;
pub mod oracle;
pub mod quadratic;
pub mod sector;
pub mod sparse;

pub use error::{Error, Result};
pub use lattice::{
    bath_occupation, build_hopping_matrix, disordered_profile, BathSpec, Bond, FluxReport, HoppingMatrix, LatticeSpec,
    Statistics,
};
pub use sector::{build_spin_sector_hamiltonian, SectorBasis, SectorHamiltonian, SectorState};
