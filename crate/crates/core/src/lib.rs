//! Photon-added-then-subtracted displaced Fock states (PASDFS).
//!
//! The crate builds `N a^q a^dag^k D(alpha)|n>` in a truncated number basis
//! and evaluates moments-based nonclassicality witnesses, the phase
//! distribution and Carruthers-Nieto fluctuation parameters, and the Husimi
//! Q function. A dense-matrix oracle in [`fock`] implements every
//! construction literally and backs the closed forms in the tests.

pub mod engineering;
pub mod error;
pub mod fock;
pub mod husimi;
pub mod moments;
pub mod numerics;
pub mod phase;
pub mod witnesses;

pub use engineering::{dfs_coefficients, pasdfs_amplitudes, StateSpec, DEFAULT_EPS};
pub use error::{Error, Result};
pub use fock::FockAmplitudes;
pub use husimi::{q_function, q_grid, QGrid, Window};
pub use moments::{MomentCache, MomentKey, MomentSource};
pub use phase::{phase_distribution, phase_fluctuation_u, PhaseDistribution};
pub use witnesses::{Criterion, Health, WitnessReport};
