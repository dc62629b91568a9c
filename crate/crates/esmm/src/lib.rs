//! Entropy-conservative and entropy-stable finite-difference schemes for
//! special relativistic hydrodynamics and magnetohydrodynamics on adaptive
//! moving curvilinear meshes.

pub mod adapt;
pub mod checks;
pub mod config;
pub mod dissipation;
pub mod ec_flux;
pub mod error;
pub mod grid;
pub mod io;
pub mod mesh;
pub mod problems;
pub mod run;
pub mod solver;
pub mod state;

pub use error::{Error, RecoveryError, Result};
