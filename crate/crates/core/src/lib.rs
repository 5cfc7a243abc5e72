//! Auxiliary space multigrid (ASMG) preconditioning for lowest-order
//! Raviart-Thomas discretizations of Darcy flow in high-contrast media.

pub mod asca;
pub mod coeff;
pub mod config;
pub mod diag;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod mesh;
pub mod precond;
pub mod solvers;
pub mod transform;
mod util;

pub use error::{AsmgError, Result};
