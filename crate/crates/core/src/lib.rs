//! Optimal control of an Allen-Cahn system with dynamic boundary
//! conditions and double-obstacle potentials, via deep-quench continuation:
//! a family of logarithmically regularized problems is solved with the
//! quench parameter driven toward zero, and the limiting first-order
//! optimality system is verified along the way.

pub mod adjoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod objective;
pub mod potentials;
pub mod quench;
pub mod sensitivity;
pub mod state;
pub mod util;

pub use error::{Error, Result};
