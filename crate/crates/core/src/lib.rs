//! L∞-optimal model order reduction for linear descriptor systems.
//!
//! The reduced model is a tridiagonal/diagonal pencil whose L∞ error is
//! minimized over a sequence of small Petrov-Galerkin projections of the
//! full system, each interpolating it at the current worst-case frequency.

pub mod cli;
pub mod error;
pub mod fixtures;
pub mod framework;
pub mod linalg;
pub mod init;
pub mod linf;
pub mod mtx;
pub mod objective;
pub mod optimize;
pub mod projection;
pub mod system;

pub use error::{MorError, Result};
