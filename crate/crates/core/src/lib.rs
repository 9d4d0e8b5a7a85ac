//! Multiscale dynamic mode decomposition.
//!
//! The crate is organised bottom-up:
//!
//! * [`solver`] integrates the focusing cubic NLS on a periodic grid and
//!   produces snapshot series.
//! * [`wavelet`] is a periodic orthonormal DWT with per-scale energy and
//!   Besov-type block norms.
//! * [`observables`] stacks canonical (pointwise) and norm-based observables
//!   into the matrix fed to DMD.
//! * [`dmd`] is truncated-SVD DMD: fit, spectrum, reconstruction.
//! * [`metrics`] and [`sweep`] score fits and search over truncation and
//!   wavelet depth.
//! * [`ensemble`] runs seeded ensembles and writes CSV/JSON results.

pub mod dmd;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod observables;
pub mod solver;
pub mod sweep;
pub mod wavelet;

pub use error::{Error, Result};
pub use exec::Execution;

pub type C64 = num_complex::Complex64;
