//! Numerical kernels for compensated-compactness experiments on flat periodic
//! grids and chart-local immersed surfaces.
//!
//! The crate is organised around three layers:
//!
//! * discrete exterior calculus on periodic grids ([`grid`], [`cochain`],
//!   [`hodge`]) — cochains store cell integrals, so the chain conditions are
//!   signed cancellations rather than approximations;
//! * finite-dimensional operator pairs with an explicit compact-embedding
//!   weight ([`operator`]) and oscillatory form families probing div-curl
//!   convergence ([`oscillate`]);
//! * chart-local immersion geometry: fundamental data, Gauss/Codazzi/Ricci
//!   residuals, the moving-frame structural equations, and realization by
//!   path integration ([`chart`], [`immersion`], [`gcr`], [`cartan`],
//!   [`rigidity`]).
//!
//! Everything is pure computation over owned buffers; all types are immutable
//! after construction. IO, file formats, and the experiment CLI live in the
//! companion crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cochain;
pub mod error;
pub mod grid;
pub mod hodge;
pub mod linalg;
pub mod operator;
pub mod solver;
pub mod sparse;
pub mod util;

pub use error::Error;

/// Default tolerance for iterative solves.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-8;
/// Default tolerance for algebraic identities.
pub const DEFAULT_ALGEBRA_TOL: f64 = 1e-12;
