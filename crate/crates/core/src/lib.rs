//! Ensemble time-stepping for two-domain heat-heat coupled problems with
//! random interface friction and random diffusion coefficients.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`] builds the structured two-subdomain triangulation and its
//!   per-subdomain DOF maps.
//! * [`quadrature`] and [`fem`] assemble P1 mass, stiffness, interface and
//!   load operators and evaluate norms and errors.
//! * [`sparse`] holds CSR matrices, the reusable sparse Cholesky factorization
//!   and a Jacobi-preconditioned CG fallback.
//! * [`random`] defines coefficient families, sample sets and the ensemble
//!   aggregates (`kappa_max`, `nu_bar`, theta bounds).
//! * [`ensemble`] contains the steppers (A1, A2, A3 and the per-sample
//!   baseline) together with Monte Carlo reduction and energy diagnostics.
//! * [`harness`] provides the manufactured solution, the convergence,
//!   stability and timing studies, configuration and the CLI.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ensemble;
pub mod error;
pub mod fem;
pub mod harness;
pub mod mesh;
pub mod quadrature;
pub mod random;
pub mod sparse;

pub use error::{Error, Result};
pub use mesh::{DofMap, Mesh, NodeTag, Point, Subdomain};
