//! Sparse matrices and solvers: CSR storage, reverse Cuthill-McKee ordering,
//! a factorize-once envelope Cholesky with multi-RHS solves, and a CG
//! fallback.

mod cg;
mod cholesky;
mod csr;
pub mod ordering;

pub use cg::{cg_solve, CgOutcome};
pub use cholesky::{factorize_spd, Ordering, SpdFactorization, PIVOT_TOLERANCE};
pub use csr::CsrMatrix;

/// `||A x - b|| / ||b||`, or `||A x||` when `b = 0`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> crate::Result<f64> {
    let mut r = b.iter().map(|v| -v).collect::<Vec<_>>();
    a.matvec_acc(1.0, x, &mut r)?;
    let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(if bn > 0.0 { rn / bn } else { rn })
}
