//! Minimal sparse kernels: CSR storage for the stencil operators and a banded
//! LU factorisation with partial pivoting for the implicit solves.

mod banded;
mod csr;

pub use banded::BandedLu;
pub use csr::CsrMatrix;
