//! Sparse matrices and Krylov solvers.

mod csr;
mod krylov;

pub use csr::{dot, norm2, norm_inf, CsrMatrix};
pub use krylov::{
    bicgstab_solve, bicgstab_solve_with_guess, cg_solve, cg_solve_with_guess, remove_constant,
    NullSpace, Preconditioner, SolveOptions, SolveReport,
};
