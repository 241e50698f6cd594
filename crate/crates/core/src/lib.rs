//! Finite element solver for the 2D incompressible Navier–Stokes equations
//! built around a segregated incremental pressure-projection scheme, with
//! the rotational, consistent-splitting and penalty-projection schemes as
//! comparison baselines.
//!
//! The crate covers mesh generation on the unit square, P1/P2/P1-bubble
//! spaces, sparse assembly, Krylov solvers, the time integrators, a
//! manufactured-solution verification harness and the run drivers used by
//! the `projfem` command-line tool.

pub mod assemble;
pub mod driver;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod schemes;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
pub use fem::{ElementKind, FeSpace, Field};
pub use mesh::{Diagonal, TriMesh};
pub use sparse::{CsrMatrix, SolveOptions, SolveReport};
