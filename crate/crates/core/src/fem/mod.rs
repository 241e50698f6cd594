//! Scalar finite element spaces: reference bases, quadrature, dof maps and
//! field evaluation.

mod basis;
mod quadrature;
mod space;

pub use basis::{reference_basis, reference_nodes, BasisValues, ElementKind};
pub use quadrature::{quadrature_rule, QuadratureRule};
pub use space::{interpolate, FeSpace, Field, Tabulation};
