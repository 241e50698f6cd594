//! Reference-element shape functions for P1, P2 and P1-bubble.
//!
//! Local numbering: vertices 0..3; for P2, dof `3 + i` sits at the midpoint of
//! the edge opposite vertex `i`; for P1-bubble, dof 3 is the cubic bubble
//! `27 λ₀λ₁λ₂`. Gradients are taken with respect to the reference coordinates
//! `(ξ, η)` where `λ = (1 - ξ - η, ξ, η)`.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    P1,
    P2,
    P1Bubble,
}

impl ElementKind {
    pub fn dofs_per_cell(self) -> usize {
        match self {
            ElementKind::P1 => 3,
            ElementKind::P2 => 6,
            ElementKind::P1Bubble => 4,
        }
    }

    /// Polynomial degree of the highest-order basis function.
    pub fn degree(self) -> usize {
        match self {
            ElementKind::P1 => 1,
            ElementKind::P2 => 2,
            ElementKind::P1Bubble => 3,
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::P1 => "P1",
            ElementKind::P2 => "P2",
            ElementKind::P1Bubble => "P1b",
        })
    }
}

impl FromStr for ElementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(ElementKind::P1),
            "p2" => Ok(ElementKind::P2),
            "p1b" | "p1bubble" | "p1-bubble" => Ok(ElementKind::P1Bubble),
            other => Err(Error::Config(format!("unknown element '{other}'"))),
        }
    }
}

const DL: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Shape function values and reference gradients at one barycentric point.
#[derive(Debug, Clone, Default)]
pub struct BasisValues {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

pub fn reference_basis(kind: ElementKind, l: [f64; 3]) -> BasisValues {
    let g = |coef: [f64; 3]| -> [f64; 2] {
        [
            coef[0] * DL[0][0] + coef[1] * DL[1][0] + coef[2] * DL[2][0],
            coef[0] * DL[0][1] + coef[1] * DL[1][1] + coef[2] * DL[2][1],
        ]
    };
    let mut out = BasisValues::default();
    match kind {
        ElementKind::P1 => {
            for i in 0..3 {
                out.values.push(l[i]);
                let mut c = [0.0; 3];
                c[i] = 1.0;
                out.gradients.push(g(c));
            }
        }
        ElementKind::P2 => {
            for i in 0..3 {
                out.values.push(l[i] * (2.0 * l[i] - 1.0));
                let mut c = [0.0; 3];
                c[i] = 4.0 * l[i] - 1.0;
                out.gradients.push(g(c));
            }
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                out.values.push(4.0 * l[j] * l[k]);
                let mut c = [0.0; 3];
                c[j] = 4.0 * l[k];
                c[k] = 4.0 * l[j];
                out.gradients.push(g(c));
            }
        }
        ElementKind::P1Bubble => {
            for i in 0..3 {
                out.values.push(l[i]);
                let mut c = [0.0; 3];
                c[i] = 1.0;
                out.gradients.push(g(c));
            }
            out.values.push(27.0 * l[0] * l[1] * l[2]);
            out.gradients.push(g([
                27.0 * l[1] * l[2],
                27.0 * l[0] * l[2],
                27.0 * l[0] * l[1],
            ]));
        }
    }
    out
}

/// Barycentric coordinates of the local interpolation nodes. The bubble dof
/// has its node at the centroid.
pub fn reference_nodes(kind: ElementKind) -> Vec<[f64; 3]> {
    let vertices = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut nodes = vertices.to_vec();
    match kind {
        ElementKind::P1 => {}
        ElementKind::P2 => nodes.extend([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]),
        ElementKind::P1Bubble => nodes.push([1.0 / 3.0; 3]),
    }
    nodes
}
