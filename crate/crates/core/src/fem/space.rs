use std::sync::Arc;

use super::basis::{reference_basis, BasisValues, ElementKind};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::mesh::{AffineMap, TriMesh};

/// A scalar finite element space over a triangulation.
#[derive(Debug)]
pub struct FeSpace {
    kind: ElementKind,
    mesh: Arc<TriMesh>,
    maps: Vec<AffineMap>,
    cell_dofs: Vec<Vec<usize>>,
    n_dofs: usize,
    boundary_dofs: Vec<usize>,
    is_boundary: Vec<bool>,
}

impl FeSpace {
    pub fn new(mesh: Arc<TriMesh>, kind: ElementKind) -> Result<Arc<Self>> {
        let maps = mesh.affine_maps()?;
        let nv = mesh.n_vertices();
        let (n_dofs, cell_dofs): (usize, Vec<Vec<usize>>) = match kind {
            ElementKind::P1 => (nv, mesh.triangles().iter().map(|t| t.to_vec()).collect()),
            ElementKind::P2 => (
                nv + mesh.n_edges(),
                mesh.triangles()
                    .iter()
                    .zip(mesh.triangle_edges())
                    .map(|(t, e)| vec![t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]])
                    .collect(),
            ),
            ElementKind::P1Bubble => (
                nv + mesh.n_triangles(),
                mesh.triangles()
                    .iter()
                    .enumerate()
                    .map(|(c, t)| vec![t[0], t[1], t[2], nv + c])
                    .collect(),
            ),
        };
        let mut is_boundary = vec![false; n_dofs];
        for (v, b) in is_boundary.iter_mut().take(nv).enumerate() {
            *b = mesh.is_boundary_vertex(v);
        }
        if kind == ElementKind::P2 {
            for e in 0..mesh.n_edges() {
                is_boundary[nv + e] = mesh.is_boundary_edge(e);
            }
        }
        let boundary_dofs = (0..n_dofs).filter(|&d| is_boundary[d]).collect();
        Ok(Arc::new(FeSpace {
            kind,
            mesh,
            maps,
            cell_dofs,
            n_dofs,
            boundary_dofs,
            is_boundary,
        }))
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_cells(&self) -> usize {
        self.cell_dofs.len()
    }

    pub fn dofs_per_cell(&self) -> usize {
        self.kind.dofs_per_cell()
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell]
    }

    /// Sorted dofs lying on ∂Ω.
    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn is_boundary_dof(&self, dof: usize) -> bool {
        self.is_boundary[dof]
    }

    pub fn same_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    /// Physical coordinates of every dof's interpolation node.
    pub fn dof_coordinates(&self) -> Vec<[f64; 2]> {
        let mesh = &self.mesh;
        let mut coords = mesh.vertices().to_vec();
        match self.kind {
            ElementKind::P1 => {}
            ElementKind::P2 => coords.extend((0..mesh.n_edges()).map(|e| mesh.edge_midpoint(e))),
            ElementKind::P1Bubble => {
                coords.extend(self.maps.iter().map(|m| m.apply([1.0 / 3.0, 1.0 / 3.0])));
            }
        }
        coords
    }

    /// Basis values and reference gradients at every point of `rule`.
    pub fn tabulate(&self, rule: &QuadratureRule) -> Tabulation {
        Tabulation {
            rule: rule.clone(),
            at: rule
                .points
                .iter()
                .map(|&p| reference_basis(self.kind, p))
                .collect(),
        }
    }
}

/// Reference basis data precomputed at quadrature points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub rule: QuadratureRule,
    pub at: Vec<BasisValues>,
}

impl Tabulation {
    /// Physical gradients of all local basis functions at quadrature point `q`.
    pub fn physical_gradients(&self, map: &AffineMap, q: usize, out: &mut Vec<[f64; 2]>) {
        out.clear();
        out.extend(self.at[q].gradients.iter().map(|&g| map.map_gradient(g)));
    }
}

/// Coefficient vector of a function in an [`FeSpace`].
#[derive(Debug, Clone)]
pub struct Field {
    space: Arc<FeSpace>,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(space: &Arc<FeSpace>) -> Self {
        Field {
            space: Arc::clone(space),
            values: vec![0.0; space.n_dofs()],
        }
    }

    pub fn from_values(space: &Arc<FeSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.n_dofs() {
            return Err(Error::Dimension(format!(
                "field has {} values, space has {} dofs",
                values.len(),
                space.n_dofs()
            )));
        }
        Ok(Field {
            space: Arc::clone(space),
            values,
        })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    /// Value and physical gradient on `cell` at barycentric point `l`.
    pub fn eval(&self, cell: usize, l: [f64; 3]) -> (f64, [f64; 2]) {
        let b = reference_basis(self.space.kind, l);
        let map = &self.space.maps[cell];
        let dofs = self.space.cell_dofs(cell);
        let mut v = 0.0;
        let mut g = [0.0, 0.0];
        for (i, &d) in dofs.iter().enumerate() {
            let c = self.values[d];
            v += c * b.values[i];
            let pg = map.map_gradient(b.gradients[i]);
            g[0] += c * pg[0];
            g[1] += c * pg[1];
        }
        (v, g)
    }
}

/// Nodal interpolant of `f`; bubble coefficients are set to zero.
pub fn interpolate(space: &Arc<FeSpace>, f: impl Fn(f64, f64) -> f64) -> Field {
    let coords = space.dof_coordinates();
    let nv = space.mesh().n_vertices();
    let values = coords
        .iter()
        .enumerate()
        .map(|(d, p)| {
            if space.kind() == ElementKind::P1Bubble && d >= nv {
                0.0
            } else {
                f(p[0], p[1])
            }
        })
        .collect();
    Field {
        space: Arc::clone(space),
        values,
    }
}
