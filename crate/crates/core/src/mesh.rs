//! Structured conforming triangulations of the unit square.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How each square cell of the structured grid is split into two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// Diagonal from the lower-left to the upper-right corner.
    #[default]
    Right,
    /// Diagonal from the lower-right to the upper-left corner.
    Left,
    /// Checkerboard alternation of `Right` and `Left`.
    Alternating,
}

impl fmt::Display for Diagonal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Diagonal::Right => "right",
            Diagonal::Left => "left",
            Diagonal::Alternating => "alternating",
        })
    }
}

impl FromStr for Diagonal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "right" => Ok(Diagonal::Right),
            "left" => Ok(Diagonal::Left),
            "alternating" => Ok(Diagonal::Alternating),
            other => Err(Error::Config(format!("unknown diagonal '{other}'"))),
        }
    }
}

/// Immutable triangulation of Ω = (0,1)² with edge structure.
///
/// Triangles are counter-clockwise. Local edge `i` of a triangle is the edge
/// opposite its local vertex `i`.
#[derive(Debug, Clone)]
pub struct TriMesh {
    n: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    boundary_edge: Vec<bool>,
}

/// Affine map `x = B x̂ + b` from the reference triangle (0,0),(1,0),(0,1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    /// Columns are `p1 - p0` and `p2 - p0`.
    pub jacobian: [[f64; 2]; 2],
    pub origin: [f64; 2],
    pub det: f64,
    /// `B⁻ᵀ`, which maps reference gradients to physical gradients.
    pub inv_transpose: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn from_points(p: [[f64; 2]; 3]) -> Self {
        let b = [
            [p[1][0] - p[0][0], p[2][0] - p[0][0]],
            [p[1][1] - p[0][1], p[2][1] - p[0][1]],
        ];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let inv_transpose = [
            [b[1][1] / det, -b[1][0] / det],
            [-b[0][1] / det, b[0][0] / det],
        ];
        AffineMap {
            jacobian: b,
            origin: p[0],
            det,
            inv_transpose,
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn apply(&self, xi: [f64; 2]) -> [f64; 2] {
        let b = &self.jacobian;
        [
            self.origin[0] + b[0][0] * xi[0] + b[0][1] * xi[1],
            self.origin[1] + b[1][0] * xi[0] + b[1][1] * xi[1],
        ]
    }

    /// Physical gradient from a gradient with respect to reference coordinates.
    #[inline]
    pub fn map_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let m = &self.inv_transpose;
        [
            m[0][0] * g[0] + m[0][1] * g[1],
            m[1][0] * g[0] + m[1][1] * g[1],
        ]
    }
}

impl TriMesh {
    /// Builds the `n × n` structured mesh of the unit square.
    pub fn build_structured(n: usize, diagonal: Diagonal) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMesh(
                "subdivision count must be at least 1".into(),
            ));
        }
        let h = 1.0 / n as f64;
        let np = n + 1;
        let mut vertices = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                // exact endpoints so boundary tests are bit-true
                let x = if i == n { 1.0 } else { i as f64 * h };
                let y = if j == n { 1.0 } else { j as f64 * h };
                vertices.push([x, y]);
            }
        }
        let vid = |i: usize, j: usize| j * np + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v01, v11) =
                    (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
                let right = match diagonal {
                    Diagonal::Right => true,
                    Diagonal::Left => false,
                    Diagonal::Alternating => (i + j) % 2 == 0,
                };
                if right {
                    triangles.push([v00, v10, v11]);
                    triangles.push([v00, v11, v01]);
                } else {
                    triangles.push([v00, v10, v01]);
                    triangles.push([v10, v11, v01]);
                }
            }
        }
        Self::from_parts(n, vertices, triangles)
    }

    /// Builds a mesh from raw vertices and CCW triangles, deriving edges and
    /// boundary flags. Boundary means lying on x∈{0,1} or y∈{0,1}.
    pub fn from_parts(
        n: usize,
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self> {
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_count: Vec<u8> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let mut te = [0usize; 3];
            for (local, slot) in te.iter_mut().enumerate() {
                let a = tri[(local + 1) % 3];
                let b = tri[(local + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_count.push(0);
                    edges.len() - 1
                });
                edge_count[e] += 1;
                *slot = e;
            }
            triangle_edges.push(te);
        }
        if let Some(e) = edge_count.iter().position(|&c| c > 2) {
            return Err(Error::InvalidMesh(format!(
                "edge {e} is shared by more than two triangles"
            )));
        }
        let on_boundary = |p: &[f64; 2]| p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0;
        let boundary_vertex: Vec<bool> = vertices.iter().map(on_boundary).collect();
        let boundary_edge = edge_count.iter().map(|&c| c == 1).collect();
        Ok(TriMesh {
            n,
            vertices,
            triangles,
            edges,
            triangle_edges,
            boundary_vertex,
            boundary_edge,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nominal mesh size `1/n`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        AffineMap::from_points(self.triangle_points(t)).area()
    }

    /// Reference-to-physical affine maps for every triangle.
    pub fn affine_maps(&self) -> Result<Vec<AffineMap>> {
        (0..self.n_triangles())
            .map(|t| {
                let map = AffineMap::from_points(self.triangle_points(t));
                if map.det > 0.0 {
                    Ok(map)
                } else {
                    Err(Error::DegenerateTriangle {
                        index: t,
                        area: map.area(),
                    })
                }
            })
            .collect()
    }
}
