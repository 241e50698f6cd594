//! Shared fixtures for the `kernels` benchmarks.

use std::sync::Arc;

use projfem::fem::{interpolate, FeSpace, Field};
use projfem::mesh::{Diagonal, TriMesh};
use projfem::schemes::{
    Discretization, ElementPair, Integrator, SchemeConfig, SchemeKind, SchemeState,
};
use projfem::verify::{Manufactured, ReferenceSolution};
use projfem::Result;

pub fn spaces(n: usize, pair: ElementPair) -> Result<(Arc<FeSpace>, Arc<FeSpace>)> {
    let mesh = Arc::new(TriMesh::build_structured(n, Diagonal::Right)?);
    Ok((
        FeSpace::new(Arc::clone(&mesh), pair.velocity())?,
        FeSpace::new(mesh, pair.pressure())?,
    ))
}

pub fn discretization(n: usize, pair: ElementPair) -> Result<Discretization> {
    Discretization::new(n, pair, Diagonal::Right)
}

/// Interpolated exact velocity at `t = 0`.
pub fn velocity(space: &Arc<FeSpace>) -> (Field, Field) {
    let u1 = interpolate(space, |x, y| Manufactured.velocity(0.0, x, y)[0]);
    let u2 = interpolate(space, |x, y| Manufactured.velocity(0.0, x, y)[1]);
    (u1, u2)
}

/// Integrator and its state after the auxiliary first step.
pub fn stepping(scheme: SchemeKind, n: usize, k: f64) -> Result<(Integrator, SchemeState)> {
    let mut it = Integrator::new(SchemeConfig {
        scheme,
        n,
        k,
        t_final: 2.0,
        ..SchemeConfig::default()
    })?;
    let s0 = it.interpolated_state(&Manufactured)?;
    let (s1, _) = it.step(&s0, &forcing)?;
    Ok((it, s1))
}

pub fn forcing(t: f64, x: f64, y: f64) -> [f64; 2] {
    projfem::verify::forcing(t, x, y, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let (v, p) = spaces(4, ElementPair::TaylorHood).unwrap();
        assert_eq!(v.n_dofs(), 81);
        assert_eq!(p.n_dofs(), 25);
        let (it, s) = stepping(SchemeKind::Penalty, 4, 0.1).unwrap();
        assert_eq!(s.step, 1);
        assert_eq!(it.config().scheme, SchemeKind::Penalty);
    }
}
