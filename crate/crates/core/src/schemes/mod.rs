//! Time integrators.
//!
//! The incremental scheme carries `(ũᵐ, pᵐ⁻¹, pᵐ)` and never materializes the
//! end-of-step velocity `uᵐ = ũᵐ − k∇(pᵐ − pᵐ⁻¹)`; its norm is recovered from
//! the operators when diagnostics need it. The three comparison schemes carry
//! `(uᵐ, pᵐ⁻¹, pᵐ)` and recompute `Πₕ(∇·uᵐ)` on demand.

mod config;

use std::sync::Arc;
use std::time::{Duration, Instant};

pub use config::{ElementPair, SchemeConfig, SchemeKind};

use crate::assemble::{
    apply_dirichlet, assemble_operator_set, convection_matrix, forcing_vector, OperatorSet,
    PairLoop,
};
use crate::error::{Error, Result};
use crate::fem::{interpolate, FeSpace, Field};
use crate::mesh::{Diagonal, TriMesh};
use crate::sparse::{
    bicgstab_solve_with_guess, cg_solve_with_guess, dot, norm_inf, CsrMatrix, NullSpace,
    SolveOptions, SolveReport,
};
use crate::verify::ReferenceSolution;

/// Body force `f(t, x, y)`.
pub type Forcing<'a> = &'a (dyn Fn(f64, f64, f64) -> [f64; 2] + Sync);

/// Mesh, spaces and constant operators for one `(n, pair, diagonal)`.
#[derive(Debug)]
pub struct Discretization {
    pub mesh: Arc<TriMesh>,
    pub vspace: Arc<FeSpace>,
    pub pspace: Arc<FeSpace>,
    pub ops: OperatorSet,
    pub vloop: PairLoop,
}

impl Discretization {
    pub fn new(n: usize, pair: ElementPair, diagonal: Diagonal) -> Result<Self> {
        let mesh = Arc::new(TriMesh::build_structured(n, diagonal)?);
        let vspace = FeSpace::new(Arc::clone(&mesh), pair.velocity())?;
        let pspace = FeSpace::new(Arc::clone(&mesh), pair.pressure())?;
        let (ops, vloop) = assemble_operator_set(&vspace, &pspace)?;
        Ok(Discretization {
            mesh,
            vspace,
            pspace,
            ops,
            vloop,
        })
    }

    pub fn null_space(&self) -> NullSpace<'_> {
        NullSpace {
            mass: &self.ops.pressure_weights,
        }
    }

    /// `(ũ, ∇q)` for every pressure basis function: `G_xᵀu₁ + G_yᵀu₂`.
    pub fn velocity_against_gradients(&self, u1: &[f64], u2: &[f64]) -> Result<Vec<f64>> {
        let mut s = self.ops.grad_x.spmv_transpose(u1)?;
        let sy = self.ops.grad_y.spmv_transpose(u2)?;
        s.iter_mut().zip(&sy).for_each(|(a, b)| *a += b);
        Ok(s)
    }

    /// `(∇·u, q)` for every pressure basis function: `D_x u₁ + D_y u₂`.
    pub fn divergence_against_pressure(&self, u1: &[f64], u2: &[f64]) -> Result<Vec<f64>> {
        let mut s = self.ops.div_x.spmv(u1)?;
        let sy = self.ops.div_y.spmv(u2)?;
        s.iter_mut().zip(&sy).for_each(|(a, b)| *a += b);
        Ok(s)
    }

    /// `|u₁|²_M + |u₂|²_M` with the velocity mass matrix.
    pub fn velocity_norm_sq(&self, u1: &[f64], u2: &[f64]) -> Result<f64> {
        Ok(dot(u1, &self.ops.mass_v.spmv(u1)?) + dot(u2, &self.ops.mass_v.spmv(u2)?))
    }

    /// `|∇q|²` via the Neumann stiffness matrix.
    pub fn pressure_gradient_sq(&self, q: &[f64]) -> Result<f64> {
        Ok(dot(q, &self.ops.stiff_p.spmv(q)?))
    }
}

/// Unknowns carried between steps.
#[derive(Debug, Clone)]
pub struct SchemeState {
    /// First velocity component (`ũᵐ` for the incremental scheme, `uᵐ` otherwise).
    pub u1: Field,
    pub u2: Field,
    pub p_prev: Field,
    pub p_curr: Field,
    pub step: usize,
    pub time: f64,
}

/// Per-step quantities of the incremental projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionDiagnostics {
    /// `|ũᵐ⁺¹|²`.
    pub tilde_sq: f64,
    /// `|uᵐ⁺¹|² = |ũ|² − 2k(ũ, ∇δp) + k²|∇δp|²`, expanded without using
    /// orthogonality.
    pub end_sq: f64,
    /// `k² |∇δp|²`.
    pub increment_sq: f64,
    /// `| |ũ|² − |u|² − k²|∇δp|² | / |ũ|²`.
    pub identity_defect: f64,
    /// `‖G_xᵀũ₁ + G_yᵀũ₂ − k K_p δp‖∞`.
    pub orthogonality_residual: f64,
    /// `|uᵐ⁺¹|² + k² |∇pᵐ⁺¹|²`.
    pub energy: f64,
}

#[derive(Debug, Clone, Default)]
pub struct StepDiagnostics {
    pub velocity: Vec<SolveReport>,
    pub pressure: Vec<SolveReport>,
    pub projection: Option<ProjectionDiagnostics>,
}

/// Wall-clock time split between assembly and linear solves.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub assembly: Duration,
    pub solve: Duration,
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed();
    out
}

fn combine(a: &[f64], ca: f64, b: &[f64], cb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

/// Advances a [`SchemeState`] according to a [`SchemeConfig`].
#[derive(Debug)]
pub struct Integrator {
    cfg: SchemeConfig,
    disc: Discretization,
    timings: Timings,
}

impl Integrator {
    pub fn new(cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        let start = Instant::now();
        let disc = Discretization::new(cfg.n, cfg.pair, cfg.diagonal)?;
        let timings = Timings {
            assembly: start.elapsed(),
            solve: Duration::ZERO,
        };
        Ok(Integrator { cfg, disc, timings })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn timings(&self) -> Timings {
        self.timings
    }

    fn velocity_options(&self) -> SolveOptions {
        SolveOptions::new(self.cfg.velocity_tol)
    }

    fn pressure_options(&self) -> SolveOptions {
        SolveOptions::new(self.cfg.pressure_tol)
    }

    /// Initial state with `p⁻¹ := p⁰`; velocity boundary values are zeroed and
    /// the pressure made mean-free.
    pub fn initial_state(
        &self,
        mut u1: Field,
        mut u2: Field,
        mut p0: Field,
    ) -> Result<SchemeState> {
        for f in [&u1, &u2] {
            if !Arc::ptr_eq(f.space(), &self.disc.vspace) {
                return Err(Error::Dimension(
                    "initial velocity is not in the velocity space".into(),
                ));
            }
        }
        if !Arc::ptr_eq(p0.space(), &self.disc.pspace) {
            return Err(Error::Dimension(
                "initial pressure is not in the pressure space".into(),
            ));
        }
        for &d in self.disc.vspace.boundary_dofs() {
            u1.values[d] = 0.0;
            u2.values[d] = 0.0;
        }
        self.disc.null_space().fix_mean(&mut p0.values);
        Ok(SchemeState {
            u1,
            u2,
            p_prev: p0.clone(),
            p_curr: p0,
            step: 0,
            time: 0.0,
        })
    }

    /// Initial state interpolated from a reference solution at `t = 0`.
    pub fn interpolated_state(&self, exact: &dyn ReferenceSolution) -> Result<SchemeState> {
        let v = &self.disc.vspace;
        let u1 = interpolate(v, |x, y| exact.velocity(0.0, x, y)[0]);
        let u2 = interpolate(v, |x, y| exact.velocity(0.0, x, y)[1]);
        let p0 = interpolate(&self.disc.pspace, |x, y| exact.pressure(0.0, x, y));
        self.initial_state(u1, u2, p0)
    }

    /// `|u⁰|² + k²|∇p⁰|²`.
    pub fn initial_energy(&self, state: &SchemeState) -> Result<f64> {
        let k = self.cfg.k;
        Ok(self
            .disc
            .velocity_norm_sq(&state.u1.values, &state.u2.values)?
            + k * k * self.disc.pressure_gradient_sq(&state.p_curr.values)?)
    }

    /// `(1/k) M + N(w) + ν K` on the velocity pattern.
    pub fn velocity_operator(&mut self, w1: &Field, w2: &Field) -> Result<CsrMatrix> {
        let (k, nu, convection) = (self.cfg.k, self.cfg.nu, self.cfg.convection);
        let disc = &self.disc;
        timed(&mut self.timings.assembly, || {
            let ops = &disc.ops;
            if convection {
                let n = convection_matrix(&disc.vloop, w1, w2)?;
                CsrMatrix::linear_combination(&[
                    (1.0 / k, &ops.mass_v),
                    (1.0, &n),
                    (nu, &ops.stiff_v),
                ])
            } else {
                CsrMatrix::linear_combination(&[(1.0 / k, &ops.mass_v), (nu, &ops.stiff_v)])
            }
        })
    }

    /// `(1/k) M uₐ + bₐ(t)` for both components.
    fn inertia_rhs(
        &mut self,
        u1: &Field,
        u2: &Field,
        forcing: Forcing<'_>,
        t: f64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.cfg.k;
        let disc = &self.disc;
        timed(&mut self.timings.assembly, || {
            let (b1, b2) = forcing_vector(&disc.vspace, forcing, t)?;
            let m1 = disc.ops.mass_v.spmv(&u1.values)?;
            let m2 = disc.ops.mass_v.spmv(&u2.values)?;
            Ok((
                combine(&m1, 1.0 / k, &b1, 1.0),
                combine(&m2, 1.0 / k, &b2, 1.0),
            ))
        })
    }

    /// Solves `A xₐ = rhsₐ` for both components with homogeneous Dirichlet
    /// conditions; the two solves share the matrix and run concurrently.
    fn solve_components(
        &mut self,
        mut a: CsrMatrix,
        mut rhs1: Vec<f64>,
        mut rhs2: Vec<f64>,
        guess: (&[f64], &[f64]),
    ) -> Result<(Vec<f64>, Vec<f64>, [SolveReport; 2])> {
        let bd = self.disc.vspace.boundary_dofs();
        apply_dirichlet(&mut a, &mut rhs1, bd)?;
        crate::assemble::zero_dofs(&mut rhs2, bd);
        let mut g1 = guess.0.to_vec();
        let mut g2 = guess.1.to_vec();
        crate::assemble::zero_dofs(&mut g1, bd);
        crate::assemble::zero_dofs(&mut g2, bd);
        let opts = self.velocity_options();
        let (r1, r2) = timed(&mut self.timings.solve, || {
            rayon::join(
                || bicgstab_solve_with_guess(&a, &rhs1, Some(&g1), &opts),
                || bicgstab_solve_with_guess(&a, &rhs2, Some(&g2), &opts),
            )
        });
        let (x1, rep1) = r1?;
        let (x2, rep2) = r2?;
        rep1.into_result("velocity")?;
        rep2.into_result("velocity")?;
        Ok((x1, x2, [rep1, rep2]))
    }

    /// Solves the pure-Neumann problem `K_p x = rhs` with `mᵀx = 0`.
    fn neumann_solve(&mut self, rhs: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        let scale: f64 = rhs.iter().map(|v| v.abs()).sum();
        let defect: f64 = rhs.iter().sum::<f64>().abs();
        if defect > 1e-10 * scale + 1e-14 {
            return Err(Error::Incompatible { defect });
        }
        let opts = self.pressure_options();
        let disc = &self.disc;
        let (x, rep) = timed(&mut self.timings.solve, || {
            cg_solve_with_guess(&disc.ops.stiff_p, rhs, None, &opts, Some(disc.null_space()))
        })?;
        Ok((x, rep.into_result("pressure")?))
    }

    /// `Πₕ(∇·u)`: the L² projection of the divergence onto the pressure space.
    pub fn l2_project_div(&mut self, u1: &Field, u2: &Field) -> Result<(Field, SolveReport)> {
        let rhs = timed(&mut self.timings.assembly, || {
            self.disc
                .divergence_against_pressure(&u1.values, &u2.values)
        })?;
        let opts = self.pressure_options();
        let disc = &self.disc;
        let (x, rep) = timed(&mut self.timings.solve, || {
            cg_solve_with_guess(&disc.ops.mass_p, &rhs, None, &opts, None)
        })?;
        let rep = rep.into_result("L2 projection")?;
        Ok((Field::from_values(&self.disc.pspace, x)?, rep))
    }

    /// Advances one step with the configured scheme. The incremental scheme
    /// takes its auxiliary first step at `m = 0`.
    pub fn step(
        &mut self,
        state: &SchemeState,
        forcing: Forcing<'_>,
    ) -> Result<(SchemeState, StepDiagnostics)> {
        match self.cfg.scheme {
            SchemeKind::Incremental if state.step == 0 => {
                self.auxiliary_initial_step(&state.u1, &state.u2, &state.p_curr, forcing)
            }
            SchemeKind::Incremental => self.step_incremental(state, forcing),
            SchemeKind::Rotational => self.step_rotational(state, forcing),
            SchemeKind::Consistent => self.step_consistent(state, forcing),
            SchemeKind::Penalty => self.step_penalty(state, forcing),
        }
    }

    fn next_time(&self, state: &SchemeState) -> f64 {
        self.cfg.time(state.step + 1)
    }

    fn fields(&self, u1: Vec<f64>, u2: Vec<f64>) -> Result<(Field, Field)> {
        Ok((
            Field::from_values(&self.disc.vspace, u1)?,
            Field::from_values(&self.disc.vspace, u2)?,
        ))
    }

    /// Velocity sub-step with pressure source `p_star`:
    /// `[(1/k)M + N(ũᵐ) + νK] ũₐᵐ⁺¹ = (1/k)M ũₐᵐ − G_a p* + bₐ`.
    fn velocity_solve_with_gradient(
        &mut self,
        state: &SchemeState,
        p_star: &[f64],
        forcing: Forcing<'_>,
    ) -> Result<(Field, Field, [SolveReport; 2])> {
        let t_next = self.next_time(state);
        let a = self.velocity_operator(&state.u1, &state.u2)?;
        let (mut r1, mut r2) = self.inertia_rhs(&state.u1, &state.u2, forcing, t_next)?;
        let disc = &self.disc;
        timed(&mut self.timings.assembly, || -> Result<()> {
            let g1 = disc.ops.grad_x.spmv(p_star)?;
            let g2 = disc.ops.grad_y.spmv(p_star)?;
            r1.iter_mut().zip(&g1).for_each(|(r, g)| *r -= g);
            r2.iter_mut().zip(&g2).for_each(|(r, g)| *r -= g);
            Ok(())
        })?;
        let (x1, x2, reps) =
            self.solve_components(a, r1, r2, (&state.u1.values, &state.u2.values))?;
        let (u1, u2) = self.fields(x1, x2)?;
        Ok((u1, u2, reps))
    }

    /// Intermediate velocity of the incremental scheme, using the pressure
    /// extrapolation `2pᵐ − pᵐ⁻¹`.
    pub fn incremental_velocity_step(
        &mut self,
        state: &SchemeState,
        forcing: Forcing<'_>,
    ) -> Result<(Field, Field, [SolveReport; 2])> {
        let p_star = combine(&state.p_curr.values, 2.0, &state.p_prev.values, -1.0);
        self.velocity_solve_with_gradient(state, &p_star, forcing)
    }

    /// Pressure sub-step: `k K_p δp = G_xᵀũ₁ + G_yᵀũ₂`, `pᵐ⁺¹ = pᵐ + δp`.
    /// Returns `(pᵐ⁺¹, δp, report, diagnostics)`.
    pub fn incremental_pressure_step(
        &mut self,
        u1: &Field,
        u2: &Field,
        p_curr: &Field,
    ) -> Result<(Field, Vec<f64>, SolveReport, ProjectionDiagnostics)> {
        let k = self.cfg.k;
        let s = self
            .disc
            .velocity_against_gradients(&u1.values, &u2.values)?;
        let rhs: Vec<f64> = s.iter().map(|v| v / k).collect();
        let (delta, rep) = self.neumann_solve(&rhs)?;
        let mut p_next = combine(&p_curr.values, 1.0, &delta, 1.0);
        self.disc.null_space().fix_mean(&mut p_next);

        let disc = &self.disc;
        let k_delta = disc.ops.stiff_p.spmv(&delta)?;
        let orth: Vec<f64> = s.iter().zip(&k_delta).map(|(a, b)| a - k * b).collect();
        let tilde_sq = disc.velocity_norm_sq(&u1.values, &u2.values)?;
        let grad_sq = dot(&delta, &k_delta);
        let cross = dot(&delta, &s);
        let end_sq = tilde_sq - 2.0 * k * cross + k * k * grad_sq;
        let increment_sq = k * k * grad_sq;
        let identity_defect = if tilde_sq > 0.0 {
            (tilde_sq - end_sq - increment_sq).abs() / tilde_sq
        } else {
            0.0
        };
        let energy = end_sq + k * k * disc.pressure_gradient_sq(&p_next)?;
        let diag = ProjectionDiagnostics {
            tilde_sq,
            end_sq,
            increment_sq,
            identity_defect,
            orthogonality_residual: norm_inf(&orth),
            energy,
        };
        Ok((
            Field::from_values(&self.disc.pspace, p_next)?,
            delta,
            rep,
            diag,
        ))
    }

    /// One step of the segregated incremental scheme for `m ≥ 1`.
    pub fn step_incremental(
        &mut self,
        state: &SchemeState,
        forcing: Forcing<'_>,
    ) -> Result<(SchemeState, StepDiagnostics)> {
        let (u1, u2, vreps) = self.incremental_velocity_step(state, forcing)?;
        self.finish_incremental(state, u1, u2, vreps)
    }

    fn finish_incremental(
        &mut self,
        state: &SchemeState,
        u1: Field,
        u2: Field,
        vreps: [SolveReport; 2],
    ) -> Result<(SchemeState, StepDiagnostics)> {
        let (p_next, _, prep, proj) = self.incremental_pressure_step(&u1, &u2, &state.p_curr)?;
        let next = SchemeState {
            u1,
            u2,
            p_prev: state.p_curr.clone(),
            p_curr: p_next,
            step: state.step + 1,
            time: self.next_time(state),
        };
        Ok((
            next,
            StepDiagnostics {
                velocity: vreps.to_vec(),
                pressure: vec![prep],
                projection: Some(proj),
            },
        ))
    }

    /// First step of the incremental scheme from `(ũ⁰, p⁰)`: the velocity
    /// sub-step uses `∇p⁰` in place of the extrapolation.
    pub fn auxiliary_initial_step(
        &mut self,
        u1: &Field,
        u2: &Field,
        p0: &Field,
        forcing: Forcing<'_>,
    ) -> Result<(SchemeState, StepDiagnostics)> {
        let start = SchemeState {
            u1: u1.clone(),
            u2: u2.clone(),
            p_prev: p0.clone(),
            p_curr: p0.clone(),
            step: 0,
            time: 0.0,
        };
        let (nu1, nu2, vreps) = self.velocity_solve_with_gradient(&start, &p0.values, forcing)?;
        self.finish_incremental(&start, nu1, nu2, vreps)
    }

    /// `qᵐ = 2pᵐ − pᵐ⁻¹ + ν Πₕ(∇·uᵐ)`; on the first step `q⁰ = p⁰`.
    fn rotational_potential(
        &mut self,
        state: &SchemeState,
    ) -> Result<(Vec<f64>, Option<SolveReport>)> {
        if state.step == 0 {
            return Ok((state.p_curr.values.clone(), None));
        }
        let (pi, rep) = self.l2_project_div(&state.u1, &state.u2)?;
        let mut q = combine(&state.p_curr.values, 2.0, &state.p_prev.values, -1.0);
        q.iter_mut()
            .zip(&pi.values)
            .for_each(|(q, p)| *q += self.cfg.nu * p);
        Ok((q, Some(rep)))
    }

    /// Adds `(q, ∂ₐvᵢ)` to the component right-hand sides: `rₐ += D_aᵀ q`.
    fn add_pressure_divergence_source(
        &mut self,
        q: &[f64],
        r1: &mut [f64],
        r2: &mut [f64],
    ) -> Result<()> {
        let disc = &self.disc;
        timed(&mut self.timings.assembly, || -> Result<()> {
            let d1 = disc.ops.div_x.spmv_transpose(q)?;
            let d2 = disc.ops.div_y.spmv_transpose(q)?;
            r1.iter_mut().zip(&d1).for_each(|(r, d)| *r += d);
            r2.iter_mut().zip(&d2).for_each(|(r, d)| *r += d);
            Ok(())
        })
    }

    /// Segregated velocity solve with `−(q, ∇·v)` on the left-hand side.
    fn velocity_solve_with_potential(
        &mut self,
        state: &SchemeState,
        q: &[f64],
        forcing: Forcing<'_>,
    ) -> Result<(Field, Field, [SolveReport; 2])> {
        let t_next = self.next_time(state);
        let a = self.velocity_operator(&state.u1, &state.u2)?;
        let (mut r1, mut r2) = self.inertia_rhs(&state.u1, &state.u2, forcing, t_next)?;
        self.add_pressure_divergence_source(q, &mut r1, &mut r2)?;
        let (x1, x2, reps) =
            self.solve_components(a, r1, r2, (&state.u1.values, &state.u2.values))?;
        let (u1, u2) = self.fields(x1, x2)?;
        Ok((u1, u2, reps))
    }

    /// `pᵐ⁺¹ = pᵐ + φ − ν Πₕ(∇·uᵐ⁺¹)` where `k(∇φ, ∇q) = −(∇·uᵐ⁺¹, q)`.
    fn rotational_pressure_update(
        &mut self,
        state: &SchemeState,
        u1: &Field,
        u2: &Field,
        reports: &mut Vec<SolveReport>,
    ) -> Result<Field> {
        let k = self.cfg.k;
        let (pi, prep) = self.l2_project_div(u1, u2)?;
        reports.push(prep);
        let div = self
            .disc
            .divergence_against_pressure(&u1.values, &u2.values)?;
        let rhs: Vec<f64> = div.iter().map(|v| -v / k).collect();
        let (phi, rep) = self.neumann_solve(&rhs)?;
        reports.push(rep);
        self.pressure_from_potential(state, &phi, &pi)
    }

    fn pressure_from_potential(
        &self,
        state: &SchemeState,
        phi: &[f64],
        pi: &Field,
    ) -> Result<Field> {
        let nu = self.cfg.nu;
        let mut p: Vec<f64> = state
            .p_curr
            .values
            .iter()
            .zip(phi)
            .zip(&pi.values)
            .map(|((p, f), d)| p + f - nu * d)
            .collect();
        self.disc.null_space().fix_mean(&mut p);
        Field::from_values(&self.disc.pspace, p)
    }

    fn advance(&self, state: &SchemeState, u1: Field, u2: Field, p_next: Field) -> SchemeState {
        SchemeState {
            u1,
            u2,
            p_prev: state.p_curr.clone(),
            p_curr: p_next,
            step: state.step + 1,
            time: self.next_time(state),
        }
    }

    /// Rotational pressure-correction step.
    pub fn step_rotational(
        &mut self,
        state: &SchemeState,
        forcing: Forcing<'_>,
    ) -> Result<(SchemeState, StepDiagnostics)> {
        let mut preps = Vec::new();
        let (q, rep) = self.rotational_potential(state)?;
        preps.extend(rep);
        let (u1, u2, vreps) = self.velocity_solve_with_potential(state, &q, forcing)?;
        let p_next = self.rotational_pressure_update(state, &u1, &u2, &mut preps)?;
        let next = self.advance(state, u1, u2, p_next);
        Ok((
            next,
            StepDiagnostics {
                velocity: vreps.to_vec(),
                pressure: preps,
                projection: None,
            },
        ))
    }

    /// Consistent-splitting step. The pressure update is
    /// `(∇(pᵐ⁺¹ − pᵐ + νΠₕ∇·uᵐ⁺¹), ∇q) = ((uᵐ⁺¹ − uᵐ)/k, ∇q)`.
    pub fn step_consistent(
        &mut self,
        state: &SchemeState,
        forcing: Forcing<'_>,
    ) -> Result<(SchemeState, StepDiagnostics)> {
        let k = self.cfg.k;
        let (u1, u2, vreps) =
            self.velocity_solve_with_potential(state, &state.p_curr.values.clone(), forcing)?;
        let mut preps = Vec::new();
        let (pi, rep) = self.l2_project_div(&u1, &u2)?;
        preps.push(rep);
        let du1 = combine(&u1.values, 1.0 / k, &state.u1.values, -1.0 / k);
        let du2 = combine(&u2.values, 1.0 / k, &state.u2.values, -1.0 / k);
        let rhs = self.disc.velocity_against_gradients(&du1, &du2)?;
        let (psi, rep) = self.neumann_solve(&rhs)?;
        preps.push(rep);
        let p_next = self.pressure_from_potential(state, &psi, &pi)?;
        let next = self.advance(state, u1, u2, p_next);
        Ok((
            next,
            StepDiagnostics {
                velocity: vreps.to_vec(),
                pressure: preps,
                projection: None,
            },
        ))
    }

    /// Block operator `[A + νGD_xx, νGD_xy; νGD_xyᵀ, A + νGD_yy]` of the
    /// penalty scheme's coupled velocity solve.
    pub fn penalty_operator(&mut self, w1: &Field, w2: &Field) -> Result<CsrMatrix> {
        let a = self.velocity_operator(w1, w2)?;
        let nu = self.cfg.nu;
        let ops = &self.disc.ops;
        timed(&mut self.timings.assembly, || {
            let a11 = CsrMatrix::linear_combination(&[(1.0, &a), (nu, &ops.graddiv_xx)])?;
            let a22 = CsrMatrix::linear_combination(&[(1.0, &a), (nu, &ops.graddiv_yy)])?;
            let mut a12 = ops.graddiv_xy.clone();
            a12.scale(nu);
            let a21 = a12.transpose();
            CsrMatrix::block2x2(&a11, &a12, &a21, &a22)
        })
    }

    /// Penalty-projection step with one coupled velocity solve.
    pub fn step_penalty(
        &mut self,
        state: &SchemeState,
        forcing: Forcing<'_>,
    ) -> Result<(SchemeState, StepDiagnostics)> {
        let mut preps = Vec::new();
        let (q, rep) = self.rotational_potential(state)?;
        preps.extend(rep);
        let t_next = self.next_time(state);
        let mut a = self.penalty_operator(&state.u1, &state.u2)?;
        let (mut r1, mut r2) = self.inertia_rhs(&state.u1, &state.u2, forcing, t_next)?;
        self.add_pressure_divergence_source(&q, &mut r1, &mut r2)?;
        let nv = self.disc.vspace.n_dofs();
        let bd = self.disc.vspace.boundary_dofs();
        let fixed: Vec<usize> = bd
            .iter()
            .copied()
            .chain(bd.iter().map(|&d| d + nv))
            .collect();
        let mut rhs = r1;
        rhs.extend(r2);
        apply_dirichlet(&mut a, &mut rhs, &fixed)?;
        let mut guess = state.u1.values.clone();
        guess.extend_from_slice(&state.u2.values);
        crate::assemble::zero_dofs(&mut guess, &fixed);
        let opts = self.velocity_options();
        let (x, vrep) = timed(&mut self.timings.solve, || {
            bicgstab_solve_with_guess(&a, &rhs, Some(&guess), &opts)
        })?;
        let vrep = vrep.into_result("velocity")?;
        let x2 = x[nv..].to_vec();
        let mut x1 = x;
        x1.truncate(nv);
        let (u1, u2) = self.fields(x1, x2)?;
        let p_next = self.rotational_pressure_update(state, &u1, &u2, &mut preps)?;
        let next = self.advance(state, u1, u2, p_next);
        Ok((
            next,
            StepDiagnostics {
                velocity: vec![vrep],
                pressure: preps,
                projection: None,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{forcing, step_errors, Manufactured};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn integrator(scheme: SchemeKind, n: usize, k: f64, pair: ElementPair) -> Integrator {
        Integrator::new(SchemeConfig {
            scheme,
            n,
            k,
            t_final: 1.0,
            pair,
            ..SchemeConfig::default()
        })
        .unwrap()
    }

    fn zero_force(_: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn manufactured_force(t: f64, x: f64, y: f64) -> [f64; 2] {
        forcing(t, x, y, 1.0)
    }

    fn random_state(it: &Integrator, seed: u64) -> SchemeState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = it.discretization();
        let mut draw = |space: &Arc<FeSpace>| {
            let v = (0..space.n_dofs())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            Field::from_values(space, v).unwrap()
        };
        let u1 = draw(&d.vspace);
        let u2 = draw(&d.vspace);
        let p = draw(&d.pspace);
        it.initial_state(u1, u2, p).unwrap()
    }

    #[test]
    fn zero_state_is_fixed_point() {
        for scheme in SchemeKind::ALL {
            let mut it = integrator(scheme, 4, 0.1, ElementPair::TaylorHood);
            let d = it.discretization();
            let z = it
                .initial_state(
                    Field::zeros(&d.vspace),
                    Field::zeros(&d.vspace),
                    Field::zeros(&d.pspace),
                )
                .unwrap();
            let mut s = z;
            for _ in 0..3 {
                s = it.step(&s, &zero_force).unwrap().0;
            }
            assert_eq!(s.step, 3);
            assert!((s.time - 0.3).abs() < 1e-15);
            for f in [&s.u1, &s.u2, &s.p_curr] {
                assert!(norm_inf(&f.values) == 0.0, "{scheme}");
            }
        }
    }

    #[test]
    fn projection_identity_and_orthogonality() {
        let mut it = integrator(SchemeKind::Incremental, 8, 0.05, ElementPair::TaylorHood);
        let mut s = it.interpolated_state(&Manufactured).unwrap();
        for _ in 0..4 {
            let (next, diag) = it.step(&s, &manufactured_force).unwrap();
            let proj = diag.projection.unwrap();
            assert!(proj.identity_defect <= 1e-9, "{proj:?}");
            assert!(
                proj.orthogonality_residual <= 10.0 * it.config().pressure_tol,
                "{proj:?}"
            );
            assert!(proj.end_sq <= proj.tilde_sq);
            assert_eq!(diag.velocity.len(), 2);
            s = next;
        }
    }

    #[test]
    fn unforced_energy_does_not_grow() {
        for k in [0.5, 0.1] {
            let mut it = integrator(SchemeKind::Incremental, 6, k, ElementPair::TaylorHood);
            let mut s = random_state(&it, 7);
            let mut e = it.initial_energy(&s).unwrap();
            for _ in 0..10 {
                let (next, diag) = it.step(&s, &zero_force).unwrap();
                let e_next = diag.projection.unwrap().energy;
                assert!(e_next <= e * (1.0 + 1e-12), "k={k}: {e_next} > {e}");
                e = e_next;
                s = next;
            }
        }
    }

    #[test]
    fn pressure_stays_mean_free() {
        for scheme in SchemeKind::ALL {
            let mut it = integrator(scheme, 4, 0.1, ElementPair::Mini);
            let mut s = it.interpolated_state(&Manufactured).unwrap();
            for _ in 0..2 {
                s = it.step(&s, &manufactured_force).unwrap().0;
            }
            let mean = dot(&it.discretization().ops.pressure_weights, &s.p_curr.values);
            assert!(mean.abs() < 1e-12, "{scheme}: {mean}");
        }
    }

    #[test]
    fn schemes_agree_on_smooth_solution() {
        // Every scheme is first-order consistent; after a few small steps the
        // velocities must be close to the exact one and to each other.
        let mut finals = Vec::new();
        for scheme in SchemeKind::ALL {
            let mut it = integrator(scheme, 8, 0.02, ElementPair::TaylorHood);
            let mut s = it.interpolated_state(&Manufactured).unwrap();
            for _ in 0..5 {
                s = it.step(&s, &manufactured_force).unwrap().0;
            }
            let e = step_errors(&s.u1, &s.u2, &s.p_curr, s.time, &Manufactured).unwrap();
            assert!(e.u1_l2 < 0.02 && e.u2_l2 < 0.02, "{scheme}: {e:?}");
            finals.push(s.u1.values.clone());
        }
        for other in &finals[1..] {
            let diff: Vec<f64> = other.iter().zip(&finals[0]).map(|(a, b)| a - b).collect();
            assert!(norm_inf(&diff) < 0.05);
        }
    }

    #[test]
    fn penalty_operator_is_symmetric_without_convection() {
        let mut it = Integrator::new(SchemeConfig {
            scheme: SchemeKind::Penalty,
            n: 3,
            convection: false,
            ..SchemeConfig::default()
        })
        .unwrap();
        let d = it.discretization();
        let (z1, z2) = (Field::zeros(&d.vspace), Field::zeros(&d.vspace));
        let nv = d.vspace.n_dofs();
        let a = it.penalty_operator(&z1, &z2).unwrap();
        assert_eq!(a.n_rows(), 2 * nv);
        assert!(a.symmetry_defect() < 1e-12 * a.max_abs());
    }

    #[test]
    fn divergence_projection_of_constant_field() {
        let mut it = integrator(SchemeKind::Rotational, 4, 0.1, ElementPair::TaylorHood);
        let d = it.discretization();
        let u1 = interpolate(&d.vspace, |x, _| x);
        let u2 = interpolate(&d.vspace, |_, y| 2.0 * y);
        let (pi, _) = it.l2_project_div(&u1, &u2).unwrap();
        for v in &pi.values {
            assert!((v - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn timings_accumulate() {
        let mut it = integrator(SchemeKind::Incremental, 4, 0.1, ElementPair::TaylorHood);
        let s = it.interpolated_state(&Manufactured).unwrap();
        let before = it.timings();
        it.step(&s, &manufactured_force).unwrap();
        let after = it.timings();
        assert!(after.solve > before.solve);
        assert!(after.assembly >= before.assembly);
    }
}
