//! Sparse operators and load vectors for the weak forms of the schemes.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{quadrature_rule, FeSpace, Field, Tabulation};
use crate::sparse::CsrMatrix;

/// Quadrature degree for integrals involving the velocity space.
pub const VELOCITY_QUAD_DEGREE: usize = 6;
/// Quadrature degree for pressure-only integrals.
pub const PRESSURE_QUAD_DEGREE: usize = 4;

/// Data for one quadrature point of one cell.
pub struct QpData<'a> {
    pub cell: usize,
    /// Quadrature weight times cell area.
    pub jxw: f64,
    pub xy: [f64; 2],
    pub test_values: &'a [f64],
    pub test_grads: &'a [[f64; 2]],
    pub trial_values: &'a [f64],
    pub trial_grads: &'a [[f64; 2]],
}

/// Cell loop over a (test, trial) pair of spaces sharing a mesh.
#[derive(Debug, Clone)]
pub struct PairLoop {
    test: Arc<FeSpace>,
    trial: Arc<FeSpace>,
    test_tab: Tabulation,
    trial_tab: Tabulation,
    pattern: CsrMatrix,
}

impl PairLoop {
    pub fn new(test: &Arc<FeSpace>, trial: &Arc<FeSpace>, degree: usize) -> Result<Self> {
        if !test.same_mesh(trial) {
            return Err(Error::MeshMismatch);
        }
        let rule = quadrature_rule(degree)?;
        let pattern = CsrMatrix::pattern_from_cells(
            test.n_dofs(),
            trial.n_dofs(),
            (0..test.n_cells()).map(|c| (test.cell_dofs(c), trial.cell_dofs(c))),
        );
        Ok(PairLoop {
            test_tab: test.tabulate(&rule),
            trial_tab: trial.tabulate(&rule),
            test: Arc::clone(test),
            trial: Arc::clone(trial),
            pattern,
        })
    }

    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    /// Assembles `A[i][j] = Σ_cells Σ_q kernel(q, i, j)` where `i` indexes
    /// test functions and `j` trial functions.
    pub fn assemble(&self, kernel: impl Fn(&QpData<'_>, usize, usize) -> f64) -> CsrMatrix {
        let mut out = self.pattern.zeros_like();
        let (nt, ns) = (self.test.dofs_per_cell(), self.trial.dofs_per_cell());
        let mut local = vec![0.0; nt * ns];
        let mut tg = Vec::with_capacity(nt);
        let mut sg = Vec::with_capacity(ns);
        for cell in 0..self.test.n_cells() {
            let map = &self.test.maps()[cell];
            local.iter_mut().for_each(|v| *v = 0.0);
            for (q, (&l, &w)) in self
                .test_tab
                .rule
                .points
                .iter()
                .zip(&self.test_tab.rule.weights)
                .enumerate()
            {
                self.test_tab.physical_gradients(map, q, &mut tg);
                self.trial_tab.physical_gradients(map, q, &mut sg);
                let qp = QpData {
                    cell,
                    jxw: w * map.area(),
                    xy: map.apply([l[1], l[2]]),
                    test_values: &self.test_tab.at[q].values,
                    test_grads: &tg,
                    trial_values: &self.trial_tab.at[q].values,
                    trial_grads: &sg,
                };
                for i in 0..nt {
                    for j in 0..ns {
                        local[i * ns + j] += kernel(&qp, i, j);
                    }
                }
            }
            let (rd, cd) = (self.test.cell_dofs(cell), self.trial.cell_dofs(cell));
            for (i, &r) in rd.iter().enumerate() {
                for (j, &c) in cd.iter().enumerate() {
                    out.add_to(r, c, local[i * ns + j]);
                }
            }
        }
        out
    }
}

/// All constant operators of the schemes.
///
/// `grad_*` has entries `∫ (∂ₐφ_q) ψᵢ` (velocity rows, pressure columns);
/// `div_*` has entries `∫ (∂ₐψⱼ) φ_q` (pressure rows, velocity columns).
/// On boundary-free velocity dofs the two are related by integration by
/// parts: `div_a = -grad_aᵀ`.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub mass_v: CsrMatrix,
    pub stiff_v: CsrMatrix,
    pub mass_p: CsrMatrix,
    pub stiff_p: CsrMatrix,
    pub grad_x: CsrMatrix,
    pub grad_y: CsrMatrix,
    pub div_x: CsrMatrix,
    pub div_y: CsrMatrix,
    pub graddiv_xx: CsrMatrix,
    pub graddiv_xy: CsrMatrix,
    pub graddiv_yy: CsrMatrix,
    /// `M_p · 1`, the weights of the mass-weighted pressure mean.
    pub pressure_weights: Vec<f64>,
}

/// Builds every operator in [`OperatorSet`] plus the velocity cell loop used
/// for convection refills.
pub fn assemble_operator_set(
    vspace: &Arc<FeSpace>,
    pspace: &Arc<FeSpace>,
) -> Result<(OperatorSet, PairLoop)> {
    if !vspace.same_mesh(pspace) {
        return Err(Error::MeshMismatch);
    }
    let vv = PairLoop::new(vspace, vspace, VELOCITY_QUAD_DEGREE)?;
    let pp = PairLoop::new(pspace, pspace, PRESSURE_QUAD_DEGREE)?;
    let vp = PairLoop::new(vspace, pspace, VELOCITY_QUAD_DEGREE)?;
    let pv = PairLoop::new(pspace, vspace, VELOCITY_QUAD_DEGREE)?;

    let mass = |q: &QpData<'_>, i: usize, j: usize| q.jxw * q.test_values[i] * q.trial_values[j];
    let stiff = |q: &QpData<'_>, i: usize, j: usize| {
        let (a, b) = (q.test_grads[i], q.trial_grads[j]);
        q.jxw * (a[0] * b[0] + a[1] * b[1])
    };
    let graddiv = |a: usize, b: usize| {
        move |q: &QpData<'_>, i: usize, j: usize| q.jxw * q.test_grads[i][a] * q.trial_grads[j][b]
    };
    // ∫ (∂ₐ trial) test, used for both gradient and divergence couplings
    let trial_derivative = |a: usize| {
        move |q: &QpData<'_>, i: usize, j: usize| q.jxw * q.trial_grads[j][a] * q.test_values[i]
    };

    let mass_p = pp.assemble(mass);
    let pressure_weights = mass_p.spmv(&vec![1.0; pspace.n_dofs()])?;
    let ops = OperatorSet {
        mass_v: vv.assemble(mass),
        stiff_v: vv.assemble(stiff),
        stiff_p: pp.assemble(stiff),
        mass_p,
        grad_x: vp.assemble(trial_derivative(0)),
        grad_y: vp.assemble(trial_derivative(1)),
        div_x: pv.assemble(trial_derivative(0)),
        div_y: pv.assemble(trial_derivative(1)),
        graddiv_xx: vv.assemble(graddiv(0, 0)),
        graddiv_xy: vv.assemble(graddiv(0, 1)),
        graddiv_yy: vv.assemble(graddiv(1, 1)),
        pressure_weights,
    };
    Ok((ops, vv))
}

/// Skew-symmetric convection operator
/// `N(w)[i][j] = ½ ∫ (w·∇φⱼ) φᵢ − (w·∇φᵢ) φⱼ`, applied per velocity component.
pub fn convection_matrix(vloop: &PairLoop, w1: &Field, w2: &Field) -> Result<CsrMatrix> {
    let space = &vloop.test;
    for w in [w1, w2] {
        if w.values.len() != space.n_dofs()
            || !w.space().same_mesh(space)
            || w.space().kind() != space.kind()
        {
            return Err(Error::Dimension(
                "advecting field does not live in the velocity space".into(),
            ));
        }
    }
    let (w1, w2) = (&w1.values, &w2.values);
    Ok(vloop.assemble(|q, i, j| {
        let dofs = space.cell_dofs(q.cell);
        let mut w = [0.0, 0.0];
        for (k, &d) in dofs.iter().enumerate() {
            w[0] += w1[d] * q.test_values[k];
            w[1] += w2[d] * q.test_values[k];
        }
        let (gi, gj) = (q.test_grads[i], q.trial_grads[j]);
        let adv_j = w[0] * gj[0] + w[1] * gj[1];
        let adv_i = w[0] * gi[0] + w[1] * gi[1];
        0.5 * q.jxw * (adv_j * q.test_values[i] - adv_i * q.trial_values[j])
    }))
}

/// `bᵢ = ∫ f ψᵢ` with the velocity-space quadrature.
pub fn load_vector(space: &FeSpace, f: impl Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
    let rule = quadrature_rule(VELOCITY_QUAD_DEGREE)?;
    let tab = space.tabulate(&rule);
    let mut b = vec![0.0; space.n_dofs()];
    for cell in 0..space.n_cells() {
        let map = &space.maps()[cell];
        let dofs = space.cell_dofs(cell);
        for (q, (&l, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let xy = map.apply([l[1], l[2]]);
            let fw = f(xy[0], xy[1]) * w * map.area();
            for (i, &d) in dofs.iter().enumerate() {
                b[d] += fw * tab.at[q].values[i];
            }
        }
    }
    Ok(b)
}

/// Load vectors of a vector-valued forcing at time `t`.
pub fn forcing_vector(
    space: &FeSpace,
    f: impl Fn(f64, f64, f64) -> [f64; 2],
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let rule = quadrature_rule(VELOCITY_QUAD_DEGREE)?;
    let tab = space.tabulate(&rule);
    let mut b1 = vec![0.0; space.n_dofs()];
    let mut b2 = vec![0.0; space.n_dofs()];
    for cell in 0..space.n_cells() {
        let map = &space.maps()[cell];
        let dofs = space.cell_dofs(cell);
        for (q, (&l, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let xy = map.apply([l[1], l[2]]);
            let fv = f(t, xy[0], xy[1]);
            let jxw = w * map.area();
            for (i, &d) in dofs.iter().enumerate() {
                let phi = tab.at[q].values[i] * jxw;
                b1[d] += fv[0] * phi;
                b2[d] += fv[1] * phi;
            }
        }
    }
    Ok((b1, b2))
}

/// Homogeneous Dirichlet conditions by symmetric elimination: the rows and
/// columns of `dofs` are zeroed, their diagonal set to one and the matching
/// right-hand-side entries set to zero.
pub fn apply_dirichlet(a: &mut CsrMatrix, b: &mut [f64], dofs: &[usize]) -> Result<()> {
    if a.n_rows() != b.len() || a.n_rows() != a.n_cols() {
        return Err(Error::Dimension(
            "Dirichlet elimination needs a square system".into(),
        ));
    }
    let mut fixed = vec![false; a.n_rows()];
    for &d in dofs {
        *fixed
            .get_mut(d)
            .ok_or_else(|| Error::Dimension(format!("boundary dof {d} out of range")))? = true;
    }
    let row_ptr = a.row_ptr().to_vec();
    let col_idx = a.col_idx().to_vec();
    let values = a.values_mut();
    for r in 0..b.len() {
        for k in row_ptr[r]..row_ptr[r + 1] {
            let c = col_idx[k];
            if fixed[r] || fixed[c] {
                values[k] = if r == c { 1.0 } else { 0.0 };
            }
        }
        if fixed[r] {
            b[r] = 0.0;
        }
    }
    Ok(())
}

/// Zeroes the boundary-dof entries of a right-hand side only.
pub fn zero_dofs(b: &mut [f64], dofs: &[usize]) {
    for &d in dofs {
        b[d] = 0.0;
    }
}
