//! Manufactured solution, discrete-in-time error norms and observed orders.

use std::f64::consts::PI;
use std::fmt;

use crate::assemble::VELOCITY_QUAD_DEGREE;
use crate::error::{Error, Result};
use crate::fem::{quadrature_rule, Field};

const TWO_PI: f64 = 2.0 * PI;

/// `‖u₁(0)‖²_{L²} = ∫(cos 2πx − 1)² dx · ∫ sin² 2πy dy = (3/2)(1/2)`; the same
/// value holds for `u₂` by symmetry.
pub const EXACT_U1_L2_SQUARED_AT_T0: f64 = 0.75;

/// Exact `(u₁, u₂, p)` of the manufactured test problem.
pub fn exact_solution(t: f64, x: f64, y: f64) -> [f64; 3] {
    let e = (-t).exp();
    let (sx, cx) = (TWO_PI * x).sin_cos();
    let (sy, cy) = (TWO_PI * y).sin_cos();
    [
        e * (cx - 1.0) * sy,
        -e * (cy - 1.0) * sx,
        TWO_PI * e * (sx + sy),
    ]
}

/// `[[∂ₓu₁, ∂ᵧu₁], [∂ₓu₂, ∂ᵧu₂]]`.
pub fn exact_velocity_gradient(t: f64, x: f64, y: f64) -> [[f64; 2]; 2] {
    let e = (-t).exp();
    let (sx, cx) = (TWO_PI * x).sin_cos();
    let (sy, cy) = (TWO_PI * y).sin_cos();
    let a = TWO_PI * e;
    [
        [-a * sx * sy, a * (cx - 1.0) * cy],
        [-a * (cy - 1.0) * cx, a * sy * sx],
    ]
}

/// `(Δu₁, Δu₂)`.
pub fn exact_velocity_laplacian(t: f64, x: f64, y: f64) -> [f64; 2] {
    let e = (-t).exp();
    let (sx, cx) = (TWO_PI * x).sin_cos();
    let (sy, cy) = (TWO_PI * y).sin_cos();
    let a2 = TWO_PI * TWO_PI * e;
    [-a2 * sy * (2.0 * cx - 1.0), a2 * sx * (2.0 * cy - 1.0)]
}

/// Forcing `f = uₜ + (u·∇)u − νΔu + ∇p` for the manufactured solution.
pub fn forcing(t: f64, x: f64, y: f64, nu: f64) -> [f64; 2] {
    let [u1, u2, _] = exact_solution(t, x, y);
    let g = exact_velocity_gradient(t, x, y);
    let lap = exact_velocity_laplacian(t, x, y);
    let e = (-t).exp();
    let a2 = TWO_PI * TWO_PI * e;
    let grad_p = [a2 * (TWO_PI * x).cos(), a2 * (TWO_PI * y).cos()];
    [
        -u1 + u1 * g[0][0] + u2 * g[0][1] - nu * lap[0] + grad_p[0],
        -u2 + u1 * g[1][0] + u2 * g[1][1] - nu * lap[1] + grad_p[1],
    ]
}

/// Per-step spatial errors, sampled at `t₀ … t_M`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub u1_l2: Vec<f64>,
    pub u1_h1: Vec<f64>,
    pub u2_l2: Vec<f64>,
    pub u2_h1: Vec<f64>,
    pub p_l2: Vec<f64>,
}

/// The six summary norms reported per run, in table row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormKind {
    U1LinfL2,
    U1LinfH1,
    U2LinfL2,
    U2LinfH1,
    PL2L2,
    PLinfL2,
}

impl NormKind {
    pub const ALL: [NormKind; 6] = [
        NormKind::U1LinfL2,
        NormKind::U1LinfH1,
        NormKind::U2LinfL2,
        NormKind::U2LinfH1,
        NormKind::PL2L2,
        NormKind::PLinfL2,
    ];

    /// Machine-readable key used in CSV files.
    pub fn key(self) -> &'static str {
        match self {
            NormKind::U1LinfL2 => "u1_linf_l2",
            NormKind::U1LinfH1 => "u1_linf_h1semi",
            NormKind::U2LinfL2 => "u2_linf_l2",
            NormKind::U2LinfH1 => "u2_linf_h1semi",
            NormKind::PL2L2 => "p_l2_l2",
            NormKind::PLinfL2 => "p_linf_l2",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|n| n.key() == key)
    }

    /// Human-readable row label.
    pub fn label(self) -> &'static str {
        match self {
            NormKind::U1LinfL2 => "||u1||_{l^inf(L^2)}",
            NormKind::U1LinfH1 => "|u1|_{l^inf(H^1)}",
            NormKind::U2LinfL2 => "||u2||_{l^inf(L^2)}",
            NormKind::U2LinfH1 => "|u2|_{l^inf(H^1)}",
            NormKind::PL2L2 => "||p||_{l^2(L^2)}",
            NormKind::PLinfL2 => "||p||_{l^inf(L^2)}",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Summary norms of one run, indexed like [`NormKind::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormSummary(pub [f64; 6]);

impl NormSummary {
    pub fn get(&self, kind: NormKind) -> f64 {
        self.0[kind as usize]
    }
}

/// `max_m eₘ`.
pub fn linf_norm(series: &[f64]) -> f64 {
    series.iter().fold(0.0, |m, &e| m.max(e))
}

/// `(k Σ_{m=0}^{M} eₘ²)^{1/2}`.
pub fn l2_norm(series: &[f64], k: f64) -> f64 {
    (k * series.iter().map(|e| e * e).sum::<f64>()).sqrt()
}

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, e: StepErrors) {
        self.times.push(t);
        self.u1_l2.push(e.u1_l2);
        self.u1_h1.push(e.u1_h1);
        self.u2_l2.push(e.u2_l2);
        self.u2_h1.push(e.u2_h1);
        self.p_l2.push(e.p_l2);
    }

    pub fn summary(&self, k: f64) -> NormSummary {
        NormSummary([
            linf_norm(&self.u1_l2),
            linf_norm(&self.u1_h1),
            linf_norm(&self.u2_l2),
            linf_norm(&self.u2_h1),
            l2_norm(&self.p_l2, k),
            linf_norm(&self.p_l2),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepErrors {
    pub u1_l2: f64,
    pub u1_h1: f64,
    pub u2_l2: f64,
    pub u2_h1: f64,
    pub p_l2: f64,
}

/// Exact velocity, its gradient and pressure at a point and time.
pub trait ReferenceSolution: Sync {
    fn velocity(&self, t: f64, x: f64, y: f64) -> [f64; 2];
    fn velocity_gradient(&self, t: f64, x: f64, y: f64) -> [[f64; 2]; 2];
    fn pressure(&self, t: f64, x: f64, y: f64) -> f64;
}

/// The trigonometric manufactured solution.
#[derive(Debug, Clone, Copy, Default)]
pub struct Manufactured;

impl ReferenceSolution for Manufactured {
    fn velocity(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let [u1, u2, _] = exact_solution(t, x, y);
        [u1, u2]
    }

    fn velocity_gradient(&self, t: f64, x: f64, y: f64) -> [[f64; 2]; 2] {
        exact_velocity_gradient(t, x, y)
    }

    fn pressure(&self, t: f64, x: f64, y: f64) -> f64 {
        exact_solution(t, x, y)[2]
    }
}

/// `u ≡ 0, p ≡ 0`; turns the error norms into plain norms of the fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quiescent;

impl ReferenceSolution for Quiescent {
    fn velocity(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn velocity_gradient(&self, _: f64, _: f64, _: f64) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }

    fn pressure(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// Spatial errors of one time level.
///
/// Velocity errors are the L² norm and the H¹ seminorm (gradient in L²); the
/// pressure error compares mean-free representatives of both pressures.
pub fn step_errors(
    u1: &Field,
    u2: &Field,
    p: &Field,
    t: f64,
    exact: &dyn ReferenceSolution,
) -> Result<StepErrors> {
    let vs = u1.space();
    if u2.values.len() != vs.n_dofs() || !p.space().same_mesh(vs) {
        return Err(Error::Dimension(
            "velocity and pressure fields disagree".into(),
        ));
    }
    let rule = quadrature_rule(VELOCITY_QUAD_DEGREE)?;
    let mut e = StepErrors::default();
    let (mut p_sq, mut p_mean) = (0.0, 0.0);
    for cell in 0..vs.n_cells() {
        let map = &vs.maps()[cell];
        for (&l, &w) in rule.points.iter().zip(&rule.weights) {
            let jxw = w * map.area();
            let xy = map.apply([l[1], l[2]]);
            let uex = exact.velocity(t, xy[0], xy[1]);
            let gex = exact.velocity_gradient(t, xy[0], xy[1]);
            let (v1, g1) = u1.eval(cell, l);
            let (v2, g2) = u2.eval(cell, l);
            e.u1_l2 += jxw * (v1 - uex[0]).powi(2);
            e.u2_l2 += jxw * (v2 - uex[1]).powi(2);
            e.u1_h1 += jxw * ((g1[0] - gex[0][0]).powi(2) + (g1[1] - gex[0][1]).powi(2));
            e.u2_h1 += jxw * ((g2[0] - gex[1][0]).powi(2) + (g2[1] - gex[1][1]).powi(2));
            let (ph, _) = p.eval(cell, l);
            let d = ph - exact.pressure(t, xy[0], xy[1]);
            p_sq += jxw * d * d;
            p_mean += jxw * d;
        }
    }
    // ‖d − mean(d)‖² = ‖d‖² − (∫d)² on the unit square
    let p_err_sq = (p_sq - p_mean * p_mean).max(0.0);
    e.u1_l2 = e.u1_l2.sqrt();
    e.u2_l2 = e.u2_l2.sqrt();
    e.u1_h1 = e.u1_h1.sqrt();
    e.u2_h1 = e.u2_h1.sqrt();
    e.p_l2 = p_err_sq.sqrt();
    Ok(e)
}

/// Full error series of a stored history `(tₘ, u₁, u₂, p)`, `m = 0..=M`.
pub fn error_norms(
    history: &[(f64, Field, Field, Field)],
    exact: &dyn ReferenceSolution,
    k: f64,
) -> Result<(ErrorSeries, NormSummary)> {
    if history.is_empty() {
        return Err(Error::Dimension("empty history".into()));
    }
    let mut series = ErrorSeries::default();
    for (t, u1, u2, p) in history {
        series.push(*t, step_errors(u1, u2, p, *t, exact)?);
    }
    let summary = series.summary(k);
    Ok((series, summary))
}

/// `ln(e_coarse / e_fine) / ln(k_coarse / k_fine)`.
pub fn observed_order(e_coarse: f64, e_fine: f64, k_coarse: f64, k_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "errors must be positive ({e_coarse}, {e_fine})"
        )));
    }
    if !(k_fine > 0.0 && k_coarse > k_fine) {
        return Err(Error::InvalidArgument(format!(
            "need k_coarse > k_fine > 0 ({k_coarse}, {k_fine})"
        )));
    }
    Ok((e_coarse / e_fine).ln() / (k_coarse / k_fine).ln())
}
