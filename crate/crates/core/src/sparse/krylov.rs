//! Conjugate gradient and BiCGSTAB with optional Jacobi preconditioning.

use std::fmt;

use super::csr::{dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative residual target `‖b - Ax‖ / ‖b‖`.
    pub tol: f64,
    /// `None` means `10 · n`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl SolveOptions {
    pub fn new(tol: f64) -> Self {
        SolveOptions {
            tol,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    pub fn with_preconditioner(mut self, p: Preconditioner) -> Self {
        self.preconditioner = p;
        self
    }

    fn max_iter_for(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// True relative residual of the returned iterate.
    pub residual: f64,
    pub converged: bool,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} after {} iterations, relative residual {:.3e}",
            if self.converged {
                "converged"
            } else {
                "not converged"
            },
            self.iterations,
            self.residual
        )
    }
}

impl SolveReport {
    pub fn into_result(self, what: &'static str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { what, report: self })
        }
    }
}

/// Constant null space of a pure-Neumann operator, with the mean fixed by a
/// mass-weighted constraint `mᵀx = 0`.
#[derive(Debug, Clone, Copy)]
pub struct NullSpace<'a> {
    pub mass: &'a [f64],
}

impl NullSpace<'_> {
    /// Shifts `x` by a constant so that `mᵀx = 0`.
    pub fn fix_mean(&self, x: &mut [f64]) {
        let total: f64 = self.mass.iter().sum();
        let shift = dot(self.mass, x) / total;
        x.iter_mut().for_each(|v| *v -= shift);
    }
}

/// Euclidean projection onto the orthogonal complement of constants.
pub fn remove_constant(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn check_square(a: &CsrMatrix, b: &[f64]) -> Result<()> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{}, expected square",
            a.n_rows(),
            a.n_cols()
        )));
    }
    if b.len() != a.n_rows() {
        return Err(Error::Dimension(format!(
            "rhs has length {}, matrix has {} rows",
            b.len(),
            a.n_rows()
        )));
    }
    Ok(())
}

struct Jacobi(Option<Vec<f64>>);

impl Jacobi {
    fn new(a: &CsrMatrix, kind: Preconditioner) -> Self {
        match kind {
            Preconditioner::None => Jacobi(None),
            Preconditioner::Jacobi => Jacobi(Some(
                a.diagonal()
                    .iter()
                    .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
                    .collect(),
            )),
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match &self.0 {
            None => z.copy_from_slice(r),
            Some(inv) => z
                .iter_mut()
                .zip(r)
                .zip(inv)
                .for_each(|((z, r), d)| *z = r * d),
        }
    }
}

fn residual(a: &CsrMatrix, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.spmv_into(x, r);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Solves a symmetric positive (semi-)definite system.
///
/// With `nullspace`, the right-hand side is projected onto the complement of
/// constants, every preconditioned residual is re-projected, and the result
/// satisfies `mᵀx = 0`.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    opts: &SolveOptions,
    nullspace: Option<NullSpace<'_>>,
) -> Result<(Vec<f64>, SolveReport)> {
    cg_solve_with_guess(a, b, None, opts, nullspace)
}

pub fn cg_solve_with_guess(
    a: &CsrMatrix,
    b: &[f64],
    guess: Option<&[f64]>,
    opts: &SolveOptions,
    nullspace: Option<NullSpace<'_>>,
) -> Result<(Vec<f64>, SolveReport)> {
    check_square(a, b)?;
    let n = b.len();
    if let Some(ns) = &nullspace {
        if ns.mass.len() != n {
            return Err(Error::Dimension("null-space mass vector length".into()));
        }
    }
    let mut rhs = b.to_vec();
    if nullspace.is_some() {
        remove_constant(&mut rhs);
    }
    let mut x = match guess {
        Some(g) if g.len() == n => g.to_vec(),
        Some(_) => return Err(Error::Dimension("initial guess length".into())),
        None => vec![0.0; n],
    };
    let bnorm = norm2(&rhs);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                residual: 0.0,
                converged: true,
            },
        ));
    }
    let target = opts.tol * bnorm;
    let max_iter = opts.max_iter_for(n);
    let pc = Jacobi::new(a, opts.preconditioner);
    let project = |v: &mut [f64]| {
        if nullspace.is_some() {
            remove_constant(v)
        }
    };

    let mut r = vec![0.0; n];
    residual(a, &rhs, &x, &mut r);
    project(&mut r);
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut rnorm = norm2(&r);

    'outer: while rnorm > target && iterations < max_iter {
        pc.apply(&r, &mut z);
        project(&mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            a.spmv_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 || !pap.is_finite() {
                break 'outer;
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            project(&mut r);
            iterations += 1;
            rnorm = norm2(&r);
            if rnorm <= target {
                break;
            }
            pc.apply(&r, &mut z);
            project(&mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        }
        // the recursive residual drifts; restart from the true one
        residual(a, &rhs, &x, &mut r);
        project(&mut r);
        rnorm = norm2(&r);
    }

    if let Some(ns) = &nullspace {
        ns.fix_mean(&mut x);
    }
    residual(a, &rhs, &x, &mut r);
    let rel = norm2(&r) / bnorm;
    Ok((
        x,
        SolveReport {
            iterations,
            residual: rel,
            converged: rel <= opts.tol,
        },
    ))
}

/// Solves a general square system by preconditioned BiCGSTAB.
pub fn bicgstab_solve(
    a: &CsrMatrix,
    b: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    bicgstab_solve_with_guess(a, b, None, opts)
}

pub fn bicgstab_solve_with_guess(
    a: &CsrMatrix,
    b: &[f64],
    guess: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    check_square(a, b)?;
    let n = b.len();
    let mut x = match guess {
        Some(g) if g.len() == n => g.to_vec(),
        Some(_) => return Err(Error::Dimension("initial guess length".into())),
        None => vec![0.0; n],
    };
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                residual: 0.0,
                converged: true,
            },
        ));
    }
    let target = opts.tol * bnorm;
    let max_iter = opts.max_iter_for(n);
    let pc = Jacobi::new(a, opts.preconditioner);

    let mut r = vec![0.0; n];
    residual(a, b, &x, &mut r);
    let mut rnorm = norm2(&r);
    let (mut p, mut v, mut y, mut s, mut z, mut t) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut iterations = 0;
    let mut restarts = 0;

    'outer: while rnorm > target && iterations < max_iter {
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        p.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        while iterations < max_iter {
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || !rho_new.is_finite() {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            pc.apply(&p, &mut y);
            a.spmv_into(&y, &mut v);
            let rv = dot(&r_hat, &v);
            if rv == 0.0 || !rv.is_finite() {
                break;
            }
            alpha = rho / rv;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            axpy(alpha, &y, &mut x);
            iterations += 1;
            if norm2(&s) <= target {
                r.copy_from_slice(&s);
                rnorm = norm2(&r);
                break;
            }
            pc.apply(&s, &mut z);
            a.spmv_into(&z, &mut t);
            let tt = dot(&t, &t);
            if tt == 0.0 || !tt.is_finite() {
                break;
            }
            omega = dot(&t, &s) / tt;
            axpy(omega, &z, &mut x);
            for i in 0..n {
                r[i] = s[i] - omega * t[i];
            }
            rnorm = norm2(&r);
            if rnorm <= target || omega == 0.0 {
                break;
            }
        }
        residual(a, b, &x, &mut r);
        let true_norm = norm2(&r);
        if true_norm >= rnorm * 0.999 && true_norm > target {
            restarts += 1;
            if restarts > 50 {
                break 'outer;
            }
        }
        rnorm = true_norm;
    }

    residual(a, b, &x, &mut r);
    let rel = norm2(&r) / bnorm;
    Ok((
        x,
        SolveReport {
            iterations,
            residual: rel,
            converged: rel <= opts.tol,
        },
    ))
}
