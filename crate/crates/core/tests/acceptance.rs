//! Acceptance checks, one PASS/FAIL line each. `--slow` (or `PROJFEM_SLOW=1`)
//! also runs the n = 70 order table.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use projfem::assemble::{convection_matrix, forcing_vector, PairLoop, VELOCITY_QUAD_DEGREE};
use projfem::driver::{convergence, simulate, ConvergenceReport, InitialData};
use projfem::fem::{ElementKind, FeSpace, Field};
use projfem::mesh::{Diagonal, TriMesh};
use projfem::schemes::{ElementPair, Integrator, SchemeConfig, SchemeKind};
use projfem::verify::{forcing, Manufactured, NormKind};
use projfem::Result;

const LADDER: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Incremental-scheme orders on n = 70, rows in [`NormKind::ALL`] order.
const REFERENCE_ORDERS: [[f64; 3]; 6] = [
    [1.077, 1.326, 1.582],
    [0.812, 1.146, 1.453],
    [1.095, 1.352, 1.585],
    [0.817, 1.148, 1.457],
    [0.877, 1.282, 1.535],
    [0.880, 1.157, 1.444],
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn ladder_config(scheme: SchemeKind, n: usize) -> SchemeConfig {
    SchemeConfig {
        scheme,
        n,
        t_final: 2.0,
        pair: ElementPair::TaylorHood,
        ..SchemeConfig::default()
    }
}

fn projection_run() -> Result<projfem::driver::Simulation> {
    let cfg = SchemeConfig {
        n: 16,
        k: 0.05,
        t_final: 1.0,
        ..SchemeConfig::default()
    };
    simulate(&cfg, InitialData::Exact, 0, |_, _| Ok(()))
}

fn projection_identity() -> Result<Outcome> {
    let sim = projection_run()?;
    let worst = sim
        .invariants
        .iter()
        .filter_map(|r| r.identity_defect)
        .fold(0.0, f64::max);
    let steps = sim.invariants.len();
    outcome(
        steps == 20 && worst <= 1e-9,
        format!("max relative defect {worst:.2e} over {steps} steps (<= 1e-9)"),
    )
}

fn divergence_orthogonality() -> Result<Outcome> {
    let sim = projection_run()?;
    let tol = 10.0 * sim.config.pressure_tol;
    let worst = sim
        .invariants
        .iter()
        .filter_map(|r| r.orthogonality)
        .fold(0.0, f64::max);
    outcome(
        worst <= tol,
        format!("max residual {worst:.2e} (<= {tol:.0e})"),
    )
}

fn unconditional_stability() -> Result<Outcome> {
    let mut details = Vec::new();
    let mut pass = true;
    for k in [0.5, 0.1] {
        let cfg = SchemeConfig {
            n: 16,
            k,
            t_final: 50.0 * k,
            ..SchemeConfig::default()
        };
        let sim = simulate(&cfg, InitialData::Random, 11, |_, _| Ok(()))?;
        let mut prev = sim.initial_energy;
        let mut worst = f64::NEG_INFINITY;
        for r in &sim.invariants {
            let e = r.energy.expect("incremental scheme records energy");
            worst = worst.max((e - prev) / prev);
            pass &= e <= prev * (1.0 + 1e-12);
            prev = e;
        }
        pass &= sim.invariants.len() == 50;
        details.push(format!("k={k}: max relative change {worst:.2e}"));
    }
    outcome(pass, details.join(", "))
}

fn skew_symmetry() -> Result<Outcome> {
    let mesh = Arc::new(TriMesh::build_structured(8, Diagonal::Right)?);
    let space = FeSpace::new(mesh, ElementKind::P2)?;
    let pl = PairLoop::new(&space, &space, VELOCITY_QUAD_DEGREE)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let random = |rng: &mut ChaCha8Rng| -> Result<Field> {
        Field::from_values(
            &space,
            (0..space.n_dofs())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        )
    };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let w1 = random(&mut rng)?;
        let w2 = random(&mut rng)?;
        let v = random(&mut rng)?.values;
        let n = convection_matrix(&pl, &w1, &w2)?;
        let nv = n.spmv(&v)?;
        let form: f64 = v.iter().zip(&nv).map(|(a, b)| a * b).sum();
        let mut scale = 0.0;
        for r in 0..n.n_rows() {
            let (cols, vals) = n.row(r);
            scale += cols
                .iter()
                .zip(vals)
                .map(|(&c, a)| (v[r] * a * v[c]).abs())
                .sum::<f64>();
        }
        worst = worst.max(form.abs() / scale);
    }
    outcome(
        worst <= 1e-12,
        format!("max |v'N(w)v| / sum|v_i N_ij v_j| = {worst:.2e} over 20 pairs"),
    )
}

fn monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn order_row(report: &ConvergenceReport, kind: NormKind) -> Vec<f64> {
    report.orders().iter().map(|o| o.get(kind)).collect()
}

fn fmt_row(v: &[f64]) -> String {
    v.iter()
        .map(|o| format!("{o:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn temporal_convergence(report: &ConvergenceReport) -> Result<Outcome> {
    let mut pass = true;
    let mut details = Vec::new();
    for kind in [NormKind::U1LinfL2, NormKind::PLinfL2] {
        let row = order_row(report, kind);
        pass &= row.last().is_some_and(|&o| o >= 0.9) && monotone(&row);
        details.push(format!("{}: {}", kind.key(), fmt_row(&row)));
    }
    outcome(pass, details.join("; "))
}

fn table_reproduction() -> Result<Outcome> {
    let report = convergence(
        &ladder_config(SchemeKind::Incremental, 70),
        &LADDER,
        workers(),
    )?;
    let mut worst: f64 = 0.0;
    for (kind, reference) in NormKind::ALL.into_iter().zip(REFERENCE_ORDERS) {
        for (o, r) in order_row(&report, kind).iter().zip(reference) {
            worst = worst.max((o - r).abs());
        }
    }
    outcome(
        worst <= 0.25,
        format!("max |order - reference| = {worst:.4} over 18 entries (<= 0.25)"),
    )
}

fn competitor_schemes() -> Result<Outcome> {
    let mut pass = true;
    let mut details = Vec::new();
    for scheme in [
        SchemeKind::Rotational,
        SchemeKind::Consistent,
        SchemeKind::Penalty,
    ] {
        let report = convergence(&ladder_config(scheme, 32), &LADDER, workers())?;
        let o = report.finest_order(NormKind::PLinfL2);
        pass &= o >= 0.8;
        details.push(format!("{scheme} {o:.3}"));
    }
    outcome(
        pass,
        format!("finest-pair p_linf_l2 orders: {}", details.join(", ")),
    )
}

fn spatial_order_mini() -> Result<Outcome> {
    let mut errors = Vec::new();
    let mut hs = Vec::new();
    for n in [8usize, 16, 32] {
        let h = 1.0 / n as f64;
        let cfg = SchemeConfig {
            n,
            k: h,
            t_final: 1.0,
            pair: ElementPair::Mini,
            ..SchemeConfig::default()
        };
        let sim = simulate(&cfg, InitialData::Exact, 0, |_, _| Ok(()))?;
        let s = &sim.series;
        let e = s
            .u1_h1
            .iter()
            .zip(&s.u2_h1)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0, f64::max);
        errors.push(e);
        hs.push(h);
    }
    let orders: Vec<f64> = (0..2)
        .map(|i| projfem::verify::observed_order(errors[i], errors[i + 1], hs[i], hs[i + 1]))
        .collect::<Result<_>>()?;
    let pass = orders.iter().all(|&o| o >= 0.8);
    outcome(
        pass,
        format!(
            "l_inf(H1-seminorm) errors {:.3e} {:.3e} {:.3e}, orders {}",
            errors[0],
            errors[1],
            errors[2],
            fmt_row(&orders)
        ),
    )
}

/// One incremental step from `state` solved densely: velocity on interior
/// dofs by LU, pressure increment from the Neumann system bordered with the
/// mean constraint.
fn dense_step(
    it: &Integrator,
    state: &projfem::schemes::SchemeState,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let cfg = it.config();
    let d = it.discretization();
    let ops = &d.ops;
    let k = cfg.k;
    let nv = d.vspace.n_dofs();
    let np = d.pspace.n_dofs();
    let interior: Vec<usize> = (0..nv).filter(|&i| !d.vspace.is_boundary_dof(i)).collect();

    let n = convection_matrix(&d.vloop, &state.u1, &state.u2)?.to_dense();
    let m = ops.mass_v.to_dense();
    let kv = ops.stiff_v.to_dense();
    let a = DMatrix::from_fn(interior.len(), interior.len(), |r, c| {
        let (i, j) = (interior[r], interior[c]);
        m[i][j] / k + n[i][j] + cfg.nu * kv[i][j]
    });
    let lu = a.lu();
    let p_star: Vec<f64> = state
        .p_curr
        .values
        .iter()
        .zip(&state.p_prev.values)
        .map(|(c, p)| 2.0 * c - p)
        .collect();
    let nu = cfg.nu;
    let (b1, b2) = forcing_vector(
        &d.vspace,
        |t, x, y| forcing(t, x, y, nu),
        cfg.time(state.step + 1),
    )?;
    let mut velocity = Vec::new();
    for (u, b, div) in [(&state.u1, &b1, &ops.div_x), (&state.u2, &b2, &ops.div_y)] {
        let mu = ops.mass_v.spmv(&u.values)?;
        let dtp = div.spmv_transpose(&p_star)?;
        let rhs = DVector::from_iterator(
            interior.len(),
            interior.iter().map(|&i| mu[i] / k + dtp[i] + b[i]),
        );
        let x = lu.solve(&rhs).expect("velocity matrix is nonsingular");
        let mut full = vec![0.0; nv];
        for (r, &i) in interior.iter().enumerate() {
            full[i] = x[r];
        }
        velocity.push(full);
    }

    let kp = ops.stiff_p.to_dense();
    let w = &ops.pressure_weights;
    let div = {
        let mut s = ops.div_x.spmv(&velocity[0])?;
        let sy = ops.div_y.spmv(&velocity[1])?;
        s.iter_mut().zip(&sy).for_each(|(a, b)| *a += b);
        s
    };
    let bordered = DMatrix::from_fn(np + 1, np + 1, |r, c| match (r < np, c < np) {
        (true, true) => k * kp[r][c],
        (true, false) => w[r],
        (false, true) => w[c],
        (false, false) => 0.0,
    });
    let rhs = DVector::from_iterator(np + 1, div.iter().map(|v| -v).chain(std::iter::once(0.0)));
    let sol = bordered
        .lu()
        .solve(&rhs)
        .expect("bordered Neumann system is nonsingular");
    let p: Vec<f64> = (0..np).map(|i| state.p_curr.values[i] + sol[i]).collect();
    let u2 = velocity.pop().expect("two components");
    let u1 = velocity.pop().expect("two components");
    Ok((u1, u2, p))
}

fn oracle_equivalence() -> Result<Outcome> {
    let cfg = SchemeConfig {
        n: 4,
        k: 0.1,
        t_final: 1.0,
        ..SchemeConfig::default()
    };
    let mut it = Integrator::new(cfg)?;
    let f = |t: f64, x: f64, y: f64| forcing(t, x, y, 1.0);
    let s0 = it.interpolated_state(&Manufactured)?;
    let (s1, _) = it.step(&s0, &f)?;
    let (s2, _) = it.step(&s1, &f)?;
    let (u1, u2, p) = dense_step(&it, &s1)?;
    let diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let worst = diff(&u1, &s2.u1.values)
        .max(diff(&u2, &s2.u2.values))
        .max(diff(&p, &s2.p_curr.values));
    let scale = s2.p_curr.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    outcome(
        worst <= 1e-8,
        format!("max dof difference {worst:.2e} (pressure scale {scale:.2})"),
    )
}

fn determinism(first: &ConvergenceReport) -> Result<Outcome> {
    let again = convergence(
        &ladder_config(SchemeKind::Incremental, 32),
        &LADDER,
        workers(),
    )?;
    let (a, b) = (first.to_csv(), again.to_csv());
    outcome(
        a == b,
        format!("{} CSV bytes, identical: {}", a.len(), a == b),
    )
}

fn main() {
    let slow = std::env::args().any(|a| a == "--slow")
        || std::env::var("PROJFEM_SLOW").is_ok_and(|v| v == "1");
    let mut failures = 0;
    let mut report = |id: usize, name: &str, result: Result<Outcome>, elapsed: f64| {
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} [{id}] {name}: {detail} ({elapsed:.1} s)",
            if pass { "PASS" } else { "FAIL" }
        );
    };
    let timed = |f: &dyn Fn() -> Result<Outcome>| {
        let start = Instant::now();
        let r = f();
        (r, start.elapsed().as_secs_f64())
    };

    let (r, t) = timed(&projection_identity);
    report(1, "projection identity", r, t);
    let (r, t) = timed(&divergence_orthogonality);
    report(2, "divergence orthogonality", r, t);
    let (r, t) = timed(&unconditional_stability);
    report(3, "unconditional stability", r, t);
    let (r, t) = timed(&skew_symmetry);
    report(4, "skew-symmetric convection", r, t);

    let start = Instant::now();
    let sweep = convergence(
        &ladder_config(SchemeKind::Incremental, 32),
        &LADDER,
        workers(),
    );
    let sweep_time = start.elapsed().as_secs_f64();
    let (r5, r10) = match &sweep {
        Ok(rep) => {
            let (r10, t10) = timed(&|| determinism(rep));
            ((temporal_convergence(rep), sweep_time), (r10, t10))
        }
        Err(e) => {
            let msg = e.to_string();
            (
                (
                    Err(projfem::Error::InvalidArgument(msg.clone())),
                    sweep_time,
                ),
                (Err(projfem::Error::InvalidArgument(msg)), 0.0),
            )
        }
    };
    report(5, "temporal convergence n=32", r5.0, r5.1);

    if slow {
        let (r, t) = timed(&table_reproduction);
        report(6, "order table n=70", r, t);
    } else {
        println!("SKIP [6] order table n=70: slow suite, rerun with --slow");
    }
    let (r, t) = timed(&competitor_schemes);
    report(7, "competitor schemes n=32", r, t);
    let (r, t) = timed(&spatial_order_mini);
    report(8, "MINI spatial order with k = h", r, t);
    let (r, t) = timed(&oracle_equivalence);
    report(9, "dense oracle step", r, t);
    report(10, "deterministic rerun", r10.0, r10.1);

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
