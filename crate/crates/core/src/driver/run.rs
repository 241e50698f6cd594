use std::sync::Arc;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{FeSpace, Field};
use crate::schemes::{
    Forcing, Integrator, SchemeConfig, SchemeKind, SchemeState, StepDiagnostics, Timings,
};
use crate::verify::{
    forcing, step_errors, ErrorSeries, Manufactured, NormSummary, Quiescent, ReferenceSolution,
};

use super::config::InitialData;
use super::report::{CompareEntry, CompareReport, ConvergenceReport};

/// Solver and invariant record of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantRecord {
    pub step: usize,
    pub time: f64,
    pub velocity_iterations: usize,
    pub velocity_residual: f64,
    pub pressure_iterations: usize,
    pub pressure_residual: f64,
    /// Incremental scheme only.
    pub identity_defect: Option<f64>,
    pub orthogonality: Option<f64>,
    pub energy: Option<f64>,
}

impl InvariantRecord {
    fn from_diagnostics(state: &SchemeState, diag: &StepDiagnostics) -> Self {
        let proj = diag.projection;
        InvariantRecord {
            step: state.step,
            time: state.time,
            velocity_iterations: diag.velocity.iter().map(|r| r.iterations).sum(),
            velocity_residual: diag.velocity.iter().map(|r| r.residual).fold(0.0, f64::max),
            pressure_iterations: diag.pressure.iter().map(|r| r.iterations).sum(),
            pressure_residual: diag.pressure.iter().map(|r| r.residual).fold(0.0, f64::max),
            identity_defect: proj.map(|p| p.identity_defect),
            orthogonality: proj.map(|p| p.orthogonality_residual),
            energy: proj.map(|p| p.energy),
        }
    }
}

/// In-memory result of one time integration.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: SchemeConfig,
    pub series: ErrorSeries,
    pub summary: NormSummary,
    pub invariants: Vec<InvariantRecord>,
    pub timings: Timings,
    /// `|u⁰|² + k²|∇p⁰|²`.
    pub initial_energy: f64,
    pub final_state: SchemeState,
}

fn random_field(space: &Arc<FeSpace>, rng: &mut ChaCha8Rng) -> Result<Field> {
    let values = (0..space.n_dofs())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    Field::from_values(space, values)
}

/// Runs `cfg` from `t = 0` to `T`, recording errors at every `tₘ`. The
/// observer sees the integrator and each state including the initial one.
pub fn simulate(
    cfg: &SchemeConfig,
    initial: InitialData,
    seed: u64,
    mut observer: impl FnMut(&Integrator, &SchemeState) -> Result<()>,
) -> Result<Simulation> {
    let steps = cfg.steps()?;
    let mut it = Integrator::new(cfg.clone())?;
    let nu = cfg.nu;
    let manufactured = move |t: f64, x: f64, y: f64| forcing(t, x, y, nu);
    let unforced = |_: f64, _: f64, _: f64| [0.0, 0.0];
    let (mut state, reference, force): (SchemeState, &dyn ReferenceSolution, Forcing<'_>) =
        match initial {
            InitialData::Exact => (
                it.interpolated_state(&Manufactured)?,
                &Manufactured,
                &manufactured,
            ),
            InitialData::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let d = it.discretization();
                let u1 = random_field(&d.vspace, &mut rng)?;
                let u2 = random_field(&d.vspace, &mut rng)?;
                let p = random_field(&d.pspace, &mut rng)?;
                (it.initial_state(u1, u2, p)?, &Quiescent, &unforced)
            }
        };
    info!(
        "{} {} n={} k={} T={} diagonal={}: {} steps",
        cfg.scheme, cfg.pair, cfg.n, cfg.k, cfg.t_final, cfg.diagonal, steps
    );
    let initial_energy = it.initial_energy(&state)?;
    let mut series = ErrorSeries::default();
    let mut invariants = Vec::with_capacity(steps);
    series.push(
        0.0,
        step_errors(&state.u1, &state.u2, &state.p_curr, 0.0, reference)?,
    );
    observer(&it, &state)?;
    for _ in 0..steps {
        let (next, diag) = it.step(&state, force)?;
        let record = InvariantRecord::from_diagnostics(&next, &diag);
        debug!("{record:?}");
        invariants.push(record);
        series.push(
            next.time,
            step_errors(&next.u1, &next.u2, &next.p_curr, next.time, reference)?,
        );
        observer(&it, &next)?;
        state = next;
    }
    let summary = series.summary(cfg.k);
    Ok(Simulation {
        config: cfg.clone(),
        series,
        summary,
        invariants,
        timings: it.timings(),
        initial_energy,
        final_state: state,
    })
}

fn check_ladder(base: &SchemeConfig, ks: &[f64]) -> Result<()> {
    if ks.len() < 2 {
        return Err(Error::Config(
            "a convergence sweep needs at least two time steps".into(),
        ));
    }
    if ks.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(
            "time steps must be strictly descending".into(),
        ));
    }
    for &k in ks {
        SchemeConfig { k, ..base.clone() }.validate()?;
    }
    Ok(())
}

/// One manufactured-solution run per `k`, at most `workers` at a time.
pub fn convergence(base: &SchemeConfig, ks: &[f64], workers: usize) -> Result<ConvergenceReport> {
    check_ladder(base, ks)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let runs: Vec<Simulation> = pool.install(|| {
        ks.par_iter()
            .map(|&k| {
                simulate(
                    &SchemeConfig { k, ..base.clone() },
                    InitialData::Exact,
                    0,
                    |_, _| Ok(()),
                )
            })
            .collect::<Result<_>>()
    })?;
    let summaries = runs.iter().map(|r| r.summary).collect();
    let mut report = ConvergenceReport::new(base, ks.to_vec(), summaries)?;
    report.timings = runs.iter().map(|r| r.timings).collect();
    Ok(report)
}

/// Runs each scheme in turn on the same configuration. Runs are sequential
/// so the timings do not compete for cores.
pub fn compare(base: &SchemeConfig, schemes: &[SchemeKind]) -> Result<CompareReport> {
    if schemes.len() < 2 {
        return Err(Error::Config(
            "a comparison needs at least two schemes".into(),
        ));
    }
    base.validate()?;
    let mut entries = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let sim = simulate(
            &SchemeConfig {
                scheme,
                ..base.clone()
            },
            InitialData::Exact,
            0,
            |_, _| Ok(()),
        )?;
        entries.push(CompareEntry {
            scheme,
            summary: sim.summary,
            timings: sim.timings,
            steps: sim.invariants.len(),
        });
    }
    Ok(CompareReport {
        base: base.clone(),
        entries,
    })
}
