//! Run orchestration: configuration files, single runs, convergence sweeps,
//! scheme comparisons and their CSV, table and VTK output.

mod config;
mod report;
mod run;
mod vtk;

use std::fs;
use std::path::{Path, PathBuf};

use log::info;

pub use config::{InitialData, ReportFormat, RunConfig};
pub use report::{
    invariants_csv, parse_csv, series_csv, CompareEntry, CompareReport, ConvergenceReport, CsvRow,
    CSV_HEADER,
};
pub use run::{compare, convergence, simulate, InvariantRecord, Simulation};
pub use vtk::{vtk_string, write_vtk};

use crate::error::Result;

/// Files written by [`cmd_run`].
#[derive(Debug, Clone, Default)]
pub struct RunFiles {
    pub errors: PathBuf,
    pub summary: PathBuf,
    pub invariants: PathBuf,
    pub vtk: Vec<PathBuf>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Single run: per-step error series, summary, invariant log and optional
/// VTK series every `vtk_every` steps (always including step 0).
pub fn cmd_run(cfg: &RunConfig) -> Result<(Simulation, RunFiles)> {
    cfg.validate()?;
    ensure_dir(&cfg.out_dir)?;
    let vtk_dir = cfg.out_dir.join("vtk");
    if cfg.emit_vtk {
        ensure_dir(&vtk_dir)?;
    }
    let mut files = RunFiles::default();
    let sim = simulate(&cfg.scheme, cfg.initial, cfg.seed, |_, state| {
        if cfg.emit_vtk && state.step % cfg.vtk_every == 0 {
            let path = vtk_dir.join(format!("step_{:05}.vtk", state.step));
            write_vtk(&path, &state.u1, &state.u2, &state.p_curr, state.time)?;
            files.vtk.push(path);
        }
        Ok(())
    })?;
    files.errors = cfg.out_dir.join("errors.csv");
    fs::write(&files.errors, series_csv(&sim.series))?;
    files.invariants = cfg.out_dir.join("invariants.csv");
    fs::write(&files.invariants, invariants_csv(&sim.invariants))?;
    let single = ConvergenceReport::new(&cfg.scheme, vec![cfg.scheme.k], vec![sim.summary])?;
    files.summary = cfg.out_dir.join("summary.csv");
    fs::write(&files.summary, single.to_csv())?;
    info!("run written to {}", cfg.out_dir.display());
    Ok((sim, files))
}

/// Convergence sweep over `cfg.ks`; writes `convergence.csv` and
/// `convergence.txt`.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let report = convergence(&cfg.scheme, &cfg.ks, cfg.workers)?;
    ensure_dir(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("convergence.csv"), report.to_csv())?;
    fs::write(cfg.out_dir.join("convergence.txt"), report.pretty())?;
    Ok(report)
}

/// Scheme comparison over `cfg.schemes`; writes `compare.csv`,
/// `compare_timing.csv` and `compare.txt`.
pub fn cmd_compare(cfg: &RunConfig) -> Result<CompareReport> {
    cfg.validate()?;
    let report = compare(&cfg.scheme, &cfg.schemes)?;
    ensure_dir(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("compare.csv"), report.to_csv())?;
    fs::write(cfg.out_dir.join("compare_timing.csv"), report.timing_csv())?;
    fs::write(cfg.out_dir.join("compare.txt"), report.pretty())?;
    Ok(report)
}
