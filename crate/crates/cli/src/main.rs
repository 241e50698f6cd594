use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use projfem::driver::{cmd_compare, cmd_convergence, cmd_run, ReportFormat, RunConfig};
use projfem::verify::NormKind;
use projfem::Error;

#[derive(Parser)]
#[command(
    name = "projfem",
    version,
    about = "Projection-method Navier-Stokes solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run on the manufactured solution.
    Run(Common),
    /// Temporal convergence sweep over a ladder of time steps.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Comma-separated descending time steps.
        #[arg(long)]
        ks: Option<String>,
    },
    /// Errors and cost of several schemes on one configuration.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated scheme names.
        #[arg(long)]
        schemes: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Final time.
    #[arg(long = "T")]
    t_final: Option<String>,
    /// Element pair: th or mini.
    #[arg(long)]
    pair: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write VTK files (stride from `vtk_every`).
    #[arg(long)]
    vtk: bool,
    #[arg(long)]
    workers: Option<String>,
}

impl Common {
    fn build(&self, extra: &[(&str, Option<&String>)]) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply_str(&text)?;
        }
        let flags = [
            ("scheme", self.scheme.as_ref()),
            ("n", self.n.as_ref()),
            ("k", self.k.as_ref()),
            ("T", self.t_final.as_ref()),
            ("pair", self.pair.as_ref()),
            ("workers", self.workers.as_ref()),
        ];
        for (key, value) in flags.into_iter().chain(extra.iter().copied()) {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if self.vtk {
            cfg.emit_vtk = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.build(&[])?;
            let (sim, files) = cmd_run(&cfg)?;
            match cfg.format {
                ReportFormat::Csv => print!("{}", std::fs::read_to_string(&files.summary)?),
                ReportFormat::Pretty => {
                    let s = &sim.config;
                    println!(
                        "scheme={} pair={} n={} k={} T={} diagonal={}",
                        s.scheme,
                        s.pair.key(),
                        s.n,
                        s.k,
                        s.t_final,
                        s.diagonal
                    );
                    for kind in NormKind::ALL {
                        println!("{:<22}{:>14.6e}", kind.label(), sim.summary.get(kind));
                    }
                    println!(
                        "assembly {:.3} s, solve {:.3} s; output in {}",
                        sim.timings.assembly.as_secs_f64(),
                        sim.timings.solve.as_secs_f64(),
                        cfg.out_dir.display()
                    );
                }
            }
        }
        Command::Convergence { common, ks } => {
            let cfg = common.build(&[("ks", ks.as_ref())])?;
            let report = cmd_convergence(&cfg)?;
            match cfg.format {
                ReportFormat::Csv => print!("{}", report.to_csv()),
                ReportFormat::Pretty => print!("{}", report.pretty()),
            }
        }
        Command::Compare { common, schemes } => {
            let cfg = common.build(&[("schemes", schemes.as_ref())])?;
            let report = cmd_compare(&cfg)?;
            match cfg.format {
                ReportFormat::Csv => print!("{}{}", report.to_csv(), report.timing_csv()),
                ReportFormat::Pretty => print!("{}", report.pretty()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PROJFEM_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
