use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::schemes::{SchemeConfig, SchemeKind};

/// Initial data of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialData {
    /// Interpolated manufactured solution, forced accordingly.
    #[default]
    Exact,
    /// Seeded random velocity and pressure, no forcing.
    Random,
}

impl FromStr for InitialData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(InitialData::Exact),
            "random" => Ok(InitialData::Random),
            other => Err(Error::Config(format!("unknown initial data '{other}'"))),
        }
    }
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitialData::Exact => "exact",
            InitialData::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Csv,
    #[default]
    Pretty,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "pretty" => Ok(ReportFormat::Pretty),
            other => Err(Error::Config(format!("unknown report format '{other}'"))),
        }
    }
}

/// Everything a command needs: the scheme parameters plus output handling.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: SchemeConfig,
    pub out_dir: PathBuf,
    pub emit_vtk: bool,
    /// VTK output stride in steps.
    pub vtk_every: usize,
    pub seed: u64,
    pub initial: InitialData,
    pub format: ReportFormat,
    /// Concurrent runs in a convergence sweep.
    pub workers: usize,
    /// Time-step ladder of a convergence sweep, descending.
    pub ks: Vec<f64>,
    /// Schemes of a comparison.
    pub schemes: Vec<SchemeKind>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scheme: SchemeConfig::default(),
            out_dir: PathBuf::from("projfem-out"),
            emit_vtk: false,
            vtk_every: 1,
            seed: 0,
            initial: InitialData::Exact,
            format: ReportFormat::Pretty,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            ks: vec![0.2, 0.1, 0.05, 0.025],
            schemes: SchemeKind::ALL.to_vec(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid value '{value}' for '{key}'"
        ))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    /// Applies a flat `key = value` text on top of `self`. `#` starts a
    /// comment; blank lines are skipped.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_str_config(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_str(text)?;
        Ok(cfg)
    }

    /// Sets one key. Scheme names go through [`SchemeKind::from_str`] so an
    /// unknown name reports "unknown scheme".
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.scheme;
        match key {
            "scheme" => s.scheme = value.parse()?,
            "nu" => s.nu = parse(key, value)?,
            "k" => s.k = parse(key, value)?,
            "T" | "t_final" => s.t_final = parse(key, value)?,
            "n" => s.n = parse(key, value)?,
            "pair" => s.pair = value.parse()?,
            "diagonal" => s.diagonal = value.parse()?,
            "velocity_tol" => s.velocity_tol = parse(key, value)?,
            "pressure_tol" => s.pressure_tol = parse(key, value)?,
            "convection" => s.convection = parse_bool(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "vtk" => self.emit_vtk = parse_bool(key, value)?,
            "vtk_every" => self.vtk_every = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "initial" => self.initial = value.parse()?,
            "format" => self.format = value.parse()?,
            "workers" => self.workers = parse(key, value)?,
            "ks" => self.ks = parse_list(key, value)?,
            "schemes" => {
                self.schemes = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        if self.vtk_every == 0 {
            return Err(Error::Config("vtk_every must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}
