use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fem::ElementKind;
use crate::mesh::Diagonal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    /// Segregated incremental pressure projection.
    Incremental,
    /// Rotational pressure correction.
    Rotational,
    /// Consistent splitting.
    Consistent,
    /// Penalty pressure projection (couples the velocity components).
    Penalty,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Incremental,
        SchemeKind::Rotational,
        SchemeKind::Consistent,
        SchemeKind::Penalty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Incremental => "incremental",
            SchemeKind::Rotational => "rotational",
            SchemeKind::Consistent => "consistent",
            SchemeKind::Penalty => "penalty",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

/// Inf-sup stable velocity/pressure pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ElementPair {
    /// P2 velocity, P1 pressure.
    #[default]
    TaylorHood,
    /// P1-bubble velocity, P1 pressure.
    Mini,
}

impl ElementPair {
    pub fn velocity(self) -> ElementKind {
        match self {
            ElementPair::TaylorHood => ElementKind::P2,
            ElementPair::Mini => ElementKind::P1Bubble,
        }
    }

    pub fn pressure(self) -> ElementKind {
        ElementKind::P1
    }

    pub fn key(self) -> &'static str {
        match self {
            ElementPair::TaylorHood => "th",
            ElementPair::Mini => "mini",
        }
    }
}

impl fmt::Display for ElementPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ElementPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "th" | "p2p1" | "taylor-hood" => Ok(ElementPair::TaylorHood),
            "mini" | "p1bp1" => Ok(ElementPair::Mini),
            other => Err(Error::Config(format!("unknown element pair '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    pub nu: f64,
    /// Time step.
    pub k: f64,
    pub t_final: f64,
    /// Mesh subdivisions per side.
    pub n: usize,
    pub pair: ElementPair,
    pub diagonal: Diagonal,
    pub velocity_tol: f64,
    pub pressure_tol: f64,
    /// Drop the convection term (Stokes setting).
    pub convection: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            scheme: SchemeKind::Incremental,
            nu: 1.0,
            k: 0.1,
            t_final: 2.0,
            n: 16,
            pair: ElementPair::TaylorHood,
            diagonal: Diagonal::Right,
            velocity_tol: 1e-10,
            pressure_tol: 1e-11,
            convection: true,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!(
                "time step must be positive, got {}",
                self.k
            )));
        }
        if self.nu.is_nan() || self.nu <= 0.0 {
            return Err(Error::Config(format!(
                "viscosity must be positive, got {}",
                self.nu
            )));
        }
        if self.t_final < self.k * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "final time {} is shorter than one step {}",
                self.t_final, self.k
            )));
        }
        if self.n == 0 {
            return Err(Error::Config("mesh needs at least one subdivision".into()));
        }
        if !(self.velocity_tol > 0.0 && self.pressure_tol > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        self.steps().map(|_| ())
    }

    /// Number of steps `M = T / k`; rejects steps that do not divide `T`.
    pub fn steps(&self) -> Result<usize> {
        let ratio = self.t_final / self.k;
        let m = ratio.round();
        if m < 1.0 || (ratio - m).abs() > 1e-9 * m.max(1.0) {
            return Err(Error::Config(format!(
                "time step {} does not divide the final time {} ({ratio:.4} steps)",
                self.k, self.t_final
            )));
        }
        Ok(m as usize)
    }

    /// `t_m = m k`.
    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.k
    }
}
