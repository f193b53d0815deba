//! Run configuration: a flat TOML file whose keys can each be overridden
//! from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::entanglement::Bipartition;
use crate::error::{Error, Result};
use crate::filtering::PminGrid;
use crate::hamiltonian::{HamiltonianSpec, SolverOptions};

/// Largest ladder the exact solver is allowed to touch without an explicit
/// `max_atoms` override. 22 atoms is 32 MiB per vector.
pub const DEFAULT_MAX_ATOMS: usize = 22;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_rungs: usize,
    pub rb_over_a: f64,
    pub delta_over_omega: f64,
    /// Defaults to half the atoms.
    pub size_a: Option<usize>,
    pub grid_min_exp: f64,
    pub grid_max_exp: f64,
    pub grid_points: usize,
    /// Prepend `p_min = 0` to the grid.
    pub grid_zero: bool,
    /// Sample this many shots instead of using the exact distribution.
    pub shots: Option<u64>,
    pub seed: u64,
    /// Drop exact probabilities at or below this before analysis.
    pub epsilon: f64,
    pub tol: f64,
    pub max_iterations: usize,
    pub max_basis: usize,
    pub max_atoms: usize,
    pub subsamples: Option<usize>,
    pub sub_size: Option<usize>,
    pub out_dir: PathBuf,
    /// Directory for cached ground states; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_rungs: 6,
            rb_over_a: 2.35,
            delta_over_omega: 3.5,
            size_a: None,
            grid_min_exp: -7.0,
            grid_max_exp: -0.5,
            grid_points: 121,
            grid_zero: true,
            shots: None,
            seed: 7,
            epsilon: 0.0,
            tol: 1e-10,
            max_iterations: 5000,
            max_basis: 40,
            max_atoms: DEFAULT_MAX_ATOMS,
            subsamples: None,
            sub_size: None,
            out_dir: PathBuf::from("out"),
            cache_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn n_atoms(&self) -> usize {
        2 * self.n_rungs
    }

    pub fn bipartition(&self) -> Result<Bipartition> {
        let n = self.n_atoms();
        Bipartition::new(n, self.size_a.unwrap_or(n / 2))
    }

    pub fn grid(&self) -> Result<PminGrid> {
        PminGrid::log_uniform(self.grid_min_exp, self.grid_max_exp, self.grid_points, self.grid_zero)
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iterations: self.max_iterations,
            seed: self.seed,
            max_basis: self.max_basis,
            ..SolverOptions::default()
        }
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianSpec> {
        HamiltonianSpec::ladder(self.n_rungs, self.rb_over_a, self.delta_over_omega)
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<()> {
        if self.n_rungs == 0 {
            return Err(Error::ZeroRungs);
        }
        if !(self.rb_over_a.is_finite() && self.rb_over_a > 0.0) {
            return Err(Error::BadBlockadeRatio(self.rb_over_a));
        }
        if !self.delta_over_omega.is_finite() {
            return Err(Error::Config(format!("delta_over_omega must be finite, got {}", self.delta_over_omega)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0, 1), got {}", self.epsilon)));
        }
        if self.shots == Some(0) {
            return Err(Error::Config("shots must be positive".into()));
        }
        self.bipartition()?;
        self.grid()?;
        self.check_capacity()
    }

    pub fn check_capacity(&self) -> Result<()> {
        let n_atoms = self.n_atoms();
        if n_atoms > self.max_atoms {
            return Err(Error::TooManyAtoms { n_atoms, max_atoms: self.max_atoms });
        }
        Ok(())
    }

    /// Cache file name encoding everything the solution depends on.
    pub fn state_file_name(&self) -> String {
        format!(
            "gs_r{}_rb{}_d{}_tol{:e}_s{}_b{}.bin",
            self.n_rungs, self.rb_over_a, self.delta_over_omega, self.tol, self.seed, self.max_basis
        )
    }
}

/// Expands a list of numbers where each item is either a value or an
/// inclusive `start:stop:step` range.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let bad = |s: &str| Error::Config(format!("cannot parse '{s}' as a number or start:stop:step"));
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(v.parse().map_err(|_| bad(item))?),
            [a, b, s] => {
                let (a, b, s): (f64, f64, f64) = (
                    a.parse().map_err(|_| bad(item))?,
                    b.parse().map_err(|_| bad(item))?,
                    s.parse().map_err(|_| bad(item))?,
                );
                if s.is_nan() || s <= 0.0 || b < a {
                    return Err(bad(item));
                }
                let steps = ((b - a) / s + 1e-9).floor() as usize;
                out.extend((0..=steps).map(|i| a + i as f64 * s));
            }
            _ => return Err(bad(item)),
        }
    }
    if out.is_empty() {
        return Err(Error::Config("empty value list".into()));
    }
    Ok(out)
}
