//! Run configuration.
//!
//! A config file is flat TOML (`key = value` lines). Every key is optional
//! and the same names are accepted as command-line flags, which take
//! precedence. Recognized keys:
//!
//! | key | used by | meaning |
//! |-----|---------|---------|
//! | `sample` | estimate, bootstrap | sample CSV (`id,y,delta,x`) |
//! | `population` | all but simulate-model | covariates CSV (`id,x`), or the full population (`y,delta,x`) for simulate-design |
//! | `out` | all | output directory |
//! | `seed` | all random commands | master seed |
//! | `threads` | all | worker threads (0 = all cores) |
//! | `h_t`, `h_x` | estimate | fixed bandwidths instead of cross-validation |
//! | `fractions` | all | candidate bandwidths as fractions of the data ranges |
//! | `grid` | estimate, bootstrap | explicit evaluation times |
//! | `grid_points`, `grid_lo`, `grid_hi` | all | evaluation grid between two percentiles |
//! | `populations`, `samples` | bootstrap | `B` and `R` |
//! | `alpha` | bootstrap | one minus the confidence level |
//! | `ci` | bootstrap | `basic` or `reflected` interval orientation |
//! | `keep_replicates` | bootstrap | also write every replicate curve |
//! | `population_size`, `sample_size`, `iterations` | simulations | `N`, `n`, `S` |
//! | `sigma`, `hr` | simulate-model | error scale, or the hazard ratio `exp(0.2 / sigma)` |
//! | `tau` | simulate-model | target censoring rate |
//! | `pilot_size` | simulate-model | draws in the pilot population |

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::bandwidth::DEFAULT_FRACTIONS;
use crate::bootstrap::{BootstrapConfig, CiOrientation, EvalGrid, GridSpec};
use crate::error::{Error, Result};
use crate::simulation::{sigma_for_hazard_ratio, DesignConfig, SimScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CiKind {
    Basic,
    Reflected,
}

impl From<CiKind> for CiOrientation {
    fn from(k: CiKind) -> Self {
        match k {
            CiKind::Basic => CiOrientation::Basic,
            CiKind::Reflected => CiOrientation::Reflected,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Sample CSV with columns id,y,delta,x
    #[arg(long)]
    pub sample: Option<PathBuf>,
    /// Population CSV: id,x covariates, or y,delta,x for simulate-design
    #[arg(long)]
    pub population: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 uses every core)
    #[arg(long)]
    pub threads: Option<usize>,

    /// Fixed time bandwidth
    #[arg(long)]
    pub h_t: Option<f64>,
    /// Fixed covariate bandwidth
    #[arg(long)]
    pub h_x: Option<f64>,
    /// Candidate bandwidths as fractions of the data ranges
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,

    /// Explicit evaluation times
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub grid_lo: Option<f64>,
    #[arg(long)]
    pub grid_hi: Option<f64>,

    /// Bootstrap populations (B)
    #[arg(long)]
    pub populations: Option<usize>,
    /// Samples per bootstrap population (R)
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub ci: Option<CiKind>,
    #[arg(long)]
    pub keep_replicates: Option<bool>,

    /// Population size (N)
    #[arg(long)]
    pub population_size: Option<usize>,
    /// Sample size (n)
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Monte Carlo iterations (S)
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Hazard ratio exp(0.2 / sigma)
    #[arg(long)]
    pub hr: Option<f64>,
    /// Target censoring rate
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub pilot_size: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Values set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay!(
            self,
            top,
            sample,
            population,
            out,
            seed,
            threads,
            h_t,
            h_x,
            fractions,
            grid,
            grid_points,
            grid_lo,
            grid_hi,
            populations,
            samples,
            alpha,
            ci,
            keep_replicates,
            population_size,
            sample_size,
            iterations,
            sigma,
            hr,
            tau,
            pilot_size
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("`{key}` is required")))
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.fractions
            .clone()
            .unwrap_or_else(|| DEFAULT_FRACTIONS.to_vec())
    }

    /// Evaluation grid for estimate and bootstrap: 1st to 99th percentile
    /// by default.
    pub fn eval_grid(&self) -> EvalGrid {
        match &self.grid {
            Some(g) => EvalGrid::Explicit(g.clone()),
            None => EvalGrid::Percentiles {
                lo: self.grid_lo.unwrap_or(0.01),
                hi: self.grid_hi.unwrap_or(0.99),
                points: self.grid_points.unwrap_or(30),
            },
        }
    }

    pub fn bootstrap(&self) -> Result<BootstrapConfig> {
        let defaults = BootstrapConfig::default();
        let config = BootstrapConfig {
            populations: self.populations.unwrap_or(defaults.populations),
            samples: self.samples.unwrap_or(defaults.samples),
            alpha: self.alpha.unwrap_or(defaults.alpha),
            grid: self.eval_grid(),
            seed: self.seed(),
            grids: GridSpec::Relative(self.fractions()),
            orientation: self.ci.map_or(defaults.orientation, CiOrientation::from),
            keep_replicates: self.keep_replicates.unwrap_or(false),
        };
        config.validate().map_err(as_config)?;
        Ok(config)
    }

    pub fn scenario(&self) -> Result<SimScenario> {
        let defaults = SimScenario::default();
        let sigma = match (self.sigma, self.hr) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give `sigma` or `hr`, not both".into()))
            }
            (Some(s), None) => s,
            (None, Some(hr)) if hr > 1.0 => sigma_for_hazard_ratio(hr),
            (None, Some(hr)) => return Err(Error::Config(format!("`hr` must exceed 1, got {hr}"))),
            (None, None) => defaults.sigma,
        };
        let scenario = SimScenario {
            population: self.population_size.unwrap_or(defaults.population),
            sample: self.sample_size.unwrap_or(defaults.sample),
            iterations: self.iterations.unwrap_or(defaults.iterations),
            sigma,
            tau: self.tau.unwrap_or(defaults.tau),
            grid_points: self.grid_points.unwrap_or(defaults.grid_points),
            grid_lo: self.grid_lo.unwrap_or(defaults.grid_lo),
            grid_hi: self.grid_hi.unwrap_or(defaults.grid_hi),
            fractions: self.fractions(),
            seed: self.seed(),
            pilot_size: self.pilot_size.unwrap_or(defaults.pilot_size),
        };
        scenario.validate().map_err(as_config)?;
        Ok(scenario)
    }

    /// Design-based settings; the population size is checked once the file
    /// is read.
    pub fn design(&self, population: usize) -> Result<DesignConfig> {
        let defaults = DesignConfig::default();
        let config = DesignConfig {
            sample: self.sample_size.unwrap_or(defaults.sample),
            iterations: self.iterations.unwrap_or(defaults.iterations),
            grid_points: self.grid_points.unwrap_or(defaults.grid_points),
            grid_lo: self.grid_lo.unwrap_or(defaults.grid_lo),
            grid_hi: self.grid_hi.unwrap_or(defaults.grid_hi),
            fractions: self.fractions(),
            seed: self.seed(),
        };
        config.validate(population).map_err(as_config)?;
        Ok(config)
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Invalid(m) => Error::Config(m),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let c = RunConfig::from_toml(
            "seed = 7\ntau = 0.25\nfractions = [0.2, 0.4]\nci = \"reflected\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.fractions(), vec![0.2, 0.4]);
        assert_eq!(c.ci, Some(CiKind::Reflected));
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(matches!(
            RunConfig::from_toml("sede = 3"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig::from_toml("seed = 7\ntau = 0.25").unwrap();
        let flags = RunConfig {
            seed: Some(9),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.tau, Some(0.25));
    }

    #[test]
    fn invalid_tau_is_a_config_error() {
        let c = RunConfig::from_toml("tau = 1.5").unwrap();
        assert!(matches!(c.scenario(), Err(Error::Config(_))));
    }

    #[test]
    fn hazard_ratio_key() {
        let c = RunConfig::from_toml("hr = 7.4").unwrap();
        assert!((c.scenario().unwrap().sigma - 0.2 / 7.4f64.ln()).abs() < 1e-15);
        let both = RunConfig::from_toml("hr = 7.4\nsigma = 0.1").unwrap();
        assert!(both.scenario().is_err());
    }
}
