//! JSON run configuration.

use std::path::{Path, PathBuf};

use bose_genfun_core::{Convention, ExponentForm, KernelForm, PotentialSpec, QuadratureSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    #[serde(default)]
    pub convention: Convention,
    pub cutoff_m: u32,
    #[serde(default)]
    pub lambda_grid: LambdaGrid,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub observable: ObservableSpec,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub tails: TailsSpec,
    #[serde(default)]
    pub kernel_form: KernelForm,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub scattering: ScatteringGrid,
    /// Seed for randomness not covered by a random observable.
    #[serde(default)]
    pub seed: u64,
}

/// Radial grid for the `scattering` command.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatteringGrid {
    pub n_grid: usize,
    /// `r_max` as a multiple of the support radius.
    pub r_max_factor: f64,
}

impl Default for ScatteringGrid {
    fn default() -> Self {
        Self { n_grid: bose_genfun_core::scattering::DEFAULT_N_GRID, r_max_factor: bose_genfun_core::scattering::DEFAULT_RMAX_FACTOR }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    /// Clip points outside the admissible domain instead of failing.
    #[serde(default = "yes")]
    pub clip: bool,
}

fn yes() -> bool {
    true
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self { min: -1.0, max: 1.0, count: 21, clip: true }
    }
}

impl LambdaGrid {
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n).map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    fn validate(&self) -> CliResult<()> {
        if !self.min.is_finite() || !self.max.is_finite() || self.min > self.max {
            return Err(CliError::Config("lambda_grid needs finite min <= max".into()));
        }
        if self.count == 0 {
            return Err(CliError::Config("lambda_grid.count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    #[default]
    None,
    Identity,
    /// Rows `p,q,re,im`; a relative path is taken from the config file's directory.
    Csv { path: PathBuf },
    Random { seed: u64, pairs: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub pairs: usize,
    pub n_max: usize,
    /// Occupation cutoff of the one-pair spaces used for the BCH and
    /// Bogoliubov-action defects.
    #[serde(default = "default_defects_n_max")]
    pub defects_n_max: usize,
}

pub const DEFAULT_DEFECTS_N_MAX: usize = 20;

fn default_defects_n_max() -> usize {
    DEFAULT_DEFECTS_N_MAX
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: OutputFormat,
    /// Standard output when absent.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsSpec {
    /// Absolute thresholds. When empty, `μ + kσ` for the default multiples.
    #[serde(default)]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub form: ExponentForm,
}

pub const DEFAULT_SIGMA_MULTIPLES: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 3.0, 5.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// `|Λ_quadrature − Λ_closed|` in `genfun`.
    pub genfun: f64,
    /// Fixed-point residual in `observable`.
    pub solver_residual: f64,
    /// Oracle against the limiting formulas, diagonal case.
    pub oracle_mgf: f64,
    /// Oracle against the observable solver.
    pub oracle_observable: f64,
    pub bch: f64,
    pub bogoliubov: f64,
    /// Relative gap between finite-difference and cumulant moments.
    pub moments_fd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            genfun: 1e-8,
            solver_residual: 1e-10,
            oracle_mgf: 1e-8,
            oracle_observable: 1e-6,
            bch: 1e-8,
            bogoliubov: 1e-8,
            moments_fd: 1e-6,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves a relative observable path against
    /// the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let ObservableSpec::Csv { path: p } = &mut cfg.observable {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.potential.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.cutoff_m == 0 {
            return Err(CliError::Config("cutoff_m must be at least 1".into()));
        }
        self.lambda_grid.validate()?;
        if !(self.quadrature.tol > 0.0) || self.quadrature.max_panels == 0 {
            return Err(CliError::Config("quadrature needs tol > 0 and max_panels > 0".into()));
        }
        if let ObservableSpec::Random { pairs: 0, .. } = self.observable {
            return Err(CliError::Config("random observable needs pairs >= 1".into()));
        }
        if let Some(o) = &self.oracle {
            if o.n_max < 2 || o.defects_n_max < 2 {
                return Err(CliError::Config("oracle n_max must be at least 2".into()));
            }
        }
        if self.scattering.n_grid < 64 || !(self.scattering.r_max_factor >= 2.0) {
            return Err(CliError::Config("scattering needs n_grid >= 64 and r_max_factor >= 2".into()));
        }
        let t = &self.tolerances;
        if [t.genfun, t.solver_residual, t.oracle_mgf, t.oracle_observable, t.bch, t.bogoliubov, t.moments_fd]
            .iter()
            .any(|x| !(*x > 0.0))
        {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        if self.tails.thresholds.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config("tail thresholds must be finite".into()));
        }
        Ok(())
    }

    /// Seed in effect: the random observable's when there is one.
    pub fn seed(&self) -> u64 {
        match self.observable {
            ObservableSpec::Random { seed, .. } => seed,
            _ => self.seed,
        }
    }

    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let ObservableSpec::Random { seed: s, .. } = &mut self.observable {
            *s = seed;
        }
    }

    /// SHA-256 of the canonical JSON of the effective configuration. The
    /// output path is left out so that the same run written to two places
    /// carries the same hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.path = None;
        let canonical = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
