//! Run configuration: a TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use poisson_hedge::intensity::ModelSpec;
use poisson_hedge::ClaimParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Contents of a `--config` file. Every key is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    /// Model file, relative to the config file.
    pub model: Option<PathBuf>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub inner: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub use_oracles: Option<bool>,
    pub panel: Option<bool>,
    pub claim: Option<ClaimSpec>,
    pub market: Option<MarketSpec>,
}

/// `[claim]` table: `name` plus the parameters of that family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "toml::Table")]
pub struct ClaimSpec {
    pub name: String,
    #[serde(flatten)]
    pub params: ClaimParams,
}

impl TryFrom<toml::Table> for ClaimSpec {
    type Error = String;

    fn try_from(mut table: toml::Table) -> Result<Self, String> {
        let name = match table.remove("name") {
            Some(toml::Value::String(name)) => name,
            Some(_) => return Err("claim `name` must be a string".into()),
            None => return Err("claim table needs a `name`".into()),
        };
        let params = ClaimParams::deserialize(table).map_err(|e| e.message().to_string())?;
        Ok(ClaimSpec { name, params })
    }
}

/// `κ = kappa[j] · z`; all ones when absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketSpec {
    pub kappa: Option<Vec<f64>>,
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub inner: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub tolerance: Option<f64>,
}

/// Fully resolved settings. Everything except `workers` and `out` enters the
/// config hash, so the hash identifies the numbers a run produces.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub model: Option<ModelSpec>,
    pub seed: u64,
    /// `None` means "each experiment's default size" (used by `verify`).
    pub paths: Option<usize>,
    pub inner: Option<usize>,
    pub tolerance: f64,
    pub t_grid: Option<Vec<f64>>,
    pub use_oracles: bool,
    pub panel: bool,
    pub claim: Option<ClaimSpec>,
    pub market: Option<MarketSpec>,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out: PathBuf,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TOLERANCE: f64 = 3.0;

impl RunConfig {
    pub fn resolve(command: &str, flags: &Overrides) -> Result<Self, CliError> {
        let (file, base) = match &flags.config {
            Some(path) => {
                let text = read(path)?;
                let file: FileConfig = toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
                (file, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let model = match &file.model {
            Some(rel) => {
                let path = base.join(rel);
                let text = read(&path)?;
                let spec: ModelSpec = toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
                Some(spec)
            }
            None => None,
        };
        let cfg = RunConfig {
            command: command.to_string(),
            model,
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            paths: flags.paths.or(file.paths),
            inner: flags.inner.or(file.inner),
            tolerance: flags.tolerance.or(file.tolerance).unwrap_or(DEFAULT_TOLERANCE),
            t_grid: file.t_grid,
            use_oracles: file.use_oracles.unwrap_or(true),
            panel: file.panel.unwrap_or(true),
            claim: file.claim,
            market: file.market,
            workers: flags
                .workers
                .or(file.workers)
                .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
            out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.paths == Some(0) {
            return Err(CliError::Config("paths must be at least 1".into()));
        }
        if self.inner == Some(0) {
            return Err(CliError::Config("inner must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(CliError::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }

    pub fn model_spec(&self) -> Result<&ModelSpec, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::Config(format!("`{}` needs `model = \"…\"` in the config", self.command)))
    }

    pub fn claim_spec(&self) -> Result<&ClaimSpec, CliError> {
        self.claim.as_ref().ok_or_else(|| CliError::Config(format!("`{}` needs a [claim] table in the config", self.command)))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}
