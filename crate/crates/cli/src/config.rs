use std::path::{Path, PathBuf};
use std::sync::Arc;

use fsl_core::operator::{LaplacianKind, Normalization, OperatorConfig, SelfAdjointOperator};
use fsl_core::space::{Boundary, SpaceConfig};
use fsl_core::weights::{Weight, WeightConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::io::read_json;
use crate::suites::{check_suite, SUITES};

/// A config component given inline or as a path to a JSON file, relative to
/// the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> Source<T> {
    fn resolve(&self, base: &Path) -> Result<T> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::Path(p) => {
                let path = base.join(p);
                if !path.is_file() {
                    return Err(CliError::Config(format!("{} does not exist", path.display())));
                }
                read_json(&path)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Fixture label; names the baseline file.
    pub name: String,
    pub space: Source<SpaceConfig>,
    #[serde(default = "default_operator")]
    pub operator: Source<OperatorConfig>,
    #[serde(default = "default_weights")]
    pub weights: Vec<Source<WeightConfig>>,
    /// Suite names or single equivalence-check names.
    #[serde(default = "default_suites")]
    pub suites: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Random fields per atomic-decomposition check.
    #[serde(default = "default_atom_samples")]
    pub atom_samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub baseline_dir: Option<PathBuf>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_operator() -> Source<OperatorConfig> {
    Source::Inline(OperatorConfig {
        kind: LaplacianKind::Grid,
        normalization: Normalization::UnitSpeed,
    })
}

fn default_weights() -> Vec<Source<WeightConfig>> {
    vec![
        Source::Inline(WeightConfig::Constant { value: 1.0 }),
        Source::Inline(WeightConfig::Power {
            center: 0,
            exponent: 0.5,
        }),
    ]
}

fn default_suites() -> Vec<String> {
    SUITES.iter().map(|s| s.to_string()).collect()
}

fn default_samples() -> usize {
    100
}

fn default_atom_samples() -> usize {
    10
}

fn default_seed() -> u64 {
    7
}

impl RunConfig {
    fn grid(name: &str, dim: usize, side: usize) -> Self {
        Self {
            name: name.into(),
            space: Source::Inline(SpaceConfig::Grid {
                dim,
                side,
                spacing: 1.0 / side as f64,
                boundary: Boundary::Periodic,
            }),
            operator: default_operator(),
            weights: default_weights(),
            suites: default_suites(),
            samples: default_samples(),
            atom_samples: default_atom_samples(),
            seed: default_seed(),
            baseline_dir: None,
            out_dir: None,
        }
    }

    /// Periodic 1D grid with 64 points.
    pub fn line() -> Self {
        Self::grid("line64", 1, 64)
    }

    /// Periodic 16 × 16 grid.
    pub fn square() -> Self {
        Self::grid("square16", 2, 16)
    }

    /// Reads a config; component paths resolve against its directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        if !path.is_file() {
            return Err(CliError::Config(format!("{} does not exist", path.display())));
        }
        let cfg: RunConfig = read_json(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    /// Inlines every component and validates the selection.
    pub fn resolve(&self, base: &Path) -> Result<ResolvedConfig> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::Config(format!("bad fixture name `{}`", self.name)));
        }
        if self.samples == 0 || self.atom_samples == 0 {
            return Err(CliError::Config("sample counts must be positive".into()));
        }
        if self.weights.is_empty() {
            return Err(CliError::Config("at least one weight is required".into()));
        }
        if self.suites.is_empty() {
            return Err(CliError::Config("no suites selected".into()));
        }
        for s in &self.suites {
            check_suite(s)?;
        }
        Ok(ResolvedConfig {
            name: self.name.clone(),
            space: self.space.resolve(base)?,
            operator: self.operator.resolve(base)?,
            weights: self
                .weights
                .iter()
                .map(|w| w.resolve(base))
                .collect::<Result<_>>()?,
            suites: self.suites.clone(),
            samples: self.samples,
            atom_samples: self.atom_samples,
            seed: self.seed,
        })
    }
}

/// A config with every component inlined; what the report hash covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub name: String,
    pub space: SpaceConfig,
    pub operator: OperatorConfig,
    pub weights: Vec<WeightConfig>,
    pub suites: Vec<String>,
    pub samples: usize,
    pub atom_samples: usize,
    pub seed: u64,
}

impl ResolvedConfig {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build(&self) -> Result<Fixture> {
        let space = Arc::new(self.space.build()?);
        let op = self.operator.build(space.clone())?;
        let weights = self
            .weights
            .iter()
            .map(|w| w.build(&space))
            .collect::<fsl_core::Result<_>>()?;
        Ok(Fixture { op, weights })
    }
}

pub struct Fixture {
    pub op: SelfAdjointOperator,
    pub weights: Vec<Weight>,
}

impl Fixture {
    pub fn unit(&self) -> Weight {
        Weight::unit(self.op.space())
    }
}
