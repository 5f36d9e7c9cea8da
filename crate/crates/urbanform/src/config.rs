//! Run configuration, read from TOML. Every field has a default; relative
//! paths resolve against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use urbanform_core::clustering::CovarianceType;

use crate::contiguity::ContiguityRule;
use crate::error::{Error, Result};
use crate::network::DEFAULT_SNAP_TOLERANCE;
use crate::tessellation::TessellationOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub buildings: PathBuf,
    /// Street centrelines; without them street characters are missing.
    pub streets: Option<PathBuf>,
    /// CSV with an `id` column and one column per reference layer.
    pub categories: Option<PathBuf>,
    pub id_property: Option<String>,
    pub height_property: Option<String>,
    pub assume_projected: bool,
    pub snap_tolerance: f64,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            buildings: "buildings.geojson".into(),
            streets: None,
            categories: None,
            id_property: Some("id".into()),
            height_property: Some("height".into()),
            assume_projected: true,
            snap_tolerance: DEFAULT_SNAP_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: "out".into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub contiguity: ContiguityRule,
    /// Keep context balls inside each cell's block.
    pub block_constrained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextConfig {
    pub order: usize,
    pub bins: usize,
}

impl Default for ContextConfig {
    fn default() -> Self {
        Self { order: urbanform_core::context::DEFAULT_CONTEXT_ORDER, bins: urbanform_core::context::DEFAULT_BINS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Skip selection and fit exactly this many components.
    pub k: Option<usize>,
    pub seeds_per_k: usize,
    pub seed: u64,
    pub covariance: CovarianceType,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub regularization: f64,
    /// Columns missing in more than this share of cells are dropped.
    pub max_missing_rate: f64,
    /// Whiten with PCA when columns exceed a tenth of the rows.
    pub pca_guard: bool,
    pub pca_variance: f64,
    pub write_responsibilities: bool,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            k_min: 1,
            k_max: 8,
            k: None,
            seeds_per_k: 3,
            seed: 42,
            covariance: CovarianceType::Full,
            tolerance: 1e-6,
            max_iterations: 300,
            regularization: 1e-6,
            max_missing_rate: 0.5,
            pca_guard: false,
            pca_variance: 0.95,
            write_responsibilities: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolScalingConfig {
    #[default]
    Pooled,
    PerCity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSource {
    pub city: String,
    /// Output directory of another city's run.
    pub directory: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxonomyConfig {
    /// Number of branches the dendrogram is cut into for the cell export.
    pub branches: usize,
    /// Tag for this run's leaves in pooled taxonomies.
    pub city: String,
    pub scaling: PoolScalingConfig,
    /// Other cities pooled with this one.
    pub pools: Vec<PoolSource>,
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        Self { branches: 2, city: "city".into(), scaling: PoolScalingConfig::Pooled, pools: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub min_share: f64,
    pub yates: bool,
    pub bias_corrected: bool,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { min_share: 0.01, yates: false, bias_corrected: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub output: OutputConfig,
    pub tessellation: TessellationOptions,
    pub graph: GraphConfig,
    pub context: ContextConfig,
    pub clustering: ClusteringConfig,
    pub taxonomy: TaxonomyConfig,
    pub validation: ValidationConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))
    }

    /// Reads and validates a config file, resolving relative paths against
    /// its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        config.resolve(path.parent().unwrap_or(Path::new(".")));
        config.validate()?;
        Ok(config)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.input.buildings);
        if let Some(p) = self.input.streets.as_mut() {
            fix(p);
        }
        if let Some(p) = self.input.categories.as_mut() {
            fix(p);
        }
        fix(&mut self.output.directory);
        for pool in &mut self.taxonomy.pools {
            fix(&mut pool.directory);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.input.assume_projected {
            return Err(Error::config("input.assume_projected must be true: reproject inputs to a metric CRS"));
        }
        if !(self.input.snap_tolerance.is_finite() && self.input.snap_tolerance > 0.0) {
            return Err(Error::config("input.snap_tolerance must be positive"));
        }
        self.tessellation.validate()?;
        if self.context.bins < 1 {
            return Err(Error::config("context.bins must be at least 1"));
        }
        let c = &self.clustering;
        if c.k_min < 1 || c.k_max < c.k_min {
            return Err(Error::config(format!("clustering k range [{}, {}] is empty", c.k_min, c.k_max)));
        }
        if c.k == Some(0) {
            return Err(Error::config("clustering.k must be at least 1"));
        }
        if c.seeds_per_k < 1 || c.max_iterations < 1 {
            return Err(Error::config("clustering.seeds_per_k and max_iterations must be at least 1"));
        }
        if !(c.tolerance > 0.0 && c.regularization >= 0.0) {
            return Err(Error::config("clustering.tolerance must be positive and regularization non-negative"));
        }
        if !(0.0..=1.0).contains(&c.max_missing_rate) || !(c.pca_variance > 0.0 && c.pca_variance <= 1.0) {
            return Err(Error::config("clustering.max_missing_rate and pca_variance must lie in [0, 1]"));
        }
        if self.taxonomy.branches < 1 {
            return Err(Error::config("taxonomy.branches must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.validation.min_share) {
            return Err(Error::config("validation.min_share must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}
