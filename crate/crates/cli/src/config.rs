//! Analysis configuration: one TOML file naming every tunable.

use std::path::{Path, PathBuf};

use ppl_core::empirical::GridField;
use ppl_core::gp::{Case, FitOptions, ShapeBounds};
use ppl_core::tuning::CVConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub extract: Option<ExtractConfig>,
    pub density: DensityConfig,
    pub threshold: ThresholdSection,
    pub local: LocalSection,
    pub nodes: NodeSpec,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub cv: CvSection,
    #[serde(default)]
    pub bootstrap: BootstrapSection,
    #[serde(default)]
    pub predict: PredictSection,
    /// Run directory; relative paths resolve against the config file's directory.
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("run")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Storm-peak CSV (the output of peak extraction when `[extract]` is given).
    pub path: PathBuf,
    pub covariates: Vec<String>,
    pub response: String,
}

/// Storm-peak extraction from a sea-state series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    pub series: PathBuf,
    #[serde(default = "default_time")]
    pub timestamp: String,
    #[serde(default = "default_hs")]
    pub hs: String,
    #[serde(default = "default_direction")]
    pub direction: String,
    #[serde(default = "default_season")]
    pub season: String,
    /// Exceedance probability of the peak-picking threshold.
    pub zeta: f64,
    #[serde(rename = "C")]
    pub neighbours: usize,
    pub w: Vec<f64>,
    #[serde(default)]
    pub resolution: Option<Vec<usize>>,
}

fn default_time() -> String {
    "time".into()
}
fn default_hs() -> String {
    "hs".into()
}
fn default_direction() -> String {
    "direction".into()
}
fn default_season() -> String {
    "season".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub w: Vec<f64>,
    #[serde(default)]
    pub resolution: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    pub zeta: f64,
    #[serde(rename = "C")]
    pub neighbours: usize,
    pub w: Vec<f64>,
    #[serde(default)]
    pub resolution: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSection {
    #[serde(rename = "C")]
    pub neighbours: usize,
    pub w: Vec<f64>,
    #[serde(default)]
    pub resolution: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NodeSpec {
    Regular { marginals: Vec<Vec<f64>> },
    Irregular { coordinates: Vec<Vec<f64>> },
    /// A node-set JSON file (array of coordinate vectors).
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub case: Case,
    pub shape_bounds: [f64; 2],
    pub max_evals: usize,
    pub volume_weighted: bool,
    pub min_cell_exceedances: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let f = FitOptions::default();
        Self {
            case: Case::A,
            shape_bounds: [f.shape_bounds.lower, f.shape_bounds.upper],
            max_evals: f.max_evals,
            volume_weighted: f.volume_weighted,
            min_cell_exceedances: f.min_cell_exceedances,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    #[serde(rename = "G")]
    pub folds: usize,
    #[serde(rename = "R")]
    pub replicates: usize,
    #[serde(rename = "S")]
    pub grid_size: usize,
    pub exponents: [f64; 2],
    pub seed: u64,
}

impl Default for CvSection {
    fn default() -> Self {
        Self { folds: 5, replicates: 5, grid_size: 10, exponents: [-1.0, 5.0], seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSection {
    #[serde(rename = "B")]
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        Self { resamples: 100, seed: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSection {
    /// Non-exceedance probabilities for conditional quantile surfaces.
    pub probabilities: Vec<f64>,
    /// Simulated points per observation.
    pub simulation_multiplier: usize,
    /// Simulated points per observation for each bootstrap member's band curve.
    pub band_multiplier: usize,
    pub strata: Vec<String>,
    pub seed: u64,
    /// Also write the simulated points as CSV.
    pub write_simulation: bool,
}

impl Default for PredictSection {
    fn default() -> Self {
        Self {
            probabilities: vec![0.9, 0.99, 0.999],
            simulation_multiplier: 1000,
            band_multiplier: 100,
            strata: vec!["all".into()],
            seed: 3,
            write_simulation: false,
        }
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config_error(format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Read, resolve relative paths against the file's directory and validate.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.path);
        fix(&mut self.output);
        if let Some(e) = self.extract.as_mut() {
            fix(&mut e.series);
        }
        if let NodeSpec::File { path } = &mut self.nodes {
            fix(path);
        }
    }

    pub fn dim(&self) -> usize {
        self.data.covariates.len()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let dim = self.dim();
        if dim != 1 && dim != 2 {
            return Err(config_error("data.covariates must name 1 or 2 columns"));
        }
        if self.extract.is_none() && !self.data.path.exists() {
            return Err(config_error(format!("data file {} does not exist", self.data.path.display())));
        }
        if let Some(e) = &self.extract {
            if !e.series.exists() {
                return Err(config_error(format!("series file {} does not exist", e.series.display())));
            }
            check_prob("extract.zeta", e.zeta)?;
        }
        let check_w = |name: &str, w: &[f64]| {
            if w.len() != dim || w.iter().any(|v| *v <= 0.0 || !v.is_finite()) {
                return Err(config_error(format!("{name} needs {dim} positive bandwidths")));
            }
            Ok(())
        };
        check_w("density.w", &self.density.w)?;
        check_w("threshold.w", &self.threshold.w)?;
        check_w("local.w", &self.local.w)?;
        check_prob("threshold.zeta", self.threshold.zeta)?;
        for (name, r) in [
            ("density.resolution", &self.density.resolution),
            ("threshold.resolution", &self.threshold.resolution),
            ("local.resolution", &self.local.resolution),
        ] {
            if let Some(r) = r {
                GridField::check_resolution(dim, r).map_err(|e| config_error(format!("{name}: {e}")))?;
            }
        }
        if self.threshold.neighbours == 0 || self.local.neighbours == 0 {
            return Err(config_error("C must be positive"));
        }
        match &self.nodes {
            NodeSpec::Regular { marginals } if marginals.len() != dim => {
                return Err(config_error(format!("nodes.marginals needs {dim} lists")))
            }
            NodeSpec::File { path } if !path.exists() => {
                return Err(config_error(format!("node file {} does not exist", path.display())))
            }
            _ => {}
        }
        self.fit_options().validate().map_err(|e| config_error(e.to_string()))?;
        self.cv_config().validate().map_err(|e| config_error(e.to_string()))?;
        if self.bootstrap.resamples == 0 {
            return Err(config_error("bootstrap.B must be at least 1"));
        }
        for &p in &self.predict.probabilities {
            if !(1.0 - self.threshold.zeta..1.0).contains(&p) {
                return Err(config_error(format!(
                    "predict.probabilities: {p} is outside [1 - zeta, 1) = [{}, 1)",
                    1.0 - self.threshold.zeta
                )));
            }
        }
        for s in &self.predict.strata {
            s.parse::<ppl_core::predict::Strata>().map_err(|e| config_error(e.to_string()))?;
        }
        if self.predict.simulation_multiplier == 0 {
            return Err(config_error("predict.simulation_multiplier must be positive"));
        }
        Ok(())
    }

    pub fn resolution(&self, r: &Option<Vec<usize>>) -> Vec<usize> {
        r.clone().unwrap_or_else(|| GridField::default_resolution(self.dim()))
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            shape_bounds: ShapeBounds { lower: self.model.shape_bounds[0], upper: self.model.shape_bounds[1] },
            max_evals: self.model.max_evals,
            volume_weighted: self.model.volume_weighted,
            min_cell_exceedances: self.model.min_cell_exceedances,
            ..FitOptions::default()
        }
    }

    pub fn cv_config(&self) -> CVConfig {
        CVConfig {
            folds: self.cv.folds,
            replicates: self.cv.replicates,
            grid_size: self.cv.grid_size,
            exponent_range: self.cv.exponents,
            case: self.model.case,
            seed: self.cv.seed,
            fit: self.fit_options(),
        }
    }

    /// Override every master seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.cv.seed = seed;
        self.bootstrap.seed = seed;
        self.predict.seed = seed;
    }

    /// SHA-256 of the canonical (JSON) form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serialises");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn check_prob(name: &str, v: f64) -> Result<(), CliError> {
    if !(v > 0.0 && v < 1.0) {
        return Err(config_error(format!("{name} must be in (0, 1), got {v}")));
    }
    Ok(())
}
