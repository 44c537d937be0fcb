//! The nine-stage analysis pipeline with per-stage artifact directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ppl_core::empirical::{
    kde, local_moment_estimates, local_quantile_threshold, CovariateKde, GridField, LocalGPEstimates,
    LocalMomentConfig, ThresholdConfig, ThresholdField,
};
use ppl_core::geometry::{NodeSet, Triangulation};
use ppl_core::gp::{fit, FitResult};
use ppl_core::predict::{
    bootstrap_fit, quantile_grid, simulate, tail_curves, write_tail_csv, BootstrapEnsemble, FittedModel,
    SimulatedSample, Strata, TailCurve,
};
use ppl_core::sample::{extract_storm_peaks, load_sample, read_sea_states, ColumnSchema, SeaStateSchema, StormPeakSample};
use ppl_core::tuning::{cross_validate, CVResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{AnalysisConfig, NodeSpec};
use crate::error::CliError;

pub const STAGES: [&str; 9] = [
    "extract",
    "density",
    "threshold",
    "local-estimates",
    "triangulate",
    "cross-validate",
    "fit",
    "bootstrap",
    "predict",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Computed,
    Cached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub seconds: f64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub input_hash: String,
    pub seeds: Seeds,
    pub threads: usize,
    pub stages: Vec<StageRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub cv: u64,
    pub bootstrap: u64,
    pub predict: u64,
}

/// Marker written into each stage directory once the stage completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StageStamp {
    stage: String,
    config_hash: String,
    input_hash: String,
    files: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    config_hash: String,
    stage: String,
    data: T,
}

/// Parsed artifact envelope for readers such as the HTTP service.
pub fn read_artifact<T: DeserializeOwned>(path: &Path) -> Result<(String, T), CliError> {
    let e: Envelope<T> = serde_json::from_slice(&fs::read(path)?)?;
    Ok((e.config_hash, e.data))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictSummary {
    pub simulated: usize,
    pub simulated_exceedances: usize,
    pub probabilities: Vec<f64>,
    pub strata: Vec<String>,
    pub bootstrap_band_members: usize,
}

/// What the prediction stage should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictParts {
    pub quantiles: bool,
    pub simulation: bool,
    pub tails: bool,
}

impl PredictParts {
    pub const ALL: Self = Self { quantiles: true, simulation: true, tails: true };
}

pub struct Pipeline {
    cfg: AnalysisConfig,
    out: PathBuf,
    config_hash: String,
    input_hash: String,
    resume: bool,
    manifest: Manifest,
    sample: Option<StormPeakSample>,
    density: Option<GridField>,
    threshold: Option<ThresholdField>,
    local: Option<LocalGPEstimates>,
    tri: Option<Triangulation>,
    cv: Option<CVResult>,
    fit: Option<FitResult>,
    bootstrap: Option<BootstrapEnsemble>,
}

fn file_hash(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Pipeline {
    /// Prepare a run directory. With `resume`, an existing manifest produced by
    /// a different configuration is refused.
    pub fn new(cfg: AnalysisConfig, resume: bool) -> Result<Self, CliError> {
        let out = cfg.output.clone();
        let config_hash = cfg.hash();
        let input = cfg.extract.as_ref().map_or(&cfg.data.path, |e| &e.series);
        let input_hash = file_hash(input)?;
        fs::create_dir_all(&out)?;
        let manifest_path = out.join("manifest.json");
        let old: Option<Manifest> = match fs::read(&manifest_path) {
            Ok(bytes) => serde_json::from_slice(&bytes).ok(),
            Err(_) => None,
        };
        if let Some(old) = old.as_ref().filter(|m| resume && m.config_hash != config_hash) {
            return Err(CliError::Config(format!(
                "{} was produced by config {}, current config is {}; refusing to resume",
                out.display(),
                &old.config_hash[..12.min(old.config_hash.len())],
                &config_hash[..12]
            )));
        }
        // keep records of earlier partial runs of the same configuration
        let stages = old
            .filter(|m| m.config_hash == config_hash && m.input_hash == input_hash)
            .map(|m| m.stages)
            .unwrap_or_default();
        let manifest = Manifest {
            tool: "ppl".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash.clone(),
            input_hash: input_hash.clone(),
            seeds: Seeds { cv: cfg.cv.seed, bootstrap: cfg.bootstrap.seed, predict: cfg.predict.seed },
            threads: ppl_core::par::threads(),
            stages,
        };
        fs::write(out.join("config.toml"), cfg.to_toml())?;
        Ok(Self {
            cfg,
            out,
            config_hash,
            input_hash,
            resume,
            manifest,
            sample: None,
            density: None,
            threshold: None,
            local: None,
            tri: None,
            cv: None,
            fit: None,
            bootstrap: None,
        })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.cfg
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    fn stage_dir(&self, stage: &str) -> PathBuf {
        self.out.join(stage)
    }

    /// A completed stage on disk whose hashes match the current run.
    fn valid_stamp(&self, stage: &str) -> bool {
        let Ok(bytes) = fs::read(self.stage_dir(stage).join("stage.json")) else {
            return false;
        };
        let Ok(stamp) = serde_json::from_slice::<StageStamp>(&bytes) else {
            return false;
        };
        stamp.config_hash == self.config_hash && stamp.input_hash == self.input_hash
    }

    fn use_cache(&self, stage: &str, target: bool) -> bool {
        (self.resume || !target) && self.valid_stamp(stage)
    }

    fn load<T: DeserializeOwned>(&self, stage: &str, file: &str) -> Result<T, CliError> {
        let (hash, data) = read_artifact(&self.stage_dir(stage).join(file))?;
        if hash != self.config_hash {
            return Err(CliError::Config(format!("{stage}/{file} was produced by a different config")));
        }
        Ok(data)
    }

    fn write_json<T: Serialize>(&self, stage: &str, file: &str, value: &T) -> Result<String, CliError> {
        let env = Envelope { config_hash: self.config_hash.clone(), stage: stage.to_string(), data: value };
        fs::write(self.stage_dir(stage).join(file), serde_json::to_vec_pretty(&env)?)?;
        Ok(file.to_string())
    }

    fn write_csv(
        &self,
        stage: &str,
        file: &str,
        body: impl FnOnce(&mut Vec<u8>) -> ppl_core::Result<()>,
    ) -> Result<String, CliError> {
        let mut buf = Vec::new();
        body(&mut buf).map_err(CliError::stage(stage_name(stage)))?;
        fs::write(self.stage_dir(stage).join(file), buf)?;
        Ok(file.to_string())
    }

    fn begin(&self, stage: &str) -> Result<Instant, CliError> {
        let dir = self.stage_dir(stage);
        fs::create_dir_all(&dir)?;
        let _ = fs::remove_file(dir.join("stage.json"));
        log::info!("stage {stage}: computing");
        Ok(Instant::now())
    }

    fn finish(&mut self, stage: &str, start: Instant, files: Vec<String>, stamp: bool) -> Result<(), CliError> {
        if stamp {
            let s = StageStamp {
                stage: stage.into(),
                config_hash: self.config_hash.clone(),
                input_hash: self.input_hash.clone(),
                files: files.clone(),
            };
            fs::write(self.stage_dir(stage).join("stage.json"), serde_json::to_vec_pretty(&s)?)?;
        }
        self.record(StageRecord {
            name: stage.into(),
            status: StageStatus::Computed,
            seconds: start.elapsed().as_secs_f64(),
            files,
        })
    }

    fn cached(&mut self, stage: &str) -> Result<(), CliError> {
        log::info!("stage {stage}: cached");
        let stamp: StageStamp = serde_json::from_slice(&fs::read(self.stage_dir(stage).join("stage.json"))?)?;
        self.record(StageRecord { name: stage.into(), status: StageStatus::Cached, seconds: 0.0, files: stamp.files })
    }

    fn record(&mut self, rec: StageRecord) -> Result<(), CliError> {
        self.manifest.stages.retain(|s| s.name != rec.name);
        self.manifest.stages.push(rec);
        self.manifest.stages.sort_by_key(|r| STAGES.iter().position(|s| *s == r.name));
        fs::write(self.out.join("manifest.json"), serde_json::to_vec_pretty(&self.manifest)?)?;
        Ok(())
    }

    fn schema(&self) -> ColumnSchema {
        ColumnSchema::new(self.cfg.data.covariates.clone(), self.cfg.data.response.clone())
    }

    pub fn sample(&mut self, target: bool) -> Result<&StormPeakSample, CliError> {
        const STAGE: &str = "extract";
        if self.sample.is_none() {
            let peaks = self.stage_dir(STAGE).join("peaks.csv");
            if self.use_cache(STAGE, target) {
                let s = load_sample(&peaks, &self.schema()).map_err(CliError::stage(STAGE))?;
                self.sample = Some(s);
                self.cached(STAGE)?;
            } else {
                let start = self.begin(STAGE)?;
                let s = self.extract_or_load().map_err(CliError::stage(STAGE))?;
                let response = self.cfg.data.response.clone();
                let mut files = vec![self.write_csv(STAGE, "peaks.csv", |w| s.write_csv(w, &response))?];
                #[derive(Serialize)]
                struct Summary<'a> {
                    observations: usize,
                    covariates: &'a [String],
                    response: &'a str,
                    extracted: bool,
                }
                let summary = Summary {
                    observations: s.len(),
                    covariates: s.labels(),
                    response: &response,
                    extracted: self.cfg.extract.is_some(),
                };
                files.push(self.write_json(STAGE, "sample.json", &summary)?);
                self.sample = Some(s);
                self.finish(STAGE, start, files, true)?;
            }
        }
        Ok(self.sample.as_ref().expect("sample set"))
    }

    fn extract_or_load(&self) -> ppl_core::Result<StormPeakSample> {
        let Some(ex) = &self.cfg.extract else {
            return load_sample(&self.cfg.data.path, &self.schema());
        };
        let schema = SeaStateSchema {
            timestamp: ex.timestamp.clone(),
            hs: ex.hs.clone(),
            direction: ex.direction.clone(),
            season: ex.season.clone(),
        };
        let series = read_sea_states(fs::File::open(&ex.series)?, &schema)?;
        let as_sample = series.as_sample()?;
        let resolution = ex.resolution.clone().unwrap_or_else(|| GridField::default_resolution(2));
        let picking = local_quantile_threshold(
            &as_sample,
            &ThresholdConfig { zeta: ex.zeta, neighbours: ex.neighbours, bandwidth: ex.w.clone(), resolution },
        )?;
        use ppl_core::empirical::Threshold;
        let peaks = extract_storm_peaks(&series, |x| picking.threshold_at(x))?;
        let labels: Vec<&str> = self.cfg.data.covariates.iter().map(String::as_str).collect();
        peaks.project(&labels)
    }

    pub fn density(&mut self, target: bool) -> Result<&GridField, CliError> {
        const STAGE: &str = "density";
        if self.density.is_none() {
            if self.use_cache(STAGE, target) {
                self.density = Some(self.load(STAGE, "density.json")?);
                self.cached(STAGE)?;
            } else {
                let s = self.sample(false)?.clone();
                let start = self.begin(STAGE)?;
                let res = self.cfg.resolution(&self.cfg.density.resolution);
                let g = kde(&s, &self.cfg.density.w, &res).map_err(CliError::stage(STAGE))?;
                let labels = s.labels().to_vec();
                let files = vec![
                    self.write_json(STAGE, "density.json", &g)?,
                    self.write_csv(STAGE, "density.csv", |w| g.write_csv(w, &labels, "density"))?,
                ];
                self.density = Some(g);
                self.finish(STAGE, start, files, true)?;
            }
        }
        Ok(self.density.as_ref().expect("density set"))
    }

    pub fn threshold(&mut self, target: bool) -> Result<&ThresholdField, CliError> {
        const STAGE: &str = "threshold";
        if self.threshold.is_none() {
            if self.use_cache(STAGE, target) {
                self.threshold = Some(self.load(STAGE, "threshold.json")?);
                self.cached(STAGE)?;
            } else {
                let s = self.sample(false)?.clone();
                let start = self.begin(STAGE)?;
                let t = &self.cfg.threshold;
                let tc = ThresholdConfig {
                    zeta: t.zeta,
                    neighbours: t.neighbours,
                    bandwidth: t.w.clone(),
                    resolution: self.cfg.resolution(&t.resolution),
                };
                let f = local_quantile_threshold(&s, &tc).map_err(CliError::stage(STAGE))?;
                let labels = s.labels().to_vec();
                let files = vec![
                    self.write_json(STAGE, "threshold.json", &f)?,
                    self.write_csv(STAGE, "threshold.csv", |w| f.smoothed.write_csv(w, &labels, "threshold"))?,
                    self.write_csv(STAGE, "threshold_raw.csv", |w| f.raw.write_csv(w, &labels, "threshold"))?,
                ];
                self.threshold = Some(f);
                self.finish(STAGE, start, files, true)?;
            }
        }
        Ok(self.threshold.as_ref().expect("threshold set"))
    }

    pub fn local_estimates(&mut self, target: bool) -> Result<&LocalGPEstimates, CliError> {
        const STAGE: &str = "local-estimates";
        if self.local.is_none() {
            if self.use_cache(STAGE, target) {
                self.local = Some(self.load(STAGE, "local.json")?);
                self.cached(STAGE)?;
            } else {
                let s = self.sample(false)?.clone();
                let thr = self.threshold(false)?.clone();
                let start = self.begin(STAGE)?;
                let l = &self.cfg.local;
                let lc = LocalMomentConfig {
                    neighbours: l.neighbours,
                    bandwidth: l.w.clone(),
                    resolution: self.cfg.resolution(&l.resolution),
                };
                let est = local_moment_estimates(&s, &thr, &lc).map_err(CliError::stage(STAGE))?;
                let labels = s.labels().to_vec();
                let files = vec![
                    self.write_json(STAGE, "local.json", &est)?,
                    self.write_csv(STAGE, "local_scale.csv", |w| est.scale.write_csv(w, &labels, "scale"))?,
                    self.write_csv(STAGE, "local_shape.csv", |w| est.shape.write_csv(w, &labels, "shape"))?,
                ];
                self.local = Some(est);
                self.finish(STAGE, start, files, true)?;
            }
        }
        Ok(self.local.as_ref().expect("local estimates set"))
    }

    /// Node set named by the configuration.
    pub fn node_set(&self) -> Result<NodeSet, CliError> {
        let err = CliError::stage("triangulate");
        match &self.cfg.nodes {
            NodeSpec::Regular { marginals } if marginals.len() == 1 => {
                let v: Vec<Vec<f64>> = marginals[0].iter().map(|&x| vec![x]).collect();
                NodeSet::from_vectors(&v).map_err(err)
            }
            NodeSpec::Regular { marginals } => {
                let t = Triangulation::build_regular_grid(marginals).map_err(err)?;
                NodeSet::new(t.dim(), t.nodes().to_vec()).map_err(CliError::stage("triangulate"))
            }
            NodeSpec::Irregular { coordinates } => NodeSet::from_vectors(coordinates).map_err(err),
            NodeSpec::File { path } => {
                let text = fs::read_to_string(path)?;
                NodeSet::from_json(&text).map_err(err)
            }
        }
    }

    pub fn triangulation(&mut self, target: bool) -> Result<&Triangulation, CliError> {
        const STAGE: &str = "triangulate";
        if self.tri.is_none() {
            if self.use_cache(STAGE, target) {
                self.tri = Some(self.load(STAGE, "triangulation_full.json")?);
                self.cached(STAGE)?;
            } else {
                let start = self.begin(STAGE)?;
                let tri = match &self.cfg.nodes {
                    NodeSpec::Regular { marginals } if marginals.len() == 2 => {
                        Triangulation::build_regular_grid(marginals)
                    }
                    _ => Triangulation::build_irregular_grid(&self.node_set()?),
                }
                .map_err(CliError::stage(STAGE))?;
                if tri.dim() != self.cfg.dim() {
                    return Err(CliError::Config(format!(
                        "nodes are {}-D but the data has {} covariates",
                        tri.dim(),
                        self.cfg.dim()
                    )));
                }
                let nodes = NodeSet::new(tri.dim(), tri.nodes().to_vec()).map_err(CliError::stage(STAGE))?;
                fs::write(self.stage_dir(STAGE).join("nodes.json"), nodes.to_json())?;
                let mut files = vec![
                    "nodes.json".to_string(),
                    self.write_json(STAGE, "triangulation.json", &crate::views::TriangulationView::new(&tri))?,
                ];
                files.push(self.write_json(STAGE, "triangulation_full.json", &tri)?);
                self.tri = Some(tri);
                self.finish(STAGE, start, files, true)?;
            }
        }
        Ok(self.tri.as_ref().expect("triangulation set"))
    }

    pub fn cross_validation(&mut self, target: bool) -> Result<&CVResult, CliError> {
        const STAGE: &str = "cross-validate";
        if self.cv.is_none() {
            if self.use_cache(STAGE, target) {
                self.cv = Some(self.load(STAGE, "cv.json")?);
                self.cached(STAGE)?;
            } else {
                let s = self.sample(false)?.clone();
                let thr = self.threshold(false)?.clone();
                let tri = self.triangulation(false)?.clone();
                let start = self.begin(STAGE)?;
                let cv = cross_validate(&s, &tri, &thr, &self.cfg.cv_config()).map_err(CliError::stage(STAGE))?;
                log::info!(
                    "lambda-circle = 10^{:?}, lambda* = 10^{:?}",
                    cv.exponents[cv.optimal],
                    cv.exponents[cv.selected]
                );
                let files = vec![
                    self.write_json(STAGE, "cv.json", &cv)?,
                    self.write_csv(STAGE, "cv_summary.csv", |w| cv.write_summary_csv(w))?,
                ];
                self.cv = Some(cv);
                self.finish(STAGE, start, files, true)?;
            }
        }
        Ok(self.cv.as_ref().expect("cv set"))
    }

    pub fn fitted(&mut self, target: bool) -> Result<&FitResult, CliError> {
        const STAGE: &str = "fit";
        if self.fit.is_none() {
            if self.use_cache(STAGE, target) {
                self.fit = Some(self.load(STAGE, "fit.json")?);
                self.cached(STAGE)?;
            } else {
                let s = self.sample(false)?.clone();
                let thr = self.threshold(false)?.clone();
                let tri = self.triangulation(false)?.clone();
                let penalty = self.cross_validation(false)?.selected_penalty().clone();
                let start = self.begin(STAGE)?;
                let r = fit(&s, &tri, &thr, &penalty, &self.cfg.fit_options()).map_err(CliError::stage(STAGE))?;
                let res = self.cfg.resolution(&self.cfg.local.resolution);
                let fields = crate::views::fitted_fields(&r, &tri, &res).map_err(CliError::stage(STAGE))?;
                let labels = s.labels().to_vec();
                let files = vec![
                    self.write_json(STAGE, "fit.json", &r)?,
                    self.write_csv(STAGE, "fit_nodes.csv", |w| crate::views::write_node_values(w, &r, &labels))?,
                    self.write_json(STAGE, "fit_scale.json", &fields.0)?,
                    self.write_json(STAGE, "fit_shape.json", &fields.1)?,
                ];
                self.fit = Some(r);
                self.finish(STAGE, start, files, true)?;
            }
        }
        Ok(self.fit.as_ref().expect("fit set"))
    }

    pub fn bootstrap(&mut self, target: bool) -> Result<&BootstrapEnsemble, CliError> {
        const STAGE: &str = "bootstrap";
        if self.bootstrap.is_none() {
            if self.use_cache(STAGE, target) {
                self.bootstrap = Some(self.load(STAGE, "bootstrap.json")?);
                self.cached(STAGE)?;
            } else {
                let s = self.sample(false)?.clone();
                let thr = self.threshold(false)?.clone();
                let tri = self.triangulation(false)?.clone();
                let base = self.fitted(false)?.clone();
                let start = self.begin(STAGE)?;
                let b = &self.cfg.bootstrap;
                let ens = bootstrap_fit(&s, &tri, &thr, &base.penalty, &base, b.resamples, b.seed, &self.cfg.fit_options())
                    .map_err(CliError::stage(STAGE))?;
                if ens.failed() > 0 {
                    log::warn!("{} of {} bootstrap members failed", ens.failed(), ens.members.len());
                }
                let labels = s.labels().to_vec();
                let files = vec![
                    self.write_json(STAGE, "bootstrap.json", &ens)?,
                    self.write_csv(STAGE, "bootstrap_nodes.csv", |w| crate::views::write_bootstrap_nodes(w, &ens))?,
                    self.write_csv(STAGE, "bootstrap_band.csv", |w| {
                        crate::views::write_bootstrap_band(w, &ens, &base, &labels)
                    })?,
                ];
                self.bootstrap = Some(ens);
                self.finish(STAGE, start, files, true)?;
            }
        }
        Ok(self.bootstrap.as_ref().expect("bootstrap set"))
    }

    /// Quantile surfaces, simulation and tail curves. Only the full set is
    /// stamped and eligible for caching; a partial run always writes the
    /// simulated points it draws.
    pub fn predict(&mut self, parts: PredictParts, target: bool) -> Result<PredictSummary, CliError> {
        const STAGE: &str = "predict";
        let full = parts == PredictParts::ALL;
        if full && self.use_cache(STAGE, target) {
            let summary = self.load(STAGE, "predict.json")?;
            self.cached(STAGE)?;
            return Ok(summary);
        }
        let s = self.sample(false)?.clone();
        let thr = self.threshold(false)?.clone();
        let tri = self.triangulation(false)?.clone();
        let base = self.fitted(false)?.clone();
        let ens = if parts.tails { Some(self.bootstrap(false)?.clone()) } else { None };
        let start = self.begin(STAGE)?;
        let err = CliError::stage(STAGE);
        let p = self.cfg.predict.clone();
        let zeta = self.cfg.threshold.zeta;
        let model = FittedModel { fit: &base, tri: &tri };
        let labels = s.labels().to_vec();
        let mut files = Vec::new();

        if parts.quantiles {
            let res = self.cfg.resolution(&self.cfg.threshold.resolution);
            let grids: Vec<GridField> = p
                .probabilities
                .iter()
                .map(|&q| quantile_grid(&model, &thr, zeta, q, s.dim(), &res))
                .collect::<ppl_core::Result<_>>()
                .map_err(err)?;
            files.push(self.write_json(STAGE, "quantiles.json", &grids)?);
            files.push(self.write_csv(STAGE, "quantiles.csv", |w| crate::views::write_quantiles(w, &grids, &labels))?);
        }

        let mut summary = PredictSummary {
            simulated: 0,
            simulated_exceedances: 0,
            probabilities: p.probabilities.clone(),
            strata: p.strata.clone(),
            bootstrap_band_members: 0,
        };
        if parts.simulation || parts.tails {
            let density = CovariateKde::new(&s, &self.cfg.density.w).map_err(CliError::stage(STAGE))?;
            let count = p.simulation_multiplier * s.len();
            let sim = simulate(&model, &density, &thr, &labels, zeta, count, p.seed).map_err(CliError::stage(STAGE))?;
            summary.simulated = sim.len();
            summary.simulated_exceedances = sim.exceedance_count();
            if parts.simulation && (p.write_simulation || !full) {
                files.push(self.write_csv(STAGE, "simulated.csv", |w| sim.write_csv(w))?);
            }
            if parts.tails {
                let band: Vec<SimulatedSample> = match &ens {
                    Some(ens) if p.band_multiplier > 0 => ens
                        .fits()
                        .enumerate()
                        .map(|(i, f)| {
                            let m = FittedModel { fit: f, tri: &tri };
                            let seed = p.seed.wrapping_add(1 + i as u64);
                            simulate(&m, &density, &thr, &labels, zeta, p.band_multiplier * s.len(), seed)
                        })
                        .collect::<ppl_core::Result<_>>()
                        .map_err(CliError::stage(STAGE))?,
                    _ => Vec::new(),
                };
                summary.bootstrap_band_members = band.len();
                for name in &p.strata {
                    let strata: Strata = name.parse().map_err(CliError::stage(STAGE))?;
                    let curves: Vec<TailCurve> =
                        tail_curves(&s, &sim, strata, (!band.is_empty()).then_some(&band[..]))
                            .map_err(CliError::stage(STAGE))?;
                    files.push(self.write_json(STAGE, &format!("tail_{name}.json"), &curves)?);
                    files.push(self.write_csv(STAGE, &format!("tail_{name}.csv"), |w| write_tail_csv(&curves, w))?);
                }
            }
        }
        files.push(self.write_json(STAGE, "predict.json", &summary)?);
        self.finish(STAGE, start, files, full)?;
        Ok(summary)
    }

    /// Every stage in order.
    pub fn run_all(&mut self) -> Result<(), CliError> {
        let t = true;
        self.sample(t)?;
        self.density(t)?;
        self.threshold(t)?;
        self.local_estimates(t)?;
        self.triangulation(t)?;
        self.cross_validation(t)?;
        self.fitted(t)?;
        self.bootstrap(t)?;
        self.predict(PredictParts::ALL, t)?;
        Ok(())
    }
}

fn stage_name(stage: &str) -> &'static str {
    STAGES.iter().copied().find(|s| *s == stage).unwrap_or("pipeline")
}
