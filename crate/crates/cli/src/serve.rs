//! HTTP service backing the node-placement studio.
//!
//! Read endpoints serve bytes rendered once at startup, so repeated requests
//! return identical bodies. Fit previews run one at a time on a worker fed by
//! a bounded queue.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ppl_core::empirical::{GridField, ThresholdField};
use ppl_core::geometry::{NodeSet, Triangulation};
use ppl_core::gp::{fit_located, voronoi_warm_start, Case, ExceedanceSet, FitResult, PenaltyVector};
use ppl_core::sample::StormPeakSample;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokio::sync::{mpsc, watch};

use crate::config::AnalysisConfig;
use crate::error::CliError;
use crate::pipeline::Pipeline;
use crate::views::{fitted_fields, TriangulationView};

pub const QUEUE_DEPTH: usize = 4;
const JOB_HISTORY: usize = 256;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done { result: Box<FitPreview> },
    Failed { error: String, stage: String },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreviewRequest {
    #[serde(default)]
    pub nodes: Option<Vec<Vec<f64>>>,
    /// Common penalty for every component.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Explicit penalty components in the case's order.
    #[serde(default)]
    pub components: Option<Vec<f64>>,
    #[serde(default)]
    pub case: Option<Case>,
    #[serde(default)]
    pub resolution: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitPreview {
    pub fit: FitResult,
    pub scale: GridField,
    pub shape: GridField,
    pub triangulation: TriangulationView,
    /// Largest scale gradient norm over the bins.
    pub max_scale_gradient: f64,
    pub seconds: f64,
}

struct Job {
    id: u64,
    request: PreviewRequest,
    progress: AtomicUsize,
    status: watch::Sender<JobStatus>,
}

#[derive(Serialize)]
struct JobView<'a> {
    id: u64,
    evaluations: usize,
    max_evaluations: usize,
    #[serde(flatten)]
    status: &'a JobStatus,
}

pub struct Studio {
    cfg: AnalysisConfig,
    out: PathBuf,
    sample: StormPeakSample,
    exceedances: ExceedanceSet,
    reads: BTreeMap<&'static str, Bytes>,
    nodes: RwLock<NodeSet>,
    jobs: Mutex<HashMap<u64, Arc<Job>>>,
    next_job: AtomicU64,
    queue: mpsc::Sender<Arc<Job>>,
    artifacts: Mutex<HashMap<String, Bytes>>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    field: Option<String>,
    stage: Option<String>,
}

impl ApiError {
    fn bad_request(field: &str, message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, message: message.into(), field: Some(field.into()), stage: None }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self { status: StatusCode::NOT_FOUND, message: message.into(), field: None, stage: None }
    }

    fn internal(stage: &str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: message.into(),
            field: None,
            stage: Some(stage.into()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body {
            error: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            field: Option<String>,
            #[serde(skip_serializing_if = "Option::is_none")]
            stage: Option<String>,
        }
        let body = Body { error: self.message, field: self.field, stage: self.stage };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn json_bytes<T: Serialize>(v: &T) -> Bytes {
    Bytes::from(serde_json::to_vec(v).expect("response serialises"))
}

fn json_response(bytes: Bytes) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

impl Studio {
    /// Prepare the data stages (reusing valid artifacts) and render the read
    /// endpoints. Must be called inside a tokio runtime.
    pub fn new(cfg: AnalysisConfig) -> Result<Arc<Self>, CliError> {
        let mut p = Pipeline::new(cfg.clone(), false)?;
        let sample = p.sample(false)?.clone();
        let density = p.density(false)?.clone();
        let threshold: ThresholdField = p.threshold(false)?.clone();
        let local = p.local_estimates(false)?.clone();
        let nodes = p.node_set()?;
        let exceedances = ExceedanceSet::from_sample(&sample, &threshold).map_err(CliError::stage("threshold"))?;

        #[derive(Serialize)]
        struct SampleView<'a> {
            labels: &'a [String],
            response: &'a str,
            x: Vec<Vec<f64>>,
            y: &'a [f64],
            threshold: Vec<f64>,
        }
        let dim = sample.dim();
        let thresholds: Vec<f64> = sample
            .covariates()
            .iter()
            .map(|x| ppl_core::empirical::Threshold::threshold_at(&threshold, x))
            .collect();
        let sv = SampleView {
            labels: sample.labels(),
            response: &cfg.data.response,
            x: sample.covariates().iter().map(|c| c[..dim].to_vec()).collect(),
            y: sample.responses(),
            threshold: thresholds,
        };
        #[derive(Serialize)]
        struct Health<'a> {
            status: &'a str,
            version: &'a str,
            config_hash: String,
            dim: usize,
            observations: usize,
            exceedances: usize,
        }
        let health = Health {
            status: "ok",
            version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.hash(),
            dim,
            observations: sample.len(),
            exceedances: exceedances.len(),
        };
        let mut reads = BTreeMap::new();
        reads.insert("health", json_bytes(&health));
        reads.insert("sample", json_bytes(&sv));
        reads.insert("density", json_bytes(&density));
        reads.insert("threshold", json_bytes(&threshold.smoothed));
        reads.insert("threshold-raw", json_bytes(&threshold.raw));
        reads.insert("local-scale", json_bytes(&local.scale));
        reads.insert("local-shape", json_bytes(&local.shape));
        reads.insert("local-scale-raw", json_bytes(&local.scale_raw));
        reads.insert("local-shape-raw", json_bytes(&local.shape_raw));

        let (tx, rx) = mpsc::channel(QUEUE_DEPTH);
        let studio = Arc::new(Self {
            out: p.out_dir().to_path_buf(),
            cfg,
            sample,
            exceedances,
            reads,
            nodes: RwLock::new(nodes),
            jobs: Mutex::new(HashMap::new()),
            next_job: AtomicU64::new(1),
            queue: tx,
            artifacts: Mutex::new(HashMap::new()),
        });
        tokio::spawn(worker(Arc::downgrade(&studio), rx));
        Ok(studio)
    }

    fn dim(&self) -> usize {
        self.sample.dim()
    }

    fn parse_nodes(&self, field: &str, v: &[Vec<f64>]) -> ApiResult<NodeSet> {
        if let Some(bad) = v.iter().position(|c| c.len() != self.dim()) {
            return Err(ApiError::bad_request(
                field,
                format!("node {bad} has {} coordinates, expected {}", v[bad].len(), self.dim()),
            ));
        }
        NodeSet::from_vectors(v).map_err(|e| ApiError::bad_request(field, e.to_string()))
    }

    fn triangulate(&self, field: &str, nodes: &NodeSet) -> ApiResult<Triangulation> {
        Triangulation::build_irregular_grid(nodes).map_err(|e| ApiError::bad_request(field, e.to_string()))
    }

    fn penalty(&self, req: &PreviewRequest) -> ApiResult<PenaltyVector> {
        let case = req.case.unwrap_or(self.cfg.model.case);
        let n = case.components(self.dim());
        let comps = match (&req.components, req.lambda) {
            (Some(c), None) => c.clone(),
            (None, Some(l)) => vec![l; n],
            (None, None) => return Err(ApiError::bad_request("lambda", "give lambda or components")),
            (Some(_), Some(_)) => {
                return Err(ApiError::bad_request("components", "give either lambda or components, not both"))
            }
        };
        if comps.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ApiError::bad_request("components", "penalties must be finite and non-negative"));
        }
        PenaltyVector::from_components(case, self.dim(), &comps)
            .map_err(|e| ApiError::bad_request("components", e.to_string()))
    }

    fn run_preview(&self, req: &PreviewRequest, progress: &AtomicUsize) -> ApiResult<FitPreview> {
        let start = Instant::now();
        let nodes = match &req.nodes {
            Some(v) => self.parse_nodes("nodes", v)?,
            None => self.nodes.read().expect("node lock").clone(),
        };
        let tri = self.triangulate("nodes", &nodes)?;
        let penalty = self.penalty(req)?;
        let res = match &req.resolution {
            Some(r) => {
                GridField::check_resolution(self.dim(), r).map_err(|e| ApiError::bad_request("resolution", e.to_string()))?;
                r.clone()
            }
            None => self.cfg.resolution(&self.cfg.local.resolution),
        };
        let opts = self.cfg.fit_options();
        let fail = |e: ppl_core::PplError| ApiError::internal("fit", e.to_string());
        let warm = voronoi_warm_start(&self.exceedances, &tri, penalty.case.stationary_shape(), &opts).map_err(fail)?;
        let located = self.exceedances.locate(&tri);
        let fit = fit_located(&located, &tri, &penalty, &warm, &opts, Some(progress)).map_err(fail)?;
        let (scale, shape) = fitted_fields(&fit, &tri, &res).map_err(fail)?;
        let max_scale_gradient = tri
            .bin_gradients(&fit.theta.scale)
            .iter()
            .map(|g| g[0].hypot(g[1]))
            .fold(0.0, f64::max);
        Ok(FitPreview {
            fit,
            scale,
            shape,
            triangulation: TriangulationView::new(&tri),
            max_scale_gradient,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    fn enqueue(&self, request: PreviewRequest) -> ApiResult<Arc<Job>> {
        let id = self.next_job.fetch_add(1, Ordering::Relaxed);
        let (status, _) = watch::channel(JobStatus::Queued);
        let job = Arc::new(Job { id, request, progress: AtomicUsize::new(0), status });
        self.queue.try_send(job.clone()).map_err(|_| ApiError {
            status: StatusCode::SERVICE_UNAVAILABLE,
            message: format!("fit queue is full ({QUEUE_DEPTH} waiting); retry later"),
            field: None,
            stage: None,
        })?;
        let mut jobs = self.jobs.lock().expect("job lock");
        if jobs.len() >= JOB_HISTORY {
            let finished: Vec<u64> = jobs
                .values()
                .filter(|j| matches!(*j.status.borrow(), JobStatus::Done { .. } | JobStatus::Failed { .. }))
                .map(|j| j.id)
                .collect();
            let mut finished = finished;
            finished.sort_unstable();
            for old in finished.iter().take(jobs.len() + 1 - JOB_HISTORY) {
                jobs.remove(old);
            }
        }
        jobs.insert(id, job.clone());
        Ok(job)
    }

    fn job_json(&self, job: &Job) -> Bytes {
        let status = job.status.borrow();
        json_bytes(&JobView {
            id: job.id,
            evaluations: job.progress.load(Ordering::Relaxed),
            max_evaluations: self.cfg.model.max_evals,
            status: &status,
        })
    }

    /// Artifact bytes keyed by the stage's content stamp and file name.
    fn artifact(&self, stage: &str, file: &str) -> ApiResult<Bytes> {
        if !crate::pipeline::STAGES.contains(&stage) {
            return Err(ApiError::not_found(format!("unknown stage `{stage}`")));
        }
        if file.contains('/') || file.contains("..") || file.starts_with('.') {
            return Err(ApiError::bad_request("file", "invalid artifact name"));
        }
        let dir = self.out.join(stage);
        let stamp = std::fs::read(dir.join("stage.json"))
            .map_err(|_| ApiError::not_found(format!("stage `{stage}` has not been run")))?;
        let key = format!("{}:{file}", hex::encode(Sha256::digest(&stamp)));
        if let Some(b) = self.artifacts.lock().expect("cache lock").get(&key) {
            return Ok(b.clone());
        }
        let bytes = Bytes::from(
            std::fs::read(dir.join(file)).map_err(|_| ApiError::not_found(format!("no artifact {stage}/{file}")))?,
        );
        self.artifacts.lock().expect("cache lock").insert(key, bytes.clone());
        Ok(bytes)
    }
}

async fn worker(studio: std::sync::Weak<Studio>, mut rx: mpsc::Receiver<Arc<Job>>) {
    while let Some(job) = rx.recv().await {
        let Some(s) = studio.upgrade() else { break };
        job.status.send_replace(JobStatus::Running);
        let j = job.clone();
        let outcome = tokio::task::spawn_blocking(move || s.run_preview(&j.request, &j.progress)).await;
        let status = match outcome {
            Ok(Ok(result)) => JobStatus::Done { result: Box::new(result) },
            Ok(Err(e)) => JobStatus::Failed { error: e.message, stage: e.stage.unwrap_or_else(|| "request".into()) },
            Err(e) => JobStatus::Failed { error: e.to_string(), stage: "fit".into() },
        };
        job.status.send_replace(status);
    }
}

type AppState = State<Arc<Studio>>;

async fn read_endpoint(s: &Studio, name: &str) -> Response {
    json_response(s.reads[name].clone())
}

async fn get_nodes(State(s): AppState) -> Response {
    let nodes = s.nodes.read().expect("node lock").to_json();
    json_response(Bytes::from(nodes))
}

async fn put_nodes(State(s): AppState, body: Bytes) -> ApiResult<Response> {
    let v: Vec<Vec<f64>> = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request("nodes", format!("expected an array of coordinate vectors: {e}")))?;
    let ns = s.parse_nodes("nodes", &v)?;
    s.triangulate("nodes", &ns)?;
    let json = ns.to_json();
    *s.nodes.write().expect("node lock") = ns;
    Ok(json_response(Bytes::from(json)))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TriangulateRequest {
    #[serde(default)]
    nodes: Option<Vec<Vec<f64>>>,
}

async fn post_triangulate(State(s): AppState, body: Bytes) -> ApiResult<Response> {
    let req: TriangulateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        TriangulateRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("body", e.to_string()))?
    };
    let nodes = match &req.nodes {
        Some(v) => s.parse_nodes("nodes", v)?,
        None => s.nodes.read().expect("node lock").clone(),
    };
    let tri = s.triangulate("nodes", &nodes)?;
    Ok(json_response(json_bytes(&TriangulationView::new(&tri))))
}

fn parse_preview(s: &Studio, body: &[u8]) -> ApiResult<PreviewRequest> {
    let req: PreviewRequest = serde_json::from_slice(body).map_err(|e| ApiError::bad_request("body", e.to_string()))?;
    // reject malformed input before it takes a queue slot
    s.penalty(&req)?;
    if let Some(v) = &req.nodes {
        s.triangulate("nodes", &s.parse_nodes("nodes", v)?)?;
    }
    Ok(req)
}

async fn post_fit_preview(State(s): AppState, body: Bytes) -> ApiResult<Response> {
    let req = parse_preview(&s, &body)?;
    let job = s.enqueue(req)?;
    let mut rx = job.status.subscribe();
    let status = rx
        .wait_for(|st| matches!(st, JobStatus::Done { .. } | JobStatus::Failed { .. }))
        .await
        .map_err(|_| ApiError::internal("fit", "worker stopped"))?
        .clone();
    match status {
        JobStatus::Done { result } => Ok(json_response(json_bytes(&result))),
        JobStatus::Failed { error, stage } if stage == "request" => {
            Err(ApiError { status: StatusCode::BAD_REQUEST, message: error, field: None, stage: None })
        }
        JobStatus::Failed { error, stage } => Err(ApiError::internal(&stage, error)),
        _ => unreachable!("waited for a terminal status"),
    }
}

async fn post_job(State(s): AppState, body: Bytes) -> ApiResult<Response> {
    let req = parse_preview(&s, &body)?;
    let job = s.enqueue(req)?;
    Ok((StatusCode::ACCEPTED, [(header::CONTENT_TYPE, "application/json")], s.job_json(&job)).into_response())
}

async fn get_job(State(s): AppState, UrlPath(id): UrlPath<u64>) -> ApiResult<Response> {
    let job = s.jobs.lock().expect("job lock").get(&id).cloned().ok_or_else(|| ApiError::not_found(format!("no job {id}")))?;
    Ok(json_response(s.job_json(&job)))
}

async fn get_artifact(State(s): AppState, UrlPath(stage): UrlPath<String>) -> ApiResult<Response> {
    Ok(json_response(s.artifact(&stage, "stage.json")?))
}

async fn get_artifact_file(State(s): AppState, UrlPath((stage, file)): UrlPath<(String, String)>) -> ApiResult<Response> {
    let bytes = s.artifact(&stage, &file)?;
    let ct = if file.ends_with(".csv") { "text/csv" } else { "application/json" };
    Ok(([(header::CONTENT_TYPE, ct)], bytes).into_response())
}

fn api(studio: Arc<Studio>) -> Router {
    let read = |name: &'static str| get(move |State(s): AppState| async move { read_endpoint(&s, name).await });
    Router::new()
        .route("/health", read("health"))
        .route("/sample", read("sample"))
        .route("/density", read("density"))
        .route("/threshold", read("threshold"))
        .route("/threshold-raw", read("threshold-raw"))
        .route("/local-scale", read("local-scale"))
        .route("/local-shape", read("local-shape"))
        .route("/local-scale-raw", read("local-scale-raw"))
        .route("/local-shape-raw", read("local-shape-raw"))
        .route("/nodes", get(get_nodes).put(put_nodes))
        .route("/triangulate", post(post_triangulate))
        .route("/fit-preview", post(post_fit_preview))
        .route("/jobs", post(post_job))
        .route("/jobs/{id}", get(get_job))
        .route("/artifacts/{stage}", get(get_artifact))
        .route("/artifacts/{stage}/{file}", get(get_artifact_file))
        .with_state(studio)
}

/// Routes under `/api/v1`, with `/api` as an alias.
pub fn router(studio: Arc<Studio>) -> Router {
    Router::new().nest("/api/v1", api(studio.clone())).nest("/api", api(studio))
}

pub async fn serve(cfg: AnalysisConfig, addr: std::net::SocketAddr) -> Result<(), CliError> {
    let studio = Studio::new(cfg)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("serving on http://{}/api/v1", listener.local_addr()?);
    axum::serve(listener, router(studio))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
