//! Session-oriented HTTP/JSON API over the pipeline, for the review console
//! and for scripting.
//!
//! A session holds one bar series, its automatic segmentation, the current
//! (reviewed) segmentation with its audit trail, and optional clustering.
//! Each session is one JSON document under the state directory, replaced
//! atomically (write to a temp file, then rename) on every mutation.
//!
//! Mutations carry the version they were computed against. The first
//! writer wins; any other request holding the same version gets 409.

use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::path::{Path, PathBuf};
use std::sync::{Arc, PoisonError, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_segments, VolatilityLabel};
use crate::error::Error;
use crate::ingest::{movements, read_bars_csv, read_bars_file, BarSeries, Model, MovementSeries};
use crate::report::{export_bundle, segment_spectra, ExportBundle, ExportFormat, PhaseAnalysis, ShockConfig};
use crate::segment::{EditKind, ManualEdit, Segmentation, SegmentationConfig, Segmenter};

pub const DEFAULT_PORT: u16 = 8750;
pub const STATE_DIR_ENV: &str = "REGIMESCOPE_STATE";
pub const SESSION_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    /// Automatic result only; no analyst input yet.
    Segmenting,
    /// At least one manual edit or accept.
    Reviewing,
    Clustered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub k: usize,
    pub shock_config: ShockConfig,
    pub analysis: PhaseAnalysis,
}

/// Persisted session document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub schema_version: u32,
    pub id: String,
    /// Incremented by every successful mutation.
    pub version: u64,
    pub status: SessionStatus,
    pub created: DateTime<Utc>,
    pub model: Model,
    pub config: SegmentationConfig,
    pub bars: BarSeries,
    /// Recursive segmentation plus optimization, before any edit.
    pub automatic: Segmentation,
    /// `automatic` with every audit entry replayed.
    pub current: Segmentation,
    pub cluster: Option<ClusterState>,
}

impl Session {
    pub fn audit(&self) -> &[ManualEdit] {
        &self.current.audit
    }

    pub fn movements(&self) -> crate::Result<MovementSeries> {
        movements(&self.bars, self.model)
    }

    /// Re-apply the audit trail to the automatic segmentation.
    pub fn replay(&self) -> crate::Result<Segmentation> {
        let series = self.movements()?;
        let segmenter = Segmenter::new(&series, self.config)?;
        self.audit()
            .iter()
            .try_fold(self.automatic.clone(), |seg, edit| edit_step(&segmenter, &seg, edit.clone()))
    }
}

/// One review step: the edit itself, then boundary optimization.
fn edit_step(segmenter: &Segmenter<'_>, seg: &Segmentation, edit: ManualEdit) -> crate::Result<Segmentation> {
    let edited = segmenter.apply_manual_edit(seg, edit)?;
    Ok(segmenter.optimize_boundaries(edited)?.0)
}

/// Error returned by the API as `{code, message}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", what)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    fn conflict(expected: u64, actual: u64) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "VersionConflict",
            format!("expected version {expected}, session is at {actual}"),
        )
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status.as_u16(), self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::TooShort { .. } | Error::BadValue { .. } | Error::DegenerateVariance => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            Error::BadEdit(_) | Error::TooFewSegments(_) | Error::DegenerateInterval { .. } => StatusCode::CONFLICT,
            Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code,
            message: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

/// Body of `POST /sessions`. Exactly one of `bars_csv` and `bars_path`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub bars_csv: Option<String>,
    pub bars_path: Option<PathBuf>,
    pub bars_per_day: Option<usize>,
    pub model: Option<Model>,
    #[serde(default)]
    pub config: SegmentationConfig,
}

/// Body of `POST /sessions/{id}/edits`: the edit fields plus the version
/// the client last saw.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EditRequest {
    pub expected_version: u64,
    #[serde(flatten)]
    pub kind: EditKind,
    #[serde(default)]
    pub actor: Option<String>,
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterRequest {
    pub expected_version: u64,
    pub k: usize,
    #[serde(default)]
    pub shocks: Option<ShockConfig>,
}

/// Session as returned by the API: everything except the raw bars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub version: u64,
    pub status: SessionStatus,
    pub created: DateTime<Utc>,
    pub model: Model,
    pub config: SegmentationConfig,
    pub n_bars: usize,
    pub bars_per_day: usize,
    pub segment_count: usize,
    pub automatic_boundaries: Vec<usize>,
    pub segmentation: Segmentation,
    pub cluster: Option<ClusterState>,
}

impl From<&Session> for SessionView {
    fn from(s: &Session) -> Self {
        Self {
            id: s.id.clone(),
            version: s.version,
            status: s.status,
            created: s.created,
            model: s.model,
            config: s.config,
            n_bars: s.bars.len(),
            bars_per_day: s.bars.bars_per_day(),
            segment_count: s.current.segment_count(),
            automatic_boundaries: s.automatic.cursors(),
            segmentation: s.current.clone(),
            cluster: s.cluster.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentPhase {
    pub cluster: usize,
    pub label: VolatilityLabel,
    pub color: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentView {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub sigma: f64,
    pub start_time: DateTime<Utc>,
    pub end_time: DateTime<Utc>,
    /// Divergence of the boundary that opens this segment.
    pub left_delta: Option<f64>,
    /// Long enough for a spectrum (at least `2 * min_len` samples).
    pub has_spectrum: bool,
    pub phase: Option<SegmentPhase>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentsView {
    pub version: u64,
    pub segments: Vec<SegmentView>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub t: usize,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumView {
    pub version: u64,
    pub segment: usize,
    pub start: usize,
    pub end: usize,
    pub argmax: usize,
    pub max: f64,
    pub threshold: f64,
    pub points: Vec<SpectrumPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterView {
    pub id: String,
    pub version: u64,
    pub status: SessionStatus,
    pub k: usize,
    #[serde(flatten)]
    pub analysis: PhaseAnalysis,
}

struct Entry {
    doc: RwLock<Arc<Session>>,
    series: MovementSeries,
}

impl Entry {
    fn new(doc: Session) -> crate::Result<Self> {
        let series = doc.movements()?;
        Ok(Self {
            doc: RwLock::new(Arc::new(doc)),
            series,
        })
    }

    fn snapshot(&self) -> Arc<Session> {
        self.doc.read().unwrap_or_else(PoisonError::into_inner).clone()
    }
}

/// In-memory sessions backed by one JSON file each. Without a state
/// directory sessions live only as long as the store.
pub struct SessionStore {
    state_dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Entry>>>,
}

impl SessionStore {
    /// Open a store, loading every `*.json` session under `state_dir`.
    pub fn open(state_dir: Option<PathBuf>) -> crate::Result<Self> {
        let mut sessions = HashMap::new();
        if let Some(dir) = &state_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let listing = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
            for item in listing {
                let path = item.map_err(|e| Error::io(dir, e))?.path();
                if path.extension().is_none_or(|x| x != "json") {
                    continue;
                }
                let doc = load_session(&path)?;
                sessions.insert(doc.id.clone(), Arc::new(Entry::new(doc)?));
            }
        }
        Ok(Self {
            state_dir,
            sessions: RwLock::new(sessions),
        })
    }

    /// Store rooted at `$REGIMESCOPE_STATE`, or in memory if unset.
    pub fn from_env() -> crate::Result<Self> {
        Self::open(std::env::var_os(STATE_DIR_ENV).map(PathBuf::from))
    }

    pub fn state_dir(&self) -> Option<&Path> {
        self.state_dir.as_deref()
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.read_sessions().keys().cloned().collect();
        ids.sort();
        ids
    }

    fn read_sessions(&self) -> std::sync::RwLockReadGuard<'_, HashMap<String, Arc<Entry>>> {
        self.sessions.read().unwrap_or_else(PoisonError::into_inner)
    }

    fn entry(&self, id: &str) -> ApiResult<Arc<Entry>> {
        self.read_sessions()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session {id:?}")))
    }

    fn session_path(&self, id: &str) -> Option<PathBuf> {
        self.state_dir.as_ref().map(|d| d.join(format!("{id}.json")))
    }

    fn persist(&self, doc: &Session) -> crate::Result<()> {
        let Some(path) = self.session_path(&doc.id) else {
            return Ok(());
        };
        let tmp = path.with_extension("json.tmp");
        let mut bytes = serde_json::to_vec_pretty(doc)?;
        bytes.push(b'\n');
        std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    /// Rewrite every session file. Returns the number written.
    pub fn flush(&self) -> crate::Result<usize> {
        let entries: Vec<Arc<Entry>> = self.read_sessions().values().cloned().collect();
        for e in &entries {
            self.persist(&e.snapshot())?;
        }
        Ok(if self.state_dir.is_some() { entries.len() } else { 0 })
    }

    /// Parse the bars, segment them, and persist the new session.
    pub fn create(&self, req: CreateSession) -> ApiResult<Arc<Session>> {
        let bars = match (&req.bars_csv, &req.bars_path) {
            (Some(csv), None) => read_bars_csv(csv.as_bytes(), req.bars_per_day)?,
            (None, Some(path)) => read_bars_file(path, req.bars_per_day).map_err(|e| match e {
                Error::Io { .. } => ApiError::bad_request(e.to_string()),
                other => other.into(),
            })?,
            _ => return Err(ApiError::bad_request("give exactly one of bars_csv and bars_path")),
        };
        req.config.validate()?;
        let model = req.model.unwrap_or(Model::Normal);
        let series = movements(&bars, model)?;
        let automatic = automatic_segmentation(&series, req.config)?;
        let doc = Session {
            schema_version: SESSION_SCHEMA_VERSION,
            id: uuid::Uuid::new_v4().simple().to_string(),
            version: 0,
            status: SessionStatus::Segmenting,
            created: Utc::now(),
            model,
            config: req.config,
            bars,
            current: automatic.clone(),
            automatic,
            cluster: None,
        };
        self.persist(&doc)?;
        let entry = Arc::new(Entry {
            doc: RwLock::new(Arc::new(doc)),
            series,
        });
        let snapshot = entry.snapshot();
        self.sessions
            .write()
            .unwrap_or_else(PoisonError::into_inner)
            .insert(snapshot.id.clone(), entry);
        Ok(snapshot)
    }

    pub fn get(&self, id: &str) -> ApiResult<Arc<Session>> {
        Ok(self.entry(id)?.snapshot())
    }

    pub fn segments(&self, id: &str) -> ApiResult<SegmentsView> {
        let doc = self.get(id)?;
        let min = 2 * doc.config.min_len;
        let phases = doc.cluster.as_ref().map(|c| &c.analysis.phases);
        let segments = doc
            .current
            .segments
            .iter()
            .enumerate()
            .map(|(m, s)| SegmentView {
                index: m,
                start: s.start,
                end: s.end,
                n: s.n,
                mean: s.mean,
                variance: s.variance,
                sigma: s.sigma(),
                start_time: s.start_time,
                end_time: s.end_time,
                left_delta: m.checked_sub(1).map(|b| doc.current.boundaries[b].delta),
                has_spectrum: s.len() >= min,
                phase: phases.map(|p| {
                    let c = p.cluster_of(m);
                    SegmentPhase {
                        cluster: c.id,
                        label: c.label,
                        color: c.color.clone(),
                    }
                }),
            })
            .collect();
        Ok(SegmentsView {
            version: doc.version,
            segments,
        })
    }

    pub fn spectrum(&self, id: &str, m: usize) -> ApiResult<SpectrumView> {
        let entry = self.entry(id)?;
        let doc = entry.snapshot();
        let seg = doc
            .current
            .segments
            .get(m)
            .ok_or_else(|| ApiError::not_found(format!("no segment {m}")))?;
        let needed = 2 * doc.config.min_len;
        if seg.len() < needed {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "SegmentTooShort",
                format!("segment {m} has {} samples; a spectrum needs {needed}", seg.len()),
            ));
        }
        let spectrum = Segmenter::new(&entry.series, doc.config)?.spectrum(seg.range())?;
        Ok(SpectrumView {
            version: doc.version,
            segment: m,
            start: spectrum.start,
            end: spectrum.end,
            argmax: spectrum.argmax,
            max: spectrum.max,
            threshold: doc.config.threshold,
            points: spectrum.points().map(|(t, delta)| SpectrumPoint { t, delta }).collect(),
        })
    }

    /// Compute the successor of the session at `expected` and install it if
    /// nobody else has in the meantime. Nothing changes on error.
    fn mutate(
        &self,
        id: &str,
        expected: u64,
        f: impl FnOnce(&Session, &MovementSeries) -> ApiResult<Session>,
    ) -> ApiResult<Arc<Session>> {
        let entry = self.entry(id)?;
        let before = entry.snapshot();
        if before.version != expected {
            return Err(ApiError::conflict(expected, before.version));
        }
        let mut next = f(&before, &entry.series)?;
        next.version = expected + 1;
        let mut slot = entry.doc.write().unwrap_or_else(PoisonError::into_inner);
        if slot.version != expected {
            return Err(ApiError::conflict(expected, slot.version));
        }
        self.persist(&next)?;
        *slot = Arc::new(next);
        Ok(slot.clone())
    }

    /// Apply a manual edit, re-optimize, and append it to the audit trail.
    /// Any edit leaves the session in review and discards stale clustering.
    pub fn apply_edit(&self, id: &str, req: EditRequest) -> ApiResult<Arc<Session>> {
        self.mutate(id, req.expected_version, |doc, series| {
            let edit = ManualEdit {
                kind: req.kind,
                actor: req.actor.unwrap_or_else(|| "analyst".to_string()),
                timestamp: req.timestamp.unwrap_or_else(Utc::now),
            };
            let segmenter = Segmenter::new(series, doc.config)?;
            let mut next = doc.clone();
            next.current = edit_step(&segmenter, &doc.current, edit)?;
            next.status = SessionStatus::Reviewing;
            next.cluster = None;
            Ok(next)
        })
    }

    pub fn cluster(&self, id: &str, req: ClusterRequest) -> ApiResult<Arc<Session>> {
        self.mutate(id, req.expected_version, |doc, _| {
            let m = doc.current.segment_count();
            if m < 2 {
                return Err(Error::TooFewSegments(m).into());
            }
            let stats: Vec<_> = doc.current.segments.iter().map(|s| s.stats()).collect();
            let (dendrogram, phases) = cluster_segments(&stats, req.k)?;
            let shock_config = req.shocks.unwrap_or_default();
            let analysis = PhaseAnalysis::new(&doc.current, dendrogram, phases, &shock_config)?;
            let mut next = doc.clone();
            next.cluster = Some(ClusterState {
                k: req.k,
                shock_config,
                analysis,
            });
            next.status = SessionStatus::Clustered;
            Ok(next)
        })
    }

    pub fn export(&self, id: &str) -> ApiResult<ExportBundle> {
        let entry = self.entry(id)?;
        let doc = entry.snapshot();
        let segmenter = Segmenter::new(&entry.series, doc.config)?;
        let spectra = segment_spectra(&segmenter, &doc.current, None);
        let analysis = doc.cluster.as_ref().map(|c| &c.analysis);
        Ok(export_bundle(&doc.current, analysis, &spectra)?)
    }
}

/// Recursive segmentation followed by boundary optimization.
pub fn automatic_segmentation(series: &MovementSeries, config: SegmentationConfig) -> crate::Result<Segmentation> {
    let segmenter = Segmenter::new(series, config)?;
    let seg = segmenter.recursive_segment()?;
    Ok(segmenter.optimize_boundaries(seg)?.0)
}

fn load_session(path: &Path) -> crate::Result<Session> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Session = serde_json::from_str(&text)?;
    if doc.schema_version != SESSION_SCHEMA_VERSION {
        return Err(Error::Parse(format!(
            "{}: unsupported session schema version {}",
            path.display(),
            doc.schema_version
        )));
    }
    // Re-run the constructor checks that deserialization skips.
    BarSeries::new(
        doc.bars.timestamps().to_vec(),
        doc.bars.values().to_vec(),
        doc.bars.bars_per_day(),
    )?;
    Ok(doc)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "Parse", e.to_string()))
}

type Store = Arc<SessionStore>;

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn list_sessions(State(store): State<Store>) -> Json<Vec<String>> {
    Json(store.ids())
}

async fn create_session(State(store): State<Store>, body: Bytes) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let req: CreateSession = parse_body(&body)?;
    let doc = blocking(move || store.create(req)).await?;
    Ok((StatusCode::CREATED, Json(SessionView::from(doc.as_ref()))))
}

async fn get_session(State(store): State<Store>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<SessionView>> {
    Ok(Json(SessionView::from(store.get(&id)?.as_ref())))
}

async fn get_segments(State(store): State<Store>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<SegmentsView>> {
    Ok(Json(store.segments(&id)?))
}

async fn get_spectrum(
    State(store): State<Store>,
    UrlPath((id, m)): UrlPath<(String, String)>,
) -> ApiResult<Json<SpectrumView>> {
    let m: usize = m
        .parse()
        .map_err(|_| ApiError::not_found(format!("no segment {m:?}")))?;
    Ok(Json(blocking(move || store.spectrum(&id, m)).await?))
}

async fn post_edit(
    State(store): State<Store>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<SessionView>> {
    let req: EditRequest = parse_body(&body)?;
    let doc = blocking(move || store.apply_edit(&id, req)).await?;
    Ok(Json(SessionView::from(doc.as_ref())))
}

async fn post_cluster(
    State(store): State<Store>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<ClusterView>> {
    let req: ClusterRequest = parse_body(&body)?;
    let doc = blocking(move || store.cluster(&id, req)).await?;
    let c = doc.cluster.as_ref().ok_or_else(|| ApiError::internal("clustering missing"))?;
    Ok(Json(ClusterView {
        id: doc.id.clone(),
        version: doc.version,
        status: doc.status,
        k: c.k,
        analysis: c.analysis.clone(),
    }))
}

#[derive(Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

/// Without `format`, the whole bundle as `{file name: contents}`.
async fn get_export(
    State(store): State<Store>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let format = match q.format.as_deref() {
        None | Some("") | Some("bundle") => None,
        Some(s) => Some(
            ExportFormat::parse(s).ok_or_else(|| ApiError::bad_request(format!("unknown export format {s:?}")))?,
        ),
    };
    let bundle = blocking(move || store.export(&id)).await?;
    match format {
        None => {
            let files: BTreeMap<&str, String> = bundle
                .files
                .iter()
                .map(|(f, bytes)| (f.file_name(), String::from_utf8_lossy(bytes).into_owned()))
                .collect();
            Ok(Json(files).into_response())
        }
        Some(f) => {
            let bytes = bundle.get(f).ok_or_else(|| {
                ApiError::new(
                    StatusCode::CONFLICT,
                    "NotClustered",
                    format!("{} is only available after clustering", f.file_name()),
                )
            })?;
            Ok(([(header::CONTENT_TYPE, f.content_type())], bytes.to_vec()).into_response())
        }
    }
}

/// All routes, sharing `store`.
pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/segments", get(get_segments))
        .route("/sessions/{id}/segments/{m}/spectrum", get(get_spectrum))
        .route("/sessions/{id}/edits", post(post_edit))
        .route("/sessions/{id}/cluster", post(post_cluster))
        .route("/sessions/{id}/export", get(get_export))
        .with_state(store)
}

/// Serve until `shutdown` resolves, then flush every session to disk.
pub async fn serve(
    listener: tokio::net::TcpListener,
    store: Arc<SessionStore>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> crate::Result<()> {
    let addr = listener.local_addr().map_err(|e| Error::io("listener", e))?;
    axum::serve(listener, router(store.clone()))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    store.flush()?;
    Ok(())
}
