//! HTTP service for running a trial cohort by cohort.
//!
//! Routes, all with JSON bodies:
//! - `POST /api/trials` creates a trial from `{config, seed?, bank_seed?}`;
//! - `GET /api/trials` lists trials;
//! - `GET /api/trials/{id}` returns the full record;
//! - `POST /api/trials/{id}/cohorts` records `{dose, patients, dlts, override?}`;
//! - `DELETE /api/trials/{id}` hides a trial (its log is kept).
//!
//! Anything else is served from the static directory.
//!
//! Errors are `{"error": message}` with 404 for unknown trials, 409 for
//! trials that are no longer active and 422 for invalid input.

pub mod store;

use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use abcdose::{generate_bank, BankFingerprint, Decision, Estimate, PriorBank, TrialConfig, TrialState, TrialStatus, DEFAULT_BANK_SEED};
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use store::{append_log, create_log, now_ms, read_log, CohortEvent, HistoryItem, LogEntry, TrialRecord};

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no trial with id {id}"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        tracing::error!("{e}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl From<abcdose::Error> for ApiError {
    fn from(e: abcdose::Error) -> Self {
        match e {
            abcdose::Error::TrialNotActive => Self::new(StatusCode::CONFLICT, e.to_string()),
            abcdose::Error::Io(_) => Self::internal(e),
            other => Self::new(StatusCode::UNPROCESSABLE_ENTITY, other.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(r.status(), r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateTrial {
    pub config: TrialConfig,
    /// Seed of the decision streams; drawn at random when absent.
    pub seed: Option<u64>,
    pub bank_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortRequest {
    pub dose: usize,
    pub patients: u32,
    pub dlts: u32,
    /// Required when `dose` differs from the recommendation.
    #[serde(default, rename = "override")]
    pub overridden: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialView {
    pub id: String,
    pub created_at_ms: u64,
    pub config: TrialConfig,
    pub seed: u64,
    pub bank: BankFingerprint,
    pub status: TrialStatus,
    pub state: TrialState,
    /// Dose for the next cohort; absent once the trial has ended.
    pub recommendation: Option<usize>,
    pub p_hat: Vec<f64>,
    /// `|p̂_k − φ|` per dose.
    pub distance: Vec<f64>,
    pub optimal_dose: usize,
    pub last_decision: Option<Decision>,
    pub final_mtd: Option<usize>,
    pub final_estimate: Option<Estimate>,
    pub history: Vec<HistoryItem>,
}

impl From<&TrialRecord> for TrialView {
    fn from(r: &TrialRecord) -> Self {
        let est = r.latest_estimate();
        Self {
            id: r.id.clone(),
            created_at_ms: r.created_at_ms,
            config: r.config.clone(),
            seed: r.seed,
            bank: r.fingerprint(),
            status: r.state.status,
            state: r.state.clone(),
            recommendation: r.recommendation(),
            p_hat: est.p_hat.clone(),
            distance: est.p_hat.iter().map(|p| (p - r.config.target).abs()).collect(),
            optimal_dose: est.optimal_dose,
            last_decision: r.history.last().map(|h| h.decision.clone()),
            final_mtd: r.final_mtd,
            final_estimate: r.final_estimate.clone(),
            history: r.history.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub id: String,
    pub created_at_ms: u64,
    pub status: TrialStatus,
    pub num_doses: usize,
    pub target: f64,
    pub cohorts: usize,
    pub patients: u32,
    pub recommendation: Option<usize>,
    pub final_mtd: Option<usize>,
}

struct TrialEntry {
    record: TrialRecord,
    deleted: bool,
}

type BankKey = (usize, u64, u64, usize, u64);

fn bank_key(fp: &BankFingerprint) -> BankKey {
    (fp.num_doses, fp.target.to_bits(), fp.delta.to_bits(), fp.samples_per_model, fp.seed)
}

/// Shared service state: the data directory, a bank cache and the trials.
pub struct AppState {
    data_dir: PathBuf,
    banks: Mutex<HashMap<BankKey, Arc<PriorBank>>>,
    trials: RwLock<HashMap<String, Arc<tokio::sync::RwLock<TrialEntry>>>>,
}

impl AppState {
    /// Opens the data directory and replays every trial log in it.
    pub fn open(data_dir: impl Into<PathBuf>) -> io::Result<Arc<Self>> {
        let data_dir = data_dir.into();
        std::fs::create_dir_all(&data_dir)?;
        let state = Arc::new(Self { data_dir, banks: Mutex::new(HashMap::new()), trials: RwLock::new(HashMap::new()) });
        let mut trials = HashMap::new();
        for entry in std::fs::read_dir(&state.data_dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "jsonl") {
                continue;
            }
            match state.replay(&path) {
                Ok(Some(record)) => {
                    trials.insert(record.id.clone(), Arc::new(tokio::sync::RwLock::new(TrialEntry { record, deleted: false })));
                }
                Ok(None) => {}
                Err(e) => return Err(io::Error::new(e.kind(), format!("{}: {e}", path.display()))),
            }
        }
        tracing::info!("recovered {} trials from {}", trials.len(), state.data_dir.display());
        *state.trials.write().expect("lock") = trials;
        Ok(state)
    }

    fn replay(&self, path: &Path) -> io::Result<Option<TrialRecord>> {
        let log = read_log(path)?;
        if log.deleted {
            return Ok(None);
        }
        let LogEntry::Created { id, at_ms, config, seed, bank_seed } = log.created else {
            unreachable!("read_log checks the first entry")
        };
        let invalid = |e: abcdose::Error| io::Error::new(io::ErrorKind::InvalidData, e.to_string());
        let bank = self.bank(&BankFingerprint::for_config(&config, bank_seed), &config).map_err(invalid)?;
        let mut record = TrialRecord::new(id, at_ms, config, seed, bank_seed, &bank).map_err(invalid)?;
        for event in log.cohorts {
            record = record.apply(&bank, event).map_err(invalid)?;
        }
        Ok(Some(record))
    }

    /// Returns the cached bank for `fp`, generating it on first use.
    fn bank(&self, fp: &BankFingerprint, config: &TrialConfig) -> abcdose::Result<Arc<PriorBank>> {
        let mut banks = self.banks.lock().expect("bank cache lock");
        if let Some(b) = banks.get(&bank_key(fp)) {
            return Ok(b.clone());
        }
        let bank = Arc::new(generate_bank(config, fp.seed)?);
        banks.insert(bank_key(fp), bank.clone());
        Ok(bank)
    }

    async fn bank_async(self: &Arc<Self>, fp: BankFingerprint, config: TrialConfig) -> ApiResult<Arc<PriorBank>> {
        let this = self.clone();
        Ok(tokio::task::spawn_blocking(move || this.bank(&fp, &config)).await.map_err(ApiError::internal)??)
    }

    fn entry(&self, id: &str) -> ApiResult<Arc<tokio::sync::RwLock<TrialEntry>>> {
        self.trials.read().expect("lock").get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }
}

pub fn router(state: Arc<AppState>, static_dir: impl AsRef<Path>) -> Router {
    Router::new()
        .route("/api/trials", post(create_trial).get(list_trials))
        .route("/api/trials/{id}", get(get_trial).delete(delete_trial))
        .route("/api/trials/{id}/cohorts", post(post_cohort))
        .with_state(state)
        .fallback_service(ServeDir::new(static_dir.as_ref()))
}

async fn create_trial(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateTrial>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<TrialView>)> {
    let Json(req) = body?;
    req.config.validate()?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let bank_seed = req.bank_seed.unwrap_or(DEFAULT_BANK_SEED);
    let bank = app.bank_async(BankFingerprint::for_config(&req.config, bank_seed), req.config.clone()).await?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let at_ms = now_ms();
    let record = TrialRecord::new(id.clone(), at_ms, req.config.clone(), seed, bank_seed, &bank)?;
    let entry = LogEntry::Created { id: id.clone(), at_ms, config: req.config, seed, bank_seed };
    let dir = app.data_dir.clone();
    let log_id = id.clone();
    tokio::task::spawn_blocking(move || create_log(&dir, &log_id, &entry))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)?;
    let view = TrialView::from(&record);
    app.trials
        .write()
        .expect("lock")
        .insert(id.clone(), Arc::new(tokio::sync::RwLock::new(TrialEntry { record, deleted: false })));
    tracing::info!(trial = %id, "created");
    Ok((StatusCode::CREATED, Json(view)))
}

async fn list_trials(State(app): State<Arc<AppState>>) -> Json<Vec<TrialSummary>> {
    let entries: Vec<_> = app.trials.read().expect("lock").values().cloned().collect();
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let e = e.read().await;
        if e.deleted {
            continue;
        }
        let r = &e.record;
        out.push(TrialSummary {
            id: r.id.clone(),
            created_at_ms: r.created_at_ms,
            status: r.state.status,
            num_doses: r.config.num_doses,
            target: r.config.target,
            cohorts: r.history.len(),
            patients: r.state.total_patients(),
            recommendation: r.recommendation(),
            final_mtd: r.final_mtd,
        });
    }
    out.sort_by(|a, b| (a.created_at_ms, &a.id).cmp(&(b.created_at_ms, &b.id)));
    Json(out)
}

async fn get_trial(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<TrialView>> {
    let entry = app.entry(&id)?;
    let e = entry.read().await;
    if e.deleted {
        return Err(ApiError::not_found(&id));
    }
    Ok(Json(TrialView::from(&e.record)))
}

async fn post_cohort(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<CohortRequest>, JsonRejection>,
) -> ApiResult<Json<TrialView>> {
    let entry = app.entry(&id)?;
    let Json(req) = body?;
    let mut e = entry.write().await;
    if e.deleted {
        return Err(ApiError::not_found(&id));
    }
    let Some(recommended) = e.record.recommendation() else {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("trial is {:?}, not active", e.record.state.status)));
    };
    if req.dose != recommended && !req.overridden {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("dose {} differs from the recommended dose {recommended}; set override to proceed", req.dose),
        ));
    }
    let event = CohortEvent {
        at_ms: now_ms(),
        dose: req.dose,
        patients: req.patients,
        dlts: req.dlts,
        overridden: req.dose != recommended,
    };
    let bank = app.bank_async(e.record.fingerprint(), e.record.config.clone()).await?;
    let current = e.record.clone();
    let log_event = event.clone();
    let next = tokio::task::spawn_blocking(move || current.apply(&bank, log_event))
        .await
        .map_err(ApiError::internal)??;
    let dir = app.data_dir.clone();
    let log_id = id.clone();
    tokio::task::spawn_blocking(move || append_log(&dir, &log_id, &LogEntry::Cohort(event)))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)?;
    if next.history.last().is_some_and(|h| h.event.overridden) {
        tracing::warn!(trial = %id, dose = req.dose, recommended, "dose override");
    }
    e.record = next;
    Ok(Json(TrialView::from(&e.record)))
}

async fn delete_trial(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<StatusCode> {
    let entry = app.entry(&id)?;
    let mut e = entry.write().await;
    if e.deleted {
        return Err(ApiError::not_found(&id));
    }
    let dir = app.data_dir.clone();
    let log_id = id.clone();
    tokio::task::spawn_blocking(move || append_log(&dir, &log_id, &LogEntry::Deleted { at_ms: now_ms() }))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)?;
    e.deleted = true;
    app.trials.write().expect("lock").remove(&id);
    tracing::info!(trial = %id, "deleted");
    Ok(StatusCode::NO_CONTENT)
}
