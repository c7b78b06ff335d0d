//! HTTP+JSON review service.
//!
//! Reads load an immutable snapshot of the repository per request; the two
//! write endpoints are serialized through one mutex and the repository's
//! write lock, and go through the same gates as the command line.
//!
//! | method | path                                   | role                |
//! |--------|----------------------------------------|---------------------|
//! | GET    | /api/prototypes                        | any                 |
//! | GET    | /api/readiness/{prototype}/{stage}     | any                 |
//! | GET    | /api/hazard-log                        | any                 |
//! | GET    | /api/traceability                      | any                 |
//! | GET    | /api/document/{prototype}/{stage}      | any                 |
//! | GET    | /api/journal                           | any                 |
//! | POST   | /api/reviews                           | CertificationAgency |
//! | POST   | /api/decisions                         | ReleaseCommittee    |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;

use crate::actions::{self, ActionError, Applied};
use crate::compiler::{self, CompileError};
use crate::model::{ActorId, DecisionVerdict, Recommendation, RecordId, Role, StageNumber};
use crate::repository::Repository;
use crate::risk::{hazard_log, hazard_log_summary};
use crate::store::{self, StoreError, WriteLock};
use crate::validation::{readiness_report, ConfigError};
use crate::views::{prototype_views, traceability_view, PrototypeView};
use crate::workflow::{replay, EventKind, WorkflowError, WorkflowEvent, WorkflowState};

/// Bearer token -> actor id, read from a JSON object.
pub type Tokens = BTreeMap<String, ActorId>;

pub fn load_tokens(path: &Path) -> Result<Tokens, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|e| StoreError::Io { path: path.into(), source: e })?;
    store::parse_json(path, &text)
}

pub struct AppState {
    root: PathBuf,
    tokens: Tokens,
    writer: Mutex<()>,
}

pub fn router(root: impl Into<PathBuf>, tokens: Tokens) -> Router {
    let state = Arc::new(AppState { root: root.into(), tokens, writer: Mutex::new(()) });
    Router::new()
        .route("/api/prototypes", get(prototypes))
        .route("/api/readiness/{prototype}/{stage}", get(readiness))
        .route("/api/hazard-log", get(hazards))
        .route("/api/traceability", get(traceability))
        .route("/api/document/{prototype}/{stage}", get(document))
        .route("/api/journal", get(journal))
        .route("/api/reviews", post(post_review))
        .route("/api/decisions", post(post_decision))
        .with_state(state)
}

pub async fn serve(root: PathBuf, bind: &str, tokens: Tokens) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    axum::serve(listener, router(root, tokens)).await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": message.into() }) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.status, &self.body)
    }
}

fn json_response<T: Serialize>(status: StatusCode, value: &T) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], store::to_canonical_json(value)).into_response()
}

fn ok<T: Serialize>(value: &T) -> Result<Response, ApiError> {
    Ok(json_response(StatusCode::OK, value))
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl From<ActionError> for ApiError {
    fn from(e: ActionError) -> Self {
        match e {
            ActionError::Journal(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
            ActionError::Workflow(e) => workflow_error(e),
        }
    }
}

fn workflow_error(e: WorkflowError) -> ApiError {
    let message = e.to_string();
    match &e {
        WorkflowError::RoleGate { required, .. } => {
            ApiError { status: StatusCode::FORBIDDEN, body: json!({ "error": message, "required_role": required }) }
        }
        WorkflowError::UnknownActor(_)
        | WorkflowError::ActorMismatch { .. }
        | WorkflowError::NotComponentDeveloper { .. } => ApiError::new(StatusCode::FORBIDDEN, message),
        WorkflowError::MissingPayload { .. } | WorkflowError::UnknownRecord { .. } => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, message)
        }
        WorkflowError::GradualGating { prototype, requested, missing } => ApiError {
            status: StatusCode::CONFLICT,
            body: json!({
                "error": message,
                "reason": "GradualGating",
                "prototype": prototype,
                "requested": requested,
                "missing": missing,
            }),
        },
        WorkflowError::Blocked { reasons, .. } => ApiError {
            status: StatusCode::CONFLICT,
            body: json!({
                "error": message,
                "reason": "Blocked",
                "reasons": reasons.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                "readiness": e.readiness(),
            }),
        },
        _ => ApiError::new(StatusCode::CONFLICT, message),
    }
}

fn snapshot(app: &AppState) -> Result<(Repository, WorkflowState), ApiError> {
    let repo = store::load(&app.root)?;
    let state =
        replay(&repo.journal, &repo).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok((repo, state))
}

/// Actor behind the bearer token; unknown tokens map to nobody.
fn authenticate(app: &AppState, headers: &HeaderMap) -> Result<ActorId, ApiError> {
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "missing bearer token"))?;
    app.tokens.get(token.trim()).cloned().ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unknown token"))
}

fn parse_target(prototype: &str, stage: &str) -> Result<(RecordId, StageNumber), ApiError> {
    let prototype: RecordId =
        prototype.parse().map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("prototype: {e}")))?;
    let stage = stage
        .parse::<i64>()
        .map_err(|_| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("stage: `{stage}` is not a number")))
        .and_then(|n| {
            StageNumber::new(n).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("stage: {e}")))
        })?;
    Ok((prototype, stage))
}

fn config_error(e: ConfigError) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, e.to_string())
}

async fn prototypes(State(app): State<Arc<AppState>>, headers: HeaderMap) -> Result<Response, ApiError> {
    authenticate(&app, &headers)?;
    let (repo, state) = snapshot(&app)?;
    ok(&prototype_views(&repo, &state))
}

async fn readiness(
    State(app): State<Arc<AppState>>,
    headers: HeaderMap,
    UrlPath((prototype, stage)): UrlPath<(String, String)>,
) -> Result<Response, ApiError> {
    authenticate(&app, &headers)?;
    let (prototype, stage) = parse_target(&prototype, &stage)?;
    let (repo, state) = snapshot(&app)?;
    ok(&readiness_report(&repo, &state, &prototype, stage).map_err(config_error)?)
}

async fn hazards(State(app): State<Arc<AppState>>, headers: HeaderMap) -> Result<Response, ApiError> {
    authenticate(&app, &headers)?;
    let (repo, _) = snapshot(&app)?;
    let entries = hazard_log(&repo).map_err(StoreError::from)?;
    let summary = hazard_log_summary(&repo).map_err(StoreError::from)?;
    let bands: BTreeMap<u8, &str> = crate::model::Rsil::all().map(|r| (r.level(), r.band())).collect();
    ok(&json!({ "entries": entries, "summary": summary, "bands": bands }))
}

async fn traceability(State(app): State<Arc<AppState>>, headers: HeaderMap) -> Result<Response, ApiError> {
    authenticate(&app, &headers)?;
    let (repo, _) = snapshot(&app)?;
    ok(&traceability_view(&repo))
}

async fn document(
    State(app): State<Arc<AppState>>,
    headers: HeaderMap,
    UrlPath((prototype, stage)): UrlPath<(String, String)>,
) -> Result<Response, ApiError> {
    authenticate(&app, &headers)?;
    let (prototype, stage) = parse_target(&prototype, &stage)?;
    let (repo, state) = snapshot(&app)?;
    match compiler::compile(&repo, &state, &prototype, stage) {
        Ok(doc) => ok(&doc),
        Err(CompileError::MissingModules(report)) => Err(ApiError {
            status: StatusCode::CONFLICT,
            body: json!({ "error": "missing modules", "reason": "MissingModule", "readiness": report }),
        }),
        Err(CompileError::Config(e)) => Err(config_error(e)),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}

async fn journal(State(app): State<Arc<AppState>>, headers: HeaderMap) -> Result<Response, ApiError> {
    authenticate(&app, &headers)?;
    let (repo, _) = snapshot(&app)?;
    ok(&repo.journal)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewRequest {
    pub prototype: RecordId,
    pub stage: StageNumber,
    pub recommendation: Recommendation,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub prototype: RecordId,
    pub stage: StageNumber,
    pub verdict: DecisionVerdict,
    #[serde(default)]
    pub conditions: String,
}

/// Body of a successful POST: the appended event and the new projection.
#[derive(Debug, Serialize, Deserialize)]
pub struct MutationResponse {
    pub event: WorkflowEvent,
    pub prototype: PrototypeView,
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let text =
        std::str::from_utf8(body).map_err(|_| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "body is not UTF-8"))?;
    store::parse_json(Path::new("body"), text).map_err(|e| match e {
        StoreError::Parse { line, column, field, message, .. } => ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({ "error": message, "field": field, "line": line, "column": column }),
        },
        other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, other.to_string()),
    })
}

/// Authenticates, checks the role and runs one write under the writer lock.
async fn mutate(
    app: &AppState,
    headers: &HeaderMap,
    kind: EventKind,
    prototype: RecordId,
    action: impl FnOnce(&Repository, &ActorId) -> Result<Applied, ActionError>,
) -> Result<Response, ApiError> {
    let actor = authenticate(app, headers)?;
    let _guard = app.writer.lock().await;
    let _lock = WriteLock::acquire(&app.root)?;
    let (repo, _) = snapshot(app)?;
    let role = repo.actor(&actor).map(|a| a.role);
    let required: Role = kind.required_role();
    if role != Some(required) {
        return Err(ApiError {
            status: StatusCode::FORBIDDEN,
            body: json!({
                "error": format!("{kind:?} requires {required}; actor {actor} is {}", role.map(|r| r.to_string()).unwrap_or_else(|| "unregistered".into())),
                "required_role": required,
            }),
        });
    }
    if !repo.prototypes.contains_key(&prototype) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("prototype: unknown prototype {prototype}"),
        ));
    }
    let applied = action(&repo, &actor)?;
    store::save(&applied.repo)?;
    let view = prototype_views(&applied.repo, &applied.state)
        .into_iter()
        .find(|v| v.id == prototype)
        .expect("prototype exists");
    ok(&MutationResponse { event: applied.event, prototype: view })
}

async fn post_review(State(app): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    authenticate(&app, &headers)?;
    let req: ReviewRequest = parse_body(&body)?;
    mutate(&app, &headers, EventKind::ReviewCompleted, req.prototype, |repo, actor| {
        actions::submit_review(repo, actor, req.prototype, req.stage, req.recommendation, &req.notes, &actions::now())
    })
    .await
}

async fn post_decision(
    State(app): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    authenticate(&app, &headers)?;
    let req: DecisionRequest = parse_body(&body)?;
    mutate(&app, &headers, EventKind::ReleaseDecided, req.prototype, |repo, actor| {
        actions::submit_decision(repo, actor, req.prototype, req.stage, req.verdict, &req.conditions, &actions::now())
    })
    .await
}
