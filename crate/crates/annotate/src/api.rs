//! HTTP interface.
//!
//! Request and response bodies are JSON except the treebank export, which
//! is `.wist` text. Errors map to 400 (malformed), 404 (unknown id), 409
//! (transition not allowed now) and 422 (illegal tree, with violations).

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;
use wordtree_core::{DepTree, Label};

use crate::error::ServiceError;
use crate::service::Service;
use crate::workflow::TaskSpec;

/// Header naming the caller when a body or query does not.
pub const ANNOTATOR_HEADER: &str = "x-annotator-id";

type Shared = State<Arc<Service>>;
type ApiResult = Result<Response, ServiceError>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::Malformed(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::IllegalTree { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Storage(_) | ServiceError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = match &self {
            ServiceError::IllegalTree { violations, .. } => {
                json!({ "error": self.to_string(), "violations": violations })
            }
            _ => json!({ "error": self.to_string() }),
        };
        (status, Json(body)).into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::Malformed(e.to_string()))
}

/// Heads and labels as submitted; lengths are checked by the workflow.
#[derive(Deserialize)]
struct TreeBody {
    heads: Vec<usize>,
    labels: Vec<Label>,
}

impl From<TreeBody> for DepTree {
    fn from(t: TreeBody) -> Self {
        DepTree {
            heads: t.heads,
            labels: t.labels,
        }
    }
}

fn who(field: Option<String>, headers: &HeaderMap, role: &str) -> Result<String, ServiceError> {
    field
        .or_else(|| {
            headers
                .get(ANNOTATOR_HEADER)
                .and_then(|v| v.to_str().ok())
                .map(str::to_string)
        })
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ServiceError::Malformed(format!("{role} id is required")))
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/projects", post(create_project))
        .route("/projects/{p}/tasks:import", post(import_tasks))
        .route("/projects/{p}/next-task", get(next_task))
        .route("/projects/{p}/export", get(export))
        .route("/projects/{p}/stats", get(stats))
        .route("/tasks/{t}", get(task))
        .route("/tasks/{t}/submit", post(submit))
        .route("/tasks/{t}/adjudicate", post(adjudicate))
        .route("/tasks/{t}/complain", post(complain))
        .route("/tasks/{t}/resolve", post(resolve))
        .with_state(service)
}

/// Serves until the process is stopped.
pub async fn serve(service: Arc<Service>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "annotation service listening");
    axum::serve(listener, router(service)).await
}

#[derive(Deserialize)]
struct CreateProject {
    id: String,
    #[serde(default)]
    seed: u64,
}

async fn create_project(State(svc): Shared, body: Bytes) -> ApiResult {
    let req: CreateProject = parse(&body)?;
    svc.create_project(&req.id, req.seed)?;
    Ok((StatusCode::CREATED, Json(json!({ "id": req.id, "seed": req.seed }))).into_response())
}

#[derive(Deserialize)]
struct Import {
    tasks: Vec<TaskSpec>,
}

async fn import_tasks(State(svc): Shared, Path(p): Path<String>, body: Bytes) -> ApiResult {
    let req: Import = parse(&body)?;
    let ids = svc.import_tasks(&p, req.tasks)?;
    Ok((StatusCode::CREATED, Json(json!({ "imported": ids.len(), "task_ids": ids }))).into_response())
}

async fn next_task(
    State(svc): Shared,
    Path(p): Path<String>,
    Query(q): Query<HashMap<String, String>>,
    headers: HeaderMap,
) -> ApiResult {
    let annotator = who(q.get("annotator").cloned(), &headers, "annotator")?;
    Ok(Json(svc.next_task(&p, &annotator)?).into_response())
}

#[derive(Deserialize)]
struct Submit {
    annotator: Option<String>,
    #[serde(flatten)]
    tree: TreeBody,
    #[serde(default)]
    multi_structure: bool,
}

async fn submit(State(svc): Shared, Path(t): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let req: Submit = parse(&body)?;
    let annotator = who(req.annotator, &headers, "annotator")?;
    let state = svc.submit(&t, &annotator, req.tree.into(), req.multi_structure)?;
    Ok(Json(json!({ "task": t, "state": state })).into_response())
}

#[derive(Deserialize)]
struct Adjudicate {
    expert: Option<String>,
    #[serde(flatten)]
    tree: TreeBody,
}

async fn adjudicate(State(svc): Shared, Path(t): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let req: Adjudicate = parse(&body)?;
    let expert = who(req.expert, &headers, "expert")?;
    let state = svc.adjudicate(&t, &expert, req.tree.into())?;
    Ok(Json(json!({ "task": t, "state": state })).into_response())
}

#[derive(Deserialize)]
struct Complain {
    annotator: Option<String>,
    #[serde(default)]
    reason: String,
}

async fn complain(State(svc): Shared, Path(t): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let req: Complain = parse(&body)?;
    let annotator = who(req.annotator, &headers, "annotator")?;
    let state = svc.complain(&t, &annotator, req.reason)?;
    Ok(Json(json!({ "task": t, "state": state })).into_response())
}

#[derive(Deserialize)]
struct Resolve {
    senior: Option<String>,
    #[serde(flatten)]
    tree: TreeBody,
}

async fn resolve(State(svc): Shared, Path(t): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let req: Resolve = parse(&body)?;
    let senior = who(req.senior, &headers, "senior")?;
    let state = svc.resolve(&t, &senior, req.tree.into())?;
    Ok(Json(json!({ "task": t, "state": state })).into_response())
}

fn flag(q: &HashMap<String, String>, key: &str) -> Result<bool, ServiceError> {
    match q.get(key).map(String::as_str) {
        None | Some("false") | Some("0") => Ok(false),
        Some("true") | Some("1") | Some("") => Ok(true),
        Some(v) => Err(ServiceError::Malformed(format!("{key}={v}: expected true or false"))),
    }
}

/// Blind by default, as shown to adjudicators; `?full=true` reveals ids.
async fn task(State(svc): Shared, Path(t): Path<String>, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let full = flag(&q, "full")?;
    Ok(Json(svc.task(&t, !full)?).into_response())
}

/// `.wist` text of the final answers; `?record=true` returns every
/// treebank of the submission record as JSON instead.
async fn export(State(svc): Shared, Path(p): Path<String>, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let record = flag(&q, "record")?;
    let e = svc.export(&p)?;
    if record {
        return Ok(Json(e.record()).into_response());
    }
    Ok((
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        e.finals.to_text(),
    )
        .into_response())
}

async fn stats(State(svc): Shared, Path(p): Path<String>) -> ApiResult {
    Ok(Json(svc.stats(&p)?).into_response())
}
