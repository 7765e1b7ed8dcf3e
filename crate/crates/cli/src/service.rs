//! HTTP+JSON API under `/api/v1`.

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chorda_core::orchestrate::ExpandError;
use chorda_core::pipeline::{self, Generated, PipelineError};
use chorda_core::{
    bind_group, generate_skeleton, serialize_document, suggestions, validate_classification, Format,
    RequirementsDocument,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::store::{BindingSpec, Snapshot, Store, StoreError};
use crate::{problem_lines, BindingsFile};

type AppState = Arc<Store>;

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/api/v1/documents", get(list_documents))
        .route("/api/v1/documents/{id}", get(get_document).put(put_document))
        .route("/api/v1/documents/{id}/classify", post(classify))
        .route("/api/v1/documents/{id}/skeleton", post(skeleton))
        .route("/api/v1/documents/{id}/bindings", get(get_bindings).post(post_bindings))
        .route("/api/v1/documents/{id}/expand", post(expand))
        .route("/api/v1/documents/{id}/coverage", get(coverage))
        .route("/api/v1/documents/{id}/diagram.svg", get(diagram))
        .with_state(Arc::new(store))
}

pub async fn serve(addr: SocketAddr, store: Store) -> io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("serving {} on http://{}", store.dir().display(), listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            body: json!({ "error": code, "message": message.into() }),
        }
    }

    fn with(mut self, key: &str, value: impl serde::Serialize) -> ApiError {
        self.body[key] = serde_json::to_value(value).expect("error detail serializes");
        self
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "bad-request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::InvalidId => {
                ApiError::bad_request("document ids use letters, digits, `-` and `_` (at most 64)")
            }
            StoreError::NotFound => ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such document"),
            StoreError::Conflict { current } => ApiError::new(
                StatusCode::CONFLICT,
                "version-conflict",
                format!("document is at version {current}"),
            )
            .with("currentVersion", current),
            StoreError::Parse(diags) => {
                ApiError::new(StatusCode::BAD_REQUEST, "parse-error", "markup has errors").with("diagnostics", diags)
            }
            StoreError::Io(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string()),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let lines = problem_lines(&e);
        match e {
            PipelineError::Parse(diags) => {
                ApiError::new(StatusCode::BAD_REQUEST, "parse-error", "markup has errors").with("diagnostics", diags)
            }
            PipelineError::NotReady(issues) => ApiError::new(
                StatusCode::BAD_REQUEST,
                "not-ready",
                "statements need classification before generation",
            )
            .with("issues", issues),
            PipelineError::Expand(ExpandError::UnresolvedGroups(groups)) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unresolved-groups", lines.join("; "))
                    .with("unresolvedGroups", groups)
            }
            PipelineError::Expand(other) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "expansion-failed", other.to_string())
            }
            PipelineError::Layout(l) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "layout", l.to_string()),
        }
    }
}

fn etag(version: u64) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{version}\"")).expect("digits are a valid header")
}

/// Accepts `"3"`, `W/"3"`, `3` and `*` (no precondition).
fn if_match(headers: &HeaderMap) -> Result<Option<u64>, ApiError> {
    let Some(v) = headers.get(header::IF_MATCH) else {
        return Ok(None);
    };
    let raw = v
        .to_str()
        .map_err(|_| ApiError::bad_request("If-Match is not ASCII"))?
        .trim();
    if raw == "*" {
        return Ok(None);
    }
    let tag = raw.trim_start_matches("W/").trim_matches('"');
    tag.parse()
        .map(Some)
        .map_err(|_| ApiError::bad_request(format!("If-Match `{raw}` is not a document version")))
}

fn wants_json(headers: &HeaderMap) -> bool {
    headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("application/json"))
}

fn view(snap: &Snapshot) -> Value {
    json!({
        "id": snap.id,
        "version": snap.version,
        "markup": snap.markup,
        "document": snap.parsed.document,
        "diagnostics": snap.parsed.diagnostics,
        "statementSpans": snap.parsed.statement_spans,
    })
}

fn with_version(version: u64, resp: impl IntoResponse) -> Response {
    let mut r = resp.into_response();
    r.headers_mut().insert(header::ETAG, etag(version));
    r
}

/// The parsed document, provided the stored markup has no errors. Files
/// edited on disk can still contain some.
fn document(snap: &Snapshot) -> Result<&RequirementsDocument, ApiError> {
    if snap.parsed.has_errors() {
        return Err(PipelineError::Parse(snap.parsed.diagnostics.clone()).into());
    }
    Ok(&snap.parsed.document)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Stage {
    Skeleton,
    #[default]
    Expanded,
}

#[derive(Debug, Default, Deserialize)]
struct Params {
    format: Option<String>,
    #[serde(default)]
    stage: Stage,
}

impl Params {
    fn format(&self) -> Result<Format, ApiError> {
        self.format
            .as_deref()
            .map_or(Ok(Format::Json), str::parse)
            .map_err(ApiError::bad_request)
    }
}

fn generate(snap: &Snapshot, stage: Stage) -> Result<Generated, ApiError> {
    let doc = document(snap)?;
    Ok(match stage {
        Stage::Skeleton => pipeline::skeleton(doc)?,
        Stage::Expanded => pipeline::expanded(doc, snap.bindings.source())?,
    })
}

fn artifact(version: u64, g: &Generated, format: Format) -> Result<Response, ApiError> {
    let body = g.render(format).map_err(PipelineError::from)?;
    Ok(with_version(
        version,
        ([(header::CONTENT_TYPE, format.media_type())], body),
    ))
}

async fn list_documents(State(store): State<AppState>) -> Result<Json<Value>, ApiError> {
    let ids = store.list().map_err(StoreError::Io)?;
    Ok(Json(json!({ "documents": ids })))
}

async fn get_document(
    State(store): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let snap = store.get(&id)?;
    Ok(if wants_json(&headers) {
        with_version(snap.version, Json(view(&snap)))
    } else {
        with_version(
            snap.version,
            (
                [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
                snap.markup.clone(),
            ),
        )
    })
}

async fn put_document(
    State(store): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let expected = if_match(&headers)?;
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let markup = if is_json {
        let doc: RequirementsDocument =
            serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("document JSON: {e}")))?;
        serialize_document(&doc)
    } else {
        String::from_utf8(body.to_vec()).map_err(|_| ApiError::bad_request("markup is not UTF-8"))?
    };
    let (snap, created) = store.put(&id, markup, expected).await?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok(with_version(snap.version, (status, Json(view(&snap)))))
}

async fn classify(State(store): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let snap = store.get(&id)?;
    let doc = document(&snap)?;
    let issues = validate_classification(doc);
    let body = json!({
        "ready": issues.is_empty(),
        "issues": issues,
        "suggestions": suggestions(doc),
    });
    Ok(with_version(snap.version, Json(body)))
}

async fn skeleton(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<Params>,
) -> Result<Response, ApiError> {
    let snap = store.get(&id)?;
    let g = generate(&snap, Stage::Skeleton)?;
    artifact(snap.version, &g, params.format()?)
}

async fn expand(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<Params>,
) -> Result<Response, ApiError> {
    let snap = store.get(&id)?;
    let g = generate(&snap, Stage::Expanded)?;
    artifact(snap.version, &g, params.format()?)
}

async fn coverage(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<Params>,
) -> Result<Response, ApiError> {
    let snap = store.get(&id)?;
    let g = generate(&snap, params.stage)?;
    let report = g.coverage(document(&snap)?);
    Ok(with_version(snap.version, Json(report)))
}

async fn diagram(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<Params>,
) -> Result<Response, ApiError> {
    let snap = store.get(&id)?;
    let g = generate(&snap, params.stage)?;
    artifact(snap.version, &g, Format::Svg)
}

async fn get_bindings(State(store): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let snap = store.get(&id)?;
    Ok(with_version(snap.version, Json(bindings_view(&snap))))
}

fn bindings_view(snap: &Snapshot) -> Value {
    let mut v = serde_json::to_value(&snap.bindings).expect("bindings serialize");
    v["version"] = snap.version.into();
    v
}

async fn post_bindings(
    State(store): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let expected = if_match(&headers)?;
    let spec: BindingSpec = serde_json::from_slice::<BindingsFile>(&body)
        .map_err(|e| ApiError::bad_request(format!("bindings JSON: {e}")))?
        .into();
    let snap = store.set_bindings(&id, spec, expected, check_bindings).await??;
    Ok(with_version(snap.version, Json(bindings_view(&snap))))
}

/// Each explicit binding must name a top-level sub-process in the
/// participant's skeleton pool.
fn check_bindings(snap: &Snapshot, spec: &BindingSpec) -> Result<(), ApiError> {
    let BindingSpec::Explicit { bindings } = spec else {
        return Ok(());
    };
    let doc = document(snap)?;
    let sk = generate_skeleton(doc).map_err(PipelineError::from)?;
    for b in bindings {
        bind_group(&sk.model, &b.participant, &b.group_path, &b.target).map_err(|e| {
            ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid-binding",
                format!("`{}`: {e}", b.group_path.join("/")),
            )
        })?;
    }
    Ok(())
}
