use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode, Uri};
use axum::response::sse::{KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::StreamExt;
use pulse_core::api::{
    codes, CreateSessionRequest, PcmChunkQuery, TapRequest, TaxonomyRequest, TextChunkRequest,
    TickRequest, TransitionRequest, API_FORMAT_VERSION,
};
use pulse_core::ingest::{AudioChunk, ChunkPayload, Speaker};
use pulse_core::session::SessionState;
use pulse_core::store::ListFilter;
use serde::Deserialize;

use crate::auth::Role;
use crate::error::{ApiError, ApiJson, ApiQuery};
use crate::live::to_sse;
use crate::service::Service;

type Svc = State<Arc<Service>>;

pub fn router(service: Arc<Service>) -> Router {
    let limit = service.config().max_body_bytes;
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/sessions", post(create_session).get(list_sessions))
        .route(
            "/v1/sessions/{id}",
            get(session_detail).delete(delete_session),
        )
        .route("/v1/sessions/{id}/transitions", post(transition))
        .route("/v1/sessions/{id}/chunks", post(chunk))
        .route("/v1/sessions/{id}/taps", post(tap))
        .route("/v1/sessions/{id}/tick", post(tick))
        .route("/v1/sessions/{id}/live", get(live))
        .route("/v1/sessions/{id}/export", get(export))
        .route("/v1/import", post(import))
        .route("/v1/taxonomy", get(taxonomy).put(set_taxonomy))
        .route("/v1/audit", get(audit))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(DefaultBodyLimit::max(limit))
        .with_state(service)
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(
        StatusCode::METHOD_NOT_ALLOWED,
        codes::METHOD_NOT_ALLOWED,
        "method not allowed on this route",
    )
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "format_version": API_FORMAT_VERSION, "status": "ok" }))
}

async fn create_session(
    State(svc): Svc,
    ApiJson(req): ApiJson<CreateSessionRequest>,
) -> Result<Response, ApiError> {
    let created = svc.create_session(req).await?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ListQuery {
    state: Option<String>,
    from: Option<u64>,
    until: Option<u64>,
}

async fn list_sessions(
    State(svc): Svc,
    headers: HeaderMap,
    ApiQuery(q): ApiQuery<ListQuery>,
) -> Result<Response, ApiError> {
    svc.require(&headers, Role::Reader)?;
    let state = match q.state.as_deref() {
        Some(s) => Some(
            SessionState::parse(s)
                .ok_or_else(|| ApiError::validation(format!("unknown state `{s}`")))?,
        ),
        None => None,
    };
    let filter = ListFilter {
        state,
        created_from: q.from,
        created_until: q.until,
    };
    Ok(Json(svc.list_sessions(&filter)).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetailQuery {
    label: Option<String>,
}

async fn session_detail(
    State(svc): Svc,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiQuery(q): ApiQuery<DetailQuery>,
) -> Result<Response, ApiError> {
    svc.require(&headers, Role::Reader)?;
    Ok(Json(svc.detail(&id, q.label.as_deref()).await?).into_response())
}

async fn delete_session(
    State(svc): Svc,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    svc.require(&headers, Role::Admin)?;
    svc.delete(&id).await?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn transition(
    State(svc): Svc,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<TransitionRequest>,
) -> Result<Response, ApiError> {
    Ok(Json(svc.transition(&id, &headers, req).await?).into_response())
}

fn content_type(headers: &HeaderMap) -> &str {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.split(';').next())
        .map(str::trim)
        .unwrap_or("")
}

async fn chunk(
    State(svc): Svc,
    Path(id): Path<String>,
    headers: HeaderMap,
    uri: Uri,
    body: Result<Bytes, BytesRejection>,
) -> Result<Response, ApiError> {
    let body = body?;
    let ack = match content_type(&headers) {
        "application/json" => {
            let req: TextChunkRequest = serde_json::from_slice(&body)
                .map_err(|e| ApiError::bad_request(format!("invalid chunk body: {e}")))?;
            svc.ingest_chunk(&id, &headers, |_| {
                AudioChunk::text(
                    req.seq,
                    req.speaker.unwrap_or(Speaker::Unknown),
                    req.text,
                    req.t_start,
                    req.t_end,
                )
            })
            .await?
        }
        "application/octet-stream" => {
            let Query(q) = Query::<PcmChunkQuery>::try_from_uri(&uri).map_err(|e| {
                ApiError::bad_request(format!("invalid chunk query: {}", e.body_text()))
            })?;
            if body.len() % 2 != 0 {
                return Err(ApiError::validation(
                    "PCM payload must hold whole 16-bit samples",
                ));
            }
            let data = body.to_vec();
            svc.ingest_chunk(&id, &headers, |sample_rate| AudioChunk {
                seq: q.seq,
                sample_rate,
                t_start: q.t_start,
                t_end: q.t_end,
                payload: ChunkPayload::Pcm { data },
            })
            .await?
        }
        other => {
            return Err(ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                codes::INVALID_REQUEST,
                format!("unsupported content type `{other}`"),
            ))
        }
    };
    Ok(Json(ack).into_response())
}

async fn tap(
    State(svc): Svc,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<TapRequest>,
) -> Result<Response, ApiError> {
    Ok(Json(svc.tap(&id, &headers, req.at, req.wait).await?).into_response())
}

async fn tick(
    State(svc): Svc,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<TickRequest>,
) -> Result<Response, ApiError> {
    Ok(Json(svc.tick(&id, &headers, req.at).await?).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiveQuery {
    after: Option<u64>,
}

async fn live(
    State(svc): Svc,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiQuery(q): ApiQuery<LiveQuery>,
) -> Result<Response, ApiError> {
    let log = svc.live_log(&id, &headers)?;
    let resume = match headers.get("last-event-id") {
        Some(v) => Some(
            v.to_str()
                .ok()
                .and_then(|s| s.trim().parse::<u64>().ok())
                .ok_or_else(|| {
                    ApiError::bad_request("Last-Event-ID must be an event sequence number")
                })?,
        ),
        None => None,
    };
    let after = resume.or(q.after).unwrap_or(0);
    let stream = log.follow(after).map(|event| to_sse(&event));
    Ok(Sse::new(stream)
        .keep_alive(KeepAlive::new().interval(Duration::from_secs(15)))
        .into_response())
}

async fn export(
    State(svc): Svc,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    svc.require(&headers, Role::Reader)?;
    let bytes = svc.export(&id).await?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/octet-stream".to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{id}.pulse\""),
            ),
        ],
        bytes,
    )
        .into_response())
}

async fn import(
    State(svc): Svc,
    headers: HeaderMap,
    body: Result<Bytes, BytesRejection>,
) -> Result<Response, ApiError> {
    svc.require(&headers, Role::Admin)?;
    let body = body?;
    let result = svc.import(body.to_vec()).await?;
    Ok((StatusCode::CREATED, Json(result)).into_response())
}

async fn taxonomy(State(svc): Svc, headers: HeaderMap) -> Result<Response, ApiError> {
    svc.require(&headers, Role::Reader)?;
    Ok(Json(svc.taxonomy()).into_response())
}

async fn set_taxonomy(
    State(svc): Svc,
    headers: HeaderMap,
    ApiJson(req): ApiJson<TaxonomyRequest>,
) -> Result<Response, ApiError> {
    svc.require(&headers, Role::Admin)?;
    Ok(Json(svc.set_taxonomy(req).await?).into_response())
}

async fn audit(State(svc): Svc, headers: HeaderMap) -> Result<Response, ApiError> {
    svc.require(&headers, Role::Admin)?;
    Ok(Json(svc.audit()).into_response())
}
