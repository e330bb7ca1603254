//! The `/v1` JSON routes.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use iemo::ltr::Outcome;

use crate::config::{parse_body, SessionConfig};
use crate::error::Result;
use crate::session::{Ack, Phase, PopulationView, QueryView, SessionManager, SessionView};

type Shared = State<Arc<SessionManager>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgmentRequest {
    pub pair_index: usize,
    pub outcome: Outcome,
}

/// `query` is null whenever no consultation is open.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub phase: Phase,
    pub query: Option<QueryView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionList {
    pub sessions: Vec<SessionView>,
}

pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create).get(list))
        .route("/v1/sessions/{id}", get(state).delete(abort))
        .route("/v1/sessions/{id}/query", get(query))
        .route("/v1/sessions/{id}/judgment", post(judgment))
        .route("/v1/sessions/{id}/population", get(population))
        .with_state(manager)
}

async fn create(State(m): Shared, body: Bytes) -> Result<(StatusCode, Json<SessionView>)> {
    let config: SessionConfig = parse_body(&body)?;
    Ok((StatusCode::CREATED, Json(m.create(config)?)))
}

async fn list(State(m): Shared) -> Json<SessionList> {
    Json(SessionList { sessions: m.list() })
}

async fn state(State(m): Shared, Path(id): Path<String>) -> Result<Json<SessionView>> {
    Ok(Json(m.get(&id)?))
}

async fn abort(State(m): Shared, Path(id): Path<String>) -> Result<Json<SessionView>> {
    Ok(Json(m.abort(&id)?))
}

async fn query(State(m): Shared, Path(id): Path<String>) -> Result<Json<QueryResponse>> {
    let query = m.query(&id)?;
    let phase = m.get(&id)?.phase;
    Ok(Json(QueryResponse { phase, query }))
}

async fn judgment(State(m): Shared, Path(id): Path<String>, body: Bytes) -> Result<Json<Ack>> {
    // unknown ids are reported before body errors
    m.get(&id)?;
    let request: JudgmentRequest = parse_body(&body)?;
    Ok(Json(m.judge(&id, request.pair_index, request.outcome)?))
}

async fn population(State(m): Shared, Path(id): Path<String>) -> Result<Json<PopulationView>> {
    Ok(Json(m.population(&id)?.as_ref().clone()))
}

/// Serves the API until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr, manager: Arc<SessionManager>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(manager)).await
}
