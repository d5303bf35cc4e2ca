//! JSON-over-HTTP front end for [`SessionService`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use elicit_core::records::{ElicitedStatement, Space};

use crate::error::{ErrorClass, ServiceError, ServiceResult};
use crate::service::SessionService;
use crate::session::{canonical_json, IssuedQuery, SessionConfig};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self.class() {
            ErrorClass::NotFound => StatusCode::NOT_FOUND,
            ErrorClass::Conflict => StatusCode::CONFLICT,
            ErrorClass::Invalid => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorClass::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(self.body())).into_response()
    }
}

struct Sorted<T>(T);

impl<T: Serialize> IntoResponse for Sorted<T> {
    fn into_response(self) -> Response {
        ([("content-type", "application/json")], canonical_json(&self.0, false)).into_response()
    }
}

type Reply<T> = Result<Sorted<T>, ServiceError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> ServiceResult<T> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

/// Runs session work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ServiceResult<T> + Send + 'static) -> Reply<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Sorted),
        Err(e) => Err(ServiceError::Io(std::io::Error::other(e.to_string()))),
    }
}

#[derive(Serialize)]
struct Created {
    id: String,
}

#[derive(Serialize)]
struct NextQuery {
    #[serde(flatten)]
    query: elicit_core::records::Query,
    #[serde(skip_serializing_if = "Option::is_none")]
    eig: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runner_up_eig: Option<f64>,
}

impl From<IssuedQuery> for NextQuery {
    fn from(i: IssuedQuery) -> Self {
        NextQuery { query: i.query, eig: i.eig, runner_up_eig: i.runner_up_eig }
    }
}

#[derive(Deserialize)]
struct SpaceParam {
    space: Option<Space>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Revision {
    Many { statements: Vec<ElicitedStatement> },
    One(ElicitedStatement),
}

type Svc = State<Arc<SessionService>>;

async fn create(State(s): Svc, body: Bytes) -> Reply<Created> {
    let cfg: SessionConfig = parse(&body)?;
    blocking(move || Ok(Created { id: s.create_session(cfg)? })).await
}

async fn show(State(s): Svc, Path(id): Path<String>) -> Reply<crate::session::SessionState> {
    blocking(move || s.get(&id)).await
}

async fn next_query(State(s): Svc, Path(id): Path<String>, Query(p): Query<SpaceParam>) -> Reply<NextQuery> {
    blocking(move || s.next_query(&id, p.space).map(NextQuery::from)).await
}

async fn answer(State(s): Svc, Path(id): Path<String>, body: Bytes) -> Reply<crate::session::AnswerResponse> {
    let z: ElicitedStatement = parse(&body)?;
    blocking(move || s.record_answer(&id, z)).await
}

async fn feedback(State(s): Svc, Path(id): Path<String>) -> Reply<crate::session::FeedbackPacket> {
    blocking(move || s.feedback(&id)).await
}

async fn revise(State(s): Svc, Path(id): Path<String>, body: Bytes) -> Reply<crate::session::AnswerResponse> {
    let statements = match parse::<Revision>(&body)? {
        Revision::Many { statements } => statements,
        Revision::One(z) => vec![z],
    };
    blocking(move || s.revise(&id, statements)).await
}

async fn accept(State(s): Svc, Path(id): Path<String>) -> Reply<crate::session::AcceptedPrior> {
    blocking(move || s.accept(&id)).await
}

async fn models(State(s): Svc) -> Reply<Vec<elicit_core::predictive::ModelInfo>> {
    Ok(Sorted(s.models()))
}

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/models", get(models))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/next-query", get(next_query))
        .route("/sessions/{id}/answers", post(answer))
        .route("/sessions/{id}/feedback", get(feedback))
        .route("/sessions/{id}/revise", post(revise))
        .route("/sessions/{id}/accept", post(accept))
        .with_state(service)
}

pub async fn serve(service: Arc<SessionService>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    axum::serve(listener, router(service)).await
}
