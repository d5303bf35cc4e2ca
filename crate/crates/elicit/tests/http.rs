mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use common::*;
use elicit::http::router;
use elicit_core::predictive::BETA_BERNOULLI;

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn app(dir: &std::path::Path) -> axum::Router {
    router(Arc::new(service(dir)))
}

fn config() -> Value {
    serde_json::to_value(fitting(BETA_BERNOULLI, quartiles("theta"))).unwrap()
}

#[tokio::test]
async fn full_flow() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, created) = call(&app, "POST", "/sessions", Some(config())).await;
    assert_eq!(status, StatusCode::OK);
    let id = created["id"].as_str().unwrap().to_string();

    for v in [0.16, 0.26, 0.39] {
        let (status, q) = call(&app, "GET", &format!("/sessions/{id}/next-query"), None).await;
        assert_eq!(status, StatusCode::OK);
        assert!(q.get("eig").is_none());
        let body = json!({"query_id": q["id"], "answer": {"QuantileValue": v}});
        let (status, resp) = call(&app, "POST", &format!("/sessions/{id}/answers"), Some(body)).await;
        assert_eq!(status, StatusCode::OK);
        assert!(resp["violations"].as_array().unwrap().is_empty());
    }
    let (status, fb) = call(&app, "GET", &format!("/sessions/{id}/feedback"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(fb["prior"]["family"], "beta");
    assert_eq!(fb["summaries"].as_array().unwrap().len(), 5);

    let revision = json!({"statements": [{"query_id": "q50", "answer": {"QuantileValue": 0.27}}]});
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/revise"), Some(revision)).await;
    assert_eq!(status, StatusCode::OK);
    call(&app, "GET", &format!("/sessions/{id}/feedback"), None).await;

    let (status, accepted) = call(&app, "POST", &format!("/sessions/{id}/accept"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(accepted["provenance_hash"].as_str().unwrap().len(), 64);
    let (status, err) = call(&app, "POST", &format!("/sessions/{id}/accept"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "AlreadyAccepted");

    let (status, state) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["session"]["status"], "Accepted");
}

#[tokio::test]
async fn error_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, err) = call(&app, "GET", "/sessions/missing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "UnknownSession");

    let (status, err) = call(&app, "POST", "/sessions", Some(json!({"model": "x"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "BadRequest");

    let mut bad = config();
    bad["model"] = json!("nope");
    let (status, err) = call(&app, "POST", "/sessions", Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "UnknownModel");

    let (_, created) = call(&app, "POST", "/sessions", Some(config())).await;
    let id = created["id"].as_str().unwrap();
    let (status, err) = call(&app, "GET", &format!("/sessions/{id}/feedback"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "NothingFitted");
    call(&app, "GET", &format!("/sessions/{id}/next-query"), None).await;
    let body = json!({"query_id": "q25", "answer": {"Probability": 0.5}});
    let (status, err) = call(&app, "POST", &format!("/sessions/{id}/answers"), Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "AnswerKindMismatch");
}

#[tokio::test]
async fn active_queries_report_gain() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let cfg = serde_json::to_value(active(BETA_BERNOULLI, levels("theta"))).unwrap();
    let (_, created) = call(&app, "POST", "/sessions", Some(cfg)).await;
    let id = created["id"].as_str().unwrap();
    let (status, q) = call(&app, "GET", &format!("/sessions/{id}/next-query?space=Parameter"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(q["eig"].as_f64().unwrap() >= 0.0);
    assert!(q["runner_up_eig"].as_f64().is_some());
}

#[tokio::test]
async fn lists_models() {
    let dir = tempfile::tempdir().unwrap();
    let (status, models) = call(&app(dir.path()), "GET", "/models", None).await;
    assert_eq!(status, StatusCode::OK);
    let names: Vec<&str> = models.as_array().unwrap().iter().map(|m| m["name"].as_str().unwrap()).collect();
    assert!(names.contains(&BETA_BERNOULLI));
    assert_eq!(names.len(), 4);
}
