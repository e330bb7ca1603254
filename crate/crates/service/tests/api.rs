use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use iemo_service::{router, SessionManager};

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(match body {
            Some(v) => Body::from(v.to_string()),
            None => Body::empty(),
        })
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

fn small() -> Value {
    json!({
        "algorithm": "insga2",
        "problem": "dtlz2",
        "m": 3,
        "pop_size": 20,
        "max_fe": 400,
        "warmup": 2,
        "tau": 4,
        "mu": 4,
        "train": {"epochs": 30},
        "seed": 1
    })
}

/// Polls until a pair is pending; `None` once the run has finished.
async fn pending_query(app: &Router, id: &str) -> Option<Value> {
    for _ in 0..30_000 {
        let (status, body) = call(app, Method::GET, &format!("/v1/sessions/{id}/query"), None).await;
        assert_eq!(status, StatusCode::OK);
        if !body["query"].is_null() {
            return Some(body["query"].clone());
        }
        if body["phase"] == "finished" {
            return None;
        }
        assert_eq!(body["phase"], "running");
        tokio::time::sleep(Duration::from_millis(2)).await;
    }
    panic!("no query arrived");
}

#[tokio::test]
async fn validation_errors_are_structured() {
    let app = router(Arc::new(SessionManager::in_memory()));
    let mut bad = small();
    bad["m"] = json!("three");
    let (status, body) = call(&app, Method::POST, "/v1/sessions", Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "invalid");
    assert_eq!(body["field"], "m");

    let mut bad = small();
    bad["m"] = json!(1);
    let (status, body) = call(&app, Method::POST, "/v1/sessions", Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["field"], "m");

    let mut bad = small();
    bad.as_object_mut().unwrap().remove("m");
    let (_, body) = call(&app, Method::POST, "/v1/sessions", Some(bad)).await;
    assert_eq!(body["field"], "m");

    let mut bad = small();
    bad["oracle"] = json!({"kappa": 10});
    let (status, body) = call(&app, Method::POST, "/v1/sessions", Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["field"], "oracle");

    let (status, body) = call(&app, Method::GET, "/v1/sessions/s424242", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "not_found");
    let (status, _) = call(&app, Method::GET, "/v1/sessions/s424242/population", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn a_session_over_http() {
    let app = router(Arc::new(SessionManager::in_memory()));
    let (status, created) = call(&app, Method::POST, "/v1/sessions", Some(small())).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["id"].as_str().unwrap().to_string();
    let (status, other) = call(&app, Method::POST, "/v1/sessions", Some(small())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_ne!(other["id"], created["id"]);

    let (_, population) = call(&app, Method::GET, &format!("/v1/sessions/{id}/population"), None).await;
    assert_eq!(population["members"].as_array().unwrap().len(), 20);

    let q = pending_query(&app, &id).await.unwrap();
    assert_eq!(q["pair_index"], 0);
    assert_eq!(q["total"], 6);
    assert_eq!(q["fi"].as_array().unwrap().len(), 3);

    let judgment = format!("/v1/sessions/{id}/judgment");
    let (status, ack) = call(
        &app,
        Method::POST,
        &judgment,
        Some(json!({"pair_index": 0, "outcome": "better"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack["answered"], 1);
    let (status, body) = call(
        &app,
        Method::POST,
        &judgment,
        Some(json!({"pair_index": 0, "outcome": "worse"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "conflict");
    let (status, body) = call(
        &app,
        Method::POST,
        &judgment,
        Some(json!({"pair_index": 1, "outcome": "maybe"})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["field"], "outcome");

    let (_, state) = call(&app, Method::GET, &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(state["phase"], "awaiting_judgment");
    assert_eq!(state["judgments"], 1);
    assert_eq!(state["pending"]["answered"], 1);

    // answer the rest of the run
    while let Some(q) = pending_query(&app, &id).await {
        let answer = json!({"pair_index": q["pair_index"], "outcome": "indifferent"});
        let (status, _) = call(&app, Method::POST, &judgment, Some(answer)).await;
        assert_eq!(status, StatusCode::OK);
    }
    let (_, state) = call(&app, Method::GET, &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(state["judgments"], 30);
    assert_eq!(state["fe_used"], 400);
    let (_, q) = call(&app, Method::GET, &format!("/v1/sessions/{id}/query"), None).await;
    assert!(q["query"].is_null());
    let (status, _) = call(&app, Method::DELETE, &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let other = other["id"].as_str().unwrap();
    let (status, aborted) = call(&app, Method::DELETE, &format!("/v1/sessions/{other}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(aborted["phase"], "aborted");

    let (_, list) = call(&app, Method::GET, "/v1/sessions", None).await;
    let phases: Vec<&str> = list["sessions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["phase"].as_str().unwrap())
        .collect();
    assert_eq!(phases, ["finished", "aborted"]);
}
