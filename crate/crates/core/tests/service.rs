//! HTTP interface of the planning service.

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use samplan::examples_data::customer_quote;
use samplan::service::{router, AppState, Repository, ServiceLimits};
use serde_json::{json, Value};
use std::sync::Arc;
use tower::ServiceExt;

fn app() -> axum::Router {
    let repo = Repository::new(vec![customer_quote()]).unwrap();
    router(Arc::new(AppState { repo, limits: ServiceLimits::default() }))
}

async fn call(method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn cq_goal() -> Value {
    json!({"object": "CQ", "goal": [
        {"var": "followUp", "val": "documentCreated"},
        {"var": "archiving", "val": "archived"}
    ]})
}

#[tokio::test]
async fn lists_and_describes_objects() {
    let (status, body) = call("GET", "/objects", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body[0]["id"], "CQ");
    assert_eq!(body[0]["variables"].as_array().unwrap().len(), 7);

    let (status, body) = call("GET", "/objects/CQ", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["model"]["actions"].as_array().unwrap().len(), 8);

    let (status, body) = call("GET", "/objects/XX", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].is_string());
}

#[tokio::test]
async fn plans_customer_quote() {
    let (status, body) = call("POST", "/plan", Some(cq_goal())).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["verdict"], "plan");
    assert_eq!(body["semantics"], "weak");
    let tasks = body["process"]["nodes"].as_array().unwrap().iter().filter(|n| n["kind"] == "task").count();
    assert_eq!(tasks, 8);

    let mut strong = cq_goal();
    strong["config"] = json!({"mode": "strong"});
    let (status, body) = call("POST", "/plan", Some(strong)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["verdict"], "unsolvable");
    assert!(body["plan"].is_null());
}

#[tokio::test]
async fn validates_returned_plans() {
    let (_, planned) = call("POST", "/plan", Some(cq_goal())).await;
    let mut req = cq_goal();
    req["plan"] = planned["plan"].clone();
    req["semantics"] = json!("weak");
    let (status, body) = call("POST", "/validate", Some(req.clone())).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["valid"], true);
    assert_eq!(body["fail_leaves"], 3);

    req["semantics"] = json!("strong");
    let (_, body) = call("POST", "/validate", Some(req)).await;
    assert_eq!(body["valid"], false);
    assert!(body["violation"]["path"].as_str().unwrap().starts_with("root/"));
}

#[tokio::test]
async fn rejects_bad_requests() {
    let (status, body) = call("POST", "/plan", Some(json!({"object": "CQ", "goal": [], "bogus": 1}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("bogus"), "{body}");

    let (status, _) = call("POST", "/plan", Some(json!({"object": "XX", "goal": []}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let bad_goal = json!({"object": "CQ", "goal": [{"var": "followUp", "val": "lost"}]});
    let (status, _) = call("POST", "/plan", Some(bad_goal)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let mut bad_config = cq_goal();
    bad_config["config"] = json!({"weight": 0});
    let (status, _) = call("POST", "/plan", Some(bad_config)).await;
    assert!(status.is_client_error());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_plan_requests() {
    let handles: Vec<_> = (0..16).map(|_| tokio::spawn(call("POST", "/plan", Some(cq_goal())))).collect();
    for h in handles {
        let (status, body) = h.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["verdict"], "plan");
    }
}
