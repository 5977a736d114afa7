mod common;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;

use common::fixture;
use linkcoref_cli::args::ServeArgs;
use linkcoref_cli::server::{router, ExportSummary};

fn app(store: &std::path::Path) -> Router {
    let args = ServeArgs {
        candidates: fixture("validation/candidates.jsonl"),
        store: store.to_path_buf(),
        port: 0,
        host: "127.0.0.1".into(),
        consolidator: "consolidator".into(),
        train: Some(fixture("validation/train.jsonl")),
        export_dir: Some(store.join("out")),
        compact_after: 4,
    };
    router(linkcoref_cli::serve_state(&args).unwrap())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<serde_json::Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<serde_json::Value>,
) -> (StatusCode, serde_json::Value) {
    let (s, b) = call(app, method, uri, body).await;
    (
        s,
        if b.is_empty() {
            serde_json::Value::Null
        } else {
            serde_json::from_slice(&b).unwrap()
        },
    )
}

fn verdict(task: u64, who: &str, valid: bool) -> serde_json::Value {
    if valid {
        serde_json::json!({"task_id": task, "annotator_id": who, "verdict": "valid"})
    } else {
        serde_json::json!({"task_id": task, "annotator_id": who, "verdict": "rejected", "reject_reason": "event_time"})
    }
}

#[tokio::test]
async fn annotation_round() {
    let tmp = tempfile::tempdir().unwrap();
    let app = app(tmp.path());

    let (s, task) = json(&app, "GET", "/tasks/next?annotator=ann1", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(task["task_id"], 0);
    assert_eq!(task["status"], "pending");
    assert!(task["mention"]["tokens"].is_array());

    let (s, ack) = json(&app, "POST", "/judgments", Some(verdict(0, "ann1", true))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(ack["seq"], 1);
    assert_eq!(ack["superseded"], false);

    let (_, ack) = json(&app, "POST", "/judgments", Some(verdict(0, "ann1", false))).await;
    assert_eq!(ack["superseded"], true);

    let (_, task) = json(&app, "GET", "/tasks/next?annotator=ann1", None).await;
    assert_eq!(task["task_id"], 1);
    // another annotator still starts at the beginning
    let (_, task) = json(&app, "GET", "/tasks/next?annotator=ann2&split=test", None).await;
    assert_eq!(task["split"], "test");

    let (s, progress) = json(&app, "GET", "/progress", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(progress["total"], 10);
    assert_eq!(progress["judged"], 1);
    assert_eq!(progress["by_annotator"]["ann1"], 1);
}

#[tokio::test]
async fn errors_carry_a_kind_and_status() {
    let tmp = tempfile::tempdir().unwrap();
    let app = app(tmp.path());

    let (s, e) = json(&app, "GET", "/tasks/999", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(e["error"], "unknown_task");

    // a rejection needs a reason
    let bad = serde_json::json!({"task_id": 0, "annotator_id": "a", "verdict": "rejected"});
    let (s, e) = json(&app, "POST", "/judgments", Some(bad)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(e["error"], "invalid_judgment");

    let (s, _) = call(&app, "POST", "/judgments", Some(serde_json::json!({"nonsense": true}))).await;
    assert!(s.is_client_error());

    let (s, e) = json(&app, "POST", "/export?split=dev", None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(e["error"], "unjudged_tasks");

    let (s, _) = json(&app, "POST", "/export?split=train", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, e) = json(&app, "GET", "/agreement?annotator=nobody", None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(e["error"], "task_mismatch");
}

#[tokio::test]
async fn export_after_consolidation() {
    let tmp = tempfile::tempdir().unwrap();
    let app = app(tmp.path());
    for t in 0..10 {
        let (s, _) = json(
            &app,
            "POST",
            "/judgments",
            Some(verdict(t, "consolidator", t != 1 && t != 7)),
        )
        .await;
        assert_eq!(s, StatusCode::OK);
        json(&app, "POST", "/judgments", Some(verdict(t, "ann1", t != 1))).await;
    }
    let (s, body) = json(&app, "POST", "/export?split=dev", None).await;
    assert_eq!(s, StatusCode::OK);
    let dev: ExportSummary = serde_json::from_value(body).unwrap();
    assert_eq!(
        (dev.candidates, dev.valid, dev.rejected, dev.exported_mentions),
        (6, 5, 1, 5)
    );
    let (_, body) = json(&app, "POST", "/export?split=test", None).await;
    let test: ExportSummary = serde_json::from_value(body).unwrap();
    assert_eq!(test.exported_mentions, 3);
    assert!(test.train_removed.unwrap() > 0);

    let out = tmp.path().join("out");
    let count = |f: &str| std::fs::read_to_string(out.join(f)).unwrap().lines().count();
    assert_eq!(count("dev.jsonl") + count("test.jsonl"), 8);
    assert_eq!(count("train.jsonl") as u64 + test.train_removed.unwrap(), 12);

    // ann1 disagrees with the consolidator on task 7 only
    let (s, a) = json(&app, "GET", "/agreement?annotator=ann1", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(a["tasks"], 10);
    assert_eq!(a["false_positive"], 1);
    assert_eq!(a["true_negative"], 1);

    // everything judged: no next task
    let (s, _) = call(&app, "GET", "/tasks/next?annotator=consolidator", None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
}

#[tokio::test]
async fn judgments_survive_a_restart() {
    let tmp = tempfile::tempdir().unwrap();
    {
        let app = app(tmp.path());
        for t in 0..6 {
            json(&app, "POST", "/judgments", Some(verdict(t, "ann1", true))).await;
        }
    }
    let app = app(tmp.path());
    let (_, progress) = json(&app, "GET", "/progress", None).await;
    assert_eq!(progress["judged"], 6);
    let (_, ack) = json(&app, "POST", "/judgments", Some(verdict(6, "ann1", true))).await;
    assert_eq!(ack["seq"], 7);
}

#[tokio::test]
async fn guidelines_are_served() {
    let tmp = tempfile::tempdir().unwrap();
    let (s, body) = call(&app(tmp.path()), "GET", "/guidelines", None).await;
    assert_eq!(s, StatusCode::OK);
    let text = String::from_utf8(body).unwrap();
    assert!(text.contains("event_location"));
}
