mod common;

use std::collections::BTreeMap;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use release_gate::model::ActorId;
use release_gate::service::{router, MutationResponse};
use serde_json::Value;
use tower::ServiceExt;

use common::{copy_fixture, fixture_upto, journal_len, tree};

fn tokens() -> BTreeMap<String, ActorId> {
    [("chair", "rc-chair"), ("auditor", "ca-auditor"), ("lift-dev", "fd-lift"), ("engineer", "se-lead")]
        .into_iter()
        .map(|(t, a)| (t.to_string(), ActorId::new(a)))
        .collect()
}

async fn call(app: &Router, method: &str, uri: &str, token: Option<&str>, body: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty)).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn decision(stage: u8) -> String {
    format!(r#"{{"prototype":"PRO-0003","stage":{stage},"verdict":"Granted","conditions":"closed track"}}"#)
}

#[tokio::test]
async fn committee_grants_the_ready_stage() {
    let dir = fixture_upto(16);
    let app = router(dir.path(), tokens());
    let (status, body) = call(&app, "POST", "/api/decisions", Some("chair"), Some(&decision(3))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let res: MutationResponse = serde_json::from_value(body).unwrap();
    assert_eq!(res.event.seq, 17);
    assert_eq!(res.prototype.granted.len(), 3);
    assert_eq!(journal_len(dir.path()), 17);
    assert!(dir.path().join("decisions/DEC-0006.json").exists());
}

#[tokio::test]
async fn developer_token_is_forbidden() {
    let dir = fixture_upto(16);
    let before = tree(dir.path());
    let app = router(dir.path(), tokens());
    let (status, body) = call(&app, "POST", "/api/decisions", Some("lift-dev"), Some(&decision(3))).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["required_role"], "ReleaseCommittee");
    assert_eq!(tree(dir.path()), before);
}

#[tokio::test]
async fn skipping_a_stage_conflicts() {
    let dir = fixture_upto(16);
    let before = tree(dir.path());
    let app = router(dir.path(), tokens());
    let (status, body) = call(&app, "POST", "/api/decisions", Some("chair"), Some(&decision(5))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["reason"], "GradualGating");
    assert_eq!(body["missing"], 4);
    assert_eq!(tree(dir.path()), before);
}

#[tokio::test]
async fn blocked_stage_carries_its_readiness() {
    // stage 4 granted, lift not yet released
    let dir = fixture_upto(20);
    let app = router(dir.path(), tokens());
    let (status, body) = call(
        &app,
        "POST",
        "/api/reviews",
        Some("auditor"),
        Some(r#"{"prototype":"PRO-0003","stage":5,"recommendation":"For"}"#),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (status, body) = call(&app, "POST", "/api/decisions", Some("chair"), Some(&decision(5))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["reason"], "Blocked");
    let issues = body["readiness"]["issues"].as_array().unwrap();
    assert_eq!(issues.len(), 1, "{body}");
    assert_eq!(issues[0]["category"], "MissingModule");
}

#[tokio::test]
async fn missing_or_unknown_token_is_unauthorized() {
    let dir = copy_fixture();
    let app = router(dir.path(), tokens());
    assert_eq!(call(&app, "GET", "/api/prototypes", None, None).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(call(&app, "GET", "/api/prototypes", Some("guess"), None).await.0, StatusCode::UNAUTHORIZED);
    let (status, _) = call(&app, "POST", "/api/decisions", Some("guess"), Some(&decision(3))).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn malformed_bodies_are_unprocessable() {
    let dir = fixture_upto(16);
    let before = tree(dir.path());
    let app = router(dir.path(), tokens());
    for body in [
        r#"{"prototype":"PRO-0003","stage":3,"verdict":"Maybe"}"#,
        r#"{"prototype":"PRO-0003","stage":9,"verdict":"Granted"}"#,
        r#"{"prototype":"PRO-0099","stage":3,"verdict":"Granted"}"#,
        r#"{"prototype":"PRO-0003","stage":3,"verdict":"Granted","extra":1}"#,
        r#"{"stage":3"#,
    ] {
        let (status, res) = call(&app, "POST", "/api/decisions", Some("chair"), Some(body)).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body} -> {res}");
        assert!(res["error"].is_string());
    }
    let (_, res) = call(
        &app,
        "POST",
        "/api/decisions",
        Some("chair"),
        Some(r#"{"prototype":"PRO-0003","stage":3,"verdict":"Maybe"}"#),
    )
    .await;
    assert_eq!(res["field"], "verdict", "{res}");
    assert_eq!(tree(dir.path()), before);
}

#[tokio::test]
async fn reads_never_mutate() {
    let dir = copy_fixture();
    let before = tree(dir.path());
    let app = router(dir.path(), tokens());
    for uri in [
        "/api/prototypes",
        "/api/readiness/PRO-0003/5",
        "/api/readiness/PRO-0001/1",
        "/api/hazard-log",
        "/api/traceability",
        "/api/document/PRO-0003/5",
        "/api/journal",
    ] {
        let (status, body) = call(&app, "GET", uri, Some("lift-dev"), None).await;
        assert_eq!(status, StatusCode::OK, "{uri}: {body}");
    }
    assert_eq!(tree(dir.path()), before);
}

#[tokio::test]
async fn read_models() {
    let dir = copy_fixture();
    let app = router(dir.path(), tokens());

    let (_, protos) = call(&app, "GET", "/api/prototypes", Some("chair"), None).await;
    assert_eq!(protos.as_array().unwrap().len(), 4);

    let (_, ready) = call(&app, "GET", "/api/readiness/PRO-0001/1", Some("chair"), None).await;
    assert_eq!(ready["issues"].as_array().unwrap().len(), 8);

    let (_, log) = call(&app, "GET", "/api/hazard-log", Some("chair"), None).await;
    assert_eq!(log["entries"].as_array().unwrap().len(), 4);
    assert_eq!(log["summary"]["total"], 4);

    let (_, trace) = call(&app, "GET", "/api/traceability", Some("chair"), None).await;
    assert_eq!(trace["chains"].as_array().unwrap().len(), 6);

    let (_, doc) = call(&app, "GET", "/api/document/PRO-0003/5", Some("chair"), None).await;
    assert!(doc["content_digest"].as_str().unwrap().starts_with("sha256:"));

    let (_, journal) = call(&app, "GET", "/api/journal", Some("chair"), None).await;
    assert_eq!(journal.as_array().unwrap().len(), 25);

    let (status, _) = call(&app, "GET", "/api/readiness/PRO-0003/7", Some("chair"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

fn stage5_cell(protos: &Value) -> Value {
    let family = protos.as_array().unwrap().iter().find(|p| p["id"] == "PRO-0003").unwrap();
    family["cells"][4].clone()
}

#[tokio::test]
async fn pending_fixture_flips_from_ready_to_granted() {
    let dir = common::copy_dir(&common::fixture_dir().with_file_name("unicaragil-stage5-pending"));
    let app = router(dir.path(), tokens());
    let (_, protos) = call(&app, "GET", "/api/prototypes", Some("chair"), None).await;
    assert_eq!(stage5_cell(&protos)["status"], "Ready");

    let (status, body) = call(&app, "POST", "/api/decisions", Some("chair"), Some(&decision(5))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["prototype"]["cells"][4]["status"], "Granted");

    // read-your-writes
    let (_, protos) = call(&app, "GET", "/api/prototypes", Some("chair"), None).await;
    assert_eq!(stage5_cell(&protos)["status"], "Granted");
    let (_, journal) = call(&app, "GET", "/api/journal", Some("chair"), None).await;
    assert_eq!(journal.as_array().unwrap().len(), 25);
}

#[tokio::test]
async fn deleted_lift_release_blocks_stage_five_once() {
    let dir = common::copy_dir(&common::fixture_dir().with_file_name("unicaragil-stage5-pending"));
    std::fs::remove_file(dir.path().join("component-releases/CRD-0004.json")).unwrap();
    let app = router(dir.path(), tokens());
    let (_, protos) = call(&app, "GET", "/api/prototypes", Some("chair"), None).await;
    let cell = stage5_cell(&protos);
    assert_eq!((cell["status"].as_str(), cell["issues"].as_u64()), (Some("Blocked"), Some(1)));
    let (_, ready) = call(&app, "GET", "/api/readiness/PRO-0003/5", Some("chair"), None).await;
    assert!(ready["issues"][0]["message"].as_str().unwrap().contains("boarding assistance (lift)"), "{ready}");
}

#[tokio::test]
async fn identical_states_give_identical_bytes() {
    let dir = copy_fixture();
    let app = router(dir.path(), tokens());
    for uri in ["/api/prototypes", "/api/hazard-log", "/api/traceability", "/api/document/PRO-0003/4", "/api/journal"] {
        let fetch = || async {
            let req = Request::get(uri).header("authorization", "Bearer auditor").body(Body::empty()).unwrap();
            app.clone().oneshot(req).await.unwrap().into_body().collect().await.unwrap().to_bytes()
        };
        assert_eq!(fetch().await, fetch().await, "{uri}");
    }
}
