//! Drives the review API in-process: a committee decision for stage 3, a
//! developer attempting the same, and a stage skip.

use std::collections::BTreeMap;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use release_gate::fixture;
use release_gate::model::ActorId;
use release_gate::service::router;
use release_gate::store;
use tower::ServiceExt;

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("release-gate-service-{}", std::process::id()));
    let mut repo = fixture::unicaragil();
    // stop right after the stage-3 release document was compiled
    repo.journal.truncate(16);
    let state = release_gate::workflow::replay(&repo.journal, &repo)?;
    release_gate::actions::sync_projections(&mut repo, &state);
    repo.root = dir.clone();
    store::save(&repo)?;

    let tokens: BTreeMap<String, ActorId> = [
        ("committee-token".to_string(), ActorId::new("rc-chair")),
        ("developer-token".to_string(), ActorId::new("fd-lift")),
    ]
    .into();
    let app = router(&dir, tokens);

    for (token, stage) in [("developer-token", 3), ("committee-token", 5), ("committee-token", 3)] {
        let body =
            format!(r#"{{"prototype":"PRO-0003","stage":{stage},"verdict":"Granted","conditions":"daylight only"}}"#);
        let req = Request::post("/api/decisions")
            .header("authorization", format!("Bearer {token}"))
            .header("content-type", "application/json")
            .body(Body::from(body))?;
        let res = app.clone().oneshot(req).await?;
        let status = res.status();
        let bytes = res.into_body().collect().await?.to_bytes();
        println!("{token} stage {stage} -> {status}\n{}", String::from_utf8_lossy(&bytes));
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
