use std::sync::OnceLock;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use edgar_core::synth::ad_fixture;
use edgar_core::{Curie, PipelineConfig, ResultMessage, Store, Template};
use edgar_service::{content_hash, router, AppState, ErrorBody, HASH_HEADER, TIMINGS_HEADER};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn store() -> &'static Store {
    static STORE: OnceLock<Store> = OnceLock::new();
    STORE.get_or_init(|| ad_fixture().store().unwrap())
}

fn state() -> AppState {
    AppState::new(store().clone(), PipelineConfig::default())
}

struct Reply {
    status: StatusCode,
    hash: Option<String>,
    timings: Option<String>,
    body: Vec<u8>,
}

async fn call(method: Method, uri: &str, body: &[u8]) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_vec()))
        .unwrap();
    let resp = router(state()).oneshot(req).await.unwrap();
    let header = |name: &str| {
        resp.headers()
            .get(name)
            .map(|v| v.to_str().unwrap().to_owned())
    };
    let (hash, timings) = (header(HASH_HEADER), header(TIMINGS_HEADER));
    let status = resp.status();
    let body = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    Reply {
        status,
        hash,
        timings,
        body,
    }
}

fn ad_query() -> Vec<u8> {
    Template::DrugTreatsDisease
        .request(&Curie::new("MONDO:0004975").unwrap())
        .to_json_bytes()
}

#[tokio::test]
async fn health_reports_counts() {
    let r = call(Method::GET, "/v1/health", b"").await;
    assert_eq!(r.status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(v["node_count"], store().stats().node_count);
    assert_eq!(v["edge_count"], store().stats().edge_count);
    assert_eq!(r.hash.unwrap(), content_hash(&r.body));
}

#[tokio::test]
async fn meta_echoes_config() {
    let r = call(Method::GET, "/v1/meta", b"").await;
    assert_eq!(r.status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(v["config"]["p0"], 1e-5);
    assert_eq!(v["config"]["max_rules"], 1000);
    assert_eq!(v["templates"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn ad_query_round_trip() {
    let r = call(Method::POST, "/v1/query", &ad_query()).await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.timings.unwrap().starts_with("lookup="));
    let msg: ResultMessage = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(msg.meta.lookup_n, 14);
    assert_eq!(msg.meta.rules_post_filter, msg.rules.len());
    assert!(msg.meta.runtime_ms.is_none());
    assert!(msg
        .results
        .windows(2)
        .all(|w| (w[0].best_p_raw, &w[0].node_binding) <= (w[1].best_p_raw, &w[1].node_binding)));
    // an auditor can re-check every enrichment against the store
    for res in &msg.results {
        for e in &res.enrichments {
            assert!(e
                .rule
                .members
                .iter()
                .all(|m| msg.meta.lookup.iter().any(|l| &l.id == m)));
        }
    }
}

#[tokio::test]
async fn identical_requests_identical_bytes() {
    let a = call(Method::POST, "/v1/query", &ad_query()).await;
    let b = call(Method::POST, "/v1/query", &ad_query()).await;
    assert_eq!(a.body, b.body);
    assert_eq!(a.hash, b.hash);
}

#[tokio::test]
async fn options_override_threshold() {
    let body = br#"{"message":{"query_graph":{"nodes":{"n0":{"ids":["MONDO:0004975"],"categories":["biolink:Disease"]},"n1":{"categories":["biolink:Drug"]}},"edges":{"e0":{"subject":"n1","object":"n0","predicates":["biolink:treats"]}}}},"options":{"p0":1e-300}}"#;
    let r = call(Method::POST, "/v1/query", body).await;
    assert_eq!(r.status, StatusCode::OK);
    let msg: ResultMessage = serde_json::from_slice(&r.body).unwrap();
    assert!(msg.rules.is_empty() && msg.results.is_empty());
    assert_eq!(msg.meta.lookup_n, 14);
}

#[tokio::test]
async fn invalid_query_lists_every_violation() {
    let body = br#"{"message":{"query_graph":{"nodes":{"n0":{"ids":["MONDO:0004975"]},"n1":{"ids":["MONDO:1"]}},"edges":{"e0":{"subject":"n1","object":"n0","predicates":[]}}}}}"#;
    let r = call(Method::POST, "/v1/query", body).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let err: ErrorBody = serde_json::from_slice(&r.body).unwrap();
    assert!(err.errors.len() >= 2, "{:?}", err.errors);
    assert!(err
        .errors
        .iter()
        .any(|e| e.contains("exactly one pinned node")));

    let r = call(Method::POST, "/v1/query", b"{not json").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_curie_is_404() {
    let body = Template::DrugTreatsDisease
        .request(&Curie::new("MONDO:9999999").unwrap())
        .to_json_bytes();
    let r = call(Method::POST, "/v1/query", &body).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let err: ErrorBody = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(err.stage.as_deref(), Some("lookup"));
    assert!(err.errors[0].contains("MONDO:9999999"));
}

#[tokio::test]
async fn resolve_names() {
    let r = call(
        Method::POST,
        "/v1/resolve",
        br#"{"text":"Alzheimer","limit":5}"#,
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(
        v["matches"],
        serde_json::json!([{"curie":"MONDO:0004975","name":"Alzheimer disease","match_kind":"prefix"}])
    );
    let r = call(Method::POST, "/v1/resolve", br#"{"text":"PHYSOSTIGMINE"}"#).await;
    let v: Value = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(v["matches"][0]["curie"], "CHEBI:27953");
    assert_eq!(v["matches"][0]["match_kind"], "exact");
    let r = call(Method::POST, "/v1/resolve", br#"{"text":""}"#).await;
    let v: Value = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(v["matches"], serde_json::json!([]));
    let r = call(Method::POST, "/v1/resolve", br#"{"text":"x","limit":0}"#).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unversioned_paths_are_not_served() {
    assert_eq!(
        call(Method::GET, "/health", b"").await.status,
        StatusCode::NOT_FOUND
    );
}
