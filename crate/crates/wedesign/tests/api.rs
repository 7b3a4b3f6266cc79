use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use wedesign::api::router;
use wedesign::fixtures;
use wedesign::session::{Endpoint, OutcomeBatch, TrialSession};
use wedesign::store::FileStore;

struct Client {
    app: Router,
    _dir: tempfile::TempDir,
}

impl Client {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let app = router(FileStore::open(dir.path()).unwrap());
        Self { app, _dir: dir }
    }

    async fn send(&self, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value, Vec<u8>) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map(Body::from).unwrap_or_else(Body::empty))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
        (status, value, bytes)
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value, Vec<u8>) {
        self.send("GET", uri, None).await
    }

    async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        let (s, v, _) = self.send("POST", uri, Some(body.to_string())).await;
        (s, v)
    }

    async fn create(&self, config: &str) -> String {
        let (status, v, _) = self.send("POST", "/trials", Some(config.to_string())).await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        v["id"].as_str().unwrap().to_string()
    }
}

fn motivating() -> &'static str {
    fixtures::CONFIGS[1].1
}

fn outcomes(cohort: usize, endpoint: &str, values: Value, rev: u64) -> Value {
    json!({ "cohort": cohort, "endpoint": endpoint, "outcomes": values, "expected_revision": rev })
}

#[tokio::test]
async fn create_then_read() {
    let c = Client::new();
    let (status, v, _) = c.send("POST", "/trials", Some(motivating().to_string())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["revision"], 0);
    assert_eq!(v["recommendation"]["status"], "open");
    assert_eq!(v["recommendation"]["regimen"], 1);
    assert_eq!(v["recommendation"]["cohort"], 1);
    assert_eq!(v["recommendation"]["trace"]["regimens"].as_array().unwrap().len(), 6);
    let id = v["id"].as_str().unwrap();

    let (status, got, _) = c.get(&format!("/trials/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(got["config"], v["config"]);
    assert_eq!(got["recommendation"], v["recommendation"]);
}

#[tokio::test]
async fn recommendation_reads_are_byte_identical() {
    let c = Client::new();
    let id = c.create(motivating()).await;
    let uri = format!("/trials/{id}/recommendation");
    let (s1, _, a) = c.get(&uri).await;
    let (s2, _, b) = c.get(&uri).await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    assert_eq!(a, b);
}

#[tokio::test]
async fn outcomes_advance_the_revision() {
    let c = Client::new();
    let id = c.create(motivating()).await;
    let uri = format!("/trials/{id}/outcomes");
    let (status, rec) = c.post(&uri, outcomes(1, "toxicity", json!([false, false]), 0)).await;
    assert_eq!(status, StatusCode::OK, "{rec}");
    assert_eq!(rec["revision"], 1);
    assert_eq!(rec["regimen"], 1);

    let (status, err) = c.post(&uri, outcomes(2, "toxicity", json!([false, false]), 0)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "revision_conflict");
    assert_eq!(err["details"], json!({ "expected": 0, "actual": 1 }));
    let (_, view, _) = c.get(&format!("/trials/{id}")).await;
    assert_eq!(view["revision"], 1);

    let (status, rec) = c.post(&uri, outcomes(1, "efficacy", json!([true, null]), 1)).await;
    assert_eq!(status, StatusCode::OK, "{rec}");
    assert_eq!(rec["revision"], 2);
}

#[tokio::test]
async fn error_statuses() {
    let c = Client::new();
    let (status, err, _) = c.get("/trials/0123456789abcdef").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "not_found");
    for key in ["code", "message", "details"] {
        assert!(err.get(key).is_some(), "missing {key}");
    }

    let (status, err) = c.post("/trials", json!({ "not": "a config" })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["code"], "bad_request");

    let mut cfg: Value = serde_json::from_str(motivating()).unwrap();
    cfg["max_patients"] = json!(35);
    let (status, err) = c.post("/trials", cfg).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "invalid_config");
    assert!(err["details"]["problems"][0].as_str().unwrap().contains("divisible"));

    let id = c.create(motivating()).await;
    let uri = format!("/trials/{id}/outcomes");
    let (status, err) = c.post(&uri, outcomes(3, "toxicity", json!([false, false]), 0)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "engine_rejected");
    let (status, err) = c.post(&uri, outcomes(1, "toxicity", json!([false, null]), 0)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "malformed");
    let (status, _) = c.post(&uri, outcomes(1, "dose", json!([false, false]), 0)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn whatif_leaves_the_trial_alone() {
    let c = Client::new();
    let id = c.create(motivating()).await;
    let (_, before, bytes_before) = c.get(&format!("/trials/{id}")).await;

    let (status, empty) = c.post(&format!("/trials/{id}/whatif"), json!({ "batches": [] })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(empty, before["recommendation"]);

    let batch = json!({ "batches": [{ "cohort": 1, "endpoint": "toxicity", "outcomes": [true, true] }] });
    let (status, hypo) = c.post(&format!("/trials/{id}/whatif"), batch).await;
    assert_eq!(status, StatusCode::OK, "{hypo}");
    assert_eq!(hypo["revision"], 0);
    let (_, _, bytes_after) = c.get(&format!("/trials/{id}")).await;
    assert_eq!(bytes_before, bytes_after);

    let (status, rec) = c.post(&format!("/trials/{id}/outcomes"), outcomes(1, "toxicity", json!([true, true]), 0)).await;
    assert_eq!(status, StatusCode::OK);
    let mut rec = rec;
    rec["revision"] = json!(0);
    assert_eq!(rec, hypo);
}

#[tokio::test]
async fn api_matches_the_session_used_directly() {
    let c = Client::new();
    let id = c.create(motivating()).await;
    let stored: TrialSession = serde_json::from_value(c.get(&format!("/trials/{id}")).await.1).unwrap();
    let mut direct = TrialSession::create(stored.config.clone()).unwrap();

    let script: Vec<(usize, Endpoint, Vec<Option<bool>>)> = vec![
        (1, Endpoint::Toxicity, vec![Some(false), Some(false)]),
        (2, Endpoint::Toxicity, vec![Some(false), Some(true)]),
        (1, Endpoint::Efficacy, vec![Some(true), Some(false)]),
        (3, Endpoint::Toxicity, vec![Some(false), Some(false)]),
        (2, Endpoint::Efficacy, vec![Some(true), None]),
        (4, Endpoint::Toxicity, vec![Some(true), Some(false)]),
        (3, Endpoint::Efficacy, vec![Some(false), Some(true)]),
        (5, Endpoint::Toxicity, vec![Some(false), Some(false)]),
    ];
    for (rev, (cohort, endpoint, values)) in script.into_iter().enumerate() {
        let batch = OutcomeBatch { cohort, endpoint, outcomes: values };
        // reading first fixes the draw on both sides
        let via_api = c.get(&format!("/trials/{id}/recommendation")).await.1;
        direct.fix_draw();
        assert_eq!(via_api, serde_json::to_value(direct.recommendation().unwrap()).unwrap());

        let mut body = serde_json::to_value(&batch).unwrap();
        body["expected_revision"] = json!(rev);
        let (status, via_api) = c.post(&format!("/trials/{id}/outcomes"), body).await;
        assert_eq!(status, StatusCode::OK, "{via_api}");
        let direct_rec = direct.post_outcomes(&batch, rev as u64).unwrap();
        assert_eq!(via_api, serde_json::to_value(direct_rec).unwrap());
    }
    let stored: TrialSession = serde_json::from_value(c.get(&format!("/trials/{id}")).await.1).unwrap();
    assert_eq!(stored.state, direct.state);
    assert_eq!(stored.traces, direct.traces);
    let events = |s: &TrialSession| s.audit.iter().map(|e| e.event.clone()).collect::<Vec<_>>();
    assert_eq!(events(&stored), events(&direct));
}
