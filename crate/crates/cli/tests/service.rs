use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use chorda_cli::service::router;
use chorda_cli::store::Store;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn pct() -> String {
    fs::read_to_string(corpus("pct.chorda")).unwrap()
}

struct Reply {
    status: StatusCode,
    etag: Option<String>,
    content_type: Option<String>,
    body: String,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }
}

async fn send(app: &Router, method: Method, uri: &str, headers: &[(&str, &str)], body: impl Into<Body>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let resp = app.clone().oneshot(req.body(body.into()).unwrap()).await.unwrap();
    let status = resp.status();
    let (etag, content_type) = {
        let h = resp.headers();
        let text = |name| {
            h.get(name)
                .map(|v: &header::HeaderValue| v.to_str().unwrap().to_string())
        };
        (text(header::ETAG), text(header::CONTENT_TYPE))
    };
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    Reply {
        status,
        etag,
        content_type,
        body: String::from_utf8(bytes.to_vec()).unwrap(),
    }
}

async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Method::GET, uri, &[], Body::empty()).await
}

async fn post(app: &Router, uri: &str) -> Reply {
    send(app, Method::POST, uri, &[], Body::empty()).await
}

async fn put(app: &Router, id: &str, markup: &str, version: Option<u64>) -> Reply {
    let tag = version.map(|v| format!("\"{v}\""));
    let mut headers = vec![("content-type", "text/plain")];
    if let Some(t) = &tag {
        headers.push(("if-match", t.as_str()));
    }
    send(
        app,
        Method::PUT,
        &format!("/api/v1/documents/{id}"),
        &headers,
        markup.to_string(),
    )
    .await
}

fn app() -> (tempfile::TempDir, Router) {
    let dir = tempfile::tempdir().unwrap();
    let app = router(Store::open(dir.path()).unwrap());
    (dir, app)
}

fn cli(args: &[&str]) -> String {
    let o = Command::new(env!("CARGO_BIN_EXE_chorda")).args(args).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[tokio::test]
async fn put_then_get_is_byte_equal() {
    let (dir, app) = app();
    let text = pct();
    let r = put(&app, "pct", &text, None).await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.etag.as_deref(), Some("\"1\""));
    assert_eq!(r.json()["version"], 1);

    let r = get(&app, "/api/v1/documents/pct").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body, text);
    assert!(r.content_type.unwrap().starts_with("text/plain"));
    assert_eq!(fs::read_to_string(dir.path().join("pct.chorda")).unwrap(), text);

    let r = send(
        &app,
        Method::GET,
        "/api/v1/documents/pct",
        &[("accept", "application/json")],
        Body::empty(),
    )
    .await;
    let v = r.json();
    assert_eq!(v["markup"], text.as_str());
    assert_eq!(v["document"]["participants"].as_array().unwrap().len(), 5);
    assert_eq!(v["statementSpans"]["s1"]["line"], 15);

    assert_eq!(
        get(&app, "/api/v1/documents").await.json(),
        json!({ "documents": ["pct"] })
    );
}

#[tokio::test]
async fn versions_and_conflicts() {
    let (_dir, app) = app();
    let text = pct();
    assert_eq!(put(&app, "d", &text, None).await.status, StatusCode::CREATED);
    let r = put(&app, "d", &text, Some(1)).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.etag.as_deref(), Some("\"2\""));
    let r = put(&app, "d", &text, Some(1)).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["currentVersion"], 2);
    let r = send(
        &app,
        Method::PUT,
        "/api/v1/documents/d",
        &[("if-match", "W/\"2\"")],
        text.clone(),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    let r = send(
        &app,
        Method::PUT,
        "/api/v1/documents/d",
        &[("if-match", "bogus")],
        text.clone(),
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn concurrent_writers_with_one_version_serialize() {
    let (_dir, app) = app();
    let text = pct();
    put(&app, "d", &text, None).await;
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let app = app.clone();
            let text = text.clone();
            tokio::spawn(async move { put(&app, "d", &text, Some(1)).await.status })
        })
        .collect();
    let mut ok = 0;
    let mut conflicts = 0;
    for t in tasks {
        match t.await.unwrap() {
            StatusCode::OK => ok += 1,
            StatusCode::CONFLICT => conflicts += 1,
            other => panic!("unexpected {other}"),
        }
    }
    assert_eq!((ok, conflicts), (1, 15));
    assert_eq!(get(&app, "/api/v1/documents/d").await.etag.as_deref(), Some("\"2\""));
}

#[tokio::test]
async fn parse_errors_are_400_with_spans() {
    let (_dir, app) = app();
    let r = put(&app, "bad", "@chorda 1\n\n@statement id=s1 class=D\nno end\n", None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let v = r.json();
    assert_eq!(v["error"], "parse-error");
    assert_eq!(v["diagnostics"][0]["span"]["line"], 3);
    assert_eq!(get(&app, "/api/v1/documents/bad").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn unknown_and_invalid_ids() {
    let (_dir, app) = app();
    assert_eq!(
        get(&app, "/api/v1/documents/missing").await.status,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        post(&app, "/api/v1/documents/missing/skeleton").await.status,
        StatusCode::NOT_FOUND
    );
    assert_eq!(get(&app, "/api/v1/documents/a.b").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(
        get(&app, "/api/v1/documents/..%2Fetc").await.status,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn json_view_can_be_put() {
    let (_dir, app) = app();
    put(&app, "a", &pct(), None).await;
    let doc = send(
        &app,
        Method::GET,
        "/api/v1/documents/a",
        &[("accept", "application/json")],
        Body::empty(),
    )
    .await
    .json()["document"]
        .clone();
    let r = send(
        &app,
        Method::PUT,
        "/api/v1/documents/b",
        &[("content-type", "application/json")],
        doc.to_string(),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    assert_eq!(r.json()["document"], doc);
    let a = post(&app, "/api/v1/documents/a/skeleton").await.body;
    let b = post(&app, "/api/v1/documents/b/skeleton").await.body;
    assert_eq!(a, b);
}

#[tokio::test]
async fn classify_lists_issues_and_suggestions() {
    let (_dir, app) = app();
    put(&app, "pct", &pct(), None).await;
    let v = post(&app, "/api/v1/documents/pct/classify").await.json();
    assert_eq!(v["ready"], true);
    assert_eq!(v["suggestions"].as_array().unwrap().len(), 16);

    put(&app, "u", "@statement id=s1\nThe {{p:clerk}} files it.\n@end\n", None).await;
    let v = post(&app, "/api/v1/documents/u/classify").await.json();
    assert_eq!(v["ready"], false);
    assert_eq!(v["issues"][0]["kind"], "unclassified");
    assert_eq!(v["suggestions"][0]["suggested"], "Local");
    let r = post(&app, "/api/v1/documents/u/skeleton").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["error"], "not-ready");
}

#[tokio::test]
async fn service_artifacts_equal_cli_artifacts() {
    let (_dir, app) = app();
    put(&app, "pct", &pct(), None).await;
    let file = corpus("pct.chorda");
    let file = file.to_str().unwrap();
    for format in ["json", "xpdl", "svg"] {
        let r = post(&app, &format!("/api/v1/documents/pct/skeleton?format={format}")).await;
        assert_eq!(r.status, StatusCode::OK);
        assert_eq!(
            r.body,
            cli(&["skeleton", file, "--format", format]),
            "skeleton {format}"
        );
        let r = post(&app, &format!("/api/v1/documents/pct/expand?format={format}")).await;
        assert_eq!(r.status, StatusCode::OK);
        assert_eq!(
            r.body,
            cli(&["expand", file, "--bind-by-name", "--format", format]),
            "expand {format}"
        );
    }
    let r = get(&app, "/api/v1/documents/pct/diagram.svg?stage=skeleton").await;
    assert_eq!(r.content_type.as_deref(), Some("image/svg+xml"));
    assert_eq!(r.body, cli(&["skeleton", file, "--format", "svg"]));
    let r = get(&app, "/api/v1/documents/pct/diagram.svg").await;
    assert_eq!(r.body, cli(&["expand", file, "--bind-by-name", "--format", "svg"]));
    assert_eq!(
        post(&app, "/api/v1/documents/pct/skeleton?format=bpmn").await.status,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn coverage_by_stage() {
    let (_dir, app) = app();
    put(&app, "pct", &pct(), None).await;
    let v = get(&app, "/api/v1/documents/pct/coverage").await.json();
    assert_eq!(v["complete"], true);
    assert_eq!(v["documentationOnly"], json!(["s2", "s3"]));
    let v = get(&app, "/api/v1/documents/pct/coverage?stage=skeleton").await.json();
    assert_eq!(v["complete"], false);
    assert_eq!(v["uncovered"], json!(["s4", "s5", "s7", "s8", "s11", "s15"]));
}

#[tokio::test]
async fn explicit_bindings_drive_expansion() {
    let (dir, app) = app();
    put(&app, "pct", &pct(), None).await;
    let sk: Value = post(&app, "/api/v1/documents/pct/skeleton").await.json();
    let pools = sk["pools"].as_array().unwrap();
    let (office, target) = pools
        .iter()
        .find_map(|p| {
            p["nodes"].as_array().unwrap().iter().find_map(|n| {
                (n["name"] == "Process international application")
                    .then(|| (p["participantId"].clone(), n["id"].clone()))
            })
        })
        .expect("sub-process exists");

    // only one of the groups: expansion names the rest
    let one = json!([{ "participant": office, "groupPath": ["Process international application"], "target": target }]);
    let r = send(
        &app,
        Method::POST,
        "/api/v1/documents/pct/bindings",
        &[("if-match", "\"1\"")],
        one.to_string(),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.json()["mode"], "explicit");
    assert_eq!(r.etag.as_deref(), Some("\"2\""));
    assert!(dir.path().join("pct.bindings.json").exists());

    let r = post(&app, "/api/v1/documents/pct/expand").await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let v = r.json();
    assert_eq!(v["error"], "unresolved-groups");
    assert!(v["message"].as_str().unwrap().contains("Process search copy"));

    // stale version
    let r = send(
        &app,
        Method::POST,
        "/api/v1/documents/pct/bindings",
        &[("if-match", "1")],
        "{\"mode\":\"byName\"}",
    )
    .await;
    assert_eq!(r.status, StatusCode::CONFLICT);

    // a target that is not a sub-process
    let bad = json!([{ "participant": office, "groupPath": ["Process international application"], "target": "n1" }]);
    let r = send(
        &app,
        Method::POST,
        "/api/v1/documents/pct/bindings",
        &[],
        bad.to_string(),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(get(&app, "/api/v1/documents/pct/bindings").await.json()["version"], 2);

    let r = send(
        &app,
        Method::POST,
        "/api/v1/documents/pct/bindings",
        &[],
        "{\"mode\":\"byName\"}",
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(post(&app, "/api/v1/documents/pct/expand").await.status, StatusCode::OK);

    // the markup stays untouched by binding changes
    assert_eq!(get(&app, "/api/v1/documents/pct").await.body, pct());
}

#[tokio::test]
async fn state_survives_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    {
        let app = router(Store::open(dir.path()).unwrap());
        put(&app, "pct", &pct(), None).await;
        send(&app, Method::POST, "/api/v1/documents/pct/bindings", &[], "[]").await;
    }
    let app = router(Store::open(dir.path()).unwrap());
    let r = get(&app, "/api/v1/documents/pct/bindings").await;
    assert_eq!(r.json(), json!({ "mode": "explicit", "bindings": [], "version": 2 }));
    assert_eq!(get(&app, "/api/v1/documents/pct").await.body, pct());
}

#[tokio::test]
async fn every_documented_operation_is_routed() {
    let (_dir, app) = app();
    put(&app, "pct", &pct(), None).await;
    let spec = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/api.yaml")).unwrap();
    let paths = &spec[spec.find("\npaths:").unwrap()..spec.find("\ncomponents:").unwrap()];
    let mut path = None;
    let mut seen = 0;
    for line in paths.lines() {
        if let Some(p) = line.strip_prefix("  /").and_then(|p| p.strip_suffix(':')) {
            path = Some(format!("/{p}").replace("{id}", "pct"));
            continue;
        }
        let method = match line.trim_end() {
            "    get:" => Method::GET,
            "    put:" => Method::PUT,
            "    post:" => Method::POST,
            _ => continue,
        };
        let uri = path.clone().unwrap();
        let body = if method == Method::PUT {
            pct()
        } else if uri.ends_with("/bindings") {
            "[]".into()
        } else {
            String::new()
        };
        let r = send(&app, method.clone(), &uri, &[], body).await;
        assert!(
            r.status != StatusCode::NOT_FOUND && r.status != StatusCode::METHOD_NOT_ALLOWED,
            "{method} {uri}: {}",
            r.status
        );
        seen += 1;
    }
    assert_eq!(seen, 10);
}
