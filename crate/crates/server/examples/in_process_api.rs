//! Drives the HTTP router in process: stores a user and a knowledge base,
//! then asks for a harmony match and a preference score.

use axum::body::Body;
use axum::http::Request;
use harmonia::{default_partition, ColorDescriptor, HarmoniousPalette, KnowledgeBase, Store};
use harmonia_server::AppState;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(state: &AppState, method: &str, uri: &str, body: Value) -> (u16, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let res = harmonia_server::router(state.clone()).oneshot(req).await.unwrap();
    let status = res.status().as_u16();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let store = Store::open(dir.path())?;
    let palette = HarmoniousPalette::new(27, ColorDescriptor::from_weights([(12, 0.5), (1, 0.3), (91, 0.2)])?, 120);
    store.put_palettes(KnowledgeBase::new("demo", vec![palette])?)?;
    let state = AppState::new(default_partition(), store)?;

    let (status, _) = call(&state, "PUT", "/api/users/ana/ratings", json!({"ratings": {"12": 0.8, "1": 0.5}})).await;
    println!("PUT ratings -> {status}");

    let (status, body) = call(&state, "POST", "/api/harmony", json!({"color_ids": [12, 1]})).await;
    println!("POST harmony -> {status} {body}");

    let look = json!({"items": [
        {"role": "dress_costume", "color_id": 12},
        {"role": "shoes_bags", "color_id": 1}
    ]});
    let (status, body) = call(&state, "POST", "/api/preference", json!({"look": look, "user_id": "ana"})).await;
    println!("POST preference -> {status} {body}");
    Ok(())
}
