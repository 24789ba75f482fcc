#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use pulse_core::session::{Allowlist, TapWindow};
use pulse_server::{Service, ServiceConfig};
use reqwest::{Method, StatusCode};
use serde_json::{json, Value};
use tokio::task::JoinHandle;

pub const READER: &str = "reader-key";
pub const ADMIN: &str = "admin-key";
pub const CARD: &str = "card-1";
pub const WINDOW_MS: u64 = 100;

pub fn config(dir: &Path) -> ServiceConfig {
    let mut config = ServiceConfig::new(dir, Allowlist::parse("card-1\ncard-2\n"));
    config.reader_key = Some(READER.into());
    config.admin_key = Some(ADMIN.into());
    config.tap_window = TapWindow::new(WINDOW_MS).unwrap();
    config.fsync = false;
    config.id_seed = Some(7);
    config.fixed_clock_ms = Some(1_700_000_000_000);
    config
}

pub struct Harness {
    pub base: String,
    pub service: Arc<Service>,
    pub client: reqwest::Client,
    server: JoinHandle<()>,
}

impl Drop for Harness {
    fn drop(&mut self) {
        self.server.abort();
    }
}

impl Harness {
    pub async fn start(config: ServiceConfig) -> Self {
        let (service, app) = tokio::task::spawn_blocking(move || pulse_server::app(config))
            .await
            .unwrap()
            .unwrap();
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let server = tokio::spawn(async move {
            axum::serve(listener, app).await.unwrap();
        });
        Self {
            base,
            service,
            client: reqwest::Client::new(),
            server,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn call(
        &self,
        method: Method,
        path: &str,
        auth: Option<&str>,
        body: Option<Value>,
    ) -> (StatusCode, Value) {
        let mut req = self.client.request(method, self.url(path));
        if let Some(token) = auth {
            req = req.bearer_auth(token);
        }
        if let Some(body) = body {
            req = req.json(&body);
        }
        let resp = req.send().await.unwrap();
        let status = resp.status();
        let bytes = resp.bytes().await.unwrap();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes)
                .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        (status, value)
    }

    pub async fn post(&self, path: &str, auth: Option<&str>, body: Value) -> (StatusCode, Value) {
        self.call(Method::POST, path, auth, Some(body)).await
    }

    pub async fn get(&self, path: &str, auth: Option<&str>) -> (StatusCode, Value) {
        self.call(Method::GET, path, auth, None).await
    }

    /// Creates a session and returns `(id, token)`.
    pub async fn create(&self) -> (String, String) {
        let (status, body) = self
            .post("/v1/sessions", None, json!({ "credential": CARD, "at": 0 }))
            .await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        (
            body["session_id"].as_str().unwrap().to_string(),
            body["token"].as_str().unwrap().to_string(),
        )
    }

    pub async fn transition(
        &self,
        id: &str,
        token: &str,
        event: &str,
        at: u64,
    ) -> (StatusCode, Value) {
        self.post(
            &format!("/v1/sessions/{id}/transitions"),
            Some(token),
            json!({ "event": event, "at": at }),
        )
        .await
    }

    pub async fn text(
        &self,
        id: &str,
        token: &str,
        seq: u64,
        speaker: &str,
        text: &str,
    ) -> (StatusCode, Value) {
        self.post(
            &format!("/v1/sessions/{id}/chunks"),
            Some(token),
            json!({ "seq": seq, "t_start": seq * 1000, "t_end": seq * 1000 + 900, "speaker": speaker, "text": text }),
        )
        .await
    }

    pub async fn tap(&self, id: &str, token: &str, at: u64) -> (StatusCode, Value) {
        self.post(
            &format!("/v1/sessions/{id}/taps"),
            Some(token),
            json!({ "at": at }),
        )
        .await
    }

    pub async fn tick(&self, id: &str, token: &str, at: u64) -> (StatusCode, Value) {
        self.post(
            &format!("/v1/sessions/{id}/tick"),
            Some(token),
            json!({ "at": at }),
        )
        .await
    }

    /// Runs a short recorded interview that ends with a stop.
    pub async fn interview(&self) -> (String, String) {
        let (id, token) = self.create().await;
        assert_eq!(
            self.transition(&id, &token, "start", 1_000).await.0,
            StatusCode::OK
        );
        for (seq, (speaker, text)) in INTERVIEW.iter().enumerate() {
            let (status, body) = self.text(&id, &token, seq as u64, speaker, text).await;
            assert_eq!(status, StatusCode::OK, "{body}");
        }
        assert_eq!(self.tap(&id, &token, 20_000).await.0, StatusCode::OK);
        let (status, body) = self.tick(&id, &token, 20_000 + WINDOW_MS + 1).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["gesture"], "SingleTap");
        let (status, body) = self.transition(&id, &token, "stop", 30_000).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        (id, token)
    }
}

pub const INTERVIEW: [(&str, &str); 6] = [
    ("Interviewer", "How do you plan your weekly shopping?"),
    (
        "Participant",
        "I usually need a list on my phone because I forget things.",
    ),
    (
        "Participant",
        "It is frustrating when the app crashes at checkout.",
    ),
    ("Interviewer", "What would make it better?"),
    (
        "Participant",
        "I wish there was a feature to share the list with my family.",
    ),
    (
        "Participant",
        "On weekends I shop with my kids and I really love the quick reorder button.",
    ),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SseFrame {
    pub id: Option<String>,
    pub event: Option<String>,
    pub data: String,
}

/// Parses complete frames from an event-stream body, skipping comments.
pub fn parse_sse(text: &str) -> Vec<SseFrame> {
    let mut frames = Vec::new();
    for block in text.split("\n\n") {
        let mut frame = SseFrame {
            id: None,
            event: None,
            data: String::new(),
        };
        let mut has_data = false;
        for line in block.lines() {
            if let Some(v) = line.strip_prefix("id:") {
                frame.id = Some(v.trim().to_string());
            } else if let Some(v) = line.strip_prefix("event:") {
                frame.event = Some(v.trim().to_string());
            } else if let Some(v) = line.strip_prefix("data:") {
                if has_data {
                    frame.data.push('\n');
                }
                frame.data.push_str(v.strip_prefix(' ').unwrap_or(v));
                has_data = true;
            }
        }
        if has_data {
            frames.push(frame);
        }
    }
    frames
}
