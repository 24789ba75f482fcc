use std::time::Duration;

use pulse_core::api::{
    codes, ChunkAck, CreateSessionRequest, CreateSessionResponse, ErrorBody, GestureOutcome,
    SessionStatus, TapRequest, TextChunkRequest, TickRequest, TransitionRequest,
};
use pulse_core::ingest::Speaker;
use pulse_core::session::SessionEvent;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::SimError;

/// Blocking client for the device endpoints of one session.
pub struct DeviceClient {
    http: reqwest::blocking::Client,
    base: String,
    session: Option<(String, String)>,
}

impl DeviceClient {
    pub fn new(server: &str) -> Result<Self, SimError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| SimError::Network(e.to_string()))?;
        Ok(Self {
            http,
            base: server.trim_end_matches('/').to_string(),
            session: None,
        })
    }

    fn send<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, SimError> {
        let mut req = self.http.post(format!("{}{path}", self.base)).json(body);
        if let Some((_, token)) = &self.session {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| SimError::Network(format!("POST {path}: {e}")))?;
        let status = resp.status();
        let bytes = resp
            .bytes()
            .map_err(|e| SimError::Network(format!("POST {path}: {e}")))?;
        if status.is_success() {
            return serde_json::from_slice(&bytes)
                .map_err(|e| SimError::Protocol(format!("POST {path}: unexpected response: {e}")));
        }
        match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(body) if body.error.code == codes::AUTH_DENIED => {
                Err(SimError::AuthDenied(body.error.message))
            }
            Ok(body) => Err(SimError::Api {
                status: status.as_u16(),
                code: body.error.code,
                message: body.error.message,
            }),
            Err(_) => Err(SimError::Protocol(format!(
                "POST {path}: HTTP {status} without an error body"
            ))),
        }
    }

    fn session_path(&self, tail: &str) -> Result<String, SimError> {
        let (id, _) = self
            .session
            .as_ref()
            .ok_or_else(|| SimError::Protocol("no session yet".into()))?;
        Ok(format!("/v1/sessions/{id}/{tail}"))
    }

    pub fn session_id(&self) -> Option<&str> {
        self.session.as_ref().map(|(id, _)| id.as_str())
    }

    /// Presents the card. On success the client holds the session token.
    pub fn swipe(
        &mut self,
        credential: &str,
        title: Option<String>,
    ) -> Result<CreateSessionResponse, SimError> {
        let req = CreateSessionRequest {
            credential: credential.to_string(),
            title,
            sample_rate: None,
            at: Some(0),
        };
        let created: CreateSessionResponse = self.send("/v1/sessions", &req)?;
        self.session = Some((created.session_id.clone(), created.token.clone()));
        Ok(created)
    }

    pub fn transition(&self, event: SessionEvent, at: u64) -> Result<SessionStatus, SimError> {
        self.send(
            &self.session_path("transitions")?,
            &TransitionRequest {
                event,
                at: Some(at),
            },
        )
    }

    pub fn speech(
        &self,
        seq: u64,
        speaker: Speaker,
        text: &str,
        t_start: u64,
        t_end: u64,
    ) -> Result<ChunkAck, SimError> {
        let req = TextChunkRequest {
            seq,
            t_start,
            t_end,
            speaker: Some(speaker),
            text: text.to_string(),
        };
        self.send(&self.session_path("chunks")?, &req)
    }

    pub fn tap(&self, at: u64) -> Result<GestureOutcome, SimError> {
        self.send(&self.session_path("taps")?, &TapRequest { at, wait: false })
    }

    pub fn tick(&self, at: u64) -> Result<GestureOutcome, SimError> {
        self.send(&self.session_path("tick")?, &TickRequest { at })
    }
}
