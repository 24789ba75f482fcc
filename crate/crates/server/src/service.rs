use std::collections::HashMap;
use std::fs;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use anyhow::Context;
use axum::http::{HeaderMap, StatusCode};
use pulse_core::analysis::{
    AnalysisEngine, AnalysisProvider, AnalysisResources, AnalysisSnapshot, PromptSet,
    RuleBasedProvider, TagLabel, Taxonomy, TaxonomyRegistry,
};
use pulse_core::api::{
    codes, AuditView, ChunkAck, CreateSessionRequest, CreateSessionResponse, ErrorDetail,
    GestureOutcome, ImportResult, LabelCount, LiveEventBody, SentenceView, SessionDetail,
    SessionList, SessionStatus, TaxonomyDoc, TaxonomyRequest, TransitionRequest,
    API_FORMAT_VERSION,
};
use pulse_core::ingest::{
    transcribe, AudioChunk, ChunkPayload, ChunkQueue, InlineTextProvider, ScriptedProvider,
    TranscriptionProvider,
};
use pulse_core::session::{
    AccessGate, AuditLog, AuthResult, DisplayMode, Gesture, SessionError, SessionEvent,
    SessionLifecycle, SessionState, TapClassifier,
};
use pulse_core::store::{ListFilter, SessionMeta, SessionRecord, Store, StoreOptions, StoredAudio};

use crate::auth::{bearer, ct_eq, Keys, Role};
use crate::clock::{Clock, FixedClock, IdSource, SystemClock};
use crate::config::{ProviderSelection, ServiceConfig};
use crate::error::ApiError;
use crate::live::LiveLog;
use crate::remote::RemoteProvider;

/// A session created by this process, with the state only it holds:
/// the device token, intake cursor, tap classifier and live event log.
pub struct ActiveSession {
    id: String,
    token: String,
    runtime: tokio::sync::Mutex<Runtime>,
    /// Serializes analysis passes so snapshot versions form a total order.
    analysis: tokio::sync::Mutex<()>,
    live: Arc<LiveLog>,
}

struct Runtime {
    record: SessionRecord,
    queue: ChunkQueue,
    taps: TapClassifier,
    /// Latest device clock reading seen for this session.
    device_ms: u64,
}

impl Runtime {
    fn state(&self) -> SessionState {
        self.record.meta.state()
    }

    fn lifecycle(&mut self) -> &mut SessionLifecycle {
        &mut self.record.meta.lifecycle
    }

    /// Resolves the device time of a request. Device time never runs
    /// backwards within a session.
    fn device_time(&self, at: Option<u64>) -> Result<u64, ApiError> {
        let at = at.unwrap_or(self.device_ms);
        if at < self.device_ms {
            return Err(ApiError::validation(format!(
                "timestamp {at} ms precedes the last event at {} ms",
                self.device_ms
            )));
        }
        Ok(at)
    }

    fn elapsed(&self, now: u64) -> Option<u64> {
        self.record.meta.lifecycle.elapsed(now).ok()
    }
}

pub struct Service {
    config: ServiceConfig,
    store: Arc<Store>,
    engine: AnalysisEngine,
    pcm_transcriber: Option<Arc<ScriptedProvider>>,
    gate: Mutex<AccessGate>,
    /// Number of audit entries already appended to the store.
    audit_written: tokio::sync::Mutex<usize>,
    taxonomies: RwLock<TaxonomyRegistry>,
    taxonomy_writer: tokio::sync::Mutex<()>,
    sessions: RwLock<HashMap<String, Arc<ActiveSession>>>,
    keys: Keys,
    clock: Arc<dyn Clock>,
    ids: IdSource,
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn read<T>(lock: &RwLock<T>) -> std::sync::RwLockReadGuard<'_, T> {
    lock.read().unwrap_or_else(|e| e.into_inner())
}

fn write<T>(lock: &RwLock<T>) -> std::sync::RwLockWriteGuard<'_, T> {
    lock.write().unwrap_or_else(|e| e.into_inner())
}

impl Service {
    pub fn open(config: ServiceConfig) -> anyhow::Result<Self> {
        let resources = Arc::new(match &config.resources_dir {
            Some(dir) => AnalysisResources::load_dir(dir)
                .with_context(|| format!("loading {}", dir.display()))?,
            None => AnalysisResources::default(),
        });
        let prompts = match &config.resources_dir {
            Some(dir) => {
                PromptSet::load_dir(&dir.join("prompts")).context("loading prompt templates")?
            }
            None => PromptSet::default(),
        };
        let provider: Arc<dyn AnalysisProvider> = match &config.provider {
            ProviderSelection::RuleBased => {
                Arc::new(RuleBasedProvider::new(resources.clone(), &config.analysis))
            }
            ProviderSelection::Remote {
                endpoint,
                api_key,
                timeout,
            } => Arc::new(RemoteProvider::new(
                endpoint.clone(),
                api_key.clone(),
                *timeout,
                prompts.clone(),
            )?),
        };
        let engine = AnalysisEngine::new(provider, resources, config.analysis.clone(), prompts)?;
        let store = Store::open(
            &config.store_dir,
            StoreOptions {
                fsync: config.fsync,
                fault: None,
            },
        )
        .with_context(|| format!("opening store {}", config.store_dir.display()))?;

        let stored = store.load_taxonomies()?;
        let registry = if stored.is_empty() {
            let registry = TaxonomyRegistry::default();
            store.save_taxonomy(registry.current())?;
            registry
        } else {
            TaxonomyRegistry::from_versions(stored)?
        };
        let audit = store.load_audit()?;
        let written = audit.len();
        let gate = AccessGate::with_audit(config.allowlist.clone(), AuditLog::from_entries(audit));

        let pcm_transcriber = match &config.transcript_script {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Some(Arc::new(ScriptedProvider::parse(&text)?))
            }
            None => None,
        };
        let clock: Arc<dyn Clock> = match config.fixed_clock_ms {
            Some(ms) => Arc::new(FixedClock(ms)),
            None => Arc::new(SystemClock),
        };
        Ok(Self {
            keys: Keys {
                reader: config.reader_key.clone(),
                admin: config.admin_key.clone(),
            },
            ids: IdSource::new(config.id_seed),
            config,
            store: Arc::new(store),
            engine,
            pcm_transcriber,
            gate: Mutex::new(gate),
            audit_written: tokio::sync::Mutex::new(written),
            taxonomies: RwLock::new(registry),
            taxonomy_writer: tokio::sync::Mutex::new(()),
            sessions: RwLock::new(HashMap::new()),
            clock,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn engine(&self) -> &AnalysisEngine {
        &self.engine
    }

    fn gate(&self) -> std::sync::MutexGuard<'_, AccessGate> {
        self.gate.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Appends audit entries recorded since the last call to the store, in order.
    async fn persist_audit(&self) -> Result<(), ApiError> {
        let mut written = self.audit_written.lock().await;
        let fresh = self.gate().audit().entries()[*written..].to_vec();
        if fresh.is_empty() {
            return Ok(());
        }
        let n = fresh.len();
        let store = self.store.clone();
        blocking(move || {
            for entry in &fresh {
                store.append_audit(entry)?;
            }
            Ok(())
        })
        .await?;
        *written += n;
        Ok(())
    }

    async fn persist(&self, record: &SessionRecord) -> Result<u64, ApiError> {
        let store = self.store.clone();
        let record = record.clone();
        blocking(move || Ok(store.save_session(&record)?)).await
    }

    fn active(&self, id: &str) -> Option<Arc<ActiveSession>> {
        read(&self.sessions).get(id).cloned()
    }

    /// Authorizes a device request: the bearer must be the session's token.
    fn device_session(
        &self,
        id: &str,
        headers: &HeaderMap,
    ) -> Result<Arc<ActiveSession>, ApiError> {
        let token =
            bearer(headers).ok_or_else(|| ApiError::unauthenticated("missing session token"))?;
        let Some(session) = self.active(id) else {
            if self.store.contains(id) {
                return Err(ApiError::invalid_state(format!(
                    "session {id} is not active on this server; tokens do not survive a restart"
                )));
            }
            return Err(ApiError::not_found(format!("session {id} not found")));
        };
        if !ct_eq(token, &session.token) {
            return Err(ApiError::forbidden("token does not belong to this session"));
        }
        Ok(session)
    }

    pub async fn create_session(
        &self,
        req: CreateSessionRequest,
    ) -> Result<CreateSessionResponse, ApiError> {
        let title = req.title.as_deref().map(str::trim).unwrap_or("");
        if title.chars().count() > 200 {
            return Err(ApiError::validation("title is longer than 200 characters"));
        }
        let sample_rate = req.sample_rate.unwrap_or(self.config.default_sample_rate);
        if sample_rate == 0 {
            return Err(ApiError::validation("sample_rate must be positive"));
        }
        let at = req.at.unwrap_or(0);
        let decision = self.gate().check(&req.credential, at);
        let decision = match decision {
            Ok(d) => d,
            Err(e) => {
                return Err(ApiError::new(
                    StatusCode::BAD_REQUEST,
                    codes::INVALID_CREDENTIAL,
                    e.to_string(),
                ))
            }
        };
        if decision == AuthResult::Denied {
            self.persist_audit().await?;
            return Err(ApiError::new(
                StatusCode::UNAUTHORIZED,
                codes::AUTH_DENIED,
                "credential not on the allowlist",
            ));
        }

        let mut id = self.ids.session_id();
        while self.store.contains(&id) || self.active(&id).is_some() {
            id = self.ids.session_id();
        }
        let token = self.ids.token();
        let mut lifecycle = SessionLifecycle::new(&id);
        self.gate()
            .authenticate(&mut lifecycle, &req.credential, at)?;
        let taxonomy_version = read(&self.taxonomies).current().version;
        let meta = SessionMeta {
            id: id.clone(),
            title: if title.is_empty() {
                format!("Interview {id}")
            } else {
                title.to_string()
            },
            created_at: self.clock.now_ms(),
            lifecycle,
            taxonomy_version,
            transcription_provider: match self.pcm_transcriber {
                Some(_) => "scripted".into(),
                None => InlineTextProvider.name().into(),
            },
            analysis_provider: self.engine.provider_name().into(),
            sample_rate,
            display_mode: None,
            segment_count: 0,
            snapshot_versions: vec![],
            has_tagging: false,
            has_report: false,
            audio_seqs: vec![],
        };
        let record = SessionRecord::new(meta);
        self.persist_audit().await?;
        self.persist(&record).await?;

        let live = Arc::new(LiveLog::new(&id));
        if let Some(change) = record.meta.lifecycle.history().last() {
            live.publish(LiveEventBody::StateChanged(change.clone()));
        }
        let session = Arc::new(ActiveSession {
            id: id.clone(),
            token: token.clone(),
            runtime: tokio::sync::Mutex::new(Runtime {
                record,
                queue: ChunkQueue::default(),
                taps: TapClassifier::new(self.config.tap_window),
                device_ms: at,
            }),
            analysis: tokio::sync::Mutex::new(()),
            live,
        });
        write(&self.sessions).insert(id.clone(), session);
        tracing::info!(session = %id, "session created");
        Ok(CreateSessionResponse {
            format_version: API_FORMAT_VERSION,
            session_id: id,
            token,
            state: SessionState::Ready,
            tap_window_ms: self.config.tap_window.ms(),
            taxonomy_version,
        })
    }

    fn status(&self, session: &ActiveSession, rt: &Runtime) -> SessionStatus {
        SessionStatus {
            format_version: API_FORMAT_VERSION,
            session_id: session.id.clone(),
            state: rt.state(),
            clock: rt.record.meta.lifecycle.clock(),
            elapsed_ms: rt.elapsed(rt.device_ms),
            display_mode: rt.record.meta.display_mode,
            segment_count: rt.record.meta.segment_count,
            latest_snapshot_version: rt.record.meta.snapshot_versions.last().copied(),
        }
    }

    pub async fn transition(
        &self,
        id: &str,
        headers: &HeaderMap,
        req: TransitionRequest,
    ) -> Result<SessionStatus, ApiError> {
        let session = self.device_session(id, headers)?;
        match req.event {
            SessionEvent::Start => self.start(&session, req.at).await,
            SessionEvent::Stop => self.stop(&session, req.at).await,
        }
    }

    async fn start(
        &self,
        session: &ActiveSession,
        at: Option<u64>,
    ) -> Result<SessionStatus, ApiError> {
        let mut rt = session.runtime.lock().await;
        let at = rt.device_time(at)?;
        self.gate()
            .transition(rt.lifecycle(), SessionEvent::Start, at)?;
        rt.device_ms = at;
        self.persist_audit().await?;
        self.persist(&rt.record).await?;
        self.publish_last_change(session, &rt);
        Ok(self.status(session, &rt))
    }

    fn publish_last_change(&self, session: &ActiveSession, rt: &Runtime) {
        if let Some(change) = rt.record.meta.lifecycle.history().last() {
            session
                .live
                .publish(LiveEventBody::StateChanged(change.clone()));
        }
    }

    async fn stop(
        &self,
        session: &ActiveSession,
        at: Option<u64>,
    ) -> Result<SessionStatus, ApiError> {
        // Wait for passes in flight; none can start while this is held.
        let _analysis = session.analysis.lock().await;
        let held = {
            let mut rt = session.runtime.lock().await;
            let at = rt.device_time(at)?;
            if rt.state() != SessionState::Recording {
                return Err(SessionError::IllegalTransition {
                    state: rt.state(),
                    event: SessionEvent::Stop.to_string(),
                }
                .into());
            }
            // A tap still waiting for a partner can no longer get one.
            let held = rt.taps.flush();
            if let Some(g) = held {
                apply_gesture(session, &mut rt, g, at);
            }
            held
        };
        if held.is_some() {
            let _ = self.analysis_pass_locked(session).await;
        }

        let mut rt = session.runtime.lock().await;
        let at = rt.device_time(at)?;
        self.gate()
            .transition(rt.lifecycle(), SessionEvent::Stop, at)?;
        rt.device_ms = at;
        self.persist_audit().await?;

        let engine = self.engine.clone();
        let registry = read(&self.taxonomies).clone();
        let segments = rt.record.segments.clone();
        let version = rt.record.meta.taxonomy_version;
        let sid = session.id.clone();
        let analytics = blocking(move || {
            let tagging = engine.tag_transcript(&segments, &registry, version)?;
            let report = engine.thematic_report(SessionState::Ended, &sid, &tagging, &registry)?;
            Ok((tagging, report))
        })
        .await;
        match analytics {
            Ok((tagging, report)) => {
                rt.record.tagging = Some(tagging);
                rt.record.report = Some(report);
            }
            Err(e) => {
                tracing::warn!(session = %session.id, error = %e.message, "post-interview analytics failed")
            }
        }
        rt.record.sync_refs();
        self.persist(&rt.record).await?;
        self.publish_last_change(session, &rt);
        tracing::info!(session = %session.id, "session ended");
        Ok(self.status(session, &rt))
    }

    pub async fn ingest_chunk(
        &self,
        id: &str,
        headers: &HeaderMap,
        make_chunk: impl FnOnce(u32) -> AudioChunk,
    ) -> Result<ChunkAck, ApiError> {
        let session = self.device_session(id, headers)?;
        let mut rt = session.runtime.lock().await;
        let chunk = make_chunk(rt.record.meta.sample_rate);
        let mut queue = rt.queue.clone();
        let seq = queue.accept(rt.state(), &chunk)?;
        let provider: &dyn TranscriptionProvider = match (&chunk.payload, &self.pcm_transcriber) {
            (ChunkPayload::Pcm { .. }, Some(scripted)) => scripted.as_ref(),
            _ => &InlineTextProvider,
        };
        let segments = transcribe(&session.id, std::slice::from_ref(&chunk), provider)?;
        rt.queue = queue;
        let segment_id = segments.first().map(|s| s.segment_id.clone());
        rt.record.segments.extend(segments);
        if let (true, ChunkPayload::Pcm { data }) = (self.config.retain_audio, &chunk.payload) {
            rt.record.audio.push(StoredAudio {
                seq,
                data: data.clone(),
            });
        }
        rt.record.sync_refs();
        self.persist(&rt.record).await?;
        Ok(ChunkAck {
            format_version: API_FORMAT_VERSION,
            acked_seq: seq,
            next_seq: rt.queue.expected(),
            segment_id,
        })
    }

    pub async fn tap(
        &self,
        id: &str,
        headers: &HeaderMap,
        at: u64,
        wait: bool,
    ) -> Result<GestureOutcome, ApiError> {
        let session = self.device_session(id, headers)?;
        let gesture = {
            let mut rt = session.runtime.lock().await;
            require_recording(&rt, "taps")?;
            let at = rt.device_time(Some(at))?;
            let gesture = rt.taps.push(at)?;
            rt.device_ms = at;
            if let Some(g) = gesture {
                apply_gesture(&session, &mut rt, g, at);
            }
            gesture
        };
        if gesture.is_none() && wait {
            tokio::time::sleep(Duration::from_millis(self.config.tap_window.ms() + 1)).await;
            return self.settle(&session, at).await;
        }
        self.finish_gesture(&session, gesture).await
    }

    /// Classifies the tap at `tap_at` as single if it is still unpaired.
    async fn settle(
        &self,
        session: &ActiveSession,
        tap_at: u64,
    ) -> Result<GestureOutcome, ApiError> {
        let gesture = {
            let mut rt = session.runtime.lock().await;
            if rt.state() != SessionState::Recording || rt.taps.pending() != Some(tap_at) {
                None
            } else {
                let now = rt.device_ms.max(tap_at + self.config.tap_window.ms() + 1);
                let gesture = rt.taps.advance(now)?;
                rt.device_ms = now;
                if let Some(g) = gesture {
                    apply_gesture(session, &mut rt, g, now);
                }
                gesture
            }
        };
        self.finish_gesture(session, gesture).await
    }

    pub async fn tick(
        &self,
        id: &str,
        headers: &HeaderMap,
        at: u64,
    ) -> Result<GestureOutcome, ApiError> {
        let session = self.device_session(id, headers)?;
        let gesture = {
            let mut rt = session.runtime.lock().await;
            require_recording(&rt, "ticks")?;
            let at = rt.device_time(Some(at))?;
            rt.device_ms = at;
            let elapsed_ms = rt.elapsed(at).unwrap_or(0);
            session.live.publish(LiveEventBody::TimerTick {
                at_ms: at,
                elapsed_ms,
            });
            let gesture = rt.taps.advance(at)?;
            if let Some(g) = gesture {
                apply_gesture(&session, &mut rt, g, at);
            }
            gesture
        };
        self.finish_gesture(&session, gesture).await
    }

    async fn finish_gesture(
        &self,
        session: &ActiveSession,
        gesture: Option<Gesture>,
    ) -> Result<GestureOutcome, ApiError> {
        let (snapshot, analysis_error) = match gesture {
            Some(_) => match self.analysis_pass(session).await {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(e)),
            },
            None => (None, None),
        };
        let rt = session.runtime.lock().await;
        Ok(GestureOutcome {
            format_version: API_FORMAT_VERSION,
            gesture,
            pending_tap: rt.taps.pending(),
            mode: rt.record.meta.display_mode,
            elapsed_ms: rt.elapsed(rt.device_ms),
            snapshot,
            analysis_error,
        })
    }

    async fn analysis_pass(
        &self,
        session: &ActiveSession,
    ) -> Result<AnalysisSnapshot, ErrorDetail> {
        let _analysis = session.analysis.lock().await;
        self.analysis_pass_locked(session).await
    }

    /// One analysis pass. The caller holds the session's analysis lock; the
    /// runtime lock is released while the provider works, so ingestion
    /// continues and the snapshot covers the transcript as of the pass start.
    async fn analysis_pass_locked(
        &self,
        session: &ActiveSession,
    ) -> Result<AnalysisSnapshot, ErrorDetail> {
        let (segments, taxonomy) = {
            let rt = session.runtime.lock().await;
            if rt.state() != SessionState::Recording {
                return Err(ApiError::invalid_state("session is no longer recording").detail());
            }
            let taxonomy: Taxonomy = read(&self.taxonomies)
                .get(rt.record.meta.taxonomy_version)
                .map_err(|e| ApiError::from(e).detail())?
                .clone();
            (rt.record.segments.clone(), taxonomy)
        };
        let engine = self.engine.clone();
        let sid = session.id.clone();
        let now = self.clock.now_ms();
        let mut snapshot =
            blocking(move || Ok(engine.run_pass(&sid, &segments, &taxonomy, 0, now)?))
                .await
                .map_err(|e| e.detail())?;

        let mut rt = session.runtime.lock().await;
        snapshot.version = rt.record.snapshots.last().map_or(1, |s| s.version + 1);
        rt.record.snapshots.push(snapshot.clone());
        rt.record.sync_refs();
        if let Err(e) = self.persist(&rt.record).await {
            rt.record.snapshots.pop();
            rt.record.sync_refs();
            return Err(e.detail());
        }
        session
            .live
            .publish(LiveEventBody::SnapshotReady(snapshot.clone()));
        Ok(snapshot)
    }

    pub fn live_log(&self, id: &str, headers: &HeaderMap) -> Result<Arc<LiveLog>, ApiError> {
        let credential = bearer(headers)
            .ok_or_else(|| ApiError::unauthenticated("missing bearer credential"))?;
        let session = self
            .active(id)
            .ok_or_else(|| ApiError::not_found(format!("no live stream for session {id}")))?;
        if !ct_eq(credential, &session.token) && !self.keys.is_reader(credential) {
            return Err(ApiError::forbidden(
                "credential does not grant access to this stream",
            ));
        }
        Ok(session.live.clone())
    }

    pub fn require(&self, headers: &HeaderMap, role: Role) -> Result<Role, ApiError> {
        self.keys.require(headers, role)
    }

    pub fn list_sessions(&self, filter: &ListFilter) -> SessionList {
        SessionList {
            format_version: API_FORMAT_VERSION,
            sessions: self.store.list_sessions(filter),
        }
    }

    pub async fn detail(&self, id: &str, label: Option<&str>) -> Result<SessionDetail, ApiError> {
        let store = self.store.clone();
        let sid = id.to_string();
        let record = blocking(move || Ok(store.load_session(&sid)?)).await?;
        let taxonomy = read(&self.taxonomies)
            .get(record.meta.taxonomy_version)?
            .clone();
        let label_filter = match label {
            Some(name) => {
                let label = TagLabel::from_name(name);
                if !taxonomy.allows(&label) {
                    return Err(ApiError::new(
                        StatusCode::BAD_REQUEST,
                        codes::UNKNOWN_LABEL,
                        format!(
                            "label `{name}` is not in taxonomy version {}",
                            taxonomy.version
                        ),
                    ));
                }
                Some(label)
            }
            None => None,
        };
        let meta = &record.meta;
        let ended = meta.state() == SessionState::Ended;
        let (sentences, tag_counts) = match (&record.tagging, ended) {
            (Some(tagging), true) => {
                let views: Vec<SentenceView> = tagging
                    .sentences
                    .iter()
                    .zip(&tagging.tags)
                    .map(|(s, t)| SentenceView {
                        sentence_id: s.sentence_id.clone(),
                        segment_id: s.segment_id.clone(),
                        text: s.text.clone(),
                        labels: t.labels.clone(),
                        polarity: t.polarity,
                        rationale: t.rationale.clone(),
                    })
                    .collect();
                let counts = taxonomy
                    .ordered_labels()
                    .into_iter()
                    .map(|label| LabelCount {
                        count: views.iter().filter(|v| v.labels.contains(&label)).count() as u64,
                        label,
                    })
                    .collect();
                let shown = views
                    .into_iter()
                    .filter(|v| label_filter.as_ref().is_none_or(|l| v.labels.contains(l)))
                    .collect();
                (Some(shown), Some(counts))
            }
            _ => (None, None),
        };
        let report = record.report.clone().filter(|_| ended);
        Ok(SessionDetail {
            format_version: API_FORMAT_VERSION,
            session_id: meta.id.clone(),
            title: meta.title.clone(),
            created_at: meta.created_at,
            state: meta.state(),
            clock: meta.lifecycle.clock(),
            elapsed_ms: ended.then(|| meta.lifecycle.elapsed(0).ok()).flatten(),
            taxonomy_version: meta.taxonomy_version,
            display_mode: meta.display_mode,
            transcript: record.segments.clone(),
            snapshot_versions: meta.snapshot_versions.clone(),
            latest_snapshot: record.latest_snapshot().cloned(),
            label_filter,
            sentences,
            tag_counts,
            keywords: report.as_ref().map(|r| r.keyword_stats.clone()),
            sentiment: report.as_ref().map(|r| r.overall_sentiment),
            report,
        })
    }

    pub fn taxonomy(&self) -> TaxonomyDoc {
        taxonomy_doc(read(&self.taxonomies).current())
    }

    pub async fn set_taxonomy(&self, req: TaxonomyRequest) -> Result<TaxonomyDoc, ApiError> {
        let _writer = self.taxonomy_writer.lock().await;
        let mut next = read(&self.taxonomies).clone();
        let taxonomy = next
            .set_taxonomy(req.labels)
            .map_err(|e| {
                ApiError::new(
                    StatusCode::BAD_REQUEST,
                    codes::INVALID_TAXONOMY,
                    e.to_string(),
                )
            })?
            .clone();
        let store = self.store.clone();
        let saved = taxonomy.clone();
        blocking(move || Ok(store.save_taxonomy(&saved)?)).await?;
        *write(&self.taxonomies) = next;
        Ok(taxonomy_doc(&taxonomy))
    }

    pub async fn export(&self, id: &str) -> Result<Vec<u8>, ApiError> {
        let store = self.store.clone();
        let templates = self.engine.prompts().iter().into_iter().cloned().collect();
        let sid = id.to_string();
        blocking(move || {
            let partial = store.load_session(&sid)?.meta.state() != SessionState::Ended;
            Ok(store.export_session(&sid, templates, partial)?)
        })
        .await
    }

    pub async fn import(&self, bytes: Vec<u8>) -> Result<ImportResult, ApiError> {
        let bundle = pulse_core::store::decode_archive(&bytes)?;
        let id = bundle.record.id().to_string();
        if let Some(active) = self.active(&id) {
            if active.runtime.lock().await.state() != SessionState::Ended {
                return Err(ApiError::conflict(format!("session {id} is active")));
            }
        }
        let store = self.store.clone();
        let record = bundle.record;
        let revision = blocking(move || Ok(store.save_session(&record)?)).await?;
        Ok(ImportResult {
            format_version: API_FORMAT_VERSION,
            session_id: id,
            revision,
            partial: bundle.partial,
        })
    }

    pub async fn delete(&self, id: &str) -> Result<(), ApiError> {
        if let Some(active) = self.active(id) {
            if active.runtime.lock().await.state() != SessionState::Ended {
                return Err(ApiError::invalid_state(format!(
                    "session {id} is still active; stop it first"
                )));
            }
        }
        let store = self.store.clone();
        let sid = id.to_string();
        blocking(move || Ok(store.delete_session(&sid)?)).await?;
        write(&self.sessions).remove(id);
        Ok(())
    }

    pub fn audit(&self) -> AuditView {
        let gate = self.gate();
        AuditView {
            format_version: API_FORMAT_VERSION,
            entries: gate.audit().entries().to_vec(),
            consistent: gate.audit().verify().is_ok(),
        }
    }
}

fn taxonomy_doc(t: &Taxonomy) -> TaxonomyDoc {
    TaxonomyDoc {
        format_version: API_FORMAT_VERSION,
        version: t.version,
        labels: t.labels.clone(),
    }
}

fn require_recording(rt: &Runtime, what: &str) -> Result<(), ApiError> {
    match rt.state() {
        SessionState::Recording => Ok(()),
        s => Err(ApiError::invalid_state(format!(
            "{what} require a recording session, session is {s}"
        ))),
    }
}

fn apply_gesture(session: &ActiveSession, rt: &mut Runtime, gesture: Gesture, at: u64) {
    let mode = DisplayMode::from(gesture);
    rt.record.meta.display_mode = Some(mode);
    session.live.publish(LiveEventBody::ModeChanged {
        mode,
        gesture,
        at_ms: at,
    });
}
