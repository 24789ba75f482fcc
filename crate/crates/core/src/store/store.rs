use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{RwLock, RwLockReadGuard, RwLockWriteGuard};

use super::archive::{decode_archive, encode_archive, Bundle};
use super::docs::{self, IndexDoc, Manifest, Op, SessionDoc, FORMAT_VERSION};
use super::fsio::{tmp_path, FaultPlan, Fs};
use super::record::{valid_id, IndexEntry, ListFilter, SessionRecord, StoredAudio};
use super::StoreError;
use crate::analysis::{AnalysisSnapshot, PromptTemplate, Tagging, Taxonomy, ThematicReport};
use crate::ingest::TranscriptSegment;
use crate::session::AuditEntry;

pub(crate) const TAXONOMIES: &str = "taxonomies";
const INDEX: &str = "index.doc";
const AUDIT: &str = "audit.log";
const SESSION_DOC: &str = "session.doc";
const SEGMENTS: &str = "segments.log";
const TAGS: &str = "tags.doc";
const REPORT: &str = "report.doc";
const STAGING: &str = ".staging";
const COMMIT: &str = ".commit";
const TRASH_PREFIX: &str = ".trash-";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreOptions {
    /// Flush file contents and directory entries at each durability point.
    pub fsync: bool,
    /// Test hook that simulates a crash partway through the operations.
    pub fault: Option<FaultPlan>,
}

impl Default for StoreOptions {
    fn default() -> Self {
        Self {
            fsync: true,
            fault: None,
        }
    }
}

/// The committed state of one session as the store last wrote or read it.
struct Committed {
    revision: u64,
    record: SessionRecord,
    log_len: u64,
}

#[derive(Default)]
struct Inner {
    index: BTreeMap<String, IndexEntry>,
    cache: HashMap<String, Committed>,
}

pub struct Store {
    root: PathBuf,
    fs: Fs,
    inner: RwLock<Inner>,
}

fn snapshot_target(v: u64) -> String {
    format!("snapshots/{v}.doc")
}

fn audio_target(seq: u64) -> String {
    format!("audio/{seq}.pcm")
}

fn staged_name(target: &str) -> String {
    target.replace('/', "__")
}

fn read_optional(path: &Path) -> Result<Option<Vec<u8>>, StoreError> {
    match fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn read_required(path: &Path) -> Result<Vec<u8>, StoreError> {
    read_optional(path)?.ok_or_else(|| StoreError::Corrupt(format!("missing {}", path.display())))
}

impl Store {
    /// Opens (or creates) a store, finishing or discarding any interrupted save.
    pub fn open(root: impl Into<PathBuf>, options: StoreOptions) -> Result<Self, StoreError> {
        let store = Self {
            root: root.into(),
            fs: Fs::new(options.fsync, options.fault),
            inner: RwLock::new(Inner::default()),
        };
        store.recover()?;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Number of mutating filesystem operations performed so far.
    pub fn fs_ops(&self) -> u64 {
        self.fs.ops()
    }

    fn read(&self) -> RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    fn session_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    fn recover(&self) -> Result<(), StoreError> {
        self.fs.create_dir_all(&self.root)?;
        self.fs.remove_file(&tmp_path(&self.root.join(INDEX)))?;
        let mut index = BTreeMap::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let path = entry.path();
            if name.starts_with(TRASH_PREFIX) {
                self.fs.remove_dir_all(&path)?;
                continue;
            }
            if !entry.file_type()?.is_dir() || !valid_id(&name) {
                continue;
            }
            if self.recover_session(&path)? {
                // An unreadable session stays on disk for inspection but is not listed.
                if let Ok(doc) = self.read_session_doc(&name) {
                    index.insert(name.clone(), IndexEntry::from_meta(&doc.meta, doc.revision));
                }
            }
        }
        let taxonomies = self.root.join(TAXONOMIES);
        if taxonomies.is_dir() {
            for entry in fs::read_dir(&taxonomies)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "tmp") {
                    self.fs.remove_file(&path)?;
                }
            }
        }
        let audit = self.root.join(AUDIT);
        if let Some(bytes) = read_optional(&audit)? {
            let (_, valid) = docs::decode_lines::<AuditEntry>(&bytes, usize::MAX);
            if valid < bytes.len() as u64 {
                self.fs.truncate(&audit, valid)?;
            }
        }
        let mut inner = self.write();
        inner.index = index;
        self.write_index(&inner.index)?;
        Ok(())
    }

    /// Brings one session directory to a committed state. Returns whether a
    /// committed session remains.
    fn recover_session(&self, dir: &Path) -> Result<bool, StoreError> {
        let commit = dir.join(COMMIT);
        if let Some(bytes) = read_optional(&commit)? {
            // The manifest is only ever published whole, so a parse failure
            // means foreign damage; treat the save as never committed.
            if let Ok(manifest) = docs::parse::<Manifest>(&bytes, "commit manifest") {
                self.apply(dir, &manifest)?;
            }
            self.fs.remove_file(&commit)?;
        }
        self.fs.remove_file(&tmp_path(&commit))?;
        self.fs.remove_dir_all(&dir.join(STAGING))?;
        if !dir.join(SESSION_DOC).exists() {
            self.fs.remove_dir_all(dir)?;
            return Ok(false);
        }
        Ok(true)
    }

    fn write_index(&self, index: &BTreeMap<String, IndexEntry>) -> Result<(), StoreError> {
        let mut entries: Vec<IndexEntry> = index.values().cloned().collect();
        entries.sort_by(|a, b| {
            b.created_at
                .cmp(&a.created_at)
                .then_with(|| a.session_id.cmp(&b.session_id))
        });
        let bytes = docs::to_bytes(&IndexDoc {
            format_version: FORMAT_VERSION,
            entries,
        });
        let path = self.root.join(INDEX);
        if read_optional(&path)?.as_deref() == Some(&bytes[..]) {
            return Ok(());
        }
        Ok(self.fs.write_atomic(&path, &bytes)?)
    }

    fn read_session_doc(&self, id: &str) -> Result<SessionDoc, StoreError> {
        let bytes = read_required(&self.session_dir(id).join(SESSION_DOC))?;
        let doc: SessionDoc = docs::parse(&bytes, SESSION_DOC)?;
        docs::check_version(doc.format_version, SESSION_DOC)?;
        if doc.meta.id != id {
            return Err(StoreError::Corrupt(format!(
                "{id}/{SESSION_DOC} names session {}",
                doc.meta.id
            )));
        }
        Ok(doc)
    }

    fn read_committed(&self, id: &str) -> Result<Option<Committed>, StoreError> {
        if !valid_id(id) {
            return Ok(None);
        }
        let dir = self.session_dir(id);
        if !dir.join(SESSION_DOC).exists() {
            return Ok(None);
        }
        let doc = self.read_session_doc(id)?;
        let meta = doc.meta;
        let log = read_optional(&dir.join(SEGMENTS))?.unwrap_or_default();
        let (segments, log_len) =
            docs::decode_lines::<TranscriptSegment>(&log, meta.segment_count as usize);
        if segments.len() as u64 != meta.segment_count {
            return Err(StoreError::Corrupt(format!(
                "{id}: {} segments referenced, {} readable",
                meta.segment_count,
                segments.len()
            )));
        }
        let snapshots = meta
            .snapshot_versions
            .iter()
            .map(|v| {
                let t = snapshot_target(*v);
                docs::decode_doc::<AnalysisSnapshot>(&read_required(&dir.join(&t))?, &t)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let tagging = match meta.has_tagging {
            true => Some(docs::decode_doc::<Tagging>(
                &read_required(&dir.join(TAGS))?,
                TAGS,
            )?),
            false => None,
        };
        let report = match meta.has_report {
            true => Some(docs::decode_doc::<ThematicReport>(
                &read_required(&dir.join(REPORT))?,
                REPORT,
            )?),
            false => None,
        };
        let audio = meta
            .audio_seqs
            .iter()
            .map(|seq| {
                Ok(StoredAudio {
                    seq: *seq,
                    data: read_required(&dir.join(audio_target(*seq)))?,
                })
            })
            .collect::<Result<Vec<_>, StoreError>>()?;
        let record = SessionRecord {
            meta,
            segments,
            snapshots,
            tagging,
            report,
            audio,
        };
        record
            .validate()
            .map_err(|e| StoreError::Corrupt(format!("{id}: {e}")))?;
        Ok(Some(Committed {
            revision: doc.revision,
            record,
            log_len,
        }))
    }

    pub fn load_session(&self, id: &str) -> Result<SessionRecord, StoreError> {
        let inner = self.read();
        if let Some(c) = inner.cache.get(id) {
            return Ok(c.record.clone());
        }
        if !inner.index.contains_key(id) {
            return Err(StoreError::NotFound(id.to_string()));
        }
        self.read_committed(id)?
            .map(|c| c.record)
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub fn revision(&self, id: &str) -> Option<u64> {
        self.read().index.get(id).map(|e| e.revision)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.read().index.contains_key(id)
    }

    /// Newest first; ties by id.
    pub fn list_sessions(&self, filter: &ListFilter) -> Vec<IndexEntry> {
        let mut out: Vec<IndexEntry> = self
            .read()
            .index
            .values()
            .filter(|e| filter.accepts(e))
            .cloned()
            .collect();
        out.sort_by(|a, b| {
            b.created_at
                .cmp(&a.created_at)
                .then_with(|| a.session_id.cmp(&b.session_id))
        });
        out
    }

    /// Atomically replaces the stored session. Returns the new revision.
    pub fn save_session(&self, record: &SessionRecord) -> Result<u64, StoreError> {
        record.validate()?;
        let id = record.id().to_string();
        let mut inner = self.write();
        let prev = match inner.cache.remove(&id) {
            Some(c) => Some(c),
            None => self.read_committed(&id)?,
        };
        match self.commit(record, prev.as_ref()) {
            Ok(committed) => {
                let revision = committed.revision;
                inner
                    .index
                    .insert(id.clone(), IndexEntry::from_meta(&record.meta, revision));
                inner.cache.insert(id, committed);
                self.write_index(&inner.index)?;
                Ok(revision)
            }
            Err(e) => {
                // Settle the directory so memory and disk agree again.
                let dir = self.session_dir(&id);
                if matches!(self.recover_session(&dir), Ok(true)) {
                    if let Ok(doc) = self.read_session_doc(&id) {
                        inner
                            .index
                            .insert(id, IndexEntry::from_meta(&doc.meta, doc.revision));
                    }
                }
                Err(e)
            }
        }
    }

    fn commit(
        &self,
        record: &SessionRecord,
        prev: Option<&Committed>,
    ) -> Result<Committed, StoreError> {
        let dir = self.session_dir(record.id());
        let staging = dir.join(STAGING);
        self.fs.remove_dir_all(&staging)?;
        self.fs.create_dir_all(&staging)?;
        let revision = prev.map_or(1, |p| p.revision + 1);
        let mut ops = Vec::new();
        let stage = |target: &str, bytes: &[u8], ops: &mut Vec<Op>| -> Result<(), StoreError> {
            let staged = staged_name(target);
            self.fs.write_new(&staging.join(&staged), bytes)?;
            ops.push(Op::Install {
                staged,
                target: target.to_string(),
            });
            Ok(())
        };

        let log_len = match prev {
            Some(p) if record.segments.starts_with(&p.record.segments) => {
                let tail = docs::segment_lines(&record.segments[p.record.segments.len()..]);
                if !tail.is_empty() {
                    let staged = "segments.tail".to_string();
                    self.fs.write_new(&staging.join(&staged), tail.as_bytes())?;
                    ops.push(Op::AppendLog {
                        staged,
                        base_len: p.log_len,
                    });
                }
                p.log_len + tail.len() as u64
            }
            _ => {
                let full = docs::segment_lines(&record.segments);
                stage(SEGMENTS, full.as_bytes(), &mut ops)?;
                full.len() as u64
            }
        };

        let old_snaps: BTreeMap<u64, &AnalysisSnapshot> = prev
            .map(|p| p.record.snapshots.iter().map(|s| (s.version, s)).collect())
            .unwrap_or_default();
        for s in &record.snapshots {
            if old_snaps.get(&s.version) != Some(&s) {
                stage(&snapshot_target(s.version), &docs::encode_doc(s), &mut ops)?;
            }
        }
        for v in old_snaps
            .keys()
            .filter(|v| !record.meta.snapshot_versions.contains(v))
        {
            ops.push(Op::Remove {
                target: snapshot_target(*v),
            });
        }

        let old_tagging = prev.and_then(|p| p.record.tagging.as_ref());
        match &record.tagging {
            Some(t) if old_tagging != Some(t) => stage(TAGS, &docs::encode_doc(t), &mut ops)?,
            None if old_tagging.is_some() => ops.push(Op::Remove {
                target: TAGS.into(),
            }),
            _ => {}
        }
        let old_report = prev.and_then(|p| p.record.report.as_ref());
        match &record.report {
            Some(r) if old_report != Some(r) => stage(REPORT, &docs::encode_doc(r), &mut ops)?,
            None if old_report.is_some() => ops.push(Op::Remove {
                target: REPORT.into(),
            }),
            _ => {}
        }

        let old_audio: BTreeMap<u64, &StoredAudio> = prev
            .map(|p| p.record.audio.iter().map(|a| (a.seq, a)).collect())
            .unwrap_or_default();
        for a in &record.audio {
            if old_audio.get(&a.seq) != Some(&a) {
                stage(&audio_target(a.seq), &a.data, &mut ops)?;
            }
        }
        for seq in old_audio
            .keys()
            .filter(|s| !record.meta.audio_seqs.contains(s))
        {
            ops.push(Op::Remove {
                target: audio_target(*seq),
            });
        }

        let session_doc = SessionDoc {
            format_version: FORMAT_VERSION,
            revision,
            meta: record.meta.clone(),
        };
        stage(SESSION_DOC, &docs::to_bytes(&session_doc), &mut ops)?;

        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            revision,
            ops,
        };
        let commit = dir.join(COMMIT);
        self.fs.write_atomic(&commit, &docs::to_bytes(&manifest))?;
        self.apply(&dir, &manifest)?;
        self.fs.remove_file(&commit)?;
        self.fs.remove_dir_all(&staging)?;
        Ok(Committed {
            revision,
            record: record.clone(),
            log_len,
        })
    }

    /// Applies a committed manifest. Safe to repeat after an interruption.
    fn apply(&self, dir: &Path, manifest: &Manifest) -> Result<(), StoreError> {
        let staging = dir.join(STAGING);
        for op in &manifest.ops {
            match op {
                Op::Install { staged, target } => {
                    let src = staging.join(staged);
                    if src.exists() {
                        let dst = dir.join(target);
                        if let Some(parent) = dst.parent() {
                            self.fs.create_dir_all(parent)?;
                        }
                        self.fs.rename(&src, &dst)?;
                    }
                }
                Op::AppendLog { staged, base_len } => {
                    let tail = read_required(&staging.join(staged))?;
                    let log = dir.join(SEGMENTS);
                    let len = fs::metadata(&log).map(|m| m.len()).unwrap_or(0);
                    if len < *base_len {
                        return Err(StoreError::Corrupt(format!(
                            "segment log is {len} bytes, expected at least {base_len}"
                        )));
                    }
                    if len > *base_len {
                        self.fs.truncate(&log, *base_len)?;
                    }
                    self.fs.append(&log, &tail)?;
                }
                Op::Remove { target } => self.fs.remove_file(&dir.join(target))?,
            }
        }
        Ok(())
    }

    pub fn delete_session(&self, id: &str) -> Result<(), StoreError> {
        let mut inner = self.write();
        if !inner.index.contains_key(id) {
            return Err(StoreError::NotFound(id.to_string()));
        }
        let dir = self.session_dir(id);
        let trash = self.root.join(format!("{TRASH_PREFIX}{id}"));
        self.fs.remove_dir_all(&trash)?;
        self.fs.rename(&dir, &trash)?;
        inner.index.remove(id);
        inner.cache.remove(id);
        self.write_index(&inner.index)?;
        self.fs.remove_dir_all(&trash)?;
        Ok(())
    }

    pub fn save_taxonomy(&self, taxonomy: &Taxonomy) -> Result<(), StoreError> {
        let _guard = self.write();
        let dir = self.root.join(TAXONOMIES);
        self.fs.create_dir_all(&dir)?;
        let path = dir.join(format!("{}.doc", taxonomy.version));
        Ok(self.fs.write_atomic(&path, &docs::encode_doc(taxonomy))?)
    }

    /// Every stored taxonomy, by ascending version.
    pub fn load_taxonomies(&self) -> Result<Vec<Taxonomy>, StoreError> {
        let dir = self.root.join(TAXONOMIES);
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "doc") {
                out.push(docs::decode_doc::<Taxonomy>(&fs::read(&path)?, "taxonomy")?);
            }
        }
        out.sort_by_key(|t| t.version);
        Ok(out)
    }

    pub fn append_audit(&self, entry: &AuditEntry) -> Result<(), StoreError> {
        let _guard = self.write();
        Ok(self
            .fs
            .append(&self.root.join(AUDIT), docs::encode_line(entry).as_bytes())?)
    }

    pub fn load_audit(&self) -> Result<Vec<AuditEntry>, StoreError> {
        let _guard = self.read();
        let bytes = read_optional(&self.root.join(AUDIT))?.unwrap_or_default();
        Ok(docs::decode_lines(&bytes, usize::MAX).0)
    }

    pub fn export_session(
        &self,
        id: &str,
        prompt_templates: Vec<PromptTemplate>,
        partial: bool,
    ) -> Result<Vec<u8>, StoreError> {
        let record = self.load_session(id)?;
        Ok(encode_archive(&Bundle::new(
            record,
            prompt_templates,
            partial,
        )))
    }

    /// Verifies and stores an exported archive.
    pub fn import_archive(&self, bytes: &[u8]) -> Result<Bundle, StoreError> {
        let bundle = decode_archive(bytes)?;
        self.save_session(&bundle.record)?;
        Ok(bundle)
    }
}
