//! Acceptance suite. Runs every headline criterion at its stated tolerance
//! and prints one PASS/FAIL line per criterion.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::{deterministic_config, script_path, Server, ADMIN, CARD, READER};
use pulse_core::analysis::{
    keyword_frequency, AnalysisConfig, AnalysisEngine, AnalysisResources, KeywordStat, LabelDef,
    LexTerm, Lexicon, SentimentBasis, SentimentScore, TagLabel, Tagging, TaxonomyRegistry,
    ThematicReport,
};
use pulse_core::api::codes;
use pulse_core::ingest::{Speaker, TranscriptSegment};
use pulse_core::session::{
    classify_taps, AccessGate, Allowlist, AuditEntry, AuditEvent, AuthResult, DisplayMode, Gesture,
    SessionError, SessionEvent, SessionLifecycle, SessionState, TapWindow,
};
use pulse_core::store::{
    FaultPlan, ListFilter, SessionMeta, SessionRecord, Store, StoreError, StoreOptions, StoredAudio,
};
use pulse_sim::{load_script, run, RunOptions};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reqwest::blocking::Client;
use reqwest::Method;
use serde_json::{json, Value};

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("state machine", state_machine),
        ("gesture oracle", gesture_oracle),
        ("analytics oracles", analytics_oracles),
        ("determinism", determinism),
        ("end-to-end", end_to_end),
        ("latency budget", latency_budget),
        ("persistence", persistence),
        ("API contract", api_contract),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {message}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS  {name:<18} {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<18} {detail} [{secs:.2}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

// ---------------------------------------------------------------- state machine

/// Reference lifecycle: the only legal moves, written out by hand.
fn reference_next(state: SessionState, event: SessionEvent) -> Option<SessionState> {
    use SessionState::*;
    match (state, event) {
        (Ready, SessionEvent::Start) => Some(Recording),
        (Recording, SessionEvent::Stop) => Some(Ended),
        _ => None,
    }
}

fn state_machine() -> Verdict {
    const SEQUENCES: usize = 10_000;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let allow: Allowlist = ["card-ok"].into_iter().collect();
    let (mut illegal, mut rejected, mut recording_seen) = (0u64, 0u64, 0u64);

    for n in 0..SEQUENCES {
        let id = format!("s{n}");
        let mut gate = AccessGate::new(allow.clone());
        let mut lc = SessionLifecycle::new(&id);
        let mut model = SessionState::Locked;
        for step in 0..rng.gen_range(1..=24u64) {
            let at = step * 10;
            match rng.gen_range(0..5) {
                0 => {
                    ensure!(
                        gate.authenticate(&mut lc, "card-ok", at) == Ok(AuthResult::Granted),
                        "grant failed"
                    );
                    if model == SessionState::Locked {
                        model = SessionState::Ready;
                    }
                }
                1 => ensure!(
                    gate.authenticate(&mut lc, "card-no", at) == Ok(AuthResult::Denied),
                    "deny failed"
                ),
                2 => ensure!(
                    matches!(
                        gate.authenticate(&mut lc, " ", at),
                        Err(SessionError::Validation(_))
                    ),
                    "empty uid not a validation error"
                ),
                k => {
                    let event = if k == 3 {
                        SessionEvent::Start
                    } else {
                        SessionEvent::Stop
                    };
                    let result = gate.transition(&mut lc, event, at);
                    match reference_next(model, event) {
                        Some(next) => {
                            ensure!(
                                result == Ok(next),
                                "seq {n}: legal {event} from {model} gave {result:?}"
                            );
                            model = next;
                        }
                        None => {
                            illegal += 1;
                            if result.is_err() && lc.state() == model {
                                rejected += 1;
                            }
                        }
                    }
                }
            }
            ensure!(
                lc.state() == model,
                "seq {n}: state {} but reference {model}",
                lc.state()
            );
            if lc.state() == SessionState::Recording {
                recording_seen += 1;
                let entries = gate.audit().entries();
                let granted = entries.iter().position(|e| {
                    matches!(e.event, AuditEvent::AuthGranted { .. })
                        && e.session_id.as_deref() == Some(&id)
                });
                let recording = entries.iter().position(|e| {
                    matches!(
                        e.event,
                        AuditEvent::Transition {
                            to: SessionState::Recording,
                            ..
                        }
                    ) && e.session_id.as_deref() == Some(&id)
                });
                ensure!(
                    matches!((granted, recording), (Some(g), Some(r)) if g < r),
                    "seq {n}: Recording without a prior granted authentication"
                );
            }
        }
        ensure!(lc.history_is_legal(), "seq {n}: illegal history");
        ensure!(gate.audit().verify().is_ok(), "seq {n}: audit inconsistent");
    }

    // Every (state, event) pair outside the reference table, exhaustively.
    let mut pairs = 0;
    for target in [
        SessionState::Locked,
        SessionState::Ready,
        SessionState::Recording,
        SessionState::Ended,
    ] {
        for event in [SessionEvent::Start, SessionEvent::Stop] {
            let mut gate = AccessGate::new(allow.clone());
            let mut lc = SessionLifecycle::new("x");
            let path: &[SessionEvent] = match target {
                SessionState::Locked => &[],
                SessionState::Ready => &[],
                SessionState::Recording => &[SessionEvent::Start],
                SessionState::Ended => &[SessionEvent::Start, SessionEvent::Stop],
            };
            if target != SessionState::Locked {
                gate.authenticate(&mut lc, "card-ok", 0).unwrap();
            }
            for e in path {
                gate.transition(&mut lc, *e, 1).unwrap();
            }
            if reference_next(target, event).is_none() {
                pairs += 1;
                illegal += 1;
                if gate.transition(&mut lc, event, 2).is_err() && lc.state() == target {
                    rejected += 1;
                }
            }
        }
    }
    let elapsed = started.elapsed();
    ensure!(
        rejected == illegal,
        "{rejected}/{illegal} illegal transitions rejected"
    );
    ensure!(recording_seen > 0, "no sequence reached Recording");
    ensure!(
        elapsed < Duration::from_secs(10),
        "took {elapsed:?}, budget 10 s"
    );
    Ok(format!(
        "{SEQUENCES} sequences, {illegal} illegal attempts ({pairs} exhaustive) all rejected, {recording_seen} Recording states audited, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- gestures

/// Every way to cover the taps with singles and in-window pairs.
fn tilings(
    taps: &[u64],
    window: u64,
    at: usize,
    prefix: &mut Vec<Gesture>,
    out: &mut Vec<Vec<Gesture>>,
) {
    if at >= taps.len() {
        out.push(prefix.clone());
        return;
    }
    prefix.push(Gesture::SingleTap);
    tilings(taps, window, at + 1, prefix, out);
    prefix.pop();
    if at + 1 < taps.len() && taps[at + 1] - taps[at] <= window {
        prefix.push(Gesture::DoubleTap);
        tilings(taps, window, at + 2, prefix, out);
        prefix.pop();
    }
}

/// Brute-force reference: the tiling that prefers a double tap at the
/// earliest point where the choice exists.
fn reference_gestures(taps: &[u64], window: u64) -> Vec<Gesture> {
    let mut all = Vec::new();
    tilings(taps, window, 0, &mut Vec::new(), &mut all);
    let rank = |g: &Vec<Gesture>| {
        g.iter()
            .map(|g| u8::from(*g == Gesture::DoubleTap))
            .collect::<Vec<_>>()
    };
    all.into_iter().max_by_key(rank).unwrap()
}

fn gesture_oracle() -> Verdict {
    const PER_WINDOW: usize = 10_000;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut doubles = 0;
    for window in [100u64, 400, 1000] {
        let w = TapWindow::new(window).unwrap();
        for n in 0..PER_WINDOW {
            let len = rng.gen_range(0..=12);
            let mut t = rng.gen_range(0..5_000u64);
            let mut taps = Vec::with_capacity(len);
            for _ in 0..len {
                taps.push(t);
                t += match rng.gen_range(0..6) {
                    0 => 0,
                    1 => window - 1,
                    2 => window,
                    3 => window + 1,
                    _ => rng.gen_range(0..=3 * window),
                };
            }
            let got = classify_taps(&taps, w).map_err(|e| e.to_string())?;
            let want = reference_gestures(&taps, window);
            ensure!(
                got == want,
                "window {window}, case {n}: taps {taps:?} gave {got:?}, reference {want:?}"
            );
            doubles += got.iter().filter(|g| **g == Gesture::DoubleTap).count();
        }
    }
    let elapsed = started.elapsed();
    ensure!(
        elapsed < Duration::from_secs(10),
        "took {elapsed:?}, budget 10 s"
    );
    Ok(format!(
        "{} sequences over windows 100/400/1000 ms match exactly ({doubles} double taps), {:.2}s",
        3 * PER_WINDOW,
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- analytics

const WORDS: &[&str] = &[
    "the",
    "app",
    "crashes",
    "when",
    "I",
    "sync",
    "my",
    "list",
    "love",
    "hate",
    "slow",
    "fast",
    "need",
    "want",
    "feature",
    "button",
    "weekend",
    "morning",
    "store",
    "price",
    "expensive",
    "easy",
    "confusing",
    "great",
    "terrible",
    "a",
    "we",
    "use",
    "it",
    "every",
    "day",
    "Café",
    "naïve",
    "über",
    "x2",
    "42",
    "don't",
    "e-mail",
    "SHOP",
    "Shopping",
    "wish",
    "frustrating",
    "quick",
    "kids",
    "work",
    "phone",
    "calendar",
    "notes",
    "happy",
];
const PUNCT: &[&str] = &[
    " ", " ", " ", ", ", "; ", " - ", "... ", "(", ") ", "/", "!",
];

fn random_text(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    let mut text = String::new();
    for i in 0..rng.gen_range(0..=max_words) {
        if i > 0 {
            text.push_str(PUNCT.choose(rng).unwrap());
        }
        text.push_str(WORDS.choose(rng).unwrap());
        if rng.gen_ratio(1, 6) {
            text.push_str([".", "?", "!"].choose(rng).unwrap());
        }
    }
    text
}

/// Independent recount: walk characters, collect alphanumeric runs of the
/// lowercased text, drop short tokens and stopwords, then rank.
fn naive_keywords(texts: &[String], exact: &[String], stems: &[String]) -> Vec<KeywordStat> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for text in texts {
        let lower = text.to_lowercase();
        let mut current = String::new();
        for c in lower.chars().chain(std::iter::once(' ')) {
            if c.is_alphanumeric() {
                current.push(c);
                continue;
            }
            if !current.is_empty() {
                let token = std::mem::take(&mut current);
                let stop =
                    exact.contains(&token) || stems.iter().any(|s| token.starts_with(s.as_str()));
                if token.chars().count() > 1 && !stop {
                    *counts.entry(token).or_default() += 1;
                }
            }
        }
    }
    let mut out: Vec<KeywordStat> = counts
        .into_iter()
        .map(|(token, count)| KeywordStat { token, count })
        .collect();
    out.sort_by(|a, b| {
        (std::cmp::Reverse(a.count), &a.token).cmp(&(std::cmp::Reverse(b.count), &b.token))
    });
    out
}

fn shipped_stopwords() -> (Vec<String>, Vec<String>) {
    let text = include_str!("../../core/config/stopwords.txt");
    let (mut exact, mut stems) = (Vec::new(), Vec::new());
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        match line.strip_suffix('*') {
            Some(stem) => stems.push(stem.to_lowercase()),
            None => exact.push(line.to_lowercase()),
        }
    }
    (exact, stems)
}

fn fuzz_segments(rng: &mut ChaCha8Rng, id: &str) -> Vec<TranscriptSegment> {
    let n = rng.gen_range(1..=12);
    let mut segments = Vec::new();
    for seq in 0..n {
        let text = random_text(rng, 25);
        if text.trim().is_empty() {
            continue;
        }
        let speaker = *[
            Speaker::Interviewer,
            Speaker::Participant,
            Speaker::Participant,
            Speaker::Unknown,
        ]
        .choose(rng)
        .unwrap();
        segments.push(TranscriptSegment {
            segment_id: TranscriptSegment::id_for(seq),
            session_id: id.into(),
            seq,
            speaker,
            text,
            t_start: seq * 1000,
            t_end: seq * 1000 + 500,
        });
    }
    segments
}

fn check_tagging(tagging: &Tagging, registry: &TaxonomyRegistry) -> Result<(), String> {
    let taxonomy = registry
        .get(tagging.taxonomy_version)
        .map_err(|e| e.to_string())?;
    ensure!(
        tagging.tags.len() == tagging.sentences.len(),
        "tag count differs from sentence count"
    );
    for (sentence, tag) in tagging.sentences.iter().zip(&tagging.tags) {
        ensure!(
            tag.sentence_id == sentence.sentence_id,
            "tags out of sentence order"
        );
        ensure!(
            !tag.labels.is_empty(),
            "sentence {} has no label",
            sentence.sentence_id
        );
        let mut unique = tag.labels.clone();
        unique.sort();
        unique.dedup();
        ensure!(
            unique.len() == tag.labels.len(),
            "duplicate labels on {}",
            sentence.sentence_id
        );
        ensure!(
            tag.labels.iter().all(|l| taxonomy.allows(l)),
            "label outside taxonomy"
        );
        if tag.labels.contains(&TagLabel::NoLabel) {
            ensure!(
                tag.labels.len() == 1,
                "No Label combined with others on {}",
                sentence.sentence_id
            );
        }
        ensure!(
            tag.polarity.is_some() == tag.labels.contains(&TagLabel::Attitude),
            "polarity present iff Attitude violated on {}",
            sentence.sentence_id
        );
    }
    Ok(())
}

fn check_report(
    report: &ThematicReport,
    tagging: &Tagging,
    registry: &TaxonomyRegistry,
) -> Result<(), String> {
    let taxonomy = registry
        .get(tagging.taxonomy_version)
        .map_err(|e| e.to_string())?;
    let mut expected_groups = Vec::new();
    for label in taxonomy.ordered_labels() {
        let ids: Vec<String> = tagging
            .tags
            .iter()
            .filter(|t| t.labels.contains(&label))
            .map(|t| t.sentence_id.clone())
            .collect();
        if !ids.is_empty() {
            expected_groups.push((label, ids));
        }
    }
    let got: Vec<(TagLabel, Vec<String>)> = report
        .groups
        .iter()
        .map(|g| (g.label.clone(), g.sentence_ids.clone()))
        .collect();
    ensure!(got == expected_groups, "report groups differ from the tags");
    let grouped: usize = report.groups.iter().map(|g| g.sentence_ids.len()).sum();
    let labelled: usize = tagging.tags.iter().map(|t| t.labels.len()).sum();
    ensure!(
        grouped == labelled,
        "grouped {grouped} != labelled {labelled}"
    );
    let v = report.overall_sentiment.value;
    ensure!(
        v.is_finite() && (-1.0..=1.0).contains(&v),
        "sentiment {v} outside [-1, 1]"
    );
    Ok(())
}

fn analytics_oracles() -> Verdict {
    const CASES: usize = 1_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);

    // Keyword frequency against the naive recount, with random and shipped stopwords.
    let (ship_exact, ship_stems) = shipped_stopwords();
    let shipped = AnalysisResources::default().stopwords;
    for n in 0..CASES {
        let texts: Vec<String> = (0..rng.gen_range(0..4))
            .map(|_| random_text(&mut rng, 40))
            .collect();
        let (exact, stems, lexicon) = if n % 2 == 0 {
            (ship_exact.clone(), ship_stems.clone(), shipped.clone())
        } else {
            let exact: Vec<String> = WORDS
                .choose_multiple(&mut rng, 6)
                .map(|w| w.to_lowercase())
                .filter(|w| w.chars().all(char::is_alphanumeric))
                .collect();
            let stems: Vec<String> = ["sh", "fr", "we"]
                .choose_multiple(&mut rng, 1)
                .map(|s| s.to_string())
                .collect();
            let words: Vec<String> = exact
                .iter()
                .cloned()
                .chain(stems.iter().map(|s| format!("{s}*")))
                .collect();
            (
                exact,
                stems,
                Lexicon::from_words(&words).map_err(|e| e.to_string())?,
            )
        };
        let got = keyword_frequency(texts.iter().map(String::as_str), &lexicon);
        let want = naive_keywords(&texts, &exact, &stems);
        ensure!(
            got == want,
            "keyword case {n}: {texts:?}\n got {got:?}\nwant {want:?}"
        );
    }

    // Tagging totality, No Label exclusivity and report accounting on fuzzed sessions.
    let engine =
        AnalysisEngine::rule_based(AnalysisConfig::default()).map_err(|e| e.to_string())?;
    let mut registry = TaxonomyRegistry::default();
    let mut custom: Vec<LabelDef> = registry.current().labels.clone();
    custom.retain(|l| l.name != TagLabel::Scenarios);
    let mut pricing = LabelDef::new("Pricing");
    pricing.terms = vec![LexTerm::parse("price*")?, LexTerm::parse("expensive")?];
    custom.insert(0, pricing);
    registry.set_taxonomy(custom).map_err(|e| e.to_string())?;

    let (mut sessions, mut sentences, mut skipped) = (0, 0, 0);
    for n in 0..CASES {
        let id = format!("f{n}");
        let segments = fuzz_segments(&mut rng, &id);
        let version = if n % 3 == 0 { 2 } else { 1 };
        let tagging = match engine.tag_transcript(&segments, &registry, version) {
            Ok(t) => t,
            Err(_) if segments.iter().all(|s| s.speaker == Speaker::Interviewer) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(format!("session {n}: {e}")),
        };
        check_tagging(&tagging, &registry).map_err(|e| format!("session {n}: {e}"))?;
        let report = engine
            .thematic_report(SessionState::Ended, &id, &tagging, &registry)
            .map_err(|e| format!("session {n}: {e}"))?;
        check_report(&report, &tagging, &registry).map_err(|e| format!("session {n}: {e}"))?;
        ensure!(
            engine
                .thematic_report(SessionState::Recording, &id, &tagging, &registry)
                .is_err(),
            "report allowed before the session ended"
        );
        sessions += 1;
        sentences += tagging.sentences.len();
    }

    let mut scored = 0;
    for _ in 0..CASES {
        let s = engine.sentiment(&random_text(&mut rng, 60));
        ensure!(
            s.value.is_finite() && (-1.0..=1.0).contains(&s.value),
            "sentiment {} out of range",
            s.value
        );
        scored += 1;
    }
    Ok(format!(
        "{CASES} keyword recounts exact; {sessions} fuzzed sessions ({sentences} sentences, {skipped} interviewer-only skipped) satisfy totality, exclusivity and report accounting; {scored} sentiments in [-1, 1]"
    ))
}

// ---------------------------------------------------------------- device runs

fn golden_run(store: &Path) -> (Server, pulse_sim::RunReport) {
    let server = Server::start(deterministic_config(store));
    let script = load_script(&script_path("golden.txt")).unwrap();
    let report = run(&script, &RunOptions::virtual_clock(&server.base), |_| {}).unwrap();
    (server, report)
}

fn tree_bytes(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn export(base: &str, id: &str) -> Vec<u8> {
    let resp = Client::new()
        .get(format!("{base}/v1/sessions/{id}/export"))
        .bearer_auth(READER)
        .send()
        .unwrap();
    assert!(resp.status().is_success());
    resp.bytes().unwrap().to_vec()
}

fn determinism() -> Verdict {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (server_a, run_a) = golden_run(a.path());
    let (server_b, run_b) = golden_run(b.path());
    ensure!(
        run_a.transcript() == run_b.transcript(),
        "screen transcripts differ"
    );
    let export_a = export(&server_a.base, &run_a.session_id);
    let export_b = export(&server_b.base, &run_b.session_id);
    ensure!(export_a == export_b, "export archives differ");
    drop((server_a, server_b));
    let (files_a, files_b) = (tree_bytes(a.path()), tree_bytes(b.path()));
    let names: Vec<_> = files_a.keys().collect();
    ensure!(
        files_a.keys().eq(files_b.keys()),
        "persisted file sets differ: {names:?}"
    );
    for (path, bytes) in &files_a {
        ensure!(
            files_b[path] == *bytes,
            "{} differs between runs",
            path.display()
        );
    }
    Ok(format!(
        "{} screen frames, {} persisted files and a {}-byte archive identical across two runs",
        run_a.screens.len(),
        files_a.len(),
        export_a.len()
    ))
}

fn end_to_end() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let (server, report) = golden_run(dir.path());
    let elapsed = started.elapsed();
    let script = load_script(&script_path("golden.txt")).unwrap();
    let taps = script.tap_times();
    let gestures = classify_taps(&taps, TapWindow::default()).map_err(|e| e.to_string())?;
    ensure!(
        script.speech_count() >= 20,
        "golden script has {} speech lines",
        script.speech_count()
    );
    ensure!(
        gestures == [Gesture::SingleTap, Gesture::DoubleTap],
        "golden taps classify as {gestures:?}"
    );

    let record = server
        .service
        .store()
        .load_session(&report.session_id)
        .map_err(|e| e.to_string())?;
    let spoken: Vec<&str> = script
        .events
        .iter()
        .filter_map(|e| match &e.kind {
            pulse_sim::script::EventKind::Speech { text, .. } => Some(text.as_str()),
            _ => None,
        })
        .collect();
    let stored: Vec<&str> = record.segments.iter().map(|s| s.text.as_str()).collect();
    ensure!(
        stored == spoken,
        "stored transcript differs from the script"
    );
    ensure!(
        record
            .segments
            .iter()
            .enumerate()
            .all(|(i, s)| s.seq == i as u64),
        "segments not in seq order"
    );
    let snaps = &record.snapshots;
    ensure!(snaps.len() >= 2, "{} snapshots", snaps.len());
    ensure!(
        snaps
            .windows(2)
            .all(|w| w[0].version < w[1].version && w[0].coverage_seq <= w[1].coverage_seq),
        "snapshot versions or coverage not monotone"
    );
    ensure!(
        record.meta.state() == SessionState::Ended,
        "final state {}",
        record.meta.state()
    );
    ensure!(
        record.meta.display_mode == Some(DisplayMode::FollowUps),
        "final mode {:?}",
        record.meta.display_mode
    );
    let registry = TaxonomyRegistry::default();
    let tagging = record.tagging.as_ref().ok_or("no tagging")?;
    let thematic = record.report.as_ref().ok_or("no report")?;
    check_tagging(tagging, &registry)?;
    check_report(thematic, tagging, &registry)?;
    ensure!(
        elapsed < Duration::from_secs(30),
        "run took {elapsed:?}, budget 30 s"
    );
    Ok(format!(
        "{} lines stored in order, snapshots {:?}, final mode FollowUps, {} report groups match tags, {:.2}s",
        stored.len(),
        snaps.iter().map(|s| s.version).collect::<Vec<_>>(),
        thematic.groups.len(),
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- latency

fn post(client: &Client, url: &str, token: &str, body: Value) -> Value {
    let resp = client
        .post(url)
        .bearer_auth(token)
        .json(&body)
        .send()
        .unwrap();
    let status = resp.status();
    let value: Value = resp.json().unwrap();
    assert!(status.is_success(), "{url}: {status} {value}");
    value
}

fn latency_budget() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut config = deterministic_config(dir.path());
    config.fsync = true;
    let server = Server::start(config);
    let client = Client::new();
    let base = &server.base;
    let created: Value = client
        .post(format!("{base}/v1/sessions"))
        .json(&json!({ "credential": CARD, "at": 0 }))
        .send()
        .unwrap()
        .json()
        .unwrap();
    let id = created["session_id"].as_str().unwrap().to_string();
    let token = created["token"].as_str().unwrap().to_string();
    post(
        &client,
        &format!("{base}/v1/sessions/{id}/transitions"),
        &token,
        json!({ "event": "start", "at": 0 }),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut words = 0;
    let mut seq = 0u64;
    while words < 10_000 {
        let mut text = String::new();
        for s in 0..5 {
            let n = rng.gen_range(8..=14);
            let sentence: Vec<&str> = (0..n).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
            if s > 0 {
                text.push(' ');
            }
            text.push_str(&sentence.join(" "));
            text.push('.');
            words += n;
        }
        let speaker = if seq % 5 == 0 {
            "Interviewer"
        } else {
            "Participant"
        };
        post(
            &client,
            &format!("{base}/v1/sessions/{id}/chunks"),
            &token,
            json!({ "seq": seq, "t_start": seq * 10, "t_end": seq * 10 + 9, "speaker": speaker, "text": text }),
        );
        seq += 1;
    }

    let mut samples = Vec::with_capacity(100);
    let mut at = 100_000;
    for i in 0..100 {
        // Alternate double taps (completed by the second tap) and single taps
        // (completed by the clock tick after the window).
        let started;
        let outcome = if i % 2 == 0 {
            post(
                &client,
                &format!("{base}/v1/sessions/{id}/taps"),
                &token,
                json!({ "at": at }),
            );
            started = Instant::now();
            post(
                &client,
                &format!("{base}/v1/sessions/{id}/taps"),
                &token,
                json!({ "at": at + 100 }),
            )
        } else {
            post(
                &client,
                &format!("{base}/v1/sessions/{id}/taps"),
                &token,
                json!({ "at": at }),
            );
            started = Instant::now();
            post(
                &client,
                &format!("{base}/v1/sessions/{id}/tick"),
                &token,
                json!({ "at": at + 401 }),
            )
        };
        samples.push(started.elapsed());
        ensure!(
            outcome["snapshot"]["version"] == i + 1,
            "tap {i}: no snapshot v{}: {outcome}",
            i + 1
        );
        at += 1_000;
    }
    samples.sort();
    let p50 = samples[49];
    let p95 = samples[94];
    let max = samples[99];
    let budget = Duration::from_millis(100);
    let detail = format!(
        "{words}-word transcript, 100 gestures: p50 {:.1} ms, p95 {:.1} ms, max {:.1} ms (budget p95 <= 100 ms)",
        p50.as_secs_f64() * 1e3,
        p95.as_secs_f64() * 1e3,
        max.as_secs_f64() * 1e3
    );
    ensure!(p95 <= budget, "{detail}");
    Ok(detail)
}

// ---------------------------------------------------------------- persistence

fn lifecycle(id: &str, steps: usize) -> SessionLifecycle {
    let mut gate = AccessGate::new([CARD].into_iter().collect());
    let mut lc = SessionLifecycle::new(id);
    if steps >= 1 {
        gate.authenticate(&mut lc, CARD, 5).unwrap();
    }
    if steps >= 2 {
        gate.transition(&mut lc, SessionEvent::Start, 10).unwrap();
    }
    if steps >= 3 {
        gate.transition(&mut lc, SessionEvent::Stop, 99_000)
            .unwrap();
    }
    lc
}

fn random_title(rng: &mut ChaCha8Rng) -> String {
    let pieces = [
        "Interview",
        "naïve \"quote\"",
        "line\nbreak",
        "emoji 🎤",
        "tab\tsep",
        "back\\slash",
        "",
        "Ω",
    ];
    (0..rng.gen_range(1..4))
        .map(|_| *pieces.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// A valid record built the way the service builds one, with random content.
fn fuzz_record(
    rng: &mut ChaCha8Rng,
    engine: &AnalysisEngine,
    registry: &TaxonomyRegistry,
    id: &str,
) -> SessionRecord {
    let steps = rng.gen_range(1..=3);
    let lc = lifecycle(id, steps);
    let meta = SessionMeta {
        id: id.into(),
        title: random_title(rng),
        created_at: rng.gen_range(0..=u64::MAX / 2),
        lifecycle: lc,
        taxonomy_version: 1,
        transcription_provider: "inline_text".into(),
        analysis_provider: "rule_based".into(),
        sample_rate: *[8_000, 16_000, 44_100].choose(rng).unwrap(),
        display_mode: [
            None,
            Some(DisplayMode::Summary),
            Some(DisplayMode::FollowUps),
        ]
        .choose(rng)
        .unwrap()
        .clone(),
        segment_count: 0,
        snapshot_versions: vec![],
        has_tagging: false,
        has_report: false,
        audio_seqs: vec![],
    };
    let mut record = SessionRecord::new(meta);
    if steps >= 2 {
        record.segments = fuzz_segments(rng, id);
        let mut version = 0;
        for cut in 1..=record.segments.len() {
            if rng.gen_ratio(1, 3) {
                if let Ok(mut snap) = engine.run_pass(
                    id,
                    &record.segments[..cut],
                    registry.current(),
                    0,
                    rng.gen(),
                ) {
                    version += 1;
                    snap.version = version;
                    record.snapshots.push(snap);
                }
            }
        }
        let mut seq = 0;
        for _ in 0..rng.gen_range(0..3) {
            seq += rng.gen_range(1..5);
            let len = rng.gen_range(0..64);
            record.audio.push(StoredAudio {
                seq,
                data: (0..len).map(|_| rng.gen()).collect(),
            });
        }
    }
    if steps == 3 {
        if let Ok(tagging) = engine.tag_transcript(&record.segments, registry, 1) {
            let mut report = engine
                .thematic_report(SessionState::Ended, id, &tagging, registry)
                .unwrap();
            if rng.gen_ratio(1, 2) {
                report.overall_sentiment = SentimentScore {
                    value: rng.gen_range(-1.0..=1.0),
                    basis: SentimentBasis::Provider,
                };
            }
            record.tagging = Some(tagging);
            record.report = Some(report);
        }
    }
    record.sync_refs();
    record
}

fn store_opts(fault: Option<FaultPlan>) -> StoreOptions {
    StoreOptions {
        fsync: false,
        fault,
    }
}

fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// The index lists exactly the sessions on disk and each entry loads and
/// agrees with its document.
fn index_consistent(store: &Store, root: &Path) -> Result<usize, String> {
    let entries = store.list_sessions(&ListFilter::default());
    let mut on_disk: Vec<String> = std::fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != "taxonomies")
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = entries.iter().map(|e| e.session_id.clone()).collect();
    listed.sort();
    ensure!(
        listed == on_disk,
        "index {listed:?} but directories {on_disk:?}"
    );
    for e in &entries {
        let r = store
            .load_session(&e.session_id)
            .map_err(|x| format!("{}: {x}", e.session_id))?;
        ensure!(
            r.meta.segment_count == e.segment_count
                && r.meta.state() == e.state
                && r.meta.snapshot_versions.last().copied() == e.latest_snapshot_version,
            "index entry for {} disagrees with its document",
            e.session_id
        );
    }
    for name in std::fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
    {
        ensure!(!name.starts_with('.'), "leftover {name}");
    }
    Ok(entries.len())
}

struct Baseline {
    records: BTreeMap<String, SessionRecord>,
    taxonomies: usize,
    audit: Vec<AuditEntry>,
}

fn persistence() -> Verdict {
    const RECORDS: usize = 1_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let engine =
        AnalysisEngine::rule_based(AnalysisConfig::default()).map_err(|e| e.to_string())?;
    let registry = TaxonomyRegistry::default();

    // Round trip, including a second save that appends to an earlier revision.
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), store_opts(None)).map_err(|e| e.to_string())?;
    let mut records = Vec::with_capacity(RECORDS);
    for n in 0..RECORDS {
        let record = fuzz_record(&mut rng, &engine, &registry, &format!("r{n:04}"));
        if n % 2 == 0 && record.segments.len() > 1 {
            let mut earlier = record.clone();
            earlier.segments.truncate(record.segments.len() / 2);
            earlier
                .snapshots
                .retain(|s| s.coverage_seq < earlier.segments.len() as u64);
            earlier.tagging = None;
            earlier.report = None;
            earlier.meta.lifecycle = lifecycle(record.id(), 2);
            earlier.sync_refs();
            store
                .save_session(&earlier)
                .map_err(|e| format!("{n}: {e}"))?;
        }
        store
            .save_session(&record)
            .map_err(|e| format!("{n}: {e}"))?;
        let loaded = store.load_session(record.id()).map_err(|e| e.to_string())?;
        ensure!(loaded == record, "record {n} changed in a round trip");
        records.push(record);
    }
    drop(store);
    let store = Store::open(dir.path(), store_opts(None)).map_err(|e| e.to_string())?;
    for record in &records {
        let loaded = store.load_session(record.id()).map_err(|e| e.to_string())?;
        ensure!(
            loaded == *record,
            "record {} changed across reopen",
            record.id()
        );
    }
    ensure!(
        index_consistent(&store, dir.path())? == RECORDS,
        "index size after reopen"
    );

    // Crash injection: a baseline store, then each write type killed at every
    // file operation it performs.
    let base_dir = tempfile::tempdir().unwrap();
    let existing = fuzz_record(&mut rng, &engine, &registry, "live");
    let mut existing_next = existing.clone();
    let other = fuzz_record(&mut rng, &engine, &registry, "other");
    {
        let store = Store::open(base_dir.path(), store_opts(None)).unwrap();
        store.save_taxonomy(registry.current()).unwrap();
        store.save_session(&existing).unwrap();
        store.save_session(&other).unwrap();
    }
    // A later revision of `live` that appends and replaces.
    existing_next.meta.lifecycle = lifecycle("live", 3);
    let extra_seq = existing_next.segments.last().map_or(0, |s| s.seq + 1);
    existing_next.segments.push(TranscriptSegment {
        segment_id: TranscriptSegment::id_for(extra_seq),
        session_id: "live".into(),
        seq: extra_seq,
        speaker: Speaker::Participant,
        text: "One more answer that I really love.".into(),
        t_start: 0,
        t_end: 1,
    });
    let tagging = engine
        .tag_transcript(&existing_next.segments, &registry, 1)
        .unwrap();
    existing_next.report = Some(
        engine
            .thematic_report(SessionState::Ended, "live", &tagging, &registry)
            .unwrap(),
    );
    existing_next.tagging = Some(tagging);
    existing_next.sync_refs();
    let fresh = fuzz_record(&mut rng, &engine, &registry, "fresh");
    let archive = {
        let scratch = tempfile::tempdir().unwrap();
        let s = Store::open(scratch.path(), store_opts(None)).unwrap();
        s.save_session(&fresh).unwrap();
        s.export_session("fresh", vec![], false).unwrap()
    };
    let mut next_taxonomy = registry.clone();
    let labels = next_taxonomy.current().labels.clone();
    let new_taxonomy = next_taxonomy.set_taxonomy(labels).unwrap().clone();
    let audit_entry = AuditEntry {
        at_ms: 7,
        session_id: None,
        event: AuditEvent::AuthDenied {
            uid: "intruder".into(),
        },
    };
    let baseline = Baseline {
        records: BTreeMap::from([
            ("live".to_string(), existing.clone()),
            ("other".to_string(), other.clone()),
        ]),
        taxonomies: 1,
        audit: vec![],
    };

    type Write<'a> = (
        &'a str,
        Box<dyn Fn(&Store) -> Result<(), StoreError> + 'a>,
        &'a str,
        Option<SessionRecord>,
    );
    let writes: Vec<Write> = vec![
        (
            "create",
            Box::new(|s| s.save_session(&fresh).map(drop)),
            "fresh",
            Some(fresh.clone()),
        ),
        (
            "append+replace",
            Box::new(|s| s.save_session(&existing_next).map(drop)),
            "live",
            Some(existing_next.clone()),
        ),
        (
            "delete",
            Box::new(|s| s.delete_session("other")),
            "other",
            None,
        ),
        (
            "import",
            Box::new(|s| s.import_archive(&archive).map(drop)),
            "fresh",
            Some(fresh.clone()),
        ),
        (
            "taxonomy",
            Box::new(|s| s.save_taxonomy(&new_taxonomy)),
            "",
            None,
        ),
        (
            "audit",
            Box::new(|s| s.append_audit(&audit_entry)),
            "",
            None,
        ),
    ];

    let mut crashes = 0;
    let mut summary = Vec::new();
    for (kind, write, target, after) in &writes {
        let probe = tempfile::tempdir().unwrap();
        copy_tree(base_dir.path(), probe.path());
        let (open_ops, total_ops) = {
            let s = Store::open(probe.path(), store_opts(None)).unwrap();
            let before = s.fs_ops();
            write(&s).map_err(|e| format!("{kind}: {e}"))?;
            (before, s.fs_ops())
        };
        ensure!(total_ops > open_ops, "{kind} performed no file operations");
        for crash_at in open_ops..total_ops {
            let dir = tempfile::tempdir().unwrap();
            copy_tree(base_dir.path(), dir.path());
            {
                let s = Store::open(
                    dir.path(),
                    store_opts(Some(FaultPlan {
                        crash_at_op: crash_at,
                    })),
                )
                .unwrap();
                ensure!(
                    write(&s).is_err(),
                    "{kind}: crash at op {crash_at} went unnoticed"
                );
            }
            let s = Store::open(dir.path(), store_opts(None))
                .map_err(|e| format!("{kind} @{crash_at}: reopen failed: {e}"))?;
            index_consistent(&s, dir.path()).map_err(|e| format!("{kind} @{crash_at}: {e}"))?;
            for (id, before) in &baseline.records {
                if id == target {
                    continue;
                }
                ensure!(
                    s.load_session(id).ok().as_ref() == Some(before),
                    "{kind} @{crash_at}: {id} disturbed"
                );
            }
            if !target.is_empty() {
                let now = s.load_session(target).ok();
                let prior = baseline.records.get(*target).cloned();
                ensure!(
                    now == prior || now == *after,
                    "{kind} @{crash_at}: {target} is neither the old nor the new version"
                );
            }
            let taxonomies = s.load_taxonomies().map_err(|e| e.to_string())?.len();
            ensure!(
                taxonomies == baseline.taxonomies
                    || (*kind == "taxonomy" && taxonomies == baseline.taxonomies + 1),
                "{kind} @{crash_at}: {taxonomies} taxonomies"
            );
            let audit = s.load_audit().map_err(|e| e.to_string())?;
            ensure!(
                audit == baseline.audit || (*kind == "audit" && audit == [audit_entry.clone()]),
                "{kind} @{crash_at}: audit log torn"
            );
            crashes += 1;
        }
        summary.push(format!("{kind} {}", total_ops - open_ops));
    }
    Ok(format!(
        "{RECORDS} fuzzed records round-trip (and survive reopen); {crashes} injected crashes across write types [{}] all reopen consistent",
        summary.join(", ")
    ))
}

// ---------------------------------------------------------------- API contract

struct Contract {
    defs: Value,
    validators: HashMap<String, jsonschema::Validator>,
    checked: BTreeMap<String, usize>,
}

impl Contract {
    fn new() -> Self {
        let doc: Value =
            serde_json::from_str(include_str!("../../server/schemas/api.schema.json")).unwrap();
        Self {
            defs: doc["$defs"].clone(),
            validators: HashMap::new(),
            checked: BTreeMap::new(),
        }
    }

    fn check(&mut self, def: &str, instance: &Value) -> Result<(), String> {
        if !self.validators.contains_key(def) {
            ensure!(self.defs.get(def).is_some(), "no schema {def}");
            let schema = json!({ "$defs": self.defs, "$ref": format!("#/$defs/{def}") });
            let validator = jsonschema::validator_for(&schema).map_err(|e| e.to_string())?;
            self.validators.insert(def.to_string(), validator);
        }
        let errors: Vec<String> = self.validators[def]
            .iter_errors(instance)
            .map(|e| format!("{e} at {}", e.instance_path))
            .collect();
        ensure!(errors.is_empty(), "{def}: {errors:?} in {instance}");
        *self.checked.entry(def.to_string()).or_default() += 1;
        Ok(())
    }
}

struct Api {
    client: Client,
    base: String,
}

impl Api {
    fn call(
        &self,
        method: Method,
        path: &str,
        auth: Option<&str>,
        body: Option<Value>,
    ) -> (u16, Value) {
        let mut req = self.client.request(method, format!("{}{path}", self.base));
        if let Some(a) = auth {
            req = req.bearer_auth(a);
        }
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().unwrap();
        let status = resp.status().as_u16();
        let bytes = resp.bytes().unwrap();
        (
            status,
            serde_json::from_slice(&bytes).unwrap_or(Value::Null),
        )
    }

    fn raw(
        &self,
        method: Method,
        path: &str,
        auth: Option<&str>,
        content_type: &str,
        body: Vec<u8>,
    ) -> (u16, Vec<u8>) {
        let mut req = self
            .client
            .request(method, format!("{}{path}", self.base))
            .header("content-type", content_type)
            .body(body);
        if let Some(a) = auth {
            req = req.bearer_auth(a);
        }
        let resp = req.send().unwrap();
        (resp.status().as_u16(), resp.bytes().unwrap().to_vec())
    }
}

fn expect(
    c: &mut Contract,
    def: &str,
    (status, body): (u16, Value),
    want: u16,
) -> Result<Value, String> {
    ensure!(status == want, "expected {want}, got {status}: {body}");
    c.check(def, &body)?;
    Ok(body)
}

fn expect_error(c: &mut Contract, got: (u16, Value), want: u16, code: &str) -> Result<(), String> {
    let body = expect(c, "error", got, want)?;
    ensure!(body["error"]["code"] == code, "expected {code}, got {body}");
    Ok(())
}

fn session_state_fingerprint(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    tree_bytes(root)
        .into_iter()
        .filter(|(p, _)| p != Path::new("audit.log"))
        .collect()
}

fn api_contract() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("pcm-script.txt");
    std::fs::write(
        &script,
        "P: one\nP: two\nP: three\nP: Spoken through the microphone.\n",
    )
    .unwrap();
    let store = dir.path().join("store");
    let mut config = deterministic_config(&store);
    config.transcript_script = Some(script);
    let server = Server::start(config);
    let api = Api {
        client: Client::new(),
        base: server.base.clone(),
    };
    let mut c = Contract::new();
    use Method as M;

    // Success paths for every endpoint, and the main error path of each.
    expect(
        &mut c,
        "health",
        api.call(M::GET, "/v1/health", None, None),
        200,
    )?;
    let created = expect(
        &mut c,
        "create_session",
        api.call(
            M::POST,
            "/v1/sessions",
            None,
            Some(json!({ "credential": CARD, "at": 0 })),
        ),
        201,
    )?;
    expect_error(
        &mut c,
        api.call(
            M::POST,
            "/v1/sessions",
            None,
            Some(json!({ "credential": "nope" })),
        ),
        401,
        codes::AUTH_DENIED,
    )?;
    expect_error(
        &mut c,
        api.call(
            M::POST,
            "/v1/sessions",
            None,
            Some(json!({ "credential": "" })),
        ),
        400,
        codes::INVALID_CREDENTIAL,
    )?;
    expect_error(
        &mut c,
        api.call(M::POST, "/v1/sessions", None, Some(json!({ "nope": 1 }))),
        400,
        codes::INVALID_REQUEST,
    )?;
    let id = created["session_id"].as_str().unwrap().to_string();
    let token = created["token"].as_str().unwrap().to_string();
    let t = Some(token.as_str());
    let sp = |tail: &str| format!("/v1/sessions/{id}{tail}");

    expect_error(
        &mut c,
        api.call(
            M::POST,
            &sp("/chunks"),
            t,
            Some(json!({ "seq": 0, "t_start": 0, "t_end": 1, "text": "x" })),
        ),
        409,
        codes::INVALID_STATE,
    )?;
    expect_error(
        &mut c,
        api.call(
            M::POST,
            &sp("/transitions"),
            t,
            Some(json!({ "event": "stop" })),
        ),
        409,
        codes::ILLEGAL_TRANSITION,
    )?;
    expect(
        &mut c,
        "session_status",
        api.call(
            M::POST,
            &sp("/transitions"),
            t,
            Some(json!({ "event": "start", "at": 10 })),
        ),
        200,
    )?;
    expect_error(
        &mut c,
        api.call(
            M::POST,
            &sp("/transitions"),
            t,
            Some(json!({ "event": "start", "at": 5 })),
        ),
        400,
        codes::VALIDATION_ERROR,
    )?;
    for (seq, text) in [
        "I need a faster checkout.",
        "The app crashes and I hate it.",
        "I love the reorder button.",
    ]
    .iter()
    .enumerate()
    {
        expect(
            &mut c,
            "chunk_ack",
            api.call(M::POST, &sp("/chunks"), t, Some(json!({ "seq": seq, "t_start": seq * 100, "t_end": seq * 100 + 50, "speaker": "Participant", "text": text }))),
            200,
        )?;
    }
    let gap = expect(
        &mut c,
        "error",
        api.call(
            M::POST,
            &sp("/chunks"),
            t,
            Some(json!({ "seq": 9, "t_start": 0, "t_end": 1, "text": "x" })),
        ),
        409,
    )?;
    ensure!(
        gap["error"]["code"] == codes::SEQUENCE_GAP && gap["error"]["expected_seq"] == 3,
        "gap body {gap}"
    );
    let (status, body) = api.raw(
        M::POST,
        &sp("/chunks?seq=3&t_start=400&t_end=500"),
        t,
        "application/octet-stream",
        vec![0; 64],
    );
    expect(
        &mut c,
        "chunk_ack",
        (status, serde_json::from_slice(&body).unwrap_or(Value::Null)),
        200,
    )?;
    let (status, body) = api.raw(
        M::POST,
        &sp("/chunks?seq=4&t_start=0&t_end=1"),
        t,
        "application/octet-stream",
        vec![0; 3],
    );
    expect_error(
        &mut c,
        (status, serde_json::from_slice(&body).unwrap_or(Value::Null)),
        400,
        codes::VALIDATION_ERROR,
    )?;
    let (status, body) = api.raw(M::POST, &sp("/chunks"), t, "text/plain", b"hi".to_vec());
    expect_error(
        &mut c,
        (status, serde_json::from_slice(&body).unwrap_or(Value::Null)),
        415,
        codes::INVALID_REQUEST,
    )?;

    expect(
        &mut c,
        "gesture_outcome",
        api.call(M::POST, &sp("/taps"), t, Some(json!({ "at": 1_000 }))),
        200,
    )?;
    expect(
        &mut c,
        "gesture_outcome",
        api.call(M::POST, &sp("/tick"), t, Some(json!({ "at": 1_401 }))),
        200,
    )?;
    expect(
        &mut c,
        "gesture_outcome",
        api.call(M::POST, &sp("/taps"), t, Some(json!({ "at": 2_000 }))),
        200,
    )?;
    let double = expect(
        &mut c,
        "gesture_outcome",
        api.call(M::POST, &sp("/taps"), t, Some(json!({ "at": 2_100 }))),
        200,
    )?;
    ensure!(
        double["snapshot"]["version"] == 2,
        "double tap outcome {double}"
    );
    expect_error(
        &mut c,
        api.call(M::POST, &sp("/taps"), t, Some(json!({ "at": 1 }))),
        400,
        codes::VALIDATION_ERROR,
    )?;
    expect_error(
        &mut c,
        api.call(M::POST, &sp("/tick"), t, Some(json!({ "when": 1 }))),
        400,
        codes::INVALID_REQUEST,
    )?;
    expect(
        &mut c,
        "session_detail",
        api.call(M::GET, &sp(""), Some(READER), None),
        200,
    )?;
    expect(
        &mut c,
        "session_status",
        api.call(
            M::POST,
            &sp("/transitions"),
            t,
            Some(json!({ "event": "stop", "at": 3_000 })),
        ),
        200,
    )?;
    expect_error(
        &mut c,
        api.call(M::POST, &sp("/taps"), t, Some(json!({ "at": 4_000 }))),
        409,
        codes::INVALID_STATE,
    )?;
    expect_error(
        &mut c,
        api.call(M::POST, &sp("/tick"), t, Some(json!({ "at": 4_000 }))),
        409,
        codes::INVALID_STATE,
    )?;

    expect(
        &mut c,
        "session_detail",
        api.call(M::GET, &sp(""), Some(READER), None),
        200,
    )?;
    expect(
        &mut c,
        "session_detail",
        api.call(M::GET, &sp("?label=Pain%20Points"), Some(READER), None),
        200,
    )?;
    expect_error(
        &mut c,
        api.call(M::GET, &sp("?label=Bogus"), Some(READER), None),
        400,
        codes::UNKNOWN_LABEL,
    )?;
    expect_error(
        &mut c,
        api.call(M::GET, "/v1/sessions/absent", Some(READER), None),
        404,
        codes::NOT_FOUND,
    )?;
    expect(
        &mut c,
        "session_list",
        api.call(M::GET, "/v1/sessions?state=Ended", Some(READER), None),
        200,
    )?;
    expect_error(
        &mut c,
        api.call(M::GET, "/v1/sessions?state=Nope", Some(READER), None),
        400,
        codes::VALIDATION_ERROR,
    )?;
    expect(
        &mut c,
        "taxonomy",
        api.call(M::GET, "/v1/taxonomy", Some(READER), None),
        200,
    )?;
    expect(
        &mut c,
        "taxonomy",
        api.call(M::PUT, "/v1/taxonomy", Some(ADMIN), Some(json!({ "labels": [{ "name": "Pricing", "terms": ["price*"] }, { "name": "No Label" }] }))),
        200,
    )?;
    expect_error(
        &mut c,
        api.call(
            M::PUT,
            "/v1/taxonomy",
            Some(ADMIN),
            Some(json!({ "labels": [] })),
        ),
        400,
        codes::INVALID_TAXONOMY,
    )?;
    expect(
        &mut c,
        "audit",
        api.call(M::GET, "/v1/audit", Some(ADMIN), None),
        200,
    )?;

    let (status, archive) = api.raw(
        M::GET,
        &sp("/export"),
        Some(READER),
        "application/json",
        vec![],
    );
    ensure!(
        status == 200 && archive.starts_with(b"PULSE-BUNDLE 1\n"),
        "export failed with {status}"
    );
    expect_error(
        &mut c,
        api.call(M::GET, "/v1/sessions/absent/export", Some(READER), None),
        404,
        codes::NOT_FOUND,
    )?;
    let (status, body) = api.raw(
        M::POST,
        "/v1/import",
        Some(ADMIN),
        "application/octet-stream",
        archive.clone(),
    );
    expect(
        &mut c,
        "import_result",
        (status, serde_json::from_slice(&body).unwrap_or(Value::Null)),
        201,
    )?;
    let (status, body) = api.raw(
        M::POST,
        "/v1/import",
        Some(ADMIN),
        "application/octet-stream",
        b"PULSE-BUNDLE 1\nsha256 00\n{}".to_vec(),
    );
    expect_error(
        &mut c,
        (status, serde_json::from_slice(&body).unwrap_or(Value::Null)),
        400,
        codes::INTEGRITY_ERROR,
    )?;

    // Live stream of the ended session: every frame is a schema-valid event.
    let (status, body) = api.raw(M::GET, &sp("/live"), Some(READER), "text/plain", vec![]);
    ensure!(status == 200, "live stream returned {status}");
    let text = String::from_utf8(body).map_err(|e| e.to_string())?;
    let mut frames = 0;
    for line in text.lines().filter_map(|l| l.strip_prefix("data:")) {
        c.check(
            "live_event",
            &serde_json::from_str(line.trim()).map_err(|e| e.to_string())?,
        )?;
        frames += 1;
    }
    ensure!(frames >= 6, "only {frames} live events");
    expect_error(
        &mut c,
        api.call(M::GET, "/v1/sessions/absent/live", Some(READER), None),
        404,
        codes::NOT_FOUND,
    )?;

    expect_error(
        &mut c,
        api.call(M::GET, "/v1/unknown", None, None),
        404,
        codes::NOT_FOUND,
    )?;
    expect_error(
        &mut c,
        api.call(M::PATCH, "/v1/taxonomy", Some(ADMIN), None),
        405,
        codes::METHOD_NOT_ALLOWED,
    )?;

    // A second, still-recording session for the negative sweep.
    let other = api
        .call(
            M::POST,
            "/v1/sessions",
            None,
            Some(json!({ "credential": CARD, "at": 0 })),
        )
        .1;
    let other_id = other["session_id"].as_str().unwrap().to_string();
    let other_token = other["token"].as_str().unwrap().to_string();
    api.call(
        M::POST,
        &format!("/v1/sessions/{other_id}/transitions"),
        Some(&other_token),
        Some(json!({ "event": "start", "at": 0 })),
    );
    let victim = format!("/v1/sessions/{other_id}");

    // Negative-auth sweep over every mutating route.
    let before = session_state_fingerprint(&store);
    let audit_before = api.call(M::GET, "/v1/audit", Some(ADMIN), None).1["entries"]
        .as_array()
        .unwrap()
        .len();
    let mutations: Vec<(Method, String, Option<Value>, Vec<Option<&str>>)> = vec![
        (
            M::POST,
            format!("{victim}/transitions"),
            Some(json!({ "event": "stop", "at": 10 })),
            vec![None, Some("junk"), t, Some(READER), Some(ADMIN)],
        ),
        (
            M::POST,
            format!("{victim}/chunks"),
            Some(json!({ "seq": 0, "t_start": 0, "t_end": 1, "text": "intrusion" })),
            vec![None, Some("junk"), t, Some(READER), Some(ADMIN)],
        ),
        (
            M::POST,
            format!("{victim}/taps"),
            Some(json!({ "at": 50 })),
            vec![None, Some("junk"), t, Some(READER), Some(ADMIN)],
        ),
        (
            M::POST,
            format!("{victim}/tick"),
            Some(json!({ "at": 50 })),
            vec![None, Some("junk"), t, Some(READER), Some(ADMIN)],
        ),
        (
            M::PUT,
            "/v1/taxonomy".into(),
            Some(json!({ "labels": [{ "name": "Hacked" }, { "name": "No Label" }] })),
            vec![None, Some("junk"), t, Some(&other_token), Some(READER)],
        ),
        (
            M::POST,
            "/v1/import".into(),
            None,
            vec![None, Some("junk"), t, Some(READER)],
        ),
        (
            M::DELETE,
            format!("/v1/sessions/{id}"),
            None,
            vec![None, Some("junk"), t, Some(&other_token), Some(READER)],
        ),
        (
            M::POST,
            "/v1/sessions".into(),
            Some(json!({ "credential": "forged-card" })),
            vec![None],
        ),
        (
            M::POST,
            "/v1/sessions".into(),
            Some(json!({ "credential": "" })),
            vec![None],
        ),
    ];
    let (mut attempts, mut succeeded) = (0, 0);
    for (method, path, body, creds) in &mutations {
        for cred in creds {
            attempts += 1;
            let (status, resp) = if path == "/v1/import" {
                let (s, b) = api.raw(
                    method.clone(),
                    path,
                    *cred,
                    "application/octet-stream",
                    archive.clone(),
                );
                (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
            } else {
                api.call(method.clone(), path, *cred, body.clone())
            };
            if (200..300).contains(&status) {
                succeeded += 1;
                continue;
            }
            ensure!(
                matches!(status, 400 | 401 | 403),
                "{method} {path} with {cred:?}: unexpected {status}"
            );
            c.check("error", &resp)?;
        }
    }
    let after = session_state_fingerprint(&store);
    ensure!(
        before == after,
        "stored state changed during the negative sweep"
    );
    let audit = api.call(M::GET, "/v1/audit", Some(ADMIN), None).1;
    let added: Vec<&Value> = audit["entries"].as_array().unwrap()[audit_before..]
        .iter()
        .collect();
    ensure!(
        added.len() == 1 && added[0]["kind"] == "auth_denied",
        "audit gained {added:?} during the sweep"
    );
    ensure!(
        succeeded == 0,
        "{succeeded} of {attempts} unauthorized mutations succeeded"
    );

    let schemas = c.checked.len();
    let responses: usize = c.checked.values().sum();
    let defs = [
        "health",
        "create_session",
        "session_status",
        "chunk_ack",
        "gesture_outcome",
        "session_list",
        "session_detail",
        "taxonomy",
        "import_result",
        "audit",
        "live_event",
        "error",
    ];
    let missing: Vec<&&str> = defs
        .iter()
        .filter(|d| !c.checked.contains_key(**d))
        .collect();
    ensure!(
        missing.is_empty(),
        "response types never validated: {missing:?}"
    );
    Ok(format!(
        "{responses} responses valid against {schemas} schemas; negative sweep: 0 of {attempts} unauthorized mutations succeeded"
    ))
}
