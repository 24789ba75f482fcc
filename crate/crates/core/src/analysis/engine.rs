use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::keywords::{keyword_frequency, KeywordStat};
use super::prompts::PromptSet;
use super::provider::{AnalysisProvider, ProviderKind};
use super::report::{ThematicReport, ThemeGroup};
use super::rule_based::{AnalysisResources, RuleBasedProvider};
use super::sentiment::{lexicon_score, SentimentBasis, SentimentScore};
use super::tagging::{validate_tagging, TaggedSentence};
use super::taxonomy::{Taxonomy, TaxonomyRegistry};
use super::text::truncate_words;
use super::{AnalysisError, ProviderError};
use crate::ingest::{Sentence, TranscriptSegment};
use crate::session::SessionState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub summary_word_budget: usize,
    pub key_points: usize,
    pub max_questions: usize,
    /// Number of most recent segments sent per real-time pass; `None` sends
    /// the whole transcript.
    pub context_segments: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            summary_word_budget: 60,
            key_points: 3,
            max_questions: 3,
            context_segments: None,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.summary_word_budget == 0 || self.max_questions == 0 {
            return Err(AnalysisError::Configuration(
                "word budget and max questions must be positive".into(),
            ));
        }
        if self.context_segments == Some(0) {
            return Err(AnalysisError::Configuration(
                "context window must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryOutput {
    pub summary: String,
    pub key_points: Vec<String>,
}

/// One real-time analysis pass over a session's transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisSnapshot {
    pub session_id: String,
    pub version: u64,
    pub coverage_seq: u64,
    pub summary: String,
    pub key_points: Vec<String>,
    pub follow_up_questions: Vec<String>,
    pub generated_at: u64,
    pub provider_name: String,
    pub taxonomy_version: u32,
    pub prompt_versions: BTreeMap<String, String>,
}

/// Sentence-level tags for a whole session under one taxonomy version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tagging {
    pub taxonomy_version: u32,
    pub sentences: Vec<Sentence>,
    pub tags: Vec<TaggedSentence>,
}

/// Provider wrapper that checks preconditions and enforces the output
/// contract of every analysis regardless of which provider answered.
#[derive(Clone)]
pub struct AnalysisEngine {
    provider: Arc<dyn AnalysisProvider>,
    resources: Arc<AnalysisResources>,
    config: AnalysisConfig,
    prompts: PromptSet,
}

impl AnalysisEngine {
    pub fn new(
        provider: Arc<dyn AnalysisProvider>,
        resources: Arc<AnalysisResources>,
        config: AnalysisConfig,
        prompts: PromptSet,
    ) -> Result<Self, AnalysisError> {
        config.validate()?;
        Ok(Self {
            provider,
            resources,
            config,
            prompts,
        })
    }

    pub fn rule_based(config: AnalysisConfig) -> Result<Self, AnalysisError> {
        let resources = Arc::new(AnalysisResources::default());
        let provider = Arc::new(RuleBasedProvider::new(resources.clone(), &config));
        Self::new(provider, resources, config, PromptSet::default())
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn prompts(&self) -> &PromptSet {
        &self.prompts
    }

    pub fn resources(&self) -> &AnalysisResources {
        &self.resources
    }

    pub fn summarize(
        &self,
        segments: &[TranscriptSegment],
    ) -> Result<SummaryOutput, AnalysisError> {
        if segments.is_empty() {
            return Err(AnalysisError::EmptyInput(
                "transcript has no segments".into(),
            ));
        }
        let out = self.provider.summarize(segments)?;
        let summary = truncate_words(&out.summary, self.config.summary_word_budget);
        if summary.is_empty() {
            return Err(ProviderError::invalid("provider returned an empty summary").into());
        }
        let key_points = out
            .key_points
            .into_iter()
            .map(|k| k.trim().to_owned())
            .filter(|k| !k.is_empty())
            .take(self.config.key_points)
            .collect();
        Ok(SummaryOutput {
            summary,
            key_points,
        })
    }

    pub fn suggest_followups(
        &self,
        segments: &[TranscriptSegment],
        taxonomy: &Taxonomy,
        max_questions: usize,
    ) -> Result<Vec<String>, AnalysisError> {
        if max_questions == 0 {
            return Err(AnalysisError::Validation(
                "max_questions must be positive".into(),
            ));
        }
        if !segments.iter().any(|s| s.speaker.is_respondent()) {
            return Err(AnalysisError::EmptyInput(
                "no participant speech yet".into(),
            ));
        }
        let raw = self
            .provider
            .suggest_followups(segments, taxonomy, max_questions)?;
        let mut questions: Vec<String> = Vec::new();
        for q in raw.into_iter().map(|q| q.trim().to_owned()) {
            if !q.is_empty() && !questions.contains(&q) {
                questions.push(q);
            }
        }
        questions.truncate(max_questions);
        if questions.is_empty() {
            return Err(ProviderError::invalid("provider returned no follow-up questions").into());
        }
        Ok(questions)
    }

    pub fn tag_sentences(
        &self,
        sentences: &[Sentence],
        registry: &TaxonomyRegistry,
        taxonomy_version: u32,
    ) -> Result<Vec<TaggedSentence>, AnalysisError> {
        let taxonomy = registry.get(taxonomy_version)?;
        if sentences.is_empty() {
            return Ok(Vec::new());
        }
        let raw = self.provider.tag_sentences(sentences, taxonomy)?;
        Ok(validate_tagging(sentences, raw, taxonomy)?)
    }

    /// Splits the respondent segments into sentences and tags them.
    pub fn tag_transcript(
        &self,
        segments: &[TranscriptSegment],
        registry: &TaxonomyRegistry,
        taxonomy_version: u32,
    ) -> Result<Tagging, AnalysisError> {
        let sentences: Vec<Sentence> = segments
            .iter()
            .filter(|s| s.speaker.is_respondent())
            .flat_map(|s| self.resources.splitter.split(s))
            .collect();
        let tags = self.tag_sentences(&sentences, registry, taxonomy_version)?;
        Ok(Tagging {
            taxonomy_version,
            sentences,
            tags,
        })
    }

    pub fn keyword_frequency<'a>(
        &self,
        texts: impl IntoIterator<Item = &'a str>,
    ) -> Vec<KeywordStat> {
        keyword_frequency(texts, &self.resources.stopwords)
    }

    /// Provider score clamped to [-1, 1]; on provider failure (or a non-finite
    /// score) falls back to the lexicon score and says so in `basis`.
    pub fn sentiment(&self, text: &str) -> SentimentScore {
        let lexicon = || {
            let (pos, neg) = self.resources.sentiment.hits(text);
            SentimentScore {
                value: lexicon_score(pos, neg),
                basis: SentimentBasis::Lexicon,
            }
        };
        if self.provider.kind() == ProviderKind::RuleBased {
            return lexicon();
        }
        match self.provider.sentiment(text) {
            Ok(v) if v.is_finite() => SentimentScore {
                value: v.clamp(-1.0, 1.0),
                basis: SentimentBasis::Provider,
            },
            _ => lexicon(),
        }
    }

    /// Real-time pass: summary, key points and follow-ups over the context
    /// window. Follow-ups are empty until the participant has spoken.
    pub fn run_pass(
        &self,
        session_id: &str,
        segments: &[TranscriptSegment],
        taxonomy: &Taxonomy,
        version: u64,
        generated_at: u64,
    ) -> Result<AnalysisSnapshot, AnalysisError> {
        let coverage_seq = segments
            .last()
            .map(|s| s.seq)
            .ok_or_else(|| AnalysisError::EmptyInput("transcript has no segments".into()))?;
        let window = match self.config.context_segments {
            Some(n) if n < segments.len() => &segments[segments.len() - n..],
            _ => segments,
        };
        let summary = self.summarize(window)?;
        let follow_up_questions = if window.iter().any(|s| s.speaker.is_respondent()) {
            self.suggest_followups(window, taxonomy, self.config.max_questions)?
        } else {
            Vec::new()
        };
        Ok(AnalysisSnapshot {
            session_id: session_id.to_owned(),
            version,
            coverage_seq,
            summary: summary.summary,
            key_points: summary.key_points,
            follow_up_questions,
            generated_at,
            provider_name: self.provider.name().to_owned(),
            taxonomy_version: taxonomy.version,
            prompt_versions: self.prompts.provenance(),
        })
    }

    /// Groups tagged sentences by label, with a theme summary per group,
    /// keyword statistics and overall sentiment of the tagged text.
    pub fn thematic_report(
        &self,
        state: SessionState,
        session_id: &str,
        tagging: &Tagging,
        registry: &TaxonomyRegistry,
    ) -> Result<ThematicReport, AnalysisError> {
        if state != SessionState::Ended {
            return Err(AnalysisError::State(state));
        }
        let taxonomy = registry.get(tagging.taxonomy_version)?;
        if tagging.sentences.len() != tagging.tags.len() {
            return Err(AnalysisError::Validation(
                "tagging does not cover every sentence".into(),
            ));
        }
        let by_id: BTreeMap<&str, &Sentence> = tagging
            .sentences
            .iter()
            .map(|s| (s.sentence_id.as_str(), s))
            .collect();
        let mut groups = Vec::new();
        for label in taxonomy.ordered_labels() {
            let members: Vec<&Sentence> = tagging
                .tags
                .iter()
                .filter(|t| t.labels.contains(&label))
                .filter_map(|t| by_id.get(t.sentence_id.as_str()).copied())
                .collect();
            if members.is_empty() {
                continue;
            }
            let theme = self.provider.theme_summary(&label, &members)?;
            groups.push(ThemeGroup {
                label,
                sentence_ids: members.iter().map(|s| s.sentence_id.clone()).collect(),
                theme_summary: truncate_words(&theme, self.config.summary_word_budget),
            });
        }
        let texts: Vec<&str> = tagging.sentences.iter().map(|s| s.text.as_str()).collect();
        let overall_sentiment = if texts.is_empty() {
            SentimentScore::neutral()
        } else {
            self.sentiment(&texts.join(" "))
        };
        Ok(ThematicReport {
            session_id: session_id.to_owned(),
            taxonomy_version: tagging.taxonomy_version,
            groups,
            keyword_stats: self.keyword_frequency(texts.iter().copied()),
            overall_sentiment,
        })
    }
}
