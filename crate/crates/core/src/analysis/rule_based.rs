use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::engine::{AnalysisConfig, SummaryOutput};
use super::keywords::{is_keyword, keyword_counts, keyword_frequency};
use super::lexicon::Lexicon;
use super::provider::{AnalysisProvider, ProviderError, ProviderKind};
use super::sentiment::{lexicon_score, SentimentLexicon};
use super::tagging::{Polarity, TaggedSentence};
use super::taxonomy::{TagLabel, Taxonomy};
use super::text::{tokenize, truncate_words};
use super::AnalysisError;
use crate::ingest::{Sentence, SentenceSplitter, TranscriptSegment};

const STOPWORDS: &str = include_str!("../../config/stopwords.txt");

/// Word lists behind the deterministic analyses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisResources {
    pub stopwords: Lexicon,
    pub sentiment: SentimentLexicon,
    pub splitter: SentenceSplitter,
}

impl Default for AnalysisResources {
    fn default() -> Self {
        Self {
            stopwords: Lexicon::parse(STOPWORDS).expect("shipped stopwords are valid"),
            sentiment: SentimentLexicon::default(),
            splitter: SentenceSplitter::default(),
        }
    }
}

impl AnalysisResources {
    /// Loads overrides from a directory. Each of `stopwords.txt`,
    /// `positive.txt`, `negative.txt` and `abbreviations.txt` replaces the
    /// shipped list when present.
    pub fn load_dir(dir: &Path) -> Result<Self, AnalysisError> {
        let mut res = Self::default();
        let read = |name: &str| -> Result<Option<String>, AnalysisError> {
            let path = dir.join(name);
            match fs::read_to_string(&path) {
                Ok(s) => Ok(Some(s)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(AnalysisError::Configuration(format!(
                    "{}: {e}",
                    path.display()
                ))),
            }
        };
        let lex = |name: &str, text: String| {
            Lexicon::parse(&text).map_err(|e| AnalysisError::Configuration(format!("{name}: {e}")))
        };
        if let Some(t) = read("stopwords.txt")? {
            res.stopwords = lex("stopwords.txt", t)?;
        }
        if let Some(t) = read("positive.txt")? {
            res.sentiment.positive = lex("positive.txt", t)?;
        }
        if let Some(t) = read("negative.txt")? {
            res.sentiment.negative = lex("negative.txt", t)?;
        }
        if let Some(t) = read("abbreviations.txt")? {
            res.splitter = SentenceSplitter::from_list(&t);
        }
        Ok(res)
    }
}

/// Deterministic, offline analysis provider.
///
/// * summary: the first sentence of every respondent turn, joined and cut
///   to the word budget;
/// * key points: respondent sentences ranked by the transcript-wide counts
///   of their distinct keywords, earlier sentences first on ties;
/// * tags: every label whose lexicon matches a token, else `No Label`;
///   attitude polarity by lexicon majority, ties count as positive;
/// * follow-ups: each label's template filled with the word that triggered
///   it in the label's most recent sentence, most recent first.
#[derive(Debug, Clone)]
pub struct RuleBasedProvider {
    resources: Arc<AnalysisResources>,
    word_budget: usize,
    key_points: usize,
}

struct TagMatch {
    tag: TaggedSentence,
    triggers: Vec<(TagLabel, String)>,
}

impl RuleBasedProvider {
    pub fn new(resources: Arc<AnalysisResources>, config: &AnalysisConfig) -> Self {
        Self {
            resources,
            word_budget: config.summary_word_budget,
            key_points: config.key_points,
        }
    }

    fn pool(segments: &[TranscriptSegment]) -> Vec<&TranscriptSegment> {
        let respondent: Vec<_> = segments
            .iter()
            .filter(|s| s.speaker.is_respondent())
            .collect();
        if respondent.is_empty() {
            segments.iter().collect()
        } else {
            respondent
        }
    }

    fn tag_with_triggers(&self, sentences: &[Sentence], taxonomy: &Taxonomy) -> Vec<TagMatch> {
        let lexicons: Vec<(TagLabel, Lexicon)> = taxonomy
            .labels
            .iter()
            .filter(|d| d.name != TagLabel::NoLabel)
            .map(|d| (d.name.clone(), d.lexicon()))
            .collect();
        sentences
            .iter()
            .map(|s| {
                let tokens = tokenize(&s.text);
                let triggers: Vec<(TagLabel, String)> = lexicons
                    .iter()
                    .filter_map(|(label, lex)| {
                        tokens
                            .iter()
                            .find(|t| lex.matches(t))
                            .map(|t| (label.clone(), t.clone()))
                    })
                    .collect();
                let mut labels: Vec<TagLabel> = triggers.iter().map(|(l, _)| l.clone()).collect();
                if labels.is_empty() {
                    labels.push(TagLabel::NoLabel);
                }
                let polarity = labels.contains(&TagLabel::Attitude).then(|| {
                    let (pos, neg) = self.resources.sentiment.hits_in_tokens(&tokens);
                    if neg > pos {
                        Polarity::Negative
                    } else {
                        Polarity::Positive
                    }
                });
                let rationale = triggers
                    .iter()
                    .map(|(l, t)| format!("{l}: {t}"))
                    .collect::<Vec<_>>()
                    .join("; ");
                TagMatch {
                    tag: TaggedSentence {
                        sentence_id: s.sentence_id.clone(),
                        labels,
                        polarity,
                        rationale,
                    },
                    triggers,
                }
            })
            .collect()
    }

    fn sentences_of(&self, segments: &[&TranscriptSegment]) -> Vec<(u64, Sentence)> {
        segments
            .iter()
            .flat_map(|seg| {
                self.resources
                    .splitter
                    .split(seg)
                    .into_iter()
                    .map(move |s| (seg.seq, s))
            })
            .collect()
    }
}

impl AnalysisProvider for RuleBasedProvider {
    fn name(&self) -> &str {
        "rule_based"
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::RuleBased
    }

    fn summarize(&self, segments: &[TranscriptSegment]) -> Result<SummaryOutput, ProviderError> {
        let pool = Self::pool(segments);
        let firsts: Vec<String> = pool
            .iter()
            .filter_map(|seg| {
                self.resources
                    .splitter
                    .split_text(&seg.text)
                    .into_iter()
                    .next()
            })
            .collect();
        let summary = truncate_words(&firsts.join(" "), self.word_budget);

        let counts = keyword_counts(
            pool.iter().map(|s| s.text.as_str()),
            &self.resources.stopwords,
        );
        let mut ranked: Vec<(u64, u64, usize, String)> = self
            .sentences_of(&pool)
            .into_iter()
            .map(|(seq, s)| {
                let distinct: BTreeSet<String> = tokenize(&s.text)
                    .into_iter()
                    .filter(|t| is_keyword(t, &self.resources.stopwords))
                    .collect();
                let hits = distinct
                    .iter()
                    .map(|t| counts.get(t).copied().unwrap_or(0))
                    .sum();
                (hits, seq, s.index, s.text)
            })
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let key_points = ranked
            .into_iter()
            .take(self.key_points)
            .map(|(_, _, _, text)| text)
            .collect();
        Ok(SummaryOutput {
            summary,
            key_points,
        })
    }

    fn suggest_followups(
        &self,
        segments: &[TranscriptSegment],
        taxonomy: &Taxonomy,
        max_questions: usize,
    ) -> Result<Vec<String>, ProviderError> {
        let pool: Vec<_> = segments
            .iter()
            .filter(|s| s.speaker.is_respondent())
            .collect();
        let sentences: Vec<Sentence> = self
            .sentences_of(&pool)
            .into_iter()
            .map(|(_, s)| s)
            .collect();
        let matches = self.tag_with_triggers(&sentences, taxonomy);

        let mut picks: Vec<(usize, usize, String)> = Vec::new();
        for (label_pos, def) in taxonomy.labels.iter().enumerate() {
            if def.name == TagLabel::NoLabel {
                continue;
            }
            let latest = matches.iter().enumerate().rev().find_map(|(i, m)| {
                m.triggers
                    .iter()
                    .find(|(l, _)| *l == def.name)
                    .map(|(_, kw)| (i, kw.clone()))
            });
            if let Some((sentence_pos, keyword)) = latest {
                picks.push((
                    sentence_pos,
                    label_pos,
                    def.template().replace("{keyword}", &keyword),
                ));
            }
        }
        picks.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut questions: Vec<String> = Vec::new();
        for (_, _, q) in picks {
            if !questions.contains(&q) {
                questions.push(q);
            }
        }
        if questions.is_empty() {
            let top = keyword_frequency(
                pool.iter().map(|s| s.text.as_str()),
                &self.resources.stopwords,
            );
            questions.push(match top.first() {
                Some(k) => format!("Could you tell me more about {}?", k.token),
                None => "Could you tell me more about that?".to_owned(),
            });
        }
        questions.truncate(max_questions);
        Ok(questions)
    }

    fn tag_sentences(
        &self,
        sentences: &[Sentence],
        taxonomy: &Taxonomy,
    ) -> Result<Vec<TaggedSentence>, ProviderError> {
        Ok(self
            .tag_with_triggers(sentences, taxonomy)
            .into_iter()
            .map(|m| m.tag)
            .collect())
    }

    fn theme_summary(
        &self,
        _label: &TagLabel,
        sentences: &[&Sentence],
    ) -> Result<String, ProviderError> {
        let joined = sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        Ok(truncate_words(&joined, self.word_budget))
    }

    fn sentiment(&self, text: &str) -> Result<f64, ProviderError> {
        let (pos, neg) = self.resources.sentiment.hits(text);
        Ok(lexicon_score(pos, neg))
    }
}
