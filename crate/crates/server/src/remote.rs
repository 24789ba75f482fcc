use std::collections::BTreeMap;
use std::time::Duration;

use pulse_core::analysis::{
    AnalysisProvider, Polarity, PromptSet, PromptTemplate, ProviderError, ProviderKind,
    SummaryOutput, TagLabel, TaggedSentence, Taxonomy,
};
use pulse_core::ingest::{Sentence, Speaker, TranscriptSegment};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Adapter for a remote analysis service. Each analysis is one
/// `POST {endpoint}/{task}` carrying the rendered prompt; the reply must be
/// a JSON document with exactly the fields of the task's response type.
/// Anything else, free text included, is rejected.
pub struct RemoteProvider {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    prompts: PromptSet,
}

#[derive(Serialize)]
struct Request<'a, T: Serialize> {
    format_version: u32,
    task: &'a str,
    prompt: String,
    prompt_version: String,
    #[serde(flatten)]
    input: T,
}

#[derive(Serialize)]
struct Line<'a> {
    id: &'a str,
    speaker: Option<Speaker>,
    text: &'a str,
}

#[derive(Serialize)]
struct TranscriptInput<'a> {
    lines: Vec<Line<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_questions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<&'a str>>,
}

#[derive(Serialize)]
struct TextInput<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SummaryReply {
    summary: String,
    key_points: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FollowupReply {
    questions: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TagReply {
    sentence_id: String,
    labels: Vec<String>,
    polarity: Option<Polarity>,
    rationale: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaggingReply {
    tags: Vec<TagReply>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThemeReply {
    summary: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SentimentReply {
    score: f64,
}

fn transcript_text(segments: &[TranscriptSegment]) -> String {
    segments
        .iter()
        .map(|s| match s.speaker {
            Speaker::Interviewer => format!("Interviewer: {}", s.text),
            Speaker::Participant => format!("Participant: {}", s.text),
            Speaker::Unknown => s.text.clone(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn segment_lines(segments: &[TranscriptSegment]) -> Vec<Line<'_>> {
    segments
        .iter()
        .map(|s| Line {
            id: &s.segment_id,
            speaker: Some(s.speaker),
            text: &s.text,
        })
        .collect()
}

fn sentence_lines<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> Vec<Line<'a>> {
    sentences
        .into_iter()
        .map(|s| Line {
            id: &s.sentence_id,
            speaker: None,
            text: &s.text,
        })
        .collect()
}

fn render(template: &PromptTemplate, pairs: &[(&'static str, String)]) -> String {
    let values: BTreeMap<&str, String> = pairs.iter().cloned().collect();
    template.render(&values)
}

impl RemoteProvider {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
        prompts: PromptSet,
    ) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::unavailable(format!("cannot build HTTP client: {e}")))?;
        Ok(Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            api_key,
            client,
            prompts,
        })
    }

    fn call<I: Serialize, R: DeserializeOwned>(
        &self,
        task: &str,
        template: Option<&PromptTemplate>,
        prompt: String,
        input: I,
    ) -> Result<R, ProviderError> {
        let body = Request {
            format_version: 1,
            task,
            prompt,
            prompt_version: template.map(|t| t.provenance()).unwrap_or_default(),
            input,
        };
        let mut req = self
            .client
            .post(format!("{}/{task}", self.endpoint))
            .json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| ProviderError::unavailable(format!("{task}: {e}")))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(ProviderError::unavailable(format!(
                "{task}: remote answered {status}"
            )));
        }
        if !status.is_success() {
            return Err(ProviderError::invalid(format!(
                "{task}: remote answered {status}"
            )));
        }
        let bytes = resp
            .bytes()
            .map_err(|e| ProviderError::unavailable(format!("{task}: {e}")))?;
        serde_json::from_slice(&bytes).map_err(|e| {
            ProviderError::invalid(format!(
                "{task}: response is not the expected document: {e}"
            ))
        })
    }
}

impl AnalysisProvider for RemoteProvider {
    fn name(&self) -> &str {
        "remote"
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::Remote
    }

    fn summarize(&self, segments: &[TranscriptSegment]) -> Result<SummaryOutput, ProviderError> {
        let t = &self.prompts.summary;
        let prompt = render(t, &[("transcript", transcript_text(segments))]);
        let input = TranscriptInput {
            lines: segment_lines(segments),
            max_questions: None,
            labels: None,
        };
        let r: SummaryReply = self.call("summarize", Some(t), prompt, input)?;
        Ok(SummaryOutput {
            summary: r.summary,
            key_points: r.key_points,
        })
    }

    fn suggest_followups(
        &self,
        segments: &[TranscriptSegment],
        taxonomy: &Taxonomy,
        max_questions: usize,
    ) -> Result<Vec<String>, ProviderError> {
        let t = &self.prompts.followups;
        let prompt = render(
            t,
            &[
                ("transcript", transcript_text(segments)),
                ("taxonomy", taxonomy.describe()),
                ("max_questions", max_questions.to_string()),
            ],
        );
        let input = TranscriptInput {
            lines: segment_lines(segments),
            max_questions: Some(max_questions),
            labels: None,
        };
        let r: FollowupReply = self.call("followups", Some(t), prompt, input)?;
        Ok(r.questions)
    }

    fn tag_sentences(
        &self,
        sentences: &[Sentence],
        taxonomy: &Taxonomy,
    ) -> Result<Vec<TaggedSentence>, ProviderError> {
        let t = &self.prompts.tagging;
        let listing = sentences
            .iter()
            .map(|s| format!("{}: {}", s.sentence_id, s.text))
            .collect::<Vec<_>>()
            .join("\n");
        let prompt = render(
            t,
            &[("transcript", listing), ("taxonomy", taxonomy.describe())],
        );
        let input = TranscriptInput {
            lines: sentence_lines(sentences),
            max_questions: None,
            labels: Some(taxonomy.labels.iter().map(|l| l.name.name()).collect()),
        };
        let r: TaggingReply = self.call("tagging", Some(t), prompt, input)?;
        Ok(r.tags
            .into_iter()
            .map(|tag| TaggedSentence {
                sentence_id: tag.sentence_id,
                labels: tag.labels.iter().map(|n| TagLabel::from_name(n)).collect(),
                polarity: tag.polarity,
                rationale: tag.rationale,
            })
            .collect())
    }

    fn theme_summary(
        &self,
        label: &TagLabel,
        sentences: &[&Sentence],
    ) -> Result<String, ProviderError> {
        let t = &self.prompts.theme_summary;
        let listing = sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        let prompt = render(
            t,
            &[
                ("transcript", listing),
                ("taxonomy", label.name().to_string()),
            ],
        );
        let input = TranscriptInput {
            lines: sentence_lines(sentences.iter().copied()),
            max_questions: None,
            labels: Some(vec![label.name()]),
        };
        let r: ThemeReply = self.call("theme_summary", Some(t), prompt, input)?;
        Ok(r.summary)
    }

    fn sentiment(&self, text: &str) -> Result<f64, ProviderError> {
        let r: SentimentReply = self.call("sentiment", None, String::new(), TextInput { text })?;
        Ok(r.score)
    }
}
