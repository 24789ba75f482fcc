use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::taxonomy::{TagLabel, Taxonomy};
use super::ProviderError;
use crate::ingest::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub sentence_id: String,
    pub labels: Vec<TagLabel>,
    pub polarity: Option<Polarity>,
    #[serde(default)]
    pub rationale: String,
}

/// Checks provider tagging output against the input sentences and returns
/// it in input order.
///
/// Every sentence must be tagged exactly once with a non-empty set of
/// distinct labels from the taxonomy; `No Label` must stand alone and the
/// polarity must be present exactly when `Attitude` is.
pub fn validate_tagging(
    sentences: &[Sentence],
    mut tags: Vec<TaggedSentence>,
    taxonomy: &Taxonomy,
) -> Result<Vec<TaggedSentence>, ProviderError> {
    let bad = |msg: String| ProviderError::invalid(msg);
    if tags.len() != sentences.len() {
        return Err(bad(format!(
            "tagged {} sentences, expected {}",
            tags.len(),
            sentences.len()
        )));
    }
    let mut out = Vec::with_capacity(sentences.len());
    for sentence in sentences {
        let pos = tags
            .iter()
            .position(|t| t.sentence_id == sentence.sentence_id)
            .ok_or_else(|| bad(format!("sentence {} not tagged", sentence.sentence_id)))?;
        let tag = tags.swap_remove(pos);
        let id = &tag.sentence_id;
        if tag.labels.is_empty() {
            return Err(bad(format!("sentence {id} has no labels")));
        }
        let distinct: BTreeSet<_> = tag.labels.iter().collect();
        if distinct.len() != tag.labels.len() {
            return Err(bad(format!("sentence {id} repeats a label")));
        }
        if let Some(l) = tag.labels.iter().find(|l| !taxonomy.allows(l)) {
            return Err(bad(format!("sentence {id} uses unknown label `{l}`")));
        }
        if tag.labels.contains(&TagLabel::NoLabel) && tag.labels.len() > 1 {
            return Err(bad(format!(
                "sentence {id} mixes No Label with other labels"
            )));
        }
        if tag.labels.contains(&TagLabel::Attitude) != tag.polarity.is_some() {
            return Err(bad(format!(
                "sentence {id} polarity does not match Attitude label"
            )));
        }
        out.push(tag);
    }
    Ok(out)
}
