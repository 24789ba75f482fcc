use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::keywords::KeywordStat;
use super::sentiment::SentimentScore;
use super::taxonomy::TagLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeGroup {
    pub label: TagLabel,
    pub sentence_ids: Vec<String>,
    pub theme_summary: String,
}

/// Post-interview aggregation. Only labels carried by at least one
/// sentence get a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThematicReport {
    pub session_id: String,
    pub taxonomy_version: u32,
    pub groups: Vec<ThemeGroup>,
    pub keyword_stats: Vec<KeywordStat>,
    pub overall_sentiment: SentimentScore,
}

impl ThematicReport {
    pub fn group(&self, label: &TagLabel) -> Option<&ThemeGroup> {
        self.groups.iter().find(|g| &g.label == label)
    }

    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        self.groups
            .iter()
            .map(|g| (g.label.name().to_owned(), g.sentence_ids.len()))
            .collect()
    }
}
