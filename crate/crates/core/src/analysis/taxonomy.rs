use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::lexicon::{parse_terms, LexTerm, Lexicon};
use super::AnalysisError;

/// Sentence tag. The six built-in labels are the default taxonomy; any other
/// name is a custom label introduced by a taxonomy override.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum TagLabel {
    NeedsAndExpectations,
    PainPoints,
    FunctionalityAndFeatures,
    Scenarios,
    Attitude,
    NoLabel,
    Custom(String),
}

impl TagLabel {
    pub const BUILT_IN: [TagLabel; 6] = [
        TagLabel::NeedsAndExpectations,
        TagLabel::PainPoints,
        TagLabel::FunctionalityAndFeatures,
        TagLabel::Scenarios,
        TagLabel::Attitude,
        TagLabel::NoLabel,
    ];

    pub fn name(&self) -> &str {
        match self {
            Self::NeedsAndExpectations => "Needs and Expectations",
            Self::PainPoints => "Pain Points",
            Self::FunctionalityAndFeatures => "Functionality and Features",
            Self::Scenarios => "Scenarios",
            Self::Attitude => "Attitude",
            Self::NoLabel => "No Label",
            Self::Custom(name) => name,
        }
    }

    /// Built-in names match case-insensitively; everything else is custom.
    pub fn from_name(name: &str) -> Self {
        let name = name.trim();
        Self::BUILT_IN
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(name))
            .unwrap_or_else(|| Self::Custom(name.to_owned()))
    }
}

impl From<String> for TagLabel {
    fn from(s: String) -> Self {
        Self::from_name(&s)
    }
}

impl From<TagLabel> for String {
    fn from(l: TagLabel) -> String {
        l.name().to_owned()
    }
}

impl fmt::Display for TagLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDef {
    pub name: TagLabel,
    #[serde(default)]
    pub description: String,
    /// Lexicon used by the rule-based tagger.
    #[serde(default)]
    pub terms: Vec<LexTerm>,
    /// Follow-up question pattern; `{keyword}` is replaced by the word that
    /// triggered the label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub followup_template: Option<String>,
}

impl LabelDef {
    pub fn new(name: &str) -> Self {
        Self {
            name: TagLabel::from_name(name),
            description: String::new(),
            terms: Vec::new(),
            followup_template: None,
        }
    }

    pub fn lexicon(&self) -> Lexicon {
        Lexicon::from_terms(&self.terms)
    }

    pub fn template(&self) -> &str {
        self.followup_template
            .as_deref()
            .unwrap_or("Could you tell me more about {keyword}?")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub version: u32,
    pub labels: Vec<LabelDef>,
}

const NEEDS: &str = include_str!("../../config/lexicons/needs.txt");
const PAIN: &str = include_str!("../../config/lexicons/pain_points.txt");
const FUNCTIONALITY: &str = include_str!("../../config/lexicons/functionality.txt");
const SCENARIOS: &str = include_str!("../../config/lexicons/scenarios.txt");
pub(crate) const POSITIVE: &str = include_str!("../../config/lexicons/positive.txt");
pub(crate) const NEGATIVE: &str = include_str!("../../config/lexicons/negative.txt");

fn builtin_def(
    label: TagLabel,
    description: &str,
    terms: &str,
    template: Option<&str>,
) -> LabelDef {
    LabelDef {
        name: label,
        description: description.to_owned(),
        terms: parse_terms(terms).expect("shipped lexicon is valid"),
        followup_template: template.map(str::to_owned),
    }
}

impl Default for Taxonomy {
    fn default() -> Self {
        let mut attitude_terms = parse_terms(POSITIVE).expect("shipped lexicon is valid");
        attitude_terms.extend(parse_terms(NEGATIVE).expect("shipped lexicon is valid"));
        attitude_terms.sort();
        attitude_terms.dedup();
        let mut attitude = builtin_def(
            TagLabel::Attitude,
            "Positive or negative feelings about the product or experience",
            "",
            Some("You said \"{keyword}\". What makes you feel that way?"),
        );
        attitude.terms = attitude_terms;
        Self {
            version: 1,
            labels: vec![
                builtin_def(
                    TagLabel::NeedsAndExpectations,
                    "What the participant wants, expects or hopes for",
                    NEEDS,
                    Some("What would an ideal solution for {keyword} look like to you?"),
                ),
                builtin_def(
                    TagLabel::PainPoints,
                    "Problems, frustrations and obstacles",
                    PAIN,
                    Some("Can you tell me more about when {keyword} happens?"),
                ),
                builtin_def(
                    TagLabel::FunctionalityAndFeatures,
                    "Specific capabilities, features or parts of the product",
                    FUNCTIONALITY,
                    Some("How do you use {keyword} today, and what would you change about it?"),
                ),
                builtin_def(
                    TagLabel::Scenarios,
                    "Context of use: when, how, who, where and how often",
                    SCENARIOS,
                    Some("You mentioned \"{keyword}\". Can you walk me through a specific time that happened?"),
                ),
                attitude,
                builtin_def(TagLabel::NoLabel, "None of the other labels apply", "", None),
            ],
        }
    }
}

impl Taxonomy {
    pub fn validate_labels(labels: &[LabelDef]) -> Result<(), AnalysisError> {
        if labels.is_empty() {
            return Err(AnalysisError::Validation("taxonomy has no labels".into()));
        }
        let mut seen = BTreeSet::new();
        for def in labels {
            let name = def.name.name().trim();
            if name.is_empty() {
                return Err(AnalysisError::Validation("label name is empty".into()));
            }
            if !seen.insert(name.to_lowercase()) {
                return Err(AnalysisError::Validation(format!(
                    "duplicate label `{name}`"
                )));
            }
            if let Some(t) = &def.followup_template {
                if !t.contains("{keyword}") && t.contains('{') {
                    return Err(AnalysisError::Validation(format!(
                        "template for `{name}` may only use the {{keyword}} placeholder"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, label: &TagLabel) -> Option<&LabelDef> {
        self.labels.iter().find(|d| &d.name == label)
    }

    pub fn position(&self, label: &TagLabel) -> Option<usize> {
        self.labels.iter().position(|d| &d.name == label)
    }

    /// Labels a sentence may carry: the taxonomy's labels plus `No Label`.
    pub fn allows(&self, label: &TagLabel) -> bool {
        *label == TagLabel::NoLabel || self.get(label).is_some()
    }

    /// Display order for grouped output: taxonomy order, `No Label` last if
    /// the taxonomy does not place it.
    pub fn ordered_labels(&self) -> Vec<TagLabel> {
        let mut out: Vec<TagLabel> = self.labels.iter().map(|d| d.name.clone()).collect();
        if !out.contains(&TagLabel::NoLabel) {
            out.push(TagLabel::NoLabel);
        }
        out
    }

    /// Short listing used when rendering prompts.
    pub fn describe(&self) -> String {
        self.labels
            .iter()
            .map(|d| {
                if d.description.is_empty() {
                    format!("- {}", d.name)
                } else {
                    format!("- {}: {}", d.name, d.description)
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Every taxonomy version ever installed. Sessions keep the version they
/// were tagged under, so old versions stay resolvable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyRegistry {
    versions: BTreeMap<u32, Taxonomy>,
}

impl Default for TaxonomyRegistry {
    fn default() -> Self {
        Self::from_versions([Taxonomy::default()]).expect("default taxonomy is valid")
    }
}

impl TaxonomyRegistry {
    pub fn from_versions(list: impl IntoIterator<Item = Taxonomy>) -> Result<Self, AnalysisError> {
        let mut versions = BTreeMap::new();
        for t in list {
            Taxonomy::validate_labels(&t.labels)?;
            versions.insert(t.version, t);
        }
        if versions.is_empty() {
            return Err(AnalysisError::Configuration("no taxonomy installed".into()));
        }
        Ok(Self { versions })
    }

    pub fn current(&self) -> &Taxonomy {
        self.versions
            .values()
            .next_back()
            .expect("registry is never empty")
    }

    pub fn get(&self, version: u32) -> Result<&Taxonomy, AnalysisError> {
        self.versions.get(&version).ok_or_else(|| {
            AnalysisError::Configuration(format!("unknown taxonomy version {version}"))
        })
    }

    pub fn versions(&self) -> impl Iterator<Item = &Taxonomy> {
        self.versions.values()
    }

    /// Installs a new label set as the next version.
    pub fn set_taxonomy(&mut self, labels: Vec<LabelDef>) -> Result<&Taxonomy, AnalysisError> {
        Taxonomy::validate_labels(&labels)?;
        let version = self.current().version + 1;
        self.versions.insert(version, Taxonomy { version, labels });
        Ok(self.current())
    }
}
