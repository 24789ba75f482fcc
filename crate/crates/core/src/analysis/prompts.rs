use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::AnalysisError;

const PLACEHOLDERS: [&str; 3] = ["transcript", "taxonomy", "max_questions"];

/// A versioned prompt sent to remote analysis providers. The file form is
/// an optional `# version: N` header line followed by the prompt body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    pub version: u32,
    pub text: String,
}

impl PromptTemplate {
    pub fn parse(name: &str, file: &str) -> Result<Self, AnalysisError> {
        let (version, body) = match file.split_once('\n') {
            Some((first, rest)) if first.trim_start().starts_with('#') => {
                let v = first
                    .trim_start()
                    .trim_start_matches('#')
                    .trim()
                    .strip_prefix("version:")
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| {
                        AnalysisError::Configuration(format!(
                            "prompt {name}: bad version header `{first}`"
                        ))
                    })?;
                (v, rest)
            }
            _ => (0, file),
        };
        let template = Self {
            name: name.to_owned(),
            version,
            text: body.to_owned(),
        };
        template.check_placeholders()?;
        Ok(template)
    }

    fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.text
            .split('{')
            .skip(1)
            .filter_map(|rest| rest.split_once('}').map(|(p, _)| p))
    }

    fn check_placeholders(&self) -> Result<(), AnalysisError> {
        match self.placeholders().find(|p| !PLACEHOLDERS.contains(p)) {
            Some(p) => Err(AnalysisError::Configuration(format!(
                "prompt {}: unknown placeholder {{{p}}}",
                self.name
            ))),
            None => Ok(()),
        }
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }

    /// `v<version>:<first 12 hex digits of the body digest>`
    pub fn provenance(&self) -> String {
        format!("v{}:{}", self.version, &self.digest()[..12])
    }

    pub fn render(&self, values: &BTreeMap<&str, String>) -> String {
        let mut out = self.text.clone();
        for (key, value) in values {
            out = out.replace(&format!("{{{key}}}"), value);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    pub summary: PromptTemplate,
    pub followups: PromptTemplate,
    pub tagging: PromptTemplate,
    pub theme_summary: PromptTemplate,
}

impl Default for PromptSet {
    fn default() -> Self {
        let p = |name, text| PromptTemplate::parse(name, text).expect("shipped prompt is valid");
        Self {
            summary: p("summary", include_str!("../../config/prompts/summary.txt")),
            followups: p(
                "followups",
                include_str!("../../config/prompts/followups.txt"),
            ),
            tagging: p("tagging", include_str!("../../config/prompts/tagging.txt")),
            theme_summary: p(
                "theme_summary",
                include_str!("../../config/prompts/theme_summary.txt"),
            ),
        }
    }
}

impl PromptSet {
    /// Loads `<name>.txt` files from `dir`; missing files keep the shipped
    /// template.
    pub fn load_dir(dir: &Path) -> Result<Self, AnalysisError> {
        let mut set = Self::default();
        for t in set.iter_mut() {
            let path = dir.join(format!("{}.txt", t.name));
            match fs::read_to_string(&path) {
                Ok(text) => *t = PromptTemplate::parse(&t.name, &text)?,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => {
                    return Err(AnalysisError::Configuration(format!(
                        "{}: {e}",
                        path.display()
                    )))
                }
            }
        }
        Ok(set)
    }

    fn iter_mut(&mut self) -> [&mut PromptTemplate; 4] {
        [
            &mut self.summary,
            &mut self.followups,
            &mut self.tagging,
            &mut self.theme_summary,
        ]
    }

    pub fn iter(&self) -> [&PromptTemplate; 4] {
        [
            &self.summary,
            &self.followups,
            &self.tagging,
            &self.theme_summary,
        ]
    }

    pub fn provenance(&self) -> BTreeMap<String, String> {
        self.iter()
            .into_iter()
            .map(|t| (t.name.clone(), t.provenance()))
            .collect()
    }
}
