//! Prompt templates, kept as text resources under `prompts/<stage>.txt`.
//!
//! A template file is a list of `@@` sections:
//!
//! ```text
//! @@version 1
//! @@contract task-record
//! @@system
//! ...instructions...
//! @@user
//! ...input with {{placeholders}}...
//! @@example
//! ...few-shot input...
//! @@expected
//! ...few-shot output...
//! ```
//!
//! Lines starting with `#` before the first section are comments.

use std::collections::BTreeMap;
use std::path::Path;
use std::{fs, io};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generate,
    ReferenceSolution,
    Evaluate,
    Translate,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Generate, Stage::ReferenceSolution, Stage::Evaluate, Stage::Translate];

    pub fn file_name(self) -> &'static str {
        match self {
            Stage::Generate => "generate.txt",
            Stage::ReferenceSolution => "reference_solution.txt",
            Stage::Evaluate => "evaluate.txt",
            Stage::Translate => "translate.txt",
        }
    }

    /// Name of the output format the stage's replies are parsed under.
    pub fn contract(self) -> &'static str {
        match self {
            Stage::Generate => "task-record",
            Stage::ReferenceSolution => "c-source",
            Stage::Evaluate => "feedback-json",
            Stage::Translate => "command-dsl",
        }
    }

    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            Stage::Generate => &["level", "topic", "tags", "ordinal", "history", "exemplars"],
            Stage::ReferenceSolution => &["task", "requirements", "visits"],
            Stage::Evaluate => &[
                "task",
                "requirements",
                "reference",
                "engine_result",
                "diagnostics",
                "constraints",
                "flags",
                "student",
            ],
            Stage::Translate => &["student"],
        }
    }

    fn embedded_text(self) -> &'static str {
        match self {
            Stage::Generate => include_str!("../../../../prompts/generate.txt"),
            Stage::ReferenceSolution => include_str!("../../../../prompts/reference_solution.txt"),
            Stage::Evaluate => include_str!("../../../../prompts/evaluate.txt"),
            Stage::Translate => include_str!("../../../../prompts/translate.txt"),
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Generate => "generate",
            Stage::ReferenceSolution => "reference_solution",
            Stage::Evaluate => "evaluate",
            Stage::Translate => "translate",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub stage: Stage,
    pub version: u32,
    pub system: String,
    pub user: String,
    /// Fixed few-shot pairs of (input, expected output).
    pub examples: Vec<(String, String)>,
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("{file}: line {line}: {reason}")]
    Parse { file: &'static str, line: usize, reason: String },
    #[error("{file}: {reason}")]
    Invalid { file: &'static str, reason: String },
    #[error("{file}: {source}")]
    Io { file: String, source: io::Error },
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    System,
    User,
    Example,
    Expected,
}

impl PromptTemplate {
    pub fn parse(stage: Stage, text: &str) -> Result<Self, TemplateError> {
        let file = stage.file_name();
        let err = |line: usize, reason: String| TemplateError::Parse { file, line, reason };
        let mut version = None;
        let mut sections: Vec<(Section, Vec<&str>)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let Some(directive) = line.strip_prefix("@@") else {
                match sections.last_mut() {
                    Some((_, body)) => body.push(line),
                    None if line.trim().is_empty() || line.starts_with('#') => {}
                    None => return Err(err(i + 1, "text before the first @@ section".into())),
                }
                continue;
            };
            let (key, arg) = directive.split_once(' ').unwrap_or((directive, ""));
            let section = match key.trim() {
                "version" => {
                    version = Some(arg.trim().parse::<u32>().map_err(|_| err(i + 1, format!("bad version '{arg}'")))?);
                    continue;
                }
                "contract" => {
                    if arg.trim() != stage.contract() {
                        return Err(err(i + 1, format!("contract must be {}", stage.contract())));
                    }
                    continue;
                }
                "system" => Section::System,
                "user" => Section::User,
                "example" => Section::Example,
                "expected" => Section::Expected,
                other => return Err(err(i + 1, format!("unknown section @@{other}"))),
            };
            if section == Section::Expected && sections.last().map(|s| s.0) != Some(Section::Example) {
                return Err(err(i + 1, "@@expected must follow @@example".into()));
            }
            sections.push((section, Vec::new()));
        }
        let invalid = |reason: &str| TemplateError::Invalid { file, reason: reason.into() };
        let version = version.ok_or_else(|| invalid("missing @@version"))?;
        let body = |lines: &[&str]| lines.join("\n").trim_matches('\n').to_string();
        let find = |s: Section| sections.iter().find(|(k, _)| *k == s).map(|(_, l)| body(l));
        let system = find(Section::System).ok_or_else(|| invalid("missing @@system"))?;
        let user = find(Section::User).ok_or_else(|| invalid("missing @@user"))?;
        let mut examples = Vec::new();
        for pair in sections.windows(2) {
            if let [(Section::Example, input), (Section::Expected, output)] = pair {
                examples.push((body(input), body(output)));
            }
        }
        if sections.iter().filter(|s| s.0 == Section::Example).count() != examples.len() {
            return Err(invalid("every @@example needs an @@expected"));
        }
        let template = PromptTemplate { stage, version, system, user, examples };
        template.check_placeholders()?;
        Ok(template)
    }

    fn check_placeholders(&self) -> Result<(), TemplateError> {
        let file = self.stage.file_name();
        for name in placeholders(&self.system) {
            if !self.stage.placeholders().contains(&name) || name == "student" {
                return Err(TemplateError::Invalid { file, reason: format!("@@system may not use {{{{{name}}}}}") });
            }
        }
        for name in placeholders(&self.user) {
            if !self.stage.placeholders().contains(&name) {
                return Err(TemplateError::Invalid { file, reason: format!("unknown placeholder {{{{{name}}}}}") });
            }
        }
        Ok(())
    }

    pub fn render_user(&self, values: &[(&str, &str)]) -> String {
        render(&self.user, values)
    }
}

fn placeholders(text: &str) -> impl Iterator<Item = &str> {
    text.split("{{").skip(1).filter_map(|rest| rest.split_once("}}").map(|(name, _)| name.trim()))
}

/// Substitutes `{{name}}` placeholders in one pass, so substituted values are
/// never scanned for further placeholders. Unknown names are left as written.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                let name = after[..end].trim();
                match values.iter().find(|(k, _)| *k == name) {
                    Some((_, v)) => out.push_str(v),
                    None => out.push_str(&rest[start..start + 2 + end + 2]),
                }
                rest = &after[end + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Clone, Debug)]
pub struct Templates {
    by_stage: BTreeMap<Stage, PromptTemplate>,
}

impl Templates {
    /// The templates shipped with the crate.
    pub fn embedded() -> Self {
        let by_stage = Stage::ALL
            .into_iter()
            .map(|s| (s, PromptTemplate::parse(s, s.embedded_text()).expect("shipped template is valid")))
            .collect();
        Templates { by_stage }
    }

    /// Loads `<dir>/<stage>.txt` where present, using the shipped template
    /// for any stage without a file.
    pub fn from_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut templates = Templates::embedded();
        for stage in Stage::ALL {
            let path = dir.join(stage.file_name());
            match fs::read_to_string(&path) {
                Ok(text) => {
                    templates.by_stage.insert(stage, PromptTemplate::parse(stage, &text)?);
                }
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(source) => return Err(TemplateError::Io { file: path.display().to_string(), source }),
            }
        }
        Ok(templates)
    }

    pub fn get(&self, stage: Stage) -> &PromptTemplate {
        &self.by_stage[&stage]
    }
}
