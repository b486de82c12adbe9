//! The feedback schema and the rules that merge model output with the
//! engine's findings.

use std::collections::BTreeMap;

use deliverc_core::ConstraintTag;
use serde::{Deserialize, Serialize};

use crate::grading::{AttemptResult, LocalFindings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    MeetsExpectations,
    Incorrect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackSource {
    Model,
    Template,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub verdict: Verdict,
    pub misconceptions: Vec<String>,
    pub suggestions: Vec<String>,
    pub constraint_findings: BTreeMap<ConstraintTag, bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub input_flags: Vec<String>,
    /// The model's verdict when it disagreed with the engine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissent: Option<String>,
    pub source: FeedbackSource,
}

/// The reply shape demanded from the model.
#[derive(Debug, Deserialize)]
pub(crate) struct ModelFeedback {
    pub verdict: Verdict,
    #[serde(default)]
    pub misconceptions: Vec<String>,
    #[serde(default)]
    pub suggestions: Vec<String>,
    #[serde(default)]
    #[allow(dead_code)]
    pub constraint_findings: BTreeMap<String, bool>,
}

/// Parses a model reply under the feedback contract: one JSON object,
/// optionally surrounded by prose or a code fence.
pub(crate) fn parse_model_feedback(reply: &str) -> Result<ModelFeedback, String> {
    let start = reply.find('{').ok_or("no JSON object in reply")?;
    let end = reply.rfind('}').ok_or("no JSON object in reply")?;
    if end < start {
        return Err("no JSON object in reply".into());
    }
    let parsed: ModelFeedback = serde_json::from_str(&reply[start..=end]).map_err(|e| e.to_string())?;
    if parsed.verdict == Verdict::MeetsExpectations && !parsed.misconceptions.is_empty() {
        return Err("meets_expectations with misconceptions".into());
    }
    Ok(parsed)
}

fn engine_verdict(local: &LocalFindings) -> Verdict {
    if local.passed() {
        Verdict::MeetsExpectations
    } else {
        Verdict::Incorrect
    }
}

/// Combines a model reply with the local findings. The engine decides the
/// verdict and the constraint findings; the model supplies explanations.
pub(crate) fn merge(model: ModelFeedback, local: &LocalFindings, flags: &[String]) -> (Feedback, bool) {
    let verdict = engine_verdict(local);
    let disagrees = model.verdict != verdict;
    let mut feedback = Feedback {
        verdict,
        misconceptions: model.misconceptions,
        suggestions: model.suggestions,
        constraint_findings: local.constraints.clone(),
        input_flags: flags.to_vec(),
        dissent: None,
        source: FeedbackSource::Model,
    };
    if disagrees {
        feedback.dissent = Some(match model.verdict {
            Verdict::MeetsExpectations => "the reviewer judged the code correct, but the engine result decides".into(),
            Verdict::Incorrect => "the reviewer judged the code incorrect, but the engine accepted it".into(),
        });
    }
    match verdict {
        Verdict::MeetsExpectations => feedback.misconceptions.clear(),
        Verdict::Incorrect if feedback.misconceptions.is_empty() => {
            feedback.misconceptions = template_misconceptions(local);
        }
        Verdict::Incorrect => {}
    }
    if feedback.suggestions.is_empty() {
        feedback.suggestions = template_suggestions(local);
    }
    (feedback, disagrees)
}

/// Feedback built from the local findings alone.
pub fn template_feedback(local: &LocalFindings, flags: &[String]) -> Feedback {
    let verdict = engine_verdict(local);
    Feedback {
        verdict,
        misconceptions: if verdict == Verdict::Incorrect { template_misconceptions(local) } else { Vec::new() },
        suggestions: template_suggestions(local),
        constraint_findings: local.constraints.clone(),
        input_flags: flags.to_vec(),
        dissent: None,
        source: FeedbackSource::Template,
    }
}

fn template_misconceptions(local: &LocalFindings) -> Vec<String> {
    let first_error = || {
        local
            .diagnostics
            .iter()
            .find(|d| d.severity == deliverc_core::interp::Severity::Error)
            .map(|d| d.to_string())
            .unwrap_or_default()
    };
    match local.result {
        AttemptResult::ParseError => vec![format!("The code does not compile: {}", first_error())],
        AttemptResult::RuntimeError => vec![format!("The program stops with an error: {}", first_error())],
        AttemptResult::OutcomeMismatch => {
            let mut out = vec!["The program runs, but the deliveries do not match the task.".to_string()];
            out.extend(local.differences.iter().map(|d| capitalize(d) + "."));
            out
        }
        AttemptResult::ConstraintFail => local
            .constraints
            .iter()
            .filter(|(_, ok)| !**ok)
            .map(|(t, _)| format!("The deliveries are right, but the task asks you to {}.", t.requirement()))
            .collect(),
        AttemptResult::Pass => Vec::new(),
    }
}

fn template_suggestions(local: &LocalFindings) -> Vec<String> {
    let text = match local.result {
        AttemptResult::ParseError => "Fix the error at the reported line and column, then run the code again.",
        AttemptResult::RuntimeError => {
            "Check every pointer before you dereference it and make sure each P and D uses an occupied slot."
        }
        AttemptResult::OutcomeMismatch => "Trace the truck step by step and compare where each item ends up.",
        AttemptResult::ConstraintFail => "Rewrite the solution so it uses the required pointer feature.",
        AttemptResult::Pass => "Well done. Move on to the next task.",
    };
    vec![text.to_string()]
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
}
