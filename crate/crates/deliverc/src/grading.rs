//! Deterministic grading of a submission: compile, execute, replay on the
//! engine, compare with the task's reference outcome and check constraints.

use std::collections::BTreeMap;

use deliverc_core::game::{Holder, RunError};
use deliverc_core::interp::{self, Diagnostic, Severity};
use deliverc_core::{dsl, outcome_matches, run, Command, ConstraintTag, GameState, Item, Limits, TaskSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttemptResult {
    ParseError,
    RuntimeError,
    OutcomeMismatch,
    ConstraintFail,
    Pass,
}

impl AttemptResult {
    pub fn is_pass(self) -> bool {
        self == AttemptResult::Pass
    }
}

impl std::fmt::Display for AttemptResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalFindings {
    pub result: AttemptResult,
    pub diagnostics: Vec<Diagnostic>,
    pub constraints: BTreeMap<ConstraintTag, bool>,
    /// Commands produced by the program, when it ran to completion.
    pub trace: Option<Vec<Command>>,
    /// Ways the final state differs from the reference outcome.
    pub differences: Vec<String>,
}

impl LocalFindings {
    pub fn passed(&self) -> bool {
        self.result.is_pass()
    }

    /// The trace in wire format, when there is a non-empty one.
    pub fn trace_text(&self) -> Option<String> {
        self.trace.as_deref().and_then(|t| dsl::serialize(t).ok())
    }
}

pub fn grade(task: &TaskSpec, source: &str) -> LocalFindings {
    let mut findings = LocalFindings {
        result: AttemptResult::ParseError,
        diagnostics: Vec::new(),
        constraints: task.constraint_tags.iter().map(|&t| (t, false)).collect(),
        trace: None,
        differences: Vec::new(),
    };
    let program = match interp::compile(source) {
        Ok(p) => p,
        Err(e) => {
            findings.diagnostics.push(e.to_diagnostic());
            return findings;
        }
    };
    findings.constraints = interp::check_constraints(&program, &task.constraint_tags);
    findings.diagnostics.extend(program.warnings().iter().cloned());
    let executed = match interp::execute(&program, Limits::default()) {
        Ok(r) => r,
        Err(e) => {
            findings.result = AttemptResult::RuntimeError;
            findings.diagnostics.push(e.to_diagnostic());
            return findings;
        }
    };
    let state = match run(&GameState::initial(), &executed.trace) {
        Ok(s) => s,
        Err(RunError { index, command, error }) => {
            let (line, col) = executed.call_sites.get(index).map_or((0, 0), |s| (s.line, s.col));
            findings.result = AttemptResult::RuntimeError;
            findings.diagnostics.push(Diagnostic {
                severity: Severity::Error,
                line,
                col,
                message: format!("the truck cannot do {command}: {error}"),
            });
            findings.trace = Some(executed.trace);
            return findings;
        }
    };
    findings.trace = Some(executed.trace);
    let required = task.required_visits.as_deref();
    if !outcome_matches(&state, &task.reference_outcome, required) {
        findings.result = AttemptResult::OutcomeMismatch;
        findings.differences = describe_differences(&state, &task.reference_outcome, required);
        return findings;
    }
    findings.result = if findings.constraints.values().all(|&ok| ok) {
        AttemptResult::Pass
    } else {
        AttemptResult::ConstraintFail
    };
    findings
}

fn place(state: &GameState, item: Item) -> String {
    match state.locate(item) {
        Some((Holder::Truck, _)) => "on the truck".into(),
        Some((Holder::Location(l), s)) => format!("at location {} slot {}", l.linear(), s.get()),
        None => "nowhere".into(),
    }
}

pub fn describe_differences(
    actual: &GameState,
    reference: &GameState,
    required: Option<&[deliverc_core::LocationId]>,
) -> Vec<String> {
    let mut out = Vec::new();
    for item in Item::ALL {
        let (want, got) = (place(reference, item), place(actual, item));
        if want != got {
            out.push(format!("{item} should end {want} but ends {got}"));
        }
    }
    if actual.truck_at() != reference.truck_at() {
        out.push(format!(
            "the truck should finish at location {} but finishes at location {}",
            reference.truck_at().linear(),
            actual.truck_at().linear()
        ));
    }
    if let Some(req) = required {
        if !deliverc_core::game::is_subsequence(req, actual.visit_trace()) {
            let list: Vec<String> = req.iter().map(|l| l.linear().to_string()).collect();
            out.push(format!("the truck must visit locations {} in that order", list.join(", ")));
        }
    }
    out
}
