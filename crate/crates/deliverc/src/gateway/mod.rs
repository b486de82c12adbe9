//! Model-backed pipelines: task generation, reference solutions, code review
//! and code-to-command translation.
//!
//! Every reply is parsed under its stage's output format. A reply that does
//! not parse, or a generated task that fails validation, earns a repair turn;
//! when the retries run out each stage has a fallback: a curated exemplar
//! task, template feedback built from the engine's findings, or the
//! interpreter's own trace.

pub mod feedback;
pub mod guard;
pub mod mock;
pub mod provider;
pub mod template;

use std::collections::BTreeSet;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use deliverc_core::interp::{self, Limits};
use deliverc_core::task::{self, LevelTopic, TaskSpec};
use deliverc_core::{dsl, outcome_matches, run, Command, GameState};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::grading::LocalFindings;
use feedback::Feedback;
use guard::GuardedInput;
use provider::{ChatProvider, ChatRequest, Message, ProviderError};
use template::{Stage, Templates};

pub const FORMAT_REMINDER_TASK: &str =
    "Format only: reply with exactly one line that starts with TASK| and has six |-separated fields. No other text.";
pub const FORMAT_REMINDER_CODE: &str = "Format only: reply with the C program and nothing else.";
pub const FORMAT_REMINDER_FEEDBACK: &str =
    "Format only: reply with one JSON object with the keys verdict, misconceptions, suggestions and constraint_findings.";
pub const FORMAT_REMINDER_COMMANDS: &str =
    "Format only: reply with commands separated by |, such as P2|V03|D1, and nothing else.";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GatewayConfig {
    pub model: String,
    /// Repair turns allowed per call after the first reply.
    pub max_retries: u32,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig { model: provider::DEFAULT_MODEL.into(), max_retries: 1 }
    }
}

#[derive(Default)]
struct Metrics {
    format_retries: AtomicU64,
    validation_retries: AtomicU64,
    fallbacks: AtomicU64,
    translation_divergences: AtomicU64,
    evaluation_disagreements: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub format_retries: u64,
    pub validation_retries: u64,
    pub fallbacks: u64,
    pub translation_divergences: u64,
    pub evaluation_disagreements: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error(transparent)]
    ProviderUnavailable(#[from] ProviderError),
    #[error("no acceptable reference solution after {attempts} attempts: {reason}")]
    ReferenceRejected { attempts: u32, reason: String },
    #[error("task generation needs at least one exemplar")]
    NoExemplars,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOrigin {
    Generated,
    /// Retries ran out and a curated exemplar was served instead.
    ExemplarFallback,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedTask {
    pub task: TaskSpec,
    pub origin: TaskOrigin,
    pub attempts: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct GenerateRequest<'a> {
    pub level: u8,
    pub ordinal: u8,
    /// The level's curated pool.
    pub exemplars: &'a [TaskSpec],
    /// Prompt texts of tasks the student already completed.
    pub history: &'a [String],
    pub fallback_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Translation {
    /// The interpreter's trace, which is what gets animated.
    pub commands: Vec<Command>,
    /// The model's command text, when it produced a parsable one.
    pub model_text: Option<String>,
    pub diverged: bool,
}

pub struct Gateway {
    provider: Arc<dyn ChatProvider>,
    templates: Templates,
    config: GatewayConfig,
    metrics: Metrics,
}

impl Gateway {
    pub fn new(provider: Arc<dyn ChatProvider>, templates: Templates, config: GatewayConfig) -> Self {
        Gateway { provider, templates, config, metrics: Metrics::default() }
    }

    pub fn metrics(&self) -> MetricsSnapshot {
        let m = &self.metrics;
        let get = |a: &AtomicU64| a.load(Ordering::Relaxed);
        MetricsSnapshot {
            format_retries: get(&m.format_retries),
            validation_retries: get(&m.validation_retries),
            fallbacks: get(&m.fallbacks),
            translation_divergences: get(&m.translation_divergences),
            evaluation_disagreements: get(&m.evaluation_disagreements),
        }
    }

    fn attempts(&self) -> u32 {
        1 + self.config.max_retries
    }

    fn request(&self, stage: Stage, input: String, examples: Vec<(String, String)>) -> ChatRequest {
        let tpl = self.templates.get(stage);
        let mut all = tpl.examples.clone();
        all.extend(examples);
        ChatRequest {
            stage,
            model: self.config.model.clone(),
            system: tpl.system.clone(),
            examples: all,
            input,
            followups: Vec::new(),
        }
    }

    fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }

    /// Asks the model for a new task and validates it, retrying with repair
    /// turns; after the retries it serves an unused exemplar.
    pub fn generate_task(&self, req: &GenerateRequest<'_>) -> Result<GeneratedTask, GatewayError> {
        if req.exemplars.is_empty() {
            return Err(GatewayError::NoExemplars);
        }
        let topic = LevelTopic::for_level(req.level).ok_or(GatewayError::NoExemplars)?;
        let ordered = order_exemplars(req.exemplars, req.history, req.ordinal);
        let exemplar_block: Vec<String> = ordered.iter().map(|t| t.to_record()).collect();
        let history_block = if req.history.is_empty() {
            "none".to_string()
        } else {
            req.history.iter().map(|h| format!("- {h}")).collect::<Vec<_>>().join("\n")
        };
        let tags: Vec<&str> = topic.tags().iter().map(|t| t.name()).collect();
        let (level, ordinal) = (req.level.to_string(), req.ordinal.to_string());
        let input = self.templates.get(Stage::Generate).render_user(&[
            ("level", &level),
            ("topic", topic.description()),
            ("tags", &tags.join(", ")),
            ("ordinal", &ordinal),
            ("history", &history_block),
            ("exemplars", &exemplar_block.join("\n")),
        ]);
        let mut chat = self.request(Stage::Generate, input, Vec::new());
        for attempt in 1..=self.attempts() {
            let reply = self.provider.complete(&chat)?;
            chat.followups.push(Message::assistant(reply.clone()));
            let candidate = task::find_record(&reply)
                .ok_or_else(|| "no task record".to_string())
                .and_then(|line| task::parse_record(line, req.level).map_err(|e| e.to_string()));
            let mut candidate = match candidate {
                Ok(c) => c,
                Err(reason) => {
                    log::info!("generate: unusable reply ({reason}), asking for a repair");
                    Self::bump(&self.metrics.format_retries);
                    chat.followups.push(Message::user(FORMAT_REMINDER_TASK));
                    continue;
                }
            };
            candidate.ordinal = req.ordinal;
            let mut accepted = match task::validate_generated(&candidate) {
                Ok(t) => t,
                Err(e) => {
                    log::info!("generate: candidate rejected: {e}");
                    Self::bump(&self.metrics.validation_retries);
                    chat.followups.push(Message::user(format!("That task was rejected: {e}. Write a different task.")));
                    continue;
                }
            };
            match self.reference_solution(&accepted, req.exemplars) {
                Ok(solution) => {
                    accepted.reference_solution = solution;
                    return Ok(GeneratedTask { task: accepted, origin: TaskOrigin::Generated, attempts: attempt });
                }
                Err(GatewayError::ReferenceRejected { reason, .. }) => {
                    log::info!("generate: no reliable reference solution: {reason}");
                    Self::bump(&self.metrics.validation_retries);
                    chat.followups.push(Message::user(
                        "That task could not be solved reliably from its text. Write a clearer task.",
                    ));
                }
                Err(e) => return Err(e),
            }
        }
        Self::bump(&self.metrics.fallbacks);
        log::warn!("generate: retries exhausted for level {} task {}, serving an exemplar", req.level, req.ordinal);
        let mut task = pick_exemplar(req.exemplars, req.history, req.ordinal, req.fallback_seed)
            .cloned()
            .ok_or(GatewayError::NoExemplars)?;
        task.ordinal = req.ordinal;
        Ok(GeneratedTask { task, origin: TaskOrigin::ExemplarFallback, attempts: self.attempts() })
    }

    /// Asks for a program solving `task` and accepts it only when it
    /// reproduces the task's reference outcome and uses the tagged features.
    pub fn reference_solution(&self, task: &TaskSpec, exemplars: &[TaskSpec]) -> Result<String, GatewayError> {
        let tpl = self.templates.get(Stage::ReferenceSolution);
        let render_task = |t: &TaskSpec| {
            tpl.render_user(&[
                ("task", &t.prompt_text),
                ("requirements", &requirements(t)),
                ("visits", &visits(t)),
            ])
        };
        let examples = exemplars.iter().map(|e| (render_task(e), e.reference_solution.clone())).collect();
        let mut chat = self.request(Stage::ReferenceSolution, render_task(task), examples);
        let mut reason = String::new();
        for _ in 0..self.attempts() {
            let reply = self.provider.complete(&chat)?;
            chat.followups.push(Message::assistant(reply.clone()));
            let code = strip_fence(&reply);
            match check_solution(task, &code) {
                Ok(()) => return Ok(code),
                Err(why) => {
                    log::info!("reference solution rejected: {why}");
                    Self::bump(&self.metrics.format_retries);
                    chat.followups.push(Message::user(format!("That program is not accepted: {why}. {FORMAT_REMINDER_CODE}")));
                    reason = why;
                }
            }
        }
        Err(GatewayError::ReferenceRejected { attempts: self.attempts(), reason })
    }

    /// Reviews a submission. The engine's findings, already computed, decide
    /// the verdict; the model contributes explanations. Never fails: when the
    /// model is unreachable or keeps breaking the format, the feedback is
    /// built from the findings alone.
    pub fn evaluate_code(&self, task: &TaskSpec, student: &GuardedInput, local: &LocalFindings) -> Feedback {
        let engine_result =
            if local.passed() { "pass".to_string() } else { format!("fail ({})", local.result) };
        let diagnostics = if local.diagnostics.is_empty() {
            "none".to_string()
        } else {
            local.diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
        };
        let mut constraint_lines: Vec<String> =
            local.constraints.iter().map(|(t, ok)| format!("{}: {}", t.name(), ok)).collect();
        constraint_lines.extend(local.differences.iter().map(|d| format!("difference: {d}")));
        let flags = if student.flags.is_empty() { "none".to_string() } else { student.flags.join("; ") };
        let input = self.templates.get(Stage::Evaluate).render_user(&[
            ("task", &task.prompt_text),
            ("requirements", &requirements(task)),
            ("reference", &task.reference_solution),
            ("engine_result", &engine_result),
            ("diagnostics", &diagnostics),
            ("constraints", &constraint_lines.join("\n")),
            ("flags", &flags),
            ("student", &student.block),
        ]);
        let mut chat = self.request(Stage::Evaluate, input, Vec::new());
        for _ in 0..self.attempts() {
            let reply = match self.provider.complete(&chat) {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("evaluate: provider failed: {e}");
                    break;
                }
            };
            chat.followups.push(Message::assistant(reply.clone()));
            match feedback::parse_model_feedback(&reply) {
                Ok(model) => {
                    let (fb, disagrees) = feedback::merge(model, local, &student.flags);
                    if disagrees {
                        Self::bump(&self.metrics.evaluation_disagreements);
                        log::warn!("evaluate: model verdict disagrees with engine result {}", local.result);
                    }
                    return checked(fb, local);
                }
                Err(why) => {
                    log::info!("evaluate: malformed feedback ({why}), asking for a repair");
                    Self::bump(&self.metrics.format_retries);
                    chat.followups.push(Message::user(FORMAT_REMINDER_FEEDBACK));
                }
            }
        }
        Self::bump(&self.metrics.fallbacks);
        checked(feedback::template_feedback(local, &student.flags), local)
    }

    /// Asks the model to translate the submission into commands and compares
    /// its answer with the interpreter's trace, which always wins.
    pub fn translate_code(&self, student: &GuardedInput, trace: &[Command]) -> Translation {
        let input = self.templates.get(Stage::Translate).render_user(&[("student", &student.block)]);
        let mut chat = self.request(Stage::Translate, input, Vec::new());
        for _ in 0..self.attempts() {
            let reply = match self.provider.complete(&chat) {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("translate: provider failed: {e}");
                    break;
                }
            };
            chat.followups.push(Message::assistant(reply.clone()));
            let text = command_line(&reply);
            match dsl::parse(&text) {
                Ok(cmds) => {
                    let diverged = cmds != trace;
                    if diverged {
                        Self::bump(&self.metrics.translation_divergences);
                        log::warn!("translate: model gave {text} but the interpreter trace differs");
                    }
                    return Translation { commands: trace.to_vec(), model_text: Some(text), diverged };
                }
                Err(e) => {
                    log::info!("translate: {e}, asking for a repair");
                    Self::bump(&self.metrics.format_retries);
                    chat.followups.push(Message::user(FORMAT_REMINDER_COMMANDS));
                }
            }
        }
        Self::bump(&self.metrics.fallbacks);
        Translation { commands: trace.to_vec(), model_text: None, diverged: false }
    }
}

/// The engine-precedence rule, asserted where feedback leaves the gateway.
fn checked(fb: Feedback, local: &LocalFindings) -> Feedback {
    assert!(
        fb.verdict != feedback::Verdict::MeetsExpectations || local.passed(),
        "feedback may not pass a submission the engine failed"
    );
    fb
}

fn requirements(task: &TaskSpec) -> String {
    task.constraint_tags.iter().map(|t| format!("{} ({})", t.name(), t.requirement())).collect::<Vec<_>>().join("; ")
}

fn visits(task: &TaskSpec) -> String {
    match &task.required_visits {
        Some(v) => v.iter().map(|l| l.linear().to_string()).collect::<Vec<_>>().join(", "),
        None => "none".into(),
    }
}

fn strip_fence(reply: &str) -> String {
    let t = reply.trim();
    if let Some(inner) = t.strip_prefix("```") {
        let inner = inner.split_once('\n').map_or("", |(_, rest)| rest);
        return inner.trim_end().trim_end_matches("```").trim().to_string();
    }
    t.to_string()
}

fn command_line(reply: &str) -> String {
    strip_fence(reply).lines().map(|l| l.trim().trim_matches('`')).find(|l| !l.is_empty()).unwrap_or("").to_string()
}

fn check_solution(task: &TaskSpec, code: &str) -> Result<(), String> {
    let program = interp::compile(code).map_err(|e| format!("it does not compile ({e})"))?;
    let trace = interp::execute(&program, Limits::default()).map_err(|e| format!("it fails at run time ({e})"))?.trace;
    let state = run(&GameState::initial(), &trace).map_err(|e| format!("the truck cannot follow it ({e})"))?;
    if !outcome_matches(&state, &task.reference_outcome, task.required_visits.as_deref()) {
        return Err("its deliveries differ from the task".into());
    }
    if let Some(t) = task.constraint_tags.iter().find(|t| !t.holds(&program.facts())) {
        return Err(format!("it does not {}", t.requirement()));
    }
    Ok(())
}

/// Unused exemplars for the requested task number first, then other unused
/// ones, then the rest.
pub fn order_exemplars<'a>(exemplars: &'a [TaskSpec], history: &[String], ordinal: u8) -> Vec<&'a TaskSpec> {
    let used = |t: &TaskSpec| history.iter().any(|h| *h == t.prompt_text);
    let mut ordered: Vec<&TaskSpec> = exemplars.iter().collect();
    ordered.sort_by_key(|t| (used(t), t.ordinal != ordinal));
    ordered
}

/// A seeded random choice among the exemplars the student has not completed,
/// preferring ones written for the same task number.
pub fn pick_exemplar<'a>(exemplars: &'a [TaskSpec], history: &[String], ordinal: u8, seed: u64) -> Option<&'a TaskSpec> {
    let used: BTreeSet<&str> = history.iter().map(String::as_str).collect();
    let unused: Vec<&TaskSpec> = exemplars.iter().filter(|t| !used.contains(t.prompt_text.as_str())).collect();
    let same: Vec<&TaskSpec> = unused.iter().copied().filter(|t| t.ordinal == ordinal).collect();
    let pool = if !same.is_empty() {
        same
    } else if !unused.is_empty() {
        unused
    } else {
        exemplars.iter().collect()
    };
    let mut rng = StdRng::seed_from_u64(seed);
    pool.choose(&mut rng).copied()
}

/// Stable seed for a session's fallback choices.
pub fn seed_for(session_id: &str, level: u8, ordinal: u8) -> u64 {
    let mut h = DefaultHasher::new();
    (session_id, level, ordinal).hash(&mut h);
    h.finish()
}
