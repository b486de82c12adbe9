//! Offline provider for tests, demos and the `play` command.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;

use deliverc_core::{dsl, interp, task};

use super::guard;
use super::provider::{ChatProvider, ChatRequest, ProviderError};
use super::template::Stage;

type Responder = Box<dyn Fn(&ChatRequest) -> Result<String, ProviderError> + Send + Sync>;

/// Replies from per-stage scripts first, then from a responder function.
pub struct MockProvider {
    scripts: Mutex<BTreeMap<Stage, VecDeque<Result<String, ProviderError>>>>,
    responder: Responder,
    calls: Mutex<Vec<ChatRequest>>,
}

impl MockProvider {
    pub fn with_responder(f: impl Fn(&ChatRequest) -> Result<String, ProviderError> + Send + Sync + 'static) -> Self {
        MockProvider { scripts: Mutex::new(BTreeMap::new()), responder: Box::new(f), calls: Mutex::new(Vec::new()) }
    }

    /// A well-behaved provider: see [`echo_reply`].
    pub fn echo() -> Self {
        Self::with_responder(echo_reply)
    }

    /// Fails every call.
    pub fn unavailable() -> Self {
        Self::with_responder(|_| Err(ProviderError::Unavailable("mock outage".into())))
    }

    /// Answers every call with the same text.
    pub fn constant(text: &str) -> Self {
        let text = text.to_string();
        Self::with_responder(move |_| Ok(text.clone()))
    }

    /// Queues a reply for the next call at `stage`.
    pub fn push(&self, stage: Stage, reply: Result<String, ProviderError>) -> &Self {
        self.scripts.lock().unwrap().entry(stage).or_default().push_back(reply);
        self
    }

    pub fn push_text(&self, stage: Stage, text: &str) -> &Self {
        self.push(stage, Ok(text.to_string()))
    }

    pub fn calls(&self) -> Vec<ChatRequest> {
        self.calls.lock().unwrap().clone()
    }

    pub fn calls_at(&self, stage: Stage) -> usize {
        self.calls.lock().unwrap().iter().filter(|c| c.stage == stage).count()
    }
}

impl ChatProvider for MockProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        self.calls.lock().unwrap().push(request.clone());
        let scripted = self.scripts.lock().unwrap().get_mut(&request.stage).and_then(VecDeque::pop_front);
        scripted.unwrap_or_else(|| (self.responder)(request))
    }
}

/// What a cooperative model would say, computed from the request itself:
///
/// - generate: the first task record shown in the input;
/// - reference solution: the answer of the few-shot example whose input
///   equals this one;
/// - evaluate: a verdict that agrees with the `ENGINE_RESULT` line;
/// - translate: the interpreter's trace of the fenced program.
pub fn echo_reply(request: &ChatRequest) -> Result<String, ProviderError> {
    let input = &request.input;
    Ok(match request.stage {
        Stage::Generate => task::find_record(input).unwrap_or("I could not think of a task.").to_string(),
        Stage::ReferenceSolution => request
            .examples
            .iter()
            .find(|(i, _)| i == input)
            .map(|(_, o)| o.clone())
            .unwrap_or_else(|| "V(0);".to_string()),
        Stage::Evaluate => {
            let pass = input.lines().any(|l| l.trim() == "ENGINE_RESULT: pass");
            if pass {
                r#"{"verdict": "meets_expectations", "misconceptions": [], "suggestions": ["Well done. Try the next task."], "constraint_findings": {}}"#.to_string()
            } else {
                r#"{"verdict": "incorrect", "misconceptions": ["The program does not yet produce the deliveries the task asks for."], "suggestions": ["Trace the truck by hand and compare each step with the task."], "constraint_findings": {}}"#.to_string()
            }
        }
        Stage::Translate => guard::extract_block(input)
            .and_then(|code| interp::trace_of(&code).ok())
            .and_then(|trace| dsl::serialize(&trace).ok())
            .unwrap_or_default(),
    })
}
