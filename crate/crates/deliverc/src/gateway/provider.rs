//! The chat-completion contract and its HTTPS implementation.

use std::time::Duration;

use serde_json::{json, Value};

use super::template::Stage;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

/// One provider call. Few-shot pairs become alternating user and assistant
/// turns ahead of `input`; `followups` carry repair turns after a bad reply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChatRequest {
    pub stage: Stage,
    pub model: String,
    pub system: String,
    pub examples: Vec<(String, String)>,
    pub input: String,
    pub followups: Vec<Message>,
}

impl ChatRequest {
    pub fn messages(&self) -> Vec<Message> {
        let mut out = vec![Message { role: Role::System, content: self.system.clone() }];
        for (input, output) in &self.examples {
            out.push(Message::user(input.clone()));
            out.push(Message::assistant(output.clone()));
        }
        out.push(Message::user(self.input.clone()));
        out.extend(self.followups.iter().cloned());
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider timed out")]
    Timeout,
    #[error("provider returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("provider reply has no message content")]
    EmptyReply,
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_retries: u32,
}

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint_url: DEFAULT_ENDPOINT.into(),
            model_name: DEFAULT_MODEL.into(),
            api_key: None,
            timeout: Duration::from_secs(30),
            max_retries: 1,
        }
    }
}

/// Calls `POST {endpoint}/chat/completions` in the OpenAI wire format.
pub struct OpenAiProvider {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl OpenAiProvider {
    pub fn new(config: &ProviderConfig) -> Self {
        OpenAiProvider {
            agent: ureq::AgentBuilder::new().timeout(config.timeout).build(),
            endpoint: config.endpoint_url.trim_end_matches('/').to_string(),
            api_key: config.api_key.clone(),
        }
    }
}

impl ChatProvider for OpenAiProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let messages: Vec<Value> = request
            .messages()
            .iter()
            .map(|m| json!({"role": m.role.as_str(), "content": m.content}))
            .collect();
        let body = json!({"model": request.model, "messages": messages, "temperature": 0.2});
        let mut call = self.agent.post(&format!("{}/chat/completions", self.endpoint));
        if let Some(key) = &self.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        let reply: Value = match call.send_json(body) {
            Ok(resp) => resp.into_json().map_err(|e| ProviderError::Unavailable(e.to_string()))?,
            Err(ureq::Error::Status(status, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                return Err(ProviderError::Status { status, body });
            }
            Err(ureq::Error::Transport(t)) => {
                let text = t.to_string();
                return Err(if text.contains("timed out") { ProviderError::Timeout } else { ProviderError::Unavailable(text) });
            }
        };
        reply["choices"][0]["message"]["content"].as_str().map(str::to_string).ok_or(ProviderError::EmptyReply)
    }
}
