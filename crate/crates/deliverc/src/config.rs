//! Runtime configuration read from `DELIVERC_*` environment variables, and
//! assembly of the service from it.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use deliverc_core::task::LEVEL_COUNT;

use crate::bank::{BankError, TaskBank};
use crate::gateway::mock::MockProvider;
use crate::gateway::provider::{ChatProvider, OpenAiProvider, ProviderConfig, DEFAULT_ENDPOINT, DEFAULT_MODEL};
use crate::gateway::template::{TemplateError, Templates};
use crate::gateway::{Gateway, GatewayConfig};
use crate::session::store::{FileStore, StoreError};
use crate::session::{ServiceConfig, SessionError, SessionService};

pub const DEFAULT_STORAGE: &str = "deliverc-data";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub storage_dir: PathBuf,
    pub provider: ProviderConfig,
    /// Use the offline mock provider instead of a model endpoint.
    pub mock: bool,
    pub llm_translation: bool,
    pub max_level: u8,
    pub tasks_dir: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub admin_token: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            storage_dir: PathBuf::from(DEFAULT_STORAGE),
            provider: ProviderConfig::default(),
            mock: false,
            llm_translation: false,
            max_level: LEVEL_COUNT,
            tasks_dir: None,
            prompts_dir: None,
            admin_token: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{name}: {reason}")]
    Invalid { name: &'static str, reason: String },
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error(transparent)]
    Templates(#[from] TemplateError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

fn flag(name: &'static str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" | "" => Ok(false),
        other => Err(ConfigError::Invalid { name, reason: format!("expected a boolean, got {other:?}") }),
    }
}

fn number<T: std::str::FromStr>(name: &'static str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Invalid { name, reason: format!("expected a number, got {value:?}") })
}

impl Config {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Builds a config from a variable lookup. Without an API key the mock
    /// provider is used.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut c = Config::default();
        if let Some(v) = get("DELIVERC_STORAGE") {
            c.storage_dir = PathBuf::from(v);
        }
        c.provider.api_key = get("DELIVERC_API_KEY").or_else(|| get("OPENAI_API_KEY")).filter(|k| !k.trim().is_empty());
        c.provider.endpoint_url = get("DELIVERC_ENDPOINT").unwrap_or_else(|| DEFAULT_ENDPOINT.into());
        c.provider.model_name = get("DELIVERC_MODEL").unwrap_or_else(|| DEFAULT_MODEL.into());
        if let Some(v) = get("DELIVERC_TIMEOUT_SECS") {
            let secs: u64 = number("DELIVERC_TIMEOUT_SECS", &v)?;
            c.provider.timeout = Duration::from_secs(secs.max(1));
        }
        if let Some(v) = get("DELIVERC_MAX_RETRIES") {
            c.provider.max_retries = number("DELIVERC_MAX_RETRIES", &v)?;
        }
        if let Some(v) = get("DELIVERC_LLM_TRANSLATION") {
            c.llm_translation = flag("DELIVERC_LLM_TRANSLATION", &v)?;
        }
        c.mock = match get("DELIVERC_MOCK") {
            Some(v) => flag("DELIVERC_MOCK", &v)?,
            None => c.provider.api_key.is_none(),
        };
        if let Some(v) = get("DELIVERC_MAX_LEVEL") {
            let level: u8 = number("DELIVERC_MAX_LEVEL", &v)?;
            if !(1..=LEVEL_COUNT).contains(&level) {
                return Err(ConfigError::Invalid {
                    name: "DELIVERC_MAX_LEVEL",
                    reason: format!("must be between 1 and {LEVEL_COUNT}"),
                });
            }
            c.max_level = level;
        }
        c.tasks_dir = get("DELIVERC_TASKS_DIR").map(PathBuf::from);
        c.prompts_dir = get("DELIVERC_PROMPTS_DIR").map(PathBuf::from);
        c.admin_token = get("DELIVERC_ADMIN_TOKEN").filter(|t| !t.is_empty());
        Ok(c)
    }

    pub fn bank(&self) -> Result<TaskBank, ConfigError> {
        Ok(match &self.tasks_dir {
            Some(dir) => TaskBank::from_dir(dir)?,
            None => TaskBank::embedded()?,
        })
    }

    pub fn templates(&self) -> Result<Templates, ConfigError> {
        Ok(match &self.prompts_dir {
            Some(dir) => Templates::from_dir(dir)?,
            None => Templates::embedded(),
        })
    }

    pub fn provider(&self) -> Arc<dyn ChatProvider> {
        if self.mock {
            Arc::new(MockProvider::echo())
        } else {
            Arc::new(OpenAiProvider::new(&self.provider))
        }
    }

    pub fn gateway(&self) -> Result<Gateway, ConfigError> {
        let config = GatewayConfig { model: self.provider.model_name.clone(), max_retries: self.provider.max_retries };
        Ok(Gateway::new(self.provider(), self.templates()?, config))
    }

    pub fn service(&self) -> Result<SessionService, ConfigError> {
        let store = FileStore::open(&self.storage_dir)?;
        let config = ServiceConfig { max_level: self.max_level, llm_translation: self.llm_translation };
        Ok(SessionService::open(self.gateway()?, self.bank()?, Box::new(store), config)?)
    }
}
