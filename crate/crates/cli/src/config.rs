//! Service configuration: one TOML file plus environment overrides.
//!
//! ```toml
//! port = 8080
//! backend = "replay:campusbike"
//! projects_dir = "projects"
//! fixtures_dir = "fixtures"
//! prompts_dir = "prompts"
//!
//! [live]
//! base_url = "https://api.example.com/v1"
//! model = "some-model"
//! timeout_secs = 120
//! ```
//!
//! The API key is read from `ARCHBOT_API_KEY` only; a key in the file is refused.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use archbot_core::gateway::{LiveConfig, ENV_API_KEY, ENV_BASE_URL, ENV_MODEL};

use crate::error::ApiError;

pub const ENV_CONFIG: &str = "ARCHBOT_CONFIG";
pub const ENV_PORT: &str = "ARCHBOT_PORT";
pub const ENV_BACKEND: &str = "ARCHBOT_BACKEND";
pub const ENV_PROJECTS_DIR: &str = "ARCHBOT_PROJECTS_DIR";
pub const ENV_FIXTURES_DIR: &str = "ARCHBOT_FIXTURES_DIR";
pub const ENV_PROMPTS_DIR: &str = "ARCHBOT_PROMPTS_DIR";

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_BACKEND: &str = "replay:campusbike";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiveSection {
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub port: u16,
    /// Used when a command gets no `--backend`.
    pub backend: String,
    pub projects_dir: PathBuf,
    /// Searched for `<name>.jsonl` before the fixtures built into the binary.
    pub fixtures_dir: Option<PathBuf>,
    /// Prompt templates replacing the built-in registry.
    pub prompts_dir: Option<PathBuf>,
    pub live: LiveSection,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            port: DEFAULT_PORT,
            backend: DEFAULT_BACKEND.to_string(),
            projects_dir: PathBuf::from("projects"),
            fixtures_dir: None,
            prompts_dir: None,
            live: LiveSection::default(),
            api_key: None,
        }
    }
}

fn config_error(message: impl Into<String>) -> ApiError {
    ApiError::new("config_error", message)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ApiError> {
        if let Ok(table) = text.parse::<toml::Table>() {
            let has_key = |t: &toml::Table| t.keys().any(|k| k.contains("api_key"));
            if has_key(&table) || table.get("live").and_then(|l| l.as_table()).is_some_and(has_key) {
                return Err(config_error(format!("API keys are not read from config files; set {ENV_API_KEY}")));
            }
        }
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    /// Reads `path`, or the file named by `ARCHBOT_CONFIG`, or nothing, then applies the
    /// environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ApiError> {
        Self::load_with(path, |k| std::env::var(k).ok())
    }

    pub fn load_with(path: Option<&Path>, env: impl Fn(&str) -> Option<String>) -> Result<Self, ApiError> {
        let file = path.map(Path::to_path_buf).or_else(|| env(ENV_CONFIG).map(PathBuf::from));
        let mut config = match file {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| config_error(format!("{}: {e}", p.display())))?;
                Self::parse(&text)?
            }
            None => Config::default(),
        };
        config.apply_env(env)?;
        Ok(config)
    }

    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<(), ApiError> {
        if let Some(p) = env(ENV_PORT) {
            self.port = p.parse().map_err(|_| config_error(format!("{ENV_PORT}={p:?} is not a port number")))?;
        }
        if let Some(b) = env(ENV_BACKEND) {
            self.backend = b;
        }
        if let Some(d) = env(ENV_PROJECTS_DIR) {
            self.projects_dir = d.into();
        }
        if let Some(d) = env(ENV_FIXTURES_DIR) {
            self.fixtures_dir = Some(d.into());
        }
        if let Some(d) = env(ENV_PROMPTS_DIR) {
            self.prompts_dir = Some(d.into());
        }
        if let Some(u) = env(ENV_BASE_URL) {
            self.live.base_url = Some(u);
        }
        if let Some(m) = env(ENV_MODEL) {
            self.live.model = Some(m);
        }
        self.api_key = env(ENV_API_KEY).filter(|k| !k.is_empty());
        Ok(())
    }

    /// Settings for `--backend live`.
    pub fn live_config(&self) -> Result<LiveConfig, ApiError> {
        let base_url = self.live.base_url.clone().ok_or_else(|| {
            config_error(format!("the live backend needs a base URL ([live] base_url or {ENV_BASE_URL})"))
        })?;
        let model = self
            .live
            .model
            .clone()
            .ok_or_else(|| config_error(format!("the live backend needs a model ([live] model or {ENV_MODEL})")))?;
        Ok(LiveConfig { base_url, api_key: self.api_key.clone(), model, timeout_secs: self.live.timeout_secs.unwrap_or(120) })
    }
}
