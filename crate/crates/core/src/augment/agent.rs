use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

/// Anything that turns a prompt into a completion.
pub trait TextGenerator: Sync {
    fn generate(&self, prompt: &str, temperature: f64) -> std::result::Result<String, String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key_env_var: String,
    pub temperature: f64,
    pub max_retries: usize,
    pub concurrency_limit: usize,
    pub skip_word_threshold: usize,
    pub request_timeout_secs: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model_name: "mistral-large-2411".into(),
            api_key_env_var: "LLM_API_KEY".into(),
            temperature: 0.0,
            max_retries: 2,
            concurrency_limit: 4,
            skip_word_threshold: 5000,
            request_timeout_secs: 120,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(Error::invalid(format!(
                "temperature must lie in [0, 1], got {}",
                self.temperature
            )));
        }
        if self.concurrency_limit == 0 {
            return Err(Error::invalid("concurrency limit must be at least 1"));
        }
        if self.skip_word_threshold == 0 {
            return Err(Error::invalid("skip word threshold must be positive"));
        }
        Ok(())
    }
}

/// OpenAI-compatible chat-completions client.
pub struct HttpChatAgent {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpChatAgent {
    /// Reads the API key from `config.api_key_env_var`; an unset variable
    /// means no `Authorization` header.
    pub fn from_config(config: &AgentConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.request_timeout_secs)))
            .build()
            .into();
        Self {
            endpoint: config.endpoint_url.clone(),
            model: config.model_name.clone(),
            api_key: std::env::var(&config.api_key_env_var).ok().filter(|k| !k.is_empty()),
            agent,
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

impl TextGenerator for HttpChatAgent {
    fn generate(&self, prompt: &str, temperature: f64) -> std::result::Result<String, String> {
        let body = json!({
            "model": self.model,
            "temperature": temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let response: ChatResponse = request
            .send_json(&body)
            .map_err(|e| e.to_string())?
            .body_mut()
            .read_json()
            .map_err(|e| e.to_string())?;
        response
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| "chat response without content".to_string())
    }
}
