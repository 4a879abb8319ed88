use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Advisor, AdvisorError, AdvisorReply, AdvisorRequest, build_prompt, parse_response};

pub const DEFAULT_TIMEOUT_S: f64 = 30.0;
pub const TEMPERATURE: f64 = 0.6;
pub const TOP_P: f64 = 0.9;
pub const MAX_TOKENS: u32 = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub model: String,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            api_key: None,
            timeout: Duration::from_secs_f64(DEFAULT_TIMEOUT_S),
            model: "llama-2-7b-chat".into(),
        }
    }

    /// Reads `ADVISOR_ENDPOINT`, `ADVISOR_API_KEY`, `ADVISOR_TIMEOUT_S` and
    /// `ADVISOR_MODEL` through `lookup`.
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, AdvisorError> {
        let endpoint = lookup("ADVISOR_ENDPOINT")
            .filter(|e| !e.trim().is_empty())
            .ok_or_else(|| AdvisorError::Config("ADVISOR_ENDPOINT is not set".into()))?;
        let mut cfg = HttpConfig::new(endpoint);
        cfg.api_key = lookup("ADVISOR_API_KEY").filter(|k| !k.is_empty());
        if let Some(t) = lookup("ADVISOR_TIMEOUT_S") {
            let secs: f64 = t
                .trim()
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite() && *s > 0.0)
                .ok_or_else(|| AdvisorError::Config(format!("ADVISOR_TIMEOUT_S must be a positive number, got {t:?}")))?;
            cfg.timeout = Duration::from_secs_f64(secs);
        }
        if let Some(m) = lookup("ADVISOR_MODEL").filter(|m| !m.is_empty()) {
            cfg.model = m;
        }
        Ok(cfg)
    }

    pub fn from_env() -> Result<Self, AdvisorError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn single_user_message(model: &str, content: &str) -> Self {
        ChatRequest {
            model: model.into(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: content.into(),
            }],
            temperature: TEMPERATURE,
            top_p: TOP_P,
            max_tokens: MAX_TOKENS,
        }
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ChatMessage,
}

/// Chat-completion backend: posts the prompt as one user message and
/// parses the first choice's content.
pub struct HttpAdvisor {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpAdvisor {
    pub fn new(config: HttpConfig) -> Result<Self, AdvisorError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| AdvisorError::Transport(e.to_string()))?;
        Ok(HttpAdvisor { config, client })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }
}

impl Advisor for HttpAdvisor {
    fn id(&self) -> &str {
        "http"
    }

    fn advise(&mut self, request: &AdvisorRequest) -> Result<AdvisorReply, AdvisorError> {
        let prompt = build_prompt(&request.sources)?;
        let body = ChatRequest::single_user_message(&self.config.model, &prompt.text);
        let raw_request = serde_json::to_string(&body).map_err(|e| AdvisorError::Protocol(e.to_string()))?;
        let mut call = self
            .client
            .post(&self.config.endpoint)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(raw_request.clone());
        if let Some(key) = &self.config.api_key {
            call = call.bearer_auth(key);
        }
        let resp = call.send().map_err(|e| AdvisorError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| AdvisorError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(AdvisorError::Status {
                status: status.as_u16(),
                body: text,
            });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| AdvisorError::Protocol(e.to_string()))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| AdvisorError::Protocol("response has no choices".into()))?;
        let mut suggestion = parse_response(&content, Some(request.nyquist));
        suggestion.backend_id = self.id().into();
        Ok(AdvisorReply {
            suggestion,
            prompt: prompt.text,
            response: content,
            raw_request: Some(raw_request),
        })
    }
}
