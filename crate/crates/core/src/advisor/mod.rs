//! Feedback backends that propose new fundamental-frequency targets from
//! the features of the current separation.

mod heuristic;
mod http;
mod parse;
mod prompt;
mod transcript;

pub use heuristic::{HeuristicAdvisor, damped_step, heuristic_advise};
pub use http::{ChatMessage, ChatRequest, HttpAdvisor, HttpConfig};
pub use parse::{AdvisorSuggestion, parse_response, render_suggestion};
pub use prompt::{AdvisorPrompt, FORMAT_INSTRUCTION, INSTRUCTION, SourceFeatures, build_prompt, render_feature_block};
pub use transcript::{Transcript, TranscriptEntry};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::spectral::Band;

#[derive(Debug, thiserror::Error)]
pub enum AdvisorError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("empty source list")]
    NoSources,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdvisorMode {
    #[default]
    Heuristic,
    Http,
    Off,
}

impl FromStr for AdvisorMode {
    type Err = AdvisorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heuristic" => Ok(AdvisorMode::Heuristic),
            "http" => Ok(AdvisorMode::Http),
            "off" => Ok(AdvisorMode::Off),
            other => Err(AdvisorError::Config(format!(
                "advisor mode must be heuristic, http or off, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for AdvisorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdvisorMode::Heuristic => "heuristic",
            AdvisorMode::Http => "http",
            AdvisorMode::Off => "off",
        })
    }
}

/// Everything a backend sees in one feedback round.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvisorRequest {
    /// Heart first, then lung.
    pub sources: Vec<SourceFeatures>,
    pub bands: Vec<Band>,
    pub nyquist: f64,
}

/// A suggestion together with the raw exchange that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvisorReply {
    pub suggestion: AdvisorSuggestion,
    pub prompt: String,
    pub response: String,
    /// Wire-level request body, for backends that have one.
    pub raw_request: Option<String>,
}

pub trait Advisor {
    fn id(&self) -> &str;

    fn advise(&mut self, request: &AdvisorRequest) -> Result<AdvisorReply, AdvisorError>;
}
